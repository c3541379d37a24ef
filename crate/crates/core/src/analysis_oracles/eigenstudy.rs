use crate::dense::{generalized_eigenvalues, Matrix};
use crate::error::{AvemError, Result};
use crate::geometry_mesh::{InitialMesh, Mesh, MAX_DEGREE};
use crate::polynomial::monomial::values;
use crate::polynomial::{dim, ElementQuadrature, Frame, TriangleRule};

/// Reference triangle with the newest vertex at the right angle.
pub fn reference_triangle() -> InitialMesh {
    InitialMesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]]).with_newest(vec![Some(0)])
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenStudy {
    pub k: usize,
    pub m: usize,
    pub mu_sq: f64,
}

/// The two quadratic forms on the quotient `P_{2k−2} / P_{k−1}` spanned by the
/// monomials of degree `k..=2k−2`: the fine projection defect summed over the
/// `2^m` children and the coarse projection defect.
pub fn defect_forms(k: usize, m: usize) -> Result<(Matrix<f64>, Matrix<f64>)> {
    if !(2..=MAX_DEGREE).contains(&k) {
        return Err(AvemError::UnsupportedDegree(k));
    }
    let init = reference_triangle();
    let coarse = Mesh::new(init.clone(), 1)?;
    let mut fine = coarse.clone();
    fine.refine_uniform(m)?;
    let root = coarse.element_coords(crate::geometry_mesh::ElementId(0));
    let frame = Frame::of_triangle(&root);
    let rule = TriangleRule::with_exactness(4 * k);
    let right = defect_on(&root, &frame, k, &rule)?;
    let mut left = Matrix::zeros(right.rows(), right.cols());
    for e in fine.active_elements() {
        left = left.add(&defect_on(&fine.element_coords(e), &frame, k, &rule)?);
    }
    Ok((left, right))
}

/// `∫ (I − Π_{k−1}) m_a · (I − Π_{k−1}) m_b` over one triangle, where `m_a` are the
/// quotient monomials in the coarse frame and `Π` projects in the triangle's own frame.
fn defect_on(verts: &[[f64; 2]; 3], coarse: &Frame<f64>, k: usize, rule: &TriangleRule) -> Result<Matrix<f64>> {
    let q = ElementQuadrature::new(rule, verts);
    let (lo, hi) = (dim(k - 1), dim(2 * k - 2));
    let nq = hi - lo;
    let np = dim(k - 1);
    let mut mass = Matrix::zeros(nq, nq);
    let mut mixed = Matrix::zeros(np, nq);
    let mut gram = Matrix::zeros(np, np);
    for ((x, xi), &w) in q.points.iter().zip(&q.local).zip(&q.weights) {
        let mq = values(2 * k - 2, coarse.local(*x));
        let mp = values(k - 1, *xi);
        for a in 0..nq {
            for b in 0..nq {
                mass[(a, b)] += w * mq[lo + a] * mq[lo + b];
            }
            for j in 0..np {
                mixed[(j, a)] += w * mp[j] * mq[lo + a];
            }
        }
        for i in 0..np {
            for j in 0..np {
                gram[(i, j)] += w * mp[i] * mp[j];
            }
        }
    }
    let proj = gram.cholesky()?.solve_matrix(&mixed);
    let mut d = mass.sub(&mixed.tr_matmul(&proj));
    d.symmetrize();
    Ok(d)
}

/// Largest `μ²` with `Σ_i ‖(I−Π_{E_i})q‖² ≤ μ² ‖(I−Π_Ê)q‖²` after `m` uniform bisection levels.
pub fn mu_squared(k: usize, m: usize) -> Result<f64> {
    let (left, right) = defect_forms(k, m)?;
    let vals = generalized_eigenvalues(&left, &right).map_err(|_| AvemError::IllConditioned {
        element: 0,
        condition: f64::INFINITY,
    })?;
    Ok(vals.last().copied().unwrap_or(0.0))
}

pub fn eigen_study(k: usize, m: usize) -> Result<EigenStudy> {
    Ok(EigenStudy { k, m, mu_sq: mu_squared(k, m)? })
}

/// Smallest number of uniform levels with `μ² < 1`, searched up to `max_levels`.
pub fn minimal_levels(k: usize, max_levels: usize) -> Result<usize> {
    for m in 1..=max_levels {
        if mu_squared(k, m)? < 1.0 - 1e-8 {
            return Ok(m);
        }
    }
    Err(AvemError::InvalidArgument(format!(
        "no level up to {max_levels} reduces the inconsistency for k = {k}"
    )))
}

/// `table1.csv` content: one row per degree, columns `m = 1..=levels`.
pub fn table1_csv(degrees: &[usize], levels: usize) -> Result<String> {
    let mut s = String::from("k");
    for m in 1..=levels {
        s.push_str(&format!(",m={m}"));
    }
    s.push('\n');
    for &k in degrees {
        s.push_str(&k.to_string());
        for m in 1..=levels {
            s.push_str(&format!(",{:.4}", mu_squared(k, m)?));
        }
        s.push('\n');
    }
    Ok(s)
}
