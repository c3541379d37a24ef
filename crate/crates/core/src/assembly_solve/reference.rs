use super::sparse::{pcg, CsrMatrix, SolveReport, SolverOptions};
use crate::dense::Matrix;
use crate::error::{AvemError, Result};
use crate::geometry_mesh::{ElementId, Mesh};
use crate::polynomial::monomial::{gradients, values};
use crate::polynomial::projection::gram;
use crate::polynomial::{dim, ElementQuadrature, Frame, Poly, TriangleRule};
use crate::problem_data::PiecewiseData;
use crate::scalar::Scalar;
use rayon::prelude::*;

#[derive(Clone, Debug)]
pub struct ReferenceElement<T> {
    pub element: ElementId,
    pub vertices: [[T; 2]; 3],
    pub frame: Frame<T>,
    pub poly: Poly<T>,
}

/// Conforming Lagrange solution of degree k on a conforming mesh.
#[derive(Clone, Debug)]
pub struct ReferenceSolution<T> {
    pub mesh: Mesh,
    pub elements: Vec<ReferenceElement<T>>,
    pub report: SolveReport,
    pub n_dofs: usize,
}

struct LocalFem<T> {
    map: Vec<usize>,
    coeffs: Matrix<T>,
    stiffness: Matrix<T>,
    load: Vec<T>,
    vertices: [[T; 2]; 3],
    frame: Frame<T>,
}

fn local_fem<T: Scalar>(
    mesh: &Mesh,
    e: ElementId,
    data: &PiecewiseData<T>,
    rule: &TriangleRule,
    moment_base: usize,
) -> Result<LocalFem<T>> {
    let k = mesh.k();
    let nk = dim(k);
    let ni = if k >= 3 { dim(k - 3) } else { 0 };
    let d = data.on_element(mesh, e);
    let vertices = mesh.element_coords(e).map(|p| p.map(T::lit));
    let q = ElementQuadrature::with_frame(rule, &vertices, d.frame);
    let lattice = mesh.macro_lattice(e);
    let mut vand = Matrix::zeros(nk, nk);
    for (r, &x) in lattice.iter().enumerate() {
        let xi = d.frame.local(mesh.node_coords(x).map(T::lit));
        vand.row_mut(r).copy_from_slice(&values(k, xi));
    }
    if ni > 0 {
        let h = gram(&q, k);
        let area = q.area();
        for g in 0..ni {
            for a in 0..nk {
                vand[(3 * k + g, a)] = h[(g, a)] / area;
            }
        }
    }
    let coeffs = vand.inverse().map_err(|_| AvemError::IllConditioned {
        element: e.index(),
        condition: f64::INFINITY,
    })?;
    let mut qf = Matrix::zeros(nk, nk);
    let mut bf = vec![T::zero(); nk];
    let h = d.frame.h;
    for (xi, &w) in q.local.iter().zip(&q.weights) {
        let m = values(k, *xi);
        let g = gradients(k, *xi);
        let a = d.tensor_at(*xi);
        let c = d.c.eval(*xi);
        let f = d.f.eval(*xi);
        for i in 0..nk {
            bf[i] += w * f * m[i];
            let ag = [
                (a[0][0] * g[i][0] + a[0][1] * g[i][1]) / h,
                (a[1][0] * g[i][0] + a[1][1] * g[i][1]) / h,
            ];
            for j in 0..nk {
                qf[(i, j)] += w * ((ag[0] * g[j][0] + ag[1] * g[j][1]) / h + c * m[i] * m[j]);
            }
        }
    }
    let mut stiffness = coeffs.tr_matmul(&qf.matmul(&coeffs));
    stiffness.symmetrize();
    let load = coeffs.tr_mul_vec(&bf);
    let mut map: Vec<usize> = lattice.iter().map(|x| x.index()).collect();
    map.extend(moment_base..moment_base + ni);
    Ok(LocalFem {
        map,
        coeffs,
        stiffness,
        load,
        vertices,
        frame: d.frame,
    })
}

/// Solves the conforming finite element problem with homogeneous boundary values.
pub fn solve_conforming_reference<T: Scalar>(
    mesh: Mesh,
    data: &PiecewiseData<T>,
    opts: SolverOptions,
) -> Result<ReferenceSolution<T>> {
    if !mesh.is_conforming() {
        return Err(AvemError::InvalidMesh("reference mesh has hanging nodes".into()));
    }
    let k = mesh.k();
    let ni = if k >= 3 { dim(k - 3) } else { 0 };
    let n_nodes = mesh.n_nodes();
    let active: Vec<ElementId> = mesh.active_elements().collect();
    let rule = TriangleRule::with_exactness(3 * k);
    let locals: Vec<LocalFem<T>> = active
        .par_iter()
        .enumerate()
        .map(|(i, &e)| local_fem(&mesh, e, data, &rule, n_nodes + i * ni))
        .collect::<Result<_>>()?;
    let n_total = n_nodes + active.len() * ni;
    let mut used = vec![false; n_total];
    let mut trip = Vec::new();
    let mut rhs_full = vec![T::zero(); n_total];
    for l in &locals {
        for (i, &gi) in l.map.iter().enumerate() {
            used[gi] = true;
            rhs_full[gi] += l.load[i];
            for (j, &gj) in l.map.iter().enumerate() {
                trip.push((gi, gj, l.stiffness[(i, j)]));
            }
        }
    }
    let mut free = vec![None; n_total];
    let mut n_free = 0;
    for (g, f) in free.iter_mut().enumerate() {
        let on_boundary = g < n_nodes && mesh.node_on_boundary(crate::geometry_mesh::NodeId(g));
        if used[g] && !on_boundary {
            *f = Some(n_free);
            n_free += 1;
        }
    }
    let a = CsrMatrix::from_triplets(n_total, trip).restrict(&free, n_free);
    let mut rhs = vec![T::zero(); n_free];
    for (g, f) in free.iter().enumerate() {
        if let Some(r) = f {
            rhs[*r] = rhs_full[g];
        }
    }
    let (x, report) = pcg(&a, &rhs, opts)?;
    let value = |g: usize| free[g].map_or(T::zero(), |r| x[r]);
    let elements = active
        .iter()
        .zip(&locals)
        .map(|(&e, l)| {
            let dofs: Vec<T> = l.map.iter().map(|&g| value(g)).collect();
            ReferenceElement {
                element: e,
                vertices: l.vertices,
                frame: l.frame,
                poly: Poly::from_coeffs(l.coeffs.mul_vec(&dofs)).expect("full block"),
            }
        })
        .collect();
    Ok(ReferenceSolution {
        mesh,
        elements,
        report,
        n_dofs: n_free,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry_mesh::unit_square;
    use crate::problem_data::{FieldSpec, ProblemSpec};

    #[test]
    fn reproduces_polynomial_bubble_solution() {
        // u = x(1−x)y(1−y) has −Δu = 2x(1−x) + 2y(1−y), degree 2 data with k = 4
        let mut mesh = Mesh::new(unit_square(2), 4).unwrap();
        mesh.refine_uniform(1).unwrap();
        let spec = ProblemSpec {
            f: FieldSpec::Poly(vec![0.0, 2.0, 2.0, -2.0, 0.0, -2.0]),
            ..ProblemSpec::poisson(0.0)
        };
        let data = PiecewiseData::<f64>::ingest(&spec, mesh.initial(), 4).unwrap();
        let opts = SolverOptions {
            rel_tol: 1e-13,
            ..SolverOptions::default()
        };
        let sol = solve_conforming_reference(mesh, &data, opts).unwrap();
        for el in &sol.elements {
            for v in el.vertices {
                let exact = v[0] * (1.0 - v[0]) * v[1] * (1.0 - v[1]);
                assert!((el.poly.eval_at(&el.frame, v) - exact).abs() < 1e-10);
            }
            let c = el.frame.center;
            let exact = c[0] * (1.0 - c[0]) * c[1] * (1.0 - c[1]);
            assert!((el.poly.eval_at(&el.frame, c) - exact).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_meshes_with_hanging_nodes() {
        let mut mesh = Mesh::new(unit_square(1), 2).unwrap();
        mesh.bisect_all(&[ElementId(0)]).unwrap();
        mesh.bisect_all(&[ElementId(2)]).unwrap();
        let data = PiecewiseData::<f64>::ingest(&ProblemSpec::poisson(1.0), mesh.initial(), 2).unwrap();
        if !mesh.is_conforming() {
            assert!(solve_conforming_reference(mesh, &data, SolverOptions::default()).is_err());
        }
    }
}
