//! Residual estimator and virtual inconsistency terms.

use crate::assembly_solve::Discretization;
use crate::error::{AvemError, Result};
use crate::geometry_mesh::{ElementId, Mesh};
use crate::polynomial::monomial::values;
use crate::polynomial::projection::factor_checked;
use crate::polynomial::{dim, ElementQuadrature, LineRule, Poly, TriangleRule};
use crate::scalar::Scalar;
use crate::vem_local::LocalOps;
use rayon::prelude::*;
use std::fmt::Write as _;

#[derive(Clone, Debug, PartialEq)]
pub struct ElementIndicators<T> {
    pub element: ElementId,
    pub eta_sq: T,
    pub psi_a_sq: T,
    pub psi_c_sq: T,
    pub stab: T,
}

impl<T: Scalar> ElementIndicators<T> {
    pub fn psi_sq(&self) -> T {
        self.psi_a_sq + self.psi_c_sq
    }

    /// Marking weight `η² + Ψ²`.
    pub fn total(&self) -> T {
        self.eta_sq + self.psi_sq()
    }
}

#[derive(Clone, Debug)]
pub struct IndicatorSet<T> {
    pub elements: Vec<ElementIndicators<T>>,
    pub eta_sq: T,
    pub psi_a_sq: T,
    pub psi_c_sq: T,
    pub stab: T,
}

impl<T: Scalar> IndicatorSet<T> {
    pub fn from_elements(elements: Vec<ElementIndicators<T>>) -> Self {
        let sum = |f: fn(&ElementIndicators<T>) -> T| elements.iter().map(f).sum::<T>();
        Self {
            eta_sq: sum(|e| e.eta_sq),
            psi_a_sq: sum(|e| e.psi_a_sq),
            psi_c_sq: sum(|e| e.psi_c_sq),
            stab: sum(|e| e.stab),
            elements,
        }
    }

    pub fn psi_sq(&self) -> T {
        self.psi_a_sq + self.psi_c_sq
    }

    pub fn total(&self) -> T {
        self.eta_sq + self.psi_sq()
    }

    pub fn get(&self, e: ElementId) -> Option<&ElementIndicators<T>> {
        self.elements.iter().find(|i| i.element == e)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("element_id,eta_sq,psi_A_sq,psi_c_sq,stab\n");
        for i in &self.elements {
            let _ = writeln!(
                s,
                "{},{:e},{:e},{:e},{:e}",
                i.element.0,
                i.eta_sq.as_f64(),
                i.psi_a_sq.as_f64(),
                i.psi_c_sq.as_f64(),
                i.stab.as_f64()
            );
        }
        s
    }
}

/// `A Π⁰_{k−1}∇v` in the element frame.
pub fn projected_flux<T: Scalar>(ops: &LocalOps<T>, v: &[T]) -> Result<[Poly<T>; 2]> {
    let [gx, gy] = ops.apply_p0_grad(v)?;
    let a = &ops.data.a;
    Ok([
        a[0].mul(&gx).add(&a[1].mul(&gy)),
        a[1].mul(&gx).add(&a[2].mul(&gy)),
    ])
}

/// `f + div(A Π⁰_{k−1}∇v) − c Π⁰_k v`.
pub fn internal_residual<T: Scalar>(ops: &LocalOps<T>, v: &[T]) -> Result<Poly<T>> {
    let [sx, sy] = projected_flux(ops, v)?;
    let div = sx.grad_component(0, &ops.frame).add(&sy.grad_component(1, &ops.frame));
    let cu = ops.data.c.mul(&ops.apply_p0(v)?);
    Ok(ops.data.f.add(&div).sub(&cu))
}

fn element_quadrature<T: Scalar>(ops: &LocalOps<T>) -> ElementQuadrature<T> {
    let rule = TriangleRule::with_exactness(4 * ops.k);
    ElementQuadrature::with_frame(&rule, &ops.vertices, ops.frame)
}

fn l2_sq<T: Scalar>(q: &ElementQuadrature<T>, p: &Poly<T>) -> T {
    q.integrate(|_, xi| {
        let v = p.eval(xi);
        v * v
    })
}

/// `‖(I − Π⁰_p) g‖²` for a polynomial `g`.
fn projection_defect_sq<T: Scalar>(
    ops: &LocalOps<T>,
    q: &ElementQuadrature<T>,
    g: &Poly<T>,
    p: usize,
) -> Result<T> {
    let n = dim(p);
    let samples: Vec<T> = q.local.iter().map(|&xi| g.eval(xi)).collect();
    let mut rhs = vec![T::zero(); n];
    for ((xi, &w), &s) in q.local.iter().zip(&q.weights).zip(&samples) {
        for (r, m) in rhs.iter_mut().zip(values(p, *xi)) {
            *r += w * s * m;
        }
    }
    let chol = factor_checked(&ops.gram.submatrix(0..n, 0..n), ops.element.index())?;
    let pc = Poly::from_coeffs(chol.solve_vec(&rhs)).expect("full block");
    Ok(q
        .local
        .iter()
        .zip(&q.weights)
        .zip(&samples)
        .map(|((&xi, &w), &s)| {
            let d = s - pc.eval(xi);
            w * d * d
        })
        .sum())
}

/// `(Ψ²_A, Ψ²_c)` on one element.
pub fn local_psi_sq<T: Scalar>(ops: &LocalOps<T>, v: &[T]) -> Result<(T, T)> {
    let q = element_quadrature(ops);
    let k = ops.k;
    let [sx, sy] = projected_flux(ops, v)?;
    let psi_a = projection_defect_sq(ops, &q, &sx, k - 1)? + projection_defect_sq(ops, &q, &sy, k - 1)?;
    let cu = ops.data.c.mul(&ops.apply_p0(v)?);
    let h2 = ops.frame.h * ops.frame.h;
    let psi_c = h2 * projection_defect_sq(ops, &q, &cu, k)?;
    Ok((psi_a, psi_c))
}

/// Active neighbor across a leaf edge of `e`, or `None` on the domain boundary.
pub fn neighbor_across(mesh: &Mesh, e: ElementId, leaf: crate::geometry_mesh::EdgeId) -> Result<Option<ElementId>> {
    if mesh.edge(leaf).boundary {
        return Ok(None);
    }
    let others: Vec<ElementId> = mesh
        .leaf_neighbors(leaf)
        .into_iter()
        .filter(|&o| o != e)
        .collect();
    match others.as_slice() {
        [f] => Ok(Some(*f)),
        _ => Err(AvemError::Corrupt(format!(
            "leaf edge {leaf} of element {e} has {} neighbors",
            others.len()
        ))),
    }
}

/// `‖j‖²` on each boundary leaf of the element, in boundary order.
pub fn edge_jumps_sq<T: Scalar>(
    mesh: &Mesh,
    disc: &Discretization<T>,
    fluxes: &[[Poly<T>; 2]],
    slot: usize,
) -> Result<Vec<T>> {
    let ops = &disc.ops[slot];
    let line = LineRule::gauss(2 * ops.k + 1);
    let mut out = Vec::with_capacity(ops.dofs.leaves.len());
    for (leaf, geo) in ops.dofs.leaves.iter().zip(&ops.leaf_geometry) {
        let Some(f) = neighbor_across(mesh, ops.element, leaf.edge)? else {
            out.push(T::zero());
            continue;
        };
        let fs = disc
            .slot_of(f)
            .ok_or_else(|| AvemError::Corrupt(format!("neighbor {f} is not active")))?;
        let other = &disc.ops[fs];
        let (se, sf) = (&fluxes[slot], &fluxes[fs]);
        let mut acc = T::zero();
        for (&t, &w) in line.points.iter().zip(&line.weights) {
            let x = geo.point(T::lit(t));
            let (xe, xf) = (ops.frame.local(x), other.frame.local(x));
            let j = (se[0].eval(xe) - sf[0].eval(xf)) * geo.normal[0]
                + (se[1].eval(xe) - sf[1].eval(xf)) * geo.normal[1];
            acc += T::lit(w) * j * j;
        }
        out.push(acc * geo.length);
    }
    Ok(out)
}

/// All indicators of a discrete function.
pub fn estimate<T: Scalar>(mesh: &Mesh, disc: &Discretization<T>, u: &[T]) -> Result<IndicatorSet<T>> {
    if u.len() != disc.dofs.n_total() {
        return Err(AvemError::DimensionMismatch {
            expected: disc.dofs.n_total(),
            got: u.len(),
        });
    }
    let n = disc.ops.len();
    let fluxes: Vec<[Poly<T>; 2]> = (0..n)
        .into_par_iter()
        .map(|s| projected_flux(&disc.ops[s], &disc.local_values(s, u)))
        .collect::<Result<_>>()?;
    let half = T::lit(0.5);
    let elements = (0..n)
        .into_par_iter()
        .map(|s| {
            let ops = &disc.ops[s];
            let v = disc.local_values(s, u);
            let q = element_quadrature(ops);
            let h = ops.frame.h;
            let r = internal_residual(ops, &v)?;
            let jumps: T = edge_jumps_sq(mesh, disc, &fluxes, s)?.into_iter().sum();
            let (psi_a_sq, psi_c_sq) = local_psi_sq(ops, &v)?;
            Ok(ElementIndicators {
                element: ops.element,
                eta_sq: h * h * l2_sq(&q, &r) + half * h * jumps,
                psi_a_sq,
                psi_c_sq,
                stab: ops.stabilization_energy(&v)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IndicatorSet::from_elements(elements))
}
