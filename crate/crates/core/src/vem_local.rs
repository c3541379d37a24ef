//! Element operators of the enhanced virtual element space: projections,
//! Lagrange interpolant, boundary stabilization and local forms.

use crate::dense::Matrix;
use crate::error::{AvemError, Result};
use crate::geometry_mesh::{BoundaryLeaf, ElementId, Mesh, NodeId};
use crate::polynomial::lagrange::basis_values;
use crate::polynomial::monomial::{gradients, values};
use crate::polynomial::projection::{factor_checked, gram};
use crate::polynomial::{dim, exponents, index, ElementQuadrature, Frame, LineRule, Poly, TriangleRule};
use crate::problem_data::ElementData;
use crate::scalar::Scalar;

/// Quadrature rules shared by every element of a run.
#[derive(Clone, Debug)]
pub struct QuadratureSet {
    pub k: usize,
    pub triangle: TriangleRule,
    pub line: LineRule,
}

impl QuadratureSet {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            triangle: TriangleRule::with_exactness(4 * k),
            line: LineRule::gauss(2 * k + 1),
        }
    }
}

/// Local degrees of freedom: boundary lattice values, then scaled moments.
#[derive(Clone, Debug)]
pub struct LocalDofMap {
    pub boundary: Vec<NodeId>,
    pub leaves: Vec<BoundaryLeaf>,
    pub n_moments: usize,
    /// Local indices of the 3k lattice points of the triangle sides.
    pub macro_positions: Vec<usize>,
}

impl LocalDofMap {
    pub fn n_boundary(&self) -> usize {
        self.boundary.len()
    }

    pub fn len(&self) -> usize {
        self.boundary.len() + self.n_moments
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Local indices of the `k+1` lattice points of boundary leaf `l`.
    pub fn leaf_positions(&self, l: usize, k: usize) -> Vec<usize> {
        let nb = self.boundary.len();
        (0..=k).map(|j| (l * k + j) % nb).collect()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LeafGeometry<T> {
    pub start: [T; 2],
    pub end: [T; 2],
    pub length: T,
    /// Outward unit normal.
    pub normal: [T; 2],
}

impl<T: Scalar> LeafGeometry<T> {
    pub fn point(&self, t: T) -> [T; 2] {
        [
            self.start[0] + t * (self.end[0] - self.start[0]),
            self.start[1] + t * (self.end[1] - self.start[1]),
        ]
    }
}

#[derive(Clone, Debug)]
pub struct LocalOps<T> {
    pub element: ElementId,
    pub k: usize,
    pub dofs: LocalDofMap,
    pub frame: Frame<T>,
    pub area: T,
    pub vertices: [[T; 2]; 3],
    pub leaf_geometry: Vec<LeafGeometry<T>>,
    pub boundary_points: Vec<[T; 2]>,
    pub data: ElementData<T>,
    /// Monomial mass matrix up to degree k.
    pub gram: Matrix<T>,
    /// Rows: monomials of degree ≤ k. Columns: local dofs.
    pub p_nabla: Matrix<T>,
    pub p0: Matrix<T>,
    /// Projection of each gradient component onto degree k−1.
    pub p0_grad: [Matrix<T>; 2],
    pub interp: Matrix<T>,
    /// Boundary values of `v − I_E v` as a map from local dofs.
    pub stab_residual: Matrix<T>,
    pub stab: Matrix<T>,
    pub stiffness: Matrix<T>,
    pub mass: Matrix<T>,
    pub load: Vec<T>,
}

fn laplacian_coeffs<T: Scalar>(k: usize, a: usize, b: usize, h: T) -> Vec<(usize, T)> {
    let mut out = Vec::new();
    if a >= 2 {
        out.push((index(a - 2, b), T::of_usize(a * (a - 1)) / (h * h)));
    }
    if b >= 2 {
        out.push((index(a, b - 2), T::of_usize(b * (b - 1)) / (h * h)));
    }
    debug_assert!(out.iter().all(|&(i, _)| i < dim(k.saturating_sub(2)).max(1)));
    out
}

impl<T: Scalar> LocalOps<T> {
    pub fn build(
        mesh: &Mesh,
        e: ElementId,
        data: ElementData<T>,
        quad: &QuadratureSet,
    ) -> Result<Self> {
        let k = mesh.k();
        if k < 2 {
            return Err(AvemError::UnsupportedDegree(k));
        }
        if !mesh.element(e).active {
            return Err(AvemError::InvalidArgument(format!("element {e} is not active")));
        }
        let vertices = mesh.element_coords(e).map(|p| p.map(T::lit));
        let frame = data.frame;
        let eq = ElementQuadrature::with_frame(&quad.triangle, &vertices, frame);
        let area = eq.area();
        let h = frame.h;

        let leaves = mesh.boundary_leaves(e);
        let boundary = mesh.element_boundary_nodes(e);
        let nb = boundary.len();
        let nk = dim(k);
        let nk1 = dim(k - 1);
        let nm = dim(k - 2);
        let n = nb + nm;
        let macro_positions: Vec<usize> = mesh
            .macro_lattice(e)
            .iter()
            .map(|x| {
                boundary
                    .iter()
                    .position(|b| b == x)
                    .ok_or_else(|| AvemError::Corrupt(format!("lattice node {x} missing on element {e}")))
            })
            .collect::<Result<_>>()?;
        let dofs = LocalDofMap {
            boundary: boundary.clone(),
            leaves: leaves.clone(),
            n_moments: nm,
            macro_positions,
        };
        let boundary_points: Vec<[T; 2]> = boundary
            .iter()
            .map(|&x| mesh.node_coords(x).map(T::lit))
            .collect();
        let leaf_geometry: Vec<LeafGeometry<T>> = leaves
            .iter()
            .map(|leaf| {
                let edge = mesh.edge(leaf.edge);
                let (p, q) = if leaf.reversed { (edge.b, edge.a) } else { (edge.a, edge.b) };
                let start = mesh.vertex_coords(p).map(T::lit);
                let end = mesh.vertex_coords(q).map(T::lit);
                let d = [end[0] - start[0], end[1] - start[1]];
                let length = (d[0] * d[0] + d[1] * d[1]).sqrt();
                LeafGeometry {
                    start,
                    end,
                    length,
                    normal: [d[1] / length, -d[0] / length],
                }
            })
            .collect();

        let hmat = gram(&eq, k);
        let hchol = factor_checked(&hmat, e.index())?;

        // D: dofs of each monomial
        let mut dmat = Matrix::zeros(n, nk);
        for (i, &x) in boundary_points.iter().enumerate() {
            for (a, v) in values(k, frame.local(x)).into_iter().enumerate() {
                dmat[(i, a)] = v;
            }
        }
        for g in 0..nm {
            for a in 0..nk {
                dmat[(nb + g, a)] = hmat[(g, a)] / area;
            }
        }

        // boundary quadrature data shared by B and the gradient projection
        let line_basis: Vec<Vec<T>> = quad
            .line
            .points
            .iter()
            .map(|&t| basis_values(k, T::lit(t)))
            .collect();
        let mut bmat = Matrix::zeros(nk, n);
        let mut egrad = [Matrix::zeros(nk1, n), Matrix::zeros(nk1, n)];
        for (l, geo) in leaf_geometry.iter().enumerate() {
            let pos = dofs.leaf_positions(l, k);
            for (qi, (&t, &w)) in quad.line.points.iter().zip(&quad.line.weights).enumerate() {
                let x = geo.point(T::lit(t));
                let xi = frame.local(x);
                let wl = T::lit(w) * geo.length;
                let grads = gradients(k, xi);
                let mvals = values(k - 1, xi);
                for (j, &p) in pos.iter().enumerate() {
                    let phi = line_basis[qi][j] * wl;
                    bmat[(0, p)] += phi;
                    for a in 1..nk {
                        let dn = (grads[a][0] * geo.normal[0] + grads[a][1] * geo.normal[1]) / h;
                        bmat[(a, p)] += dn * phi;
                    }
                    for b in 0..nk1 {
                        egrad[0][(b, p)] += geo.normal[0] * mvals[b] * phi;
                        egrad[1][(b, p)] += geo.normal[1] * mvals[b] * phi;
                    }
                }
            }
        }
        for (a, &(ea, eb)) in exponents(k).iter().enumerate().skip(1) {
            for (g, c) in laplacian_coeffs(k, ea, eb, h) {
                bmat[(a, nb + g)] -= area * c;
            }
        }
        for (b, &(ea, eb)) in exponents(k - 1).iter().enumerate() {
            if ea > 0 {
                egrad[0][(b, nb + index(ea - 1, eb))] -= area * T::of_usize(ea) / h;
            }
            if eb > 0 {
                egrad[1][(b, nb + index(ea, eb - 1))] -= area * T::of_usize(eb) / h;
            }
        }

        let gmat = bmat.matmul(&dmat);
        let p_nabla = gmat.solve(&bmat).map_err(|_| AvemError::IllConditioned {
            element: e.index(),
            condition: f64::INFINITY,
        })?;

        // enhancement: moments of degree k−1 and k come from Π∇
        let hp = hmat.matmul(&p_nabla);
        let mut cmat = Matrix::zeros(nk, n);
        for g in 0..nk {
            if g < nm {
                cmat[(g, nb + g)] = area;
            } else {
                cmat.row_mut(g).copy_from_slice(hp.row(g));
            }
        }
        let p0 = hchol.solve_matrix(&cmat);

        let h1 = hmat.submatrix(0..nk1, 0..nk1);
        let h1chol = factor_checked(&h1, e.index())?;
        let p0_grad = [h1chol.solve_matrix(&egrad[0]), h1chol.solve_matrix(&egrad[1])];

        // Lagrange interpolant on the 3k side lattice points and low moments
        let ni = if k >= 3 { dim(k - 3) } else { 0 };
        let mut imat = Matrix::zeros(nk, nk);
        let mut isel = Matrix::zeros(nk, n);
        for (r, &p) in dofs.macro_positions.iter().enumerate() {
            imat.row_mut(r).copy_from_slice(dmat.row(p));
            isel[(r, p)] = T::one();
        }
        for g in 0..ni {
            let r = 3 * k + g;
            imat.row_mut(r).copy_from_slice(dmat.row(nb + g));
            isel[(r, nb + g)] = T::one();
        }
        let interp = imat.solve(&isel).map_err(|_| AvemError::IllConditioned {
            element: e.index(),
            condition: f64::INFINITY,
        })?;
        let db = dmat.submatrix(0..nb, 0..nk);
        let mut stab_residual = db.matmul(&interp).scale(-T::one());
        for i in 0..nb {
            stab_residual[(i, i)] += T::one();
        }
        let stab = stab_residual.tr_matmul(&stab_residual);

        // local forms
        let mut ma = [Matrix::zeros(nk1, nk1), Matrix::zeros(nk1, nk1), Matrix::zeros(nk1, nk1)];
        let mut mc = Matrix::zeros(nk, nk);
        let mut bf = vec![T::zero(); nk];
        for (xi, &w) in eq.local.iter().zip(&eq.weights) {
            let m = values(k, *xi);
            let av = [data.a[0].eval(*xi), data.a[1].eval(*xi), data.a[2].eval(*xi)];
            let cv = data.c.eval(*xi);
            let fv = data.f.eval(*xi);
            for i in 0..nk {
                bf[i] += w * fv * m[i];
                let wc = w * cv * m[i];
                for j in 0..nk {
                    mc[(i, j)] += wc * m[j];
                }
            }
            for i in 0..nk1 {
                for j in 0..nk1 {
                    let mm = w * m[i] * m[j];
                    for (t, &a) in ma.iter_mut().zip(&av) {
                        t[(i, j)] += a * mm;
                    }
                }
            }
        }
        let [px, py] = &p0_grad;
        let mut stiffness = px.tr_matmul(&ma[0].matmul(px));
        let cross = px.tr_matmul(&ma[1].matmul(py));
        stiffness = stiffness.add(&cross).add(&cross.transpose());
        stiffness = stiffness.add(&py.tr_matmul(&ma[2].matmul(py)));
        stiffness.symmetrize();
        let mut mass = p0.tr_matmul(&mc.matmul(&p0));
        mass.symmetrize();
        let load = p0.tr_mul_vec(&bf);

        Ok(Self {
            element: e,
            k,
            dofs,
            frame,
            area,
            vertices,
            leaf_geometry,
            boundary_points,
            data,
            gram: hmat,
            p_nabla,
            p0,
            p0_grad,
            interp,
            stab_residual,
            stab,
            stiffness,
            mass,
            load,
        })
    }

    fn check_len(&self, v: &[T]) -> Result<()> {
        if v.len() != self.dofs.len() {
            return Err(AvemError::DimensionMismatch {
                expected: self.dofs.len(),
                got: v.len(),
            });
        }
        Ok(())
    }

    fn apply(&self, m: &Matrix<T>, v: &[T]) -> Result<Poly<T>> {
        self.check_len(v)?;
        Ok(Poly::from_coeffs(m.mul_vec(v)).expect("full block"))
    }

    pub fn apply_pi_nabla(&self, v: &[T]) -> Result<Poly<T>> {
        self.apply(&self.p_nabla, v)
    }

    pub fn apply_p0(&self, v: &[T]) -> Result<Poly<T>> {
        self.apply(&self.p0, v)
    }

    /// Projected gradient components, each of degree k−1.
    pub fn apply_p0_grad(&self, v: &[T]) -> Result<[Poly<T>; 2]> {
        Ok([self.apply(&self.p0_grad[0], v)?, self.apply(&self.p0_grad[1], v)?])
    }

    pub fn apply_interp(&self, v: &[T]) -> Result<Poly<T>> {
        self.apply(&self.interp, v)
    }

    /// `S_E(v, v)`.
    pub fn stabilization_energy(&self, v: &[T]) -> Result<T> {
        self.check_len(v)?;
        let r = self.stab_residual.mul_vec(v);
        Ok(r.iter().map(|&x| x * x).sum())
    }

    pub fn system_matrix(&self, gamma: T) -> Matrix<T> {
        let mut m = self.stiffness.add(&self.mass);
        m.add_assign_scaled(&self.stab, gamma);
        m
    }

    /// Local dofs of a polynomial given in this element's frame.
    pub fn dofs_of_poly(&self, q: &Poly<T>) -> Vec<T> {
        let mut v: Vec<T> = self
            .boundary_points
            .iter()
            .map(|&x| q.eval(self.frame.local(x)))
            .collect();
        let nb = v.len();
        v.resize(nb + self.dofs.n_moments, T::zero());
        if q.degree() <= self.k {
            let c = q.with_degree(self.k);
            for g in 0..self.dofs.n_moments {
                v[nb + g] = (0..dim(self.k)).map(|a| self.gram[(g, a)] * c.coeffs()[a]).sum::<T>() / self.area;
            }
        } else {
            let rule = TriangleRule::with_exactness(q.degree() + self.k);
            let eq = ElementQuadrature::with_frame(&rule, &self.vertices, self.frame);
            for g in 0..self.dofs.n_moments {
                v[nb + g] = eq.integrate(|_, xi| q.eval(xi) * values(self.k - 2, xi)[g]) / self.area;
            }
        }
        v
    }

    pub fn n_dofs(&self) -> usize {
        self.dofs.len()
    }
}
