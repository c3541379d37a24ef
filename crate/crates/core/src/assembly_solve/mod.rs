//! Global degrees of freedom, assembly of the discrete system, solve, and
//! transfer of discrete functions to refined meshes.

mod reference;
mod sparse;

pub use reference::{solve_conforming_reference, ReferenceSolution};
pub use sparse::{pcg, CsrMatrix, SolveReport, SolverOptions};

use crate::error::{AvemError, Result};
use crate::geometry_mesh::{ElementId, Mesh, NodeId, NodeOrigin};
use crate::polynomial::dim;
use crate::polynomial::lagrange::split_coefficients_f64;
use crate::problem_data::PiecewiseData;
use crate::scalar::Scalar;
use crate::vem_local::{LocalOps, QuadratureSet};
use rayon::prelude::*;

const NONE: usize = usize::MAX;

/// Node values first (global id = node id), then `k(k−1)/2` moments per active element.
#[derive(Clone, Debug)]
pub struct GlobalDofMap {
    pub n_nodes: usize,
    pub n_moments: usize,
    moment_offset: Vec<usize>,
    eliminated: Vec<bool>,
    free: Vec<Option<usize>>,
    n_free: usize,
}

impl GlobalDofMap {
    pub fn new(mesh: &Mesh) -> Self {
        let n_nodes = mesh.n_nodes();
        let n_moments = dim(mesh.k().saturating_sub(2));
        let mut moment_offset = vec![NONE; mesh.n_elements_total()];
        for (i, e) in mesh.active_elements().enumerate() {
            moment_offset[e.index()] = n_nodes + i * n_moments;
        }
        let n_total = n_nodes + mesh.n_active() * n_moments;
        let mut eliminated = vec![false; n_total];
        for (x, flag) in eliminated.iter_mut().enumerate().take(n_nodes) {
            *flag = mesh.node_on_boundary(NodeId(x));
        }
        let mut free = vec![None; n_total];
        let mut n_free = 0;
        for (i, f) in free.iter_mut().enumerate() {
            if !eliminated[i] {
                *f = Some(n_free);
                n_free += 1;
            }
        }
        Self {
            n_nodes,
            n_moments,
            moment_offset,
            eliminated,
            free,
            n_free,
        }
    }

    pub fn n_total(&self) -> usize {
        self.eliminated.len()
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    pub fn is_eliminated(&self, i: usize) -> bool {
        self.eliminated[i]
    }

    pub fn free_index(&self, i: usize) -> Option<usize> {
        self.free[i]
    }

    pub fn moment_offset(&self, e: ElementId) -> Option<usize> {
        self.moment_offset
            .get(e.index())
            .copied()
            .filter(|&o| o != NONE)
    }

    /// Global index of every local dof of an element.
    pub fn element_map(&self, mesh: &Mesh, e: ElementId) -> Result<Vec<usize>> {
        let off = self
            .moment_offset(e)
            .ok_or_else(|| AvemError::InvalidArgument(format!("element {e} is not active")))?;
        let mut m: Vec<usize> = mesh.element_boundary_nodes(e).iter().map(|x| x.index()).collect();
        m.extend(off..off + self.n_moments);
        Ok(m)
    }
}

/// Local operators of every active element together with their global maps.
#[derive(Clone, Debug)]
pub struct Discretization<T> {
    pub dofs: GlobalDofMap,
    pub ops: Vec<LocalOps<T>>,
    pub maps: Vec<Vec<usize>>,
    pub gamma: T,
    slot: Vec<usize>,
}

impl<T: Scalar> Discretization<T> {
    pub fn build(mesh: &Mesh, data: &PiecewiseData<T>, gamma: T) -> Result<Self> {
        if data.k() != mesh.k() {
            return Err(AvemError::InvalidArgument(format!(
                "data degree {} does not match mesh degree {}",
                data.k(),
                mesh.k()
            )));
        }
        let dofs = GlobalDofMap::new(mesh);
        let quad = QuadratureSet::new(mesh.k());
        let active: Vec<ElementId> = mesh.active_elements().collect();
        let built: Vec<(LocalOps<T>, Vec<usize>)> = active
            .par_iter()
            .map(|&e| {
                let ops = LocalOps::build(mesh, e, data.on_element(mesh, e), &quad)?;
                let map = dofs.element_map(mesh, e)?;
                Ok((ops, map))
            })
            .collect::<Result<_>>()?;
        let mut slot = vec![NONE; mesh.n_elements_total()];
        for (i, e) in active.iter().enumerate() {
            slot[e.index()] = i;
        }
        let (ops, maps) = built.into_iter().unzip();
        Ok(Self {
            dofs,
            ops,
            maps,
            gamma,
            slot,
        })
    }

    pub fn slot_of(&self, e: ElementId) -> Option<usize> {
        self.slot.get(e.index()).copied().filter(|&s| s != NONE)
    }

    pub fn ops_of(&self, e: ElementId) -> Option<&LocalOps<T>> {
        self.slot_of(e).map(|s| &self.ops[s])
    }

    /// `B_T` over all dofs, eliminated ones included.
    pub fn matrix(&self) -> CsrMatrix<T> {
        let mut trip = Vec::new();
        for (ops, map) in self.ops.iter().zip(&self.maps) {
            let local = ops.system_matrix(self.gamma);
            for (i, &gi) in map.iter().enumerate() {
                for (j, &gj) in map.iter().enumerate() {
                    trip.push((gi, gj, local[(i, j)]));
                }
            }
        }
        CsrMatrix::from_triplets(self.dofs.n_total(), trip)
    }

    pub fn load(&self) -> Vec<T> {
        let mut f = vec![T::zero(); self.dofs.n_total()];
        for (ops, map) in self.ops.iter().zip(&self.maps) {
            for (&g, &v) in map.iter().zip(&ops.load) {
                f[g] += v;
            }
        }
        f
    }

    /// Solves with homogeneous boundary values.
    pub fn solve(&self, opts: SolverOptions) -> Result<(Vec<T>, SolveReport)> {
        self.solve_lifted(&vec![T::zero(); self.dofs.n_total()], opts)
    }

    /// Solves with the boundary node values of `mesh` taken from `g`.
    pub fn solve_with_dirichlet(
        &self,
        mesh: &Mesh,
        g: impl Fn([f64; 2]) -> T,
        opts: SolverOptions,
    ) -> Result<(Vec<T>, SolveReport)> {
        let mut lift = vec![T::zero(); self.dofs.n_total()];
        for (x, l) in lift.iter_mut().enumerate().take(self.dofs.n_nodes) {
            if self.dofs.is_eliminated(x) {
                *l = g(mesh.node_coords(NodeId(x)));
            }
        }
        self.solve_lifted(&lift, opts)
    }

    fn solve_lifted(&self, lift: &[T], opts: SolverOptions) -> Result<(Vec<T>, SolveReport)> {
        let a = self.matrix();
        let f = self.load();
        let mut rhs = vec![T::zero(); self.dofs.n_free()];
        for (r, fr) in f.iter().enumerate() {
            if let Some(rn) = self.dofs.free_index(r) {
                let coupling: T = a
                    .row(r)
                    .filter(|&(c, _)| self.dofs.is_eliminated(c))
                    .map(|(c, v)| v * lift[c])
                    .sum();
                rhs[rn] = *fr - coupling;
            }
        }
        let reduced = a.restrict(&self.dofs.free, self.dofs.n_free());
        let (x, report) = pcg(&reduced, &rhs, opts)?;
        let mut u = lift.to_vec();
        for (i, ui) in u.iter_mut().enumerate() {
            if let Some(rn) = self.dofs.free_index(i) {
                *ui = x[rn];
            }
        }
        Ok((u, report))
    }

    pub fn local_values(&self, slot: usize, u: &[T]) -> Vec<T> {
        self.maps[slot].iter().map(|&g| u[g]).collect()
    }

    /// `a_T(w,w) + m_T(w,w)` through the element projections.
    pub fn energy_sq(&self, w: &[T]) -> T {
        (0..self.ops.len())
            .map(|s| {
                let wl = self.local_values(s, w);
                self.ops[s].stiffness.quad_form(&wl) + self.ops[s].mass.quad_form(&wl)
            })
            .sum()
    }

    /// `S_T(v, w)`, without the factor γ.
    pub fn stab_form(&self, v: &[T], w: &[T]) -> T {
        (0..self.ops.len())
            .map(|s| {
                let vl = self.local_values(s, v);
                let wl = self.local_values(s, w);
                let sv = self.ops[s].stab.mul_vec(&wl);
                vl.iter().zip(&sv).map(|(&a, &b)| a * b).sum::<T>()
            })
            .sum()
    }

    pub fn stab_per_element(&self, v: &[T]) -> Vec<T> {
        (0..self.ops.len())
            .map(|s| self.ops[s].stab.quad_form(&self.local_values(s, v)))
            .collect()
    }
}

fn check_nested(coarse: &Mesh, fine: &Mesh) -> Result<()> {
    let nested = coarse.k() == fine.k()
        && fine.history().starts_with(coarse.history())
        && fine.n_nodes() >= coarse.n_nodes()
        && fine.initial().triangles == coarse.initial().triangles;
    if nested {
        Ok(())
    } else {
        Err(AvemError::InvalidArgument("meshes are not nested".into()))
    }
}

/// Canonical embedding of a coarse discrete function into a refinement: traces on
/// old edges are kept, new interior edges carry linear traces, and each child
/// inherits the moments of its coarse ancestor.
pub fn prolong<T: Scalar>(
    coarse: &Mesh,
    fine: &Mesh,
    coarse_dofs: &GlobalDofMap,
    fine_dofs: &GlobalDofMap,
    u: &[T],
) -> Result<Vec<T>> {
    check_nested(coarse, fine)?;
    check_len(coarse_dofs, u)?;
    let k = fine.k();
    let mut v = split_nodes(coarse, fine, fine_dofs, u, |v, ed, j| {
        let t = T::of_usize(j) / T::of_usize(k);
        let va = v[fine.vertex_node(ed.a).index()];
        let vb = v[fine.vertex_node(ed.b).index()];
        Ok((T::one() - t) * va + t * vb)
    })?;
    for e in fine.active_elements() {
        let anc = fine
            .ancestor_in(e, coarse)
            .ok_or_else(|| AvemError::InvalidArgument("meshes are not nested".into()))?;
        let (src, dst) = match (coarse_dofs.moment_offset(anc), fine_dofs.moment_offset(e)) {
            (Some(s), Some(d)) => (s, d),
            _ => return Err(AvemError::Corrupt(format!("missing moments for element {e}"))),
        };
        for g in 0..fine_dofs.n_moments {
            v[dst + g] = u[src + g];
        }
    }
    Ok(v)
}

/// Embedding that keeps old edge traces and takes everything inside a refined
/// coarse element from its local interpolant `I_E u`, so that elementwise
/// polynomials are reproduced exactly.
pub fn prolong_local<T: Scalar>(
    coarse: &Mesh,
    coarse_disc: &Discretization<T>,
    fine: &Mesh,
    fine_disc: &Discretization<T>,
    u: &[T],
) -> Result<Vec<T>> {
    check_nested(coarse, fine)?;
    check_len(&coarse_disc.dofs, u)?;
    let interp = |anc: ElementId| -> Result<crate::polynomial::Poly<T>> {
        let s = coarse_disc
            .slot_of(anc)
            .ok_or_else(|| AvemError::Corrupt(format!("element {anc} not active in the coarse mesh")))?;
        coarse_disc.ops[s].apply_interp(&coarse_disc.local_values(s, u))
    };
    // a new interior edge lies inside exactly one coarse element
    let mut owner = vec![None; fine.n_nodes()];
    for e in fine.active_elements() {
        let anc = fine
            .ancestor_in(e, coarse)
            .ok_or_else(|| AvemError::InvalidArgument("meshes are not nested".into()))?;
        if anc != e {
            for x in fine.element_boundary_nodes(e) {
                if matches!(fine.node(x).origin, NodeOrigin::Interior { .. }) && x.index() >= coarse.n_nodes() {
                    owner[x.index()] = Some(anc);
                }
            }
        }
    }
    let mut cache: std::collections::HashMap<ElementId, crate::polynomial::Poly<T>> = Default::default();
    let mut v = split_nodes(coarse, fine, &fine_disc.dofs, u, |_, ed, j| {
        let x = ed.lattice[j];
        let anc = owner[x.index()].ok_or_else(|| AvemError::Corrupt(format!("node {x} has no coarse owner")))?;
        if let std::collections::hash_map::Entry::Vacant(e) = cache.entry(anc) {
            e.insert(interp(anc)?);
        }
        let frame = coarse_disc.ops_of(anc).expect("active").frame;
        let p = fine.node_coords(x).map(T::lit);
        Ok(cache[&anc].eval_at(&frame, p))
    })?;
    for (s, ops) in fine_disc.ops.iter().enumerate() {
        let e = ops.element;
        let anc = fine
            .ancestor_in(e, coarse)
            .ok_or_else(|| AvemError::InvalidArgument("meshes are not nested".into()))?;
        let dst = fine_disc.dofs.moment_offset(e).expect("active");
        if anc == e {
            let src = coarse_disc.dofs.moment_offset(anc).expect("active");
            v[dst..dst + fine_disc.dofs.n_moments].copy_from_slice(&u[src..src + fine_disc.dofs.n_moments]);
            continue;
        }
        let q = match cache.get(&anc) {
            Some(q) => q.clone(),
            None => interp(anc)?,
        };
        let from = coarse_disc.ops_of(anc).expect("active").frame;
        let local = fine_disc.ops[s].dofs_of_poly(&q.reframe(&from, &ops.frame));
        let nb = ops.dofs.n_boundary();
        v[dst..dst + fine_disc.dofs.n_moments].copy_from_slice(&local[nb..]);
    }
    Ok(v)
}

fn check_len<T>(dofs: &GlobalDofMap, u: &[T]) -> Result<()> {
    if u.len() != dofs.n_total() {
        return Err(AvemError::DimensionMismatch {
            expected: dofs.n_total(),
            got: u.len(),
        });
    }
    Ok(())
}

/// Copies old node values and fills new nodes in creation order; split nodes use the
/// lattice of the edge they split, nodes of new interior edges come from `interior`.
fn split_nodes<T: Scalar>(
    coarse: &Mesh,
    fine: &Mesh,
    fine_dofs: &GlobalDofMap,
    u: &[T],
    mut interior: impl FnMut(&[T], &crate::geometry_mesh::Edge, usize) -> Result<T>,
) -> Result<Vec<T>> {
    let alpha: Vec<Vec<T>> = split_coefficients_f64(fine.k())?
        .into_iter()
        .map(|row| row.into_iter().map(T::lit).collect())
        .collect();
    let mut v = vec![T::zero(); fine_dofs.n_total()];
    v[..coarse.n_nodes()].copy_from_slice(&u[..coarse.n_nodes()]);
    for x in coarse.n_nodes()..fine.n_nodes() {
        v[x] = match fine.node(NodeId(x)).origin {
            NodeOrigin::Split { edge, index } => fine
                .edge(edge)
                .lattice
                .iter()
                .zip(&alpha[index - 1])
                .map(|(n, &a)| a * v[n.index()])
                .sum(),
            NodeOrigin::Interior { edge } => {
                let ed = fine.edge(edge);
                let j = ed
                    .lattice
                    .iter()
                    .position(|n| n.index() == x)
                    .ok_or_else(|| AvemError::Corrupt(format!("node {x} missing from its edge")))?;
                interior(&v, ed, j)?
            }
            NodeOrigin::Initial => {
                return Err(AvemError::Corrupt(format!("initial node {x} created after refinement")))
            }
        };
    }
    Ok(v)
}

/// `|||u_fine − v_*|||` with `v_*` the embedding of the coarse solution.
pub fn energy_norm_diff<T: Scalar>(
    coarse: &Mesh,
    coarse_dofs: &GlobalDofMap,
    u_coarse: &[T],
    fine: &Mesh,
    fine_disc: &Discretization<T>,
    u_fine: &[T],
) -> Result<T> {
    let v = prolong(coarse, fine, coarse_dofs, &fine_disc.dofs, u_coarse)?;
    let w: Vec<T> = u_fine.iter().zip(&v).map(|(&a, &b)| a - b).collect();
    Ok(fine_disc.energy_sq(&w).max(T::zero()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry_mesh::{unit_square, ElementId};
    use crate::polynomial::{ElementQuadrature, Poly, TriangleRule};
    use crate::problem_data::{FieldSpec, ProblemSpec};

    fn data(mesh: &Mesh, spec: &ProblemSpec) -> PiecewiseData<f64> {
        PiecewiseData::ingest(spec, mesh.initial(), mesh.k()).unwrap()
    }

    #[test]
    fn dimension_of_two_triangle_square() {
        // conforming P2 on two triangles: 1 interior node (the diagonal midpoint)
        let mesh = Mesh::new(unit_square(1), 2).unwrap();
        let d = GlobalDofMap::new(&mesh);
        assert_eq!(d.n_free(), 1 + 2);
        let disc = Discretization::build(&mesh, &data(&mesh, &ProblemSpec::poisson(1.0)), 1.0).unwrap();
        let (u, _) = disc.solve(SolverOptions::default()).unwrap();
        assert_eq!(u.len(), d.n_total());
    }

    #[test]
    fn single_triangle_keeps_only_moments() {
        let init = crate::geometry_mesh::InitialMesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]]);
        let mesh = Mesh::new(init, 3).unwrap();
        let d = GlobalDofMap::new(&mesh);
        assert_eq!(d.n_free(), 3);
    }

    fn refined(k: usize) -> Mesh {
        let mut m = Mesh::new(unit_square(2), k).unwrap();
        m.bisect_all(&[ElementId(0)]).unwrap();
        m.bisect_all(&[ElementId(8)]).unwrap();
        m.bisect_all(&[ElementId(3)]).unwrap();
        m
    }

    #[test]
    fn assembled_matrix_is_symmetric() {
        let mesh = refined(3);
        let mut spec = ProblemSpec::poisson(1.0);
        spec.a11 = FieldSpec::Poly(vec![1.0, 0.5, 0.0]);
        spec.c = FieldSpec::Constant(2.0);
        let disc = Discretization::build(&mesh, &data(&mesh, &spec), 10.0).unwrap();
        let a = disc.matrix();
        assert!(a.symmetric_defect() < 1e-13 * a.diagonal().iter().fold(1.0f64, |m, v| m.max(v.abs())));
    }

    #[test]
    fn zero_load_gives_zero_solution() {
        let mesh = refined(2);
        let disc = Discretization::build(&mesh, &data(&mesh, &ProblemSpec::poisson(0.0)), 1.0).unwrap();
        let (u, _) = disc.solve(SolverOptions::default()).unwrap();
        assert!(u.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn patch_test_on_nonconforming_mesh() {
        for k in 2..=3 {
            let mesh = refined(k);
            // u = x² + xy − y² (k=2), plus x³ for k=3; −Δu = 0 resp. −6x
            let (exact, f): (fn([f64; 2]) -> f64, FieldSpec) = if k == 2 {
                (|x| x[0] * x[0] + x[0] * x[1] - x[1] * x[1], FieldSpec::Constant(0.0))
            } else {
                (
                    |x| x[0] * x[0] * x[0] + x[0] * x[0] + x[0] * x[1] - x[1] * x[1],
                    FieldSpec::Poly(vec![0.0, -6.0, 0.0]),
                )
            };
            let spec = ProblemSpec {
                f,
                ..ProblemSpec::poisson(0.0)
            };
            let disc = Discretization::build(&mesh, &data(&mesh, &spec), 1.0).unwrap();
            let (u, _) = disc.solve_with_dirichlet(&mesh, exact, SolverOptions::default()).unwrap();
            for x in 0..mesh.n_nodes() {
                let p = mesh.node_coords(NodeId(x));
                assert!((u[x] - exact(p)).abs() < 1e-9, "k={k} node {x}");
            }
        }
    }

    #[test]
    fn prolongation_preserves_polynomials() {
        let coarse = refined(3);
        let mut fine = coarse.clone();
        let act: Vec<_> = fine.active_elements().take(4).collect();
        fine.bisect_all(&act).unwrap();
        fine.bisect_all(&[ElementId(fine.n_elements_total() - 1)]).unwrap();
        let spec = ProblemSpec::poisson(1.0);
        let dc = Discretization::build(&coarse, &data(&coarse, &spec), 1.0).unwrap();
        let df = Discretization::build(&fine, &data(&fine, &spec), 1.0).unwrap();
        // a global linear function is reproduced exactly, moments included
        let lin = |x: [f64; 2]| 0.3 + 2.0 * x[0] - x[1];
        let mut u = vec![0.0; dc.dofs.n_total()];
        for (s, ops) in dc.ops.iter().enumerate() {
            let q = Poly::from_coeffs(vec![lin(ops.frame.center), 2.0 * ops.frame.h, -ops.frame.h]).unwrap();
            for (&g, v) in dc.maps[s].iter().zip(ops.dofs_of_poly(&q)) {
                u[g] = v;
            }
        }
        let v = prolong(&coarse, &fine, &dc.dofs, &df.dofs, &u).unwrap();
        for x in 0..fine.n_nodes() {
            assert!((v[x] - lin(fine.node_coords(NodeId(x)))).abs() < 1e-13);
        }
        assert!(prolong(&fine, &coarse, &df.dofs, &dc.dofs, &v).is_err());
    }

    #[test]
    fn local_prolongation_reproduces_degree_k() {
        for k in 2..=4 {
            let coarse = refined(k);
            let mut fine = coarse.clone();
            let act: Vec<_> = fine.active_elements().take(5).collect();
            fine.bisect_all(&act).unwrap();
            let last = ElementId(fine.n_elements_total() - 1);
            fine.bisect_all(&[last]).unwrap();
            let spec = ProblemSpec::poisson(1.0);
            let dc = Discretization::build(&coarse, &data(&coarse, &spec), 1.0).unwrap();
            let df = Discretization::build(&fine, &data(&fine, &spec), 1.0).unwrap();
            let coeffs: Vec<f64> = (0..dim(k)).map(|i| ((i * 7 + 3) % 5) as f64 - 2.0).collect();
            let global = Poly::from_coeffs(coeffs).unwrap();
            let fill = |d: &Discretization<f64>| {
                let mut u = vec![0.0; d.dofs.n_total()];
                for (s, ops) in d.ops.iter().enumerate() {
                    let q = global.reframe(&crate::polynomial::Frame::global(), &ops.frame);
                    for (&g, v) in d.maps[s].iter().zip(ops.dofs_of_poly(&q)) {
                        u[g] = v;
                    }
                }
                u
            };
            let v = prolong_local(&coarse, &dc, &fine, &df, &fill(&dc)).unwrap();
            let want = fill(&df);
            for (a, b) in v.iter().zip(&want) {
                assert!((a - b).abs() < 1e-11, "k={k}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn energy_difference_matches_quadrature_oracle() {
        let init = crate::geometry_mesh::InitialMesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .with_newest(vec![Some(1), Some(2)]);
        let coarse = Mesh::new(init, 2).unwrap();
        let mut fine = coarse.clone();
        fine.bisect_all(&[ElementId(0)]).unwrap();
        let mut spec = ProblemSpec::poisson(1.0);
        spec.c = FieldSpec::Constant(1.5);
        let dc = Discretization::build(&coarse, &data(&coarse, &spec), 1.0).unwrap();
        let df = Discretization::build(&fine, &data(&fine, &spec), 1.0).unwrap();
        let (uc, _) = dc.solve(SolverOptions::default()).unwrap();
        let (uf, _) = df.solve(SolverOptions::default()).unwrap();
        let d = energy_norm_diff(&coarse, &dc.dofs, &uc, &fine, &df, &uf).unwrap();
        let v = prolong(&coarse, &fine, &dc.dofs, &df.dofs, &uc).unwrap();
        let rule = TriangleRule::with_exactness(6);
        let mut oracle = 0.0;
        for (s, ops) in df.ops.iter().enumerate() {
            let w: Vec<f64> = df.maps[s].iter().map(|&g| uf[g] - v[g]).collect();
            let [gx, gy] = ops.apply_p0_grad(&w).unwrap();
            let p = ops.apply_p0(&w).unwrap();
            let q = ElementQuadrature::with_frame(&rule, &ops.vertices, ops.frame);
            oracle += q.integrate(|_, xi| gx.eval(xi).powi(2) + gy.eval(xi).powi(2) + 1.5 * p.eval(xi).powi(2));
        }
        assert!((d * d - oracle).abs() < 1e-12 * (1.0 + oracle));
        assert!(d > 0.0);
        let same = energy_norm_diff(&coarse, &dc.dofs, &uc, &coarse, &dc, &uc).unwrap();
        assert_eq!(same, 0.0);
    }
}
