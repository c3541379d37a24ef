use crate::assembly_solve::Discretization;
use crate::error::{AvemError, Result};
use crate::geometry_mesh::{EdgeId, Mesh, NodeId, NodeOrigin, NodeStatus};
use crate::polynomial::lagrange::{split_coefficients_f64, DetailFunction};
use crate::polynomial::{ElementQuadrature, TriangleRule};
use crate::scalar::Scalar;

/// Details `d` and conforming defects `δ` at the hanging nodes.
#[derive(Clone, Debug)]
pub struct DetailVector<T> {
    pub nodes: Vec<NodeId>,
    pub d: Vec<T>,
    pub delta: Vec<T>,
}

fn alpha<T: Scalar>(k: usize) -> Result<Vec<Vec<T>>> {
    Ok(split_coefficients_f64(k)?
        .into_iter()
        .map(|r| r.into_iter().map(T::lit).collect())
        .collect())
}

fn check_len<T>(mesh: &Mesh, v: &[T]) -> Result<()> {
    if v.len() < mesh.n_nodes() {
        return Err(AvemError::DimensionMismatch {
            expected: mesh.n_nodes(),
            got: v.len(),
        });
    }
    Ok(())
}

/// `d(v,x) = v(x) − Σ_n α_{i,n} v(ξ_n)` for every node created by an edge split,
/// indexed by node id.
pub fn split_details<T: Scalar>(mesh: &Mesh, v: &[T]) -> Result<Vec<Option<T>>> {
    check_len(mesh, v)?;
    let a = alpha::<T>(mesh.k())?;
    Ok((0..mesh.n_nodes())
        .map(|x| match mesh.node(NodeId(x)).origin {
            NodeOrigin::Split { edge, index } => {
                let interp: T = mesh
                    .edge(edge)
                    .lattice
                    .iter()
                    .zip(&a[index - 1])
                    .map(|(n, &w)| w * v[n.index()])
                    .sum();
                Some(v[x] - interp)
            }
            _ => None,
        })
        .collect())
}

/// DOFs of the conforming interpolant: proper values are kept, hanging values are
/// rebuilt from their split edge in creation order, and the moments are those of
/// the resulting element polynomial.
pub fn conforming_interpolant<T: Scalar>(mesh: &Mesh, disc: &Discretization<T>, v: &[T]) -> Result<Vec<T>> {
    if v.len() != disc.dofs.n_total() {
        return Err(AvemError::DimensionMismatch {
            expected: disc.dofs.n_total(),
            got: v.len(),
        });
    }
    let a = alpha::<T>(mesh.k())?;
    let mut w = v.to_vec();
    for x in 0..mesh.n_nodes() {
        let node = mesh.node(NodeId(x));
        if node.status != NodeStatus::Hanging {
            continue;
        }
        let NodeOrigin::Split { edge, index } = node.origin else {
            return Err(AvemError::Corrupt(format!("hanging node {x} was not created by a split")));
        };
        let lattice = &mesh.edge(edge).lattice;
        if lattice.iter().any(|n| n.index() >= x) {
            return Err(AvemError::Corrupt(format!("node {x} precedes its coarse lattice")));
        }
        w[x] = lattice.iter().zip(&a[index - 1]).map(|(n, &c)| c * w[n.index()]).sum();
    }
    let nb_moments = disc.dofs.n_moments;
    for (s, ops) in disc.ops.iter().enumerate() {
        let p = ops.apply_interp(&disc.local_values(s, &w))?;
        let dofs = ops.dofs_of_poly(&p);
        let nb = ops.dofs.n_boundary();
        for g in 0..nb_moments {
            w[disc.maps[s][nb + g]] = dofs[nb + g];
        }
    }
    Ok(w)
}

pub fn hierarchical_details<T: Scalar>(mesh: &Mesh, disc: &Discretization<T>, v: &[T]) -> Result<DetailVector<T>> {
    let all = split_details(mesh, v)?;
    let i0 = conforming_interpolant(mesh, disc, v)?;
    let nodes: Vec<NodeId> = mesh.hanging_nodes().collect();
    let d = nodes
        .iter()
        .map(|x| all[x.index()].ok_or_else(|| AvemError::Corrupt(format!("hanging node {x} has no detail"))))
        .collect::<Result<_>>()?;
    let delta = nodes.iter().map(|x| v[x.index()] - i0[x.index()]).collect();
    Ok(DetailVector { nodes, d, delta })
}

/// Largest violation of `δ(ζ_i) = d(ζ_i) + Σ_n α_{i,n} δ(ξ_n)` over the hanging nodes,
/// with `δ = 0` at proper nodes.
pub fn delta_d_defect<T: Scalar>(mesh: &Mesh, details: &DetailVector<T>) -> Result<T> {
    let a = alpha::<T>(mesh.k())?;
    let mut delta = vec![T::zero(); mesh.n_nodes()];
    for (x, &dl) in details.nodes.iter().zip(&details.delta) {
        delta[x.index()] = dl;
    }
    let mut worst = T::zero();
    for ((x, &d), &dl) in details.nodes.iter().zip(&details.d).zip(&details.delta) {
        let NodeOrigin::Split { edge, index } = mesh.node(*x).origin else {
            return Err(AvemError::Corrupt(format!("hanging node {x} was not created by a split")));
        };
        let rec: T = mesh
            .edge(edge)
            .lattice
            .iter()
            .zip(&a[index - 1])
            .map(|(n, &c)| c * delta[n.index()])
            .sum();
        worst = worst.max((dl - d - rec).abs());
    }
    Ok(worst)
}

fn split_edges_below(mesh: &Mesh, s: EdgeId, out: &mut Vec<EdgeId>) {
    if let Some([l, r]) = mesh.edge(s).children {
        out.push(s);
        split_edges_below(mesh, l, out);
        split_edges_below(mesh, r, out);
    }
}

fn parameter_along(mesh: &Mesh, s: EdgeId, y: [f64; 2]) -> f64 {
    let e = mesh.edge(s);
    let (a, b) = (mesh.vertex_coords(e.a), mesh.vertex_coords(e.b));
    let d = [b[0] - a[0], b[1] - a[1]];
    ((y[0] - a[0]) * d[0] + (y[1] - a[1]) * d[1]) / (d[0] * d[0] + d[1] * d[1])
}

/// Largest mismatch between `(v − I_E v)` and its detail expansion at the boundary
/// lattice points of every element.
pub fn reconstruction_defect<T: Scalar>(mesh: &Mesh, disc: &Discretization<T>, v: &[T]) -> Result<T> {
    let k = mesh.k();
    let details = split_details(mesh, v)?;
    let psi: Vec<DetailFunction> = (1..=k).map(|i| DetailFunction::new(k, i)).collect::<Result<_>>()?;
    let mut created: Vec<Vec<(NodeId, usize)>> = vec![Vec::new(); mesh.edges().len()];
    for x in 0..mesh.n_nodes() {
        if let NodeOrigin::Split { edge, index } = mesh.node(NodeId(x)).origin {
            created[edge.index()].push((NodeId(x), index));
        }
    }
    let mut worst = T::zero();
    for (s, ops) in disc.ops.iter().enumerate() {
        let p = ops.apply_interp(&disc.local_values(s, v))?;
        for &side in &mesh.element(ops.element).sides {
            let mut split = Vec::new();
            split_edges_below(mesh, side, &mut split);
            let mut leaves = Vec::new();
            mesh.collect_leaves(side, &mut leaves);
            for leaf in leaves {
                for &y in &mesh.edge(leaf).lattice {
                    let yc = mesh.node_coords(y);
                    let lhs = v[y.index()] - p.eval_at(&ops.frame, yc.map(T::lit));
                    let mut rhs = T::zero();
                    for &sp in &split {
                        let t = parameter_along(mesh, sp, yc);
                        for &(x, i) in &created[sp.index()] {
                            let d = details[x.index()].expect("split node");
                            rhs += d * T::lit(psi[i - 1].eval_f64(t));
                        }
                    }
                    worst = worst.max((lhs - rhs).abs());
                }
            }
        }
    }
    Ok(worst)
}

/// Measured ratios of the hierarchical and interpolation quantities for one function.
#[derive(Clone, Copy, Debug)]
pub struct RatioSample {
    /// `Σ d² / S_T(v,v)`.
    pub details_over_stab: f64,
    /// `|I_T v − I⁰_T v|²_{1,T} / Σ δ²`.
    pub interp_gap_over_deltas: f64,
    /// `(‖Π⁰_{k−1}∇(v − I⁰_T v)‖² + S_T(v − I⁰_T v))^{1/2} / S_T(v,v)^{1/2}`.
    pub conforming_over_stab: f64,
}

pub fn measure_ratios(mesh: &Mesh, disc: &Discretization<f64>, v: &[f64]) -> Result<RatioSample> {
    let details = hierarchical_details(mesh, disc, v)?;
    let i0 = conforming_interpolant(mesh, disc, v)?;
    let stab = disc.stab_form(v, v);
    let sum_d: f64 = details.d.iter().map(|d| d * d).sum();
    let sum_delta: f64 = details.delta.iter().map(|d| d * d).sum();
    let diff: Vec<f64> = v.iter().zip(&i0).map(|(a, b)| a - b).collect();
    let mut gap = 0.0;
    let mut grad = 0.0;
    let rule = TriangleRule::with_exactness(2 * mesh.k());
    for (s, ops) in disc.ops.iter().enumerate() {
        let p = ops.apply_interp(&disc.local_values(s, v))?;
        let q = ops.apply_interp(&disc.local_values(s, &i0))?;
        let e = p.sub(&q);
        let (ex, ey) = (e.grad_component(0, &ops.frame), e.grad_component(1, &ops.frame));
        let quad = ElementQuadrature::with_frame(&rule, &ops.vertices, ops.frame);
        gap += quad.integrate(|_, xi| ex.eval(xi).powi(2) + ey.eval(xi).powi(2));
        let [gx, gy] = ops.apply_p0_grad(&disc.local_values(s, &diff))?;
        grad += quad.integrate(|_, xi| gx.eval(xi).powi(2) + gy.eval(xi).powi(2));
    }
    let stab_diff = disc.stab_form(&diff, &diff);
    Ok(RatioSample {
        details_over_stab: sum_d / stab,
        interp_gap_over_deltas: gap / sum_delta,
        conforming_over_stab: ((grad + stab_diff) / stab).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry_mesh::{unit_square, ElementId};
    use crate::problem_data::{PiecewiseData, ProblemSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(k: usize, seed: u64, steps: usize) -> (Mesh, Discretization<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Mesh::new(unit_square(2), k).unwrap();
        for _ in 0..steps {
            let act: Vec<ElementId> = m.active_elements().collect();
            let e = act[rng.gen_range(0..act.len())];
            m.bisect_all(&[e]).unwrap();
            m.enforce_admissibility(3).unwrap();
        }
        let data = PiecewiseData::ingest(&ProblemSpec::poisson(1.0), m.initial(), k).unwrap();
        let d = Discretization::build(&m, &data, 1.0).unwrap();
        (m, d)
    }

    fn random(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn reconstruction_and_recursion_hold() {
        for k in 2..=3 {
            let (m, d) = setup(k, 7 + k as u64, 10);
            assert!(m.hanging_nodes().count() > 0);
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            for _ in 0..10 {
                let v = random(d.dofs.n_total(), &mut rng);
                assert!(reconstruction_defect(&m, &d, &v).unwrap() < 1e-12);
                let det = hierarchical_details(&m, &d, &v).unwrap();
                assert!(delta_d_defect(&m, &det).unwrap() < 1e-12);
            }
        }
    }

    #[test]
    fn conforming_functions_are_fixed_points() {
        let (m, d) = setup(3, 3, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v = random(d.dofs.n_total(), &mut rng);
        let w = conforming_interpolant(&m, &d, &v).unwrap();
        let again = conforming_interpolant(&m, &d, &w).unwrap();
        for (a, b) in w.iter().zip(&again) {
            assert!((a - b).abs() < 1e-12);
        }
        let det = hierarchical_details(&m, &d, &w).unwrap();
        assert!(det.d.iter().all(|x| x.abs() < 1e-12));
        assert!(d.stab_form(&w, &w) < 1e-20);
    }

    #[test]
    fn single_perturbed_hanging_value_gives_single_detail() {
        let mut m = Mesh::new(unit_square(1), 2).unwrap();
        m.bisect_all(&[ElementId(0)]).unwrap();
        let data = PiecewiseData::ingest(&ProblemSpec::poisson(1.0), m.initial(), 2).unwrap();
        let d = Discretization::build(&m, &data, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v0 = conforming_interpolant(&m, &d, &random(d.dofs.n_total(), &mut rng)).unwrap();
        let x = m.hanging_nodes().next().unwrap();
        let mut v = v0.clone();
        v[x.index()] += 0.25;
        let det = hierarchical_details(&m, &d, &v).unwrap();
        for (n, dv) in det.nodes.iter().zip(&det.d) {
            let want = if *n == x { 0.25 } else { 0.0 };
            assert!((dv - want).abs() < 1e-12);
        }
    }

    #[test]
    fn ratios_are_bounded_on_random_functions() {
        let (m, d) = setup(2, 5, 12);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let v = random(d.dofs.n_total(), &mut rng);
            let r = measure_ratios(&m, &d, &v).unwrap();
            for x in [r.details_over_stab, r.interp_gap_over_deltas, r.conforming_over_stab] {
                assert!(x.is_finite() && x > 0.0 && x < 1e4, "{r:?}");
            }
        }
    }
}
