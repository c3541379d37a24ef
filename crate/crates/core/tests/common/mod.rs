#![allow(dead_code)]

use avem_core::assembly_solve::Discretization;
use avem_core::geometry_mesh::{unit_square, ElementId, Mesh, NodeId, NodeOrigin, NodeStatus};
use avem_core::problem_data::{PiecewiseData, ProblemSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random bisections of the 2×2 square, each followed by admissibility repair.
pub fn random_mesh(k: usize, seed: u64, steps: usize, cap: u32) -> Mesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = Mesh::new(unit_square(2), k).unwrap();
    for _ in 0..steps {
        let act: Vec<ElementId> = m.active_elements().collect();
        m.bisect_all(&[act[rng.gen_range(0..act.len())]]).unwrap();
        m.enforce_admissibility(cap).unwrap();
    }
    m
}

pub fn poisson_disc(m: &Mesh) -> Discretization<f64> {
    let data = PiecewiseData::<f64>::ingest(&ProblemSpec::poisson(1.0), m.initial(), m.k()).unwrap();
    Discretization::build(m, &data, 1.0).unwrap()
}

pub fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// First violated mesh invariant, if any.
pub fn mesh_violation(m: &Mesh, cap: u32) -> Option<String> {
    for e in m.active_elements() {
        let nodes = m.element_boundary_nodes(e);
        if !nodes.iter().any(|&x| m.node(x).status == NodeStatus::Proper) {
            return Some(format!("element {e:?} has no proper boundary node"));
        }
    }
    let fresh = m.fresh_classification();
    for (i, n) in m.nodes().iter().enumerate() {
        if (n.status, n.lambda) != fresh[i] {
            return Some(format!("node {i}: cached {:?}, recomputed {:?}", (n.status, n.lambda), fresh[i]));
        }
        if let Some([p, q]) = n.closest {
            if n.status == NodeStatus::Hanging && n.lambda != 1 + fresh[p.index()].1.max(fresh[q.index()].1) {
                return Some(format!("node {i}: index does not follow its neighbors"));
            }
        }
    }
    if m.max_lambda() > cap {
        return Some(format!("max index {} above {cap}", m.max_lambda()));
    }
    // vertices created by bisection
    for x in (0..m.n_nodes()).map(NodeId) {
        if m.node(x).vertex.is_none() || m.node(x).origin == NodeOrigin::Initial {
            continue;
        }
        let r = m.hanging_root_edges_at(x);
        if r > 5 {
            return Some(format!("node {x} meets {r} edge roots"));
        }
    }
    None
}
