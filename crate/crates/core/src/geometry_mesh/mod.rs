//! Triangle forests refined by newest-vertex bisection, with exact lattice nodes,
//! hanging-node classification and the global index used to bound hanging-node chains.

pub mod dyadic;
pub mod io;
mod mesh;

pub use dyadic::{Dyadic, DyadicPoint};
pub use mesh::{
    BoundaryLeaf, Edge, EdgeId, Element, ElementId, InitialMesh, Mesh, Node, NodeId, NodeOrigin,
    NodeStatus, VertexId, MAX_DEGREE,
};

/// Unit square split into `n × n` squares, each cut along the diagonal through
/// its lower-left corner. The newest vertex sits at the right angle so every
/// refinement edge is a diagonal.
pub fn unit_square(n: usize) -> InitialMesh {
    let h = 1.0 / n as f64;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([i as f64 * h, j as f64 * h]);
        }
    }
    let v = |i: usize, j: usize| j * (n + 1) + i;
    let mut triangles = Vec::with_capacity(2 * n * n);
    let mut newest = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            triangles.push([v(i, j), v(i + 1, j), v(i + 1, j + 1)]);
            newest.push(Some(1));
            triangles.push([v(i, j), v(i + 1, j + 1), v(i, j + 1)]);
            newest.push(Some(2));
        }
    }
    InitialMesh::new(vertices, triangles).with_newest(newest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn total_area(m: &Mesh) -> f64 {
        m.active_elements().map(|e| m.element_area(e)).sum()
    }

    #[test]
    fn unit_square_is_conforming_and_oriented() {
        for k in 1..=4 {
            let m = Mesh::new(unit_square(2), k).unwrap();
            assert_eq!(m.n_active(), 8);
            assert!(m.is_conforming());
            assert!(m.active_elements().all(|e| m.element_area(e) > 0.0));
            // vertices + k-1 nodes per edge (16 edges)
            assert_eq!(m.n_nodes(), 9 + 16 * (k - 1));
        }
    }

    #[test]
    fn single_bisection_creates_hanging_nodes_on_neighbor() {
        let mut m = Mesh::new(unit_square(1), 2).unwrap();
        let [c1, c2] = m.bisect(ElementId(0)).unwrap();
        m.refresh_lambda().unwrap();
        assert!(m.element_area(c1) > 0.0 && m.element_area(c2) > 0.0);
        // diagonal split: the midpoint and the two quarter points hang on element 1
        let hanging: Vec<_> = m.hanging_nodes().collect();
        assert_eq!(hanging.len(), 2);
        let mid = m.find_node([0.5, 0.5]).unwrap();
        assert_eq!(m.node(mid).status, NodeStatus::Proper);
        for x in hanging {
            assert_eq!(m.node(x).lambda, 1);
            assert_eq!(m.elements_seeing_hanging(x), vec![ElementId(1)]);
        }
    }

    #[test]
    fn element_boundary_lists_leaf_lattices() {
        let mut m = Mesh::new(unit_square(1), 3).unwrap();
        m.bisect(ElementId(0)).unwrap();
        m.refresh_lambda().unwrap();
        let nodes = m.element_boundary_nodes(ElementId(1));
        assert_eq!(nodes.len(), 4 * 3);
        assert_eq!(m.macro_lattice(ElementId(1)).len(), 9);
        let first = m.node_coords(nodes[0]);
        let v0 = m.vertex_coords(m.element(ElementId(1)).vertices[0]);
        assert_eq!(first, v0);
    }

    #[test]
    fn conforming_closure_removes_hanging_nodes() {
        let mut m = Mesh::new(unit_square(2), 2).unwrap();
        m.bisect(ElementId(3)).unwrap();
        m.bisect_all(&[ElementId(8)]).unwrap();
        assert!(!m.is_conforming());
        m.make_conforming().unwrap();
        assert!(m.is_conforming());
    }

    #[test]
    fn replay_of_tree_dump_is_identical() {
        let mut m = Mesh::new(unit_square(2), 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..30 {
            let act: Vec<_> = m.active_elements().collect();
            m.bisect(act[rng.gen_range(0..act.len())]).unwrap();
        }
        m.refresh_lambda().unwrap();
        let back = io::parse_tree_dump(&io::format_tree_dump(&m)).unwrap();
        assert_eq!(back.n_nodes(), m.n_nodes());
        assert_eq!(back.history(), m.history());
        for (a, b) in back.nodes().iter().zip(m.nodes()) {
            assert_eq!(a.key, b.key);
            assert_eq!(a.lambda, b.lambda);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn random_refinement_invariants(seed in 0u64..10_000, steps in 1usize..60, k in 1usize..=4) {
            let mut m = Mesh::new(unit_square(2), k).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..steps {
                let act: Vec<_> = m.active_elements().collect();
                let before: Vec<u32> = m.nodes().iter().map(|n| n.lambda).collect();
                m.bisect_all(&[act[rng.gen_range(0..act.len())]]).unwrap();
                // the index never grows under refinement
                for (i, &b) in before.iter().enumerate() {
                    prop_assert!(m.node(NodeId(i)).lambda <= b);
                }
            }
            prop_assert!((total_area(&m) - 1.0).abs() < 1e-12);
            prop_assert!(m.active_elements().all(|e| m.element_area(e) > 0.0));
            let fresh = m.fresh_classification();
            for (i, n) in m.nodes().iter().enumerate() {
                prop_assert_eq!((n.status, n.lambda), fresh[i]);
            }
            // the boundary walk of each element has k nodes per leaf
            for e in m.active_elements() {
                let leaves = m.boundary_leaves(e);
                prop_assert_eq!(m.element_boundary_nodes(e).len(), leaves.len() * k);
                for w in leaves.windows(2) {
                    let end = m.oriented_lattice(w[0].edge, w[0].reversed)[k];
                    let start = m.oriented_lattice(w[1].edge, w[1].reversed)[0];
                    prop_assert_eq!(end, start);
                }
            }
        }

        #[test]
        fn admissibility_bounds_index(seed in 0u64..10_000, cap in 1u32..4) {
            let mut m = Mesh::new(unit_square(2), 2).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..40 {
                let act: Vec<_> = m.active_elements().collect();
                m.bisect(act[rng.gen_range(0..act.len())]).unwrap();
            }
            m.enforce_admissibility(cap).unwrap();
            prop_assert!(m.max_lambda() <= cap);
            // running it again is a no-op
            prop_assert_eq!(m.enforce_admissibility(cap).unwrap(), 0);
        }
    }
}
