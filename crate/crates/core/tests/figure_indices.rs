use avem_core::geometry_mesh::{ElementId, InitialMesh, Mesh, NodeStatus};

/// Two triangles over the segment [0, 12]; the lower one is refined three times
/// so that the upper one sees a chain of hanging nodes along its base.
fn chain(k: usize) -> Mesh {
    let init = InitialMesh::new(
        vec![[0.0, 0.0], [12.0, 0.0], [4.0, 4.0], [4.0, -3.0]],
        vec![[0, 1, 2], [1, 0, 3]],
    )
    .with_newest(vec![Some(2), Some(2)]);
    let mut m = Mesh::new(init, k).unwrap();
    let holds = |m: &Mesh, e: ElementId, p: [f64; 2]| m.element_coords(e).contains(&p);
    let [a, b] = m.bisect(ElementId(1)).unwrap();
    let right = if holds(&m, a, [12.0, 0.0]) { a } else { b };
    let [a, b] = m.bisect(right).unwrap();
    let base = if holds(&m, a, [6.0, 0.0]) && holds(&m, a, [12.0, 0.0]) { a } else { b };
    m.bisect(base).unwrap();
    m.refresh_lambda().unwrap();
    m
}

fn indices(m: &Mesh, xs: &[f64]) -> Vec<u32> {
    xs.iter()
        .map(|&x| m.node(m.find_node([x, 0.0]).expect("lattice point")).lambda)
        .collect()
}

#[test]
fn quadratic_chain() {
    let m = chain(2);
    let xs = [0.0, 3.0, 6.0, 7.5, 9.0, 10.5, 12.0];
    assert_eq!(indices(&m, &xs), vec![0, 1, 0, 2, 1, 2, 0]);
}

#[test]
fn cubic_chain() {
    let m = chain(3);
    let xs = [0.0, 2.0, 4.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0];
    assert_eq!(indices(&m, &xs), vec![0, 1, 0, 1, 2, 0, 2, 1, 2, 0]);
    // the coarse lattice points at 4 and 8 are seen by the upper element
    for x in [4.0, 8.0] {
        assert_eq!(m.node(m.find_node([x, 0.0]).unwrap()).status, NodeStatus::Proper);
    }
}

#[test]
fn coarse_element_boundary_collects_the_chain() {
    let m = chain(2);
    // upper element: two unrefined sides plus the leaves [0,6], [6,9], [9,12]
    assert_eq!(m.boundary_leaves(ElementId(0)).len(), 2 + 3);
    assert_eq!(m.element_boundary_nodes(ElementId(0)).len(), 5 * 2);
}
