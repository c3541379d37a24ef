use super::dyadic::{midpoint, point_from_f64, DyadicPoint};
use crate::error::{AvemError, Result};
use std::collections::HashMap;

macro_rules! id_type {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(pub usize);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0
            }
        }

        impl std::fmt::Display for $name {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

id_type!(VertexId);
id_type!(EdgeId);
id_type!(ElementId);
id_type!(
    /// Lattice node. Node ids are assigned in creation order, which is also a
    /// topological order for the closest-node relation.
    NodeId
);

pub const MAX_DEGREE: usize = 4;

/// Conforming coarse triangulation as read from disk.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialMesh {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    /// Local index (0..3) of the newest vertex of each triangle, if prescribed.
    pub newest: Vec<Option<usize>>,
    /// External element labels used by piecewise problem data.
    pub labels: Vec<i64>,
}

impl InitialMesh {
    pub fn new(vertices: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>) -> Self {
        let n = triangles.len();
        Self {
            vertices,
            triangles,
            newest: vec![None; n],
            labels: (0..n as i64).collect(),
        }
    }

    pub fn with_newest(mut self, newest: Vec<Option<usize>>) -> Self {
        self.newest = newest;
        self
    }
}

#[derive(Clone, Debug)]
pub struct Vertex {
    pub coords: DyadicPoint,
    pub node: NodeId,
}

#[derive(Clone, Debug)]
pub struct Edge {
    pub a: VertexId,
    pub b: VertexId,
    pub parent: Option<EdgeId>,
    pub children: Option<[EdgeId; 2]>,
    pub level: u32,
    pub root: EdgeId,
    /// k+1 lattice nodes ordered from `a` to `b`.
    pub lattice: Vec<NodeId>,
    /// Active elements having this edge as one of their three sides.
    pub owners: Vec<ElementId>,
    pub boundary: bool,
}

impl Edge {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }
}

#[derive(Clone, Debug)]
pub struct Element {
    /// Counter-clockwise; the last vertex is the newest one.
    pub vertices: [VertexId; 3],
    /// Side `i` is opposite vertex `i`; side 2 is the refinement edge.
    pub sides: [EdgeId; 3],
    pub parent: Option<ElementId>,
    pub children: Option<[ElementId; 2]>,
    pub generation: u32,
    pub root: usize,
    pub active: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeStatus {
    Proper,
    Hanging,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeOrigin {
    Initial,
    /// Created when `edge` was bisected; the node is the `index`-th new point
    /// (1-based, counted from `edge.a`).
    Split { edge: EdgeId, index: usize },
    /// Interior lattice point of an edge created inside a bisected element.
    Interior { edge: EdgeId },
}

#[derive(Clone, Debug)]
pub struct Node {
    /// `k · x`, which is dyadic for every lattice point.
    pub key: DyadicPoint,
    /// Leaf edges whose lattice contains this node.
    pub hosts: Vec<EdgeId>,
    pub status: NodeStatus,
    pub closest: Option<[NodeId; 2]>,
    pub origin: NodeOrigin,
    pub lambda: u32,
    pub vertex: Option<VertexId>,
}

/// Oriented leaf edge met while walking an element boundary counter-clockwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryLeaf {
    pub edge: EdgeId,
    pub reversed: bool,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    k: usize,
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    elements: Vec<Element>,
    nodes: Vec<Node>,
    node_index: HashMap<DyadicPoint, NodeId>,
    initial: InitialMesh,
    history: Vec<ElementId>,
    n_active: usize,
    lambda_stale: bool,
}

fn signed_area(p: [f64; 2], q: [f64; 2], r: [f64; 2]) -> f64 {
    0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]))
}

fn dist2(p: [f64; 2], q: [f64; 2]) -> f64 {
    (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)
}

fn scaled(p: DyadicPoint, s: i64) -> DyadicPoint {
    [p[0].mul_int(s), p[1].mul_int(s)]
}

fn add(p: DyadicPoint, q: DyadicPoint) -> DyadicPoint {
    [p[0] + q[0], p[1] + q[1]]
}

impl Mesh {
    pub fn new(initial: InitialMesh, k: usize) -> Result<Self> {
        if k == 0 || k > MAX_DEGREE {
            return Err(AvemError::UnsupportedDegree(k));
        }
        let nt = initial.triangles.len();
        if nt == 0 {
            return Err(AvemError::InvalidMesh("no triangles".into()));
        }
        if initial.newest.len() != nt || initial.labels.len() != nt {
            return Err(AvemError::InvalidMesh(
                "per-triangle metadata length mismatch".into(),
            ));
        }
        let mut mesh = Mesh {
            k,
            vertices: Vec::with_capacity(initial.vertices.len()),
            edges: Vec::new(),
            elements: Vec::with_capacity(nt),
            nodes: Vec::new(),
            node_index: HashMap::new(),
            initial: initial.clone(),
            history: Vec::new(),
            n_active: 0,
            lambda_stale: false,
        };
        for (i, &p) in initial.vertices.iter().enumerate() {
            let coords = point_from_f64(p)
                .ok_or_else(|| AvemError::InvalidMesh(format!("vertex {i} is not finite")))?;
            let node = mesh
                .insert_node(scaled(coords, k as i64), NodeOrigin::Initial)
                .ok_or_else(|| AvemError::InvalidMesh(format!("duplicate vertex {i}")))?;
            mesh.nodes[node.0].vertex = Some(VertexId(i));
            mesh.vertices.push(Vertex { coords, node });
        }
        let mut edge_map: HashMap<(usize, usize), EdgeId> = HashMap::new();
        for (r, tri) in initial.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= initial.vertices.len()) {
                return Err(AvemError::InvalidMesh(format!(
                    "triangle {r} references a missing vertex"
                )));
            }
            let p = tri.map(|v| initial.vertices[v]);
            let area = signed_area(p[0], p[1], p[2]);
            let scale = dist2(p[0], p[1]).max(dist2(p[1], p[2])).max(dist2(p[2], p[0]));
            if area.abs() <= 1e-14 * scale {
                return Err(AvemError::InvalidMesh(format!("triangle {r} is degenerate")));
            }
            let newest = match initial.newest[r] {
                Some(n) if n < 3 => n,
                Some(n) => {
                    return Err(AvemError::InvalidMesh(format!(
                        "triangle {r}: newest index {n} out of range"
                    )))
                }
                None => {
                    let side = |i: usize| dist2(p[(i + 1) % 3], p[(i + 2) % 3]);
                    (0..3).fold(0, |best, i| if side(i) > side(best) { i } else { best })
                }
            };
            let mut v = [tri[(newest + 1) % 3], tri[(newest + 2) % 3], tri[newest]];
            if area < 0.0 {
                v.swap(0, 1);
            }
            let id = ElementId(mesh.elements.len());
            let mut sides = [EdgeId(0); 3];
            for (i, side) in sides.iter_mut().enumerate() {
                let (x, y) = (v[(i + 1) % 3], v[(i + 2) % 3]);
                let key = (x.min(y), x.max(y));
                let e = match edge_map.get(&key) {
                    Some(&e) => e,
                    None => {
                        let e = mesh.new_root_edge(VertexId(key.0), VertexId(key.1), true)?;
                        edge_map.insert(key, e);
                        e
                    }
                };
                mesh.edges[e.0].owners.push(id);
                *side = e;
            }
            mesh.elements.push(Element {
                vertices: v.map(VertexId),
                sides,
                parent: None,
                children: None,
                generation: 0,
                root: r,
                active: true,
            });
            mesh.n_active += 1;
        }
        for (i, e) in mesh.edges.iter_mut().enumerate() {
            match e.owners.len() {
                1 => e.boundary = true,
                2 => {}
                n => {
                    return Err(AvemError::InvalidMesh(format!(
                        "edge {i} is shared by {n} triangles"
                    )))
                }
            }
        }
        let all: Vec<NodeId> = (0..mesh.nodes.len()).map(NodeId).collect();
        mesh.reclassify(&all);
        mesh.refresh_lambda()?;
        if mesh.nodes.iter().any(|n| n.status == NodeStatus::Hanging) {
            return Err(AvemError::InvalidMesh("initial mesh is not conforming".into()));
        }
        Ok(mesh)
    }

    fn insert_node(&mut self, key: DyadicPoint, origin: NodeOrigin) -> Option<NodeId> {
        if self.node_index.contains_key(&key) {
            return None;
        }
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node {
            key,
            hosts: Vec::new(),
            status: NodeStatus::Proper,
            closest: None,
            origin,
            lambda: 0,
            vertex: None,
        });
        self.node_index.insert(key, id);
        Some(id)
    }

    /// Root edge between two existing vertices with fresh interior lattice nodes.
    fn new_root_edge(&mut self, a: VertexId, b: VertexId, initial: bool) -> Result<EdgeId> {
        let id = EdgeId(self.edges.len());
        let k = self.k as i64;
        let pa = self.vertices[a.0].coords;
        let pb = self.vertices[b.0].coords;
        let mut lattice = Vec::with_capacity(self.k + 1);
        lattice.push(self.vertices[a.0].node);
        for j in 1..k {
            let key = add(scaled(pa, k - j), scaled(pb, j));
            let origin = if initial {
                NodeOrigin::Initial
            } else {
                NodeOrigin::Interior { edge: id }
            };
            let n = match self.insert_node(key, origin) {
                Some(n) => n,
                None => {
                    // Initial meshes may only collide when an edge is duplicated.
                    return Err(AvemError::InvalidMesh(format!(
                        "lattice point of edge {a}-{b} coincides with another node"
                    )));
                }
            };
            lattice.push(n);
        }
        lattice.push(self.vertices[b.0].node);
        for &n in &lattice {
            self.nodes[n.0].hosts.push(id);
        }
        self.edges.push(Edge {
            a,
            b,
            parent: None,
            children: None,
            level: 0,
            root: id,
            lattice,
            owners: Vec::new(),
            boundary: false,
        });
        Ok(id)
    }

    /// Bisects a leaf edge at its midpoint. Returns the two children.
    fn split_edge(&mut self, s: EdgeId) -> [EdgeId; 2] {
        if let Some(ch) = self.edges[s.0].children {
            return ch;
        }
        let k = self.k;
        let edge = self.edges[s.0].clone();
        let pa = self.vertices[edge.a.0].coords;
        let pb = self.vertices[edge.b.0].coords;
        let mut fine = Vec::with_capacity(2 * k + 1);
        for j in 0..=2 * k {
            if j % 2 == 0 {
                fine.push(edge.lattice[j / 2]);
            } else {
                let key = add(scaled(pa, (2 * k - j) as i64), scaled(pb, j as i64));
                let key = [key[0].half(), key[1].half()];
                let n = self
                    .insert_node(
                        key,
                        NodeOrigin::Split {
                            edge: s,
                            index: j.div_ceil(2),
                        },
                    )
                    .expect("bisection point collides with an existing node");
                self.nodes[n.0].closest = Some([edge.lattice[(j - 1) / 2], edge.lattice[j.div_ceil(2)]]);
                fine.push(n);
            }
        }
        let mid = VertexId(self.vertices.len());
        let mid_node = fine[k];
        self.vertices.push(Vertex {
            coords: midpoint(pa, pb),
            node: mid_node,
        });
        self.nodes[mid_node.0].vertex = Some(mid);
        let lo = EdgeId(self.edges.len());
        let hi = EdgeId(self.edges.len() + 1);
        for (va, vb, lat) in [
            (edge.a, mid, fine[..=k].to_vec()),
            (mid, edge.b, fine[k..].to_vec()),
        ] {
            self.edges.push(Edge {
                a: va,
                b: vb,
                parent: Some(s),
                children: None,
                level: edge.level + 1,
                root: edge.root,
                lattice: lat,
                owners: Vec::new(),
                boundary: edge.boundary,
            });
        }
        for (j, &n) in fine.iter().enumerate() {
            let hosts = &mut self.nodes[n.0].hosts;
            hosts.retain(|&h| h != s);
            if j <= k {
                hosts.push(lo);
            }
            if j >= k {
                hosts.push(hi);
            }
        }
        self.edges[s.0].children = Some([lo, hi]);
        [lo, hi]
    }

    /// Newest-vertex bisection of an active element.
    pub fn bisect(&mut self, e: ElementId) -> Result<[ElementId; 2]> {
        let el = self
            .elements
            .get(e.0)
            .ok_or_else(|| AvemError::InvalidArgument(format!("no element {e}")))?
            .clone();
        if !el.active {
            return Err(AvemError::InvalidArgument(format!("element {e} is not active")));
        }
        let [a, b, c] = el.vertices;
        let [s0, s1, s2] = el.sides;
        let [lo, hi] = self.split_edge(s2);
        let m = self.edges[lo.0].b;
        let (am, mb) = if self.edges[s2.0].a == a { (lo, hi) } else { (hi, lo) };
        let cm = self.new_root_edge_interior(c, m);
        let e1 = ElementId(self.elements.len());
        let e2 = ElementId(self.elements.len() + 1);
        self.elements.push(Element {
            vertices: [c, a, m],
            sides: [am, cm, s1],
            parent: Some(e),
            children: None,
            generation: el.generation + 1,
            root: el.root,
            active: true,
        });
        self.elements.push(Element {
            vertices: [b, c, m],
            sides: [cm, mb, s0],
            parent: Some(e),
            children: None,
            generation: el.generation + 1,
            root: el.root,
            active: true,
        });
        for s in [s0, s1, s2] {
            self.edges[s.0].owners.retain(|&o| o != e);
        }
        self.edges[am.0].owners.push(e1);
        self.edges[cm.0].owners.push(e1);
        self.edges[s1.0].owners.push(e1);
        self.edges[cm.0].owners.push(e2);
        self.edges[mb.0].owners.push(e2);
        self.edges[s0.0].owners.push(e2);
        self.elements[e.0].active = false;
        self.elements[e.0].children = Some([e1, e2]);
        self.n_active += 1;
        self.history.push(e);

        let mut dirty = Vec::new();
        for s in [s0, s1, s2, cm] {
            self.collect_nodes_below(s, &mut dirty);
        }
        dirty.sort_unstable();
        dirty.dedup();
        self.reclassify(&dirty);
        self.lambda_stale = true;
        Ok([e1, e2])
    }

    fn new_root_edge_interior(&mut self, c: VertexId, m: VertexId) -> EdgeId {
        self.new_root_edge(c, m, false)
            .expect("interior edge lattice collides with an existing node")
    }

    fn collect_nodes_below(&self, s: EdgeId, out: &mut Vec<NodeId>) {
        match self.edges[s.0].children {
            None => out.extend_from_slice(&self.edges[s.0].lattice),
            Some([l, r]) => {
                self.collect_nodes_below(l, out);
                self.collect_nodes_below(r, out);
            }
        }
    }

    fn classify(&self, x: NodeId) -> NodeStatus {
        for &leaf in &self.nodes[x.0].hosts {
            let mut cur = Some(leaf);
            while let Some(s) = cur {
                let edge = &self.edges[s.0];
                if !edge.owners.is_empty() && !edge.lattice.contains(&x) {
                    return NodeStatus::Hanging;
                }
                cur = edge.parent;
            }
        }
        NodeStatus::Proper
    }

    fn reclassify(&mut self, nodes: &[NodeId]) {
        for &x in nodes {
            self.nodes[x.0].status = self.classify(x);
        }
    }

    /// Recomputes the global index of every node in creation order.
    pub fn refresh_lambda(&mut self) -> Result<()> {
        for i in 0..self.nodes.len() {
            let lam = match self.nodes[i].status {
                NodeStatus::Proper => 0,
                NodeStatus::Hanging => {
                    let [p, q] = self.nodes[i].closest.ok_or_else(|| {
                        AvemError::Corrupt(format!("hanging node {i} has no closest nodes"))
                    })?;
                    if p.0 >= i || q.0 >= i {
                        return Err(AvemError::Corrupt(format!(
                            "closest nodes of {i} are not older"
                        )));
                    }
                    self.nodes[p.0].lambda.max(self.nodes[q.0].lambda) + 1
                }
            };
            self.nodes[i].lambda = lam;
        }
        self.lambda_stale = false;
        Ok(())
    }

    /// Bisects each listed element that is still active, then refreshes indices.
    pub fn bisect_all(&mut self, elements: &[ElementId]) -> Result<()> {
        for &e in elements {
            if self.elements[e.0].active {
                self.bisect(e)?;
            }
        }
        self.refresh_lambda()
    }

    pub fn refine_uniform(&mut self, levels: usize) -> Result<()> {
        for _ in 0..levels {
            let act: Vec<ElementId> = self.active_elements().collect();
            self.bisect_all(&act)?;
        }
        Ok(())
    }

    /// Refines in place until no node exceeds index `cap`. Returns the number of bisections.
    pub fn enforce_admissibility(&mut self, cap: u32) -> Result<usize> {
        if self.lambda_stale {
            self.refresh_lambda()?;
        }
        let start = self.history.len();
        let max_passes = 64 + 8 * self.elements.len();
        for _ in 0..max_passes {
            let mut targets: Vec<ElementId> = Vec::new();
            for (i, n) in self.nodes.iter().enumerate() {
                if n.lambda > cap {
                    targets.extend(self.elements_seeing_hanging(NodeId(i)));
                }
            }
            if targets.is_empty() {
                return Ok(self.history.len() - start);
            }
            targets.sort_unstable();
            targets.dedup();
            self.bisect_all(&targets)?;
        }
        Err(AvemError::AdmissibilityCap(max_passes))
    }

    /// Closure refinement: bisects until every element side is a leaf edge.
    pub fn make_conforming(&mut self) -> Result<usize> {
        let start = self.history.len();
        loop {
            let targets: Vec<ElementId> = self
                .active_elements()
                .filter(|&e| self.elements[e.0].sides.iter().any(|s| !self.edges[s.0].is_leaf()))
                .collect();
            if targets.is_empty() {
                break;
            }
            self.bisect_all(&targets)?;
        }
        Ok(self.history.len() - start)
    }

    /// Active elements for which `x` is a hanging node.
    pub fn elements_seeing_hanging(&self, x: NodeId) -> Vec<ElementId> {
        let mut out = Vec::new();
        for &leaf in &self.nodes[x.0].hosts {
            let mut cur = Some(leaf);
            while let Some(s) = cur {
                let edge = &self.edges[s.0];
                if !edge.lattice.contains(&x) {
                    out.extend_from_slice(&edge.owners);
                }
                cur = edge.parent;
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Active elements whose closure contains the node.
    pub fn elements_touching(&self, x: NodeId) -> Vec<ElementId> {
        let mut out = Vec::new();
        for &leaf in &self.nodes[x.0].hosts {
            let mut cur = Some(leaf);
            while let Some(s) = cur {
                out.extend_from_slice(&self.edges[s.0].owners);
                cur = self.edges[s.0].parent;
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Active elements whose sides contain the given leaf edge.
    pub fn leaf_neighbors(&self, leaf: EdgeId) -> Vec<ElementId> {
        let mut out = Vec::new();
        let mut cur = Some(leaf);
        while let Some(s) = cur {
            out.extend_from_slice(&self.edges[s.0].owners);
            cur = self.edges[s.0].parent;
        }
        out
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn initial(&self) -> &InitialMesh {
        &self.initial
    }

    pub fn history(&self) -> &[ElementId] {
        &self.history
    }

    pub fn n_active(&self) -> usize {
        self.n_active
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements_total(&self) -> usize {
        self.elements.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn active_elements(&self) -> impl Iterator<Item = ElementId> + '_ {
        self.elements
            .iter()
            .enumerate()
            .filter(|(_, e)| e.active)
            .map(|(i, _)| ElementId(i))
    }

    pub fn element(&self, e: ElementId) -> &Element {
        &self.elements[e.0]
    }

    pub fn edge(&self, s: EdgeId) -> &Edge {
        &self.edges[s.0]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, x: NodeId) -> &Node {
        &self.nodes[x.0]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn lambda_is_current(&self) -> bool {
        !self.lambda_stale
    }

    pub fn find_node(&self, p: [f64; 2]) -> Option<NodeId> {
        let key = point_from_f64(p)?;
        self.node_index.get(&scaled(key, self.k as i64)).copied()
    }

    pub fn vertex_coords(&self, v: VertexId) -> [f64; 2] {
        let c = self.vertices[v.0].coords;
        [c[0].to_f64(), c[1].to_f64()]
    }

    pub fn vertex_node(&self, v: VertexId) -> NodeId {
        self.vertices[v.0].node
    }

    pub fn node_coords(&self, x: NodeId) -> [f64; 2] {
        let key = self.nodes[x.0].key;
        let k = self.k as f64;
        [key[0].to_f64() / k, key[1].to_f64() / k]
    }

    pub fn node_key(&self, x: NodeId) -> DyadicPoint {
        self.nodes[x.0].key
    }

    pub fn node_on_boundary(&self, x: NodeId) -> bool {
        self.nodes[x.0]
            .hosts
            .iter()
            .any(|&h| self.edges[h.0].boundary)
    }

    pub fn element_coords(&self, e: ElementId) -> [[f64; 2]; 3] {
        self.elements[e.0].vertices.map(|v| self.vertex_coords(v))
    }

    pub fn element_area(&self, e: ElementId) -> f64 {
        let [p, q, r] = self.element_coords(e);
        signed_area(p, q, r)
    }

    pub fn element_diameter(&self, e: ElementId) -> f64 {
        let [p, q, r] = self.element_coords(e);
        dist2(p, q).max(dist2(q, r)).max(dist2(r, p)).sqrt()
    }

    pub fn edge_length(&self, s: EdgeId) -> f64 {
        let e = &self.edges[s.0];
        dist2(self.vertex_coords(e.a), self.vertex_coords(e.b)).sqrt()
    }

    /// Leaf edges of the element boundary, counter-clockwise from vertex 0.
    pub fn boundary_leaves(&self, e: ElementId) -> Vec<BoundaryLeaf> {
        let el = &self.elements[e.0];
        let mut out = Vec::new();
        for side in [2usize, 0, 1] {
            let s = el.sides[side];
            let start = el.vertices[(side + 1) % 3];
            let reversed = self.edges[s.0].a != start;
            let mut leaves = Vec::new();
            self.collect_leaves(s, &mut leaves);
            if reversed {
                leaves.reverse();
            }
            out.extend(leaves.into_iter().map(|edge| BoundaryLeaf { edge, reversed }));
        }
        out
    }

    pub fn collect_leaves(&self, s: EdgeId, out: &mut Vec<EdgeId>) {
        match self.edges[s.0].children {
            None => out.push(s),
            Some([l, r]) => {
                self.collect_leaves(l, out);
                self.collect_leaves(r, out);
            }
        }
    }

    /// Lattice of an edge listed in the requested direction.
    pub fn oriented_lattice(&self, s: EdgeId, reversed: bool) -> Vec<NodeId> {
        let mut l = self.edges[s.0].lattice.clone();
        if reversed {
            l.reverse();
        }
        l
    }

    /// Boundary nodes of the polygonal element, counter-clockwise from vertex 0.
    pub fn element_boundary_nodes(&self, e: ElementId) -> Vec<NodeId> {
        let mut out = Vec::new();
        for leaf in self.boundary_leaves(e) {
            let lat = self.oriented_lattice(leaf.edge, leaf.reversed);
            out.extend_from_slice(&lat[..self.k]);
        }
        out
    }

    /// The 3k lattice points of the triangle sides, counter-clockwise from vertex 0.
    pub fn macro_lattice(&self, e: ElementId) -> Vec<NodeId> {
        let el = &self.elements[e.0];
        let mut out = Vec::with_capacity(3 * self.k);
        for side in [2usize, 0, 1] {
            let s = el.sides[side];
            let reversed = self.edges[s.0].a != el.vertices[(side + 1) % 3];
            let lat = self.oriented_lattice(s, reversed);
            out.extend_from_slice(&lat[..self.k]);
        }
        out
    }

    pub fn hanging_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.status == NodeStatus::Hanging)
            .map(|(i, _)| NodeId(i))
    }

    pub fn is_conforming(&self) -> bool {
        self.hanging_nodes().next().is_none()
    }

    pub fn max_lambda(&self) -> u32 {
        self.nodes.iter().map(|n| n.lambda).max().unwrap_or(0)
    }

    /// Statuses and indices recomputed without any cached state.
    pub fn fresh_classification(&self) -> Vec<(NodeStatus, u32)> {
        let mut out: Vec<(NodeStatus, u32)> = Vec::with_capacity(self.nodes.len());
        for i in 0..self.nodes.len() {
            let st = self.classify(NodeId(i));
            let lam = match st {
                NodeStatus::Proper => 0,
                NodeStatus::Hanging => {
                    let [p, q] = self.nodes[i].closest.expect("hanging node without parents");
                    out[p.0].1.max(out[q.0].1) + 1
                }
            };
            out.push((st, lam));
        }
        out
    }

    /// Number of distinct root edges whose segment contains at least one hanging node
    /// and passes through `x`.
    pub fn hanging_root_edges_at(&self, x: NodeId) -> usize {
        let mut roots: Vec<EdgeId> = self.nodes[x.0]
            .hosts
            .iter()
            .map(|&h| self.edges[h.0].root)
            .collect();
        roots.sort_unstable();
        roots.dedup();
        roots
            .into_iter()
            .filter(|&r| {
                let mut nodes = Vec::new();
                self.collect_nodes_below(r, &mut nodes);
                nodes
                    .iter()
                    .any(|&n| self.nodes[n.0].status == NodeStatus::Hanging)
            })
            .count()
    }

    /// Ancestor of `e` (or `e` itself) that is active in `other`, a coarser mesh
    /// sharing this mesh's refinement history prefix.
    pub fn ancestor_in(&self, mut e: ElementId, other: &Mesh) -> Option<ElementId> {
        loop {
            if e.0 < other.elements.len() && other.elements[e.0].active {
                return Some(e);
            }
            e = self.elements[e.0].parent?;
        }
    }

    /// Vertex with exact coordinates, used for replay and tests.
    pub fn vertex_dyadic(&self, v: VertexId) -> DyadicPoint {
        self.vertices[v.0].coords
    }

    pub fn segment_contains(&self, s: EdgeId, x: NodeId) -> bool {
        let e = &self.edges[s.0];
        let k = self.k as i64;
        let pa = scaled(self.vertices[e.a.0].coords, k);
        let pb = scaled(self.vertices[e.b.0].coords, k);
        let p = self.nodes[x.0].key;
        let cross = |u: DyadicPoint, v: DyadicPoint| -> f64 {
            let (ux, uy) = ((u[0] - pa[0]).to_f64(), (u[1] - pa[1]).to_f64());
            let (vx, vy) = ((v[0] - pa[0]).to_f64(), (v[1] - pa[1]).to_f64());
            ux * vy - uy * vx
        };
        let len2 = (pb[0] - pa[0]).to_f64().powi(2) + (pb[1] - pa[1]).to_f64().powi(2);
        if cross(pb, p).abs() > 1e-12 * len2 {
            return false;
        }
        let dot = (p[0] - pa[0]).to_f64() * (pb[0] - pa[0]).to_f64()
            + (p[1] - pa[1]).to_f64() * (pb[1] - pa[1]).to_f64();
        dot >= -1e-12 * len2 && dot <= len2 * (1.0 + 1e-12)
    }
}
