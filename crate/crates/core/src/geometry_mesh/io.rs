use super::mesh::{ElementId, InitialMesh, Mesh};
use crate::error::{AvemError, Result};
use std::collections::HashMap;
use std::fmt::Write as _;

fn parse_err(line: usize, msg: impl Into<String>) -> AvemError {
    AvemError::Parse {
        line,
        msg: msg.into(),
    }
}

/// Significant lines with their 1-based numbers; `#` starts a comment.
fn lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then(|| (i + 1, l.split_whitespace().collect()))
    })
}

fn num<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T> {
    tok.parse()
        .map_err(|_| parse_err(line, format!("cannot parse `{tok}`")))
}

/// Parses the text mesh format:
///
/// ```text
/// vertices N
/// <id> <x> <y>
/// triangles M
/// <id> <v0> <v1> <v2> [<newest 0..2>]
/// ```
pub fn parse_mesh(text: &str) -> Result<InitialMesh> {
    let mut it = lines(text).peekable();
    let (ln, head) = it.next().ok_or_else(|| parse_err(0, "empty mesh file"))?;
    if head.len() != 2 || head[0] != "vertices" {
        return Err(parse_err(ln, "expected `vertices <count>`"));
    }
    let nv: usize = num(head[1], ln)?;
    let mut vid = HashMap::new();
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, t) = it.next().ok_or_else(|| parse_err(ln, "missing vertex lines"))?;
        if t.len() != 3 {
            return Err(parse_err(ln, "vertex line needs `<id> <x> <y>`"));
        }
        let id: i64 = num(t[0], ln)?;
        let x: f64 = num(t[1], ln)?;
        let y: f64 = num(t[2], ln)?;
        if !x.is_finite() || !y.is_finite() {
            return Err(parse_err(ln, "non-finite coordinate"));
        }
        if vid.insert(id, vertices.len()).is_some() {
            return Err(parse_err(ln, format!("duplicate vertex id {id}")));
        }
        vertices.push([x, y]);
    }
    let (ln, head) = it
        .next()
        .ok_or_else(|| parse_err(0, "missing `triangles` section"))?;
    if head.len() != 2 || head[0] != "triangles" {
        return Err(parse_err(ln, "expected `triangles <count>`"));
    }
    let nt: usize = num(head[1], ln)?;
    let mut triangles = Vec::with_capacity(nt);
    let mut newest = Vec::with_capacity(nt);
    let mut labels = Vec::with_capacity(nt);
    let mut seen = HashMap::new();
    for _ in 0..nt {
        let (ln, t) = it.next().ok_or_else(|| parse_err(ln, "missing triangle lines"))?;
        if t.len() != 4 && t.len() != 5 {
            return Err(parse_err(ln, "triangle line needs `<id> <v0> <v1> <v2> [newest]`"));
        }
        let id: i64 = num(t[0], ln)?;
        if seen.insert(id, ()).is_some() {
            return Err(parse_err(ln, format!("duplicate triangle id {id}")));
        }
        let mut tri = [0usize; 3];
        for (j, slot) in tri.iter_mut().enumerate() {
            let v: i64 = num(t[j + 1], ln)?;
            *slot = *vid
                .get(&v)
                .ok_or_else(|| parse_err(ln, format!("unknown vertex {v}")))?;
        }
        let nw = match t.get(4) {
            Some(s) => {
                let n: usize = num(s, ln)?;
                if n > 2 {
                    return Err(parse_err(ln, "newest index must be 0, 1 or 2"));
                }
                Some(n)
            }
            None => None,
        };
        triangles.push(tri);
        newest.push(nw);
        labels.push(id);
    }
    if let Some((ln, _)) = it.next() {
        return Err(parse_err(ln, "trailing content after triangles"));
    }
    Ok(InitialMesh {
        vertices,
        triangles,
        newest,
        labels,
    })
}

pub fn format_mesh(m: &InitialMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "vertices {}", m.vertices.len());
    for (i, p) in m.vertices.iter().enumerate() {
        let _ = writeln!(s, "{i} {:?} {:?}", p[0], p[1]);
    }
    let _ = writeln!(s, "triangles {}", m.triangles.len());
    for (i, t) in m.triangles.iter().enumerate() {
        let _ = write!(s, "{} {} {} {}", m.labels[i], t[0], t[1], t[2]);
        if let Some(n) = m.newest[i] {
            let _ = write!(s, " {n}");
        }
        s.push('\n');
    }
    s
}

/// Initial mesh followed by the bisection log; replaying it rebuilds the same forest.
pub fn format_tree_dump(mesh: &Mesh) -> String {
    let mut s = format!("k {}\n", mesh.k());
    s.push_str(&format_mesh(mesh.initial()));
    let _ = writeln!(s, "bisections {}", mesh.history().len());
    for e in mesh.history() {
        let _ = writeln!(s, "{e}");
    }
    s
}

pub fn parse_tree_dump(text: &str) -> Result<Mesh> {
    let mut parts = text.splitn(2, '\n');
    let head = parts.next().unwrap_or("");
    let rest = parts.next().unwrap_or("");
    let k: usize = match head.split_whitespace().collect::<Vec<_>>().as_slice() {
        ["k", v] => num(v, 1)?,
        _ => return Err(parse_err(1, "expected `k <degree>`")),
    };
    let split = rest
        .find("bisections")
        .ok_or_else(|| parse_err(0, "missing `bisections` section"))?;
    let initial = parse_mesh(&rest[..split])?;
    let mut mesh = Mesh::new(initial, k)?;
    let mut log = lines(&rest[split..]);
    let (ln, h) = log.next().ok_or_else(|| parse_err(0, "missing bisection count"))?;
    let n: usize = match h.as_slice() {
        ["bisections", v] => num(v, ln)?,
        _ => return Err(parse_err(ln, "expected `bisections <count>`")),
    };
    for _ in 0..n {
        let (ln, t) = log.next().ok_or_else(|| parse_err(ln, "truncated bisection log"))?;
        let e: usize = num(t[0], ln)?;
        if e >= mesh.n_elements_total() {
            return Err(parse_err(ln, format!("unknown element {e}")));
        }
        mesh.bisect(ElementId(e))?;
    }
    mesh.refresh_lambda()?;
    Ok(mesh)
}

/// Legacy ASCII VTK unstructured grid of the active triangles with optional cell data.
pub fn format_vtk(mesh: &Mesh, cell_data: &[(&str, Vec<f64>)]) -> String {
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\nadaptive mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {} double", mesh.n_vertices());
    for v in 0..mesh.n_vertices() {
        let p = mesh.vertex_coords(super::mesh::VertexId(v));
        let _ = writeln!(s, "{:?} {:?} 0", p[0], p[1]);
    }
    let act: Vec<ElementId> = mesh.active_elements().collect();
    let _ = writeln!(s, "CELLS {} {}", act.len(), act.len() * 4);
    for &e in &act {
        let v = mesh.element(e).vertices;
        let _ = writeln!(s, "3 {} {} {}", v[0], v[1], v[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {}", act.len());
    for _ in &act {
        s.push_str("5\n");
    }
    let _ = writeln!(s, "CELL_DATA {}", act.len());
    s.push_str("SCALARS generation int 1\nLOOKUP_TABLE default\n");
    for &e in &act {
        let _ = writeln!(s, "{}", mesh.element(e).generation);
    }
    for (name, vals) in cell_data {
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for v in vals {
            let _ = writeln!(s, "{v:e}");
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: &str = "\
# two triangles
vertices 4
10 0 0
11 1 0
12 1 1
13 0 1
triangles 2
7 10 11 12 2
8 10 12 13
";

    #[test]
    fn parses_and_maps_ids() {
        let m = parse_mesh(SQUARE).unwrap();
        assert_eq!(m.vertices.len(), 4);
        assert_eq!(m.triangles, vec![[0, 1, 2], [0, 2, 3]]);
        assert_eq!(m.newest, vec![Some(2), None]);
        assert_eq!(m.labels, vec![7, 8]);
    }

    #[test]
    fn roundtrip_through_text() {
        let m = parse_mesh(SQUARE).unwrap();
        let again = parse_mesh(&format_mesh(&m)).unwrap();
        assert_eq!(again.vertices, m.vertices);
        assert_eq!(again.triangles, m.triangles);
        assert_eq!(again.newest, m.newest);
        assert_eq!(again.labels, m.labels);
    }

    #[test]
    fn reports_line_of_bad_token() {
        let bad = SQUARE.replace("11 1 0", "11 1 zero");
        match parse_mesh(&bad) {
            Err(AvemError::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_unknown_vertex() {
        let bad = SQUARE.replace("8 10 12 13", "8 10 12 99");
        assert!(matches!(parse_mesh(&bad), Err(AvemError::Parse { .. })));
    }

    #[test]
    fn vtk_has_expected_sections() {
        let mesh = Mesh::new(parse_mesh(SQUARE).unwrap(), 2).unwrap();
        let v = format_vtk(&mesh, &[("eta", vec![1.0, 2.0])]);
        assert!(v.contains("POINTS 4 double"));
        assert!(v.contains("CELLS 2 8"));
        assert!(v.contains("SCALARS eta double 1"));
    }
}
