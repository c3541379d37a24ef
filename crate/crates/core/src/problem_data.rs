//! Piecewise polynomial coefficients `A`, `c` and load `f` on the coarse mesh,
//! restricted exactly to refined elements by change of scaled frame.

use crate::error::{AvemError, Result};
use crate::geometry_mesh::{ElementId, InitialMesh, Mesh};
use crate::polynomial::{dim, Frame, Poly};
use crate::scalar::Scalar;
use std::collections::BTreeMap;

/// Coefficient description as written in a problem file.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldSpec {
    Constant(f64),
    /// Coefficients in global coordinates, graded order `1, x, y, x², xy, y², …`.
    Poly(Vec<f64>),
    /// Keyed by the coarse element label of the mesh file.
    PerElement(BTreeMap<i64, FieldSpec>),
}

impl FieldSpec {
    fn for_root(&self, label: i64) -> Result<&FieldSpec> {
        match self {
            FieldSpec::PerElement(m) => m.get(&label).ok_or_else(|| {
                AvemError::InvalidData(format!("no entry for coarse element {label}"))
            }),
            other => Ok(other),
        }
    }

    fn global_poly<T: Scalar>(&self) -> Result<Poly<T>> {
        match self {
            FieldSpec::Constant(v) => Ok(Poly::constant(T::lit(*v))),
            FieldSpec::Poly(c) => Poly::from_coeffs(c.iter().map(|&v| T::lit(v)).collect())
                .ok_or_else(|| {
                    AvemError::InvalidData(format!(
                        "coefficient list of length {} is not a complete degree block",
                        c.len()
                    ))
                }),
            FieldSpec::PerElement(_) => Err(AvemError::InvalidData(
                "nested per_element tables are not allowed".into(),
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    pub a11: FieldSpec,
    pub a12: FieldSpec,
    pub a22: FieldSpec,
    pub c: FieldSpec,
    pub f: FieldSpec,
}

impl ProblemSpec {
    pub fn poisson(f: f64) -> Self {
        Self {
            a11: FieldSpec::Constant(1.0),
            a12: FieldSpec::Constant(0.0),
            a22: FieldSpec::Constant(1.0),
            c: FieldSpec::Constant(0.0),
            f: FieldSpec::Constant(f),
        }
    }
}

fn perr(line: usize, msg: impl Into<String>) -> AvemError {
    AvemError::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_simple(tokens: &[&str], line: usize) -> Result<FieldSpec> {
    let nums = |t: &[&str]| -> Result<Vec<f64>> {
        t.iter()
            .map(|s| {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| perr(line, format!("bad number `{s}`")))
            })
            .collect()
    };
    match tokens.first().copied() {
        Some("constant") if tokens.len() == 2 => Ok(FieldSpec::Constant(nums(&tokens[1..])?[0])),
        Some("poly") if tokens.len() >= 2 => Ok(FieldSpec::Poly(nums(&tokens[1..])?)),
        _ => Err(perr(line, "expected `constant <v>` or `poly <c0> <c1> ...`")),
    }
}

/// Parses the block format:
///
/// ```text
/// A
///   a11 constant 1
///   a12 constant 0
///   a22 poly 1 0 1
/// end
/// c
///   constant 0
/// end
/// f
///   per_element
///     0 constant 1
///     1 poly 1 2 0
///   end
/// end
/// ```
pub fn parse_problem(text: &str) -> Result<ProblemSpec> {
    let lines: Vec<(usize, Vec<&str>)> = text
        .lines()
        .enumerate()
        .filter_map(|(i, l)| {
            let l = l.split('#').next().unwrap_or("").trim();
            (!l.is_empty()).then(|| (i + 1, l.split_whitespace().collect()))
        })
        .collect();
    let mut pos = 0;
    let mut entries: BTreeMap<String, FieldSpec> = BTreeMap::new();
    let mut seen: Vec<&str> = Vec::new();

    fn parse_value(
        lines: &[(usize, Vec<&str>)],
        pos: &mut usize,
        tokens: &[&str],
        line: usize,
    ) -> Result<FieldSpec> {
        if tokens == ["per_element"] {
            let mut map = BTreeMap::new();
            loop {
                let (ln, t) = lines
                    .get(*pos)
                    .ok_or_else(|| perr(line, "unterminated per_element table"))?;
                *pos += 1;
                if t.as_slice() == ["end"] {
                    return Ok(FieldSpec::PerElement(map));
                }
                let id: i64 = t[0]
                    .parse()
                    .map_err(|_| perr(*ln, format!("bad element id `{}`", t[0])))?;
                if map.insert(id, parse_simple(&t[1..], *ln)?).is_some() {
                    return Err(perr(*ln, format!("duplicate entry for element {id}")));
                }
            }
        }
        parse_simple(tokens, line)
    }

    while pos < lines.len() {
        let (ln, head) = &lines[pos];
        pos += 1;
        let block = match head.as_slice() {
            [b] if ["A", "c", "f"].contains(b) => *b,
            _ => return Err(perr(*ln, "expected block header `A`, `c` or `f`")),
        };
        if seen.contains(&block) {
            return Err(perr(*ln, format!("duplicate block {block}")));
        }
        seen.push(block);
        if block == "A" {
            loop {
                let (ln, t) = lines.get(pos).ok_or_else(|| perr(*ln, "unterminated block A"))?;
                pos += 1;
                if t.as_slice() == ["end"] {
                    break;
                }
                let name = t[0];
                if !["a11", "a12", "a21", "a22"].contains(&name) {
                    return Err(perr(*ln, format!("unknown entry `{name}` in block A")));
                }
                let v = parse_value(&lines, &mut pos, &t[1..], *ln)?;
                if entries.insert(name.to_string(), v).is_some() {
                    return Err(perr(*ln, format!("duplicate entry {name}")));
                }
            }
        } else {
            let (vl, t) = lines
                .get(pos)
                .ok_or_else(|| perr(*ln, format!("empty block {block}")))?;
            pos += 1;
            let v = parse_value(&lines, &mut pos, t, *vl)?;
            let (el, e) = lines
                .get(pos)
                .ok_or_else(|| perr(*vl, format!("unterminated block {block}")))?;
            if e.as_slice() != ["end"] {
                return Err(perr(*el, format!("expected `end` closing block {block}")));
            }
            pos += 1;
            entries.insert(block.to_string(), v);
        }
    }
    let take = |k: &str| entries.get(k).cloned();
    let a12 = take("a12").unwrap_or(FieldSpec::Constant(0.0));
    if let Some(a21) = take("a21") {
        if a21 != a12 {
            return Err(AvemError::InvalidData("diffusion tensor is not symmetric (a21 ≠ a12)".into()));
        }
    }
    Ok(ProblemSpec {
        a11: take("a11").ok_or_else(|| AvemError::InvalidData("missing a11".into()))?,
        a12,
        a22: take("a22").ok_or_else(|| AvemError::InvalidData("missing a22".into()))?,
        c: take("c").unwrap_or(FieldSpec::Constant(0.0)),
        f: take("f").ok_or_else(|| AvemError::InvalidData("missing block f".into()))?,
    })
}

/// Coefficients on one element, in that element's scaled frame.
#[derive(Clone, Debug)]
pub struct ElementData<T> {
    pub frame: Frame<T>,
    /// `a11, a12, a22`.
    pub a: [Poly<T>; 3],
    pub c: Poly<T>,
    pub f: Poly<T>,
}

impl<T: Scalar> ElementData<T> {
    /// Same polynomials expressed in another frame.
    pub fn restrict(&self, frame: Frame<T>) -> Self {
        Self {
            frame,
            a: [
                self.a[0].reframe(&self.frame, &frame),
                self.a[1].reframe(&self.frame, &frame),
                self.a[2].reframe(&self.frame, &frame),
            ],
            c: self.c.reframe(&self.frame, &frame),
            f: self.f.reframe(&self.frame, &frame),
        }
    }

    /// `A(x)` at a point given in local coordinates.
    pub fn tensor_at(&self, xi: [T; 2]) -> [[T; 2]; 2] {
        let a12 = self.a[1].eval(xi);
        [[self.a[0].eval(xi), a12], [a12, self.a[2].eval(xi)]]
    }
}

/// Validated data bound to a coarse mesh.
#[derive(Clone, Debug)]
pub struct PiecewiseData<T> {
    k: usize,
    roots: Vec<ElementData<T>>,
}

fn root_vertices<T: Scalar>(initial: &InitialMesh, r: usize) -> [[T; 2]; 3] {
    initial.triangles[r].map(|v| initial.vertices[v].map(T::lit))
}

impl<T: Scalar> PiecewiseData<T> {
    pub fn ingest(spec: &ProblemSpec, initial: &InitialMesh, k: usize) -> Result<Self> {
        if k < 1 {
            return Err(AvemError::UnsupportedDegree(k));
        }
        let global = Frame::global();
        let mut roots = Vec::with_capacity(initial.triangles.len());
        for (r, &label) in initial.labels.iter().enumerate() {
            let frame = Frame::of_triangle(&root_vertices::<T>(initial, r));
            let get = |f: &FieldSpec, name: &str, max: usize| -> Result<Poly<T>> {
                let p = f.for_root(label)?.global_poly::<T>()?;
                if p.degree() > max {
                    return Err(AvemError::InvalidData(format!(
                        "{name} on element {label} has degree {} > {max}",
                        p.degree()
                    )));
                }
                Ok(p.reframe(&global, &frame))
            };
            let dk = k - 1;
            roots.push(ElementData {
                frame,
                a: [
                    get(&spec.a11, "a11", dk)?,
                    get(&spec.a12, "a12", dk)?,
                    get(&spec.a22, "a22", dk)?,
                ],
                c: get(&spec.c, "c", dk)?,
                f: get(&spec.f, "f", k)?,
            });
        }
        Self::from_roots(initial, k, roots)
    }

    /// Wraps per-root coefficients already expressed in each root's frame.
    pub fn from_roots(initial: &InitialMesh, k: usize, roots: Vec<ElementData<T>>) -> Result<Self> {
        if roots.len() != initial.triangles.len() {
            return Err(AvemError::DimensionMismatch {
                expected: initial.triangles.len(),
                got: roots.len(),
            });
        }
        let data = Self { k, roots };
        data.validate(initial)?;
        Ok(data)
    }

    fn validate(&self, initial: &InitialMesh) -> Result<()> {
        let n = 2 * self.k + 4;
        for (r, d) in self.roots.iter().enumerate() {
            let v = root_vertices::<T>(initial, r);
            for i in 0..=n {
                for j in 0..=n - i {
                    let (l1, l2) = (T::of_usize(i) / T::of_usize(n), T::of_usize(j) / T::of_usize(n));
                    let l0 = T::one() - l1 - l2;
                    let x = [
                        l0 * v[0][0] + l1 * v[1][0] + l2 * v[2][0],
                        l0 * v[0][1] + l1 * v[1][1] + l2 * v[2][1],
                    ];
                    let xi = d.frame.local(x);
                    let a = d.tensor_at(xi);
                    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
                    let scale = a[0][0].abs() + a[1][1].abs() + T::min_positive_value();
                    if !(a[0][0] > T::zero()) || !(det > T::tolerance() * scale * scale) {
                        return Err(AvemError::InvalidData(format!(
                            "diffusion tensor not positive definite at ({}, {}) in element {}",
                            x[0], x[1], initial.labels[r]
                        )));
                    }
                    let c = d.c.eval(xi);
                    if c < -T::tolerance() {
                        return Err(AvemError::InvalidData(format!(
                            "reaction coefficient negative ({c}) at ({}, {}) in element {}",
                            x[0], x[1], initial.labels[r]
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn root(&self, r: usize) -> &ElementData<T> {
        &self.roots[r]
    }

    /// Data restricted to an element of a refined mesh.
    pub fn on_element(&self, mesh: &Mesh, e: ElementId) -> ElementData<T> {
        let verts = mesh.element_coords(e).map(|p| p.map(T::lit));
        self.roots[mesh.element(e).root].restrict(Frame::of_triangle(&verts))
    }

    /// Whether `A` and `c` are constant on every coarse element.
    pub fn has_constant_coefficients(&self) -> bool {
        let tol = T::tolerance();
        self.roots.iter().all(|d| {
            d.a.iter()
                .chain(std::iter::once(&d.c))
                .all(|p| p.coeffs().iter().skip(1).all(|c| c.abs() <= tol))
        })
    }

    pub fn max_data_degree(&self) -> usize {
        self.roots
            .iter()
            .flat_map(|d| d.a.iter().chain([&d.c, &d.f]))
            .map(Poly::degree)
            .max()
            .unwrap_or(0)
    }
}

/// Number of coefficients required for a full degree block.
pub fn coefficient_count(degree: usize) -> usize {
    dim(degree)
}
