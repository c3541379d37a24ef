//! Smooth benchmark on the unit square: `A = I + diag(x, y)`, `c = 1 + x` and the
//! load `2π² sin(πx) sin(πy)` projected onto `P_{k−1}` on each coarse triangle.

use crate::error::Result;
use crate::geometry_mesh::{unit_square, ElementId, InitialMesh, Mesh};
use crate::polynomial::projection::project_fn;
use crate::polynomial::{ElementQuadrature, TriangleRule};
use crate::problem_data::{FieldSpec, PiecewiseData, ProblemSpec};
use crate::scalar::Scalar;
use std::f64::consts::PI;

pub fn benchmark_mesh() -> InitialMesh {
    unit_square(2)
}

pub fn benchmark_spec() -> ProblemSpec {
    ProblemSpec {
        a11: FieldSpec::Poly(vec![1.0, 1.0, 0.0]),
        a12: FieldSpec::Constant(0.0),
        a22: FieldSpec::Poly(vec![1.0, 0.0, 1.0]),
        c: FieldSpec::Poly(vec![1.0, 1.0, 0.0]),
        f: FieldSpec::Constant(0.0),
    }
}

pub fn benchmark_load(x: [f64; 2]) -> f64 {
    2.0 * PI * PI * (PI * x[0]).sin() * (PI * x[1]).sin()
}

/// Benchmark data of degree `k`.
pub fn benchmark_data<T: Scalar>(initial: &InitialMesh, k: usize) -> Result<PiecewiseData<T>> {
    let base = PiecewiseData::<T>::ingest(&benchmark_spec(), initial, k)?;
    let rule = TriangleRule::with_exactness(2 * k + 8);
    let mut roots = Vec::with_capacity(initial.triangles.len());
    for (r, tri) in initial.triangles.iter().enumerate() {
        let mut d = base.root(r).clone();
        let verts = tri.map(|v| initial.vertices[v].map(T::lit));
        let q = ElementQuadrature::with_frame(&rule, &verts, d.frame);
        d.f = project_fn(&q, |x| T::lit(benchmark_load(x.map(|c| c.as_f64()))), k - 1, r)?;
        roots.push(d);
    }
    PiecewiseData::from_roots(initial, k, roots)
}

/// Coarse mesh and data of the benchmark for degree `k`.
pub fn benchmark<T: Scalar>(k: usize) -> Result<(Mesh, PiecewiseData<T>)> {
    let init = benchmark_mesh();
    let data = benchmark_data(&init, k)?;
    let mut mesh = Mesh::new(init, k)?;
    // one hanging node from the start, so the stabilization is active at iteration 0
    mesh.bisect_all(&[ElementId(0)])?;
    Ok((mesh, data))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projected_load_is_close_to_the_load() {
        let (mesh, data) = benchmark::<f64>(3).unwrap();
        for e in mesh.active_elements() {
            let d = data.on_element(&mesh, e);
            let c = mesh.element_coords(e);
            let g = [(c[0][0] + c[1][0] + c[2][0]) / 3.0, (c[0][1] + c[1][1] + c[2][1]) / 3.0];
            let v = d.f.eval(d.frame.local(g));
            assert!((v - benchmark_load(g)).abs() < 0.3 * 2.0 * PI * PI, "{v}");
            let a = d.tensor_at(d.frame.local(g));
            assert!((a[0][0] - 1.0 - g[0]).abs() < 1e-12 && (a[1][1] - 1.0 - g[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn projection_preserves_the_mean() {
        let mesh = Mesh::new(benchmark_mesh(), 2).unwrap();
        let data = benchmark_data::<f64>(mesh.initial(), 2).unwrap();
        let rule = TriangleRule::with_exactness(12);
        for e in mesh.active_elements() {
            let d = data.on_element(&mesh, e);
            let q = ElementQuadrature::with_frame(&rule, &mesh.element_coords(e), d.frame);
            let a = q.integrate(|_, xi| d.f.eval(xi));
            let b = q.integrate(|x, _| benchmark_load(x));
            assert!((a - b).abs() < 1e-10);
        }
    }
}
