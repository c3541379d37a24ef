use super::monomial::Frame;
use crate::scalar::Scalar;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "Gauss rule needs at least one point");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p1 = z;
                p0 = 1.0;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    if n == 1 {
        x[0] = 0.0;
        w[0] = 2.0;
    }
    (x, w)
}

/// Rule on `[0, 1]` with weights summing to one.
#[derive(Clone, Debug)]
pub struct LineRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl LineRule {
    pub fn gauss(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        Self {
            points: x.iter().map(|t| 0.5 * (t + 1.0)).collect(),
            weights: w.iter().map(|w| 0.5 * w).collect(),
        }
    }

    /// Smallest Gauss rule integrating degree `deg` exactly.
    pub fn with_exactness(deg: usize) -> Self {
        Self::gauss(deg / 2 + 1)
    }
}

/// Rule on the reference triangle in barycentric coordinates, weights summing to one.
#[derive(Clone, Debug)]
pub struct TriangleRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    /// Collapsed tensor Gauss rule exact for polynomials of degree `deg`.
    pub fn with_exactness(deg: usize) -> Self {
        let n = (deg + 2).div_ceil(2);
        let (g, gw) = gauss_legendre(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for (i, &u) in g.iter().enumerate() {
            let u = 0.5 * (u + 1.0);
            for (j, &s) in g.iter().enumerate() {
                let s = 0.5 * (s + 1.0);
                let x = u * (1.0 - s);
                let y = s;
                points.push([1.0 - x - y, x, y]);
                // 0.25 maps [-1,1]² to [0,1]², the factor 2 normalizes the area 1/2
                weights.push(gw[i] * gw[j] * 0.25 * (1.0 - s) * 2.0);
            }
        }
        Self { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Quadrature rule mapped to a physical triangle.
#[derive(Clone, Debug)]
pub struct ElementQuadrature<T> {
    pub frame: Frame<T>,
    pub points: Vec<[T; 2]>,
    /// Scaled coordinates of the points in `frame`.
    pub local: Vec<[T; 2]>,
    /// Physical weights; they sum to the triangle area.
    pub weights: Vec<T>,
}

impl<T: Scalar> ElementQuadrature<T> {
    pub fn new(rule: &TriangleRule, verts: &[[T; 2]; 3]) -> Self {
        Self::with_frame(rule, verts, Frame::of_triangle(verts))
    }

    pub fn with_frame(rule: &TriangleRule, verts: &[[T; 2]; 3], frame: Frame<T>) -> Self {
        let area = ((verts[1][0] - verts[0][0]) * (verts[2][1] - verts[0][1])
            - (verts[1][1] - verts[0][1]) * (verts[2][0] - verts[0][0]))
            .abs()
            * T::lit(0.5);
        let mut points = Vec::with_capacity(rule.len());
        let mut local = Vec::with_capacity(rule.len());
        let mut weights = Vec::with_capacity(rule.len());
        for (b, &w) in rule.points.iter().zip(&rule.weights) {
            let l = b.map(T::lit);
            let x = [
                l[0] * verts[0][0] + l[1] * verts[1][0] + l[2] * verts[2][0],
                l[0] * verts[0][1] + l[1] * verts[1][1] + l[2] * verts[2][1],
            ];
            points.push(x);
            local.push(frame.local(x));
            weights.push(T::lit(w) * area);
        }
        Self {
            frame,
            points,
            local,
            weights,
        }
    }

    pub fn area(&self) -> T {
        self.weights.iter().copied().sum()
    }

    pub fn integrate(&self, mut f: impl FnMut([T; 2], [T; 2]) -> T) -> T {
        self.points
            .iter()
            .zip(&self.local)
            .zip(&self.weights)
            .map(|((&x, &xi), &w)| w * f(x, xi))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|i| i as f64).product()
    }

    #[test]
    fn gauss_integrates_monomials() {
        for n in 1..8 {
            let r = LineRule::gauss(n);
            for p in 0..2 * n {
                let q: f64 = r.points.iter().zip(&r.weights).map(|(t, w)| w * t.powi(p as i32)).sum();
                assert!((q - 1.0 / (p + 1) as f64).abs() < 1e-14, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn triangle_rule_matches_barycentric_formula() {
        // ∫_T λ1^a λ2^b λ3^c = 2|T| a! b! c! / (a+b+c+2)!
        for deg in 0..=14 {
            let r = TriangleRule::with_exactness(deg);
            assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            for a in 0..=deg {
                for b in 0..=deg - a {
                    let c = deg - a - b;
                    let q: f64 = r
                        .points
                        .iter()
                        .zip(&r.weights)
                        .map(|(l, w)| w * l[0].powi(a as i32) * l[1].powi(b as i32) * l[2].powi(c as i32))
                        .sum();
                    let exact = 2.0 * factorial(a) * factorial(b) * factorial(c) / factorial(deg + 2);
                    assert!((q - exact).abs() < 1e-13, "deg={deg} ({a},{b},{c})");
                }
            }
        }
    }

    #[test]
    fn element_weights_sum_to_area() {
        let v = [[0.0, 0.0], [2.0, 0.5], [0.25, 1.5]];
        let q = ElementQuadrature::<f64>::new(&TriangleRule::with_exactness(6), &v);
        let area = 0.5 * (2.0 * 1.5 - 0.5 * 0.25);
        assert!((q.area() - area).abs() < 1e-14);
        let qf = ElementQuadrature::<f32>::new(
            &TriangleRule::with_exactness(6),
            &[[0.0, 0.0], [2.0, 0.5], [0.25, 1.5]],
        );
        assert!((qf.area() - area as f32).abs() < 1e-5);
    }
}
