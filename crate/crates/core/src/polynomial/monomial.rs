use crate::scalar::Scalar;

/// Number of monomials of total degree at most `p` in two variables.
#[inline]
pub const fn dim(p: usize) -> usize {
    (p + 1) * (p + 2) / 2
}

/// Position of `ξ^a η^b` in the graded ordering.
#[inline]
pub const fn index(a: usize, b: usize) -> usize {
    let d = a + b;
    d * (d + 1) / 2 + b
}

/// Exponent pairs in the graded ordering.
pub fn exponents(p: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(dim(p));
    for d in 0..=p {
        for b in 0..=d {
            out.push((d - b, b));
        }
    }
    out
}

/// Scaling frame `ξ = (x − center) / h`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frame<T> {
    pub center: [T; 2],
    pub h: T,
}

impl<T: Scalar> Frame<T> {
    pub fn global() -> Self {
        Self {
            center: [T::zero(); 2],
            h: T::one(),
        }
    }

    /// Centroid and square root of the area of a triangle.
    pub fn of_triangle(p: &[[T; 2]; 3]) -> Self {
        let three = T::lit(3.0);
        let area = ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
            - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]))
            .abs()
            * T::lit(0.5);
        Self {
            center: [
                (p[0][0] + p[1][0] + p[2][0]) / three,
                (p[0][1] + p[1][1] + p[2][1]) / three,
            ],
            h: area.sqrt(),
        }
    }

    #[inline]
    pub fn local(&self, x: [T; 2]) -> [T; 2] {
        [(x[0] - self.center[0]) / self.h, (x[1] - self.center[1]) / self.h]
    }
}

pub fn values<T: Scalar>(p: usize, xi: [T; 2]) -> Vec<T> {
    let mut px = vec![T::one(); p + 1];
    let mut py = vec![T::one(); p + 1];
    for i in 1..=p {
        px[i] = px[i - 1] * xi[0];
        py[i] = py[i - 1] * xi[1];
    }
    let mut out = Vec::with_capacity(dim(p));
    for d in 0..=p {
        for b in 0..=d {
            out.push(px[d - b] * py[b]);
        }
    }
    out
}

/// Gradients with respect to the scaled variable.
pub fn gradients<T: Scalar>(p: usize, xi: [T; 2]) -> Vec<[T; 2]> {
    let mut px = vec![T::one(); p + 1];
    let mut py = vec![T::one(); p + 1];
    for i in 1..=p {
        px[i] = px[i - 1] * xi[0];
        py[i] = py[i - 1] * xi[1];
    }
    let mut out = Vec::with_capacity(dim(p));
    for d in 0..=p {
        for b in 0..=d {
            let a = d - b;
            let gx = if a > 0 { T::of_usize(a) * px[a - 1] * py[b] } else { T::zero() };
            let gy = if b > 0 { T::of_usize(b) * px[a] * py[b - 1] } else { T::zero() };
            out.push([gx, gy]);
        }
    }
    out
}

fn binomial_row<T: Scalar>(n: usize) -> Vec<T> {
    let mut row = vec![T::one(); n + 1];
    let mut c = T::one();
    for (k, r) in row.iter_mut().enumerate() {
        *r = c;
        c = c * T::of_usize(n - k) / T::of_usize(k + 1);
    }
    row
}

/// Polynomial stored by its coefficients in a scaled monomial basis.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly<T> {
    degree: usize,
    coeffs: Vec<T>,
}

impl<T: Scalar> Poly<T> {
    pub fn zero(degree: usize) -> Self {
        Self {
            degree,
            coeffs: vec![T::zero(); dim(degree)],
        }
    }

    pub fn constant(c: T) -> Self {
        Self {
            degree: 0,
            coeffs: vec![c],
        }
    }

    /// Coefficients beyond a full degree block are rejected.
    pub fn from_coeffs(coeffs: Vec<T>) -> Option<Self> {
        let mut degree = 0;
        while dim(degree) < coeffs.len() {
            degree += 1;
        }
        (dim(degree) == coeffs.len()).then_some(Self { degree, coeffs })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [T] {
        &mut self.coeffs
    }

    pub fn coeff(&self, a: usize, b: usize) -> T {
        let i = index(a, b);
        if i < self.coeffs.len() {
            self.coeffs[i]
        } else {
            T::zero()
        }
    }

    pub fn eval(&self, xi: [T; 2]) -> T {
        values(self.degree, xi)
            .iter()
            .zip(&self.coeffs)
            .map(|(&m, &c)| m * c)
            .sum()
    }

    pub fn eval_at(&self, frame: &Frame<T>, x: [T; 2]) -> T {
        self.eval(frame.local(x))
    }

    /// Raises or truncates the stored degree; truncation drops higher coefficients.
    pub fn with_degree(&self, degree: usize) -> Self {
        let mut coeffs = vec![T::zero(); dim(degree)];
        let n = coeffs.len().min(self.coeffs.len());
        coeffs[..n].copy_from_slice(&self.coeffs[..n]);
        Self { degree, coeffs }
    }

    pub fn add(&self, o: &Self) -> Self {
        let d = self.degree.max(o.degree);
        let mut out = self.with_degree(d);
        for (c, &v) in out.coeffs.iter_mut().zip(&o.coeffs) {
            *c += v;
        }
        out
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(-T::one()))
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|&c| c * s).collect(),
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let d = self.degree + o.degree;
        let mut out = Self::zero(d);
        let ea = exponents(self.degree);
        let eb = exponents(o.degree);
        for (i, &(a1, b1)) in ea.iter().enumerate() {
            let ci = self.coeffs[i];
            if ci == T::zero() {
                continue;
            }
            for (j, &(a2, b2)) in eb.iter().enumerate() {
                out.coeffs[index(a1 + a2, b1 + b2)] += ci * o.coeffs[j];
            }
        }
        out
    }

    /// Derivative with respect to the scaled variable `ξ_dir`.
    pub fn diff(&self, dir: usize) -> Self {
        let d = self.degree.saturating_sub(1);
        let mut out = Self::zero(d);
        for (i, &(a, b)) in exponents(self.degree).iter().enumerate() {
            let c = self.coeffs[i];
            match dir {
                0 if a > 0 => out.coeffs[index(a - 1, b)] += c * T::of_usize(a),
                1 if b > 0 => out.coeffs[index(a, b - 1)] += c * T::of_usize(b),
                _ => {}
            }
        }
        out
    }

    /// Physical derivative `∂/∂x_dir` in the same frame.
    pub fn grad_component(&self, dir: usize, frame: &Frame<T>) -> Self {
        self.diff(dir).scale(T::one() / frame.h)
    }

    /// Re-expresses the polynomial in another frame.
    pub fn reframe(&self, from: &Frame<T>, to: &Frame<T>) -> Self {
        // ξ_from = s + r ξ_to
        let r = to.h / from.h;
        let s = [
            (to.center[0] - from.center[0]) / from.h,
            (to.center[1] - from.center[1]) / from.h,
        ];
        let p = self.degree;
        let mut spow = [vec![T::one(); p + 1], vec![T::one(); p + 1]];
        let mut rpow = vec![T::one(); p + 1];
        for i in 1..=p {
            spow[0][i] = spow[0][i - 1] * s[0];
            spow[1][i] = spow[1][i - 1] * s[1];
            rpow[i] = rpow[i - 1] * r;
        }
        let binom: Vec<Vec<T>> = (0..=p).map(binomial_row).collect();
        let mut out = Self::zero(p);
        for (i, &(a, b)) in exponents(p).iter().enumerate() {
            let c = self.coeffs[i];
            if c == T::zero() {
                continue;
            }
            for ia in 0..=a {
                let fa = binom[a][ia] * spow[0][a - ia] * rpow[ia];
                for ib in 0..=b {
                    let fb = binom[b][ib] * spow[1][b - ib] * rpow[ib];
                    out.coeffs[index(ia, ib)] += c * fa * fb;
                }
            }
        }
        out
    }

    pub fn max_abs_coeff(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |m, &c| m.max(c.abs()))
    }

    pub fn cast<U: Scalar>(&self) -> Poly<U> {
        Poly {
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|&c| U::lit(c.as_f64())).collect(),
        }
    }
}
