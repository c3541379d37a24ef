use super::monomial::{dim, values, Poly};
use super::quadrature::ElementQuadrature;
use crate::dense::{Cholesky, Matrix};
use crate::error::{AvemError, Result};
use crate::scalar::Scalar;

pub const CONDITION_LIMIT: f64 = 1e12;

/// Mass matrix of the scaled monomials of degree ≤ `p`.
pub fn gram<T: Scalar>(q: &ElementQuadrature<T>, p: usize) -> Matrix<T> {
    let n = dim(p);
    let mut h = Matrix::zeros(n, n);
    for (xi, &w) in q.local.iter().zip(&q.weights) {
        let m = values(p, *xi);
        for i in 0..n {
            let wi = w * m[i];
            for j in 0..=i {
                h[(i, j)] += wi * m[j];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            h[(j, i)] = h[(i, j)];
        }
    }
    h
}

/// Cholesky factor with a conditioning guard.
pub fn factor_checked<T: Scalar>(h: &Matrix<T>, element: usize) -> Result<Cholesky<T>> {
    let c = h.cholesky().map_err(|_| AvemError::IllConditioned {
        element,
        condition: f64::INFINITY,
    })?;
    let cond = c.condition_estimate().as_f64();
    if cond > CONDITION_LIMIT {
        return Err(AvemError::IllConditioned {
            element,
            condition: cond,
        });
    }
    Ok(c)
}

/// L² projection onto degree `p` of a function sampled at the quadrature points.
pub fn project_samples<T: Scalar>(
    q: &ElementQuadrature<T>,
    samples: &[T],
    p: usize,
    element: usize,
) -> Result<Poly<T>> {
    if samples.len() != q.points.len() {
        return Err(AvemError::DimensionMismatch {
            expected: q.points.len(),
            got: samples.len(),
        });
    }
    let n = dim(p);
    let mut rhs = vec![T::zero(); n];
    for ((xi, &w), &f) in q.local.iter().zip(&q.weights).zip(samples) {
        for (r, m) in rhs.iter_mut().zip(values(p, *xi)) {
            *r += w * f * m;
        }
    }
    let c = factor_checked(&gram(q, p), element)?;
    Ok(Poly::from_coeffs(c.solve_vec(&rhs)).expect("full coefficient block"))
}

pub fn project_fn<T: Scalar>(
    q: &ElementQuadrature<T>,
    f: impl Fn([T; 2]) -> T,
    p: usize,
    element: usize,
) -> Result<Poly<T>> {
    let samples: Vec<T> = q.points.iter().map(|&x| f(x)).collect();
    project_samples(q, &samples, p, element)
}

/// `∫ p²` over the element.
pub fn l2_norm_sq<T: Scalar>(q: &ElementQuadrature<T>, p: &Poly<T>) -> T {
    q.integrate(|_, xi| {
        let v = p.eval(xi);
        v * v
    })
}
