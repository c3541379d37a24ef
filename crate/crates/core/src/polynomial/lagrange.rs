//! One-dimensional Lagrange machinery on an edge parametrized by `t ∈ [0, 1]`,
//! computed exactly in rationals.

use crate::error::{AvemError, Result};
use crate::geometry_mesh::MAX_DEGREE;
use crate::scalar::Scalar;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};
use std::sync::OnceLock;

pub type Rational = Ratio<i64>;

fn r(n: i64, d: i64) -> Rational {
    Ratio::new(n, d)
}

/// Monomial coefficients (ascending powers of `t`) of the Lagrange basis
/// polynomial attached to `nodes[i]`.
pub fn lagrange_coefficients(nodes: &[Rational], i: usize) -> Vec<Rational> {
    let mut c = vec![Rational::one()];
    for (m, &xm) in nodes.iter().enumerate() {
        if m == i {
            continue;
        }
        let denom = nodes[i] - xm;
        let mut next = vec![Rational::zero(); c.len() + 1];
        for (p, &cp) in c.iter().enumerate() {
            next[p + 1] += cp / denom;
            next[p] -= cp * xm / denom;
        }
        c = next;
    }
    c
}

pub fn eval_coefficients(c: &[Rational], t: Rational) -> Rational {
    c.iter().rev().fold(Rational::zero(), |acc, &a| acc * t + a)
}

/// `∫_lo^hi Σ c_p t^p dt`.
pub fn integrate_coefficients(c: &[Rational], lo: Rational, hi: Rational) -> Rational {
    let mut s = Rational::zero();
    let (mut plo, mut phi) = (lo, hi);
    for (p, &a) in c.iter().enumerate() {
        s += a * (phi - plo) / Rational::from_integer(p as i64 + 1);
        plo *= lo;
        phi *= hi;
    }
    s
}

pub fn uniform_nodes(k: usize, lo: Rational, hi: Rational) -> Vec<Rational> {
    (0..=k)
        .map(|j| lo + (hi - lo) * r(j as i64, k as i64))
        .collect()
}

fn check_degree(k: usize) -> Result<()> {
    if k == 0 || k > MAX_DEGREE {
        Err(AvemError::UnsupportedDegree(k))
    } else {
        Ok(())
    }
}

fn compute_split(k: usize) -> Vec<Vec<Rational>> {
    let coarse = uniform_nodes(k, Rational::zero(), Rational::one());
    let basis: Vec<Vec<Rational>> = (0..=k).map(|n| lagrange_coefficients(&coarse, n)).collect();
    (1..=k)
        .map(|i| {
            let zeta = r(2 * i as i64 - 1, 2 * k as i64);
            basis.iter().map(|b| eval_coefficients(b, zeta)).collect()
        })
        .collect()
}

/// Weights expressing the `i`-th new midpoint-lattice value (row `i-1`) of a
/// degree-`k` polynomial through its values at the `k+1` coarse lattice points.
pub fn split_coefficients(k: usize) -> Result<&'static [Vec<Rational>]> {
    check_degree(k)?;
    static CACHE: [OnceLock<Vec<Vec<Rational>>>; MAX_DEGREE + 1] =
        [const { OnceLock::new() }; MAX_DEGREE + 1];
    Ok(CACHE[k].get_or_init(|| compute_split(k)))
}

pub fn split_coefficients_f64(k: usize) -> Result<Vec<Vec<f64>>> {
    Ok(split_coefficients(k)?
        .iter()
        .map(|row| row.iter().map(|a| a.to_f64().unwrap_or(f64::NAN)).collect())
        .collect())
}

/// Piecewise polynomial on the two halves of an edge that equals one at the
/// `i`-th new point and vanishes at every other point of the refined lattice.
#[derive(Clone, Debug)]
pub struct DetailFunction {
    pub k: usize,
    pub i: usize,
    left: Vec<Rational>,
    right: Vec<Rational>,
}

impl DetailFunction {
    pub fn new(k: usize, i: usize) -> Result<Self> {
        check_degree(k)?;
        if i == 0 || i > k {
            return Err(AvemError::InvalidArgument(format!(
                "detail index {i} outside 1..={k}"
            )));
        }
        let fine = 2 * k;
        let target = 2 * i - 1;
        let half = r(1, 2);
        let left_nodes = uniform_nodes(k, Rational::zero(), half);
        let right_nodes = uniform_nodes(k, half, Rational::one());
        let zero = vec![Rational::zero()];
        let left = if target <= k {
            lagrange_coefficients(&left_nodes, target)
        } else {
            zero.clone()
        };
        let right = if target >= k {
            lagrange_coefficients(&right_nodes, target - k)
        } else {
            zero
        };
        debug_assert!(target < fine);
        Ok(Self { k, i, left, right })
    }

    pub fn eval(&self, t: Rational) -> Rational {
        if t < Rational::zero() || t > Rational::one() {
            Rational::zero()
        } else if t <= r(1, 2) {
            eval_coefficients(&self.left, t)
        } else {
            eval_coefficients(&self.right, t)
        }
    }

    pub fn eval_f64(&self, t: f64) -> f64 {
        if !(-1e-14..=1.0 + 1e-14).contains(&t) {
            return 0.0;
        }
        let c = if t <= 0.5 { &self.left } else { &self.right };
        c.iter()
            .rev()
            .fold(0.0, |acc, a| acc * t + a.to_f64().unwrap_or(f64::NAN))
    }

    /// Exact integral over the parameter interval.
    pub fn integral(&self) -> Rational {
        let half = r(1, 2);
        integrate_coefficients(&self.left, Rational::zero(), half)
            + integrate_coefficients(&self.right, half, Rational::one())
    }
}

/// Values of the `k+1` Lagrange basis functions on equispaced nodes of `[0,1]` at `t`.
pub fn basis_values<T: Scalar>(k: usize, t: T) -> Vec<T> {
    let kk = T::of_usize(k);
    (0..=k)
        .map(|i| {
            let ti = T::of_usize(i) / kk;
            (0..=k)
                .filter(|&m| m != i)
                .map(|m| {
                    let tm = T::of_usize(m) / kk;
                    (t - tm) / (ti - tm)
                })
                .fold(T::one(), |a, b| a * b)
        })
        .collect()
}
