use crate::error::{AvemError, Result};
use crate::scalar::Scalar;
use std::fmt::Write as _;

/// Square matrix in compressed sparse row form.
#[derive(Clone, Debug)]
pub struct CsrMatrix<T> {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    /// Duplicate entries are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, T)>) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; n + 1];
        let mut cols: Vec<usize> = Vec::with_capacity(triplets.len());
        let mut vals: Vec<T> = Vec::with_capacity(triplets.len());
        let mut last = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *vals.last_mut().expect("entry exists") += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[span.clone()].binary_search(&c) {
            Ok(i) => self.vals[span.start + i],
            Err(_) => T::zero(),
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.n).map(|r| self.get(r, r)).collect()
    }

    pub fn symmetric_defect(&self) -> T {
        let mut m = T::zero();
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                m = m.max((v - self.get(c, r)).abs());
            }
        }
        m
    }

    /// Principal submatrix on the rows/columns with `map[i] = Some(new index)`.
    pub fn restrict(&self, map: &[Option<usize>], n_new: usize) -> Self {
        let mut trip = Vec::with_capacity(self.nnz());
        for r in 0..self.n {
            if let Some(rn) = map[r] {
                for (c, v) in self.row(r) {
                    if let Some(cn) = map[c] {
                        trip.push((rn, cn, v));
                    }
                }
            }
        }
        Self::from_triplets(n_new, trip)
    }

    /// One `row col value` line per stored entry, 1-based, after a size header.
    pub fn to_coordinate_text(&self) -> String {
        let mut s = format!("{} {} {}\n", self.n, self.n, self.nnz());
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                let _ = writeln!(s, "{} {} {:e}", r + 1, c + 1, v.as_f64());
            }
        }
        s
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    pub rel_tol: f64,
    /// Iteration cap as a multiple of the system size.
    pub cap_factor: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            cap_factor: 20,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub iterations: usize,
    pub rel_residual: f64,
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Jacobi-preconditioned conjugate gradients.
pub fn pcg<T: Scalar>(a: &CsrMatrix<T>, b: &[T], opts: SolverOptions) -> Result<(Vec<T>, SolveReport)> {
    let n = a.dim();
    if b.len() != n {
        return Err(AvemError::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![T::zero(); n];
    if bnorm == T::zero() {
        return Ok((x, SolveReport { iterations: 0, rel_residual: 0.0 }));
    }
    // single precision cannot reach the double-precision default
    let tol = T::lit(opts.rel_tol.max(10.0 * T::epsilon().as_f64()));
    let dinv: Vec<T> = a
        .diagonal()
        .into_iter()
        .map(|d| if d > T::zero() { T::one() / d } else { T::one() })
        .collect();
    let mut r = b.to_vec();
    let mut z: Vec<T> = r.iter().zip(&dinv).map(|(&ri, &di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let cap = (opts.cap_factor * n).max(10);
    let mut history = Vec::new();
    for it in 1..=cap {
        let ap = a.mul_vec(&p);
        let pap = dot(&p, &ap);
        if !(pap > T::zero()) {
            return Err(AvemError::NotPositiveDefinite);
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rel = dot(&r, &r).sqrt() / bnorm;
        history.push(rel.as_f64());
        if rel <= tol {
            return Ok((
                x,
                SolveReport {
                    iterations: it,
                    rel_residual: rel.as_f64(),
                },
            ));
        }
        for i in 0..n {
            z[i] = r[i] * dinv[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(AvemError::SolverFailure {
        iterations: cap,
        residual: history.last().copied().unwrap_or(f64::NAN),
        history,
    })
}
