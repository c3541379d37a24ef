use super::{GalerkinRun, IterationRecord, ReductionSample};
use crate::assembly_solve::{solve_conforming_reference, ReferenceSolution, SolverOptions};
use crate::error::Result;
use crate::polynomial::{ElementQuadrature, TriangleRule};
use crate::problem_data::PiecewiseData;
use crate::scalar::Scalar;
use rayon::prelude::*;

/// Conforming reference on the final mesh refined twice, then the squared energy
/// distance of every iterate's projections to it.
pub fn surrogate_errors<T: Scalar>(
    run: &GalerkinRun<T>,
    data: &PiecewiseData<T>,
) -> Result<(ReferenceSolution<T>, Vec<f64>)> {
    let mut fine = run.last().mesh.clone();
    fine.refine_uniform(2)?;
    fine.make_conforming()?;
    let opts = SolverOptions {
        rel_tol: 1e-12_f64.max(10.0 * T::epsilon().as_f64()),
        ..SolverOptions::default()
    };
    let reference = solve_conforming_reference(fine, data, opts)?;
    let errs = run
        .records
        .iter()
        .map(|r| energy_distance(&reference, r, data))
        .collect::<Result<Vec<_>>>()?;
    Ok((reference, errs))
}

fn energy_distance<T: Scalar>(
    reference: &ReferenceSolution<T>,
    record: &IterationRecord<T>,
    data: &PiecewiseData<T>,
) -> Result<f64> {
    let k = reference.mesh.k();
    let rule = TriangleRule::with_exactness(3 * k);
    let parts: Vec<f64> = reference
        .elements
        .par_iter()
        .map(|el| {
            let anc = reference
                .mesh
                .ancestor_in(el.element, &record.mesh)
                .expect("reference mesh refines every iterate");
            let p = record.projected.get(anc).expect("ancestor is active");
            let d = data.on_element(&reference.mesh, el.element);
            let q = ElementQuadrature::with_frame(&rule, &el.vertices, d.frame);
            let g = [el.poly.grad_component(0, &el.frame), el.poly.grad_component(1, &el.frame)];
            q.integrate(|x, xi| {
                let e = [
                    g[0].eval_at(&el.frame, x) - p.gradient[0].eval_at(&p.frame, x),
                    g[1].eval_at(&el.frame, x) - p.gradient[1].eval_at(&p.frame, x),
                ];
                let a = d.tensor_at(xi);
                let v = el.poly.eval_at(&el.frame, x) - p.value.eval_at(&p.frame, x);
                e[0] * (a[0][0] * e[0] + a[0][1] * e[1]) + e[1] * (a[1][0] * e[0] + a[1][1] * e[1]) + d.c.eval(xi) * v * v
            })
            .as_f64()
        })
        .collect();
    Ok(parts.iter().sum::<f64>().max(0.0))
}

/// Energy distance between two iterates through their own projections, integrated
/// over the finer mesh.
pub fn projection_distance_sq<T: Scalar>(
    fine: &IterationRecord<T>,
    coarse: &IterationRecord<T>,
    data: &PiecewiseData<T>,
) -> Result<f64> {
    let k = fine.mesh.k();
    let rule = TriangleRule::with_exactness(3 * k);
    let active: Vec<_> = fine.mesh.active_elements().collect();
    let parts: Vec<f64> = active
        .par_iter()
        .map(|&e| {
            let anc = fine.mesh.ancestor_in(e, &coarse.mesh).expect("iterates are nested");
            let p = fine.projected.get(e).expect("active");
            let q0 = coarse.projected.get(anc).expect("active");
            let d = data.on_element(&fine.mesh, e);
            let verts = fine.mesh.element_coords(e).map(|x| x.map(T::lit));
            let q = ElementQuadrature::with_frame(&rule, &verts, d.frame);
            q.integrate(|x, xi| {
                let g = [
                    p.gradient[0].eval_at(&p.frame, x) - q0.gradient[0].eval_at(&q0.frame, x),
                    p.gradient[1].eval_at(&p.frame, x) - q0.gradient[1].eval_at(&q0.frame, x),
                ];
                let a = d.tensor_at(xi);
                let v = p.value.eval_at(&p.frame, x) - q0.value.eval_at(&q0.frame, x);
                g[0] * (a[0][0] * g[0] + a[0][1] * g[1]) + g[1] * (a[1][0] * g[0] + a[1][1] * g[1]) + d.c.eval(xi) * v * v
            })
            .as_f64()
        })
        .collect();
    Ok(parts.iter().sum::<f64>().max(0.0))
}

/// Slack constant of `after ≤ ρ·before + c·S^{1/2}` fitted over a set of samples.
#[derive(Clone, Debug, PartialEq)]
pub struct ReductionFit {
    pub rho: f64,
    pub samples: usize,
    /// Smallest `c` covering every sample whose patch stabilization is above rounding.
    pub c: f64,
    /// Samples with `S` at rounding level, where no finite `c` helps.
    pub rounding_level: usize,
    /// Rounding-level samples with `after > ρ·before`.
    pub violations: usize,
    /// Largest `after / before` among the violations.
    pub worst_ratio: f64,
}

/// `S` counts as zero below `floor · before²`.
pub fn fit_reduction(samples: &[ReductionSample], rho: f64, floor: f64) -> ReductionFit {
    let mut fit = ReductionFit {
        rho,
        samples: samples.len(),
        c: 0.0,
        rounding_level: 0,
        violations: 0,
        worst_ratio: 0.0,
    };
    for s in samples {
        let excess = s.after - rho * s.before;
        if s.stab_patch <= floor * s.before * s.before {
            fit.rounding_level += 1;
            if excess > 0.0 {
                fit.violations += 1;
                fit.worst_ratio = fit.worst_ratio.max(s.after / s.before);
            }
        } else if excess > 0.0 {
            fit.c = fit.c.max(excess / s.stab_patch.sqrt());
        }
    }
    fit
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContractionRow {
    pub iter: usize,
    pub dofs: usize,
    pub elements: usize,
    pub eta_sq: f64,
    pub psi_sq: f64,
    pub stab: f64,
    pub err_sq: f64,
    pub q: f64,
    /// `|||u_j − u_{j−1}|||²`, absent at iteration 0.
    pub update_sq: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContractionLog {
    pub beta: f64,
    pub zeta: f64,
    pub gamma: f64,
    pub rows: Vec<ContractionRow>,
}

impl ContractionLog {
    /// `errs` holds one surrogate error per record.
    pub fn new<T: Scalar>(run: &GalerkinRun<T>, errs: &[f64], beta: f64, zeta: f64, gamma: f64) -> Self {
        let rows = run
            .records
            .iter()
            .zip(errs)
            .map(|(r, &err_sq)| {
                let eta_sq = r.indicators.eta_sq.as_f64();
                let psi_sq = r.indicators.psi_sq().as_f64();
                ContractionRow {
                    iter: r.iter,
                    dofs: r.n_dofs(),
                    elements: r.mesh.n_active(),
                    eta_sq,
                    psi_sq,
                    stab: r.indicators.stab.as_f64(),
                    err_sq,
                    q: err_sq + beta * eta_sq + zeta * psi_sq,
                    update_sq: r.update_energy.map(|e| e.as_f64().powi(2)),
                }
            })
            .collect();
        Self { beta, zeta, gamma, rows }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContractionSummary {
    /// `α̂_j = Q_{j+1} / Q_j`.
    pub alpha: Vec<f64>,
    pub max: f64,
    pub mean: f64,
    pub geometric_mean: f64,
    /// Steps with `α̂_j ≥ 1`.
    pub flagged: Vec<usize>,
    /// Shares of `err²`, `βη²`, `ζΨ²` in `Q_j`.
    pub shares: Vec<[f64; 3]>,
    /// Steps where `err²_* ≤ (1+4δ) err² − E² + 2δ(Ψ² + Ψ²_*)` fails, with `δ = 1/4`.
    pub orthogonality_violations: Vec<usize>,
    /// `γ² S / (η² + Ψ²)` per iteration.
    pub stab_ratio: Vec<f64>,
}

pub fn contraction_monitor(log: &ContractionLog) -> ContractionSummary {
    let rows = &log.rows;
    let alpha: Vec<f64> = rows
        .windows(2)
        .map(|w| if w[0].q > 0.0 { w[1].q / w[0].q } else { 1.0 })
        .collect();
    let n = alpha.len().max(1) as f64;
    let max = alpha.iter().copied().fold(f64::NAN, f64::max);
    let mean = alpha.iter().sum::<f64>() / n;
    let geometric_mean = (alpha.iter().map(|a| a.max(f64::MIN_POSITIVE).ln()).sum::<f64>() / n).exp();
    let flagged = alpha
        .iter()
        .enumerate()
        .filter(|(_, &a)| !(a < 1.0))
        .map(|(j, _)| j)
        .collect();
    let shares = rows
        .iter()
        .map(|r| {
            if r.q > 0.0 {
                [r.err_sq / r.q, log.beta * r.eta_sq / r.q, log.zeta * r.psi_sq / r.q]
            } else {
                [0.0; 3]
            }
        })
        .collect();
    let delta = 0.25;
    let orthogonality_violations = rows
        .windows(2)
        .enumerate()
        .filter(|(_, w)| {
            let e2 = w[1].update_sq.unwrap_or(0.0);
            let bound = (1.0 + 4.0 * delta) * w[0].err_sq - e2 + 2.0 * delta * (w[0].psi_sq + w[1].psi_sq);
            w[1].err_sq > bound * (1.0 + 1e-9) + 1e-300
        })
        .map(|(j, _)| j)
        .collect();
    let stab_ratio = rows
        .iter()
        .map(|r| {
            let est = r.eta_sq + r.psi_sq;
            if est > 0.0 {
                log.gamma * log.gamma * r.stab / est
            } else {
                0.0
            }
        })
        .collect();
    ContractionSummary {
        alpha,
        max,
        mean,
        geometric_mean,
        flagged,
        shares,
        orthogonality_violations,
        stab_ratio,
    }
}

/// Run log with columns `iter,dofs,elements,eta_sq,psi_sq,stab,err_sq_surrogate,Q,alpha_hat`.
pub fn convergence_csv(log: &ContractionLog, summary: &ContractionSummary) -> String {
    let mut s = String::from("iter,dofs,elements,eta_sq,psi_sq,stab,err_sq_surrogate,Q,alpha_hat\n");
    for (j, r) in log.rows.iter().enumerate() {
        let alpha = summary.alpha.get(j).map(|a| format!("{a:.6e}")).unwrap_or_default();
        s.push_str(&format!(
            "{},{},{},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{}\n",
            r.iter, r.dofs, r.elements, r.eta_sq, r.psi_sq, r.stab, r.err_sq, r.q, alpha
        ));
    }
    s
}

impl ContractionSummary {
    /// Per-step table with component shares and flags.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("step,alpha_hat,share_err,share_eta,share_psi,flag,orthogonality_ok\n");
        for (j, a) in self.alpha.iter().enumerate() {
            let sh = self.shares[j];
            s.push_str(&format!(
                "{j},{a:.6e},{:.4},{:.4},{:.4},{},{}\n",
                sh[0],
                sh[1],
                sh[2],
                u8::from(!(*a < 1.0)),
                u8::from(!self.orthogonality_violations.contains(&j))
            ));
        }
        s.push_str(&format!(
            "# max={:.6e} mean={:.6e} geometric_mean={:.6e}\n",
            self.max, self.mean, self.geometric_mean
        ));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(iter: usize, q: f64) -> ContractionRow {
        ContractionRow {
            iter,
            dofs: 1,
            elements: 1,
            eta_sq: q,
            psi_sq: 0.0,
            stab: 0.0,
            err_sq: 0.0,
            q,
            update_sq: None,
        }
    }

    #[test]
    fn reduction_fit_separates_rounding_level_samples() {
        let sample = |before: f64, after: f64, stab_patch: f64| ReductionSample {
            iter: 0,
            element: crate::geometry_mesh::ElementId(0),
            before,
            after,
            stab_patch,
        };
        let fit = fit_reduction(
            &[sample(1.0, 0.5, 0.0), sample(1.0, 1.19, 0.04), sample(1.0, 1.2, 1e-30)],
            0.99,
            1e-14,
        );
        assert!((fit.c - 1.0).abs() < 1e-12);
        assert_eq!((fit.rounding_level, fit.violations), (2, 1));
        assert!((fit.worst_ratio - 1.2).abs() < 1e-15);
    }

    #[test]
    fn stagnant_run_is_flagged() {
        let log = ContractionLog {
            beta: 1.0,
            zeta: 1.0,
            gamma: 10.0,
            rows: vec![row(0, 2.0), row(1, 2.0), row(2, 1.0)],
        };
        let s = contraction_monitor(&log);
        assert_eq!(s.alpha, vec![1.0, 0.5]);
        assert_eq!(s.flagged, vec![0]);
        assert_eq!(s.max, 1.0);
        assert!((s.geometric_mean - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn shares_sum_to_one() {
        let mut r = row(0, 0.0);
        r.err_sq = 1.0;
        r.eta_sq = 2.0;
        r.psi_sq = 3.0;
        r.q = 1.0 + 2.0 * 2.0 + 3.0;
        let log = ContractionLog {
            beta: 2.0,
            zeta: 1.0,
            gamma: 10.0,
            rows: vec![r],
        };
        let s = contraction_monitor(&log);
        assert!((s.shares[0].iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(s.alpha.is_empty());
    }

    #[test]
    fn csv_has_run_log_header() {
        let log = ContractionLog {
            beta: 1.0,
            zeta: 1.0,
            gamma: 10.0,
            rows: vec![row(0, 2.0), row(1, 1.0)],
        };
        let csv = convergence_csv(&log, &contraction_monitor(&log));
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "iter,dofs,elements,eta_sq,psi_sq,stab,err_sq_surrogate,Q,alpha_hat"
        );
        assert!(lines.next().unwrap().ends_with(",5.000000e-1"));
        assert!(lines.next().unwrap().ends_with(','));
    }
}
