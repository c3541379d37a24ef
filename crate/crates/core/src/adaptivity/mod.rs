//! Marking, refinement and the solve–estimate–mark–refine loop.

pub mod benchmark;
mod monitor;

pub use monitor::{
    contraction_monitor, convergence_csv, fit_reduction, projection_distance_sq, surrogate_errors, ContractionLog, ContractionRow,
    ContractionSummary, ReductionFit,
};

use crate::analysis_oracles::minimal_levels;
use crate::assembly_solve::{prolong_local, Discretization, GlobalDofMap, SolveReport, SolverOptions};
use crate::error::{AvemError, Result};
use crate::estimators::{estimate, neighbor_across, IndicatorSet};
use crate::geometry_mesh::{ElementId, Mesh};
use crate::polynomial::{Frame, Poly};
use crate::problem_data::PiecewiseData;
use crate::scalar::Scalar;
use std::collections::HashMap;

/// Elements selected by the bulk criterion.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkSet {
    pub elements: Vec<ElementId>,
    pub theta: f64,
    /// Share of `η² + Ψ²` carried by the marked elements.
    pub fraction: f64,
}

/// Greedy bulk marking by decreasing `η²(E) + Ψ²(E)`, ties broken by element id.
pub fn mark<T: Scalar>(indicators: &IndicatorSet<T>, theta: f64) -> Result<MarkSet> {
    if indicators.elements.is_empty() {
        return Err(AvemError::InvalidArgument("empty indicator set".into()));
    }
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(AvemError::InvalidArgument(format!("theta = {theta} outside (0, 1]")));
    }
    let mut order: Vec<(f64, ElementId)> = indicators
        .elements
        .iter()
        .map(|i| (i.total().as_f64(), i.element))
        .collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let total = indicators.total().as_f64();
    let goal = theta * total;
    let mut acc = 0.0;
    let mut elements = Vec::new();
    for (v, e) in order {
        if acc >= goal || v <= 0.0 {
            break;
        }
        acc += v;
        elements.push(e);
    }
    Ok(MarkSet {
        elements,
        theta,
        fraction: if total > 0.0 { acc / total } else { 1.0 },
    })
}

/// Bisection count for elements dominated by the inconsistency term.
pub fn default_levels(k: usize) -> Result<usize> {
    match k {
        2 | 3 => Ok(2),
        _ => minimal_levels(k, 6),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RefineReport {
    pub single: usize,
    pub multiple: usize,
    pub admissibility_bisections: usize,
}

/// Bisects each marked element once if `η ≥ Ψ`, otherwise `levels` times uniformly,
/// then restores `λ ≤ lambda_cap`.
pub fn refine<T: Scalar>(
    mesh: &mut Mesh,
    marks: &MarkSet,
    indicators: &IndicatorSet<T>,
    lambda_cap: u32,
    levels: usize,
) -> Result<RefineReport> {
    let by_id: HashMap<ElementId, usize> = indicators
        .elements
        .iter()
        .enumerate()
        .map(|(i, e)| (e.element, i))
        .collect();
    let mut report = RefineReport {
        single: 0,
        multiple: 0,
        admissibility_bisections: 0,
    };
    for &e in &marks.elements {
        let ind = &indicators.elements[*by_id
            .get(&e)
            .ok_or_else(|| AvemError::InvalidArgument(format!("marked element {e} has no indicator")))?];
        if !mesh.element(e).active {
            return Err(AvemError::InvalidArgument(format!("marked element {e} is not active")));
        }
        let depth = if ind.eta_sq.sqrt() >= ind.psi_sq().sqrt() {
            report.single += 1;
            1
        } else {
            report.multiple += 1;
            levels
        };
        let mut current = vec![e];
        for _ in 0..depth {
            let mut next = Vec::with_capacity(2 * current.len());
            for c in current {
                next.extend(mesh.bisect(c)?);
            }
            current = next;
        }
    }
    mesh.refresh_lambda()?;
    report.admissibility_bisections = mesh.enforce_admissibility(lambda_cap)?;
    Ok(report)
}

#[derive(Clone, Debug)]
pub struct GalerkinConfig {
    pub theta: f64,
    pub gamma: f64,
    pub eps: f64,
    pub lambda_cap: u32,
    /// Uniform levels for inconsistency-dominated elements; derived from `k` if absent.
    pub levels: Option<usize>,
    /// Maximum number of solve–estimate passes.
    pub max_iters: usize,
    pub solver: SolverOptions,
    /// Records the post-refinement indicators of the prolonged solution.
    pub audit_reduction: bool,
}

impl Default for GalerkinConfig {
    fn default() -> Self {
        Self {
            theta: 0.5,
            gamma: 10.0,
            eps: 1e-3,
            lambda_cap: 3,
            levels: None,
            max_iters: 30,
            solver: SolverOptions::default(),
            audit_reduction: false,
        }
    }
}

impl GalerkinConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(AvemError::InvalidArgument(format!("theta = {} outside (0, 1)", self.theta)));
        }
        if !(self.gamma >= 1.0) {
            return Err(AvemError::InvalidArgument(format!("gamma = {} below 1", self.gamma)));
        }
        if !(self.eps > 0.0) {
            return Err(AvemError::InvalidArgument(format!("eps = {} must be positive", self.eps)));
        }
        if self.lambda_cap < 1 {
            return Err(AvemError::InvalidArgument("lambda cap must be at least 1".into()));
        }
        if self.max_iters == 0 {
            return Err(AvemError::InvalidArgument("at least one iteration is required".into()));
        }
        Ok(())
    }
}

/// Projections of a discrete solution, per element of the mesh it lives on.
#[derive(Clone, Debug)]
pub struct ProjectedElement<T> {
    pub frame: Frame<T>,
    pub value: Poly<T>,
    pub gradient: [Poly<T>; 2],
}

#[derive(Clone, Debug)]
pub struct ProjectedSolution<T> {
    elements: Vec<Option<ProjectedElement<T>>>,
}

impl<T: Scalar> ProjectedSolution<T> {
    pub fn new(disc: &Discretization<T>, u: &[T]) -> Result<Self> {
        let n = disc.ops.iter().map(|o| o.element.index() + 1).max().unwrap_or(0);
        let mut elements = vec![None; n];
        for (s, ops) in disc.ops.iter().enumerate() {
            let v = disc.local_values(s, u);
            elements[ops.element.index()] = Some(ProjectedElement {
                frame: ops.frame,
                value: ops.apply_p0(&v)?,
                gradient: ops.apply_p0_grad(&v)?,
            });
        }
        Ok(Self { elements })
    }

    pub fn get(&self, e: ElementId) -> Option<&ProjectedElement<T>> {
        self.elements.get(e.index()).and_then(Option::as_ref)
    }
}

#[derive(Clone, Debug)]
pub struct IterationRecord<T> {
    pub iter: usize,
    pub mesh: Mesh,
    pub dof_map: GlobalDofMap,
    pub solution: Vec<T>,
    pub projected: ProjectedSolution<T>,
    pub indicators: IndicatorSet<T>,
    pub marks: Option<MarkSet>,
    pub refine: Option<RefineReport>,
    pub solver: SolveReport,
    /// `|||u_j − u_{j−1}|||` through the projections of both iterates.
    pub update_energy: Option<T>,
}

impl<T: Scalar> IterationRecord<T> {
    pub fn n_dofs(&self) -> usize {
        self.dof_map.n_free()
    }
}

/// One marked element followed through a refinement with the prolonged solution.
#[derive(Clone, Debug, PartialEq)]
pub struct ReductionSample {
    pub iter: usize,
    pub element: ElementId,
    /// `η_T(E) + Ψ_T(E)`.
    pub before: f64,
    /// The same quantity summed over the descendants of `E` in the refined mesh.
    pub after: f64,
    /// `S_{T(E)}(u, u)` over the element and its edge neighbors.
    pub stab_patch: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Converged,
    IterationCap,
}

#[derive(Clone, Debug)]
pub struct GalerkinRun<T> {
    pub status: RunStatus,
    pub records: Vec<IterationRecord<T>>,
    pub reduction: Vec<ReductionSample>,
    pub levels: usize,
}

impl<T: Scalar> GalerkinRun<T> {
    pub fn last(&self) -> &IterationRecord<T> {
        self.records.last().expect("a run has at least one iteration")
    }
}

fn reduction_samples<T: Scalar>(
    prev: &IterationRecord<T>,
    prev_disc: &Discretization<T>,
    mesh: &Mesh,
    disc: &Discretization<T>,
) -> Result<Vec<ReductionSample>> {
    let Some(marks) = &prev.marks else {
        return Ok(Vec::new());
    };
    let prev_slot: HashMap<ElementId, usize> = prev
        .indicators
        .elements
        .iter()
        .enumerate()
        .map(|(i, e)| (e.element, i))
        .collect();
    let stab = |f: &ElementId| prev.indicators.elements[prev_slot[f]].stab.as_f64();
    let v = prolong_local(&prev.mesh, prev_disc, mesh, disc, &prev.solution)?;
    let after = estimate(mesh, disc, &v)?;
    let mut sums: HashMap<ElementId, (f64, f64)> = HashMap::new();
    for ind in &after.elements {
        if let Some(a) = mesh.ancestor_in(ind.element, &prev.mesh) {
            let s = sums.entry(a).or_insert((0.0, 0.0));
            s.0 += ind.eta_sq.as_f64();
            s.1 += ind.psi_sq().as_f64();
        }
    }
    let mut out = Vec::with_capacity(marks.elements.len());
    for &e in &marks.elements {
        let ind = &prev.indicators.elements[prev_slot[&e]];
        let mut patch = vec![e];
        for leaf in prev.mesh.boundary_leaves(e) {
            if let Some(f) = neighbor_across(&prev.mesh, e, leaf.edge)? {
                patch.push(f);
            }
        }
        patch.sort_unstable();
        patch.dedup();
        let stab_patch = patch.iter().map(stab).sum();
        let (eta, psi) = sums.get(&e).copied().unwrap_or((0.0, 0.0));
        out.push(ReductionSample {
            iter: prev.iter,
            element: e,
            before: ind.eta_sq.as_f64().sqrt() + ind.psi_sq().as_f64().sqrt(),
            after: eta.sqrt() + psi.sqrt(),
            stab_patch,
        });
    }
    Ok(out)
}

/// Solve, estimate, mark and refine until `η² + Ψ² ≤ ε²` or the iteration cap.
pub fn galerkin<T: Scalar>(mesh0: Mesh, data: &PiecewiseData<T>, config: &GalerkinConfig) -> Result<GalerkinRun<T>> {
    config.validate()?;
    let levels = match config.levels {
        Some(m) => m,
        None => default_levels(mesh0.k())?,
    };
    let mut mesh = mesh0;
    mesh.refresh_lambda()?;
    if mesh.max_lambda() > config.lambda_cap {
        mesh.enforce_admissibility(config.lambda_cap)?;
    }
    let gamma = T::lit(config.gamma);
    let mut records: Vec<IterationRecord<T>> = Vec::new();
    let mut reduction = Vec::new();
    let mut prev_disc: Option<Discretization<T>> = None;
    for iter in 0..config.max_iters {
        let disc = Discretization::build(&mesh, data, gamma)?;
        if let (Some(prev), Some(pd)) = (records.last(), &prev_disc) {
            if config.audit_reduction {
                reduction.extend(reduction_samples(prev, pd, &mesh, &disc)?);
            }
        }
        let (u, solver) = disc.solve(config.solver)?;
        let indicators = estimate(&mesh, &disc, &u)?;
        let converged = indicators.total().as_f64() <= config.eps * config.eps;
        let last = iter + 1 == config.max_iters;
        let mut record = IterationRecord {
            iter,
            mesh: mesh.clone(),
            dof_map: disc.dofs.clone(),
            projected: ProjectedSolution::new(&disc, &u)?,
            solution: u,
            indicators,
            marks: None,
            refine: None,
            solver,
            update_energy: None,
        };
        if let Some(prev) = records.last() {
            record.update_energy = Some(T::lit(projection_distance_sq(&record, prev, data)?.sqrt()));
        }
        if converged || last {
            records.push(record);
            let status = if converged { RunStatus::Converged } else { RunStatus::IterationCap };
            return Ok(GalerkinRun {
                status,
                records,
                reduction,
                levels,
            });
        }
        let marks = mark(&record.indicators, config.theta)?;
        let report = refine(&mut mesh, &marks, &record.indicators, config.lambda_cap, levels)?;
        prev_disc = Some(disc);
        record.marks = Some(marks);
        record.refine = Some(report);
        records.push(record);
    }
    unreachable!("the loop returns on its last iteration")
}
