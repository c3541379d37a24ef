use crate::config::RunConfig;
use anyhow::{Context, Result};
use avem_core::adaptivity::{
    contraction_monitor, convergence_csv, galerkin, surrogate_errors, ContractionLog, ContractionSummary, GalerkinRun,
    RunStatus,
};
use avem_core::geometry_mesh::io::{format_tree_dump, format_vtk, parse_mesh};
use avem_core::geometry_mesh::Mesh;
use avem_core::problem_data::{parse_problem, PiecewiseData};
use avem_core::AvemError;
use std::fs;
use std::path::Path;

/// Failure classes mapped to the process exit code.
#[derive(Debug)]
pub enum Failure {
    Config(anyhow::Error),
    Solver(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 1,
            Failure::Solver(_) => 2,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Config(e) | Failure::Solver(e) => e,
        }
    }
}

fn classify(e: AvemError, context: &str) -> Failure {
    let config = matches!(
        e,
        AvemError::InvalidArgument(_)
            | AvemError::UnsupportedDegree(_)
            | AvemError::Parse { .. }
            | AvemError::InvalidMesh(_)
            | AvemError::InvalidData(_)
            | AvemError::Io(_)
    );
    let err = anyhow::Error::new(e).context(context.to_string());
    if config {
        Failure::Config(err)
    } else {
        Failure::Solver(err)
    }
}

pub struct RunOutcome {
    pub status: RunStatus,
    pub iterations: usize,
    pub final_estimator: f64,
    pub summary: Option<ContractionSummary>,
}

fn load(config: &RunConfig, mesh_path: &Path, problem_path: &Path) -> Result<(Mesh, PiecewiseData<f64>), Failure> {
    let read = |p: &Path| fs::read_to_string(p).with_context(|| format!("reading {}", p.display()));
    let mesh_text = read(mesh_path).map_err(Failure::Config)?;
    let problem_text = read(problem_path).map_err(Failure::Config)?;
    let ctx_mesh = format!("mesh file {}", mesh_path.display());
    let ctx_prob = format!("problem file {}", problem_path.display());
    let initial = parse_mesh(&mesh_text).map_err(|e| classify(e, &ctx_mesh))?;
    let spec = parse_problem(&problem_text).map_err(|e| classify(e, &ctx_prob))?;
    let data = PiecewiseData::ingest(&spec, &initial, config.k).map_err(|e| classify(e, &ctx_prob))?;
    let mesh = Mesh::new(initial, config.k).map_err(|e| classify(e, &ctx_mesh))?;
    Ok((mesh, data))
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), Failure> {
    let path = dir.join(name);
    fs::write(&path, text)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(Failure::Config)
}

fn write_iterations(dir: &Path, run: &GalerkinRun<f64>) -> Result<(), Failure> {
    for r in &run.records {
        write(dir, &format!("indicators_{}.csv", r.iter), &r.indicators.to_csv())?;
        let mut eta = Vec::new();
        let mut psi = Vec::new();
        let mut stab = Vec::new();
        for e in r.mesh.active_elements() {
            let ind = r.indicators.get(e).expect("every active element has indicators");
            eta.push(ind.eta_sq);
            psi.push(ind.psi_sq());
            stab.push(ind.stab);
        }
        let vtk = format_vtk(&r.mesh, &[("eta_sq", eta), ("psi_sq", psi), ("stab", stab)]);
        write(dir, &format!("mesh_{}.vtk", r.iter), &vtk)?;
    }
    Ok(())
}

pub fn run(config: &RunConfig, mesh_path: &Path, problem_path: &Path) -> Result<RunOutcome, Failure> {
    config.validate().map_err(Failure::Config)?;
    let (mesh, data) = load(config, mesh_path, problem_path)?;
    fs::create_dir_all(&config.out)
        .with_context(|| format!("creating {}", config.out.display()))
        .map_err(Failure::Config)?;
    let run = galerkin(mesh, &data, &config.galerkin()).map_err(|e| classify(e, "adaptive loop"))?;
    write_iterations(&config.out, &run)?;
    let errs = if config.reference {
        surrogate_errors(&run, &data)
            .map_err(|e| classify(e, "reference solution"))?
            .1
    } else {
        vec![0.0; run.records.len()]
    };
    let log = ContractionLog::new(&run, &errs, config.beta, config.zeta, config.gamma);
    let summary = contraction_monitor(&log);
    write(&config.out, "convergence.csv", &convergence_csv(&log, &summary))?;
    write(&config.out, "contraction.csv", &summary.to_csv())?;
    write(&config.out, "final_mesh.tree", &format_tree_dump(&run.last().mesh))?;
    Ok(RunOutcome {
        status: run.status,
        iterations: run.records.len(),
        final_estimator: run.last().indicators.total(),
        summary: Some(summary),
    })
}
