//! Front end for the `hybrid-cis` command: configuration loading, the
//! solve/plot/verify pipeline and the reference γ table.

pub mod config;
pub mod plot;
pub mod table;

use std::path::Path;

use hybrid_cis::conic::SolverOptions;
use hybrid_cis::model::{HybridAlgebraicSystem, SystemFile};
use hybrid_cis::reduction::{reduce, LiftingMap};
use hybrid_cis::synthesis::{
    solve_synthesis, Objective, SynthesisError, SynthesisOptions, SynthesisProblem, SynthesisSolution,
    SynthesisStatus, TemplateSpec,
};
use hybrid_cis::verify::{verify_solution, VerificationReport, VerifyOptions};
use thiserror::Error;

use config::{LoadedConfig, PlotFormat, PlotOptions, VertexFile};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;
pub const EXIT_UNVERIFIED: i32 = 5;
/// Reference table rows outside their tolerance.
pub const EXIT_TABLE_MISMATCH: i32 = 6;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{0}")]
    Io(String),
    #[error("solver failure: {0}")]
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Io(_) => EXIT_PARSE,
            CliError::Solver(_) => EXIT_SOLVER,
        }
    }
}

impl From<SynthesisError> for CliError {
    fn from(e: SynthesisError) -> Self {
        match e {
            SynthesisError::Conic(e) => CliError::Solver(e.to_string()),
            other => CliError::Parse(other.to_string()),
        }
    }
}

pub fn exit_code(status: SynthesisStatus) -> i32 {
    match status {
        SynthesisStatus::Verified => EXIT_OK,
        SynthesisStatus::SolvedUnverified => EXIT_UNVERIFIED,
        SynthesisStatus::Infeasible => EXIT_INFEASIBLE,
        SynthesisStatus::SolverFailure => EXIT_SOLVER,
    }
}

/// Everything a run needs, with files already read.
#[derive(Clone, Debug)]
pub struct RunInput {
    pub system: SystemFile,
    pub template: TemplateSpec,
    pub objective: Objective,
    pub solver: SolverOptions,
    pub plot: PlotOptions,
    pub reference: Option<VertexFile>,
}

pub const BUNDLED_SYSTEM: &str = include_str!("../../../data/double_integrator.json");
pub const BUNDLED_CONFIG: &str = include_str!("../../../data/example.json");
pub const BUNDLED_REFERENCE: &str = include_str!("../../../data/maximal_set.json");

impl RunInput {
    pub fn from_config(cfg: &LoadedConfig) -> Result<Self, CliError> {
        Ok(RunInput {
            system: cfg.load_system()?,
            template: cfg.template()?,
            objective: cfg.config.objective.clone(),
            solver: cfg.config.solver.clone(),
            plot: cfg.config.plot.clone(),
            reference: cfg.reference_set()?,
        })
    }

    /// The double integrator with jump and its objective, from embedded files.
    pub fn bundled() -> Self {
        let cfg = LoadedConfig::parse(BUNDLED_CONFIG, Path::new("")).expect("bundled config parses");
        RunInput {
            system: SystemFile::parse(BUNDLED_SYSTEM).expect("bundled system parses"),
            template: cfg.config.template,
            objective: cfg.config.objective,
            solver: cfg.config.solver,
            plot: cfg.config.plot,
            reference: Some(serde_json::from_str(BUNDLED_REFERENCE).expect("bundled reference parses")),
        }
    }

    /// The algebraic system actually solved, with the lifting map for control systems.
    pub fn algebraic_system(&self) -> Result<(HybridAlgebraicSystem, Option<LiftingMap>), CliError> {
        let report = self.system.validate();
        if !report.is_valid() {
            return Err(CliError::Parse(format!("invalid system:\n{report}")));
        }
        match &self.system {
            SystemFile::Algebraic(has) => Ok((has.clone(), None)),
            SystemFile::Control(hcs) => {
                let (has, lifting) = reduce(hcs).map_err(|e| CliError::Parse(e.to_string()))?;
                Ok((has, Some(lifting)))
            }
        }
    }

    pub fn solve(&self, verify: &VerifyOptions) -> Result<SynthesisSolution, CliError> {
        let (system, lifting) = self.algebraic_system()?;
        let problem = SynthesisProblem {
            system,
            template: self.template.clone(),
            objective: self.objective.clone(),
        };
        let options = SynthesisOptions {
            solver: self.solver.clone(),
            verify: *verify,
            ..SynthesisOptions::new()
        };
        let mut sol = solve_synthesis(&problem, &options)?;
        sol.lifting = lifting;
        Ok(sol)
    }

    pub fn reverify(&self, sol: &SynthesisSolution, verify: &VerifyOptions) -> Result<VerificationReport, CliError> {
        let (system, _) = self.algebraic_system()?;
        if sol.nodes.len() != system.nodes.len() {
            return Err(CliError::Parse(format!(
                "solution has {} node sets, system has {} nodes",
                sol.nodes.len(),
                system.nodes.len()
            )));
        }
        let gamma = sol.gamma.ok_or_else(|| CliError::Parse("solution carries no gamma".into()))?;
        let obj = &sol.objective;
        Ok(verify_solution(
            &system,
            &sol.models(),
            Some((&obj.node, &obj.coordinates, &obj.vertices, gamma)),
            verify,
        ))
    }

    /// Boundary curves of the objective node's set plus overlays.
    pub fn plot_data(&self, sol: &SynthesisSolution, directions: usize) -> Result<plot::PlotData, CliError> {
        let obj = &sol.objective;
        if obj.coordinates.len() != 2 {
            return Err(CliError::Parse("plots need exactly two projection coordinates".into()));
        }
        let model = sol
            .model(&obj.node)
            .ok_or_else(|| CliError::Parse(format!("solution has no set for node {}", obj.node)))?;
        let (system, _) = self.algebraic_system()?;
        let node = system.node(&obj.node).ok_or_else(|| CliError::Parse(format!("unknown node {}", obj.node)))?;
        let mut data = plot::boundary_curves(model, &obj.coordinates, directions);
        data.curves.push(plot::box_overlay(&node.safe, &obj.coordinates));
        if let Some(g) = sol.gamma {
            data.curves.push(plot::polygon_overlay("gamma-d", &obj.vertices, g));
        }
        if let Some(r) = &self.reference {
            data.curves.push(plot::polygon_overlay("reference", &r.vertices, 1.0));
        }
        Ok(data)
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn to_json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// Writes `solution.json`, `verification.json` and `fingerprint.txt`.
pub fn write_solution(dir: &Path, sol: &SynthesisSolution) -> Result<(), CliError> {
    write_file(&dir.join("solution.json"), &to_json(sol))?;
    if let Some(v) = &sol.verification {
        write_file(&dir.join("verification.json"), &to_json(v))?;
    }
    write_file(&dir.join("fingerprint.txt"), &format!("{}\n", sol.fingerprint))
}

pub fn write_plots(dir: &Path, data: &plot::PlotData, formats: &[PlotFormat], title: &str) -> Result<(), CliError> {
    for f in formats {
        match f {
            PlotFormat::Csv => write_file(&dir.join("plot.csv"), &plot::to_csv(data))?,
            PlotFormat::Svg => write_file(&dir.join("plot.svg"), &plot::to_svg(data, title))?,
        }
    }
    Ok(())
}

pub fn load_solution(path: &Path) -> Result<SynthesisSolution, CliError> {
    serde_json::from_str(&config::read(path)?).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

pub fn summary(sol: &SynthesisSolution) -> String {
    let gamma = sol.gamma.map_or("-".to_string(), |g| format!("{g:.6}"));
    format!(
        "{}: status {:?}, gamma {gamma}, solver {} ({} iterations, {:.2}s)",
        sol.template.label(),
        sol.status,
        sol.solver.raw_status,
        sol.solver.iterations,
        sol.solver.solve_time_s
    )
}
