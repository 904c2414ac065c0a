//! The seven reference runs on the double integrator with jump and their
//! expected γ values.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use hybrid_cis::polysos::CertificateForm;
use hybrid_cis::synthesis::{PartitionSpec, SynthesisSolution, SynthesisStatus, TemplateSpec};
use hybrid_cis::verify::VerifyOptions;
use serde::Serialize;

use crate::{exit_code, write_plots, write_solution, CliError, RunInput, EXIT_OK, EXIT_TABLE_MISMATCH};

#[derive(Clone, Debug)]
pub struct Reference {
    pub name: &'static str,
    pub template: TemplateSpec,
    pub target: f64,
    pub tolerance: f64,
}

fn piecewise(m1: usize, m2: usize) -> TemplateSpec {
    TemplateSpec::Piecewise {
        partition: PartitionSpec::FaceFan { m1, m2, triangulate: false },
        tie_pieces: false,
        certificate: CertificateForm::Halfspace,
    }
}

pub fn references() -> Vec<Reference> {
    let r = |name, template, target, tolerance| Reference { name, template, target, tolerance };
    vec![
        r("ellipsoid", TemplateSpec::Ellipsoid, 0.894, 0.005),
        r("polyset-4", TemplateSpec::Polyset { degree: 4 }, 0.896, 0.005),
        r("polyset-6", TemplateSpec::Polyset { degree: 6 }, 0.93, 0.01),
        r("polyset-8", TemplateSpec::Polyset { degree: 8 }, 0.96, 0.01),
        r("piecewise-4-3", piecewise(4, 3), 0.894, 0.005),
        r("piecewise-8-5", piecewise(8, 5), 0.92, 0.01),
        r("piecewise-16-7", piecewise(16, 7), 0.94, 0.01),
    ]
}

#[derive(Clone, Debug, Serialize)]
pub struct Row {
    pub name: String,
    pub target: f64,
    pub tolerance: f64,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
    pub within: bool,
    pub status: Option<SynthesisStatus>,
    pub error: Option<String>,
    #[serde(skip)]
    pub seconds: f64,
    #[serde(skip)]
    pub solution: Option<SynthesisSolution>,
}

impl Row {
    pub fn exit_code(&self) -> i32 {
        match (&self.status, &self.error) {
            (Some(s), _) if *s != SynthesisStatus::Verified => exit_code(*s),
            (Some(_), _) if !self.within => EXIT_TABLE_MISMATCH,
            (Some(_), _) => EXIT_OK,
            (None, _) => crate::EXIT_SOLVER,
        }
    }
}

/// Runs the selected references concurrently. `only` empty means all.
pub fn run_table(base: &RunInput, only: &[String], verify: &VerifyOptions) -> Result<Vec<Row>, CliError> {
    let all = references();
    if let Some(bad) = only.iter().find(|n| !all.iter().any(|r| r.name == n.as_str())) {
        let names: Vec<&str> = all.iter().map(|r| r.name).collect();
        return Err(CliError::Parse(format!("unknown run `{bad}`; expected one of {}", names.join(", "))));
    }
    let selected: Vec<Reference> =
        all.into_iter().filter(|r| only.is_empty() || only.iter().any(|n| n == r.name)).collect();
    let rows = std::thread::scope(|s| {
        let handles: Vec<_> = selected
            .iter()
            .map(|r| {
                s.spawn(move || {
                    let input = RunInput { template: r.template.clone(), ..base.clone() };
                    let start = Instant::now();
                    let result = input.solve(verify);
                    let seconds = start.elapsed().as_secs_f64();
                    let mut row = Row {
                        name: r.name.to_string(),
                        target: r.target,
                        tolerance: r.tolerance,
                        gamma: None,
                        delta: None,
                        within: false,
                        status: None,
                        error: None,
                        seconds,
                        solution: None,
                    };
                    match result {
                        Ok(sol) => {
                            row.gamma = sol.gamma;
                            row.delta = sol.gamma.map(|g| g - r.target);
                            row.within = row.delta.is_some_and(|d| d.abs() <= r.tolerance);
                            row.status = Some(sol.status);
                            row.solution = Some(sol);
                        }
                        Err(e) => row.error = Some(e.to_string()),
                    }
                    row
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("run thread panicked")).collect::<Vec<_>>()
    });
    Ok(rows)
}

/// Fixed-width table; `timings` adds a wall-clock column (left out of files
/// so they are reproducible).
pub fn format_table(rows: &[Row], timings: bool) -> String {
    let mut s = format!(
        "{:<16} {:>8} {:>7} {:>9} {:>9}  {:<18}{}\n",
        "run",
        "target",
        "tol",
        "gamma",
        "delta",
        "status",
        if timings { "  time_s" } else { "" }
    );
    for r in rows {
        let gamma = r.gamma.map_or("-".into(), |g| format!("{g:.4}"));
        let delta = r.delta.map_or("-".into(), |d| format!("{d:+.4}"));
        let status = match (&r.status, &r.error) {
            (Some(st), _) => format!("{st:?}{}", if r.within { "" } else { " (off)" }),
            (None, Some(e)) => format!("error: {e}"),
            (None, None) => "-".into(),
        };
        let time = if timings { format!("  {:>6.1}", r.seconds) } else { String::new() };
        let _ = writeln!(
            s,
            "{:<16} {:>8.3} {:>7.3} {gamma:>9} {delta:>9}  {status:<18}{time}",
            r.name, r.target, r.tolerance
        );
    }
    s
}

/// Writes each run's solution and plots under `dir/<run>/` and the table
/// as `dir/table.txt` and `dir/table.json`.
pub fn write_table(dir: &Path, base: &RunInput, rows: &[Row]) -> Result<(), CliError> {
    for r in rows {
        let Some(sol) = &r.solution else { continue };
        let sub = dir.join(&r.name);
        write_solution(&sub, sol)?;
        if sol.gamma.is_some() && !sol.nodes.is_empty() {
            let data = base.plot_data(sol, base.plot.directions)?;
            write_plots(&sub, &data, &base.plot.formats, &r.name)?;
        }
    }
    crate::write_file(&dir.join("table.txt"), &format_table(rows, false))?;
    crate::write_file(&dir.join("table.json"), &crate::to_json(&rows))
}
