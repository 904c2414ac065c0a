//! Run configuration files.

use std::path::{Path, PathBuf};

use hybrid_cis::conic::SolverOptions;
use hybrid_cis::geometry::ConicPartition;
use hybrid_cis::model::SystemFile;
use hybrid_cis::synthesis::{Objective, PartitionSpec, TemplateSpec};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_PLOT_DIRECTIONS: usize = 720;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlotFormat {
    Csv,
    Svg,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlotOptions {
    pub directions: usize,
    pub formats: Vec<PlotFormat>,
}

impl Default for PlotOptions {
    fn default() -> Self {
        PlotOptions {
            directions: DEFAULT_PLOT_DIRECTIONS,
            formats: vec![PlotFormat::Csv, PlotFormat::Svg],
        }
    }
}

/// One synthesis run. Relative paths are resolved against the directory of
/// the configuration file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: PathBuf,
    pub template: TemplateSpec,
    pub objective: Objective,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub plot: PlotOptions,
    /// Vertex file of a reference set drawn as an overlay.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_set: Option<PathBuf>,
}

/// Polygon overlay file: `{"coordinates": [...], "vertices": [[x, y], ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VertexFile {
    #[serde(default)]
    pub description: String,
    pub coordinates: Vec<usize>,
    pub vertices: Vec<Vec<f64>>,
}

/// A configuration together with the directory its relative paths refer to.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub base: PathBuf,
}

impl LoadedConfig {
    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let config: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Parse(format!("config: {e}")))?;
        if config.objective.vertices.is_empty() {
            return Err(CliError::Parse("config: objective.vertices is empty".into()));
        }
        Ok(LoadedConfig { config, base: base.to_path_buf() })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = read(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() { p.to_path_buf() } else { self.base.join(p) }
    }

    pub fn load_system(&self) -> Result<SystemFile, CliError> {
        let path = self.resolve(&self.config.system);
        SystemFile::load(&path).map_err(|e| CliError::Parse(e.to_string()))
    }

    /// The template with any partition file read in.
    pub fn template(&self) -> Result<TemplateSpec, CliError> {
        let mut t = self.config.template.clone();
        if let TemplateSpec::Piecewise { partition, .. } = &mut t {
            if let PartitionSpec::File { path } = partition {
                let path = self.resolve(Path::new(path));
                let loaded: ConicPartition = serde_json::from_str(&read(&path)?)
                    .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
                *partition = PartitionSpec::Custom { partition: loaded };
            }
        }
        Ok(t)
    }

    pub fn reference_set(&self) -> Result<Option<VertexFile>, CliError> {
        match &self.config.reference_set {
            None => Ok(None),
            Some(p) => {
                let path = self.resolve(p);
                serde_json::from_str(&read(&path)?)
                    .map(Some)
                    .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
            }
        }
    }
}

pub fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
