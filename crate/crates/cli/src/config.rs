//! Experiment configuration: one TOML file per run, leaves overridable with
//! `--set key=value`.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use onsager_core::Geometry;
use serde::{Deserialize, Serialize};

use crate::CliError;

fn dyadic(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|j| 2f64.powi(-j)).collect()
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Output directory; `--out` takes precedence.
    pub out: Option<PathBuf>,
    pub synth: SynthConfig,
    pub simulate: SimulateConfig,
    pub mollify_check: MollifyCheckConfig,
    pub flux_sweep: FluxSweepConfig,
    pub budget: BudgetConfig,
    pub channel_check: ChannelCheckConfig,
    pub report: ReportConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub geometry: Geometry,
    pub dims: [usize; 3],
    /// Defaults to `2π` per axis, or `(2π, 2π, 1)` for a channel.
    pub lengths: Option<[f64; 3]>,
    pub target_alpha: f64,
    pub k_min: f64,
    /// Defaults to the full band below the coarsest Nyquist.
    pub k_max: Option<f64>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            geometry: Geometry::Periodic3,
            dims: [64; 3],
            lengths: None,
            target_alpha: 0.5,
            k_min: 1.0,
            k_max: None,
        }
    }
}

impl SynthConfig {
    pub fn lengths(&self) -> [f64; 3] {
        self.lengths.unwrap_or(match self.geometry {
            Geometry::Periodic3 => [TAU; 3],
            Geometry::Channel => [TAU, TAU, 1.0],
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    /// `taylor_green`, `single_mode`, or the path of an OFX1 file.
    pub initial: String,
    pub nu: f64,
    pub dt: f64,
    pub t_end: f64,
    pub dims: [usize; 3],
    pub dealias: bool,
    pub snapshot_stride: usize,
    pub cfl_limit: f64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            initial: "taylor_green".into(),
            nu: 0.05,
            dt: 0.01,
            t_end: 1.0,
            dims: [32; 3],
            dealias: true,
            snapshot_stride: 10,
            cfl_limit: 0.5,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MollifyCheckConfig {
    /// OFX1 field; synthesized from `[synth]` when absent.
    pub input: Option<PathBuf>,
    /// Defaults to `synth.target_alpha`.
    pub alpha: Option<f64>,
    pub modulus: String,
    pub eps_list: Vec<f64>,
    /// Defaults to a quarter period.
    pub max_radius: Option<f64>,
    /// Bound on `sup|u - u_ε| / ([u] ω(ε) ε^α)`.
    pub ratio_limit: f64,
    /// The gradient slope must be at least `α - 1 - slope_margin`.
    pub slope_margin: f64,
}

impl Default for MollifyCheckConfig {
    fn default() -> Self {
        MollifyCheckConfig {
            input: None,
            alpha: None,
            modulus: "constant".into(),
            eps_list: dyadic(2, 6),
            max_radius: None,
            ratio_limit: 1.1,
            slope_margin: 0.1,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FluxSweepConfig {
    /// OFX1 field or a `simulate` run directory; synthesized when absent.
    pub input: Option<PathBuf>,
    pub alpha: Option<f64>,
    pub eta: f64,
    pub eps_list: Vec<f64>,
    /// `adaptive`, `expansion`, or `cube:N`.
    pub remainder: String,
    pub identity_tolerance: f64,
    /// When set to a non-constant modulus, the ω-refined sweep is run.
    pub modulus: Option<String>,
    pub min_slope: f64,
    pub relative_floor: f64,
    pub absolute_floor: f64,
}

impl Default for FluxSweepConfig {
    fn default() -> Self {
        let rule = onsager_core::flux::VerdictRule::default();
        FluxSweepConfig {
            input: None,
            alpha: None,
            eta: 2.0,
            eps_list: dyadic(2, 6),
            remainder: "adaptive".into(),
            identity_tolerance: onsager_core::commutator::IDENTITY_TOLERANCE,
            modulus: None,
            min_slope: rule.min_slope,
            relative_floor: rule.relative_floor,
            absolute_floor: rule.absolute_floor,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BudgetConfig {
    /// A `simulate` run directory; the `[simulate]` block is run when absent.
    pub run: Option<PathBuf>,
    pub tolerance: f64,
    /// Decreasing initial times for the `[s, T]` residuals.
    pub s_list: Vec<f64>,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        BudgetConfig {
            run: None,
            tolerance: onsager_core::budget::DEFAULT_TOLERANCE,
            s_list: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelCheckConfig {
    /// OFX1 channel field; synthesized from the fields below when absent.
    pub input: Option<PathBuf>,
    pub dims: [usize; 3],
    pub lengths: [f64; 3],
    pub target_alpha: f64,
    pub k_min: f64,
    pub k_max: f64,
    pub modulus: String,
    pub eps_list: Vec<f64>,
}

impl Default for ChannelCheckConfig {
    fn default() -> Self {
        ChannelCheckConfig {
            input: None,
            dims: [32, 32, 33],
            lengths: [TAU, TAU, 1.0],
            target_alpha: 0.5,
            k_min: 1.0,
            k_max: 15.0,
            modulus: "power:0.3".into(),
            eps_list: dyadic(2, 5),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReportConfig {
    /// `flux-sweep` output directories.
    pub inputs: Vec<PathBuf>,
}

/// Loads `path` (or the defaults), applies the `key=value` overrides and
/// deserializes.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<ExperimentConfig, CliError> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", p.display())))?,
        None => String::new(),
    };
    let origin = path.map(|p| p.display().to_string()).unwrap_or_else(|| "<defaults>".into());
    if overrides.is_empty() {
        return toml::from_str(&text).map_err(|e| CliError::Validation(format!("{origin}: {e}")));
    }
    let mut table: toml::Table =
        toml::from_str(&text).map_err(|e| CliError::Validation(format!("{origin}: {e}")))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    toml::Value::Table(table)
        .try_into()
        .map_err(|e| CliError::Validation(format!("{origin} with --set overrides: {e}")))
}

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), CliError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Validation(format!("--set expects key=value, got `{spec}`")))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(CliError::Validation(format!("--set: bad key `{key}`")));
    }
    let mut cur = table;
    for part in &path[..path.len() - 1] {
        let entry = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Validation(format!("--set: `{part}` in `{key}` is not a table")))?;
    }
    cur.insert(path[path.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_reach_nested_leaves() {
        let c = load(None, &["flux_sweep.eta=1.5".into(), "seed=9".into(), "synth.dims=[8,8,8]".into()]).unwrap();
        assert_eq!(c.flux_sweep.eta, 1.5);
        assert_eq!(c.seed, 9);
        assert_eq!(c.synth.dims, [8, 8, 8]);
    }

    #[test]
    fn bare_words_become_strings() {
        let c = load(None, &["flux_sweep.remainder=expansion".into()]).unwrap();
        assert_eq!(c.flux_sweep.remainder, "expansion");
    }

    #[test]
    fn unknown_fields_are_rejected_with_location() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        std::fs::write(&p, "seed = 1\n[synth]\ntarget_alfa = 0.5\n").unwrap();
        let e = load(Some(&p), &[]).unwrap_err().to_string();
        assert!(e.contains("line 3") && e.contains("target_alfa"), "{e}");
        let e = load(None, &["synth.bogus=1".into()]).unwrap_err().to_string();
        assert!(e.contains("bogus"), "{e}");
    }
}
