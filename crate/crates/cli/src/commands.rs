use std::fs;
use std::path::{Path, PathBuf};

use onsager_core::budget::{self, EnergyBudget, LimitRow};
use onsager_core::channel::{self, ChannelFluxReport, LemmaCheck};
use onsager_core::commutator::{FluxOptions, RemainderMethod};
use onsager_core::fields::{synthesize_holder_field, Geometry, Grid, GridField, SynthesisSpec};
use onsager_core::flux::{self, FluxSweepReport, VerdictRule};
use onsager_core::holder::{self, HolderEstimate, Modulus, Zeta2};
use onsager_core::io;
use onsager_core::mollify::{self, BallRule, ConvTable, MollifierKernel};
use onsager_core::solver::{self, SolverConfig, StepLog, Trajectory};
use serde::{Deserialize, Serialize};

use crate::config::{ChannelCheckConfig, ExperimentConfig, SynthConfig};
use crate::CliError;

type Res<T> = Result<T, CliError>;

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn synthesize(s: &SynthConfig, seed: u64) -> Res<GridField> {
    let grid = Grid::new(s.dims, s.lengths(), s.geometry)?;
    let spec = synth_spec(s, seed, &grid);
    Ok(match s.geometry {
        Geometry::Periodic3 => synthesize_holder_field(&spec, grid)?,
        Geometry::Channel => channel::synthesize_channel_field(&spec, grid)?,
    })
}

fn synth_spec(s: &SynthConfig, seed: u64, grid: &Grid) -> SynthesisSpec {
    let full = SynthesisSpec::full_band(s.target_alpha, seed, grid);
    SynthesisSpec::new(s.target_alpha, seed, s.k_min, s.k_max.unwrap_or(full.k_max))
}

fn load_or_synth(input: &Option<PathBuf>, cfg: &ExperimentConfig) -> Res<GridField> {
    match input {
        Some(p) => Ok(io::read_field_zero_mean(p)?),
        None => synthesize(&cfg.synth, cfg.seed),
    }
}

fn modulus(s: &str) -> Res<Modulus> {
    Ok(Modulus::parse(s)?)
}

#[derive(Serialize)]
struct SynthMeta {
    file: String,
    spec: SynthesisSpec,
    grid: Grid,
    rms: f64,
    max_divergence: f64,
    /// Periodic: all planes. Channel: the mid-plane, horizontal lags only.
    zeta2: Option<Zeta2>,
    holder_proxy: Option<f64>,
}

pub fn synth(cfg: &ExperimentConfig, out: &Path) -> Res<()> {
    let v = synthesize(&cfg.synth, cfg.seed)?;
    let grid = *v.grid();
    let (z, div) = match grid.geometry {
        Geometry::Periodic3 => {
            let s = onsager_core::fields::forward_transform(&v)?;
            (holder::estimate_zeta2(&v)?, s.max_divergence())
        }
        Geometry::Channel => (channel::horizontal_zeta2(&v, grid.dims[2] / 2)?, channel::max_divergence(&v)?),
    };
    io::write_field(out.join("field.ofx"), &v)?;
    let meta = SynthMeta {
        file: "field.ofx".into(),
        spec: synth_spec(&cfg.synth, cfg.seed, &grid),
        grid,
        rms: (2.0 * onsager_core::fields::energy(&v) / grid.lengths.iter().product::<f64>()).sqrt(),
        max_divergence: div,
        holder_proxy: Some(z.holder_proxy),
        zeta2: Some(z),
    };
    io::write_json(out.join("synth.json"), &meta)?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    initial: String,
    config: SolverConfig,
    times: Vec<f64>,
    files: Vec<String>,
    log: Vec<StepLog>,
}

fn initial_field(spec: &str, grid: Grid) -> Res<GridField> {
    match spec {
        "taylor_green" => Ok(solver::taylor_green(grid)),
        "single_mode" => Ok(GridField::from_fn(grid, |x| [x[2].sin(), 0.0, 0.0])),
        path => {
            let v = io::read_field_zero_mean(path)?;
            if v.grid() != &grid {
                return Err(invalid(format!(
                    "{path}: grid {:?} does not match simulate.dims {:?}",
                    v.grid().dims,
                    grid.dims
                )));
            }
            Ok(v)
        }
    }
}

fn simulate_run(cfg: &ExperimentConfig) -> Res<Trajectory> {
    let s = &cfg.simulate;
    let config = SolverConfig {
        nu: s.nu,
        dt: s.dt,
        t_end: s.t_end,
        dims: s.dims,
        dealias: s.dealias,
        snapshot_stride: s.snapshot_stride,
        cfl_limit: s.cfl_limit,
    };
    config.validate()?;
    let v0 = initial_field(&s.initial, Grid::periodic(s.dims)?)?;
    Ok(solver::run(&v0, &config)?)
}

fn log_csv(log: &[StepLog]) -> String {
    let mut s = String::from("t,energy,grad_sq\n");
    for l in log {
        s.push_str(&format!("{},{},{}\n", l.t, l.energy, l.grad_sq));
    }
    s
}

pub fn simulate(cfg: &ExperimentConfig, out: &Path) -> Res<()> {
    let traj = simulate_run(cfg)?;
    let mut files = Vec::new();
    for (i, (_, v)) in traj.snapshots.iter().enumerate() {
        let name = format!("snap_{i:04}.ofx");
        io::write_field(out.join(&name), v)?;
        files.push(name);
    }
    io::write_text(out.join("energy.csv"), &log_csv(&traj.log))?;
    let manifest = Manifest {
        initial: cfg.simulate.initial.clone(),
        config: traj.config.clone(),
        times: traj.snapshots.iter().map(|s| s.0).collect(),
        files,
        log: traj.log.clone(),
    };
    io::write_json(out.join("manifest.json"), &manifest)?;
    Ok(())
}

fn load_run(dir: &Path) -> Res<Trajectory> {
    let text = fs::read_to_string(dir.join("manifest.json"))
        .map_err(|e| invalid(format!("{}: {e}", dir.join("manifest.json").display())))?;
    let m: Manifest = serde_json::from_str(&text).map_err(|e| invalid(format!("manifest.json: {e}")))?;
    if m.times.len() != m.files.len() {
        return Err(invalid("manifest.json: times and files differ in length"));
    }
    let snapshots = m
        .times
        .iter()
        .zip(&m.files)
        .map(|(t, f)| Ok((*t, io::read_field(dir.join(f))?)))
        .collect::<Res<Vec<_>>>()?;
    Ok(Trajectory {
        snapshots,
        config: m.config,
        log: m.log,
    })
}

#[derive(Serialize)]
struct MollifyCheckJson {
    alpha: f64,
    seminorm: HolderEstimate,
    table: ConvTable,
    max_ratio1: f64,
    ratio_limit: f64,
    ratio_ok: bool,
    grad_slope: Option<f64>,
    /// `α - 1 - slope_margin`.
    slope_threshold: f64,
    slope_ok: bool,
    passed: bool,
}

pub fn mollify_check(cfg: &ExperimentConfig, out: &Path) -> Res<()> {
    let c = &cfg.mollify_check;
    let v = load_or_synth(&c.input, cfg)?;
    let alpha = c.alpha.unwrap_or(cfg.synth.target_alpha);
    let omega = modulus(&c.modulus)?;
    let radius = c.max_radius.unwrap_or_else(|| holder::quarter_period(&v));
    let est = holder::estimate_seminorm_omega(&v, alpha, &omega, radius)?;
    let table = mollify::check_conv_estimates_omega(&v, alpha, &omega, est.seminorm, &c.eps_list)?;
    let max_ratio1 = table.max_ratio1();
    let slope = table.grad_slope();
    let slope_threshold = alpha - 1.0 - c.slope_margin;
    let ratio_ok = max_ratio1 <= c.ratio_limit;
    let slope_ok = slope.is_some_and(|s| s >= slope_threshold);
    io::write_text(out.join("conv.csv"), &table.to_csv())?;
    io::write_text(out.join("holder.csv"), &est.to_csv())?;
    let j = MollifyCheckJson {
        alpha,
        seminorm: est,
        table,
        max_ratio1,
        ratio_limit: c.ratio_limit,
        ratio_ok,
        grad_slope: slope,
        slope_threshold,
        slope_ok,
        passed: ratio_ok && slope_ok,
    };
    io::write_json(out.join("mollify_check.json"), &j)?;
    Ok(())
}

fn remainder_method(s: &str) -> Res<RemainderMethod> {
    match s.trim() {
        "adaptive" => Ok(RemainderMethod::Adaptive),
        "expansion" => Ok(RemainderMethod::Expansion),
        other => {
            let n: usize = other
                .strip_prefix("cube:")
                .and_then(|n| n.parse().ok())
                .ok_or_else(|| invalid(format!("unknown remainder method `{other}`")))?;
            let rule = BallRule::cube(n);
            rule.validate()?;
            Ok(RemainderMethod::Quadrature { rule })
        }
    }
}

#[derive(Serialize, Deserialize)]
pub struct FluxSweepJson {
    pub input: String,
    pub remainder: String,
    pub identity_tolerance: f64,
    pub report: FluxSweepReport,
}

pub fn flux_sweep(cfg: &ExperimentConfig, out: &Path) -> Res<()> {
    let c = &cfg.flux_sweep;
    let alpha = c.alpha.unwrap_or(cfg.synth.target_alpha);
    let opts = FluxOptions {
        remainder: remainder_method(&c.remainder)?,
        identity_tolerance: c.identity_tolerance,
    };
    let rule = VerdictRule {
        min_slope: c.min_slope,
        relative_floor: c.relative_floor,
        absolute_floor: c.absolute_floor,
    };
    let omega = c.modulus.as_deref().map(modulus).transpose()?;
    let (report, input) = match &c.input {
        Some(p) if p.is_dir() => {
            if omega.is_some_and(|m| m != Modulus::Constant) {
                return Err(invalid("the omega-refined sweep takes a single field, not a run directory"));
            }
            let traj = load_run(p)?;
            let snaps: Vec<(f64, GridField)> = traj.snapshots;
            (
                flux::sweep_series(&snaps, alpha, &c.eps_list, c.eta, &opts, rule)?,
                p.display().to_string(),
            )
        }
        _ => {
            let v = load_or_synth(&c.input, cfg)?;
            let input = c
                .input
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "synth".into());
            let r = match omega {
                Some(m) if m != Modulus::Constant => flux::sweep_omega(&v, alpha, &m, &c.eps_list, &opts, rule)?,
                _ => flux::sweep(&v, alpha, &c.eps_list, c.eta, &opts, rule)?,
            };
            (r, input)
        }
    };
    io::write_text(out.join("flux.csv"), &report.to_csv())?;
    io::write_json(
        out.join("flux.json"),
        &FluxSweepJson {
            input,
            remainder: c.remainder.clone(),
            identity_tolerance: c.identity_tolerance,
            report,
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct BudgetJson {
    run: String,
    budget: EnergyBudget,
    final_relative_residual: f64,
    initial_time_limit: Vec<LimitRow>,
}

pub fn budget(cfg: &ExperimentConfig, out: &Path) -> Res<()> {
    let c = &cfg.budget;
    let (traj, run) = match &c.run {
        Some(dir) => (load_run(dir)?, dir.display().to_string()),
        None => (simulate_run(cfg)?, "simulate".to_string()),
    };
    let b = budget::audit(&traj, c.tolerance)?;
    let limits = if c.s_list.is_empty() {
        Vec::new()
    } else {
        budget::initial_time_limit(&traj, &c.s_list)?
    };
    io::write_text(out.join("budget.csv"), &b.to_csv())?;
    if !limits.is_empty() {
        let mut s = String::from("s,residual,gap\n");
        for r in &limits {
            s.push_str(&format!("{},{},{}\n", r.s, r.residual, r.gap));
        }
        io::write_text(out.join("initial_time_limit.csv"), &s)?;
    }
    io::write_json(
        out.join("budget.json"),
        &BudgetJson {
            run,
            final_relative_residual: b.final_relative_residual(),
            budget: b,
            initial_time_limit: limits,
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct ChannelJson {
    input: String,
    lemma: Vec<LemmaCheck>,
    lemma_slack: f64,
    divergence_tolerance: f64,
    lemma_ok: bool,
    flux: ChannelFluxReport,
    passed: bool,
}

fn channel_field(c: &ChannelCheckConfig, seed: u64) -> Res<GridField> {
    match &c.input {
        Some(p) => Ok(io::read_field(p)?),
        None => {
            let grid = Grid::channel(c.dims, c.lengths)?;
            let spec = SynthesisSpec::new(c.target_alpha, seed, c.k_min, c.k_max);
            Ok(channel::synthesize_channel_field(&spec, grid)?)
        }
    }
}

pub fn channel_check(cfg: &ExperimentConfig, out: &Path) -> Res<()> {
    let c = &cfg.channel_check;
    let v = channel_field(c, cfg.seed)?;
    if v.grid().geometry != Geometry::Channel {
        return Err(invalid("channel-check needs a channel field"));
    }
    let omega = modulus(&c.modulus)?;
    let flux = channel::channel_flux_bound(&v, &omega, &c.eps_list)?;
    let kernel = MollifierKernel::for_grid(v.grid(), 1.0)?;
    let mut eps = c.eps_list.clone();
    eps.sort_by(|a, b| b.total_cmp(a));
    let lemma = eps
        .iter()
        .map(|&e| channel::lemma_check(&v, &kernel.with_epsilon(e)?, &omega, flux.seminorm))
        .collect::<onsager_core::Result<Vec<_>>>()?;
    let mut s = String::from("epsilon,wall_max,divergence_before,divergence_after,sup_diff,bound,ratio,ok\n");
    for l in &lemma {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            l.epsilon, l.wall_max, l.divergence_before, l.divergence_after, l.sup_diff, l.bound, l.ratio, l.ok
        ));
    }
    io::write_text(out.join("lemma.csv"), &s)?;
    io::write_text(out.join("channel.csv"), &flux.to_csv())?;
    let lemma_ok = lemma.iter().all(|l| l.ok);
    let passed = lemma_ok && flux.bounded;
    io::write_json(
        out.join("channel.json"),
        &ChannelJson {
            input: c
                .input
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "synth".into()),
            lemma,
            lemma_slack: channel::LEMMA_SLACK,
            divergence_tolerance: channel::DIVERGENCE_TOLERANCE,
            lemma_ok,
            flux,
            passed,
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct ReportRow {
    source: String,
    alpha: f64,
    eta: f64,
    gamma_theory: f64,
    slope_pi_total: Option<f64>,
    conserving: bool,
    min_slope: f64,
    relative_floor: f64,
    absolute_floor: f64,
}

#[derive(Serialize)]
struct Summary {
    rows: Vec<ReportRow>,
}

pub fn report(inputs: &[PathBuf], out: &Path) -> Res<()> {
    if inputs.is_empty() {
        return Err(invalid("report needs at least one sweep directory"));
    }
    let mut rows = Vec::new();
    for dir in inputs {
        let path = dir.join("flux.json");
        let text = fs::read_to_string(&path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        let j: FluxSweepJson =
            serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        let r = j.report;
        rows.push(ReportRow {
            source: dir.display().to_string(),
            alpha: r.alpha,
            eta: r.eta,
            gamma_theory: r.gamma_theory,
            slope_pi_total: r.fitted_slopes.pi_total,
            conserving: r.verdict.conserving,
            min_slope: r.verdict.rule.min_slope,
            relative_floor: r.verdict.rule.relative_floor,
            absolute_floor: r.verdict.rule.absolute_floor,
        });
    }
    rows.sort_by(|a, b| a.alpha.total_cmp(&b.alpha).then_with(|| a.source.cmp(&b.source)));
    let mut s = String::from("source,alpha,eta,gamma_theory,slope_pi_total,conserving\n");
    for r in &rows {
        let slope = r.slope_pi_total.map(|v| v.to_string()).unwrap_or_default();
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.source, r.alpha, r.eta, r.gamma_theory, slope, r.conserving
        ));
    }
    io::write_text(out.join("summary.csv"), &s)?;
    io::write_json(out.join("summary.json"), &Summary { rows })?;
    Ok(())
}
