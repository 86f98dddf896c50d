//! One function per subcommand; each returns the exit status to report.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;

use covlind::channels::{CovariantChannel, PopulationMatrix};
use covlind::lindblad::{
    bound_trajectory, evolve_in_frame, CovariantGenerator, Frame, PopulationGenerator,
};
use covlind::relaxometry::{harmonic_mean_bound_check, relaxation_profile, thermal_t1_hmean};
use covlind::spectrum::{bohr_modes, DensityMatrix, Hamiltonian, ModeTable, FREQ_MERGE_TOL};
use covlind::transfer;
use covlind::witness::{
    embeddability_region, karpelevic_sample, mode_total_monotonicity, qubit_snapshot_witness,
    s_omega_monotonicity_witness, spectral_witness, QubitSnapshot, Verdict, VerdictLabel,
};

use crate::io::{
    csv_document, fmt_f64, load_json, par_map, read_csv, to_json_pretty, write_output,
    SCHEMA_VERSION,
};

/// Exit status semantics: 0 for clean runs, 2 for verdict-type findings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Clean,
    Findings,
}

impl Outcome {
    pub fn code(self) -> i32 {
        match self {
            Outcome::Clean => 0,
            Outcome::Findings => 2,
        }
    }
}

/// A config field that is either inline JSON or a `{"path": ...}` redirect.
#[derive(Deserialize)]
#[serde(untagged)]
pub enum Source<T> {
    Path { path: PathBuf },
    Inline(T),
}

impl<T: serde::de::DeserializeOwned> Source<T> {
    pub fn load(self) -> Result<T> {
        match self {
            Source::Inline(v) => Ok(v),
            Source::Path { path } => load_json(&path),
        }
    }
}

/// Time grid: either an explicit strictly-increasing list or a linspace.
#[derive(Deserialize, Clone)]
#[serde(untagged)]
pub enum TimesSpec {
    Grid { start: f64, stop: f64, num: usize },
    List(Vec<f64>),
}

impl TimesSpec {
    pub fn build(&self) -> Result<Vec<f64>> {
        match self {
            TimesSpec::List(v) => Ok(v.clone()),
            TimesSpec::Grid { start, stop, num } => {
                if *num < 2 || stop <= start {
                    bail!("grid must have num >= 2 and stop > start");
                }
                Ok((0..*num)
                    .map(|k| start + (stop - start) * k as f64 / (*num - 1) as f64)
                    .collect())
            }
        }
    }
}

fn magnitude_header(d: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for x in 0..d {
        for y in 0..x {
            pairs.push((x, y));
        }
    }
    pairs
}

// ---------------------------------------------------------------------------
// evolve

#[derive(Deserialize)]
pub struct EvolveConfig {
    pub generator: Source<CovariantGenerator>,
    pub rho0: Source<DensityMatrix>,
    pub times: TimesSpec,
    #[serde(default)]
    pub lab_frame: bool,
}

pub fn evolve_cmd(config: &Path, out: Option<&PathBuf>, json: bool) -> Result<Outcome> {
    let cfg: EvolveConfig = load_json(config)?;
    let gen = cfg.generator.load()?;
    let rho0 = cfg.rho0.load()?;
    let times = cfg.times.build()?;
    let frame = if cfg.lab_frame {
        Frame::Lab
    } else {
        Frame::Interaction
    };
    let traj = evolve_in_frame(&gen, &rho0, &times, frame)?;
    if json {
        let states: Vec<&DensityMatrix> = traj.states().iter().collect();
        let doc = json!({
            "schema_version": SCHEMA_VERSION,
            "command": "evolve",
            "times": traj.times(),
            "states": states,
        });
        write_output(out, &to_json_pretty(&doc)?)?;
    } else {
        let d = rho0.dim();
        let pairs = magnitude_header(d);
        let mut header: Vec<String> = vec!["t".into()];
        header.extend((0..d).map(|x| format!("p_{x}")));
        header.extend(pairs.iter().map(|(x, y)| format!("m_{x}_{y}")));
        let rows = traj.iter().map(|(t, state)| {
            let mut row = vec![fmt_f64(t)];
            row.extend((0..d).map(|x| fmt_f64(state.entry(x, x).re)));
            row.extend(pairs.iter().map(|&(x, y)| fmt_f64(state.magnitude(x, y))));
            row
        });
        write_output(out, &csv_document(&header, rows))?;
    }
    Ok(Outcome::Clean)
}

// ---------------------------------------------------------------------------
// bound

#[derive(Deserialize)]
pub struct BoundConfig {
    pub generator: Source<CovariantGenerator>,
    pub rho0: Source<DensityMatrix>,
    pub omega: f64,
    pub times: TimesSpec,
}

pub fn bound_cmd(config: &Path, out: Option<&PathBuf>, json: bool) -> Result<Outcome> {
    let cfg: BoundConfig = load_json(config)?;
    let gen = cfg.generator.load()?;
    let rho0 = cfg.rho0.load()?;
    let times = cfg.times.build()?;
    let table = gen.table().clone();
    let l = gen.population_generator()?;
    let mode = table.mode(cfg.omega)?.clone();
    let bound = bound_trajectory(&l, &rho0, cfg.omega, &table, &times)?;
    let traj = evolve_in_frame(&gen, &rho0, &times, Frame::Interaction)?;
    if json {
        let actual: Vec<Vec<f64>> = traj
            .states()
            .iter()
            .map(|s| mode.pairs.iter().map(|&(x, y)| s.magnitude(x, y)).collect())
            .collect();
        let doc = json!({
            "schema_version": SCHEMA_VERSION,
            "command": "bound",
            "omega": mode.omega,
            "pairs": mode.pairs,
            "times": times,
            "bound": bound.states(),
            "actual": actual,
        });
        write_output(out, &to_json_pretty(&doc)?)?;
    } else {
        let mut header: Vec<String> = vec!["t".into()];
        header.extend(mode.pairs.iter().map(|(x, y)| format!("bound_{x}_{y}")));
        header.extend(mode.pairs.iter().map(|(x, y)| format!("actual_{x}_{y}")));
        let rows = traj.iter().zip(bound.states()).map(|((t, state), cap)| {
            let mut row = vec![fmt_f64(t)];
            row.extend(cap.iter().map(|&b| fmt_f64(b)));
            row.extend(
                mode.pairs
                    .iter()
                    .map(|&(x, y)| fmt_f64(state.magnitude(x, y))),
            );
            row
        });
        write_output(out, &csv_document(&header, rows))?;
    }
    Ok(Outcome::Clean)
}

// ---------------------------------------------------------------------------
// t1t2

#[derive(Deserialize)]
pub struct T1T2Config {
    pub generator: Source<CovariantGenerator>,
    #[serde(default)]
    pub beta: Option<f64>,
}

#[derive(Serialize)]
struct T2Entry {
    x: usize,
    y: usize,
    t2: f64,
}

pub fn t1t2_cmd(config: &Path, out: Option<&PathBuf>) -> Result<Outcome> {
    let cfg: T1T2Config = load_json(config)?;
    let gen = cfg.generator.load()?;
    let table = gen.table().clone();
    let profile = relaxation_profile(&gen, &table)?;
    let check = harmonic_mean_bound_check(&gen, &table)?;
    let thermal = match cfg.beta {
        Some(beta) => {
            let l = gen.population_generator()?;
            let h = table.hamiltonian();
            Some(thermal_t1_hmean(&l, beta, &h)?)
        }
        None => None,
    };
    let t2: Vec<T2Entry> = profile
        .t2
        .iter()
        .map(|(&(x, y), &t2)| T2Entry { x, y, t2 })
        .collect();
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "t1t2",
        "t1": profile.t1,
        "t1_oscillation": profile.t1_oscillation,
        "t2": t2,
        "hmean_t1": profile.hmean_t1,
        "hmean_t2": profile.hmean_t2,
        "harmonic_mean_bound": { "lhs": check.lhs, "rhs": check.rhs, "holds": check.holds },
        "thermal_hmean_t1": thermal,
    });
    write_output(out, &to_json_pretty(&doc)?)?;
    Ok(Outcome::Clean)
}

// ---------------------------------------------------------------------------
// transfer

pub struct TransferArgs {
    pub scenario: String,
    pub optimize: bool,
    pub lambda: f64,
    pub c1: f64,
    pub m10: f64,
    pub m32: f64,
    pub rates: Option<PathBuf>,
    pub times: TimesSpec,
    pub grid_density: usize,
}

pub fn transfer_cmd(args: &TransferArgs, out: Option<&PathBuf>, json: bool) -> Result<Outcome> {
    let times = args.times.build()?;
    match args.scenario.as_str() {
        "qutrit" if args.optimize => {
            let opt = transfer::qutrit_transfer_optimize(args.grid_density)?;
            let doc = json!({
                "schema_version": SCHEMA_VERSION,
                "command": "transfer",
                "scenario": "qutrit",
                "best_L": opt.best_l,
                "best_value": opt.best_value,
                "best_time": if opt.best_time.is_finite() { Some(opt.best_time) } else { None },
                "ceiling": 1.0 / 2.0_f64.sqrt(),
            });
            write_output(out, &to_json_pretty(&doc)?)?;
            Ok(Outcome::Clean)
        }
        "qutrit" => {
            let l: PopulationGenerator = match &args.rates {
                Some(path) => load_json(path)?,
                None => PopulationGenerator::from_rates(3, |to, from| match (to, from) {
                    (1, 0) => 2.0 * args.lambda,
                    (2, 1) => args.lambda,
                    _ => 0.0,
                })?,
            };
            let problem = transfer::TransferProblem::new(l.clone())?;
            let traj = transfer::qutrit_transfer_curve(&l, args.c1, &times)?;
            let ceiling: Vec<f64> = times
                .iter()
                .map(|&t| problem.relaxed_ceiling(args.c1, t))
                .collect();
            emit_transfer(out, json, "qutrit", &traj, &ceiling)
        }
        "four-level" => {
            let traj = transfer::four_level_transfer(args.lambda, args.c1, &times)?;
            let ceiling = vec![args.c1; times.len()];
            emit_transfer(out, json, "four-level", &traj, &ceiling)
        }
        "mixing" => {
            let traj = transfer::coherence_mixing(args.lambda, args.m10, args.m32, &times)?;
            // the conserved mode total, emitted as the reference column
            let ceiling = vec![args.m10 + args.m32; times.len()];
            emit_transfer(out, json, "mixing", &traj, &ceiling)
        }
        other => {
            bail!("unknown transfer scenario {other:?} (expected qutrit, four-level or mixing)")
        }
    }
}

fn emit_transfer(
    out: Option<&PathBuf>,
    json: bool,
    scenario: &str,
    traj: &covlind::linalg::Trajectory<Vec<f64>>,
    bound: &[f64],
) -> Result<Outcome> {
    if json {
        let doc = json!({
            "schema_version": SCHEMA_VERSION,
            "command": "transfer",
            "scenario": scenario,
            "times": traj.times(),
            "c1": traj.states().iter().map(|v| v[0]).collect::<Vec<_>>(),
            "c2": traj.states().iter().map(|v| v[1]).collect::<Vec<_>>(),
            "bound": bound,
        });
        write_output(out, &to_json_pretty(&doc)?)?;
    } else {
        let header = vec!["t".into(), "c1".into(), "c2".into(), "bound".into()];
        let rows = traj
            .iter()
            .zip(bound)
            .map(|((t, v), &b)| vec![fmt_f64(t), fmt_f64(v[0]), fmt_f64(v[1]), fmt_f64(b)]);
        write_output(out, &csv_document(&header, rows))?;
    }
    Ok(Outcome::Clean)
}

// ---------------------------------------------------------------------------
// witness

fn verdict_outcome(v: &Verdict) -> Outcome {
    match v.label {
        VerdictLabel::NonMarkovianGivenCovariance | VerdictLabel::InconsistentWithCovariance => {
            Outcome::Findings
        }
        _ => Outcome::Clean,
    }
}

fn emit_verdict(out: Option<&PathBuf>, mode: &str, v: &Verdict) -> Result<Outcome> {
    let bounds: Vec<serde_json::Value> = v
        .bound_values
        .iter()
        .map(|(name, value)| json!({"name": name, "value": value}))
        .collect();
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "witness",
        "mode": mode,
        "label": v.label,
        "margin": v.margin,
        "bound_values": bounds,
    });
    write_output(out, &to_json_pretty(&doc)?)?;
    Ok(verdict_outcome(v))
}

#[derive(Deserialize)]
pub struct SnapshotConfig {
    pub p0: f64,
    pub c0: f64,
    pub pt: f64,
    pub ct: f64,
    pub pi: f64,
}

pub fn witness_snapshot_cmd(config: &Path, out: Option<&PathBuf>) -> Result<Outcome> {
    let cfg: SnapshotConfig = load_json(config)?;
    let snap = QubitSnapshot::new(cfg.p0, cfg.c0, cfg.pt, cfg.ct, cfg.pi)?;
    let v = qubit_snapshot_witness(&snap);
    emit_verdict(out, "snapshot", &v)
}

#[derive(Deserialize)]
pub struct TrajectoryConfig {
    pub omegas: Vec<f64>,
    /// CSV with a `t` column and `m_<x>_<y>` magnitude columns.
    pub csv: PathBuf,
    /// Full density-matrix trajectory instead of a CSV; entries must be
    /// valid states.
    #[serde(default)]
    pub states: Option<Vec<DensityMatrix>>,
    #[serde(default)]
    pub times: Option<Vec<f64>>,
}

pub fn witness_trajectory_cmd(config: &Path, out: Option<&PathBuf>) -> Result<Outcome> {
    let cfg: TrajectoryConfig = load_json(config)?;
    let h = Hamiltonian::new(cfg.omegas)?;
    let table = bohr_modes(&h, FREQ_MERGE_TOL)?;
    let v = match (cfg.states, cfg.times) {
        (Some(states), Some(times)) => {
            let traj = covlind::linalg::Trajectory::new(times, states)?;
            s_omega_monotonicity_witness(&traj, &table)?
        }
        _ => {
            let series = mode_totals_from_csv(&cfg.csv, &table)?;
            mode_total_monotonicity(&series)
        }
    };
    emit_verdict(out, "trajectory", &v)
}

fn mode_totals_from_csv(path: &Path, table: &ModeTable) -> Result<Vec<Vec<f64>>> {
    let (header, rows) = read_csv(path)?;
    let d = table.dim();
    let mut column_of = vec![vec![usize::MAX; d]; d];
    for (idx, name) in header.iter().enumerate() {
        if let Some(rest) = name.strip_prefix("m_") {
            let parts: Vec<&str> = rest.split('_').collect();
            if parts.len() == 2 {
                let x: usize = parts[0].parse().context("column index")?;
                let y: usize = parts[1].parse().context("column index")?;
                if x >= d || y >= d {
                    bail!("column {name} addresses a level outside dimension {d}");
                }
                column_of[x][y] = idx;
                column_of[y][x] = idx;
            }
        }
    }
    let positive: Vec<&covlind::spectrum::Mode> =
        table.modes().iter().filter(|m| m.omega > 0.0).collect();
    let mut series = Vec::with_capacity(rows.len());
    for row in &rows {
        let mut totals = Vec::with_capacity(positive.len());
        for mode in &positive {
            let mut sum = 0.0;
            for &(x, y) in &mode.pairs {
                let col = column_of[x][y];
                if col == usize::MAX {
                    bail!("csv is missing the magnitude column for entry ({x},{y})");
                }
                sum += row[col];
            }
            totals.push(sum);
        }
        series.push(totals);
    }
    Ok(series)
}

pub fn witness_spectral_cmd(config: &Path, out: Option<&PathBuf>) -> Result<Outcome> {
    let p: PopulationMatrix = load_json(config)?;
    let v = spectral_witness(&p)?;
    emit_verdict(out, "spectral", &v)
}

// ---------------------------------------------------------------------------
// embed-region

pub fn embed_region_cmd(
    d: usize,
    samples: usize,
    seed: u64,
    out: Option<&PathBuf>,
    samples_out: Option<&PathBuf>,
    json: bool,
) -> Result<Outcome> {
    if d < 2 {
        bail!("dimension must be at least 2");
    }
    let steps = 720;
    let curve: Vec<(f64, f64)> = (0..=steps)
        .map(|k| {
            let phi = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * k as f64 / steps as f64;
            (phi, embeddability_region(d, phi))
        })
        .collect();
    let cloud: Option<Vec<Complex64>> = if samples > 0 {
        Some(karpelevic_sample(d, samples, seed)?)
    } else {
        None
    };
    if json {
        let doc = json!({
            "schema_version": SCHEMA_VERSION,
            "command": "embed-region",
            "d": d,
            "seed": seed,
            "curve": curve.iter().map(|&(phi, r)| json!({"phi": phi, "r": r})).collect::<Vec<_>>(),
            "samples": cloud.as_ref().map(|c| {
                c.iter().map(|z| json!({"re": z.re, "im": z.im})).collect::<Vec<_>>()
            }),
        });
        write_output(out, &to_json_pretty(&doc)?)?;
        return Ok(Outcome::Clean);
    }
    let header = vec!["phi".into(), "r".into(), "x".into(), "y".into()];
    let rows = curve.iter().map(|&(phi, r)| {
        vec![
            fmt_f64(phi),
            fmt_f64(r),
            fmt_f64(r * phi.cos()),
            fmt_f64(r * phi.sin()),
        ]
    });
    write_output(out, &csv_document(&header, rows))?;
    if let Some(cloud) = cloud {
        let header = vec!["re".into(), "im".into()];
        let rows = cloud
            .iter()
            .map(|z: &Complex64| vec![fmt_f64(z.re), fmt_f64(z.im)]);
        write_output(samples_out, &csv_document(&header, rows))?;
    }
    Ok(Outcome::Clean)
}

// ---------------------------------------------------------------------------
// gto

#[allow(clippy::too_many_arguments)]
pub fn gto_cmd(
    p0: f64,
    c0: f64,
    beta: f64,
    omega: f64,
    pt_min: f64,
    pt_max: f64,
    num: usize,
    out: Option<&PathBuf>,
    json: bool,
) -> Result<Outcome> {
    if num < 2 || pt_max <= pt_min {
        bail!("grid must have num >= 2 and pt_max > pt_min");
    }
    let grid: Vec<f64> = (0..num)
        .map(|k| pt_min + (pt_max - pt_min) * k as f64 / (num - 1) as f64)
        .collect();
    let bounds = par_map(grid.clone(), |&pt| {
        covlind::thermo::gto_qubit_bounds(p0, c0, beta, omega, pt)
    });
    if json {
        let doc = json!({
            "schema_version": SCHEMA_VERSION,
            "command": "gto",
            "p0": p0, "c0": c0, "beta": beta, "omega": omega,
            "pt": grid,
            "nm_bound": bounds.iter().map(|b| b.nm_bound).collect::<Vec<_>>(),
            "markov_bound": bounds.iter().map(|b| b.markov_bound).collect::<Vec<_>>(),
        });
        write_output(out, &to_json_pretty(&doc)?)?;
        return Ok(Outcome::Clean);
    }
    let header = vec!["pt".into(), "nm_bound".into(), "markov_bound".into()];
    let rows = grid
        .iter()
        .zip(&bounds)
        .map(|(&pt, b)| vec![fmt_f64(pt), fmt_f64(b.nm_bound), fmt_f64(b.markov_bound)]);
    write_output(out, &csv_document(&header, rows))?;
    Ok(Outcome::Clean)
}

// ---------------------------------------------------------------------------
// validate

pub fn validate_cmd(file: &Path, out: Option<&PathBuf>) -> Result<Outcome> {
    let raw: serde_json::Value = load_json(file)?;
    let (kind, valid, diagnostics): (&str, bool, Vec<String>) = if raw.get("Ablocks").is_some() {
        match serde_json::from_value::<CovariantGenerator>(raw) {
            Ok(_) => ("generator", true, vec![]),
            Err(e) => ("generator", false, vec![e.to_string()]),
        }
    } else if raw.get("blocks").is_some() {
        match serde_json::from_value::<CovariantChannel>(raw) {
            Ok(ch) => {
                let report = ch.validate();
                ("channel", report.valid, report.diagnostics)
            }
            Err(e) => ("channel", false, vec![e.to_string()]),
        }
    } else if raw.get("L").is_some() {
        match serde_json::from_value::<PopulationGenerator>(raw) {
            Ok(_) => ("population-generator", true, vec![]),
            Err(e) => ("population-generator", false, vec![e.to_string()]),
        }
    } else if raw.get("P").is_some() {
        match serde_json::from_value::<PopulationMatrix>(raw) {
            Ok(_) => ("population-matrix", true, vec![]),
            Err(e) => ("population-matrix", false, vec![e.to_string()]),
        }
    } else {
        bail!("unrecognized file: expected one of the keys Ablocks, blocks, L or P");
    };
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "validate",
        "kind": kind,
        "valid": valid,
        "diagnostics": diagnostics,
    });
    write_output(out, &to_json_pretty(&doc)?)?;
    Ok(if valid {
        Outcome::Clean
    } else {
        Outcome::Findings
    })
}
