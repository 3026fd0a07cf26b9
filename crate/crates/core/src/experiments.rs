//! Batch experiments behind the command-line tool: response curves, peak-time
//! sweeps and reconstruction tables.
//!
//! Each command takes an [`ExperimentConfig`] (TOML), produces rows in input
//! order and writes them as CSV with a header. Numbers are printed with six
//! significant digits. Rows run in parallel; row `i` of a reconstruction uses
//! the noise seed `seed + i`.
//!
//! Column layouts:
//!
//! * curve: `t_ps,u_m,U_m,u_m_asymptotic`
//! * peak-sweep: `axis,value,lambda,t_peak,t_peak_s,t_peak_p0,t_peak_l0,t_peak_l,
//!   rel_err_s,rel_err_p0,rel_err_l0,rel_err_l,error`
//! * reconstruct: `row,target_x,target_y,target_z,detector_x,detector_y,source_x,
//!   source_y,delta_hat,seed,inv_x,inv_y,inv_z,rel_err,t_peak_1,t_peak_2,t_peak_3,
//!   r,r1,r2,branch,error`

use std::f64::consts::FRAC_PI_2;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approx::{
    approx_peak_large_ell, approx_peak_small_ell, asymptotic_peak_large_ell,
    asymptotic_peak_small_ell, PeakEquationContext,
};
use crate::error::{FdotError, Result};
use crate::forward::{peak_time_numeric, ForwardModel, PeakSearch, TimeGrid};
use crate::inversion::{
    simulate, Branch, BranchPolicy, InversionConfig, NoiseSpec, ReconstructionResult,
};
use crate::physics::{PhysicalParams, RadiusRule, SdPair, Target};

/// Medium constants with the tissue defaults filled in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsConfig {
    pub v: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub mu_a: f64,
    pub beta: f64,
    pub ell: f64,
    pub c_strength: f64,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        ParamsConfig {
            v: 0.219,
            d: 1.0 / 3.0,
            mu_a: 0.1,
            beta: 0.5493,
            ell: 100.0,
            c_strength: 1.0,
        }
    }
}

impl ParamsConfig {
    pub fn resolve(&self) -> Result<PhysicalParams> {
        PhysicalParams::new(
            self.v,
            self.d,
            self.mu_a,
            self.beta,
            self.ell,
            self.c_strength,
        )
    }
}

/// A source-detector pair by in-plane coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairConfig {
    pub detector: [f64; 2],
    pub source: [f64; 2],
}

impl PairConfig {
    pub fn resolve(&self) -> Result<SdPair> {
        SdPair::planar(self.source, self.detector)
    }
}

impl Default for PairConfig {
    fn default() -> Self {
        PairConfig {
            detector: [14.0, 10.0],
            source: [6.0, 10.0],
        }
    }
}

fn target_of(xyz: [f64; 3]) -> Result<Target> {
    Target::at(xyz[0], xyz[1], xyz[2])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurveConfig {
    pub pair: PairConfig,
    pub target: [f64; 3],
    pub t_max: f64,
    /// Uniform output intervals; the file has `intervals + 1` rows.
    pub intervals: usize,
}

impl Default for CurveConfig {
    fn default() -> Self {
        CurveConfig {
            pair: PairConfig::default(),
            target: [10.0, 10.0, 20.0],
            t_max: 3000.0,
            intervals: 2048,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Ell,
    MuA,
    XC3,
}

impl SweepAxis {
    fn name(self) -> &'static str {
        match self {
            SweepAxis::Ell => "ell",
            SweepAxis::MuA => "mu_a",
            SweepAxis::XC3 => "x_c3",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub pair: PairConfig,
    /// Target; its depth is replaced by the sweep value when sweeping x_c3.
    pub target: [f64; 3],
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            axis: SweepAxis::XC3,
            start: 20.0,
            stop: 60.0,
            points: 9,
            pair: PairConfig::default(),
            target: [10.0, 10.0, 20.0],
        }
    }
}

impl SweepConfig {
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.start > 0.0 && self.stop >= self.start && self.points >= 1) {
            return Err(FdotError::Config(
                "sweep needs 0 < start <= stop and at least one point".into(),
            ));
        }
        if self.points == 1 {
            return Ok(vec![self.start]);
        }
        let step = (self.stop - self.start) / (self.points - 1) as f64;
        Ok((0..self.points)
            .map(|i| self.start + step * i as f64)
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconstructConfig {
    pub targets: Vec<[f64; 3]>,
    pub pairs: Vec<PairConfig>,
    /// Noise levels; every (target, pair) is run at each.
    pub noise: Vec<f64>,
    /// Repetitions of each (target, pair, noise) combination.
    pub runs: usize,
    pub theta1: f64,
    pub theta2: f64,
}

impl Default for ReconstructConfig {
    fn default() -> Self {
        ReconstructConfig {
            targets: vec![[8.0, 7.0, 20.0], [8.0, 7.0, 30.0]],
            pairs: vec![
                PairConfig {
                    detector: [14.0, 10.0],
                    source: [6.0, 10.0],
                },
                PairConfig {
                    detector: [8.0, 5.0],
                    source: [0.0, 5.0],
                },
                PairConfig {
                    detector: [5.0, 0.0],
                    source: [5.0, 8.0],
                },
                PairConfig {
                    detector: [16.0, 15.0],
                    source: [8.0, 15.0],
                },
            ],
            noise: vec![0.0],
            runs: 1,
            theta1: 0.0,
            theta2: FRAC_PI_2,
        }
    }
}

/// Everything a command needs. Every field has a default, so an empty file
/// is a valid config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub branch: BranchPolicy,
    pub radius_rule: RadiusRule,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
    pub params: ParamsConfig,
    pub curve: CurveConfig,
    pub sweep: SweepConfig,
    pub reconstruct: ReconstructConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            branch: BranchPolicy::Auto,
            radius_rule: RadiusRule::Geometric,
            threads: 0,
            params: ParamsConfig::default(),
            curve: CurveConfig::default(),
            sweep: SweepConfig::default(),
            reconstruct: ReconstructConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| FdotError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| FdotError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| FdotError::Config(e.to_string()))
    }

    /// Single-noise-level override, as given on the command line.
    pub fn set_noise(&mut self, delta_hat: f64) {
        self.reconstruct.noise = vec![delta_hat];
    }
}

/// Formats with six significant digits; plain notation for moderate
/// magnitudes, scientific otherwise.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..6).contains(&mag) {
        let decimals = (5 - mag).max(0) as usize;
        let s = format!("{x:.decimals$}");
        // Rounding can carry into a new digit (e.g. 9.999995 -> 10.00000).
        if s.trim_start_matches('-')
            .replace('.', "")
            .trim_start_matches('0')
            .len()
            > 6
            && decimals > 0
        {
            let d = decimals - 1;
            return format!("{x:.d$}");
        }
        s
    } else {
        format!("{x:.5e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(sig6).unwrap_or_default()
}

/// One output row as CSV fields.
pub trait CsvRow {
    fn header() -> &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

pub fn write_csv<W: Write, R: CsvRow>(out: W, rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(R::header())?;
    for row in rows {
        w.write_record(row.fields())?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub t_ps: f64,
    pub u_m: f64,
    pub big_u_m: f64,
    pub u_m_asymptotic: f64,
}

impl CsvRow for CurveRow {
    fn header() -> &'static [&'static str] {
        &["t_ps", "u_m", "U_m", "u_m_asymptotic"]
    }
    fn fields(&self) -> Vec<String> {
        vec![
            sig6(self.t_ps),
            sig6(self.u_m),
            sig6(self.big_u_m),
            sig6(self.u_m_asymptotic),
        ]
    }
}

pub fn run_curve(cfg: &ExperimentConfig) -> Result<Vec<CurveRow>> {
    let params = cfg.params.resolve()?;
    let pair = cfg.curve.pair.resolve()?;
    let target = target_of(cfg.curve.target)?;
    let model = ForwardModel::new(&pair, &target, &params);
    let curve = model.curve(&TimeGrid::uniform(cfg.curve.t_max, cfg.curve.intervals)?)?;
    let asym = curve.asymptotic();
    Ok((0..curve.times.len())
        .map(|i| CurveRow {
            t_ps: curve.times[i],
            u_m: curve.zero_lifetime[i],
            big_u_m: curve.values[i],
            u_m_asymptotic: asym[i],
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis: SweepAxis,
    pub value: f64,
    pub lambda: f64,
    pub t_peak: Option<f64>,
    /// Small-lifetime expansion.
    pub t_peak_s: Option<f64>,
    /// Small-lifetime root.
    pub t_peak_p0: Option<f64>,
    /// Large-lifetime root.
    pub t_peak_l0: Option<f64>,
    /// Large-lifetime expansion.
    pub t_peak_l: Option<f64>,
    pub errors: Vec<String>,
}

impl SweepRow {
    pub fn rel_err(&self, approx: Option<f64>) -> Option<f64> {
        Some((approx? - self.t_peak?).abs() / self.t_peak?)
    }
}

impl CsvRow for SweepRow {
    fn header() -> &'static [&'static str] {
        &[
            "axis",
            "value",
            "lambda",
            "t_peak",
            "t_peak_s",
            "t_peak_p0",
            "t_peak_l0",
            "t_peak_l",
            "rel_err_s",
            "rel_err_p0",
            "rel_err_l0",
            "rel_err_l",
            "error",
        ]
    }
    fn fields(&self) -> Vec<String> {
        vec![
            self.axis.name().into(),
            sig6(self.value),
            sig6(self.lambda),
            opt(self.t_peak),
            opt(self.t_peak_s),
            opt(self.t_peak_p0),
            opt(self.t_peak_l0),
            opt(self.t_peak_l),
            opt(self.rel_err(self.t_peak_s)),
            opt(self.rel_err(self.t_peak_p0)),
            opt(self.rel_err(self.t_peak_l0)),
            opt(self.rel_err(self.t_peak_l)),
            self.errors.join("; "),
        ]
    }
}

/// All peak-time estimates for one configuration; failures are collected
/// rather than raised.
pub fn sweep_point(
    axis: SweepAxis,
    value: f64,
    pair: &SdPair,
    target: &Target,
    params: &PhysicalParams,
) -> SweepRow {
    let ctx = PeakEquationContext::from_geometry(pair, target, params);
    let mut errors = Vec::new();
    let mut keep = |label: &str, r: Result<f64>| match r {
        Ok(t) => Some(t),
        Err(e) => {
            errors.push(format!("{label}: {e}"));
            None
        }
    };
    let model = ForwardModel::new(pair, target, params);
    let t_peak = keep(
        "t_peak",
        peak_time_numeric(&model, &PeakSearch::default()).map(|e| e.t_peak),
    );
    let t_peak_s = keep(
        "t_peak_s",
        asymptotic_peak_small_ell(&ctx).map(|e| e.t_peak),
    );
    let t_peak_p0 = keep("t_peak_p0", approx_peak_small_ell(&ctx).map(|e| e.t_peak));
    let t_peak_l0 = keep("t_peak_l0", approx_peak_large_ell(&ctx).map(|e| e.t_peak));
    let t_peak_l = keep(
        "t_peak_l",
        asymptotic_peak_large_ell(&ctx).map(|e| e.t_peak),
    );
    SweepRow {
        axis,
        value,
        lambda: ctx.lambda,
        t_peak,
        t_peak_s,
        t_peak_p0,
        t_peak_l0,
        t_peak_l,
        errors,
    }
}

pub fn run_peak_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    let base = cfg.params.resolve()?;
    let pair = cfg.sweep.pair.resolve()?;
    let [x, y, z] = cfg.sweep.target;
    let axis = cfg.sweep.axis;
    let points = cfg
        .sweep
        .values()?
        .into_iter()
        .map(|v| {
            let (params, depth) = match axis {
                SweepAxis::Ell => (base.with_ell(v)?, z),
                SweepAxis::MuA => (base.with_mu_a(v)?, z),
                SweepAxis::XC3 => (base, v),
            };
            Ok((v, params, Target::at(x, y, depth)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(points
        .par_iter()
        .map(|(v, params, target)| sweep_point(axis, *v, &pair, target, params))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructRow {
    pub row: usize,
    pub target: [f64; 3],
    pub pair: PairConfig,
    pub delta_hat: f64,
    pub seed: u64,
    pub outcome: std::result::Result<ReconstructionResult, FdotError>,
}

impl ReconstructRow {
    pub fn estimate(&self) -> Option<[f64; 3]> {
        let e = self.outcome.as_ref().ok()?.estimate;
        Some([e[0], e[1], e[2]])
    }
    pub fn rel_err(&self) -> Option<f64> {
        self.outcome.as_ref().ok()?.rel_err
    }
}

impl CsvRow for ReconstructRow {
    fn header() -> &'static [&'static str] {
        &[
            "row",
            "target_x",
            "target_y",
            "target_z",
            "detector_x",
            "detector_y",
            "source_x",
            "source_y",
            "delta_hat",
            "seed",
            "inv_x",
            "inv_y",
            "inv_z",
            "rel_err",
            "t_peak_1",
            "t_peak_2",
            "t_peak_3",
            "r",
            "r1",
            "r2",
            "branch",
            "error",
        ]
    }
    fn fields(&self) -> Vec<String> {
        let mut f = vec![self.row.to_string()];
        f.extend(self.target.iter().map(|&v| sig6(v)));
        f.extend(
            [
                self.pair.detector[0],
                self.pair.detector[1],
                self.pair.source[0],
                self.pair.source[1],
            ]
            .map(sig6),
        );
        f.push(sig6(self.delta_hat));
        f.push(self.seed.to_string());
        match &self.outcome {
            Ok(res) => {
                f.extend(res.estimate.iter().map(|&v| sig6(v)));
                f.push(opt(res.rel_err));
                f.extend(res.peak_times().map(sig6));
                f.extend(res.radii().map(sig6));
                let branches: Vec<&str> = res
                    .measurements
                    .measurements
                    .iter()
                    .map(|m| match m.branch {
                        Branch::Small => "small",
                        Branch::Large => "large",
                    })
                    .collect();
                f.push(branches.join("/"));
                f.push(String::new());
            }
            Err(e) => {
                f.extend(std::iter::repeat_n(String::new(), 11));
                f.push(e.to_string());
            }
        }
        f
    }
}

pub fn run_reconstruct(cfg: &ExperimentConfig) -> Result<Vec<ReconstructRow>> {
    let params = cfg.params.resolve()?;
    let rc = &cfg.reconstruct;
    let inv = InversionConfig::new(params)
        .with_angles(rc.theta1, rc.theta2)?
        .with_branch(cfg.branch)
        .with_radius_rule(cfg.radius_rule);
    let mut jobs = Vec::new();
    for &t in &rc.targets {
        let target = target_of(t)?;
        for pc in &rc.pairs {
            let pair = pc.resolve()?;
            for &delta in &rc.noise {
                for _ in 0..rc.runs {
                    let row = jobs.len();
                    let seed = cfg.seed.wrapping_add(row as u64);
                    jobs.push((row, t, target, *pc, pair, NoiseSpec::new(delta, seed)?));
                }
            }
        }
    }
    Ok(jobs
        .into_par_iter()
        .map(|(row, t, target, pc, pair, noise)| ReconstructRow {
            row,
            target: t,
            pair: pc,
            delta_hat: noise.delta_hat,
            seed: noise.seed,
            outcome: simulate(&target, &pair, &inv, noise),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Curve,
    PeakSweep,
    Reconstruct,
}

/// Path of the JSON config echo written next to `out`.
pub fn echo_path(out: &Path) -> PathBuf {
    out.with_extension("config.json")
}

/// Runs `command`, writing CSV to `out` and the resolved config beside it.
/// Returns the number of rows that carry an error.
pub fn run_to_file(command: Command, cfg: &ExperimentConfig, out: &Path) -> Result<usize> {
    let file = File::create(out).map_err(|e| FdotError::Io(format!("{}: {e}", out.display())))?;
    let soft_errors = match command {
        Command::Curve => {
            write_csv(file, &run_curve(cfg)?)?;
            0
        }
        Command::PeakSweep => {
            let rows = run_peak_sweep(cfg)?;
            write_csv(file, &rows)?;
            rows.iter().filter(|r| !r.errors.is_empty()).count()
        }
        Command::Reconstruct => {
            let rows = run_reconstruct(cfg)?;
            write_csv(file, &rows)?;
            rows.iter().filter(|r| r.outcome.is_err()).count()
        }
    };
    std::fs::write(echo_path(out), cfg.to_json()?)?;
    Ok(soft_errors)
}
