//! Target localisation from three peak-time measurements.
//!
//! Each peak time is inverted to a distance parameter `lambda`, hence to a
//! sphere about the pair midpoint on which the target lies. The second and
//! third pairs are the first pair translated by the first radius along two
//! perpendicular directions, so the three spheres meet at one point below
//! the surface.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{FdotError, Result};
use crate::forward::{peak_time_numeric, ForwardModel, PeakSearch};
use crate::physics::{k_rate, radius_with_rule, PhysicalParams, Point, RadiusRule, SdPair, Target};

/// Which closed-form expansion inverts a peak time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Small,
    Large,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchPolicy {
    /// Large branch iff ell > 1/k and its log argument is below 1 at the
    /// measured time; small branch otherwise.
    #[default]
    Auto,
    Small,
    Large,
}

impl std::str::FromStr for BranchPolicy {
    type Err = FdotError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(BranchPolicy::Auto),
            "small" => Ok(BranchPolicy::Small),
            "large" => Ok(BranchPolicy::Large),
            _ => Err(FdotError::Config(format!(
                "unknown branch '{s}' (auto, small, large)"
            ))),
        }
    }
}

fn alpha_tilde_argument(t: f64, params: &PhysicalParams) -> Option<f64> {
    let ell = params.ell();
    let kappa = k_rate(params) - 1.0 / ell;
    if !(ell > 0.0 && kappa > 0.0) {
        return None;
    }
    Some(PI.sqrt() / ell * (t / kappa).sqrt())
}

/// `(-log[sqrt(pi) ell^{-1} (k - 1/ell)^{-1/2} t^{1/2}])^{1/2}`.
pub fn alpha_tilde(t: f64, params: &PhysicalParams) -> Result<f64> {
    match alpha_tilde_argument(t, params) {
        None => Err(FdotError::Validity("large branch needs ell > 1/k".into())),
        Some(arg) if arg < 1.0 => Ok((-arg.ln()).sqrt()),
        Some(arg) => Err(FdotError::Validity(format!(
            "large branch log argument {arg:.6} >= 1 at t = {t:.3}"
        ))),
    }
}

pub fn select_branch(t: f64, params: &PhysicalParams, policy: BranchPolicy) -> Branch {
    match policy {
        BranchPolicy::Small => Branch::Small,
        BranchPolicy::Large => Branch::Large,
        BranchPolicy::Auto => match alpha_tilde_argument(t, params) {
            Some(arg) if arg < 1.0 => Branch::Large,
            _ => Branch::Small,
        },
    }
}

/// Distance parameter from a measured peak time. Errors if the expansion
/// gives lambda <= 0 or the large branch is outside its domain.
pub fn lambda_from_peak(t: f64, params: &PhysicalParams, branch: Branch) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(FdotError::InvalidParameter(format!(
            "peak time {t} must be > 0"
        )));
    }
    let k = k_rate(params);
    let sk = k.sqrt();
    let lambda = match branch {
        Branch::Small => {
            let boundary = sk / (sk + params.beta() * params.vd().sqrt());
            sk * t + 1.75 / sk - boundary / sk - params.ell() * sk
        }
        Branch::Large => {
            let alpha = alpha_tilde(t, params)?;
            let kappa = k - 1.0 / params.ell();
            kappa.sqrt() * t - alpha * t.sqrt() + 0.5 * alpha * alpha / kappa.sqrt()
        }
    };
    if !(lambda > 0.0) {
        return Err(FdotError::NonPositiveLambda(lambda));
    }
    Ok(lambda)
}

/// In-plane unit vector at angle theta.
fn direction(theta: f64) -> (f64, f64) {
    (theta.cos(), theta.sin())
}

/// The two translated copies of `initial`, shifted by r along theta1 and theta2.
pub fn place_sd_pairs(initial: &SdPair, r: f64, theta1: f64, theta2: f64) -> [SdPair; 2] {
    let (c1, s1) = direction(theta1);
    let (c2, s2) = direction(theta2);
    [
        initial.translated(r * c1, r * s1),
        initial.translated(r * c2, r * s2),
    ]
}

/// Intersection of the three spheres below the surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tetrahedron {
    /// Offsets of the apex from the first midpoint along the two translation
    /// directions.
    pub along_first: f64,
    pub along_second: f64,
    pub depth: f64,
    pub discriminant: f64,
}

/// Solves |p| = r, |p - r e1| = r1, |p - r e2| = r2 with p_z > 0.
pub fn reconstruct_tetrahedron(r: f64, r1: f64, r2: f64) -> Result<Tetrahedron> {
    if !(r > 0.0 && r1 > 0.0 && r2 > 0.0) {
        return Err(FdotError::InvalidParameter("radii must be > 0".into()));
    }
    let (r_sq, r1_sq, r2_sq) = (r * r, r1 * r1, r2 * r2);
    let discriminant = r1_sq + r2_sq - (r1_sq * r1_sq + r2_sq * r2_sq) / (4.0 * r_sq) - r_sq;
    if discriminant < 0.0 {
        return Err(FdotError::DegenerateTetrahedron { discriminant });
    }
    Ok(Tetrahedron {
        along_first: (2.0 * r_sq - r1_sq) / (2.0 * r),
        along_second: (2.0 * r_sq - r2_sq) / (2.0 * r),
        depth: discriminant.sqrt(),
        discriminant,
    })
}

/// Target location from the three radii about the midpoint of `initial`.
pub fn reconstruct_target(
    initial: &SdPair,
    radii: [f64; 3],
    theta1: f64,
    theta2: f64,
) -> Result<(Point, Tetrahedron)> {
    let tet = reconstruct_tetrahedron(radii[0], radii[1], radii[2])?;
    let (c1, s1) = direction(theta1);
    let (c2, s2) = direction(theta2);
    let m = initial.midpoint();
    let x = m[0] + tet.along_first * c1 + tet.along_second * c2;
    let y = m[1] + tet.along_first * s1 + tet.along_second * s2;
    Ok((Point::new(x, y, tet.depth), tet))
}

/// `t (1 + delta_hat (2u - 1))` with u uniform on (0, 1).
pub fn add_noise<R: Rng + ?Sized>(t: f64, delta_hat: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    t * (1.0 + delta_hat * (2.0 * u - 1.0))
}

/// Multiplicative uniform noise on each simulated peak time.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub delta_hat: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        NoiseSpec::default()
    }

    pub fn new(delta_hat: f64, seed: u64) -> Result<Self> {
        if !(0.0..1.0).contains(&delta_hat) {
            return Err(FdotError::InvalidParameter(
                "noise level must be in [0, 1)".into(),
            ));
        }
        Ok(NoiseSpec { delta_hat, seed })
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

pub fn rel_err(truth: &Target, estimate: &Point) -> f64 {
    (truth.location() - estimate).norm() / truth.location().norm()
}

/// Everything the inversion needs besides the measurements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionConfig {
    pub params: PhysicalParams,
    theta1: f64,
    theta2: f64,
    pub branch: BranchPolicy,
    pub radius_rule: RadiusRule,
}

impl InversionConfig {
    /// Translations along +x then +y, automatic branch, geometric radius.
    pub fn new(params: PhysicalParams) -> Self {
        InversionConfig {
            params,
            theta1: 0.0,
            theta2: FRAC_PI_2,
            branch: BranchPolicy::Auto,
            radius_rule: RadiusRule::Geometric,
        }
    }

    /// Sets the translation angles; theta2 - theta1 must be pi/2 mod 2 pi.
    pub fn with_angles(mut self, theta1: f64, theta2: f64) -> Result<Self> {
        let diff = (theta2 - theta1 - FRAC_PI_2).rem_euclid(2.0 * PI);
        if diff.min(2.0 * PI - diff) > 1e-9 {
            return Err(FdotError::InvalidParameter(
                "theta2 - theta1 must equal pi/2 modulo 2 pi".into(),
            ));
        }
        self.theta1 = theta1;
        self.theta2 = theta2;
        Ok(self)
    }

    pub fn with_branch(mut self, branch: BranchPolicy) -> Self {
        self.branch = branch;
        self
    }

    pub fn with_radius_rule(mut self, rule: RadiusRule) -> Self {
        self.radius_rule = rule;
        self
    }

    pub fn theta1(&self) -> f64 {
        self.theta1
    }
    pub fn theta2(&self) -> f64 {
        self.theta2
    }
}

/// One recorded measurement and what was derived from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub pair: SdPair,
    pub t_peak: f64,
    pub branch: Branch,
    pub lambda: f64,
    pub radius: f64,
}

/// The three measurements of one localisation.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pub measurements: Vec<Measurement>,
    pub theta1: f64,
    pub theta2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult {
    pub estimate: Point,
    pub tetrahedron: Tetrahedron,
    pub measurements: MeasurementSet,
    /// Present when the true target is known (simulation).
    pub rel_err: Option<f64>,
}

impl ReconstructionResult {
    pub fn peak_times(&self) -> [f64; 3] {
        let m = &self.measurements.measurements;
        [m[0].t_peak, m[1].t_peak, m[2].t_peak]
    }
    pub fn radii(&self) -> [f64; 3] {
        let m = &self.measurements.measurements;
        [m[0].radius, m[1].radius, m[2].radius]
    }
}

const STAGES: [&str; 3] = [
    "initial pair",
    "first translated pair",
    "second translated pair",
];

/// Localisation driven one measurement at a time.
///
/// The second and third placements depend on the first radius, so they are
/// only available after the first peak time has been recorded.
#[derive(Debug, Clone)]
pub struct StagedInversion {
    initial: SdPair,
    config: InversionConfig,
    measurements: Vec<Measurement>,
    placements: Option<[SdPair; 2]>,
}

impl StagedInversion {
    pub fn new(initial: SdPair, config: InversionConfig) -> Self {
        StagedInversion {
            initial,
            config,
            measurements: Vec::with_capacity(3),
            placements: None,
        }
    }

    /// Pair to measure next, or `None` once all three are recorded.
    pub fn next_placement(&self) -> Option<SdPair> {
        match (self.measurements.len(), &self.placements) {
            (0, _) => Some(self.initial),
            (1, Some(p)) => Some(p[0]),
            (2, Some(p)) => Some(p[1]),
            _ => None,
        }
    }

    pub fn stage(&self) -> &'static str {
        STAGES
            .get(self.measurements.len())
            .copied()
            .unwrap_or("tetrahedron")
    }

    /// Records the peak time measured at [`next_placement`](Self::next_placement).
    pub fn record(&mut self, t_peak: f64) -> Result<&Measurement> {
        let stage = self.stage();
        let pair = self
            .next_placement()
            .ok_or_else(|| FdotError::InvalidParameter("all three measurements recorded".into()))?;
        let cfg = &self.config;
        let branch = select_branch(t_peak, &cfg.params, cfg.branch);
        let lambda = lambda_from_peak(t_peak, &cfg.params, branch).map_err(|e| e.at(stage))?;
        let radius = radius_with_rule(lambda, &pair, &cfg.params, cfg.radius_rule)
            .map_err(|e| e.at(stage))?;
        if self.measurements.is_empty() {
            self.placements = Some(place_sd_pairs(
                &self.initial,
                radius,
                cfg.theta1,
                cfg.theta2,
            ));
        }
        self.measurements.push(Measurement {
            pair,
            t_peak,
            branch,
            lambda,
            radius,
        });
        Ok(self.measurements.last().expect("just pushed"))
    }

    pub fn finish(self) -> Result<ReconstructionResult> {
        if self.measurements.len() != 3 {
            return Err(FdotError::InvalidParameter(format!(
                "{} of 3 measurements recorded",
                self.measurements.len()
            )));
        }
        let radii = [
            self.measurements[0].radius,
            self.measurements[1].radius,
            self.measurements[2].radius,
        ];
        let (estimate, tetrahedron) =
            reconstruct_target(&self.initial, radii, self.config.theta1, self.config.theta2)
                .map_err(|e| e.at("tetrahedron"))?;
        Ok(ReconstructionResult {
            estimate,
            tetrahedron,
            measurements: MeasurementSet {
                measurements: self.measurements,
                theta1: self.config.theta1,
                theta2: self.config.theta2,
            },
            rel_err: None,
        })
    }
}

/// Supplies peak times for the pairs an inversion asks for.
pub trait PeakTimeSource {
    fn peak_time(&mut self, pair: &SdPair) -> Result<f64>;
}

impl<F: FnMut(&SdPair) -> Result<f64>> PeakTimeSource for F {
    fn peak_time(&mut self, pair: &SdPair) -> Result<f64> {
        self(pair)
    }
}

/// Peak times of the forward model for a known target, optionally perturbed.
#[derive(Debug, Clone)]
pub struct SimulatedSource {
    pub target: Target,
    pub params: PhysicalParams,
    pub search: PeakSearch,
    delta_hat: f64,
    rng: ChaCha8Rng,
}

impl SimulatedSource {
    pub fn new(target: Target, params: PhysicalParams, noise: NoiseSpec) -> Self {
        SimulatedSource {
            target,
            params,
            search: PeakSearch::default(),
            delta_hat: noise.delta_hat,
            rng: noise.rng(),
        }
    }
}

impl PeakTimeSource for SimulatedSource {
    fn peak_time(&mut self, pair: &SdPair) -> Result<f64> {
        let model = ForwardModel::new(pair, &self.target, &self.params);
        let t = peak_time_numeric(&model, &self.search)?.t_peak;
        if self.delta_hat == 0.0 {
            return Ok(t);
        }
        Ok(add_noise(t, self.delta_hat, &mut self.rng))
    }
}

/// Runs all three stages against `source`.
pub fn invert<S: PeakTimeSource + ?Sized>(
    initial: &SdPair,
    config: &InversionConfig,
    source: &mut S,
) -> Result<ReconstructionResult> {
    let mut staged = StagedInversion::new(*initial, *config);
    while let Some(pair) = staged.next_placement() {
        let stage = staged.stage();
        let t = source.peak_time(&pair).map_err(|e| e.at(stage))?;
        staged.record(t)?;
    }
    staged.finish()
}

/// Simulated localisation of a known target, with relative error filled in.
pub fn simulate(
    target: &Target,
    initial: &SdPair,
    config: &InversionConfig,
    noise: NoiseSpec,
) -> Result<ReconstructionResult> {
    let mut source = SimulatedSource::new(*target, config.params, noise);
    let mut result = invert(initial, config, &mut source)?;
    result.rel_err = Some(rel_err(target, &result.estimate));
    Ok(result)
}
