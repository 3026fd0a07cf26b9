//! Forward model: time-resolved fluorescence at one detector.
//!
//! The zero-lifetime response `u_m` is a one-dimensional convolution in time
//! of two half-space Robin Green's functions, evaluated by adaptive
//! Gauss-Kronrod quadrature. The finite-lifetime response `U_m` convolves
//! `u_m` with the exponential decay `exp(-t/ell)/ell` on a fixed time grid.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::approx::{
    approx_peak, solve_p_root, Diagnostics, PeakEquationContext, PeakMethod, PeakTimeEstimate,
    RegimeFlag,
};
use crate::error::{FdotError, Result};
use crate::physics::{k_rate, lambda_param, PhysicalParams, SdPair, Target};
use crate::quadrature::{integrate_pieces, Tolerance};
use crate::special::erfcx;

/// Relative tolerance of the inner time convolution.
pub const QUAD_REL_TOL: f64 = 1e-8;
/// Default number of grid intervals for the lifetime convolution.
pub const DEFAULT_INTERVALS: usize = 2048;
/// Richardson error (relative to the curve maximum) above which a numeric
/// peak is flagged.
pub const COARSE_CONVOLUTION: f64 = 1e-4;

/// Robin boundary factor `1 - beta sqrt(pi vD t) erfcx((x3 + 2 beta vD t) / sqrt(4 vD t))`.
///
/// Equals 1 at t = 0 and for beta = 0; lies in (0, 1] otherwise.
pub fn khat(x3: f64, t: f64, params: &PhysicalParams) -> f64 {
    let beta = params.beta();
    if beta == 0.0 || t <= 0.0 {
        return 1.0;
    }
    let vd = params.vd();
    let xi = (x3 + 2.0 * beta * vd * t) / (4.0 * vd * t).sqrt();
    1.0 - beta * (PI * vd * t).sqrt() * erfcx(xi)
}

/// Precomputed geometry for one (pair, target, params) triple.
#[derive(Debug, Clone, Copy)]
pub struct ForwardModel {
    pair: SdPair,
    target: Target,
    params: PhysicalParams,
    k: f64,
    lambda: f64,
    // |x_d - x_c|^2 / (4 vD) and |x_s - x_c|^2 / (4 vD)
    qa: f64,
    qb: f64,
    prefactor: f64,
    asym_prefactor: f64,
}

impl ForwardModel {
    pub fn new(pair: &SdPair, target: &Target, params: &PhysicalParams) -> Self {
        let xc = target.location();
        let a = (pair.detector() - xc).norm_squared();
        let b = (pair.source() - xc).norm_squared();
        let (v, d, c) = (params.v(), params.d(), params.c_strength());
        let vd = params.vd();
        ForwardModel {
            pair: *pair,
            target: *target,
            params: *params,
            k: k_rate(params),
            lambda: lambda_param(pair, target, params),
            qa: a / (4.0 * vd),
            qb: b / (4.0 * vd),
            prefactor: c / (16.0 * PI.powi(3) * d * d * v),
            asym_prefactor: c / (8.0 * PI.powf(2.5) * v.sqrt() * d.powf(1.5))
                * (1.0 / a.sqrt() + 1.0 / b.sqrt()),
        }
    }

    pub fn pair(&self) -> &SdPair {
        &self.pair
    }
    pub fn target(&self) -> &Target {
        &self.target
    }
    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn khat(&self, t: f64) -> f64 {
        khat(self.target.depth(), t, &self.params)
    }

    /// Integrand of the time convolution at s (time since emission from the
    /// source leg) and r = t - s, multiplied by `jac`, in log form.
    fn integrand(&self, s: f64, r: f64, jac: f64) -> f64 {
        if s <= 0.0 || r <= 0.0 || jac <= 0.0 {
            return 0.0;
        }
        let expo = jac.ln() - 1.5 * (r.ln() + s.ln()) - self.qa / r - self.qb / s;
        if expo < -745.0 {
            return 0.0;
        }
        expo.exp() * self.khat(r) * self.khat(s)
    }

    /// The time integral without prefactor and decay.
    fn convolution_integral(&self, t: f64) -> Result<f64> {
        // s = t w^2 on the first half and t - s = t (2h - w)^2 on the second
        // remove the endpoint behaviour; the kink at w = h is a breakpoint.
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let f = |w: f64| {
            if w <= h {
                let s = t * w * w;
                self.integrand(s, t - s, 2.0 * t * w)
            } else {
                let tau = 2.0 * h - w;
                let r = t * tau * tau;
                self.integrand(t - r, r, 2.0 * t * tau)
            }
        };
        let est = integrate_pieces(f, &[0.0, h, 2.0 * h], Tolerance::relative(QUAD_REL_TOL))?;
        Ok(est.value)
    }

    /// Zero-lifetime response `u_m(t)`; zero for t <= 0.
    pub fn zero_lifetime(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Ok(0.0);
        }
        let decay = (-self.k * t).exp();
        if decay == 0.0 {
            return Ok(0.0);
        }
        Ok(self.prefactor * decay * self.convolution_integral(t)?)
    }

    /// Large-distance profile `u_m^a(t)`; zero for t <= 0.
    pub fn asymptotic(&self, t: f64) -> f64 {
        if !(t > 0.0) {
            return 0.0;
        }
        let x3 = self.target.depth();
        let boundary = x3 / (x3 + self.params.beta() * self.params.vd() * t);
        let expo = -self.k * t - 1.5 * t.ln() - self.lambda * self.lambda / t;
        self.asym_prefactor * expo.exp() * boundary * boundary
    }

    /// Finite-lifetime response `U_m(t)`, Richardson-extrapolated from the
    /// default grid and its every-other-node subgrid.
    pub fn lifetime_response(&self, t: f64) -> Result<f64> {
        Ok(self.lifetime_estimate(t, DEFAULT_INTERVALS)?.value)
    }

    pub fn lifetime_estimate(&self, t: f64, intervals: usize) -> Result<ConvolutionEstimate> {
        if !(t > 0.0) {
            return Ok(ConvolutionEstimate {
                value: 0.0,
                error: 0.0,
            });
        }
        if self.params.ell() == 0.0 {
            return Ok(ConvolutionEstimate {
                value: self.zero_lifetime(t)?,
                error: 0.0,
            });
        }
        let curve = self.curve(&TimeGrid::new(t, intervals)?)?;
        let fine = *curve.values.last().expect("grid has nodes");
        let coarse = *curve.coarse_values().last().expect("grid has nodes");
        Ok(ConvolutionEstimate {
            value: fine + (fine - coarse) / 3.0,
            error: (fine - coarse).abs() / 3.0,
        })
    }

    /// `u_m` and `U_m` at every grid node.
    pub fn curve(&self, grid: &TimeGrid) -> Result<ResponseCurve> {
        let zero_lifetime = grid
            .times
            .par_iter()
            .map(|&t| self.zero_lifetime(t))
            .collect::<Result<Vec<_>>>()?;
        let values = convolve(&grid.times, &zero_lifetime, self.params.ell(), 1);
        Ok(ResponseCurve {
            times: grid.times.clone(),
            zero_lifetime,
            values,
            model: *self,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvolutionEstimate {
    pub value: f64,
    pub error: f64,
}

/// Exact integral of `exp(-(h - s)/ell)/ell` against the linear interpolant of
/// (u0, u1) over [0, h], returned as the weights of u0 and u1, plus exp(-h/ell).
fn exponential_weights(h: f64, ell: f64) -> (f64, f64, f64) {
    let x = h / ell;
    let decay = (-x).exp();
    if x < 1e-4 {
        let w0 = x * (0.5 - x * (1.0 / 3.0 - x * (0.125 - x / 30.0)));
        let w1 = x * (0.5 - x * (1.0 / 6.0 - x * (1.0 / 24.0 - x / 120.0)));
        return (decay, w0, w1);
    }
    let one_minus = -(-x).exp_m1();
    let w1 = 1.0 - one_minus / x;
    let w0 = one_minus / x - decay;
    (decay, w0, w1)
}

/// Product-trapezoid convolution over nodes 0, stride, 2 stride, ...
/// Output has one value per visited node.
fn convolve(times: &[f64], u: &[f64], ell: f64, stride: usize) -> Vec<f64> {
    let idx: Vec<usize> = (0..times.len()).step_by(stride).collect();
    if ell == 0.0 {
        return idx.iter().map(|&i| u[i]).collect();
    }
    let mut out = Vec::with_capacity(idx.len());
    let mut acc = 0.0;
    out.push(acc);
    for w in idx.windows(2) {
        let (i, j) = (w[0], w[1]);
        let (decay, w0, w1) = exponential_weights(times[j] - times[i], ell);
        acc = decay * acc + w0 * u[i] + w1 * u[j];
        out.push(acc);
    }
    out
}

/// Convolution nodes: log-spaced over the first 1/64 of the span, uniform
/// after. Always an even number of intervals so the every-other-node subgrid
/// ends at the same time.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(t_end: f64, intervals: usize) -> Result<Self> {
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(FdotError::InvalidParameter("grid end must be > 0".into()));
        }
        if intervals < 64 || !intervals.is_multiple_of(2) {
            return Err(FdotError::InvalidParameter(
                "grid needs an even number of at least 64 intervals".into(),
            ));
        }
        let n_log = intervals / 8;
        let n_lin = intervals - n_log;
        let t_switch = t_end / 64.0;
        let t_first = t_switch * 1e-4;
        let mut times = Vec::with_capacity(intervals + 1);
        times.push(0.0);
        let ratio = (t_switch / t_first).powf(1.0 / (n_log - 1) as f64);
        for i in 0..n_log {
            times.push(t_first * ratio.powi(i as i32));
        }
        let h = (t_end - t_switch) / n_lin as f64;
        for i in 1..=n_lin {
            times.push(t_switch + h * i as f64);
        }
        *times.last_mut().expect("non-empty") = t_end;
        Ok(TimeGrid { times })
    }

    /// A uniform grid, for curves exported on a regular time axis.
    pub fn uniform(t_end: f64, intervals: usize) -> Result<Self> {
        if !(t_end > 0.0 && t_end.is_finite()) || intervals == 0 {
            return Err(FdotError::InvalidParameter(
                "uniform grid needs t_end > 0 and intervals > 0".into(),
            ));
        }
        let h = t_end / intervals as f64;
        Ok(TimeGrid {
            times: (0..=intervals).map(|i| h * i as f64).collect(),
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }
}

/// Sampled responses. `values[i]` is `U_m(times[i])`; `values[0] = 0`.
#[derive(Debug, Clone)]
pub struct ResponseCurve {
    pub times: Vec<f64>,
    pub zero_lifetime: Vec<f64>,
    pub values: Vec<f64>,
    model: ForwardModel,
}

impl ResponseCurve {
    pub fn model(&self) -> &ForwardModel {
        &self.model
    }

    pub fn asymptotic(&self) -> Vec<f64> {
        self.times
            .iter()
            .map(|&t| self.model.asymptotic(t))
            .collect()
    }

    /// Convolution on the every-other-node subgrid.
    pub fn coarse_values(&self) -> Vec<f64> {
        convolve(&self.times, &self.zero_lifetime, self.model.params.ell(), 2)
    }

    /// max |U_h - U_2h| / 3 over the shared nodes, relative to max U_h.
    pub fn richardson_error(&self) -> f64 {
        let coarse = self.coarse_values();
        let peak = self.values.iter().cloned().fold(0.0, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        let worst = coarse
            .iter()
            .zip(self.values.iter().step_by(2))
            .map(|(c, f)| (f - c).abs() / 3.0)
            .fold(0.0, f64::max);
        worst / peak
    }

    /// U_m at any t in the grid span, continuing the convolution from the
    /// node at or below t with one partial interval.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        let j = self.times.partition_point(|&x| x <= t).saturating_sub(1);
        let tj = self.times[j];
        if t == tj {
            return Ok(self.values[j]);
        }
        let ell = self.model.params.ell();
        let ut = self.model.zero_lifetime(t)?;
        if ell == 0.0 {
            return Ok(ut);
        }
        let (decay, w0, w1) = exponential_weights(t - tj, ell);
        Ok(decay * self.values[j] + w0 * self.zero_lifetime[j] + w1 * ut)
    }

    /// Index of the largest sampled value.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        best
    }
}

/// Settings of the numeric peak search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakSearch {
    /// Grid end. Defaults to five times the approximate peak.
    pub t_max: Option<f64>,
    pub intervals: usize,
    /// Absolute tolerance of the golden-section refinement, ps.
    pub tol: f64,
}

impl Default for PeakSearch {
    fn default() -> Self {
        PeakSearch {
            t_max: None,
            intervals: DEFAULT_INTERVALS,
            tol: 0.1,
        }
    }
}

/// Approximate peak used to size the search grid.
pub fn predicted_peak(model: &ForwardModel) -> Result<f64> {
    let ctx = PeakEquationContext::from_geometry(&model.pair, &model.target, &model.params);
    match approx_peak(&ctx) {
        Ok(est) => Ok(est.t_peak),
        Err(_) => Ok(solve_p_root(&ctx)? + model.params.ell()),
    }
}

/// Time of the maximum of `U_m`: grid argmax refined by golden section.
pub fn peak_time_numeric(model: &ForwardModel, search: &PeakSearch) -> Result<PeakTimeEstimate> {
    let t_max = match search.t_max {
        Some(t) => t,
        None => 5.0 * predicted_peak(model)?,
    };
    let curve = model.curve(&TimeGrid::new(t_max, search.intervals)?)?;
    let i = curve.argmax();
    if i == 0 || i + 1 == curve.times.len() {
        return Err(FdotError::PeakNotBracketed { t: curve.times[i] });
    }
    let (t_peak, iterations) = golden_max(
        |t| curve.value_at(t),
        curve.times[i - 1],
        curve.times[i + 1],
        search.tol,
    )?;
    let mut flags = Vec::new();
    if curve.richardson_error() > COARSE_CONVOLUTION {
        flags.push(RegimeFlag::CoarseConvolution);
    }
    Ok(PeakTimeEstimate {
        t_peak,
        method: PeakMethod::Numeric,
        diagnostics: Diagnostics {
            residual: None,
            iterations: Some(iterations),
            flags,
        },
    })
}

/// Golden-section search for the maximum of a unimodal `f` on [a, b].
pub fn golden_max<F>(f: F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, usize)>
where
    F: Fn(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut n = 0;
    while (b - a) > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
        n += 1;
    }
    Ok((0.5 * (a + b), n))
}

/// `u_m(t)` for a single configuration.
pub fn um_zero_lifetime(
    pair: &SdPair,
    target: &Target,
    params: &PhysicalParams,
    t: f64,
) -> Result<f64> {
    ForwardModel::new(pair, target, params).zero_lifetime(t)
}

/// `U_m(t)` for a single configuration.
pub fn um_lifetime(pair: &SdPair, target: &Target, params: &PhysicalParams, t: f64) -> Result<f64> {
    ForwardModel::new(pair, target, params).lifetime_response(t)
}

/// `u_m^a(t)` for a single configuration.
pub fn um_asymptotic(pair: &SdPair, target: &Target, params: &PhysicalParams, t: f64) -> f64 {
    ForwardModel::new(pair, target, params).asymptotic(t)
}
