//! Approximate peak times from the asymptotic response profile.
//!
//! Everything here is driven by the logarithmic derivative of the asymptotic
//! profile,
//!
//! ```text
//! P(t) = -k - 3/(2t) + lambda^2/t^2 - 2 beta vD / (x_c3 + beta vD t)
//! ```
//!
//! whose unique positive zero is the zero-lifetime peak. A short lifetime
//! shifts the peak to the root of `P = ell (P' + P^2)`; a long lifetime is
//! handled by a transcendental equation solved in log form. Closed-form
//! expansions of both roots for large `lambda` are provided alongside.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{FdotError, Result};
use crate::physics::{k_rate, lambda_param, PhysicalParams, SdPair, Target};
use crate::roots::{expand_upper, newton_bracketed};

const ROOT_TOL: f64 = 1e-12;

/// How a peak time was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeakMethod {
    Numeric,
    SmallEllRoot,
    LargeEllRoot,
    AsymptoticSmall,
    AsymptoticLarge,
}

/// Regime warnings attached to an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeFlag {
    /// Lifetime exceeds a quarter of the zero-lifetime peak time.
    LifetimeNotSmall,
    /// The Richardson error estimate of the lifetime convolution exceeded 1e-6 relative.
    CoarseConvolution,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Residual of the defining equation at the returned time, normalised as
    /// documented on each solver.
    pub residual: Option<f64>,
    pub iterations: Option<usize>,
    pub flags: Vec<RegimeFlag>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakTimeEstimate {
    pub t_peak: f64,
    pub method: PeakMethod,
    pub diagnostics: Diagnostics,
}

impl PeakTimeEstimate {
    fn closed_form(t_peak: f64, method: PeakMethod) -> Result<Self> {
        if !(t_peak > 0.0) {
            return Err(FdotError::Validity(format!(
                "{method:?} expansion gives non-positive time {t_peak}"
            )));
        }
        Ok(PeakTimeEstimate {
            t_peak,
            method,
            diagnostics: Diagnostics::default(),
        })
    }
}

/// Arguments shared by the peak-time equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakEquationContext {
    pub k: f64,
    pub lambda: f64,
    pub xc3: f64,
    pub params: PhysicalParams,
}

impl PeakEquationContext {
    pub fn new(lambda: f64, xc3: f64, params: PhysicalParams) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(FdotError::InvalidParameter("lambda must be > 0".into()));
        }
        if !(xc3 > 0.0 && xc3.is_finite()) {
            return Err(FdotError::InvalidParameter("x_c3 must be > 0".into()));
        }
        Ok(PeakEquationContext {
            k: k_rate(&params),
            lambda,
            xc3,
            params,
        })
    }

    pub fn from_geometry(pair: &SdPair, target: &Target, params: &PhysicalParams) -> Self {
        PeakEquationContext {
            k: k_rate(params),
            lambda: lambda_param(pair, target, params),
            xc3: target.depth(),
            params: *params,
        }
    }

    fn bvd(&self) -> f64 {
        self.params.beta() * self.params.vd()
    }

    pub fn p(&self, t: f64) -> f64 {
        let l2 = self.lambda * self.lambda;
        -self.k - 1.5 / t + l2 / (t * t) - 2.0 * self.bvd() / (self.xc3 + self.bvd() * t)
    }

    pub fn p_prime(&self, t: f64) -> f64 {
        let l2 = self.lambda * self.lambda;
        let q = self.bvd() / (self.xc3 + self.bvd() * t);
        1.5 / (t * t) - 2.0 * l2 / (t * t * t) + 2.0 * q * q
    }

    pub fn p_second(&self, t: f64) -> f64 {
        let l2 = self.lambda * self.lambda;
        let q = self.bvd() / (self.xc3 + self.bvd() * t);
        -3.0 / (t * t * t) + 6.0 * l2 / (t * t * t * t) - 4.0 * q * q * q
    }

    /// Positive root of `k t^2 + 3/2 t - lambda^2 = 0`, the beta = 0 peak.
    pub fn beta_free_root(&self) -> f64 {
        let l2 = self.lambda * self.lambda;
        2.0 * l2 / ((4.0 * self.k * l2 + 2.25).sqrt() + 1.5)
    }

    /// k - 1/ell; only meaningful for ell > 1/k.
    pub fn kappa(&self) -> f64 {
        self.k - 1.0 / self.params.ell()
    }

    /// `P(t) - ell (P'(t) + P(t)^2)`.
    pub fn small_ell_equation(&self, t: f64) -> f64 {
        let p = self.p(t);
        p - self.params.ell() * (self.p_prime(t) + p * p)
    }

    /// Log of the left side minus log of the right side of the large-lifetime
    /// peak equation. Zero at the root; decreasing on t > lambda/sqrt(kappa).
    pub fn large_ell_equation(&self, t: f64) -> f64 {
        let kappa = self.kappa();
        let ell = self.params.ell();
        let bvd = self.bvd();
        let s = kappa.sqrt() * t - self.lambda;
        let lhs = -s * s / t;
        let ratio = (self.xc3 + bvd * t) / (self.xc3 + bvd * self.lambda / kappa.sqrt());
        let rhs = 0.5 * PI.ln() - ell.ln() - self.lambda.ln() + 1.5 * t.ln() + 2.0 * ratio.ln();
        lhs - rhs
    }

    fn large_ell_equation_derivative(&self, t: f64) -> f64 {
        let bvd = self.bvd();
        let l2 = self.lambda * self.lambda;
        -(self.kappa() - l2 / (t * t)) - 1.5 / t - 2.0 * bvd / (self.xc3 + bvd * t)
    }
}

/// Unique positive zero of `P`. The result satisfies |P(t0)| < 1e-12 k.
pub fn solve_p_root(ctx: &PeakEquationContext) -> Result<f64> {
    let t_tilde = ctx.beta_free_root();
    let p_tilde = ctx.p(t_tilde);
    if p_tilde == 0.0 {
        return Ok(t_tilde);
    }
    let f = |t: f64| (ctx.p(t), ctx.p_prime(t));
    let (lo, hi) = if p_tilde < 0.0 {
        let mut lo = 0.5 * t_tilde;
        let mut n = 0;
        while ctx.p(lo) <= 0.0 {
            lo *= 0.5;
            n += 1;
            if n > 200 {
                return Err(FdotError::RootNotBracketed { lo, hi: t_tilde });
            }
        }
        (lo, t_tilde)
    } else {
        let hi = expand_upper(|t| ctx.p(t), t_tilde, 2.0 * t_tilde, 2.0, 200)?;
        (t_tilde, hi)
    };
    let root = newton_bracketed(f, lo, hi, t_tilde, ROOT_TOL)?;
    Ok(polish(root.x, |t| ctx.p(t), |t| ctx.p_prime(t)))
}

/// A couple of extra Newton steps once the bracket has collapsed, kept only
/// when they lower the residual.
fn polish(mut t: f64, f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..3 {
        let ft = f(t);
        let next = t - ft / df(t);
        if next.is_finite() && f(next).abs() < ft.abs() {
            t = next;
        } else {
            break;
        }
    }
    t
}

/// Normalised residual |P(t)| / k.
pub fn p_residual(ctx: &PeakEquationContext, t: f64) -> f64 {
    ctx.p(t).abs() / ctx.k
}

/// Root of `P = ell (P' + P^2)` above the zero-lifetime peak.
///
/// The residual reported is |P - ell(P' + P^2)| / k. For ell = 0 this is
/// exactly [`solve_p_root`]. The equation also has a spurious root at small
/// t where P^2 dominates; it is excluded by searching on (t0, inf).
pub fn approx_peak_small_ell(ctx: &PeakEquationContext) -> Result<PeakTimeEstimate> {
    let t0 = solve_p_root(ctx)?;
    let ell = ctx.params.ell();
    let mut flags = Vec::new();
    if ell > 0.25 * t0 {
        flags.push(RegimeFlag::LifetimeNotSmall);
    }
    if ell == 0.0 {
        return Ok(PeakTimeEstimate {
            t_peak: t0,
            method: PeakMethod::SmallEllRoot,
            diagnostics: Diagnostics {
                residual: Some(p_residual(ctx, t0)),
                iterations: Some(0),
                flags,
            },
        });
    }
    let g = |t: f64| ctx.small_ell_equation(t);
    let dg = |t: f64| {
        let p = ctx.p(t);
        let dp = ctx.p_prime(t);
        dp - ell * (ctx.p_second(t) + 2.0 * p * dp)
    };
    let hi = expand_upper(g, t0, t0 + 2.0 * ell, 2.0, 200)?;
    let root = newton_bracketed(|t| (g(t), dg(t)), t0, hi, t0 + ell, ROOT_TOL)?;
    let t = polish(root.x, g, dg);
    Ok(PeakTimeEstimate {
        t_peak: t,
        method: PeakMethod::SmallEllRoot,
        diagnostics: Diagnostics {
            residual: Some(g(t).abs() / ctx.k),
            iterations: Some(root.iterations),
            flags,
        },
    })
}

/// `k^{-1/2} lambda - 7/(4k) + k^{-1} sqrt(k)/(sqrt(k) + beta sqrt(vD)) + ell`.
pub fn small_ell_expansion(ctx: &PeakEquationContext) -> f64 {
    let sk = ctx.k.sqrt();
    let boundary = sk / (sk + ctx.params.beta() * ctx.params.vd().sqrt());
    ctx.lambda / sk - 1.75 / ctx.k + boundary / ctx.k + ctx.params.ell()
}

pub fn asymptotic_peak_small_ell(ctx: &PeakEquationContext) -> Result<PeakTimeEstimate> {
    PeakTimeEstimate::closed_form(small_ell_expansion(ctx), PeakMethod::AsymptoticSmall)
}

/// Conditions for the large-lifetime equation to have its root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LargeEllValidity {
    /// ell > 1/k.
    pub lifetime_exceeds_decay: bool,
    /// ell > sqrt(pi) (k - 1/ell)^{-3/4} lambda^{1/2}.
    pub lifetime_exceeds_spread: bool,
}

impl LargeEllValidity {
    pub fn holds(&self) -> bool {
        self.lifetime_exceeds_decay && self.lifetime_exceeds_spread
    }
}

pub fn large_ell_validity(ctx: &PeakEquationContext) -> LargeEllValidity {
    let ell = ctx.params.ell();
    let a = ell > 0.0 && ell * ctx.k > 1.0;
    let b = a && ell > PI.sqrt() * ctx.kappa().powf(-0.75) * ctx.lambda.sqrt();
    LargeEllValidity {
        lifetime_exceeds_decay: a,
        lifetime_exceeds_spread: b,
    }
}

fn require_large_ell(ctx: &PeakEquationContext) -> Result<()> {
    let v = large_ell_validity(ctx);
    if !v.lifetime_exceeds_decay {
        return Err(FdotError::Validity(format!(
            "large-lifetime branch needs ell > 1/k ({} <= {})",
            ctx.params.ell(),
            1.0 / ctx.k
        )));
    }
    if !v.lifetime_exceeds_spread {
        return Err(FdotError::Validity(
            "large-lifetime branch needs ell > sqrt(pi) (k - 1/ell)^(-3/4) lambda^(1/2)".into(),
        ));
    }
    Ok(())
}

/// Root of the large-lifetime peak equation, restricted to
/// t > lambda / sqrt(k - 1/ell). The residual reported is the difference of
/// the logs of both sides.
pub fn approx_peak_large_ell(ctx: &PeakEquationContext) -> Result<PeakTimeEstimate> {
    require_large_ell(ctx)?;
    let t_min = ctx.lambda / ctx.kappa().sqrt();
    let f = |t: f64| ctx.large_ell_equation(t);
    let df = |t: f64| ctx.large_ell_equation_derivative(t);
    let guess = large_ell_expansion(ctx).unwrap_or(2.0 * t_min);
    let hi = expand_upper(f, t_min, guess.max(t_min) * 1.5, 2.0, 200)?;
    let root = newton_bracketed(|t| (f(t), df(t)), t_min, hi, guess, ROOT_TOL)?;
    let t = polish(root.x, f, df);
    Ok(PeakTimeEstimate {
        t_peak: t,
        method: PeakMethod::LargeEllRoot,
        diagnostics: Diagnostics {
            residual: Some(f(t).abs()),
            iterations: Some(root.iterations),
            flags: Vec::new(),
        },
    })
}

/// `(-log[sqrt(pi) ell^{-1} (k - 1/ell)^{-3/4} lambda^{1/2}])^{1/2}`.
pub fn alpha_lambda(ctx: &PeakEquationContext) -> Result<f64> {
    let ell = ctx.params.ell();
    if !(ell > 0.0 && ctx.kappa() > 0.0) {
        return Err(FdotError::Validity("requires ell > 1/k".into()));
    }
    let arg = PI.sqrt() / ell * ctx.kappa().powf(-0.75) * ctx.lambda.sqrt();
    if !(arg < 1.0) {
        return Err(FdotError::Validity(format!(
            "log argument {arg:.6} >= 1 in alpha_lambda"
        )));
    }
    Ok((-arg.ln()).sqrt())
}

/// `(k - 1/ell)^{-1/2} lambda + (k - 1/ell)^{-3/4} alpha_lambda lambda^{1/2}`.
pub fn large_ell_expansion(ctx: &PeakEquationContext) -> Result<f64> {
    let alpha = alpha_lambda(ctx)?;
    let kappa = ctx.kappa();
    Ok(ctx.lambda / kappa.sqrt() + kappa.powf(-0.75) * alpha * ctx.lambda.sqrt())
}

pub fn asymptotic_peak_large_ell(ctx: &PeakEquationContext) -> Result<PeakTimeEstimate> {
    PeakTimeEstimate::closed_form(large_ell_expansion(ctx)?, PeakMethod::AsymptoticLarge)
}

/// Best available approximation: the large-lifetime root when its validity
/// conditions hold, otherwise the small-lifetime root.
pub fn approx_peak(ctx: &PeakEquationContext) -> Result<PeakTimeEstimate> {
    if large_ell_validity(ctx).holds() {
        approx_peak_large_ell(ctx)
    } else {
        approx_peak_small_ell(ctx)
    }
}
