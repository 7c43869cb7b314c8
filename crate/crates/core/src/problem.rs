//! The two problem variants behind one strategy interface.
//!
//! Everything that distinguishes the near-critical equation
//! A_s u = u^p + eps u from the slightly subcritical A_s u = u^{p - eps}
//! lives behind `ProblemKind`: nonlinearity and derivative, admissible eps
//! window, blow-up rescaling, rate product, reduced-energy scale penalty and
//! the asymptotic rate targets. Kinds are registered by name and selected at
//! runtime from config or CLI flags.

use crate::constants::ConstantSet;
use crate::error::{Error, Result};

/// Named variant of the blow-up rate target.
#[derive(Debug, Clone)]
pub struct RateTarget {
    pub name: &'static str,
    pub value: f64,
}

pub trait ProblemKind: Send + Sync {
    fn name(&self) -> &'static str;

    /// Validity window for eps given the constants and lambda_1^s.
    fn validate_eps(&self, consts: &ConstantSet, lambda1_s: f64, eps: f64) -> Result<()>;

    /// f_eps(u) with the positive-part convention.
    fn nonlinearity(&self, u: f64, p: f64, eps: f64) -> f64;

    /// One-sided derivative f_eps'(u).
    fn nonlinearity_deriv(&self, u: f64, p: f64, eps: f64) -> f64;

    /// Antiderivative F_eps with F_eps(0) = 0.
    fn potential(&self, u: f64, p: f64, eps: f64) -> f64;

    /// Exponent q of the constraint norm |u|_q in the quotient stage.
    fn constraint_exponent(&self, p: f64, eps: f64) -> f64;

    /// Whether the quotient carries the -eps |u|_2^2 correction.
    fn quotient_eps_correction(&self) -> bool;

    /// Scaling exponent alpha0 of the dilation analysis.
    fn alpha0(&self, n: f64, s: f64) -> f64;

    /// Exponent a in the core rescaling x -> mu^{-a} x + x_eps.
    fn rescale_exponent(&self, n: f64, s: f64, eps: f64) -> f64;

    /// Exponent q in the rate product eps |u|_inf^q.
    fn rate_exponent(&self, n: f64, s: f64) -> f64;

    /// Labeled asymptotic targets for the rate product, given |tau(x_0)|.
    fn rate_targets(&self, consts: &ConstantSet, tau_abs: f64) -> Result<Vec<RateTarget>>;

    /// Scale-dependent penalty of the reduced energy (the term beyond the
    /// shared Green/Robin block).
    fn scale_penalty(&self, consts: &ConstantSet, lambdas: &[f64]) -> Result<f64>;

    /// d/d(lambda_i) of `scale_penalty`.
    fn scale_penalty_dlambda(&self, consts: &ConstantSet, lambda_i: f64) -> Result<f64>;
}

/// Near-critical problem A_s u = u^p + eps u.
pub struct Critical;

/// Slightly subcritical problem A_s u = u^{p - eps}.
pub struct Subcritical;

impl ProblemKind for Critical {
    fn name(&self) -> &'static str {
        "critical"
    }

    fn validate_eps(&self, consts: &ConstantSet, lambda1_s: f64, eps: f64) -> Result<()> {
        let (n, s) = (consts.n as f64, consts.s);
        if n <= 4.0 * s {
            return Err(Error::config(format!(
                "critical kind requires n > 4s (n = {n}, s = {s})"
            )));
        }
        if !(eps > 0.0 && eps < lambda1_s) {
            return Err(Error::config(format!(
                "critical kind requires 0 < eps < lambda_1^s = {lambda1_s}, got {eps}"
            )));
        }
        Ok(())
    }

    fn nonlinearity(&self, u: f64, p: f64, eps: f64) -> f64 {
        u.max(0.0).powf(p) + eps * u
    }

    fn nonlinearity_deriv(&self, u: f64, p: f64, eps: f64) -> f64 {
        p * u.max(0.0).powf(p - 1.0) + eps
    }

    fn potential(&self, u: f64, p: f64, eps: f64) -> f64 {
        u.max(0.0).powf(p + 1.0) / (p + 1.0) + 0.5 * eps * u * u
    }

    fn constraint_exponent(&self, p: f64, _eps: f64) -> f64 {
        p + 1.0
    }

    fn quotient_eps_correction(&self) -> bool {
        true
    }

    fn alpha0(&self, n: f64, s: f64) -> f64 {
        1.0 / (n - 4.0 * s)
    }

    fn rescale_exponent(&self, n: f64, s: f64, _eps: f64) -> f64 {
        2.0 / (n - 2.0 * s)
    }

    fn rate_exponent(&self, n: f64, s: f64) -> f64 {
        2.0 * (n - 4.0 * s) / (n - 2.0 * s)
    }

    fn rate_targets(&self, consts: &ConstantSet, tau_abs: f64) -> Result<Vec<RateTarget>> {
        let d = consts
            .critical_rate
            .ok_or_else(|| Error::config("critical rate constant absent (n <= 4s)"))?;
        Ok(vec![
            RateTarget { name: "literal", value: d.literal * tau_abs },
            RateTarget { name: "corrected", value: d.corrected * tau_abs },
        ])
    }

    fn scale_penalty(&self, consts: &ConstantSet, lambdas: &[f64]) -> Result<f64> {
        let c2 = consts.c2.ok_or_else(|| Error::config("c2 absent (n <= 4s)"))?.corrected;
        Ok(c2 * lambdas.iter().map(|l| l.powf(2.0 * consts.s)).sum::<f64>())
    }

    fn scale_penalty_dlambda(&self, consts: &ConstantSet, lambda_i: f64) -> Result<f64> {
        let c2 = consts.c2.ok_or_else(|| Error::config("c2 absent (n <= 4s)"))?.corrected;
        Ok(c2 * 2.0 * consts.s * lambda_i.powf(2.0 * consts.s - 1.0))
    }
}

impl ProblemKind for Subcritical {
    fn name(&self) -> &'static str {
        "subcritical"
    }

    fn validate_eps(&self, consts: &ConstantSet, _lambda1_s: f64, eps: f64) -> Result<()> {
        let p = consts.p;
        if !(eps > 0.0 && eps < p - 1.0) {
            return Err(Error::config(format!(
                "subcritical kind requires 0 < eps < p - 1 = {}, got {eps}",
                p - 1.0
            )));
        }
        Ok(())
    }

    fn nonlinearity(&self, u: f64, p: f64, eps: f64) -> f64 {
        u.max(0.0).powf(p - eps)
    }

    fn nonlinearity_deriv(&self, u: f64, p: f64, eps: f64) -> f64 {
        (p - eps) * u.max(0.0).powf(p - eps - 1.0)
    }

    fn potential(&self, u: f64, p: f64, eps: f64) -> f64 {
        u.max(0.0).powf(p + 1.0 - eps) / (p + 1.0 - eps)
    }

    fn constraint_exponent(&self, p: f64, eps: f64) -> f64 {
        p + 1.0 - eps
    }

    fn quotient_eps_correction(&self) -> bool {
        false
    }

    fn alpha0(&self, n: f64, s: f64) -> f64 {
        1.0 / (n - 2.0 * s)
    }

    fn rescale_exponent(&self, n: f64, s: f64, eps: f64) -> f64 {
        // (p - 1 - eps)/(2s); reduces to 2/(n-2s) at eps = 0
        let p = (n + 2.0 * s) / (n - 2.0 * s);
        (p - 1.0 - eps) / (2.0 * s)
    }

    fn rate_exponent(&self, _n: f64, _s: f64) -> f64 {
        2.0
    }

    fn rate_targets(&self, consts: &ConstantSet, tau_abs: f64) -> Result<Vec<RateTarget>> {
        let g = consts.subcritical_rate;
        Ok(vec![
            RateTarget { name: "literal", value: g.literal * tau_abs },
            RateTarget { name: "corrected", value: g.corrected * tau_abs },
        ])
    }

    fn scale_penalty(&self, consts: &ConstantSet, lambdas: &[f64]) -> Result<f64> {
        let n = consts.n as f64;
        let coeff = consts.c1 * (n - 2.0 * consts.s).powi(2) / (4.0 * n);
        Ok(coeff * lambdas.iter().map(|l| l.ln()).sum::<f64>())
    }

    fn scale_penalty_dlambda(&self, consts: &ConstantSet, lambda_i: f64) -> Result<f64> {
        let n = consts.n as f64;
        let coeff = consts.c1 * (n - 2.0 * consts.s).powi(2) / (4.0 * n);
        Ok(coeff / lambda_i)
    }
}

static CRITICAL: Critical = Critical;
static SUBCRITICAL: Subcritical = Subcritical;

/// All registered problem kinds.
pub fn registry() -> &'static [&'static dyn ProblemKind] {
    static KINDS: [&dyn ProblemKind; 2] = [&CRITICAL, &SUBCRITICAL];
    &KINDS
}

/// Select a problem kind by name.
pub fn lookup_kind(name: &str) -> Result<&'static dyn ProblemKind> {
    registry().iter().copied().find(|k| k.name() == name).ok_or_else(|| {
        let known: Vec<&str> = registry().iter().map(|k| k.name()).collect();
        Error::config(format!("unknown problem kind {name:?}; known: {known:?}"))
    })
}
