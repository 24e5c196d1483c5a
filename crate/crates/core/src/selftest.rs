//! Built-in numerical checks: reflection identities of the discrete
//! fractional operators, Mittag-Leffler identities and Wright density
//! moments.

use std::fmt;

use crate::error::Result;
use crate::mlf::{mittag_leffler, wright_moment, MlfParams};
use crate::rlcalc::{check_reflection_identities, ReflectionReport, TimeSeries};
use crate::special::{gamma, rgamma};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    /// `None` for diagnostics reported without a verdict.
    pub passed: Option<bool>,
}

impl Check {
    fn at_most(name: String, value: f64, tolerance: f64) -> Self {
        Self { name, value, tolerance, passed: Some(value <= tolerance) }
    }

    fn at_least(name: String, value: f64, tolerance: f64) -> Self {
        Self { name, value, tolerance, passed: Some(value >= tolerance) }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = match self.passed {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "INFO",
        };
        write!(f, "{status} {}: {:.6e} (tolerance {:.1e})", self.name, self.value, self.tolerance)
    }
}

fn reflection_at(alpha: f64, horizon: f64, dt: f64) -> Result<ReflectionReport> {
    let steps = (horizon / dt).round() as usize;
    let f = TimeSeries::from_fn(0.0, dt, steps, |t| t * (horizon - t))?;
    check_reflection_identities(alpha, &f)
}

/// Reflection identities for f(t) = t(T − t) at α = 1/2, T = 1: residuals at
/// dt = 1e-3 and their decay when dt halves.
pub fn reflection_checks() -> Result<Vec<Check>> {
    let coarse = reflection_at(0.5, 1.0, 1e-3)?;
    let fine = reflection_at(0.5, 1.0, 5e-4)?;
    let mut out = Vec::new();
    for (i, label) in ReflectionReport::LABELS.iter().enumerate() {
        out.push(Check::at_most(format!("reflection {label} residual"), coarse.residuals[i], 5e-2));
        out.push(Check::at_least(
            format!("reflection {label} interior decay"),
            coarse.interior[i] / fine.interior[i],
            1.5,
        ));
        out.push(Check {
            name: format!("reflection {label} full-grid decay"),
            value: coarse.residuals[i] / fine.residuals[i],
            tolerance: 1.5,
            passed: None,
        });
    }
    Ok(out)
}

/// E_{α,β}(z) = z E_{α,α+β}(z) + 1/Γ(β), plus the exponential and cosine
/// special cases.
pub fn mittag_leffler_checks() -> Result<Vec<Check>> {
    let mut worst_recurrence = 0.0f64;
    for &alpha in &[0.3, 0.5, 0.8, 1.0, 1.5] {
        for &beta in &[0.5, 1.0, 1.7] {
            let lhs_p = MlfParams::new(alpha, beta)?;
            let rhs_p = MlfParams::new(alpha, alpha + beta)?;
            for &z in &[-50.0, -5.0, -0.5, 0.0, 0.7, 3.0] {
                // past α = 1 only the power series is available
                if alpha > 1.0 && z < -5.0 {
                    continue;
                }
                let lhs = mittag_leffler(&lhs_p, z)?;
                let rhs = z * mittag_leffler(&rhs_p, z)? + rgamma(beta);
                let scale = lhs.abs().max(rgamma(beta).abs()).max(1e-300);
                worst_recurrence = worst_recurrence.max((lhs - rhs).abs() / scale);
            }
        }
    }
    let mut worst_exp = 0.0f64;
    let mut worst_cos = 0.0f64;
    let e1 = MlfParams::new(1.0, 1.0)?;
    let e2 = MlfParams::new(2.0, 1.0)?;
    for &x in &[-30.0, -3.0, -0.25, 0.5, 2.0] {
        worst_exp = worst_exp.max((mittag_leffler(&e1, x)? - x.exp()).abs() / x.exp());
    }
    for &x in &[0.3, 1.0, std::f64::consts::FRAC_PI_2, 2.2] {
        worst_cos = worst_cos.max((mittag_leffler(&e2, -x * x)? - f64::cos(x)).abs());
    }
    Ok(vec![
        Check::at_most("mittag-leffler recurrence".into(), worst_recurrence, 1e-10),
        Check::at_most("mittag-leffler E_1,1 = exp".into(), worst_exp, 1e-12),
        Check::at_most("mittag-leffler E_2,1(-x^2) = cos".into(), worst_cos, 1e-12),
    ])
}

/// ∫ θ^ν ξ_α = Γ(1+ν)/Γ(1+αν) for α ∈ {0.3, 0.5, 0.8}, ν ∈ {0, 0.5, 1, 2}.
pub fn wright_checks() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for &alpha in &[0.3, 0.5, 0.8] {
        out.push(Check::at_most(
            format!("wright alpha={alpha} normalization"),
            (wright_moment(alpha, 0.0)? - 1.0).abs(),
            1e-6,
        ));
        for &nu in &[0.5, 1.0, 2.0] {
            let expect = gamma(1.0 + nu) / gamma(1.0 + alpha * nu);
            let got = wright_moment(alpha, nu)?;
            out.push(Check::at_most(
                format!("wright alpha={alpha} moment nu={nu}"),
                (got - expect).abs() / expect,
                1e-5,
            ));
        }
    }
    Ok(out)
}

pub fn run_selftest() -> Result<Vec<Check>> {
    let mut all = reflection_checks()?;
    all.extend(mittag_leffler_checks()?);
    all.extend(wright_checks()?);
    Ok(all)
}
