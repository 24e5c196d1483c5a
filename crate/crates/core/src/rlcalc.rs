//! Discrete Riemann–Liouville calculus on uniform grids.
//!
//! Left-sided integrals use product integration (exact kernel moments on
//! every cell), left-sided derivatives use Grünwald–Letnikov weights. The
//! right-sided operators here are written out directly with their own
//! convolution weights so that the reflection identities can be checked
//! against something other than reflect–apply–reflect.

use crate::error::{Error, Result};
use crate::special::rgamma;

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(t0: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        let s = Self { t0, dt, values };
        s.validate()?;
        Ok(s)
    }

    /// Samples f at t0 + j·dt for j = 0..=steps.
    pub fn from_fn<F: FnMut(f64) -> f64>(t0: f64, dt: f64, steps: usize, mut f: F) -> Result<Self> {
        let values = (0..=steps).map(|j| f(t0 + j as f64 * dt)).collect();
        Self::new(t0, dt, values)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {}", self.dt)));
        }
        if !self.t0.is_finite() {
            return Err(Error::InvalidParameter("start time must be finite".into()));
        }
        if self.values.is_empty() {
            return Err(Error::InvalidParameter("time series has no samples".into()));
        }
        if let Some(j) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("sample {j} is not finite")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, j: usize) -> f64 {
        self.t0 + j as f64 * self.dt
    }

    pub fn final_time(&self) -> f64 {
        self.time(self.values.len() - 1)
    }

    fn with_values(&self, values: Vec<f64>) -> Self {
        Self { t0: self.t0, dt: self.dt, values }
    }
}

/// Quadrature used by [`rl_integral_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IntegralRule {
    /// f held constant on each cell at its left value; first order.
    ProductRectangle,
    /// f linear on each cell; second order for smooth f.
    #[default]
    ProductTrapezoid,
}

fn check_order(alpha: f64, upper: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= upper) {
        return Err(Error::InvalidParameter(format!("order must lie in (0, {upper}], got {alpha}")));
    }
    Ok(())
}

fn check_origin(series: &TimeSeries) -> Result<()> {
    series.validate()?;
    if series.t0 != 0.0 {
        return Err(Error::InvalidParameter(format!(
            "left-sided operators need a series starting at t = 0, got t0 = {}",
            series.t0
        )));
    }
    Ok(())
}

/// ₀I_t^α by product-trapezoid weights.
pub fn rl_integral(series: &TimeSeries, alpha: f64) -> Result<TimeSeries> {
    rl_integral_with(series, alpha, IntegralRule::ProductTrapezoid)
}

/// ₀I_t^α with an explicit rule. Orders above 1 are accepted so that
/// integrals can be composed.
pub fn rl_integral_with(series: &TimeSeries, alpha: f64, rule: IntegralRule) -> Result<TimeSeries> {
    check_origin(series)?;
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("order must be positive, got {alpha}")));
    }
    let f = &series.values;
    let n_pts = f.len();
    let mut out = vec![0.0; n_pts];
    match rule {
        IntegralRule::ProductRectangle => {
            // b_m = m^α - (m-1)^α
            let pw: Vec<f64> = (0..n_pts).map(|m| (m as f64).powf(alpha)).collect();
            let scale = series.dt.powf(alpha) * rgamma(alpha + 1.0);
            for (n, o) in out.iter_mut().enumerate().skip(1) {
                let acc: f64 = f[..n].iter().enumerate().map(|(j, fj)| (pw[n - j] - pw[n - j - 1]) * fj).sum();
                *o = scale * acc;
            }
        }
        IntegralRule::ProductTrapezoid => {
            let a1 = alpha + 1.0;
            let p1: Vec<f64> = (0..n_pts + 1).map(|m| (m as f64).powf(a1)).collect();
            let pa: Vec<f64> = (0..n_pts).map(|m| (m as f64).powf(alpha)).collect();
            // c_m = (m+1)^{α+1} - 2 m^{α+1} + (m-1)^{α+1}
            let c: Vec<f64> = (0..n_pts)
                .map(|m| if m == 0 { 1.0 } else { p1[m + 1] - 2.0 * p1[m] + p1[m - 1] })
                .collect();
            let scale = series.dt.powf(alpha) * rgamma(alpha + 2.0);
            for (n, o) in out.iter_mut().enumerate().skip(1) {
                let nf = n as f64;
                let mut acc = (p1[n - 1] - (nf - alpha - 1.0) * pa[n]) * f[0];
                for j in 1..n {
                    acc += c[n - j] * f[j];
                }
                acc += f[n];
                *o = scale * acc;
            }
        }
    }
    Ok(series.with_values(out))
}

/// Grünwald–Letnikov weights w_j of order α by the recurrence
/// w_0 = 1, w_j = w_{j-1}(1 - (α+1)/j).
pub fn grunwald_weights(alpha: f64, n: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(n);
    let mut cur = 1.0;
    for j in 0..n {
        if j > 0 {
            cur *= 1.0 - (alpha + 1.0) / j as f64;
        }
        w.push(cur);
    }
    w
}

/// ₀D_t^α by Grünwald–Letnikov.
pub fn rl_derivative(series: &TimeSeries, alpha: f64) -> Result<TimeSeries> {
    check_origin(series)?;
    check_order(alpha, 1.0)?;
    if series.len() < 3 {
        return Err(Error::InvalidParameter("derivative needs at least 3 samples".into()));
    }
    let f = &series.values;
    let w = grunwald_weights(alpha, f.len());
    let scale = series.dt.powf(-alpha);
    let out = (0..f.len())
        .map(|n| scale * (0..=n).map(|j| w[j] * f[n - j]).sum::<f64>())
        .collect();
    Ok(series.with_values(out))
}

/// Time reversal on the series' own grid: Qf(t) = f(T - t).
pub fn reflect(series: &TimeSeries) -> TimeSeries {
    let mut values = series.values.clone();
    values.reverse();
    series.with_values(values)
}

// x^e with the convention 0^e = 0 for every e, used for kernel increments
fn pow0(x: f64, e: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.powf(e)
    }
}

/// ₜI_T^α by right-sided product integration with cell averages.
pub fn right_rl_integral(series: &TimeSeries, alpha: f64) -> Result<TimeSeries> {
    series.validate()?;
    check_order(alpha, f64::INFINITY)?;
    let g = &series.values;
    let last = g.len() - 1;
    let scale = series.dt.powf(alpha) * rgamma(alpha + 1.0);
    let out = (0..g.len())
        .map(|n| {
            let mut acc = 0.0;
            for j in n..last {
                let m = (j - n) as f64;
                acc += 0.5 * (g[j] + g[j + 1]) * ((m + 1.0).powf(alpha) - pow0(m, alpha));
            }
            scale * acc
        })
        .collect();
    Ok(series.with_values(out))
}

/// ₜD_T^α by a right-sided L1 scheme:
/// g_N (T - t_n)^{-α}/Γ(1-α) + dt^{-α}/Γ(2-α) Σ_{j≥n} (g_j - g_{j+1})
/// [(j+1-n)^{1-α} - (j-n)^{1-α}].
pub fn right_rl_derivative(series: &TimeSeries, alpha: f64) -> Result<TimeSeries> {
    series.validate()?;
    check_order(alpha, 1.0)?;
    let g = &series.values;
    let last = g.len() - 1;
    let e = 1.0 - alpha;
    let scale = series.dt.powf(-alpha) * rgamma(2.0 - alpha);
    let edge = rgamma(1.0 - alpha);
    let out = (0..g.len())
        .map(|n| {
            let mut acc = 0.0;
            for j in n..last {
                let m = (j - n) as f64;
                acc += (g[j] - g[j + 1]) * ((m + 1.0).powf(e) - pow0(m, e));
            }
            let boundary = if edge == 0.0 || g[last] == 0.0 {
                0.0
            } else {
                g[last] * pow0((last - n) as f64 * series.dt, -alpha) * edge
            };
            boundary + scale * acc
        })
        .collect();
    Ok(series.with_values(out))
}

/// Residuals of the four reflection identities
/// Q ₀D f = ₜD Q f, Q ₀I f = ₜI Q f, ₀D Q f = Q ₜD f, ₀I Q f = Q ₜI f.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionReport {
    pub alpha: f64,
    pub dt: f64,
    /// Max-norm residual over the whole grid.
    pub residuals: [f64; 4],
    /// Max-norm residual over t ∈ [0.1T, 0.9T].
    pub interior: [f64; 4],
}

impl ReflectionReport {
    pub const LABELS: [&'static str; 4] = [
        "Q 0D f = tD Q f",
        "Q 0I f = tI Q f",
        "0D Q f = Q tD f",
        "0I Q f = Q tI f",
    ];

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

fn max_diff(a: &TimeSeries, b: &TimeSeries, lo: usize, hi: usize) -> f64 {
    a.values[lo..hi]
        .iter()
        .zip(&b.values[lo..hi])
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn check_reflection_identities(alpha: f64, series: &TimeSeries) -> Result<ReflectionReport> {
    check_origin(series)?;
    check_order(alpha, 1.0)?;
    let q = reflect(series);
    let pairs = [
        (reflect(&rl_derivative(series, alpha)?), right_rl_derivative(&q, alpha)?),
        (reflect(&rl_integral(series, alpha)?), right_rl_integral(&q, alpha)?),
        (rl_derivative(&q, alpha)?, reflect(&right_rl_derivative(series, alpha)?)),
        (rl_integral(&q, alpha)?, reflect(&right_rl_integral(series, alpha)?)),
    ];
    let n = series.len();
    let lo = n / 10;
    let hi = n - n / 10;
    let mut residuals = [0.0; 4];
    let mut interior = [0.0; 4];
    for (i, (a, b)) in pairs.iter().enumerate() {
        residuals[i] = max_diff(a, b, 0, n);
        interior[i] = max_diff(a, b, lo, hi.max(lo + 1));
    }
    Ok(ReflectionReport { alpha, dt: series.dt, residuals, interior })
}
