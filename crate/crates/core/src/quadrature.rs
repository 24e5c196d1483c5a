//! Quadrature rules: cached Gauss rules, graded rules for integrands with a
//! power singularity at the left endpoint, and adaptive Gauss–Kronrod.

use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::{FiniteAboveNegOneF64, GaussJacobi, GaussLegendre};

use crate::error::{Error, Result};

/// Nodes and weights of a rule on [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Nodes and weights on a physical interval, used directly as
/// `Σ w_i f(x_i)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NodesWeights {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl NodesWeights {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    fn append(&mut self, other: NodesWeights) {
        self.nodes.extend(other.nodes);
        self.weights.extend(other.weights);
    }
}

fn nonzero(n: usize) -> Result<NonZeroUsize> {
    NonZeroUsize::new(n).ok_or_else(|| Error::InvalidParameter("quadrature order must be positive".into()))
}

/// Gauss–Legendre rule with `n` nodes, cached per order.
pub fn legendre(n: usize) -> Result<Arc<Rule>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Rule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(rule) = cache.lock().expect("quadrature cache poisoned").get(&n) {
        return Ok(rule.clone());
    }
    let gl = GaussLegendre::new(nonzero(n)?);
    let (nodes, weights) = gl.iter().map(|(x, w)| (*x, *w)).unzip();
    let rule = Arc::new(Rule { nodes, weights });
    cache
        .lock()
        .expect("quadrature cache poisoned")
        .insert(n, rule.clone());
    Ok(rule)
}

/// Gauss–Jacobi rule for the weight (1 + x)^p on [-1, 1].
pub fn jacobi_left(n: usize, p: f64) -> Result<Rule> {
    let a = FiniteAboveNegOneF64::try_from(0.0).expect("zero is a valid exponent");
    let b = FiniteAboveNegOneF64::try_from(p)
        .map_err(|_| Error::InvalidParameter(format!("Jacobi exponent {p} must exceed -1")))?;
    let gj = GaussJacobi::new(nonzero(n)?, a, b);
    let (nodes, weights) = gj.iter().map(|(x, w)| (*x, *w)).unzip();
    Ok(Rule { nodes, weights })
}

/// Gauss–Legendre nodes and weights mapped to [a, b].
pub fn legendre_on(a: f64, b: f64, n: usize) -> Result<NodesWeights> {
    let rule = legendre(n)?;
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    Ok(NodesWeights {
        nodes: rule.nodes.iter().map(|x| mid + half * x).collect(),
        weights: rule.weights.iter().map(|w| half * w).collect(),
    })
}

/// Composite Gauss–Legendre on [a, b] with `panels` equal panels.
pub fn composite_legendre(a: f64, b: f64, panels: usize, n: usize) -> Result<NodesWeights> {
    if panels == 0 {
        return Err(Error::InvalidParameter("at least one panel required".into()));
    }
    let h = (b - a) / panels as f64;
    let mut out = NodesWeights::default();
    for i in 0..panels {
        let lo = a + i as f64 * h;
        let hi = if i + 1 == panels { b } else { lo + h };
        out.append(legendre_on(lo, hi, n)?);
    }
    Ok(out)
}

/// Rule for ∫₀^c f(s) ds when f(s) = s^p g(s) with g smooth.
///
/// A Gauss–Jacobi panel carries the s^p factor on [0, c·ratio^levels] and
/// geometrically graded Gauss–Legendre panels cover the rest. The returned
/// weights apply to the full integrand f, so callers never split off the
/// power factor themselves.
pub fn graded_singular(c: f64, p: f64, levels: usize, ratio: f64, n: usize) -> Result<NodesWeights> {
    if !(c > 0.0) {
        return Err(Error::InvalidParameter("graded rule needs a positive length".into()));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidParameter("grading ratio must lie in (0, 1)".into()));
    }
    let mut out = NodesWeights::default();
    let h0 = c * ratio.powi(levels as i32);
    let jac = jacobi_left(n, p)?;
    let scale = (0.5 * h0).powf(p + 1.0);
    for (x, w) in jac.nodes.iter().zip(&jac.weights) {
        let s = 0.5 * h0 * (1.0 + x);
        out.nodes.push(s);
        out.weights.push(w * scale / s.powf(p));
    }
    let mut lo = h0;
    for level in (0..levels).rev() {
        let hi = c * ratio.powi(level as i32);
        out.append(legendre_on(lo, hi, n)?);
        lo = hi;
    }
    Ok(out)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One 15-point Kronrod panel: (estimate, error estimate, rounding floor).
fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_g = fc * WG[3];
    let mut res_k = fc * WGK[7];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let result = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * res_abs;
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(floor);
    }
    (result, err, floor)
}

/// Settings for [`adaptive`].
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self {
            abs_tol: 0.0,
            rel_tol: 1e-12,
            max_intervals: 2000,
        }
    }
}

/// Globally adaptive Gauss–Kronrod (7/15) integration over [a, b], split
/// first at the given interior breakpoints. Returns the value and the
/// error estimate.
pub fn adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    opts: AdaptiveOptions,
) -> Result<(f64, f64)> {
    let mut edges = vec![a];
    let mut inner: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&x| x > a && x < b)
        .collect();
    inner.sort_by(f64::total_cmp);
    edges.extend(inner);
    edges.push(b);

    // (lo, hi, value, error, at_roundoff)
    let mut panels: Vec<(f64, f64, f64, f64, bool)> = edges
        .windows(2)
        .map(|w| panel(&mut f, w[0], w[1]))
        .collect();

    loop {
        let total: f64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if !total.is_finite() {
            return Err(Error::Quadrature("integrand produced a non-finite value".into()));
        }
        if err <= opts.abs_tol.max(opts.rel_tol * total.abs()) {
            return Ok((total, err));
        }
        if panels.len() >= opts.max_intervals {
            return Err(Error::Quadrature(format!(
                "adaptive quadrature hit {} intervals with error estimate {err:e}",
                opts.max_intervals
            )));
        }
        // panels whose estimate is pure rounding noise gain nothing from
        // bisection; once only those remain the sum is as good as it gets
        let worst = panels
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.4)
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i);
        let Some(idx) = worst else {
            return Ok((total, err));
        };
        let (lo, hi, _, _, _) = panels.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            let mut p = panel(&mut f, lo, hi);
            p.4 = true;
            panels.push(p);
            continue;
        }
        panels.push(panel(&mut f, lo, mid));
        panels.push(panel(&mut f, mid, hi));
    }
}

fn panel<F: FnMut(f64) -> f64>(f: &mut F, lo: f64, hi: f64) -> (f64, f64, f64, f64, bool) {
    let (v, e, floor) = gk15(f, lo, hi);
    (lo, hi, v, e, e <= 1.01 * floor)
}

/// Composite Simpson weights for `intervals` (even) equal steps of size `h`.
pub fn simpson_weights(intervals: usize, h: f64) -> Result<Vec<f64>> {
    if intervals == 0 || !intervals.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "Simpson rule needs an even positive number of intervals, got {intervals}"
        )));
    }
    let mut w = vec![0.0; intervals + 1];
    for (i, wi) in w.iter_mut().enumerate() {
        *wi = if i == 0 || i == intervals {
            h / 3.0
        } else if i % 2 == 1 {
            4.0 * h / 3.0
        } else {
            2.0 * h / 3.0
        };
    }
    Ok(w)
}
