//! Truncated Dirichlet eigenbasis on [0, L] and the mild-solution
//! propagators acting on coefficient vectors.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mlf::{relaxation, singular_kernel};
use crate::quadrature::{composite_legendre, simpson_weights};
use crate::special::sin_pi;

/// Sine eigenbasis of -d²/dx² with Dirichlet conditions: φ_k(x) = √(2/L)
/// sin(kπx/L), λ_k = -(kπ/L)².
#[derive(Debug, Clone, PartialEq)]
pub struct EigenBasis {
    n_modes: usize,
    length: f64,
    grid_size: usize,
    eigenvalues: Vec<f64>,
}

impl EigenBasis {
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Number of grid intervals (the grid has `grid_size + 1` points).
    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// λ_k for 1-based k.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        self.eigenvalues[k - 1]
    }

    /// φ_k(x) for 1-based k, evaluated from the exact formula.
    pub fn eigenfunction(&self, k: usize, x: f64) -> f64 {
        (2.0 / self.length).sqrt() * sin_pi(k as f64 * x / self.length)
    }

    pub fn grid(&self) -> Vec<f64> {
        let h = self.length / self.grid_size as f64;
        (0..=self.grid_size).map(|i| i as f64 * h).collect()
    }

    pub fn step(&self) -> f64 {
        self.length / self.grid_size as f64
    }

    /// Simpson weights on the basis grid.
    pub fn weights(&self) -> Vec<f64> {
        simpson_weights(self.grid_size, self.step()).expect("grid size validated at construction")
    }
}

/// Dirichlet sine basis on [0, 1].
pub fn dirichlet_basis_1d(n_modes: usize, grid_size: usize) -> Result<EigenBasis> {
    dirichlet_basis(n_modes, grid_size, 1.0)
}

/// Dirichlet sine basis on [0, length].
pub fn dirichlet_basis(n_modes: usize, grid_size: usize, length: f64) -> Result<EigenBasis> {
    if n_modes == 0 {
        return Err(Error::InvalidParameter("need at least one mode".into()));
    }
    if grid_size < 4 * n_modes {
        return Err(Error::InvalidParameter(format!(
            "grid_size {grid_size} under-resolves {n_modes} modes (need at least {})",
            4 * n_modes
        )));
    }
    if !grid_size.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "grid_size must be even for Simpson quadrature, got {grid_size}"
        )));
    }
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::InvalidParameter(format!("domain length must be positive, got {length}")));
    }
    let eigenvalues = (1..=n_modes)
        .map(|k| -(k as f64 * std::f64::consts::PI / length).powi(2))
        .collect();
    Ok(EigenBasis { n_modes, length, grid_size, eigenvalues })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralState {
    pub coefficients: Vec<f64>,
}

impl SpectralState {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if let Some(k) = coefficients.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(format!("coefficient {k} is not finite")));
        }
        Ok(Self { coefficients })
    }

    pub fn zeros(n: usize) -> Self {
        Self { coefficients: vec![0.0; n] }
    }

    /// The k-th eigenfunction (1-based) as a state.
    pub fn mode(n: usize, k: usize) -> Self {
        let mut c = vec![0.0; n];
        c[k - 1] = 1.0;
        Self { coefficients: c }
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self { coefficients: self.coefficients.iter().map(|c| a * c).collect() }
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// L² norm, equal to the Euclidean norm of the coefficients.
    pub fn norm(&self) -> f64 {
        self.coefficients.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &SpectralState) -> f64 {
        self.coefficients.iter().zip(&other.coefficients).map(|(a, b)| a * b).sum()
    }

    fn check_basis(&self, basis: &EigenBasis) -> Result<()> {
        if self.len() != basis.n_modes() {
            return Err(Error::GridMismatch(format!(
                "state has {} coefficients, basis has {} modes",
                self.len(),
                basis.n_modes()
            )));
        }
        Ok(())
    }
}

/// Samples on an ordered grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::GridMismatch(format!(
                "{} grid points but {} values",
                grid.len(),
                values.len()
            )));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("grid must be strictly increasing".into()));
        }
        if grid.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("grid function has non-finite entries".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn<F: FnMut(f64) -> f64>(grid: Vec<f64>, f: F) -> Result<Self> {
        let values = grid.iter().copied().map(f).collect();
        Self::new(grid, values)
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,value\n");
        for (x, v) in self.grid.iter().zip(&self.values) {
            let _ = writeln!(s, "{x:.16e},{v:.16e}");
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut grid = Vec::new();
        let mut values = Vec::new();
        let mut header_seen = false;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !header_seen {
                header_seen = true;
                if line.split(',').next().and_then(|f| f.trim().parse::<f64>().ok()).is_none() {
                    continue;
                }
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 2 {
                return Err(Error::Parse { line: i + 1, message: format!("expected 2 columns, found {}", fields.len()) });
            }
            let parse = |f: &str| {
                f.trim().parse::<f64>().map_err(|e| Error::Parse { line: i + 1, message: format!("{e}: {f:?}") })
            };
            grid.push(parse(fields[0])?);
            values.push(parse(fields[1])?);
        }
        Self::new(grid, values)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

/// c_k = ⟨f, φ_k⟩ by composite Simpson on the basis grid.
pub fn project(f: &GridFunction, basis: &EigenBasis) -> Result<SpectralState> {
    let grid = basis.grid();
    if f.len() != grid.len() {
        return Err(Error::GridMismatch(format!(
            "function has {} samples, basis grid has {}",
            f.len(),
            grid.len()
        )));
    }
    let tol = 1e-9 * basis.step();
    if f.grid.iter().zip(&grid).any(|(a, b)| (a - b).abs() > tol) {
        return Err(Error::GridMismatch("function is not sampled on the basis grid".into()));
    }
    let w = basis.weights();
    let coefficients = (1..=basis.n_modes())
        .map(|k| {
            grid.iter()
                .zip(&w)
                .zip(&f.values)
                .map(|((&x, &wi), &fi)| wi * fi * basis.eigenfunction(k, x))
                .sum()
        })
        .collect();
    SpectralState::new(coefficients)
}

/// c_k = ∫_S f φ_k over a union of intervals S, by composite Gauss–Legendre
/// with exact eigenfunctions. Used for functions that are only piecewise
/// smooth on the full domain, such as zero extensions from a subregion.
pub fn project_fn<F: Fn(f64) -> f64>(f: F, support: &[(f64, f64)], basis: &EigenBasis) -> Result<SpectralState> {
    let mut coefficients = vec![0.0; basis.n_modes()];
    for &(a, b) in support {
        // enough panels to resolve the highest mode on this piece
        let waves = basis.n_modes() as f64 * (b - a) / basis.length();
        let panels = (2.0 * waves).ceil().max(2.0) as usize;
        let nw = composite_legendre(a, b, panels, 16)?;
        for (x, w) in nw.nodes.iter().zip(&nw.weights) {
            let fx = w * f(*x);
            for (k, c) in coefficients.iter_mut().enumerate() {
                *c += fx * basis.eigenfunction(k + 1, *x);
            }
        }
    }
    SpectralState::new(coefficients)
}

/// Σ c_k φ_k at the given points.
pub fn synthesize(state: &SpectralState, basis: &EigenBasis, grid: &[f64]) -> Result<GridFunction> {
    state.check_basis(basis)?;
    let values = grid
        .iter()
        .map(|&x| {
            state
                .coefficients
                .iter()
                .enumerate()
                .map(|(k, c)| c * basis.eigenfunction(k + 1, x))
                .sum()
        })
        .collect();
    GridFunction::new(grid.to_vec(), values)
}

fn map_modes<F: Fn(f64) -> Result<f64>>(state: &SpectralState, basis: &EigenBasis, f: F) -> Result<SpectralState> {
    state.check_basis(basis)?;
    let coefficients = state
        .coefficients
        .iter()
        .zip(basis.eigenvalues())
        .map(|(&c, &lam)| if c == 0.0 { Ok(0.0) } else { Ok(f(lam)? * c) })
        .collect::<Result<Vec<f64>>>()?;
    SpectralState::new(coefficients)
}

/// H_α(t) y0: c_k ↦ t^{α-1} E_{α,α}(λ_k t^α) c_k.
pub fn propagate(y0: &SpectralState, basis: &EigenBasis, t: f64, alpha: f64) -> Result<SpectralState> {
    map_modes(y0, basis, |lam| singular_kernel(alpha, t, lam))
}

/// H*_α(t). The Dirichlet Laplacian is self-adjoint so this has the same
/// mode multipliers as [`propagate`]; a non-symmetric basis would change
/// only this function.
pub fn propagate_adjoint(state: &SpectralState, basis: &EigenBasis, t: f64, alpha: f64) -> Result<SpectralState> {
    map_modes(state, basis, |lam| singular_kernel(alpha, t, lam))
}

/// ₀I_t^{1-α} applied to the mild solution: c_k ↦ E_{α,1}(λ_k t^α) c_k.
pub fn rl_integrated_state(y0: &SpectralState, basis: &EigenBasis, t: f64, alpha: f64) -> Result<SpectralState> {
    map_modes(y0, basis, |lam| relaxation(alpha, t, lam))
}
