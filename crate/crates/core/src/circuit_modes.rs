//! Normal modes of the junction-terminated LC chain.
//!
//! The circuit is a Josephson junction shunted by a lumped-element
//! transmission line of `n_modes` LC sites with an open far end. Working in
//! units where `ħ = 1` and `E_C = 1`, the dimensionless capacitance matrix is
//! `diag(1, c, …, c)` and the inductance matrix is `ℓ · tridiag(−1; [1,2,…,2,1]; −1)`,
//! with
//!
//! ```text
//! c = (8/π) · (1/wp) · z        ℓ = (2/π) · wp · z
//! ```
//!
//! obtained from `L = 2Z/ω_p`, `C = 2/(Z ω_p)` and `ħ/e² = 2 R_q/π`, where
//! `wp = ħω_p/E_C` and `z = R_q/Z`. Simultaneous diagonalization
//! `Γ P = C P ω²` with `Pᵀ C P = I` yields the photonic mode frequencies
//! `ω_k`, the charge-gauge couplings `g_k = 2 √ω_k P_0k` and the zero-mode
//! weight `P_00 = (1 + n_modes·c)^{−1/2}`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative threshold below which an eigenvalue of Γ counts as the zero mode.
const KERNEL_TOL: f64 = 1e-10;

/// Dimensionless physical inputs defining one circuit instance.
///
/// All energies are in units of `E_C`, frequencies in units of `E_C/ħ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSpec {
    /// Josephson energy `E_J/E_C`.
    pub ej: f64,
    /// Plasma frequency `ħω_p/E_C`.
    pub wp: f64,
    /// Number of transmission-line modes.
    pub n_modes: usize,
    /// Impedance ratio `R_q/Z`.
    pub z: f64,
}

impl LineSpec {
    pub fn new(ej: f64, wp: f64, n_modes: usize, z: f64) -> Result<Self> {
        let spec = LineSpec { ej, wp, n_modes, z };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ej.is_finite() && self.wp.is_finite() && self.z.is_finite()) {
            return Err(Error::InvalidInput("non-finite LineSpec field".into()));
        }
        if self.ej < 0.0 {
            return Err(Error::InvalidInput(format!("ej = {} < 0", self.ej)));
        }
        if self.wp <= 0.0 {
            return Err(Error::InvalidInput(format!("wp = {} <= 0", self.wp)));
        }
        if self.z < 0.0 {
            return Err(Error::InvalidInput(format!("z = {} < 0", self.z)));
        }
        Ok(())
    }

    /// Free spectral range `ħΔ/E_C = π·wp/(2·n_modes)`.
    pub fn fsr(&self) -> f64 {
        assert!(self.n_modes >= 1, "fsr undefined for the bare junction");
        std::f64::consts::PI * self.wp / (2.0 * self.n_modes as f64)
    }

    /// Exact low-frequency mode spacing of the finite chain. The open chain
    /// has `n_modes + 1` nodes (the junction node included), so its
    /// dispersion is `ω_k = wp·sin(πk/(2(N_m+1)))` and the spacing at small
    /// `k` is `π·wp/(2(N_m+1))` — slightly below the continuum value
    /// [`Self::fsr`]. Finite-size universality collapses (rescaled spectra
    /// of different sizes crossing at z = 1) require this exact spacing.
    pub fn chain_fsr(&self) -> f64 {
        assert!(self.n_modes >= 1, "fsr undefined for the bare junction");
        std::f64::consts::PI * self.wp / (2.0 * (self.n_modes + 1) as f64)
    }

    /// Dimensionless site capacitance `c = (8/π)·(1/wp)·z`.
    pub fn site_capacitance(&self) -> f64 {
        (8.0 / std::f64::consts::PI) * self.z / self.wp
    }

    /// Dimensionless inverse inductance `ℓ = (2/π)·wp·z`.
    pub fn inverse_inductance(&self) -> f64 {
        (2.0 / std::f64::consts::PI) * self.wp * self.z
    }
}

/// Result of the simultaneous diagonalization of `C` and `Γ`.
#[derive(Debug, Clone)]
pub struct ModeDecomposition {
    /// Photonic mode frequencies `ħω_k/E_C`, ascending, all in `(0, ω_p)`.
    pub omega: Vec<f64>,
    /// Junction-mode couplings `g_k/E_C = 2√ω_k · P_0k`.
    pub g: Vec<f64>,
    /// Zero-mode weight `P_00`.
    pub p00: f64,
    /// First row of the transformation matrix: `[P_00, P_01, …]`.
    pub p_row0: Vec<f64>,
}

impl ModeDecomposition {
    pub fn n_modes(&self) -> usize {
        self.omega.len()
    }
}

/// Build the dimensionless capacitance diagonal and inductance matrix.
///
/// The capacitance matrix is returned as its diagonal; the inductance matrix
/// is dense symmetric with zero row sums (its kernel is the uniform vector).
pub fn build_matrices(spec: &LineSpec) -> Result<(DVector<f64>, DMatrix<f64>)> {
    spec.validate()?;
    let n = spec.n_modes + 1;
    let c = spec.site_capacitance();
    let ell = spec.inverse_inductance();

    let mut cap = DVector::from_element(n, c);
    cap[0] = 1.0;

    let mut ind = DMatrix::zeros(n, n);
    for i in 0..n {
        let deg = if i == 0 || i == n - 1 { 1.0 } else { 2.0 };
        ind[(i, i)] = if n == 1 { 0.0 } else { ell * deg };
        if i + 1 < n {
            ind[(i, i + 1)] = -ell;
            ind[(i + 1, i)] = -ell;
        }
    }
    Ok((cap, ind))
}

/// Simultaneously diagonalize `C` and `Γ` and extract the photonic modes.
///
/// Implemented as a symmetric eigendecomposition of `C^{−1/2} Γ C^{−1/2}`
/// followed by back-transformation `P = C^{−1/2} V`. Exactly one zero
/// eigenvalue (the junction mode) must be present; it is excluded from the
/// photonic list. Eigenvector signs are flipped so that every `P_0k ≥ 0`.
pub fn decompose_modes(spec: &LineSpec) -> Result<ModeDecomposition> {
    if spec.n_modes == 0 {
        spec.validate()?;
        return Ok(ModeDecomposition {
            omega: vec![],
            g: vec![],
            p00: 1.0,
            p_row0: vec![1.0],
        });
    }
    if spec.z == 0.0 {
        return decompose_decoupled(spec);
    }
    let (cap, ind) = build_matrices(spec)?;
    let n = cap.len();
    let inv_sqrt_c = cap.map(|c| 1.0 / c.sqrt());

    // S = C^{-1/2} Γ C^{-1/2}
    let mut s = ind;
    for i in 0..n {
        for j in 0..n {
            s[(i, j)] *= inv_sqrt_c[i] * inv_sqrt_c[j];
        }
    }
    let eig = s.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let lambda_max = order
        .iter()
        .map(|&i| eig.eigenvalues[i].abs())
        .fold(0.0_f64, f64::max);
    let kernel_cut = KERNEL_TOL * lambda_max;
    let zero_count = (0..n)
        .filter(|&i| eig.eigenvalues[i].abs() < kernel_cut)
        .count();
    if zero_count != 1 {
        return Err(Error::MoreThanOneZeroMode { count: zero_count });
    }

    // Back-transform; the smallest eigenvalue is the zero mode.
    let mut p_row0 = Vec::with_capacity(n);
    let mut omega = Vec::with_capacity(n - 1);
    let mut g = Vec::with_capacity(n - 1);
    let mut p00 = 0.0;
    for (pos, &col) in order.iter().enumerate() {
        let v0 = eig.eigenvectors[(0, col)];
        let p0 = inv_sqrt_c[0] * v0;
        let p0 = p0.abs(); // sign convention: P_0k >= 0
        if pos == 0 {
            p00 = p0;
            p_row0.push(p0);
        } else {
            let w2 = eig.eigenvalues[col];
            if w2 <= 0.0 {
                return Err(Error::MoreThanOneZeroMode { count: zero_count + 1 });
            }
            let w = w2.sqrt();
            omega.push(w);
            g.push(2.0 * w.sqrt() * p0);
            p_row0.push(p0);
        }
    }
    Ok(ModeDecomposition { omega, g, p00, p_row0 })
}

/// Decoupled limit `z = 0`: the junction node drops out, the line modes are
/// those of the bare chain (finite `ℓ/c = wp²/4`), and every coupling is zero.
fn decompose_decoupled(spec: &LineSpec) -> Result<ModeDecomposition> {
    spec.validate()?;
    let n = spec.n_modes;
    let ratio = spec.wp * spec.wp / 4.0;
    // Interior chain: tridiag(-1; [2,…,2,1]; -1) scaled by ℓ/c.
    let mut t = DMatrix::zeros(n, n);
    for i in 0..n {
        t[(i, i)] = if i == n - 1 { 1.0 } else { 2.0 };
        if i + 1 < n {
            t[(i, i + 1)] = -1.0;
            t[(i + 1, i)] = -1.0;
        }
    }
    let eig = t.symmetric_eigen();
    let mut omega: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&lam: &f64| (ratio * lam.max(0.0)).sqrt())
        .collect();
    omega.sort_by(f64::total_cmp);
    let g = vec![0.0; n];
    let mut p_row0 = vec![0.0; n + 1];
    p_row0[0] = 1.0;
    Ok(ModeDecomposition { omega, g, p00: 1.0, p_row0 })
}

/// Residual of the sum rule `P_00² + ¼ Σ_k g_k²/ω_k = 1`.
pub fn check_sum_rule(md: &ModeDecomposition) -> f64 {
    let sum: f64 = md
        .g
        .iter()
        .zip(&md.omega)
        .map(|(&g, &w)| g * g / w)
        .sum();
    (md.p00 * md.p00 + 0.25 * sum - 1.0).abs()
}

/// Closed form for the zero-mode weight, `(1 + n_modes·c)^{−1/2}`.
pub fn p00_closed_form(spec: &LineSpec) -> f64 {
    (1.0 + spec.n_modes as f64 * spec.site_capacitance()).powf(-0.5)
}
