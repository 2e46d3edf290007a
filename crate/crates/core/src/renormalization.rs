//! Closed-form renormalized junction energies and their flow toward the
//! thermodynamic limit.
//!
//! The line dresses the junction into an effective one with
//! `Ẽ_J = E_J · exp(−½ Σ_k g_k²/ω_k²)` and `Ẽ_C = P_00² E_C`. The ratio
//! `Ẽ_J/Ẽ_C`, normalized by the bare `E_J/E_C`, develops a universal crossing
//! at `Z = R_q` as the free spectral range shrinks, with the slope at the
//! crossing growing like `ln(1/Δ)`.

use crate::circuit_modes::{decompose_modes, LineSpec, ModeDecomposition};
use crate::error::{Error, Result};

/// One point of the renormalization flow.
#[derive(Debug, Clone, Copy)]
pub struct RenormPoint {
    pub n_modes: usize,
    pub z: f64,
    /// Free spectral range `ħΔ/E_C`.
    pub delta: f64,
    pub ej_tilde: f64,
    pub ec_tilde: f64,
    /// `(Ẽ_J/Ẽ_C) / (E_J/E_C)`; starts at 1 for `z → 0`.
    pub ratio: f64,
}

/// `Ẽ_J = E_J exp(−½ Σ_k g_k²/ω_k²)`.
pub fn renorm_ej(md: &ModeDecomposition, ej: f64) -> f64 {
    ej * (-0.5 * coupling_exponent(md)).exp()
}

/// The (unbounded) exponent `Σ_k g_k²/ω_k²`.
pub fn coupling_exponent(md: &ModeDecomposition) -> f64 {
    md.g
        .iter()
        .zip(&md.omega)
        .map(|(&g, &w)| g * g / (w * w))
        .sum()
}

/// `Ẽ_C = P_00²` in units of `E_C`.
pub fn renorm_ec(md: &ModeDecomposition) -> f64 {
    md.p00 * md.p00
}

/// Normalized ratio `(Ẽ_J/Ẽ_C)/(E_J/E_C) = exp(−½Σ)/P_00²`.
fn normalized_ratio(md: &ModeDecomposition) -> f64 {
    (-0.5 * coupling_exponent(md)).exp() / (md.p00 * md.p00)
}

fn point(wp: f64, ej: f64, z: f64, n_modes: usize) -> Result<RenormPoint> {
    let spec = LineSpec::new(ej, wp, n_modes, z)?;
    let md = decompose_modes(&spec)?;
    Ok(RenormPoint {
        n_modes,
        z,
        delta: spec.fsr(),
        ej_tilde: renorm_ej(&md, ej),
        ec_tilde: renorm_ec(&md),
        ratio: normalized_ratio(&md),
    })
}

/// Result of a flow sweep over impedance and system size.
#[derive(Debug, Clone)]
pub struct FlowSweep {
    pub points: Vec<RenormPoint>,
    /// `(n_a, n_b, z*)` for every size pair whose ratio curves intersect.
    pub crossings: Vec<(usize, usize, f64)>,
}

/// Default 400-point log-spaced impedance grid on `[0.05, 2]`.
pub fn default_z_grid() -> Vec<f64> {
    log_grid(0.05, 2.0, 400)
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && lo > 0.0 && hi > lo);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Evaluate the flow on a `(z, n_modes)` grid and locate all pairwise
/// crossings of the normalized ratio curves.
///
/// Crossings are detected by sign changes of the log-ratio difference and
/// refined by linear interpolation.
pub fn sweep_flow(
    wp: f64,
    ej: f64,
    z_grid: &[f64],
    n_modes_list: &[usize],
) -> Result<FlowSweep> {
    let mut points = Vec::with_capacity(z_grid.len() * n_modes_list.len());
    let mut curves: Vec<Vec<f64>> = Vec::with_capacity(n_modes_list.len());
    for &nm in n_modes_list {
        let mut curve = Vec::with_capacity(z_grid.len());
        for &z in z_grid {
            let p = point(wp, ej, z, nm)?;
            curve.push(p.ratio.ln());
            points.push(p);
        }
        curves.push(curve);
    }

    let mut crossings = Vec::new();
    for a in 0..curves.len() {
        for b in a + 1..curves.len() {
            if let Some(zs) = first_sign_change(z_grid, &curves[a], &curves[b]) {
                crossings.push((n_modes_list[a], n_modes_list[b], zs));
            }
        }
    }
    Ok(FlowSweep { points, crossings })
}

fn first_sign_change(z_grid: &[f64], ya: &[f64], yb: &[f64]) -> Option<f64> {
    let d: Vec<f64> = ya.iter().zip(yb).map(|(&a, &b)| a - b).collect();
    for i in 0..d.len() - 1 {
        if d[i] == 0.0 {
            return Some(z_grid[i]);
        }
        if d[i] * d[i + 1] < 0.0 {
            let t = d[i] / (d[i] - d[i + 1]);
            return Some(z_grid[i] + t * (z_grid[i + 1] - z_grid[i]));
        }
    }
    None
}

/// Slope of the normalized ratio at `z = 1` for one system size.
#[derive(Debug, Clone, Copy)]
pub struct SlopePoint {
    pub n_modes: usize,
    pub delta: f64,
    pub slope: f64,
}

/// Least-squares fit `slope = a·ln(1/Δ) + b`.
#[derive(Debug, Clone)]
pub struct SlopeFit {
    pub points: Vec<SlopePoint>,
    pub a: f64,
    pub b: f64,
    pub r_squared: f64,
}

/// Central-difference slope of the ratio at the critical point per size, with
/// a log-law fit across sizes.
pub fn slope_at_critical(
    wp: f64,
    ej: f64,
    n_modes_list: &[usize],
    dz: f64,
) -> Result<SlopeFit> {
    if n_modes_list.len() < 4 {
        return Err(Error::InvalidInput(
            "slope fit needs at least 4 system sizes".into(),
        ));
    }
    let mut points = Vec::with_capacity(n_modes_list.len());
    for &nm in n_modes_list {
        let hi = point(wp, ej, 1.0 + dz, nm)?;
        let lo = point(wp, ej, 1.0 - dz, nm)?;
        points.push(SlopePoint {
            n_modes: nm,
            delta: std::f64::consts::PI * wp / (2.0 * nm as f64),
            slope: (hi.ratio - lo.ratio) / (2.0 * dz),
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| (1.0 / p.delta).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.slope).collect();
    let (a, b, r_squared) = linear_fit(&xs, &ys);
    Ok(SlopeFit { points, a, b, r_squared })
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let a = sxy / sxx;
    let b = my - a * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - (a * x + b)).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    (a, b, 1.0 - ss_res / ss_tot)
}

/// Crossing of the `k`th single-photon branch with the shifted branch
/// `4Ẽ_C + ω_{k−1}` in the `E_J → 0` limit.
#[derive(Debug, Clone, Copy)]
pub struct ChargeCrossing {
    /// Mode index `k ≥ 1`.
    pub mode: usize,
    pub z_star: f64,
}

/// `E_J → 0` crossing diagram: for each mode `k`, the impedance at which
/// `ω_k(z) = 4Ẽ_C(z) + ω_{k−1}(z)` (with `ω_0 ≡ 0`).
///
/// Modes whose branches never meet on the grid are omitted; if no mode
/// crosses at all that is an error.
pub fn charge_crossings(wp: f64, z_grid: &[f64], n_modes: usize) -> Result<Vec<ChargeCrossing>> {
    if n_modes == 0 || z_grid.len() < 2 {
        return Err(Error::InvalidInput("need n_modes >= 1 and a z grid".into()));
    }
    // ω_k(z) and Ẽ_C(z) across the grid
    let mut omegas: Vec<Vec<f64>> = Vec::with_capacity(z_grid.len());
    let mut ecs: Vec<f64> = Vec::with_capacity(z_grid.len());
    for &z in z_grid {
        let spec = LineSpec::new(0.0, wp, n_modes, z)?;
        let md = decompose_modes(&spec)?;
        ecs.push(renorm_ec(&md));
        omegas.push(md.omega);
    }
    let mut out = Vec::new();
    for k in 1..=n_modes {
        let f: Vec<f64> = (0..z_grid.len())
            .map(|i| {
                let wk = omegas[i][k - 1];
                let wkm1 = if k >= 2 { omegas[i][k - 2] } else { 0.0 };
                wk - wkm1 - 4.0 * ecs[i]
            })
            .collect();
        for i in 0..f.len() - 1 {
            if f[i] == 0.0 || f[i] * f[i + 1] < 0.0 {
                let t = if f[i] == 0.0 {
                    0.0
                } else {
                    f[i] / (f[i] - f[i + 1])
                };
                out.push(ChargeCrossing {
                    mode: k,
                    z_star: z_grid[i] + t * (z_grid[i + 1] - z_grid[i]),
                });
                break;
            }
        }
    }
    if out.is_empty() {
        return Err(Error::NoCrossing { mode: 1 });
    }
    Ok(out)
}
