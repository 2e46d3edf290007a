//! Physical diagnostics built on the eigenpairs: junction reduced density
//! matrix, charge fluctuations, zone-edge band gap, the photonic spectral
//! function and the SQUID flux sweep.

use nalgebra::DMatrix;

use crate::bare_junction::{solve_bloch, BlochBlock};
use crate::circuit_modes::LineSpec;
use crate::error::{Error, Result};
use crate::fock_basis::CutoffBasis;
use crate::lanczos::EigResult;
use crate::par::maybe_par_map;
use crate::spectrum::{solve_block, SolverConfig};

/// Trace the photons out of a normalized eigenvector on the cutoff basis.
pub fn reduced_density_junction(vec: &[f64], basis: &CutoffBasis) -> DMatrix<f64> {
    let nb = basis.n_bands;
    let mut rho = DMatrix::zeros(nb, nb);
    for (i, state) in basis.states.iter().enumerate() {
        let r = state.band - 1;
        rho[(r, r)] += vec[i] * vec[i];
        for s in state.band + 1..=nb {
            if let Some(j) = basis.lookup(s, &state.occ) {
                let v = vec[i] * vec[j];
                rho[(r, s - 1)] += v;
                rho[(s - 1, r)] += v;
            }
        }
    }
    rho
}

/// `σ_N² = tr(ρ_J N̂²) − tr(ρ_J N̂)²`, with `N̂²` taken from the exact
/// band-basis elements rather than the square of the truncated `N̂`.
pub fn charge_fluctuations(rho: &DMatrix<f64>, block: &BlochBlock) -> f64 {
    let mean = (rho * &block.n_mat).trace();
    let mean_sq = (rho * &block.n2_mat).trace();
    mean_sq - mean * mean
}

/// `tr(ρ_J cos φ̂)`.
pub fn cosine_expectation(rho: &DMatrix<f64>, block: &BlochBlock) -> f64 {
    (rho * &block.cos_mat).trace()
}

/// Charge fluctuation of the bare junction ground state at `ν = 0`; the
/// decoupled-limit reference ("Cooper pair box value").
pub fn cooper_pair_box_sigma(ej: f64) -> Result<f64> {
    let b = solve_bloch(ej, 0.0, 1, 30)?;
    Ok(b.n2_mat[(0, 0)] - b.n_mat[(0, 0)].powi(2))
}

/// Zone-edge gap between the first two bands at one impedance.
#[derive(Debug, Clone, Copy)]
pub struct GapPoint {
    pub z: f64,
    pub gap: f64,
    /// Gap over the exact chain mode spacing (`LineSpec::chain_fsr`); with
    /// this rescaling the curves for different sizes cross at z ≈ 1.
    pub rescaled_by_delta: f64,
}

/// `E_2 − E_1` at `ν = 0.5` across an impedance grid.
pub fn zone_edge_gap(
    template: &LineSpec,
    z_grid: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<GapPoint>> {
    let delta = template.chain_fsr();
    let cfg = SolverConfig {
        k: cfg.k.max(2),
        ..*cfg
    };
    let results = maybe_par_map(z_grid, |&z| {
        let spec = LineSpec { z, ..*template };
        solve_block(&spec, 0.5, &cfg)
            .map(|sol| sol.eig.eigenvalues[1] - sol.eig.eigenvalues[0])
            .map_err(|e| e.at(format!("z = {z}, nu = 0.5")))
    });
    let mut out = Vec::with_capacity(z_grid.len());
    for (&z, r) in z_grid.iter().zip(results) {
        let gap = r?;
        out.push(GapPoint {
            z,
            gap,
            rescaled_by_delta: gap / delta,
        });
    }
    Ok(out)
}

/// Lorentzian-broadened single-photon excitation spectrum.
#[derive(Debug, Clone)]
pub struct SpectralFunction {
    pub energies: Vec<f64>,
    pub values: Vec<f64>,
    pub gamma: f64,
    pub n_states: usize,
}

/// Apply `Σ_k (a_k + a_k†)` to a vector in the phase-gauged real basis.
///
/// The gauge turns the operator into `i` times a real antisymmetric stencil
/// (`+√n_k` lowering, `−√(n_k+1)` raising); only the magnitude of the matrix
/// element enters `D(E)`, so the stencil alone is applied here.
fn apply_photon_quadrature(vec: &[f64], basis: &CutoffBasis) -> Vec<f64> {
    let mut out = vec![0.0; basis.dim()];
    let mut occ = vec![0u32; basis.n_modes()];
    for (i, state) in basis.states.iter().enumerate() {
        if vec[i] == 0.0 {
            continue;
        }
        for k in 0..basis.n_modes() {
            let nk = state.occ[k];
            occ.copy_from_slice(&state.occ);
            occ[k] = nk + 1;
            if let Some(j) = basis.lookup(state.band, &occ) {
                out[j] -= ((nk + 1) as f64).sqrt() * vec[i];
            }
            if nk > 0 {
                occ[k] = nk - 1;
                if let Some(j) = basis.lookup(state.band, &occ) {
                    out[j] += (nk as f64).sqrt() * vec[i];
                }
            }
        }
    }
    out
}

/// Single-photon weights `|⟨G|Σ_k(a_k+a_k†)|E_n⟩|²` per excited state.
pub fn photon_weights(eig: &EigResult, basis: &CutoffBasis) -> Result<Vec<(f64, f64)>> {
    if eig.eigenvalues.len() < 2 {
        return Err(Error::GroundMissing);
    }
    let dim = basis.dim();
    let ground: Vec<f64> = (0..dim).map(|i| eig.eigenvectors[(i, 0)]).collect();
    let applied = apply_photon_quadrature(&ground, basis);
    let e_ground = eig.eigenvalues[0];
    let mut out = Vec::with_capacity(eig.eigenvalues.len() - 1);
    for n in 1..eig.eigenvalues.len() {
        let amp: f64 = (0..dim).map(|i| applied[i] * eig.eigenvectors[(i, n)]).sum();
        out.push((eig.eigenvalues[n] - e_ground, amp * amp));
    }
    Ok(out)
}

/// Evaluate `D(E)` on a grid from precomputed eigenpairs.
///
/// The window must stay well inside the converged part of the spectrum:
/// `max(e_grid) < 0.8 · (E_k − E_G)` is enforced.
pub fn spectral_function(
    eig: &EigResult,
    basis: &CutoffBasis,
    gamma: f64,
    e_grid: &[f64],
) -> Result<SpectralFunction> {
    if gamma <= 0.0 {
        return Err(Error::InvalidInput(format!("gamma = {gamma}")));
    }
    let weights = photon_weights(eig, basis)?;
    let top = weights.last().map(|&(e, _)| e).unwrap_or(0.0);
    let e_max = e_grid.iter().fold(0.0_f64, |a, &b| a.max(b));
    if e_max >= 0.8 * top {
        return Err(Error::InvalidInput(format!(
            "energy window max {e_max:.4} reaches into the unconverged spectrum (0.8·E_k = {:.4})",
            0.8 * top
        )));
    }
    let g2 = gamma * gamma;
    let values: Vec<f64> = e_grid
        .iter()
        .map(|&e| {
            weights
                .iter()
                .map(|&(en, w)| w * g2 / (g2 + (e - en).powi(2)))
                .sum()
        })
        .collect();
    Ok(SpectralFunction {
        energies: e_grid.to_vec(),
        values,
        gamma,
        n_states: eig.eigenvalues.len(),
    })
}

/// `D(E)` map over an external flux sweep of a symmetric SQUID,
/// `E_J(Φ) = E_J |cos(πΦ/Φ_0)|`, diagonalized at `ν = 0` per flux point.
#[derive(Debug, Clone)]
pub struct SpectralMap {
    pub phi: Vec<f64>,
    pub energies: Vec<f64>,
    /// Row-major `[phi][energy]`.
    pub values: Vec<Vec<f64>>,
}

pub fn flux_sweep(
    template: &LineSpec,
    phi_grid: &[f64],
    gamma: f64,
    e_window: &[f64],
    cfg: &SolverConfig,
) -> Result<SpectralMap> {
    if phi_grid.iter().any(|p| !(-0.5..=0.5).contains(p)) {
        return Err(Error::InvalidInput(
            "phi grid must lie in [-0.5, 0.5] (units of Phi_0)".into(),
        ));
    }
    let results = maybe_par_map(phi_grid, |&phi| {
        let ej = template.ej * (std::f64::consts::PI * phi).cos().abs();
        let spec = LineSpec { ej, ..*template };
        solve_block(&spec, 0.0, cfg)
            .and_then(|sol| spectral_function(&sol.eig, &sol.basis, gamma, e_window))
            .map_err(|e| e.at(format!("phi = {phi}")))
    });
    let mut values = Vec::with_capacity(phi_grid.len());
    for r in results {
        values.push(r?.values);
    }
    Ok(SpectralMap {
        phi: phi_grid.to_vec(),
        energies: e_window.to_vec(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit_modes::decompose_modes;
    use crate::fock_basis::generate;
    use approx::assert_abs_diff_eq;

    #[test]
    fn decoupled_ground_state_is_pure_band() {
        let spec = LineSpec::new(0.5, 2.0, 2, 1e-9).unwrap();
        let cfg = SolverConfig {
            e_cut: 5.0,
            n_bands: 3,
            k: 2,
            ..Default::default()
        };
        let sol = solve_block(&spec, 0.0, &cfg).unwrap();
        let dim = sol.basis.dim();
        let ground: Vec<f64> = (0..dim).map(|i| sol.eig.eigenvectors[(i, 0)]).collect();
        let rho = reduced_density_junction(&ground, &sol.basis);
        assert_abs_diff_eq!(rho.trace(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rho[(0, 0)], 1.0, epsilon = 1e-8);
    }

    #[test]
    fn schmidt_state_reduction() {
        // two bands x two photon states; state with known Schmidt weights
        let basis = generate(&[1.0], 1.5, 2).unwrap();
        assert_eq!(basis.dim(), 4);
        let (c0, c1) = (0.8_f64, 0.6_f64);
        let mut psi = vec![0.0; 4];
        psi[basis.lookup(1, &[0]).unwrap()] = c0;
        psi[basis.lookup(2, &[1]).unwrap()] = c1;
        let rho = reduced_density_junction(&psi, &basis);
        assert_abs_diff_eq!(rho[(0, 0)], c0 * c0, epsilon = 1e-14);
        assert_abs_diff_eq!(rho[(1, 1)], c1 * c1, epsilon = 1e-14);
        assert_abs_diff_eq!(rho[(0, 1)], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(rho.trace(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn charge_fluctuations_vanish_for_charge_state() {
        // ej = 0, ν = 0, decoupled: pure N = 0 state
        let spec = LineSpec::new(0.0, 2.0, 2, 1e-9).unwrap();
        let cfg = SolverConfig {
            e_cut: 5.0,
            n_bands: 3,
            k: 2,
            ..Default::default()
        };
        let sol = solve_block(&spec, 0.0, &cfg).unwrap();
        let dim = sol.basis.dim();
        let ground: Vec<f64> = (0..dim).map(|i| sol.eig.eigenvectors[(i, 0)]).collect();
        let rho = reduced_density_junction(&ground, &sol.basis);
        let sigma = charge_fluctuations(&rho, &sol.block);
        assert_abs_diff_eq!(sigma, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn cpb_value_matches_decoupled_pipeline() {
        let ej = 0.5;
        let cpb = cooper_pair_box_sigma(ej).unwrap();
        assert!(cpb > 0.0);
        let spec = LineSpec::new(ej, 2.0, 2, 1e-10).unwrap();
        let cfg = SolverConfig {
            e_cut: 5.0,
            n_bands: 4,
            k: 2,
            ..Default::default()
        };
        let sol = solve_block(&spec, 0.0, &cfg).unwrap();
        let dim = sol.basis.dim();
        let ground: Vec<f64> = (0..dim).map(|i| sol.eig.eigenvectors[(i, 0)]).collect();
        let rho = reduced_density_junction(&ground, &sol.basis);
        let sigma = charge_fluctuations(&rho, &sol.block);
        assert_abs_diff_eq!(sigma, cpb, epsilon = 1e-6);
    }

    #[test]
    fn spectral_peaks_at_mode_frequencies_when_decoupled() {
        let spec = LineSpec::new(0.1, 5.0, 3, 1e-9).unwrap();
        let md = decompose_modes(&spec).unwrap();
        let cfg = SolverConfig {
            e_cut: 6.0,
            n_bands: 2,
            k: 10,
            ..Default::default()
        };
        let sol = solve_block(&spec, 0.0, &cfg).unwrap();
        let weights = photon_weights(&sol.eig, &sol.basis).unwrap();
        // each single-photon excitation carries unit weight at ω_k
        for &wk in &md.omega {
            let hit = weights
                .iter()
                .find(|(e, _)| (e - wk).abs() < 1e-6)
                .unwrap_or_else(|| panic!("no excitation at {wk}"));
            assert_abs_diff_eq!(hit.1, 1.0, epsilon = 1e-6);
        }
        // everything else is dark
        for &(e, w) in &weights {
            if md.omega.iter().all(|&wk| (e - wk).abs() > 1e-6) {
                assert!(w < 1e-8, "dark state at {e} has weight {w}");
            }
        }
    }

    #[test]
    fn peak_weight_independent_of_gamma() {
        let spec = LineSpec::new(0.3, 5.0, 2, 0.8).unwrap();
        let cfg = SolverConfig {
            e_cut: 8.0,
            n_bands: 3,
            k: 12,
            ..Default::default()
        };
        let sol = solve_block(&spec, 0.0, &cfg).unwrap();
        let weights = photon_weights(&sol.eig, &sol.basis).unwrap();
        // isolated first peak
        let (e1, w1) = weights
            .iter()
            .copied()
            .find(|&(_, w)| w > 1e-3)
            .unwrap();
        let grid: Vec<f64> = (0..4001)
            .map(|i| e1 - 0.2 + 0.4 * i as f64 / 4000.0)
            .collect();
        let de = grid[1] - grid[0];
        for &gamma in &[0.004, 0.002] {
            let sf = spectral_function(&sol.eig, &sol.basis, gamma, &grid).unwrap();
            // ∫ Lorentzian = πγ per unit weight
            let integral: f64 = sf.values.iter().sum::<f64>() * de;
            let want = std::f64::consts::PI * gamma * w1;
            assert!((integral - want).abs() / want < 0.05, "gamma = {gamma}");
        }
    }

    #[test]
    fn window_guard_rejects_unconverged_energies() {
        let spec = LineSpec::new(0.3, 5.0, 2, 0.8).unwrap();
        let cfg = SolverConfig {
            e_cut: 6.0,
            n_bands: 2,
            k: 6,
            ..Default::default()
        };
        let sol = solve_block(&spec, 0.0, &cfg).unwrap();
        let top = sol.eig.eigenvalues.last().unwrap() - sol.eig.eigenvalues[0];
        let grid = vec![0.9 * top];
        assert!(spectral_function(&sol.eig, &sol.basis, 0.02, &grid).is_err());
    }
}
