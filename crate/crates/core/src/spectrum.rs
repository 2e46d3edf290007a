//! Quasi-charge-blocked Hamiltonian on the cutoff basis.
//!
//! At fixed `ν` the full Hamiltonian is
//! `Σ_s ε_ν^s |s⟩⟨s| + Σ_k ω_k a_k†a_k + i Σ_k g_k (a_k† − a_k) N̂`.
//! Absorbing the per-state phase `i^{Σ_k n_k}` turns the coupling into the
//! real symmetric stencil `+g_k √(n_k+1)` (raising) and `+g_k √n_k`
//! (lowering), each multiplied by the band-basis charge matrix element.
//! Elements whose target leaves the truncated space are dropped, which keeps
//! the assembly a Rayleigh-Ritz projector and every eigenvalue variational.

use crate::bare_junction::{solve_bloch, BlochBlock};
use crate::circuit_modes::{decompose_modes, LineSpec, ModeDecomposition};
use crate::error::{Error, Result};
use crate::fock_basis::{generate, CutoffBasis};
use crate::lanczos::{lowest_eigenpairs, EigResult};
use crate::par::maybe_par_map;
use crate::sparse::SparseBlock;

/// Numerical parameters of one diagonalization.
#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    /// Photon energy cutoff `E_cut` (units `E_C`).
    pub e_cut: f64,
    /// Number of bare junction bands kept.
    pub n_bands: usize,
    /// Charge truncation of the bare junction solver.
    pub m_max: usize,
    /// Number of eigenpairs.
    pub k: usize,
    /// Residual tolerance, relative to the spectral span.
    pub tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            e_cut: 15.0,
            n_bands: 5,
            m_max: 30,
            k: 12,
            tol: 1e-10,
        }
    }
}

/// Assemble the real symmetric sparse block for one quasi-charge.
pub fn assemble(
    block: &BlochBlock,
    md: &ModeDecomposition,
    basis: &CutoffBasis,
) -> Result<SparseBlock> {
    if block.n_bands() != basis.n_bands {
        return Err(Error::DimensionMismatch(format!(
            "block has {} bands, basis {}",
            block.n_bands(),
            basis.n_bands
        )));
    }
    if md.omega != basis.omega {
        return Err(Error::DimensionMismatch(
            "mode frequencies of decomposition and basis differ".into(),
        ));
    }
    let n_bands = basis.n_bands;
    let dim = basis.dim();
    let mut rows: Vec<Vec<(u32, f64)>> = Vec::with_capacity(dim);
    let mut occ_scratch: Vec<u32> = vec![0; basis.n_modes()];

    for i in 0..dim {
        let state = &basis.states[i];
        let r = state.band - 1;
        let mut row: Vec<(u32, f64)> =
            Vec::with_capacity(1 + 2 * basis.n_modes() * n_bands);
        let diag = block.energies[r] + basis.photon_energy(&state.occ);
        row.push((i as u32, diag));

        for k in 0..basis.n_modes() {
            let g = md.g[k];
            if g == 0.0 {
                continue;
            }
            let nk = state.occ[k];
            // raising on mode k
            occ_scratch.copy_from_slice(&state.occ);
            occ_scratch[k] = nk + 1;
            let amp_up = g * ((nk + 1) as f64).sqrt();
            for s in 0..n_bands {
                let el = block.n_mat[(r, s)];
                if el == 0.0 {
                    continue;
                }
                if let Some(j) = basis.lookup(s + 1, &occ_scratch) {
                    row.push((j as u32, amp_up * el));
                }
            }
            // lowering on mode k
            if nk > 0 {
                occ_scratch[k] = nk - 1;
                let amp_dn = g * (nk as f64).sqrt();
                for s in 0..n_bands {
                    let el = block.n_mat[(r, s)];
                    if el == 0.0 {
                        continue;
                    }
                    if let Some(j) = basis.lookup(s + 1, &occ_scratch) {
                        row.push((j as u32, amp_dn * el));
                    }
                }
            }
            occ_scratch[k] = nk;
        }
        rows.push(row);
    }
    Ok(SparseBlock::from_rows(rows))
}

/// Everything computed for one `(spec, ν)` block.
#[derive(Debug, Clone)]
pub struct BlockSolution {
    pub md: ModeDecomposition,
    pub block: BlochBlock,
    pub basis: CutoffBasis,
    pub eig: EigResult,
}

/// Decompose the line, solve the bare junction, build the basis and
/// diagonalize the block at one quasi-charge.
pub fn solve_block(spec: &LineSpec, nu: f64, cfg: &SolverConfig) -> Result<BlockSolution> {
    let md = decompose_modes(spec)?;
    let block = solve_bloch(spec.ej, nu, cfg.n_bands, cfg.m_max)?;
    let basis = generate(&md.omega, cfg.e_cut, cfg.n_bands)?;
    let h = assemble(&block, &md, &basis)?;
    let k = cfg.k.min(h.dim);
    let eig = lowest_eigenpairs(&h, k, cfg.tol)?;
    Ok(BlockSolution {
        md,
        block,
        basis,
        eig,
    })
}

/// One row of a band table.
#[derive(Debug, Clone, Copy)]
pub struct BandPoint {
    pub z: f64,
    pub nu: f64,
    pub level: usize,
    pub energy: f64,
    pub energy_minus_ground: f64,
    /// `(E − E_G)/ħΔ`.
    pub rescaled_by_delta: f64,
}

/// Lowest `cfg.k` levels on a `(z, ν)` grid; grid points run in parallel.
pub fn band_sweep(
    template: &LineSpec,
    z_grid: &[f64],
    nu_grid: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<BandPoint>> {
    if z_grid.is_empty() || nu_grid.is_empty() {
        return Err(Error::InvalidInput("empty sweep grid".into()));
    }
    let jobs: Vec<(f64, f64)> = z_grid
        .iter()
        .flat_map(|&z| nu_grid.iter().map(move |&nu| (z, nu)))
        .collect();
    let results = maybe_par_map(&jobs, |&(z, nu)| {
        let spec = LineSpec { z, ..*template };
        solve_block(&spec, nu, cfg)
            .map(|sol| (z, nu, sol.eig.eigenvalues))
            .map_err(|e| e.at(format!("z = {z}, nu = {nu}")))
    });

    // Ground energy per z column is the ν-grid minimum of the lowest level.
    let mut per_z: Vec<(f64, f64, Vec<f64>)> = Vec::with_capacity(jobs.len());
    for r in results {
        per_z.push(r?);
    }
    // rescale by the exact chain spacing so curves for different sizes
    // collapse onto each other at z = 1
    let delta = template.chain_fsr();
    let mut out = Vec::new();
    for &z in z_grid {
        let ground = per_z
            .iter()
            .filter(|(pz, _, _)| *pz == z)
            .map(|(_, _, e)| e[0])
            .fold(f64::INFINITY, f64::min);
        for (pz, nu, energies) in per_z.iter().filter(|(pz, _, _)| *pz == z) {
            for (level, &e) in energies.iter().enumerate() {
                out.push(BandPoint {
                    z: *pz,
                    nu: *nu,
                    level,
                    energy: e,
                    energy_minus_ground: e - ground,
                    rescaled_by_delta: (e - ground) / delta,
                });
            }
        }
    }
    Ok(out)
}

/// Levels at one grid point of the convergence study.
#[derive(Debug, Clone)]
pub struct ConvergenceEntry {
    pub e_cut: f64,
    pub n_bands: usize,
    pub dim: usize,
    pub levels: Vec<f64>,
}

/// Convergence of the low-lying levels with the two numerical cutoffs.
#[derive(Debug, Clone)]
pub struct ConvergenceTable {
    pub entries: Vec<ConvergenceEntry>,
}

impl ConvergenceTable {
    fn line<'a>(
        &'a self,
        mut pred: impl FnMut(&ConvergenceEntry) -> bool + 'a,
    ) -> Vec<&'a ConvergenceEntry> {
        self.entries.iter().filter(move |e| pred(e)).collect()
    }

    /// Max level change between successive `e_cut` values at fixed `n_bands`.
    pub fn diffs_along_ecut(&self, n_bands: usize) -> Vec<f64> {
        successive_diffs(&self.line(|e| e.n_bands == n_bands))
    }

    /// Max level change between successive `n_bands` values at fixed `e_cut`.
    pub fn diffs_along_nbands(&self, e_cut: f64) -> Vec<f64> {
        successive_diffs(&self.line(|e| e.e_cut == e_cut))
    }
}

fn successive_diffs(entries: &[&ConvergenceEntry]) -> Vec<f64> {
    entries
        .windows(2)
        .map(|w| {
            let n = w[0].levels.len().min(w[1].levels.len());
            (0..n)
                .map(|i| (w[0].levels[i] - w[1].levels[i]).abs())
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Sweep both cutoffs at fixed quasi-charge.
pub fn convergence_study(
    spec: &LineSpec,
    nu: f64,
    e_cut_grid: &[f64],
    n_bands_grid: &[usize],
    cfg: &SolverConfig,
) -> Result<ConvergenceTable> {
    let jobs: Vec<(f64, usize)> = e_cut_grid
        .iter()
        .flat_map(|&ec| n_bands_grid.iter().map(move |&nb| (ec, nb)))
        .collect();
    let results = maybe_par_map(&jobs, |&(e_cut, n_bands)| {
        let local = SolverConfig {
            e_cut,
            n_bands,
            ..*cfg
        };
        solve_block(spec, nu, &local)
            .map(|sol| ConvergenceEntry {
                e_cut,
                n_bands,
                dim: sol.basis.dim(),
                levels: sol.eig.eigenvalues,
            })
            .map_err(|e| e.at(format!("e_cut = {e_cut}, n_bands = {n_bands}")))
    });
    let mut entries = Vec::with_capacity(jobs.len());
    for r in results {
        entries.push(r?);
    }
    Ok(ConvergenceTable { entries })
}
