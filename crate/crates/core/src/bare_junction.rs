//! Bloch bands of the isolated junction `H_J = 4 N̂² − E_J cos φ̂`.
//!
//! At fixed quasi-charge `ν ∈ [−0.5, 0.5]` the Hamiltonian restricted to the
//! integer-charge ladder `N = ν + m` is a real symmetric tridiagonal matrix:
//! diagonal `4(ν+m)²`, off-diagonal `−E_J/2` (the cosine hops charge by one).
//! Everything downstream needs the band energies plus the charge and cosine
//! operators projected onto the lowest bands.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Default charge truncation; safe for `E_J ≲ E_C`.
pub const DEFAULT_M_MAX: usize = 30;

/// Eigenpairs and band-basis operators at one quasi-charge.
#[derive(Debug, Clone)]
pub struct BlochBlock {
    pub nu: f64,
    /// Band energies `ε_ν^s`, ascending, `s = 1..n_bands`.
    pub energies: Vec<f64>,
    /// Eigenvector coefficients `c_{s,m}`; row `s`, column `m + m_max`.
    pub vectors: DMatrix<f64>,
    /// `⟨ν,r|N̂|ν,s⟩` in the band basis.
    pub n_mat: DMatrix<f64>,
    /// `⟨ν,r|N̂²|ν,s⟩`, computed exactly in the charge basis.
    pub n2_mat: DMatrix<f64>,
    /// `⟨ν,r|cos φ̂|ν,s⟩`.
    pub cos_mat: DMatrix<f64>,
    pub m_max: usize,
}

impl BlochBlock {
    pub fn n_bands(&self) -> usize {
        self.energies.len()
    }
}

/// Tridiagonal junction block at quasi-charge `nu`, dimension `2·m_max + 1`.
pub fn junction_block(ej: f64, nu: f64, m_max: usize) -> DMatrix<f64> {
    assert!(m_max >= 1);
    let dim = 2 * m_max + 1;
    let mut h = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        let n = nu + (i as f64 - m_max as f64);
        h[(i, i)] = 4.0 * n * n;
        if i + 1 < dim {
            h[(i, i + 1)] = -ej / 2.0;
            h[(i + 1, i)] = -ej / 2.0;
        }
    }
    h
}

/// Lowest `n_bands` eigenpairs of the junction block with band-basis operators.
///
/// Eigenvector signs follow a fixed convention (largest-magnitude coefficient
/// positive) so results are bit-reproducible.
pub fn solve_bloch(ej: f64, nu: f64, n_bands: usize, m_max: usize) -> Result<BlochBlock> {
    if !(ej.is_finite() && nu.is_finite()) || ej < 0.0 {
        return Err(Error::InvalidInput(format!("ej = {ej}, nu = {nu}")));
    }
    let dim = 2 * m_max + 1;
    if n_bands == 0 || n_bands > dim {
        return Err(Error::InvalidInput(format!(
            "n_bands = {n_bands} outside [1, {dim}]"
        )));
    }
    let h = junction_block(ej, nu, m_max);
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    // Unconverged-band guard: the highest requested band must sit well below
    // the boundary estimate 4(m_max − 1)².
    let boundary = 4.0 * ((m_max - 1) as f64).powi(2);
    let top = eig.eigenvalues[order[n_bands - 1]];
    if top > 0.99 * boundary {
        return Err(Error::TruncationTooSmall {
            m_max,
            band: n_bands,
            energy: top,
            boundary,
        });
    }

    let mut energies = Vec::with_capacity(n_bands);
    let mut vectors = DMatrix::zeros(n_bands, dim);
    for (s, &col) in order.iter().take(n_bands).enumerate() {
        energies.push(eig.eigenvalues[col]);
        let v = eig.eigenvectors.column(col);
        // sign convention: largest-magnitude coefficient positive
        let mut imax = 0;
        for i in 1..dim {
            if v[i].abs() > v[imax].abs() {
                imax = i;
            }
        }
        let sign = if v[imax] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..dim {
            vectors[(s, i)] = sign * v[i];
        }
    }

    let mut n_mat = DMatrix::zeros(n_bands, n_bands);
    let mut n2_mat = DMatrix::zeros(n_bands, n_bands);
    let mut cos_mat = DMatrix::zeros(n_bands, n_bands);
    // upper triangle only, mirrored, so the operators are symmetric exactly
    for r in 0..n_bands {
        for s in r..n_bands {
            let mut n1 = 0.0;
            let mut n2 = 0.0;
            let mut cs = 0.0;
            for i in 0..dim {
                let n = nu + (i as f64 - m_max as f64);
                n1 += n * vectors[(r, i)] * vectors[(s, i)];
                n2 += n * n * vectors[(r, i)] * vectors[(s, i)];
                let up = if i + 1 < dim { vectors[(s, i + 1)] } else { 0.0 };
                let dn = if i > 0 { vectors[(s, i - 1)] } else { 0.0 };
                cs += 0.5 * vectors[(r, i)] * (up + dn);
            }
            n_mat[(r, s)] = n1;
            n_mat[(s, r)] = n1;
            n2_mat[(r, s)] = n2;
            n2_mat[(s, r)] = n2;
            cos_mat[(r, s)] = cs;
            cos_mat[(s, r)] = cs;
        }
    }

    Ok(BlochBlock {
        nu,
        energies,
        vectors,
        n_mat,
        n2_mat,
        cos_mat,
        m_max,
    })
}

/// Uniform closed grid on `[0, 0.5]`; evenness in `ν` supplies the other half.
pub fn nu_grid(points: usize) -> Vec<f64> {
    assert!(points >= 2);
    (0..points)
        .map(|i| 0.5 * i as f64 / (points - 1) as f64)
        .collect()
}
