//! Truncated product basis `{|ν,s⟩ ⊗ |n_1…n_Nm⟩}` with `Σ_k ω_k n_k < E_cut`
//! (strict), enumerated depth-first in lexicographic order. Each state gets a
//! unique integer tag from a mixed-radix positional code over the per-mode
//! maximal occupations, so lookup is a binary search over sorted tags. When
//! the radix product does not fit the tag width, tags fall back to hashing
//! with an explicit collision check.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::io::Write;

use crate::error::{Error, Result};

/// One basis state: a bare-junction band times a photon occupation vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisState {
    /// Band index `s ∈ [1, n_bands]`.
    pub band: usize,
    pub occ: Vec<u32>,
    pub tag: u128,
}

/// Ordered cutoff basis with logarithmic-time lookup.
#[derive(Debug, Clone)]
pub struct CutoffBasis {
    pub states: Vec<BasisState>,
    pub omega: Vec<f64>,
    pub e_cut: f64,
    pub n_bands: usize,
    /// Per-mode number of admissible occupations (`max n_k + 1`).
    radices: Vec<u128>,
    /// Big-endian positional weights; empty when hashing.
    weights: Vec<u128>,
    hashed: bool,
}

fn hash_tag(band: usize, occ: &[u32]) -> u128 {
    let mut h = DefaultHasher::new();
    band.hash(&mut h);
    occ.hash(&mut h);
    h.finish() as u128
}

impl CutoffBasis {
    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn n_modes(&self) -> usize {
        self.omega.len()
    }

    /// Photon energy `Σ_k ω_k n_k` of an occupation vector.
    pub fn photon_energy(&self, occ: &[u32]) -> f64 {
        occ.iter()
            .zip(&self.omega)
            .map(|(&n, &w)| n as f64 * w)
            .sum()
    }

    fn encode(&self, band: usize, occ: &[u32]) -> Option<u128> {
        if self.hashed {
            return Some(hash_tag(band, occ));
        }
        let mut code: u128 = 0;
        for (k, &n) in occ.iter().enumerate() {
            if (n as u128) >= self.radices[k] {
                return None;
            }
            code += n as u128 * self.weights[k];
        }
        Some(code * self.n_bands as u128 + (band - 1) as u128)
    }

    /// Position of `(band, occ)` in the enumeration, or `None` if the state
    /// lies outside the truncated space.
    pub fn lookup(&self, band: usize, occ: &[u32]) -> Option<usize> {
        if band < 1 || band > self.n_bands || occ.len() != self.omega.len() {
            return None;
        }
        if self.photon_energy(occ) >= self.e_cut {
            return None;
        }
        let tag = self.encode(band, occ)?;
        self.states
            .binary_search_by(|s| s.tag.cmp(&tag))
            .ok()
    }

    /// Debug dump: one state per line, `tag band n_1 … n_Nm`.
    pub fn dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for s in &self.states {
            write!(w, "{} {}", s.tag, s.band)?;
            for n in &s.occ {
                write!(w, " {n}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Enumerate every admissible `(band, occupation)` state under the cutoff.
pub fn generate(omega: &[f64], e_cut: f64, n_bands: usize) -> Result<CutoffBasis> {
    if n_bands == 0 {
        return Err(Error::InvalidInput("n_bands must be >= 1".into()));
    }
    if !(e_cut.is_finite() && e_cut > 0.0) {
        return Err(Error::InvalidInput(format!("e_cut = {e_cut}")));
    }
    for w in omega.windows(2) {
        if w[0] > w[1] {
            return Err(Error::InvalidInput("omega must be ascending".into()));
        }
    }
    if omega.iter().any(|&w| w <= 0.0) {
        return Err(Error::InvalidInput("omega must be positive".into()));
    }

    let n_modes = omega.len();
    let radices: Vec<u128> = omega
        .iter()
        .map(|&w| (e_cut / w).ceil() as u128)
        .collect();

    // Big-endian weights: code order = lexicographic occupation order.
    let mut weights = vec![0u128; n_modes];
    let mut hashed = false;
    let mut acc: u128 = n_bands as u128;
    for k in (0..n_modes).rev() {
        weights[k] = acc / n_bands as u128;
        match acc.checked_mul(radices[k]) {
            Some(next) => acc = next,
            None => {
                hashed = true;
                break;
            }
        }
    }

    let mut basis = CutoffBasis {
        states: Vec::new(),
        omega: omega.to_vec(),
        e_cut,
        n_bands,
        radices,
        weights: if hashed { Vec::new() } else { weights },
        hashed,
    };

    // Depth-first over modes with a remaining-energy budget.
    let mut occ = vec![0u32; n_modes];
    enumerate_rec(&mut basis, &mut occ, 0, 0.0);
    basis.states.sort_by(|a, b| a.tag.cmp(&b.tag));
    if basis
        .states
        .windows(2)
        .any(|w| w[0].tag == w[1].tag)
    {
        // hash collision (or radix bug): tags no longer identify states
        return Err(Error::CapacityOverflow);
    }
    Ok(basis)
}

fn enumerate_rec(basis: &mut CutoffBasis, occ: &mut Vec<u32>, mode: usize, energy: f64) {
    if mode == basis.omega.len() {
        for band in 1..=basis.n_bands {
            let tag = if basis.hashed {
                hash_tag(band, occ)
            } else {
                basis.encode(band, occ).expect("within radix by construction")
            };
            basis.states.push(BasisState {
                band,
                occ: occ.clone(),
                tag,
            });
        }
        return;
    }
    let w = basis.omega[mode];
    let mut n = 0u32;
    loop {
        let e = energy + n as f64 * w;
        if e >= basis.e_cut {
            break;
        }
        occ[mode] = n;
        enumerate_rec(basis, occ, mode + 1, e);
        n += 1;
    }
    occ[mode] = 0;
}
