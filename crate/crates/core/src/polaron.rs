//! Displaced-oscillator analytics: associated Laguerre polynomials,
//! displaced-number-state overlaps, the bosonic shift identity and the
//! Franck-Condon-dressed junction matrix elements.
//!
//! None of this is on the production diagonalization path; it provides
//! closed-form oracles against which the Fock-basis pipeline is checked.

use num_complex::Complex64;

/// `ln(n!)` by direct log-domain summation; exact to machine accuracy for the
/// occupation numbers in play and immune to factorial overflow.
pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

/// Associated Laguerre polynomial `L_n^{(k)}(x)` by the upward three-term
/// recurrence, stable for `x ≥ 0`.
pub fn assoc_laguerre(n: usize, k: i64, x: f64) -> f64 {
    let a = k as f64;
    if n == 0 {
        return 1.0;
    }
    let mut lm1 = 1.0; // L_0
    let mut l = 1.0 + a - x; // L_1
    for j in 1..n {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + a - x) * l - (jf + a) * lm1) / (jf + 1.0);
        lm1 = l;
        l = next;
    }
    l
}

/// Overlap `⟨β,m|α,n⟩` of two displaced number states.
///
/// For `m ≥ n`:
/// `e^{(αβ*−α*β)/2} e^{−|α−β|²/2} √(n!/m!) (α−β)^{m−n} L_n^{(m−n)}(|α−β|²)`;
/// for `m < n` conjugate symmetry `⟨β,m|α,n⟩ = ⟨α,n|β,m⟩*` applies.
pub fn displaced_overlap(beta: Complex64, m: usize, alpha: Complex64, n: usize) -> Complex64 {
    if m < n {
        return displaced_overlap(alpha, n, beta, m).conj();
    }
    let d = alpha - beta;
    let d2 = d.norm_sqr();
    let phase = 0.5 * (alpha * beta.conj() - alpha.conj() * beta);
    let amp = (phase - 0.5 * d2).exp();
    let fac = (0.5 * (ln_factorial(n) - ln_factorial(m))).exp();
    amp * fac * d.powu((m - n) as u32) * assoc_laguerre(n, (m - n) as i64, d2)
}

/// Deviation of the truncated spectrum of `ω a†a + iNg(a†−a)` from the exact
/// shifted ladder `ω·n − N²g²/ω`, over the lowest `levels` eigenvalues.
///
/// The gauge `i^n` makes the matrix real symmetric tridiagonal.
pub fn shift_spectrum_check(omega: f64, g: f64, n_charge: f64, cutoff: usize, levels: usize) -> f64 {
    let dim = cutoff + 1;
    let mut h = nalgebra::DMatrix::zeros(dim, dim);
    for i in 0..dim {
        h[(i, i)] = omega * i as f64;
        if i + 1 < dim {
            let v = n_charge * g * ((i + 1) as f64).sqrt();
            h[(i, i + 1)] = v;
            h[(i + 1, i)] = v;
        }
    }
    let mut eigs: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().copied().collect();
    eigs.sort_by(f64::total_cmp);
    let shift = -n_charge * n_charge * g * g / omega;
    eigs.iter()
        .take(levels)
        .enumerate()
        .map(|(i, &e)| (e - (omega * i as f64 + shift)).abs())
        .fold(0.0, f64::max)
}

/// Frequencies and couplings of the modes entering a dressed matrix element.
#[derive(Debug, Clone)]
pub struct ModeData {
    pub omega: Vec<f64>,
    pub g: Vec<f64>,
}

/// Dressed junction matrix element `⟨M,m|H_J|N,n⟩` in the displaced basis:
/// the bare element times the Franck-Condon exponential and the per-mode
/// Laguerre factors.
pub fn dressed_element(
    modes: &ModeData,
    n_charge: f64,
    m_charge: f64,
    occ_n: &[usize],
    occ_m: &[usize],
    hj_element: Complex64,
) -> Complex64 {
    assert_eq!(modes.omega.len(), occ_n.len());
    assert_eq!(occ_n.len(), occ_m.len());
    let mut out = hj_element;
    for k in 0..modes.omega.len() {
        let alpha = Complex64::new(0.0, n_charge * modes.g[k] / modes.omega[k]);
        let beta = Complex64::new(0.0, m_charge * modes.g[k] / modes.omega[k]);
        // Per-mode factor of the dressed element; the displaced overlap
        // carries an extra i^{m-n} relative to it.
        let ov = displaced_overlap(beta, occ_m[k], alpha, occ_n[k]);
        let phase = Complex64::i().powi(occ_n[k] as i32 - occ_m[k] as i32);
        out *= ov * phase;
    }
    out
}

/// Franck-Condon suppression `exp(−|N−M|²/2 · Σ_k g_k²/ω_k²)`.
pub fn franck_condon_factor(modes: &ModeData, charge_diff: f64) -> f64 {
    let s: f64 = modes
        .omega
        .iter()
        .zip(&modes.g)
        .map(|(&w, &g)| g * g / (w * w))
        .sum();
    (-0.5 * charge_diff * charge_diff * s).exp()
}
