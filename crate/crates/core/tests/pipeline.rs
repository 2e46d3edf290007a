//! Cross-module consistency: the displaced-oscillator analytics and the
//! Fock-basis diagonalization must describe the same physics.

use approx::assert_abs_diff_eq;
use nalgebra::DMatrix;
use num_complex::Complex64;

use schmid_lab::circuit_modes::{decompose_modes, LineSpec};
use schmid_lab::polaron::{dressed_element, franck_condon_factor, ModeData};
use schmid_lab::renormalization::{renorm_ej, renorm_ec};
use schmid_lab::spectrum::{solve_block, SolverConfig};

fn sorted_real_eigenvalues(h: &DMatrix<Complex64>) -> Vec<f64> {
    let mut vals: Vec<f64> = h.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.total_cmp(b));
    vals
}

/// One bosonic mode coupled to two charge states, solved two independent
/// ways: straight Fock-space diagonalization of the charge-gauge
/// Hamiltonian, and diagonalization in the displaced basis where the
/// junction hopping carries the dressed (Franck-Condon × Laguerre) factors.
#[test]
fn one_mode_two_charge_displaced_basis_matches_dense() {
    let (omega, g, ej) = (1.3, 0.4, 0.6);
    let charges = [0.0, 1.0];

    // dense: |N, n⟩ with H = 4N² + ω a†a − (ej/2)(|0⟩⟨1|+h.c.) + i g(a†−a)N
    let cutoff_dense = 80;
    let dim = 2 * cutoff_dense;
    let idx = |c: usize, n: usize| c * cutoff_dense + n;
    let mut h = DMatrix::<Complex64>::zeros(dim, dim);
    for (c, &nq) in charges.iter().enumerate() {
        for n in 0..cutoff_dense {
            h[(idx(c, n), idx(c, n))] = Complex64::new(4.0 * nq * nq + omega * n as f64, 0.0);
            if n + 1 < cutoff_dense {
                let v = Complex64::new(0.0, g * ((n + 1) as f64).sqrt() * nq);
                h[(idx(c, n + 1), idx(c, n))] = v;
                h[(idx(c, n), idx(c, n + 1))] = -v;
            }
            let other = 1 - c;
            h[(idx(c, n), idx(other, n))] = Complex64::new(-ej / 2.0, 0.0);
        }
    }
    let dense = sorted_real_eigenvalues(&h);

    // displaced basis: diagonal shifted-oscillator energies, hopping dressed
    let modes = ModeData {
        omega: vec![omega],
        g: vec![g],
    };
    let cutoff_disp = 40;
    let ddim = 2 * cutoff_disp;
    let didx = |c: usize, n: usize| c * cutoff_disp + n;
    let mut hd = DMatrix::<Complex64>::zeros(ddim, ddim);
    for (c, &nq) in charges.iter().enumerate() {
        for n in 0..cutoff_disp {
            let shift = nq * nq * g * g / omega;
            hd[(didx(c, n), didx(c, n))] =
                Complex64::new(4.0 * nq * nq + omega * n as f64 - shift, 0.0);
            for m in 0..cutoff_disp {
                let other = 1 - c;
                hd[(didx(other, m), didx(c, n))] = dressed_element(
                    &modes,
                    charges[c],
                    charges[other],
                    &[n],
                    &[m],
                    Complex64::new(-ej / 2.0, 0.0),
                );
            }
        }
    }
    let asym = (&hd - hd.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max);
    assert!(asym < 1e-12, "displaced Hamiltonian not Hermitian: {asym:.3e}");
    let displaced = sorted_real_eigenvalues(&hd);

    for i in 0..6 {
        assert_abs_diff_eq!(dense[i], displaced[i], epsilon = 1e-9);
    }
}

/// The closed-form Josephson renormalization is exactly the vacuum dressed
/// hopping element of the full multimode decomposition.
#[test]
fn renorm_ej_matches_dressed_vacuum_element() {
    let ej = 0.8;
    let spec = LineSpec::new(ej, 2.0, 16, 1.0).unwrap();
    let md = decompose_modes(&spec).unwrap();
    let modes = ModeData {
        omega: md.omega.clone(),
        g: md.g.clone(),
    };
    let zeros = vec![0usize; md.omega.len()];
    let dressed = dressed_element(
        &modes,
        0.0,
        1.0,
        &zeros,
        &zeros,
        Complex64::new(-ej / 2.0, 0.0),
    );
    assert!(dressed.im.abs() < 1e-15);
    assert_abs_diff_eq!(-2.0 * dressed.re, renorm_ej(&md, ej), epsilon = 1e-10);
    assert_abs_diff_eq!(
        franck_condon_factor(&modes, 1.0),
        renorm_ej(&md, ej) / ej,
        epsilon = 1e-12
    );
}

/// The large-coupling ground state of the full diagonalization stays below
/// the decoupled one (the coupled system gains binding energy), and the
/// renormalized parameters bound the low-energy scale.
#[test]
fn coupled_ground_state_gains_binding_energy() {
    let cfg = SolverConfig {
        e_cut: 8.0,
        n_bands: 3,
        k: 2,
        ..Default::default()
    };
    let decoupled = solve_block(&LineSpec::new(0.5, 2.0, 3, 1e-9).unwrap(), 0.0, &cfg).unwrap();
    let coupled = solve_block(&LineSpec::new(0.5, 2.0, 3, 1.0).unwrap(), 0.0, &cfg).unwrap();
    assert!(coupled.eig.eigenvalues[0] < decoupled.eig.eigenvalues[0]);

    // renormalized charging energy shrinks with coupling
    let md = decompose_modes(&LineSpec::new(0.5, 2.0, 3, 1.0).unwrap()).unwrap();
    assert!(renorm_ec(&md) < 1.0);
}
