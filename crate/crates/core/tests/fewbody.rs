use std::sync::Arc;

use approx::assert_abs_diff_eq;
use breathing::busch::{even_level_energy, relative_coupling};
use breathing::fewbody::*;
use breathing::spectral::fit_sine;
use breathing::trap_model::{contact_tensor, one_body_hamiltonian_matrix, x2_matrix, ContactTable, HOBasisSpec};
use breathing::QuenchSpec;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn system(n: usize, m: usize, q: &QuenchSpec) -> (Arc<FockBasis>, HOBasisSpec) {
    (Arc::new(FockBasis::new(n, m).unwrap()), HOBasisSpec::pre_quench(m, q).unwrap())
}

#[test]
fn free_ground_energies() {
    for n in 1..=4 {
        let q = QuenchSpec::new(1.0, 1.0, 0.0, n).unwrap();
        let (basis, orb) = system(n, 6, &q);
        let h = build_hamiltonian(basis, &orb, &q).unwrap();
        let (e, psi) = ground_state(&h).unwrap();
        assert_abs_diff_eq!(e, 0.5 * n as f64, epsilon = 1e-12);
        assert_abs_diff_eq!(x2_expectation(&psi, &orb), 0.5 * n as f64, epsilon = 1e-12);
    }
}

/// Two particles in M orbitals assembled as a first-quantized matrix on the
/// symmetric product space, then compared entry by entry.
#[test]
fn two_particle_matrix_matches_first_quantization() {
    for m in 1..=4 {
        for &g in &[0.0, 0.7, 3.0] {
            let q = QuenchSpec::new(1.0, 0.9f64.sqrt(), g, 2).unwrap();
            let (basis, orb) = system(2, m, &q);
            let h = build_hamiltonian(basis.clone(), &orb, &q).unwrap().to_dense();
            let h1 = one_body_hamiltonian_matrix(&orb, &q);
            // symmetrized product states |ij⟩_S for i ≤ j
            let sym = |i: usize, j: usize, k: usize, l: usize| -> f64 {
                // ⟨kl| H |ij⟩ on unsymmetrized products
                let one = h1[(k, i)] * f64::from(l == j) + h1[(l, j)] * f64::from(k == i);
                one + g * contact_tensor(k, l, i, j, 1.0).unwrap()
            };
            let pair = |occ: &[u8]| -> (usize, usize) {
                let idx: Vec<usize> =
                    occ.iter().enumerate().flat_map(|(k, &n)| std::iter::repeat_n(k, n as usize)).collect();
                (idx[0], idx[1])
            };
            for (s, occ_s) in basis.iter().enumerate() {
                for (t, occ_t) in basis.iter().enumerate() {
                    let (i, j) = pair(occ_s);
                    let (k, l) = pair(occ_t);
                    let ns = if i == j { 0.5 } else { 1.0 / 2f64.sqrt() };
                    let nt = if k == l { 0.5 } else { 1.0 / 2f64.sqrt() };
                    let e = ns * nt * (sym(i, j, k, l) + sym(j, i, k, l) + sym(i, j, l, k) + sym(j, i, l, k));
                    assert_abs_diff_eq!(h[(t, s)], e, epsilon = 1e-12);
                }
            }
        }
    }
}

#[test]
fn single_particle_breathing_closed_form() {
    let q = QuenchSpec::new(1.0, 0.9f64.sqrt(), 0.0, 1).unwrap();
    let (basis, orb) = system(1, 16, &q);
    let h_pre = build_hamiltonian(basis.clone(), &orb, &q.unquenched()).unwrap();
    let (_, psi0) = ground_state(&h_pre).unwrap();
    let h_post = build_hamiltonian(basis, &orb, &q).unwrap();
    let grid = TimeGrid::periods(q.omega_post, 5.0, 32);
    let traj = propagate_quench(&psi0, &h_post, &grid, &PropagationOptions::default()).unwrap();
    let (w0, w) = (q.omega_pre, q.omega_post);
    for (k, x2) in traj.series.samples.iter().enumerate() {
        let t = grid.time(k);
        let expect = ((w * t).cos().powi(2) + (w0 * w0 / (w * w)) * (w * t).sin().powi(2)) / (2.0 * w0);
        assert_abs_diff_eq!(*x2, expect, epsilon = 1e-9);
    }
}

#[test]
fn null_quench_is_stationary() {
    let q = QuenchSpec::new(1.0, 1.0, 2.0, 3).unwrap();
    let (basis, orb) = system(3, 7, &q);
    let h = build_hamiltonian(basis, &orb, &q).unwrap();
    let (_, psi0) = ground_state(&h).unwrap();
    let grid = TimeGrid::periods(1.0, 3.0, 32);
    let traj = propagate_quench(&psi0, &h, &grid, &PropagationOptions::default()).unwrap();
    let x0 = traj.series.samples[0];
    for x in &traj.series.samples {
        assert_abs_diff_eq!(*x, x0, epsilon = 1e-10);
    }
}

#[test]
fn ideal_pair_breathes_at_twice_the_trap_frequency() {
    let q = QuenchSpec::standard(0.0, 2);
    let run = run_ed_quench(&q, &EdSettings { n_orbitals: 8, periods: 50.0, ..EdSettings::default() }).unwrap();
    let fit = fit_sine(&run.trajectory.series).unwrap();
    assert_abs_diff_eq!(fit.frequency / q.omega_post, 2.0, epsilon = 1e-6);
}

#[test]
fn conservation_and_parity_dense_and_krylov() {
    let q = QuenchSpec::standard(1.5, 3);
    let (basis, orb) = system(3, 8, &q);
    let table = ContactTable::new(&orb);
    let h_pre = build_hamiltonian_with_table(basis.clone(), &orb, &q.unquenched(), &table).unwrap();
    let (_, psi0) = ground_state(&h_pre).unwrap();
    let h_post = build_hamiltonian_with_table(basis, &orb, &q, &table).unwrap();
    let grid = TimeGrid::periods(q.omega_post, 4.0, 32);
    let dense = propagate_quench(
        &psi0,
        &h_post,
        &grid,
        &PropagationOptions { kind: PropagatorKind::Dense, ..Default::default() },
    )
    .unwrap();
    let krylov = propagate_quench(
        &psi0,
        &h_post,
        &grid,
        &PropagationOptions { kind: PropagatorKind::Krylov, ..Default::default() },
    )
    .unwrap();
    for traj in [&dense, &krylov] {
        assert!(traj.max_norm_drift < 1e-10, "norm drift {}", traj.max_norm_drift);
        assert!(traj.max_energy_drift < 1e-9, "energy drift {}", traj.max_energy_drift);
        assert!(traj.dipole.iter().all(|x| x.abs() < 1e-10));
    }
    for (a, b) in dense.series.samples.iter().zip(&krylov.series.samples) {
        assert_abs_diff_eq!(a, b, epsilon = 1e-8);
    }
}

#[test]
fn states_and_streamed_observables_agree() {
    let q = QuenchSpec::standard(0.8, 2);
    let (basis, orb) = system(2, 6, &q);
    let h_pre = build_hamiltonian(basis.clone(), &orb, &q.unquenched()).unwrap();
    let (_, psi0) = ground_state(&h_pre).unwrap();
    let h_post = build_hamiltonian(basis, &orb, &q).unwrap();
    let grid = TimeGrid { t0: 0.0, dt: 0.37, count: 70 };
    let traj = propagate_quench(&psi0, &h_post, &grid, &PropagationOptions::default()).unwrap();
    let states = propagate_states(&psi0, &h_post, &grid, &PropagationOptions::default()).unwrap();
    let ops = PositionOperators::new(&h_post).unwrap();
    for (k, s) in states.iter().enumerate() {
        assert_abs_diff_eq!(s.norm(), 1.0, epsilon = 1e-10);
        // density route and direct second-quantized operator route
        let via_density = x2_expectation(s, &orb);
        assert_abs_diff_eq!(via_density, s.expectation(&ops.x2), epsilon = 1e-12);
        assert_abs_diff_eq!(via_density, traj.series.samples[k], epsilon = 1e-10);
    }
}

#[test]
fn densities_of_fock_states() {
    let basis = Arc::new(FockBasis::new(2, 2).unwrap());
    let rho = one_body_density(&ManyBodyState::fock(basis.clone(), &[2, 0]).unwrap());
    assert_abs_diff_eq!(rho.matrix[(0, 0)].re, 1.0, epsilon = 1e-15);
    assert_abs_diff_eq!(rho.matrix[(1, 1)].re, 0.0, epsilon = 1e-15);
    let rho = one_body_density(&ManyBodyState::fock(basis, &[1, 1]).unwrap());
    assert_abs_diff_eq!(rho.matrix[(0, 0)].re, 0.5, epsilon = 1e-15);
    assert_abs_diff_eq!(rho.matrix[(1, 1)].re, 0.5, epsilon = 1e-15);
    assert_abs_diff_eq!(rho.matrix[(0, 1)].norm(), 0.0, epsilon = 1e-15);
}

#[test]
fn variational_in_orbital_number() {
    let q = QuenchSpec::new(1.0, 1.0, 2.0, 3).unwrap();
    let mut prev = f64::INFINITY;
    for m in 2..=9 {
        let e = ed_ground_energy(&q, m).unwrap();
        assert!(e <= prev + 1e-12, "M = {m}: {e} > {prev}");
        prev = e;
    }
}

#[test]
fn pair_ground_energy_approaches_relation_from_above() {
    let g = 2.0;
    let analytic = 0.5 + even_level_energy(relative_coupling(g), 0).unwrap();
    let q = QuenchSpec::new(1.0, 1.0, g, 2).unwrap();
    let energies: Vec<f64> = [6, 10, 14, 18].iter().map(|&m| ed_ground_energy(&q, m).unwrap()).collect();
    for w in energies.windows(2) {
        assert!(w[1] < w[0]);
    }
    assert!(energies.iter().all(|e| *e > analytic));
    assert!(energies[3] - analytic < 0.05);
}

#[test]
fn relation_report_on_the_two_body_oracle() {
    let report = validate_busch_relation(&[0.5, 2.0], &[6, 10, 14, 18]).unwrap();
    for row in &report.rows {
        assert!(row.largest() > row.analytic);
        assert!(row.envelope > 0.0);
    }
    assert!(validate_busch_relation(&[1.0], &[6, 10]).is_err());
}

#[test]
fn cm_mixing_rejects_other_particle_numbers() {
    let q = QuenchSpec::standard(1.0, 3);
    assert!(cm_mixing_diagnostic(&q, &[4], &EdSettings::default(), None).is_err());
}

#[test]
fn uncoupled_cm_line_sits_at_two() {
    let q = QuenchSpec::standard(0.0, 2);
    let report =
        cm_mixing_diagnostic(&q, &[6, 11], &EdSettings { periods: 100.0, ..EdSettings::default() }, None).unwrap();
    for row in &report.rows {
        assert!(row.drift.unwrap().abs() < 1e-4, "{row:?}");
    }
    assert!(report.pass);
}

#[test]
fn cap_error_names_reduction() {
    let q = QuenchSpec::standard(1.0, 6);
    let err =
        run_ed_quench(&q, &EdSettings { n_orbitals: 30, basis_cap: 10_000, ..EdSettings::default() }).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("reduce to M <="), "{msg}");
}

#[test]
fn x2_matches_dense_trace() {
    let q = QuenchSpec::new(1.0, 1.0, 1.0, 3).unwrap();
    let (basis, orb) = system(3, 5, &q);
    let h = build_hamiltonian(basis, &orb, &q).unwrap();
    let (_, psi) = ground_state(&h).unwrap();
    let rho = one_body_density(&psi);
    let x2 = x2_matrix(5, 1.0);
    let tr: f64 =
        (0..5).flat_map(|i| (0..5).map(move |j| (i, j))).map(|(i, j)| x2[(i, j)] * rho.matrix[(j, i)].re).sum();
    assert_abs_diff_eq!(3.0 * tr, x2_expectation(&psi, &orb), epsilon = 1e-14);
    assert_abs_diff_eq!(x_expectation(&psi, &orb), 0.0, epsilon = 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_states_give_valid_densities(
        n in 1usize..4,
        m in 1usize..5,
        seed in proptest::collection::vec(-1.0f64..1.0, 70),
    ) {
        let basis = Arc::new(FockBasis::new(n, m).unwrap());
        let d = basis.len();
        let coeffs = DVector::from_fn(d, |i, _| C64::new(seed[i % 35], seed[35 + (i * 3) % 35]));
        prop_assume!(coeffs.norm() > 1e-3);
        let mut psi = ManyBodyState::new(basis, coeffs).unwrap();
        psi.normalize();
        let rho = one_body_density(&psi);
        prop_assert!((rho.trace() - 1.0).abs() < 1e-10);
        prop_assert!(rho.hermiticity_error() < 1e-12);
        prop_assert!(rho.occupations()[0] >= -1e-12);
    }

    #[test]
    fn hamiltonian_is_exactly_symmetric(n in 1usize..4, m in 1usize..6, g in 0.0f64..5.0, w in 0.3f64..1.5) {
        let q = QuenchSpec::new(1.0, w, g, n).unwrap();
        let (basis, orb) = system(n, m, &q);
        let h = build_hamiltonian(basis, &orb, &q).unwrap().to_dense();
        prop_assert_eq!(h.clone() - h.transpose(), DMatrix::zeros(h.nrows(), h.ncols()));
    }
}
