mod common;

use kagome_vqe::ansatz::{Scheme, Sector};
use kagome_vqe::exactdiag::{build_hamiltonian, lanczos_lowest, LanczosOptions, SparseHamiltonian, TermSubset};
use kagome_vqe::lattice::{build_patch, KagomePatch};
use kagome_vqe::observables::{
    dimer_dimer, dimer_dimer_from_shots, estimate_energy, q_axis, spin_gap_exact, spin_gap_vqe, structure_factor,
    ZONE_CORNER,
};
use kagome_vqe::statevec::StateVector;
use kagome_vqe::vqe::{Problem, Reference};
use num_complex::Complex64;

use common::*;

#[test]
fn spin_gap_exact_matches_dense_blocks() {
    for name in ["edge", "triangle", "2x4", "2x5"] {
        let patch = build_patch(name).unwrap();
        let n = patch.n_sites();
        let gap = spin_gap_exact(&patch, 3).unwrap();
        // lowest level with popcount (n + s) / 2 for total Pauli S^z = s
        let lowest = |s: usize| block_lowest(n, &patch.edges, (n + s) / 2);
        let (lo, hi) = if n % 2 == 0 { (0, 2) } else { (1, 3) };
        let expect = lowest(hi) - lowest(lo);
        assert!(
            (gap.gap_pauli - expect).abs() < 1e-9,
            "{name}: {} vs {expect}",
            gap.gap_pauli
        );
        assert!((gap.gap_spin - expect / 4.0).abs() < 1e-9);
    }
}

fn block_lowest(n: usize, edges: &[(usize, usize)], ones: usize) -> f64 {
    block_spectrum_in(n, edges, ones)[0]
}

/// Dense spectrum of the block with `ones` up spins, built by brute force.
fn block_spectrum_in(n: usize, edges: &[(usize, usize)], ones: usize) -> Vec<f64> {
    let states: Vec<usize> = (0..1usize << n).filter(|s| s.count_ones() as usize == ones).collect();
    let dim = states.len();
    let mut m = nalgebra::DMatrix::<f64>::zeros(dim, dim);
    for (col, &s) in states.iter().enumerate() {
        for &(a, b) in edges {
            if ((s >> a) ^ (s >> b)) & 1 == 0 {
                m[(col, col)] += 1.0;
            } else {
                m[(col, col)] -= 1.0;
                let t = s ^ (1 << a) ^ (1 << b);
                let row = states.binary_search(&t).unwrap();
                m[(row, col)] += 2.0;
            }
        }
    }
    let mut e: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

/// Patches must be connected, so the decoupled pair goes straight to the
/// Hamiltonian.
#[test]
fn disjoint_edges_have_the_single_edge_gap() {
    let one = KagomePatch::new("one", &[(0.0, 0.0), (1.0, 0.0)], &[(0, 1)]).unwrap();
    let g1 = spin_gap_exact(&one, 1).unwrap();
    assert!((g1.gap_pauli - 4.0).abs() < 1e-10);
    let two = SparseHamiltonian::new(4, vec![(0, 1), (2, 3)]).unwrap();
    let low = |sz: i64| {
        lanczos_lowest(&two, &LanczosOptions::new(1, 1).sector(sz))
            .unwrap()
            .eigenvalues[0]
    };
    assert!((low(0) + 6.0).abs() < 1e-10);
    assert!((low(2) - low(0) - g1.gap_pauli).abs() < 1e-10);
}

#[test]
fn vqe_gap_agrees_with_exact_on_2x4() {
    let patch = build_patch("2x4").unwrap();
    let exact = spin_gap_exact(&patch, 5).unwrap();
    let vqe = spin_gap_vqe(&patch, Scheme::PerEdge, 5, 3, 5, 0.999).unwrap();
    assert!(vqe.converged);
    assert!(
        (vqe.gap_pauli - exact.gap_pauli).abs() < 1e-6,
        "{} vs {}",
        vqe.gap_pauli,
        exact.gap_pauli
    );
}

#[test]
fn lanczos_matches_block_spectrum_in_every_sector() {
    let patch = build_patch("2x4").unwrap();
    let h = build_hamiltonian(&patch, &TermSubset::All).unwrap();
    for sz in [0i64, 2, 4, 6] {
        let ones = (8 + sz as usize) / 2;
        let want = block_spectrum_in(8, &patch.edges, ones);
        let k = want.len().min(3);
        let got = lanczos_lowest(&h, &LanczosOptions::new(k, 9).sector(sz)).unwrap();
        for (g, w) in got.eigenvalues.iter().zip(&want) {
            assert!((g - w).abs() < 1e-10, "sz {sz}: {g} vs {w}");
        }
    }
}

#[test]
fn shot_energy_error_shrinks_as_inverse_root_shots() {
    let patch = build_patch("2x4").unwrap();
    let reference = Reference::compute(&patch, Sector::Sz0, 1).unwrap();
    let psi = &reference.states[0];
    let shots = [1000usize, 4000, 16000, 64000];
    let errors: Vec<f64> = shots
        .iter()
        .map(|&s| estimate_energy(psi, &patch, s, 4, None).unwrap().0.std_error)
        .collect();
    let (slope, _, r2) = linear_fit(
        &shots.iter().map(|&s| (s as f64).ln()).collect::<Vec<_>>(),
        &errors.iter().map(|e| e.ln()).collect::<Vec<_>>(),
    );
    assert!((slope + 0.5).abs() < 0.05, "slope {slope}");
    assert!(r2 > 0.99);
}

#[test]
fn shot_energy_is_unbiased_on_a_random_state() {
    let patch = build_patch("triangle").unwrap();
    let mut r = rng(12);
    let amps = random_amplitudes(&mut r, 8);
    let psi = StateVector::from_amplitudes(amps.clone()).unwrap();
    let exact = heisenberg_energy(&amps, &patch.edges) / norm(&amps).powi(2);
    let (est, batches) = estimate_energy(&psi, &patch, 200_000, 2, None).unwrap();
    assert_eq!(batches.len(), 3);
    assert!(
        (est.value - exact).abs() < 5.0 * est.std_error,
        "{} +- {} vs {exact}",
        est.value,
        est.std_error
    );
}

#[test]
fn dimer_protocol_tracks_exact_correlator() {
    let mut r = rng(31);
    let psi = StateVector::from_amplitudes(random_amplitudes(&mut r, 16)).unwrap();
    let (a, b) = ((0, 1), (2, 3));
    let exact = dimer_dimer(&psi, a, b).unwrap();
    let est = dimer_dimer_from_shots(&psi, a, b, 200_000, 8).unwrap();
    assert!(
        (est.value - exact).abs() < 5.0 * est.std_error,
        "{} +- {} vs {exact}",
        est.value,
        est.std_error
    );
}

/// Products of single-axis moments miss the cross terms of `(S_a.S_b)^2`,
/// so a naive reconstruction cannot replace the protocol.
#[test]
fn naive_axis_reconstruction_disagrees_on_entangled_state() {
    let mut r = rng(41);
    let raw = random_amplitudes(&mut r, 16);
    let scale = 1.0 / norm(&raw);
    let amps: Vec<Complex64> = raw.iter().map(|a| a * scale).collect();
    let psi = StateVector::from_amplitudes(amps.clone()).unwrap();
    let exact = dimer_dimer(&psi, (0, 1), (2, 3)).unwrap();
    let mut naive = 0.0;
    let n = 4;
    let ea = heisenberg_energy(&amps, &[(0, 1)]);
    let eb = heisenberg_energy(&amps, &[(2, 3)]);
    for apply in [total_x_pair, total_y_pair, total_z_pair] {
        // <P0 P1 P2 P3> for each single axis
        let v = apply(&amps, n);
        naive += amps.iter().zip(&v).map(|(a, b)| (a.conj() * b).re).sum::<f64>();
    }
    naive -= ea * eb;
    assert!((exact - naive).abs() > 0.5, "exact {exact} naive {naive}");
}

fn parity_apply(amps: &[Complex64], flip: bool, phase: impl Fn(usize) -> Complex64) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); amps.len()];
    for (s, a) in amps.iter().enumerate() {
        let t = if flip { s ^ 0b1111 } else { s };
        out[t] += a * phase(s);
    }
    out
}

fn total_x_pair(amps: &[Complex64], _n: usize) -> Vec<Complex64> {
    parity_apply(amps, true, |_| Complex64::new(1.0, 0.0))
}

fn total_y_pair(amps: &[Complex64], _n: usize) -> Vec<Complex64> {
    // Y|0> = i|1>, Y|1> = -i|0>; four factors
    parity_apply(amps, true, |s| {
        let ones = (s & 0b1111).count_ones() as i32;
        let zeros = 4 - ones;
        Complex64::new(0.0, 1.0).powi(zeros) * Complex64::new(0.0, -1.0).powi(ones)
    })
}

fn total_z_pair(amps: &[Complex64], _n: usize) -> Vec<Complex64> {
    parity_apply(amps, false, |s| {
        if (s & 0b1111).count_ones() % 2 == 0 {
            1.0.into()
        } else {
            (-1.0).into()
        }
    })
}

#[test]
fn structure_factor_is_non_negative_on_random_states() {
    let patch = build_patch("2x4").unwrap();
    let axis = q_axis(13, 1.2 * ZONE_CORNER);
    let mut r = rng(77);
    for _ in 0..50 {
        let psi = StateVector::from_amplitudes(random_amplitudes(&mut r, 256)).unwrap();
        let sf = structure_factor(&psi, &patch, &axis, &axis).unwrap();
        assert!(sf.min() > -1e-12, "{}", sf.min());
    }
}

#[test]
fn structure_factor_at_origin_is_total_sz_squared() {
    let patch = build_patch("2x4").unwrap();
    let mut r = rng(5);
    let amps = random_amplitudes(&mut r, 256);
    let psi = StateVector::from_amplitudes(amps.clone()).unwrap();
    let sf = structure_factor(&psi, &patch, &[0.0], &[0.0]).unwrap();
    let z = total_z(&amps, 8);
    let want = norm(&z).powi(2) / norm(&amps).powi(2) / 8.0;
    assert!((sf.values[0][0] - want).abs() < 1e-10, "{} vs {want}", sf.values[0][0]);
}

#[test]
fn optimal_state_energy_matches_problem_energy() {
    let patch = build_patch("2x4").unwrap();
    let problem = Problem::new(&patch, Scheme::PerEdge, 2, Sector::Sz0, Default::default()).unwrap();
    let mut r = rng(3);
    let theta = uniform(&mut r, problem.spec.n_params(), -1.0, 1.0);
    let psi = problem.state(&theta).unwrap();
    let direct = heisenberg_energy(psi.amplitudes(), &patch.edges);
    assert!((problem.energy(&theta).unwrap() - direct).abs() < 1e-10);
}
