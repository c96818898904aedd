//! Correlation functions, structure factor, spin gap and shot estimators.
//!
//! Everything is computed in Pauli units; the spin-1/2 value of a two-spin
//! operator is a quarter of the Pauli value.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{Scheme, Sector};
use crate::error::{Error, Result};
use crate::exactdiag::{build_hamiltonian, lanczos_lowest, LanczosOptions, TermSubset};
use crate::lattice::KagomePatch;
use crate::statevec::{dot as cdot, Axis, ShotBatch, StateVector};
use crate::vqe::{run_vqe, VqeConfig};

/// Unit system of a reported value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    Pauli,
    /// Spin-1/2 operators, eigenvalues `+-1/2`.
    Spin,
}

impl Units {
    /// Factor converting a two-spin Pauli-unit quantity.
    pub fn pair_factor(self) -> f64 {
        match self {
            Units::Pauli => 1.0,
            Units::Spin => 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairCorrelation {
    pub i: usize,
    pub j: usize,
    /// Signed `<sigma^z_i sigma^z_j>`.
    pub value: f64,
}

impl PairCorrelation {
    /// `C_S(i, j) = |<S^z_i S^z_j>|` in the given units.
    pub fn magnitude(&self, units: Units) -> f64 {
        self.value.abs() * units.pair_factor()
    }
}

pub fn spin_spin(state: &StateVector, pairs: &[(usize, usize)]) -> Result<Vec<PairCorrelation>> {
    pairs
        .iter()
        .map(|&(i, j)| {
            Ok(PairCorrelation {
                i,
                j,
                value: state.zz_correlation(i, j)?,
            })
        })
        .collect()
}

/// Correlations from the first site of `path` to every site along it.
pub fn path_correlations(state: &StateVector, path: &[usize]) -> Result<Vec<PairCorrelation>> {
    let Some(&first) = path.first() else {
        return Ok(Vec::new());
    };
    let pairs: Vec<_> = path.iter().map(|&j| (first, j)).collect();
    spin_spin(state, &pairs)
}

/// Spin-spin correlations estimated from Z-basis shots.
pub fn spin_spin_from_shots(batch: &ShotBatch, pairs: &[(usize, usize)]) -> Result<Vec<PairCorrelation>> {
    if batch.basis != Axis::Z {
        return Err(Error::Estimation("spin-spin correlations need a Z-basis batch".into()));
    }
    if batch.kept == 0 {
        return Err(Error::Estimation("no shots kept".into()));
    }
    Ok(pairs
        .iter()
        .map(|&(i, j)| {
            let sum: i64 = batch.shots.iter().map(|&s| batch.spin(s, i) * batch.spin(s, j)).sum();
            PairCorrelation {
                i,
                j,
                value: sum as f64 / batch.kept as f64,
            }
        })
        .collect())
}

fn check_disjoint(a: (usize, usize), b: (usize, usize)) -> Result<()> {
    if a.0 == b.0 || a.0 == b.1 || a.1 == b.0 || a.1 == b.1 {
        return Err(Error::SharedSite(a.0, a.1, b.0, b.1));
    }
    Ok(())
}

/// Connected dimer-dimer correlator
/// `<(S_i.S_j)(S_k.S_l)> - <S_i.S_j><S_k.S_l>` for two disjoint bonds.
pub fn dimer_dimer(state: &StateVector, a: (usize, usize), b: (usize, usize)) -> Result<f64> {
    check_disjoint(a, b)?;
    let ga = state.pair_generator_applied(a.0, a.1)?;
    let gb = state.pair_generator_applied(b.0, b.1)?;
    let joint = cdot(&ga, &gb).re;
    let ea = state.heisenberg_expectation(a.0, a.1)?;
    let eb = state.heisenberg_expectation(b.0, b.1)?;
    Ok(joint - ea * eb)
}

/// Sample estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

/// Per-shot values of `S_i.S_j` on each bond, measured by undoing the
/// singlet preparation on the bond and reading both qubits: `|down down>`
/// means `-3`, anything else `+1`.
pub fn dimer_protocol_samples(
    state: &StateVector,
    bonds: &[(usize, usize)],
    shots: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    for (x, &a) in bonds.iter().enumerate() {
        for &b in &bonds[x + 1..] {
            check_disjoint(a, b)?;
        }
    }
    let mut rotated = state.clone();
    for &(i, j) in bonds {
        rotated.apply_singlet_unprep(i, j)?;
    }
    let batch = rotated.sample(Axis::Z, shots, seed, None);
    Ok(batch
        .shots
        .iter()
        .map(|&s| {
            bonds
                .iter()
                .map(|&(i, j)| {
                    if (s >> i) & 1 == 0 && (s >> j) & 1 == 0 {
                        -3.0
                    } else {
                        1.0
                    }
                })
                .collect()
        })
        .collect())
}

/// Dimer-dimer correlator from the measurement protocol.
pub fn dimer_dimer_from_shots(
    state: &StateVector,
    a: (usize, usize),
    b: (usize, usize),
    shots: usize,
    seed: u64,
) -> Result<Estimate> {
    let samples = dimer_protocol_samples(state, &[a, b], shots, seed)?;
    let n = samples.len() as f64;
    let ma = samples.iter().map(|s| s[0]).sum::<f64>() / n;
    let mb = samples.iter().map(|s| s[1]).sum::<f64>() / n;
    let terms: Vec<f64> = samples.iter().map(|s| (s[0] - ma) * (s[1] - mb)).collect();
    let value = terms.iter().sum::<f64>() / n;
    let var = terms.iter().map(|t| (t - value).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(Estimate {
        value,
        std_error: (var / n).sqrt(),
    })
}

/// `S^z(q)` on a rectangular grid; `values[iy][ix]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureFactor {
    pub qx: Vec<f64>,
    pub qy: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl StructureFactor {
    pub fn max(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .flatten()
            .zip(other.values.iter().flatten())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Brillouin-zone corner distance for unit nearest-neighbour spacing.
pub const ZONE_CORNER: f64 = 2.0 * PI / 3.0;

/// Evenly spaced axis from `-extent` to `extent`.
pub fn q_axis(points: usize, extent: f64) -> Vec<f64> {
    if points == 1 {
        return vec![0.0];
    }
    (0..points)
        .map(|i| -extent + 2.0 * extent * i as f64 / (points - 1) as f64)
        .collect()
}

/// 81 x 81 points spanning 1.2 times the first zone along both axes.
pub fn default_q_grid() -> (Vec<f64>, Vec<f64>) {
    let axis = q_axis(81, 1.2 * ZONE_CORNER);
    (axis.clone(), axis)
}

/// All `<sigma^z_i sigma^z_j>`.
pub fn zz_matrix(state: &StateVector) -> Result<Vec<Vec<f64>>> {
    let n = state.n_qubits();
    let mut m = vec![vec![1.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = state.zz_correlation(i, j)?;
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    Ok(m)
}

/// `S^z(q) = (1/N) sum_{ij} e^{i q.(r_i - r_j)} <sigma^z_i sigma^z_j>`.
pub fn structure_factor_from_matrix(zz: &[Vec<f64>], patch: &KagomePatch, qx: &[f64], qy: &[f64]) -> StructureFactor {
    let n = patch.n_sites();
    let values = qy
        .par_iter()
        .map(|&ky| {
            qx.iter()
                .map(|&kx| {
                    let mut acc = 0.0;
                    for i in 0..n {
                        for j in 0..n {
                            let dx = patch.sites[i].x - patch.sites[j].x;
                            let dy = patch.sites[i].y - patch.sites[j].y;
                            acc += (kx * dx + ky * dy).cos() * zz[i][j];
                        }
                    }
                    acc / n as f64
                })
                .collect()
        })
        .collect();
    StructureFactor {
        qx: qx.to_vec(),
        qy: qy.to_vec(),
        values,
    }
}

pub fn structure_factor(state: &StateVector, patch: &KagomePatch, qx: &[f64], qy: &[f64]) -> Result<StructureFactor> {
    if state.n_qubits() != patch.n_sites() {
        return Err(Error::DimensionMismatch(state.dim(), 1 << patch.n_sites()));
    }
    Ok(structure_factor_from_matrix(&zz_matrix(state)?, patch, qx, qy))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapMethod {
    Exact,
    Vqe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinGap {
    pub method: GapMethod,
    /// Ground energy of the lower sector (`S^z = 0`, or `|S^z| = 1` for odd N).
    pub e_low: f64,
    /// Ground energy of the next sector up.
    pub e_high: f64,
    pub gap_pauli: f64,
    pub gap_spin: f64,
    /// Diagnostics per sector: Lanczos residual or VQE infidelity.
    pub residuals: [f64; 2],
    pub converged: bool,
}

impl SpinGap {
    fn new(method: GapMethod, e_low: f64, e_high: f64, residuals: [f64; 2], converged: bool) -> Self {
        let gap = e_high - e_low;
        Self {
            method,
            e_low,
            e_high,
            gap_pauli: gap,
            gap_spin: gap * Units::Spin.pair_factor(),
            residuals,
            converged,
        }
    }
}

/// Sector pair of the gap: `(0, 2)` for even N, `(1, 3)` for odd N, Pauli units.
fn gap_sectors(n: usize) -> (i64, i64) {
    if n % 2 == 0 {
        (0, 2)
    } else {
        (1, 3)
    }
}

pub fn spin_gap_exact(patch: &KagomePatch, seed: u64) -> Result<SpinGap> {
    let h = build_hamiltonian(patch, &TermSubset::All)?;
    let (lo, hi) = gap_sectors(patch.n_sites());
    let a = lanczos_lowest(&h, &LanczosOptions::new(1, seed).sector(lo))?;
    let b = lanczos_lowest(&h, &LanczosOptions::new(1, seed).sector(hi))?;
    Ok(SpinGap::new(
        GapMethod::Exact,
        a.eigenvalues[0],
        b.eigenvalues[0],
        [a.residuals[0], b.residuals[0]],
        true,
    ))
}

/// Gap from two VQE runs started in adjacent sectors. Non-converged runs are
/// flagged but still reported.
pub fn spin_gap_vqe(
    patch: &KagomePatch,
    scheme: Scheme,
    p: usize,
    restarts: usize,
    seed: u64,
    fidelity_target: f64,
) -> Result<SpinGap> {
    let low = if patch.n_sites() % 2 == 0 {
        Sector::Sz0
    } else {
        Sector::OddDefault
    };
    let mut energies = [0.0; 2];
    let mut infidelities = [0.0; 2];
    for (slot, sector) in [low, Sector::SzPlus].into_iter().enumerate() {
        let mut cfg = VqeConfig::new(&patch.name, scheme, p, seed).restarts(restarts);
        cfg.sector = Some(sector);
        let out = run_vqe(&cfg)?;
        energies[slot] = out.best().e_final;
        infidelities[slot] = out.best().infidelity;
    }
    let converged = infidelities.iter().all(|&f| f <= 1.0 - fidelity_target);
    Ok(SpinGap::new(
        GapMethod::Vqe,
        energies[0],
        energies[1],
        infidelities,
        converged,
    ))
}

/// Energy estimate from one batch per basis. Each batch contributes
/// `sum_bonds s_i s_j` per shot; the standard error propagates the per-shot
/// variance of that sum, which includes correlations between bonds.
pub fn estimate_energy_from_shots(batches: &[ShotBatch], bonds: &[(usize, usize)]) -> Result<Estimate> {
    let mut seen = Vec::new();
    let mut value = 0.0;
    let mut variance = 0.0;
    for batch in batches {
        if seen.contains(&batch.basis) {
            return Err(Error::Estimation(format!("two batches in basis {}", batch.basis)));
        }
        seen.push(batch.basis);
        if batch.kept == 0 {
            return Err(Error::Estimation(format!(
                "all {} shots in basis {} were discarded",
                batch.total(),
                batch.basis
            )));
        }
        let per_shot: Vec<f64> = batch
            .shots
            .iter()
            .map(|&s| {
                bonds
                    .iter()
                    .map(|&(i, j)| (batch.spin(s, i) * batch.spin(s, j)) as f64)
                    .sum()
            })
            .collect();
        let n = per_shot.len() as f64;
        let mean = per_shot.iter().sum::<f64>() / n;
        let var = if per_shot.len() > 1 {
            per_shot.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        value += mean;
        variance += var / n;
    }
    if seen.len() != 3 {
        return Err(Error::Estimation("need one batch per basis X, Y, Z".into()));
    }
    Ok(Estimate {
        value,
        std_error: variance.sqrt(),
    })
}

/// Sample all three bases and estimate `<H>`. With `post_select`, shots
/// outside the symmetry sector of `sector` are dropped: all three axes for
/// the singlet sector, `S^z` only otherwise.
pub fn estimate_energy(
    state: &StateVector,
    patch: &KagomePatch,
    shots: usize,
    seed: u64,
    post_select: Option<Sector>,
) -> Result<(Estimate, Vec<ShotBatch>)> {
    let n = patch.n_sites();
    let batches: Vec<ShotBatch> = Axis::ALL
        .iter()
        .enumerate()
        .map(|(b, &axis)| {
            let target = post_select.and_then(|s| match (s.is_singlet_sector(), axis) {
                (true, _) => Some(0),
                (false, Axis::Z) => Some(s.sz(n)),
                _ => None,
            });
            state.sample(axis, shots, seed.wrapping_add(b as u64), target)
        })
        .collect();
    let est = estimate_energy_from_shots(&batches, &patch.edges)?;
    Ok((est, batches))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::initial_state;
    use crate::lattice::build_patch;

    fn singlet() -> StateVector {
        let mut s = StateVector::basis(2, 0).unwrap();
        s.apply_singlet_prep(0, 1).unwrap();
        s
    }

    #[test]
    fn pair_correlations() {
        let c = spin_spin(&singlet(), &[(0, 1)]).unwrap();
        assert!((c[0].value + 1.0).abs() < 1e-15);
        assert!((c[0].magnitude(Units::Pauli) - 1.0).abs() < 1e-15);
        assert!((c[0].magnitude(Units::Spin) - 0.25).abs() < 1e-15);
        let down = StateVector::basis(2, 0).unwrap();
        assert_eq!(spin_spin(&down, &[(0, 1)]).unwrap()[0].value, 1.0);
    }

    #[test]
    fn dimer_product_has_no_connected_correlation() {
        let patch = build_patch("2x4").unwrap();
        let s = initial_state(&patch, Sector::Sz0).unwrap();
        let dimers = crate::lattice::dimer_covering(&patch).unwrap().dimers;
        let c = dimer_dimer(&s, dimers[0], dimers[1]).unwrap();
        assert!(c.abs() < 1e-12);
        assert!(matches!(dimer_dimer(&s, (0, 1), (1, 2)), Err(Error::SharedSite(..))));
    }

    #[test]
    fn dimer_protocol_on_singlet() {
        let samples = dimer_protocol_samples(&singlet(), &[(0, 1)], 1000, 3).unwrap();
        assert!(samples.iter().all(|s| s[0] == -3.0));
    }

    #[test]
    fn structure_factor_at_origin() {
        let patch = build_patch("2x4").unwrap();
        let s = initial_state(&patch, Sector::Sz0).unwrap();
        let sf = structure_factor(&s, &patch, &[0.0], &[0.0]).unwrap();
        assert!(sf.values[0][0].abs() < 1e-12);
        let down = StateVector::basis(8, 0).unwrap();
        let sf = structure_factor(&down, &patch, &[0.0], &[0.0]).unwrap();
        assert!((sf.values[0][0] - 8.0).abs() < 1e-12);
    }

    #[test]
    fn default_grid_shape() {
        let (qx, qy) = default_q_grid();
        assert_eq!(qx.len(), 81);
        assert_eq!(qy.len(), 81);
        assert!((qx[40]).abs() < 1e-15);
        assert!((qx[80] - 1.2 * ZONE_CORNER).abs() < 1e-12);
    }

    #[test]
    fn single_edge_gap() {
        let patch = build_patch("edge").unwrap();
        let gap = spin_gap_exact(&patch, 0).unwrap();
        assert!((gap.gap_pauli - 4.0).abs() < 1e-10);
        assert!((gap.gap_spin - 1.0).abs() < 1e-10);
    }

    #[test]
    fn shot_estimator_on_product_state() {
        let patch = build_patch("edge").unwrap();
        let down = StateVector::basis(2, 0).unwrap();
        let z = down.sample(Axis::Z, 100, 1, None);
        let est = estimate_energy_from_shots(std::slice::from_ref(&z), &patch.edges);
        assert!(matches!(est, Err(Error::Estimation(_))));
        let batches: Vec<_> = Axis::ALL.iter().map(|&a| down.sample(a, 2000, 5, None)).collect();
        let zz: f64 = batches[2]
            .shots
            .iter()
            .map(|&s| (batches[2].spin(s, 0) * batches[2].spin(s, 1)) as f64)
            .sum();
        assert_eq!(zz, 2000.0);
        let est = estimate_energy_from_shots(&batches, &patch.edges).unwrap();
        assert!((est.value - 1.0).abs() < 5.0 * est.std_error.max(1e-12));
    }

    #[test]
    fn all_discarded_is_an_error() {
        let patch = build_patch("edge").unwrap();
        let up = StateVector::basis(2, 3).unwrap();
        assert!(matches!(
            estimate_energy(&up, &patch, 50, 0, Some(Sector::Sz0)),
            Err(Error::Estimation(_))
        ));
    }

    #[test]
    fn post_selection_keeps_everything_on_singlet_states() {
        let patch = build_patch("2x4").unwrap();
        let s = initial_state(&patch, Sector::Sz0).unwrap();
        let (_, batches) = estimate_energy(&s, &patch, 5000, 1, Some(Sector::Sz0)).unwrap();
        assert!(batches.iter().all(|b| b.discarded == 0 && b.kept == 5000));
    }
}
