//! Dense state vectors with the gates needed by the Heisenberg ansatz.
//!
//! Qubit 0 is the least significant bit of the amplitude index and bit value
//! 1 is spin up. Physical spin components in Pauli units are
//! `sigma^x = X`, `sigma^y = -Y`, `sigma^z = -Z` in terms of the computational
//! Paulis (with `Z|0> = |0>`), so `|up up>` has total `S^z = +2`. The
//! Heisenberg coupling is unchanged by this relabelling.

use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard limit on the register size; a 24-qubit state takes 256 MiB.
pub const MAX_QUBITS: usize = 24;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const FRAC_1_SQRT2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Spin axis in the physical frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Axis::X => "X",
            Axis::Y => "Y",
            Axis::Z => "Z",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

#[inline]
fn insert_zero(x: usize, pos: usize) -> usize {
    ((x >> pos) << (pos + 1)) | (x & ((1 << pos) - 1))
}

/// Calls `f(i00, i_k, i_l, i_kl)` for every group of four indices that
/// differ only in qubits `k` and `l`.
#[inline]
fn for_each_pair_block(n: usize, k: usize, l: usize, mut f: impl FnMut(usize, usize, usize, usize)) {
    let (lo, hi) = (k.min(l), k.max(l));
    let (bk, bl) = (1usize << k, 1usize << l);
    for i in 0..(1usize << (n - 2)) {
        let base = insert_zero(insert_zero(i, lo), hi);
        f(base, base | bk, base | bl, base | bk | bl);
    }
}

fn check_range(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::QubitRange { n, cap: MAX_QUBITS });
    }
    Ok(())
}

impl StateVector {
    /// Computational basis state `|index>`.
    pub fn basis(n: usize, index: usize) -> Result<Self> {
        check_range(n)?;
        if index >> n != 0 {
            return Err(Error::Bitstring(format!("index {index} needs more than {n} bits")));
        }
        let mut amps = vec![ZERO; 1 << n];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    /// Basis state from a label written most significant qubit first, so
    /// `"01"` on two qubits has qubit 0 up.
    pub fn from_bits(n: usize, bits: &str) -> Result<Self> {
        check_range(n)?;
        if bits.len() != n {
            return Err(Error::Bitstring(bits.to_string()));
        }
        let index = usize::from_str_radix(bits, 2).map_err(|_| Error::Bitstring(bits.to_string()))?;
        Self::basis(n, index)
    }

    /// Wrap raw amplitudes, normalising them.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if !len.is_power_of_two() {
            return Err(Error::DimensionMismatch(len, len.next_power_of_two()));
        }
        let n = len.trailing_zeros() as usize;
        check_range(n)?;
        let mut s = Self { n, amps };
        let norm = s.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Estimation("cannot normalise a zero vector".into()));
        }
        s.scale(1.0 / norm);
        Ok(s)
    }

    /// Unnormalised vector sharing the state kernels, e.g. an adjoint costate.
    pub(crate) fn from_raw(amps: Vec<Complex64>) -> Self {
        debug_assert!(amps.len().is_power_of_two());
        let n = amps.len().trailing_zeros() as usize;
        Self { n, amps }
    }

    /// Real amplitudes, normalised.
    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::from_amplitudes(values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// Mutable access for kernels outside this module; callers keep the norm.
    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        for a in &mut self.amps {
            *a *= factor;
        }
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n {
            return Err(Error::QubitIndex { index: q, n: self.n });
        }
        Ok(())
    }

    fn check_pair(&self, k: usize, l: usize) -> Result<()> {
        self.check_qubit(k)?;
        self.check_qubit(l)?;
        if k == l {
            return Err(Error::RepeatedQubit(k));
        }
        Ok(())
    }

    /// `exp(-i angle (X_k X_l + Y_k Y_l + Z_k Z_l))`.
    ///
    /// The generator is `2 SWAP - 1`, so the gate is
    /// `e^{i angle} (cos 2angle - i sin 2angle SWAP)`.
    pub fn apply_heisenberg(&mut self, k: usize, l: usize, angle: f64) -> Result<()> {
        self.check_pair(k, l)?;
        let outer = Complex64::from_polar(1.0, -angle);
        let inner = Complex64::from_polar(1.0, angle);
        let c = inner * (2.0 * angle).cos();
        let s = inner * Complex64::new(0.0, -(2.0 * angle).sin());
        let amps = &mut self.amps;
        for_each_pair_block(self.n, k, l, |i00, ik, il, i11| {
            amps[i00] *= outer;
            amps[i11] *= outer;
            let (a, b) = (amps[ik], amps[il]);
            amps[ik] = c * a + s * b;
            amps[il] = s * a + c * b;
        });
        Ok(())
    }

    pub fn apply_swap(&mut self, k: usize, l: usize) -> Result<()> {
        self.check_pair(k, l)?;
        let amps = &mut self.amps;
        for_each_pair_block(self.n, k, l, |_, ik, il, _| amps.swap(ik, il));
        Ok(())
    }

    fn apply_single(&mut self, q: usize, m: [[Complex64; 2]; 2]) -> Result<()> {
        self.check_qubit(q)?;
        let bit = 1usize << q;
        for i in 0..(self.amps.len() >> 1) {
            let i0 = insert_zero(i, q);
            let i1 = i0 | bit;
            let (a, b) = (self.amps[i0], self.amps[i1]);
            self.amps[i0] = m[0][0] * a + m[0][1] * b;
            self.amps[i1] = m[1][0] * a + m[1][1] * b;
        }
        Ok(())
    }

    pub fn apply_h(&mut self, q: usize) -> Result<()> {
        let h = Complex64::new(FRAC_1_SQRT2, 0.0);
        self.apply_single(q, [[h, h], [h, -h]])
    }

    pub fn apply_x(&mut self, q: usize) -> Result<()> {
        self.check_qubit(q)?;
        let bit = 1usize << q;
        for i in 0..(self.amps.len() >> 1) {
            let i0 = insert_zero(i, q);
            self.amps.swap(i0, i0 | bit);
        }
        Ok(())
    }

    /// Computational `Z`, i.e. `-1` on bit value 1.
    pub fn apply_z(&mut self, q: usize) -> Result<()> {
        self.check_qubit(q)?;
        let bit = 1usize << q;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & bit != 0 {
                *a = -*a;
            }
        }
        Ok(())
    }

    pub fn apply_sdg(&mut self, q: usize) -> Result<()> {
        self.check_qubit(q)?;
        let bit = 1usize << q;
        let mi = Complex64::new(0.0, -1.0);
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & bit != 0 {
                *a *= mi;
            }
        }
        Ok(())
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_pair(control, target)?;
        let amps = &mut self.amps;
        // swap |c=1,t=0> with |c=1,t=1>
        for_each_pair_block(self.n, control, target, |_, ic, _, i11| amps.swap(ic, i11));
        Ok(())
    }

    /// `Z_k X_l CNOT_kl H_k`, taking `|down down>` to the singlet
    /// `(|down_k up_l> - |up_k down_l>)/sqrt 2`.
    pub fn apply_singlet_prep(&mut self, k: usize, l: usize) -> Result<()> {
        self.check_pair(k, l)?;
        self.apply_h(k)?;
        self.apply_cnot(k, l)?;
        self.apply_x(l)?;
        self.apply_z(k)
    }

    /// Inverse of [`apply_singlet_prep`](Self::apply_singlet_prep).
    pub fn apply_singlet_unprep(&mut self, k: usize, l: usize) -> Result<()> {
        self.check_pair(k, l)?;
        self.apply_z(k)?;
        self.apply_x(l)?;
        self.apply_cnot(k, l)?;
        self.apply_h(k)
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(())
    }

    /// `<self|other>`.
    pub fn overlap(&self, other: &Self) -> Result<Complex64> {
        self.check_same(other)?;
        Ok(dot(&self.amps, &other.amps))
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        Ok(self.overlap(other)?.norm_sqr().min(1.0))
    }

    /// `1 - sum_j |<ref_j|self>|^2` for an orthonormal reference set.
    pub fn subspace_infidelity(&self, refs: &[StateVector]) -> Result<f64> {
        let mut f = 0.0;
        for r in refs {
            f += r.overlap(self)?.norm_sqr();
        }
        Ok((1.0 - f).max(0.0))
    }

    /// Whether the states agree up to a global phase.
    pub fn approx_eq_up_to_phase(&self, other: &Self, tol: f64) -> bool {
        self.fidelity(other).map(|f| 1.0 - f < tol).unwrap_or(false)
    }

    /// `<X_k X_l + Y_k Y_l + Z_k Z_l>`.
    pub fn heisenberg_expectation(&self, k: usize, l: usize) -> Result<f64> {
        self.check_pair(k, l)?;
        let amps = &self.amps;
        let mut acc = 0.0;
        for_each_pair_block(self.n, k, l, |i00, ik, il, i11| {
            let (a, b) = (amps[ik], amps[il]);
            acc += amps[i00].norm_sqr() + amps[i11].norm_sqr() - a.norm_sqr() - b.norm_sqr() + 4.0 * (a.conj() * b).re;
        });
        Ok(acc)
    }

    /// `(X_k X_l + Y_k Y_l + Z_k Z_l) |self>`, unnormalised.
    pub fn pair_generator_applied(&self, k: usize, l: usize) -> Result<Vec<Complex64>> {
        self.check_pair(k, l)?;
        let mut out = self.amps.clone();
        for_each_pair_block(self.n, k, l, |_, ik, il, _| {
            let (a, b) = (out[ik], out[il]);
            out[ik] = 2.0 * b - a;
            out[il] = 2.0 * a - b;
        });
        Ok(out)
    }

    /// `<sigma^z_k sigma^z_l>` in Pauli units.
    pub fn zz_correlation(&self, k: usize, l: usize) -> Result<f64> {
        self.check_qubit(k)?;
        self.check_qubit(l)?;
        let mask = (1usize << k) | (1usize << l);
        if k == l {
            return Ok(1.0);
        }
        Ok(self
            .amps
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let parity = (i & mask).count_ones() % 2;
                if parity == 0 {
                    a.norm_sqr()
                } else {
                    -a.norm_sqr()
                }
            })
            .sum())
    }

    /// `<sigma^z_k>` in Pauli units.
    pub fn z_expectation(&self, k: usize) -> Result<f64> {
        self.check_qubit(k)?;
        let bit = 1usize << k;
        Ok(self
            .amps
            .iter()
            .enumerate()
            .map(|(i, a)| if i & bit != 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum())
    }

    /// `S^alpha |self>` for the total physical spin component, unnormalised.
    pub fn apply_total_spin(&self, axis: Axis) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.dim()];
        match axis {
            Axis::Z => {
                for (i, a) in self.amps.iter().enumerate() {
                    out[i] = *a * (2.0 * i.count_ones() as f64 - self.n as f64);
                }
            }
            Axis::X => {
                for q in 0..self.n {
                    let bit = 1usize << q;
                    for (i, a) in self.amps.iter().enumerate() {
                        out[i ^ bit] += *a;
                    }
                }
            }
            Axis::Y => {
                // -Y: |0> -> -i|1>, |1> -> i|0>
                for q in 0..self.n {
                    let bit = 1usize << q;
                    for (i, a) in self.amps.iter().enumerate() {
                        let phase = if i & bit == 0 {
                            Complex64::new(0.0, -1.0)
                        } else {
                            Complex64::new(0.0, 1.0)
                        };
                        out[i ^ bit] += *a * phase;
                    }
                }
            }
        }
        out
    }

    /// Mean and variance of the total physical spin along `axis`.
    pub fn total_spin_moments(&self, axis: Axis) -> (f64, f64) {
        let w = self.apply_total_spin(axis);
        let mean = dot(&self.amps, &w).re;
        let second: f64 = w.iter().map(|a| a.norm_sqr()).sum();
        (mean, (second - mean * mean).max(0.0))
    }

    pub fn total_spin_z(&self) -> f64 {
        self.total_spin_moments(Axis::Z).0
    }

    /// Whether the state is an eigenstate of the total spin along `axis` with
    /// eigenvalue `value`.
    pub fn sector_check(&self, axis: Axis, value: f64, tol: f64) -> bool {
        let (mean, var) = self.total_spin_moments(axis);
        (mean - value).abs() < tol && var < tol
    }

    /// Little-endian interleaved `re, im` doubles.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.dim() * 16);
        for a in &self.amps {
            out.extend_from_slice(&a.re.to_le_bytes());
            out.extend_from_slice(&a.im.to_le_bytes());
        }
        out
    }

    /// Rotate so that a computational measurement reads out `basis`.
    pub fn rotate_to_basis(&mut self, basis: Axis) {
        for q in 0..self.n {
            match basis {
                Axis::Z => {}
                Axis::X => self.apply_h(q).expect("qubit in range"),
                Axis::Y => {
                    self.apply_sdg(q).expect("qubit in range");
                    self.apply_h(q).expect("qubit in range");
                }
            }
        }
    }

    /// Measure every qubit in `basis`. With `post_select`, shots whose total
    /// spin along `basis` differs from the given value are discarded.
    pub fn sample(&self, basis: Axis, shots: usize, seed: u64, post_select: Option<i64>) -> ShotBatch {
        let mut rotated = self.clone();
        rotated.rotate_to_basis(basis);
        let mut cdf = Vec::with_capacity(rotated.dim());
        let mut acc = 0.0;
        for a in &rotated.amps {
            acc += a.norm_sqr();
            cdf.push(acc);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut batch = ShotBatch {
            n_qubits: self.n,
            basis,
            shots: Vec::with_capacity(shots),
            post_selected: post_select.is_some(),
            kept: 0,
            discarded: 0,
        };
        for _ in 0..shots {
            let u: f64 = rng.gen::<f64>() * acc;
            let idx = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
            let keep = match post_select {
                Some(target) => batch.spin_sum(idx) == target,
                None => true,
            };
            if keep {
                batch.shots.push(idx);
                batch.kept += 1;
            } else {
                batch.discarded += 1;
            }
        }
        batch
    }
}

pub(crate) fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).fold(ZERO, |acc, (x, y)| acc + x.conj() * y)
}

/// `<lambda| G_kl |psi>` with `G = X_k X_l + Y_k Y_l + Z_k Z_l`.
pub fn generator_element(lambda: &StateVector, psi: &StateVector, k: usize, l: usize) -> Result<Complex64> {
    lambda.check_same(psi)?;
    psi.check_pair(k, l)?;
    let (x, y) = (&lambda.amps, &psi.amps);
    let mut acc = ZERO;
    for_each_pair_block(psi.n, k, l, |i00, ik, il, i11| {
        acc += x[i00].conj() * y[i00] + x[i11].conj() * y[i11];
        acc += x[ik].conj() * (2.0 * y[il] - y[ik]);
        acc += x[il].conj() * (2.0 * y[ik] - y[il]);
    });
    Ok(acc)
}

/// Measurement record in one basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotBatch {
    pub n_qubits: usize,
    pub basis: Axis,
    /// Kept outcomes as basis indices of the rotated register.
    pub shots: Vec<usize>,
    pub post_selected: bool,
    pub kept: usize,
    pub discarded: usize,
}

impl ShotBatch {
    /// Physical spin (`+1` or `-1`) of `qubit` in outcome `idx`.
    pub fn spin(&self, idx: usize, qubit: usize) -> i64 {
        let bit = (idx >> qubit) & 1 == 1;
        // X readout: bit 0 is the +1 eigenstate of X = sigma^x.
        // Y readout: bit 0 is the +1 eigenstate of Y = -sigma^y.
        let up = match self.basis {
            Axis::X => !bit,
            Axis::Y | Axis::Z => bit,
        };
        if up {
            1
        } else {
            -1
        }
    }

    pub fn spin_sum(&self, idx: usize) -> i64 {
        (0..self.n_qubits).map(|q| self.spin(idx, q)).sum()
    }

    pub fn total(&self) -> usize {
        self.kept + self.discarded
    }

    /// Outcome label written most significant qubit first.
    pub fn label(&self, idx: usize) -> String {
        format!("{:0width$b}", idx, width = self.n_qubits)
    }

    /// Relative frequency of each outcome index among kept shots.
    pub fn frequencies(&self) -> Vec<f64> {
        let mut counts = vec![0.0; 1 << self.n_qubits];
        for &s in &self.shots {
            counts[s] += 1.0;
        }
        let total = self.kept.max(1) as f64;
        counts.iter_mut().for_each(|c| *c /= total);
        counts
    }
}
