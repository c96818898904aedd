//! Sparse Heisenberg Hamiltonians and their lowest eigenpairs.
//!
//! The Lanczos solver works on real vectors (the Hamiltonian is real in the
//! computational basis). It finds eigenpairs one at a time with thick
//! restarts, locking each converged vector and restarting from a fresh
//! random direction, so degenerate levels come out with full multiplicity.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{colour_edges, dimer_covering, ColouringScheme, KagomePatch};
use crate::statevec::{StateVector, MAX_QUBITS};

/// Largest register for [`dense_spectrum`].
pub const DENSE_MAX_QUBITS: usize = 12;

/// Above this size a sector-restricted basis replaces the full space.
pub const FULL_SPACE_MAX_QUBITS: usize = 20;

/// Which bonds of a patch enter the Hamiltonian.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TermSubset {
    All,
    /// One colour class of the five-colour split.
    Colour(u8),
    /// The dimer covering.
    Dimers,
    Edges(Vec<(usize, usize)>),
}

/// `sum_{(i,j)} X_i X_j + Y_i Y_j + Z_i Z_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseHamiltonian {
    n: usize,
    terms: Vec<(usize, usize)>,
    masks: Vec<usize>,
}

pub fn build_hamiltonian(patch: &KagomePatch, subset: &TermSubset) -> Result<SparseHamiltonian> {
    let terms = match subset {
        TermSubset::All => patch.edges.clone(),
        TermSubset::Colour(c) => colour_edges(patch, ColouringScheme::Square5)?.class(patch, *c),
        TermSubset::Dimers => dimer_covering(patch)?.dimers,
        TermSubset::Edges(edges) => {
            for &(a, b) in edges {
                if !patch.has_edge(a, b) {
                    return Err(Error::InvalidPatch(format!(
                        "({a}, {b}) is not a bond of {}",
                        patch.name
                    )));
                }
            }
            edges.clone()
        }
    };
    SparseHamiltonian::new(patch.n_sites(), terms)
}

impl SparseHamiltonian {
    pub fn new(n: usize, terms: Vec<(usize, usize)>) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::QubitRange { n, cap: MAX_QUBITS });
        }
        if terms.is_empty() {
            return Err(Error::EmptyOperator);
        }
        for &(a, b) in &terms {
            if a == b {
                return Err(Error::RepeatedQubit(a));
            }
            if a.max(b) >= n {
                return Err(Error::QubitIndex { index: a.max(b), n });
            }
        }
        let masks = terms.iter().map(|&(a, b)| (1usize << a) | (1usize << b)).collect();
        Ok(Self { n, terms, masks })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[(usize, usize)] {
        &self.terms
    }

    #[inline]
    fn diagonal(&self, i: usize) -> f64 {
        let anti = self.masks.iter().filter(|&&m| (i & m).count_ones() == 1).count();
        self.terms.len() as f64 - 2.0 * anti as f64
    }

    /// `out = H x` over the full space, real vectors.
    pub fn apply_real(&self, x: &[f64], out: &mut [f64]) {
        assert_eq!(x.len(), 1 << self.n);
        assert_eq!(out.len(), x.len());
        out.par_iter_mut().enumerate().for_each(|(i, o)| {
            let mut acc = 0.0;
            let mut diag = self.terms.len() as f64;
            for &m in &self.masks {
                if (i & m).count_ones() == 1 {
                    diag -= 2.0;
                    acc += 2.0 * x[i ^ m];
                }
            }
            *o = diag * x[i] + acc;
        });
    }

    /// `H |psi>` as raw amplitudes.
    pub fn apply(&self, psi: &StateVector) -> Result<Vec<Complex64>> {
        if psi.n_qubits() != self.n {
            return Err(Error::DimensionMismatch(psi.dim(), 1 << self.n));
        }
        let x = psi.amplitudes();
        let mut out = vec![Complex64::new(0.0, 0.0); x.len()];
        out.par_iter_mut().enumerate().for_each(|(i, o)| {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut diag = self.terms.len() as f64;
            for &m in &self.masks {
                if (i & m).count_ones() == 1 {
                    diag -= 2.0;
                    acc += 2.0 * x[i ^ m];
                }
            }
            *o = x[i] * diag + acc;
        });
        Ok(out)
    }

    /// `<psi|H|psi>`.
    pub fn expectation(&self, psi: &StateVector) -> Result<f64> {
        if psi.n_qubits() != self.n {
            return Err(Error::DimensionMismatch(psi.dim(), 1 << self.n));
        }
        let mut e = 0.0;
        for &(a, b) in &self.terms {
            e += psi.heisenberg_expectation(a, b)?;
        }
        Ok(e)
    }

    /// Dense matrix, for small registers.
    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        if self.n > DENSE_MAX_QUBITS {
            return Err(Error::TooLarge {
                what: "dense matrix",
                n: self.n,
                cap: DENSE_MAX_QUBITS,
            });
        }
        let dim = 1usize << self.n;
        let mut m = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = self.diagonal(i);
            for &mask in &self.masks {
                if (i & mask).count_ones() == 1 {
                    m[(i ^ mask, i)] += 2.0;
                }
            }
        }
        Ok(m)
    }

    fn sector_block(&self, weight: usize) -> (Vec<usize>, DMatrix<f64>) {
        let states: Vec<usize> = (0..1usize << self.n)
            .filter(|i| i.count_ones() as usize == weight)
            .collect();
        let d = states.len();
        let mut m = DMatrix::zeros(d, d);
        for (r, &s) in states.iter().enumerate() {
            m[(r, r)] = self.diagonal(s);
            for &mask in &self.masks {
                if (s & mask).count_ones() == 1 {
                    let c = states.binary_search(&(s ^ mask)).expect("flip stays in sector");
                    m[(c, r)] += 2.0;
                }
            }
        }
        (states, m)
    }
}

/// Map a total `S^z` (Pauli units) to the number of up spins.
pub fn sector_weight(n: usize, sz: i64) -> Result<usize> {
    let w2 = sz + n as i64;
    if sz.unsigned_abs() as usize > n || w2 % 2 != 0 {
        return Err(Error::SectorParity {
            sector: format!("S^z = {sz}"),
            n,
        });
    }
    Ok((w2 / 2) as usize)
}

/// Full spectrum by block diagonalisation over magnetisation sectors.
pub fn dense_spectrum(h: &SparseHamiltonian) -> Result<Vec<f64>> {
    let n = h.n_qubits();
    if n > DENSE_MAX_QUBITS {
        return Err(Error::TooLarge {
            what: "dense diagonalisation",
            n,
            cap: DENSE_MAX_QUBITS,
        });
    }
    let mut out = Vec::with_capacity(1 << n);
    for w in 0..=n {
        out.extend(h.sector_block(w).1.symmetric_eigenvalues().iter());
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Lowest `k` eigenpairs from dense diagonalisation.
pub fn dense_eigenpairs(h: &SparseHamiltonian, k: usize) -> Result<(Vec<f64>, Vec<StateVector>)> {
    let n = h.n_qubits();
    if n > DENSE_MAX_QUBITS {
        return Err(Error::TooLarge {
            what: "dense diagonalisation",
            n,
            cap: DENSE_MAX_QUBITS,
        });
    }
    let mut pairs: Vec<(f64, usize, Vec<f64>)> = Vec::new();
    for w in 0..=n {
        let (states, block) = h.sector_block(w);
        let eig = SymmetricEigen::new(block);
        for j in 0..states.len() {
            let mut v = vec![0.0; 1 << n];
            for (r, &s) in states.iter().enumerate() {
                v[s] = eig.eigenvectors[(r, j)];
            }
            pairs.push((eig.eigenvalues[j], w, v));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    pairs.truncate(k);
    let mut vals = Vec::with_capacity(pairs.len());
    let mut vecs = Vec::with_capacity(pairs.len());
    for (e, _, v) in pairs {
        vals.push(e);
        vecs.push(StateVector::from_real(&v)?);
    }
    Ok((vals, vecs))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LanczosOptions {
    pub k: usize,
    pub seed: u64,
    /// Restrict to total `S^z` (Pauli units).
    pub sector: Option<i64>,
    pub tol: f64,
    pub max_matvecs: usize,
    pub krylov_cap: usize,
    /// Memory allowed for the Krylov basis.
    pub memory_budget: usize,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            k: 1,
            seed: 0,
            sector: None,
            tol: 1e-10,
            max_matvecs: 10_000,
            krylov_cap: 200,
            memory_budget: 1 << 30,
        }
    }
}

impl LanczosOptions {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            seed,
            ..Self::default()
        }
    }

    pub fn sector(mut self, sz: i64) -> Self {
        self.sector = Some(sz);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenSolution {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<StateVector>,
    pub residuals: Vec<f64>,
    pub matvecs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenReport {
    pub patch: String,
    pub k: usize,
    pub energies: Vec<f64>,
    pub residuals: Vec<f64>,
    pub gap: Option<f64>,
    pub relative_gap: Option<f64>,
}

impl EigenSolution {
    pub fn gap(&self) -> Option<f64> {
        (self.eigenvalues.len() >= 2).then(|| self.eigenvalues[1] - self.eigenvalues[0])
    }

    pub fn relative_gap(&self) -> Option<f64> {
        self.gap().map(|g| g / self.eigenvalues[0].abs())
    }

    pub fn report(&self, patch: &str) -> EigenReport {
        EigenReport {
            patch: patch.to_string(),
            k: self.eigenvalues.len(),
            energies: self.eigenvalues.clone(),
            residuals: self.residuals.clone(),
            gap: self.gap(),
            relative_gap: self.relative_gap(),
        }
    }
}

/// Real symmetric operator on a (possibly reduced) basis.
trait Operator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], out: &mut [f64]);
    /// Remove components outside the target space.
    fn project(&self, _x: &mut [f64]) {}
    fn lift(&self, x: &[f64]) -> Result<StateVector>;
}

struct FullSpace<'a> {
    h: &'a SparseHamiltonian,
    weight: Option<usize>,
}

impl Operator for FullSpace<'_> {
    fn dim(&self) -> usize {
        1 << self.h.n
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        self.h.apply_real(x, out);
        self.project(out);
    }

    fn project(&self, x: &mut [f64]) {
        if let Some(w) = self.weight {
            for (i, v) in x.iter_mut().enumerate() {
                if i.count_ones() as usize != w {
                    *v = 0.0;
                }
            }
        }
    }

    fn lift(&self, x: &[f64]) -> Result<StateVector> {
        StateVector::from_real(x)
    }
}

/// Basis of all `n`-bit strings with fixed popcount, ranked in increasing
/// integer order through split lookup tables.
struct SectorSpace<'a> {
    h: &'a SparseHamiltonian,
    states: Vec<u32>,
    lo_bits: usize,
    lo_rank: Vec<u32>,
    hi_rank: Vec<Vec<u32>>,
}

fn binomial_table(n: usize) -> Vec<Vec<u64>> {
    let mut c = vec![vec![0u64; n + 2]; n + 1];
    for i in 0..=n {
        c[i][0] = 1;
        for j in 1..=i {
            c[i][j] = c[i - 1][j - 1] + if j < i { c[i - 1][j] } else { 0 };
        }
    }
    c
}

impl<'a> SectorSpace<'a> {
    fn new(h: &'a SparseHamiltonian, weight: usize) -> Self {
        let n = h.n;
        let binom = binomial_table(n);
        let choose = |a: usize, b: usize| if b > a { 0 } else { binom[a][b] as u32 };
        let lo_bits = n.min(12);
        let hi_bits = n - lo_bits;
        let lo_rank = (0..1usize << lo_bits)
            .map(|x| {
                let mut r = 0;
                let mut j = 0;
                for p in 0..lo_bits {
                    if x >> p & 1 == 1 {
                        j += 1;
                        r += choose(p, j);
                    }
                }
                r
            })
            .collect();
        let hi_rank = (0..=lo_bits)
            .map(|below| {
                (0..1usize << hi_bits)
                    .map(|y| {
                        let mut r = 0;
                        let mut j = below;
                        for q in 0..hi_bits {
                            if y >> q & 1 == 1 {
                                j += 1;
                                r += choose(lo_bits + q, j);
                            }
                        }
                        r
                    })
                    .collect()
            })
            .collect();
        let states = sector_states(n, weight);
        Self {
            h,
            states,
            lo_bits,
            lo_rank,
            hi_rank,
        }
    }

    #[inline]
    fn rank(&self, s: usize) -> usize {
        let lo = s & ((1 << self.lo_bits) - 1);
        let below = lo.count_ones() as usize;
        (self.lo_rank[lo] + self.hi_rank[below][s >> self.lo_bits]) as usize
    }
}

// Fixed-popcount bit strings in increasing order (Gosper's hack).
fn sector_states(n: usize, weight: usize) -> Vec<u32> {
    let mut out = Vec::new();
    if weight == 0 {
        out.push(0);
        return out;
    }
    let mut s: usize = (1 << weight) - 1;
    while s < 1 << n {
        out.push(s as u32);
        let c = s & s.wrapping_neg();
        let r = s + c;
        s = (((r ^ s) >> 2) / c) | r;
    }
    out
}

impl Operator for SectorSpace<'_> {
    fn dim(&self) -> usize {
        self.states.len()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n_terms = self.h.terms.len() as f64;
        out.par_iter_mut().enumerate().for_each(|(r, o)| {
            let s = self.states[r] as usize;
            let mut acc = 0.0;
            let mut diag = n_terms;
            for &m in &self.h.masks {
                if (s & m).count_ones() == 1 {
                    diag -= 2.0;
                    acc += 2.0 * x[self.rank(s ^ m)];
                }
            }
            *o = diag * x[r] + acc;
        });
    }

    fn lift(&self, x: &[f64]) -> Result<StateVector> {
        let mut full = vec![Complex64::new(0.0, 0.0); 1 << self.h.n];
        for (&s, &v) in self.states.iter().zip(x) {
            full[s as usize] = Complex64::new(v, 0.0);
        }
        StateVector::from_amplitudes(full)
    }
}

/// Lowest `opts.k` eigenpairs of `h`.
pub fn lanczos_lowest(h: &SparseHamiltonian, opts: &LanczosOptions) -> Result<EigenSolution> {
    if opts.k == 0 {
        return Err(Error::Estimation("k must be at least 1".into()));
    }
    let weight = opts.sector.map(|sz| sector_weight(h.n, sz)).transpose()?;
    match weight {
        Some(w) if h.n > FULL_SPACE_MAX_QUBITS => run_lanczos(&SectorSpace::new(h, w), opts),
        _ => run_lanczos(&FullSpace { h, weight }, opts),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += alpha * x);
}

fn normalise(x: &mut [f64]) -> f64 {
    let norm = dot(x, x).sqrt();
    if norm > 0.0 {
        x.iter_mut().for_each(|v| *v /= norm);
    }
    norm
}

// Two passes of classical Gram-Schmidt; returns the summed coefficients.
fn orthogonalise(w: &mut [f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let mut coeffs = vec![0.0; basis.len()];
    for _ in 0..2 {
        for (c, v) in coeffs.iter_mut().zip(basis) {
            let h = dot(v, w);
            axpy(-h, v, w);
            *c += h;
        }
    }
    coeffs
}

fn run_lanczos(op: &dyn Operator, opts: &LanczosOptions) -> Result<EigenSolution> {
    let dim = op.dim();
    if opts.k > dim {
        return Err(Error::Estimation(format!(
            "asked for {} eigenpairs in dimension {dim}",
            opts.k
        )));
    }
    let per_vector = dim * std::mem::size_of::<f64>();
    let cap = opts.krylov_cap.min(opts.memory_budget / per_vector.max(1)).max(8);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut locked: Vec<Vec<f64>> = Vec::new();
    let mut values = Vec::new();
    let mut matvecs = 0;
    let mut hint: Option<Vec<f64>> = None;

    while locked.len() < opts.k {
        let mut start: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() - 0.5).collect();
        op.project(&mut start);
        if let Some(h) = hint.take() {
            normalise(&mut start);
            start.iter_mut().zip(&h).for_each(|(s, h)| *s = h + 0.3 * *s);
        }
        orthogonalise(&mut start, &locked);
        if normalise(&mut start) < 1e-300 {
            return Err(Error::Estimation(
                "start vector vanished in the locked complement".into(),
            ));
        }
        let m = cap.min(dim - locked.len());
        let (value, vector, next) = lowest_in_complement(op, &locked, start, m, opts, &mut matvecs)?;
        values.push(value);
        locked.push(vector);
        hint = next;
    }

    let mut eigenvalues = Vec::with_capacity(opts.k);
    let mut eigenvectors = Vec::with_capacity(opts.k);
    let mut residuals = Vec::with_capacity(opts.k);
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut hv = vec![0.0; dim];
    for i in order {
        let v = &locked[i];
        op.apply(v, &mut hv);
        let e = dot(v, &hv);
        axpy(-e, v, &mut hv);
        residuals.push(dot(&hv, &hv).sqrt());
        eigenvalues.push(e);
        eigenvectors.push(op.lift(v)?);
    }
    Ok(EigenSolution {
        eigenvalues,
        eigenvectors,
        residuals,
        matvecs: matvecs + opts.k,
    })
}

type Found = (f64, Vec<f64>, Option<Vec<f64>>);

// Thick-restart Lanczos for the lowest eigenpair of `op` restricted to the
// orthogonal complement of `locked`. Also returns the second Ritz vector as
// a hint for the next search.
fn lowest_in_complement(
    op: &dyn Operator,
    locked: &[Vec<f64>],
    start: Vec<f64>,
    m: usize,
    opts: &LanczosOptions,
    matvecs: &mut usize,
) -> Result<Found> {
    let dim = op.dim();
    let keep_max = (m / 3).max(1);
    let mut basis: Vec<Vec<f64>> = vec![start];
    // Projected matrix, stored full for simplicity.
    let mut t = DMatrix::<f64>::zeros(m, m);
    // Number of leading basis vectors that are Ritz vectors from the last restart.
    let mut kept = 0;
    let mut w = vec![0.0; dim];
    let mut best_residual = f64::INFINITY;

    loop {
        let mut beta;
        let mut exhausted = false;
        let mut j = basis.len() - 1;
        loop {
            if *matvecs >= opts.max_matvecs {
                return Err(Error::Convergence {
                    matvecs: *matvecs,
                    residuals: vec![best_residual],
                });
            }
            op.apply(&basis[j], &mut w);
            *matvecs += 1;
            let applied = dot(&w, &w).sqrt();
            orthogonalise(&mut w, locked);
            let coeffs = orthogonalise(&mut w, &basis);
            // the basis pass can leak rounding noise back along locked vectors
            orthogonalise(&mut w, locked);
            for (i, &c) in coeffs.iter().enumerate() {
                if i < kept && j < kept {
                    continue;
                }
                t[(i, j)] = c;
                t[(j, i)] = c;
            }
            op.project(&mut w);
            beta = normalise(&mut w);
            // breakdown is judged against |Hv| so that normalised rounding
            // noise never enters the basis
            if beta < 1e-10 * applied.max(f64::MIN_POSITIVE) {
                exhausted = true;
                break;
            }
            if basis.len() == m {
                break;
            }
            basis.push(w.clone());
            j += 1;
        }

        let size = basis.len();
        let eig = SymmetricEigen::new(t.view((0, 0), (size, size)).into_owned());
        let mut order: Vec<usize> = (0..size).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let lowest = order[0];
        let theta = eig.eigenvalues[lowest];
        let residual = if exhausted {
            0.0
        } else {
            (beta * eig.eigenvectors[(size - 1, lowest)]).abs()
        };
        best_residual = best_residual.min(residual);

        let ritz = |col: usize| -> Vec<f64> {
            let mut x = vec![0.0; dim];
            for (i, v) in basis.iter().enumerate() {
                axpy(eig.eigenvectors[(i, col)], v, &mut x);
            }
            x
        };

        if residual < opts.tol || exhausted {
            let mut x = ritz(lowest);
            orthogonalise(&mut x, locked);
            normalise(&mut x);
            let next = (size > 1).then(|| {
                let mut y = ritz(order[1]);
                normalise(&mut y);
                y
            });
            return Ok((theta, x, next));
        }

        // thick restart: lowest Ritz vectors, then the residual direction
        let keep = keep_max.min(size - 1);
        let mut new_basis = Vec::with_capacity(m);
        let mut new_t = DMatrix::<f64>::zeros(m, m);
        for (slot, &col) in order.iter().take(keep).enumerate() {
            let mut x = ritz(col);
            normalise(&mut x);
            new_basis.push(x);
            new_t[(slot, slot)] = eig.eigenvalues[col];
            let coupling = beta * eig.eigenvectors[(size - 1, col)];
            new_t[(slot, keep)] = coupling;
            new_t[(keep, slot)] = coupling;
        }
        new_basis.push(w.clone());
        basis = new_basis;
        t = new_t;
        kept = keep;
    }
}
