//! Exact-energy VQE: objective, adjoint gradients, restarts and sweeps.

use std::collections::BTreeMap;
use std::sync::Mutex;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{initial_state, make_spec_with, AnsatzSpec, DimerTying, ParamRole, Scheme, Sector};
use crate::error::{Error, Result};
use crate::exactdiag::{build_hamiltonian, lanczos_lowest, LanczosOptions, SparseHamiltonian, TermSubset};
use crate::lattice::{build_patch, KagomePatch};
use crate::optim::{minimise, LbfgsOptions, Termination};
use crate::statevec::{generator_element, StateVector};

/// Gradient snapshots kept per run.
pub const SNAPSHOTS: usize = 5;

/// A patch, its Hamiltonian, an ansatz and the initial state.
#[derive(Debug, Clone)]
pub struct Problem {
    pub patch: KagomePatch,
    pub spec: AnsatzSpec,
    pub hamiltonian: SparseHamiltonian,
    pub initial: StateVector,
    pub sector: Sector,
}

impl Problem {
    pub fn new(patch: &KagomePatch, scheme: Scheme, p: usize, sector: Sector, tying: DimerTying) -> Result<Self> {
        Ok(Self {
            patch: patch.clone(),
            spec: make_spec_with(patch, scheme, p, tying)?,
            hamiltonian: build_hamiltonian(patch, &TermSubset::All)?,
            initial: initial_state(patch, sector)?,
            sector,
        })
    }

    pub fn state(&self, theta: &[f64]) -> Result<StateVector> {
        let mut psi = self.initial.clone();
        self.spec.apply(&mut psi, theta)?;
        Ok(psi)
    }

    pub fn energy(&self, theta: &[f64]) -> Result<f64> {
        objective(&self.spec, theta, &self.initial, &self.hamiltonian)
    }

    pub fn energy_and_gradient(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        energy_and_gradient(&self.spec, theta, &self.initial, &self.hamiltonian)
    }
}

/// `<psi(theta)|H|psi(theta)>`.
pub fn objective(spec: &AnsatzSpec, theta: &[f64], initial: &StateVector, h: &SparseHamiltonian) -> Result<f64> {
    let mut psi = initial.clone();
    spec.apply(&mut psi, theta)?;
    h.expectation(&psi)
}

pub fn gradient(spec: &AnsatzSpec, theta: &[f64], initial: &StateVector, h: &SparseHamiltonian) -> Result<Vec<f64>> {
    Ok(energy_and_gradient(spec, theta, initial, h)?.1)
}

/// Energy and its exact gradient from one forward and one backward sweep.
pub fn energy_and_gradient(
    spec: &AnsatzSpec,
    theta: &[f64],
    initial: &StateVector,
    h: &SparseHamiltonian,
) -> Result<(f64, Vec<f64>)> {
    let mut psi = initial.clone();
    spec.apply(&mut psi, theta)?;
    let mut lambda = StateVector::from_raw(h.apply(&psi)?);
    let energy = psi.overlap(&lambda)?.re;
    let mut grad = vec![0.0; theta.len()];
    for g in spec.gates.iter().rev() {
        let (k, l) = g.pair;
        grad[g.param] += 2.0 * generator_element(&lambda, &psi, k, l)?.im;
        let back = -theta[g.param];
        psi.apply_heisenberg(k, l, back)?;
        lambda.apply_heisenberg(k, l, back)?;
    }
    Ok((energy, grad))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitStrategy {
    RandomUniform,
    LinearRamp,
    /// Ramp on restart 0, random on the others.
    Mixed,
}

impl std::str::FromStr for InitStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").to_lowercase().as_str() {
            "random_uniform" | "random" => Ok(InitStrategy::RandomUniform),
            "linear_ramp" | "ramp" => Ok(InitStrategy::LinearRamp),
            "mixed" => Ok(InitStrategy::Mixed),
            _ => Err(Error::Config(format!("unknown init strategy `{s}`"))),
        }
    }
}

/// Uniform draws in `[0, 1/p]`.
pub fn random_params(spec: &AnsatzSpec, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hi = 1.0 / spec.p.max(1) as f64;
    (0..spec.n_params()).map(|_| rng.gen_range(0.0..=hi)).collect()
}

/// Discretised linear anneal: layer `i` of `p` gets `delta (1 - i/(p+1))` on
/// the initial Hamiltonian and `delta i/(p+1)` on the target.
pub fn ramp_params(spec: &AnsatzSpec, delta: Option<f64>) -> Vec<f64> {
    let p = spec.p.max(1) as f64;
    let delta = delta.unwrap_or(1.0 / p);
    spec.params
        .iter()
        .map(|&(role, layer)| {
            let s = (layer + 1) as f64 / (p + 1.0);
            match role {
                ParamRole::Initial => delta * (1.0 - s),
                ParamRole::Target => delta * s,
            }
        })
        .collect()
}

pub fn init_params(
    spec: &AnsatzSpec,
    strategy: InitStrategy,
    seed: u64,
    restart: usize,
    delta: Option<f64>,
) -> Vec<f64> {
    match strategy {
        InitStrategy::LinearRamp => ramp_params(spec, delta),
        InitStrategy::Mixed if restart == 0 => ramp_params(spec, delta),
        _ => random_params(spec, seed),
    }
}

/// Lowest two states of the sector a VQE run explores.
#[derive(Debug, Clone)]
pub struct Reference {
    pub sector: Sector,
    pub energies: Vec<f64>,
    pub states: Vec<StateVector>,
}

impl Reference {
    pub fn compute(patch: &KagomePatch, sector: Sector, seed: u64) -> Result<Self> {
        let h = build_hamiltonian(patch, &TermSubset::All)?;
        let k = 2.min(1 << patch.n_sites());
        let sol = lanczos_lowest(&h, &LanczosOptions::new(k, seed).sector(sector.sz(patch.n_sites())))?;
        Ok(Self {
            sector,
            energies: sol.eigenvalues,
            states: sol.eigenvectors,
        })
    }

    pub fn e0(&self) -> f64 {
        self.energies[0]
    }

    pub fn infidelity(&self, psi: &StateVector) -> Result<f64> {
        Ok((1.0 - self.states[0].fidelity(psi)?).max(0.0))
    }

    pub fn subspace_infidelity(&self, psi: &StateVector) -> Result<f64> {
        psi.subspace_infidelity(&self.states)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqeConfig {
    pub patch: String,
    pub scheme: Scheme,
    pub p: usize,
    pub init: InitStrategy,
    pub ramp_delta: Option<f64>,
    pub seed: u64,
    pub restarts: usize,
    pub optimiser: LbfgsOptions,
    pub sector: Option<Sector>,
    pub dimer_tying: DimerTying,
}

impl VqeConfig {
    pub fn new(patch: &str, scheme: Scheme, p: usize, seed: u64) -> Self {
        Self {
            patch: patch.to_string(),
            scheme,
            p,
            init: InitStrategy::RandomUniform,
            ramp_delta: None,
            seed,
            restarts: 1,
            optimiser: LbfgsOptions::default(),
            sector: None,
            dimer_tying: DimerTying::Shared,
        }
    }

    pub fn restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::Config("restarts must be at least 1".into()));
        }
        if self.p == 0 {
            return Err(Error::Config("p must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqeRunRecord {
    pub patch: String,
    pub scheme: Scheme,
    pub p: usize,
    pub n_qubits: usize,
    pub n_params: usize,
    pub sector: Sector,
    pub restart: usize,
    pub seed: u64,
    pub init: InitStrategy,
    pub energy_trace: Vec<f64>,
    pub grad_snapshots: Vec<Vec<f64>>,
    pub theta_initial: Vec<f64>,
    pub theta_final: Vec<f64>,
    pub e_initial: f64,
    pub e_final: f64,
    pub e0: f64,
    pub e1: Option<f64>,
    pub rel_energy_err: f64,
    pub infidelity: f64,
    pub subspace_infidelity: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
    pub wall_s: f64,
}

/// Seed of one restart, derived from the run coordinates so that every
/// restart owns an independent random stream.
pub fn derive_seed(seed: u64, patch: &str, p: usize, restart: usize) -> u64 {
    // FNV-1a over the coordinates, then a splitmix finaliser
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut feed = |bytes: &[u8]| {
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    };
    feed(&seed.to_le_bytes());
    feed(patch.as_bytes());
    feed(&(p as u64).to_le_bytes());
    feed(&(restart as u64).to_le_bytes());
    let mut z = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Optimise one start point.
pub fn run_single(
    problem: &Problem,
    reference: &Reference,
    theta0: Vec<f64>,
    optimiser: &LbfgsOptions,
) -> Result<VqeRunRecord> {
    let start = Instant::now();
    let e_initial = problem.energy(&theta0)?;
    let mut snapshots = Vec::with_capacity(SNAPSHOTS);
    let mut failure = None;
    let result = minimise(
        |x| match problem.energy_and_gradient(x) {
            Ok((e, g)) => {
                if snapshots.len() < SNAPSHOTS {
                    snapshots.push(g.clone());
                }
                (e, g)
            }
            Err(err) => {
                failure.get_or_insert(err);
                (f64::NAN, vec![f64::NAN; x.len()])
            }
        },
        &theta0,
        optimiser,
    );
    if let Some(err) = failure {
        return Err(err);
    }
    let psi = problem.state(&result.x)?;
    let e0 = reference.e0();
    Ok(VqeRunRecord {
        patch: problem.patch.name.clone(),
        scheme: problem.spec.scheme,
        p: problem.spec.p,
        n_qubits: problem.patch.n_sites(),
        n_params: problem.spec.n_params(),
        sector: problem.sector,
        restart: 0,
        seed: 0,
        init: InitStrategy::RandomUniform,
        energy_trace: result.trace,
        grad_snapshots: snapshots,
        theta_initial: theta0,
        theta_final: result.x,
        e_initial,
        e_final: result.f,
        e0,
        e1: reference.energies.get(1).copied(),
        rel_energy_err: (result.f - e0) / e0.abs(),
        infidelity: reference.infidelity(&psi)?,
        subspace_infidelity: reference.subspace_infidelity(&psi)?,
        iterations: result.iterations,
        evaluations: result.evaluations,
        termination: result.termination,
        wall_s: start.elapsed().as_secs_f64(),
    })
}

fn run_restarts(
    config: &VqeConfig,
    patch: &KagomePatch,
    reference: &Reference,
    mut sink: impl FnMut(&VqeRunRecord),
) -> Result<Vec<VqeRunRecord>> {
    config.validate()?;
    let sector = config.sector.unwrap_or_else(|| Sector::default_for(patch.n_sites()));
    let problem = Problem::new(patch, config.scheme, config.p, sector, config.dimer_tying)?;
    let mut records = Vec::with_capacity(config.restarts);
    for restart in 0..config.restarts {
        let seed = derive_seed(config.seed, &config.patch, config.p, restart);
        let theta0 = init_params(&problem.spec, config.init, seed, restart, config.ramp_delta);
        let mut rec = run_single(&problem, reference, theta0, &config.optimiser)?;
        rec.restart = restart;
        rec.seed = seed;
        rec.init = match (config.init, restart) {
            (InitStrategy::Mixed, 0) => InitStrategy::LinearRamp,
            (InitStrategy::Mixed, _) => InitStrategy::RandomUniform,
            (s, _) => s,
        };
        sink(&rec);
        records.push(rec);
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VqeOutcome {
    pub records: Vec<VqeRunRecord>,
    /// Index of the lowest final energy.
    pub best: usize,
}

impl VqeOutcome {
    pub fn best(&self) -> &VqeRunRecord {
        &self.records[self.best]
    }

    pub fn best_infidelity(&self) -> f64 {
        self.records.iter().map(|r| r.infidelity).fold(f64::INFINITY, f64::min)
    }
}

fn best_index(records: &[VqeRunRecord]) -> usize {
    records
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.e_final.total_cmp(&b.1.e_final))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

pub fn run_vqe(config: &VqeConfig) -> Result<VqeOutcome> {
    let patch = build_patch(&config.patch)?;
    let sector = config.sector.unwrap_or_else(|| Sector::default_for(patch.n_sites()));
    let reference = Reference::compute(&patch, sector, config.seed)?;
    run_vqe_with_reference(config, &reference)
}

pub fn run_vqe_with_reference(config: &VqeConfig, reference: &Reference) -> Result<VqeOutcome> {
    let patch = build_patch(&config.patch)?;
    let records = run_restarts(config, &patch, reference, |_| {})?;
    let best = best_index(&records);
    Ok(VqeOutcome { records, best })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub patches: Vec<String>,
    pub schemes: Vec<Scheme>,
    pub ps: Vec<usize>,
    pub restarts: usize,
    pub seed: u64,
    pub init: InitStrategy,
    pub ramp_delta: Option<f64>,
    pub optimiser: LbfgsOptions,
    pub dimer_tying: DimerTying,
}

impl SweepConfig {
    pub fn new(patches: &[&str], schemes: &[Scheme], ps: &[usize], restarts: usize, seed: u64) -> Self {
        Self {
            patches: patches.iter().map(|s| s.to_string()).collect(),
            schemes: schemes.to_vec(),
            ps: ps.to_vec(),
            restarts,
            seed,
            init: InitStrategy::RandomUniform,
            ramp_delta: None,
            optimiser: LbfgsOptions::default(),
            dimer_tying: DimerTying::Shared,
        }
    }

    fn cell(&self, patch: &str, scheme: Scheme, p: usize) -> VqeConfig {
        VqeConfig {
            patch: patch.to_string(),
            scheme,
            p,
            init: self.init,
            ramp_delta: self.ramp_delta,
            seed: self.seed,
            restarts: self.restarts,
            optimiser: self.optimiser,
            sector: None,
            dimer_tying: self.dimer_tying,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub patch: String,
    pub scheme: Scheme,
    pub p: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepReport {
    /// Sorted by patch order, scheme, p and restart.
    pub records: Vec<VqeRunRecord>,
    pub failures: Vec<CellFailure>,
}

/// Run every (patch, scheme, p) cell. `sink` sees each record as it
/// completes; calls are serialised.
pub fn sweep(config: &SweepConfig, sink: &(dyn Fn(&VqeRunRecord) + Sync)) -> Result<SweepReport> {
    let mut patches = Vec::new();
    let mut failures = Vec::new();
    for name in &config.patches {
        let patch = build_patch(name)?;
        let sector = Sector::default_for(patch.n_sites());
        match Reference::compute(&patch, sector, config.seed) {
            Ok(r) => patches.push((patch, r)),
            Err(e) => failures.extend(
                config
                    .schemes
                    .iter()
                    .flat_map(|&scheme| config.ps.iter().map(move |&p| (scheme, p)))
                    .map(|(scheme, p)| CellFailure {
                        patch: name.clone(),
                        scheme,
                        p,
                        error: e.to_string(),
                    }),
            ),
        }
    }
    let cells: Vec<(usize, Scheme, usize)> = (0..patches.len())
        .flat_map(|i| {
            config
                .schemes
                .iter()
                .flat_map(move |&s| config.ps.iter().map(move |&p| (i, s, p)))
        })
        .collect();
    let lock = Mutex::new(());
    let results: Vec<_> = cells
        .par_iter()
        .map(|&(i, scheme, p)| {
            let (patch, reference) = &patches[i];
            let cfg = config.cell(&patch.name, scheme, p);
            let out = run_restarts(&cfg, patch, reference, |rec| {
                let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
                sink(rec);
            });
            (i, scheme, p, out)
        })
        .collect();
    let mut records = Vec::new();
    for (i, scheme, p, out) in results {
        match out {
            Ok(r) => records.extend(r),
            Err(e) => failures.push(CellFailure {
                patch: patches[i].0.name.clone(),
                scheme,
                p,
                error: e.to_string(),
            }),
        }
    }
    Ok(SweepReport { records, failures })
}

/// Best (lowest) infidelity per p for one patch and scheme.
pub fn best_by_p(records: &[VqeRunRecord], patch: &str, scheme: Scheme) -> Vec<(usize, f64)> {
    let mut best: BTreeMap<usize, f64> = BTreeMap::new();
    for r in records.iter().filter(|r| r.patch == patch && r.scheme == scheme) {
        let e = best.entry(r.p).or_insert(f64::INFINITY);
        *e = e.min(r.infidelity);
    }
    best.into_iter().collect()
}

/// Smallest (interpolated) `p` whose best fidelity reaches `threshold`.
/// Between sampled depths the interpolation is linear in log-infidelity.
pub fn required_p(best: &[(usize, f64)], threshold: f64) -> Option<f64> {
    let target = 1.0 - threshold;
    let log = |v: f64| v.max(1e-300).log10();
    let hit = best.iter().position(|&(_, inf)| inf <= target)?;
    if hit == 0 {
        return Some(best[0].0 as f64);
    }
    let (pa, ia) = best[hit - 1];
    let (pb, ib) = best[hit];
    let (la, lb, lt) = (log(ia), log(ib), log(target));
    if (la - lb).abs() < f64::EPSILON {
        return Some(pb as f64);
    }
    let t = ((la - lt) / (la - lb)).clamp(0.0, 1.0);
    Some(pa as f64 + t * (pb as f64 - pa as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub patch: String,
    pub n_qubits: usize,
    pub scheme: Scheme,
    pub threshold: f64,
    pub p_required: Option<f64>,
}

pub fn threshold_table(records: &[VqeRunRecord], thresholds: &[f64]) -> Vec<ThresholdRow> {
    let mut cells: Vec<(String, usize, Scheme)> = Vec::new();
    for r in records {
        let key = (r.patch.clone(), r.n_qubits, r.scheme);
        if !cells.contains(&key) {
            cells.push(key);
        }
    }
    let mut rows = Vec::new();
    for (patch, n, scheme) in cells {
        let best = best_by_p(records, &patch, scheme);
        for &threshold in thresholds {
            rows.push(ThresholdRow {
                patch: patch.clone(),
                n_qubits: n,
                scheme,
                threshold,
                p_required: required_p(&best, threshold),
            });
        }
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradStudyConfig {
    pub patches: Vec<String>,
    pub schemes: Vec<Scheme>,
    pub ps: Vec<usize>,
    pub samples: usize,
    pub seed: u64,
    pub dimer_tying: DimerTying,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientCell {
    pub patch: String,
    pub scheme: Scheme,
    pub p: usize,
    pub n_qubits: usize,
    pub n_params: usize,
    pub samples: usize,
    pub mean_first: f64,
    pub var_first: f64,
    /// `var_first / n_qubits^2`.
    pub var_first_scaled: f64,
    pub mean_norm: f64,
    /// `mean_norm / (n_qubits p)`.
    pub mean_norm_scaled: f64,
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Gradient statistics at uniformly random points in `[0, 1/p]`.
pub fn gradient_study(config: &GradStudyConfig) -> Result<Vec<GradientCell>> {
    if config.samples < 2 {
        return Err(Error::Config("gradient study needs at least 2 samples".into()));
    }
    let mut cells = Vec::new();
    for name in &config.patches {
        let patch = build_patch(name)?;
        let sector = Sector::default_for(patch.n_sites());
        for &scheme in &config.schemes {
            for &p in &config.ps {
                let problem = Problem::new(&patch, scheme, p, sector, config.dimer_tying)?;
                let grads: Vec<Vec<f64>> = (0..config.samples)
                    .into_par_iter()
                    .map(|s| {
                        let theta = random_params(&problem.spec, derive_seed(config.seed, name, p, s));
                        problem.energy_and_gradient(&theta).map(|(_, g)| g)
                    })
                    .collect::<Result<_>>()?;
                let firsts: Vec<f64> = grads.iter().map(|g| g.first().copied().unwrap_or(0.0)).collect();
                let norms: Vec<f64> = grads
                    .iter()
                    .map(|g| g.iter().map(|v| v * v).sum::<f64>().sqrt())
                    .collect();
                let (mean_first, var_first) = mean_var(&firsts);
                let mean_norm = norms.iter().sum::<f64>() / norms.len() as f64;
                let n = patch.n_sites() as f64;
                cells.push(GradientCell {
                    patch: name.clone(),
                    scheme,
                    p,
                    n_qubits: patch.n_sites(),
                    n_params: problem.spec.n_params(),
                    samples: config.samples,
                    mean_first,
                    var_first,
                    var_first_scaled: var_first / (n * n),
                    mean_norm,
                    mean_norm_scaled: mean_norm / (n * p.max(1) as f64),
                });
            }
        }
    }
    Ok(cells)
}
