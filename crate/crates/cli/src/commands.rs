//! One function per experiment. Each resolves its parameters, writes its
//! artifacts and reports per-task status for the manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use kagome_vqe::ansatz::{DimerTying, Scheme, Sector};
use kagome_vqe::embed::{depth_report, embed_square, schedule_all_to_all, GateAccounting};
use kagome_vqe::exactdiag::{build_hamiltonian, lanczos_lowest, EigenReport, LanczosOptions, TermSubset};
use kagome_vqe::lattice::{build_patch, dimer_covering, KagomePatch};
use kagome_vqe::observables::{
    dimer_dimer, estimate_energy, path_correlations, q_axis, spin_gap_exact, spin_gap_vqe, structure_factor, Estimate,
    SpinGap, ZONE_CORNER,
};
use kagome_vqe::optim::LbfgsOptions;
use kagome_vqe::statevec::StateVector;
use kagome_vqe::vqe::{
    gradient_study, run_vqe_with_reference, sweep, threshold_table, GradStudyConfig, InitStrategy, Problem, Reference,
    SweepConfig, VqeConfig, VqeRunRecord,
};
use serde::Serialize;

use crate::config::{self, Params};
use crate::output::{self, num, opt_num, AppendLog, Manifest, OutDir, TaskStatus};
use crate::{plot, CliError};

/// Default output root when neither `--out` nor the environment sets one.
pub const DEFAULT_OUT_ROOT: &str = "kagome-out";
pub const OUT_ENV: &str = "KAGOME_OUT";
/// Largest patch run without `--allow-large`.
pub const DEFAULT_QUBIT_CAP: usize = 20;

pub const EXPERIMENTS: &[&str] = &[
    "ed",
    "vqe",
    "sweep",
    "gradstudy",
    "observables",
    "spin-gap",
    "compile",
    "plot",
];

fn allowed_keys(experiment: &str) -> &'static [&'static str] {
    match experiment {
        "ed" => &["patch", "k", "sector", "seed", "out", "allow_large"],
        "vqe" => &[
            "patch",
            "scheme",
            "p",
            "restarts",
            "seed",
            "out",
            "init",
            "ramp_delta",
            "sector",
            "dimer_tying",
            "max_iter",
            "allow_large",
        ],
        "sweep" => &[
            "patch",
            "scheme",
            "p",
            "restarts",
            "seed",
            "out",
            "init",
            "ramp_delta",
            "thresholds",
            "dimer_tying",
            "max_iter",
            "workers",
            "allow_large",
        ],
        "gradstudy" => &[
            "patch",
            "scheme",
            "p",
            "samples",
            "seed",
            "out",
            "dimer_tying",
            "workers",
            "allow_large",
        ],
        "observables" => &[
            "patch",
            "scheme",
            "p",
            "restarts",
            "seed",
            "out",
            "shots",
            "q_points",
            "init",
            "ramp_delta",
            "max_iter",
            "allow_large",
        ],
        "spin-gap" => &[
            "patch",
            "method",
            "scheme",
            "p",
            "restarts",
            "seed",
            "out",
            "fidelity_target",
            "allow_large",
        ],
        "compile" => &["patch", "topology", "rounds", "native", "seed", "out", "allow_large"],
        "plot" => &["input", "kind", "out"],
        _ => &[],
    }
}

fn needs_seed(experiment: &str) -> bool {
    !matches!(experiment, "compile" | "plot")
}

pub struct Outcome {
    pub tasks: Vec<TaskStatus>,
}

impl Outcome {
    pub fn all_ok(&self) -> bool {
        self.tasks.iter().all(|t| t.ok)
    }
}

fn cfg_err(e: impl ToString) -> CliError {
    CliError::Config(e.to_string())
}

struct Ctx {
    experiment: String,
    params: Params,
    out: OutDir,
    seed: u64,
    patches: Vec<KagomePatch>,
    tasks: Vec<TaskStatus>,
}

impl Ctx {
    fn schemes(&self) -> Result<Vec<Scheme>, CliError> {
        match &self.params.scheme {
            Some(list) => list.iter().map(|s| s.parse::<Scheme>().map_err(cfg_err)).collect(),
            None => Err(cfg_err("no scheme given (--scheme)")),
        }
    }

    fn ps(&self) -> Result<Vec<usize>, CliError> {
        let ps = self
            .params
            .p
            .as_ref()
            .ok_or_else(|| cfg_err("no layer counts given (--p)"))?
            .0
            .clone();
        if ps.contains(&0) {
            return Err(cfg_err("layer counts must be >= 1"));
        }
        Ok(ps)
    }

    fn single<T: Clone>(&self, what: &str, v: &[T]) -> Result<T, CliError> {
        match v {
            [one] => Ok(one.clone()),
            _ => Err(cfg_err(format!("{} takes exactly one {what}", self.experiment))),
        }
    }

    fn init(&self) -> Result<InitStrategy, CliError> {
        self.params
            .init
            .as_deref()
            .map_or(Ok(InitStrategy::RandomUniform), |s| s.parse().map_err(cfg_err))
    }

    fn tying(&self) -> Result<DimerTying, CliError> {
        match self.params.dimer_tying.as_deref() {
            None | Some("shared") => Ok(DimerTying::Shared),
            Some("per_dimer") | Some("per-dimer") => Ok(DimerTying::PerDimer),
            Some(other) => Err(cfg_err(format!("unknown dimer tying '{other}' (shared, per_dimer)"))),
        }
    }

    fn optimiser(&self) -> LbfgsOptions {
        let mut o = LbfgsOptions::default();
        if let Some(m) = self.params.max_iter {
            o.max_iter = m;
        }
        o
    }

    fn pool(&self) -> Result<rayon::ThreadPool, CliError> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(w) = self.params.workers {
            if w == 0 {
                return Err(cfg_err("workers must be >= 1"));
            }
            b = b.num_threads(w);
        }
        b.build().map_err(|e| CliError::Task(e.to_string()))
    }

    fn task<T>(&mut self, name: impl Into<String>, r: Result<T, CliError>) -> Option<T> {
        let name = name.into();
        match r {
            Ok(v) => {
                self.tasks.push(TaskStatus::ok(name));
                Some(v)
            }
            Err(e) => {
                eprintln!("task {name} failed: {e}");
                self.tasks.push(TaskStatus::failed(name, e));
                None
            }
        }
    }
}

fn resolve_patches(params: &Params) -> Result<Vec<KagomePatch>, CliError> {
    let names = params
        .patch
        .as_ref()
        .ok_or_else(|| cfg_err("no patch given (--patch)"))?;
    let cap = if params.allow_large == Some(true) {
        usize::MAX
    } else {
        DEFAULT_QUBIT_CAP
    };
    names
        .iter()
        .map(|n| {
            let patch = build_patch(n).map_err(cfg_err)?;
            if patch.n_sites() > cap {
                return Err(cfg_err(format!(
                    "{n} has {} qubits; pass --allow-large to run patches above {DEFAULT_QUBIT_CAP}",
                    patch.n_sites()
                )));
            }
            Ok(patch)
        })
        .collect()
}

fn out_dir(experiment: &str, params: &Params) -> PathBuf {
    if let Some(o) = &params.out {
        return o.clone();
    }
    if experiment == "plot" {
        if let Some(parent) = params.input.as_deref().and_then(Path::parent) {
            return parent.to_path_buf();
        }
    }
    let root = std::env::var_os(OUT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_ROOT));
    root.join(experiment)
}

/// Validate and execute one experiment.
pub fn run(experiment: &str, params: Params) -> Result<Outcome, CliError> {
    let start = Instant::now();
    if !EXPERIMENTS.contains(&experiment) {
        return Err(cfg_err(format!("unknown experiment '{experiment}'")));
    }
    let unused = config::unused_keys(&params, allowed_keys(experiment));
    if !unused.is_empty() {
        return Err(cfg_err(format!("{experiment} does not use: {}", unused.join(", "))));
    }
    let seed = match (params.seed, needs_seed(experiment)) {
        (Some(s), _) => s,
        (None, false) => 0,
        (None, true) => return Err(cfg_err("a seed is required (--seed)")),
    };
    if experiment == "plot" {
        let input = params.input.clone().ok_or_else(|| cfg_err("plot needs --input"))?;
        let kind = params.kind.clone().ok_or_else(|| cfg_err("plot needs --kind"))?;
        // read first so that a bad input leaves no output behind
        plot::Table::read(&input)?;
        let mut out = OutDir::create(&out_dir(experiment, &params))?;
        let files = plot::plot(&input, &kind, &mut out)?;
        for f in &files {
            println!("{}", out.path(f).display());
        }
        return Ok(Outcome {
            tasks: vec![TaskStatus::ok("plot")],
        });
    }
    let patches = resolve_patches(&params)?;
    let out = OutDir::create(&out_dir(experiment, &params))?;
    let mut ctx = Ctx {
        experiment: experiment.to_string(),
        params,
        out,
        seed,
        patches,
        tasks: Vec::new(),
    };
    match experiment {
        "ed" => run_ed(&mut ctx)?,
        "vqe" => run_vqe_cmd(&mut ctx)?,
        "sweep" => run_sweep(&mut ctx)?,
        "gradstudy" => run_gradstudy(&mut ctx)?,
        "observables" => run_observables(&mut ctx)?,
        "spin-gap" => run_spin_gap(&mut ctx)?,
        "compile" => run_compile(&mut ctx)?,
        _ => unreachable!(),
    }
    let config_json = config::as_json(&ctx.params);
    let canonical = serde_json::to_string(&config_json).expect("config serialises");
    ctx.out.mark("manifest.json");
    let outputs = ctx.out.files().to_vec();
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        experiment,
        config: &config_json,
        config_hash: output::sha256_hex(format!("{experiment}\n{canonical}").as_bytes()),
        patch_hashes: output::patch_hashes(&ctx.patches),
        runtime_s: start.elapsed().as_secs_f64(),
        tasks: &ctx.tasks,
        outputs: &outputs,
    };
    ctx.out.write_json("manifest.json", &manifest)?;
    Ok(Outcome { tasks: ctx.tasks })
}

fn default_sector(n: usize) -> i64 {
    Sector::default_for(n).sz(n).abs()
}

#[derive(Serialize)]
struct EdOutput<'a> {
    #[serde(flatten)]
    report: &'a EigenReport,
    sector: Option<i64>,
    matvecs: usize,
}

fn run_ed(ctx: &mut Ctx) -> Result<(), CliError> {
    let k = ctx.params.k.unwrap_or(2);
    if k == 0 {
        return Err(cfg_err("k must be >= 1"));
    }
    let sector_flag = ctx.params.sector.clone();
    let mut rows = Vec::new();
    for patch in ctx.patches.clone() {
        let sector = match sector_flag.as_deref() {
            Some("all") => None,
            Some(s) => Some(
                s.parse::<i64>()
                    .map_err(|_| cfg_err(format!("sector must be an integer or 'all', got '{s}'")))?,
            ),
            None => Some(default_sector(patch.n_sites())),
        };
        let seed = ctx.seed;
        let result = (|| -> Result<_, CliError> {
            let h = build_hamiltonian(&patch, &TermSubset::All)?;
            let mut opts = LanczosOptions::new(k, seed);
            if let Some(sz) = sector {
                opts = opts.sector(sz);
            }
            Ok(lanczos_lowest(&h, &opts)?)
        })();
        if let Some(sol) = ctx.task(format!("ed {}", patch.name), result) {
            let report = sol.report(&patch.name);
            for (i, (e, r)) in report.energies.iter().zip(&report.residuals).enumerate() {
                rows.push(vec![
                    patch.name.clone(),
                    sector.map_or("all".into(), |s| s.to_string()),
                    i.to_string(),
                    num(*e),
                    num(*r),
                ]);
            }
            println!(
                "{}: E = {:?}, relative gap {}",
                patch.name,
                report.energies,
                report.relative_gap.map_or("n/a".into(), |g| format!("{g:.6}"))
            );
            let body = EdOutput {
                report: &report,
                sector,
                matvecs: sol.matvecs,
            };
            ctx.out.write_json(&format!("eigen_{}.json", patch.name), &body)?;
        }
    }
    ctx.out
        .write_csv("ed.csv", &["patch", "sector", "index", "energy", "residual"], &rows)?;
    Ok(())
}

const RUN_HEADER: &[&str] = &[
    "patch",
    "scheme",
    "p",
    "restart",
    "seed",
    "E_final",
    "rel_energy_err",
    "infidelity",
    "subspace_infidelity",
    "iters",
    "evals",
    "wall_s",
    "n_qubits",
    "n_params",
    "sector",
    "init",
    "E_initial",
    "E0",
    "termination",
];

fn run_row(r: &VqeRunRecord) -> Vec<String> {
    let label = |v: &dyn erased::Label| v.label();
    vec![
        r.patch.clone(),
        r.scheme.as_str().to_string(),
        r.p.to_string(),
        r.restart.to_string(),
        r.seed.to_string(),
        num(r.e_final),
        num(r.rel_energy_err),
        num(r.infidelity),
        num(r.subspace_infidelity),
        r.iterations.to_string(),
        r.evaluations.to_string(),
        num(r.wall_s),
        r.n_qubits.to_string(),
        r.n_params.to_string(),
        label(&r.sector),
        label(&r.init),
        num(r.e_initial),
        num(r.e0),
        label(&r.termination),
    ]
}

mod erased {
    use serde::Serialize;

    /// Serde name of a unit enum variant.
    pub trait Label {
        fn label(&self) -> String;
    }

    impl<T: Serialize> Label for T {
        fn label(&self) -> String {
            match serde_json::to_value(self) {
                Ok(serde_json::Value::String(s)) => s,
                Ok(v) => v.to_string(),
                Err(_) => String::new(),
            }
        }
    }
}

fn record_name(r: &VqeRunRecord) -> String {
    format!("runs/{}_{}_p{}_r{}.json", r.patch, r.scheme.as_str(), r.p, r.restart)
}

/// Write one run record as its own file; files are never rewritten within a run.
fn persist_record(root: &Path, r: &VqeRunRecord) -> std::io::Result<()> {
    let path = root.join(record_name(r));
    std::fs::create_dir_all(path.parent().expect("runs dir"))?;
    let text = serde_json::to_string_pretty(r).map_err(std::io::Error::other)?;
    std::fs::write(path, text + "\n")
}

fn run_vqe_cmd(ctx: &mut Ctx) -> Result<(), CliError> {
    let patch = ctx.single("patch", &ctx.patches.clone())?;
    let scheme = ctx.single("scheme", &ctx.schemes()?)?;
    let p = ctx.single("layer count", &ctx.ps()?)?;
    let sector = match ctx.params.sector.as_deref() {
        Some(s) => Some(s.parse::<Sector>().map_err(cfg_err)?),
        None => None,
    };
    let mut cfg = VqeConfig::new(&patch.name, scheme, p, ctx.seed).restarts(ctx.params.restarts.unwrap_or(1));
    cfg.init = ctx.init()?;
    cfg.ramp_delta = ctx.params.ramp_delta;
    cfg.sector = sector;
    cfg.dimer_tying = ctx.tying()?;
    cfg.optimiser = ctx.optimiser();
    if cfg.restarts == 0 {
        return Err(cfg_err("restarts must be >= 1"));
    }
    let sector = sector.unwrap_or_else(|| Sector::default_for(patch.n_sites()));
    let reference = Reference::compute(&patch, sector, ctx.seed);
    let Some(reference) = ctx.task(format!("reference {}", patch.name), reference.map_err(CliError::from)) else {
        return Ok(());
    };
    let result = run_vqe_with_reference(&cfg, &reference).map_err(CliError::from);
    let Some(outcome) = ctx.task(format!("vqe {} {} p={p}", patch.name, scheme.as_str()), result) else {
        return Ok(());
    };
    let root = ctx.out.root.clone();
    for r in &outcome.records {
        persist_record(&root, r).map_err(|e| output::io_err(&root, e))?;
        ctx.out.mark(&record_name(r));
    }
    let rows: Vec<_> = outcome.records.iter().map(run_row).collect();
    ctx.out.write_csv("vqe.csv", RUN_HEADER, &rows)?;
    let best = outcome.best();
    ctx.out.write_json("best_theta.json", &best.theta_final)?;
    println!(
        "{} {} p={p}: best E = {:.12}, E0 = {:.12}, infidelity {:.3e}",
        patch.name,
        scheme.as_str(),
        best.e_final,
        best.e0,
        best.infidelity
    );
    Ok(())
}

fn run_sweep(ctx: &mut Ctx) -> Result<(), CliError> {
    let names: Vec<&str> = ctx.patches.iter().map(|p| p.name.as_str()).collect();
    let mut cfg = SweepConfig::new(
        &names,
        &ctx.schemes()?,
        &ctx.ps()?,
        ctx.params.restarts.unwrap_or(1),
        ctx.seed,
    );
    if cfg.restarts == 0 {
        return Err(cfg_err("restarts must be >= 1"));
    }
    cfg.init = ctx.init()?;
    cfg.ramp_delta = ctx.params.ramp_delta;
    cfg.optimiser = ctx.optimiser();
    cfg.dimer_tying = ctx.tying()?;
    let thresholds = ctx.params.thresholds.clone().unwrap_or_else(|| vec![0.9, 0.99, 0.999]);
    if thresholds.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(cfg_err("thresholds must lie in [0, 1]"));
    }

    let root = ctx.out.root.clone();
    let log = std::sync::Mutex::new(AppendLog::open(&root.join("progress.log"))?);
    let sink = |r: &VqeRunRecord| {
        if let Err(e) = persist_record(&root, r) {
            eprintln!("cannot write {}: {e}", record_name(r));
        }
        let line = format!(
            "{} {} p={} restart={} infidelity={:.3e} wall_s={:.2}",
            r.patch,
            r.scheme.as_str(),
            r.p,
            r.restart,
            r.infidelity,
            r.wall_s
        );
        eprintln!("{line}");
        let _ = log.lock().expect("log lock").line(&line);
    };
    let report = ctx.pool()?.install(|| sweep(&cfg, &sink)).map_err(CliError::from)?;
    ctx.out.mark("progress.log");
    for r in &report.records {
        ctx.out.mark(&record_name(r));
    }
    for f in &report.failures {
        ctx.tasks.push(TaskStatus::failed(
            format!("sweep {} {} p={}", f.patch, f.scheme.as_str(), f.p),
            &f.error,
        ));
    }
    let mut cells: Vec<(String, Scheme, usize)> = Vec::new();
    for r in &report.records {
        let key = (r.patch.clone(), r.scheme, r.p);
        if !cells.contains(&key) {
            cells.push(key);
        }
    }
    for (patch, scheme, p) in &cells {
        ctx.tasks
            .push(TaskStatus::ok(format!("sweep {patch} {} p={p}", scheme.as_str())));
    }

    let rows: Vec<_> = report.records.iter().map(run_row).collect();
    ctx.out.write_csv("sweep.csv", RUN_HEADER, &rows)?;

    let mut best_rows = Vec::new();
    for (patch, scheme, p) in &cells {
        let best = report
            .records
            .iter()
            .filter(|r| &r.patch == patch && r.scheme == *scheme && r.p == *p)
            .min_by(|a, b| a.infidelity.total_cmp(&b.infidelity))
            .expect("cell has records");
        best_rows.push(vec![
            patch.clone(),
            scheme.as_str().to_string(),
            p.to_string(),
            best.n_qubits.to_string(),
            num(best.infidelity),
            num(best.rel_energy_err),
        ]);
    }
    ctx.out.write_csv(
        "best.csv",
        &["patch", "scheme", "p", "n_qubits", "infidelity", "rel_energy_err"],
        &best_rows,
    )?;

    let table = threshold_table(&report.records, &thresholds);
    let rows: Vec<_> = table
        .iter()
        .map(|t| {
            vec![
                t.patch.clone(),
                t.n_qubits.to_string(),
                t.scheme.as_str().to_string(),
                num(t.threshold),
                opt_num(t.p_required),
            ]
        })
        .collect();
    ctx.out.write_csv(
        "thresholds.csv",
        &["patch", "n_qubits", "scheme", "threshold", "p_required"],
        &rows,
    )?;
    println!(
        "{} runs in {} cells, {} failed cells",
        report.records.len(),
        cells.len(),
        report.failures.len()
    );
    Ok(())
}

fn run_gradstudy(ctx: &mut Ctx) -> Result<(), CliError> {
    let samples = ctx.params.samples.unwrap_or(50);
    if samples < 2 {
        return Err(cfg_err("samples must be >= 2"));
    }
    let cfg = GradStudyConfig {
        patches: ctx.patches.iter().map(|p| p.name.clone()).collect(),
        schemes: ctx.schemes()?,
        ps: ctx.ps()?,
        samples,
        seed: ctx.seed,
        dimer_tying: ctx.tying()?,
    };
    let result = ctx.pool()?.install(|| gradient_study(&cfg)).map_err(CliError::from);
    let Some(cells) = ctx.task("gradstudy", result) else {
        return Ok(());
    };
    let rows: Vec<_> = cells
        .iter()
        .map(|c| {
            vec![
                c.patch.clone(),
                c.scheme.as_str().to_string(),
                c.p.to_string(),
                c.n_qubits.to_string(),
                c.n_params.to_string(),
                c.samples.to_string(),
                num(c.mean_first),
                num(c.var_first),
                num(c.var_first_scaled),
                num(c.mean_norm),
                num(c.mean_norm_scaled),
            ]
        })
        .collect();
    ctx.out.write_csv(
        "gradstudy.csv",
        &[
            "patch",
            "scheme",
            "p",
            "n_qubits",
            "n_params",
            "samples",
            "mean_first",
            "var_first",
            "var_first_scaled",
            "mean_norm",
            "mean_norm_scaled",
        ],
        &rows,
    )?;
    Ok(())
}

#[derive(Serialize)]
struct SourceSummary {
    source: String,
    energy: f64,
    infidelity: Option<f64>,
    sfactor_min: f64,
    sfactor_max: f64,
    energy_estimate: Option<Estimate>,
    shots_per_basis: Option<usize>,
}

fn run_observables(ctx: &mut Ctx) -> Result<(), CliError> {
    let patch = ctx.single("patch", &ctx.patches.clone())?;
    let sector = Sector::default_for(patch.n_sites());
    let points = ctx.params.q_points.unwrap_or(81);
    if points == 0 {
        return Err(cfg_err("q_points must be >= 1"));
    }
    let vqe_cell = match (&ctx.params.scheme, &ctx.params.p) {
        (Some(_), Some(_)) => Some((
            ctx.single("scheme", &ctx.schemes()?)?,
            ctx.single("layer count", &ctx.ps()?)?,
        )),
        (None, None) => None,
        _ => return Err(cfg_err("a VQE state needs both --scheme and --p")),
    };
    let reference = Reference::compute(&patch, sector, ctx.seed).map_err(CliError::from);
    let Some(reference) = ctx.task(format!("reference {}", patch.name), reference) else {
        return Ok(());
    };
    let mut states: Vec<(String, StateVector, Option<f64>)> = vec![("exact".into(), reference.states[0].clone(), None)];
    if let Some((scheme, p)) = vqe_cell {
        let mut cfg = VqeConfig::new(&patch.name, scheme, p, ctx.seed).restarts(ctx.params.restarts.unwrap_or(1));
        cfg.init = ctx.init()?;
        cfg.ramp_delta = ctx.params.ramp_delta;
        cfg.optimiser = ctx.optimiser();
        let result = (|| -> Result<_, CliError> {
            let out = run_vqe_with_reference(&cfg, &reference)?;
            let best = out.best();
            let problem = Problem::new(&patch, scheme, p, sector, DimerTying::Shared)?;
            Ok((problem.state(&best.theta_final)?, best.infidelity))
        })();
        if let Some((psi, inf)) = ctx.task(format!("vqe {} {} p={p}", patch.name, scheme.as_str()), result) {
            states.push((format!("vqe_{}_p{p}", scheme.as_str()), psi, Some(inf)));
        }
    }

    let path: Vec<usize> = patch
        .marked_path()
        .map(<[usize]>::to_vec)
        .unwrap_or_else(|| (0..patch.n_sites()).collect());
    let dimers = dimer_covering(&patch)?.dimers;
    let axis = q_axis(points, 1.2 * ZONE_CORNER);
    let h = build_hamiltonian(&patch, &TermSubset::All)?;
    let mut corr_rows = Vec::new();
    let mut dimer_rows = Vec::new();
    let mut sf_rows = Vec::new();
    let mut summary = Vec::new();
    for (name, psi, inf) in &states {
        for (step, c) in path_correlations(psi, &path)?.iter().enumerate() {
            let (a, b) = (&patch.sites[c.i], &patch.sites[c.j]);
            let dist = ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt();
            corr_rows.push(vec![
                name.clone(),
                step.to_string(),
                c.i.to_string(),
                c.j.to_string(),
                num(dist),
                num(c.value),
                num(c.magnitude(kagome_vqe::observables::Units::Spin)),
            ]);
        }
        for x in 0..dimers.len() {
            for y in (x + 1)..dimers.len() {
                let (a, b) = (dimers[x], dimers[y]);
                let v = dimer_dimer(psi, a, b)?;
                dimer_rows.push(vec![
                    name.clone(),
                    a.0.to_string(),
                    a.1.to_string(),
                    b.0.to_string(),
                    b.1.to_string(),
                    num(v),
                ]);
            }
        }
        let sf = structure_factor(psi, &patch, &axis, &axis)?;
        for (iy, row) in sf.values.iter().enumerate() {
            for (ix, v) in row.iter().enumerate() {
                sf_rows.push(vec![name.clone(), num(sf.qx[ix]), num(sf.qy[iy]), num(*v)]);
            }
        }
        let mut estimate = None;
        if let Some(shots) = ctx.params.shots {
            let post = sector.is_singlet_sector().then_some(sector);
            let est = estimate_energy(psi, &patch, shots, ctx.seed, post)
                .map(|(e, _)| e)
                .map_err(CliError::from);
            estimate = ctx.task(format!("estimate {name}"), est);
        }
        summary.push(SourceSummary {
            source: name.clone(),
            energy: h.expectation(psi)?,
            infidelity: *inf,
            sfactor_min: sf.min(),
            sfactor_max: sf.max(),
            energy_estimate: estimate,
            shots_per_basis: ctx.params.shots,
        });
    }
    ctx.out.write_csv(
        "correlations.csv",
        &["source", "step", "i", "j", "distance", "value", "magnitude_spin"],
        &corr_rows,
    )?;
    ctx.out
        .write_csv("dimers.csv", &["source", "i", "j", "k", "l", "value"], &dimer_rows)?;
    ctx.out
        .write_csv("sfactor.csv", &["source", "qx", "qy", "szq"], &sf_rows)?;
    ctx.out.write_json("observables.json", &summary)?;
    ctx.tasks.push(TaskStatus::ok(format!("observables {}", patch.name)));
    Ok(())
}

#[derive(Serialize)]
struct GapOutput<'a> {
    patch: &'a str,
    #[serde(flatten)]
    gap: &'a SpinGap,
}

fn run_spin_gap(ctx: &mut Ctx) -> Result<(), CliError> {
    let method = ctx.params.method.clone().unwrap_or_else(|| "exact".into());
    let target = ctx.params.fidelity_target.unwrap_or(0.99);
    for patch in ctx.patches.clone() {
        let result = match method.as_str() {
            "exact" => spin_gap_exact(&patch, ctx.seed).map_err(CliError::from),
            "vqe" => {
                let scheme = ctx.single("scheme", &ctx.schemes()?)?;
                let p = ctx.single("layer count", &ctx.ps()?)?;
                spin_gap_vqe(&patch, scheme, p, ctx.params.restarts.unwrap_or(1), ctx.seed, target)
                    .map_err(CliError::from)
            }
            other => return Err(cfg_err(format!("unknown method '{other}' (exact, vqe)"))),
        };
        if let Some(gap) = ctx.task(format!("spin-gap {}", patch.name), result) {
            if !gap.converged {
                eprintln!("warning: {} VQE runs did not reach fidelity {target}", patch.name);
            }
            println!(
                "{}: gap {} (Pauli units), {} (spin units)",
                patch.name,
                num(gap.gap_pauli),
                num(gap.gap_spin)
            );
            ctx.out.write_json(
                &format!("spin_gap_{}.json", patch.name),
                &GapOutput {
                    patch: &patch.name,
                    gap: &gap,
                },
            )?;
        }
    }
    Ok(())
}

fn run_compile(ctx: &mut Ctx) -> Result<(), CliError> {
    let topology = ctx.params.topology.clone().unwrap_or_else(|| "square".into());
    let rounds = ctx.params.rounds.unwrap_or(1);
    let accounting = if ctx.params.native == Some(true) {
        GateAccounting::Native
    } else {
        GateAccounting::Logical
    };
    for patch in ctx.patches.clone() {
        let result = match topology.as_str() {
            "square" => embed_square(&patch).map(|e| {
                let stats = depth_report(&e.rounds, rounds, accounting);
                (serde_json::to_value(&e).expect("embedding serialises"), stats)
            }),
            "all-to-all" | "all_to_all" => schedule_all_to_all(&patch).map(|s| {
                let stats = depth_report(&s, rounds, accounting);
                (serde_json::to_value(&s).expect("schedule serialises"), stats)
            }),
            other => return Err(cfg_err(format!("unknown topology '{other}' (square, all-to-all)"))),
        };
        if let Some((schedule, stats)) = ctx.task(
            format!("compile {} {topology}", patch.name),
            result.map_err(CliError::from),
        ) {
            println!("{} on {topology}\n{stats}\n", patch.name);
            ctx.out
                .write_json(&format!("schedule_{}_{topology}.json", patch.name), &schedule)?;
            ctx.out
                .write_json(&format!("depth_{}_{topology}.json", patch.name), &stats)?;
        }
    }
    Ok(())
}
