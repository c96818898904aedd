//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Set `KAGOME_SKIP_LONG=1` to skip the 24-qubit eigensolver check
//! (criterion 4); it is then reported as SKIP.

mod common;

use std::time::Instant;

use kagome_vqe::ansatz::{DimerTying, Scheme, Sector};
use kagome_vqe::embed::{apply_direct_round, depth_report, embed_square, schedule_all_to_all, GateAccounting};
use kagome_vqe::exactdiag::{build_hamiltonian, lanczos_lowest, LanczosOptions, TermSubset};
use kagome_vqe::lattice::build_patch;
use kagome_vqe::observables::{default_q_grid, dimer_protocol_samples, estimate_energy, spin_spin, structure_factor};
use kagome_vqe::statevec::StateVector;
use kagome_vqe::vqe::{best_by_p, run_vqe, sweep, Problem, Reference, SweepConfig, VqeConfig, VqeRunRecord};
use kagome_vqe::Result;

use common::*;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn sci(v: &[(usize, f64)]) -> String {
    v.iter()
        .map(|(p, x)| format!("p{p}={x:.2e}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn c1_exact_representation() -> Result<Outcome> {
    let t = Instant::now();
    let out = run_vqe(&VqeConfig::new("2x4", Scheme::PerEdge, 5, 11).restarts(10))?;
    let best = out.best_infidelity();
    let secs = t.elapsed().as_secs_f64();
    Ok(verdict(
        best <= 1e-12 && secs < 300.0,
        format!("2x4 per_edge p=5 best-of-10 infidelity {best:.3e} (<= 1e-12), {secs:.1}s (< 300s)"),
    ))
}

fn log_fit(best: &[(usize, f64)]) -> (f64, f64) {
    let x: Vec<f64> = best.iter().map(|&(p, _)| p as f64).collect();
    let y: Vec<f64> = best.iter().map(|&(_, f)| f.max(f64::MIN_POSITIVE).ln()).collect();
    let (slope, _, r2) = linear_fit(&x, &y);
    (slope, r2)
}

fn c2_exponential_decay(r2x4: &[VqeRunRecord], r2x6: &[VqeRunRecord]) -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, records) in [("2x4", r2x4), ("2x6", r2x6)] {
        let best = best_by_p(records, name, Scheme::PerEdge);
        let (slope, r2) = log_fit(&best);
        ok &= best.len() == 8 && slope < 0.0 && r2 >= 0.9;
        detail.push(format!("{name}: slope {slope:.3}, R^2 {r2:.3} [{}]", sci(&best)));
    }
    verdict(
        ok,
        format!(
            "per_edge log-infidelity vs p=1..8, need slope < 0 and R^2 >= 0.9; {}",
            detail.join("; ")
        ),
    )
}

fn c3_scheme_ordering(records: &[VqeRunRecord]) -> Outcome {
    let best = |s| best_by_p(records, "2x6", s);
    let (pe, pec, ph, ii) = (
        best(Scheme::PerEdge),
        best(Scheme::PerEdgeColor),
        best(Scheme::PerHamiltonian),
        best(Scheme::PerEdgeColorII),
    );
    let mut violations = Vec::new();
    for i in 0..pe.len() {
        let p = pe[i].0;
        let (a, b, c, d) = (pe[i].1, pec[i].1, ph[i].1, ii[i].1);
        if a > 2.0 * b {
            violations.push(format!("p={p}: per_edge {a:.2e} > 2 x per_edge_color {b:.2e}"));
        }
        if b > 2.0 * c {
            violations.push(format!("p={p}: per_edge_color {b:.2e} > 2 x per_hamiltonian {c:.2e}"));
        }
        let worst_other = a.max(b).max(c);
        if 2.0 * d < worst_other {
            violations.push(format!(
                "p={p}: per_edge_color_ii {d:.2e} < worst other / 2 ({worst_other:.2e})"
            ));
        }
    }
    let table = format!(
        "per_edge [{}]; per_edge_color [{}]; per_hamiltonian [{}]; per_edge_color_ii [{}]",
        sci(&pe),
        sci(&pec),
        sci(&ph),
        sci(&ii)
    );
    if violations.is_empty() {
        Outcome::Pass(format!("2x6 ordering holds with factor-2 tolerance; {table}"))
    } else {
        Outcome::Fail(format!("{}; {table}", violations.join("; ")))
    }
}

fn c4_near_degeneracy() -> Result<Outcome> {
    if std::env::var("KAGOME_SKIP_LONG").is_ok_and(|v| v == "1") {
        return Ok(Outcome::Skip("3x8 Lanczos skipped by KAGOME_SKIP_LONG=1".into()));
    }
    let t = Instant::now();
    let patch = build_patch("3x8")?;
    let h = build_hamiltonian(&patch, &TermSubset::All)?;
    let sol = lanczos_lowest(&h, &LanczosOptions::new(2, 1).sector(0))?;
    let rel = sol.relative_gap().unwrap_or(f64::NAN);
    let ok = (rel - 0.0008).abs() <= 0.2 * 0.0008;
    Ok(verdict(
        ok,
        format!(
            "3x8 E0 {:.8}, E1 {:.8}, (E1-E0)/|E0| = {rel:.6} (0.0008 +- 20%), {:.0}s",
            sol.eigenvalues[0],
            sol.eigenvalues[1],
            t.elapsed().as_secs_f64()
        ),
    ))
}

fn c5_gradient_oracle() -> Result<Outcome> {
    // Relative error against the finite-difference value, with components
    // below 1e-2 in magnitude compared on an absolute 1e-2 scale.
    let mut worst: f64 = 0.0;
    let mut checks = 0;
    let mut rng = rng(5);
    for name in ["2x4", "2x6"] {
        let patch = build_patch(name)?;
        for scheme in Scheme::ALL {
            for p in 1..=3 {
                let problem = Problem::new(&patch, scheme, p, Sector::Sz0, DimerTying::Shared)?;
                for _ in 0..20 {
                    let theta = uniform(
                        &mut rng,
                        problem.spec.n_params(),
                        -std::f64::consts::PI,
                        std::f64::consts::PI,
                    );
                    let (_, analytic) = problem.energy_and_gradient(&theta)?;
                    let fd = richardson_gradient(|x| problem.energy(x).unwrap(), &theta, 1e-4);
                    for (a, f) in analytic.iter().zip(&fd) {
                        worst = worst.max((a - f).abs() / f.abs().max(1e-2));
                    }
                    checks += 1;
                }
            }
        }
    }
    Ok(verdict(
        worst < 1e-6,
        format!(
            "{checks} gradients (20 points x 4 schemes x 2 patches x p=1..3), max relative error {worst:.2e} (< 1e-6)"
        ),
    ))
}

fn c6_eigensolver_oracle() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for name in ["edge", "triangle", "1x6", "2x3", "2x4", "2x5", "3x3", "2x6", "3x4"] {
        let patch = build_patch(name)?;
        let exact = block_spectrum(patch.n_sites(), &patch.edges);
        let h = build_hamiltonian(&patch, &TermSubset::All)?;
        for k in 1..=4.min(exact.len()) {
            let sol = lanczos_lowest(&h, &LanczosOptions::new(k, 7))?;
            for (a, b) in sol.eigenvalues.iter().zip(&exact) {
                worst = worst.max((a - b).abs());
            }
            cases += 1;
        }
    }
    let tri = build_hamiltonian(&build_patch("triangle")?, &TermSubset::All)?;
    let sol = lanczos_lowest(&tri, &LanczosOptions::new(4, 3))?;
    let tri_ok = sol.eigenvalues.iter().all(|e| (e + 3.0).abs() < 1e-10);
    Ok(verdict(
        worst < 1e-10 && tri_ok,
        format!(
            "{cases} (patch, k) cases up to 12 qubits, max |lanczos - dense| {worst:.2e} (< 1e-10); triangle lowest 4 = {:?}",
            sol.eigenvalues.iter().map(|e| format!("{e:.12}")).collect::<Vec<_>>()
        ),
    ))
}

fn c7_symmetry() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut discarded = 0;
    let mut circuits = 0;
    let mut rng = rng(7);
    for name in ["edge", "2x4", "2x6"] {
        let patch = build_patch(name)?;
        let n = patch.n_sites();
        for i in 0..200 {
            let scheme = Scheme::ALL[i % 4];
            let p = 1 + i % 3;
            let problem = Problem::new(&patch, scheme, p, Sector::Sz0, DimerTying::Shared)?;
            let theta = uniform(
                &mut rng,
                problem.spec.n_params(),
                -std::f64::consts::PI,
                std::f64::consts::PI,
            );
            let psi = problem.state(&theta)?;
            for op in [total_x, total_y, total_z] {
                worst = worst.max(norm(&op(psi.amplitudes(), n)));
            }
            if i % 20 == 0 {
                let (_, batches) = estimate_energy(&psi, &patch, 2000, i as u64, Some(Sector::Sz0))?;
                discarded += batches.iter().map(|b| b.discarded).sum::<usize>();
            }
            circuits += 1;
        }
    }
    Ok(verdict(
        worst < 1e-10 && discarded == 0,
        format!("{circuits} random circuits, max |S^a psi| {worst:.2e} (< 1e-10), shots discarded by post-selection {discarded}"),
    ))
}

const MAX_SIMULATED: usize = 24;

fn c8_schedules() -> Result<Outcome> {
    let names = [
        "2x4", "2x6", "2x8", "3x6", "2x10", "3x8", "1x4", "1x7", "2x3", "2x5", "2x7", "3x4", "3x5", "4x4", "4x5", "5x5",
    ];
    let mut problems = Vec::new();
    let mut worst: f64 = 0.0;
    let mut simulated = 0;
    let mut rng = rng(8);
    for name in names {
        let patch = build_patch(name)?;
        let emb = embed_square(&patch)?;
        let r = &emb.rounds;
        let identity: Vec<usize> = (0..patch.n_sites()).collect();
        if r.n_layers() > 7 || !r.layers_disjoint() || !r.covers_exactly(&patch) || r.net_permutation() != identity {
            problems.push(format!("{name}: square round invalid"));
        }
        if !emb.nearest_neighbour() {
            problems.push(format!("{name}: gate on non-adjacent qubits"));
        }
        let all = schedule_all_to_all(&patch)?;
        if all.n_layers() > 4 || !all.layers_disjoint() || !all.covers_exactly(&patch) || all.n_swaps() > 0 {
            problems.push(format!("{name}: all-to-all round invalid"));
        }
        // 5x5 is beyond the state-vector limit; its schedule is checked structurally
        if patch.n_sites() > MAX_SIMULATED {
            continue;
        }
        simulated += 1;
        let amps = random_amplitudes(&mut rng, 1 << patch.n_sites());
        let mut a = StateVector::from_amplitudes(amps)?;
        let mut b = a.clone();
        let angle = rand::Rng::gen_range(&mut rng, -1.5..1.5);
        r.simulate(&mut a, angle)?;
        apply_direct_round(&patch, &mut b, angle)?;
        worst = worst.max(1.0 - a.fidelity(&b)?);
    }
    let two_by_four = embed_square(&build_patch("2x4")?)?;
    let depth = depth_report(&two_by_four.rounds, 25, GateAccounting::Logical).total_depth;
    if depth != 175 {
        problems.push(format!("2x4 depth over 25 rounds is {depth}"));
    }
    let detail = format!(
        "{} patches checked, {simulated} simulated, max 1 - F(schedule, direct) {worst:.2e} (< 1e-12)",
        names.len()
    );
    if worst < 1e-12 && problems.is_empty() {
        Ok(Outcome::Pass(detail))
    } else {
        Ok(Outcome::Fail(format!("{detail}; {}", problems.join("; "))))
    }
}

fn c9_estimator() -> Result<Outcome> {
    let patch = build_patch("2x4")?;
    let reference = Reference::compute(&patch, Sector::Sz0, 9)?;
    let e0 = reference.e0();
    let gs = &reference.states[0];
    let oracle_e0 = block_spectrum(8, &patch.edges)[0];
    let mut within = 0;
    for rep in 0..100 {
        let (est, _) = estimate_energy(gs, &patch, 100_000, 1000 + rep, None)?;
        if (est.value - e0).abs() <= 3.0 * est.std_error {
            within += 1;
        }
    }
    let mut singlet = StateVector::basis(2, 0)?;
    singlet.apply_singlet_prep(0, 1)?;
    let samples = dimer_protocol_samples(&singlet, &[(0, 1)], 100_000, 9)?;
    let all_down = samples.iter().all(|s| s[0] == -3.0);
    Ok(verdict(
        within >= 95 && all_down && (e0 - oracle_e0).abs() < 1e-10,
        format!("{within}/100 estimates within 3 SE of E0 = {e0:.10} (>= 95); singlet unprep gives down-down in all 100000 shots: {all_down}"),
    ))
}

fn c10_observables(records: &[VqeRunRecord]) -> Result<Outcome> {
    let patch = build_patch("2x6")?;
    let best = records
        .iter()
        .filter(|r| r.scheme == Scheme::PerEdge && r.p == 8)
        .min_by(|a, b| a.e_final.total_cmp(&b.e_final))
        .expect("p=8 per_edge record");
    let problem = Problem::new(&patch, Scheme::PerEdge, 8, Sector::Sz0, DimerTying::Shared)?;
    let psi = problem.state(&best.theta_final)?;
    let reference = Reference::compute(&patch, Sector::Sz0, 10)?;
    let exact = &reference.states[0];
    let path = patch.marked_path().expect("2x6 path");
    let pairs: Vec<_> = path.iter().map(|&j| (path[0], j)).collect();
    let cv = spin_spin(&psi, &pairs)?;
    let ce = spin_spin(exact, &pairs)?;
    let corr_dev = cv
        .iter()
        .zip(&ce)
        .fold(0.0f64, |m, (a, b)| m.max((a.value - b.value).abs()));
    let (qx, qy) = default_q_grid();
    let sv = structure_factor(&psi, &patch, &qx, &qy)?;
    let se = structure_factor(exact, &patch, &qx, &qy)?;
    let sf_dev = sv.max_abs_diff(&se);
    let peak = se.max();
    Ok(verdict(
        corr_dev < 0.01 && sf_dev < 0.05 * peak,
        format!(
            "2x6 per_edge p=8 (infidelity {:.2e}): path correlation max deviation {corr_dev:.2e} (< 0.01); structure factor max deviation {sf_dev:.3e} vs 5% of peak {:.3e}",
            best.infidelity,
            0.05 * peak
        ),
    ))
}

fn report(n: usize, title: &str, outcome: Result<Outcome>) -> bool {
    let (tag, detail, ok) = match outcome {
        Ok(Outcome::Pass(d)) => ("PASS", d, true),
        Ok(Outcome::Fail(d)) => ("FAIL", d, false),
        Ok(Outcome::Skip(d)) => ("SKIP", d, true),
        Err(e) => ("FAIL", format!("error: {e}"), false),
    };
    println!("criterion {n:>2} {tag} {title}: {detail}");
    ok
}

fn main() {
    let start = Instant::now();
    let mut ok = true;
    ok &= report(1, "2x4 exact representation", c1_exact_representation());
    ok &= report(5, "gradient oracle", c5_gradient_oracle());
    ok &= report(6, "eigensolver oracle", c6_eigensolver_oracle());
    ok &= report(7, "symmetry suite", c7_symmetry());
    ok &= report(8, "schedule suite", c8_schedules());
    ok &= report(9, "estimator suite", c9_estimator());

    let all_ps: Vec<usize> = (1..=8).collect();
    let t = Instant::now();
    let s2x4 = sweep(
        &SweepConfig::new(&["2x4"], &[Scheme::PerEdge], &all_ps, 10, 21),
        &|_| {},
    );
    let s2x6 = sweep(&SweepConfig::new(&["2x6"], &Scheme::ALL, &all_ps, 4, 22), &|_| {});
    let sweep_secs = t.elapsed().as_secs_f64();
    match (s2x4, s2x6) {
        (Ok(a), Ok(b)) if a.failures.is_empty() && b.failures.is_empty() => {
            let mut c2 = c2_exponential_decay(&a.records, &b.records);
            if let Outcome::Pass(d) | Outcome::Fail(d) = &mut c2 {
                d.push_str(&format!("; sweeps took {sweep_secs:.0}s (< 3600s)"));
            }
            if sweep_secs >= 3600.0 {
                c2 = Outcome::Fail("sweeps exceeded one hour".into());
            }
            ok &= report(2, "exponential decay", Ok(c2));
            ok &= report(3, "scheme ordering", Ok(c3_scheme_ordering(&b.records)));
            ok &= report(10, "observable fidelity", c10_observables(&b.records));
        }
        (a, b) => {
            let msg = format!("sweep failed: {:?} {:?}", a.err(), b.err());
            for (n, title) in [
                (2, "exponential decay"),
                (3, "scheme ordering"),
                (10, "observable fidelity"),
            ] {
                ok &= report(n, title, Ok(Outcome::Fail(msg.clone())));
            }
        }
    }
    ok &= report(4, "3x8 near-degeneracy", c4_near_degeneracy());
    println!("acceptance finished in {:.0}s", start.elapsed().as_secs_f64());
    if !ok {
        std::process::exit(1);
    }
}
