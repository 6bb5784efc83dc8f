//! One PASS/FAIL line per acceptance criterion. Runs without the libtest
//! harness so the lines are always printed; exits non-zero if any fail.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use gradsync::cli::execute;
use gradsync::engine::{
    self, build_wait_chain_scenario, validate, wait_chain_length, DriftSpec, PresetSpec, RunConfig,
    ScheduleSpec,
};
use gradsync::metrics::{self, monotonicity_violations};
use gradsync::oracle::{compare, oracle_run};
use gradsync::protocol::Variant;
use gradsync::topology::TopologySpec;
use gradsync::Trace;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

const TOL: f64 = 1e-9;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn seeded_runs() -> Vec<RunConfig> {
    let topologies = [
        TopologySpec::Chain { n: 17 },
        TopologySpec::Ring { n: 16 },
        TopologySpec::Grid { rows: 5, cols: 5 },
        TopologySpec::RandomGeometric {
            n: 50,
            radius: 0.35,
            seed: 0,
            max_attempts: 100,
        },
    ];
    let rhos = [0.0, 0.1, 0.3];
    (0..100u64)
        .map(|k| {
            let mut topology = topologies[k as usize % 4].clone();
            if let TopologySpec::RandomGeometric { seed, .. } = &mut topology {
                *seed = k;
            }
            RunConfig {
                topology,
                rho_hat: rhos[(k as usize / 4) % 3],
                d: 1.0,
                c: 1.0,
                d_known: None,
                horizon: None,
                initiators: vec![0],
                drift: if k % 5 == 0 {
                    DriftSpec::AdversarialExtreme { fast: vec![0] }
                } else {
                    DriftSpec::PiecewiseRandom { dwell: 2.0 }
                },
                schedule: if k % 2 == 0 {
                    ScheduleSpec::Periodic { phase: None }
                } else {
                    ScheduleSpec::RandomUniform { g_min: None }
                },
                variant: Variant::Gradient,
                seed: k,
                process_on_start: true,
                warmup: None,
                scenario: None,
                fault: None,
            }
        })
        .collect()
}

fn rate_domain(trace: &Trace) -> Result<(), String> {
    let cfg = &trace.config;
    let dk = f64::from(cfg.d_known.unwrap());
    let lo = (1.0 - cfg.rho_hat) / dk - TOL;
    let hi = 1.0 + cfg.rho_hat + TOL;
    for k in 0..trace.sample_count() - 1 {
        let dt = trace.times[k + 1] - trace.times[k];
        for i in 0..trace.node_count {
            let (Some(r), Some(a), Some(b)) = (
                trace.rate(k, i),
                trace.logical(k, i),
                trace.logical_before(k + 1, i),
            ) else {
                continue;
            };
            if r < lo || r > hi {
                return Err(format!("node {i} rate {r} at t = {}", trace.times[k]));
            }
            if (b - (a + r * dt)).abs() > TOL {
                return Err(format!(
                    "node {i} slope disagrees with rate at t = {}",
                    trace.times[k]
                ));
            }
        }
    }
    if let Some((t, i, drop)) = monotonicity_violations(trace).first() {
        return Err(format!("node {i} drops by {drop} at t = {t}"));
    }
    Ok(())
}

fn model_assumptions(trace: &Trace) -> Result<(), String> {
    let horizon = *trace.times.last().unwrap();
    let d = trace.config.d;
    let mut sends: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    for e in &trace.events {
        if trace.sample_at(e.time).is_none() {
            return Err(format!("event at {} has no sample", e.time));
        }
        sends.entry((e.from, e.to)).or_default().push(e.time);
    }
    let edges = 2 * trace.config.topology.build().unwrap().edges().len();
    if sends.len() != edges {
        return Err(format!(
            "{} of {edges} directed edges carry messages",
            sends.len()
        ));
    }
    for ((u, v), times) in &sends {
        let mut prev = 0.0;
        for &t in times.iter().chain(std::iter::once(&horizon)) {
            if t - prev > d {
                return Err(format!("edge {u}->{v}: gap {} after {prev}", t - prev));
            }
            prev = t;
        }
    }
    Ok(())
}

fn criteria_1_to_3() -> [Outcome; 3] {
    let start = Instant::now();
    let mut first_fail: [Option<String>; 3] = [None, None, None];
    let mut worst_global_margin = f64::INFINITY;
    let runs = seeded_runs();
    for config in &runs {
        let prepared = engine::prepare(config).unwrap();
        let trace = engine::simulate(&prepared).unwrap();
        let label = format!(
            "{:?} rho_hat {} seed {}",
            config.topology, config.rho_hat, config.seed
        );
        if let Err(e) = rate_domain(&trace) {
            first_fail[0].get_or_insert(format!("{label}: {e}"));
        }
        if let Err(e) = model_assumptions(&trace) {
            first_fail[1].get_or_insert(format!("{label}: {e}"));
        }
        let bound = metrics::global_bound(&trace.config, prepared.d_known());
        let g = metrics::global_skew(&trace).value;
        worst_global_margin = worst_global_margin.min(bound - g);
        if g > bound + TOL {
            first_fail[2].get_or_insert(format!("{label}: skew {g} > {bound}"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let [a, b, c] = first_fail;
    [
        outcome(
            a.is_none() && secs < 60.0,
            a.unwrap_or(format!(
                "{} runs monotone, rates in range ({secs:.1}s)",
                runs.len()
            )),
        ),
        outcome(
            b.is_none(),
            b.unwrap_or("every reception at its send time, every gap <= d".into()),
        ),
        outcome(
            c.is_none(),
            c.unwrap_or(format!(
                "smallest margin to (1+rho_hat)Dd: {worst_global_margin:.4}"
            )),
        ),
    ]
}

fn wait_chain_neighbor_skew(diameter: u32, variant: Variant) -> f64 {
    let mut c = build_wait_chain_scenario(diameter, 0.1, 1.0, 1.0).unwrap();
    c.variant = variant;
    execute(&c).unwrap().summary.report.neighbor_skew()
}

fn criterion_4() -> Outcome {
    let bound = 1.0 + 1.3;
    let skews: Vec<f64> = [8, 16, 32]
        .iter()
        .map(|&d| wait_chain_neighbor_skew(d, Variant::Gradient))
        .collect();
    outcome(
        skews.iter().all(|&s| s <= bound + TOL),
        format!("neighbor skew at D = 8, 16, 32: {skews:.4?} (bound {bound})"),
    )
}

fn criterion_5() -> Outcome {
    let ds = [8, 16, 32, 64];
    let grad: Vec<f64> = ds
        .iter()
        .map(|&d| wait_chain_neighbor_skew(d, Variant::Gradient))
        .collect();
    let flat: Vec<f64> = ds
        .iter()
        .map(|&d| wait_chain_neighbor_skew(d, Variant::NoSlowdown))
        .collect();
    let spread = grad.iter().copied().fold(f64::MIN, f64::max)
        / grad.iter().copied().fold(f64::MAX, f64::min);
    let growth = flat[3] / flat[0];
    outcome(
        spread <= 1.25 && growth >= 4.0,
        format!(
            "gradient {grad:.4?} spread {spread:.3}; no_slowdown {flat:.4?} growth {growth:.2}"
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut checked = 0;
    while checked < 1000 {
        let rho_hat = rng.gen_range(0.0..0.99);
        let d = rng.gen_range(0.01..100.0);
        let c = if checked % 10 == 0 {
            (1.0 + rho_hat) * d + rng.gen_range(0.0..TOL)
        } else {
            rng.gen_range(0.0..=1.0) * (1.0 + rho_hat) * d
        };
        let diameter = rng.gen_range(1..=200u32);
        let config = RunConfig {
            topology: TopologySpec::Chain {
                n: diameter as usize + 1,
            },
            rho_hat,
            d,
            c,
            d_known: None,
            horizon: Some(d),
            initiators: vec![0],
            drift: DriftSpec::default(),
            schedule: ScheduleSpec::default(),
            variant: Variant::Gradient,
            seed: 0,
            process_on_start: true,
            warmup: None,
            scenario: None,
            fault: None,
        };
        if !validate(&config).is_empty() {
            continue;
        }
        checked += 1;
        let l = wait_chain_length(diameter, rho_hat, d, c);
        if l != f64::from(diameter) {
            return outcome(
                false,
                format!("D {diameter} rho_hat {rho_hat} d {d} c {c}: {l}"),
            );
        }
    }
    outcome(true, format!("{checked} validated triples give exactly D"))
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let dt = 1e-3;
    let mut lines = Vec::new();
    let mut pass = true;
    for (name, size) in [
        ("wait_chain", 4),
        ("startup_chain", 4),
        ("random_geometric", 5),
    ] {
        let config = PresetSpec {
            size: Some(size),
            horizon: Some(50.0),
            ..PresetSpec::named(name)
        }
        .build()
        .unwrap();
        let bound = 2.0 * (1.0 + config.rho_hat) * dt;
        let e = engine::run(&config).unwrap();
        let o = oracle_run(&config, dt).unwrap();
        let cmp = compare(&e, &o, bound).unwrap();
        pass &= cmp.agrees() && e.node_count <= 5;
        lines.push(format!("{name} {:.1e}", cmp.max_deviation));
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        pass && secs < 60.0,
        format!(
            "max deviation {} (bound 2.2e-3, {secs:.1}s)",
            lines.join(", ")
        ),
    )
}

fn hash_outputs(dir: &Path) -> Vec<u8> {
    let mut h = Sha256::new();
    for f in ["trace.csv", "summary.json"] {
        h.update(std::fs::read(dir.join(f)).unwrap());
    }
    h.finalize().to_vec()
}

fn criterion_8() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let mut hashes = Vec::new();
    for run in ["a", "b"] {
        let out = tmp.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_gradsync"))
            .args([
                "run",
                "--preset",
                "random_geometric",
                "--size",
                "30",
                "--seed",
                "17",
                "--out",
            ])
            .arg(&out)
            .output()
            .unwrap();
        if !status.status.success() {
            return outcome(false, format!("run {run} exited with {}", status.status));
        }
        hashes.push(hash_outputs(&out));
    }
    let hex: String = hashes[0]
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect();
    outcome(
        hashes[0] == hashes[1],
        format!("two invocations hash to {hex}..."),
    )
}

fn criterion_9() -> Outcome {
    let mut detail = Vec::new();
    for (diameter, drift) in [
        (8u32, DriftSpec::AdversarialExtreme { fast: vec![0] }),
        (16, DriftSpec::PiecewiseRandom { dwell: 3.0 }),
        (33, DriftSpec::AdversarialExtreme { fast: vec![0] }),
    ] {
        let config = RunConfig {
            drift,
            seed: u64::from(diameter),
            ..PresetSpec {
                size: Some(diameter),
                ..PresetSpec::named("startup_chain")
            }
            .build()
            .unwrap()
        };
        let trace = engine::run(&config).unwrap();
        let dd = f64::from(diameter);
        let last = trace.start_times[diameter as usize];
        let Some(k) = last.and_then(|t| trace.sample_at(t)) else {
            return outcome(false, format!("D {diameter}: last node never started"));
        };
        let l0 = trace.logical(k, 0).unwrap();
        let bound = (1.0 + config.rho_hat) * dd * config.d;
        if (last.unwrap() - dd * config.d).abs() > TOL || l0 > bound + TOL {
            return outcome(
                false,
                format!("D {diameter}: start {last:?}, initiator at {l0}"),
            );
        }
        detail.push(format!("D {diameter}: L_0 = {l0:.3} <= {bound:.1}"));
    }
    outcome(
        true,
        format!("last node starts at D*d; {}", detail.join(", ")),
    )
}

fn main() {
    let [c1, c2, c3] = criteria_1_to_3();
    let results = [
        ("monotonicity and rate domain", c1),
        ("model assumptions", c2),
        ("global skew bound", c3),
        ("wait-chain neighbor skew bound", criterion_4()),
        ("O(1) vs O(D) separation", criterion_5()),
        ("chain length equals D", criterion_6()),
        ("oracle equivalence", criterion_7()),
        ("determinism", criterion_8()),
        ("start-up propagation", criterion_9()),
    ];
    let mut failed = 0;
    for (k, (name, o)) in results.iter().enumerate() {
        println!(
            "criterion {} {}: {} - {}",
            k + 1,
            if o.pass { "PASS" } else { "FAIL" },
            name,
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
