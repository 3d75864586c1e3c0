//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line per
//! criterion and exits non-zero if any failed.
//!
//! `LARE_ACCEPTANCE_ONLY=3,7` restricts the run to the listed criteria.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use lare_cli::config::{load_experiment, load_theory, ExperimentConfig};
use lare_cli::metrics::{correlation_report, execution_rate};
use lare_cli::oracle::oracle_source;
use lare_cli::run::{run_experiment, task_spec, RunSummary};
use lare_cli::run_theory;
use lare_core::{ActionValue, Mlp64, Observation, SeededRng, Step, Trajectory};
use lare_decomp::{closed_form_ls, rd_objective, subset_objective, DecompKind, DecompositionModel};
use lare_envs::{probe_set, run_episode, ArenaConfig, ParticleEnv, ProbeConfig, ReturnMode, TabularInstance};
use lare_llm::{derive_latent_reward_fn, DeriveOptions, MockBackend, RoleTemplate};
use lare_lrdsl::parse_program;
use lare_theory::{
    concentration_experiment, growth_exponent, optimistic_regret_experiment, BoundParams, ConcentrationConfig,
    Featurization,
};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn config(name: &str) -> ExperimentConfig {
    load_experiment(&repo().join("configs").join(name)).expect("shipped config loads")
}

fn run_into(mut cfg: ExperimentConfig, out: &Path) -> RunSummary {
    cfg.output_dir = out.to_path_buf();
    run_experiment(&cfg).unwrap_or_else(|e| panic!("{e}"))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Standard error of the mean.
fn sem(v: &[f64]) -> f64 {
    let m = mean(v);
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0);
    (var / v.len() as f64).sqrt()
}

fn random_episode(env: &mut ParticleEnv, rng: &mut SeededRng) -> Trajectory {
    let na = env.n_actions();
    run_episode(env, rng, ReturnMode::Sum, |obs, rng| {
        obs.iter().map(|_| ActionValue::DiscreteIndex(rng.index(na))).collect()
    })
    .unwrap()
}

/// Gauss-Jordan inverse with partial pivoting.
fn naive_inverse(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| f64::from(u8::from(i == j))));
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        let piv = a[c][c];
        a[c].iter_mut().for_each(|v| *v /= piv);
        for r in 0..n {
            if r != c {
                let f = a[r][c];
                let src = a[c].clone();
                a[r].iter_mut().zip(&src).for_each(|(v, s)| *v -= f * s);
            }
        }
    }
    a.into_iter().map(|r| r[n..].to_vec()).collect()
}

fn c1_least_squares() -> Outcome {
    let mut rng = SeededRng::new(1);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let k = 1 + rng.index(50);
        let d = 1 + rng.index(8);
        let h: Vec<Vec<f64>> = (0..k).map(|_| (0..d).map(|_| rng.index(6) as f64).collect()).collect();
        let r: Vec<f64> = (0..k).map(|_| rng.normal() * 3.0).collect();
        let lambda = 0.1 + rng.uniform() * 5.0;
        let mut a = vec![vec![0.0; d]; d];
        let mut b = vec![0.0; d];
        for (row, ret) in h.iter().zip(&r) {
            for i in 0..d {
                b[i] += row[i] * ret;
                for j in 0..d {
                    a[i][j] += row[i] * row[j];
                }
            }
        }
        for (i, row) in a.iter_mut().enumerate() {
            row[i] += lambda;
        }
        let want: Vec<f64> = naive_inverse(&a)
            .iter()
            .map(|row| row.iter().zip(&b).map(|(x, y)| x * y).sum())
            .collect();
        let got = closed_form_ls(&h, &r, lambda, d).map_err(|e| e.to_string())?.r_hat;
        for (g, w) in got.iter().zip(&want) {
            worst = worst.max((g - w).abs());
        }
    }
    check(worst <= 1e-8, format!("max |Δ| = {worst:.2e} over 100 instances"))
}

fn c2_concentration() -> Outcome {
    let inst = TabularInstance::reference_concentration();
    let cfg = ConcentrationConfig {
        params: BoundParams::for_horizon(inst.horizon, 0.1),
        episodes: 200,
        n_seeds: 1000,
        featurization: Featurization::Latent,
    };
    let res = concentration_experiment(&inst, &cfg, &SeededRng::new(2)).map_err(|e| e.to_string())?;
    let max_ratio = res.radius_ratio.iter().copied().fold(0.0, f64::max);
    check(
        res.violation_rate <= 0.01 && max_ratio < 1.0,
        format!(
            "violation rate {:.4} (≤ 0.01), max ‖·‖/l {:.3}, max l^φ/l {:.3}",
            res.violation_rate, res.max_norm_ratio, max_ratio
        ),
    )
}

fn c3_regret() -> Outcome {
    let inst = TabularInstance::reference_regret();
    let p = BoundParams::for_horizon(inst.horizon, 0.1);
    let rng = SeededRng::new(3);
    let run = |f| optimistic_regret_experiment(&inst, &p, 500, f, 50, &rng).map_err(|e| e.to_string());
    let (lat, raw) = (run(Featurization::Latent)?, run(Featurization::Raw)?);
    let (el, er) = (
        growth_exponent(&lat.mean_curve(), 100, 500),
        growth_exponent(&raw.mean_curve(), 100, 500),
    );
    check(
        lat.mean_final() < raw.mean_final() && el < 1.0 && er < 1.0,
        format!(
            "regret latent {:.2} vs raw {:.2}, exponents {el:.3} / {er:.3}",
            lat.mean_final(),
            raw.mean_final()
        ),
    )
}

/// Every size-`k` subset of `0..t` in lexicographic order.
fn subsets(t: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, t: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..t {
            cur.push(i);
            go(i + 1, t, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, t, k, &mut Vec::new(), &mut out);
    out
}

fn c4_rrd_unbiased() -> Outcome {
    let mut rng = SeededRng::new(4);
    let mut worst = 0.0f64;
    let mut k_eq_t = 0.0f64;
    for _ in 0..50 {
        let x: Vec<f64> = (0..6).map(|_| rng.normal() * 2.0).collect();
        let ret = rng.normal() * 5.0;
        let exact = rd_objective(&x, ret).0;
        for k in [2, 3] {
            let all = subsets(6, k);
            let m = all
                .iter()
                .map(|s| subset_objective(&x, ret, s, true).map(|v| v.0))
                .sum::<Result<f64, _>>()
                .map_err(|e| e.to_string())?
                / all.len() as f64;
            worst = worst.max((m - exact).abs());
        }
        let full: Vec<usize> = (0..6).collect();
        for unbiased in [false, true] {
            let v = subset_objective(&x, ret, &full, unbiased).map_err(|e| e.to_string())?.0;
            k_eq_t = k_eq_t.max((v - exact).abs());
        }
    }
    check(
        worst <= 1e-10 && k_eq_t == 0.0,
        format!("enumeration |Δ| {worst:.2e} (≤ 1e-10), K = T |Δ| {k_eq_t:.1e}"),
    )
}

fn c5_gradients() -> Outcome {
    let mut rng = SeededRng::new(5);
    let mut cfg = ArenaConfig::point_navigation();
    cfg.max_steps = 6;
    let mut env = ParticleEnv::new(cfg).unwrap();
    let prog = parse_program(&oracle_source(env.config()), &env.signature()).unwrap();
    let kinds = [DecompKind::RdRaw, DecompKind::Lare, DecompKind::Rrd, DecompKind::RrdUnbiased];
    let h = 1e-5;
    let mut worst = 0.0f64;
    for case in 0..100 {
        let kind = kinds[case % kinds.len()];
        let hidden: Vec<usize> = (0..rng.index(3)).map(|_| 1 + rng.index(6)).collect();
        let mut model = DecompositionModel::new(kind, env.signature(), Some(prog.clone()), &hidden, 3, &mut rng)
            .map_err(|e| e.to_string())?;
        let batch: Vec<Trajectory> = (0..1 + rng.index(4)).map(|_| random_episode(&mut env, &mut rng)).collect();
        let views: Vec<_> = batch.iter().map(|t| t.view()).collect();
        let loss_seed = rng.index(1 << 30) as u64;
        let (_, grads) = model
            .loss_and_grad(&views, &mut SeededRng::new(loss_seed))
            .map_err(|e| e.to_string())?;
        for i in 0..grads.len() {
            let mut at = |delta: f64| {
                let p = model.decoder_mut().unwrap().params_mut();
                let old = p[i];
                p[i] = old + delta;
                let l = model.loss_and_grad(&views, &mut SeededRng::new(loss_seed)).unwrap().0;
                model.decoder_mut().unwrap().params_mut()[i] = old;
                l
            };
            let fd = (at(h) - at(-h)) / (2.0 * h);
            let rel = (grads[i] - fd).abs() / grads[i].abs().max(fd.abs()).max(1e-6);
            worst = worst.max(rel);
        }
    }
    // one bare network as well, through the public backward pass
    let net = Mlp64::new(&[3, 5, 4, 2], Default::default(), &mut rng).unwrap();
    let x = [0.3, -1.2, 0.7];
    let w = [1.5, -0.5];
    let tape = net.forward_cached(&x).unwrap();
    let mut g = net.zero_grads();
    net.backward(&tape, &w, &mut g);
    for (i, gi) in g.iter().enumerate() {
        let f = |d: f64| {
            let mut p = net.params().to_vec();
            p[i] += d;
            let n = Mlp64::from_params(net.sizes(), p).unwrap();
            let y = n.forward(&x).unwrap();
            w[0] * y[0] + w[1] * y[1]
        };
        let fd = (f(h) - f(-h)) / (2.0 * h);
        worst = worst.max((gi - fd).abs() / gi.abs().max(fd.abs()).max(1e-6));
    }
    check(worst <= 1e-4, format!("max relative error {worst:.2e} (≤ 1e-4)"))
}

fn fixtures() -> PathBuf {
    repo().join("fixtures/triangle-area")
}

fn c6_executability() -> Outcome {
    let mut env = ParticleEnv::new(ArenaConfig::triangle_area()).unwrap();
    let task = task_spec(&env).map_err(|e| e.to_string())?;
    let run = |pre_verify: bool, env: &mut ParticleEnv| -> Result<(f64, usize), String> {
        let mut programs = Vec::new();
        let mut feedback = 0;
        let mut all_probes = Vec::new();
        for i in 0..20 {
            let probes = probe_set(env, ProbeConfig::default(), &mut SeededRng::new(600 + i)).unwrap();
            let mut backend = MockBackend::sequential(fixtures()).map_err(|e| e.to_string())?;
            let opts = DeriveOptions {
                pre_verify,
                ..DeriveOptions::default()
            };
            match derive_latent_reward_fn(&mut backend, &RoleTemplate::default(), &task, &probes, opts) {
                Ok((p, log)) => {
                    feedback += log.error_feedback_rounds();
                    programs.push(Some(p));
                }
                Err(_) => programs.push(None),
            }
            all_probes.extend(probes);
        }
        Ok((execution_rate(&programs, &all_probes), feedback))
    };
    let (rate_pv, fb) = run(true, &mut env)?;
    let (rate_off, _) = run(false, &mut env)?;
    check(
        rate_pv == 1.0 && fb >= 1 && rate_off < 1.0,
        format!("exe rate {rate_pv:.2} with {fb} feedback rounds; without pre-verification {rate_off:.2}"),
    )
}

fn c7_correlation() -> Outcome {
    let mut env = ParticleEnv::new(ArenaConfig::cooperative_navigation(3)).unwrap();
    let prog = parse_program(&oracle_source(env.config()), &env.signature()).unwrap();
    let rep = correlation_report(&mut env, &prog, 10_000, &mut SeededRng::new(7)).map_err(|e| e.to_string())?;
    let (raw, lat) = rep.table_cells();
    check(
        rep.latent_mean >= 0.3 && rep.raw_mean <= 0.15,
        format!("latent {lat} (≥ 0.3), states {raw} (≤ 0.15)"),
    )
}

fn c8_prediction_error() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let lare = run_into(config("point-navigation-lare.json"), &dir.path().join("lare"));
    let rd = run_into(config("point-navigation-rd-raw.json"), &dir.path().join("rd"));
    let pairs: Vec<(f64, f64)> = lare
        .seeds
        .iter()
        .zip(&rd.seeds)
        .map(|(a, b)| (a.final_reward_pred_error.unwrap(), b.final_reward_pred_error.unwrap()))
        .collect();
    let wins = pairs.iter().filter(|(a, b)| a < b).count();
    let fmt: Vec<String> = pairs.iter().map(|(a, b)| format!("{a:.3}<{b:.3}")).collect();
    check(
        wins == pairs.len() && pairs.len() == 5,
        format!("LaRe below RD-raw on {wins}/{} seeds [{}]", pairs.len(), fmt.join(" ")),
    )
}

fn c9_learning() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut finals: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for m in ["lare", "episodic", "ircr", "dense"] {
        let s = run_into(config(&format!("triangle-area-{m}.json")), &dir.path().join(m));
        finals.insert(m, s.seeds.iter().map(|x| x.final_eval).collect());
    }
    let mu = |m: &str| mean(&finals[m]);
    let lare_ok = mu("lare") >= mu("episodic") && mu("lare") >= mu("ircr");
    // dense ties a method when the gap is within two standard errors of the
    // difference of means
    let dense_ok = ["lare", "episodic", "ircr"].iter().all(|m| {
        let se = (sem(&finals["dense"]).powi(2) + sem(&finals[m]).powi(2)).sqrt();
        mu("dense") + 2.0 * se >= mu(m)
    });
    let line: Vec<String> = finals
        .iter()
        .map(|(m, v)| format!("{m} {:.1}±{:.1}", mean(v), sem(v)))
        .collect();
    check(lare_ok && dense_ok, line.join(", "))
}

fn read_csvs(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|x| x == "csv") {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn c10_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config("triangle-area-lare-llm.json");
    cfg.train.max_episodes = 40;
    cfg.train.eval_interval = 10;
    cfg.seeds = vec![0, 1];
    let mut theory = load_theory(&repo().join("configs/theory.json")).unwrap();
    if let Some(c) = &mut theory.concentration {
        c.n_seeds = 50;
    }
    if let Some(r) = &mut theory.regret {
        r.n_seeds = 5;
        r.episodes = 100;
    }
    let mut runs = Vec::new();
    for rep in 0..2 {
        let out = dir.path().join(format!("rep{rep}"));
        run_into(cfg.clone(), &out.join("train"));
        theory.output_dir = out.join("theory");
        run_theory(&theory).map_err(|e| e.to_string())?;
        runs.push(read_csvs(&out));
    }
    let n = runs[0].len();
    check(
        n >= 6 && runs[0] == runs[1],
        format!("{n} CSV files compared byte for byte across two runs"),
    )
}

fn c11_redundancy() -> Outcome {
    let mut env = ParticleEnv::new(ArenaConfig::triangle_area()).unwrap();
    let prog = parse_program(&oracle_source(env.config()), &env.signature()).unwrap();
    let mut rng = SeededRng::new(11);
    let model =
        DecompositionModel::new(DecompKind::Lare, env.signature(), Some(prog), &[16, 16], 3, &mut rng).unwrap();
    // the oracle reads only entries 4..14; velocity and position are unused
    let unused = 0..4;
    let mut compared = 0;
    for _ in 0..20 {
        let traj = random_episode(&mut env, &mut rng);
        let steps: Vec<Step> = traj
            .steps()
            .iter()
            .map(|s| Step {
                per_agent_obs: s
                    .per_agent_obs
                    .iter()
                    .map(|o| {
                        let mut v = o.as_slice().to_vec();
                        for i in unused.clone() {
                            v[i] += rng.normal() * 10.0;
                        }
                        Observation::new(v)
                    })
                    .collect(),
                ..s.clone()
            })
            .collect();
        let moved = Trajectory::from_steps(steps).unwrap();
        let a = model.proxy_rewards(&traj.view()).map_err(|e| e.to_string())?;
        let b = model.proxy_rewards(&moved.view()).map_err(|e| e.to_string())?;
        if a != b {
            return Err("proxy rewards changed under an unused-coordinate perturbation".into());
        }
        compared += a.iter().map(Vec::len).sum::<usize>();
    }
    check(true, format!("{compared} proxy rewards identical after perturbing unused entries"))
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 11] = [
        (1, "least-squares oracle", c1_least_squares),
        (2, "concentration bound", c2_concentration),
        (3, "regret direction", c3_regret),
        (4, "RRD-unbiased expectation", c4_rrd_unbiased),
        (5, "gradient check", c5_gradients),
        (6, "pipeline executability", c6_executability),
        (7, "factor correlation", c7_correlation),
        (8, "reward prediction error", c8_prediction_error),
        (9, "end-to-end learning", c9_learning),
        (10, "determinism", c10_determinism),
        (11, "redundancy invariance", c11_redundancy),
    ];
    let only: Option<Vec<u32>> = std::env::var("LARE_ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let mut failed = 0;
    for (id, name, f) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let t0 = Instant::now();
        let res = std::panic::catch_unwind(f).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t0.elapsed().as_secs_f64();
        match res {
            Ok(d) => println!("criterion {id:>2} PASS {name}: {d} [{secs:.1}s]"),
            Err(d) => {
                failed += 1;
                println!("criterion {id:>2} FAIL {name}: {d} [{secs:.1}s]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
