use lare_core::{ActionValue, EpisodeView, Observation, SeededRng, Step, Trajectory};
use lare_decomp::{
    closed_form_ls, fit_signs, rd_objective, sample_subset, subset_objective, DecompKind, DecompositionModel,
};
use lare_lrdsl::{parse_program, EnvSignature};
use proptest::prelude::*;

/// All size-`k` subsets of `0..t` in lexicographic order.
fn combinations(t: usize, k: usize) -> Vec<Vec<usize>> {
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

fn mean_over_subsets(x: &[f64], ret: f64, k: usize, unbiased: bool) -> f64 {
    let subsets = combinations(x.len(), k);
    let n = subsets.len() as f64;
    subsets
        .iter()
        .map(|s| subset_objective(x, ret, s, unbiased).unwrap().0)
        .sum::<f64>()
        / n
}

#[test]
fn unbiased_subset_loss_averages_to_full_loss_t6() {
    let mut rng = SeededRng::new(11);
    for _ in 0..50 {
        let x: Vec<f64> = (0..6).map(|_| rng.uniform_range(-2.0, 2.0)).collect();
        let ret = rng.uniform_range(-5.0, 5.0);
        let exact = rd_objective(&x, ret).0;
        for k in [2, 3] {
            let m = mean_over_subsets(&x, ret, k, true);
            assert!((m - exact).abs() < 1e-10, "k={k}: {m} vs {exact}");
        }
    }
}

#[test]
fn biased_subset_loss_overestimates_on_average() {
    let x = [1.0, -1.0, 3.0, 0.5, 2.0, -0.25];
    let ret = 4.0;
    let exact = rd_objective(&x, ret).0;
    assert!(mean_over_subsets(&x, ret, 2, false) > exact);
}

#[test]
fn full_subsequence_is_the_full_loss_exactly() {
    let mut rng = SeededRng::new(5);
    for t in 1..=8 {
        let x: Vec<f64> = (0..t).map(|_| rng.normal()).collect();
        let ret = rng.normal() * 3.0;
        let all: Vec<usize> = (0..t).collect();
        let rd = rd_objective(&x, ret);
        for unbiased in [false, true] {
            assert_eq!(subset_objective(&x, ret, &all, unbiased).unwrap(), rd);
        }
    }
}

#[test]
fn single_step_single_subset() {
    assert_eq!(subset_objective(&[0.5], 2.0, &[0], true).unwrap().0, 2.25);
}

#[test]
fn sampled_unbiased_loss_matches_full_loss_within_three_standard_errors() {
    let x = [0.3, -1.2, 2.0, 0.7];
    let ret = 1.5;
    let exact = rd_objective(&x, ret).0;
    let mut rng = SeededRng::new(2024);
    let n = 100_000;
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        let sub = sample_subset(4, 2, &mut rng).unwrap();
        let l = subset_objective(&x, ret, &sub, true).unwrap().0;
        s += l;
        s2 += l * l;
    }
    let mean = s / n as f64;
    let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
    assert!((mean - exact).abs() < 3.0 * se, "{mean} vs {exact} (se {se})");
}

proptest! {
    #[test]
    fn unbiasedness_by_enumeration(
        x in prop::collection::vec(-10.0f64..10.0, 2..=6),
        ret in -20.0f64..20.0,
        k_frac in 0.0f64..1.0,
    ) {
        let t = x.len();
        let k = 2 + ((t - 1) as f64 * k_frac) as usize;
        let k = k.min(t);
        let exact = rd_objective(&x, ret).0;
        let m = mean_over_subsets(&x, ret, k, true);
        prop_assert!((m - exact).abs() <= 1e-10 * exact.abs().max(1.0), "{} vs {}", m, exact);
    }

    #[test]
    fn ircr_rewards_sum_to_return(t in 1usize..12, n in 1usize..4, ret in -50.0f64..50.0) {
        let traj = constant_episode(t, n, ret);
        let p = DecompositionModel::ircr(EnvSignature::discrete(1, 1)).proxy_rewards(&traj.view()).unwrap();
        let total: f64 = p.iter().flatten().sum();
        prop_assert!((total - ret).abs() <= 1e-12 * ret.abs().max(1.0));
    }
}

fn constant_episode(t: usize, n: usize, ret: f64) -> Trajectory {
    let steps = (0..t)
        .map(|i| Step {
            per_agent_obs: vec![Observation::new(vec![0.0]); n],
            per_agent_action: vec![ActionValue::DiscreteIndex(0); n],
            per_agent_gt_reward: vec![ret / (t * n) as f64; n],
            timestep: i,
        })
        .collect();
    Trajectory::from_steps(steps).unwrap()
}

/// Gauss-Jordan inverse with partial pivoting.
fn naive_inverse(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
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

fn naive_ls(h: &[Vec<f64>], r: &[f64], lambda: f64) -> Vec<f64> {
    let d = h[0].len();
    let mut a = vec![vec![0.0; d]; d];
    let mut b = vec![0.0; d];
    for (row, &ret) in h.iter().zip(r) {
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
    let inv = naive_inverse(&a);
    inv.iter().map(|row| row.iter().zip(&b).map(|(x, y)| x * y).sum()).collect()
}

#[test]
fn least_squares_matches_naive_inverse() {
    let mut rng = SeededRng::new(77);
    for _ in 0..100 {
        let k = 1 + rng.index(50);
        let d = 1 + rng.index(8);
        let t = 1 + rng.index(10);
        // rows are visit counts summing to t
        let h: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                let mut row = vec![0.0; d];
                for _ in 0..t {
                    row[rng.index(d)] += 1.0;
                }
                row
            })
            .collect();
        let r: Vec<f64> = (0..k).map(|_| rng.uniform_range(-3.0, 3.0) * t as f64).collect();
        let lambda = rng.uniform_range(0.1, 10.0);
        let got = closed_form_ls(&h, &r, lambda, d).unwrap().r_hat;
        let want = naive_ls(&h, &r, lambda);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-8, "{g} vs {w}");
        }
    }
}

#[test]
fn noiseless_recovery() {
    let truth = [0.2, 0.9, 0.5];
    let h = vec![
        vec![3.0, 1.0, 1.0],
        vec![0.0, 4.0, 1.0],
        vec![2.0, 0.0, 3.0],
        vec![1.0, 2.0, 2.0],
    ];
    let r: Vec<f64> = h.iter().map(|row| row.iter().zip(&truth).map(|(a, b)| a * b).sum()).collect();
    let got = closed_form_ls(&h, &r, 1e-8, 3).unwrap().r_hat;
    for (g, w) in got.iter().zip(&truth) {
        assert!((g - w).abs() < 1e-4);
    }
}

fn one_step_episode(o: Vec<f64>, ret: f64) -> Trajectory {
    Trajectory::from_steps(vec![Step {
        per_agent_obs: vec![Observation::new(o)],
        per_agent_action: vec![ActionValue::DiscreteIndex(0)],
        per_agent_gt_reward: vec![ret],
        timestep: 0,
    }])
    .unwrap()
}

#[test]
fn linear_decoder_converges_to_normal_equations() {
    let sig = EnvSignature::discrete(2, 1);
    let enc = parse_program("obs[0]\nobs[1] * obs[1]", &sig).unwrap();
    let mut rng = SeededRng::new(9);
    let mut model = DecompositionModel::new(DecompKind::Lare, sig, Some(enc.clone()), &[], 1, &mut rng).unwrap();
    let episodes: Vec<Trajectory> = (0..20)
        .map(|_| {
            let o = vec![rng.uniform_range(-1.0, 1.0), rng.uniform_range(-1.0, 1.0)];
            one_step_episode(o, rng.normal())
        })
        .collect();
    let views: Vec<EpisodeView<'_>> = episodes.iter().map(|e| e.view()).collect();
    for _ in 0..20_000 {
        let (_, g) = model.loss_and_grad(&views, &mut rng).unwrap();
        let p = model.decoder_mut().unwrap().params_mut();
        p.iter_mut().zip(&g).for_each(|(w, gw)| *w -= 0.2 * gw);
    }
    // least squares on [z, 1] through the normal equations
    let rows: Vec<Vec<f64>> = episodes
        .iter()
        .map(|e| {
            let mut z = enc.eval(&e.steps()[0].per_agent_obs[0], &ActionValue::DiscreteIndex(0)).unwrap();
            z.push(1.0);
            z
        })
        .collect();
    let rets: Vec<f64> = episodes.iter().map(|e| e.episodic_return()).collect();
    let w = naive_ls(&rows, &rets, 0.0);
    for (e, row) in episodes.iter().zip(&rows) {
        let want: f64 = row.iter().zip(&w).map(|(a, b)| a * b).sum();
        let got = model.proxy_rewards(&e.view()).unwrap()[0][0];
        assert!((got - want).abs() < 1e-6, "{got} vs {want}");
    }
}

#[test]
fn sign_fit_recovers_generating_signs() {
    let sig = EnvSignature::discrete(3, 2);
    let enc = parse_program("obs[0]\nobs[1]\nobs[2]", &sig).unwrap();
    let truth = [-1.0, 1.0, -1.0];
    let mut rng = SeededRng::new(4);
    let episodes: Vec<Trajectory> = (0..30)
        .map(|_| {
            let steps = (0..5)
                .map(|t| {
                    let o: Vec<f64> = (0..3).map(|_| rng.uniform()).collect();
                    let r = o.iter().zip(&truth).map(|(a, b)| a * b).sum();
                    Step {
                        per_agent_obs: vec![Observation::new(o)],
                        per_agent_action: vec![ActionValue::DiscreteIndex(1)],
                        per_agent_gt_reward: vec![r],
                        timestep: t,
                    }
                })
                .collect();
            Trajectory::from_steps(steps).unwrap()
        })
        .collect();
    let views: Vec<_> = episodes.iter().map(|e| e.view()).collect();
    assert_eq!(fit_signs(&enc, &views).unwrap(), truth.to_vec());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn latent_proxy_ignores_unused_observation_entries(
        obs in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 6), 1..8),
        noise in prop::collection::vec(-1e3f64..1e3, 3),
        seed in 0u64..1000,
    ) {
        let sig = EnvSignature::discrete(6, 5);
        let enc = parse_program("norm2(obs[0..2])\nobs[3] - obs[0]\nact_onehot[2]", &sig).unwrap();
        let mut rng = SeededRng::new(seed);
        let model = DecompositionModel::new(DecompKind::Lare, sig, Some(enc), &[8, 8], 1, &mut rng).unwrap();
        let make = |perturb: bool| {
            let steps = obs.iter().enumerate().map(|(t, o)| {
                let mut o = o.clone();
                if perturb {
                    o[2] += noise[0];
                    o[4] += noise[1];
                    o[5] += noise[2];
                }
                Step {
                    per_agent_obs: vec![Observation::new(o)],
                    per_agent_action: vec![ActionValue::DiscreteIndex(t % 5)],
                    per_agent_gt_reward: vec![0.0],
                    timestep: t,
                }
            }).collect();
            Trajectory::from_steps(steps).unwrap()
        };
        let a = model.proxy_rewards(&make(false).view()).unwrap();
        let b = model.proxy_rewards(&make(true).view()).unwrap();
        prop_assert_eq!(a, b);
    }
}
