//! Hand-written latent reward programs, one per task, built from the
//! task's observation layout.

use std::fmt::Write as _;

use lare_envs::{ArenaConfig, EnvKind};

/// `1` when `dist < radius`, else `0`.
fn inside(dist: &str, radius: f64) -> String {
    format!("(1 - sign({dist} - {radius})) / 2")
}

fn rel(i: usize) -> String {
    format!("obs[{}..{}]", i, i + 2)
}

pub fn oracle_source(cfg: &ArenaConfig) -> String {
    let mut s = String::new();
    let others = (cfg.n_agents - 1).min(cfg.max_others_observed);
    match cfg.kind {
        EnvKind::TriangleArea => {
            // others at 4..8, obstacles after
            let _ = writeln!(s, "abs(obs[4] * obs[7] - obs[5] * obs[6]) / 2  # triangle area");
            for k in 0..cfg.n_entities {
                let d = format!("norm2({})", rel(4 + 2 * others + 2 * k));
                let _ = writeln!(
                    s,
                    "{}  # touching obstacle {k}",
                    inside(&d, cfg.agent_radius + cfg.obstacle_radius)
                );
            }
        }
        EnvKind::PointNavigation => {
            let _ = writeln!(s, "norm2(obs[4..6])  # distance to goal");
        }
        EnvKind::CooperativeNavigation => {
            let landmarks = cfg.n_entities.min(cfg.max_landmarks_observed);
            let o0 = 4 + 2 * landmarks;
            for k in 0..landmarks {
                let l = 4 + 2 * k;
                let mut terms = vec![format!("norm2({})", rel(l))];
                for j in 0..others {
                    let o = o0 + 2 * j;
                    terms.push(format!("norm2(obs[{l}] - obs[{o}], obs[{}] - obs[{}])", l + 1, o + 1));
                }
                let _ = writeln!(s, "min({})  # closest agent to landmark {k}", terms.join(", "));
            }
            let hits: Vec<String> = (0..others)
                .map(|j| inside(&format!("norm2({})", rel(o0 + 2 * j)), 2.0 * cfg.agent_radius))
                .collect();
            if !hits.is_empty() {
                let _ = writeln!(s, "{}  # collisions", hits.join(" + "));
            }
        }
        EnvKind::PredatorPrey => {
            let p0 = 4 + 2 * cfg.n_entities + 2 * others;
            let dists: Vec<String> = (0..cfg.n_prey).map(|k| format!("norm2({})", rel(p0 + 2 * k))).collect();
            let _ = writeln!(s, "min({})  # nearest prey", dists.join(", "));
            let caught: Vec<String> = dists.iter().map(|d| inside(d, cfg.capture_radius)).collect();
            let _ = writeln!(s, "{}  # captures", caught.join(" + "));
        }
    }
    s
}
