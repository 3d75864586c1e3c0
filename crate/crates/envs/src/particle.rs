//! Point-mass dynamics, observations and ground-truth rewards.
//!
//! Integration, per step and per agent:
//!
//! ```text
//! v ← damping·v + accel·dir·dt      (dir from the discrete action)
//! v ← v·min(1, max_speed/‖v‖)
//! x ← x + v·dt                       (clamped to the arena; the clamped
//!                                     velocity component is zeroed)
//! ```
//!
//! so from rest a single thrust moves an agent by `accel·dt²`. Rewards are
//! computed on the state after the move.

use lare_core::{ActionValue, Observation, SeededRng};
use serde::{Deserialize, Serialize};

use crate::config::{ArenaConfig, EnvKind};
use crate::error::{EnvError, Result};

pub type Vec2 = [f64; 2];

/// Number of discrete actions: no-op, +x, −x, +y, −y.
pub const N_ACTIONS: usize = 5;

/// Rejection-sampling budget per placed entity.
pub const PLACEMENT_ATTEMPTS: usize = 1000;

fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

fn norm(a: Vec2) -> f64 {
    a[0].hypot(a[1])
}

pub fn dist(a: Vec2, b: Vec2) -> f64 {
    norm(sub(a, b))
}

/// Unsigned area of the polygon with the given vertices.
pub fn shoelace_area(pts: &[Vec2]) -> f64 {
    let n = pts.len();
    let mut s = 0.0;
    for i in 0..n {
        let (a, b) = (pts[i], pts[(i + 1) % n]);
        s += a[0] * b[1] - b[0] * a[1];
    }
    0.5 * s.abs()
}

pub fn action_direction(a: usize) -> Option<Vec2> {
    match a {
        0 => Some([0.0, 0.0]),
        1 => Some([1.0, 0.0]),
        2 => Some([-1.0, 0.0]),
        3 => Some([0.0, 1.0]),
        4 => Some([0.0, -1.0]),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub agent_pos: Vec<Vec2>,
    pub agent_vel: Vec<Vec2>,
    /// Landmarks, obstacles or the goal, depending on the task.
    pub fixed_entity_pos: Vec<Vec2>,
    #[serde(default)]
    pub prey_pos: Vec<Vec2>,
    #[serde(default)]
    pub prey_vel: Vec<Vec2>,
    pub t: usize,
}

fn fixed_radius(cfg: &ArenaConfig) -> f64 {
    match cfg.kind {
        EnvKind::PredatorPrey | EnvKind::TriangleArea => cfg.obstacle_radius,
        EnvKind::CooperativeNavigation | EnvKind::PointNavigation => cfg.agent_radius,
    }
}

fn place(
    cfg: &ArenaConfig,
    placed: &mut Vec<(Vec2, f64)>,
    radius: f64,
    what: &str,
    rng: &mut SeededRng,
) -> Result<Vec2> {
    let lim = cfg.arena_half_width - radius;
    if lim <= 0.0 {
        return Err(EnvError::Config(format!("{what} does not fit in the arena")));
    }
    for _ in 0..PLACEMENT_ATTEMPTS {
        let p = [rng.uniform_range(-lim, lim), rng.uniform_range(-lim, lim)];
        if placed.iter().all(|(q, r)| dist(p, *q) >= radius + r) {
            placed.push((p, radius));
            return Ok(p);
        }
    }
    Err(EnvError::Placement {
        what: what.into(),
        attempts: PLACEMENT_ATTEMPTS,
    })
}

/// Uniform non-overlapping placement, zero velocities.
pub fn reset_world(cfg: &ArenaConfig, rng: &mut SeededRng) -> Result<WorldState> {
    cfg.validate()?;
    let mut placed = Vec::new();
    let fr = fixed_radius(cfg);
    let fixed = (0..cfg.n_entities)
        .map(|i| place(cfg, &mut placed, fr, &format!("entity {i}"), rng))
        .collect::<Result<Vec<_>>>()?;
    let agents = (0..cfg.n_agents)
        .map(|i| place(cfg, &mut placed, cfg.agent_radius, &format!("agent {i}"), rng))
        .collect::<Result<Vec<_>>>()?;
    let n_prey = if cfg.kind == EnvKind::PredatorPrey { cfg.n_prey } else { 0 };
    let prey = (0..n_prey)
        .map(|i| place(cfg, &mut placed, cfg.agent_radius, &format!("prey {i}"), rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(WorldState {
        agent_vel: vec![[0.0; 2]; agents.len()],
        agent_pos: agents,
        fixed_entity_pos: fixed,
        prey_vel: vec![[0.0; 2]; prey.len()],
        prey_pos: prey,
        t: 0,
    })
}

fn integrate(cfg: &ArenaConfig, pos: &mut Vec2, vel: &mut Vec2, dir: Vec2, max_speed: f64, radius: f64) {
    for k in 0..2 {
        vel[k] = cfg.damping * vel[k] + cfg.accel * dir[k] * cfg.dt;
    }
    let s = norm(*vel);
    if s > max_speed {
        let f = max_speed / s;
        vel[0] *= f;
        vel[1] *= f;
    }
    let lim = cfg.arena_half_width - radius;
    for k in 0..2 {
        pos[k] += vel[k] * cfg.dt;
        if pos[k] > lim {
            pos[k] = lim;
            vel[k] = 0.0;
        } else if pos[k] < -lim {
            pos[k] = -lim;
            vel[k] = 0.0;
        }
    }
}

fn push_out(pos: &mut Vec2, centre: Vec2, min_dist: f64) {
    let d = sub(*pos, centre);
    let n = norm(d);
    if n < min_dist {
        if n == 0.0 {
            pos[0] = centre[0] + min_dist;
        } else {
            pos[0] = centre[0] + d[0] / n * min_dist;
            pos[1] = centre[1] + d[1] / n * min_dist;
        }
    }
}

/// Reads and bounds-checks one discrete action per agent.
pub fn parse_actions(cfg: &ArenaConfig, actions: &[ActionValue]) -> Result<Vec<usize>> {
    if actions.len() != cfg.n_agents {
        return Err(EnvError::ActionCount {
            expected: cfg.n_agents,
            got: actions.len(),
        });
    }
    actions
        .iter()
        .enumerate()
        .map(|(agent, a)| match a.discrete() {
            Some(k) if k < N_ACTIONS => Ok(k),
            _ => Err(EnvError::InvalidAction {
                agent,
                action: format!("{a:?}"),
            }),
        })
        .collect()
}

/// Advances the world by one step.
pub fn step_world(cfg: &ArenaConfig, state: &WorldState, actions: &[usize]) -> WorldState {
    let mut s = state.clone();
    for (i, &a) in actions.iter().enumerate() {
        let dir = action_direction(a).expect("actions validated");
        integrate(cfg, &mut s.agent_pos[i], &mut s.agent_vel[i], dir, cfg.max_speed, cfg.agent_radius);
    }
    if cfg.kind == EnvKind::PredatorPrey {
        for j in 0..s.prey_pos.len() {
            let p = s.prey_pos[j];
            let nearest = state
                .agent_pos
                .iter()
                .copied()
                .min_by(|a, b| dist(*a, p).total_cmp(&dist(*b, p)))
                .expect("at least one predator");
            let away = sub(p, nearest);
            let n = norm(away);
            let dir = if n > 0.0 { [away[0] / n, away[1] / n] } else { [0.0, 0.0] };
            let (mut pos, mut vel) = (s.prey_pos[j], s.prey_vel[j]);
            integrate(cfg, &mut pos, &mut vel, dir, cfg.prey_max_speed, cfg.agent_radius);
            s.prey_pos[j] = pos;
            s.prey_vel[j] = vel;
        }
        let min_d = cfg.agent_radius + cfg.obstacle_radius;
        for o in &s.fixed_entity_pos {
            for p in s.agent_pos.iter_mut().chain(s.prey_pos.iter_mut()) {
                push_out(p, *o, min_d);
            }
        }
    }
    s.t += 1;
    s
}

/// Relative positions `e − origin`, all in index order when at most `cap`
/// entries exist, otherwise the `cap` nearest sorted by distance.
fn relative(origin: Vec2, entities: impl Iterator<Item = Vec2>, cap: usize, out: &mut Vec<f64>) {
    let mut rel: Vec<Vec2> = entities.map(|e| sub(e, origin)).collect();
    if rel.len() > cap {
        rel.sort_by(|a, b| norm(*a).total_cmp(&norm(*b)));
        rel.truncate(cap);
    }
    for r in rel {
        out.extend_from_slice(&r);
    }
}

/// Observation of agent `i`.
pub fn observe(cfg: &ArenaConfig, s: &WorldState, i: usize) -> Observation {
    let p = s.agent_pos[i];
    let mut o = Vec::with_capacity(cfg.obs_dim());
    o.extend_from_slice(&s.agent_vel[i]);
    o.extend_from_slice(&p);
    let others = s
        .agent_pos
        .iter()
        .enumerate()
        .filter(move |(j, _)| *j != i)
        .map(|(_, q)| *q);
    match cfg.kind {
        EnvKind::CooperativeNavigation => {
            relative(p, s.fixed_entity_pos.iter().copied(), cfg.max_landmarks_observed, &mut o);
            relative(p, others, cfg.max_others_observed, &mut o);
        }
        EnvKind::PredatorPrey => {
            relative(p, s.fixed_entity_pos.iter().copied(), usize::MAX, &mut o);
            relative(p, others, cfg.max_others_observed, &mut o);
            relative(p, s.prey_pos.iter().copied(), usize::MAX, &mut o);
            for v in &s.prey_vel {
                o.extend_from_slice(v);
            }
        }
        EnvKind::TriangleArea => {
            relative(p, others, usize::MAX, &mut o);
            relative(p, s.fixed_entity_pos.iter().copied(), usize::MAX, &mut o);
        }
        EnvKind::PointNavigation => {
            relative(p, s.fixed_entity_pos.iter().copied(), 1, &mut o);
        }
    }
    debug_assert_eq!(o.len(), cfg.obs_dim());
    Observation::new(o)
}

pub fn observe_all(cfg: &ArenaConfig, s: &WorldState) -> Vec<Observation> {
    (0..cfg.n_agents).map(|i| observe(cfg, s, i)).collect()
}

/// Mean over landmarks of the distance to the closest agent.
pub fn coverage_distance(s: &WorldState) -> f64 {
    let n = s.fixed_entity_pos.len() as f64;
    s.fixed_entity_pos
        .iter()
        .map(|l| {
            s.agent_pos
                .iter()
                .map(|a| dist(*a, *l))
                .fold(f64::INFINITY, f64::min)
        })
        .sum::<f64>()
        / n
}

fn agent_collisions(cfg: &ArenaConfig, s: &WorldState, i: usize) -> usize {
    let p = s.agent_pos[i];
    s.agent_pos
        .iter()
        .enumerate()
        .filter(|(j, q)| *j != i && dist(p, **q) < 2.0 * cfg.agent_radius)
        .count()
}

fn obstacle_contacts(cfg: &ArenaConfig, s: &WorldState, i: usize) -> usize {
    let p = s.agent_pos[i];
    s.fixed_entity_pos
        .iter()
        .filter(|o| dist(p, **o) < cfg.agent_radius + cfg.obstacle_radius)
        .count()
}

/// Per-agent reward of a state.
pub fn ground_truth_reward(cfg: &ArenaConfig, s: &WorldState) -> Vec<f64> {
    match cfg.kind {
        EnvKind::CooperativeNavigation => {
            let cover = coverage_distance(s);
            (0..cfg.n_agents)
                .map(|i| -cover - cfg.collision_penalty * agent_collisions(cfg, s, i) as f64)
                .collect()
        }
        EnvKind::PredatorPrey => (0..cfg.n_agents)
            .map(|i| {
                let p = s.agent_pos[i];
                let ds: Vec<f64> = s.prey_pos.iter().map(|q| dist(p, *q)).collect();
                let captures = ds.iter().filter(|&&d| d < cfg.capture_radius).count();
                let nearest = ds.iter().copied().fold(f64::INFINITY, f64::min);
                cfg.capture_bonus * captures as f64 - cfg.distance_shaping * nearest
            })
            .collect(),
        EnvKind::TriangleArea => {
            let area = shoelace_area(&s.agent_pos);
            (0..cfg.n_agents)
                .map(|i| area - cfg.collision_penalty * obstacle_contacts(cfg, s, i) as f64)
                .collect()
        }
        EnvKind::PointNavigation => vec![-dist(s.agent_pos[0], s.fixed_entity_pos[0])],
    }
}

/// Scalar task-completion measure of a state, used for sparse returns:
/// negative coverage distance, number of captured prey, triangle area or
/// negative goal distance.
pub fn task_metric(cfg: &ArenaConfig, s: &WorldState) -> f64 {
    match cfg.kind {
        EnvKind::CooperativeNavigation => -coverage_distance(s),
        EnvKind::PredatorPrey => s
            .prey_pos
            .iter()
            .filter(|q| s.agent_pos.iter().any(|p| dist(*p, **q) < cfg.capture_radius))
            .count() as f64,
        EnvKind::TriangleArea => shoelace_area(&s.agent_pos),
        EnvKind::PointNavigation => -dist(s.agent_pos[0], s.fixed_entity_pos[0]),
    }
}
