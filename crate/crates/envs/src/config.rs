use serde::{Deserialize, Serialize};

use crate::error::{EnvError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    /// Agents spread out to cover landmarks without bumping into each other.
    CooperativeNavigation,
    /// Predators chase scripted, faster prey around obstacles.
    PredatorPrey,
    /// Three agents maximise the area of their triangle and avoid obstacles.
    TriangleArea,
    /// A single agent moves towards a goal point.
    PointNavigation,
}

/// Parameters of a particle task. Distances are in arena units, `dt` is the
/// integration step and speeds are arena units per unit time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArenaConfig {
    pub kind: EnvKind,
    pub n_agents: usize,
    /// Landmarks (cooperative navigation), obstacles (predator-prey, triangle
    /// area) or goals (point navigation, always 1).
    pub n_entities: usize,
    #[serde(default)]
    pub n_prey: usize,
    #[serde(default = "d::half_width")]
    pub arena_half_width: f64,
    pub max_steps: usize,
    #[serde(default = "d::dt")]
    pub dt: f64,
    #[serde(default = "d::agent_radius")]
    pub agent_radius: f64,
    #[serde(default = "d::obstacle_radius")]
    pub obstacle_radius: f64,
    #[serde(default = "d::accel")]
    pub accel: f64,
    /// Velocity retained per step before thrust is applied.
    #[serde(default = "d::damping")]
    pub damping: f64,
    #[serde(default = "d::max_speed")]
    pub max_speed: f64,
    #[serde(default = "d::prey_max_speed")]
    pub prey_max_speed: f64,
    #[serde(default = "d::collision_penalty")]
    pub collision_penalty: f64,
    #[serde(default = "d::capture_radius")]
    pub capture_radius: f64,
    #[serde(default = "d::capture_bonus")]
    pub capture_bonus: f64,
    /// Weight of the nearest-prey distance term for predators.
    #[serde(default = "d::shaping")]
    pub distance_shaping: f64,
    /// Cap on landmarks listed in a cooperative-navigation observation.
    #[serde(default = "d::max_landmarks_observed")]
    pub max_landmarks_observed: usize,
    /// Cap on other agents listed in an observation.
    #[serde(default = "d::max_others_observed")]
    pub max_others_observed: usize,
}

mod d {
    pub fn half_width() -> f64 {
        1.0
    }
    pub fn dt() -> f64 {
        0.1
    }
    pub fn agent_radius() -> f64 {
        0.05
    }
    pub fn obstacle_radius() -> f64 {
        0.1
    }
    pub fn accel() -> f64 {
        5.0
    }
    pub fn damping() -> f64 {
        0.5
    }
    pub fn max_speed() -> f64 {
        1.0
    }
    pub fn prey_max_speed() -> f64 {
        1.3
    }
    pub fn collision_penalty() -> f64 {
        1.0
    }
    pub fn capture_radius() -> f64 {
        0.15
    }
    pub fn capture_bonus() -> f64 {
        1.0
    }
    pub fn shaping() -> f64 {
        0.1
    }
    pub fn max_landmarks_observed() -> usize {
        6
    }
    pub fn max_others_observed() -> usize {
        5
    }
}

impl ArenaConfig {
    fn base(kind: EnvKind, n_agents: usize, n_entities: usize, max_steps: usize) -> Self {
        Self {
            kind,
            n_agents,
            n_entities,
            n_prey: 0,
            arena_half_width: d::half_width(),
            max_steps,
            dt: d::dt(),
            agent_radius: d::agent_radius(),
            obstacle_radius: d::obstacle_radius(),
            accel: d::accel(),
            damping: d::damping(),
            max_speed: d::max_speed(),
            prey_max_speed: d::prey_max_speed(),
            collision_penalty: d::collision_penalty(),
            capture_radius: d::capture_radius(),
            capture_bonus: d::capture_bonus(),
            distance_shaping: d::shaping(),
            max_landmarks_observed: d::max_landmarks_observed(),
            max_others_observed: d::max_others_observed(),
        }
    }

    /// `n` agents and `n` landmarks.
    pub fn cooperative_navigation(n: usize) -> Self {
        Self::base(EnvKind::CooperativeNavigation, n, n, 25)
    }

    /// `n` predators, `max(1, n/3)` prey and 3 obstacles.
    pub fn predator_prey(n: usize) -> Self {
        let mut c = Self::base(EnvKind::PredatorPrey, n, 3, 25);
        c.n_prey = (n / 3).max(1);
        c
    }

    pub fn triangle_area() -> Self {
        Self::base(EnvKind::TriangleArea, 3, 3, 25)
    }

    pub fn point_navigation() -> Self {
        Self::base(EnvKind::PointNavigation, 1, 1, 25)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(EnvError::Config(m));
        if self.n_agents == 0 {
            return bad("n_agents must be at least 1".into());
        }
        if self.max_steps == 0 {
            return bad("max_steps must be at least 1".into());
        }
        let positive = [
            ("arena_half_width", self.arena_half_width),
            ("dt", self.dt),
            ("agent_radius", self.agent_radius),
            ("obstacle_radius", self.obstacle_radius),
            ("max_speed", self.max_speed),
            ("prey_max_speed", self.prey_max_speed),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        let non_negative = [
            ("accel", self.accel),
            ("collision_penalty", self.collision_penalty),
            ("capture_radius", self.capture_radius),
            ("capture_bonus", self.capture_bonus),
            ("distance_shaping", self.distance_shaping),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be non-negative, got {v}"));
            }
        }
        if !(0.0..1.0).contains(&self.damping) {
            return bad(format!("damping must lie in [0, 1), got {}", self.damping));
        }
        match self.kind {
            EnvKind::CooperativeNavigation if self.n_entities == 0 => {
                bad("cooperative navigation needs at least one landmark".into())
            }
            EnvKind::CooperativeNavigation if self.max_landmarks_observed == 0 => {
                bad("max_landmarks_observed must be at least 1".into())
            }
            EnvKind::PredatorPrey if self.n_prey == 0 => {
                bad("predator-prey needs at least one prey".into())
            }
            EnvKind::TriangleArea if self.n_agents != 3 => {
                bad(format!("triangle area needs exactly 3 agents, got {}", self.n_agents))
            }
            EnvKind::PointNavigation if self.n_agents != 1 || self.n_entities != 1 => {
                bad("point navigation has one agent and one goal".into())
            }
            _ => Ok(()),
        }
    }

    /// Entries in each agent's observation.
    pub fn obs_dim(&self) -> usize {
        let others = (self.n_agents - 1).min(self.max_others_observed);
        match self.kind {
            EnvKind::CooperativeNavigation => {
                4 + 2 * self.n_entities.min(self.max_landmarks_observed) + 2 * others
            }
            EnvKind::PredatorPrey => 4 + 2 * self.n_entities + 2 * others + 4 * self.n_prey,
            EnvKind::TriangleArea => 4 + 2 * (self.n_agents - 1) + 2 * self.n_entities,
            EnvKind::PointNavigation => 6,
        }
    }
}
