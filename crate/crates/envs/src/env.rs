use lare_core::{ActionValue, Observation, SeededRng};
use lare_lrdsl::EnvSignature;

use crate::config::{ArenaConfig, EnvKind};
use crate::error::{EnvError, Result};
use crate::particle::{
    ground_truth_reward, observe_all, parse_actions, reset_world, step_world, task_metric,
    WorldState, N_ACTIONS,
};

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub obs: Vec<Observation>,
    pub rewards: Vec<f64>,
    pub done: bool,
}

/// Natural-language description of a task for prompting.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskText {
    pub description: String,
    /// One line per observation entry, `"{index}: {meaning}"`.
    pub state_form: Vec<String>,
    pub action_form: String,
}

/// A particle task as a resettable state machine.
#[derive(Debug, Clone)]
pub struct ParticleEnv {
    cfg: ArenaConfig,
    state: Option<WorldState>,
}

impl ParticleEnv {
    pub fn new(cfg: ArenaConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg, state: None })
    }

    pub fn config(&self) -> &ArenaConfig {
        &self.cfg
    }

    pub fn n_agents(&self) -> usize {
        self.cfg.n_agents
    }

    pub fn obs_dim(&self) -> usize {
        self.cfg.obs_dim()
    }

    pub fn n_actions(&self) -> usize {
        N_ACTIONS
    }

    pub fn max_steps(&self) -> usize {
        self.cfg.max_steps
    }

    pub fn signature(&self) -> EnvSignature {
        EnvSignature::discrete(self.obs_dim(), N_ACTIONS)
    }

    pub fn state(&self) -> Option<&WorldState> {
        self.state.as_ref()
    }

    pub fn reset(&mut self, rng: &mut SeededRng) -> Result<Vec<Observation>> {
        let s = reset_world(&self.cfg, rng)?;
        let obs = observe_all(&self.cfg, &s);
        self.state = Some(s);
        Ok(obs)
    }

    /// Puts the environment into a given state.
    pub fn set_state(&mut self, s: WorldState) -> Result<Vec<Observation>> {
        if s.agent_pos.len() != self.cfg.n_agents || s.fixed_entity_pos.len() != self.cfg.n_entities {
            return Err(EnvError::Config("state does not match the configuration".into()));
        }
        let obs = observe_all(&self.cfg, &s);
        self.state = Some(s);
        Ok(obs)
    }

    pub fn is_done(&self) -> bool {
        self.state.as_ref().is_some_and(|s| s.t >= self.cfg.max_steps)
    }

    pub fn step(&mut self, actions: &[ActionValue]) -> Result<StepOutcome> {
        let acts = parse_actions(&self.cfg, actions)?;
        let s = match &self.state {
            Some(s) if s.t < self.cfg.max_steps => s,
            _ => return Err(EnvError::NotRunning),
        };
        let next = step_world(&self.cfg, s, &acts);
        let rewards = ground_truth_reward(&self.cfg, &next);
        let obs = observe_all(&self.cfg, &next);
        let done = next.t == self.cfg.max_steps;
        self.state = Some(next);
        Ok(StepOutcome { obs, rewards, done })
    }

    /// Task metric of the current state.
    pub fn metric(&self) -> Option<f64> {
        self.state.as_ref().map(|s| task_metric(&self.cfg, s))
    }

    /// Per-entry `(lo, hi)` ranges an observation can take.
    pub fn obs_bounds(&self) -> Vec<(f64, f64)> {
        let c = &self.cfg;
        let v = (-c.max_speed, c.max_speed);
        let p = (-c.arena_half_width, c.arena_half_width);
        let r = (-2.0 * c.arena_half_width, 2.0 * c.arena_half_width);
        let mut b = vec![v, v, p, p];
        b.resize(c.obs_dim(), r);
        if c.kind == EnvKind::PredatorPrey {
            let pv = (-c.prey_max_speed, c.prey_max_speed);
            let start = c.obs_dim() - 2 * c.n_prey;
            b[start..].iter_mut().for_each(|x| *x = pv);
        }
        b
    }

    pub fn task_text(&self) -> TaskText {
        let c = &self.cfg;
        let mut form = vec![
            "x-velocity of this agent".to_string(),
            "y-velocity of this agent".into(),
            "x-position of this agent".into(),
            "y-position of this agent".into(),
        ];
        let rel = |form: &mut Vec<String>, what: &str, n: usize| {
            for k in 0..n {
                form.push(format!("x-offset from this agent to {what} {k}"));
                form.push(format!("y-offset from this agent to {what} {k}"));
            }
        };
        let others = (c.n_agents - 1).min(c.max_others_observed);
        let capped = c.n_agents - 1 > c.max_others_observed;
        let other_name = if capped { "the k-th nearest other agent" } else { "other agent" };
        let description = match c.kind {
            EnvKind::CooperativeNavigation => {
                let nl = c.n_entities.min(c.max_landmarks_observed);
                let lname = if c.n_entities > nl { "the k-th nearest landmark" } else { "landmark" };
                rel(&mut form, lname, nl);
                rel(&mut form, other_name, others);
                format!(
                    "{} agents move in a square arena of half-width {} containing {} landmarks. \
                     The team should place an agent on every landmark while agents avoid \
                     touching each other (agent radius {}).",
                    c.n_agents, c.arena_half_width, c.n_entities, c.agent_radius
                )
            }
            EnvKind::PredatorPrey => {
                rel(&mut form, "obstacle", c.n_entities);
                rel(&mut form, other_name, others);
                rel(&mut form, "prey", c.n_prey);
                for k in 0..c.n_prey {
                    form.push(format!("x-velocity of prey {k}"));
                    form.push(format!("y-velocity of prey {k}"));
                }
                format!(
                    "{} predator agents chase {} prey in a square arena of half-width {} with {} \
                     obstacles. Prey run away from the closest predator and are faster than \
                     predators. A prey within {} of a predator counts as caught by it.",
                    c.n_agents, c.n_prey, c.arena_half_width, c.n_entities, c.capture_radius
                )
            }
            EnvKind::TriangleArea => {
                rel(&mut form, "other agent", c.n_agents - 1);
                rel(&mut form, "obstacle", c.n_entities);
                format!(
                    "Three agents move in a square arena of half-width {} with {} obstacles. \
                     Together they should make the triangle whose corners are their positions \
                     as large as possible, while each agent keeps clear of the obstacles \
                     (contact when centres are closer than {}).",
                    c.arena_half_width,
                    c.n_entities,
                    c.agent_radius + c.obstacle_radius
                )
            }
            EnvKind::PointNavigation => {
                rel(&mut form, "the goal", 1);
                format!(
                    "A single agent moves in a square arena of half-width {} and should reach \
                     a goal point and stay on it.",
                    c.arena_half_width
                )
            }
        };
        let description = format!(
            "{description} Episodes last {} steps. Each step the velocity is multiplied by {} \
             and the chosen thrust adds {} times the step length {} to it.",
            c.max_steps, c.damping, c.accel, c.dt
        );
        TaskText {
            description,
            state_form: form
                .into_iter()
                .enumerate()
                .map(|(i, s)| format!("{i}: {s}"))
                .collect(),
            action_form: "one discrete action per agent: 0 no-op, 1 thrust +x, 2 thrust -x, \
                          3 thrust +y, 4 thrust -y"
                .into(),
        }
    }
}
