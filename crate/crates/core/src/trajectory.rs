//! Episodes as recorded by the environments.
//!
//! Per-step ground-truth rewards travel with every [`Step`] so that metrics can
//! compare proxy rewards against them, but learning code only ever sees an
//! [`EpisodeView`], which exposes observations, actions and the episodic
//! return and nothing else.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Tolerance of the sum-form check between the episodic return and the
/// per-step rewards.
pub const SUM_FORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Observation(pub Vec<f64>);

impl Observation {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl From<Vec<f64>> for Observation {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionValue {
    DiscreteIndex(usize),
    Continuous(Vec<f64>),
}

impl ActionValue {
    pub fn discrete(&self) -> Option<usize> {
        match self {
            ActionValue::DiscreteIndex(i) => Some(*i),
            ActionValue::Continuous(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub per_agent_obs: Vec<Observation>,
    pub per_agent_action: Vec<ActionValue>,
    /// Evaluation only. Never read by reward decomposition.
    pub per_agent_gt_reward: Vec<f64>,
    pub timestep: usize,
}

impl Step {
    pub fn n_agents(&self) -> usize {
        self.per_agent_obs.len()
    }

    fn validate(&self) -> Result<()> {
        let n = self.per_agent_obs.len();
        if n == 0 {
            return Err(CoreError::InvalidInput("step with zero agents".into()));
        }
        if self.per_agent_action.len() != n || self.per_agent_gt_reward.len() != n {
            return Err(CoreError::InvalidInput(format!(
                "step {}: per-agent list lengths differ ({} obs, {} actions, {} rewards)",
                self.timestep,
                n,
                self.per_agent_action.len(),
                self.per_agent_gt_reward.len()
            )));
        }
        if let Some(r) = self.per_agent_gt_reward.iter().find(|r| !r.is_finite()) {
            return Err(CoreError::NonFinite(format!(
                "ground-truth reward {r} at step {}",
                self.timestep
            )));
        }
        Ok(())
    }
}

/// How the episodic return relates to the per-step rewards.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReturnKind {
    /// `R(τ)` is the sum of all per-step, per-agent rewards.
    #[default]
    Sum,
    /// `R(τ)` is a task-completion indicator; the sum form does not hold.
    Sparse,
}

impl ReturnKind {
    fn is_sum(&self) -> bool {
        matches!(self, ReturnKind::Sum)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTrajectory")]
pub struct Trajectory {
    steps: Vec<Step>,
    episodic_return: f64,
    length: usize,
    #[serde(default, skip_serializing_if = "ReturnKind::is_sum")]
    return_kind: ReturnKind,
}

#[derive(Deserialize)]
struct RawTrajectory {
    steps: Vec<Step>,
    episodic_return: f64,
    length: usize,
    #[serde(default)]
    return_kind: ReturnKind,
}

impl TryFrom<RawTrajectory> for Trajectory {
    type Error = CoreError;

    fn try_from(raw: RawTrajectory) -> Result<Self> {
        if raw.length != raw.steps.len() {
            return Err(CoreError::InvalidInput(format!(
                "length {} does not match {} steps",
                raw.length,
                raw.steps.len()
            )));
        }
        let t = Trajectory::with_return(raw.steps, raw.episodic_return, raw.return_kind)?;
        if raw.return_kind == ReturnKind::Sum && !t.sum_form_holds() {
            return Err(CoreError::InvalidInput(
                "episodic_return violates the sum form".into(),
            ));
        }
        Ok(t)
    }
}

/// Sum of every per-agent ground-truth reward over `steps`.
pub fn summed_rewards(steps: &[Step]) -> f64 {
    steps
        .iter()
        .flat_map(|s| s.per_agent_gt_reward.iter())
        .sum()
}

impl Trajectory {
    /// Builds a sum-form trajectory whose return is the total per-step reward.
    pub fn from_steps(steps: Vec<Step>) -> Result<Self> {
        let ret = summed_rewards(&steps);
        Self::with_return(steps, ret, ReturnKind::Sum)
    }

    pub fn with_return(steps: Vec<Step>, episodic_return: f64, kind: ReturnKind) -> Result<Self> {
        if steps.is_empty() {
            return Err(CoreError::InvalidInput("empty trajectory".into()));
        }
        let n = steps[0].n_agents();
        for s in &steps {
            s.validate()?;
            if s.n_agents() != n {
                return Err(CoreError::InvalidInput(format!(
                    "agent count changes from {n} to {} at step {}",
                    s.n_agents(),
                    s.timestep
                )));
            }
        }
        if !episodic_return.is_finite() {
            return Err(CoreError::NonFinite(format!(
                "episodic return {episodic_return}"
            )));
        }
        Ok(Self {
            length: steps.len(),
            steps,
            episodic_return,
            return_kind: kind,
        })
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.length
    }

    pub fn is_empty(&self) -> bool {
        self.length == 0
    }

    pub fn n_agents(&self) -> usize {
        self.steps[0].n_agents()
    }

    pub fn return_kind(&self) -> ReturnKind {
        self.return_kind
    }

    /// The stored episodic return `R(τ)`.
    pub fn episodic_return(&self) -> f64 {
        debug_assert!(
            self.sum_form_holds(),
            "sum-form violated: R = {}, Σr = {}",
            self.episodic_return,
            summed_rewards(&self.steps)
        );
        self.episodic_return
    }

    pub fn sum_form_holds(&self) -> bool {
        match self.return_kind {
            ReturnKind::Sum => {
                (self.episodic_return - summed_rewards(&self.steps)).abs() <= SUM_FORM_TOLERANCE
            }
            ReturnKind::Sparse => true,
        }
    }

    /// Ground-truth reward of `agent` at step `t`. Evaluation only.
    pub fn gt_reward(&self, t: usize, agent: usize) -> f64 {
        self.steps[t].per_agent_gt_reward[agent]
    }

    pub fn view(&self) -> EpisodeView<'_> {
        EpisodeView { traj: self }
    }
}

/// `R(τ)`, rejecting empty trajectories.
pub fn trajectory_return(traj: &Trajectory) -> Result<f64> {
    if traj.is_empty() {
        return Err(CoreError::InvalidInput("empty trajectory".into()));
    }
    Ok(traj.episodic_return())
}

/// Read-only window on a trajectory without its per-step rewards.
#[derive(Debug, Clone, Copy)]
pub struct EpisodeView<'a> {
    traj: &'a Trajectory,
}

impl<'a> EpisodeView<'a> {
    pub fn len(&self) -> usize {
        self.traj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traj.is_empty()
    }

    pub fn n_agents(&self) -> usize {
        self.traj.n_agents()
    }

    pub fn obs(&self, t: usize, agent: usize) -> &'a Observation {
        &self.traj.steps[t].per_agent_obs[agent]
    }

    pub fn action(&self, t: usize, agent: usize) -> &'a ActionValue {
        &self.traj.steps[t].per_agent_action[agent]
    }

    pub fn episodic_return(&self) -> f64 {
        self.traj.episodic_return
    }
}

pub fn write_jsonl<W: Write>(mut w: W, trajectories: &[Trajectory]) -> Result<()> {
    for t in trajectories {
        serde_json::to_writer(&mut w, t)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_jsonl<R: BufRead>(r: R) -> Result<Vec<Trajectory>> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn step(t: usize, rewards: &[f64]) -> Step {
        Step {
            per_agent_obs: rewards.iter().map(|_| Observation::new(vec![t as f64])).collect(),
            per_agent_action: rewards.iter().map(|_| ActionValue::DiscreteIndex(0)).collect(),
            per_agent_gt_reward: rewards.to_vec(),
            timestep: t,
        }
    }

    #[test]
    fn return_of_single_agent_steps() {
        let t = Trajectory::from_steps(vec![step(0, &[1.0]), step(1, &[2.0]), step(2, &[3.0])])
            .unwrap();
        assert_eq!(trajectory_return(&t).unwrap(), 6.0);
    }

    #[test]
    fn zero_reward_single_step() {
        let t = Trajectory::from_steps(vec![step(0, &[0.0])]).unwrap();
        assert_eq!(trajectory_return(&t).unwrap(), 0.0);
    }

    #[test]
    fn two_agents_three_steps() {
        let steps = (0..3).map(|i| step(i, &[0.5, 0.5])).collect();
        let t = Trajectory::from_steps(steps).unwrap();
        assert_eq!(trajectory_return(&t).unwrap(), 3.0);
        assert_eq!(t.len(), 3);
        assert_eq!(t.n_agents(), 2);
    }

    #[test]
    fn empty_is_invalid() {
        assert!(matches!(
            Trajectory::from_steps(vec![]),
            Err(CoreError::InvalidInput(_))
        ));
    }

    #[test]
    fn ragged_agents_rejected() {
        let r = Trajectory::from_steps(vec![step(0, &[1.0]), step(1, &[1.0, 2.0])]);
        assert!(r.is_err());
    }

    #[test]
    fn non_finite_reward_rejected() {
        assert!(Trajectory::from_steps(vec![step(0, &[f64::NAN])]).is_err());
    }

    #[test]
    fn sparse_return_skips_sum_check() {
        let t = Trajectory::with_return(vec![step(0, &[0.3])], 1.0, ReturnKind::Sparse).unwrap();
        assert_eq!(t.episodic_return(), 1.0);
        assert!(t.sum_form_holds());
    }

    #[test]
    fn jsonl_roundtrip_and_keys() {
        let a = Trajectory::from_steps(vec![step(0, &[1.0, 2.0])]).unwrap();
        let b = Trajectory::with_return(vec![step(0, &[0.1])], 0.0, ReturnKind::Sparse).unwrap();
        let mut buf = Vec::new();
        write_jsonl(&mut buf, &[a.clone(), b.clone()]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        let keys: Vec<_> = first.as_object().unwrap().keys().cloned().collect();
        assert_eq!(keys, vec!["episodic_return", "length", "steps"]);
        let back = read_jsonl(buf.as_slice()).unwrap();
        assert_eq!(back, vec![a, b]);
    }

    #[test]
    fn jsonl_rejects_inconsistent_return() {
        let line = r#"{"steps":[{"per_agent_obs":[[0.0]],"per_agent_action":[{"discrete_index":0}],"per_agent_gt_reward":[1.0],"timestep":0}],"episodic_return":5.0,"length":1}"#;
        assert!(read_jsonl(line.as_bytes()).is_err());
    }

    #[test]
    fn view_hides_rewards_but_keeps_return() {
        let t = Trajectory::from_steps(vec![step(0, &[1.5]), step(1, &[2.5])]).unwrap();
        let v = t.view();
        assert_eq!(v.len(), 2);
        assert_eq!(v.episodic_return(), 4.0);
        assert_eq!(v.obs(1, 0).as_slice(), &[1.0]);
    }
}
