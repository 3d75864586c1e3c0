//! Prompt assembly. Every prompt is a system message carrying the role
//! instruction and a user message carrying the task, optionally followed by
//! earlier candidates and a verification error.

use lare_lrdsl::EnvSignature;
use serde::{Deserialize, Serialize};

use crate::error::{LlmError, Result};
use crate::pipeline::CandidateResponse;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: "system".into(),
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: "user".into(),
            content: content.into(),
        }
    }
}

/// What the generator is told about a task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub task_description: String,
    /// One line per observation entry.
    pub state_form: Vec<String>,
    pub action_form: String,
    pub signature: EnvSignature,
}

impl TaskSpec {
    pub fn new(
        task_description: impl Into<String>,
        state_form: Vec<String>,
        action_form: impl Into<String>,
        signature: EnvSignature,
    ) -> Result<Self> {
        let t = Self {
            task_description: task_description.into(),
            state_form,
            action_form: action_form.into(),
            signature,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.task_description.trim().is_empty() {
            return Err(LlmError::Precondition("task description is empty".into()));
        }
        if self.state_form.is_empty() {
            return Err(LlmError::Precondition("state form is empty".into()));
        }
        Ok(())
    }
}

pub const ROLE_INSTRUCTION: &str = "\
You design latent reward programs for episodic reinforcement learning. The agent is trained \
from a single return received at the end of each episode, and a latent reward program helps \
assign that return to individual steps. A program is a list of factors. Each factor is an \
expression that maps one agent's current observation and action to a real number measuring \
one aspect of how well the task is going. Prefer a handful of factors that each track a \
distinct, task-relevant quantity.";

pub const LANGUAGE_GUIDE: &str = "\
Factor language:
- obs[i] is entry i of the observation, act[0] the action (the action index for discrete \
actions) and act_onehot[i] the one-hot encoding of a discrete action.
- obs[a..b] is the half-open slice a, a+1, ..., b-1; slices may only appear as function \
arguments.
- Operators: + - * / and parentheses; numeric literals such as 2, 0.5, 1e-3.
- Functions of one number: abs, sqrt, exp, log, tanh, sign.
- clip(x, lo, hi).
- min, max, sum, mean, norm1, norm2 accept any mix of numbers and slices.
- dot(slice, slice) with slices of equal length.
- Division by zero, log of a non-positive number, sqrt of a negative number and non-finite \
results are errors, so guard denominators, e.g. 1 / (1 + x).";

pub const RESPONSE_FORMAT: &str = "\
Reply with one JSON object with the keys \"Understand\" (your reading of the task and the \
observation layout), \"Analyze\" (the aspects of performance you chose to measure) and \
\"Functions\" (a list of factor expressions, one string per factor).";

pub const SUMMARIZE_INSTRUCTION: &str = "\
The programs above were written independently for this task. Merge them into a single \
improved program: keep every distinct factor that appears in any of them, drop duplicates, \
and rewrite anything that could fail to evaluate.";

pub const REPAIR_INSTRUCTION: &str = "\
Your previous program failed when evaluated on sampled observations. Return a corrected \
program in the same JSON format.";

/// Instruction text shared by every task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleTemplate {
    pub instruction: String,
    pub language: String,
    pub response_format: String,
    pub summarize: String,
    pub repair: String,
}

impl Default for RoleTemplate {
    fn default() -> Self {
        Self {
            instruction: ROLE_INSTRUCTION.into(),
            language: LANGUAGE_GUIDE.into(),
            response_format: RESPONSE_FORMAT.into(),
            summarize: SUMMARIZE_INSTRUCTION.into(),
            repair: REPAIR_INSTRUCTION.into(),
        }
    }
}

fn task_section(task: &TaskSpec) -> String {
    let mut s = format!("Task:\n{}\n\nObservation ({} entries):\n", task.task_description, task.state_form.len());
    for line in &task.state_form {
        s.push_str(line);
        s.push('\n');
    }
    s.push_str("\nAction:\n");
    s.push_str(&task.action_form);
    s.push('\n');
    s
}

/// Builds the message sequence for initial generation, summarization
/// (`prior` present) or repair (`prior` and `error` present).
pub fn build_prompt(
    role: &RoleTemplate,
    task: &TaskSpec,
    prior: Option<&[CandidateResponse]>,
    error: Option<&str>,
) -> Result<Vec<Message>> {
    if error.is_some() && prior.is_none() {
        return Err(LlmError::Precondition("an error prompt needs the prior candidates".into()));
    }
    let system = format!("{}\n\n{}\n\n{}", role.instruction, role.language, role.response_format);
    let mut user = task_section(task);
    if let Some(cands) = prior {
        for (i, c) in cands.iter().enumerate() {
            user.push_str(&format!("\nCandidate {}:\n", i + 1));
            let body = if c.program_source.trim().is_empty() {
                &c.raw_text
            } else {
                &c.program_source
            };
            user.push_str(body.trim_end());
            user.push('\n');
        }
        user.push('\n');
        user.push_str(&role.summarize);
        user.push('\n');
    }
    if let Some(e) = error {
        user.push('\n');
        user.push_str(&role.repair);
        user.push_str("\n\n");
        user.push_str(e);
        user.push('\n');
    }
    Ok(vec![Message::system(system), Message::user(user)])
}
