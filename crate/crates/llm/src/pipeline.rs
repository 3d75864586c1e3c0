use lare_lrdsl::{parse_program, pre_verify, LatentRewardProgram, Probe, VerificationReport, VerifyErrorKind};
use serde::{Deserialize, Serialize};

use crate::backend::ChatBackend;
use crate::error::{LlmError, Result};
use crate::extract::extract_fields;
use crate::prompt::{build_prompt, Message, RoleTemplate, TaskSpec};

/// One reply, with the program it contained if any.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidateResponse {
    pub raw_text: String,
    pub understand: String,
    pub analyze: String,
    /// Extracted program text; empty when the reply contained none.
    pub program_source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parse_error: Option<String>,
    #[serde(skip)]
    pub parsed: Option<LatentRewardProgram>,
}

impl CandidateResponse {
    pub fn from_reply(raw: impl Into<String>, task: &TaskSpec) -> Self {
        let raw_text = raw.into();
        let ex = extract_fields(&raw_text);
        let (program_source, parsed, parse_error) = match ex.functions {
            None => (String::new(), None, Some("no program found in the reply".to_string())),
            Some(src) => match parse_program(&src, &task.signature) {
                Ok(p) => (src, Some(p), None),
                Err(e) => (src, None, Some(e.to_string())),
            },
        };
        Self {
            raw_text,
            understand: ex.understand,
            analyze: ex.analyze,
            program_source,
            parse_error,
            parsed,
        }
    }

    pub fn has_program(&self) -> bool {
        !self.program_source.trim().is_empty()
    }
}

/// A request and the reply it received.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exchange {
    pub messages: Vec<Message>,
    pub reply: String,
}

fn ask(backend: &mut dyn ChatBackend, messages: Vec<Message>) -> Result<Exchange> {
    let reply = backend.complete(&messages)?;
    Ok(Exchange { messages, reply })
}

fn candidates_logged(
    backend: &mut dyn ChatBackend,
    role: &RoleTemplate,
    task: &TaskSpec,
    n: usize,
) -> Result<(Vec<CandidateResponse>, Vec<Exchange>)> {
    if n == 0 {
        return Err(LlmError::Precondition("at least one candidate is needed".into()));
    }
    task.validate()?;
    let prompt = build_prompt(role, task, None, None)?;
    let mut cands = Vec::with_capacity(n);
    let mut log = Vec::with_capacity(n);
    for _ in 0..n {
        let ex = ask(backend, prompt.clone())?;
        cands.push(CandidateResponse::from_reply(ex.reply.clone(), task));
        log.push(ex);
    }
    if !cands.iter().any(CandidateResponse::has_program) {
        return Err(LlmError::DegenerateBatch { n });
    }
    Ok((cands, log))
}

/// Requests `n` independent candidate programs for `task`. Requests are
/// issued one after another, so replies keep their index order.
pub fn generate_candidates(
    backend: &mut dyn ChatBackend,
    role: &RoleTemplate,
    task: &TaskSpec,
    n: usize,
) -> Result<Vec<CandidateResponse>> {
    candidates_logged(backend, role, task, n).map(|(c, _)| c)
}

/// Asks for one program combining `candidates`.
pub fn summarize_candidates(
    backend: &mut dyn ChatBackend,
    role: &RoleTemplate,
    task: &TaskSpec,
    candidates: &[CandidateResponse],
) -> Result<CandidateResponse> {
    if candidates.is_empty() {
        return Err(LlmError::Precondition("nothing to summarize".into()));
    }
    let ex = ask(backend, build_prompt(role, task, Some(candidates), None)?)?;
    Ok(CandidateResponse::from_reply(ex.reply, task))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeriveOptions {
    #[serde(default = "default_n")]
    pub n_candidates: usize,
    /// Summarization rounds allowed, the first included.
    #[serde(default = "default_rounds")]
    pub max_repair_rounds: usize,
    /// Check each summary on the probe set before accepting it.
    #[serde(default = "default_true")]
    pub pre_verify: bool,
}

fn default_n() -> usize {
    5
}
fn default_rounds() -> usize {
    5
}
fn default_true() -> bool {
    true
}

impl Default for DeriveOptions {
    fn default() -> Self {
        Self {
            n_candidates: default_n(),
            max_repair_rounds: default_rounds(),
            pre_verify: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundLog {
    pub round: usize,
    /// Error text included in this round's prompt.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedback: Option<String>,
    pub exchange: Exchange,
    pub candidate: CandidateResponse,
    /// Absent when verification was skipped.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<VerificationReport>,
}

/// Everything sent and received during one derivation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DerivationLog {
    pub options: DeriveOptions,
    pub candidates: Vec<Exchange>,
    pub rounds: Vec<RoundLog>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_source: Option<String>,
}

impl DerivationLog {
    pub fn succeeded(&self) -> bool {
        self.final_source.is_some()
    }

    pub fn error_feedback_rounds(&self) -> usize {
        self.rounds.iter().filter(|r| r.feedback.is_some()).count()
    }

    /// Replies in request order.
    pub fn replies(&self) -> Vec<String> {
        self.candidates
            .iter()
            .chain(self.rounds.iter().map(|r| &r.exchange))
            .map(|e| e.reply.clone())
            .collect()
    }

    /// Requests in order.
    pub fn requests(&self) -> Vec<&[Message]> {
        self.candidates
            .iter()
            .chain(self.rounds.iter().map(|r| &r.exchange))
            .map(|e| e.messages.as_slice())
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("log serializes")
    }
}

fn check(cand: &CandidateResponse, probes: &[Probe], verify: bool) -> Result<VerificationReport> {
    let Some(p) = &cand.parsed else {
        let msg = cand.parse_error.clone().unwrap_or_default();
        return Ok(VerificationReport::fail(VerifyErrorKind::Parse, msg, None));
    };
    if verify {
        Ok(pre_verify(p, probes)?)
    } else {
        Ok(VerificationReport::pass())
    }
}

/// Generates candidates, summarizes them and repairs the summary until a
/// program passes verification on `probes` or the round budget runs out.
///
/// With `pre_verify` off, the first summary that parses is accepted
/// unchecked.
pub fn derive_latent_reward_fn(
    backend: &mut dyn ChatBackend,
    role: &RoleTemplate,
    task: &TaskSpec,
    probes: &[Probe],
    opts: DeriveOptions,
) -> Result<(LatentRewardProgram, DerivationLog)> {
    if opts.max_repair_rounds == 0 {
        return Err(LlmError::Precondition("at least one round is needed".into()));
    }
    if opts.pre_verify && probes.is_empty() {
        return Err(LlmError::Precondition("verification needs probes".into()));
    }
    let (cands, cand_log) = candidates_logged(backend, role, task, opts.n_candidates)?;
    let mut log = DerivationLog {
        options: opts,
        candidates: cand_log,
        rounds: Vec::new(),
        final_source: None,
    };
    let mut feedback: Option<String> = None;
    for round in 1..=opts.max_repair_rounds {
        let prompt = build_prompt(role, task, Some(&cands), feedback.as_deref())?;
        let exchange = ask(backend, prompt)?;
        let cand = CandidateResponse::from_reply(exchange.reply.clone(), task);
        let report = check(&cand, probes, opts.pre_verify)?;
        let next = (!report.ok).then(|| {
            format!(
                "Previous program:\n{}\n\nError: {}",
                cand.program_source.trim_end(),
                report.feedback()
            )
        });
        let program = if report.ok { cand.parsed.clone() } else { None };
        log.rounds.push(RoundLog {
            round,
            feedback: feedback.take(),
            exchange,
            candidate: cand,
            report: (opts.pre_verify || !report.ok).then_some(report),
        });
        if let Some(p) = program {
            log.final_source = Some(p.to_string());
            return Ok((p, log));
        }
        feedback = next;
    }
    Err(LlmError::DerivationFailed {
        rounds: opts.max_repair_rounds,
        log: Box::new(log),
    })
}

/// Whether `program` evaluates on every probe without error.
pub fn is_executable(program: &LatentRewardProgram, probes: &[Probe]) -> bool {
    pre_verify(program, probes).map(|r| r.ok).unwrap_or(false)
}
