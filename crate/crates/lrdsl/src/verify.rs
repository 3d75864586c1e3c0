use lare_core::{ActionValue, Observation};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{EvalError, ParseError};
use crate::eval::EvalInput;
use crate::parser::{parse_program, LatentRewardProgram};
use crate::signature::EnvSignature;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyErrorKind {
    Parse,
    IndexOutOfRange,
    DomainError,
    NonFiniteOutput,
}

/// A probe state-action pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub obs: Observation,
    pub act: ActionValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_kind: Option<VerifyErrorKind>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failing_input: Option<Probe>,
}

impl VerificationReport {
    pub fn pass() -> Self {
        Self {
            ok: true,
            error_kind: None,
            message: String::new(),
            failing_input: None,
        }
    }

    pub fn fail(kind: VerifyErrorKind, message: impl Into<String>, input: Option<Probe>) -> Self {
        Self {
            ok: false,
            error_kind: Some(kind),
            message: message.into(),
            failing_input: input,
        }
    }

    pub fn from_parse_error(e: &ParseError) -> Self {
        let kind = match e {
            ParseError::IndexOutOfRange { .. } => VerifyErrorKind::IndexOutOfRange,
            _ => VerifyErrorKind::Parse,
        };
        Self::fail(kind, e.to_string(), None)
    }

    /// Human-readable summary suitable for feeding back to a generator.
    pub fn feedback(&self) -> String {
        if self.ok {
            return "ok".into();
        }
        let mut s = self.message.clone();
        if let Some(p) = &self.failing_input {
            let act = match &p.act {
                ActionValue::DiscreteIndex(k) => format!("{k}"),
                ActionValue::Continuous(v) => format!("{v:?}"),
            };
            s.push_str(&format!("\nfailing input: obs = {:?}, act = {act}", p.obs.as_slice()));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("probe set is empty")]
    EmptyProbes,
    #[error("probe {index} does not match the program signature: {message}")]
    BadProbe { index: usize, message: String },
}

/// Runs every factor on every probe and reports the first failure.
pub fn pre_verify(
    prog: &LatentRewardProgram,
    probes: &[Probe],
) -> Result<VerificationReport, VerifyError> {
    if probes.is_empty() {
        return Err(VerifyError::EmptyProbes);
    }
    for (index, p) in probes.iter().enumerate() {
        let input = EvalInput::<f64>::new(prog.signature(), &p.obs, &p.act).map_err(|e| {
            VerifyError::BadProbe {
                index,
                message: e.to_string(),
            }
        })?;
        match prog.eval_input(&input) {
            Ok(_) => {}
            Err(EvalError::Input(message)) => return Err(VerifyError::BadProbe { index, message }),
            Err(e @ EvalError::Domain { .. }) => {
                return Ok(VerificationReport::fail(
                    VerifyErrorKind::DomainError,
                    e.to_string(),
                    Some(p.clone()),
                ))
            }
            Err(e @ EvalError::NonFinite { .. }) => {
                return Ok(VerificationReport::fail(
                    VerifyErrorKind::NonFiniteOutput,
                    e.to_string(),
                    Some(p.clone()),
                ))
            }
        }
    }
    Ok(VerificationReport::pass())
}

/// Parses then pre-verifies; parse failures become report contents.
pub fn verify_source(
    source: &str,
    sig: &EnvSignature,
    probes: &[Probe],
) -> Result<(Option<LatentRewardProgram>, VerificationReport), VerifyError> {
    match parse_program(source, sig) {
        Ok(prog) => {
            let report = pre_verify(&prog, probes)?;
            Ok((Some(prog), report))
        }
        Err(e) => {
            if probes.is_empty() {
                return Err(VerifyError::EmptyProbes);
            }
            Ok((None, VerificationReport::from_parse_error(&e)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn probes(values: &[f64]) -> Vec<Probe> {
        values
            .iter()
            .map(|&v| Probe {
                obs: Observation::new(vec![v, 1.0]),
                act: ActionValue::DiscreteIndex(0),
            })
            .collect()
    }

    #[test]
    fn constant_program_passes() {
        let sig = EnvSignature::discrete(2, 3);
        let (_, r) = verify_source("1.0", &sig, &probes(&[0.0, -5.0])).unwrap();
        assert_eq!(r, VerificationReport::pass());
    }

    #[test]
    fn log_zero_fails_with_input() {
        let sig = EnvSignature::discrete(2, 3);
        let (_, r) = verify_source("log(obs[0])", &sig, &probes(&[1.0, 0.0, 2.0])).unwrap();
        assert!(!r.ok);
        assert_eq!(r.error_kind, Some(VerifyErrorKind::DomainError));
        assert_eq!(r.failing_input.as_ref().unwrap().obs.as_slice(), &[0.0, 1.0]);
        assert!(r.feedback().contains("failing input"));
    }

    #[test]
    fn parse_failures_are_reported() {
        let sig = EnvSignature::discrete(2, 3);
        let (p, r) = verify_source("obs[2]", &sig, &probes(&[1.0])).unwrap();
        assert!(p.is_none());
        assert_eq!(r.error_kind, Some(VerifyErrorKind::IndexOutOfRange));
        let (_, r) = verify_source("obs[0] +", &sig, &probes(&[1.0])).unwrap();
        assert_eq!(r.error_kind, Some(VerifyErrorKind::Parse));
    }

    #[test]
    fn empty_probe_set_is_rejected() {
        let sig = EnvSignature::discrete(2, 3);
        let p = parse_program("obs[0]", &sig).unwrap();
        assert_eq!(pre_verify(&p, &[]), Err(VerifyError::EmptyProbes));
    }

    #[test]
    fn mismatched_probe_is_a_caller_error() {
        let sig = EnvSignature::discrete(3, 3);
        let p = parse_program("obs[0]", &sig).unwrap();
        assert!(matches!(
            pre_verify(&p, &probes(&[1.0])),
            Err(VerifyError::BadProbe { index: 0, .. })
        ));
    }

    #[test]
    fn report_json_omits_empty_fields() {
        let s = serde_json::to_string(&VerificationReport::pass()).unwrap();
        assert_eq!(s, r#"{"ok":true}"#);
        let r = VerificationReport::fail(VerifyErrorKind::NonFiniteOutput, "x", None);
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.contains("non-finite-output"));
        let back: VerificationReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }
}
