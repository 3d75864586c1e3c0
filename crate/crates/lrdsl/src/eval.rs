use lare_core::{ActionValue, Observation, Scalar};

use crate::ast::{Arg, BinOp, Expr, Func, SliceRef, Source};
use crate::error::EvalError;
use crate::parser::LatentRewardProgram;
use crate::signature::{ActionKind, EnvSignature};

/// Flat numeric views of one state-action pair.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalInput<S> {
    pub obs: Vec<S>,
    pub act: Vec<S>,
    pub act_onehot: Vec<S>,
}

impl<S: Scalar> EvalInput<S> {
    /// Checks the pair against `sig` and lays it out for evaluation.
    pub fn new(sig: &EnvSignature, obs: &Observation, act: &ActionValue) -> Result<Self, EvalError> {
        if obs.len() != sig.obs_dim {
            return Err(EvalError::Input(format!(
                "observation has {} entries, expected {}",
                obs.len(),
                sig.obs_dim
            )));
        }
        let (act_v, onehot) = match (sig.action, act) {
            (ActionKind::Discrete { n }, ActionValue::DiscreteIndex(k)) => {
                if *k >= n {
                    return Err(EvalError::Input(format!("action {k} not below {n}")));
                }
                let mut oh = vec![S::zero(); n];
                oh[*k] = S::one();
                (vec![S::of_usize(*k)], oh)
            }
            (ActionKind::Continuous { dim }, ActionValue::Continuous(v)) => {
                if v.len() != dim {
                    return Err(EvalError::Input(format!(
                        "action has {} entries, expected {dim}",
                        v.len()
                    )));
                }
                (v.iter().map(|&x| S::c(x)).collect(), Vec::new())
            }
            (kind, _) => {
                return Err(EvalError::Input(format!(
                    "action kind does not match {kind:?}"
                )))
            }
        };
        Ok(Self {
            obs: obs.as_slice().iter().map(|&x| S::c(x)).collect(),
            act: act_v,
            act_onehot: onehot,
        })
    }

    fn vector(&self, src: Source) -> &[S] {
        match src {
            Source::Obs => &self.obs,
            Source::Act => &self.act,
            Source::ActOneHot => &self.act_onehot,
        }
    }

    fn get(&self, src: Source, i: usize) -> Result<S, EvalError> {
        self.vector(src).get(i).copied().ok_or_else(|| {
            EvalError::Input(format!("{}[{i}] is outside the input", src.keyword()))
        })
    }

    fn slice(&self, s: &SliceRef) -> Result<&[S], EvalError> {
        self.vector(s.src)
            .get(s.start..s.end)
            .ok_or_else(|| EvalError::Input(format!("{s} is outside the input")))
    }
}

struct Ctx<'a, S> {
    input: &'a EvalInput<S>,
    factor: usize,
}

impl<S: Scalar> Ctx<'_, S> {
    fn domain(&self, message: String) -> EvalError {
        EvalError::Domain {
            factor: self.factor,
            message,
        }
    }

    fn finite(&self, v: S, e: &Expr) -> Result<S, EvalError> {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite {
                factor: self.factor,
                expr: e.to_string(),
            })
        }
    }

    fn flatten(&self, args: &[Arg]) -> Result<Vec<S>, EvalError> {
        let mut out = Vec::new();
        for a in args {
            match a {
                Arg::Scalar(e) => out.push(self.eval(e)?),
                Arg::Slice(s) => out.extend_from_slice(self.input.slice(s)?),
            }
        }
        Ok(out)
    }

    fn eval(&self, e: &Expr) -> Result<S, EvalError> {
        let v = match e {
            Expr::Lit(v) => S::c(*v),
            Expr::Ref { src, index } => self.input.get(*src, *index)?,
            Expr::Neg(x) => -self.eval(x)?,
            Expr::Bin { op, lhs, rhs } => {
                let a = self.eval(lhs)?;
                let b = self.eval(rhs)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == S::zero() {
                            return Err(self.domain(format!("division by zero in `{e}`")));
                        }
                        a / b
                    }
                }
            }
            Expr::Call { func, args } => self.call(*func, args, e)?,
        };
        self.finite(v, e)
    }

    fn call(&self, func: Func, args: &[Arg], e: &Expr) -> Result<S, EvalError> {
        let scalar = |i: usize| match &args[i] {
            Arg::Scalar(x) => self.eval(x),
            Arg::Slice(_) => unreachable!("arity checked at parse time"),
        };
        Ok(match func {
            Func::Abs => scalar(0)?.abs(),
            Func::Sqrt => {
                let x = scalar(0)?;
                if x < S::zero() {
                    return Err(self.domain(format!("sqrt of negative value {x} in `{e}`")));
                }
                x.sqrt()
            }
            Func::Exp => scalar(0)?.exp(),
            Func::Log => {
                let x = scalar(0)?;
                if x <= S::zero() {
                    return Err(self.domain(format!("log of non-positive value {x} in `{e}`")));
                }
                x.ln()
            }
            Func::Tanh => scalar(0)?.tanh(),
            Func::Sign => {
                let x = scalar(0)?;
                if x > S::zero() {
                    S::one()
                } else if x < S::zero() {
                    -S::one()
                } else {
                    S::zero()
                }
            }
            Func::Clip => {
                let (x, lo, hi) = (scalar(0)?, scalar(1)?, scalar(2)?);
                if lo > hi {
                    return Err(self.domain(format!("clip bounds {lo} > {hi} in `{e}`")));
                }
                x.max(lo).min(hi)
            }
            Func::Dot => {
                let (Arg::Slice(a), Arg::Slice(b)) = (&args[0], &args[1]) else {
                    unreachable!("arity checked at parse time")
                };
                let (a, b) = (self.input.slice(a)?, self.input.slice(b)?);
                a.iter().zip(b).map(|(x, y)| *x * *y).sum()
            }
            Func::Min | Func::Max | Func::Sum | Func::Mean | Func::Norm1 | Func::Norm2 => {
                let xs = self.flatten(args)?;
                let first = xs[0];
                match func {
                    Func::Min => xs.into_iter().fold(first, S::min),
                    Func::Max => xs.into_iter().fold(first, S::max),
                    Func::Sum => xs.into_iter().sum(),
                    Func::Mean => {
                        let n = S::of_usize(xs.len());
                        xs.into_iter().sum::<S>() / n
                    }
                    Func::Norm1 => xs.into_iter().map(|x| x.abs()).sum(),
                    _ => xs.into_iter().map(|x| x * x).sum::<S>().sqrt(),
                }
            }
        })
    }
}

/// Evaluates one factor tree.
pub fn eval_expr<S: Scalar>(e: &Expr, input: &EvalInput<S>, factor: usize) -> Result<S, EvalError> {
    Ctx { input, factor }.eval(e)
}

impl LatentRewardProgram {
    /// Evaluates every factor on a prepared input.
    pub fn eval_input<S: Scalar>(&self, input: &EvalInput<S>) -> Result<Vec<S>, EvalError> {
        self.factors()
            .iter()
            .enumerate()
            .map(|(i, f)| eval_expr(f, input, i))
            .collect()
    }

    /// Latent reward vector for one state-action pair.
    pub fn eval(&self, obs: &Observation, act: &ActionValue) -> Result<Vec<f64>, EvalError> {
        self.eval_input(&EvalInput::new(self.signature(), obs, act)?)
    }
}

/// Free-function form of [`LatentRewardProgram::eval`].
pub fn eval_program(
    prog: &LatentRewardProgram,
    obs: &Observation,
    act: &ActionValue,
) -> Result<Vec<f64>, EvalError> {
    prog.eval(obs, act)
}
