use crate::ast::{Arg, BinOp, Expr, Func, SliceRef, Source};
use crate::error::ParseError;
use crate::lexer::{lex, Tok, Token};
use crate::signature::EnvSignature;

pub const MAX_DEPTH: usize = 64;
pub const MAX_FACTORS: usize = 32;

/// A parsed list of factor expressions bound to one environment signature.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentRewardProgram {
    factors: Vec<Expr>,
    sig: EnvSignature,
}

impl LatentRewardProgram {
    pub fn factors(&self) -> &[Expr] {
        &self.factors
    }

    /// Number of factors, the latent reward dimension.
    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn signature(&self) -> &EnvSignature {
        &self.sig
    }

    /// Builds a program from already-constructed trees, applying the same
    /// checks as parsing.
    pub fn from_factors(factors: Vec<Expr>, sig: EnvSignature) -> Result<Self, ParseError> {
        if factors.is_empty() || factors.len() > MAX_FACTORS {
            return Err(ParseError::FactorCount {
                got: factors.len(),
                max: MAX_FACTORS,
            });
        }
        for (i, f) in factors.iter().enumerate() {
            let line = i + 1;
            if f.depth() > MAX_DEPTH {
                return Err(ParseError::TooDeep {
                    line,
                    max: MAX_DEPTH,
                });
            }
            let mut bad = None;
            f.visit_refs(&mut |src, idx| {
                let len = src_len(&sig, src);
                if bad.is_none() && idx >= len {
                    bad = Some((format!("{}[{idx}]", src.keyword()), len));
                }
            });
            if let Some((reference, len)) = bad {
                return Err(ParseError::IndexOutOfRange {
                    line,
                    col: 1,
                    reference,
                    len,
                });
            }
        }
        Ok(Self { factors, sig })
    }
}

impl std::fmt::Display for LatentRewardProgram {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for e in &self.factors {
            writeln!(f, "{e}")?;
        }
        Ok(())
    }
}

fn src_len(sig: &EnvSignature, src: Source) -> usize {
    match src {
        Source::Obs => sig.obs_dim,
        Source::Act => sig.act_dim(),
        Source::ActOneHot => sig.onehot_dim(),
    }
}

/// Parses one factor per non-blank line; `#` starts a comment.
pub fn parse_program(source: &str, sig: &EnvSignature) -> Result<LatentRewardProgram, ParseError> {
    let mut factors = Vec::new();
    for (i, raw) in source.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        if factors.len() == MAX_FACTORS {
            return Err(ParseError::FactorCount {
                got: MAX_FACTORS + 1,
                max: MAX_FACTORS,
            });
        }
        factors.push(parse_factor(line, i + 1, sig)?);
    }
    if factors.is_empty() {
        return Err(ParseError::FactorCount {
            got: 0,
            max: MAX_FACTORS,
        });
    }
    Ok(LatentRewardProgram {
        factors,
        sig: *sig,
    })
}

/// Parses a single factor expression.
pub fn parse_factor(text: &str, line: usize, sig: &EnvSignature) -> Result<Expr, ParseError> {
    let toks = lex(text, line)?;
    let mut p = Parser {
        toks,
        pos: 0,
        line,
        end_col: text.chars().count() + 1,
        sig,
    };
    let (e, _) = p.expr(0)?;
    if let Some(t) = p.peek() {
        return Err(p.err_at(t.col, format!("unexpected {}", describe(&t.tok))));
    }
    Ok(e)
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    line: usize,
    end_col: usize,
    sig: &'a EnvSignature,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(v) => format!("number {v}"),
        Tok::Ident(s) => format!("`{s}`"),
        Tok::LBracket => "`[`".into(),
        Tok::RBracket => "`]`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::DotDot => "`..`".into(),
        Tok::Plus => "`+`".into(),
        Tok::Minus => "`-`".into(),
        Tok::Star => "`*`".into(),
        Tok::Slash => "`/`".into(),
    }
}

fn source_of(name: &str) -> Option<Source> {
    match name {
        "obs" => Some(Source::Obs),
        "act" => Some(Source::Act),
        "act_onehot" => Some(Source::ActOneHot),
        _ => None,
    }
}

type Parsed = Result<(Expr, usize), ParseError>;

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn peek_tok(&self, ahead: usize) -> Option<&Tok> {
        self.toks.get(self.pos + ahead).map(|t| &t.tok)
    }

    fn col(&self) -> usize {
        self.peek().map_or(self.end_col, |t| t.col)
    }

    fn err_at(&self, col: usize, message: String) -> ParseError {
        ParseError::Syntax {
            line: self.line,
            col,
            message,
        }
    }

    fn err_here(&self, what: &str) -> ParseError {
        match self.peek() {
            Some(t) => self.err_at(t.col, format!("expected {what}, found {}", describe(&t.tok))),
            None => self.err_at(self.end_col, format!("expected {what}, found end of line")),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek_tok(0) == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err_here(what))
        }
    }

    fn check_depth(&self, depth: usize) -> Result<(), ParseError> {
        if depth > MAX_DEPTH {
            Err(ParseError::TooDeep {
                line: self.line,
                max: MAX_DEPTH,
            })
        } else {
            Ok(())
        }
    }

    /// `nest` counts enclosing parentheses, negations and calls so that
    /// recursion stays bounded on hostile input.
    fn expr(&mut self, nest: usize) -> Parsed {
        let (mut lhs, mut d) = self.term(nest)?;
        loop {
            let op = match self.peek_tok(0) {
                Some(Tok::Plus) => BinOp::Add,
                Some(Tok::Minus) => BinOp::Sub,
                _ => return Ok((lhs, d)),
            };
            self.pos += 1;
            let (rhs, rd) = self.term(nest)?;
            d = 1 + d.max(rd);
            self.check_depth(d)?;
            lhs = Expr::Bin {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
    }

    fn term(&mut self, nest: usize) -> Parsed {
        let (mut lhs, mut d) = self.unary(nest)?;
        loop {
            let op = match self.peek_tok(0) {
                Some(Tok::Star) => BinOp::Mul,
                Some(Tok::Slash) => BinOp::Div,
                _ => return Ok((lhs, d)),
            };
            self.pos += 1;
            let (rhs, rd) = self.unary(nest)?;
            d = 1 + d.max(rd);
            self.check_depth(d)?;
            lhs = Expr::Bin {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
    }

    fn unary(&mut self, nest: usize) -> Parsed {
        self.check_depth(nest + 1)?;
        if self.peek_tok(0) == Some(&Tok::Minus) {
            self.pos += 1;
            let (e, d) = self.unary(nest + 1)?;
            self.check_depth(d + 1)?;
            return Ok((Expr::Neg(Box::new(e)), d + 1));
        }
        self.primary(nest)
    }

    fn primary(&mut self, nest: usize) -> Parsed {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.err_here("an expression"));
        };
        match tok.tok {
            Tok::Num(v) => {
                self.pos += 1;
                Ok((Expr::Lit(v), 1))
            }
            Tok::LParen => {
                self.pos += 1;
                let r = self.expr(nest + 1)?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(r)
            }
            Tok::Ident(name) => {
                if let Some(src) = source_of(&name) {
                    self.pos += 1;
                    match self.index_or_slice(src, tok.col)? {
                        Arg::Scalar(e) => Ok((e, 1)),
                        Arg::Slice(_) => Err(self.err_at(
                            tok.col,
                            "a slice is only allowed as a function argument".into(),
                        )),
                    }
                } else if let Some(func) = Func::from_name(&name) {
                    self.pos += 1;
                    self.call(func, tok.col, nest)
                } else {
                    Err(self.err_at(tok.col, format!("unknown name `{name}`")))
                }
            }
            _ => Err(self.err_here("an expression")),
        }
    }

    fn index(&mut self) -> Result<(usize, usize), ParseError> {
        let col = self.col();
        match self.peek_tok(0) {
            Some(Tok::Num(v)) if v.fract() == 0.0 && *v >= 0.0 && *v < 1e9 => {
                let v = *v as usize;
                self.pos += 1;
                Ok((v, col))
            }
            _ => Err(self.err_here("a non-negative integer index")),
        }
    }

    fn index_or_slice(&mut self, src: Source, col: usize) -> Result<Arg, ParseError> {
        self.expect(Tok::LBracket, "`[`")?;
        let (start, _) = self.index()?;
        let len = src_len(self.sig, src);
        if self.peek_tok(0) == Some(&Tok::DotDot) {
            self.pos += 1;
            let (end, end_col) = self.index()?;
            self.expect(Tok::RBracket, "`]`")?;
            let s = SliceRef { src, start, end };
            if s.is_empty() {
                return Err(self.err_at(end_col, format!("empty slice `{s}`")));
            }
            if end > len {
                return Err(ParseError::IndexOutOfRange {
                    line: self.line,
                    col,
                    reference: s.to_string(),
                    len,
                });
            }
            Ok(Arg::Slice(s))
        } else {
            self.expect(Tok::RBracket, "`]` or `..`")?;
            if start >= len {
                return Err(ParseError::IndexOutOfRange {
                    line: self.line,
                    col,
                    reference: format!("{}[{start}]", src.keyword()),
                    len,
                });
            }
            Ok(Arg::Scalar(Expr::Ref { src, index: start }))
        }
    }

    fn is_slice_ahead(&self) -> bool {
        matches!(self.peek_tok(0), Some(Tok::Ident(n)) if source_of(n).is_some())
            && self.peek_tok(1) == Some(&Tok::LBracket)
            && matches!(self.peek_tok(2), Some(Tok::Num(_)))
            && self.peek_tok(3) == Some(&Tok::DotDot)
    }

    fn call(&mut self, func: Func, col: usize, nest: usize) -> Parsed {
        self.expect(Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        let mut d = 0;
        if self.peek_tok(0) != Some(&Tok::RParen) {
            loop {
                if self.is_slice_ahead() {
                    let ident_col = self.col();
                    let Some(Tok::Ident(n)) = self.peek_tok(0).cloned() else {
                        unreachable!()
                    };
                    self.pos += 1;
                    let src = source_of(&n).expect("checked by lookahead");
                    args.push(self.index_or_slice(src, ident_col)?);
                    d = d.max(1);
                } else {
                    let (e, ed) = self.expr(nest + 1)?;
                    args.push(Arg::Scalar(e));
                    d = d.max(ed);
                }
                match self.peek_tok(0) {
                    Some(Tok::Comma) => self.pos += 1,
                    Some(Tok::RParen) => break,
                    _ => return Err(self.err_here("`,` or `)`")),
                }
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        check_arity(func, &args).map_err(|m| self.err_at(col, m))?;
        let d = d + 1;
        self.check_depth(d)?;
        Ok((Expr::Call { func, args }, d))
    }
}

/// Validates argument shapes for `func`.
pub(crate) fn check_arity(func: Func, args: &[Arg]) -> Result<(), String> {
    let name = func.name();
    let n_slices = args.iter().filter(|a| matches!(a, Arg::Slice(_))).count();
    match func {
        Func::Abs | Func::Sqrt | Func::Exp | Func::Log | Func::Tanh | Func::Sign => {
            if args.len() != 1 || n_slices != 0 {
                return Err(format!("`{name}` takes exactly one scalar argument"));
            }
        }
        Func::Clip => {
            if args.len() != 3 || n_slices != 0 {
                return Err("`clip` takes three scalar arguments (x, lo, hi)".into());
            }
        }
        Func::Dot => match args {
            [Arg::Slice(a), Arg::Slice(b)] if a.len() == b.len() => {}
            [Arg::Slice(a), Arg::Slice(b)] => {
                return Err(format!(
                    "`dot` slices differ in length ({} and {})",
                    a.len(),
                    b.len()
                ))
            }
            _ => return Err("`dot` takes two slices".into()),
        },
        Func::Min | Func::Max | Func::Sum | Func::Mean | Func::Norm1 | Func::Norm2 => {
            if args.is_empty() {
                return Err(format!("`{name}` needs at least one argument"));
            }
        }
    }
    Ok(())
}
