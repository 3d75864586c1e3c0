use std::fmt;

/// Vector an index reference reads from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Source {
    Obs,
    Act,
    ActOneHot,
}

impl Source {
    pub fn keyword(&self) -> &'static str {
        match self {
            Source::Obs => "obs",
            Source::Act => "act",
            Source::ActOneHot => "act_onehot",
        }
    }
}

/// Half-open range `src[start..end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SliceRef {
    pub src: Source,
    pub start: usize,
    pub end: usize,
}

impl SliceRef {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(&self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Abs,
    Sqrt,
    Exp,
    Log,
    Tanh,
    Sign,
    Min,
    Max,
    Clip,
    Sum,
    Mean,
    Norm1,
    Norm2,
    Dot,
}

impl Func {
    pub const ALL: [Func; 14] = [
        Func::Abs,
        Func::Sqrt,
        Func::Exp,
        Func::Log,
        Func::Tanh,
        Func::Sign,
        Func::Min,
        Func::Max,
        Func::Clip,
        Func::Sum,
        Func::Mean,
        Func::Norm1,
        Func::Norm2,
        Func::Dot,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Tanh => "tanh",
            Func::Sign => "sign",
            Func::Min => "min",
            Func::Max => "max",
            Func::Clip => "clip",
            Func::Sum => "sum",
            Func::Mean => "mean",
            Func::Norm1 => "norm1",
            Func::Norm2 => "norm2",
            Func::Dot => "dot",
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Arg {
    Scalar(Expr),
    Slice(SliceRef),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Lit(f64),
    Ref { src: Source, index: usize },
    Neg(Box<Expr>),
    Bin {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Call { func: Func, args: Vec<Arg> },
}

impl Expr {
    pub fn depth(&self) -> usize {
        match self {
            Expr::Lit(_) | Expr::Ref { .. } => 1,
            Expr::Neg(e) => 1 + e.depth(),
            Expr::Bin { lhs, rhs, .. } => 1 + lhs.depth().max(rhs.depth()),
            Expr::Call { args, .. } => {
                1 + args
                    .iter()
                    .map(|a| match a {
                        Arg::Scalar(e) => e.depth(),
                        Arg::Slice(_) => 1,
                    })
                    .max()
                    .unwrap_or(0)
            }
        }
    }

    /// Calls `f(src, index)` for every element the expression reads.
    pub fn visit_refs(&self, f: &mut impl FnMut(Source, usize)) {
        match self {
            Expr::Lit(_) => {}
            Expr::Ref { src, index } => f(*src, *index),
            Expr::Neg(e) => e.visit_refs(f),
            Expr::Bin { lhs, rhs, .. } => {
                lhs.visit_refs(f);
                rhs.visit_refs(f);
            }
            Expr::Call { args, .. } => {
                for a in args {
                    match a {
                        Arg::Scalar(e) => e.visit_refs(f),
                        Arg::Slice(s) => (s.start..s.end).for_each(|i| f(s.src, i)),
                    }
                }
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin { op, .. } => op.precedence(),
            Expr::Neg(_) => 3,
            _ => 4,
        }
    }
}

impl fmt::Display for SliceRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}..{}]", self.src.keyword(), self.start, self.end)
    }
}

impl fmt::Display for Arg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arg::Scalar(e) => e.fmt(f),
            Arg::Slice(s) => s.fmt(f),
        }
    }
}

fn paren(f: &mut fmt::Formatter<'_>, e: &Expr, wrap: bool) -> fmt::Result {
    if wrap {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    /// Prints with the fewest parentheses that reparse to the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Lit(v) => write!(f, "{v:?}"),
            Expr::Ref { src, index } => write!(f, "{}[{index}]", src.keyword()),
            Expr::Neg(e) => {
                f.write_str("-")?;
                paren(f, e, e.precedence() < 3)
            }
            Expr::Bin { op, lhs, rhs } => {
                let p = op.precedence();
                paren(f, lhs, lhs.precedence() < p)?;
                write!(f, " {} ", op.symbol())?;
                paren(f, rhs, rhs.precedence() <= p)
            }
            Expr::Call { func, args } => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}
