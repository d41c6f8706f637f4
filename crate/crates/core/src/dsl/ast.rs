use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Bracket { lhs: Lhs, mids: Vec<String>, rhs: Rhs },
    Expect { obs: ObsTree, given: Option<EventExpr> },
    Var { obs: ObsTree },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Lhs {
    Event(EventExpr),
    Omega,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Rhs {
    Event(EventExpr),
    Omega,
    /// `Omega_t`: the chain's distribution after `t` steps or time `t`.
    OmegaT(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventExpr {
    Atom(String),
    Union(Box<EventExpr>, Box<EventExpr>),
    Intersect(Box<EventExpr>, Box<EventExpr>),
    Complement(Box<EventExpr>),
    Paren(Box<EventExpr>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObsTree {
    Name(String),
    Number(f64),
    Sum(Box<ObsTree>, Box<ObsTree>),
    Product(Box<ObsTree>, Box<ObsTree>),
    Paren(Box<ObsTree>),
}

impl EventExpr {
    pub fn atoms(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            EventExpr::Atom(n) => out.push(n),
            EventExpr::Union(a, b) | EventExpr::Intersect(a, b) => {
                a.collect(out);
                b.collect(out);
            }
            EventExpr::Complement(a) | EventExpr::Paren(a) => a.collect(out),
        }
    }
}

impl ObsTree {
    pub fn names(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            ObsTree::Name(n) => out.push(n),
            ObsTree::Number(_) => {}
            ObsTree::Sum(a, b) | ObsTree::Product(a, b) => {
                a.collect(out);
                b.collect(out);
            }
            ObsTree::Paren(a) => a.collect(out),
        }
    }

    /// Evaluates the tree given a value for each name.
    pub fn eval_with(&self, lookup: &mut impl FnMut(&str) -> f64) -> f64 {
        match self {
            ObsTree::Name(n) => lookup(n),
            ObsTree::Number(v) => *v,
            ObsTree::Sum(a, b) => a.eval_with(lookup) + b.eval_with(lookup),
            ObsTree::Product(a, b) => a.eval_with(lookup) * b.eval_with(lookup),
            ObsTree::Paren(a) => a.eval_with(lookup),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Bracket { lhs, mids, rhs } => {
                write!(f, "P({lhs}|")?;
                for m in mids {
                    write!(f, "{m}|")?;
                }
                write!(f, "{rhs})")
            }
            Expr::Expect { obs, given: None } => write!(f, "E[{obs}]"),
            Expr::Expect { obs, given: Some(e) } => write!(f, "E[{obs}]|{e}"),
            Expr::Var { obs } => write!(f, "Var[{obs}]"),
        }
    }
}

impl fmt::Display for Lhs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lhs::Event(e) => write!(f, "{e}"),
            Lhs::Omega => write!(f, "Omega"),
        }
    }
}

impl fmt::Display for Rhs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rhs::Event(e) => write!(f, "{e}"),
            Rhs::Omega => write!(f, "Omega"),
            Rhs::OmegaT(t) => write!(f, "Omega_{t}"),
        }
    }
}

impl fmt::Display for EventExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventExpr::Atom(n) => write!(f, "{n}"),
            EventExpr::Union(a, b) => write!(f, "{a} + {b}"),
            EventExpr::Intersect(a, b) => write!(f, "{a} & {b}"),
            EventExpr::Complement(a) => write!(f, "~{a}"),
            EventExpr::Paren(a) => write!(f, "({a})"),
        }
    }
}

impl fmt::Display for ObsTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObsTree::Name(n) => write!(f, "{n}"),
            ObsTree::Number(v) => write!(f, "{v}"),
            ObsTree::Sum(a, b) => write!(f, "{a} + {b}"),
            ObsTree::Product(a, b) => write!(f, "{a}*{b}"),
            ObsTree::Paren(a) => write!(f, "({a})"),
        }
    }
}
