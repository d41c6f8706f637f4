//! Recursive-descent parser for bracket expressions.

use super::ast::{EventExpr, Expr, Lhs, ObsTree, Rhs};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    OmegaT(f64),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Bar,
    Union,
    Plus,
    Inter,
    Star,
    Tilde,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(v) => format!("number {v}"),
            Tok::OmegaT(v) => format!("`Omega_{v}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrack => "`[`".into(),
            Tok::RBrack => "`]`".into(),
            Tok::Bar => "`|`".into(),
            Tok::Union => "union".into(),
            Tok::Plus => "`+`".into(),
            Tok::Inter => "intersection".into(),
            Tok::Star => "`*`".into(),
            Tok::Tilde => "`~`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn syntax(line: usize, column: usize, expected: &[&str], found: String) -> Error {
    Error::Syntax {
        line,
        column,
        expected: expected.iter().map(|s| s.to_string()).collect(),
        found,
    }
}

fn lex(src: &str) -> Result<Vec<Spanned>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let advance = |i: &mut usize, col: &mut usize, n: usize| {
        *i += n;
        *col += n;
    };
    while i < chars.len() {
        let c = chars[i];
        let (l, cc) = (line, col);
        let push = |out: &mut Vec<Spanned>, tok| out.push(Spanned { tok, line: l, column: cc });
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => advance(&mut i, &mut col, 1),
            '(' => {
                push(&mut out, Tok::LParen);
                advance(&mut i, &mut col, 1)
            }
            ')' => {
                push(&mut out, Tok::RParen);
                advance(&mut i, &mut col, 1)
            }
            '[' => {
                push(&mut out, Tok::LBrack);
                advance(&mut i, &mut col, 1)
            }
            ']' => {
                push(&mut out, Tok::RBrack);
                advance(&mut i, &mut col, 1)
            }
            '+' => {
                push(&mut out, Tok::Plus);
                advance(&mut i, &mut col, 1)
            }
            '*' => {
                push(&mut out, Tok::Star);
                advance(&mut i, &mut col, 1)
            }
            '~' => {
                push(&mut out, Tok::Tilde);
                advance(&mut i, &mut col, 1)
            }
            '&' | '∩' => {
                push(&mut out, Tok::Inter);
                advance(&mut i, &mut col, 1)
            }
            '∪' => {
                push(&mut out, Tok::Union);
                advance(&mut i, &mut col, 1)
            }
            '|' => {
                // `|u` is a union only when a term follows it.
                let is_union = chars.get(i + 1) == Some(&'u')
                    && !chars.get(i + 2).is_some_and(|c| is_ident_char(*c))
                    && chars[i + 2..]
                        .iter()
                        .find(|c| !c.is_whitespace())
                        .is_some_and(|c| is_ident_start(*c) || *c == '(' || *c == '~');
                if is_union {
                    push(&mut out, Tok::Union);
                    advance(&mut i, &mut col, 2)
                } else {
                    push(&mut out, Tok::Bar);
                    advance(&mut i, &mut col, 1)
                }
            }
            c if c.is_ascii_digit() || c == '.' => {
                let n = number_len(&chars[i..]);
                let text: String = chars[i..i + n].iter().collect();
                let v = text
                    .parse::<f64>()
                    .map_err(|_| syntax(l, cc, &["number"], format!("`{text}`")))?;
                push(&mut out, Tok::Number(v));
                advance(&mut i, &mut col, n)
            }
            c if is_ident_start(c) => {
                let mut n = 0;
                while i + n < chars.len() && is_ident_char(chars[i + n]) {
                    n += 1;
                }
                let text: String = chars[i..i + n].iter().collect();
                if let Some(rest) = text.strip_prefix("Omega_") {
                    if rest.is_empty() || rest.starts_with(|c: char| c.is_ascii_digit()) {
                        let m = number_len(&chars[i + 6..]);
                        let num: String = chars[i + 6..i + 6 + m].iter().collect();
                        let v = num
                            .parse::<f64>()
                            .map_err(|_| syntax(l, cc + 6, &["number"], format!("`{num}`")))?;
                        push(&mut out, Tok::OmegaT(v));
                        advance(&mut i, &mut col, 6 + m);
                        if i < chars.len() && is_ident_char(chars[i]) {
                            return Err(syntax(line, col, &["`)`"], format!("`{}`", chars[i])));
                        }
                        continue;
                    }
                }
                push(&mut out, Tok::Ident(text));
                advance(&mut i, &mut col, n)
            }
            other => return Err(syntax(l, cc, &["token"], format!("`{other}`"))),
        }
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        column: col,
    });
    Ok(out)
}

/// Length of the decimal literal at the start of `s`.
fn number_len(s: &[char]) -> usize {
    let mut n = 0;
    while n < s.len() && (s[n].is_ascii_digit() || s[n] == '.') {
        n += 1;
    }
    if n < s.len() && (s[n] == 'e' || s[n] == 'E') {
        let mut m = n + 1;
        if m < s.len() && (s[m] == '+' || s[m] == '-') {
            m += 1;
        }
        if m < s.len() && s[m].is_ascii_digit() {
            while m < s.len() && s[m].is_ascii_digit() {
                m += 1;
            }
            n = m;
        }
    }
    n
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> Error {
        let s = &self.toks[self.pos];
        syntax(s.line, s.column, expected, s.tok.describe())
    }

    fn expect(&mut self, tok: Tok, name: &str) -> Result<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&[name]))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let head = match self.peek() {
            Tok::Ident(s) if s == "P" || s == "E" || s == "Var" => s.clone(),
            _ => return Err(self.error(&["`P(`", "`E[`", "`Var[`"])),
        };
        self.bump();
        let e = match head.as_str() {
            "P" => {
                self.expect(Tok::LParen, "`(`")?;
                self.bracket()?
            }
            "E" => {
                self.expect(Tok::LBrack, "`[`")?;
                let obs = self.obstree()?;
                self.expect(Tok::RBrack, "`]`")?;
                let given = if *self.peek() == Tok::Bar {
                    self.bump();
                    Some(self.eventexpr()?)
                } else {
                    None
                };
                Expr::Expect { obs, given }
            }
            _ => {
                self.expect(Tok::LBrack, "`[`")?;
                let obs = self.obstree()?;
                self.expect(Tok::RBrack, "`]`")?;
                Expr::Var { obs }
            }
        };
        if *self.peek() != Tok::Eof {
            return Err(self.error(&["end of input"]));
        }
        Ok(e)
    }

    fn is_omega(&self) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == "Omega")
    }

    fn bracket(&mut self) -> Result<Expr> {
        let lhs = if self.is_omega() {
            self.bump();
            Lhs::Omega
        } else {
            Lhs::Event(self.eventexpr()?)
        };
        self.expect(Tok::Bar, "`|`")?;
        // Middle observables are only allowed between two Omega ends, so a
        // bare name followed by `|` is a middle exactly when lhs is Omega.
        let mut mids = Vec::new();
        if lhs == Lhs::Omega {
            while let Tok::Ident(name) = self.peek().clone() {
                if name == "Omega" || self.toks[self.pos + 1].tok != Tok::Bar {
                    break;
                }
                self.bump();
                self.bump();
                mids.push(name);
            }
        }
        let rhs = match self.peek().clone() {
            Tok::OmegaT(t) => {
                self.bump();
                Rhs::OmegaT(t)
            }
            Tok::Ident(s) if s == "Omega" => {
                self.bump();
                Rhs::Omega
            }
            _ if !mids.is_empty() => return Err(self.error(&["`Omega`", "`Omega_<t>`"])),
            _ => Rhs::Event(self.eventexpr()?),
        };
        self.expect(Tok::RParen, "`)`")?;
        Ok(Expr::Bracket { lhs, mids, rhs })
    }

    fn eventexpr(&mut self) -> Result<EventExpr> {
        let mut e = self.term()?;
        while matches!(self.peek(), Tok::Union | Tok::Plus) {
            self.bump();
            e = EventExpr::Union(Box::new(e), Box::new(self.term()?));
        }
        Ok(e)
    }

    fn term(&mut self) -> Result<EventExpr> {
        let mut e = self.factor()?;
        while *self.peek() == Tok::Inter {
            self.bump();
            e = EventExpr::Intersect(Box::new(e), Box::new(self.factor()?));
        }
        Ok(e)
    }

    fn factor(&mut self) -> Result<EventExpr> {
        match self.peek().clone() {
            Tok::Tilde => {
                self.bump();
                Ok(EventExpr::Complement(Box::new(self.factor()?)))
            }
            Tok::LParen => {
                self.bump();
                let e = self.eventexpr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(EventExpr::Paren(Box::new(e)))
            }
            Tok::Ident(name) if name != "Omega" => {
                self.bump();
                Ok(EventExpr::Atom(name))
            }
            _ => Err(self.error(&["event name", "`(`", "`~`"])),
        }
    }

    fn obstree(&mut self) -> Result<ObsTree> {
        let mut e = self.obsproduct()?;
        while *self.peek() == Tok::Plus {
            self.bump();
            e = ObsTree::Sum(Box::new(e), Box::new(self.obsproduct()?));
        }
        Ok(e)
    }

    fn obsproduct(&mut self) -> Result<ObsTree> {
        let mut e = self.obsfactor()?;
        while *self.peek() == Tok::Star {
            self.bump();
            e = ObsTree::Product(Box::new(e), Box::new(self.obsfactor()?));
        }
        Ok(e)
    }

    fn obsfactor(&mut self) -> Result<ObsTree> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                Ok(ObsTree::Name(name))
            }
            Tok::Number(v) => {
                self.bump();
                Ok(ObsTree::Number(v))
            }
            Tok::LParen => {
                self.bump();
                let e = self.obstree()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(ObsTree::Paren(Box::new(e)))
            }
            _ => Err(self.error(&["observable name", "number", "`(`"])),
        }
    }
}

/// Parses one bracket, expectation or variance expression.
pub fn parse(src: &str) -> Result<Expr> {
    Parser { toks: lex(src)?, pos: 0 }.expr()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atom(s: &str) -> EventExpr {
        EventExpr::Atom(s.into())
    }

    #[test]
    fn simple_bracket() {
        assert_eq!(
            parse("P(even|Omega)").unwrap(),
            Expr::Bracket {
                lhs: Lhs::Event(atom("even")),
                mids: vec![],
                rhs: Rhs::Omega
            }
        );
    }

    #[test]
    fn product_expectation() {
        assert_eq!(
            parse("E[X*Y]").unwrap(),
            Expr::Expect {
                obs: ObsTree::Product(Box::new(ObsTree::Name("X".into())), Box::new(ObsTree::Name("Y".into()))),
                given: None
            }
        );
    }

    #[test]
    fn eof_error() {
        match parse("P(even|") {
            Err(Error::Syntax { line, column, expected, found }) => {
                assert_eq!((line, column), (1, 8));
                assert_eq!(found, "end of input");
                assert!(!expected.is_empty());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn error_positions_track_lines() {
        match parse("P(a|\n  b c)") {
            Err(Error::Syntax { line, column, .. }) => assert_eq!((line, column), (2, 5)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn operators_and_aliases() {
        let a = parse("P(a ∪ b ∩ ~c|d)").unwrap();
        let b = parse("P(a + b & ~c|d)").unwrap();
        let c = parse("P(a |u b & ~c|d)").unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        match a {
            Expr::Bracket { lhs: Lhs::Event(EventExpr::Union(_, r)), .. } => {
                assert!(matches!(*r, EventExpr::Intersect(_, _)))
            }
            other => panic!("{other:?}"),
        }
        // `u` as an ordinary event name on the right.
        assert_eq!(
            parse("P(a|u)").unwrap(),
            Expr::Bracket {
                lhs: Lhs::Event(atom("a")),
                mids: vec![],
                rhs: Rhs::Event(atom("u"))
            }
        );
    }

    #[test]
    fn omega_forms() {
        assert!(matches!(parse("P(R|Omega_3)").unwrap(), Expr::Bracket { rhs: Rhs::OmegaT(t), .. } if t == 3.0));
        assert!(matches!(parse("P(R|Omega_0.25)").unwrap(), Expr::Bracket { rhs: Rhs::OmegaT(t), .. } if t == 0.25));
        let e = parse("P(Omega|X|Y|Omega)").unwrap();
        assert_eq!(
            e,
            Expr::Bracket {
                lhs: Lhs::Omega,
                mids: vec!["X".into(), "Y".into()],
                rhs: Rhs::Omega
            }
        );
        assert!(parse("P(Omega|X|even)").is_err());
        assert!(parse("P(Omega_2|Omega)").is_err());
    }

    #[test]
    fn expectation_forms() {
        let e = parse("E[2*X + 1]|even").unwrap();
        match e {
            Expr::Expect { obs: ObsTree::Sum(l, r), given: Some(g) } => {
                assert!(matches!(*l, ObsTree::Product(_, _)));
                assert_eq!(*r, ObsTree::Number(1.0));
                assert_eq!(g, atom("even"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("Var[(X + Y)*X]").unwrap(), Expr::Var { .. }));
        assert!(parse("Var[X]|even").is_err());
        assert!(parse("Q(a|b)").is_err());
        assert!(parse("E[]").is_err());
        assert!(parse("P(a|b) extra").is_err());
    }

    #[test]
    fn print_round_trip() {
        for src in [
            "P(even|Omega)",
            "P(a + b & ~(c + d)|~e)",
            "P(R|Omega_3)",
            "P(Omega|X|Y|Omega_2.5)",
            "E[X*Y + 2*(X + 0.5)]|a & b",
            "Var[X]",
        ] {
            let e = parse(src).unwrap();
            assert_eq!(parse(&e.to_string()).unwrap(), e, "{src}");
        }
    }
}
