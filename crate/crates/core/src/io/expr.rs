//! Simulation intensity expressions: a non-negative constant such as `2.5`,
//! or `exp(<linear predictor>)` over node covariates, for example
//! `exp(1 + 0.5*z - 0.2 * dist)`.

use std::collections::BTreeMap;

use super::IoError;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearPredictor {
    pub intercept: f64,
    /// (covariate, coefficient); repeated covariates are merged.
    pub terms: Vec<(String, f64)>,
}

impl LinearPredictor {
    pub fn covariates(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(|t| t.0.as_str())
    }

    /// η for one node given its covariate values.
    pub fn evaluate(&self, value: impl Fn(&str) -> Option<f64>) -> Option<f64> {
        self.terms.iter().try_fold(self.intercept, |acc, (name, b)| Some(acc + b * value(name)?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum IntensityExpr {
    Constant(f64),
    LogLinear(LinearPredictor),
}

fn err(message: impl Into<String>) -> IoError {
    IoError::Format(format!("intensity expression: {}", message.into()))
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Open,
    Close,
}

fn tokenize(s: &str) -> Result<Vec<Token>, IoError> {
    let b = s.as_bytes();
    let mut out = vec![];
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        match c {
            b' ' | b'\t' => i += 1,
            b'+' => {
                out.push(Token::Plus);
                i += 1;
            }
            b'-' => {
                out.push(Token::Minus);
                i += 1;
            }
            b'*' => {
                out.push(Token::Star);
                i += 1;
            }
            b'(' => {
                out.push(Token::Open);
                i += 1;
            }
            b')' => {
                out.push(Token::Close);
                i += 1;
            }
            b'0'..=b'9' | b'.' => {
                let start = i;
                while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'.') {
                    i += 1;
                }
                if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                    let mut j = i + 1;
                    if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                        j += 1;
                    }
                    if j < b.len() && b[j].is_ascii_digit() {
                        i = j;
                        while i < b.len() && b[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &s[start..i];
                let v = text.parse::<f64>().map_err(|_| err(format!("bad number '{text}'")))?;
                out.push(Token::Num(v));
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = i;
                while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_' || b[i] == b'.') {
                    i += 1;
                }
                out.push(Token::Ident(s[start..i].to_string()));
            }
            _ => {
                let ch = s[i..].chars().next().unwrap_or('?');
                return Err(err(format!("unexpected character '{ch}' at offset {i}")));
            }
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expect(&mut self, t: Token) -> Result<(), IoError> {
        match self.next() {
            Some(got) if got == t => Ok(()),
            got => Err(err(format!("expected {t:?}, found {got:?}"))),
        }
    }

    /// term := num | num '*' ident | ident | ident '*' num
    fn term(&mut self) -> Result<(f64, Option<String>), IoError> {
        match self.next() {
            Some(Token::Num(v)) => {
                if self.peek() == Some(&Token::Star) {
                    self.pos += 1;
                    match self.next() {
                        Some(Token::Ident(name)) => Ok((v, Some(name))),
                        got => Err(err(format!("expected covariate after '*', found {got:?}"))),
                    }
                } else {
                    Ok((v, None))
                }
            }
            Some(Token::Ident(name)) => {
                if self.peek() == Some(&Token::Star) {
                    self.pos += 1;
                    match self.next() {
                        Some(Token::Num(v)) => Ok((v, Some(name))),
                        got => Err(err(format!("expected number after '*', found {got:?}"))),
                    }
                } else {
                    Ok((1.0, Some(name)))
                }
            }
            got => Err(err(format!("expected a term, found {got:?}"))),
        }
    }

    fn linear(&mut self) -> Result<LinearPredictor, IoError> {
        let mut intercept = 0.0;
        let mut terms: BTreeMap<String, f64> = BTreeMap::new();
        let mut order: Vec<String> = vec![];
        let mut sign = 1.0;
        if self.peek() == Some(&Token::Minus) {
            self.pos += 1;
            sign = -1.0;
        } else if self.peek() == Some(&Token::Plus) {
            self.pos += 1;
        }
        loop {
            let (v, name) = self.term()?;
            match name {
                None => intercept += sign * v,
                Some(n) => {
                    if !terms.contains_key(&n) {
                        order.push(n.clone());
                    }
                    *terms.entry(n).or_insert(0.0) += sign * v;
                }
            }
            match self.peek() {
                Some(Token::Plus) => sign = 1.0,
                Some(Token::Minus) => sign = -1.0,
                _ => break,
            }
            self.pos += 1;
        }
        if !intercept.is_finite() || terms.values().any(|v| !v.is_finite()) {
            return Err(err("coefficients must be finite"));
        }
        let terms = order.into_iter().map(|n| {
            let v = terms[&n];
            (n, v)
        });
        Ok(LinearPredictor { intercept, terms: terms.collect() })
    }
}

pub fn parse_intensity_expr(text: &str) -> Result<IntensityExpr, IoError> {
    let mut p = Parser { tokens: tokenize(text.trim())?, pos: 0 };
    let expr = match p.peek() {
        Some(Token::Ident(name)) if name == "exp" => {
            p.pos += 1;
            p.expect(Token::Open)?;
            let lp = p.linear()?;
            p.expect(Token::Close)?;
            IntensityExpr::LogLinear(lp)
        }
        Some(Token::Num(v)) => {
            let v = *v;
            p.pos += 1;
            if !(v >= 0.0 && v.is_finite()) {
                return Err(err("constant intensity must be finite and non-negative"));
            }
            IntensityExpr::Constant(v)
        }
        Some(Token::Minus) => return Err(err("constant intensity must be non-negative")),
        got => return Err(err(format!("expected a constant or exp(...), found {got:?}"))),
    };
    if p.pos != p.tokens.len() {
        return Err(err("trailing input"));
    }
    Ok(expr)
}
