//! Arithmetic expressions over numbers, percentages and named parameters,
//! used for probabilities such as `p_pedestrian * p_run`.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := number ['%'] | identifier | '(' expr ')' | '-' factor
//! ```

use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum ExprErrorKind {
    Syntax(String),
    UnknownParameter(String),
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ExprError {
    /// 0-based character offset into the expression text.
    pub offset: usize,
    pub kind: ExprErrorKind,
}

/// Parses a lone number, optionally suffixed with `%`.
///
/// Percentages are rescaled by moving the decimal point in the text, so
/// `0.01%` yields exactly the double nearest to `0.0001`.
pub(crate) fn number_literal(text: &str) -> Option<f64> {
    let text = text.trim();
    let (body, percent) = match text.strip_suffix('%') {
        Some(b) => (b.trim_end(), true),
        None => (text, false),
    };
    if body.is_empty()
        || !body
            .chars()
            .all(|c| c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-'))
    {
        return None;
    }
    let value = if percent {
        shift_percent(body)?
    } else {
        body.parse::<f64>().ok()?
    };
    value.is_finite().then_some(value)
}

fn shift_percent(body: &str) -> Option<f64> {
    let plain = body.chars().all(|c| c.is_ascii_digit() || c == '.');
    if !plain || body.matches('.').count() > 1 {
        return body.parse::<f64>().ok().map(|v| v / 100.0);
    }
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    let digits = format!("{int}{frac}");
    let point = int.len() as isize - 2;
    let shifted = if point <= 0 {
        format!("0.{}{}", "0".repeat((-point) as usize), digits)
    } else {
        let (a, b) = digits.split_at(point as usize);
        format!("{a}.{b}")
    };
    shifted.parse::<f64>().ok()
}

struct Parser<'a> {
    chars: Vec<char>,
    pos: usize,
    params: &'a dyn Fn(&str) -> Option<f64>,
}

/// Evaluates `text`, resolving identifiers through `params`.
pub(crate) fn evaluate(text: &str, params: &BTreeMap<String, f64>) -> Result<f64, ExprError> {
    let lookup = |name: &str| params.get(name).copied();
    let mut p = Parser {
        chars: text.chars().collect(),
        pos: 0,
        params: &lookup,
    };
    let value = p.expr()?;
    p.skip_ws();
    if p.pos < p.chars.len() {
        return Err(p.syntax(format!("unexpected `{}`", p.chars[p.pos])));
    }
    Ok(value)
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn syntax(&self, msg: impl Into<String>) -> ExprError {
        ExprError {
            offset: self.pos.min(self.chars.len()),
            kind: ExprErrorKind::Syntax(msg.into()),
        }
    }

    fn expr(&mut self) -> Result<f64, ExprError> {
        let mut acc = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            acc = if op == '+' { acc + rhs } else { acc - rhs };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<f64, ExprError> {
        let mut acc = self.factor()?;
        while let Some(op @ ('*' | '/')) = self.peek() {
            self.pos += 1;
            let rhs = self.factor()?;
            acc = if op == '*' { acc * rhs } else { acc / rhs };
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<f64, ExprError> {
        match self.peek() {
            None => Err(self.syntax("unexpected end of expression")),
            Some('-') => {
                self.pos += 1;
                Ok(-self.factor()?)
            }
            Some('(') => {
                self.pos += 1;
                let v = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(self.syntax("expected `)`"));
                }
                self.pos += 1;
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                let start = self.pos;
                while self.pos < self.chars.len()
                    && (self.chars[self.pos].is_ascii_alphanumeric() || self.chars[self.pos] == '_')
                {
                    self.pos += 1;
                }
                let name: String = self.chars[start..self.pos].iter().collect();
                (self.params)(&name).ok_or(ExprError {
                    offset: start,
                    kind: ExprErrorKind::UnknownParameter(name),
                })
            }
            Some(c) => Err(self.syntax(format!("unexpected `{c}`"))),
        }
    }

    fn number(&mut self) -> Result<f64, ExprError> {
        let start = self.pos;
        while self.pos < self.chars.len() && (self.chars[self.pos].is_ascii_digit() || self.chars[self.pos] == '.') {
            self.pos += 1;
        }
        if self.pos < self.chars.len() && matches!(self.chars[self.pos], 'e' | 'E') {
            let mut look = self.pos + 1;
            if look < self.chars.len() && matches!(self.chars[look], '+' | '-') {
                look += 1;
            }
            if look < self.chars.len() && self.chars[look].is_ascii_digit() {
                self.pos = look;
                while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            }
        }
        let mut text: String = self.chars[start..self.pos].iter().collect();
        self.skip_ws();
        if self.chars.get(self.pos) == Some(&'%') {
            self.pos += 1;
            text.push('%');
        }
        number_literal(&text).ok_or(ExprError {
            offset: start,
            kind: ExprErrorKind::Syntax(format!("malformed number `{text}`")),
        })
    }
}
