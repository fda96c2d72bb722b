//! Text grammar for coefficient elements.
//!
//! ```text
//! expr     := ['-'] term (('+'|'-') term)*
//! term     := factor ('*' factor)*
//! factor   := base ('^' integer)?
//! base     := rational | 'i' | ident | '(' expr ')'
//! ident    := 't' | 'z'digit | 'zb'digit | 's' | 'a' | 'E'
//! rational := integer ('/' positive-integer)?
//! ```
//!
//! Whitespace is insignificant. `print_expr` emits canonical text that parses
//! back to the same canonical element.

use num::{BigInt, BigRational, One, Signed, Zero};

use super::coeff::{CoeffElem, Gen, Monomial, ScaleGen};
use super::gaussian::GaussianRational;
use super::AlgebraError;

#[derive(Clone, PartialEq, Debug)]
enum Tok {
    Num(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    toks: Vec<(Tok, usize)>,
}

fn err(offset: usize, message: impl Into<String>) -> AlgebraError {
    AlgebraError::Parse {
        offset,
        message: message.into(),
    }
}

impl<'a> Lexer<'a> {
    fn lex(text: &'a str) -> Result<Vec<(Tok, usize)>, AlgebraError> {
        let mut lx = Lexer {
            src: text.as_bytes(),
            pos: 0,
            toks: Vec::new(),
        };
        while lx.pos < lx.src.len() {
            let c = lx.src[lx.pos];
            let at = lx.pos;
            match c {
                b' ' | b'\t' | b'\n' | b'\r' => {
                    lx.pos += 1;
                }
                b'+' => lx.push(Tok::Plus, at),
                b'-' => lx.push(Tok::Minus, at),
                b'*' => lx.push(Tok::Star, at),
                b'/' => lx.push(Tok::Slash, at),
                b'^' => lx.push(Tok::Caret, at),
                b'(' => lx.push(Tok::LParen, at),
                b')' => lx.push(Tok::RParen, at),
                b'0'..=b'9' => {
                    let start = lx.pos;
                    while lx.pos < lx.src.len() && lx.src[lx.pos].is_ascii_digit() {
                        lx.pos += 1;
                    }
                    let s = std::str::from_utf8(&lx.src[start..lx.pos]).unwrap();
                    let n: BigInt = s.parse().unwrap();
                    lx.toks.push((Tok::Num(n), start));
                }
                c if c.is_ascii_alphabetic() => {
                    let start = lx.pos;
                    while lx.pos < lx.src.len()
                        && (lx.src[lx.pos].is_ascii_alphanumeric())
                    {
                        lx.pos += 1;
                    }
                    let s = std::str::from_utf8(&lx.src[start..lx.pos]).unwrap();
                    lx.toks.push((Tok::Ident(s.to_string()), start));
                }
                other => {
                    return Err(err(at, format!("unexpected character '{}'", other as char)));
                }
            }
        }
        Ok(lx.toks)
    }

    fn push(&mut self, t: Tok, at: usize) {
        self.toks.push((t, at));
        self.pos += 1;
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    arity: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.toks
            .get(self.pos)
            .map(|(_, at)| *at)
            .unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<CoeffElem, AlgebraError> {
        let mut negate = false;
        if self.peek() == Some(&Tok::Minus) {
            self.bump();
            negate = true;
        }
        let mut acc = self.term()?;
        if negate {
            acc = acc.scale_int(-1);
        }
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    let t = self.term()?;
                    acc = &acc + &t;
                }
                Some(Tok::Minus) => {
                    self.bump();
                    let t = self.term()?;
                    acc = &acc - &t;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<CoeffElem, AlgebraError> {
        let mut acc = self.factor()?;
        while self.peek() == Some(&Tok::Star) {
            self.bump();
            let f = self.factor()?;
            acc = &acc * &f;
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<CoeffElem, AlgebraError> {
        let at = self.here();
        let base = self.base()?;
        if self.peek() == Some(&Tok::Caret) {
            self.bump();
            let k = self.signed_int()?;
            return self.apply_power(base, k, at);
        }
        Ok(match base {
            BaseVal::Elem(e) => e,
            BaseVal::Scale(which) => CoeffElem::scale_pow(self.arity, which, 1),
        })
    }

    fn apply_power(
        &self,
        base: BaseVal,
        k: i64,
        at: usize,
    ) -> Result<CoeffElem, AlgebraError> {
        match base {
            BaseVal::Scale(which) => Ok(CoeffElem::scale_pow(self.arity, which, k)),
            BaseVal::Elem(e) => {
                if k >= 0 {
                    Ok(e.pow(k as u32))
                } else if let Some(c) = e.as_constant() {
                    let inv = c.inv().map_err(|_| err(at, "zero base with negative exponent"))?;
                    Ok(CoeffElem::constant(self.arity, inv).pow((-k) as u32))
                } else {
                    Err(err(
                        at,
                        "negative exponents are only allowed on s, a, E or nonzero constants",
                    ))
                }
            }
        }
        .map_err(|e| e)
    }

    fn base(&mut self) -> Result<BaseVal, AlgebraError> {
        let at = self.here();
        match self.bump() {
            Some(Tok::Num(n)) => {
                let mut num = BigRational::from_integer(n);
                if self.peek() == Some(&Tok::Slash) {
                    self.bump();
                    let dat = self.here();
                    match self.bump() {
                        Some(Tok::Num(d)) => {
                            if d.is_zero() {
                                return Err(err(dat, "zero denominator"));
                            }
                            num /= BigRational::from_integer(d);
                        }
                        _ => return Err(err(dat, "expected denominator")),
                    }
                }
                Ok(BaseVal::Elem(CoeffElem::constant(
                    self.arity,
                    GaussianRational::from_rational(num),
                )))
            }
            Some(Tok::Ident(name)) => self.ident(&name, at),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                match self.bump() {
                    Some(Tok::RParen) => Ok(BaseVal::Elem(e)),
                    _ => Err(err(self.here(), "expected ')'")),
                }
            }
            Some(_) => Err(err(at, "syntax error")),
            None => Err(err(at, "unexpected end of input")),
        }
    }

    fn ident(&self, name: &str, at: usize) -> Result<BaseVal, AlgebraError> {
        match name {
            "t" => Ok(BaseVal::Elem(CoeffElem::var(self.arity, Gen::T))),
            "i" => Ok(BaseVal::Elem(CoeffElem::i_unit(self.arity))),
            "s" => Ok(BaseVal::Scale(ScaleGen::S)),
            "a" => Ok(BaseVal::Scale(ScaleGen::A)),
            "E" => Ok(BaseVal::Scale(ScaleGen::E)),
            _ => {
                let (head, idx) = if let Some(rest) = name.strip_prefix("zb") {
                    (Gen::Zb(0), rest)
                } else if let Some(rest) = name.strip_prefix('z') {
                    (Gen::Z(0), rest)
                } else {
                    return Err(err(at, format!("unknown variable '{}'", name)));
                };
                if idx.len() != 1 || !idx.as_bytes()[0].is_ascii_digit() || idx == "0" {
                    return Err(err(at, format!("unknown variable '{}'", name)));
                }
                let j = idx.parse::<usize>().unwrap();
                if j > self.arity {
                    return Err(err(
                        at,
                        format!("variable '{}' exceeds arity {}", name, self.arity),
                    ));
                }
                let j = j - 1;
                Ok(BaseVal::Elem(match head {
                    Gen::Zb(_) => CoeffElem::var(self.arity, Gen::Zb(j)),
                    _ => CoeffElem::var(self.arity, Gen::Z(j)),
                }))
            }
        }
    }

    fn signed_int(&mut self) -> Result<i64, AlgebraError> {
        let at = self.here();
        let neg = if self.peek() == Some(&Tok::Minus) {
            self.bump();
            true
        } else {
            false
        };
        match self.bump() {
            Some(Tok::Num(n)) => {
                let k: i64 = n
                    .try_into()
                    .map_err(|_| err(at, "exponent out of range"))?;
                Ok(if neg { -k } else { k })
            }
            _ => Err(err(at, "expected integer exponent")),
        }
    }
}

enum BaseVal {
    Elem(CoeffElem),
    Scale(ScaleGen),
}

/// Parse `text` into a canonical element over `arity` complex coordinates.
pub fn parse_expr(text: &str, arity: usize) -> Result<CoeffElem, AlgebraError> {
    let toks = Lexer::lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        arity,
        end: text.len(),
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(err(p.here(), "trailing input"));
    }
    Ok(e)
}

fn push_power(parts: &mut Vec<String>, name: String, k: i64) {
    if k == 0 {
        return;
    }
    if k == 1 {
        parts.push(name);
    } else {
        parts.push(format!("{}^{}", name, k));
    }
}

fn subterm(mag: &BigRational, imag: bool, m: &Monomial) -> String {
    let mut parts: Vec<String> = Vec::new();
    let mut has_factor = imag;
    let mut mono_parts: Vec<String> = Vec::new();
    push_power(&mut mono_parts, "t".into(), m.t as i64);
    for (j, &k) in m.z.iter().enumerate() {
        push_power(&mut mono_parts, format!("z{}", j + 1), k as i64);
    }
    for (j, &k) in m.zb.iter().enumerate() {
        push_power(&mut mono_parts, format!("zb{}", j + 1), k as i64);
    }
    push_power(&mut mono_parts, "s".into(), m.s);
    push_power(&mut mono_parts, "a".into(), m.a);
    push_power(&mut mono_parts, "E".into(), m.e);
    has_factor = has_factor || !mono_parts.is_empty();
    if !(mag.is_one() && has_factor) {
        parts.push(format!("{}", mag));
    }
    if imag {
        parts.push("i".into());
    }
    parts.extend(mono_parts);
    parts.join("*")
}

/// Canonical printer; `parse_expr(print_expr(x)) == x` for canonical `x`.
pub fn print_expr(x: &CoeffElem) -> String {
    if x.is_zero() {
        return "0".into();
    }
    let mut pieces: Vec<(bool, String)> = Vec::new();
    for (m, c) in x.terms() {
        if !c.re.is_zero() {
            pieces.push((c.re.is_negative(), subterm(&c.re.abs(), false, m)));
        }
        if !c.im.is_zero() {
            pieces.push((c.im.is_negative(), subterm(&c.im.abs(), true, m)));
        }
    }
    let mut out = String::new();
    for (k, (neg, body)) in pieces.iter().enumerate() {
        if k == 0 {
            if *neg {
                out.push('-');
            }
        } else if *neg {
            out.push_str(" - ");
        } else {
            out.push_str(" + ");
        }
        out.push_str(body);
    }
    out
}
