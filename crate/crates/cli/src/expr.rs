//! Candidate-number expressions.
//!
//! ```text
//! expr := uint | "0x" hex | (uint "*")? uint "^" uint (("+" | "-") uint)?
//! ```
//!
//! Whitespace anywhere is ignored. Error positions are character offsets into
//! the original text.

use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, ToPrimitive, Zero};

/// Largest accepted value of `b^e`, in bits.
pub const MAX_POWER_BITS: u64 = 1 << 26;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub position: usize,
    pub expected: &'static str,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "at position {}: expected {}",
            self.position, self.expected
        )
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CandidateExpr {
    Literal(BigUint),
    /// `k·b^e + c`.
    Form {
        k: BigUint,
        b: BigUint,
        e: u64,
        c: BigInt,
    },
}

impl CandidateExpr {
    pub fn value(&self) -> BigUint {
        match self {
            CandidateExpr::Literal(v) => v.clone(),
            CandidateExpr::Form { k, b, e, c } => {
                let power = BigInt::from(k * power(b, *e));
                (power + c)
                    .to_biguint()
                    .expect("checked nonnegative at parse time")
            }
        }
    }

    /// Text that parses back to an expression of the same value.
    pub fn render(&self) -> String {
        match self {
            CandidateExpr::Literal(v) => v.to_string(),
            CandidateExpr::Form { k, b, e, c } => {
                let mut s = format!("{k}*{b}^{e}");
                match c.sign() {
                    Sign::Plus => s.push_str(&format!("+{c}")),
                    Sign::Minus => s.push_str(&format!("-{}", c.magnitude())),
                    Sign::NoSign => {}
                }
                s
            }
        }
    }
}

fn power(b: &BigUint, e: u64) -> BigUint {
    if b.is_zero() {
        return if e == 0 {
            BigUint::one()
        } else {
            BigUint::zero()
        };
    }
    if b.is_one() {
        return BigUint::one();
    }
    // b ≥ 2 and bits(b)·e ≤ MAX_POWER_BITS keep e within u32
    b.pow(u32::try_from(e).expect("exponent bounded at parse time"))
}

struct Cursor {
    chars: Vec<(usize, char)>,
    at: usize,
    end: usize,
}

impl Cursor {
    fn new(s: &str) -> Self {
        let chars: Vec<(usize, char)> = s
            .chars()
            .enumerate()
            .filter(|(_, c)| !c.is_whitespace())
            .collect();
        Cursor {
            chars,
            at: 0,
            end: s.chars().count(),
        }
    }

    fn position(&self) -> usize {
        self.chars.get(self.at).map_or(self.end, |&(i, _)| i)
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.at).map(|&(_, c)| c)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn error(&self, expected: &'static str) -> ParseError {
        ParseError {
            position: self.position(),
            expected,
        }
    }

    fn digits(&mut self, radix: u32, expected: &'static str) -> Result<BigUint, ParseError> {
        let start = self.at;
        while self.peek().is_some_and(|c| c.is_digit(radix)) {
            self.at += 1;
        }
        if self.at == start {
            return Err(self.error(expected));
        }
        let text: String = self.chars[start..self.at].iter().map(|&(_, c)| c).collect();
        Ok(BigUint::parse_bytes(text.as_bytes(), radix).expect("digits validated"))
    }
}

pub fn parse_candidate(s: &str) -> Result<CandidateExpr, ParseError> {
    let mut cur = Cursor::new(s);
    if cur.peek() == Some('0')
        && cur
            .chars
            .get(cur.at + 1)
            .is_some_and(|&(_, c)| c == 'x' || c == 'X')
    {
        cur.at += 2;
        let v = cur.digits(16, "hex digit")?;
        return finish(&cur, CandidateExpr::Literal(v));
    }

    let first = cur.digits(10, "decimal digit")?;
    let (k, b) = if cur.eat('*') {
        (first, cur.digits(10, "decimal digit")?)
    } else if cur.peek() == Some('^') {
        (BigUint::one(), first)
    } else {
        return finish(&cur, CandidateExpr::Literal(first));
    };
    if !cur.eat('^') {
        return Err(cur.error("'^'"));
    }
    let e_pos = cur.position();
    let e = cur.digits(10, "decimal digit")?;
    let too_big = ParseError {
        position: e_pos,
        expected: "exponent small enough to evaluate",
    };
    let e = e.to_u64().ok_or(too_big.clone())?;
    if b > BigUint::one() && b.bits().saturating_mul(e) > MAX_POWER_BITS {
        return Err(too_big);
    }

    let sign_pos = cur.position();
    let c = if cur.eat('+') {
        BigInt::from(cur.digits(10, "decimal digit")?)
    } else if cur.eat('-') {
        -BigInt::from(cur.digits(10, "decimal digit")?)
    } else {
        BigInt::zero()
    };
    if BigInt::from(&k * power(&b, e)) + &c < BigInt::zero() {
        return Err(ParseError {
            position: sign_pos,
            expected: "nonnegative value",
        });
    }
    finish(&cur, CandidateExpr::Form { k, b, e, c })
}

fn finish(cur: &Cursor, expr: CandidateExpr) -> Result<CandidateExpr, ParseError> {
    if cur.peek().is_some() {
        return Err(cur.error("end of input"));
    }
    Ok(expr)
}

/// Parses and evaluates in one step.
pub fn parse_value(s: &str) -> Result<BigUint, ParseError> {
    parse_candidate(s).map(|e| e.value())
}
