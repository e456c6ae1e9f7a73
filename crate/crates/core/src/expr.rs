//! Tiny arithmetic grammar for cutoff expressions like
//! `25.09*101^(35/6)`: integers and decimals, + - * / ^ and parentheses,
//! evaluated in exact rationals. Fractional powers are enclosed in exact
//! rational brackets tight enough to certify the final floor.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::exactmath::{integer_kth_root, Rational, WideInt};

/// Exact value or a certified enclosure (from an irrational power).
#[derive(Debug, Clone)]
enum Value {
    Exact(Rational),
    Range(Rational, Rational),
}

impl Value {
    fn bounds(&self) -> (Rational, Rational) {
        match self {
            Value::Exact(x) => (x.clone(), x.clone()),
            Value::Range(lo, hi) => (lo.clone(), hi.clone()),
        }
    }
}

struct Parser<'a> {
    text: &'a [u8],
    pos: usize,
}

/// Evaluates the expression and returns the floor of its value as an
/// integer, exactly.
pub fn eval_floor(text: &str) -> Result<WideInt> {
    let mut p = Parser { text: text.as_bytes(), pos: 0 };
    let v = p.expr()?;
    p.skip_ws();
    if p.pos != p.text.len() {
        return Err(Error::Argument(format!(
            "unexpected trailing input at byte {} of expression {text:?}",
            p.pos
        )));
    }
    match v {
        Value::Exact(x) => Ok(x.floor().to_integer()),
        Value::Range(lo, hi) => {
            let fl = lo.floor().to_integer();
            let fh = hi.floor().to_integer();
            if fl == fh {
                Ok(fl)
            } else {
                Err(Error::Argument(format!(
                    "expression {text:?} lands too close to an integer to certify its floor"
                )))
            }
        }
    }
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.text.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Value> {
        let mut acc = self.term()?;
        while let Some(op) = self.peek() {
            if op != b'+' && op != b'-' {
                break;
            }
            self.pos += 1;
            let rhs = self.term()?;
            acc = combine(&acc, &rhs, |a, b| if op == b'+' { a + b } else { a - b });
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Value> {
        let mut acc = self.factor()?;
        while let Some(op) = self.peek() {
            if op != b'*' && op != b'/' {
                break;
            }
            self.pos += 1;
            let rhs = self.factor()?;
            if op == b'/' {
                let (lo, hi) = rhs.bounds();
                if lo.is_zero() || hi.is_zero() || lo.is_negative() != hi.is_negative() {
                    return Err(Error::Argument("division by zero (or a range crossing zero)".into()));
                }
            }
            acc = mul_div(&acc, &rhs, op == b'*');
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Value> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.factor()?; // right associative
            let e = match exp {
                Value::Exact(e) => e,
                Value::Range(_, _) => {
                    return Err(Error::Argument("exponents must be exact rationals".into()))
                }
            };
            return pow_value(&base, &e);
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Value> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let v = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(Error::Argument("missing closing parenthesis".into()));
                }
                self.pos += 1;
                Ok(v)
            }
            Some(b'-') => {
                self.pos += 1;
                let v = self.atom()?;
                Ok(match v {
                    Value::Exact(x) => Value::Exact(-x),
                    Value::Range(lo, hi) => Value::Range(-hi, -lo),
                })
            }
            Some(c) if c.is_ascii_digit() => self.number(),
            other => Err(Error::Argument(format!("unexpected token {other:?} in expression"))),
        }
    }

    fn number(&mut self) -> Result<Value> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let int_part = std::str::from_utf8(&self.text[start..self.pos]).unwrap();
        let mut num: BigInt = int_part.parse().unwrap();
        let mut den = BigInt::one();
        if self.text.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            let fstart = self.pos;
            while self.pos < self.text.len() && self.text[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if self.pos == fstart {
                return Err(Error::Argument("digits required after decimal point".into()));
            }
            let frac = std::str::from_utf8(&self.text[fstart..self.pos]).unwrap();
            let fnum: BigInt = frac.parse().unwrap();
            let scale = BigInt::from(10u32).pow((self.pos - fstart) as u32);
            num = num * &scale + fnum;
            den = scale;
        }
        Ok(Value::Exact(BigRational::new(num, den)))
    }
}

fn combine(a: &Value, b: &Value, f: impl Fn(&Rational, &Rational) -> Rational) -> Value {
    match (a, b) {
        (Value::Exact(x), Value::Exact(y)) => Value::Exact(f(x, y)),
        _ => {
            let (alo, ahi) = a.bounds();
            let (blo, bhi) = b.bounds();
            // monotone in both arguments for + and -: take endpoint extremes
            let c1 = f(&alo, &blo);
            let c2 = f(&alo, &bhi);
            let c3 = f(&ahi, &blo);
            let c4 = f(&ahi, &bhi);
            let lo = [&c1, &c2, &c3, &c4].iter().cloned().min().unwrap().clone();
            let hi = [&c1, &c2, &c3, &c4].iter().cloned().max().unwrap().clone();
            Value::Range(lo, hi)
        }
    }
}

fn mul_div(a: &Value, b: &Value, is_mul: bool) -> Value {
    if let (Value::Exact(x), Value::Exact(y)) = (a, b) {
        return Value::Exact(if is_mul { x * y } else { x / y });
    }
    let (alo, ahi) = a.bounds();
    let (blo, bhi) = b.bounds();
    let apply = |x: &Rational, y: &Rational| if is_mul { x * y } else { x / y };
    let cands = [apply(&alo, &blo), apply(&alo, &bhi), apply(&ahi, &blo), apply(&ahi, &bhi)];
    let lo = cands.iter().min().unwrap().clone();
    let hi = cands.iter().max().unwrap().clone();
    Value::Range(lo, hi)
}

fn pow_value(base: &Value, exp: &Rational) -> Result<Value> {
    if !exp.is_integer() {
        let (blo, bhi) = base.bounds();
        if blo.is_negative() {
            return Err(Error::Argument("fractional powers need a nonnegative base".into()));
        }
        let lo = rational_pow_brackets(&blo, exp)?;
        let hi = rational_pow_brackets(&bhi, exp)?;
        return Ok(match (lo, hi) {
            (Value::Exact(a), Value::Exact(b)) if a == b => Value::Exact(a),
            (l, h) => {
                let (llo, _) = l.bounds();
                let (_, hhi) = h.bounds();
                Value::Range(llo, hhi)
            }
        });
    }
    let e = exp.to_integer();
    let eu = e.abs().to_u32().ok_or_else(|| Error::Argument("exponent too large".into()))?;
    let powed = |x: &Rational| -> Result<Rational> {
        let p = x.pow(eu as i32);
        if e.is_negative() {
            if p.is_zero() {
                return Err(Error::Argument("zero to a negative power".into()));
            }
            Ok(p.recip())
        } else {
            Ok(p)
        }
    };
    Ok(match base {
        Value::Exact(x) => Value::Exact(powed(x)?),
        Value::Range(lo, hi) => {
            let straddles = lo.is_negative() && hi.is_positive();
            if straddles && e.is_negative() {
                return Err(Error::Argument("negative power of a range crossing zero".into()));
            }
            let a = powed(lo)?;
            let b = powed(hi)?;
            let (mut rlo, rhi) = if a <= b { (a, b) } else { (b, a) };
            // even powers of a straddling range reach down to zero
            if straddles && eu % 2 == 0 {
                rlo = BigRational::zero();
            }
            Value::Range(rlo, rhi)
        }
    })
}

/// x^(a/b) for nonnegative rational x: exact when x^a has an exact b-th
/// root, otherwise a bisection enclosure of relative width ~2^-220.
fn rational_pow_brackets(x: &Rational, exp: &Rational) -> Result<Value> {
    if x.is_zero() {
        return Ok(Value::Exact(BigRational::zero()));
    }
    let a = exp.numer().clone();
    let b = exp
        .denom()
        .to_u32()
        .ok_or_else(|| Error::Argument("exponent denominator too large".into()))?;
    let neg = a.is_negative();
    let au = a.abs().to_u32().ok_or_else(|| Error::Argument("exponent too large".into()))?;
    let xa = x.pow(au as i32);
    // exact b-th root when both numerator and denominator are perfect powers
    let rn = integer_kth_root(xa.numer(), b);
    let rd = integer_kth_root(xa.denom(), b);
    if rn.pow(b) == *xa.numer() && rd.pow(b) == *xa.denom() {
        let exact = BigRational::new(rn, rd);
        let exact = if neg { exact.recip() } else { exact };
        return Ok(Value::Exact(exact));
    }
    // bisect y with y^b = xa, seeded from the integer b-th root so the
    // interval starts at width 2
    let one = BigRational::one();
    let (mut lo, mut hi) = if xa >= one {
        let seed = integer_kth_root(&xa.floor().to_integer(), b);
        (
            BigRational::from(seed.clone()),
            BigRational::from(seed + BigInt::from(2)),
        )
    } else {
        (BigRational::zero(), BigRational::one())
    };
    for _ in 0..220 {
        let mid = (&lo + &hi) / BigRational::from(BigInt::from(2));
        if mid.pow(b as i32) <= xa {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if neg {
        Ok(Value::Range(hi.recip(), lo.recip()))
    } else {
        Ok(Value::Range(lo, hi))
    }
}
