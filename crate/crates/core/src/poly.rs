//! Polynomials: exact rational univariate polynomials for the φ_k factory and
//! floating-point multivariate polynomials for combination terms.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Parses `"3/2"`, `"-0.0025"`, `"1e-3"` or `"7"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n = parse_rational(n)?;
        let d = parse_rational(d)?;
        if d.is_zero() {
            return Err(Error::Input(format!("zero denominator in {s:?}")));
        }
        return Ok(n / d);
    }
    let bad = || Error::Input(format!("not a rational number: {s:?}"));
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (ip, fp) = mant.split_once('.').unwrap_or((mant, ""));
    if ip.is_empty() && fp.is_empty() {
        return Err(bad());
    }
    if !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: BigInt = format!("0{ip}{fp}").parse().map_err(|_| bad())?;
    let scale = exp - fp.len() as i32;
    let ten = BigInt::from(10);
    let mut r = BigRational::from_integer(digits);
    if scale >= 0 {
        r *= BigRational::from_integer(num::pow(ten, scale as usize));
    } else {
        r /= BigRational::from_integer(num::pow(ten, (-scale) as usize));
    }
    Ok(if neg { -r } else { r })
}

/// Exact rational value of the shortest decimal representation of `v`.
pub fn rational_from_f64(v: f64) -> Result<BigRational> {
    if !v.is_finite() {
        return Err(Error::Input(format!("non-finite value {v}")));
    }
    parse_rational(&format!("{v:e}"))
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Dense univariate polynomial with rational coefficients, index = degree.
#[derive(Debug, Clone, PartialEq)]
pub struct RPoly(pub Vec<BigRational>);

impl RPoly {
    pub fn monomial(c: BigRational, deg: usize) -> Self {
        let mut v = vec![BigRational::zero(); deg + 1];
        v[deg] = c;
        RPoly(v).trimmed()
    }

    pub fn trimmed(mut self) -> Self {
        while self.0.last().is_some_and(|c| c.is_zero()) {
            self.0.pop();
        }
        self
    }

    pub fn degree(&self) -> Option<usize> {
        self.0.iter().rposition(|c| !c.is_zero())
    }

    pub fn coeff(&self, k: usize) -> BigRational {
        self.0.get(k).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn mul(&self, o: &RPoly) -> RPoly {
        if self.0.is_empty() || o.0.is_empty() {
            return RPoly(vec![]);
        }
        let mut v = vec![BigRational::zero(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                v[i + j] += a * b;
            }
        }
        RPoly(v).trimmed()
    }

    pub fn derivative(&self) -> RPoly {
        RPoly(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * BigRational::from_integer(BigInt::from(k)))
                .collect(),
        )
        .trimmed()
    }

    /// Antiderivative vanishing at 0.
    pub fn integral(&self) -> RPoly {
        let mut v = vec![BigRational::zero()];
        for (k, c) in self.0.iter().enumerate() {
            v.push(c / BigRational::from_integer(BigInt::from(k + 1)));
        }
        RPoly(v).trimmed()
    }

    /// Multiplication by `x^k`.
    pub fn shift(&self, k: usize) -> RPoly {
        let mut v = vec![BigRational::zero(); k];
        v.extend(self.0.iter().cloned());
        RPoly(v).trimmed()
    }

    pub fn to_f64(&self) -> Poly1 {
        Poly1(self.0.iter().map(rational_to_f64).collect())
    }

    pub fn is_odd(&self) -> bool {
        self.0.iter().step_by(2).all(|c| c.is_zero())
    }

    pub fn is_even(&self) -> bool {
        self.0.iter().skip(1).step_by(2).all(|c| c.is_zero())
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.0.iter().map(|c| c.to_string()).collect()
    }
}

/// P(x) = x³ ∏ (x² − aᵢ²), exactly.
pub fn zero_planting_poly(zeros: &[BigRational]) -> RPoly {
    let mut p = RPoly::monomial(BigRational::one(), 3);
    for a in zeros {
        p = p.mul(&RPoly(vec![-(a * a), BigRational::zero(), BigRational::one()]));
    }
    p
}

/// Dense univariate polynomial with `f64` coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly1(pub Vec<f64>);

impl Poly1 {
    pub fn eval<T: Scalar>(&self, x: T) -> T {
        let mut acc = T::cst(0.0);
        for c in self.0.iter().rev() {
            acc = acc * x + *c;
        }
        acc
    }

    pub fn derivative(&self) -> Poly1 {
        Poly1(self.0.iter().enumerate().skip(1).map(|(k, c)| c * k as f64).collect())
    }
}

/// One monomial `c λ^i x^j y^k α^l` of a combination term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    /// Rational coefficient as a string, e.g. `"-1/2"`.
    pub coef: String,
    /// Exponents of (λ, x, y, α).
    #[serde(default)]
    pub pow: [u32; 4],
}

/// Polynomial in (λ, x, y) whose coefficients may depend polynomially on α.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MPoly {
    terms: Vec<(f64, [u32; 4])>,
}

impl MPoly {
    pub fn new(terms: Vec<(f64, [u32; 4])>) -> Self {
        MPoly { terms: terms.into_iter().filter(|t| t.0 != 0.0).collect() }
    }

    pub fn from_monomials(m: &[Monomial]) -> Result<Self> {
        let mut terms = Vec::with_capacity(m.len());
        for t in m {
            terms.push((rational_to_f64(&parse_rational(&t.coef)?), t.pow));
        }
        Ok(MPoly::new(terms))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[(f64, [u32; 4])] {
        &self.terms
    }

    /// Degree in y.
    pub fn y_degree(&self) -> u32 {
        self.terms.iter().map(|t| t.1[2]).max().unwrap_or(0)
    }

    pub fn eval<T: Scalar>(&self, l: T, x: T, y: T, alpha: f64) -> T {
        let mut acc = T::cst(0.0);
        for (c, p) in &self.terms {
            let mut m = T::cst(c * alpha.powi(p[3] as i32));
            if p[0] > 0 {
                m = m * l.powi(p[0] as i32);
            }
            if p[1] > 0 {
                m = m * x.powi(p[1] as i32);
            }
            if p[2] > 0 {
                m = m * y.powi(p[2] as i32);
            }
            acc = acc + m;
        }
        acc
    }
}

pub fn is_positive(r: &BigRational) -> bool {
    r.is_positive()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> BigRational {
        parse_rational(s).unwrap()
    }

    #[test]
    fn parses_decimals_and_fractions() {
        assert_eq!(q("0.0025"), q("1/400"));
        assert_eq!(q("-3/2"), q("-1.5"));
        assert_eq!(q("2.5e-3"), q("1/400"));
        assert_eq!(q("7"), q("14/2"));
        assert!(parse_rational("x").is_err());
        assert!(parse_rational("1/0").is_err());
        assert_eq!(rational_from_f64(0.05).unwrap(), q("1/20"));
    }

    #[test]
    fn zero_planting_poly_k1() {
        let p = zero_planting_poly(&[q("0.05")]);
        assert_eq!(p.coeff(5), q("1"));
        assert_eq!(p.coeff(3), q("-0.0025"));
        assert!(p.is_odd());
    }

    #[test]
    fn mpoly_eval() {
        let m = MPoly::new(vec![(-0.5, [1, 0, 0, 1]), (2.0, [0, 1, 2, 0])]);
        let v: f64 = m.eval(3.0, 2.0, 1.5, 0.1);
        assert!((v - (-0.15 + 9.0)).abs() < 1e-14);
        assert_eq!(m.y_degree(), 2);
    }
}
