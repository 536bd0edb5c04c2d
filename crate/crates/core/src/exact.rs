//! Exact scalars: rationals, unit phases with rational coordinates, and
//! polar values `modulus · phase` used as spectral points.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exact rational scalar.
pub type Q = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseExactError {
    #[error("empty numeric literal")]
    Empty,
    #[error("malformed numeric literal `{0}`")]
    Malformed(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
    #[error("exponent out of range in `{0}`")]
    ExponentRange(String),
}

pub fn int(v: i64) -> Q {
    Q::from_integer(BigInt::from(v))
}

pub fn ratio(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `"3"`, `"-3/5"`, `"0.25"`, `"1e-3"` or `"2.5E2"` into an exact rational.
pub fn parse_rational(text: &str) -> Result<Q, ParseExactError> {
    let s = text.trim();
    if s.is_empty() {
        return Err(ParseExactError::Empty);
    }
    if let Some((num, den)) = s.split_once('/') {
        let n = parse_integer(num.trim()).ok_or_else(|| ParseExactError::Malformed(s.into()))?;
        let d = parse_integer(den.trim()).ok_or_else(|| ParseExactError::Malformed(s.into()))?;
        if d.is_zero() {
            return Err(ParseExactError::ZeroDenominator(s.into()));
        }
        return Ok(Q::new(n, d));
    }
    parse_decimal(s)
}

fn parse_integer(s: &str) -> Option<BigInt> {
    let digits = s.strip_prefix(['-', '+']).unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

fn parse_decimal(s: &str) -> Result<Q, ParseExactError> {
    let bad = || ParseExactError::Malformed(s.into());
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(pos) => {
            let e: i64 = s[pos + 1..].parse().map_err(|_| bad())?;
            (&s[..pos], e)
        }
        None => (s, 0),
    };
    let (negative, body) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole
        .bytes()
        .chain(frac.bytes())
        .all(|b| b.is_ascii_digit())
    {
        return Err(bad());
    }
    let scale = exp - frac.len() as i64;
    if scale.abs() > 4096 {
        return Err(ParseExactError::ExponentRange(s.into()));
    }
    let digits: BigInt = format!("{whole}{frac}")
        .parse()
        .unwrap_or_else(|_| BigInt::zero());
    let ten = BigInt::from(10);
    let mut value = if scale >= 0 {
        Q::from_integer(digits * num_traits::pow(ten, scale as usize))
    } else {
        Q::new(digits, num_traits::pow(ten, (-scale) as usize))
    };
    if negative {
        value = -value;
    }
    Ok(value)
}

/// Exact value of a finite `f64` (binary expansion, no rounding).
pub fn from_f64(v: f64) -> Option<Q> {
    Q::from_float(v)
}

pub fn to_f64(q: &Q) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Simplest rational (smallest denominator) in the closed interval `[lo, hi]`.
pub fn simplest_between(lo: &Q, hi: &Q) -> Q {
    debug_assert!(lo <= hi);
    if lo.is_negative() && hi.is_positive() || lo.is_zero() || hi.is_zero() {
        return Q::zero();
    }
    if hi.is_negative() {
        return -simplest_between(&-hi, &-lo);
    }
    let fl = lo.floor();
    if fl == *lo {
        return fl;
    }
    if &fl + Q::one() <= *hi {
        return lo.ceil();
    }
    // lo and hi share the integer part; recurse on reciprocals of the fractional parts.
    let inner = simplest_between(&(hi - &fl).recip(), &(lo - &fl).recip());
    fl + inner.recip()
}

/// Snaps a floating value to the simplest rational within `tol` of it.
pub fn snap_f64(v: f64, tol: f64) -> Q {
    let lo = from_f64(v - tol).unwrap_or_else(Q::zero);
    let hi = from_f64(v + tol).unwrap_or_else(Q::zero);
    simplest_between(&lo, &hi)
}

/// Integer power `base^exp` for a positive integer base, as a rational.
pub fn pow_u64(base: u64, exp: u32) -> Q {
    Q::from_integer(num_traits::pow(BigInt::from(base), exp as usize))
}

/// Unit complex number with exact rational coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Phase {
    re: Q,
    im: Q,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("phase ({re}, {im}) does not have unit modulus")]
pub struct NotUnit {
    pub re: Q,
    pub im: Q,
}

impl Phase {
    pub fn new(re: Q, im: Q) -> Result<Self, NotUnit> {
        if &re * &re + &im * &im != Q::one() {
            return Err(NotUnit { re, im });
        }
        Ok(Self { re, im })
    }

    pub fn one() -> Self {
        Self {
            re: Q::one(),
            im: Q::zero(),
        }
    }

    pub fn minus_one() -> Self {
        Self {
            re: -Q::one(),
            im: Q::zero(),
        }
    }

    pub fn i() -> Self {
        Self {
            re: Q::zero(),
            im: Q::one(),
        }
    }

    pub fn re(&self) -> &Q {
        &self.re
    }

    pub fn im(&self) -> &Q {
        &self.im
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        Self {
            re: self.re.clone(),
            im: -&self.im,
        }
    }

    pub fn mul(&self, other: &Phase) -> Self {
        Self {
            re: &self.re * &other.re - &self.im * &other.im,
            im: &self.re * &other.im + &self.im * &other.re,
        }
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(to_f64(&self.re), to_f64(&self.im))
    }
}

impl Ord for Phase {
    fn cmp(&self, other: &Self) -> Ordering {
        (&self.re, &self.im).cmp(&(&other.re, &other.im))
    }
}

impl PartialOrd for Phase {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.re, self.im)
    }
}

/// Exact complex value `modulus · phase`; zero always carries the unit phase.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Polar {
    modulus: Q,
    phase: Phase,
}

impl Polar {
    /// Panics if `modulus` is negative.
    pub fn new(modulus: Q, phase: Phase) -> Self {
        assert!(!modulus.is_negative(), "negative modulus {modulus}");
        let phase = if modulus.is_zero() {
            Phase::one()
        } else {
            phase
        };
        Self { modulus, phase }
    }

    pub fn real(modulus: Q) -> Self {
        Self::new(modulus, Phase::one())
    }

    /// Gaussian rational `re + i·im` when its modulus is rational.
    pub fn from_cartesian(re: &Q, im: &Q) -> Option<Self> {
        let norm_sq = re * re + im * im;
        if norm_sq.is_zero() {
            return Some(Self::real(Q::zero()));
        }
        let modulus = sqrt_exact(&norm_sq)?;
        let phase = Phase::new(re / &modulus, im / &modulus).ok()?;
        Some(Self { modulus, phase })
    }

    pub fn zero() -> Self {
        Self::real(Q::zero())
    }

    pub fn modulus(&self) -> &Q {
        &self.modulus
    }

    pub fn phase(&self) -> &Phase {
        &self.phase
    }

    pub fn is_zero(&self) -> bool {
        self.modulus.is_zero()
    }

    pub fn conj(&self) -> Self {
        Self::new(self.modulus.clone(), self.phase.conj())
    }

    /// `λ ↦ 1/λ` for nonzero λ, `0 ↦ 0`.
    pub fn dagger(&self) -> Self {
        if self.is_zero() {
            Self::zero()
        } else {
            Self::new(self.modulus.recip(), self.phase.conj())
        }
    }

    pub fn re(&self) -> Q {
        &self.modulus * &self.phase.re
    }

    pub fn im(&self) -> Q {
        &self.modulus * &self.phase.im
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(to_f64(&self.re()), to_f64(&self.im()))
    }
}

impl Ord for Polar {
    fn cmp(&self, other: &Self) -> Ordering {
        self.modulus
            .cmp(&other.modulus)
            .then_with(|| self.phase.cmp(&other.phase))
    }
}

impl PartialOrd for Polar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Polar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.phase.is_one() {
            write!(f, "{}", self.modulus)
        } else {
            write!(f, "{}·{}", self.modulus, self.phase)
        }
    }
}

/// Exact square root of a nonnegative rational, if it is rational.
pub fn sqrt_exact(q: &Q) -> Option<Q> {
    if q.is_negative() {
        return None;
    }
    let n = isqrt_exact(q.numer())?;
    let d = isqrt_exact(q.denom())?;
    Some(Q::new(n, d))
}

fn isqrt_exact(n: &BigInt) -> Option<BigInt> {
    let r = n.sqrt();
    (&r * &r == *n).then_some(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_rational("3/5").unwrap(), ratio(3, 5));
        assert_eq!(parse_rational("0.6").unwrap(), ratio(3, 5));
        assert_eq!(parse_rational("-2").unwrap(), int(-2));
        assert_eq!(parse_rational("1e-3").unwrap(), ratio(1, 1000));
        assert_eq!(parse_rational("2.5E2").unwrap(), int(250));
        assert_eq!(parse_rational(".5").unwrap(), ratio(1, 2));
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_rational("").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1.2.3").is_err());
        assert!(parse_rational("1e99999").is_err());
        assert!(parse_rational("-").is_err());
    }

    #[test]
    fn phase_must_be_unit() {
        assert!(Phase::new(ratio(3, 5), ratio(4, 5)).is_ok());
        assert!(Phase::new(ratio(1, 2), ratio(1, 2)).is_err());
    }

    #[test]
    fn polar_from_cartesian() {
        let p = Polar::from_cartesian(&int(0), &int(2)).unwrap();
        assert_eq!(p.modulus(), &int(2));
        assert_eq!(p.phase(), &Phase::i());
        assert!(Polar::from_cartesian(&int(1), &int(1)).is_none());
        let z = Polar::from_cartesian(&int(0), &int(0)).unwrap();
        assert!(z.is_zero());
    }

    #[test]
    fn dagger_conjugates_phase() {
        let v = Polar::new(int(2), Phase::i());
        let d = v.dagger();
        assert_eq!(d.modulus(), &ratio(1, 2));
        assert_eq!(d.phase(), &Phase::i().conj());
        assert_eq!(Polar::zero().dagger(), Polar::zero());
    }

    #[test]
    fn snapping_finds_small_denominators() {
        assert_eq!(snap_f64(1.0000000000000002, 1e-12), int(1));
        assert_eq!(snap_f64(0.333333333333333, 1e-12), ratio(1, 3));
        assert_eq!(snap_f64(-2.5, 1e-12), ratio(-5, 2));
    }
}
