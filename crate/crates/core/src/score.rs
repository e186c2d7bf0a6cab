//! Exact rational scores.
//!
//! Every reward in this crate is a ratio of small integers (checkpoint
//! fractions, the tool-reward table, format scores). Keeping them as
//! rationals until the API boundary makes set-membership checks like
//! `tool ∈ {0, 0.1, 0.8, 1}` and the perfect-score filter exact: `4/5`
//! is never confused with `1` by floating-point rounding.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// An exact rational score. Reduced, denominator always positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Score(Ratio<i128>);

impl Score {
    pub const ZERO: Score = Score(Ratio::new_raw(0, 1));
    pub const ONE: Score = Score(Ratio::new_raw(1, 1));

    /// `num/den`. Panics if `den == 0`.
    pub fn new(num: i128, den: i128) -> Self {
        Score(Ratio::new(num, den))
    }

    pub fn from_int(n: i128) -> Self {
        Score(Ratio::from_integer(n))
    }

    /// Exact conversion from a binary float (every finite f64 is rational).
    /// Returns `None` for non-finite inputs or denormals too small for i128.
    pub fn from_f64_exact(x: f64) -> Option<Self> {
        if !x.is_finite() {
            return None;
        }
        if x == 0.0 {
            return Some(Score::ZERO);
        }
        let bits = x.to_bits();
        let sign: i128 = if bits >> 63 == 1 { -1 } else { 1 };
        let biased = ((bits >> 52) & 0x7ff) as i64;
        let frac = (bits & 0xf_ffff_ffff_ffff) as i128;
        let (mantissa, exp) = if biased == 0 {
            (frac, -1074i64)
        } else {
            (frac | (1 << 52), biased - 1075)
        };
        let mut num = sign * mantissa;
        let mut den: i128 = 1;
        if exp >= 0 {
            if exp > 70 {
                return None; // would overflow i128 in later arithmetic
            }
            num = num.checked_shl(exp as u32)?;
        } else {
            let shift = -exp;
            if shift > 120 {
                return None;
            }
            den = den.checked_shl(shift as u32)?;
        }
        Some(Score(Ratio::new(num, den)))
    }

    pub fn numer(&self) -> i128 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i128 {
        *self.0.denom()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn in_unit_interval(&self) -> bool {
        !self.0.is_negative() && self.0 <= Ratio::from_integer(1)
    }
}

impl std::ops::Add for Score {
    type Output = Score;
    fn add(self, rhs: Score) -> Score {
        Score(self.0 + rhs.0)
    }
}

impl std::ops::Sub for Score {
    type Output = Score;
    fn sub(self, rhs: Score) -> Score {
        Score(self.0 - rhs.0)
    }
}

impl std::ops::Mul for Score {
    type Output = Score;
    fn mul(self, rhs: Score) -> Score {
        Score(self.0 * rhs.0)
    }
}

impl std::ops::Div for Score {
    type Output = Score;
    fn div(self, rhs: Score) -> Score {
        Score(self.0 / rhs.0)
    }
}

impl std::iter::Sum for Score {
    fn sum<I: Iterator<Item = Score>>(iter: I) -> Score {
        iter.fold(Score::ZERO, |acc, s| acc + s)
    }
}

impl fmt::Display for Score {
    /// `"2/3"`, or just `"1"` when the denominator is 1.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self.0.denom() == 1 {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("invalid rational literal {0:?}")]
pub struct ParseScoreError(String);

impl FromStr for Score {
    type Err = ParseScoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ParseScoreError(s.to_string());
        match s.split_once('/') {
            Some((n, d)) => {
                let num: i128 = n.trim().parse().map_err(|_| bad())?;
                let den: i128 = d.trim().parse().map_err(|_| bad())?;
                if den == 0 {
                    return Err(bad());
                }
                Ok(Score::new(num, den))
            }
            None => {
                let t = s.trim();
                if let Ok(n) = t.parse::<i128>() {
                    return Ok(Score::from_int(n));
                }
                let x: f64 = t.parse().map_err(|_| bad())?;
                Score::from_f64_exact(x).ok_or_else(bad)
            }
        }
    }
}

impl Serialize for Score {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Score {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ScoreVisitor;

        impl Visitor<'_> for ScoreVisitor {
            type Value = Score;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a rational like \"4/5\", an integer, or a float")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Score, E> {
                v.parse().map_err(de::Error::custom)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Score, E> {
                Ok(Score::from_int(v as i128))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Score, E> {
                Ok(Score::from_int(v as i128))
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Score, E> {
                Score::from_f64_exact(v)
                    .ok_or_else(|| de::Error::custom(format!("non-finite score {v}")))
            }
        }

        deserializer.deserialize_any(ScoreVisitor)
    }
}
