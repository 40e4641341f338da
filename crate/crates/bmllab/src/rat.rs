//! Exact rational scalars.
//!
//! All geometric quantities (cube corners, side lengths, overlap measures,
//! rearrangement breakpoints) are `Ratio<i128>`. The shifted grids introduce
//! denominators `3·2^k`, so every value handled here stays well inside the
//! `i128` range at desk scale.

use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

pub type Rat = Ratio<i128>;

pub fn rat(n: i128, d: i128) -> Rat {
    Ratio::new(n, d)
}

pub fn from_int(n: i128) -> Rat {
    Ratio::from_integer(n)
}

/// `2^k` for signed `k`, exact.
pub fn pow2(k: i32) -> Rat {
    assert!(k.unsigned_abs() < 120, "dyadic scale out of range: {k}");
    if k >= 0 {
        Ratio::from_integer(1i128 << k)
    } else {
        Ratio::new(1, 1i128 << (-k))
    }
}

pub fn to_f64(x: Rat) -> f64 {
    // Reduced numerator/denominator each convert with <= 1 ulp error.
    x.numer().to_f64().unwrap() / x.denom().to_f64().unwrap()
}

/// Largest integer `<= x`.
pub fn floor_int(x: Rat) -> i128 {
    x.floor().to_integer()
}

/// Smallest integer `>= x`.
pub fn ceil_int(x: Rat) -> i128 {
    x.ceil().to_integer()
}

/// Exact conversion of a finite `f64` (mesh values are dyadic rationals).
pub fn from_f64_exact(v: f64) -> Option<Rat> {
    if !v.is_finite() {
        return None;
    }
    if v == 0.0 {
        return Some(Rat::zero());
    }
    let bits = v.to_bits();
    let sign = if bits >> 63 == 1 { -1i128 } else { 1i128 };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = (bits & ((1u64 << 52) - 1)) as i128;
    let (mant, e2) = if exp == 0 {
        (frac, -1074i64)
    } else {
        (frac + (1i128 << 52), exp - 1075)
    };
    // Keep within i128 after shifting; desk-scale values always fit.
    if !(-120..=60).contains(&e2) {
        return None;
    }
    let r = if e2 >= 0 {
        Ratio::from_integer(sign * (mant << e2))
    } else {
        Ratio::new(sign * mant, 1i128 << (-e2))
    };
    Some(r)
}

/// Serializable face of a rational: reduced numerator/denominator in `i64`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RatRepr {
    pub num: i64,
    pub den: i64,
}

impl RatRepr {
    pub fn of(x: Rat) -> Self {
        RatRepr {
            num: (*x.numer()).try_into().expect("rational numerator exceeds i64"),
            den: (*x.denom()).try_into().expect("rational denominator exceeds i64"),
        }
    }

    pub fn get(self) -> Rat {
        Ratio::new(self.num as i128, self.den as i128)
    }
}

/// Parse "3", "-3/2", "0.75" style strings.
pub fn parse_rat(s: &str) -> Option<Rat> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: i128 = n.trim().parse().ok()?;
        let d: i128 = d.trim().parse().ok()?;
        if d == 0 {
            return None;
        }
        return Some(Ratio::new(n, d));
    }
    if let Ok(n) = s.parse::<i128>() {
        return Some(Ratio::from_integer(n));
    }
    s.parse::<f64>().ok().and_then(from_f64_exact)
}

pub fn abs(x: Rat) -> Rat {
    x.abs()
}

/// Neumaier compensated accumulator; summation-order drift stays below
/// the crate-wide 1e-13 determinism contract.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pow2_exact() {
        assert_eq!(pow2(3), from_int(8));
        assert_eq!(pow2(-2), rat(1, 4));
        assert_eq!(pow2(0), from_int(1));
    }

    #[test]
    fn f64_round_trip_is_exact_for_dyadics() {
        for v in [0.0, 1.0, -0.75, 3.5, 1.0 / 256.0, -2048.0] {
            assert_eq!(to_f64(from_f64_exact(v).unwrap()), v);
        }
    }

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rat("3/2"), Some(rat(3, 2)));
        assert_eq!(parse_rat("-1/3"), Some(rat(-1, 3)));
        assert_eq!(parse_rat("0.25"), Some(rat(1, 4)));
        assert_eq!(parse_rat("4"), Some(from_int(4)));
        assert_eq!(parse_rat("1/0"), None);
    }

    #[test]
    fn kahan_handles_cancellation() {
        let mut s = KahanSum::new();
        s.add(1e16);
        s.add(1.0);
        s.add(-1e16);
        assert_eq!(s.total(), 1.0);
    }
}
