use std::cmp::Ordering;
use std::ops::{Add, Neg, Sub};

/// Exact binary fraction `mant · 2^exp`, kept normalized so equal values compare equal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Dyadic {
    mant: i128,
    exp: i32,
}

impl Dyadic {
    pub const ZERO: Dyadic = Dyadic { mant: 0, exp: 0 };

    pub fn new(mant: i128, exp: i32) -> Self {
        if mant == 0 {
            return Self::ZERO;
        }
        let tz = mant.trailing_zeros() as i32;
        Self {
            mant: mant >> tz,
            exp: exp + tz,
        }
    }

    pub fn from_int(n: i64) -> Self {
        Self::new(n as i128, 0)
    }

    /// Every finite `f64` is a dyadic rational, so this is exact.
    pub fn from_f64(x: f64) -> Option<Self> {
        if !x.is_finite() {
            return None;
        }
        if x == 0.0 {
            return Some(Self::ZERO);
        }
        let (m, e, s) = num_traits::Float::integer_decode(x);
        Some(Self::new(s as i128 * m as i128, e as i32))
    }

    pub fn to_f64(self) -> f64 {
        if self.mant == 0 {
            return 0.0;
        }
        let bits = 128 - self.mant.unsigned_abs().leading_zeros() as i32;
        if bits <= 53 {
            self.mant as f64 * 2f64.powi(self.exp)
        } else {
            let shift = bits - 53;
            (self.mant >> shift) as f64 * 2f64.powi(self.exp + shift)
        }
    }

    pub fn half(self) -> Self {
        Self::new(self.mant, self.exp - 1)
    }

    pub fn mul_int(self, n: i64) -> Self {
        let m = self
            .mant
            .checked_mul(n as i128)
            .expect("dyadic mantissa overflow");
        Self::new(m, self.exp)
    }

    pub fn is_zero(self) -> bool {
        self.mant == 0
    }

    fn align(a: Self, b: Self) -> (i128, i128, i32) {
        if a.mant == 0 {
            return (0, b.mant, b.exp);
        }
        if b.mant == 0 {
            return (a.mant, 0, a.exp);
        }
        let e = a.exp.min(b.exp);
        let shift = |m: i128, d: i32| -> i128 {
            let d = d as u32;
            assert!(
                d < 126 && (m.unsigned_abs().leading_zeros() > d + 1),
                "dyadic exponent spread too large"
            );
            m << d
        };
        (shift(a.mant, a.exp - e), shift(b.mant, b.exp - e), e)
    }
}

impl Add for Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: Dyadic) -> Dyadic {
        let (a, b, e) = Dyadic::align(self, rhs);
        Dyadic::new(a.checked_add(b).expect("dyadic overflow"), e)
    }
}

impl Sub for Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: Dyadic) -> Dyadic {
        self + (-rhs)
    }
}

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic {
            mant: -self.mant,
            exp: self.exp,
        }
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, _) = Dyadic::align(*self, *other);
        a.cmp(&b)
    }
}

pub type DyadicPoint = [Dyadic; 2];

pub fn point_from_f64(p: [f64; 2]) -> Option<DyadicPoint> {
    Some([Dyadic::from_f64(p[0])?, Dyadic::from_f64(p[1])?])
}

pub fn midpoint(a: DyadicPoint, b: DyadicPoint) -> DyadicPoint {
    [(a[0] + b[0]).half(), (a[1] + b[1]).half()]
}
