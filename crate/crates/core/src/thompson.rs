//! Thompson's group F as exact dyadic piecewise-linear maps of `[0, 1]`.
//!
//! Everything here is exact: coordinates are dyadic rationals backed by
//! arbitrary-precision integers and slopes are integer powers of two.
//! Composition is a right action, `x^(fg) = g(f(x))`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ThompsonError {
    #[error("breakpoints not strictly increasing at index {index}")]
    Monotonicity { index: usize },
    #[error("slope of segment {index} is not a power of two")]
    Slope { index: usize },
    #[error("breakpoint list must start at (0,0) and end at (1,1)")]
    Endpoint,
    #[error("{0}")]
    Range(String),
    #[error("no admissible power within {cap} iterations")]
    Cap { cap: usize },
    #[error("cannot parse dyadic {0:?}")]
    Parse(String),
}

/// `numerator / 2^exponent`, normalized so the numerator is odd unless the
/// value is zero (then the exponent is zero too).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dyadic {
    num: BigInt,
    exp: u32,
}

impl Dyadic {
    pub fn new(num: impl Into<BigInt>, exp: u32) -> Self {
        let mut d = Dyadic { num: num.into(), exp };
        d.normalize();
        d
    }

    pub fn zero() -> Self {
        Dyadic::new(0, 0)
    }

    pub fn one() -> Self {
        Dyadic::new(1, 0)
    }

    fn normalize(&mut self) {
        if self.num.is_zero() {
            self.exp = 0;
            return;
        }
        let tz = self.num.trailing_zeros().unwrap_or(0).min(self.exp as u64) as u32;
        if tz > 0 {
            self.num >>= tz as usize;
            self.exp -= tz;
        }
    }

    pub fn numerator(&self) -> &BigInt {
        &self.num
    }

    pub fn exponent(&self) -> u32 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.num.is_positive()
    }

    // numerators over the common denominator 2^max(exp)
    fn aligned(&self, other: &Dyadic) -> (BigInt, BigInt, u32) {
        let e = self.exp.max(other.exp);
        (
            &self.num << (e - self.exp) as usize,
            &other.num << (e - other.exp) as usize,
            e,
        )
    }

    pub fn add(&self, other: &Dyadic) -> Dyadic {
        let (a, b, e) = self.aligned(other);
        Dyadic::new(a + b, e)
    }

    pub fn sub(&self, other: &Dyadic) -> Dyadic {
        let (a, b, e) = self.aligned(other);
        Dyadic::new(a - b, e)
    }

    pub fn mul(&self, other: &Dyadic) -> Dyadic {
        Dyadic::new(&self.num * &other.num, self.exp + other.exp)
    }

    /// `self * 2^z`.
    pub fn scale_pow2(&self, z: i64) -> Dyadic {
        if z >= 0 {
            let shift = z as u32;
            if shift <= self.exp {
                Dyadic::new(self.num.clone(), self.exp - shift)
            } else {
                Dyadic::new(&self.num << (shift - self.exp) as usize, 0)
            }
        } else {
            Dyadic::new(self.num.clone(), self.exp + (-z) as u32)
        }
    }

    /// `log2(self / other)` when that ratio is a power of two; both must be
    /// positive.
    fn log2_ratio(&self, other: &Dyadic) -> Option<i64> {
        let (a, b, _) = self.aligned(other);
        if !a.is_positive() || !b.is_positive() {
            return None;
        }
        let ta = a.trailing_zeros().unwrap_or(0);
        let tb = b.trailing_zeros().unwrap_or(0);
        if (&a >> ta as usize) == (&b >> tb as usize) {
            Some(ta as i64 - tb as i64)
        } else {
            None
        }
    }

    /// Whether the value lies in the open unit interval.
    pub fn is_interior(&self) -> bool {
        self > &Dyadic::zero() && self < &Dyadic::one()
    }

    /// Largest multiple of `2^-level` strictly below `self`.
    pub fn grid_below(&self, level: u32) -> Dyadic {
        let scaled = self.scale_pow2(level as i64);
        // floor of the scaled value, minus one if it was already an integer
        let (q, r) = scaled.num.div_mod_floor(&(BigInt::one() << scaled.exp as usize));
        let k = if r.is_zero() { q - 1 } else { q };
        Dyadic::new(k, level)
    }

    /// Smallest multiple of `2^-level` strictly above `self`.
    pub fn grid_above(&self, level: u32) -> Dyadic {
        let scaled = self.scale_pow2(level as i64);
        let (q, _) = scaled.num.div_mod_floor(&(BigInt::one() << scaled.exp as usize));
        Dyadic::new(q + 1, level)
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, _) = self.aligned(other);
        a.cmp(&b)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.num, self.exp)
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for Dyadic {
    type Err = ThompsonError;

    /// Accepts `p/2^e`, `p/q` with `q` a power of two, or an integer.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let err = || ThompsonError::Parse(text.to_string());
        let text = text.trim();
        let (num, den) = match text.split_once('/') {
            None => (text, None),
            Some((n, d)) => (n.trim(), Some(d.trim())),
        };
        let num: BigInt = num.parse().map_err(|_| err())?;
        let exp = match den {
            None => 0,
            Some(d) => {
                if let Some(e) = d.strip_prefix("2^") {
                    e.parse::<u32>().map_err(|_| err())?
                } else {
                    let q: BigInt = d.parse().map_err(|_| err())?;
                    if !q.is_positive() || q.magnitude().count_ones() != 1 {
                        return Err(err());
                    }
                    q.trailing_zeros().unwrap_or(0) as u32
                }
            }
        };
        Ok(Dyadic::new(num, exp))
    }
}

impl Serialize for Dyadic {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Dyadic {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Shorthand for tests and literals: `dy(3, 3)` is 3/8.
pub fn dy(num: i64, exp: u32) -> Dyadic {
    Dyadic::new(num, exp)
}

/// An element of F: breakpoints `(input, output)` from `(0,0)` to `(1,1)`,
/// strictly increasing in both coordinates, with power-of-two slopes and
/// no redundant (collinear) interior breakpoints.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct DyadicPLMap {
    points: Vec<(Dyadic, Dyadic)>,
    // log2 of each segment's slope
    slopes: Vec<i64>,
}

impl DyadicPLMap {
    pub fn identity() -> Self {
        DyadicPLMap {
            points: vec![(Dyadic::zero(), Dyadic::zero()), (Dyadic::one(), Dyadic::one())],
            slopes: vec![0],
        }
    }

    /// Validates and canonicalizes a breakpoint list.
    pub fn new(points: Vec<(Dyadic, Dyadic)>) -> Result<Self, ThompsonError> {
        let ends_ok = points.len() >= 2
            && points[0] == (Dyadic::zero(), Dyadic::zero())
            && points[points.len() - 1] == (Dyadic::one(), Dyadic::one());
        if !ends_ok {
            return Err(ThompsonError::Endpoint);
        }
        let mut slopes = Vec::with_capacity(points.len() - 1);
        for (i, w) in points.windows(2).enumerate() {
            let dx = w[1].0.sub(&w[0].0);
            let dy = w[1].1.sub(&w[0].1);
            if !dx.is_positive() || !dy.is_positive() {
                return Err(ThompsonError::Monotonicity { index: i + 1 });
            }
            slopes.push(dy.log2_ratio(&dx).ok_or(ThompsonError::Slope { index: i })?);
        }
        Ok(DyadicPLMap::canonical(points, slopes))
    }

    fn canonical(points: Vec<(Dyadic, Dyadic)>, slopes: Vec<i64>) -> Self {
        let mut kept = vec![points[0].clone()];
        let mut kept_slopes: Vec<i64> = Vec::new();
        for (i, s) in slopes.into_iter().enumerate() {
            if kept_slopes.last() == Some(&s) {
                kept.pop();
            } else {
                kept_slopes.push(s);
            }
            kept.push(points[i + 1].clone());
        }
        DyadicPLMap {
            points: kept,
            slopes: kept_slopes,
        }
    }

    pub fn breakpoints(&self) -> &[(Dyadic, Dyadic)] {
        &self.points
    }

    /// log2 of each segment's slope.
    pub fn slope_exponents(&self) -> &[i64] {
        &self.slopes
    }

    pub fn is_identity(&self) -> bool {
        self.points.len() == 2
    }

    /// Exact image of `t` in `[0, 1]`.
    pub fn eval(&self, t: &Dyadic) -> Result<Dyadic, ThompsonError> {
        if t < &Dyadic::zero() || t > &Dyadic::one() {
            return Err(ThompsonError::Range(format!("{t} is outside [0,1]")));
        }
        Ok(self.eval_unchecked(t))
    }

    fn eval_unchecked(&self, t: &Dyadic) -> Dyadic {
        // last segment whose start is <= t
        let i = self.points.partition_point(|(x, _)| x <= t).saturating_sub(1).min(self.slopes.len() - 1);
        let (x0, y0) = &self.points[i];
        y0.add(&t.sub(x0).scale_pow2(self.slopes[i]))
    }

    fn preimage(&self, u: &Dyadic) -> Dyadic {
        let i = self.points.partition_point(|(_, y)| y <= u).saturating_sub(1).min(self.slopes.len() - 1);
        let (x0, y0) = &self.points[i];
        x0.add(&u.sub(y0).scale_pow2(-self.slopes[i]))
    }

    /// The map `t -> other(self(t))`.
    pub fn then(&self, other: &DyadicPLMap) -> DyadicPLMap {
        let mut inputs: Vec<Dyadic> = self.points.iter().map(|(x, _)| x.clone()).collect();
        inputs.extend(other.points.iter().map(|(u, _)| self.preimage(u)));
        inputs.sort();
        inputs.dedup();
        let points: Vec<(Dyadic, Dyadic)> = inputs
            .into_iter()
            .map(|t| {
                let y = other.eval_unchecked(&self.eval_unchecked(&t));
                (t, y)
            })
            .collect();
        DyadicPLMap::new(points).expect("F is closed under composition")
    }

    pub fn inverse(&self) -> DyadicPLMap {
        DyadicPLMap {
            points: self.points.iter().map(|(x, y)| (y.clone(), x.clone())).collect(),
            slopes: self.slopes.iter().map(|s| -s).collect(),
        }
    }

    /// `self^n`; negative powers use the inverse.
    pub fn pow(&self, n: i64) -> DyadicPLMap {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        (0..n.unsigned_abs()).fold(DyadicPLMap::identity(), |acc, _| acc.then(&base))
    }

    /// The conjugate of `self` by the affine map `[0,1] -> [d1,d2]`,
    /// extended by the identity outside `[d1, d2]`.
    pub fn rescaled(&self, d1: &Dyadic, d2: &Dyadic) -> Result<DyadicPLMap, ThompsonError> {
        if !(&Dyadic::zero() <= d1 && d1 < d2 && d2 <= &Dyadic::one()) {
            return Err(ThompsonError::Range(format!("[{d1}, {d2}] is not a subinterval of [0,1]")));
        }
        let len = d2.sub(d1);
        let mut points = vec![(Dyadic::zero(), Dyadic::zero())];
        for (x, y) in &self.points {
            points.push((d1.add(&len.mul(x)), d1.add(&len.mul(y))));
        }
        points.push((Dyadic::one(), Dyadic::one()));
        points.dedup();
        DyadicPLMap::new(points)
    }

    /// The smallest closed interval outside which the map is the identity,
    /// or `None` for the identity map.
    pub fn support_bounds(&self) -> Option<(Dyadic, Dyadic)> {
        let moving: Vec<usize> = (0..self.slopes.len())
            .filter(|&i| {
                let (x0, y0) = &self.points[i];
                let (x1, y1) = &self.points[i + 1];
                !(x0 == y0 && x1 == y1)
            })
            .collect();
        let first = *moving.first()?;
        let last = *moving.last()?;
        Some((self.points[first].0.clone(), self.points[last + 1].0.clone()))
    }
}

impl fmt::Debug for DyadicPLMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.points.iter().map(|(x, y)| format!("({x}, {y})")).collect();
        write!(f, "PL[{}]", parts.join(", "))
    }
}

#[derive(Serialize, Deserialize)]
struct PlRepr {
    breakpoints: Vec<(Dyadic, Dyadic)>,
}

impl Serialize for DyadicPLMap {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        PlRepr {
            breakpoints: self.points.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DyadicPLMap {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = PlRepr::deserialize(deserializer)?;
        DyadicPLMap::new(repr.breakpoints).map_err(serde::de::Error::custom)
    }
}

/// `x_0` with breakpoints (1/2, 1/4), (3/4, 1/2), and `x_1`, the identity on
/// `[0, 1/2]` followed by `x_0` rescaled into `[1/2, 1]`.
pub fn standard_generators() -> (DyadicPLMap, DyadicPLMap) {
    let x0 = DyadicPLMap::new(vec![
        (dy(0, 0), dy(0, 0)),
        (dy(1, 1), dy(1, 2)),
        (dy(3, 2), dy(1, 1)),
        (dy(1, 0), dy(1, 0)),
    ])
    .expect("x0 is valid");
    let x1 = x0.rescaled(&dy(1, 1), &dy(1, 0)).expect("x1 is valid");
    (x0, x1)
}

pub const DEFAULT_MOVER_CAP: usize = 64;

/// An element supported in `[d1, d2]` that moves `x` to a point outside
/// `forbidden`: the least power `n >= 1` of `x_0` rescaled into `[d1, d2]`
/// that works. Requires `0 < d1 < x < d2 < 1`.
pub fn interval_mover(
    d1: &Dyadic,
    d2: &Dyadic,
    x: &Dyadic,
    forbidden: &[Dyadic],
    cap: usize,
) -> Result<DyadicPLMap, ThompsonError> {
    if !(&Dyadic::zero() < d1 && d1 < x && x < d2 && d2 < &Dyadic::one()) {
        return Err(ThompsonError::Range(format!("need 0 < {d1} < {x} < {d2} < 1")));
    }
    let step = standard_generators().0.rescaled(d1, d2)?;
    let mut image = x.clone();
    let mut power = DyadicPLMap::identity();
    for _ in 0..cap {
        image = step.eval_unchecked(&image);
        power = power.then(&step);
        if &image != x && !forbidden.contains(&image) {
            return Ok(power);
        }
    }
    Err(ThompsonError::Cap { cap })
}
