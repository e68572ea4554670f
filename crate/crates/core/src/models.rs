//! Model spacetimes: Minkowski space, warped products `I ×_f S` with metric
//! `-dt² + f(t)² h`, conformal rescalings of those, and restrictions to the
//! chronological future of a finite vertex set.
//!
//! Time orientation is given by the `t` coordinate in every model: a causal
//! vector with `dt > 0` is future-pointing.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{self, MonotoneCubic};
use crate::timefuncs::Phi;

/// Absolute tolerance on `d_h - ∫ dt/f` inside which a pair is treated as
/// lying on the light-cone boundary.
pub const CONE_TOLERANCE: f64 = 1e-9;

/// Relative tolerance for conformal-time integrals done by quadrature.
pub const QUADRATURE_TOLERANCE: f64 = 1e-10;

/// An event: time coordinate plus fiber chart coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<f64>", try_from = "Vec<f64>")]
pub struct SpacetimePoint {
    pub t: f64,
    pub x: Vec<f64>,
}

impl SpacetimePoint {
    pub fn new(t: f64, x: impl Into<Vec<f64>>) -> Self {
        Self { t, x: x.into() }
    }

    /// Parses `t,x1,...,xn`.
    pub fn parse(s: &str) -> Result<Self> {
        let coords = s
            .split(',')
            .map(|c| {
                c.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidConfig(format!("bad coordinate {c:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::try_from(coords)
    }

    /// Coordinates as one vector, time first.
    pub fn coords(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.x.len() + 1);
        v.push(self.t);
        v.extend_from_slice(&self.x);
        v
    }
}

impl From<SpacetimePoint> for Vec<f64> {
    fn from(p: SpacetimePoint) -> Self {
        p.coords()
    }
}

impl TryFrom<Vec<f64>> for SpacetimePoint {
    type Error = Error;

    fn try_from(mut v: Vec<f64>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::InvalidConfig("empty coordinate list".into()));
        }
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidConfig("non-finite coordinate".into()));
        }
        let t = v.remove(0);
        Ok(Self { t, x: v })
    }
}

impl fmt::Display for SpacetimePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.t)?;
        for c in &self.x {
            write!(f, ", {c}")?;
        }
        write!(f, ")")
    }
}

/// A tangent vector `dt ∂_t + dx` at `base`. For sphere fibers `dx` is an
/// ambient vector tangent to the unit sphere at `base.x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    pub base: SpacetimePoint,
    pub dt: f64,
    pub dx: Vec<f64>,
}

impl TangentVector {
    pub fn new(base: SpacetimePoint, dt: f64, dx: impl Into<Vec<f64>>) -> Self {
        Self { base, dt, dx: dx.into() }
    }

    pub fn zero(base: SpacetimePoint) -> Self {
        let n = base.x.len();
        Self { base, dt: 0.0, dx: vec![0.0; n] }
    }

    pub fn is_zero(&self) -> bool {
        self.dt == 0.0 && self.dx.iter().all(|c| *c == 0.0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            base: self.base.clone(),
            dt: self.dt * s,
            dx: self.dx.iter().map(|c| c * s).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CausalClass {
    FutureTimelike,
    PastTimelike,
    FutureNull,
    PastNull,
    Spacelike,
    Zero,
}

impl CausalClass {
    pub fn is_causal(self) -> bool {
        !matches!(self, CausalClass::Spacelike)
    }

    pub fn is_future(self) -> bool {
        matches!(self, CausalClass::FutureTimelike | CausalClass::FutureNull)
    }

    pub fn is_past(self) -> bool {
        matches!(self, CausalClass::PastTimelike | CausalClass::PastNull)
    }
}

/// How `q` sits relative to `p`.
///
/// `ClosureOnly` variants describe `q ∈ cl I⁺(p)` without `p ≤ q`; with the
/// complete fibers supported here they never arise, but the variant is part
/// of the reporting vocabulary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CausalRelation {
    Identical,
    ChronologicalFuture,
    CausalFutureOnly,
    ClosureFutureOnly,
    ChronologicalPast,
    CausalPastOnly,
    ClosurePastOnly,
    Unrelated,
}

impl CausalRelation {
    /// `p ≤ q`.
    pub fn is_causal_future(self) -> bool {
        matches!(
            self,
            CausalRelation::Identical
                | CausalRelation::ChronologicalFuture
                | CausalRelation::CausalFutureOnly
        )
    }

    /// `q ≤ p`.
    pub fn is_causal_past(self) -> bool {
        matches!(
            self,
            CausalRelation::Identical
                | CausalRelation::ChronologicalPast
                | CausalRelation::CausalPastOnly
        )
    }

    pub fn is_related(self) -> bool {
        self.is_causal_future() || self.is_causal_past()
    }

    /// `q ∈ cl I⁺(p)`.
    pub fn in_future_closure(self) -> bool {
        self.is_causal_future() || self == CausalRelation::ClosureFutureOnly
    }

    /// True when the verdict came from the boundary tolerance band.
    pub fn is_boundary(self) -> bool {
        matches!(
            self,
            CausalRelation::CausalFutureOnly
                | CausalRelation::CausalPastOnly
                | CausalRelation::ClosureFutureOnly
                | CausalRelation::ClosurePastOnly
        )
    }
}

/// Open time interval; infinite ends are serialized as `null`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const REAL_LINE: Interval = Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::InvalidConfig(format!("empty interval ({lo}, {hi})")));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, t: f64) -> bool {
        t > self.lo && t < self.hi
    }

    /// Distance from `t` to the nearer end.
    pub fn margin(&self, t: f64) -> f64 {
        (t - self.lo).min(self.hi - t)
    }

    /// Evenly spread interior sample times (finite windows around infinite ends).
    pub fn samples(&self, n: usize) -> Vec<f64> {
        let (a, b) = match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => (self.lo, self.hi),
            (true, false) => (self.lo, self.lo + 10.0),
            (false, true) => (self.hi - 10.0, self.hi),
            (false, false) => (-10.0, 10.0),
        };
        (1..=n).map(|i| a + (b - a) * i as f64 / (n + 1) as f64).collect()
    }
}

impl Serialize for Interval {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let end = |v: f64| if v.is_finite() { Some(v) } else { None };
        [end(self.lo), end(self.hi)].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let [lo, hi] = <[Option<f64>; 2]>::deserialize(d)?;
        Interval::new(lo.unwrap_or(f64::NEG_INFINITY), hi.unwrap_or(f64::INFINITY))
            .map_err(serde::de::Error::custom)
    }
}

/// Warp factor `f(t) > 0` of a warped product.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Warp {
    Constant {
        value: f64,
    },
    /// `coefficient · t^exponent`, defined for `t > 0`.
    Power {
        exponent: f64,
        #[serde(default = "one")]
        coefficient: f64,
    },
    /// `coefficient · e^(rate · t)`.
    Exponential {
        rate: f64,
        #[serde(default = "one")]
        coefficient: f64,
    },
    /// Monotone cubic through the given samples.
    Tabulated {
        #[serde(rename = "t")]
        ts: Vec<f64>,
        #[serde(rename = "f")]
        fs: Vec<f64>,
    },
    /// `ρ(τ) = φ'(φ⁻¹(τ)) · f(φ⁻¹(τ))`: the warp seen in the time coordinate
    /// `τ = φ(t)` after removing the conformal factor `φ'²`.
    Reparam { base: Box<Warp>, phi: Phi },
}

fn one() -> f64 {
    1.0
}

impl Warp {
    pub const UNIT: Warp = Warp::Constant { value: 1.0 };

    fn table(ts: &[f64], fs: &[f64]) -> Result<MonotoneCubic> {
        MonotoneCubic::new(ts.to_vec(), fs.to_vec())
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Warp::Constant { value } => *value,
            Warp::Power { exponent, coefficient } => coefficient * t.powf(*exponent),
            Warp::Exponential { rate, coefficient } => coefficient * (rate * t).exp(),
            Warp::Tabulated { ts, fs } => match Self::table(ts, fs) {
                Ok(c) => c.eval(t),
                Err(_) => f64::NAN,
            },
            Warp::Reparam { base, phi } => match phi.inverse(t) {
                Ok(s) => phi.derivative(s) * base.eval(s),
                Err(_) => f64::NAN,
            },
        }
    }

    pub fn is_constant(&self) -> Option<f64> {
        match self {
            Warp::Constant { value } => Some(*value),
            Warp::Power { exponent, coefficient } if *exponent == 0.0 => Some(*coefficient),
            Warp::Exponential { rate, coefficient } if *rate == 0.0 => Some(*coefficient),
            _ => None,
        }
    }

    /// Checks positivity on samples of `interval` and family-specific domain rules.
    pub fn validate(&self, interval: &Interval) -> Result<()> {
        match self {
            Warp::Power { .. } if interval.lo < 0.0 => {
                return Err(Error::InvalidConfig(
                    "power warp needs an interval inside (0, ∞)".into(),
                ))
            }
            Warp::Tabulated { ts, fs } => {
                let table = Self::table(ts, fs)?;
                let (a, b) = table.domain();
                if !(interval.lo >= a && interval.hi <= b) {
                    return Err(Error::InvalidConfig(format!(
                        "tabulated warp covers [{a}, {b}] but interval is ({}, {})",
                        interval.lo, interval.hi
                    )));
                }
                if fs.iter().any(|v| *v <= 0.0) {
                    return Err(Error::InvalidConfig("tabulated warp must be positive".into()));
                }
            }
            _ => {}
        }
        for t in interval.samples(64) {
            let v = self.eval(t);
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("warp f({t}) = {v} is not positive")));
            }
        }
        Ok(())
    }

    /// Conformal time `Φ(t)`: an antiderivative of `1/f`.
    pub fn conformal_time(&self, t: f64) -> Result<f64> {
        match self {
            Warp::Constant { value } => Ok(t / value),
            Warp::Power { exponent, coefficient } => {
                if *exponent == 1.0 {
                    Ok(t.ln() / coefficient)
                } else {
                    Ok(t.powf(1.0 - exponent) / (coefficient * (1.0 - exponent)))
                }
            }
            Warp::Exponential { rate, coefficient } => {
                if *rate == 0.0 {
                    Ok(t / coefficient)
                } else {
                    Ok(-(-rate * t).exp() / (coefficient * rate))
                }
            }
            Warp::Tabulated { ts, fs } => {
                let table = Self::table(ts, fs)?;
                let (t0, _) = table.domain();
                numeric::integrate(|s| 1.0 / table.eval(s), t0, t, QUADRATURE_TOLERANCE, 1e-300)
            }
            Warp::Reparam { base, phi } => base.conformal_time(phi.inverse(t)?),
        }
    }

    /// `∫_a^b dt / f(t)`.
    pub fn integral_reciprocal(&self, a: f64, b: f64) -> Result<f64> {
        match self {
            Warp::Tabulated { ts, fs } => {
                let table = Self::table(ts, fs)?;
                numeric::integrate(|s| 1.0 / table.eval(s), a, b, QUADRATURE_TOLERANCE, 1e-300)
            }
            _ => Ok(self.conformal_time(b)? - self.conformal_time(a)?),
        }
    }

    /// Inverse of [`Warp::conformal_time`], searched inside `interval`.
    pub fn conformal_time_inverse(&self, u: f64, interval: &Interval) -> Result<f64> {
        let t = match self {
            Warp::Constant { value } => u * value,
            Warp::Power { exponent, coefficient } => {
                if *exponent == 1.0 {
                    (u * coefficient).exp()
                } else {
                    (u * coefficient * (1.0 - exponent)).powf(1.0 / (1.0 - exponent))
                }
            }
            Warp::Exponential { rate, coefficient } => {
                if *rate == 0.0 {
                    u * coefficient
                } else {
                    -(-u * coefficient * rate).ln() / rate
                }
            }
            Warp::Tabulated { .. } => {
                let (lo, hi) = (interval.lo, interval.hi);
                numeric::brent(|t| self.conformal_time(t).unwrap_or(f64::NAN) - u, lo, hi, 1e-14)?
            }
            Warp::Reparam { base, phi } => phi.eval(base.conformal_time_inverse(u, &phi.preimage(interval)?)?),
        };
        if t.is_finite() {
            Ok(t)
        } else {
            Err(Error::RootFinding(format!("conformal time {u} has no preimage")))
        }
    }

    /// Range of `Φ` over the open interval.
    pub fn conformal_range(&self, interval: &Interval) -> Result<(f64, f64)> {
        let end = |t: f64, towards_hi: bool| -> Result<f64> {
            if t.is_finite() {
                return self.conformal_time(t);
            }
            // Limits at infinite ends, in closed form where possible.
            Ok(match self {
                Warp::Constant { .. } => t,
                Warp::Power { exponent, .. } => {
                    if *exponent <= 1.0 {
                        t
                    } else {
                        0.0
                    }
                }
                Warp::Exponential { rate, .. } => {
                    if *rate == 0.0 || (towards_hi && *rate < 0.0) || (!towards_hi && *rate > 0.0) {
                        t
                    } else {
                        0.0
                    }
                }
                _ => t,
            })
        };
        let lo = if interval.lo == 0.0 {
            match self {
                Warp::Power { exponent, .. } if *exponent >= 1.0 => f64::NEG_INFINITY,
                _ => self.conformal_time(interval.lo)?,
            }
        } else {
            end(interval.lo, false)?
        };
        let hi = end(interval.hi, true)?;
        Ok((lo, hi))
    }

    /// Minimum of `f` over `[a, b]`.
    pub fn min_on(&self, a: f64, b: f64) -> Result<f64> {
        match self {
            Warp::Constant { value } => Ok(*value),
            Warp::Power { .. } | Warp::Exponential { .. } => Ok(self.eval(a).min(self.eval(b))),
            Warp::Tabulated { ts, fs } => Ok(Self::table(ts, fs)?.min_on(a, b)),
            // A power of |τ|: extremes sit at the ends or at τ = 0.
            Warp::Reparam { base, phi: Phi::Power { .. } } if matches!(**base, Warp::Constant { .. }) => {
                let mut m = self.eval(a).min(self.eval(b));
                if a <= 0.0 && b >= 0.0 {
                    m = m.min(self.eval(0.0));
                }
                if m.is_nan() {
                    Err(Error::NonConvergence("warp minimum not finite".into()))
                } else {
                    Ok(m)
                }
            }
            Warp::Reparam { .. } => {
                let n = 512;
                let mut best = (a, f64::INFINITY);
                // Power reparameterizations vanish at the image of s = 0, a
                // cusp that sampling only approaches.
                if let Warp::Reparam { phi, .. } = self {
                    if phi.defined_at(0.0) {
                        let t0 = phi.eval(0.0);
                        if t0 >= a && t0 <= b {
                            best = (t0, self.eval(t0));
                        }
                    }
                }
                for i in 0..=n {
                    let t = a + (b - a) * i as f64 / n as f64;
                    let v = self.eval(t);
                    if v < best.1 {
                        best = (t, v);
                    }
                }
                let h = (b - a) / n as f64;
                let (_, v) = numeric::golden_section(|t| self.eval(t), (best.0 - h).max(a), (best.0 + h).min(b), 60);
                let m = best.1.min(v);
                if m.is_finite() {
                    Ok(m)
                } else {
                    Err(Error::NonConvergence("warp minimum not finite".into()))
                }
            }
        }
    }

    /// Algebraic simplification of a reparameterized warp to a closed family.
    pub fn simplified(self) -> Warp {
        let Warp::Reparam { base, phi } = self else {
            return self;
        };
        match (&*base, &phi) {
            (_, Phi::Identity) => *base,
            // Odd powers range over negative times, where `powf` is undefined.
            (Warp::Constant { value }, Phi::Power { exponent }) if !Phi::odd_integer(*exponent) => Warp::Power {
                exponent: (exponent - 1.0) / exponent,
                coefficient: value * exponent,
            },
            (Warp::Constant { value }, Phi::Exponential { rate }) => {
                Warp::Power { exponent: 1.0, coefficient: value * rate }
            }
            (Warp::Exponential { rate: s, coefficient }, Phi::Exponential { rate: r }) => Warp::Power {
                exponent: 1.0 + s / r,
                coefficient: coefficient * r,
            },
            (Warp::Power { exponent, coefficient }, Phi::Log) => {
                if *exponent == 1.0 {
                    Warp::Constant { value: *coefficient }
                } else {
                    Warp::Exponential { rate: exponent - 1.0, coefficient: *coefficient }
                }
            }
            (Warp::Constant { value }, Phi::Linear { scale, .. }) => Warp::Constant { value: value * scale },
            _ => Warp::Reparam { base, phi },
        }
    }
}

/// Riemannian fiber `(S, h)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Fiber {
    Euclidean { dim: usize },
    /// Round `Sⁿ` of the given radius, in unit-embedding coordinates of `R^{n+1}`.
    Sphere { dim: usize, radius: f64 },
}

impl Fiber {
    /// Number of chart coordinates.
    pub fn chart_dim(&self) -> usize {
        match self {
            Fiber::Euclidean { dim } => *dim,
            Fiber::Sphere { dim, .. } => dim + 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Fiber::Sphere { radius, dim } if !(*radius > 0.0) || *dim == 0 => Err(Error::InvalidConfig(
                "sphere fiber needs positive radius and dimension".into(),
            )),
            _ => Ok(()),
        }
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.chart_dim() {
            return Err(Error::Dimension { expected: self.chart_dim(), got: x.len() });
        }
        if let Fiber::Sphere { .. } = self {
            let n = norm(x);
            if (n - 1.0).abs() > 1e-9 {
                return Err(Error::Domain(format!("sphere chart point has norm {n}, expected 1")));
            }
        }
        Ok(())
    }

    /// Projects chart input onto the fiber (normalizes sphere points).
    pub fn normalize(&self, x: &mut [f64]) -> Result<()> {
        if let Fiber::Sphere { .. } = self {
            let n = norm(x);
            if !(n > 0.0) {
                return Err(Error::Domain("zero vector is not a sphere point".into()));
            }
            x.iter_mut().for_each(|c| *c /= n);
        }
        Ok(())
    }

    /// `h(u, v)` for tangent vectors at a common point.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        let d = dot(u, v);
        match self {
            Fiber::Euclidean { .. } => d,
            Fiber::Sphere { radius, .. } => radius * radius * d,
        }
    }

    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Fiber::Euclidean { .. } => norm(&sub(y, x)),
            Fiber::Sphere { radius, .. } => {
                let diff = norm(&sub(y, x));
                let sum = norm(&add(y, x));
                radius * 2.0 * diff.atan2(sum)
            }
        }
    }

    /// Minimizing geodesic from `x` to `y`, unit speed for `h`.
    pub fn geodesic(&self, x: &[f64], y: &[f64]) -> FiberGeodesic {
        let length = self.distance(x, y);
        let dir = match self {
            Fiber::Euclidean { .. } => {
                if length > 0.0 {
                    sub(y, x).into_iter().map(|c| c / length).collect()
                } else {
                    vec![0.0; x.len()]
                }
            }
            Fiber::Sphere { .. } => {
                // Component of y orthogonal to x, or any orthogonal direction
                // when y = ±x.
                let c = dot(x, y);
                let mut w: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - c * b).collect();
                let mut n = norm(&w);
                if n < 1e-12 && length > 0.0 {
                    let k = (0..x.len())
                        .min_by(|&i, &j| x[i].abs().total_cmp(&x[j].abs()))
                        .unwrap_or(0);
                    w = vec![0.0; x.len()];
                    w[k] = 1.0;
                    let c = dot(x, &w);
                    w.iter_mut().zip(x).for_each(|(a, b)| *a -= c * b);
                    n = norm(&w);
                }
                if n > 0.0 {
                    w.into_iter().map(|c| c / n).collect()
                } else {
                    vec![0.0; x.len()]
                }
            }
        };
        FiberGeodesic { fiber: *self, start: x.to_vec(), dir, length }
    }

    /// Removes the normal component of an ambient vector (sphere fibers).
    pub fn project_tangent(&self, x: &[f64], v: &mut [f64]) {
        if let Fiber::Sphere { .. } = self {
            let c = dot(x, v);
            v.iter_mut().zip(x).for_each(|(a, b)| *a -= c * b);
        }
    }

    /// Inverse metric applied to a covector given in chart/ambient components.
    pub fn raise(&self, x: &[f64], covector: &[f64]) -> Vec<f64> {
        let mut v = covector.to_vec();
        self.project_tangent(x, &mut v);
        if let Fiber::Sphere { radius, .. } = self {
            v.iter_mut().for_each(|c| *c /= radius * radius);
        }
        v
    }
}

/// Unit-speed geodesic in a fiber.
#[derive(Clone, Debug, PartialEq)]
pub struct FiberGeodesic {
    fiber: Fiber,
    start: Vec<f64>,
    dir: Vec<f64>,
    pub length: f64,
}

impl FiberGeodesic {
    pub fn point_at(&self, s: f64) -> Vec<f64> {
        match self.fiber {
            Fiber::Euclidean { .. } => self.start.iter().zip(&self.dir).map(|(a, d)| a + s * d).collect(),
            Fiber::Sphere { radius, .. } => {
                let (sn, cs) = (s / radius).sin_cos();
                self.start.iter().zip(&self.dir).map(|(a, d)| cs * a + sn * d).collect()
            }
        }
    }

    /// Unit velocity at arclength `s`.
    pub fn velocity_at(&self, s: f64) -> Vec<f64> {
        match self.fiber {
            Fiber::Euclidean { .. } => self.dir.clone(),
            Fiber::Sphere { radius, .. } => {
                let (sn, cs) = (s / radius).sin_cos();
                self.start
                    .iter()
                    .zip(&self.dir)
                    .map(|(a, d)| (-sn * a + cs * d) / radius)
                    .collect()
            }
        }
    }
}

/// Conformal factor `Ω(t, x) > 0`; the wrapped metric is `Ω² g`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ConformalFactor {
    Constant { value: f64 },
    /// `e^(rate · t)`.
    Exponential { rate: f64 },
    /// `1 + amplitude · exp(-(t² + |x|²) / width²)`, positive for amplitude > -1.
    Bump { amplitude: f64, width: f64 },
}

impl ConformalFactor {
    pub fn eval(&self, p: &SpacetimePoint) -> f64 {
        match self {
            ConformalFactor::Constant { value } => *value,
            ConformalFactor::Exponential { rate } => (rate * p.t).exp(),
            ConformalFactor::Bump { amplitude, width } => {
                let r2 = p.t * p.t + dot(&p.x, &p.x);
                1.0 + amplitude * (-r2 / (width * width)).exp()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            ConformalFactor::Constant { value } => *value > 0.0,
            ConformalFactor::Exponential { rate } => rate.is_finite(),
            ConformalFactor::Bump { amplitude, width } => *amplitude > -1.0 && *width > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("conformal factor {self:?} is not positive")))
        }
    }
}

/// A supported spacetime.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpacetimeModel {
    /// `R × Rⁿ` with `-dt² + |dx|²`.
    Minkowski { dim: usize },
    Grw {
        interval: Interval,
        warp: Warp,
        fiber: Fiber,
    },
    Conformal {
        base: Box<SpacetimeModel>,
        omega: ConformalFactor,
    },
    /// The union of chronological futures `⋃ I⁺(vᵢ)` inside `base`.
    #[serde(rename = "cone")]
    ConeRestriction {
        base: Box<SpacetimeModel>,
        vertices: Vec<SpacetimePoint>,
    },
}

/// The warped-product data underlying a model.
#[derive(Clone, Copy, Debug)]
pub struct ProductView<'a> {
    pub interval: Interval,
    pub warp: &'a Warp,
    pub fiber: Fiber,
}

impl<'a> ProductView<'a> {
    pub fn conformal_time(&self, t: f64) -> Result<f64> {
        self.warp.conformal_time(t)
    }

    pub fn conformal_time_inverse(&self, u: f64) -> Result<f64> {
        self.warp.conformal_time_inverse(u, &self.interval)
    }

    pub fn conformal_range(&self) -> Result<(f64, f64)> {
        self.warp.conformal_range(&self.interval)
    }

    /// Conformal-time difference `∫_{t_p}^{t_q} dt/f`.
    pub fn cone_integral(&self, tp: f64, tq: f64) -> Result<f64> {
        self.warp.integral_reciprocal(tp, tq)
    }

    pub fn is_flat(&self) -> bool {
        self.warp.is_constant() == Some(1.0)
            && matches!(self.fiber, Fiber::Euclidean { .. })
            && self.interval == Interval::REAL_LINE
    }
}

impl SpacetimeModel {
    pub fn minkowski(dim: usize) -> Self {
        SpacetimeModel::Minkowski { dim }
    }

    pub fn grw(interval: Interval, warp: Warp, fiber: Fiber) -> Result<Self> {
        let m = SpacetimeModel::Grw { interval, warp, fiber };
        m.validate()?;
        Ok(m)
    }

    pub fn conformal(base: SpacetimeModel, omega: ConformalFactor) -> Result<Self> {
        let m = SpacetimeModel::Conformal { base: Box::new(base), omega };
        m.validate()?;
        Ok(m)
    }

    pub fn cone(base: SpacetimeModel, vertices: Vec<SpacetimePoint>) -> Result<Self> {
        let m = SpacetimeModel::ConeRestriction { base: Box::new(base), vertices };
        m.validate()?;
        Ok(m)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: SpacetimeModel =
            serde_json::from_str(s).map_err(|e| Error::InvalidConfig(format!("model JSON: {e}")))?;
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SpacetimeModel::Minkowski { .. } => Ok(()),
            SpacetimeModel::Grw { interval, warp, fiber } => {
                fiber.validate()?;
                warp.validate(interval)
            }
            SpacetimeModel::Conformal { base, omega } => {
                base.validate()?;
                omega.validate()
            }
            SpacetimeModel::ConeRestriction { base, vertices } => {
                base.validate()?;
                if vertices.is_empty() {
                    return Err(Error::InvalidConfig("cone restriction needs a vertex".into()));
                }
                if matches!(**base, SpacetimeModel::ConeRestriction { .. }) {
                    return Err(Error::InvalidConfig("nested cone restrictions".into()));
                }
                for v in vertices {
                    base.check_point(v)?;
                }
                Ok(())
            }
        }
    }

    pub fn product(&self) -> ProductView<'_> {
        match self {
            SpacetimeModel::Minkowski { dim } => ProductView {
                interval: Interval::REAL_LINE,
                warp: &Warp::UNIT,
                fiber: Fiber::Euclidean { dim: *dim },
            },
            SpacetimeModel::Grw { interval, warp, fiber } => {
                ProductView { interval: *interval, warp, fiber: *fiber }
            }
            SpacetimeModel::Conformal { base, .. } | SpacetimeModel::ConeRestriction { base, .. } => {
                base.product()
            }
        }
    }

    pub fn fiber(&self) -> Fiber {
        self.product().fiber
    }

    /// Underlying model once conformal wrappers are stripped.
    pub fn conformal_base(&self) -> &SpacetimeModel {
        match self {
            SpacetimeModel::Conformal { base, .. } => base.conformal_base(),
            _ => self,
        }
    }

    /// Vertices of the outermost cone restriction, if any (through conformal wrappers).
    pub fn cone_vertices(&self) -> Option<&[SpacetimePoint]> {
        match self.conformal_base() {
            SpacetimeModel::ConeRestriction { vertices, .. } => Some(vertices),
            _ => None,
        }
    }

    /// Flat Minkowski underneath (possibly through a cone restriction).
    pub fn is_flat(&self) -> bool {
        match self {
            SpacetimeModel::Conformal { .. } => false,
            _ => self.product().is_flat(),
        }
    }

    /// Builds a point, normalizing sphere chart input.
    pub fn point(&self, t: f64, x: impl Into<Vec<f64>>) -> Result<SpacetimePoint> {
        let mut x = x.into();
        self.fiber().normalize(&mut x)?;
        let p = SpacetimePoint { t, x };
        self.check_point(&p)?;
        Ok(p)
    }

    pub fn check_point(&self, p: &SpacetimePoint) -> Result<()> {
        if !p.t.is_finite() || p.x.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain(format!("non-finite point {p}")));
        }
        match self {
            SpacetimeModel::ConeRestriction { base, vertices } => {
                base.check_point(p)?;
                for v in vertices {
                    if base.causal_relation(v, p)? == CausalRelation::ChronologicalFuture {
                        return Ok(());
                    }
                }
                Err(Error::Domain(format!("{p} is outside the chronological future of every vertex")))
            }
            SpacetimeModel::Conformal { base, .. } => base.check_point(p),
            _ => {
                let prod = self.product();
                if !prod.interval.contains(p.t) {
                    return Err(Error::Domain(format!(
                        "t = {} outside ({}, {})",
                        p.t, prod.interval.lo, prod.interval.hi
                    )));
                }
                prod.fiber.check_point(&p.x)
            }
        }
    }

    pub fn contains(&self, p: &SpacetimePoint) -> bool {
        self.check_point(p).is_ok()
    }

    /// Product of squared conformal factors at `p`.
    pub fn conformal_factor_sq(&self, p: &SpacetimePoint) -> f64 {
        match self {
            SpacetimeModel::Conformal { base, omega } => {
                let w = omega.eval(p);
                w * w * base.conformal_factor_sq(p)
            }
            SpacetimeModel::ConeRestriction { base, .. } => base.conformal_factor_sq(p),
            _ => 1.0,
        }
    }

    fn check_tangent(&self, v: &TangentVector) -> Result<()> {
        let n = self.fiber().chart_dim();
        if v.dx.len() != n {
            return Err(Error::Dimension { expected: n, got: v.dx.len() });
        }
        self.check_point(&v.base)
    }

    /// `g(v, w)`.
    pub fn metric_eval(&self, v: &TangentVector, w: &TangentVector) -> Result<f64> {
        if v.base != w.base {
            return Err(Error::BaseMismatch);
        }
        self.check_tangent(v)?;
        self.check_tangent(w)?;
        Ok(self.metric_unchecked(&v.base, v.dt, &v.dx, w.dt, &w.dx))
    }

    /// `g` at `p` without domain checks; the hot path for curve validation.
    pub fn metric_unchecked(&self, p: &SpacetimePoint, dt1: f64, dx1: &[f64], dt2: f64, dx2: &[f64]) -> f64 {
        let prod = self.product();
        let f = prod.warp.eval(p.t);
        let g = -dt1 * dt2 + f * f * prod.fiber.inner(dx1, dx2);
        g * self.conformal_factor_sq(p)
    }

    /// Auxiliary Riemannian norm² `dt² + f² h` (no conformal factor).
    pub fn aux_norm_sq(&self, p: &SpacetimePoint, dt: f64, dx: &[f64]) -> f64 {
        let prod = self.product();
        let f = prod.warp.eval(p.t);
        dt * dt + f * f * prod.fiber.inner(dx, dx)
    }

    pub fn classify_vector(&self, v: &TangentVector) -> Result<CausalClass> {
        self.check_tangent(v)?;
        if v.is_zero() {
            return Ok(CausalClass::Zero);
        }
        let g = self.metric_unchecked(&v.base, v.dt, &v.dx, v.dt, &v.dx);
        Ok(if g > 0.0 {
            CausalClass::Spacelike
        } else if g < 0.0 {
            if v.dt > 0.0 {
                CausalClass::FutureTimelike
            } else {
                CausalClass::PastTimelike
            }
        } else if v.dt > 0.0 {
            CausalClass::FutureNull
        } else {
            CausalClass::PastNull
        })
    }

    pub fn fiber_distance(&self, x: &[f64], y: &[f64]) -> f64 {
        self.fiber().distance(x, y)
    }

    /// Signed cone gap `d_h(p_S, q_S) - |∫_{t_p}^{t_q} dt/f|` and the integral itself.
    pub fn cone_gap(&self, p: &SpacetimePoint, q: &SpacetimePoint) -> Result<(f64, f64)> {
        let prod = self.product();
        let d = prod.fiber.distance(&p.x, &q.x);
        let du = if self.is_flat() { q.t - p.t } else { prod.cone_integral(p.t, q.t)? };
        Ok((d - du.abs(), du))
    }

    pub fn causal_relation(&self, p: &SpacetimePoint, q: &SpacetimePoint) -> Result<CausalRelation> {
        self.check_point(p)?;
        self.check_point(q)?;
        if p == q {
            return Ok(CausalRelation::Identical);
        }
        let (gap, du) = self.conformal_base_product_gap(p, q)?;
        Ok(classify_gap(gap, du))
    }

    fn conformal_base_product_gap(&self, p: &SpacetimePoint, q: &SpacetimePoint) -> Result<(f64, f64)> {
        // Causal structure is conformally invariant, and a union of timelike
        // futures is a future set, so every wrapper defers to the product.
        match self {
            SpacetimeModel::Conformal { base, .. } | SpacetimeModel::ConeRestriction { base, .. } => {
                base.conformal_base_product_gap(p, q)
            }
            _ => self.cone_gap(p, q),
        }
    }

    /// Lorentzian distance on flat models (Minkowski, cone restrictions of it).
    pub fn lorentz_distance(&self, p: &SpacetimePoint, q: &SpacetimePoint) -> Result<f64> {
        if !self.is_flat() {
            return Err(Error::Unsupported(
                "Lorentzian distance is only closed-form on Minkowski and its cone restrictions".into(),
            ));
        }
        let rel = self.causal_relation(p, q)?;
        if !rel.is_causal_future() {
            return Ok(0.0);
        }
        let dt = q.t - p.t;
        let d = norm(&sub(&q.x, &p.x));
        Ok((dt * dt - d * d).max(0.0).sqrt())
    }
}

fn classify_gap(gap: f64, du: f64) -> CausalRelation {
    if du == 0.0 {
        return CausalRelation::Unrelated;
    }
    let future = du > 0.0;
    if gap < -CONE_TOLERANCE {
        if future {
            CausalRelation::ChronologicalFuture
        } else {
            CausalRelation::ChronologicalPast
        }
    } else if gap <= CONE_TOLERANCE {
        if future {
            CausalRelation::CausalFutureOnly
        } else {
            CausalRelation::CausalPastOnly
        }
    } else {
        CausalRelation::Unrelated
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub(crate) fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, PI};

    fn p(t: f64, x: &[f64]) -> SpacetimePoint {
        SpacetimePoint::new(t, x.to_vec())
    }

    fn grw_t() -> SpacetimeModel {
        SpacetimeModel::grw(
            Interval::new(0.0, f64::INFINITY).unwrap(),
            Warp::Power { exponent: 1.0, coefficient: 1.0 },
            Fiber::Euclidean { dim: 2 },
        )
        .unwrap()
    }

    #[test]
    fn metric_examples() {
        let m = SpacetimeModel::minkowski(2);
        let v = TangentVector::new(p(0.0, &[0.0, 0.0]), 1.0, vec![1.0, 0.0]);
        assert_eq!(m.metric_eval(&v, &v).unwrap(), 0.0);

        let g = grw_t();
        let v = TangentVector::new(p(2.0, &[0.0, 0.0]), 0.0, vec![1.0, 0.0]);
        assert_eq!(g.metric_eval(&v, &v).unwrap(), 4.0);

        let c = SpacetimeModel::conformal(m, ConformalFactor::Constant { value: 2.0 }).unwrap();
        let v = TangentVector::new(p(0.0, &[0.0, 0.0]), 1.0, vec![0.0, 0.0]);
        assert_eq!(c.metric_eval(&v, &v).unwrap(), -4.0);
    }

    #[test]
    fn metric_rejects_mismatched_bases_and_domain() {
        let g = grw_t();
        let v = TangentVector::new(p(2.0, &[0.0, 0.0]), 1.0, vec![0.0, 0.0]);
        let w = TangentVector::new(p(3.0, &[0.0, 0.0]), 1.0, vec![0.0, 0.0]);
        assert_eq!(g.metric_eval(&v, &w), Err(Error::BaseMismatch));
        let out = TangentVector::new(p(-1.0, &[0.0, 0.0]), 1.0, vec![0.0, 0.0]);
        assert!(matches!(g.metric_eval(&out, &out), Err(Error::Domain(_))));
    }

    #[test]
    fn classification_examples() {
        let m = SpacetimeModel::minkowski(2);
        let o = p(0.0, &[0.0, 0.0]);
        let c = |dt: f64, dx: [f64; 2]| m.classify_vector(&TangentVector::new(o.clone(), dt, dx.to_vec())).unwrap();
        assert_eq!(c(1.0, [0.5, 0.0]), CausalClass::FutureTimelike);
        assert_eq!(c(-1.0, [1.0, 0.0]), CausalClass::PastNull);
        assert_eq!(c(0.0, [0.0, 0.0]), CausalClass::Zero);
        let g = grw_t();
        let v = TangentVector::new(p(2.0, &[0.0, 0.0]), 1.0, vec![1.0, 0.0]);
        assert_eq!(g.metric_eval(&v, &v).unwrap(), 3.0);
        assert_eq!(g.classify_vector(&v).unwrap(), CausalClass::Spacelike);
    }

    #[test]
    fn causal_relation_examples() {
        let m = SpacetimeModel::minkowski(2);
        let o = p(0.0, &[0.0, 0.0]);
        assert_eq!(m.causal_relation(&o, &p(2.0, &[1.0, 0.0])).unwrap(), CausalRelation::ChronologicalFuture);
        assert_eq!(m.causal_relation(&o, &p(1.0, &[1.0, 0.0])).unwrap(), CausalRelation::CausalFutureOnly);
        assert_eq!(m.causal_relation(&p(1.0, &[1.0, 0.0]), &o).unwrap(), CausalRelation::CausalPastOnly);
        assert_eq!(m.causal_relation(&o, &p(0.0, &[1.0, 0.0])).unwrap(), CausalRelation::Unrelated);
        assert_eq!(m.causal_relation(&o, &o).unwrap(), CausalRelation::Identical);

        let g = grw_t();
        let rel = g.causal_relation(&p(1.0, &[0.0, 0.0]), &p(E, &[0.5, 0.0])).unwrap();
        assert_eq!(rel, CausalRelation::ChronologicalFuture);
        let rel = g.causal_relation(&p(1.0, &[0.0, 0.0]), &p(E, &[1.5, 0.0])).unwrap();
        assert_eq!(rel, CausalRelation::Unrelated);
    }

    #[test]
    fn conformal_time_matches_quadrature() {
        let interval = Interval::new(0.0, f64::INFINITY).unwrap();
        let warps = [
            Warp::Power { exponent: 1.0, coefficient: 1.0 },
            Warp::Power { exponent: 2.5, coefficient: 0.7 },
            Warp::Exponential { rate: 1.0, coefficient: 1.0 },
            Warp::Exponential { rate: -0.4, coefficient: 2.0 },
            Warp::Constant { value: 3.0 },
        ];
        for w in warps {
            for (a, b) in [(0.5, 2.0), (1.0, E), (3.0, 1.2)] {
                let closed = w.integral_reciprocal(a, b).unwrap();
                let quad = numeric::integrate(|t| 1.0 / w.eval(t), a, b, 1e-13, 0.0).unwrap();
                assert!((closed - quad).abs() < 1e-11 * quad.abs().max(1.0), "{w:?} on [{a},{b}]");
                let u = w.conformal_time(b).unwrap();
                let back = w.conformal_time_inverse(u, &interval).unwrap();
                assert!((back - b).abs() < 1e-12 * b.max(1.0));
            }
        }
    }

    #[test]
    fn tabulated_warp_integral_and_inverse() {
        let ts: Vec<f64> = (0..=40).map(|i| 0.1 + i as f64 * 0.1).collect();
        let fs: Vec<f64> = ts.iter().map(|t| t * t + 1.0).collect();
        let w = Warp::Tabulated { ts, fs };
        let interval = Interval::new(0.1, 4.1).unwrap();
        w.validate(&interval).unwrap();
        // arctan is the exact antiderivative of 1/(t²+1); the table only
        // approximates the integrand, so compare loosely.
        let v = w.integral_reciprocal(0.5, 3.0).unwrap();
        assert!((v - (3f64.atan() - 0.5f64.atan())).abs() < 1e-3);
        let u = w.conformal_time(2.0).unwrap();
        let t = w.conformal_time_inverse(u, &interval).unwrap();
        assert!((t - 2.0).abs() < 1e-10);
    }

    #[test]
    fn fiber_distances() {
        let e = Fiber::Euclidean { dim: 2 };
        assert_eq!(e.distance(&[0.0, 0.0], &[3.0, 4.0]), 5.0);
        let s1 = Fiber::Sphere { dim: 2, radius: 1.0 };
        assert!((s1.distance(&[0.0, 0.0, 1.0], &[0.0, 0.0, -1.0]) - PI).abs() < 1e-15);
        let s2 = Fiber::Sphere { dim: 2, radius: 2.0 };
        assert!((s2.distance(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]) - PI).abs() < 1e-15);
    }

    #[test]
    fn sphere_geodesic_is_unit_speed_and_hits_target() {
        let s = Fiber::Sphere { dim: 2, radius: 2.0 };
        let x = [1.0, 0.0, 0.0];
        let y = [0.0, 0.6, 0.8];
        let g = s.geodesic(&x, &y);
        let end = g.point_at(g.length);
        assert!(norm(&sub(&end, &y)) < 1e-14);
        let v = g.velocity_at(0.3);
        assert!((s.inner(&v, &v) - 1.0).abs() < 1e-14);
        // Antipodal points still get a geodesic.
        let g = s.geodesic(&x, &[-1.0, 0.0, 0.0]);
        assert!(norm(&sub(&g.point_at(g.length), &[-1.0, 0.0, 0.0])) < 1e-12);
    }

    #[test]
    fn sphere_points_are_normalized_on_input() {
        let m = SpacetimeModel::grw(
            Interval::REAL_LINE,
            Warp::UNIT,
            Fiber::Sphere { dim: 2, radius: 1.0 },
        )
        .unwrap();
        let q = m.point(0.0, vec![0.0, 3.0, 4.0]).unwrap();
        assert!((norm(&q.x) - 1.0).abs() < 1e-15);
        assert!(m.check_point(&p(0.0, &[0.0, 3.0, 4.0])).is_err());
    }

    #[test]
    fn lorentz_distance_examples() {
        let m = SpacetimeModel::minkowski(2);
        let o = p(0.0, &[0.0, 0.0]);
        assert!((m.lorentz_distance(&o, &p(2.0, &[1.0, 0.0])).unwrap() - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(m.lorentz_distance(&o, &p(0.0, &[1.0, 0.0])).unwrap(), 0.0);
        assert_eq!(m.lorentz_distance(&o, &o).unwrap(), 0.0);
        assert!(grw_t().lorentz_distance(&p(1.0, &[0.0, 0.0]), &p(2.0, &[0.0, 0.0])).is_err());
    }

    #[test]
    fn cone_membership() {
        let m = SpacetimeModel::cone(SpacetimeModel::minkowski(1), vec![p(0.0, &[0.0])]).unwrap();
        assert!(m.contains(&p(1.0, &[0.5])));
        assert!(!m.contains(&p(1.0, &[1.0])));
        assert!(!m.contains(&p(-1.0, &[0.0])));
    }

    #[test]
    fn minkowski_and_unit_grw_agree() {
        let m = SpacetimeModel::minkowski(2);
        let g = SpacetimeModel::grw(Interval::REAL_LINE, Warp::UNIT, Fiber::Euclidean { dim: 2 }).unwrap();
        let a = p(0.3, &[0.1, -0.2]);
        let b = p(1.7, &[0.9, 0.4]);
        assert_eq!(m.causal_relation(&a, &b).unwrap(), g.causal_relation(&a, &b).unwrap());
        let (g1, d1) = m.cone_gap(&a, &b).unwrap();
        let (g2, d2) = g.cone_gap(&a, &b).unwrap();
        assert!((g1 - g2).abs() < 1e-14 && (d1 - d2).abs() < 1e-14);
    }

    #[test]
    fn model_json_round_trip() {
        let json = r#"{"kind":"grw","interval":[0.0,null],"warp":{"family":"power","exponent":1.0},"fiber":{"kind":"euclidean","dim":2}}"#;
        let m = SpacetimeModel::from_json(json).unwrap();
        assert_eq!(m, grw_t());
        let back = SpacetimeModel::from_json(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
        let cone = r#"{"kind":"cone","base":{"kind":"minkowski","dim":1},"vertices":[[0.0,-1.0],[0.0,1.0]]}"#;
        let c = SpacetimeModel::from_json(cone).unwrap();
        assert_eq!(c.cone_vertices().unwrap().len(), 2);
        let bad = r#"{"kind":"grw","interval":[-1.0,1.0],"warp":{"family":"power","exponent":1.0},"fiber":{"kind":"euclidean","dim":1}}"#;
        assert!(SpacetimeModel::from_json(bad).is_err());
    }
}
