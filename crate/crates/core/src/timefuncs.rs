//! Generalized time functions and their metric gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cosmo;
use crate::error::{Error, Result};
use crate::models::{Fiber, Interval, SpacetimeModel, SpacetimePoint, TangentVector};
use crate::numeric;

pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Strictly increasing scalar map `φ` applied to the time coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Phi {
    Identity,
    /// `t^exponent`; odd integer exponents are defined on all of `R`,
    /// other exponents only for `t > 0`.
    Power { exponent: f64 },
    /// `e^(rate · t)`.
    Exponential { rate: f64 },
    Log,
    /// `scale · t + shift`.
    Linear { scale: f64, shift: f64 },
}

impl Phi {
    pub(crate) fn odd_integer(exponent: f64) -> bool {
        exponent.fract() == 0.0 && (exponent as i64).rem_euclid(2) == 1
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Phi::Identity => t,
            Phi::Power { exponent } => {
                if Self::odd_integer(*exponent) {
                    t.signum() * t.abs().powf(*exponent)
                } else {
                    t.powf(*exponent)
                }
            }
            Phi::Exponential { rate } => (rate * t).exp(),
            Phi::Log => t.ln(),
            Phi::Linear { scale, shift } => scale * t + shift,
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            Phi::Identity => 1.0,
            Phi::Power { exponent } => exponent * t.abs().powf(exponent - 1.0),
            Phi::Exponential { rate } => rate * (rate * t).exp(),
            Phi::Log => 1.0 / t,
            Phi::Linear { scale, .. } => *scale,
        }
    }

    pub fn inverse(&self, tau: f64) -> Result<f64> {
        let t = match self {
            Phi::Identity => tau,
            Phi::Power { exponent } => {
                if Self::odd_integer(*exponent) {
                    tau.signum() * tau.abs().powf(1.0 / exponent)
                } else if tau >= 0.0 {
                    tau.powf(1.0 / exponent)
                } else {
                    f64::NAN
                }
            }
            Phi::Exponential { rate } => tau.ln() / rate,
            Phi::Log => tau.exp(),
            Phi::Linear { scale, shift } => (tau - shift) / scale,
        };
        if t.is_finite() {
            Ok(t)
        } else {
            Err(Error::Domain(format!("{tau} is not in the range of {self:?}")))
        }
    }

    /// Whether `t` lies in the natural domain of `φ`.
    pub fn defined_at(&self, t: f64) -> bool {
        match self {
            Phi::Power { exponent } if !Self::odd_integer(*exponent) => t > 0.0,
            Phi::Log => t > 0.0,
            _ => true,
        }
    }

    /// `φ(I)`.
    pub fn image(&self, interval: &Interval) -> Result<Interval> {
        let lo = if interval.lo == f64::NEG_INFINITY { self.limit_neg() } else { self.eval(interval.lo) };
        let hi = if interval.hi == f64::INFINITY { f64::INFINITY } else { self.eval(interval.hi) };
        Interval::new(lo, hi)
    }

    fn limit_neg(&self) -> f64 {
        match self {
            Phi::Exponential { .. } => 0.0,
            _ => f64::NEG_INFINITY,
        }
    }

    /// `φ⁻¹(J)` for a τ-interval `J` inside the image.
    pub fn preimage(&self, interval: &Interval) -> Result<Interval> {
        let end = |v: f64| -> Result<f64> {
            if v.is_infinite() {
                return Ok(v);
            }
            match self {
                Phi::Exponential { .. } if v == 0.0 => Ok(f64::NEG_INFINITY),
                Phi::Power { .. } if v == 0.0 => Ok(0.0),
                _ => self.inverse(v),
            }
        };
        Interval::new(end(interval.lo)?, end(interval.hi)?)
    }

    /// Sampled check that `φ` is defined and `φ' > 0` on `I`.
    pub fn validate_on(&self, interval: &Interval) -> Result<()> {
        if let Phi::Exponential { rate } | Phi::Linear { scale: rate, .. } = self {
            if !(*rate > 0.0) {
                return Err(Error::InvalidTimeFunction(format!("{self:?} is not increasing")));
            }
        }
        if let Phi::Power { exponent } = self {
            if !(*exponent > 0.0) {
                return Err(Error::InvalidTimeFunction(format!("{self:?} is not increasing")));
            }
        }
        for t in interval.samples(257) {
            if !self.defined_at(t) {
                return Err(Error::InvalidTimeFunction(format!("{self:?} undefined at t = {t}")));
            }
            let d = self.derivative(t);
            let exempt_zero = matches!(self, Phi::Power { exponent } if Self::odd_integer(*exponent) && *exponent > 1.0 && t == 0.0);
            if !(d > 0.0 || exempt_zero) {
                return Err(Error::InvalidTimeFunction(format!("φ'({t}) = {d} is not positive")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeKind {
    CoordinateT,
    Composed { phi: Phi },
    /// `t³`, whose gradient vanishes on `t = 0`.
    TCubed,
    Affine { base: Box<TimeFunction>, scale: f64, shift: f64 },
    /// Cosmological time of the (cone-type) model it is evaluated on.
    Cosmological,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum GradientMode {
    #[default]
    Analytic,
    FiniteDifference { step: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeFunction {
    #[serde(flatten)]
    pub kind: TimeKind,
    #[serde(default, skip_serializing_if = "is_analytic")]
    pub gradient: GradientMode,
}

fn is_analytic(m: &GradientMode) -> bool {
    *m == GradientMode::Analytic
}

impl TimeFunction {
    pub fn coordinate_t() -> Self {
        Self { kind: TimeKind::CoordinateT, gradient: GradientMode::Analytic }
    }

    pub fn t_cubed() -> Self {
        Self { kind: TimeKind::TCubed, gradient: GradientMode::Analytic }
    }

    pub fn cosmological() -> Self {
        Self { kind: TimeKind::Cosmological, gradient: GradientMode::Analytic }
    }

    /// `φ(t)`; rejects decreasing `φ`.
    pub fn composed(phi: Phi) -> Result<Self> {
        let tf = Self { kind: TimeKind::Composed { phi }, gradient: GradientMode::Analytic };
        tf.validate_shape()?;
        Ok(tf)
    }

    /// `scale · base + shift` with `scale > 0`.
    pub fn affine(base: TimeFunction, scale: f64, shift: f64) -> Result<Self> {
        let tf = Self { kind: TimeKind::Affine { base: Box::new(base), scale, shift }, gradient: GradientMode::Analytic };
        tf.validate_shape()?;
        Ok(tf)
    }

    pub fn with_gradient(mut self, mode: GradientMode) -> Self {
        self.gradient = mode;
        self
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let tf: TimeFunction =
            serde_json::from_str(s).map_err(|e| Error::InvalidConfig(format!("time function JSON: {e}")))?;
        tf.validate_shape()?;
        Ok(tf)
    }

    /// Model-independent checks.
    pub fn validate_shape(&self) -> Result<()> {
        match &self.kind {
            TimeKind::Composed { phi } => match phi {
                Phi::Exponential { rate } | Phi::Linear { scale: rate, .. } if !(*rate > 0.0) => {
                    Err(Error::InvalidTimeFunction(format!("{phi:?} has φ' ≤ 0")))
                }
                Phi::Power { exponent } if !(*exponent > 0.0) => {
                    Err(Error::InvalidTimeFunction(format!("{phi:?} has φ' ≤ 0")))
                }
                _ => Ok(()),
            },
            TimeKind::Affine { base, scale, .. } => {
                if !(*scale > 0.0) || !scale.is_finite() {
                    return Err(Error::InvalidTimeFunction(format!("affine scale {scale} must be positive")));
                }
                base.validate_shape()
            }
            _ => Ok(()),
        }
    }

    /// Checks compatibility with a model.
    pub fn validate_for(&self, model: &SpacetimeModel) -> Result<()> {
        self.validate_shape()?;
        match &self.kind {
            TimeKind::Composed { phi } => phi.validate_on(&model.product().interval),
            TimeKind::Affine { base, .. } => base.validate_for(model),
            TimeKind::Cosmological => cosmo::check_supported(model),
            _ => Ok(()),
        }
    }

    /// `τ(t)` when the function depends on `t` only.
    pub fn as_phi(&self) -> Option<Phi> {
        match &self.kind {
            TimeKind::CoordinateT => Some(Phi::Identity),
            TimeKind::Composed { phi } => Some(phi.clone()),
            TimeKind::TCubed => Some(Phi::Power { exponent: 3.0 }),
            TimeKind::Affine { base, scale, shift } => match base.as_phi()? {
                Phi::Identity => Some(Phi::Linear { scale: *scale, shift: *shift }),
                Phi::Linear { scale: a, shift: b } => Some(Phi::Linear { scale: scale * a, shift: scale * b + shift }),
                _ => None,
            },
            TimeKind::Cosmological => None,
        }
    }

    pub fn evaluate(&self, model: &SpacetimeModel, p: &SpacetimePoint) -> Result<f64> {
        model.check_point(p)?;
        self.eval_unchecked(model, p)
    }

    /// Evaluation without the domain check; hot path for curve scans.
    pub fn eval_unchecked(&self, model: &SpacetimeModel, p: &SpacetimePoint) -> Result<f64> {
        match &self.kind {
            TimeKind::CoordinateT => Ok(p.t),
            TimeKind::Composed { phi } => Ok(phi.eval(p.t)),
            TimeKind::TCubed => Ok(p.t * p.t * p.t),
            TimeKind::Affine { base, scale, shift } => Ok(scale * base.eval_unchecked(model, p)? + shift),
            TimeKind::Cosmological => cosmo::cosmological_time(model, p),
        }
    }

    /// Partial derivatives `(∂_t τ, ∂_x τ)` in chart coordinates.
    pub fn partials(&self, model: &SpacetimeModel, p: &SpacetimePoint) -> Result<(f64, Vec<f64>)> {
        if let GradientMode::FiniteDifference { step } = self.gradient {
            return self.fd_partials(model, p, step);
        }
        let n = p.x.len();
        match &self.kind {
            TimeKind::CoordinateT => Ok((1.0, vec![0.0; n])),
            TimeKind::Composed { phi } => Ok((phi.derivative(p.t), vec![0.0; n])),
            TimeKind::TCubed => Ok((3.0 * p.t * p.t, vec![0.0; n])),
            TimeKind::Affine { base, scale, .. } => {
                let (dt, dx) = base.partials(model, p)?;
                Ok((scale * dt, dx.into_iter().map(|c| c * scale).collect()))
            }
            TimeKind::Cosmological => cosmo::cosmological_partials(model, p),
        }
    }

    fn fd_partials(&self, model: &SpacetimeModel, p: &SpacetimePoint, step: f64) -> Result<(f64, Vec<f64>)> {
        if !(step > 0.0) {
            return Err(Error::InvalidConfig(format!("finite-difference step {step} must be positive")));
        }
        let analytic = Self { kind: self.kind.clone(), gradient: GradientMode::Analytic };
        let f = |q: &SpacetimePoint| analytic.eval_unchecked(model, q);
        // Richardson-extrapolated central difference along coordinate `i`
        // (0 = time).
        let diff = |i: usize| -> Result<f64> {
            let central = |h: f64| -> Result<f64> {
                let mut a = p.clone();
                let mut b = p.clone();
                if i == 0 {
                    a.t += h;
                    b.t -= h;
                } else {
                    a.x[i - 1] += h;
                    b.x[i - 1] -= h;
                }
                Ok((f(&a)? - f(&b)?) / (2.0 * h))
            };
            let d1 = central(step)?;
            let d2 = central(step / 2.0)?;
            Ok((4.0 * d2 - d1) / 3.0)
        };
        let dt = diff(0)?;
        let dx = (1..=p.x.len()).map(diff).collect::<Result<Vec<_>>>()?;
        Ok((dt, dx))
    }

    /// Metric gradient `∇τ`; future-increasing functions have past-pointing gradients.
    pub fn gradient(&self, model: &SpacetimeModel, p: &SpacetimePoint) -> Result<TangentVector> {
        model.check_point(p)?;
        let (dt, dx) = self.partials(model, p)?;
        let prod = model.product();
        let f = prod.warp.eval(p.t);
        let w2 = model.conformal_factor_sq(p);
        let mut up = prod.fiber.raise(&p.x, &dx);
        up.iter_mut().for_each(|c| *c /= w2 * f * f);
        Ok(TangentVector::new(p.clone(), -dt / w2, up))
    }
}

/// A sampled curve on which `τ` failed to increase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityViolation {
    pub curve: Vec<SpacetimePoint>,
    pub index: usize,
    pub before: f64,
    pub after: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub trials: usize,
    pub knots_checked: usize,
    pub violations: Vec<MonotonicityViolation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Samples `trials` random future causal polygons and checks that `τ`
/// strictly increases from knot to knot (exact comparison).
pub fn validate_time_function(
    tf: &TimeFunction,
    model: &SpacetimeModel,
    trials: usize,
    seed: u64,
) -> Result<ValidationReport> {
    tf.validate_for(model)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ValidationReport { trials, knots_checked: 0, violations: Vec::new() };
    for _ in 0..trials {
        let curve = sample_future_causal_curve(model, &mut rng, 12)?;
        let values = curve
            .iter()
            .map(|q| tf.eval_unchecked(model, q))
            .collect::<Result<Vec<_>>>()?;
        report.knots_checked += values.len();
        if let Some(i) = (1..values.len()).find(|&i| !(values[i] > values[i - 1])) {
            report.violations.push(MonotonicityViolation {
                curve: curve.clone(),
                index: i,
                before: values[i - 1],
                after: values[i],
            });
        }
    }
    Ok(report)
}

/// A random point of the model (bounded sampling window around the origin,
/// or near a vertex for cone restrictions).
pub fn sample_point(model: &SpacetimeModel, rng: &mut ChaCha8Rng) -> Result<SpacetimePoint> {
    if let Some(vertices) = model.cone_vertices() {
        for _ in 0..1000 {
            let v = &vertices[rng.gen_range(0..vertices.len())];
            let s = rng.gen_range(0.05..2.0);
            let prod = model.product();
            let reach = prod.cone_integral(v.t, v.t + s).unwrap_or(0.0);
            let dir = random_unit(prod.fiber, &v.x, rng);
            let r = rng.gen_range(0.0..0.95) * reach;
            let x = step_fiber(prod.fiber, &v.x, &dir, r);
            let q = SpacetimePoint::new(v.t + s, x);
            if model.contains(&q) {
                return Ok(q);
            }
        }
        return Err(Error::InsufficientSamples("could not sample inside the cone restriction".into()));
    }
    let prod = model.product();
    let Interval { lo, hi } = prod.interval;
    let (a, b) = match (lo.is_finite(), hi.is_finite()) {
        (true, true) => (lo, hi),
        (true, false) => (lo, lo.max(0.0) + 5.0),
        (false, true) => (hi - 5.0, hi),
        (false, false) => (-3.0, 3.0),
    };
    let pad = 0.05 * (b - a);
    let t = rng.gen_range(a + pad..b - pad);
    let n = prod.fiber.chart_dim();
    let x = match prod.fiber {
        Fiber::Euclidean { .. } => (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect(),
        Fiber::Sphere { .. } => {
            let mut v: Vec<f64> = (0..n).map(|_| gaussian(rng)).collect();
            prod.fiber.normalize(&mut v)?;
            v
        }
    };
    let q = SpacetimePoint::new(t, x);
    model.check_point(&q)?;
    Ok(q)
}

/// Random future causal polygon whose every edge is causal for `g`
/// (spatial speed bounded by the smallest `1/f` on the edge).
pub fn sample_future_causal_curve(
    model: &SpacetimeModel,
    rng: &mut ChaCha8Rng,
    max_knots: usize,
) -> Result<Vec<SpacetimePoint>> {
    let prod = model.product();
    let mut p = sample_point(model, rng)?;
    let mut curve = vec![p.clone()];
    let knots = rng.gen_range(2..=max_knots.max(2));
    for _ in 1..knots {
        let room = prod.interval.hi - p.t;
        let dt = rng.gen_range(1e-3..0.3f64).min(0.5 * room);
        if !(dt > 0.0) {
            break;
        }
        let fmax = prod.warp.eval(p.t).max(prod.warp.eval(p.t + dt));
        // Null edges are sampled on purpose; they are the hardest case.
        let frac = if rng.gen_bool(0.25) { 1.0 } else { rng.gen_range(0.0..1.0) };
        let d = frac * dt / fmax * (1.0 - 1e-12);
        let dir = random_unit(prod.fiber, &p.x, rng);
        let x = step_fiber(prod.fiber, &p.x, &dir, d);
        let q = SpacetimePoint::new(p.t + dt, x);
        if !model.contains(&q) {
            break;
        }
        curve.push(q.clone());
        p = q;
    }
    Ok(curve)
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.gen_range(f64::EPSILON..1.0);
    let v: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
}

/// Random `h`-unit tangent direction at `x`.
pub(crate) fn random_unit(fiber: Fiber, x: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..x.len()).map(|_| gaussian(rng)).collect();
        fiber.project_tangent(x, &mut v);
        let n = fiber.inner(&v, &v).sqrt();
        if n > 1e-6 {
            return v.into_iter().map(|c| c / n).collect();
        }
    }
}

/// Moves `h`-distance `d` from `x` along the geodesic with unit initial velocity `dir`.
pub(crate) fn step_fiber(fiber: Fiber, x: &[f64], dir: &[f64], d: f64) -> Vec<f64> {
    match fiber {
        Fiber::Euclidean { .. } => x.iter().zip(dir).map(|(a, b)| a + d * b).collect(),
        Fiber::Sphere { radius, .. } => {
            let (s, c) = (d / radius).sin_cos();
            // dir is h-unit, so its ambient length is 1/radius.
            x.iter().zip(dir).map(|(a, b)| c * a + s * b * radius).collect()
        }
    }
}

/// Largest `|∂τ|` disagreement between analytic and finite-difference modes.
pub fn gradient_mode_discrepancy(
    tf: &TimeFunction,
    model: &SpacetimeModel,
    p: &SpacetimePoint,
    step: f64,
) -> Result<f64> {
    let a = tf.clone().with_gradient(GradientMode::Analytic).gradient(model, p)?;
    let b = tf.clone().with_gradient(GradientMode::FiniteDifference { step }).gradient(model, p)?;
    let mut err = (a.dt - b.dt).abs();
    for (u, v) in a.dx.iter().zip(&b.dx) {
        err = err.max((u - v).abs());
    }
    Ok(err)
}

/// Integral of `φ'` over `[a, b]`, used as an oracle for `φ(b) - φ(a)`.
pub fn phi_increment_by_quadrature(phi: &Phi, a: f64, b: f64) -> Result<f64> {
    numeric::integrate(|t| phi.derivative(t), a, b, 1e-12, 1e-300)
}
