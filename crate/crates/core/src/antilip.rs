//! Sampling verifiers for definiteness: anti-Lipschitz estimates, the three
//! steepness conditions on families of past timelike vectors, and the two
//! plane fields that separate them.
//!
//! All checks measure vectors and distances with the fixed auxiliary metric
//! `h = dt² + (fiber metric)`. Sampling is deterministic for a given seed.
//!
//! A check fails when the sampled constant drops below [`ANTILIP_FLOOR`], or
//! when a probe sequence approaching a suspected degeneration shows a steady
//! power-law decay of the ratio. The second rule is needed because probe
//! sequences stop at a finite depth: a ratio that decays like `j^{-1/2}` is
//! still around `1e-3` at `j = 10⁶`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{dot, Fiber, SpacetimeModel, SpacetimePoint, TangentVector};
use crate::numeric;
use crate::timefuncs::{self, TimeFunction};

pub const ANTILIP_FLOOR: f64 = 1e-6;

/// Log-log decay rate along a probe sequence treated as degeneration.
pub const TREND_SLOPE: f64 = 0.25;

/// Deepest index of the appendix probe sequences `1/j`.
pub const PROBE_DEPTH: u32 = 1_000_000;

/// Axis-aligned coordinate box `[lo, hi]`, time first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Region {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::InvalidConfig("region bounds need equal, nonzero length".into()));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidConfig("region needs lo < hi in every coordinate".into()));
        }
        Ok(Self { lo, hi })
    }

    /// Parses `t0,t1,x0,x1,y0,y1,…`.
    pub fn parse(s: &str) -> Result<Self> {
        let v = s
            .split(',')
            .map(|c| c.trim().parse::<f64>().map_err(|_| Error::InvalidConfig(format!("bad region bound {c:?}"))))
            .collect::<Result<Vec<_>>>()?;
        if v.len() < 4 || v.len() % 2 != 0 {
            return Err(Error::InvalidConfig("region needs pairs t0,t1,x0,x1,…".into()));
        }
        Self::new(v.iter().step_by(2).copied().collect(), v.iter().skip(1).step_by(2).copied().collect())
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, p: &SpacetimePoint) -> bool {
        let c = p.coords();
        c.len() == self.dim() && c.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| v >= a && v <= b)
    }

    fn uniform(&self, rng: &mut ChaCha8Rng) -> SpacetimePoint {
        let c: Vec<f64> = self.lo.iter().zip(&self.hi).map(|(a, b)| rng.gen_range(*a..=*b)).collect();
        SpacetimePoint::try_from(c).expect("finite box")
    }

    /// Odd grid per axis, so coordinate planes through the box centre and
    /// through zero (when inside) are hit exactly.
    fn grid(&self, per_axis: usize) -> Vec<SpacetimePoint> {
        let axes: Vec<Vec<f64>> = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| {
                let mut v: Vec<f64> = (0..per_axis).map(|i| a + (b - a) * i as f64 / (per_axis - 1) as f64).collect();
                if *a < 0.0 && *b > 0.0 {
                    v.push(0.0);
                }
                v
            })
            .collect();
        let mut out = vec![Vec::new()];
        for axis in &axes {
            out = out
                .into_iter()
                .flat_map(|prefix: Vec<f64>| {
                    axis.iter().map(move |v| {
                        let mut p = prefix.clone();
                        p.push(*v);
                        p
                    })
                })
                .collect();
        }
        out.into_iter().map(|c| SpacetimePoint::try_from(c).expect("finite grid")).collect()
    }
}

type FieldFn = dyn Fn(&SpacetimePoint) -> Option<TangentVector> + Send + Sync;

/// A family of past timelike vectors, one per point.
#[derive(Clone)]
pub enum VectorFieldSpec {
    /// The metric gradient `∇τ` (unit for `τ = t` on Minkowski).
    Gradient(TimeFunction),
    /// Any field; `None` marks points where it is undefined.
    Custom(Arc<FieldFn>),
    /// Plane field with `‖T‖_g = 1` whose Euclidean size blows up at `x = 0`.
    SteepSpills,
    /// `−√2 ∂_t` except at `(0, 1/j)`, where it tips towards the light cone.
    TipsNoSpill,
}

impl fmt::Debug for VectorFieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VectorFieldSpec::Gradient(tf) => f.debug_tuple("Gradient").field(tf).finish(),
            VectorFieldSpec::Custom(_) => f.write_str("Custom(..)"),
            VectorFieldSpec::SteepSpills => f.write_str("SteepSpills"),
            VectorFieldSpec::TipsNoSpill => f.write_str("TipsNoSpill"),
        }
    }
}

impl VectorFieldSpec {
    pub fn parse(name: &str, tf: Option<TimeFunction>) -> Result<Self> {
        match name {
            "steepspills" | "steep-spills" => Ok(VectorFieldSpec::SteepSpills),
            "tipsnospill" | "tips-no-spill" => Ok(VectorFieldSpec::TipsNoSpill),
            "gradient" => Ok(VectorFieldSpec::Gradient(tf.unwrap_or_else(TimeFunction::coordinate_t))),
            other => Err(Error::InvalidConfig(format!("unknown field {other:?}"))),
        }
    }

    fn plane_only(&self) -> bool {
        matches!(self, VectorFieldSpec::SteepSpills | VectorFieldSpec::TipsNoSpill)
    }

    pub fn eval(&self, model: &SpacetimeModel, p: &SpacetimePoint) -> Result<Option<TangentVector>> {
        if self.plane_only() && p.x.len() != 1 {
            return Err(Error::Dimension { expected: 1, got: p.x.len() });
        }
        Ok(match self {
            VectorFieldSpec::Gradient(tf) => match tf.gradient(model, p) {
                Ok(v) => Some(v),
                Err(Error::GradientUndefined(_)) => None,
                Err(e) => return Err(e),
            },
            VectorFieldSpec::Custom(f) => {
                let v = f(p);
                if let Some(v) = &v {
                    if v.base != *p {
                        return Err(Error::BaseMismatch);
                    }
                }
                v
            }
            VectorFieldSpec::SteepSpills => {
                let x = p.x[0];
                if x > -1.0 && x < 1.0 && x != 0.0 {
                    Some(TangentVector::new(p.clone(), -1.0 / x.abs(), vec![(1.0 - x * x).sqrt() / x]))
                } else {
                    Some(TangentVector::new(p.clone(), -1.0, vec![0.0]))
                }
            }
            VectorFieldSpec::TipsNoSpill => {
                let s2 = std::f64::consts::SQRT_2;
                match tips_index(p) {
                    Some(j) => Some(TangentVector::new(p.clone(), -s2 * (j + 1.0), vec![-s2 * j])),
                    None => Some(TangentVector::new(p.clone(), -s2, vec![0.0])),
                }
            }
        })
    }

    /// Points approaching where the field is suspected to degenerate,
    /// ordered towards the limit.
    fn probe_sequences(&self) -> Vec<Vec<SpacetimePoint>> {
        let js = || (0..=12).map(|k| 10f64.powf(k as f64 / 2.0).round()).filter(|j| *j <= PROBE_DEPTH as f64);
        match self {
            VectorFieldSpec::TipsNoSpill => vec![js().map(|j| SpacetimePoint::new(0.0, vec![1.0 / j])).collect()],
            VectorFieldSpec::SteepSpills => vec![
                js().map(|j| SpacetimePoint::new(0.0, vec![1.0 / j])).collect(),
                js().map(|j| SpacetimePoint::new(0.0, vec![-1.0 / j])).collect(),
            ],
            _ => Vec::new(),
        }
    }
}

/// `j` when `p = (0, 1/j)` for a natural number `j`.
fn tips_index(p: &SpacetimePoint) -> Option<f64> {
    if p.t != 0.0 || !(p.x[0] > 0.0) {
        return None;
    }
    let j = (1.0 / p.x[0]).round();
    (j >= 1.0 && 1.0 / j == p.x[0]).then_some(j)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Condition {
    A,
    B,
    C,
    AntiLipschitz,
    ConeBounded,
    CurveForm,
}

/// Where the smallest ratio was seen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub point: SpacetimePoint,
    /// Second point for pair-based checks.
    pub partner: Option<SpacetimePoint>,
    pub ratio: f64,
    /// Probe sequence `(point, ratio)` when the verdict came from a trend.
    pub trend: Vec<(SpacetimePoint, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition: Condition,
    pub holds: bool,
    /// Smallest sampled ratio; the largest constant consistent with the samples.
    pub constant: Option<f64>,
    pub witness: Option<Witness>,
    pub samples: usize,
    /// Points where the field was undefined.
    pub skipped: usize,
    /// Too many undefined points to decide.
    pub inconclusive: bool,
}

/// Running minimum plus probe trends.
struct Tracker {
    condition: Condition,
    min: f64,
    witness: Option<Witness>,
    samples: usize,
    skipped: usize,
    trend_fail: Option<Vec<(SpacetimePoint, f64)>>,
}

impl Tracker {
    fn new(condition: Condition) -> Self {
        Self { condition, min: f64::INFINITY, witness: None, samples: 0, skipped: 0, trend_fail: None }
    }

    fn record(&mut self, p: &SpacetimePoint, partner: Option<&SpacetimePoint>, ratio: f64) {
        self.samples += 1;
        let ratio = if ratio.is_nan() { 0.0 } else { ratio };
        if ratio < self.min {
            self.min = ratio;
            self.witness = Some(Witness { point: p.clone(), partner: partner.cloned(), ratio, trend: Vec::new() });
        }
    }

    fn probe(&mut self, seq: Vec<(SpacetimePoint, f64)>) {
        for (p, r) in &seq {
            self.record(p, None, *r);
        }
        if self.trend_fail.is_none() && degenerates(&seq) {
            self.trend_fail = Some(seq);
        }
    }

    fn finish(self) -> ConditionReport {
        let inconclusive = self.samples == 0 || self.skipped * 2 > self.samples + self.skipped;
        let floor_fail = self.min < ANTILIP_FLOOR;
        let holds = !inconclusive && !floor_fail && self.trend_fail.is_none();
        let mut witness = self.witness;
        if let (Some(seq), Some(w)) = (self.trend_fail, witness.as_mut()) {
            if !floor_fail {
                let (p, r) = seq.last().expect("non-empty probe").clone();
                w.point = p;
                w.partner = None;
                w.ratio = r;
            }
            w.trend = seq;
        }
        ConditionReport {
            condition: self.condition,
            holds,
            constant: if self.min.is_finite() { Some(self.min) } else { None },
            witness: if holds { None } else { witness },
            samples: self.samples,
            skipped: self.skipped,
            inconclusive,
        }
    }
}

/// Steady decay along a probe sequence: non-increasing ratios that shrink by
/// at least a decade with log-log slope at least [`TREND_SLOPE`] against the
/// distance to the sequence's limit.
fn degenerates(seq: &[(SpacetimePoint, f64)]) -> bool {
    let pts: Vec<(f64, f64)> = seq
        .iter()
        .filter(|(p, r)| *r > 0.0 && p.x.first().map_or(false, |x| *x != 0.0))
        .map(|(p, r)| (p.x[0].abs().ln(), r.ln()))
        .collect();
    if pts.len() < 4 {
        return seq.iter().any(|(_, r)| *r <= 0.0) && !seq.is_empty();
    }
    let monotone = pts.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12);
    let drop = pts[0].1 - pts[pts.len() - 1].1;
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    monotone && drop >= std::f64::consts::LN_10 && slope >= TREND_SLOPE
}

fn h_norm(model: &SpacetimeModel, v: &TangentVector) -> f64 {
    (v.dt * v.dt + model.fiber().inner(&v.dx, &v.dx)).sqrt()
}

fn g_norm_past_timelike(model: &SpacetimeModel, v: &TangentVector) -> f64 {
    let g = model.metric_unchecked(&v.base, v.dt, &v.dx, v.dt, &v.dx);
    if v.dt < 0.0 && g < 0.0 {
        (-g).sqrt()
    } else {
        0.0
    }
}

/// `‖T‖_g / max{1, ‖T‖_h}` (zero unless past timelike).
fn ratio_a(model: &SpacetimeModel, v: &TangentVector) -> f64 {
    g_norm_past_timelike(model, v) / h_norm(model, v).max(1.0)
}

/// `min g(T, X) / ‖X‖_h` over sampled future causal `X`.
fn ratio_b(model: &SpacetimeModel, v: &TangentVector, rng: &mut ChaCha8Rng) -> f64 {
    let p = &v.base;
    let fiber = model.fiber();
    let f = model.product().warp.eval(p.t);
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    // Exact minimizer among null X: spatial part opposite to T's.
    let mut w = v.dx.clone();
    fiber.project_tangent(&p.x, &mut w);
    let wn = fiber.inner(&w, &w).sqrt();
    if wn > 0.0 {
        dirs.push(w.iter().map(|c| -c / wn).collect());
        dirs.push(w.iter().map(|c| c / wn).collect());
    }
    for i in 0..p.x.len() {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; p.x.len()];
            e[i] = s;
            fiber.project_tangent(&p.x, &mut e);
            let n = fiber.inner(&e, &e).sqrt();
            if n > 1e-9 {
                dirs.push(e.into_iter().map(|c| c / n).collect());
            }
        }
    }
    for _ in 0..16 {
        dirs.push(timefuncs::random_unit(fiber, &p.x, rng));
    }
    let mut best = f64::INFINITY;
    let mut eval = |dt: f64, dx: &[f64]| {
        let x = TangentVector::new(p.clone(), dt, dx.to_vec());
        let g = model.metric_unchecked(p, v.dt, &v.dx, x.dt, &x.dx);
        best = best.min(g / h_norm(model, &x));
    };
    for d in &dirs {
        // Null, and strictly inside the cone.
        for speed in [1.0, rng.gen_range(0.0..1.0)] {
            let dx: Vec<f64> = d.iter().map(|c| c * speed / f).collect();
            eval(1.0, &dx);
        }
    }
    eval(1.0, &vec![0.0; p.x.len()]);
    best
}

fn sample_field(
    field: &VectorFieldSpec,
    model: &SpacetimeModel,
    region: &Region,
    samples: usize,
    seed: u64,
    condition: Condition,
) -> Result<ConditionReport> {
    if region.dim() != model.fiber().chart_dim() + 1 {
        return Err(Error::Dimension { expected: model.fiber().chart_dim() + 1, got: region.dim() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tr = Tracker::new(condition);
    let ratio = |v: &TangentVector, rng: &mut ChaCha8Rng| match condition {
        Condition::A | Condition::ConeBounded => ratio_a(model, v),
        Condition::B => ratio_b(model, v, rng),
        _ => g_norm_past_timelike(model, v),
    };
    let mut points = region.grid(5);
    points.extend((0..samples).map(|_| region.uniform(&mut rng)));
    for p in points {
        if !model.contains(&p) {
            continue;
        }
        match field.eval(model, &p)? {
            Some(v) => {
                let r = ratio(&v, &mut rng);
                tr.record(&p, None, r);
            }
            None => tr.skipped += 1,
        }
    }
    for seq in field.probe_sequences() {
        let mut values = Vec::new();
        for p in seq.into_iter().filter(|p| region.contains(p) && model.contains(p)) {
            if let Some(v) = field.eval(model, &p)? {
                let r = ratio(&v, &mut rng);
                values.push((p, r));
            }
        }
        if !values.is_empty() {
            tr.probe(values);
        }
    }
    Ok(tr.finish())
}

/// `‖T‖_g ≥ C max{1, ‖T‖_h}` on the region.
pub fn check_cone_bounded(field: &VectorFieldSpec, model: &SpacetimeModel, region: &Region, samples: usize, seed: u64) -> Result<ConditionReport> {
    sample_field(field, model, region, samples, seed, Condition::ConeBounded)
}

/// Conditions (A) cone-bounded, (B) `g(T, X) ≥ C ‖X‖_h`, (C) `‖T‖_g ≥ C`.
pub fn check_condition(
    field: &VectorFieldSpec,
    model: &SpacetimeModel,
    region: &Region,
    which: Condition,
    samples: usize,
    seed: u64,
) -> Result<ConditionReport> {
    match which {
        Condition::A | Condition::B | Condition::C => sample_field(field, model, region, samples, seed, which),
        other => Err(Error::InvalidConfig(format!("{other:?} is not a vector-field condition"))),
    }
}

/// `h`-distance for the auxiliary product metric.
fn h_distance(model: &SpacetimeModel, x: &SpacetimePoint, y: &SpacetimePoint) -> f64 {
    let d = model.fiber().distance(&x.x, &y.x);
    ((y.t - x.t).powi(2) + d * d).sqrt()
}

/// Future point `x + (dt, r·w)` with `r ≤ dt` in coordinates.
fn cone_step(model: &SpacetimeModel, x: &SpacetimePoint, dt: f64, frac: f64, rng: &mut ChaCha8Rng) -> SpacetimePoint {
    let fiber = model.fiber();
    let w = timefuncs::random_unit(fiber, &x.x, rng);
    let speed = match fiber {
        Fiber::Sphere { radius, .. } => 1.0 / radius,
        Fiber::Euclidean { .. } => 1.0,
    };
    let _ = speed;
    let r = frac * dt;
    SpacetimePoint::new(x.t + dt, timefuncs::step_fiber(fiber, &x.x, &w, r))
}

/// `τ(y) − τ(x) ≥ C d_h(x, y)` on sampled causal pairs `x ≤ y` in the region.
pub fn check_anti_lipschitz(tf: &TimeFunction, model: &SpacetimeModel, region: &Region, samples: usize, seed: u64) -> Result<ConditionReport> {
    tf.validate_for(model)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tr = Tracker::new(Condition::AntiLipschitz);
    let pair = |tr: &mut Tracker, x: &SpacetimePoint, y: &SpacetimePoint| -> Result<bool> {
        if !(region.contains(y) && model.contains(x) && model.contains(y)) {
            return Ok(false);
        }
        if !model.causal_relation(x, y)?.is_causal_future() || x == y {
            return Ok(false);
        }
        let r = (tf.eval_unchecked(model, y)? - tf.eval_unchecked(model, x)?) / h_distance(model, x, y);
        tr.record(x, Some(y), r);
        Ok(true)
    };
    let mut found = 0;
    let mut attempts = 0;
    while found < samples && attempts < 50 * samples + 1000 {
        attempts += 1;
        let x = region.uniform(&mut rng);
        let room = region.hi[0] - x.t;
        if room <= 0.0 {
            continue;
        }
        let dt = rng.gen_range(0.0..room);
        let frac = if rng.gen_bool(0.2) { 1.0 } else { rng.gen_range(0.0..1.0) };
        let y = cone_step(model, &x, dt, frac, &mut rng);
        if pair(&mut tr, &x, &y)? {
            found += 1;
        }
    }
    if found * 10 < samples {
        return Err(Error::InsufficientSamples(format!("only {found} causal pairs in the region")));
    }
    // Short vertical and null pairs from grid points.
    for x in region.grid(5) {
        for k in 1..=6 {
            let s = 10f64.powi(-k);
            let up = SpacetimePoint::new(x.t + s, x.x.clone());
            pair(&mut tr, &x, &up)?;
            let f = model.product().warp.eval(x.t + s).max(model.product().warp.eval(x.t));
            let y = cone_step(model, &x, s, (1.0 - 1e-9) / f, &mut rng);
            pair(&mut tr, &x, &y)?;
        }
    }
    Ok(tr.finish())
}

/// `τ(α(b)) − τ(α(a)) ≥ C L_h(α)` on sampled future causal polygons in the region.
pub fn check_curve_form(tf: &TimeFunction, model: &SpacetimeModel, region: &Region, samples: usize, seed: u64) -> Result<ConditionReport> {
    tf.validate_for(model)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tr = Tracker::new(Condition::CurveForm);
    let prod = model.product();
    let curve = |tr: &mut Tracker, start: SpacetimePoint, steps: &[(f64, f64)], rng: &mut ChaCha8Rng| -> Result<()> {
        if !model.contains(&start) {
            return Ok(());
        }
        let mut pts = vec![start];
        let mut len = 0.0;
        for &(dt, frac) in steps {
            let x = pts.last().unwrap();
            let fmax = prod.warp.eval(x.t).max(prod.warp.eval(x.t + dt));
            let y = cone_step(model, x, dt, frac * (1.0 - 1e-9) / fmax, rng);
            if !(region.contains(&y) && model.contains(&y)) {
                break;
            }
            len += h_distance(model, x, &y);
            pts.push(y);
        }
        if pts.len() < 2 {
            return Ok(());
        }
        let (a, b) = (&pts[0], pts.last().unwrap());
        let r = (tf.eval_unchecked(model, b)? - tf.eval_unchecked(model, a)?) / len;
        tr.record(a, Some(b), r);
        Ok(())
    };
    let span = region.hi[0] - region.lo[0];
    for _ in 0..samples {
        let x = region.uniform(&mut rng);
        let n = rng.gen_range(1..=6);
        let steps: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.gen_range(0.0..span / 4.0), if rng.gen_bool(0.3) { 1.0 } else { rng.gen_range(0.0..1.0) }))
            .collect();
        curve(&mut tr, x, &steps, &mut rng)?;
    }
    for x in region.grid(5) {
        for k in 1..=6 {
            let s = 10f64.powi(-k);
            curve(&mut tr, x.clone(), &[(s, 0.0)], &mut rng)?;
            curve(&mut tr, x.clone(), &[(s / 2.0, 1.0), (s / 2.0, 1.0)], &mut rng)?;
        }
    }
    if tr.samples == 0 {
        return Err(Error::InsufficientSamples("no curve fits in the region".into()));
    }
    Ok(tr.finish())
}

/// Condition (B) for `∇τ`; when it holds, `τ` is locally anti-Lipschitz on
/// the region. Undefined gradients are skipped and counted.
pub fn gradient_criterion(tf: &TimeFunction, model: &SpacetimeModel, region: &Region, samples: usize, seed: u64) -> Result<ConditionReport> {
    tf.validate_for(model)?;
    check_condition(&VectorFieldSpec::Gradient(tf.clone()), model, region, Condition::B, samples, seed)
}

/// One row of the condition table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionRow {
    pub field: String,
    pub a: bool,
    pub b: bool,
    pub c: bool,
}

/// Verdicts for (A), (B), (C) on one field.
pub fn condition_row(name: &str, field: &VectorFieldSpec, model: &SpacetimeModel, region: &Region, samples: usize, seed: u64) -> Result<ConditionRow> {
    let v = |w| check_condition(field, model, region, w, samples, seed).map(|r| r.holds);
    Ok(ConditionRow { field: name.into(), a: v(Condition::A)?, b: v(Condition::B)?, c: v(Condition::C)? })
}

/// Upper estimate of the `g^R_τ`-distance, `g^R = g + 2 g(·, ∇τ)²`: shortest
/// path in the complete graph on `p`, `q` and `nodes` random points of the
/// bounding box (direct edge included), edges measured along coordinate
/// segments.
pub fn riemannian_distance_estimate(
    model: &SpacetimeModel,
    tf: &TimeFunction,
    p: &SpacetimePoint,
    q: &SpacetimePoint,
    nodes: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (pc, qc) = (p.coords(), q.coords());
    let lo: Vec<f64> = pc.iter().zip(&qc).map(|(a, b)| a.min(*b) - 0.25 * (a - b).abs()).collect();
    let hi: Vec<f64> = pc.iter().zip(&qc).map(|(a, b)| a.max(*b) + 0.25 * (a - b).abs()).collect();
    let mut pts = vec![p.clone(), q.clone()];
    for _ in 0..nodes {
        let c: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| if a < b { rng.gen_range(*a..*b) } else { *a }).collect();
        let mut x = SpacetimePoint::try_from(c)?;
        model.fiber().normalize(&mut x.x)?;
        if model.contains(&x) {
            pts.push(x);
        }
    }
    let edge = |a: &SpacetimePoint, b: &SpacetimePoint| -> f64 {
        let dt = b.t - a.t;
        let dx: Vec<f64> = b.x.iter().zip(&a.x).map(|(u, v)| u - v).collect();
        numeric::gauss_legendre_8(
            |s| {
                let x = SpacetimePoint::new(a.t + s * dt, a.x.iter().zip(&dx).map(|(u, d)| u + s * d).collect::<Vec<_>>());
                let g = model.metric_unchecked(&x, dt, &dx, dt, &dx);
                match tf.partials(model, &x) {
                    Ok((pt, px)) => {
                        let dtau = pt * dt + dot(&px, &dx);
                        (g + 2.0 * dtau * dtau).max(0.0).sqrt()
                    }
                    Err(_) => f64::NAN,
                }
            },
            0.0,
            1.0,
        )
    };
    // Dense Dijkstra on the complete graph.
    let n = pts.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    dist[0] = 0.0;
    for _ in 0..n {
        let Some(u) = (0..n).filter(|i| !done[*i]).min_by(|a, b| dist[*a].total_cmp(&dist[*b])) else { break };
        if u == 1 {
            break;
        }
        done[u] = true;
        for v in 0..n {
            if !done[v] {
                let w = edge(&pts[u], &pts[v]);
                if w.is_finite() && dist[u] + w < dist[v] {
                    dist[v] = dist[u] + w;
                }
            }
        }
    }
    if dist[1].is_finite() {
        Ok(dist[1])
    } else {
        Err(Error::NonConvergence("graph distance undefined".into()))
    }
}
