//! Piecewise causal curves: representation, validation, length functionals
//! and explicit constructions (connectors, apex curves, zig-zags).
//!
//! Segments built here are graphs `t ↦ (t, σ(t))` over a fiber geodesic.
//! Every nontrivial causal segment in a warped product projects
//! monotonically to `t`, so nothing is lost by storing them this way.
//! Curves read from JSON keep their knots as polylines.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{CausalRelation, FiberGeodesic, SpacetimeModel, SpacetimePoint};
use crate::numeric;
use crate::timefuncs::TimeFunction;

/// Slack on `g(α', α') / ‖α'‖²` when validating knots.
pub const CAUSAL_TOLERANCE: f64 = 1e-9;

/// Minimum number of sampled knots per segment.
pub const MIN_KNOTS: usize = 64;

/// Smallest zig-zag amplitude, relative to `max(1, d)`, whose breaks survive
/// rounding with the causal tolerance intact.
pub const MIN_AMPLITUDE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Future,
    Past,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Future => 1.0,
            Direction::Past => -1.0,
        }
    }
}

/// How a graph segment advances along its fiber geodesic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphProfile {
    /// At the null rate `ds/dt = 1/f` until the fiber endpoint is reached, then vertical.
    Null,
    /// `s` proportional to conformal time.
    Conformal,
    /// `s` proportional to `t`.
    Uniform,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SegmentPath {
    Graph(GraphProfile),
    /// Explicit knots in traversal order, endpoints included. Consecutive
    /// knots are joined by the null-profile connector, which is straight in
    /// Minkowski space; the segment is causal when each knot lies in the
    /// causal future (or past) of the one before.
    Polyline(Vec<SpacetimePoint>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CausalSegment {
    pub direction: Direction,
    pub path: SegmentPath,
}

/// `β = β₁ ⋯ β_k`: segment `i` runs from `breaks[i]` to `breaks[i + 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseCausalCurve {
    pub breaks: Vec<SpacetimePoint>,
    pub segments: Vec<CausalSegment>,
}

/// A sampled point with the tangent per unit parameter, in traversal direction.
#[derive(Clone, Debug, PartialEq)]
pub struct Knot {
    pub point: SpacetimePoint,
    pub dt: f64,
    pub dx: Vec<f64>,
}

struct Graph {
    t_lo: f64,
    t_hi: f64,
    u_lo: f64,
    u_hi: f64,
    geo: FiberGeodesic,
    lo_x: Vec<f64>,
    hi_x: Vec<f64>,
    profile: GraphProfile,
    t_kink: Option<f64>,
}

impl Graph {
    fn new(model: &SpacetimeModel, a: &SpacetimePoint, b: &SpacetimePoint, profile: GraphProfile) -> Result<Self> {
        let (lo, hi) = if a.t <= b.t { (a, b) } else { (b, a) };
        let prod = model.product();
        let geo = prod.fiber.geodesic(&lo.x, &hi.x);
        let u_lo = prod.conformal_time(lo.t)?;
        let u_hi = prod.conformal_time(hi.t)?;
        let mut profile = profile;
        let mut t_kink = None;
        if profile == GraphProfile::Null {
            if u_hi - u_lo < geo.length * (1.0 - 1e-12) {
                profile = GraphProfile::Conformal;
            } else if u_lo + geo.length < u_hi {
                let t = prod.conformal_time_inverse(u_lo + geo.length)?.clamp(lo.t, hi.t);
                t_kink = Some(t);
            }
        }
        Ok(Self {
            t_lo: lo.t,
            t_hi: hi.t,
            u_lo,
            u_hi,
            geo,
            lo_x: lo.x.clone(),
            hi_x: hi.x.clone(),
            profile,
            t_kink,
        })
    }

    /// Fiber arclength and its `t`-derivative; `left` picks the one-sided
    /// derivative at the kink.
    fn progress(&self, model: &SpacetimeModel, t: f64, left: bool) -> Result<(f64, f64)> {
        let d = self.geo.length;
        if d == 0.0 {
            return Ok((0.0, 0.0));
        }
        let prod = model.product();
        Ok(match self.profile {
            GraphProfile::Null => {
                let kink = self.t_kink.unwrap_or(self.t_hi);
                if t < kink || (t == kink && left) {
                    let u = prod.conformal_time(t)?;
                    ((u - self.u_lo).min(d), 1.0 / prod.warp.eval(t))
                } else {
                    (d, 0.0)
                }
            }
            GraphProfile::Conformal => {
                let du = self.u_hi - self.u_lo;
                if du <= 0.0 {
                    return Err(Error::InvalidCurve("segment with spatial extent but no time extent".into()));
                }
                let u = prod.conformal_time(t)?;
                (d * (u - self.u_lo) / du, d / (prod.warp.eval(t) * du))
            }
            GraphProfile::Uniform => {
                let dt = self.t_hi - self.t_lo;
                if dt <= 0.0 {
                    return Err(Error::InvalidCurve("segment with spatial extent but no time extent".into()));
                }
                (d * (t - self.t_lo) / dt, d / dt)
            }
        })
    }

    fn point(&self, model: &SpacetimeModel, t: f64, left: bool) -> Result<(Vec<f64>, Vec<f64>)> {
        let (s, rate) = self.progress(model, t, left)?;
        let x = if t == self.t_lo {
            self.lo_x.clone()
        } else if t == self.t_hi || s >= self.geo.length {
            self.hi_x.clone()
        } else {
            self.geo.point_at(s)
        };
        let v = self.geo.velocity_at(s).into_iter().map(|c| c * rate).collect();
        Ok((x, v))
    }

    /// Smooth pieces in `t`.
    fn pieces(&self) -> Vec<(f64, f64)> {
        match self.t_kink {
            Some(k) if k > self.t_lo && k < self.t_hi => vec![(self.t_lo, k), (k, self.t_hi)],
            _ => vec![(self.t_lo, self.t_hi)],
        }
    }
}

impl CausalSegment {
    pub fn graph(direction: Direction, profile: GraphProfile) -> Self {
        Self { direction, path: SegmentPath::Graph(profile) }
    }

    /// Knots in traversal order with tangents per unit `|t|`.
    pub fn knots(&self, model: &SpacetimeModel, start: &SpacetimePoint, end: &SpacetimePoint, n: usize) -> Result<Vec<Knot>> {
        match &self.path {
            SegmentPath::Polyline(pts) => {
                let fiber = model.fiber();
                let mut out = Vec::with_capacity(pts.len());
                for (i, p) in pts.iter().enumerate() {
                    let (a, b) = if i + 1 < pts.len() { (p, &pts[i + 1]) } else if i > 0 { (&pts[i - 1], p) } else { (p, p) };
                    let geo = fiber.geodesic(&a.x, &b.x);
                    let s = if i + 1 < pts.len() { 0.0 } else { geo.length };
                    let dx = geo.velocity_at(s).into_iter().map(|c| c * geo.length).collect();
                    out.push(Knot { point: p.clone(), dt: b.t - a.t, dx });
                }
                Ok(out)
            }
            SegmentPath::Graph(profile) => {
                if start == end {
                    return Ok(vec![Knot { point: start.clone(), dt: 0.0, dx: vec![0.0; start.x.len()] }]);
                }
                let g = Graph::new(model, start, end, *profile)?;
                let sign = self.direction.sign();
                let n = n.max(2);
                let mut ts: Vec<(f64, bool)> = (0..n)
                    .map(|i| (g.t_lo + (g.t_hi - g.t_lo) * i as f64 / (n - 1) as f64, false))
                    .collect();
                ts[n - 1].0 = g.t_hi;
                if let Some(k) = g.t_kink {
                    ts.push((k, true));
                    ts.push((k, false));
                    ts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
                }
                let mut out = Vec::with_capacity(ts.len());
                for (t, left) in ts {
                    let (x, v) = g.point(model, t, left || t == g.t_hi)?;
                    out.push(Knot {
                        point: SpacetimePoint::new(t, x),
                        dt: sign,
                        dx: v.into_iter().map(|c| c * sign).collect(),
                    });
                }
                if self.direction == Direction::Past {
                    out.reverse();
                }
                Ok(out)
            }
        }
    }
}

/// Per-curve validation outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveReport {
    pub valid: bool,
    /// Largest `g(α', α') / ‖α'‖²` seen over all knots (≤ tolerance when valid).
    pub worst_ratio: f64,
    pub worst_segment: Option<usize>,
    pub issues: Vec<String>,
}

impl PiecewiseCausalCurve {
    pub fn trivial(p: SpacetimePoint) -> Self {
        Self { breaks: vec![p], segments: Vec::new() }
    }

    pub fn start(&self) -> &SpacetimePoint {
        &self.breaks[0]
    }

    pub fn end(&self) -> &SpacetimePoint {
        self.breaks.last().expect("curve has at least one break")
    }

    pub fn is_trivial(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn directions(&self) -> Vec<Direction> {
        self.segments.iter().map(|s| s.direction).collect()
    }

    /// Appends `other`, which must start where `self` ends; same-direction
    /// graph segments at the seam are not merged.
    pub fn concat(mut self, other: PiecewiseCausalCurve) -> Result<Self> {
        if self.end() != other.start() {
            return Err(Error::InvalidCurve("curves do not chain".into()));
        }
        self.breaks.extend(other.breaks.into_iter().skip(1));
        self.segments.extend(other.segments);
        Ok(self)
    }

    /// Knots of segment `i`.
    pub fn segment_knots(&self, model: &SpacetimeModel, i: usize, n: usize) -> Result<Vec<Knot>> {
        self.segments[i].knots(model, &self.breaks[i], &self.breaks[i + 1], n)
    }

    pub fn validate(&self, model: &SpacetimeModel) -> CurveReport {
        let mut report = CurveReport { valid: true, worst_ratio: f64::NEG_INFINITY, worst_segment: None, issues: Vec::new() };
        let fail = |r: &mut CurveReport, msg: String| {
            r.valid = false;
            r.issues.push(msg);
        };
        if self.breaks.len() != self.segments.len() + 1 {
            fail(&mut report, "break count does not match segment count".into());
            return report;
        }
        // Cone restrictions are future sets: a segment between two admissible
        // breaks stays inside, so breaks are the only membership checks.
        for (i, b) in self.breaks.iter().enumerate() {
            if let Err(e) = model.check_point(b) {
                fail(&mut report, format!("break {i}: {e}"));
            }
        }
        if !report.valid {
            return report;
        }
        for (i, seg) in self.segments.iter().enumerate() {
            let (a, b) = (&self.breaks[i], &self.breaks[i + 1]);
            if let SegmentPath::Polyline(pts) = &seg.path {
                if pts.first() != Some(a) || pts.last() != Some(b) {
                    fail(&mut report, format!("segment {i}: knots do not chain with breaks"));
                    continue;
                }
                for w in pts.windows(2) {
                    if w[0] == w[1] {
                        continue;
                    }
                    // Knots are samples, so rounding in the last place must
                    // not break an exactly null run.
                    let ok = match model.cone_gap(&w[0], &w[1]) {
                        Ok((gap, du)) => {
                            let scale = 1.0 + gap.abs() + du.abs();
                            let ratio = gap / (gap.abs() + du.abs()).max(f64::MIN_POSITIVE);
                            if ratio > report.worst_ratio {
                                report.worst_ratio = ratio;
                                report.worst_segment = Some(i);
                            }
                            gap <= CAUSAL_TOLERANCE * scale && du * seg.direction.sign() >= -CAUSAL_TOLERANCE * scale
                        }
                        Err(_) => false,
                    };
                    if !ok {
                        fail(&mut report, format!("segment {i}: knot {} is not causally after {}", w[1], w[0]));
                        break;
                    }
                }
                continue;
            }
            let knots = match seg.knots(model, a, b, MIN_KNOTS) {
                Ok(k) => k,
                Err(e) => {
                    fail(&mut report, format!("segment {i}: {e}"));
                    continue;
                }
            };
            if a == b {
                continue;
            }
            for k in &knots {
                if k.dt == 0.0 && k.dx.iter().all(|c| *c == 0.0) {
                    continue;
                }
                let g = model.metric_unchecked(&k.point, k.dt, &k.dx, k.dt, &k.dx) / model.conformal_factor_sq(&k.point);
                let norm = model.aux_norm_sq(&k.point, k.dt, &k.dx);
                let ratio = g / norm;
                if ratio > report.worst_ratio {
                    report.worst_ratio = ratio;
                    report.worst_segment = Some(i);
                }
                if !(ratio <= CAUSAL_TOLERANCE) {
                    fail(&mut report, format!("segment {i}: spacelike tangent at {} (ratio {ratio:.3e})", k.point));
                    break;
                }
                if k.dt * seg.direction.sign() <= 0.0 {
                    fail(&mut report, format!("segment {i}: tangent at {} points the wrong way in time", k.point));
                    break;
                }
            }
        }
        if report.worst_ratio == f64::NEG_INFINITY {
            report.worst_ratio = 0.0;
        }
        report
    }

    /// Null length `Σ |τ(xᵢ) − τ(xᵢ₋₁)|` over breaks, after validation.
    pub fn null_length(&self, model: &SpacetimeModel, tf: &TimeFunction) -> Result<f64> {
        let r = self.validate(model);
        if !r.valid {
            return Err(Error::InvalidCurve(r.issues.join("; ")));
        }
        self.null_length_unchecked(model, tf)
    }

    /// Null length without validating the segments.
    pub fn null_length_unchecked(&self, model: &SpacetimeModel, tf: &TimeFunction) -> Result<f64> {
        let taus = self
            .breaks
            .iter()
            .map(|b| tf.eval_unchecked(model, b))
            .collect::<Result<Vec<_>>>()?;
        Ok(taus.windows(2).map(|w| (w[1] - w[0]).abs()).sum())
    }

    pub fn curve_length(&self, model: &SpacetimeModel, kind: &LengthKind) -> Result<f64> {
        let r = self.validate(model);
        if !r.valid {
            return Err(Error::InvalidCurve(r.issues.join("; ")));
        }
        let mut total = 0.0;
        for (i, seg) in self.segments.iter().enumerate() {
            let (a, b) = (&self.breaks[i], &self.breaks[i + 1]);
            if a == b {
                continue;
            }
            total += match &seg.path {
                SegmentPath::Graph(profile) => {
                    let g = Graph::new(model, a, b, *profile)?;
                    let mut sum = 0.0;
                    for (lo, hi) in g.pieces() {
                        let mid_left = hi <= g.t_kink.unwrap_or(f64::INFINITY);
                        let f = |t: f64| -> f64 {
                            match g.point(model, t, mid_left) {
                                Ok((x, v)) => speed(model, &SpacetimePoint::new(t, x), 1.0, &v, kind).unwrap_or(f64::NAN),
                                Err(_) => f64::NAN,
                            }
                        };
                        sum += numeric::integrate(f, lo, hi, 1e-10, 1e-14)?;
                    }
                    sum
                }
                SegmentPath::Polyline(pts) => {
                    let mut sum = 0.0;
                    for w in pts.windows(2) {
                        let fiber = model.fiber();
                        let geo = fiber.geodesic(&w[0].x, &w[1].x);
                        let dt = w[1].t - w[0].t;
                        let f = |s: f64| -> f64 {
                            let p = SpacetimePoint::new(w[0].t + s * dt, geo.point_at(s * geo.length));
                            let v: Vec<f64> = geo.velocity_at(s * geo.length).into_iter().map(|c| c * geo.length).collect();
                            speed(model, &p, dt, &v, kind).unwrap_or(f64::NAN)
                        };
                        sum += numeric::gauss_legendre_8(f, 0.0, 1.0);
                    }
                    sum
                }
            };
        }
        if total.is_finite() {
            Ok(total)
        } else {
            Err(Error::Precondition("length integrand undefined along the curve".into()))
        }
    }

    pub fn to_json(&self, model: &SpacetimeModel) -> Result<CurveJson> {
        let per = (65536 / self.segments.len().max(1)).clamp(2, MIN_KNOTS);
        let segments = (0..self.segments.len())
            .map(|i| {
                let mut knots: Vec<SpacetimePoint> =
                    self.segment_knots(model, i, per)?.into_iter().map(|k| k.point).collect();
                knots.dedup();
                Ok(SegmentJson { dir: self.segments[i].direction, knots })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CurveJson { breaks: self.breaks.clone(), segments })
    }

    pub fn from_json(json: CurveJson) -> Result<Self> {
        if json.breaks.is_empty() || json.breaks.len() != json.segments.len() + 1 {
            return Err(Error::InvalidCurve("need one more break than segments".into()));
        }
        let segments = json
            .segments
            .into_iter()
            .map(|s| {
                if s.knots.len() < 2 {
                    return Err(Error::InvalidCurve("segment needs at least two knots".into()));
                }
                Ok(CausalSegment { direction: s.dir, path: SegmentPath::Polyline(s.knots) })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { breaks: json.breaks, segments })
    }
}

fn speed(model: &SpacetimeModel, p: &SpacetimePoint, dt: f64, dx: &[f64], kind: &LengthKind) -> Result<f64> {
    Ok(match kind {
        LengthKind::RiemannH => model.aux_norm_sq(p, dt, dx).sqrt(),
        LengthKind::LorentzG => {
            let g = model.metric_unchecked(p, dt, dx, dt, dx);
            let scale = model.aux_norm_sq(p, dt, dx) * model.conformal_factor_sq(p);
            if g.abs() <= CAUSAL_TOLERANCE * 1e-3 * scale {
                0.0
            } else {
                g.abs().sqrt()
            }
        }
        LengthKind::RiemannGbar(tf) => {
            let grad = tf.gradient(model, p)?;
            let n2 = model.metric_unchecked(p, grad.dt, &grad.dx, grad.dt, &grad.dx);
            if (n2 + 1.0).abs() > 1e-6 {
                return Err(Error::Precondition(format!("‖∇τ‖² = {n2} at {p}, expected -1")));
            }
            let (pt, px) = tf.partials(model, p)?;
            let dtau = pt * dt + crate::models::dot(&px, dx);
            let g = model.metric_unchecked(p, dt, dx, dt, dx);
            (g + 2.0 * dtau * dtau).max(0.0).sqrt()
        }
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum LengthKind {
    LorentzG,
    /// Auxiliary `dt² + f² h`.
    RiemannH,
    /// `g + 2 g(·, ∇τ)²` for a time function with unit gradient.
    RiemannGbar(TimeFunction),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentJson {
    pub dir: Direction,
    pub knots: Vec<SpacetimePoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveJson {
    pub breaks: Vec<SpacetimePoint>,
    pub segments: Vec<SegmentJson>,
}

/// One-segment connector for a causally related pair: the fiber geodesic is
/// traversed at the null rate until it is used up, then the curve goes straight up.
pub fn warped_causal_connector(model: &SpacetimeModel, p: &SpacetimePoint, q: &SpacetimePoint) -> Result<PiecewiseCausalCurve> {
    let rel = model.causal_relation(p, q)?;
    let direction = match rel {
        CausalRelation::Identical => return Ok(PiecewiseCausalCurve::trivial(p.clone())),
        r if r.is_causal_future() => Direction::Future,
        r if r.is_causal_past() => Direction::Past,
        _ => return Err(Error::Precondition(format!("{p} and {q} are not causally related"))),
    };
    Ok(PiecewiseCausalCurve {
        breaks: vec![p.clone(), q.clone()],
        segments: vec![CausalSegment::graph(direction, GraphProfile::Null)],
    })
}

/// The connector built without consulting `causal_relation`, directed by the
/// sign of `Δt`. It validates exactly when the pair is causally related.
pub fn null_connector_unchecked(p: &SpacetimePoint, q: &SpacetimePoint) -> PiecewiseCausalCurve {
    if p == q {
        return PiecewiseCausalCurve::trivial(p.clone());
    }
    let direction = if q.t >= p.t { Direction::Future } else { Direction::Past };
    PiecewiseCausalCurve {
        breaks: vec![p.clone(), q.clone()],
        segments: vec![CausalSegment::graph(direction, GraphProfile::Null)],
    }
}

/// One-segment curve advancing along the fiber proportionally to conformal time.
pub fn conformal_straight_connector(model: &SpacetimeModel, p: &SpacetimePoint, q: &SpacetimePoint) -> Result<PiecewiseCausalCurve> {
    let rel = model.causal_relation(p, q)?;
    if !rel.is_related() {
        return Err(Error::Precondition(format!("{p} and {q} are not causally related")));
    }
    if rel == CausalRelation::Identical {
        return Ok(PiecewiseCausalCurve::trivial(p.clone()));
    }
    let direction = if rel.is_causal_future() { Direction::Future } else { Direction::Past };
    Ok(PiecewiseCausalCurve {
        breaks: vec![p.clone(), q.clone()],
        segments: vec![CausalSegment::graph(direction, GraphProfile::Conformal)],
    })
}

/// Two connectors through an intermediate point.
pub fn through_point(model: &SpacetimeModel, p: &SpacetimePoint, m: &SpacetimePoint, q: &SpacetimePoint) -> Result<PiecewiseCausalCurve> {
    warped_causal_connector(model, p, m)?.concat(warped_causal_connector(model, m, q)?)
}

/// Point at conformal time `u` and fiber arclength `s` along `geo`.
fn lift(model: &SpacetimeModel, geo: &FiberGeodesic, u: f64, s: f64, end: Option<&SpacetimePoint>) -> Result<SpacetimePoint> {
    let t = model.product().conformal_time_inverse(u)?;
    match end {
        Some(e) if s >= geo.length => Ok(SpacetimePoint::new(t, e.x.clone())),
        _ => Ok(SpacetimePoint::new(t, geo.point_at(s))),
    }
}

/// Piecewise null curve from `p` to `q` along the fiber geodesic: null to the
/// hub level `u_hub` (conformal time), `k` bounces of conformal amplitude
/// `a = (d − |u_hub − u_p| − |u_q − u_hub|) / 2k` above (`up`) or below the
/// hub, then null to `q`. Consecutive segments with equal direction are merged.
pub fn hub_zigzag(
    model: &SpacetimeModel,
    p: &SpacetimePoint,
    q: &SpacetimePoint,
    u_hub: f64,
    k: usize,
    up: bool,
) -> Result<PiecewiseCausalCurve> {
    let prod = model.product();
    let geo = prod.fiber.geodesic(&p.x, &q.x);
    let (up_, uq) = (prod.conformal_time(p.t)?, prod.conformal_time(q.t)?);
    let lead = (u_hub - up_).abs();
    let tail = (uq - u_hub).abs();
    let rest = geo.length - lead - tail;
    if rest < -1e-12 * geo.length.max(1.0) || k == 0 {
        return Err(Error::Precondition(format!(
            "hub level {u_hub} leaves no room for bounces (fiber distance {})",
            geo.length
        )));
    }
    let scale = geo.length.max(1.0);
    let a = if rest <= 1e-12 * scale { 0.0 } else { rest / (2 * k) as f64 };
    if a > 0.0 && a < MIN_AMPLITUDE * scale {
        return Err(Error::Precondition(format!("bounce amplitude {a:e} is below resolution")));
    }
    let sign = if up { 1.0 } else { -1.0 };
    // (conformal time, arclength) of every break, then merge monotone runs.
    let mut nodes = vec![(up_, 0.0)];
    let mut s = lead;
    nodes.push((u_hub, s));
    if a > 0.0 {
        for _ in 0..k {
            s += a;
            nodes.push((u_hub + sign * a, s));
            s += a;
            nodes.push((u_hub, s));
        }
    }
    nodes.push((uq, geo.length));
    nodes.dedup_by(|b, a| b.0 == a.0 && b.1 == a.1);
    let mut kept = vec![nodes[0]];
    for i in 1..nodes.len() {
        if i + 1 < nodes.len() {
            let d0 = nodes[i].0 - kept.last().unwrap().0;
            let d1 = nodes[i + 1].0 - nodes[i].0;
            if d0 == 0.0 || d0.signum() == d1.signum() {
                continue;
            }
        }
        kept.push(nodes[i]);
    }
    let last = kept.len() - 1;
    let mut breaks = Vec::with_capacity(kept.len());
    for (i, (u, s)) in kept.iter().enumerate() {
        breaks.push(match i {
            0 => p.clone(),
            i if i == last => q.clone(),
            _ => lift(model, &geo, *u, *s, Some(q))?,
        });
    }
    let segments = kept
        .windows(2)
        .map(|w| CausalSegment::graph(if w[1].0 >= w[0].0 { Direction::Future } else { Direction::Past }, GraphProfile::Null))
        .collect();
    Ok(PiecewiseCausalCurve { breaks, segments })
}

/// Two-segment curve through a common future (`up`) or past point.
pub fn apex_curve(model: &SpacetimeModel, p: &SpacetimePoint, q: &SpacetimePoint, up: bool) -> Result<PiecewiseCausalCurve> {
    let prod = model.product();
    let d = prod.fiber.distance(&p.x, &q.x);
    let (up_, uq) = (prod.conformal_time(p.t)?, prod.conformal_time(q.t)?);
    let hub = if up { (up_ + uq + d) / 2.0 } else { (up_ + uq - d) / 2.0 };
    let (lo, hi) = prod.conformal_range()?;
    if !(hub > lo && hub < hi) {
        return Err(Error::Precondition("apex outside the time interval".into()));
    }
    let c = hub_zigzag(model, p, q, hub, 1, up)?;
    for b in &c.breaks {
        model.check_point(b)?;
    }
    Ok(c)
}

/// Some valid piecewise causal curve from `p` to `q`.
pub fn connect_piecewise_causal(model: &SpacetimeModel, p: &SpacetimePoint, q: &SpacetimePoint) -> Result<PiecewiseCausalCurve> {
    if model.causal_relation(p, q)?.is_related() {
        return warped_causal_connector(model, p, q);
    }
    if let Ok(c) = apex_curve(model, p, q, true) {
        return Ok(c);
    }
    if let Ok(c) = apex_curve(model, p, q, false) {
        return Ok(c);
    }
    // Bounded future: bounce above the higher endpoint with small amplitude.
    let prod = model.product();
    let (up_, uq) = (prod.conformal_time(p.t)?, prod.conformal_time(q.t)?);
    let (_, hi) = prod.conformal_range()?;
    let hub = up_.max(uq);
    let mut k = 2;
    while k <= 1 << 20 {
        if let Ok(c) = hub_zigzag(model, p, q, hub, k, true) {
            if c.breaks.iter().all(|b| model.contains(b)) && c.breaks.iter().all(|b| prod.conformal_time(b.t).map_or(false, |u| u < hi)) {
                return Ok(c);
            }
        }
        k *= 2;
    }
    Err(Error::NonConvergence(format!("no piecewise causal curve found from {p} to {q}")))
}

/// `2k` alternating segments between the slice of `p` and the slice
/// `t + rise` (null bounces when `rise` is `None`). Requires `t_p = t_q`.
pub fn zigzag_family(
    model: &SpacetimeModel,
    p: &SpacetimePoint,
    q: &SpacetimePoint,
    k: usize,
    rise: Option<f64>,
) -> Result<PiecewiseCausalCurve> {
    if p.t != q.t {
        return Err(Error::Precondition("zig-zag endpoints must lie on one slice".into()));
    }
    if k == 0 {
        return Err(Error::Precondition("zig-zag needs k ≥ 1".into()));
    }
    model.check_point(p)?;
    model.check_point(q)?;
    let prod = model.product();
    let geo = prod.fiber.geodesic(&p.x, &q.x);
    let u0 = prod.conformal_time(p.t)?;
    let half = geo.length / (2 * k) as f64;
    let (level, profile) = match rise {
        None => (u0 + half, GraphProfile::Null),
        Some(r) => {
            let t1 = p.t + r;
            if !prod.interval.contains(t1) {
                return Err(Error::Domain(format!("zig-zag level t = {t1} outside the interval")));
            }
            let u1 = prod.conformal_time(t1)?;
            if (u1 - u0).abs() < half * (1.0 - 1e-12) {
                return Err(Error::Precondition(format!(
                    "rise {r} too small: conformal amplitude {} < {half}",
                    (u1 - u0).abs()
                )));
            }
            (u1, GraphProfile::Conformal)
        }
    };
    let up = level >= u0;
    let (d1, d2) = if up { (Direction::Future, Direction::Past) } else { (Direction::Past, Direction::Future) };
    let mut breaks = vec![p.clone()];
    let mut segments = Vec::with_capacity(2 * k);
    for j in 0..k {
        let apex = lift(model, &geo, level, (2 * j + 1) as f64 * half, None)?;
        breaks.push(apex);
        let back = if j + 1 == k {
            q.clone()
        } else {
            SpacetimePoint::new(p.t, geo.point_at((2 * j + 2) as f64 * half))
        };
        breaks.push(back);
        segments.push(CausalSegment::graph(d1, profile));
        segments.push(CausalSegment::graph(d2, profile));
    }
    Ok(PiecewiseCausalCurve { breaks, segments })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Fiber, Interval, Warp};
    use std::f64::consts::E;

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

    fn polyline(dir: Direction, pts: &[SpacetimePoint]) -> PiecewiseCausalCurve {
        PiecewiseCausalCurve {
            breaks: vec![pts[0].clone(), pts[pts.len() - 1].clone()],
            segments: vec![CausalSegment { direction: dir, path: SegmentPath::Polyline(pts.to_vec()) }],
        }
    }

    #[test]
    fn validate_examples() {
        let m = SpacetimeModel::minkowski(2);
        let zig = connect_piecewise_causal(&m, &p(0.0, &[0.0, 0.0]), &p(0.0, &[4.0, 0.0])).unwrap();
        assert!(zig.validate(&m).valid);
        let bad = polyline(Direction::Future, &[p(0.0, &[0.0, 0.0]), p(1.0, &[2.0, 0.0])]);
        assert!(!bad.validate(&m).valid);
        let g = grw_t();
        let c = warped_causal_connector(&g, &p(1.0, &[0.0, 0.0]), &p(3.0, &[0.5, 0.2])).unwrap();
        let r = c.validate(&g);
        assert!(r.valid, "{r:?}");
    }

    #[test]
    fn null_length_examples() {
        let m = SpacetimeModel::minkowski(2);
        let t = TimeFunction::coordinate_t();
        let zig = connect_piecewise_causal(&m, &p(0.0, &[0.0, 0.0]), &p(0.0, &[4.0, 0.0])).unwrap();
        assert_eq!(zig.breaks[1], p(2.0, &[2.0, 0.0]));
        assert_eq!(zig.null_length(&m, &t).unwrap(), 4.0);
        assert_eq!(PiecewiseCausalCurve::trivial(p(1.0, &[0.0, 0.0])).null_length(&m, &t).unwrap(), 0.0);
        let c = warped_causal_connector(&m, &p(0.0, &[0.0, 0.0]), &p(3.0, &[1.0, 0.0])).unwrap();
        assert_eq!(c.null_length(&m, &t).unwrap(), 3.0);
    }

    #[test]
    fn length_examples() {
        let m = SpacetimeModel::minkowski(2);
        let seg = polyline(Direction::Future, &[p(0.0, &[0.0, 0.0]), p(2.0, &[1.0, 0.0])]);
        assert!((seg.curve_length(&m, &LengthKind::LorentzG).unwrap() - 3f64.sqrt()).abs() < 1e-12);
        let null = warped_causal_connector(&m, &p(0.0, &[0.0, 0.0]), &p(1.0, &[1.0, 0.0])).unwrap();
        assert_eq!(null.curve_length(&m, &LengthKind::LorentzG).unwrap(), 0.0);
        let h = null.curve_length(&m, &LengthKind::RiemannH).unwrap();
        assert!((h - 2f64.sqrt()).abs() < 1e-9);
        // Graph form of the timelike segment gives the same Lorentzian length.
        let g = conformal_straight_connector(&m, &p(0.0, &[0.0, 0.0]), &p(2.0, &[1.0, 0.0])).unwrap();
        assert!((g.curve_length(&m, &LengthKind::LorentzG).unwrap() - 3f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn connector_kinks_at_expected_time() {
        let m = SpacetimeModel::minkowski(2);
        let c = warped_causal_connector(&m, &p(0.0, &[0.0, 0.0]), &p(2.0, &[1.0, 0.0])).unwrap();
        let knots = c.segment_knots(&m, 0, 64).unwrap();
        let kink: Vec<_> = knots.iter().filter(|k| k.point.t == 1.0).collect();
        assert_eq!(kink.len(), 2);
        assert_eq!(kink[0].dx, vec![1.0, 0.0]);
        assert_eq!(kink[1].dx, vec![0.0, 0.0]);
        let g = grw_t();
        let c = warped_causal_connector(&g, &p(1.0, &[0.0, 0.0]), &p(E, &[1.0 - 1e-12, 0.0])).unwrap();
        let knots = c.segment_knots(&g, 0, 64).unwrap();
        assert!(knots.iter().all(|k| k.dx[0] >= 0.0));
        assert!(c.validate(&g).valid);
    }

    #[test]
    fn connect_same_slice_grw() {
        let g = grw_t();
        let (a, b) = (p(1.0, &[0.0, 0.0]), p(1.0, &[2.0, 0.0]));
        let c = connect_piecewise_causal(&g, &a, &b).unwrap();
        assert_eq!(c.segments.len(), 2);
        // ∫_1^{t_a} dt/t = d/2 = 1
        assert!((c.breaks[1].t - E).abs() < 1e-12);
        assert!(c.validate(&g).valid);
    }

    #[test]
    fn zigzag_examples() {
        let m = SpacetimeModel::minkowski(2);
        let (a, b) = (p(1.0, &[0.0, 0.0]), p(1.0, &[1.0, 0.0]));
        let cube = TimeFunction::t_cubed();
        let z1 = zigzag_family(&m, &a, &b, 1, None).unwrap();
        assert!((z1.null_length(&m, &cube).unwrap() - 4.75).abs() < 1e-12);
        for k in [1, 3, 10] {
            let z = zigzag_family(&m, &a, &b, k, None).unwrap();
            assert_eq!(z.segments.len(), 2 * k);
            assert!((z.null_length(&m, &TimeFunction::coordinate_t()).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!(zigzag_family(&m, &a, &b, 1, Some(0.25)).is_err());
        let steep = zigzag_family(&m, &a, &b, 1, Some(1.0)).unwrap();
        assert!(steep.validate(&m).valid);
        let down = zigzag_family(&m, &a, &b, 2, Some(-0.5)).unwrap();
        assert!(down.validate(&m).valid);
        assert_eq!(down.directions()[0], Direction::Past);
    }

    #[test]
    fn hub_zigzag_merges_monotone_runs() {
        let m = SpacetimeModel::minkowski(1);
        let (a, b) = (p(0.0, &[0.0]), p(0.5, &[3.0]));
        let c = hub_zigzag(&m, &a, &b, 0.5, 2, true).unwrap();
        assert!(c.validate(&m).valid);
        let dirs = c.directions();
        assert!(dirs.windows(2).all(|w| w[0] != w[1]));
        assert_eq!(c.end(), &b);
    }

    #[test]
    fn json_round_trip_keeps_validity() {
        let m = SpacetimeModel::minkowski(2);
        let c = connect_piecewise_causal(&m, &p(0.0, &[0.0, 0.0]), &p(0.0, &[4.0, 0.0])).unwrap();
        let json = serde_json::to_string(&c.to_json(&m).unwrap()).unwrap();
        let back = PiecewiseCausalCurve::from_json(serde_json::from_str(&json).unwrap()).unwrap();
        assert!(back.validate(&m).valid);
        let t = TimeFunction::coordinate_t();
        assert_eq!(back.null_length(&m, &t).unwrap(), c.null_length(&m, &t).unwrap());
    }
}
