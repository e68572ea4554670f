//! The null distance engine.
//!
//! `d̂_τ(p, q)` is the infimum of the null length over piecewise causal
//! curves. The engine returns a [`DistanceBracket`]: an exact value where a
//! closed form applies, otherwise the null length of a validated witness
//! curve as the upper end and the best proved lower bound as the lower end.

use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curves::{self, CurveJson, PiecewiseCausalCurve, CAUSAL_TOLERANCE};
use crate::error::{Error, Result};
use crate::models::{norm, sub, CausalRelation, Interval, SpacetimeModel, SpacetimePoint, Warp};
use crate::numeric;
use crate::timefuncs::{self, Phi, TimeFunction, TimeKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    CausalPair,
    Optimized,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistanceBracket {
    pub lower: f64,
    pub upper: f64,
    pub witness: Option<PiecewiseCausalCurve>,
    pub method: Method,
}

/// Serialized form of a bracket.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BracketJson {
    pub lower: f64,
    pub upper: f64,
    pub method: Method,
    pub converged: bool,
    pub witness: Option<CurveJson>,
}

impl DistanceBracket {
    fn exact(value: f64, witness: Option<PiecewiseCausalCurve>, method: Method) -> Self {
        Self { lower: value, upper: value, witness, method }
    }

    pub fn is_exact(&self) -> bool {
        self.lower == self.upper
    }

    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }

    /// `(upper − lower) / max(upper, 1e-12) < acceptance`.
    pub fn converged(&self, acceptance: f64) -> bool {
        self.gap() / self.upper.max(1e-12) < acceptance
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    fn scaled(self, s: f64) -> Self {
        Self { lower: self.lower * s, upper: self.upper * s, ..self }
    }

    pub fn to_json(&self, model: &SpacetimeModel, acceptance: f64) -> Result<BracketJson> {
        Ok(BracketJson {
            lower: self.lower,
            upper: self.upper,
            method: self.method,
            converged: self.converged(acceptance),
            witness: self.witness.as_ref().map(|w| w.to_json(model)).transpose()?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Largest bounce count tried by the zig-zag sweep.
    pub max_bounces: usize,
    /// Sweep stops once doubling the bounce count improves the upper bound by less than this (relative).
    pub refine_tol: f64,
    /// Quadrature tolerance for conformal-time integrals on tabulated warps.
    pub quadrature_tol: f64,
    /// Relative bracket width reported as converged.
    pub acceptance: f64,
    /// Golden-section iterations per hub-level search.
    pub golden_iters: usize,
    /// Skip closed forms (used to cross-check the optimizer).
    pub force_optimize: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_bounces: 1024,
            refine_tol: 1e-7,
            quadrature_tol: 1e-10,
            acceptance: 1e-3,
            golden_iters: 48,
            force_optimize: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_bounces == 0 {
            return Err(Error::InvalidConfig("max_bounces must be at least 1".into()));
        }
        for (name, v) in [("refine_tol", self.refine_tol), ("quadrature_tol", self.quadrature_tol), ("acceptance", self.acceptance)] {
            if !(v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

/// `d̂_t` on Minkowski space: `|Δt|` for causally related points, else `‖Δx‖`.
pub fn minkowski_closed_form(p: &SpacetimePoint, q: &SpacetimePoint) -> f64 {
    let dt = (q.t - p.t).abs();
    let d = norm(&sub(&q.x, &p.x));
    dt.max(d)
}

/// The warped product seen in the time coordinate `τ = φ(t)` with the
/// conformal factor `φ'²` removed: `φ(I) ×_ρ S`, `ρ(τ) = φ'(φ⁻¹τ) f(φ⁻¹τ)`.
/// Null distances for `τ` on the original equal those for the time
/// coordinate on the reduction.
pub fn warped_reduction(model: &SpacetimeModel, tf: &TimeFunction) -> Result<SpacetimeModel> {
    let (interval, warp) = reduced_warp(model, tf)?;
    SpacetimeModel::grw(interval, warp, model.product().fiber)
}

fn reduced_warp(model: &SpacetimeModel, tf: &TimeFunction) -> Result<(Interval, Warp)> {
    let phi = tf
        .as_phi()
        .ok_or_else(|| Error::Unsupported("reduction needs a time function of t alone".into()))?;
    let base = match model {
        SpacetimeModel::Minkowski { .. } | SpacetimeModel::Grw { .. } => model,
        _ => return Err(Error::Unsupported("reduction applies to Minkowski and GRW models".into())),
    };
    let prod = base.product();
    phi.validate_on(&prod.interval)?;
    let interval = phi.image(&prod.interval)?;
    let warp = Warp::Reparam { base: Box::new(prod.warp.clone()), phi }.simplified();
    Ok((interval, warp))
}

/// Proved lower bounds on `d̂_τ(p, q)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBounds {
    /// `|τ(q) − τ(p)|`.
    pub delta_tau: f64,
    /// Slab bound in the reduced time coordinate.
    pub slab: Option<f64>,
    /// Level-crossing bound in the reduced time coordinate.
    pub excursion: Option<f64>,
    /// `d^R / √2` with a rigorous lower estimate of `d^R` (τ = t).
    pub riemannian: Option<f64>,
    /// Local Riemannian bound for cosmological time on a single cone.
    pub cosmological: Option<f64>,
}

impl LowerBounds {
    pub fn best(&self) -> f64 {
        [self.slab, self.excursion, self.riemannian, self.cosmological]
            .into_iter()
            .flatten()
            .fold(self.delta_tau, f64::max)
    }
}

/// Candidate slab half-widths.
fn deltas() -> impl Iterator<Item = f64> {
    (-24..=12).map(|j| 2f64.powi(j))
}

pub fn lower_bounds(model: &SpacetimeModel, tf: &TimeFunction, p: &SpacetimePoint, q: &SpacetimePoint) -> Result<LowerBounds> {
    let base = model.conformal_base();
    let (tp, tq) = (tf.eval_unchecked(base, p)?, tf.eval_unchecked(base, q)?);
    let mut out = LowerBounds { delta_tau: (tq - tp).abs(), slab: None, excursion: None, riemannian: None, cosmological: None };
    let product = match base {
        SpacetimeModel::ConeRestriction { base, .. } => base.as_ref(),
        m => m,
    };
    // Curves in a cone restriction are curves in its base, so base bounds apply.
    if tf.as_phi().is_some() {
        if let Ok((interval, warp)) = reduced_warp(product, tf) {
            out.slab = Some(slab_bound(product, &interval, &warp, tp, tq, p, q)?);
            out.excursion = Some(excursion_bound(product, &interval, &warp, tp, tq, p, q)?);
        }
        if matches!(tf.as_phi(), Some(Phi::Identity)) {
            out.riemannian = Some(riemannian_bound(product, p, q)?);
        }
    }
    if tf.kind == TimeKind::Cosmological {
        out.cosmological = cosmo_local_bound(base, p, q)?;
    }
    Ok(out)
}

/// In the reduced picture (time `τ`, warp `ρ`), a curve that stays in the
/// slab `[τ_lo − δ, τ_hi + δ]` needs down-travel `≥ m₀ (d − ΔU) / 2` to cover
/// fiber distance `d` with conformal rise `ΔU`; one that leaves costs `2δ`
/// extra. Hence `d̂ ≥ Δτ + min{2δ, m₀ (d − ΔU)}`.
fn slab_bound(
    model: &SpacetimeModel,
    interval: &Interval,
    warp: &Warp,
    tp: f64,
    tq: f64,
    p: &SpacetimePoint,
    q: &SpacetimePoint,
) -> Result<f64> {
    let prod = model.product();
    let d = prod.fiber.distance(&p.x, &q.x);
    let du = prod.cone_integral(p.t, q.t)?.abs();
    let excess = d - du;
    let dtau = (tq - tp).abs();
    if excess <= 0.0 {
        return Ok(dtau);
    }
    let (lo, hi) = (tp.min(tq), tp.max(tq));
    let mut best: f64 = 0.0;
    for delta in deltas() {
        let a = (lo - delta).max(interval.lo);
        let b = (hi + delta).min(interval.hi);
        let m0 = warp.min_on(a, b)?;
        if !(m0 >= 0.0) {
            continue;
        }
        // Sampled minima of reparameterized warps are slightly optimistic;
        // shave a relative margin.
        let m0 = if matches!(warp, Warp::Reparam { .. }) { m0 * (1.0 - 1e-6) } else { m0 };
        best = best.max((2.0 * delta).min(m0 * excess));
    }
    Ok(dtau + best)
}

/// Exact level-crossing picture in the reduced coordinate. Let `n(τ)` count
/// the crossings of level `τ`. Then `L̂ = ∫ n dτ` and the fiber distance
/// covered is at most `∫ n / ρ dτ`, with `n ≥ 1` between the endpoint levels
/// and `n ≥ 2` on any excursion beyond them. Extra conformal time is bought
/// at rate `ρ ≥ ρ_min` per unit, so for an excursion down to `m`
///
/// `L̂ ≥ Δτ + 2(τ_lo − m) + ρ_min[m, τ_hi] · max{0, d − ΔU − 2 U(m, τ_lo)}`,
///
/// and symmetrically upwards. One-sided excursions suffice. The minimum over
/// `m` is bounded cell by cell, refining cells that could still win.
fn excursion_bound(
    model: &SpacetimeModel,
    interval: &Interval,
    warp: &Warp,
    tp: f64,
    tq: f64,
    p: &SpacetimePoint,
    q: &SpacetimePoint,
) -> Result<f64> {
    let prod = model.product();
    let d = prod.fiber.distance(&p.x, &q.x);
    let du = prod.cone_integral(p.t, q.t)?.abs();
    let excess = d - du;
    let dtau = (tq - tp).abs();
    if excess <= 0.0 {
        return Ok(dtau);
    }
    let (lo, hi) = (tp.min(tq), tp.max(tq));
    let shave = |m: f64| if matches!(warp, Warp::Reparam { .. }) { m * (1.0 - 1e-6) } else { m };
    let inner = shave(warp.min_on(lo, hi)?).max(0.0);
    let stay = inner * excess;
    if stay == 0.0 {
        return Ok(dtau);
    }
    let mut best = stay;
    for down in [true, false] {
        let (start, end) = if down { (lo, interval.lo) } else { (hi, interval.hi) };
        // Beyond `reach` the travel alone exceeds the stay-put value.
        let reach = (stay / 2.0).min((start - end).abs());
        if !(reach > 0.0) {
            continue;
        }
        let level = |s: f64| if down { start - s } else { start + s };
        // Cell [s0, s1] of excursion depths: travel ≥ 2 s0, gain ≤ 2 U(s1).
        let cell = |s0: f64, s1: f64| -> Result<(f64, f64)> {
            let (a, b) = (level(s0).min(level(s1)), level(s0).max(level(s1)));
            let gain = 2.0 * warp.integral_reciprocal(start.min(level(s1)), start.max(level(s1)))?.abs();
            let rho = shave(warp.min_on(a, b)?).max(0.0).min(inner);
            let rho_far = if down { shave(warp.min_on(level(s1), start)?) } else { shave(warp.min_on(start, level(s1))?) };
            let rho = rho.min(rho_far.max(0.0));
            let lower = 2.0 * s0 + rho * (excess - gain).max(0.0);
            Ok((lower, rho))
        };
        // Exact value of an excursion to depth `s`.
        let value = |s: f64| -> f64 {
            let gain = 2.0 * warp.integral_reciprocal(start.min(level(s)), start.max(level(s))).unwrap_or(0.0).abs();
            let (a, b) = (level(s).min(start), level(s).max(start));
            let rho = warp.min_on(a, b).unwrap_or(f64::INFINITY).min(inner / (1.0 - 1e-6));
            2.0 * s + rho * (excess - gain).max(0.0)
        };
        // Best-first branch and bound over depth cells.
        let mut heap = BinaryHeap::new();
        let n = 64;
        let mut achievable = best;
        for i in 0..n {
            let (s0, s1) = (reach * i as f64 / n as f64, reach * (i + 1) as f64 / n as f64);
            heap.push(Cell(cell(s0, s1)?.0, s0, s1));
            achievable = achievable.min(value(s1));
        }
        let mut budget = 4000;
        let bound = loop {
            let Some(Cell(l, s0, s1)) = heap.pop() else { break achievable };
            if achievable - l <= 1e-9 * achievable.max(1.0) || budget == 0 {
                break l;
            }
            budget -= 1;
            let mid = 0.5 * (s0 + s1);
            if !(mid > s0 && mid < s1) {
                break l;
            }
            achievable = achievable.min(value(mid));
            for (a, b) in [(s0, mid), (mid, s1)] {
                let c = cell(a, b)?.0;
                if c < achievable {
                    heap.push(Cell(c, a, b));
                }
            }
        };
        best = best.min(bound);
    }
    Ok(dtau + best.max(0.0))
}

/// Min-ordered excursion cell: lower bound, depth range.
struct Cell(f64, f64, f64);

impl PartialEq for Cell {
    fn eq(&self, o: &Self) -> bool {
        self.0.total_cmp(&o.0).is_eq()
    }
}

impl Eq for Cell {}

impl PartialOrd for Cell {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Cell {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        o.0.total_cmp(&self.0)
    }
}

/// For `τ = t` on a warped product, `g^R = dt² + f² h`. Curves staying in the
/// slab have length `≥ √(Δt² + m₀² d²)`; leaving it costs `Δt + 2δ`.
fn riemannian_bound(model: &SpacetimeModel, p: &SpacetimePoint, q: &SpacetimePoint) -> Result<f64> {
    let prod = model.product();
    let d = prod.fiber.distance(&p.x, &q.x);
    let dt = (q.t - p.t).abs();
    let (lo, hi) = (p.t.min(q.t), p.t.max(q.t));
    let mut best = dt;
    for delta in deltas() {
        let a = (lo - delta).max(prod.interval.lo);
        let b = (hi + delta).min(prod.interval.hi);
        let m0 = prod.warp.min_on(a, b)?;
        let inside = (dt * dt + m0 * m0 * d * d).sqrt();
        best = best.max(inside.min(dt + 2.0 * delta));
    }
    Ok(best / std::f64::consts::SQRT_2)
}

/// On a single cone `I⁺(v)` of Minkowski space, `g^R = g + 2 dτ_g²` has
/// smallest Euclidean eigenvalue `(t − r)/(t + r)` at `(t, r)` relative to
/// `v`. Within a Euclidean ball of radius `ρ` around `p` this stays above
/// `m_B²`, and leaving the ball costs `g^R`-length `m_B ρ`.
fn cosmo_local_bound(model: &SpacetimeModel, p: &SpacetimePoint, q: &SpacetimePoint) -> Result<Option<f64>> {
    let Some(vertices) = model.cone_vertices() else {
        return Ok(None);
    };
    if vertices.len() != 1 || !model.is_flat() {
        return Ok(None);
    }
    let v = &vertices[0];
    let best = |a: &SpacetimePoint, b: &SpacetimePoint| -> f64 {
        let t0 = a.t - v.t;
        let r0 = norm(&sub(&a.x, &v.x));
        let rho = (t0 - r0) / (2.0 * std::f64::consts::SQRT_2);
        let s = std::f64::consts::SQRT_2 * rho;
        let m2 = (t0 - r0 - s) / (t0 + r0 + s);
        if !(m2 > 0.0) {
            return 0.0;
        }
        let mut e = vec![b.t - a.t];
        e.extend(sub(&b.x, &a.x));
        m2.sqrt() * norm(&e).min(rho) / std::f64::consts::SQRT_2
    };
    Ok(Some(best(p, q).max(best(q, p))))
}

/// Conformal-time picture of a pair along its fiber geodesic.
struct Plan<'a> {
    model: &'a SpacetimeModel,
    tf: &'a TimeFunction,
    p: &'a SpacetimePoint,
    q: &'a SpacetimePoint,
    up: f64,
    uq: f64,
    d: f64,
    range: (f64, f64),
    /// `τ` as a function of conformal time when it depends on `t` only and
    /// no cone membership needs checking.
    phi: Option<Phi>,
}

impl<'a> Plan<'a> {
    fn tau_of_u(&self, phi: &Phi, u: f64) -> f64 {
        match self.model.product().conformal_time_inverse(u) {
            Ok(t) => phi.eval(t),
            Err(_) => f64::NAN,
        }
    }

    /// Null length of the hub zig-zag, or `∞` when infeasible.
    fn cost(&self, hub: f64, k: usize, up: bool) -> f64 {
        let lead = (hub - self.up).abs();
        let tail = (self.uq - hub).abs();
        let rest = self.d - lead - tail;
        let scale = self.d.max(1.0);
        if rest < -1e-12 * scale {
            return f64::INFINITY;
        }
        // Mirrors the snapping in `hub_zigzag`.
        let a = if rest <= 1e-12 * scale { 0.0 } else { rest / (2 * k) as f64 };
        if a > 0.0 && a < curves::MIN_AMPLITUDE * scale {
            return f64::INFINITY;
        }
        let peak = if up { hub + a } else { hub - a };
        if !(peak > self.range.0 && peak < self.range.1 && hub > self.range.0 && hub < self.range.1) {
            return f64::INFINITY;
        }
        let c = match &self.phi {
            Some(phi) => {
                let th = self.tau_of_u(phi, hub);
                let tp = self.tau_of_u(phi, self.up);
                let tq = self.tau_of_u(phi, self.uq);
                let tpk = self.tau_of_u(phi, peak);
                (th - tp).abs() + (tq - th).abs() + 2.0 * k as f64 * (tpk - th).abs()
            }
            None => match curves::hub_zigzag(self.model, self.p, self.q, hub, k, up) {
                Ok(c) if c.breaks.iter().all(|b| self.model.contains(b)) => {
                    c.null_length_unchecked(self.model, self.tf).unwrap_or(f64::INFINITY)
                }
                _ => f64::INFINITY,
            },
        };
        if c.is_nan() {
            f64::INFINITY
        } else {
            c
        }
    }

    /// Best hub level for `k` bounces: grid, then golden section around the best node.
    fn best_hub(&self, k: usize, up: bool, iters: usize) -> (f64, f64) {
        let lo = 0.5 * (self.up + self.uq - self.d);
        let hi = 0.5 * (self.up + self.uq + self.d);
        let n = 33;
        let mut best = (lo, f64::INFINITY);
        let mut best_i: usize = 0;
        for i in 0..n {
            let h = if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 };
            let c = self.cost(h, k, up);
            if c < best.1 {
                best = (h, c);
                best_i = i;
            }
        }
        if !best.1.is_finite() {
            return best;
        }
        let step = (hi - lo) / (n - 1) as f64;
        let a = lo + step * best_i.saturating_sub(1) as f64;
        let b = (lo + step * (best_i + 1) as f64).min(hi);
        let (h, c) = numeric::golden_section(|h| self.cost(h, k, up), a, b, iters);
        if c < best.1 {
            (h, c)
        } else {
            best
        }
    }
}

fn optimize(
    model: &SpacetimeModel,
    tf: &TimeFunction,
    p: &SpacetimePoint,
    q: &SpacetimePoint,
    cfg: &SolverConfig,
) -> Result<DistanceBracket> {
    let prod = model.product();
    let is_cone = model.cone_vertices().is_some();
    let plan = Plan {
        model,
        tf,
        p,
        q,
        up: prod.conformal_time(p.t)?,
        uq: prod.conformal_time(q.t)?,
        d: prod.fiber.distance(&p.x, &q.x),
        range: prod.conformal_range()?,
        phi: if is_cone { None } else { tf.as_phi() },
    };
    let k_cap = if plan.phi.is_some() { cfg.max_bounces } else { cfg.max_bounces.min(1024) };
    let mut best: Option<(f64, usize, f64, bool)> = None;
    let mut k = 1;
    loop {
        let prev = best.map(|b| b.0);
        for up in [true, false] {
            let (h, c) = plan.best_hub(k, up, cfg.golden_iters);
            if c.is_finite() && best.map_or(true, |b| c < b.0) {
                best = Some((c, k, h, up));
            }
        }
        if let (Some(prev), Some(cur)) = (prev, best) {
            if prev - cur.0 < cfg.refine_tol * cur.0.max(1.0) {
                break;
            }
        }
        if k >= k_cap {
            break;
        }
        k = (k * 2).min(k_cap);
    }
    let mut witness = match best {
        Some((_, k, h, up)) => curves::hub_zigzag(model, p, q, h, k, up).ok(),
        None => None,
    };
    if let Some(w) = &witness {
        if !w.validate(model).valid {
            witness = None;
        }
    }
    let witness = match witness {
        Some(w) => w,
        None => curves::connect_piecewise_causal(model, p, q)?,
    };
    let upper = witness.null_length(model, tf)?;
    let lower = lower_bounds(model, tf, p, q)?.best();
    let lower = reconcile(lower, upper)?;
    Ok(DistanceBracket { lower, upper, witness: Some(witness), method: Method::Optimized })
}

/// Rounding can push a tight lower bound a hair above the witness length.
fn reconcile(lower: f64, upper: f64) -> Result<f64> {
    if lower <= upper {
        Ok(lower)
    } else if lower - upper <= 1e-9 * upper.max(1.0) {
        Ok(upper)
    } else {
        Err(Error::NonConvergence(format!("lower bound {lower} exceeds witness length {upper}")))
    }
}

/// Bracket for `d̂_τ(p, q)`.
pub fn null_distance(
    model: &SpacetimeModel,
    tf: &TimeFunction,
    p: &SpacetimePoint,
    q: &SpacetimePoint,
    cfg: &SolverConfig,
) -> Result<DistanceBracket> {
    cfg.validate()?;
    model.check_point(p)?;
    model.check_point(q)?;
    tf.validate_for(model.conformal_base())?;
    if p == q {
        return Ok(DistanceBracket::exact(0.0, Some(PiecewiseCausalCurve::trivial(p.clone())), Method::ClosedForm));
    }
    if let TimeKind::Affine { base, scale, .. } = &tf.kind {
        return Ok(null_distance(model, base, p, q, cfg)?.scaled(*scale));
    }
    if let SpacetimeModel::Conformal { base, .. } = model {
        // Causal curves and null lengths ignore conformal factors.
        return null_distance(base, tf, p, q, cfg);
    }
    let rel = model.causal_relation(p, q)?;
    if rel.is_related() {
        let witness = curves::warped_causal_connector(model, p, q)?;
        let value = (tf.eval_unchecked(model, q)? - tf.eval_unchecked(model, p)?).abs();
        return Ok(DistanceBracket::exact(value, Some(witness), Method::CausalPair));
    }
    if !cfg.force_optimize && model.cone_vertices().is_none() {
        if let Ok((_, warp)) = reduced_warp(model, tf) {
            if let Some(c) = warp.is_constant() {
                let d = model.fiber_distance(&p.x, &q.x);
                let witness = curves::connect_piecewise_causal(model, p, q)?;
                return Ok(DistanceBracket::exact(c * d, Some(witness), Method::ClosedForm));
            }
        }
    }
    optimize(model, tf, p, q, cfg)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum EncodingVerdict {
    Holds,
    Fails,
    Inconclusive { gap: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodingReport {
    pub relation: CausalRelation,
    /// Signed `τ(q) − τ(p)`.
    pub delta_tau: f64,
    pub lower: f64,
    pub upper: f64,
    pub verdict: EncodingVerdict,
}

/// Checks `q ∈ cl I⁺(p) ⟺ d̂_τ(p, q) = τ(q) − τ(p)` at the given resolution.
pub fn check_causality_encoding(
    model: &SpacetimeModel,
    tf: &TimeFunction,
    p: &SpacetimePoint,
    q: &SpacetimePoint,
    cfg: &SolverConfig,
    resolution: f64,
) -> Result<EncodingReport> {
    let relation = model.causal_relation(p, q)?;
    let b = null_distance(model, tf, p, q, cfg)?;
    let delta_tau = tf.eval_unchecked(model.conformal_base(), q)? - tf.eval_unchecked(model.conformal_base(), p)?;
    let slack = 1e-12 * delta_tau.abs().max(1.0);
    let equal = if b.lower - delta_tau > slack {
        Some(false)
    } else if b.upper - delta_tau <= resolution {
        Some(true)
    } else {
        None
    };
    let verdict = match equal {
        Some(e) if e == relation.in_future_closure() => EncodingVerdict::Holds,
        Some(_) => EncodingVerdict::Fails,
        None => EncodingVerdict::Inconclusive { gap: b.gap() },
    };
    Ok(EncodingReport { relation, delta_tau, lower: b.lower, upper: b.upper, verdict })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint {
    pub point: SpacetimePoint,
    /// Bracket midpoint at the accepted point.
    pub r: f64,
}

/// Points at null distance `r` from `center`, by bisection along random
/// rays in `(t, fiber direction)` space.
pub fn sphere_sample(
    model: &SpacetimeModel,
    tf: &TimeFunction,
    center: &SpacetimePoint,
    r: f64,
    count: usize,
    seed: u64,
    cfg: &SolverConfig,
) -> Result<Vec<SpherePoint>> {
    if !(r > 0.0) {
        return Err(Error::InvalidConfig(format!("sphere radius {r} must be positive")));
    }
    model.check_point(center)?;
    let fiber = model.fiber();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        if attempts > 20 * count + 100 {
            return Err(Error::InsufficientSamples(format!("found {} of {count} sphere points", out.len())));
        }
        let theta = rng.gen_range(0.0..std::f64::consts::TAU);
        let w = timefuncs::random_unit(fiber, &center.x, &mut rng);
        let at = |s: f64| {
            SpacetimePoint::new(center.t + s * theta.cos(), timefuncs::step_fiber(fiber, &center.x, &w, s * theta.sin()))
        };
        let dist = |s: f64| -> Option<DistanceBracket> {
            let q = at(s);
            if !model.contains(&q) {
                return None;
            }
            null_distance(model, tf, center, &q, cfg).ok()
        };
        let mut hi = r;
        let mut ok = false;
        for _ in 0..60 {
            match dist(hi) {
                Some(b) if b.midpoint() >= r => {
                    ok = true;
                    break;
                }
                Some(_) => hi *= 2.0,
                None => break,
            }
        }
        if !ok {
            continue;
        }
        let mut lo = 0.0;
        let mut accepted = None;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            let Some(b) = dist(mid) else { break };
            let m = b.midpoint();
            let tol = (b.gap() / 2.0).max(1e-12 * r);
            if (m - r).abs() <= tol {
                accepted = Some(SpherePoint { point: at(mid), r: m });
                break;
            }
            if m < r {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-13 * r.max(1.0) {
                accepted = Some(SpherePoint { point: at(mid), r: m });
                break;
            }
        }
        if let Some(sp) = accepted {
            out.push(sp);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    /// Causal pairs are realized by causal curves; nothing to audit.
    pub skipped: bool,
    pub all_null: bool,
    pub alternating: bool,
    /// `None` when the break count was too large for the pairwise check.
    pub achronal: Option<bool>,
    /// Indices of segments with a timelike tangent: shorter curves exist.
    pub timelike_segments: Vec<usize>,
    pub improvable: bool,
}

/// Checks a witness for the shape of a minimizer: null, alternating, achronal breaks.
pub fn minimality_audit(model: &SpacetimeModel, bracket: &DistanceBracket) -> Result<AuditReport> {
    let w = bracket
        .witness
        .as_ref()
        .ok_or_else(|| Error::Precondition("bracket has no witness".into()))?;
    audit_curve(model, w)
}

pub fn audit_curve(model: &SpacetimeModel, w: &PiecewiseCausalCurve) -> Result<AuditReport> {
    if model.causal_relation(w.start(), w.end())?.is_related() {
        return Ok(AuditReport {
            skipped: true,
            all_null: true,
            alternating: true,
            achronal: None,
            timelike_segments: Vec::new(),
            improvable: false,
        });
    }
    let mut timelike = Vec::new();
    for i in 0..w.segments.len() {
        for k in w.segment_knots(model, i, curves::MIN_KNOTS)? {
            if k.dt == 0.0 && k.dx.iter().all(|c| *c == 0.0) {
                continue;
            }
            let g = model.metric_unchecked(&k.point, k.dt, &k.dx, k.dt, &k.dx) / model.conformal_factor_sq(&k.point);
            let n = model.aux_norm_sq(&k.point, k.dt, &k.dx);
            if g / n < -CAUSAL_TOLERANCE {
                timelike.push(i);
                break;
            }
        }
    }
    let dirs = w.directions();
    let alternating = dirs.windows(2).all(|d| d[0] != d[1]);
    let achronal = if w.breaks.len() <= 200 {
        let mut ok = true;
        'outer: for i in 0..w.breaks.len() {
            for j in i + 1..w.breaks.len() {
                let rel = model.causal_relation(&w.breaks[i], &w.breaks[j])?;
                if matches!(rel, CausalRelation::ChronologicalFuture | CausalRelation::ChronologicalPast) {
                    ok = false;
                    break 'outer;
                }
            }
        }
        Some(ok)
    } else {
        None
    };
    Ok(AuditReport {
        skipped: false,
        all_null: timelike.is_empty(),
        alternating,
        achronal,
        improvable: !timelike.is_empty(),
        timelike_segments: timelike,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Fiber, Interval};
    use std::f64::consts::E;

    fn p(t: f64, x: &[f64]) -> SpacetimePoint {
        SpacetimePoint::new(t, x.to_vec())
    }

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    #[test]
    fn minkowski_examples() {
        let m = SpacetimeModel::minkowski(2);
        let t = TimeFunction::coordinate_t();
        let b = null_distance(&m, &t, &p(0.0, &[0.0, 0.0]), &p(0.0, &[3.0, 4.0]), &cfg()).unwrap();
        assert_eq!((b.lower, b.upper, b.method), (5.0, 5.0, Method::ClosedForm));
        let b = null_distance(&m, &t, &p(1.0, &[0.0, 0.0]), &p(3.0, &[1.0, 1.0]), &cfg()).unwrap();
        assert_eq!((b.lower, b.upper, b.method), (2.0, 2.0, Method::CausalPair));
        assert_eq!(minkowski_closed_form(&p(0.0, &[0.0]), &p(0.0, &[1.0])), 1.0);
        assert_eq!(minkowski_closed_form(&p(0.0, &[0.0]), &p(0.0, &[0.0])), 0.0);
        assert_eq!(minkowski_closed_form(&p(0.0, &[0.0, 0.0]), &p(1.0, &[2.0, 0.0])), 2.0);
        let forced = SolverConfig { force_optimize: true, ..cfg() };
        let b = null_distance(&m, &t, &p(0.0, &[0.0, 0.0]), &p(1.0, &[2.0, 0.0]), &forced).unwrap();
        assert!(b.lower <= 2.0 && b.upper <= 2.0 + 1e-6 && b.upper >= 2.0 - 1e-12);
    }

    #[test]
    fn t_cubed_upper_tends_to_zero() {
        let m = SpacetimeModel::minkowski(2);
        let b = null_distance(&m, &TimeFunction::t_cubed(), &p(0.0, &[0.0, 0.0]), &p(0.0, &[1.0, 0.0]), &cfg()).unwrap();
        assert_eq!(b.lower, 0.0);
        assert!(b.upper < 1e-5, "{}", b.upper);
        assert!(b.witness.unwrap().validate(&m).valid);
    }

    #[test]
    fn reduction_examples() {
        let m = SpacetimeModel::grw(Interval::new(0.0, f64::INFINITY).unwrap(), Warp::UNIT, Fiber::Euclidean { dim: 1 }).unwrap();
        let r = warped_reduction(&m, &TimeFunction::composed(Phi::Power { exponent: 3.0 }).unwrap()).unwrap();
        let warp = r.product().warp.clone();
        for tau in [0.5, 1.0, 8.0] {
            assert!((warp.eval(tau) - 3.0 * f64::cbrt(tau).powi(2)).abs() < 1e-12);
        }
        let same = warped_reduction(&m, &TimeFunction::coordinate_t()).unwrap();
        assert_eq!(same.product().warp, &Warp::UNIT);
        let e = SpacetimeModel::grw(Interval::REAL_LINE, Warp::Exponential { rate: 1.0, coefficient: 1.0 }, Fiber::Euclidean { dim: 1 }).unwrap();
        let r = warped_reduction(&e, &TimeFunction::composed(Phi::Exponential { rate: 1.0 }).unwrap()).unwrap();
        for tau in [0.5, 2.0] {
            assert!((r.product().warp.eval(tau) - tau * tau).abs() < 1e-12);
        }
    }

    #[test]
    fn lower_bound_examples() {
        let m = SpacetimeModel::minkowski(1);
        let t = TimeFunction::coordinate_t();
        let lb = lower_bounds(&m, &t, &p(0.0, &[0.0]), &p(0.0, &[1.0])).unwrap();
        assert!(lb.best() >= 1.0 - 1e-15);
        let lb = lower_bounds(&m, &t, &p(0.0, &[0.0]), &p(2.0, &[1.0])).unwrap();
        assert_eq!(lb.best(), 2.0);
        let lb = lower_bounds(&m, &TimeFunction::t_cubed(), &p(0.0, &[0.0]), &p(0.0, &[1.0])).unwrap();
        assert_eq!(lb.best(), 0.0);
    }

    #[test]
    fn log_time_on_linear_warp_is_closed_form() {
        let m = SpacetimeModel::grw(
            Interval::new(0.0, f64::INFINITY).unwrap(),
            Warp::Power { exponent: 1.0, coefficient: 2.0 },
            Fiber::Euclidean { dim: 1 },
        )
        .unwrap();
        let tf = TimeFunction::composed(Phi::Log).unwrap();
        let b = null_distance(&m, &tf, &p(1.0, &[0.0]), &p(E, &[3.0]), &cfg()).unwrap();
        assert_eq!(b.method, Method::ClosedForm);
        assert!((b.upper - 6.0).abs() < 1e-12);
        let w = b.witness.unwrap();
        assert!((w.null_length(&m, &tf).unwrap() - 6.0).abs() < 1e-9);
    }

    #[test]
    fn encoding_examples() {
        let m = SpacetimeModel::minkowski(2);
        let t = TimeFunction::coordinate_t();
        let r = check_causality_encoding(&m, &t, &p(0.0, &[0.0, 0.0]), &p(2.0, &[1.0, 0.0]), &cfg(), 1e-3).unwrap();
        assert_eq!(r.verdict, EncodingVerdict::Holds);
        let r = check_causality_encoding(&m, &t, &p(0.0, &[0.0, 0.0]), &p(0.5, &[2.0, 0.0]), &cfg(), 1e-3).unwrap();
        assert_eq!(r.verdict, EncodingVerdict::Holds);
        let r = check_causality_encoding(&m, &TimeFunction::t_cubed(), &p(-1.0, &[0.0, 0.0]), &p(1.0, &[5.0, 0.0]), &cfg(), 1e-3)
            .unwrap();
        assert_eq!(r.relation, CausalRelation::Unrelated);
        assert_eq!(r.verdict, EncodingVerdict::Fails);
        assert!((r.upper - 2.0).abs() < 1e-3 && r.lower == 2.0);
    }

    #[test]
    fn sphere_examples() {
        let m = SpacetimeModel::minkowski(2);
        let t = TimeFunction::coordinate_t();
        let o = p(0.0, &[0.0, 0.0]);
        for q in [p(1.0, &[0.3, 0.0]), p(0.2, &[1.0, 0.0]), p(1.0, &[1.0, 0.0])] {
            assert!((null_distance(&m, &t, &o, &q, &cfg()).unwrap().upper - 1.0).abs() < 1e-15);
        }
        let pts = sphere_sample(&m, &t, &o, 1.0, 20, 5, &cfg()).unwrap();
        for sp in pts {
            let c = sp.point.t.abs().max(norm(&sp.point.x));
            assert!((c - 1.0).abs() < 1e-9, "{c}");
        }
    }

    #[test]
    fn audit_examples() {
        let m = SpacetimeModel::minkowski(1);
        let t = TimeFunction::coordinate_t();
        let forced = SolverConfig { force_optimize: true, ..cfg() };
        let b = null_distance(&m, &t, &p(0.0, &[0.0]), &p(0.3, &[2.0]), &forced).unwrap();
        let a = minimality_audit(&m, &b).unwrap();
        assert!(a.all_null && a.alternating && !a.improvable && a.achronal == Some(true), "{a:?}");
        // Steeper than null: a timelike zig-zag.
        let slow = curves::zigzag_family(&m, &p(0.0, &[0.0]), &p(0.0, &[2.0]), 1, Some(2.0)).unwrap();
        let a = audit_curve(&m, &slow).unwrap();
        assert!(a.improvable && a.timelike_segments == vec![0, 1]);
        let c = null_distance(&m, &t, &p(0.0, &[0.0]), &p(2.0, &[1.0]), &cfg()).unwrap();
        assert!(minimality_audit(&m, &c).unwrap().skipped);
    }
}
