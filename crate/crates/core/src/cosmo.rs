//! Cosmological time `τ_g(q) = sup { L_g(α) : α past causal from q }` on
//! unions of timelike cones in Minkowski space.
//!
//! By the reverse triangle inequality the supremum is attained by the
//! straight segment from the best vertex, so
//! `τ_g(q) = max { d_g(v, q) : v vertex, v ≤ q }`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{norm, sub, SpacetimeModel, SpacetimePoint, TangentVector};
use crate::nulldist::{null_distance, DistanceBracket, SolverConfig};
use crate::timefuncs::{self, GradientMode, TimeFunction};

/// Absolute tolerance on generator lengths when detecting ties.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// Rejects models without a closed-form cosmological time.
pub fn check_supported(model: &SpacetimeModel) -> Result<()> {
    match model {
        SpacetimeModel::ConeRestriction { base, .. } if base.is_flat() => Ok(()),
        _ => Err(Error::Unsupported(
            "cosmological time needs a cone restriction of Minkowski space".into(),
        )),
    }
}

fn vertex_lengths<'a>(model: &'a SpacetimeModel, q: &SpacetimePoint) -> Result<Vec<(&'a SpacetimePoint, f64)>> {
    check_supported(model)?;
    let vertices = model.cone_vertices().expect("checked above");
    let mut out = Vec::with_capacity(vertices.len());
    for v in vertices {
        let dt = q.t - v.t;
        let d = norm(&sub(&q.x, &v.x));
        if dt > 0.0 && d <= dt {
            out.push((v, (dt * dt - d * d).max(0.0).sqrt()));
        }
    }
    Ok(out)
}

pub fn cosmological_time(model: &SpacetimeModel, q: &SpacetimePoint) -> Result<f64> {
    let lengths = vertex_lengths(model, q)?;
    Ok(lengths.iter().map(|(_, l)| *l).fold(0.0, f64::max))
}

/// Analytic `(∂_t τ_g, ∂_x τ_g)`; undefined where two vertices tie.
pub fn cosmological_partials(model: &SpacetimeModel, q: &SpacetimePoint) -> Result<(f64, Vec<f64>)> {
    let gens = generators(model, q)?;
    match gens.as_slice() {
        [g] => {
            // ∂τ/∂q = (Δt, -Δx)/τ, i.e. the lowered unit tangent.
            let tau = g.length;
            let dt = (q.t - g.vertex.t) / tau;
            let dx = q.x.iter().zip(&g.vertex.x).map(|(a, b)| -(a - b) / tau).collect();
            Ok((dt, dx))
        }
        [] => Err(Error::GradientUndefined(format!("no generator reaches {q}"))),
        _ => Err(Error::GradientUndefined(format!("{} generators tie at {q}", gens.len()))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub vertex: SpacetimePoint,
    pub endpoint: SpacetimePoint,
    /// Future unit timelike tangent at the endpoint.
    pub tangent: TangentVector,
    pub length: f64,
}

impl Generator {
    /// `γ(s) = v + s · tangent` for `s ∈ (0, length]`.
    pub fn point_at(&self, s: f64) -> SpacetimePoint {
        SpacetimePoint::new(
            self.vertex.t + s * self.tangent.dt,
            self.vertex.x.iter().zip(&self.tangent.dx).map(|(a, b)| a + s * b).collect::<Vec<_>>(),
        )
    }
}

/// Generators realizing `τ_g(q)`; several when vertices tie.
pub fn generators(model: &SpacetimeModel, q: &SpacetimePoint) -> Result<Vec<Generator>> {
    model.check_point(q)?;
    let lengths = vertex_lengths(model, q)?;
    let best = lengths.iter().map(|(_, l)| *l).fold(0.0, f64::max);
    Ok(lengths
        .into_iter()
        .filter(|(_, l)| *l > 0.0 && *l >= best - TIE_TOLERANCE)
        .map(|(v, l)| Generator {
            vertex: v.clone(),
            endpoint: q.clone(),
            tangent: TangentVector::new(
                q.clone(),
                (q.t - v.t) / l,
                q.x.iter().zip(&v.x).map(|(a, b)| (a - b) / l).collect::<Vec<_>>(),
            ),
            length: l,
        })
        .collect())
}

/// Lower estimate of `τ_g(q)` from sampled broken past timelike curves,
/// using only the metric. Deterministic for a fixed seed.
pub fn cosmological_time_oracle(model: &SpacetimeModel, q: &SpacetimePoint, budget: usize, seed: u64) -> Result<f64> {
    check_supported(model)?;
    model.check_point(q)?;
    let vertices = model.cone_vertices().expect("checked above").to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<SpacetimePoint>)> = None;
    let reachable: Vec<&SpacetimePoint> = vertices
        .iter()
        .filter(|v| q.t - v.t > norm(&sub(&q.x, &v.x)))
        .collect();
    if reachable.is_empty() {
        return Ok(0.0);
    }
    for _ in 0..budget {
        let v = reachable[rng.gen_range(0..reachable.len())];
        // Curve end near the vertex, inside I⁺(v).
        let eps = 10f64.powf(rng.gen_range(-6.0..-1.0)) * (q.t - v.t);
        let spread = rng.gen_range(0.0..0.99);
        let dir = timefuncs::random_unit(model.fiber(), &v.x, &mut rng);
        let end = SpacetimePoint::new(v.t + eps, v.x.iter().zip(&dir).map(|(a, d)| a + eps * spread * d).collect::<Vec<_>>());
        let nbreaks = rng.gen_range(0..=3);
        let mut chain = vec![q.clone()];
        for j in 1..=nbreaks {
            let s = j as f64 / (nbreaks + 1) as f64;
            let jitter = rng.gen_range(0.0..0.3) * (q.t - end.t) / (nbreaks + 1) as f64;
            let dir = timefuncs::random_unit(model.fiber(), &q.x, &mut rng);
            let t = q.t + s * (end.t - q.t);
            let x: Vec<f64> = q.x.iter().zip(&end.x).zip(&dir).map(|((a, b), d)| a + s * (b - a) + jitter * d).collect();
            chain.push(SpacetimePoint::new(t, x));
        }
        chain.push(end);
        if let Some(l) = broken_length(model, &chain) {
            if best.as_ref().map_or(true, |(b, _)| l > *b) {
                best = Some((l, chain));
            }
        }
    }
    let Some((mut value, mut chain)) = best else {
        return Ok(0.0);
    };
    // Coordinate descent on the free points (all but q).
    let mut step = 0.1 * (q.t - chain.last().unwrap().t).abs().max(1e-3);
    while step > 1e-12 {
        let mut improved = false;
        for i in 1..chain.len() {
            for c in 0..=chain[i].x.len() {
                for sgn in [1.0, -1.0] {
                    let mut trial = chain.clone();
                    if c == 0 {
                        trial[i].t += sgn * step;
                    } else {
                        trial[i].x[c - 1] += sgn * step;
                    }
                    if let Some(l) = broken_length(model, &trial) {
                        if l > value {
                            value = l;
                            chain = trial;
                            improved = true;
                        }
                    }
                }
            }
        }
        if !improved {
            step /= 2.0;
        }
    }
    Ok(value)
}

/// Lorentzian length of the past timelike polygon `chain[0] → chain[1] → …`,
/// or `None` when it is not past timelike or leaves the model.
fn broken_length(model: &SpacetimeModel, chain: &[SpacetimePoint]) -> Option<f64> {
    let mut total = 0.0;
    for w in chain.windows(2) {
        if !model.contains(&w[1]) {
            return None;
        }
        let dt = w[1].t - w[0].t;
        let dx = sub(&w[1].x, &w[0].x);
        let g = model.metric_unchecked(&w[0], dt, &dx, dt, &dx);
        if !(g < 0.0 && dt < 0.0) {
            return None;
        }
        total += (-g).sqrt();
    }
    Some(total)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientCheckReport {
    pub gradient: TangentVector,
    pub expected: TangentVector,
    pub max_error: f64,
    pub norm_sq: f64,
    pub unit: bool,
}

/// Finite-difference gradient of `τ_g` against `−γ'` and the unit-norm check.
pub fn cosmo_gradient_check(model: &SpacetimeModel, q: &SpacetimePoint, step: f64) -> Result<GradientCheckReport> {
    let gens = generators(model, q)?;
    if gens.len() != 1 {
        return Err(Error::GradientUndefined(format!("{} generators reach {q}", gens.len())));
    }
    let tf = TimeFunction::cosmological().with_gradient(GradientMode::FiniteDifference { step });
    let gradient = tf.gradient(model, q)?;
    let expected = gens[0].tangent.scaled(-1.0);
    let mut max_error = (gradient.dt - expected.dt).abs();
    for (a, b) in gradient.dx.iter().zip(&expected.dx) {
        max_error = max_error.max((a - b).abs());
    }
    let norm_sq = model.metric_unchecked(q, gradient.dt, &gradient.dx, gradient.dt, &gradient.dx);
    Ok(GradientCheckReport { gradient, expected, max_error, norm_sq, unit: (norm_sq + 1.0).abs() <= 1e-6 })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub samples: usize,
    pub finite: bool,
    /// `τ_g(γ(s)) = s` held along every backward generator probe.
    pub decays: bool,
    pub max_decay_error: f64,
    pub regular: bool,
}

/// Finiteness on sampled points and linear decay to zero along generators run backward.
pub fn check_regularity(model: &SpacetimeModel, samples: usize, seed: u64) -> Result<RegularityReport> {
    if let SpacetimeModel::Minkowski { .. } = model {
        // Every point has timelike pasts of unbounded length.
        return Ok(RegularityReport { samples: 0, finite: false, decays: false, max_decay_error: f64::INFINITY, regular: false });
    }
    check_supported(model)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut finite = true;
    let mut max_err: f64 = 0.0;
    for _ in 0..samples {
        let q = timefuncs::sample_point(model, &mut rng)?;
        let tau = cosmological_time(model, &q)?;
        finite &= tau.is_finite();
        for g in generators(model, &q)? {
            for k in 0..12 {
                let s = g.length * 0.5f64.powi(k);
                let p = g.point_at(s);
                if !model.contains(&p) {
                    continue;
                }
                let err = (cosmological_time(model, &p)? - s).abs() / s.max(1e-300);
                max_err = max_err.max(err);
            }
        }
    }
    let decays = max_err <= 1e-9;
    Ok(RegularityReport { samples, finite, decays, max_decay_error: max_err, regular: finite && decays })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AghReport {
    pub pairs: usize,
    pub violations: usize,
    /// Smallest `τ_g(y) − τ_g(x) − d_g(x, y)` observed.
    pub worst_margin: f64,
}

/// Reverse-Lipschitz bound `τ_g(y) − τ_g(x) ≥ d_g(x, y)` on sampled causal pairs.
pub fn agh_bound_check(model: &SpacetimeModel, pairs: usize, seed: u64) -> Result<AghReport> {
    check_supported(model)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = AghReport { pairs, violations: 0, worst_margin: f64::INFINITY };
    for _ in 0..pairs {
        let x = timefuncs::sample_point(model, &mut rng)?;
        let dt = rng.gen_range(0.0..1.5);
        let r = if rng.gen_bool(0.2) { dt } else { rng.gen_range(0.0..=dt) };
        let dir = timefuncs::random_unit(model.fiber(), &x.x, &mut rng);
        let y = SpacetimePoint::new(x.t + dt, x.x.iter().zip(&dir).map(|(a, d)| a + r * d).collect::<Vec<_>>());
        if !model.contains(&y) {
            continue;
        }
        let margin = cosmological_time(model, &y)? - cosmological_time(model, &x)? - model.lorentz_distance(&x, &y)?;
        report.worst_margin = report.worst_margin.min(margin);
        if margin < -1e-12 {
            report.violations += 1;
        }
    }
    Ok(report)
}

/// Null distance for `τ_g`, together with an AGH check on sampled pairs.
pub fn cosmo_null_distance(
    model: &SpacetimeModel,
    p: &SpacetimePoint,
    q: &SpacetimePoint,
    cfg: &SolverConfig,
    agh_pairs: usize,
    seed: u64,
) -> Result<(DistanceBracket, AghReport)> {
    check_supported(model)?;
    let bracket = null_distance(model, &TimeFunction::cosmological(), p, q, cfg)?;
    let agh = agh_bound_check(model, agh_pairs, seed)?;
    Ok((bracket, agh))
}
