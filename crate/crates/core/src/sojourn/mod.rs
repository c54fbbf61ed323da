//! Cone sojourn times of the interpolated path
//! `W_n(s) = Φ_k + (ns − k)·Φ(T^k x)` for `s ∈ [k/n, (k+1)/n)`.
//!
//! `τ_{n,C} = ∫_0^1 1_C(W_n(s)) ds` is computed exactly per segment (see
//! [`segment_inside_length`]); cones are homogeneous, so `W_n` and
//! `W_n/√n` give the same value.

mod cone;
mod crossing;

use serde::Serialize;
use thiserror::Error;

use crate::engine::CocycleTrace;
use crate::vector::Vector;

pub use cone::{Cone, ConeParseError};
pub use crossing::{
    segment_ball_length, segment_inside_length, segment_is_degenerate, DEGENERATE_TOLERANCE,
};

#[derive(Debug, Error, PartialEq)]
pub enum SojournError {
    #[error("segment {segment} lies on the cone boundary")]
    DegenerateSegment { segment: usize },
    #[error("cone has dimension {cone}, trace has dimension {trace}")]
    Dimension { cone: usize, trace: usize },
    #[error("n={n} outside 1..={len}")]
    OutOfRange { n: usize, len: usize },
}

fn check(trace: &CocycleTrace, n: usize, cone: Option<&Cone>) -> Result<(), SojournError> {
    if n == 0 || n > trace.len() {
        return Err(SojournError::OutOfRange {
            n,
            len: trace.len(),
        });
    }
    match cone {
        Some(c) if c.dim() != trace.dim() => Err(SojournError::Dimension {
            cone: c.dim(),
            trace: trace.dim(),
        }),
        _ => Ok(()),
    }
}

/// `W_n(x, s)` for `s ∈ [0, 1]`.
pub fn interpolated_value(trace: &CocycleTrace, n: usize, s: f64) -> Vector {
    assert!((0.0..=1.0).contains(&s), "s must lie in [0, 1]");
    assert!(n >= 1 && n <= trace.len(), "n out of range");
    let t = n as f64 * s;
    let k = (t.floor() as usize).min(n);
    if k == n {
        return trace.value(n);
    }
    let a = trace.value(k);
    a + (trace.value(k + 1) - a) * (t - k as f64)
}

/// Occupation `∫ 1_C` of the polygonal path through `points`, normalized by
/// the number of segments.
pub fn path_occupation(points: &[Vector], cone: &Cone) -> f64 {
    let segments = points.len() - 1;
    points
        .windows(2)
        .map(|w| segment_inside_length(cone, &w[0], &w[1]))
        .sum::<f64>()
        / segments as f64
}

/// `τ_{n,C}`, with boundary segments counted as outside.
pub fn tau(trace: &CocycleTrace, n: usize, cone: &Cone) -> Result<f64, SojournError> {
    check(trace, n, Some(cone))?;
    let mut sum = 0.0;
    for k in 0..n {
        sum += segment_inside_length(cone, &trace.value(k), &trace.value(k + 1));
    }
    Ok(sum / n as f64)
}

/// Like [`tau`], but reports a segment lying on the boundary instead of
/// resolving it by convention.
pub fn tau_checked(trace: &CocycleTrace, n: usize, cone: &Cone) -> Result<f64, SojournError> {
    check(trace, n, Some(cone))?;
    let mut sum = 0.0;
    for k in 0..n {
        let (a, b) = (trace.value(k), trace.value(k + 1));
        if segment_is_degenerate(cone, &a, &b) {
            return Err(SojournError::DegenerateSegment { segment: k });
        }
        sum += segment_inside_length(cone, &a, &b);
    }
    Ok(sum / n as f64)
}

/// `(1/n)·#{1 <= k <= n : Φ_k ∈ C}`.
pub fn tau_discrete(trace: &CocycleTrace, n: usize, cone: &Cone) -> Result<f64, SojournError> {
    check(trace, n, Some(cone))?;
    let inside = (1..=n).filter(|&k| cone.contains(&trace.value(k))).count();
    Ok(inside as f64 / n as f64)
}

/// `∫_0^1 1_{B(0,M)}(W_n(s)) ds`.
pub fn ball_visit_frequency(
    trace: &CocycleTrace,
    n: usize,
    radius: f64,
) -> Result<f64, SojournError> {
    check(trace, n, None)?;
    assert!(radius > 0.0, "radius must be positive");
    let mut sum = 0.0;
    for k in 0..n {
        sum += segment_ball_length(radius, &trace.value(k), &trace.value(k + 1));
    }
    Ok(sum / n as f64)
}

/// `1, 2, 4, ..., 2^j <= len`, followed by `len` itself.
pub fn dyadic_grid(len: usize) -> Vec<usize> {
    let mut grid: Vec<usize> = std::iter::successors(Some(1usize), |&n| n.checked_mul(2))
        .take_while(|&n| n <= len)
        .collect();
    if grid.last() != Some(&len) && len > 0 {
        grid.push(len);
    }
    grid
}

#[derive(Clone, Debug, Serialize)]
pub struct SojournSeries {
    pub cone: Cone,
    pub grid: Vec<usize>,
    pub tau: Vec<f64>,
    pub tau_discrete: Vec<f64>,
    pub ball_radius: Option<f64>,
    pub ball_frequency: Vec<f64>,
    pub running_max: Vec<f64>,
    pub running_min: Vec<f64>,
}

impl SojournSeries {
    /// The largest `τ` on the grid: the limsup surrogate.
    pub fn max(&self) -> f64 {
        self.running_max.last().copied().unwrap_or(f64::NAN)
    }

    /// The smallest `τ` on the grid: the liminf surrogate.
    pub fn min(&self) -> f64 {
        self.running_min.last().copied().unwrap_or(f64::NAN)
    }
}

/// `τ_{n,C}` (and its discrete counterpart) at every `n` of the grid, from a
/// single pass over the segments.
pub fn sojourn_series(
    trace: &CocycleTrace,
    cone: &Cone,
    grid: &[usize],
    ball_radius: Option<f64>,
) -> Result<SojournSeries, SojournError> {
    let top = grid.iter().copied().max().unwrap_or(0);
    if let Some(&bad) = grid.iter().find(|&&n| n == 0 || n > trace.len()) {
        return Err(SojournError::OutOfRange {
            n: bad,
            len: trace.len(),
        });
    }
    if top > 0 {
        check(trace, top, Some(cone))?;
    }
    let mut order: Vec<usize> = grid.to_vec();
    order.sort_unstable();
    let (mut cont, mut disc, mut ball) = (0.0f64, 0usize, 0.0f64);
    let mut at = std::collections::HashMap::with_capacity(order.len());
    let mut next = 0;
    let mut prev = trace.value(0);
    for k in 1..=top {
        let cur = trace.value(k);
        cont += segment_inside_length(cone, &prev, &cur);
        disc += usize::from(cone.contains(&cur));
        if let Some(r) = ball_radius {
            ball += segment_ball_length(r, &prev, &cur);
        }
        while next < order.len() && order[next] == k {
            let n = k as f64;
            at.insert(k, (cont / n, disc as f64 / n, ball / n));
            next += 1;
        }
        prev = cur;
    }
    let mut series = SojournSeries {
        cone: cone.clone(),
        grid: grid.to_vec(),
        tau: Vec::with_capacity(grid.len()),
        tau_discrete: Vec::with_capacity(grid.len()),
        ball_radius,
        ball_frequency: Vec::new(),
        running_max: Vec::with_capacity(grid.len()),
        running_min: Vec::with_capacity(grid.len()),
    };
    let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
    for n in grid {
        let (t, d, b) = at[n];
        hi = hi.max(t);
        lo = lo.min(t);
        series.tau.push(t);
        series.tau_discrete.push(d);
        if ball_radius.is_some() {
            series.ball_frequency.push(b);
        }
        series.running_max.push(hi);
        series.running_min.push(lo);
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driver::{IncrementLaw, SystemSpec};
    use crate::engine::{Cocycle, Observable};
    use crate::exec::{map_indexed, Execution};

    /// Trace through `Φ_1, Φ_2, ...` (`Φ_0 = 0` is implicit).
    fn path(points: &[[f64; 2]]) -> CocycleTrace {
        let sys = SystemSpec::doubling(0);
        let values: Vec<Vector> = points.iter().map(|p| Vector::from_slice(p)).collect();
        CocycleTrace::from_values(sys.sample_initial(0), 2, &values)
    }

    fn walk(seed: u64, len: usize) -> CocycleTrace {
        let sys = SystemSpec::iid_shift(IncrementLaw::Rademacher, 2, 17).unwrap();
        let c = Cocycle::new(sys, Observable::parse("iid(d=2)").unwrap()).unwrap();
        c.sums(&sys.sample_initial(seed), len)
    }

    fn quadrature(trace: &CocycleTrace, n: usize, cone: &Cone, points: usize) -> f64 {
        (0..points)
            .filter(|&i| {
                cone.contains(&interpolated_value(
                    trace,
                    n,
                    (i as f64 + 0.5) / points as f64,
                ))
            })
            .count() as f64
            / points as f64
    }

    #[test]
    fn interpolation_landmarks() {
        let t = walk(0, 10);
        assert!(interpolated_value(&t, 10, 0.0).is_zero());
        assert_eq!(interpolated_value(&t, 10, 1.0), t.value(10));
        let mid = interpolated_value(&t, 10, 3.5 / 10.0);
        assert_eq!(mid, (t.value(3) + t.value(4)) * 0.5);
        assert_eq!(interpolated_value(&t, 5, 0.4), t.value(2));
    }

    #[test]
    fn two_segment_example() {
        let t = path(&[[1.0, 1.0], [1.0, -1.0]]);
        let up = Cone::half_space(&[0.0, 1.0]);
        assert_eq!(tau(&t, 2, &up), Ok(0.75));
        assert_eq!(tau_discrete(&t, 2, &up), Ok(0.5));
    }

    #[test]
    fn inside_and_outside() {
        let t = path(&[[1.0, 0.5], [2.0, 1.5], [3.0, 2.0]]);
        let up = Cone::half_space(&[0.0, 1.0]);
        assert_eq!(tau(&t, 3, &up), Ok(1.0));
        assert_eq!(tau_discrete(&t, 3, &up), Ok(1.0));
        assert_eq!(tau_discrete(&t, 3, &up.clone().complement()), Ok(0.0));
        assert_eq!(tau(&t, 3, &Cone::Full { dim: 2 }), Ok(1.0));
    }

    #[test]
    fn boundary_segments() {
        let t = path(&[[1.0, 0.0], [1.0, 1.0]]);
        let up = Cone::half_space(&[0.0, 1.0]);
        assert_eq!(tau(&t, 2, &up), Ok(0.5));
        assert_eq!(
            tau_checked(&t, 2, &up),
            Err(SojournError::DegenerateSegment { segment: 0 })
        );
        assert_eq!(
            tau(&t, 3, &up),
            Err(SojournError::OutOfRange { n: 3, len: 2 })
        );
        let ray = Cone::MinusRay {
            direction: Vector::from_slice(&[1.0, 0.0]),
        };
        assert_eq!(tau(&t, 2, &ray), Ok(0.5));
    }

    #[test]
    fn exact_matches_quadrature() {
        let cones = [
            Cone::half_space(&[0.3, 1.0]),
            Cone::orthant(&[true, false]),
            Cone::angular(&[1.0, 1.0], 0.8),
            Cone::angular(&[-1.0, 0.2], 1.6),
        ];
        for seed in 0..100 {
            let t = walk(seed, 40);
            let cone = &cones[seed as usize % cones.len()];
            let exact = tau(&t, 40, cone).unwrap();
            let approx = quadrature(&t, 40, cone, 100_000);
            assert!(
                (exact - approx).abs() < 1e-3,
                "seed {seed} {cone}: {exact} vs {approx}"
            );
        }
    }

    #[test]
    fn complement_additivity() {
        let cones = [
            Cone::half_space(&[1.0, 2.0]),
            Cone::orthant(&[false, false]),
            Cone::angular(&[0.0, 1.0], 0.4),
        ];
        for seed in 0..20 {
            let t = walk(seed, 1000);
            for c in &cones {
                let sum =
                    tau(&t, 1000, c).unwrap() + tau(&t, 1000, &c.clone().complement()).unwrap();
                assert!((sum - 1.0).abs() < 1e-9, "{c}: {sum}");
            }
        }
    }

    #[test]
    fn homogeneity() {
        let t = walk(3, 2000);
        let values: Vec<Vector> = t.values().skip(1).collect();
        let cones = [
            Cone::half_space(&[1.0, -0.7]),
            Cone::angular(&[1.0, 0.0], 0.9),
        ];
        for c in &cones {
            let base = tau(&t, 2000, c).unwrap();
            for scale in [0.25, 8.0, 1.0 / 1024.0] {
                let scaled: Vec<Vector> = values.iter().map(|v| *v * scale).collect();
                let st = CocycleTrace::from_values(*t.start(), 2, &scaled);
                assert_eq!(tau(&st, 2000, c).unwrap(), base);
            }
            let root_n = 1.0 / 2000f64.sqrt();
            let scaled: Vec<Vector> = values.iter().map(|v| *v * root_n).collect();
            let st = CocycleTrace::from_values(*t.start(), 2, &scaled);
            assert!((tau(&st, 2000, c).unwrap() - base).abs() < 1e-12);
        }
    }

    #[test]
    fn ball_frequency_extremes() {
        let zero = path(&[[0.0, 0.0]; 4]);
        assert_eq!(ball_visit_frequency(&zero, 4, 1.0), Ok(1.0));
        // only the first segment, leaving the origin, meets the ball
        let far = path(&[[20.0, 0.0], [21.0, 0.0], [22.0, 1.0]]);
        assert_eq!(ball_visit_frequency(&far, 3, 5.0), Ok(0.25 / 3.0));
    }

    #[test]
    fn discrete_and_interpolated_agree() {
        let up = Cone::half_space(&[0.0, 1.0]);
        for seed in 0..50 {
            let t = walk(seed, 10_000);
            let d = (tau(&t, 10_000, &up).unwrap() - tau_discrete(&t, 10_000, &up).unwrap()).abs();
            assert!(d <= 0.02, "seed {seed}: {d}");
        }
    }

    #[test]
    fn series_matches_pointwise() {
        let t = walk(9, 5000);
        let cone = Cone::angular(&[0.0, 1.0], 1.0);
        let grid = dyadic_grid(5000);
        assert_eq!(grid.last(), Some(&5000));
        let s = sojourn_series(&t, &cone, &grid, Some(10.0)).unwrap();
        for (i, &n) in grid.iter().enumerate() {
            assert!((s.tau[i] - tau(&t, n, &cone).unwrap()).abs() < 1e-12);
            assert_eq!(s.tau_discrete[i], tau_discrete(&t, n, &cone).unwrap());
            assert!(
                (s.ball_frequency[i] - ball_visit_frequency(&t, n, 10.0).unwrap()).abs() < 1e-12
            );
            assert!(s.running_min[i] <= s.tau[i] && s.tau[i] <= s.running_max[i]);
            assert!((0.0..=1.0).contains(&s.tau[i]));
        }
        let minus_ray = Cone::MinusRay {
            direction: Vector::from_slice(&[1.0, 0.3]),
        };
        let s = sojourn_series(&t, &minus_ray, &grid, None).unwrap();
        assert!(s.tau.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn main_theorem_surrogates() {
        let up = Cone::half_space(&[0.0, 1.0]);
        let grid = dyadic_grid(100_000);
        let res = map_indexed(Execution::Parallel, 100, |i| {
            let t = walk(1000 + i as u64, 100_000);
            let s = sojourn_series(&t, &up, &grid, None).unwrap();
            (s.max() >= 0.9, s.min() <= 0.1)
        });
        let hi = res.iter().filter(|r| r.0).count();
        let lo = res.iter().filter(|r| r.1).count();
        assert!(hi >= 70 && lo >= 70, "{hi} {lo}");
    }

    #[test]
    fn shift_stability_bound() {
        // D = sup‖Φ(Tx) − Φ(x)‖ <= 2·‖φ‖_∞; outside B(0, M) the directions of
        // W_n(x, s) and W_n(Tx, s) differ by at most 2D/M
        let sys = SystemSpec::iid_shift(IncrementLaw::Rademacher, 2, 21).unwrap();
        let c = Cocycle::new(sys, Observable::parse("iid(d=2)").unwrap()).unwrap();
        let d = 2.0 * 2f64.sqrt();
        let (axis, a, t, eps) = ([1.0, 0.0], 0.5, 1.0, 0.2);
        let radius = 2.0 * d / (a * eps);
        let inner = Cone::angular(&axis, a * t);
        let outer = Cone::angular(&axis, a * (t + eps));
        for seed in 0..30 {
            let x = sys.sample_initial(seed);
            let tx = sys.step(&x);
            let (tr, trx) = (c.sums(&x, 20_000), c.sums(&tx, 20_000));
            for n in [1000, 5000, 20_000] {
                let lhs = tau(&tr, n, &inner).unwrap() - tau(&trx, n, &outer).unwrap();
                let rhs = ball_visit_frequency(&tr, n, radius).unwrap();
                assert!(lhs <= rhs + 1e-9, "seed {seed} n {n}: {lhs} > {rhs}");
            }
        }
    }
}
