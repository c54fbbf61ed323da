//! Filling-scheme decomposition of a scalar cocycle through the min-process
//! `m_n(x) = min_{1<=k<=n} φ_k(x)`, together with the oscillation
//! trichotomy and Kesten-rate estimates.
//!
//! The recursion `m_{n+1}(x) = φ(x) − m_n⁻(Tx)` gives the identity
//! `φ(x) = m_N⁻(Tx) − m_{N+1}⁻(x) + m_{N+1}⁺(x)` at every finite `N`; its
//! residual measures orbit and rounding consistency only.

use serde::Serialize;
use thiserror::Error;

use crate::directions::dyadic_windows;
use crate::driver::SystemState;
use crate::engine::Cocycle;
use crate::exec::{map_indexed, trajectory_seed, Execution};

/// Tolerance between the recursion and the direct running minimum.
pub const MISMATCH_TOLERANCE: f64 = 1e-10;

/// Up to this length the recursion is checked at every `n`; beyond it, on
/// the dyadic grid and at `N`.
pub const FULL_CHECK_LEN: usize = 4096;

#[derive(Debug, Error, PartialEq)]
pub enum FillingError {
    #[error("observable must be scalar, got dimension {0}")]
    NotScalar(usize),
    #[error("min-process needs N >= 1")]
    EmptyOrbit,
    #[error("recursion and direct minimum differ at n={n}: {recursion} vs {direct}")]
    Mismatch {
        n: usize,
        recursion: f64,
        direct: f64,
    },
}

#[inline]
fn plus(m: f64) -> f64 {
    m.max(0.0)
}

#[inline]
fn minus(m: f64) -> f64 {
    (-m).max(0.0)
}

/// `m_n` along an orbit, at the base point and at its image.
#[derive(Clone, Debug)]
pub struct MinProcess {
    x: SystemState,
    len: usize,
    /// `m_1(x), ..., m_{N+1}(x)`.
    at_x: Vec<f64>,
    /// `m_1(Tx), ..., m_N(Tx)`.
    at_tx: Vec<f64>,
    /// Indices at which the recursion was checked against the direct minimum.
    checked: Vec<usize>,
    /// Largest recursion-vs-direct difference over the checked indices.
    discrepancy: f64,
}

impl MinProcess {
    pub fn start(&self) -> &SystemState {
        &self.x
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `m_n(x)` for `1 <= n <= N + 1`.
    pub fn m(&self, n: usize) -> f64 {
        self.at_x[n - 1]
    }

    pub fn m_plus(&self, n: usize) -> f64 {
        plus(self.m(n))
    }

    pub fn m_minus(&self, n: usize) -> f64 {
        minus(self.m(n))
    }

    /// `m_n(Tx)` for `1 <= n <= N`.
    pub fn m_image(&self, n: usize) -> f64 {
        self.at_tx[n - 1]
    }

    pub fn values(&self) -> &[f64] {
        &self.at_x[..self.len]
    }

    pub fn checked_indices(&self) -> &[usize] {
        &self.checked
    }

    pub fn discrepancy(&self) -> f64 {
        self.discrepancy
    }

    /// `|φ(x) − [m_n⁻(Tx) − m_{n+1}⁻(x) + m_{n+1}⁺(x)]|` for `1 <= n <= N`.
    pub fn residual_at(&self, phi_x: f64, n: usize) -> f64 {
        (phi_x - (minus(self.m_image(n)) - self.m_minus(n + 1) + self.m_plus(n + 1))).abs()
    }

    /// [`MinProcess::residual_at`] for `n = N`.
    pub fn residual(&self, phi_x: f64) -> f64 {
        self.residual_at(phi_x, self.len)
    }

    /// Approximations of `h⁺ = m_∞⁻` and `g⁺ = m_∞⁺` at `x` by `m_N`.
    pub fn split(&self) -> (f64, f64) {
        (self.m_minus(self.len), self.m_plus(self.len))
    }
}

fn scalar(cocycle: &Cocycle) -> Result<(), FillingError> {
    match cocycle.dim() {
        1 => Ok(()),
        d => Err(FillingError::NotScalar(d)),
    }
}

/// `φ(x_0), ..., φ(x_{len-1})` along the orbit of `x`.
fn orbit_values(cocycle: &Cocycle, x: &SystemState, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut s = *x;
    for _ in 0..len {
        out.push(cocycle.eval(&s)[0]);
        s = cocycle.system.step(&s);
    }
    out
}

/// Running minimum of the compensated partial sums of `phi`.
fn running_min(phi: &[f64]) -> Vec<f64> {
    let (mut sum, mut comp, mut m) = (0.0f64, 0.0f64, f64::INFINITY);
    phi.iter()
        .map(|&v| {
            let t = sum + v;
            comp += if sum.abs() >= v.abs() {
                (sum - t) + v
            } else {
                (v - t) + sum
            };
            sum = t;
            m = m.min(sum + comp);
            m
        })
        .collect()
}

/// `m_n(x_0)` by unrolling the recursion down the orbit:
/// `m_1(x_{n-1}) = φ(x_{n-1})`, `m_{k+1}(x_j) = φ(x_j) − m_k⁻(x_{j+1})`.
fn recursion_at(phi: &[f64], n: usize) -> f64 {
    // a is either reset to φ(x_j) or extended by it, so it is a partial sum
    // of consecutive values and can be compensated
    let (mut a, mut comp) = (phi[n - 1], 0.0f64);
    for j in (0..n - 1).rev() {
        let v = phi[j];
        if a + comp >= 0.0 {
            a = v;
            comp = 0.0;
        } else {
            let t = a + v;
            comp += if a.abs() >= v.abs() {
                (a - t) + v
            } else {
                (v - t) + a
            };
            a = t;
        }
    }
    a + comp
}

fn check_indices(len: usize) -> Vec<usize> {
    if len <= FULL_CHECK_LEN {
        return (1..=len).collect();
    }
    let mut idx: Vec<usize> = dyadic_windows(len).into_iter().map(|(s, _)| s).collect();
    if idx.last() != Some(&len) {
        idx.push(len);
    }
    idx
}

/// Min-process over `N` steps, computed from running minima of the partial
/// sums and checked against the recursion.
pub fn min_process(
    cocycle: &Cocycle,
    x: &SystemState,
    len: usize,
) -> Result<MinProcess, FillingError> {
    scalar(cocycle)?;
    if len == 0 {
        return Err(FillingError::EmptyOrbit);
    }
    let phi = orbit_values(cocycle, x, len + 1);
    let at_x = running_min(&phi);
    let at_tx = running_min(&phi[1..]);
    let checked = check_indices(len + 1);
    let mut discrepancy = 0.0f64;
    for &n in &checked {
        let recursion = recursion_at(&phi, n);
        let direct = at_x[n - 1];
        discrepancy = discrepancy.max((recursion - direct).abs());
        if (recursion - direct).abs() > MISMATCH_TOLERANCE {
            return Err(FillingError::Mismatch {
                n,
                recursion,
                direct,
            });
        }
    }
    Ok(MinProcess {
        x: *x,
        len,
        at_x,
        at_tx,
        checked,
        discrepancy,
    })
}

/// Residual of the finite filling-scheme identity at `x`.
pub fn decomposition_residual(
    cocycle: &Cocycle,
    x: &SystemState,
    len: usize,
) -> Result<f64, FillingError> {
    let mp = min_process(cocycle, x, len)?;
    Ok(mp.residual(cocycle.eval(x)[0]))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Oscillation {
    Oscillates,
    ToPlusInfinity,
    ToMinusInfinity,
    BoundedOrInconclusive,
}

/// Parameters of the per-trace oscillation heuristic.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct OscillationRule {
    /// Number of trailing dyadic windows whose minima (maxima) must be
    /// strictly increasing (decreasing) for a divergence verdict.
    pub monotone_windows: usize,
    /// Required growth of the running sup and of the running `−inf` between
    /// `n = √N` and `n = N` for an oscillation verdict.
    pub growth: f64,
}

impl Default for OscillationRule {
    fn default() -> Self {
        OscillationRule {
            monotone_windows: 4,
            growth: 1.25,
        }
    }
}

/// Label for one scalar path `φ_1, ..., φ_N` (`values[n-1] = φ_n`).
pub fn oscillation_of(values: &[f64], rule: &OscillationRule) -> Oscillation {
    let len = values.len();
    let windows = dyadic_windows(len);
    if windows.len() < rule.monotone_windows.max(2) {
        return Oscillation::BoundedOrInconclusive;
    }
    let extremes: Vec<(f64, f64)> = windows
        .iter()
        .map(|&(s, e)| {
            values[s - 1..e - 1]
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                })
        })
        .collect();
    let tail = &extremes[extremes.len() - rule.monotone_windows..];
    let last = extremes[extremes.len() - 1];
    if last.0 > 0.0 && tail.windows(2).all(|w| w[1].0 > w[0].0) {
        return Oscillation::ToPlusInfinity;
    }
    if last.1 < 0.0 && tail.windows(2).all(|w| w[1].1 < w[0].1) {
        return Oscillation::ToMinusInfinity;
    }
    let early = ((len as f64).sqrt() as usize).max(1);
    let sup_early = values[..early].iter().copied().fold(0.0f64, f64::max);
    let inf_early = values[..early].iter().copied().fold(0.0f64, f64::min);
    let sup = values.iter().copied().fold(0.0f64, f64::max);
    let inf = values.iter().copied().fold(0.0f64, f64::min);
    let grows = |late: f64, early: f64| late > 0.0 && late >= rule.growth * early;
    if grows(sup, sup_early) && grows(-inf, -inf_early) {
        Oscillation::Oscillates
    } else {
        Oscillation::BoundedOrInconclusive
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OscillationReport {
    pub verdict: Oscillation,
    pub seeds: usize,
    pub len: usize,
    pub rule: OscillationRule,
    pub oscillates: f64,
    pub to_plus_infinity: f64,
    pub to_minus_infinity: f64,
    pub bounded_or_inconclusive: f64,
}

impl OscillationReport {
    pub fn from_labels(labels: &[Oscillation], len: usize, rule: OscillationRule) -> Self {
        let frac = |o: Oscillation| {
            labels.iter().filter(|&&l| l == o).count() as f64 / labels.len() as f64
        };
        let counts = [
            (Oscillation::Oscillates, frac(Oscillation::Oscillates)),
            (
                Oscillation::ToPlusInfinity,
                frac(Oscillation::ToPlusInfinity),
            ),
            (
                Oscillation::ToMinusInfinity,
                frac(Oscillation::ToMinusInfinity),
            ),
            (
                Oscillation::BoundedOrInconclusive,
                frac(Oscillation::BoundedOrInconclusive),
            ),
        ];
        // a class needs a strict majority; otherwise the label is inconclusive
        let verdict = counts
            .iter()
            .find(|(_, f)| *f > 0.5)
            .map_or(Oscillation::BoundedOrInconclusive, |(o, _)| *o);
        OscillationReport {
            verdict,
            seeds: labels.len(),
            len,
            rule,
            oscillates: counts[0].1,
            to_plus_infinity: counts[1].1,
            to_minus_infinity: counts[2].1,
            bounded_or_inconclusive: counts[3].1,
        }
    }
}

fn scalar_path(cocycle: &Cocycle, x: &SystemState, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    cocycle.for_each_sum(x, len, |n, _, v| {
        if n > 0 {
            out.push(v[0]);
        }
    });
    out
}

/// Oscillation trichotomy over `seeds` μ-distributed starting points.
pub fn classify_oscillation(
    cocycle: &Cocycle,
    seeds: usize,
    len: usize,
    global_seed: u64,
    rule: OscillationRule,
    exec: Execution,
) -> Result<OscillationReport, FillingError> {
    scalar(cocycle)?;
    let labels = map_indexed(exec, seeds, |i| {
        let x = cocycle
            .system
            .sample_initial(trajectory_seed(global_seed, i as u64));
        oscillation_of(&scalar_path(cocycle, &x, len), &rule)
    });
    Ok(OscillationReport::from_labels(&labels, len, rule))
}

/// Number of trailing dyadic windows used by [`kesten_rate_of`].
pub const KESTEN_TAIL_WINDOWS: usize = 4;

/// `min φ_n / n` over the trailing dyadic windows of one path.
pub fn kesten_rate_of(values: &[f64]) -> f64 {
    let windows = dyadic_windows(values.len());
    let from = windows.len().saturating_sub(KESTEN_TAIL_WINDOWS);
    windows[from..]
        .iter()
        .flat_map(|&(s, e)| s..e)
        .map(|n| values[n - 1] / n as f64)
        .fold(f64::INFINITY, f64::min)
}

/// Per-seed lower-rate estimates `min_{n in tail} φ_n / n`.
pub fn kesten_rate(
    cocycle: &Cocycle,
    seeds: usize,
    len: usize,
    global_seed: u64,
    exec: Execution,
) -> Result<Vec<f64>, FillingError> {
    scalar(cocycle)?;
    if len == 0 {
        return Err(FillingError::EmptyOrbit);
    }
    Ok(map_indexed(exec, seeds, |i| {
        let x = cocycle
            .system
            .sample_initial(trajectory_seed(global_seed, i as u64));
        kesten_rate_of(&scalar_path(cocycle, &x, len))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driver::{IncrementLaw, QuadraticIrrational, SystemSpec};
    use crate::engine::Observable;
    use crate::inducer::{induced_trace, SetSpec, DEFAULT_CAP};

    fn rotation(obs: &str) -> Cocycle {
        let sys = SystemSpec::rotation(QuadraticIrrational::golden(), 0);
        Cocycle::new(sys, Observable::parse(obs).unwrap()).unwrap()
    }

    fn brute_min(phi: &[f64], n: usize) -> f64 {
        let mut s = 0.0;
        let mut m = f64::INFINITY;
        for v in &phi[..n] {
            s += v;
            m = m.min(s);
        }
        m
    }

    #[test]
    fn positive_constant_fills_immediately() {
        let c = rotation("0.7");
        let mp = min_process(&c, &c.system.point(0.1).unwrap(), 100).unwrap();
        assert!(mp.values().iter().all(|&m| m == 0.7));
        assert_eq!(mp.split(), (0.0, 0.7));
        assert_eq!(mp.residual(0.7), 0.0);
    }

    #[test]
    fn negative_constant_diverges() {
        let c = rotation("-1");
        let mp = min_process(&c, &c.system.point(0.1).unwrap(), 50).unwrap();
        for n in 1..=50 {
            assert_eq!(mp.m(n), -(n as f64));
        }
    }

    #[test]
    fn recursion_matches_brute_force() {
        let c = rotation("indicator(0,0.5) - 0.5");
        let x = c.system.point(0.0).unwrap();
        let mp = min_process(&c, &x, 1000).unwrap();
        let phi = orbit_values(&c, &x, 1001);
        for n in 1..=1000 {
            assert!((mp.m(n) - brute_min(&phi, n)).abs() < 1e-12);
            assert!((recursion_at(&phi, n) - brute_min(&phi, n)).abs() < 1e-12);
            assert!((mp.m_image(n) - brute_min(&phi[1..], n)).abs() < 1e-12);
        }
        assert_eq!(mp.checked_indices().len(), 1001);
    }

    #[test]
    fn monotone_and_sign_split() {
        let sys = SystemSpec::iid_shift(IncrementLaw::Gaussian, 1, 2).unwrap();
        let c = Cocycle::new(sys, Observable::parse("iid").unwrap()).unwrap();
        let mp = min_process(&c, &sys.sample_initial(5), 10_000).unwrap();
        assert_eq!(mp.m(1), c.eval(mp.start())[0]);
        for n in 1..=10_000 {
            assert!(mp.m(n + 1) <= mp.m(n));
            assert_eq!(mp.m_plus(n) * mp.m_minus(n), 0.0);
            assert_eq!(mp.m_plus(n) - mp.m_minus(n), mp.m(n));
        }
        // beyond the full-check range only the grid is checked
        assert!(mp.checked_indices().len() < 20);
    }

    #[test]
    fn residuals_vanish() {
        let cob = rotation("cob(x*x + indicator(0.2,0.6))");
        let sys = SystemSpec::iid_shift(IncrementLaw::Gaussian, 1, 9).unwrap();
        let gauss = Cocycle::new(sys, Observable::parse("iid").unwrap()).unwrap();
        for (c, len) in [(&cob, 500), (&cob, 5000), (&gauss, 1000)] {
            for seed in 0..100 {
                let x = c.system.sample_initial(seed);
                let r = decomposition_residual(c, &x, len).unwrap();
                assert!(r <= 1e-12, "{r}");
            }
        }
        assert_eq!(
            decomposition_residual(&rotation("2"), &cob.system.point(0.3).unwrap(), 10),
            Ok(0.0)
        );
    }

    #[test]
    fn vector_observable_is_rejected() {
        let c = rotation("[x, 1]");
        assert_eq!(
            min_process(&c, &c.system.point(0.0).unwrap(), 10).unwrap_err(),
            FillingError::NotScalar(2)
        );
    }

    #[test]
    fn trichotomy_examples() {
        let rule = OscillationRule::default();
        let run = |obs: &str| {
            classify_oscillation(&rotation(obs), 100, 100_000, 1, rule, Execution::Parallel)
                .unwrap()
        };
        assert_eq!(run("1").verdict, Oscillation::ToPlusInfinity);
        assert_eq!(run("-2").verdict, Oscillation::ToMinusInfinity);
        assert_eq!(
            run("cobdrift(x, c=[1])").verdict,
            Oscillation::ToPlusInfinity
        );
        let centered = run("indicator(0,0.5) - 0.5");
        assert_eq!(centered.verdict, Oscillation::Oscillates, "{centered:?}");
        let bounded = run("cob(indicator(0,0.5))");
        assert_eq!(
            bounded.verdict,
            Oscillation::BoundedOrInconclusive,
            "{bounded:?}"
        );
    }

    #[test]
    fn kesten_examples() {
        let c = rotation("0.25");
        let r = kesten_rate(&c, 4, 1000, 0, Execution::Sequential).unwrap();
        assert!(r.iter().all(|&v| (v - 0.25).abs() < 1e-15));
        let drift = rotation("cobdrift(x, c=[1])");
        let r = kesten_rate(&drift, 20, 100_000, 0, Execution::Parallel).unwrap();
        assert!(r.iter().all(|&v| (0.9..=1.1).contains(&v)), "{r:?}");
        let sys = SystemSpec::iid_shift(IncrementLaw::Gaussian, 1, 3).unwrap();
        let walk = Cocycle::new(sys, Observable::parse("iid").unwrap()).unwrap();
        let r = kesten_rate(&walk, 20, 1_000_000, 0, Execution::Parallel).unwrap();
        assert!(r.iter().all(|&v| v <= 0.01), "{r:?}");
    }

    #[test]
    fn strict_subset_example() {
        // h is 0 on B = [0, 1/2) and ≈ −1/(1−x)² near 1, so h(T^n x) <= −n²
        // infinitely often while the induced sums are the return times
        let c = rotation("cobdrift(-pow(floor(recip(1 - x)), 2) * indicator(0.5, 1), c=[1])");
        let set = SetSpec::interval(0.0, 0.5);
        let rule = OscillationRule::default();
        let full = classify_oscillation(&c, 20, 1 << 16, 3, rule, Execution::Parallel).unwrap();
        assert_eq!(full.verdict, Oscillation::Oscillates, "{full:?}");
        for seed in 0..20 {
            let x = c.system.point(0.5 * (seed as f64 + 0.5) / 20.0).unwrap();
            let ind = induced_trace(&c, &set, &x, 1 << 15, DEFAULT_CAP).unwrap();
            let path: Vec<f64> = ind.sums().iter().map(|v| v[0]).collect();
            assert!(path.iter().all(|&v| v > 0.0));
            assert_eq!(oscillation_of(&path, &rule), Oscillation::ToPlusInfinity);
        }
    }
}
