//! The directional process `Φ_n / ‖Φ_n‖`, estimates of the limit-direction
//! set `𝒟(Φ)`, recurrence diagnostics and essential-direction probes.
//!
//! `𝒟(Φ)` is a limit object with no finite certificate. It is estimated by
//! a fixed ladder of norm thresholds `M_1 < ... < M_m`, a mesh of the sphere
//! and a quorum `q`: a cell belongs to the estimate when at least a fraction
//! `q` of the traces visit it while `‖Φ_n‖ > M_m`. All three parameters are
//! reported with every estimate.

mod mesh;

use serde::Serialize;

use crate::engine::{Cocycle, CocycleTrace};
use crate::exec::{map_indexed, trajectory_seed, try_map_indexed, Execution};
use crate::inducer::{enter_set, induced_trace, InduceError, SetSpec};
use crate::vector::Vector;

pub use mesh::{MeshInfo, SphereMesh};

/// Default quorum for [`direction_set_estimate`].
pub const DEFAULT_QUORUM: f64 = 0.9;

/// Base ladder `{10, 10^1.5, 100, 10^2.5, 1000}`.
pub const BASE_LADDER: [f64; 5] = [
    10.0,
    31.622_776_601_683_79,
    100.0,
    316.227_766_016_837_9,
    1000.0,
];

/// Threshold ladder scaled to a cocycle's own size: the base ladder times
/// `scale / 1000`, so the top threshold equals `scale` (typically the median
/// of `‖Φ_N‖` over the traces).
pub fn default_thresholds(scale: f64) -> Vec<f64> {
    BASE_LADDER.iter().map(|m| m * scale / 1000.0).collect()
}

/// Median of `‖Φ_N‖` over a set of traces.
pub fn median_final_norm(traces: &[CocycleTrace]) -> f64 {
    let mut v: Vec<f64> = traces.iter().map(|t| t.norm(t.len())).collect();
    v.sort_by(f64::total_cmp);
    match v.len() {
        0 => 0.0,
        n if n % 2 == 1 => v[n / 2],
        n => 0.5 * (v[n / 2 - 1] + v[n / 2]),
    }
}

/// `(n, Φ_n / ‖Φ_n‖)` for every `n >= 1` with `Φ_n ≠ 0`.
#[derive(Clone, Debug)]
pub struct DirectionalProcess {
    pub entries: Vec<(usize, Vector)>,
    /// Number of `n` in `1..=N` with `Φ_n = 0`.
    pub skipped: usize,
}

pub fn directional_process(trace: &CocycleTrace) -> DirectionalProcess {
    let mut entries = Vec::with_capacity(trace.len());
    let mut skipped = 0;
    for (n, v) in trace.values().enumerate().skip(1) {
        match v.normalized() {
            Some(u) => entries.push((n, u)),
            None => skipped += 1,
        }
    }
    DirectionalProcess { entries, skipped }
}

/// Visit counts per sphere cell at each norm threshold.
#[derive(Clone, Debug)]
pub struct DirectionHistogram {
    mesh: SphereMesh,
    thresholds: Vec<f64>,
    counts: Vec<Vec<u64>>,
    steps: usize,
    skipped_zero: usize,
}

impl DirectionHistogram {
    pub fn empty(mesh: SphereMesh, thresholds: &[f64]) -> Self {
        assert!(
            thresholds.windows(2).all(|w| w[0] < w[1]),
            "thresholds must be strictly increasing"
        );
        DirectionHistogram {
            counts: vec![vec![0; mesh.cells()]; thresholds.len()],
            mesh,
            thresholds: thresholds.to_vec(),
            steps: 0,
            skipped_zero: 0,
        }
    }

    /// Histogram of `Φ_1, ..., Φ_N`.
    pub fn from_values(
        values: impl IntoIterator<Item = Vector>,
        mesh: SphereMesh,
        thresholds: &[f64],
    ) -> Self {
        let mut h = Self::empty(mesh, thresholds);
        for v in values {
            h.record(&v);
        }
        h
    }

    pub fn from_trace(trace: &CocycleTrace, mesh: SphereMesh, thresholds: &[f64]) -> Self {
        Self::from_values(trace.values().skip(1), mesh, thresholds)
    }

    #[inline]
    pub fn record(&mut self, v: &Vector) {
        self.steps += 1;
        let r = v.norm();
        if r == 0.0 {
            self.skipped_zero += 1;
            return;
        }
        if r <= self.thresholds[0] {
            return;
        }
        let cell = self.mesh.cell_of(&(*v * (1.0 / r)));
        for (i, m) in self.thresholds.iter().enumerate() {
            if r > *m {
                self.counts[i][cell] += 1;
            } else {
                break;
            }
        }
    }

    /// Cell-wise sum of two histograms over the same mesh and thresholds.
    pub fn merge(mut self, other: &DirectionHistogram) -> Self {
        assert_eq!(
            self.mesh, other.mesh,
            "merging histograms over different meshes"
        );
        assert_eq!(
            self.thresholds, other.thresholds,
            "merging different ladders"
        );
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        self.steps += other.steps;
        self.skipped_zero += other.skipped_zero;
        self
    }

    pub fn mesh(&self) -> &SphereMesh {
        &self.mesh
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn counts(&self, threshold: usize) -> &[u64] {
        &self.counts[threshold]
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn skipped_zero(&self) -> usize {
        self.skipped_zero
    }

    pub fn visited(&self, threshold: usize) -> Vec<bool> {
        self.counts[threshold].iter().map(|&c| c > 0).collect()
    }

    pub fn visited_top(&self) -> Vec<bool> {
        self.visited(self.thresholds.len() - 1)
    }

    /// Checks nesting across thresholds and the per-threshold totals against
    /// `‖Φ_n‖ > M` counts supplied by the caller.
    pub fn is_nested(&self) -> bool {
        self.counts
            .windows(2)
            .all(|w| w[0].iter().zip(&w[1]).all(|(lo, hi)| hi <= lo))
    }

    pub fn total(&self, threshold: usize) -> u64 {
        self.counts[threshold].iter().sum()
    }

    /// Rows `(cell, center angle or coordinates, threshold, count)`.
    pub fn rows(&self) -> Vec<(usize, Vector, f64, u64)> {
        let mut out = Vec::new();
        for (i, m) in self.thresholds.iter().enumerate() {
            for cell in 0..self.mesh.cells() {
                out.push((cell, self.mesh.center(cell), *m, self.counts[i][cell]));
            }
        }
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DirectionSetEstimate {
    pub mesh: MeshInfo,
    pub thresholds: Vec<f64>,
    pub quorum: f64,
    pub traces: usize,
    /// Cells visited at the top threshold by at least `quorum` of the traces.
    pub cells: Vec<usize>,
    /// Fraction of traces visiting each cell at the top threshold.
    pub visit_fraction: Vec<f64>,
}

impl DirectionSetEstimate {
    pub fn mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.visit_fraction.len()];
        self.cells.iter().for_each(|&c| m[c] = true);
        m
    }

    pub fn is_full(&self) -> bool {
        self.cells.len() == self.visit_fraction.len()
    }
}

/// Quorum estimate of `𝒟(Φ)` from per-trace histograms.
pub fn direction_set_estimate(
    histograms: &[DirectionHistogram],
    quorum: f64,
) -> DirectionSetEstimate {
    let first = histograms.first().expect("at least one histogram");
    let cells = first.mesh.cells();
    let mut hits = vec![0usize; cells];
    for h in histograms {
        for (c, v) in h.visited_top().into_iter().enumerate() {
            hits[c] += usize::from(v);
        }
    }
    let n = histograms.len() as f64;
    let visit_fraction: Vec<f64> = hits.iter().map(|&h| h as f64 / n).collect();
    DirectionSetEstimate {
        mesh: first.mesh.info(),
        thresholds: first.thresholds.clone(),
        quorum,
        traces: histograms.len(),
        cells: (0..cells)
            .filter(|&c| visit_fraction[c] >= quorum - 1e-12)
            .collect(),
        visit_fraction,
    }
}

/// Running frequency `(1/n) Σ_{k<=n} 1_V(Φ̃_k)` over the directional
/// process (zeros of `Φ_n` are skipped, not counted).
pub fn cone_visit_frequency(
    process: &DirectionalProcess,
    mesh: &SphereMesh,
    cells: &[bool],
) -> Vec<f64> {
    let mut inside = 0usize;
    process
        .entries
        .iter()
        .enumerate()
        .map(|(i, (_, u))| {
            inside += usize::from(cells[mesh.cell_of(u)]);
            inside as f64 / (i + 1) as f64
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecurrenceVerdict {
    RecurrentLike,
    TransientLike,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct WindowMinimum {
    pub start: usize,
    pub end: usize,
    pub min_norm: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RecurrenceReport {
    pub windows: Vec<WindowMinimum>,
    pub epsilon: f64,
    pub verdict: RecurrenceVerdict,
}

/// Windows `[2^j, 2^{j+1})` covering `1..=len` (the last one may be cut).
pub fn dyadic_windows(len: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 1usize;
    while start <= len {
        let end = (2 * start).min(len + 1);
        out.push((start, end));
        start *= 2;
    }
    out
}

/// Heuristic recurrence / transience label from dyadic-window minima of
/// `‖Φ_n‖`. Recurrent-like: a minimum `<= ε` in one of the last two windows.
/// Transient-like: minima strictly increasing over the last five windows.
pub fn recurrence_diagnostic(trace: &CocycleTrace, epsilon: f64) -> RecurrenceReport {
    let windows: Vec<WindowMinimum> = dyadic_windows(trace.len())
        .into_iter()
        .map(|(start, end)| WindowMinimum {
            start,
            end,
            min_norm: (start..end)
                .map(|n| trace.norm(n))
                .fold(f64::INFINITY, f64::min),
        })
        .collect();
    let verdict = if trace.len() < 1024 || windows.len() < 5 {
        RecurrenceVerdict::Inconclusive
    } else if windows[windows.len() - 2..]
        .iter()
        .any(|w| w.min_norm <= epsilon)
    {
        RecurrenceVerdict::RecurrentLike
    } else if windows[windows.len() - 5..]
        .windows(2)
        .all(|w| w[1].min_norm > w[0].min_norm)
    {
        RecurrenceVerdict::TransientLike
    } else {
        RecurrenceVerdict::Inconclusive
    };
    RecurrenceReport {
        windows,
        epsilon,
        verdict,
    }
}

#[derive(Clone, Debug)]
pub struct ProbeParams {
    pub n_returns: usize,
    pub thresholds: Vec<f64>,
    pub mesh: SphereMesh,
    pub quorum: f64,
    pub seeds: usize,
    pub global_seed: u64,
    pub cap: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    pub per_set: Vec<DirectionSetEstimate>,
    /// Intersection of the per-set estimates: an upper bound on the
    /// estimate of the essential directions, not a decision.
    pub cells: Vec<usize>,
    pub total_cells: usize,
}

/// Intersects the direction-set estimates of the induced cocycles `Φ^{B_i}`.
pub fn essential_probe(
    cocycle: &Cocycle,
    sets: &[SetSpec],
    params: &ProbeParams,
    exec: Execution,
) -> Result<ProbeReport, InduceError> {
    let total_cells = params.mesh.cells();
    let mut keep = vec![true; total_cells];
    let mut per_set = Vec::with_capacity(sets.len());
    for set in sets {
        set.check_system(&cocycle.system)?;
        let hists = try_map_indexed(exec, params.seeds, |i| {
            let seed = trajectory_seed(params.global_seed, i as u64);
            let x = enter_set(&cocycle.system, set, seed, params.cap)?;
            let ind = induced_trace(cocycle, set, &x, params.n_returns, params.cap)?;
            Ok(DirectionHistogram::from_values(
                ind.sums().iter().copied(),
                params.mesh.clone(),
                &params.thresholds,
            ))
        })?;
        let est = direction_set_estimate(&hists, params.quorum);
        let mask = est.mask();
        keep.iter_mut().zip(&mask).for_each(|(k, m)| *k &= m);
        per_set.push(est);
    }
    Ok(ProbeReport {
        per_set,
        cells: (0..total_cells).filter(|&c| keep[c]).collect(),
        total_cells,
    })
}

/// Per-trace histograms of `seeds` μ-distributed trajectories of length `len`.
pub fn trajectory_histograms(
    cocycle: &Cocycle,
    len: usize,
    mesh: &SphereMesh,
    thresholds: &[f64],
    seeds: usize,
    global_seed: u64,
    exec: Execution,
) -> Vec<DirectionHistogram> {
    map_indexed(exec, seeds, |i| {
        let x = cocycle
            .system
            .sample_initial(trajectory_seed(global_seed, i as u64));
        let mut h = DirectionHistogram::empty(mesh.clone(), thresholds);
        cocycle.for_each_sum(&x, len, |n, _, v| {
            if n > 0 {
                h.record(&v);
            }
        });
        h
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driver::{IncrementLaw, QuadraticIrrational, SystemSpec};
    use crate::engine::{coboundary_of, Observable};

    fn walk(law: IncrementLaw, seed: u64) -> Cocycle {
        let sys = SystemSpec::iid_shift(law, 2, seed).unwrap();
        Cocycle::new(sys, Observable::parse("iid(d=2)").unwrap()).unwrap()
    }

    #[test]
    fn constant_one_points_up() {
        let sys = SystemSpec::rotation(QuadraticIrrational::golden(), 0);
        let c = Cocycle::new(sys, Observable::constant(&[1.0])).unwrap();
        let p = directional_process(&c.sums(&sys.sample_initial(0), 100));
        assert_eq!(p.skipped, 0);
        assert!(p.entries.iter().all(|(_, u)| u[0] == 1.0));
    }

    #[test]
    fn zero_sums_are_skipped_and_counted() {
        let sys = SystemSpec::iid_shift(IncrementLaw::Rademacher, 1, 3).unwrap();
        let c = Cocycle::new(sys, Observable::parse("iid").unwrap()).unwrap();
        let t = c.sums(&sys.sample_initial(0), 10_000);
        let zeros = t.values().skip(1).filter(|v| v.is_zero()).count();
        let p = directional_process(&t);
        assert!(zeros > 0);
        assert_eq!(p.skipped, zeros);
        assert_eq!(p.entries.len() + zeros, 10_000);
    }

    #[test]
    fn constant_drift_visits_one_cell() {
        let sys = SystemSpec::rotation(QuadraticIrrational::golden(), 0);
        let c = Cocycle::new(sys, Observable::constant(&[1.0, 2.0])).unwrap();
        let t = c.sums(&sys.sample_initial(0), 5000);
        let mesh = SphereMesh::for_dim(2);
        let h = DirectionHistogram::from_trace(&t, mesh.clone(), &[1.0, 10.0, 100.0]);
        let target = mesh.cell_of(&Vector::from_slice(&[1.0, 2.0]).normalized().unwrap());
        for i in 0..3 {
            let v = h.visited(i);
            assert!(v[target]);
            assert_eq!(v.iter().filter(|&&b| b).count(), 1);
        }
    }

    #[test]
    fn bounded_coboundary_never_exceeds_twice_bound() {
        let sys = SystemSpec::cat_map(1);
        let psi = Observable::parse("[indicator(0,0.5), y]").unwrap();
        let phi = coboundary_of(&psi).unwrap();
        let bound = psi.bound().unwrap();
        let c = Cocycle::new(sys, phi).unwrap();
        let hists = trajectory_histograms(
            &c,
            20_000,
            &SphereMesh::for_dim(2),
            &[2.0 * bound + 1e-9],
            8,
            1,
            Execution::Parallel,
        );
        assert!(hists.iter().all(|h| h.total(0) == 0));
    }

    #[test]
    fn histogram_nesting_and_totals() {
        let c = walk(IncrementLaw::Gaussian, 2);
        let t = c.sums(&c.system.sample_initial(1), 50_000);
        let thresholds = [5.0, 20.0, 80.0];
        let h = DirectionHistogram::from_trace(&t, SphereMesh::for_dim(2), &thresholds);
        assert!(h.is_nested());
        for (i, m) in thresholds.iter().enumerate() {
            let direct = t.norms().skip(1).filter(|r| r > m).count() as u64;
            assert_eq!(h.total(i), direct);
        }
    }

    #[test]
    fn merge_is_commutative() {
        let c = walk(IncrementLaw::Gaussian, 2);
        let mesh = SphereMesh::for_dim(2);
        let hs = trajectory_histograms(&c, 2000, &mesh, &[3.0, 10.0], 3, 5, Execution::Sequential);
        let ab = hs[0].clone().merge(&hs[1]).merge(&hs[2]);
        let ba = hs[2].clone().merge(&hs[1]).merge(&hs[0]);
        for i in 0..2 {
            assert_eq!(ab.counts(i), ba.counts(i));
        }
        assert_eq!(ab.steps(), 6000);
    }

    #[test]
    fn whole_sphere_frequency_is_one() {
        let c = walk(IncrementLaw::Rademacher, 4);
        let p = directional_process(&c.sums(&c.system.sample_initial(0), 2000));
        let mesh = SphereMesh::for_dim(2);
        let all = vec![true; 72];
        assert!(cone_visit_frequency(&p, &mesh, &all)
            .iter()
            .all(|&f| f == 1.0));
        let none = vec![false; 72];
        assert!(cone_visit_frequency(&p, &mesh, &none)
            .iter()
            .all(|&f| f == 0.0));
    }

    #[test]
    fn half_circle_frequency_gets_close_to_one() {
        // upper half circle = cells 0..36
        let mesh = SphereMesh::for_dim(2);
        let upper: Vec<bool> = (0..72).map(|c| c < 36).collect();
        let seeds = 100;
        let hits = map_indexed(Execution::Parallel, seeds, |i| {
            let c = walk(IncrementLaw::Rademacher, 11);
            let t = c.sums(&c.system.sample_initial(i as u64), 100_000);
            let f = cone_visit_frequency(&directional_process(&t), &mesh, &upper);
            f.iter().any(|&x| x >= 0.9)
        });
        let frac = hits.iter().filter(|&&h| h).count() as f64 / seeds as f64;
        assert!(frac >= 0.7, "{frac}");
    }

    #[test]
    fn drift_is_transient_like() {
        let sys = SystemSpec::rotation(QuadraticIrrational::golden(), 0);
        let c = Cocycle::new(sys, Observable::constant(&[0.3])).unwrap();
        let r = recurrence_diagnostic(&c.sums(&sys.sample_initial(0), 4096), 0.5);
        assert_eq!(r.verdict, RecurrenceVerdict::TransientLike);
    }

    #[test]
    fn centered_rotation_is_recurrent_like() {
        let sys = SystemSpec::rotation(QuadraticIrrational::golden(), 0);
        let c = Cocycle::new(sys, Observable::parse("indicator(0,0.5)-0.5").unwrap()).unwrap();
        let hits = map_indexed(Execution::Parallel, 20, |i| {
            let t = c.sums(&sys.sample_initial(i as u64), 1 << 16);
            recurrence_diagnostic(&t, 0.5).verdict == RecurrenceVerdict::RecurrentLike
        });
        assert!(hits.iter().all(|&h| h));
    }

    #[test]
    fn cauchy_walk_is_transient_like() {
        let c = walk(IncrementLaw::Cauchy, 8);
        let verdicts = map_indexed(Execution::Parallel, 100, |i| {
            let t = c.sums(&c.system.sample_initial(i as u64), 1 << 16);
            recurrence_diagnostic(&t, 0.5).verdict
        });
        let transient = verdicts
            .iter()
            .filter(|&&v| v == RecurrenceVerdict::TransientLike)
            .count();
        let recurrent = verdicts
            .iter()
            .filter(|&&v| v == RecurrenceVerdict::RecurrentLike)
            .count();
        // window minima of a Cauchy walk fluctuate by O(1) factors, so most
        // orbits stay inconclusive; transient-like is the only decisive label
        assert!(
            recurrent == 0 && transient >= 25,
            "{transient} transient, {recurrent} recurrent"
        );
    }

    #[test]
    fn short_traces_are_inconclusive() {
        let sys = SystemSpec::rotation(QuadraticIrrational::golden(), 0);
        let c = Cocycle::new(sys, Observable::constant(&[1.0])).unwrap();
        let r = recurrence_diagnostic(&c.sums(&sys.sample_initial(0), 500), 0.5);
        assert_eq!(r.verdict, RecurrenceVerdict::Inconclusive);
    }

    #[test]
    fn probe_on_whole_space_equals_plain_estimate() {
        let c = walk(IncrementLaw::Gaussian, 3);
        let mesh = SphereMesh::arcs(12);
        let thresholds = [5.0, 20.0];
        let params = ProbeParams {
            n_returns: 5000,
            thresholds: thresholds.to_vec(),
            mesh: mesh.clone(),
            quorum: 0.5,
            seeds: 10,
            global_seed: 4,
            cap: 1000,
        };
        let probe = essential_probe(&c, &[SetSpec::Whole], &params, Execution::Parallel).unwrap();
        let hists = trajectory_histograms(&c, 5000, &mesh, &thresholds, 10, 4, Execution::Parallel);
        let plain = direction_set_estimate(&hists, 0.5);
        assert_eq!(probe.cells, plain.cells);
        assert_eq!(probe.per_set[0].visit_fraction, plain.visit_fraction);
    }

    #[test]
    #[ignore = "per-seed coverage of all 72 cells is about 10% at N = 10^6, so a 0.9 quorum cannot reach the full circle"]
    fn probe_of_rademacher_walk_covers_the_circle() {
        let c = walk(IncrementLaw::Rademacher, 8);
        let params = ProbeParams {
            n_returns: 1_000_000,
            thresholds: vec![50.0],
            mesh: SphereMesh::for_dim(2),
            quorum: DEFAULT_QUORUM,
            seeds: 20,
            global_seed: 8,
            cap: 1_000_000,
        };
        let sets = ["cylinder:0,0,+", "cylinder:0,1,-", "cylinder:0,0,-;1,1,+"]
            .map(|s| s.parse::<SetSpec>().unwrap());
        let probe = essential_probe(&c, &sets, &params, Execution::Parallel).unwrap();
        assert_eq!(
            probe.cells.len(),
            72,
            "{:?}",
            probe
                .per_set
                .iter()
                .map(|e| e.cells.len())
                .collect::<Vec<_>>()
        );
    }

    #[test]
    fn probe_of_bounded_coboundary_is_empty() {
        let sys = SystemSpec::rotation(QuadraticIrrational::golden(), 0);
        let psi = Observable::parse("[indicator(0,0.5), x]").unwrap();
        let c = Cocycle::new(sys, coboundary_of(&psi).unwrap()).unwrap();
        let bound = psi.bound().unwrap();
        let params = ProbeParams {
            n_returns: 2000,
            thresholds: vec![bound, 2.0 * bound + 1e-9],
            mesh: SphereMesh::for_dim(2),
            quorum: 0.9,
            seeds: 8,
            global_seed: 1,
            cap: 10_000,
        };
        let sets = ["interval:0,0.3", "interval:0.5,0.9"].map(|s| s.parse::<SetSpec>().unwrap());
        let probe = essential_probe(&c, &sets, &params, Execution::Parallel).unwrap();
        assert!(probe.cells.is_empty());
    }

    #[test]
    fn bounded_transient_directions_are_connected() {
        // drift (1, 0) plus bounded noise: directions converge to angle 0
        let sys = SystemSpec::rotation(QuadraticIrrational::golden(), 0);
        let c = Cocycle::new(
            sys,
            Observable::parse("[1, 4*(indicator(0,0.5)-0.5)]").unwrap(),
        )
        .unwrap();
        let mesh = SphereMesh::for_dim(2);
        for seed in 0..10 {
            let t = c.sums(&sys.sample_initial(seed), 1 << 14);
            assert_eq!(
                recurrence_diagnostic(&t, 0.5).verdict,
                RecurrenceVerdict::TransientLike
            );
            let thresholds = default_thresholds(0.5 * t.norm(t.len()));
            let h = DirectionHistogram::from_trace(&t, mesh.clone(), &thresholds);
            let top = h.visited_top();
            assert!(top.iter().any(|&b| b));
            assert_eq!(mesh.components(&top), 1);
        }
    }

    #[test]
    fn estimates_are_shift_stable() {
        // Φ_n(Tx) = Φ_{n+1}(x) − Φ(x): the visited sets from x and Tx differ
        // by a few cells. More than two differ on a few percent of orbits at
        // the low threshold.
        let c = walk(IncrementLaw::Rademacher, 6);
        let mesh = SphereMesh::for_dim(2);
        let thresholds = [50.0, 100.0];
        let seeds = 100;
        let mut within_two = [0usize; 2];
        for seed in 0..seeds {
            let x = c.system.sample_initial(seed);
            let tx = c.system.step(&x);
            let a = DirectionHistogram::from_trace(&c.sums(&x, 10_000), mesh.clone(), &thresholds);
            let b = DirectionHistogram::from_trace(&c.sums(&tx, 10_000), mesh.clone(), &thresholds);
            for (i, count) in within_two.iter_mut().enumerate() {
                let (va, vb) = (a.visited(i), b.visited(i));
                let diff = (0..mesh.cells()).filter(|&k| va[k] != vb[k]).count();
                *count += usize::from(diff <= 2);
            }
        }
        assert!(within_two.iter().all(|&w| w >= 90), "{within_two:?}");
    }
}
