use crate::driver::{SystemSpec, SystemState};
use crate::vector::{CompensatedSum, Vector};

use super::{EngineError, Observable};

/// Spacing of the orbit checkpoints stored with a trace.
pub const DEFAULT_CHECKPOINT_EVERY: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceDirection {
    Forward,
    /// Values are the reverse cocycle `-Φ_n(T^{-n} x)`.
    Reverse,
}

/// `Φ_0(x), ..., Φ_N(x)` along one orbit.
#[derive(Clone, Debug)]
pub struct CocycleTrace {
    dim: usize,
    values: Vec<f64>,
    start: SystemState,
    checkpoints: Vec<SystemState>,
    checkpoint_every: usize,
    direction: TraceDirection,
}

impl CocycleTrace {
    /// Builds a trace directly from values `Φ_1..Φ_N` (`Φ_0 = 0` is
    /// prepended). Used for induced sums and synthetic paths.
    pub fn from_values(start: SystemState, dim: usize, values: &[Vector]) -> Self {
        let mut flat = vec![0.0; dim];
        flat.reserve(values.len() * dim);
        for v in values {
            assert_eq!(v.dim(), dim);
            flat.extend_from_slice(v.as_slice());
        }
        CocycleTrace {
            dim,
            values: flat,
            start,
            checkpoints: Vec::new(),
            checkpoint_every: 0,
            direction: TraceDirection::Forward,
        }
    }

    /// Number of steps `N`.
    pub fn len(&self) -> usize {
        self.values.len() / self.dim - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn start(&self) -> &SystemState {
        &self.start
    }

    pub fn direction(&self) -> TraceDirection {
        self.direction
    }

    /// `Φ_n(x)`.
    #[inline]
    pub fn value(&self, n: usize) -> Vector {
        Vector::from_slice(&self.values[n * self.dim..(n + 1) * self.dim])
    }

    #[inline]
    pub fn norm(&self, n: usize) -> f64 {
        self.value(n).norm()
    }

    /// `Φ_0, Φ_1, ..., Φ_N`.
    pub fn values(&self) -> impl ExactSizeIterator<Item = Vector> + '_ {
        self.values.chunks_exact(self.dim).map(Vector::from_slice)
    }

    pub fn norms(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.values().map(|v| v.norm())
    }

    /// `Φ(T^k x) = Φ_{k+1}(x) − Φ_k(x)` as stored.
    pub fn increment(&self, k: usize) -> Vector {
        self.value(k + 1) - self.value(k)
    }

    pub fn checkpoint_every(&self) -> usize {
        self.checkpoint_every
    }

    /// Orbit state `T^n x`, when `n` is on the checkpoint grid.
    pub fn checkpoint(&self, n: usize) -> Option<&SystemState> {
        if self.checkpoint_every == 0 || !n.is_multiple_of(self.checkpoint_every) {
            return None;
        }
        self.checkpoints.get(n / self.checkpoint_every)
    }

    /// Restricts the trace to its first `n` steps.
    pub fn truncated(&self, n: usize) -> CocycleTrace {
        let n = n.min(self.len());
        let keep = n.checked_div(self.checkpoint_every).map_or(0, |k| k + 1);
        CocycleTrace {
            dim: self.dim,
            values: self.values[..(n + 1) * self.dim].to_vec(),
            start: self.start,
            checkpoints: self.checkpoints[..keep.min(self.checkpoints.len())].to_vec(),
            checkpoint_every: self.checkpoint_every,
            direction: self.direction,
        }
    }
}

/// A system together with an observable: the pair `(T, Φ)` that generates a
/// cocycle.
#[derive(Clone, Debug)]
pub struct Cocycle {
    pub system: SystemSpec,
    pub observable: Observable,
}

impl Cocycle {
    pub fn new(system: SystemSpec, observable: Observable) -> Result<Self, EngineError> {
        observable.expr().check_system(&system)?;
        Ok(Cocycle { system, observable })
    }

    pub fn dim(&self) -> usize {
        self.observable.dim()
    }

    /// `Φ(x)`.
    #[inline]
    pub fn eval(&self, state: &SystemState) -> Vector {
        self.observable.eval(&self.system, state)
    }

    /// Streams `(n, T^n x, Φ_n(x))` for `n = 0..=len` without storing the
    /// trace. Sums are compensated.
    pub fn for_each_sum(
        &self,
        x0: &SystemState,
        len: usize,
        mut f: impl FnMut(usize, &SystemState, Vector),
    ) {
        let mut acc = CompensatedSum::new(self.dim());
        let mut state = *x0;
        f(0, &state, acc.value());
        for n in 1..=len {
            acc.add(&self.eval(&state));
            state = self.system.step(&state);
            f(n, &state, acc.value());
        }
    }

    /// Ergodic sums `Φ_n(x) = Φ(x) + ... + Φ(T^{n-1} x)` for `n <= len`,
    /// with orbit checkpoints every [`DEFAULT_CHECKPOINT_EVERY`] steps.
    pub fn sums(&self, x0: &SystemState, len: usize) -> CocycleTrace {
        self.sums_with_checkpoints(x0, len, DEFAULT_CHECKPOINT_EVERY)
    }

    pub fn sums_with_checkpoints(
        &self,
        x0: &SystemState,
        len: usize,
        every: usize,
    ) -> CocycleTrace {
        let every = every.max(1);
        let dim = self.dim();
        let mut values = Vec::with_capacity((len + 1) * dim);
        let mut checkpoints = Vec::with_capacity(len / every + 1);
        self.for_each_sum(x0, len, |n, state, v| {
            values.extend_from_slice(v.as_slice());
            if n % every == 0 {
                checkpoints.push(*state);
            }
        });
        CocycleTrace {
            dim,
            values,
            start: *x0,
            checkpoints,
            checkpoint_every: every,
            direction: TraceDirection::Forward,
        }
    }

    /// `‖Φ_{n+p}(x) − Φ_n(x) − Φ_p(T^n x)‖`, with `Φ_p(T^n x)` recomputed
    /// in a second pass from the checkpoint at `T^n x`.
    pub fn identity_residual(
        &self,
        trace: &CocycleTrace,
        n: usize,
        p: usize,
    ) -> Result<f64, EngineError> {
        if n + p > trace.len() {
            return Err(EngineError::OutOfRange {
                index: n + p,
                len: trace.len(),
            });
        }
        if n == 0 {
            return Ok(0.0);
        }
        let from = *trace.checkpoint(n).ok_or(EngineError::MissingCheckpoint {
            n,
            every: trace.checkpoint_every(),
        })?;
        let mut second = Vector::zeros(self.dim());
        self.for_each_sum(&from, p, |k, _, v| {
            if k == p {
                second = v;
            }
        });
        Ok((trace.value(n + p) - trace.value(n) - second).norm())
    }

    /// One step of the skew product `(x, y) -> (Tx, y + Φ(x))`.
    #[inline]
    pub fn skew_step(&self, state: &SystemState, fiber: Vector) -> (SystemState, Vector) {
        (self.system.step(state), fiber + self.eval(state))
    }

    /// `T_Φ^n (x, y)`.
    pub fn skew_iterate(
        &self,
        state: &SystemState,
        fiber: Vector,
        n: usize,
    ) -> (SystemState, Vector) {
        (0..n).fold((*state, fiber), |(s, y), _| self.skew_step(&s, y))
    }

    /// Reverse cocycle `φ̌_n(x) = −Σ_{k=1}^{n} Φ(T^{-k} x)` for `n <= len`.
    pub fn reverse_sums(&self, x0: &SystemState, len: usize) -> Result<CocycleTrace, EngineError> {
        let dim = self.dim();
        let mut values = Vec::with_capacity((len + 1) * dim);
        values.extend_from_slice(Vector::zeros(dim).as_slice());
        let mut acc = CompensatedSum::new(dim);
        let mut state = *x0;
        for _ in 0..len {
            state = self.system.step_back(&state)?;
            acc.add(&(-self.eval(&state)));
            values.extend_from_slice(acc.value().as_slice());
        }
        Ok(CocycleTrace {
            dim,
            values,
            start: *x0,
            checkpoints: Vec::new(),
            checkpoint_every: 0,
            direction: TraceDirection::Reverse,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::driver::{IncrementLaw, QuadraticIrrational};
    use crate::engine::coboundary_of;

    fn rotation_cocycle() -> Cocycle {
        let sys = SystemSpec::rotation(QuadraticIrrational::sqrt2_minus_1(), 0);
        Cocycle::new(sys, Observable::parse("indicator(0,0.5)-0.5").unwrap()).unwrap()
    }

    fn rademacher_cocycle(seed: u64) -> Cocycle {
        let sys = SystemSpec::iid_shift(IncrementLaw::Rademacher, 2, seed).unwrap();
        Cocycle::new(sys, Observable::parse("iid(rademacher,d=2)").unwrap()).unwrap()
    }

    #[test]
    fn empty_trace_is_zero() {
        let c = rotation_cocycle();
        let t = c.sums(&c.system.point(0.3).unwrap(), 0);
        assert_eq!(t.len(), 0);
        assert!(t.value(0).is_zero());
    }

    #[test]
    fn rotation_indicator_sums() {
        // orbit 0, 0.41421.., 0.82842..
        let c = rotation_cocycle();
        let t = c.sums(&c.system.point(0.0).unwrap(), 3);
        let got: Vec<f64> = (1..=3).map(|n| t.value(n)[0]).collect();
        assert_eq!(got, vec![0.5, 1.0, 0.5]);
    }

    #[test]
    fn shift_sums_match_tape() {
        let c = rademacher_cocycle(7);
        let x0 = c.system.sample_initial(7);
        let t = c.sums(&x0, 10);
        let tape = c.system.increment_tape(x0.stream(), 0..10);
        let mut partial = Vector::zeros(2);
        for (k, inc) in tape.iter().enumerate() {
            partial += *inc;
            assert_eq!(t.value(k + 1), partial);
        }
    }

    #[test]
    fn identity_residuals() {
        let c = rotation_cocycle();
        let t = c.sums_with_checkpoints(&c.system.point(0.0).unwrap(), 3, 1);
        assert_eq!(c.identity_residual(&t, 0, 3).unwrap(), 0.0);
        assert!(c.identity_residual(&t, 1, 2).unwrap() <= 1e-12);

        let c = rademacher_cocycle(3);
        let t = c.sums_with_checkpoints(&c.system.sample_initial(1), 2000, 1);
        let mut rng = crate::exec::rng_from(5);
        use rand::Rng;
        for _ in 0..100 {
            let n = rng.random_range(0..1000);
            let p = rng.random_range(0..1000);
            assert!(c.identity_residual(&t, n, p).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn identity_needs_checkpoint() {
        let c = rotation_cocycle();
        let t = c.sums(&c.system.point(0.1).unwrap(), 2048);
        assert_eq!(
            c.identity_residual(&t, 5, 10),
            Err(EngineError::MissingCheckpoint { n: 5, every: 1024 })
        );
        assert!(c.identity_residual(&t, 1024, 1024).unwrap() <= 1e-12);
    }

    #[test]
    fn skew_product_fiber() {
        let c = rotation_cocycle();
        let x = c.system.point(0.0).unwrap();
        let (_, y) = c.skew_iterate(&x, Vector::scalar(0.0), 3);
        assert_eq!(y[0], 0.5);

        let x = c.system.sample_initial(4);
        let t = c.sums(&x, 500);
        let (_, y) = c.skew_iterate(&x, Vector::scalar(0.0), 500);
        assert!((y - t.value(500)).norm() <= 1e-12);

        let zero = Cocycle::new(c.system, Observable::constant(&[0.0])).unwrap();
        let (_, y) = zero.skew_iterate(&x, Vector::scalar(2.5), 100);
        assert_eq!(y[0], 2.5);
    }

    #[test]
    fn reverse_sums_of_constant() {
        let c = Cocycle::new(
            SystemSpec::rotation(QuadraticIrrational::golden(), 0),
            Observable::constant(&[1.5, -2.0]),
        )
        .unwrap();
        let r = c.reverse_sums(&c.system.sample_initial(0), 50).unwrap();
        for n in 0..=50 {
            let v = r.value(n);
            assert_eq!(v.as_slice(), &[-1.5 * n as f64, 2.0 * n as f64]);
        }
    }

    #[test]
    fn reverse_sums_on_rotation() {
        let alpha = QuadraticIrrational::sqrt2_minus_1();
        let sys = SystemSpec::rotation(alpha, 0);
        let c = Cocycle::new(sys, Observable::parse("indicator(0,0.5)-0.5").unwrap()).unwrap();
        let r = c
            .reverse_sums(&sys.point(alpha.value()).unwrap(), 1)
            .unwrap();
        assert_eq!(r.value(1)[0], -0.5);
    }

    #[test]
    fn reverse_sums_on_shift_use_negative_indices() {
        let c = rademacher_cocycle(9);
        let x0 = c.system.sample_initial(2);
        let r = c.reverse_sums(&x0, 20).unwrap();
        let tape = c.system.increment_tape(x0.stream(), -20..0);
        let mut acc = Vector::zeros(2);
        for n in 1..=20 {
            acc -= tape[20 - n];
            assert_eq!(r.value(n), acc);
        }
    }

    #[test]
    fn reverse_needs_invertible_system() {
        let c = Cocycle::new(SystemSpec::doubling(0), Observable::constant(&[1.0])).unwrap();
        assert!(matches!(
            c.reverse_sums(&c.system.sample_initial(0), 3),
            Err(EngineError::Driver(_))
        ));
    }

    #[test]
    fn reverse_forward_consistency() {
        let c = rotation_cocycle();
        let x = c.system.sample_initial(8);
        let fwd = c.sums(&x, 300);
        for n in [1usize, 17, 300] {
            let tn = c.system.step_n(&x, n as u64);
            let rev = c.reverse_sums(&tn, n).unwrap();
            assert!((rev.value(n) + fwd.value(n)).norm() <= 1e-12);
        }
    }

    #[test]
    fn coboundary_of_frac_telescopes() {
        let sys = SystemSpec::rotation(QuadraticIrrational::golden(), 0);
        let psi = Observable::parse("x").unwrap();
        let c = Cocycle::new(sys, coboundary_of(&psi).unwrap()).unwrap();
        let x = sys.sample_initial(1);
        let t = c.sums(&x, 10_000);
        let x0 = x.coordinate(0).unwrap();
        let mut s = x;
        for n in 0..=10_000 {
            let expected = s.coordinate(0).unwrap() - x0;
            assert!((t.value(n)[0] - expected).abs() <= 1e-12, "n={n}");
            assert!(t.norm(n) <= 1.0);
            s = sys.step(&s);
        }
    }

    #[test]
    fn coboundary_requires_bound() {
        let psi = Observable::parse("recip(x)").unwrap();
        assert!(matches!(
            coboundary_of(&psi),
            Err(EngineError::Unbounded(_))
        ));
        let psi = Observable::parse("indicator(0.1,0.3)").unwrap();
        assert_eq!(coboundary_of(&psi).unwrap().bound(), Some(2.0));
    }

    #[test]
    fn coboundary_plus_drift_matches_constructor() {
        let sys = SystemSpec::cat_map(1);
        let h = Observable::parse("pow(x,2)").unwrap();
        let drift = Vector::from_slice(&[1.0, 0.0]);
        let a = crate::engine::coboundary_plus_drift(&h, drift).unwrap();
        let b = Observable::parse("cob(pow(x,2)) + [1,0]").unwrap();
        let c = Observable::parse("cobdrift(h=pow(frac,2),c=[1,0])").unwrap();
        for i in 0..100 {
            let s = sys.sample_initial(i);
            let va = a.eval(&sys, &s);
            assert_eq!(va, b.eval(&sys, &s));
            assert_eq!(va, c.eval(&sys, &s));
        }
    }

    #[test]
    fn incompatible_observables_are_rejected() {
        let sys = SystemSpec::rotation(QuadraticIrrational::golden(), 0);
        assert!(matches!(
            Cocycle::new(sys, Observable::parse("iid(d=2)").unwrap()),
            Err(EngineError::Incompatible { .. })
        ));
        let shift = SystemSpec::iid_shift(IncrementLaw::Gaussian, 2, 0).unwrap();
        assert!(Cocycle::new(shift, Observable::parse("iid(rademacher,d=2)").unwrap()).is_err());
        assert!(Cocycle::new(shift, Observable::parse("x").unwrap()).is_err());
    }

    #[test]
    fn centering_is_verified() {
        let sys = SystemSpec::rotation(QuadraticIrrational::golden(), 0);
        let ok = Observable::parse("indicator(0,0.5)-0.5")
            .unwrap()
            .centered();
        assert!(ok.verify_centered(&sys, 100_000, 1).unwrap() <= 3.0);
        let bad = Observable::parse("indicator(0,0.6)-0.5")
            .unwrap()
            .centered();
        assert!(matches!(
            bad.verify_centered(&sys, 100_000, 1),
            Err(EngineError::NotCentered { .. })
        ));
    }

    #[test]
    fn triangle_inequality_along_traces() {
        let c = rademacher_cocycle(1);
        let x = c.system.sample_initial(3);
        let tx = c.system.step(&x);
        let a = c.sums(&x, 5000);
        let b = c.sums(&tx, 5000);
        let phi = c.eval(&x).norm();
        for n in 0..5000 {
            assert!((a.norm(n + 1) - b.norm(n)).abs() <= phi + 1e-12);
        }
    }
}
