//! Exact occupation of open cones and balls by affine segments
//! `P(σ) = a + σ(b − a)`, `σ ∈ [0, 1]`.
//!
//! Membership can only change where a boundary function of the cone
//! vanishes. Those zeros are found in closed form (linear faces, quadratic
//! angular and ball boundaries), and each sub-interval is classified by its
//! midpoint.

use super::cone::Cone;
use crate::vector::Vector;

/// A segment within this distance (relative to its size) of a boundary
/// face along its whole length is degenerate.
pub const DEGENERATE_TOLERANCE: f64 = 1e-14;

/// Points per segment for the near-tangent fallback scan.
const TANGENT_SCAN: usize = 10_000;

#[inline]
fn push_root(out: &mut Vec<f64>, s: f64) {
    if s > 0.0 && s < 1.0 {
        out.push(s);
    }
}

/// Zero of `p + σ·q`.
#[inline]
fn linear_root(out: &mut Vec<f64>, p: f64, q: f64) {
    if q != 0.0 {
        push_root(out, -p / q);
    }
}

/// Real roots of `A σ² + B σ + C`, computed without cancellation. Returns
/// `false` when the roots are too close to a double root to trust.
fn quadratic_roots(out: &mut Vec<f64>, a: f64, b: f64, c: f64) -> bool {
    if a == 0.0 {
        linear_root(out, c, b);
        return true;
    }
    let disc = b * b - 4.0 * a * c;
    let scale = b * b + (4.0 * a * c).abs();
    if disc < 0.0 {
        return disc < -1e-12 * scale;
    }
    let sq = disc.sqrt();
    let q = -0.5 * (b + b.signum() * sq);
    if q != 0.0 {
        push_root(out, q / a);
        push_root(out, c / q);
    } else {
        push_root(out, 0.0);
    }
    disc > 1e-12 * scale
}

/// Sign changes of `g` on `[0, 1]` by a uniform scan refined by bisection.
fn scan_roots(out: &mut Vec<f64>, g: impl Fn(f64) -> f64) {
    let h = 1.0 / TANGENT_SCAN as f64;
    let mut prev = g(0.0);
    for i in 1..=TANGENT_SCAN {
        let s = i as f64 * h;
        let cur = g(s);
        if (prev > 0.0) != (cur > 0.0) {
            let (mut lo, mut hi) = (s - h, s);
            let lo_positive = prev > 0.0;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if (g(mid) > 0.0) == lo_positive {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            push_root(out, 0.5 * (lo + hi));
        }
        prev = cur;
    }
}

fn breakpoints(cone: &Cone, a: &Vector, d: &Vector, out: &mut Vec<f64>) {
    match cone {
        Cone::HalfSpace { normal } => linear_root(out, a.dot(normal), d.dot(normal)),
        Cone::Orthant { positive } => {
            for i in 0..positive.len() {
                linear_root(out, a[i], d[i]);
            }
        }
        Cone::Angular { axis, aperture } => {
            let c = Cone::cosine(*aperture);
            let (au, du) = (a.dot(axis), d.dot(axis));
            // the projection's sign matters wherever c ≠ 0
            linear_root(out, au, du);
            let c2 = c * c;
            let qa = du * du - c2 * d.norm_sq();
            let qb = 2.0 * (au * du - c2 * a.dot(d));
            let qc = au * au - c2 * a.norm_sq();
            if !quadratic_roots(out, qa, qb, qc) {
                scan_roots(out, |s| {
                    let p = *a + *d * s;
                    p.dot(axis) - c * p.norm()
                });
            }
        }
        Cone::Full { .. } | Cone::MinusRay { .. } => {}
        Cone::Complement(inner) => breakpoints(inner, a, d, out),
    }
}

/// Length of `{σ ∈ [0, 1] : a + σ(b − a) ∈ C}`.
pub fn segment_inside_length(cone: &Cone, a: &Vector, b: &Vector) -> f64 {
    match cone {
        Cone::Full { .. } => return 1.0,
        Cone::MinusRay { .. } => {
            // the ray has measure zero unless the segment runs along it
            let mid = (*a + *b) * 0.5;
            return if cone.contains(&mid) { 1.0 } else { 0.0 };
        }
        _ => {}
    }
    let d = *b - *a;
    let mut cuts = Vec::with_capacity(6);
    breakpoints(cone, a, &d, &mut cuts);
    if cuts.is_empty() {
        return if cone.contains(&(*a + d * 0.5)) {
            1.0
        } else {
            0.0
        };
    }
    cuts.push(0.0);
    cuts.push(1.0);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut inside = 0.0;
    for w in cuts.windows(2) {
        let (s0, s1) = (w[0], w[1]);
        if s1 > s0 && cone.contains(&(*a + d * (0.5 * (s0 + s1)))) {
            inside += s1 - s0;
        }
    }
    inside
}

/// Length of `{σ ∈ [0, 1] : ‖a + σ(b − a)‖ < radius}`.
pub fn segment_ball_length(radius: f64, a: &Vector, b: &Vector) -> f64 {
    let d = *b - *a;
    let qa = d.norm_sq();
    let qc = a.norm_sq() - radius * radius;
    if qa == 0.0 {
        return if qc < 0.0 { 1.0 } else { 0.0 };
    }
    let qb = 2.0 * a.dot(&d);
    let disc = qb * qb - 4.0 * qa * qc;
    if disc <= 0.0 {
        return 0.0;
    }
    let sq = disc.sqrt();
    let q = -0.5 * (qb + qb.signum() * sq);
    let (r1, r2) = if q != 0.0 {
        let (x, y) = (q / qa, qc / q);
        (x.min(y), x.max(y))
    } else {
        let r = (-qc / qa).sqrt();
        (-r, r)
    };
    (r2.min(1.0) - r1.max(0.0)).max(0.0)
}

/// Whether the segment stays within [`DEGENERATE_TOLERANCE`] of a boundary
/// face of the cone over its whole length.
pub fn segment_is_degenerate(cone: &Cone, a: &Vector, b: &Vector) -> bool {
    let tol = DEGENERATE_TOLERANCE * a.norm().max(b.norm()).max(1.0);
    let near = |f: &dyn Fn(&Vector) -> f64| f(a).abs() <= tol && f(b).abs() <= tol;
    match cone {
        Cone::HalfSpace { normal } => {
            let u = normal.normalized().expect("non-zero normal");
            near(&|p| p.dot(&u))
        }
        Cone::Orthant { positive } => (0..positive.len()).any(|i| near(&|p| p[i])),
        Cone::Angular { axis, aperture } => {
            let c = Cone::cosine(*aperture);
            let g = |p: &Vector| p.dot(axis) - c * p.norm();
            near(&g) && g(&((*a + *b) * 0.5)).abs() <= tol
        }
        Cone::Full { .. } => false,
        Cone::MinusRay { direction } => {
            let u = direction.normalized().expect("non-zero direction");
            let off_ray = |p: &Vector| (*p - u * p.dot(&u).max(0.0)).norm();
            off_ray(a) <= tol && off_ray(b) <= tol
        }
        Cone::Complement(inner) => segment_is_degenerate(inner, a, b),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> Vector {
        Vector::from_slice(x)
    }

    fn quadrature(cone: &Cone, a: &Vector, b: &Vector, points: usize) -> f64 {
        let d = *b - *a;
        (0..points)
            .filter(|&i| cone.contains(&(*a + d * ((i as f64 + 0.5) / points as f64))))
            .count() as f64
            / points as f64
    }

    #[test]
    fn half_plane_crossing() {
        let c = Cone::half_space(&[0.0, 1.0]);
        assert_eq!(
            segment_inside_length(&c, &v(&[0.0, 0.0]), &v(&[1.0, 1.0])),
            1.0
        );
        assert_eq!(
            segment_inside_length(&c, &v(&[1.0, 1.0]), &v(&[1.0, -1.0])),
            0.5
        );
        assert_eq!(
            segment_inside_length(&c, &v(&[0.0, -1.0]), &v(&[0.0, 3.0])),
            0.75
        );
    }

    #[test]
    fn angular_against_quadrature() {
        let c = Cone::angular(&[1.0, 0.0], 0.6);
        let cases = [
            ([-2.0, 1.0], [3.0, -0.5]),
            ([1.0, 2.0], [1.0, -2.0]),
            ([0.0, 0.0], [1.0, 0.1]),
            ([-1.0, 0.0], [-2.0, 0.3]),
        ];
        for (a, b) in cases {
            let (a, b) = (v(&a), v(&b));
            let exact = segment_inside_length(&c, &a, &b);
            assert!(
                (exact - quadrature(&c, &a, &b, 100_000)).abs() < 1e-4,
                "{a:?} {b:?}"
            );
            let comp = segment_inside_length(&c.clone().complement(), &a, &b);
            assert!((exact + comp - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn wide_angular_cone_covers_the_back() {
        // aperture > √2: the cone is more than a half-space
        let c = Cone::angular(&[1.0, 0.0], 1.9);
        let (a, b) = (v(&[-1.0, 2.0]), v(&[-1.0, -2.0]));
        let exact = segment_inside_length(&c, &a, &b);
        assert!((exact - quadrature(&c, &a, &b, 100_000)).abs() < 1e-4);
        assert!(exact > 0.0 && exact < 1.0);
    }

    #[test]
    fn near_tangent_segments() {
        // through the apex: the boundary quadratic has a double root
        let c = Cone::angular(&[1.0, 0.0], 0.5);
        assert_eq!(
            segment_inside_length(&c, &v(&[-1.0, 0.0]), &v(&[1.0, 0.0])),
            0.5
        );
        // the line z = 1, x = x0 grazes the cone x² + y² < z² when x0 = 1
        let c = Cone::angular(&[0.0, 0.0, 1.0], (2.0 - 2f64.sqrt()).sqrt());
        for x0 in [1.0, 0.999, 0.99999] {
            let (a, b) = (v(&[x0, -1.0, 1.0]), v(&[x0, 1.0, 1.0]));
            let exact = segment_inside_length(&c, &a, &b);
            let expected = (1.0 - x0 * x0).sqrt();
            assert!(
                (exact - expected).abs() < 1e-6,
                "{x0}: {exact} vs {expected}"
            );
        }
    }

    #[test]
    fn orthant_pieces() {
        let c = Cone::orthant(&[true, true]);
        let s = segment_inside_length(&c, &v(&[-1.0, 3.0]), &v(&[3.0, -1.0]));
        assert!((s - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ball_lengths() {
        assert_eq!(
            segment_ball_length(1.0, &v(&[0.0, 0.0]), &v(&[0.0, 0.0])),
            1.0
        );
        assert_eq!(
            segment_ball_length(1.0, &v(&[2.0, 0.0]), &v(&[2.0, 5.0])),
            0.0
        );
        let s = segment_ball_length(1.0, &v(&[-2.0, 0.0]), &v(&[2.0, 0.0]));
        assert!((s - 0.5).abs() < 1e-15);
        let s = segment_ball_length(1.0, &v(&[0.0, 0.0]), &v(&[4.0, 0.0]));
        assert!((s - 0.25).abs() < 1e-15);
    }

    #[test]
    fn degeneracy() {
        let h = Cone::half_space(&[0.0, 1.0]);
        assert!(segment_is_degenerate(
            &h,
            &v(&[0.0, 0.0]),
            &v(&[5.0, 1e-16])
        ));
        assert!(!segment_is_degenerate(
            &h,
            &v(&[0.0, 0.0]),
            &v(&[5.0, 1e-3])
        ));
        assert_eq!(
            segment_inside_length(&h, &v(&[0.0, 0.0]), &v(&[5.0, 0.0])),
            0.0
        );
        let q = Cone::orthant(&[true, true]);
        assert!(segment_is_degenerate(&q, &v(&[1.0, 0.0]), &v(&[2.0, 0.0])));
    }
}
