//! Real roots of a real cubic, closed form plus Newton polishing.

use crate::scalar::{lit, two, Real};

/// Number of Newton steps applied to every closed-form root.
pub const POLISH_STEPS: usize = 3;

/// Real roots of `a x³ + b x² + c x + d`, ascending, with near-duplicates
/// merged. Degenerates to the quadratic/linear formulas when leading
/// coefficients vanish.
pub fn real_roots<T: Real>(a: T, b: T, c: T, d: T) -> Vec<T> {
    let coeffs = [a, b, c, d];
    let mut roots = if a == T::zero() {
        quadratic_roots(b, c, d)
    } else {
        closed_form(a, b, c, d)
    };
    for r in roots.iter_mut() {
        *r = polish(&coeffs, *r);
    }
    roots.sort_by(|x, y| x.partial_cmp(y).expect("finite roots"));
    dedup(roots)
}

/// Evaluates the cubic and its derivative at `x` (Horner).
pub fn eval<T: Real>(coeffs: &[T; 4], x: T) -> (T, T) {
    let [a, b, c, d] = *coeffs;
    let p = ((a * x + b) * x + c) * x + d;
    let dp = (lit::<T>(3.0) * a * x + two::<T>() * b) * x + c;
    (p, dp)
}

/// |p(x)| relative to the magnitude of its terms; ≈ machine epsilon at a
/// well-resolved root.
pub fn relative_residual<T: Real>(coeffs: &[T; 4], x: T) -> T {
    let [a, b, c, d] = *coeffs;
    let (p, _) = eval(coeffs, x);
    let scale = (a * x * x * x).abs() + (b * x * x).abs() + (c * x).abs() + d.abs();
    if scale == T::zero() {
        p.abs()
    } else {
        p.abs() / scale
    }
}

fn polish<T: Real>(coeffs: &[T; 4], mut x: T) -> T {
    for _ in 0..POLISH_STEPS {
        let (p, dp) = eval(coeffs, x);
        if dp == T::zero() || !dp.is_finite() {
            break;
        }
        let next = x - p / dp;
        if !next.is_finite() {
            break;
        }
        // Never accept a step that makes the residual worse.
        if relative_residual(coeffs, next) <= relative_residual(coeffs, x) {
            x = next;
        } else {
            break;
        }
    }
    x
}

fn closed_form<T: Real>(a: T, b: T, c: T, d: T) -> Vec<T> {
    let three = lit::<T>(3.0);
    let bb = b / a;
    let cc = c / a;
    let dd = d / a;
    let shift = bb / three;
    // depressed cubic t³ + p t + q = 0 with x = t − b/3a
    let p = cc - bb * bb / three;
    let q = two::<T>() * bb * bb * bb / lit(27.0) - bb * cc / three + dd;
    let half_q = q / two::<T>();
    let disc = half_q * half_q + (p / three).powi(3);

    if disc > T::zero() {
        let s = disc.sqrt();
        // pick the sign that avoids cancellation
        let u = -(half_q.signum()) * (half_q.abs() + s).cbrt();
        let v = if u != T::zero() { -p / (three * u) } else { T::zero() };
        vec![u + v - shift]
    } else if p == T::zero() {
        vec![-shift]
    } else {
        let m = (-p / three).sqrt();
        let arg = (-half_q / (m * m * m)).max(-T::one()).min(T::one());
        let theta = arg.acos() / three;
        let step = T::TAU() / three;
        (0..3)
            .map(|k| two::<T>() * m * (theta - step * lit(k as f64)).cos() - shift)
            .collect()
    }
}

/// Real roots of `a x² + b x + c`, using the cancellation-free form.
pub fn quadratic_roots<T: Real>(a: T, b: T, c: T) -> Vec<T> {
    if a == T::zero() {
        if b == T::zero() {
            return Vec::new();
        }
        return vec![-c / b];
    }
    let disc = b * b - lit::<T>(4.0) * a * c;
    if disc < T::zero() {
        return Vec::new();
    }
    let sq = disc.sqrt();
    let qq = -(b + b.signum() * sq) / two::<T>();
    if qq == T::zero() {
        return vec![T::zero()];
    }
    let mut r = vec![qq / a, c / qq];
    r.sort_by(|x, y| x.partial_cmp(y).expect("finite roots"));
    r
}

fn dedup<T: Real>(roots: Vec<T>) -> Vec<T> {
    let tol = lit::<T>(1e-9);
    let mut out: Vec<T> = Vec::with_capacity(roots.len());
    for r in roots {
        match out.last() {
            Some(&prev) if (r - prev).abs() <= tol * r.abs().max(prev.abs()) => {}
            _ => out.push(r),
        }
    }
    out
}
