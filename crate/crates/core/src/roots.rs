//! Closed-form real roots of polynomials up to degree three.

/// Leading coefficients smaller than this demote the degree.
pub const DEGENERATE_LEAD: f64 = 1e-12;

fn polish(coeffs: &[f64], mut x: f64) -> f64 {
    // two fixed Newton steps; coefficients in descending order
    for _ in 0..2 {
        let (mut p, mut dp) = (0.0, 0.0);
        for &c in coeffs {
            dp = dp * x + p;
            p = p * x + c;
        }
        if dp == 0.0 || !dp.is_finite() {
            break;
        }
        let next = x - p / dp;
        if !next.is_finite() {
            break;
        }
        x = next;
    }
    x
}

/// Real roots of `b x + c = 0` (empty for a constant polynomial).
pub fn linear_roots(b: f64, c: f64) -> Vec<f64> {
    if b.abs() < DEGENERATE_LEAD {
        Vec::new()
    } else {
        vec![-c / b]
    }
}

/// Real roots of `a x² + b x + c`, ascending.
pub fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a.abs() < DEGENERATE_LEAD {
        return linear_roots(b, c);
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    // cancellation-free pair
    let q = -0.5 * (b + b.signum_nonzero() * sq);
    let mut roots = if q == 0.0 {
        vec![0.0, 0.0]
    } else {
        vec![q / a, c / q]
    };
    for r in roots.iter_mut() {
        *r = polish(&[a, b, c], *r);
    }
    roots.sort_by(f64::total_cmp);
    roots
}

/// Real roots of `a x³ + b x² + c x + d`, ascending. Repeated roots are
/// reported once per multiplicity the discriminant resolves.
pub fn cubic_roots(a: f64, b: f64, c: f64, d: f64) -> Vec<f64> {
    if a.abs() < DEGENERATE_LEAD {
        return quadratic_roots(b, c, d);
    }
    let (b, c, d) = (b / a, c / a, d / a);
    // depressed cubic t³ + p t + q with x = t - b/3
    let shift = b / 3.0;
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let half_q = q / 2.0;
    let third_p = p / 3.0;
    let disc = half_q * half_q + third_p * third_p * third_p;
    let mut roots = if disc > 0.0 {
        let s = disc.sqrt();
        let u = (-half_q + s).cbrt();
        let v = (-half_q - s).cbrt();
        vec![u + v - shift]
    } else if p == 0.0 && q == 0.0 {
        vec![-shift]
    } else {
        // three real roots (trigonometric form)
        let r = (-third_p).sqrt();
        let cos_arg = (-half_q / (r * r * r)).clamp(-1.0, 1.0);
        let theta = cos_arg.acos() / 3.0;
        let two_pi_3 = 2.0 * std::f64::consts::PI / 3.0;
        (0..3)
            .map(|k| 2.0 * r * (theta - two_pi_3 * k as f64).cos() - shift)
            .collect()
    };
    for x in roots.iter_mut() {
        *x = polish(&[1.0, b, c, d], *x);
    }
    roots.sort_by(f64::total_cmp);
    roots
}

/// Smallest strictly positive entry, if any.
pub fn least_positive(roots: &[f64]) -> Option<f64> {
    roots
        .iter()
        .copied()
        .filter(|r| r.is_finite() && *r > 0.0)
        .min_by(f64::total_cmp)
}

trait SignumNonzero {
    fn signum_nonzero(self) -> f64;
}

impl SignumNonzero for f64 {
    fn signum_nonzero(self) -> f64 {
        if self < 0.0 {
            -1.0
        } else {
            1.0
        }
    }
}
