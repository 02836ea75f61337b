//! Real roots of small dense polynomials on a closed interval.
//!
//! Coefficients are stored lowest degree first. Roots are isolated by
//! recursing on the derivative: between consecutive critical points the
//! polynomial is monotone, so a sign change brackets exactly one root.

pub fn eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

pub fn derivative(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(i, &a)| a * i as f64).collect()
}

fn trimmed(c: &[f64]) -> &[f64] {
    let mut end = c.len();
    while end > 0 && c[end - 1] == 0.0 {
        end -= 1;
    }
    &c[..end]
}

/// Sorted roots of `c` in `[lo, hi]` found by sign change, including roots
/// at the endpoints. Roots of even multiplicity that do not change sign are
/// not reported; callers needing them should add `critical_points`.
pub fn roots_in(c: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let c = trimmed(c);
    match c.len() {
        0 | 1 => return Vec::new(),
        2 => {
            let r = -c[0] / c[1];
            return if (lo..=hi).contains(&r) { vec![r] } else { Vec::new() };
        }
        _ => {}
    }
    let mut knots = vec![lo];
    knots.extend(roots_in(&derivative(c), lo, hi));
    knots.push(hi);
    let mut out: Vec<f64> = Vec::new();
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (fa, fb) = (eval(c, a), eval(c, b));
        if fa == 0.0 {
            out.push(a);
        } else if fa.signum() != fb.signum() && fb != 0.0 {
            out.push(bisect(c, a, b, fa));
        }
    }
    if eval(c, hi) == 0.0 {
        out.push(hi);
    }
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// Roots of the derivative in `[lo, hi]`.
pub fn critical_points(c: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    roots_in(&derivative(c), lo, hi)
}

fn bisect(c: &[f64], mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = eval(c, m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Product of two polynomials.
pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `a + s·b`.
pub fn add_scaled(a: &[f64], s: f64, b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len().max(b.len())];
    for (i, &x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, &y) in b.iter().enumerate() {
        out[i] += s * y;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn from_roots(rs: &[f64]) -> Vec<f64> {
        rs.iter().fold(vec![1.0], |p, &r| mul(&p, &[-r, 1.0]))
    }

    #[test]
    fn quartic_roots() {
        let p = from_roots(&[0.1, 0.35, 0.6, 0.9]);
        let r = roots_in(&p, 0.0, 1.0);
        assert_eq!(r.len(), 4);
        for (a, b) in r.iter().zip([0.1, 0.35, 0.6, 0.9]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(roots_in(&p, 0.2, 0.3), Vec::<f64>::new());
    }

    #[test]
    fn endpoint_and_degenerate_cases() {
        assert_eq!(roots_in(&[0.0, 1.0], 0.0, 1.0), vec![0.0]);
        assert_eq!(roots_in(&[3.0], 0.0, 1.0), Vec::<f64>::new());
        assert_eq!(roots_in(&[-1.0, 1.0, 0.0, 0.0], 0.0, 2.0), vec![1.0]);
        // double root is a critical point
        let p = from_roots(&[0.5, 0.5]);
        assert!(critical_points(&p, 0.0, 1.0).iter().any(|&x| (x - 0.5).abs() < 1e-12));
    }

    proptest! {
        #[test]
        fn recovers_separated_roots(mut rs in proptest::collection::vec(0.02f64..0.98, 1..5)) {
            rs.sort_by(f64::total_cmp);
            prop_assume!(rs.windows(2).all(|w| w[1] - w[0] > 1e-2));
            let p = from_roots(&rs);
            let got = roots_in(&p, 0.0, 1.0);
            prop_assert_eq!(got.len(), rs.len());
            for (a, b) in got.iter().zip(&rs) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
