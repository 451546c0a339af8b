// Sums of the form sum_m c_m e^{(lo+m) z}, evaluated so that ratios of two
// such sums stay finite for large |z|.

pub(crate) fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

// sum_m c_m e^{(lo+m) z - shift}
fn scaled(c: &[f64], lo: usize, z: f64, shift: f64) -> f64 {
    let top = c.len() - 1;
    if z <= 0.0 {
        let x = z.exp();
        let acc = c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci);
        acc * (lo as f64 * z - shift).exp()
    } else {
        let t = (-z).exp();
        let acc = c.iter().fold(0.0, |acc, &ci| acc * t + ci);
        acc * ((lo + top) as f64 * z - shift).exp()
    }
}

pub(crate) fn eval(c: &[f64], lo: usize, z: f64) -> f64 {
    scaled(c, lo, z, 0.0)
}

/// `(sum num_m e^{(nlo+m) z}) / (sum den_m e^{(dlo+m) z})`.
pub(crate) fn ratio(num: &[f64], nlo: usize, den: &[f64], dlo: usize, z: f64) -> f64 {
    let shift = if z > 0.0 {
        let top = (nlo + num.len() - 1).max(dlo + den.len() - 1);
        top as f64 * z
    } else {
        0.0
    };
    scaled(num, nlo, z, shift) / scaled(den, dlo, z, shift)
}

/// Same as [`ratio`] but also returns the scaled denominator so callers can
/// check it against zero.
pub(crate) fn ratio_checked(num: &[f64], nlo: usize, den: &[f64], dlo: usize, z: f64) -> (f64, f64) {
    let shift = if z > 0.0 {
        let top = (nlo + num.len() - 1).max(dlo + den.len() - 1);
        top as f64 * z
    } else {
        0.0
    };
    let d = scaled(den, dlo, z, shift);
    (scaled(num, nlo, z, shift) / d, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_matches_direct_and_survives_large_z() {
        let num = [1.0, -2.0, 3.0];
        let den = [2.0, 0.5, 1.0, 4.0];
        for z in [-3.0, -0.2, 0.0, 0.7, 2.5] {
            let e: f64 = f64::exp(z);
            let n = e * (1.0 - 2.0 * e + 3.0 * e * e);
            let d = 2.0 + 0.5 * e + e * e + 4.0 * e * e * e;
            assert!((ratio(&num, 1, &den, 0, z) - n / d).abs() < 1e-14);
        }
        let big = ratio(&num, 1, &den, 0, 500.0);
        assert!((big - 0.75).abs() < 1e-12);
    }

    #[test]
    fn poly_mul_small() {
        assert_eq!(poly_mul(&[1.0, 1.0], &[1.0, -1.0]), vec![1.0, 0.0, -1.0]);
    }
}
