use std::cmp::Ordering;

use crate::imaging::{GrayImage, Mask};

/// Compares `a/b` with `c/d` exactly (`b`, `d` nonzero) by expanding both
/// fractions as continued fractions in lockstep.
fn cmp_fractions(mut a: u128, mut b: u128, mut c: u128, mut d: u128) -> Ordering {
    loop {
        let (q1, r1) = (a / b, a % b);
        let (q2, r2) = (c / d, c % d);
        return if q1 != q2 {
            q1.cmp(&q2)
        } else {
            match (r1 == 0, r2 == 0) {
                (true, true) => Ordering::Equal,
                (true, false) => Ordering::Less,
                (false, true) => Ordering::Greater,
                (false, false) => {
                    // r1/b vs r2/d has the same order as d/r2 vs b/r1.
                    (a, b, c, d) = (d, r2, b, r1);
                    continue;
                }
            }
        };
    }
}

/// Otsu's global threshold.
///
/// Returns the level `t` maximizing the between-class variance of the
/// classes `p <= t` and `p > t`, the smallest such `t` on ties, together
/// with the foreground mask `p > t`. Scores are compared exactly in integer
/// arithmetic. An image with a single intensity returns that intensity and
/// an empty mask.
pub fn otsu_threshold(img: &GrayImage) -> (u8, Mask) {
    let mut hist = [0u64; 256];
    for &p in img.pixels() {
        hist[p as usize] += 1;
    }
    let n = img.pixels().len() as u64;
    let total: u64 = hist.iter().enumerate().map(|(v, &c)| v as u64 * c).sum();

    let mut best: Option<(u8, u128, u128)> = None;
    let (mut n0, mut s0) = (0u64, 0u64);
    for t in 0..256usize {
        n0 += hist[t];
        s0 += t as u64 * hist[t];
        let n1 = n - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        // omega0 * omega1 * (mu0 - mu1)^2 = (N*s0 - n0*S)^2 / (n0 * n1 * N^2)
        let diff = (i128::from(n) * i128::from(s0) - i128::from(n0) * i128::from(total)).unsigned_abs();
        let num = diff * diff;
        let den = u128::from(n0) * u128::from(n1);
        let better = match best {
            None => true,
            Some((_, bn, bd)) => cmp_fractions(num, den, bn, bd) == Ordering::Greater,
        };
        if better {
            best = Some((t as u8, num, den));
        }
    }

    let t = match best {
        Some((t, _, _)) => t,
        None => img.pixels()[0],
    };
    let mask = Mask::from_fn(img.width(), img.height(), |x, y| img.get(x, y) > t);
    (t, mask)
}
