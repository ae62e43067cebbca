//! Multi-dimensional FFT over row-major arrays, built from 1-d rustfft plans.

use num_complex::Complex64;
use rustfft::FftPlanner;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// `X(f) = Σ x(s) e^{−2πi f·s/N}`, unnormalized.
    Forward,
    /// `x(s) = Σ X(f) e^{+2πi f·s/N}`, unnormalized.
    Inverse,
}

/// In-place transform of `data` laid out row-major with the given shape.
pub fn transform(data: &mut [Complex64], shape: &[usize], dir: Direction) {
    let total: usize = shape.iter().product();
    assert_eq!(data.len(), total, "array does not match its shape");
    let mut planner = FftPlanner::<f64>::new();
    let mut stride = total;
    for &n in shape {
        stride /= n;
        if n == 1 {
            continue;
        }
        let plan = match dir {
            Direction::Forward => planner.plan_fft_forward(n),
            Direction::Inverse => planner.plan_fft_inverse(n),
        };
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        let block = n * stride;
        for outer in (0..total).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for (i, z) in line.iter_mut().enumerate() {
                    *z = data[base + i * stride];
                }
                plan.process_with_scratch(&mut line, &mut scratch);
                for (i, z) in line.iter().enumerate() {
                    data[base + i * stride] = *z;
                }
            }
        }
    }
}

/// Smallest `2^a 3^b 5^c` that is at least `n`.
pub fn good_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn matches_direct_dft_in_two_dimensions() {
        let shape = [3, 4];
        let x: Vec<Complex64> = (0..12)
            .map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos()))
            .collect();
        let mut y = x.clone();
        transform(&mut y, &shape, Direction::Forward);
        for f0 in 0..3 {
            for f1 in 0..4 {
                let mut s = Complex64::new(0.0, 0.0);
                for a in 0..3 {
                    for b in 0..4 {
                        let ph = -2.0 * PI * (f0 * a) as f64 / 3.0 - 2.0 * PI * (f1 * b) as f64 / 4.0;
                        s += x[a * 4 + b] * Complex64::from_polar(1.0, ph);
                    }
                }
                assert!((s - y[f0 * 4 + f1]).norm() < 1e-12);
            }
        }
        transform(&mut y, &shape, Direction::Inverse);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b / 12.0).norm() < 1e-12);
        }
    }

    #[test]
    fn good_sizes() {
        assert_eq!(good_size(13), 15);
        assert_eq!(good_size(21), 24);
        assert_eq!(good_size(41), 45);
        assert_eq!(good_size(64), 64);
        assert_eq!(good_size(7), 8);
    }
}
