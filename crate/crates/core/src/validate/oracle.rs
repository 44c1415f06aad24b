//! Independent reference computations used by the validation suite.

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::FftPlanner;

/// 2D FFT over a row-major `rows x cols` buffer.
fn fft2(buf: &mut [Complex64], rows: usize, cols: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let (fr, fc) = if inverse {
        (planner.plan_fft_inverse(cols), planner.plan_fft_inverse(rows))
    } else {
        (planner.plan_fft_forward(cols), planner.plan_fft_forward(rows))
    };
    for row in buf.chunks_exact_mut(cols) {
        fr.process(row);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); rows];
    for c in 0..cols {
        for r in 0..rows {
            col[r] = buf[r * cols + c];
        }
        fc.process(&mut col);
        for r in 0..rows {
            buf[r * cols + c] = col[r];
        }
    }
}

/// Linear cross-correlation `c[s] = sum_p a[p + s] b[p]` for shifts
/// `s in (-n, n)` on each axis, via zero-padded FFTs.
///
/// Returned as a `(2n - 1) x (2n - 1)` array indexed by `s + n - 1`.
pub fn fft_cross_correlation(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let n = a.nrows();
    assert_eq!(a.dim(), (n, n));
    assert_eq!(b.dim(), (n, n));
    let size = 2 * n;
    let pad = |x: &Array2<f64>| {
        let mut v = vec![Complex64::new(0.0, 0.0); size * size];
        for ((i, j), &val) in x.indexed_iter() {
            v[i * size + j] = Complex64::new(val, 0.0);
        }
        v
    };
    let mut fa = pad(a);
    let mut fb = pad(b);
    fft2(&mut fa, size, size, false);
    fft2(&mut fb, size, size, false);
    // A(k) conj(B(k)) transforms back to sum_p a[p + s] b[p] at cyclic index s.
    let mut prod: Vec<Complex64> = fa.iter().zip(&fb).map(|(x, y)| x * y.conj()).collect();
    fft2(&mut prod, size, size, true);
    let scale = 1.0 / (size * size) as f64;
    let m = 2 * n - 1;
    Array2::from_shape_fn((m, m), |(u, v)| {
        let si = (u + size - (n - 1)) % size;
        let sj = (v + size - (n - 1)) % size;
        prod[si * size + sj].re * scale
    })
}

/// Intensity envelope `|F(k x / f_D)|^2` of a Gaussian spectrum with rms
/// intensity width `sigma_q`, in closed form.
pub fn gaussian_envelope(x: [f64; 2], sigma_q: f64, k: f64, f_d: f64) -> f64 {
    let w = sigma_q * f_d / k;
    (-(x[0] * x[0] + x[1] * x[1]) / (2.0 * w * w)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_direct_sum() {
        let n = 6;
        let a = Array2::from_shape_fn((n, n), |(i, j)| ((i * 7 + j * 3) % 5) as f64);
        let b = Array2::from_shape_fn((n, n), |(i, j)| ((i + 2 * j) % 3) as f64 - 0.5);
        let c = fft_cross_correlation(&a, &b);
        let ni = n as isize;
        for si in -(ni - 1)..ni {
            for sj in -(ni - 1)..ni {
                let mut s = 0.0;
                for i in 0..ni {
                    for j in 0..ni {
                        let (u, v) = (i + si, j + sj);
                        if (0..ni).contains(&u) && (0..ni).contains(&v) {
                            s += a[[u as usize, v as usize]] * b[[i as usize, j as usize]];
                        }
                    }
                }
                let got = c[[(si + ni - 1) as usize, (sj + ni - 1) as usize]];
                assert!((got - s).abs() < 1e-12, "{si},{sj}: {got} vs {s}");
            }
        }
    }
}
