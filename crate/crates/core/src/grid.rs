//! Uniform θ-grids: sampling series and recovering coefficients by FFT.

use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{KamError, Result};
use crate::scalar::{cabs, CMat, Real, C};
use crate::series::{FourierSeries, MultiIndex};

/// Relative spectral mass allowed in the outer half of the resolved band.
pub const ALIAS_TOL: f64 = 1e-12;

/// Tensor grid with `g` equispaced points per axis on `[0, 2π)^n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ThetaGrid {
    pub n: usize,
    pub g: usize,
}

impl ThetaGrid {
    pub fn new(n: usize, g: usize) -> Self {
        ThetaGrid { n, g }
    }

    /// Smallest power-of-two grid that resolves modes up to `radius`
    /// with a factor-four margin, bounded below by `min_g`.
    pub fn for_radius(n: usize, radius: i64, min_g: usize) -> Self {
        let want = (4 * (radius.max(0) as usize + 1)).max(min_g).max(4);
        ThetaGrid::new(n, want.next_power_of_two())
    }

    pub fn len(&self) -> usize {
        self.g.pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid point with flat index `idx` (axis 0 varies fastest).
    pub fn point<T: Real>(&self, idx: usize) -> Vec<T> {
        let mut rem = idx;
        let h = T::two_pi() / T::lit(self.g as f64);
        (0..self.n)
            .map(|_| {
                let m = rem % self.g;
                rem /= self.g;
                h * T::lit(m as f64)
            })
            .collect()
    }

    pub fn points<T: Real>(&self) -> Vec<Vec<T>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }
}

/// Values of `s` at every grid point.
pub fn sample<T: Real>(s: &FourierSeries<T>, grid: &ThetaGrid) -> Vec<CMat<T>> {
    let pts: Vec<Vec<T>> = grid.points();
    pts.par_iter().map(|t| s.evaluate(t)).collect()
}

/// Recovers the coefficients of a function sampled on `grid`.
///
/// Returns the series (Nyquist modes and coefficients at rounding level
/// excluded) and the fraction of spectral mass found in the outer half
/// band, which signals under-resolution when it is not negligible.
pub fn analyze<T: Real>(
    values: &[CMat<T>],
    grid: &ThetaGrid,
    rows: usize,
    cols: usize,
) -> Result<(FourierSeries<T>, T)> {
    let total = grid.len();
    if values.len() != total {
        return Err(KamError::Dimension(format!(
            "{} samples supplied for a grid of {total} points",
            values.len()
        )));
    }
    let g = grid.g;
    let mut planner = FftPlanner::<T>::new();
    let fft = planner.plan_fft_forward(g);
    let scale = T::one() / T::lit(total as f64);

    // one transformed buffer per matrix entry
    let entries: Vec<Vec<C<T>>> = (0..rows * cols)
        .into_par_iter()
        .map(|e| {
            let (r, c) = (e / cols, e % cols);
            let mut buf: Vec<C<T>> = values.iter().map(|m| m[(r, c)]).collect();
            let mut line = vec![C::new(T::zero(), T::zero()); g];
            let mut stride = 1;
            for _axis in 0..grid.n {
                for start in 0..total {
                    // first element of a line along this axis
                    if (start / stride) % g != 0 {
                        continue;
                    }
                    for (m, slot) in line.iter_mut().enumerate() {
                        *slot = buf[start + m * stride];
                    }
                    fft.process(&mut line);
                    for (m, v) in line.iter().enumerate() {
                        buf[start + m * stride] = *v;
                    }
                }
                stride *= g;
            }
            buf
        })
        .collect();

    let mut out = FourierSeries::zeros(grid.n, rows, cols);
    let mut outer = T::zero();
    let mut all = T::zero();
    let mut peak = T::zero();
    for v in &entries {
        for z in v {
            let a = cabs(*z) * scale;
            if a > peak {
                peak = a;
            }
        }
    }
    let floor = peak * T::lit(64.0) * T::eps();
    #[allow(clippy::needless_range_loop)] // idx addresses every entry's spectrum
    for idx in 0..total {
        let mut rem = idx;
        let mut k = Vec::with_capacity(grid.n);
        let mut nyquist = false;
        let mut is_outer = false;
        for _ in 0..grid.n {
            let m = rem % g;
            rem /= g;
            if 2 * m == g {
                nyquist = true;
            }
            let kj = if 2 * m < g {
                m as i64
            } else {
                m as i64 - g as i64
            };
            if 4 * kj.unsigned_abs() as usize > g {
                is_outer = true;
            }
            k.push(kj as i32);
        }
        let coeff = CMat::from_fn(rows, cols, |r, c| entries[r * cols + c][idx] * scale);
        let mass = coeff.iter().fold(T::zero(), |a, z| a + cabs(*z));
        all += mass;
        if (is_outer || nyquist) && mass > floor {
            outer += mass;
        }
        if nyquist || mass <= floor {
            continue;
        }
        out.set(MultiIndex::new(k), coeff);
    }
    let frac = if all > T::zero() {
        outer / all
    } else {
        T::zero()
    };
    Ok((out.pruned(), frac))
}

/// Builds the series of a θ-dependent matrix function by sampling it on
/// successively finer grids until the spectrum is resolved.
pub fn synthesize<T, F>(
    n: usize,
    rows: usize,
    cols: usize,
    g0: usize,
    gmax: usize,
    f: F,
) -> Result<FourierSeries<T>>
where
    T: Real,
    F: Fn(&[T]) -> Result<CMat<T>> + Sync,
{
    let mut g = g0.max(4).next_power_of_two();
    loop {
        let grid = ThetaGrid::new(n, g);
        let pts: Vec<Vec<T>> = grid.points();
        let vals: Result<Vec<CMat<T>>> = pts.par_iter().map(|t| f(t)).collect();
        let (s, frac) = analyze(&vals?, &grid, rows, cols)?;
        if frac <= T::lit(ALIAS_TOL) {
            return Ok(s);
        }
        if 2 * g > gmax {
            return Err(KamError::Aliasing(g));
        }
        log::debug!("grid {g} under-resolved (outer mass {frac:e}); refining");
        g *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_then_analyze_recovers_coefficients() {
        let mut s = FourierSeries::<f64>::zeros(2, 2, 1);
        s.set(
            MultiIndex::new(vec![1, -2]),
            CMat::from_row_slice(2, 1, &[C::new(1.0, 2.0), C::new(-0.5, 0.0)]),
        );
        s.set(
            MultiIndex::new(vec![0, 0]),
            CMat::from_row_slice(2, 1, &[C::new(3.0, 0.0), C::new(0.0, 0.25)]),
        );
        let grid = ThetaGrid::for_radius(2, s.support_radius(), 8);
        let vals = sample(&s, &grid);
        let (t, frac) = analyze(&vals, &grid, 2, 1).unwrap();
        assert!(frac < 1e-14);
        assert_eq!(t.len(), 2);
        for (k, m) in s.iter() {
            assert!((t.coeff_or_zero(k) - m).norm() < 1e-14);
        }
    }

    #[test]
    fn synthesize_refines_until_resolved() {
        // exp(a cos θ) has every harmonic; small `a` decays fast
        let a = 0.3;
        let s = synthesize::<f64, _>(1, 1, 1, 4, 256, |t| {
            Ok(CMat::from_element(
                1,
                1,
                C::new((a * t[0].cos()).exp(), 0.0),
            ))
        })
        .unwrap();
        // mean equals the modified Bessel function I0(a)
        let i0 = 1.0
            + a * a / 4.0
            + a.powi(4) / 64.0
            + a.powi(6) / 2304.0
            + a.powi(8) / 147456.0
            + a.powi(10) / 14745600.0;
        assert!((s.mean()[(0, 0)].re - i0).abs() < 1e-13);
        let t = 1.1;
        assert!((s.evaluate(&[t])[(0, 0)].re - (a * t.cos()).exp()).abs() < 1e-13);
    }

    #[test]
    fn unresolvable_function_reports_aliasing() {
        let r = synthesize::<f64, _>(1, 1, 1, 4, 32, |t| {
            Ok(CMat::from_element(1, 1, C::new(t[0].sin().abs(), 0.0)))
        });
        assert!(matches!(r, Err(KamError::Aliasing(_))));
    }
}
