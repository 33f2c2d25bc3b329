//! Analytic approximation of finitely smooth torus data by a flat Fourier
//! multiplier, and the dyadic splitting of a perturbation into parts of
//! decreasing size.

use crate::error::{KamError, Result};
use crate::scalar::{coeff_norm, Real};
use crate::schedule::Schedule;
use crate::series::{FourierSeries, MultiIndex};
use crate::symbol::{QuadraticSymbol, RealBlocks, SymbolClass};

/// `e^{-1/x}` for `x > 0`, zero otherwise.
fn flat<T: Real>(x: T) -> T {
    if x > T::zero() {
        (-T::one() / x).exp()
    } else {
        T::zero()
    }
}

/// Radial cut-off profile: 1 on `[0, ½]`, 0 on `[1, ∞)`, and the
/// `C^∞` smooth step `g(1 - r)/(g(1 - r) + g(r))`, `g(x) = e^{-1/x}`,
/// `r = 2t - 1`, in between.
pub fn bump_multiplier<T: Real>(t: T) -> T {
    let half = T::lit(0.5);
    if t <= half {
        return T::one();
    }
    if t >= T::one() {
        return T::zero();
    }
    let r = T::lit(2.0) * t - T::one();
    let a = flat(T::one() - r);
    let b = flat(r);
    a / (a + b)
}

/// `ĝ(k) = φ(σ|k|₂) f̂(k)`.
pub fn smooth_approx<T: Real>(f: &FourierSeries<T>, sigma: T) -> FourierSeries<T> {
    let mut out = FourierSeries::zeros(f.n(), f.rows(), f.cols());
    for (k, c) in f.iter() {
        let w = bump_multiplier(sigma * k.l2::<T>());
        if w > T::zero() {
            out.set(k.clone(), c * crate::scalar::cr(w));
        }
    }
    out
}

/// [`smooth_approx`] applied to every block of a symbol.
pub fn smooth_symbol<T: Real>(q: &QuadraticSymbol<T>, sigma: T) -> QuadraticSymbol<T> {
    q.map_series(|s| smooth_approx(s, sigma))
}

/// Claimed bound `‖Ŵ(k)‖ ≤ C (1 + |k|₂)^{-ℓ-1}` on every block.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DecayCertificate<T> {
    pub ell: T,
    pub c_ell: T,
}

/// Smallest `C` for which the blocks satisfy the decay bound of order `ell`.
pub fn measured_decay_constant<T: Real>(w: &RealBlocks<T>, ell: T) -> T {
    let mut best = T::zero();
    for s in [&w.xx, &w.xixi, &w.xxi, &w.x, &w.xi, &w.theta] {
        for (k, c) in s.iter() {
            let v = coeff_norm(c) * (T::one() + k.l2::<T>()).powf(ell + T::one());
            if v > best {
                best = v;
            }
        }
    }
    best
}

/// Real-variable perturbation whose regularity has been checked.
#[derive(Clone, Debug)]
pub struct SmoothInput<T: Real> {
    pub n: usize,
    pub d: usize,
    pub blocks: RealBlocks<T>,
    pub cert: DecayCertificate<T>,
}

const INGEST_TOL: f64 = 1e-12;

impl<T: Real> SmoothInput<T> {
    /// Validates shapes, real-valuedness and the decay certificate.
    pub fn new(blocks: RealBlocks<T>, cert: DecayCertificate<T>) -> Result<Self> {
        let n = blocks.theta.n();
        let d = blocks.xx.rows();
        let shapes = [
            (&blocks.xx, (d, d)),
            (&blocks.xixi, (d, d)),
            (&blocks.xxi, (d, d)),
            (&blocks.x, (d, 1)),
            (&blocks.xi, (d, 1)),
            (&blocks.theta, (1, 1)),
        ];
        for (s, want) in shapes {
            if s.shape() != want || s.n() != n {
                return Err(KamError::Dimension(format!(
                    "block of shape {:?} on T^{}, expected {want:?} on T^{n}",
                    s.shape(),
                    s.n()
                )));
            }
        }
        let scale = T::one() + measured_decay_constant(&blocks, T::zero());
        if blocks.reality_defect() > T::lit(INGEST_TOL) * scale {
            return Err(KamError::Reality(
                "perturbation blocks are not real functions".into(),
            ));
        }
        if !cert.ell.is_finite() || cert.ell <= T::zero() {
            return Err(KamError::Config(format!(
                "decay order {} must be positive",
                cert.ell
            )));
        }
        let c = measured_decay_constant(&blocks, cert.ell);
        if c > cert.c_ell * (T::one() + T::lit(INGEST_TOL)) {
            return Err(KamError::Config(format!(
                "coefficients decay slower than claimed: need C >= {c:e}, certificate gives {:e}",
                cert.c_ell
            )));
        }
        Ok(SmoothInput { n, d, blocks, cert })
    }

    /// Same function in the complex variables.
    pub fn symbol(&self) -> Result<QuadraticSymbol<T>> {
        QuadraticSymbol::from_real_blocks(&self.blocks)
    }
}

#[derive(Clone, Debug)]
pub struct DecompositionPart<T: Real> {
    /// `q_{0,m}`, normalized by its budget.
    pub symbol: QuadraticSymbol<T>,
    /// Strip on which the part is analytic.
    pub sigma: T,
    /// Budget `ε_m`.
    pub eps: T,
}

#[derive(Clone, Debug)]
pub struct Decomposition<T: Real> {
    pub parts: Vec<DecompositionPart<T>>,
    /// `q0 - Σ ε_m q_{0,m}` at strip width zero.
    pub residual_norm: T,
}

impl<T: Real> Decomposition<T> {
    /// `Σ ε_m q_{0,m}`.
    pub fn reconstruct(&self) -> Option<QuadraticSymbol<T>> {
        let mut it = self.parts.iter();
        let first = it.next()?;
        Some(it.fold(first.symbol.scale_real(first.eps), |acc, p| {
            acc.add(&p.symbol.scale_real(p.eps))
        }))
    }

    /// `max_m [q_{0,m}]_{σ_m}`.
    pub fn max_scaled_norm(&self) -> T {
        self.parts
            .iter()
            .map(|p| p.symbol.norm(p.sigma))
            .fold(T::zero(), |a, b| if b > a { b } else { a })
    }
}

/// Splits `q0` (the full perturbation, of size `ε_0`) as
/// `q0 = Σ_{m<M} ε_m q_{0,m} + residual` with
/// `ε_0 q_{0,0} = S_{σ_0} q0` and `ε_m q_{0,m} = (S_{σ_m} - S_{σ_{m-1}}) q0`.
pub fn decompose<T: Real>(
    q0: &QuadraticSymbol<T>,
    sched: &Schedule<T>,
    parts: usize,
) -> Result<Decomposition<T>> {
    if parts == 0 {
        return Err(KamError::Config(
            "decomposition needs at least one part".into(),
        ));
    }
    if parts > sched.len() {
        return Err(KamError::Config(format!(
            "{parts} parts requested but the schedule only has {} steps",
            sched.len()
        )));
    }
    let smoothed: Vec<QuadraticSymbol<T>> = (0..parts)
        .map(|m| smooth_symbol(q0, sched.sigma(m)))
        .collect();
    let mut out = Vec::with_capacity(parts);
    for m in 0..parts {
        let delta = if m == 0 {
            smoothed[0].clone()
        } else {
            smoothed[m].sub(&smoothed[m - 1])
        };
        let sym = delta.scale_real(T::one() / sched.eps(m)).pruned();
        out.push(DecompositionPart {
            symbol: sym,
            sigma: sched.sigma(m),
            eps: sched.eps(m),
        });
    }
    let residual_norm = q0.sub(&smoothed[parts - 1]).norm(T::zero());
    debug_assert!(out.iter().all(|p| p.symbol.reality_defect(SymbolClass::Re)
        <= T::lit(1e-9) * (T::one() + p.symbol.norm(T::zero()))));
    Ok(Decomposition {
        parts: out,
        residual_norm,
    })
}

/// Series with `‖f̂(k)‖ = A (1 + |k|₂)^{-ℓ-1}` on `|k|_1 ≤ radius`, used to
/// probe approximation rates.
pub fn decay_profile<T: Real>(n: usize, ell: T, amplitude: T, radius: i64) -> FourierSeries<T> {
    let mut s = FourierSeries::zeros(n, 1, 1);
    for k in MultiIndex::ball(n, radius) {
        let a = amplitude * (T::one() + k.l2::<T>()).powf(-(ell + T::one()));
        s.set(
            k,
            crate::scalar::CMat::from_element(1, 1, crate::scalar::cr(a)),
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_symbol, seeded};
    use crate::schedule::{make_schedule, ScheduleParams};

    #[test]
    fn bump_profile() {
        assert_eq!(bump_multiplier(0.0), 1.0);
        assert_eq!(bump_multiplier(0.5), 1.0);
        assert_eq!(bump_multiplier(1.5), 0.0);
        assert!((bump_multiplier(0.75f64) - 0.5).abs() < 1e-15);
        // closed form on (½, 1): 1/(1 + exp(1/(1-r) - 1/r))
        let t = 0.6;
        let r: f64 = 2.0 * t - 1.0;
        let want = 1.0 / (1.0 + (1.0 / (1.0 - r) - 1.0 / r).exp());
        assert!((bump_multiplier(t) - want).abs() < 1e-15);
        let mut prev = 1.0;
        for i in 0..=1000 {
            let v = bump_multiplier(0.5 + i as f64 / 2000.0);
            assert!(v <= prev && (0.0..=1.0).contains(&v));
            prev = v;
        }
    }

    #[test]
    fn flat_region_leaves_low_modes_alone() {
        let mut rng = seeded(31);
        let q = random_symbol::<f64, _>(&mut rng, 2, 2, 3, SymbolClass::Re);
        let sm = smooth_symbol(&q, 0.1);
        assert_eq!(sm, q);
        let zero = FourierSeries::<f64>::zeros(1, 2, 2);
        assert!(smooth_approx(&zero, 0.3).is_empty());
        // σ = 1 keeps only |k|₂ < 1
        let s = smooth_symbol(&q, 1.0);
        assert_eq!(s.support_radius(), 0);
        assert!(s.reality_defect(SymbolClass::Re) < 1e-15);
    }

    #[test]
    fn approximation_rate_follows_decay_order() {
        for ell in [2.0, 3.0, 4.0] {
            let f = decay_profile::<f64>(1, ell, 1.0, 1 << 14);
            let sig: Vec<f64> = (3..=8).map(|j| 2f64.powi(-j)).collect();
            let def: Vec<f64> = sig
                .iter()
                .map(|&s| (&f - &smooth_approx(&f, s)).strip_norm(0.0))
                .collect();
            // least-squares slope in log-log
            let xs: Vec<f64> = sig.iter().map(|s| s.ln()).collect();
            let ys: Vec<f64> = def.iter().map(|d| d.ln()).collect();
            let mx = xs.iter().sum::<f64>() / xs.len() as f64;
            let my = ys.iter().sum::<f64>() / ys.len() as f64;
            let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
            let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
            assert!(num / den >= ell - 0.2, "ell {ell}: slope {}", num / den);
        }
    }

    fn sched() -> Schedule<f64> {
        make_schedule(
            &ScheduleParams {
                eps0: 1e-2,
                rho: 0.05,
                ell: 2.0,
                beta: 0.5,
                gamma0: 0.05,
                tau: None,
                eps_star: None,
            },
            1,
        )
        .unwrap()
    }

    #[test]
    fn decomposition_telescopes() {
        let sc = sched();
        let mut blocks = RealBlocks::<f64>::zeros(1, 1);
        blocks.xx = decay_profile(1, 3.0, 0.01, 400);
        let q0 = QuadraticSymbol::from_real_blocks(&blocks).unwrap();
        let dec = decompose(&q0, &sc, 6).unwrap();
        let sum = dec.reconstruct().unwrap();
        let last = smooth_symbol(&q0, sc.sigma(5));
        assert!(sum.sub(&last).norm(0.0) <= 1e-13 * q0.norm(0.0));
        assert!((q0.sub(&sum).norm(0.0) - dec.residual_norm).abs() < 1e-13);
        for (m, p) in dec.parts.iter().enumerate() {
            assert!(p.symbol.reality_defect(SymbolClass::Re) < 1e-14);
            let r = 1.0 / sc.sigma(m);
            for s in [p.symbol.quad(), p.symbol.lin(), p.symbol.constant()] {
                assert!(s.iter().all(|(k, _)| k.l2::<f64>() <= r));
            }
        }
        assert!(dec.max_scaled_norm().is_finite());
    }

    #[test]
    fn trig_polynomial_lands_in_first_part() {
        let sc = sched();
        let mut rng = seeded(32);
        let q0 = random_symbol::<f64, _>(&mut rng, 1, 2, 2, SymbolClass::Re);
        let dec = decompose(&q0, &sc, 4).unwrap();
        assert!(dec.parts[0].symbol.scale_real(sc.eps(0)).sub(&q0).norm(0.0) < 1e-15);
        assert!(dec.parts[1..].iter().all(|p| p.symbol.norm(0.0) == 0.0));
        assert_eq!(dec.residual_norm, 0.0);
        let one = decompose(&q0, &sc, 1).unwrap();
        assert_eq!(one.parts.len(), 1);
        assert!(decompose(&q0, &sc, 0).is_err());
    }

    #[test]
    fn certificate_is_enforced() {
        let mut blocks = RealBlocks::<f64>::zeros(1, 1);
        blocks.xx = decay_profile(1, 2.0, 1.0, 50);
        let ok = DecayCertificate {
            ell: 2.0,
            c_ell: 1.0,
        };
        assert!(SmoothInput::new(blocks.clone(), ok).is_ok());
        let too_fast = DecayCertificate {
            ell: 3.0,
            c_ell: 1.0,
        };
        assert!(matches!(
            SmoothInput::new(blocks, too_fast),
            Err(KamError::Config(_))
        ));
    }
}
