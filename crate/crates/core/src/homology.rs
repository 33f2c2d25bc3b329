//! Mode-by-mode solution of the linearized conjugacy equation
//!
//! `ε{h, f} + ε q - ε ω·∂_θ f = ẽ + <z, Ñ z̄> + r`
//!
//! for a generator `f`, given `h = e + <z, N z̄>` and a perturbation `q`
//! in the Re class. Modes up to `|k|_1 ≤ K` are removed;
//! the averages of the `zz̄` and θ blocks are kept in `Ñ` and `ẽ`, and the
//! tail beyond `K` is returned as the remainder `r`.

use crate::error::{KamError, Result};
use crate::linalg::HermitianEigen;
use crate::scalar::{ci, conj, cr, CMat, Real, C};
use crate::series::{FourierSeries, MultiIndex};
use crate::symbol::{NormalForm, QuadraticSymbol, SymbolClass};

/// Which block equation a coefficient belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SylvesterSide {
    /// `(⟨k,ω⟩ - N) F + F N = -i R`
    ZZbar,
    /// `(⟨k,ω⟩ - N) F - F Nᵀ = -i R`
    ZZ,
    /// `⟨k,ω⟩ F + F N + Nᵀ F = -i R`
    ZbarZbar,
    /// `(⟨k,ω⟩ - N) F = -i R`
    Z,
    /// `(⟨k,ω⟩ + Nᵀ) F = -i R`
    Zbar,
}

impl SylvesterSide {
    fn name(self) -> &'static str {
        match self {
            SylvesterSide::ZZbar => "zzbar",
            SylvesterSide::ZZ => "zz",
            SylvesterSide::ZbarZbar => "zbarzbar",
            SylvesterSide::Z => "z",
            SylvesterSide::Zbar => "zbar",
        }
    }
}

fn divide<T: Real>(num: C<T>, div: T, threshold: T, k: &MultiIndex, family: &str) -> Result<C<T>> {
    if div.mag() < threshold || div == T::zero() {
        return Err(KamError::SmallDivisor {
            k: k.to_vec(),
            family: family.to_string(),
            value: div.to_f64_lossy(),
            threshold: threshold.to_f64_lossy(),
        });
    }
    Ok(num * ci(-T::one()) / cr(div))
}

/// Solves one coefficient equation in the eigenbasis of `N`.
///
/// Divisors with modulus below `threshold` (or exactly zero) are reported
/// as [`KamError::SmallDivisor`].
pub fn solve_sylvester<T: Real>(
    eig: &HermitianEigen<T>,
    kw: T,
    rhs: &CMat<T>,
    side: SylvesterSide,
    threshold: T,
    k: &MultiIndex,
) -> Result<CMat<T>> {
    let u = &eig.vectors;
    let mu = &eig.values;
    let d = eig.dim();
    let vector = matches!(side, SylvesterSide::Z | SylvesterSide::Zbar);
    let want = if vector { (d, 1) } else { (d, d) };
    if rhs.shape() != want {
        return Err(KamError::Dimension(format!(
            "{} right-hand side is {:?}, expected {:?}",
            side.name(),
            rhs.shape(),
            want
        )));
    }
    let ub = conj(u);
    let ut = u.transpose();
    let ua = u.adjoint();
    match side {
        SylvesterSide::ZZbar => {
            let mut x = &ua * rhs * u;
            for a in 0..d {
                for b in 0..d {
                    x[(a, b)] = divide(x[(a, b)], kw - mu[a] + mu[b], threshold, k, side.name())?;
                }
            }
            Ok(u * x * &ua)
        }
        SylvesterSide::ZZ => {
            let mut x = &ua * rhs * &ub;
            for a in 0..d {
                for b in 0..d {
                    x[(a, b)] = divide(x[(a, b)], kw - mu[a] - mu[b], threshold, k, side.name())?;
                }
            }
            Ok(u * x * &ut)
        }
        SylvesterSide::ZbarZbar => {
            let mut x = &ut * rhs * u;
            for a in 0..d {
                for b in 0..d {
                    x[(a, b)] = divide(x[(a, b)], kw + mu[a] + mu[b], threshold, k, side.name())?;
                }
            }
            Ok(&ub * x * &ua)
        }
        SylvesterSide::Z => {
            let mut x = &ua * rhs;
            for a in 0..d {
                x[(a, 0)] = divide(x[(a, 0)], kw - mu[a], threshold, k, side.name())?;
            }
            Ok(u * x)
        }
        SylvesterSide::Zbar => {
            let mut x = &ut * rhs;
            for a in 0..d {
                x[(a, 0)] = divide(x[(a, 0)], kw + mu[a], threshold, k, side.name())?;
            }
            Ok(&ub * x)
        }
    }
}

#[derive(Clone, Debug)]
pub struct HomologicalSolution<T: Real> {
    /// Generator; satisfies the same coefficient relations as `q`.
    pub f: QuadraticSymbol<T>,
    /// Correction to the normal-form matrix, `ε Q̂^{zz̄}(0)`.
    pub n_tilde: CMat<T>,
    /// Correction to the energy, `ε Q̂^θ(0)`.
    pub e_tilde: T,
    /// `ε` times the modes of `q` beyond `K`.
    pub remainder: QuadraticSymbol<T>,
}

/// Tolerance on the reality structure of inputs, relative to their size.
const REALITY_TOL: f64 = 1e-9;

#[allow(clippy::too_many_arguments)]
pub fn solve_homological<T: Real>(
    h: &NormalForm<T>,
    q: &QuadraticSymbol<T>,
    omega: &[T],
    kmax: i64,
    gamma: T,
    tau: T,
    eps: T,
) -> Result<HomologicalSolution<T>> {
    let n = q.n();
    let d = q.d();
    if omega.len() != n || h.d() != d {
        return Err(KamError::Dimension(format!(
            "ω has {} components and N is {}x{}, symbol lives on T^{n} with d = {d}",
            omega.len(),
            h.d(),
            h.d()
        )));
    }
    let size = q.norm(T::zero());
    if q.reality_defect(SymbolClass::Re) > T::lit(REALITY_TOL) * (T::one() + size) {
        return Err(KamError::Reality(
            "perturbation is not in the Re class".into(),
        ));
    }
    let eig = h.eigen()?;
    let (low, high) = q.truncate(kmax);
    let thr = |k: &MultiIndex| crate::diophantine::divisor_threshold(k, gamma, tau);

    let solve_block = |s: &FourierSeries<T>, side: SylvesterSide, skip_mean: bool| {
        let mut out = FourierSeries::zeros(n, s.rows(), s.cols());
        for (k, r) in s.iter() {
            if skip_mean && k.is_zero() {
                continue;
            }
            let kw = k.dot(omega);
            let thr_k = if k.is_zero() { T::zero() } else { thr(k) };
            out.set(k.clone(), solve_sylvester(&eig, kw, r, side, thr_k, k)?);
        }
        Ok::<_, KamError>(out)
    };

    let fzzbar = solve_block(&low.zzbar(), SylvesterSide::ZZbar, true)?;
    let fzz = solve_block(&low.zz(), SylvesterSide::ZZ, false)?;
    let fzbzb = solve_block(&low.zbarzbar(), SylvesterSide::ZbarZbar, false)?;
    let fz = solve_block(&low.z(), SylvesterSide::Z, false)?;
    let fzb = solve_block(&low.zbar(), SylvesterSide::Zbar, false)?;
    let mut fth = FourierSeries::zeros(n, 1, 1);
    for (k, r) in low.theta().iter() {
        if k.is_zero() {
            continue;
        }
        let kw = k.dot(omega);
        let v = divide(r[(0, 0)], kw, thr(k), k, "theta")?;
        fth.set(k.clone(), CMat::from_element(1, 1, v));
    }
    let f = QuadraticSymbol::from_blocks(&fzz, &fzzbar, &fzbzb, &fz, &fzb, &fth)?.pruned();

    let m0 = low.zzbar().mean();
    let n_tilde = (&m0 + m0.adjoint()) * cr(eps * T::lit(0.5));
    let e_tilde = eps * low.theta().mean()[(0, 0)].re;
    Ok(HomologicalSolution {
        f,
        n_tilde,
        e_tilde,
        remainder: high.scale_real(eps),
    })
}

/// `ε{h,f} + εq - εω·∂_θ f - ẽ - <z, Ñ z̄> - r`, the defect of a computed
/// solution, as a symbol.
pub fn homological_defect<T: Real>(
    h: &NormalForm<T>,
    q: &QuadraticSymbol<T>,
    sol: &HomologicalSolution<T>,
    omega: &[T],
    eps: T,
) -> Result<QuadraticSymbol<T>> {
    let n = q.n();
    let hs = h.to_symbol(n);
    let (hf, _) = hs.bracket(&sol.f, None)?;
    let lhs = hf
        .add(q)
        .sub(&sol.f.omega_derivative(omega))
        .scale_real(eps);
    let avg = NormalForm {
        e: sol.e_tilde,
        n: sol.n_tilde.clone(),
    }
    .to_symbol(n);
    Ok(lhs.sub(&avg).sub(&sol.remainder))
}

/// Norm of [`homological_defect`] at strip width zero.
pub fn homological_residual<T: Real>(
    h: &NormalForm<T>,
    q: &QuadraticSymbol<T>,
    sol: &HomologicalSolution<T>,
    omega: &[T],
    eps: T,
) -> Result<T> {
    Ok(homological_defect(h, q, sol, omega, eps)?.norm(T::zero()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_cmat, random_hermitian, random_symbol, seeded};
    use nalgebra::DMatrix;

    fn kron(a: &CMat<f64>, b: &CMat<f64>) -> CMat<f64> {
        let (ar, ac) = a.shape();
        let (br, bc) = b.shape();
        DMatrix::from_fn(ar * br, ac * bc, |i, j| {
            a[(i / br, j / bc)] * b[(i % br, j % bc)]
        })
    }

    fn vec_of(m: &CMat<f64>) -> CMat<f64> {
        // column-major stacking
        CMat::from_iterator(m.len(), 1, m.iter().cloned())
    }

    /// Dense Kronecker-product solve of the same equation.
    fn kron_solve(nm: &CMat<f64>, kw: f64, rhs: &CMat<f64>, side: SylvesterSide) -> CMat<f64> {
        let d = nm.nrows();
        let id = CMat::<f64>::identity(d, d);
        let kwi = &id * C::new(kw, 0.0);
        let mi = C::new(0.0, -1.0);
        let op = match side {
            SylvesterSide::ZZbar => kron(&id, &(&kwi - nm)) + kron(&nm.transpose(), &id),
            SylvesterSide::ZZ => kron(&id, &(&kwi - nm)) - kron(nm, &id),
            SylvesterSide::ZbarZbar => {
                kron(&id, &(&kwi + nm.transpose())) + kron(&nm.transpose(), &id)
            }
            SylvesterSide::Z => &kwi - nm,
            SylvesterSide::Zbar => &kwi + nm.transpose(),
        };
        let b = vec_of(rhs) * mi;
        let x = op.lu().solve(&b).expect("nonsingular");
        CMat::from_column_slice(rhs.nrows(), rhs.ncols(), x.as_slice())
    }

    #[test]
    fn eigenbasis_solve_matches_kronecker_solve() {
        let mut rng = seeded(3);
        for trial in 0..40 {
            let d = 1 + trial % 4;
            let base: Vec<f64> = (0..d).map(|i| 1.0 + 0.37 * i as f64).collect();
            let nm = random_hermitian::<f64, _>(&mut rng, &base, 0.2);
            let eig = HermitianEigen::new(&nm).unwrap();
            let kw = 0.61803 * (trial as f64 - 20.0);
            for side in [
                SylvesterSide::ZZbar,
                SylvesterSide::ZZ,
                SylvesterSide::ZbarZbar,
                SylvesterSide::Z,
                SylvesterSide::Zbar,
            ] {
                let cols = if matches!(side, SylvesterSide::Z | SylvesterSide::Zbar) {
                    1
                } else {
                    d
                };
                let rhs = random_cmat::<f64, _>(&mut rng, d, cols);
                let k = MultiIndex::new(vec![1]);
                let Ok(x) = solve_sylvester(&eig, kw, &rhs, side, 0.0, &k) else {
                    continue;
                };
                let y = kron_solve(&nm, kw, &rhs, side);
                assert!(
                    (&x - &y).norm() <= 1e-10 * y.norm().max(1.0),
                    "{side:?} trial {trial}"
                );
            }
        }
    }

    #[test]
    fn tiny_divisor_is_reported() {
        let nm = CMat::<f64>::from_diagonal_element(1, 1, C::new(1.0, 0.0));
        let eig = HermitianEigen::new(&nm).unwrap();
        let rhs = CMat::from_element(1, 1, C::new(1.0, 0.0));
        let k = MultiIndex::new(vec![1]);
        let r = solve_sylvester(&eig, 1.0 + 1e-9, &rhs, SylvesterSide::Z, 1e-6, &k);
        assert!(matches!(r, Err(KamError::SmallDivisor { .. })));
    }

    #[test]
    fn residual_vanishes_for_random_problems() {
        let mut rng = seeded(17);
        for trial in 0..10 {
            let n = 1 + trial % 2;
            let d = 1 + trial % 3;
            let omega: Vec<f64> = [0.618_033_988_749_895, std::f64::consts::SQRT_2][..n].to_vec();
            let base: Vec<f64> = (0..d).map(|i| 1.0 + 0.29 * i as f64).collect();
            let h = NormalForm {
                e: 0.3,
                n: random_hermitian::<f64, _>(&mut rng, &base, 0.05),
            };
            let q = random_symbol::<f64, _>(&mut rng, n, d, 3, SymbolClass::Re);
            let eps = 1e-2;
            let sol = solve_homological(&h, &q, &omega, 2, 0.0, 0.5, eps).unwrap();
            let res = homological_residual(&h, &q, &sol, &omega, eps).unwrap();
            assert!(res <= 1e-9 * eps * q.norm(0.0), "residual {res}");
            assert!(sol.f.reality_defect(SymbolClass::Re) < 1e-12);
            assert!((&sol.n_tilde - sol.n_tilde.adjoint()).norm() < 1e-15);
            assert_eq!(sol.remainder.support_radius(), 3);
        }
    }

    #[test]
    fn constant_diagonal_perturbation_needs_no_theta_modes() {
        let h = NormalForm::<f64>::diagonal(&[1.0]);
        let q = NormalForm::<f64>::diagonal(&[0.5]).to_symbol(1);
        let sol = solve_homological(&h, &q, &[0.7], 4, 0.01, 0.5, 0.1).unwrap();
        assert!(sol.f.norm(0.0) < 1e-16);
        assert!((sol.n_tilde[(0, 0)].re - 0.05).abs() < 1e-16);
    }

    #[test]
    fn rejects_non_real_perturbation() {
        let mut rng = seeded(4);
        let h = NormalForm::<f64>::diagonal(&[1.0]);
        let q = random_symbol::<f64, _>(&mut rng, 1, 1, 1, SymbolClass::Im);
        let r = solve_homological(&h, &q, &[0.7], 4, 0.01, 0.5, 0.1);
        assert!(matches!(r, Err(KamError::Reality(_))));
    }
}
