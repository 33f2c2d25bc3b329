//! θ-dependent affine maps `u ↦ M(θ) u + c(θ)` generated by quadratic
//! Hamiltonians, and the operations the reduction needs on them.

use crate::error::{KamError, Result};
use crate::grid::{synthesize, ThetaGrid};
use crate::linalg::{
    complex_from_real, hamiltonian_defect, poisson_structure, real_from_complex, symplectic_defect,
};
use crate::scalar::{coeff_norm, cr, CMat, Real};
use crate::series::{FourierSeries, SeriesRecord};
use crate::symbol::QuadraticSymbol;

/// Largest grid (points per axis) used when resolving maps.
pub const DEFAULT_GRID_CAP: usize = 1024;

/// Affine map in the complex variables `u = (z, z̄)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaAffineMap<T: Real> {
    n: usize,
    d: usize,
    m: FourierSeries<T>,
    c: FourierSeries<T>,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MapRecord<T> {
    pub n: usize,
    pub d: usize,
    pub m: SeriesRecord<T>,
    pub c: SeriesRecord<T>,
}

impl<T: Real> ThetaAffineMap<T> {
    pub fn identity(n: usize, d: usize) -> Self {
        ThetaAffineMap {
            n,
            d,
            m: FourierSeries::constant(n, CMat::identity(2 * d, 2 * d)),
            c: FourierSeries::zeros(n, 2 * d, 1),
        }
    }

    pub fn from_parts(m: FourierSeries<T>, c: FourierSeries<T>) -> Result<Self> {
        let (r, k) = m.shape();
        if r != k || r % 2 != 0 || c.shape() != (r, 1) || c.n() != m.n() {
            return Err(KamError::Dimension(format!(
                "affine map with linear part {:?} and shift {:?}",
                m.shape(),
                c.shape()
            )));
        }
        Ok(ThetaAffineMap {
            n: m.n(),
            d: r / 2,
            m,
            c,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn linear(&self) -> &FourierSeries<T> {
        &self.m
    }

    pub fn shift(&self) -> &FourierSeries<T> {
        &self.c
    }

    pub fn support_radius(&self) -> i64 {
        self.m.support_radius().max(self.c.support_radius())
    }

    /// `(M(θ), c(θ))`.
    pub fn evaluate(&self, theta: &[T]) -> (CMat<T>, CMat<T>) {
        (self.m.evaluate(theta), self.c.evaluate(theta))
    }

    pub fn apply(&self, theta: &[T], u: &CMat<T>) -> CMat<T> {
        let (m, c) = self.evaluate(theta);
        m * u + c
    }

    /// Inverse map at a fixed θ.
    pub fn inverse_at(&self, theta: &[T]) -> Result<(CMat<T>, CMat<T>)> {
        let (m, c) = self.evaluate(theta);
        let mi = m
            .try_inverse()
            .ok_or_else(|| KamError::Numerical("singular affine map".into()))?;
        let ci = -(&mi * c);
        Ok((mi, ci))
    }

    /// The same map acting on `(x, ξ)`.
    pub fn real_at(&self, theta: &[T]) -> (CMat<T>, CMat<T>) {
        let (m, c) = self.evaluate(theta);
        let t = complex_from_real::<T>(self.d);
        let ti = real_from_complex::<T>(self.d);
        (&ti * m * t, ti * c)
    }

    fn check_grid(&self) -> ThetaGrid {
        ThetaGrid::for_radius(self.n, self.support_radius(), 8)
    }

    /// `sup_θ max(‖M - I‖, |c|)` in the real variables, over a grid that
    /// resolves the map.
    pub fn deviation_from_identity(&self) -> T {
        let grid = self.check_grid();
        let id = CMat::<T>::identity(2 * self.d, 2 * self.d);
        grid.points::<T>()
            .iter()
            .map(|t| {
                let (m, c) = self.real_at(t);
                let a = coeff_norm(&(m - &id));
                let b = coeff_norm(&c);
                if a > b {
                    a
                } else {
                    b
                }
            })
            .fold(T::zero(), |a, b| if b > a { b } else { a })
    }

    /// Largest `|MᵀJM - J|` entry over a resolving grid.
    pub fn symplectic_defect(&self) -> T {
        self.check_grid()
            .points::<T>()
            .iter()
            .map(|t| symplectic_defect(&self.real_at(t).0))
            .fold(T::zero(), |a, b| if b > a { b } else { a })
    }

    pub fn to_record(&self) -> MapRecord<T> {
        MapRecord {
            n: self.n,
            d: self.d,
            m: self.m.to_record(),
            c: self.c.to_record(),
        }
    }

    pub fn from_record(r: &MapRecord<T>) -> Result<Self> {
        let map = Self::from_parts(
            FourierSeries::from_record(&r.m)?,
            FourierSeries::from_record(&r.c)?,
        )?;
        if map.n != r.n || map.d != r.d {
            return Err(KamError::Dimension(
                "map header disagrees with its parts".into(),
            ));
        }
        Ok(map)
    }
}

/// Generator of the flow of `f` as a vector field `u̇ = A u + b` at θ.
pub fn vector_field<T: Real>(f: &QuadraticSymbol<T>, theta: &[T]) -> (CMat<T>, CMat<T>) {
    let s = poisson_structure::<T>(f.d());
    let a = &s * f.quad().evaluate(theta);
    let b = &s * f.lin().evaluate(theta);
    (a, b)
}

/// Time-one map of the Hamiltonian flow of `ε f`, θ frozen.
///
/// Computed pointwise on a θ-grid from the exponential of the augmented
/// matrix `[[εA, εb], [0, 0]]`; the grid is refined until the Fourier
/// coefficients of the result are resolved (up to `gmax` points per axis).
pub fn time_one_map<T: Real>(
    f: &QuadraticSymbol<T>,
    eps: T,
    gmax: usize,
) -> Result<ThetaAffineMap<T>> {
    let n = f.n();
    let d = f.d();
    let dd = 2 * d;
    let g0 = ThetaGrid::for_radius(n, f.support_radius(), 8).g;
    let packed = synthesize(n, dd, dd + 1, g0, gmax, |theta| {
        let (a, b) = vector_field(f, theta);
        let mut aug = CMat::zeros(dd + 1, dd + 1);
        aug.view_mut((0, 0), (dd, dd)).copy_from(&(a * cr(eps)));
        aug.view_mut((0, dd), (dd, 1)).copy_from(&(b * cr(eps)));
        let e = aug.exp();
        Ok(e.view((0, 0), (dd, dd + 1)).into_owned())
    })?;
    ThetaAffineMap::from_parts(packed.block(0, 0, dd, dd), packed.block(0, dd, dd, 1))
}

/// `outer ∘ inner`, i.e. `u ↦ M_o (M_i u + c_i) + c_o`. Returns the
/// composition and the norm of the modes dropped beyond `kmax`.
pub fn compose<T: Real>(
    outer: &ThetaAffineMap<T>,
    inner: &ThetaAffineMap<T>,
    kmax: Option<i64>,
) -> Result<(ThetaAffineMap<T>, T)> {
    if outer.n != inner.n || outer.d != inner.d {
        return Err(KamError::Dimension(
            "composing maps of different sizes".into(),
        ));
    }
    let (m, l1) = outer.m.mul(&inner.m, kmax)?;
    let (mc, l2) = outer.m.mul(&inner.c, kmax)?;
    let c = (&mc + &outer.c).pruned();
    Ok((ThetaAffineMap::from_parts(m, c)?, l1 + l2))
}

/// `q ∘ Φ` as a symbol, with the norm of the modes dropped beyond `kmax`.
pub fn pullback<T: Real>(
    q: &QuadraticSymbol<T>,
    phi: &ThetaAffineMap<T>,
    kmax: Option<i64>,
) -> Result<(QuadraticSymbol<T>, T)> {
    if q.n() != phi.n || q.d() != phi.d {
        return Err(KamError::Dimension(
            "pullback through a map of another size".into(),
        ));
    }
    let mt = phi.m.transpose();
    let (mth, l1) = mt.mul(q.quad(), kmax)?;
    let (quad, l2) = mth.mul(&phi.m, kmax)?;
    let (a, l3) = mth.mul(&phi.c, kmax)?;
    let (b, l4) = mt.mul(q.lin(), kmax)?;
    let lin = &a + &b;
    let (hc, l5) = q.quad().mul(&phi.c, kmax)?;
    let ct = phi.c.transpose();
    let (chc, l6) = ct.mul(&hc, kmax)?;
    let (gc, l7) = q.lin().transpose().mul(&phi.c, kmax)?;
    let constant = &(&chc.scale_real(T::lit(0.5)) + &gc) + q.constant();
    let out = QuadraticSymbol::from_packed(quad, lin.pruned(), constant.pruned())?;
    Ok((out, l1 + l2 + l3 + l4 + l5 + l6 + l7))
}

/// Weight in `∫_0^1 w(κ) g ∘ X^κ dκ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LieWeight {
    /// `w(κ) = 1`
    Uniform,
    /// `w(κ) = 1 - κ`
    OneMinusKappa,
}

impl LieWeight {
    /// `∫_0^1 w(κ) κ^j dκ / j!` folded into the recursion below.
    fn moment<T: Real>(self, j: usize) -> T {
        let j = j as f64;
        match self {
            LieWeight::Uniform => T::lit(1.0 / (j + 1.0)),
            LieWeight::OneMinusKappa => T::lit(1.0 / ((j + 1.0) * (j + 2.0))),
        }
    }
}

const LIE_MAX_TERMS: usize = 200;

/// `∫_0^1 w(κ) g ∘ X^κ_{εf} dκ` by summing the Lie series
/// `Σ_j ε^j/j! ∫ w κ^j dκ · ad_f^j g`, `ad_f g = {g, f}`, until a term
/// falls below `tol` relative to the partial sum.
pub fn lie_transform<T: Real>(
    g: &QuadraticSymbol<T>,
    f: &QuadraticSymbol<T>,
    eps: T,
    weight: LieWeight,
    tol: T,
    kmax: Option<i64>,
) -> Result<(QuadraticSymbol<T>, T)> {
    let mut sum = g.scale_real(weight.moment(0));
    let mut cur = g.clone();
    let mut lost = T::zero();
    for j in 1..LIE_MAX_TERMS {
        let (b, l) = cur.bracket(f, kmax)?;
        lost += l;
        cur = b.scale_real(eps / T::lit(j as f64));
        let term = cur.scale_real(weight.moment(j));
        let tn = term.norm(T::zero());
        sum = sum.add(&term);
        let sn = sum.norm(T::zero());
        if tn <= tol * sn || tn == T::zero() {
            return Ok((sum.pruned(), lost));
        }
        if !tn.is_finite() {
            break;
        }
    }
    Err(KamError::NoConvergence(format!(
        "Lie series did not settle within {LIE_MAX_TERMS} terms"
    )))
}

/// Hamiltonian generator of a near-identity affine map:
/// `Φ(θ) = exp([[A(θ), V(θ)], [0, 0]])` with `A` and `V` returned as series.
/// The logarithm is summed as `log(I + X) = Σ (-1)^{j+1} X^j / j`.
pub fn limit_log<T: Real>(
    map: &ThetaAffineMap<T>,
    gmax: usize,
) -> Result<(FourierSeries<T>, FourierSeries<T>)> {
    let n = map.n;
    let dd = 2 * map.d;
    let g0 = map.check_grid().g;
    let packed = synthesize(n, dd, dd + 1, g0, gmax, |theta| {
        let (m, c) = map.evaluate(theta);
        let mut x = CMat::zeros(dd + 1, dd + 1);
        x.view_mut((0, 0), (dd, dd))
            .copy_from(&(m - CMat::identity(dd, dd)));
        x.view_mut((0, dd), (dd, 1)).copy_from(&c);
        let size = coeff_norm(&x);
        if size >= T::lit(0.5) {
            return Err(KamError::NoConvergence(format!(
                "map too far from identity for the logarithm series ({size:e})"
            )));
        }
        let mut acc = CMat::zeros(dd + 1, dd + 1);
        let mut pow = x.clone();
        for j in 1..400 {
            let term = &pow * cr(T::lit(if j % 2 == 1 { 1.0 } else { -1.0 } / j as f64));
            let tn = coeff_norm(&term);
            acc += term;
            if tn <= T::eps() * coeff_norm(&acc) {
                break;
            }
            pow = &pow * &x;
        }
        Ok(acc.view((0, 0), (dd, dd + 1)).into_owned())
    })?;
    let a = packed.block(0, 0, dd, dd);
    let v = packed.block(0, dd, dd, 1);
    let grid = ThetaGrid::for_radius(n, a.support_radius(), 8);
    let t = complex_from_real::<T>(map.d);
    let ti = real_from_complex::<T>(map.d);
    let scale = T::one() + a.max_coeff_norm();
    for theta in grid.points::<T>() {
        let ar = &ti * a.evaluate(&theta) * &t;
        let def = hamiltonian_defect(&ar);
        if def > T::lit(1e-8) * scale {
            return Err(KamError::Numerical(format!(
                "logarithm is not a Hamiltonian matrix (defect {def:e})"
            )));
        }
    }
    Ok((a, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_cvec, random_symbol, seeded};
    use crate::scalar::C;
    use crate::symbol::SymbolClass;

    /// Classical RK4 for `u̇ = ε(Au + b)` on `[0, 1]`.
    fn rk4_flow(a: &CMat<f64>, b: &CMat<f64>, eps: f64, u0: &CMat<f64>, steps: usize) -> CMat<f64> {
        let h = 1.0 / steps as f64;
        let f = |u: &CMat<f64>| (a * u + b) * C::new(eps, 0.0);
        let mut u = u0.clone();
        for _ in 0..steps {
            let k1 = f(&u);
            let k2 = f(&(&u + &k1 * C::new(h / 2.0, 0.0)));
            let k3 = f(&(&u + &k2 * C::new(h / 2.0, 0.0)));
            let k4 = f(&(&u + &k3 * C::new(h, 0.0)));
            u += (k1 + k2 * C::new(2.0, 0.0) + k3 * C::new(2.0, 0.0) + k4) * C::new(h / 6.0, 0.0);
        }
        u
    }

    #[test]
    fn time_one_map_matches_direct_integration() {
        let mut rng = seeded(21);
        let f = random_symbol::<f64, _>(&mut rng, 1, 2, 2, SymbolClass::Re);
        let eps = 0.05;
        let phi = time_one_map(&f, eps, 1024).unwrap();
        for &t in &[0.0, 1.3, 4.4] {
            let (a, b) = vector_field(&f, &[t]);
            let u0 = random_cvec::<f64, _>(&mut rng, 4);
            let want = rk4_flow(&a, &b, eps, &u0, 400);
            let got = phi.apply(&[t], &u0);
            assert!((want - got).norm() < 1e-11);
        }
        assert!(phi.symplectic_defect() < 1e-12);
    }

    #[test]
    fn real_generator_gives_real_map() {
        let mut rng = seeded(22);
        let f = random_symbol::<f64, _>(&mut rng, 2, 2, 1, SymbolClass::Re);
        let phi = time_one_map(&f, 0.1, 256).unwrap();
        let (m, c) = phi.real_at(&[0.4, 2.0]);
        assert!(m.iter().chain(c.iter()).all(|z| z.im.abs() < 1e-13));
    }

    #[test]
    fn pullback_agrees_with_pointwise_composition() {
        let mut rng = seeded(23);
        let q = random_symbol::<f64, _>(&mut rng, 1, 2, 2, SymbolClass::Re);
        let f = random_symbol::<f64, _>(&mut rng, 1, 2, 1, SymbolClass::Re);
        let phi = time_one_map(&f, 0.2, 1024).unwrap();
        let (p, _) = pullback(&q, &phi, None).unwrap();
        for &t in &[0.2, 2.5] {
            let u = random_cvec::<f64, _>(&mut rng, 4);
            let direct = q.evaluate(&[t], &phi.apply(&[t], &u));
            assert!((p.evaluate(&[t], &u) - direct).norm() < 1e-11);
        }
    }

    #[test]
    fn composition_is_pointwise_and_associative_with_pullback() {
        let mut rng = seeded(24);
        let f1 = random_symbol::<f64, _>(&mut rng, 1, 1, 1, SymbolClass::Re);
        let f2 = random_symbol::<f64, _>(&mut rng, 1, 1, 1, SymbolClass::Re);
        let q = random_symbol::<f64, _>(&mut rng, 1, 1, 1, SymbolClass::Re);
        let a = time_one_map(&f1, 0.1, 512).unwrap();
        let b = time_one_map(&f2, 0.1, 512).unwrap();
        let (ab, _) = compose(&a, &b, None).unwrap();
        let u = random_cvec::<f64, _>(&mut rng, 2);
        let t = [0.9];
        assert!((ab.apply(&t, &u) - a.apply(&t, &b.apply(&t, &u))).norm() < 1e-13);
        let lhs = pullback(&q, &ab, None).unwrap().0;
        let rhs = pullback(&pullback(&q, &a, None).unwrap().0, &b, None)
            .unwrap()
            .0;
        assert!(lhs.sub(&rhs).norm(0.0) < 1e-12);
    }

    /// Gauss–Legendre nodes and weights on `[0, 1]`.
    fn gauss_legendre(m: usize) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for i in 1..=m {
            let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (m as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=m {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            out.push(((1.0 - x) / 2.0, w / 2.0));
        }
        out
    }

    #[test]
    fn lie_series_matches_quadrature_of_pullbacks() {
        let mut rng = seeded(25);
        let g = random_symbol::<f64, _>(&mut rng, 1, 2, 1, SymbolClass::Re);
        let f = random_symbol::<f64, _>(&mut rng, 1, 2, 1, SymbolClass::Re);
        let eps = 0.1;
        for weight in [LieWeight::Uniform, LieWeight::OneMinusKappa] {
            let (series, _) = lie_transform(&g, &f, eps, weight, 1e-15, None).unwrap();
            let mut quad = QuadraticSymbol::zero(1, 2);
            for (kappa, w) in gauss_legendre(12) {
                let phi = time_one_map(&f, kappa * eps, 1024).unwrap();
                let wk = match weight {
                    LieWeight::Uniform => 1.0,
                    LieWeight::OneMinusKappa => 1.0 - kappa,
                };
                quad = quad.add(&pullback(&g, &phi, None).unwrap().0.scale_real(w * wk));
            }
            let diff = series.sub(&quad).norm(0.0);
            assert!(diff < 1e-11 * g.norm(0.0), "{weight:?}: {diff}");
        }
    }

    #[test]
    fn lie_series_with_zero_generator() {
        let mut rng = seeded(26);
        let g = random_symbol::<f64, _>(&mut rng, 1, 1, 1, SymbolClass::Re);
        let zero = QuadraticSymbol::zero(1, 1);
        let (a, _) = lie_transform(&g, &zero, 0.3, LieWeight::Uniform, 1e-14, None).unwrap();
        assert!(a.sub(&g).norm(0.0) < 1e-15);
        let (b, _) = lie_transform(&g, &zero, 0.3, LieWeight::OneMinusKappa, 1e-14, None).unwrap();
        assert!(b.sub(&g.scale_real(0.5)).norm(0.0) < 1e-15);
    }

    #[test]
    fn logarithm_inverts_time_one_map() {
        let mut rng = seeded(27);
        let f = random_symbol::<f64, _>(&mut rng, 1, 2, 1, SymbolClass::Re);
        let eps = 0.02;
        let phi = time_one_map(&f, eps, 1024).unwrap();
        let (a, v) = limit_log(&phi, 1024).unwrap();
        for &t in &[0.0, 2.0] {
            let (a0, b0) = vector_field(&f, &[t]);
            assert!((a.evaluate(&[t]) - a0 * C::new(eps, 0.0)).norm() < 1e-12);
            assert!((v.evaluate(&[t]) - b0 * C::new(eps, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn identity_map_properties() {
        let id = ThetaAffineMap::<f64>::identity(2, 3);
        assert!(id.deviation_from_identity() < 1e-15);
        assert!(id.symplectic_defect() < 1e-15);
        let rec = id.to_record();
        assert_eq!(ThetaAffineMap::from_record(&rec).unwrap(), id);
    }
}
