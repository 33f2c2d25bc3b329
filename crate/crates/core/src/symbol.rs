//! Quadratic symbols in the complex variables `u = (z, z̄)` with
//! θ-dependent coefficients.
//!
//! A symbol is stored in packed form `q = ½ uᵀ H(θ) u + g(θ)ᵀ u + c(θ)`
//! with `H` symmetric, which is equivalent to the block form
//! `<z, Q^{zz} z> + <z, Q^{zz̄} z̄> + <z̄, Q^{z̄z̄} z̄> + <Q^z, z> + <Q^{z̄}, z̄> + Q^θ`
//! (bilinear pairing, no conjugation) via
//! `H = [[2 Q^{zz}, Q^{zz̄}], [(Q^{zz̄})ᵀ, 2 Q^{z̄z̄}]]`.

use serde::{Deserialize, Serialize};

use crate::error::{KamError, Result};
use crate::linalg::{half_swap, poisson_structure, HermitianEigen};
use crate::scalar::{cabs, ci, coeff_norm, conj, cr, sym, CMat, Real, C};
use crate::series::{FourierSeries, SeriesRecord};

/// Reality structure of a symbol.
///
/// Both classes take real values on `z̄ = conj(z)` apart from the
/// θ-only part, which is real for `Re` and purely imaginary for `Im`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymbolClass {
    Re,
    Im,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticSymbol<T: Real> {
    n: usize,
    d: usize,
    quad: FourierSeries<T>,
    lin: FourierSeries<T>,
    constant: FourierSeries<T>,
}

/// Coefficients of a symbol in the real variables `(x, ξ)`:
/// `<x, W^{xx} x> + <ξ, W^{ξξ} ξ> + <x, W^{xξ} ξ> + <W^x, x> + <W^ξ, ξ> + W^θ`.
#[derive(Clone, Debug, PartialEq)]
pub struct RealBlocks<T: Real> {
    pub xx: FourierSeries<T>,
    pub xixi: FourierSeries<T>,
    pub xxi: FourierSeries<T>,
    pub x: FourierSeries<T>,
    pub xi: FourierSeries<T>,
    pub theta: FourierSeries<T>,
}

impl<T: Real> RealBlocks<T> {
    pub fn zeros(n: usize, d: usize) -> Self {
        RealBlocks {
            xx: FourierSeries::zeros(n, d, d),
            xixi: FourierSeries::zeros(n, d, d),
            xxi: FourierSeries::zeros(n, d, d),
            x: FourierSeries::zeros(n, d, 1),
            xi: FourierSeries::zeros(n, d, 1),
            theta: FourierSeries::zeros(n, 1, 1),
        }
    }

    /// Largest deviation of any block from being a real function of θ.
    pub fn reality_defect(&self) -> T {
        [
            &self.xx,
            &self.xixi,
            &self.xxi,
            &self.x,
            &self.xi,
            &self.theta,
        ]
        .iter()
        .map(|s| s.reality_defect())
        .fold(T::zero(), |a, b| if b > a { b } else { a })
    }

    /// Replaces `W^{xx}` and `W^{ξξ}` by their symmetric parts, which
    /// leaves the represented function unchanged.
    pub fn canonical(&self) -> Self {
        let s = |m: &FourierSeries<T>| m.map_coeffs(m.rows(), m.cols(), |_, c| sym(c));
        RealBlocks {
            xx: s(&self.xx),
            xixi: s(&self.xixi),
            ..self.clone()
        }
    }

    pub fn to_record(&self) -> RealBlocksRecord<T> {
        RealBlocksRecord {
            xx: Some(self.xx.to_record()),
            xixi: Some(self.xixi.to_record()),
            xxi: Some(self.xxi.to_record()),
            x: Some(self.x.to_record()),
            xi: Some(self.xi.to_record()),
            theta: Some(self.theta.to_record()),
        }
    }

    /// Reads blocks from their JSON form; absent blocks are zero.
    pub fn from_record(rec: &RealBlocksRecord<T>, n: usize, d: usize) -> Result<Self> {
        let get = |r: &Option<SeriesRecord<T>>, rows: usize, cols: usize, name: &str| match r {
            None => Ok(FourierSeries::zeros(n, rows, cols)),
            Some(r) => {
                let s = FourierSeries::from_record(r)?;
                if s.n() != n || s.shape() != (rows, cols) {
                    return Err(KamError::Dimension(format!(
                        "block {name}: expected n = {n}, {rows}x{cols}; got n = {}, {}x{}",
                        s.n(),
                        s.rows(),
                        s.cols()
                    )));
                }
                Ok(s)
            }
        };
        Ok(RealBlocks {
            xx: get(&rec.xx, d, d, "xx")?,
            xixi: get(&rec.xixi, d, d, "xixi")?,
            xxi: get(&rec.xxi, d, d, "xxi")?,
            x: get(&rec.x, d, 1, "x")?,
            xi: get(&rec.xi, d, 1, "xi")?,
            theta: get(&rec.theta, 1, 1, "theta")?,
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RealBlocksRecord<T> {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xx: Option<SeriesRecord<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xixi: Option<SeriesRecord<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xxi: Option<SeriesRecord<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<SeriesRecord<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<SeriesRecord<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<SeriesRecord<T>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolRecord<T> {
    pub n: usize,
    pub d: usize,
    pub quad: SeriesRecord<T>,
    pub lin: SeriesRecord<T>,
    pub constant: SeriesRecord<T>,
}

fn stack2<T: Real>(
    a: &FourierSeries<T>,
    b: &FourierSeries<T>,
    c: &FourierSeries<T>,
    e: &FourierSeries<T>,
) -> FourierSeries<T> {
    // [[a, b], [c, e]] with square blocks of equal size
    let d = a.rows();
    let n = a.n();
    let mut out = FourierSeries::zeros(n, 2 * d, b.cols() + a.cols());
    let place = |out: &mut FourierSeries<T>, s: &FourierSeries<T>, r0: usize, c0: usize| {
        for (k, m) in s.iter() {
            let mut big = CMat::zeros(2 * d, out.cols());
            big.view_mut((r0, c0), m.shape()).copy_from(m);
            out.add_to(k.clone(), &big);
        }
    };
    place(&mut out, a, 0, 0);
    place(&mut out, b, 0, a.cols());
    place(&mut out, c, d, 0);
    place(&mut out, e, d, a.cols());
    out
}

fn vstack<T: Real>(a: &FourierSeries<T>, b: &FourierSeries<T>) -> FourierSeries<T> {
    let d = a.rows();
    let mut out = FourierSeries::zeros(a.n(), 2 * d, 1);
    for (k, m) in a.iter() {
        let mut v = CMat::zeros(2 * d, 1);
        v.view_mut((0, 0), (d, 1)).copy_from(m);
        out.add_to(k.clone(), &v);
    }
    for (k, m) in b.iter() {
        let mut v = CMat::zeros(2 * d, 1);
        v.view_mut((d, 0), (d, 1)).copy_from(m);
        out.add_to(k.clone(), &v);
    }
    out
}

impl<T: Real> QuadraticSymbol<T> {
    pub fn zero(n: usize, d: usize) -> Self {
        QuadraticSymbol {
            n,
            d,
            quad: FourierSeries::zeros(n, 2 * d, 2 * d),
            lin: FourierSeries::zeros(n, 2 * d, 1),
            constant: FourierSeries::zeros(n, 1, 1),
        }
    }

    /// Builds the packed form; `quad` is symmetrized.
    pub fn from_packed(
        quad: FourierSeries<T>,
        lin: FourierSeries<T>,
        constant: FourierSeries<T>,
    ) -> Result<Self> {
        let n = quad.n();
        let (r, c) = quad.shape();
        if r != c || r % 2 != 0 {
            return Err(KamError::Dimension(format!("quadratic part is {r}x{c}")));
        }
        let d = r / 2;
        if lin.shape() != (2 * d, 1) || constant.shape() != (1, 1) {
            return Err(KamError::Dimension(format!(
                "linear part {:?} / constant {:?} do not match d = {d}",
                lin.shape(),
                constant.shape()
            )));
        }
        if lin.n() != n || constant.n() != n {
            return Err(KamError::Dimension(
                "torus dimension mismatch between parts".into(),
            ));
        }
        let quad = quad.map_coeffs(2 * d, 2 * d, |_, m| sym(m));
        Ok(QuadraticSymbol {
            n,
            d,
            quad,
            lin,
            constant,
        })
    }

    /// Assembles a symbol from its six blocks.
    pub fn from_blocks(
        zz: &FourierSeries<T>,
        zzbar: &FourierSeries<T>,
        zbarzbar: &FourierSeries<T>,
        z: &FourierSeries<T>,
        zbar: &FourierSeries<T>,
        theta: &FourierSeries<T>,
    ) -> Result<Self> {
        let d = zz.rows();
        let n = zz.n();
        for (name, s, shape) in [
            ("zz", zz, (d, d)),
            ("zzbar", zzbar, (d, d)),
            ("zbarzbar", zbarzbar, (d, d)),
            ("z", z, (d, 1)),
            ("zbar", zbar, (d, 1)),
            ("theta", theta, (1, 1)),
        ] {
            if s.shape() != shape || s.n() != n {
                return Err(KamError::Dimension(format!(
                    "block {name} has shape {:?} on T^{}, expected {:?} on T^{n}",
                    s.shape(),
                    s.n(),
                    shape
                )));
            }
        }
        let two_zz = zz + &zz.transpose();
        let two_zbzb = zbarzbar + &zbarzbar.transpose();
        let quad = stack2(&two_zz, zzbar, &zzbar.transpose(), &two_zbzb);
        Self::from_packed(quad, vstack(z, zbar), theta.clone())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn quad(&self) -> &FourierSeries<T> {
        &self.quad
    }

    pub fn lin(&self) -> &FourierSeries<T> {
        &self.lin
    }

    pub fn constant(&self) -> &FourierSeries<T> {
        &self.constant
    }

    /// `Q^{zz}` (symmetric).
    pub fn zz(&self) -> FourierSeries<T> {
        self.quad
            .block(0, 0, self.d, self.d)
            .scale_real(T::lit(0.5))
    }

    /// `Q^{zz̄}`.
    pub fn zzbar(&self) -> FourierSeries<T> {
        self.quad.block(0, self.d, self.d, self.d)
    }

    /// `Q^{z̄z̄}` (symmetric).
    pub fn zbarzbar(&self) -> FourierSeries<T> {
        self.quad
            .block(self.d, self.d, self.d, self.d)
            .scale_real(T::lit(0.5))
    }

    pub fn z(&self) -> FourierSeries<T> {
        self.lin.block(0, 0, self.d, 1)
    }

    pub fn zbar(&self) -> FourierSeries<T> {
        self.lin.block(self.d, 0, self.d, 1)
    }

    pub fn theta(&self) -> FourierSeries<T> {
        self.constant.clone()
    }

    pub fn support_radius(&self) -> i64 {
        self.quad
            .support_radius()
            .max(self.lin.support_radius())
            .max(self.constant.support_radius())
    }

    /// Sum of the weighted norms of the six blocks at strip width `s`.
    pub fn norm(&self, s: T) -> T {
        self.zz().strip_norm(s)
            + self.zzbar().strip_norm(s)
            + self.zbarzbar().strip_norm(s)
            + self.z().strip_norm(s)
            + self.zbar().strip_norm(s)
            + self.constant.strip_norm(s)
    }

    pub fn map_series<F>(&self, f: F) -> Self
    where
        F: Fn(&FourierSeries<T>) -> FourierSeries<T>,
    {
        QuadraticSymbol {
            n: self.n,
            d: self.d,
            quad: f(&self.quad),
            lin: f(&self.lin),
            constant: f(&self.constant),
        }
    }

    pub fn scale(&self, c: C<T>) -> Self {
        self.map_series(|s| s.scale(c))
    }

    pub fn scale_real(&self, c: T) -> Self {
        self.scale(cr(c))
    }

    pub fn add(&self, o: &Self) -> Self {
        QuadraticSymbol {
            n: self.n,
            d: self.d,
            quad: &self.quad + &o.quad,
            lin: &self.lin + &o.lin,
            constant: &self.constant + &o.constant,
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale_real(-T::one()))
    }

    /// `ω·∂_θ q`.
    pub fn omega_derivative(&self, omega: &[T]) -> Self {
        self.map_series(|s| s.omega_derivative(omega))
    }

    /// Splits into modes `|k|_1 <= kmax` and the tail.
    pub fn truncate(&self, kmax: i64) -> (Self, Self) {
        let (q0, q1) = self.quad.truncate(kmax);
        let (l0, l1) = self.lin.truncate(kmax);
        let (c0, c1) = self.constant.truncate(kmax);
        (
            QuadraticSymbol {
                n: self.n,
                d: self.d,
                quad: q0,
                lin: l0,
                constant: c0,
            },
            QuadraticSymbol {
                n: self.n,
                d: self.d,
                quad: q1,
                lin: l1,
                constant: c1,
            },
        )
    }

    pub fn pruned(&self) -> Self {
        self.map_series(|s| s.clone().pruned())
    }

    /// Value at `(θ, u)` treating `z` and `z̄` as independent.
    pub fn evaluate(&self, theta: &[T], u: &CMat<T>) -> C<T> {
        let h = self.quad.evaluate(theta);
        let g = self.lin.evaluate(theta);
        let c = self.constant.evaluate(theta)[(0, 0)];
        let quad = (u.transpose() * h * u)[(0, 0)] * cr(T::lit(0.5));
        let lin = (g.transpose() * u)[(0, 0)];
        quad + lin + c
    }

    /// Gradient `(∂_z q, ∂_z̄ q)` at `(θ, u)`.
    pub fn gradient(&self, theta: &[T], u: &CMat<T>) -> CMat<T> {
        self.quad.evaluate(theta) * u + self.lin.evaluate(theta)
    }

    /// Poisson bracket `{q, f} = -i ∂_z q·∂_z̄ f + i ∂_z̄ q·∂_z f`.
    ///
    /// Modes beyond `kmax` are discarded; the returned scalar is the norm
    /// of everything dropped.
    pub fn bracket(&self, f: &Self, kmax: Option<i64>) -> Result<(Self, T)> {
        if self.n != f.n || self.d != f.d {
            return Err(KamError::Dimension(format!(
                "bracket of symbols with (n, d) = ({}, {}) and ({}, {})",
                self.n, self.d, f.n, f.d
            )));
        }
        let s = poisson_structure::<T>(self.d);
        let qs = self.quad.right_mul(&s);
        let fs = f.quad.right_mul(&s);
        let (x, l1) = qs.mul(&f.quad, kmax)?;
        let quad = &x + &x.transpose();
        let (a, l2) = qs.mul(&f.lin, kmax)?;
        let (b, l3) = fs.mul(&self.lin, kmax)?;
        let lin = &a - &b;
        let (constant, l4) = self.lin.transpose().mul(&f.lin.left_mul(&s), kmax)?;
        let out = QuadraticSymbol {
            n: self.n,
            d: self.d,
            quad: quad.pruned(),
            lin: lin.pruned(),
            constant,
        };
        Ok((out, l1 + l2 + l3 + l4))
    }

    /// Largest violation of the coefficient relations of `class`.
    pub fn reality_defect(&self, class: SymbolClass) -> T {
        let p = half_swap::<T>(self.d);
        let mut worst = T::zero();
        let mut upd = |v: T| {
            if v > worst {
                worst = v;
            }
        };
        for (k, h) in self.quad.iter() {
            let m = self.quad.coeff_or_zero(&-k);
            upd(coeff_norm(&(h - &p * conj(&m) * &p)));
        }
        for (k, g) in self.lin.iter() {
            let m = self.lin.coeff_or_zero(&-k);
            upd(coeff_norm(&(g - &p * conj(&m))));
        }
        let sign = match class {
            SymbolClass::Re => T::one(),
            SymbolClass::Im => -T::one(),
        };
        for (k, c) in self.constant.iter() {
            let m = self.constant.coeff_or_zero(&-k);
            upd(cabs(c[(0, 0)] - m[(0, 0)].conj() * sign));
        }
        worst
    }

    /// Nearest symbol (coefficientwise average with its mirror image)
    /// satisfying the relations of `class`.
    pub fn project(&self, class: SymbolClass) -> Self {
        let p = half_swap::<T>(self.d);
        let half = cr(T::lit(0.5));
        let mirror = |s: &FourierSeries<T>, f: &dyn Fn(CMat<T>) -> CMat<T>| {
            let mut keys: Vec<_> = s.iter().flat_map(|(k, _)| [k.clone(), -k]).collect();
            keys.sort();
            keys.dedup();
            let mut res = FourierSeries::zeros(s.n(), s.rows(), s.cols());
            for k in keys {
                let a = s.coeff_or_zero(&k);
                let b = f(conj(&s.coeff_or_zero(&-&k)));
                res.set(k, (a + b) * half);
            }
            res.pruned()
        };
        let sign = match class {
            SymbolClass::Re => T::one(),
            SymbolClass::Im => -T::one(),
        };
        QuadraticSymbol {
            n: self.n,
            d: self.d,
            quad: mirror(&self.quad, &|m| &p * m * &p),
            lin: mirror(&self.lin, &|m| &p * m),
            constant: mirror(&self.constant, &|m| m * cr(sign)),
        }
    }

    /// Converts real-variable coefficients. Only the symmetric parts of
    /// `W^{xx}` and `W^{ξξ}` affect the result.
    pub fn from_real_blocks(w: &RealBlocks<T>) -> Result<Self> {
        let half = cr(T::lit(0.5));
        let i = ci(T::one());
        let r2 = T::one() / T::lit(2.0).sqrt();
        let a = &w.xx;
        let b = &w.xixi;
        let c = &w.xxi;
        let b_minus_a = b - a;
        let ic = c.scale(i);
        let zz = (&b_minus_a + &ic).scale(half);
        let zbzb = (&b_minus_a - &ic).scale(half);
        let s1 = &(a + &a.transpose()) + &(b + &b.transpose());
        let s2 = &ic - &ic.transpose();
        let zzbar = (&s1 + &s2).scale(half);
        let ia = w.x.scale(i);
        let z = (&w.xi + &ia).scale_real(r2);
        let zbar = (&w.xi - &ia).scale_real(r2);
        Self::from_blocks(&zz, &zzbar, &zbzb, &z, &zbar, &w.theta)
    }

    /// Inverse of [`QuadraticSymbol::from_real_blocks`] onto canonical
    /// blocks (symmetric `W^{xx}`, `W^{ξξ}`).
    pub fn to_real_blocks(&self) -> RealBlocks<T> {
        let half = cr(T::lit(0.5));
        let mi = ci(-T::one());
        let r2 = T::one() / T::lit(2.0).sqrt();
        let p = self.zz();
        let pb = self.zbarzbar();
        let h = self.zzbar();
        let hs = (&h + &h.transpose()).scale(half);
        let ca = (&h - &h.transpose()).scale(half * mi);
        let cs = (&p - &pb).scale(mi);
        let ppb = &p + &pb;
        let z = self.z();
        let zb = self.zbar();
        RealBlocks {
            xx: (&hs - &ppb).scale(half).pruned(),
            xixi: (&hs + &ppb).scale(half).pruned(),
            xxi: (&cs + &ca).pruned(),
            x: (&z - &zb).scale(mi * cr(r2)).pruned(),
            xi: (&z + &zb).scale_real(r2).pruned(),
            theta: self.constant.clone(),
        }
    }

    pub fn to_record(&self) -> SymbolRecord<T> {
        SymbolRecord {
            n: self.n,
            d: self.d,
            quad: self.quad.to_record(),
            lin: self.lin.to_record(),
            constant: self.constant.to_record(),
        }
    }

    pub fn from_record(r: &SymbolRecord<T>) -> Result<Self> {
        let s = Self::from_packed(
            FourierSeries::from_record(&r.quad)?,
            FourierSeries::from_record(&r.lin)?,
            FourierSeries::from_record(&r.constant)?,
        )?;
        if s.n != r.n || s.d != r.d {
            return Err(KamError::Dimension(
                "symbol header disagrees with its parts".into(),
            ));
        }
        Ok(s)
    }
}

/// θ-independent diagonalizable part `h = e + <z, N z̄>` with `N` Hermitian.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalForm<T: Real> {
    pub e: T,
    pub n: CMat<T>,
}

impl<T: Real> NormalForm<T> {
    /// `Σ v_j z_j z̄_j`.
    pub fn diagonal(v: &[T]) -> Self {
        let d = v.len();
        NormalForm {
            e: T::zero(),
            n: CMat::from_fn(d, d, |i, j| if i == j { cr(v[i]) } else { cr(T::zero()) }),
        }
    }

    pub fn d(&self) -> usize {
        self.n.nrows()
    }

    pub fn eigen(&self) -> Result<HermitianEigen<T>> {
        HermitianEigen::new(&self.n)
    }

    /// Same function as a (θ-constant) symbol on `T^n`.
    pub fn to_symbol(&self, n: usize) -> QuadraticSymbol<T> {
        let d = self.d();
        let mut quad = CMat::zeros(2 * d, 2 * d);
        quad.view_mut((0, d), (d, d)).copy_from(&self.n);
        quad.view_mut((d, 0), (d, d)).copy_from(&self.n.transpose());
        let mut q = QuadraticSymbol::zero(n, d);
        q.quad = FourierSeries::constant(n, quad).pruned();
        q.constant = FourierSeries::scalar(n, cr(self.e)).pruned();
        q
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::MultiIndex;
    use crate::testutil::*;

    fn zz_times_zbar(n: usize) -> QuadraticSymbol<f64> {
        NormalForm::diagonal(&[1.0]).to_symbol(n)
    }

    fn z_only(n: usize) -> QuadraticSymbol<f64> {
        let mut lin = FourierSeries::zeros(n, 2, 1);
        lin.set(
            MultiIndex::zero(n),
            CMat::from_row_slice(2, 1, &[C::new(1.0, 0.0), C::new(0.0, 0.0)]),
        );
        QuadraticSymbol::from_packed(
            FourierSeries::zeros(n, 2, 2),
            lin,
            FourierSeries::zeros(n, 1, 1),
        )
        .unwrap()
    }

    #[test]
    fn bracket_of_action_with_z() {
        // {z z̄, z} = i z
        let (b, _) = zz_times_zbar(1).bracket(&z_only(1), None).unwrap();
        let expect = z_only(1).scale(C::new(0.0, 1.0));
        assert!(b.sub(&expect).norm(0.0) < 1e-15);
    }

    #[test]
    fn bracket_matches_finite_differences() {
        let mut rng = rng(11);
        for _ in 0..20 {
            let q = random_symbol(&mut rng, 2, 2, 2, SymbolClass::Re);
            let f = random_symbol(&mut rng, 2, 2, 1, SymbolClass::Im);
            let (b, lost) = q.bracket(&f, None).unwrap();
            assert_eq!(lost, 0.0);
            let theta = [0.3, -1.2];
            let u = random_cvec(&mut rng, 4);
            let direct = fd_bracket(&q, &f, &theta, &u);
            let got = b.evaluate(&theta, &u);
            assert!(
                (direct - got).norm() < 1e-6 * (1.0 + got.norm()),
                "{direct} vs {got}"
            );
        }
    }

    #[test]
    fn bracket_is_antisymmetric_and_satisfies_jacobi() {
        let mut rng = rng(5);
        let a = random_symbol(&mut rng, 1, 2, 1, SymbolClass::Re);
        let b = random_symbol(&mut rng, 1, 2, 1, SymbolClass::Re);
        let c = random_symbol(&mut rng, 1, 2, 1, SymbolClass::Im);
        let ab = a.bracket(&b, None).unwrap().0;
        let ba = b.bracket(&a, None).unwrap().0;
        assert!(ab.add(&ba).norm(0.0) < 1e-12);
        let j1 = a.bracket(&b.bracket(&c, None).unwrap().0, None).unwrap().0;
        let j2 = b.bracket(&c.bracket(&a, None).unwrap().0, None).unwrap().0;
        let j3 = c.bracket(&a.bracket(&b, None).unwrap().0, None).unwrap().0;
        assert!(j1.add(&j2).add(&j3).norm(0.0) < 1e-11);
    }

    #[test]
    fn real_blocks_round_trip() {
        let mut rng = rng(2);
        for _ in 0..10 {
            let w = random_real_blocks(&mut rng, 2, 3, 2).canonical();
            let q = QuadraticSymbol::from_real_blocks(&w).unwrap();
            assert!(q.reality_defect(SymbolClass::Re) < 1e-13);
            let back = q.to_real_blocks();
            for (a, b) in [
                (&w.xx, &back.xx),
                (&w.xixi, &back.xixi),
                (&w.xxi, &back.xxi),
                (&w.x, &back.x),
                (&w.xi, &back.xi),
                (&w.theta, &back.theta),
            ] {
                assert!((a - b).strip_norm(0.0) < 1e-13);
            }
        }
    }

    #[test]
    fn real_blocks_give_the_same_function() {
        let mut rng = rng(8);
        let w = random_real_blocks(&mut rng, 1, 2, 2);
        let q = QuadraticSymbol::from_real_blocks(&w).unwrap();
        let theta = [0.77];
        let x = [0.3, -1.1];
        let xi = [0.9, 0.4];
        let direct = eval_real_blocks(&w, &theta, &x, &xi);
        let s = 1.0 / 2f64.sqrt();
        let u = CMat::from_fn(4, 1, |i, _| {
            let j = i % 2;
            if i < 2 {
                C::new(xi[j] * s, -x[j] * s)
            } else {
                C::new(xi[j] * s, x[j] * s)
            }
        });
        let val = q.evaluate(&theta, &u);
        assert!((val - direct).norm() < 1e-12);
        assert!(val.im.abs() < 1e-12);
    }

    #[test]
    fn unit_quadratic_blocks_map_to_identity_coupling() {
        let d = 2;
        let half = CMat::<f64>::identity(d, d) * C::new(0.5, 0.0);
        let mut w = RealBlocks::zeros(1, d);
        w.xx = FourierSeries::constant(1, half.clone());
        w.xixi = FourierSeries::constant(1, half);
        let q = QuadraticSymbol::from_real_blocks(&w).unwrap();
        assert!((q.zzbar().mean() - CMat::identity(d, d)).norm() < 1e-15);
        assert!(q.zz().strip_norm(0.0) < 1e-15);
    }

    #[test]
    fn generic_over_single_precision() {
        let h = NormalForm::<f32>::diagonal(&[1.0, 2.0]).to_symbol(1);
        let (b, _) = h.bracket(&h, None).unwrap();
        assert!(b.norm(0.0) < 1e-6);
    }
}
