//! Sparse matrix-valued trigonometric series on the torus.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{KamError, Result};
use crate::scalar::{cabs, coeff_norm, cr, CMat, Real, C};

/// Coefficients whose norm falls below this fraction of the largest
/// coefficient of the same series are discarded after products.
pub const DROP_REL: f64 = 1e-16;

/// Integer frequency vector `k` in `Z^n`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<i32>);

impl MultiIndex {
    pub fn new(k: Vec<i32>) -> Self {
        MultiIndex(k)
    }

    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    /// Unit vector `e_j` scaled by `s`.
    pub fn unit(n: usize, j: usize, s: i32) -> Self {
        let mut k = vec![0; n];
        k[j] = s;
        MultiIndex(k)
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[i32] {
        &self.0
    }

    pub fn to_vec(&self) -> Vec<i32> {
        self.0.clone()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    /// `|k|_1`.
    pub fn l1(&self) -> i64 {
        self.0.iter().map(|&x| (x as i64).abs()).sum()
    }

    /// Euclidean length `|k|_2`.
    pub fn l2<T: Real>(&self) -> T {
        let s: i64 = self.0.iter().map(|&x| (x as i64) * (x as i64)).sum();
        T::lit(s as f64).sqrt()
    }

    /// `<k, w>`.
    pub fn dot<T: Real>(&self, w: &[T]) -> T {
        debug_assert_eq!(self.0.len(), w.len());
        self.0
            .iter()
            .zip(w)
            .fold(T::zero(), |a, (&k, &x)| a + T::lit(k as f64) * x)
    }

    /// Every `k` in `Z^n` with `|k|_1 <= radius`, in lexicographic order.
    pub fn ball(n: usize, radius: i64) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut cur = vec![0i32; n];
        fn rec(j: usize, budget: i64, cur: &mut Vec<i32>, out: &mut Vec<MultiIndex>) {
            if j == cur.len() {
                out.push(MultiIndex(cur.clone()));
                return;
            }
            for x in -budget..=budget {
                cur[j] = x as i32;
                rec(j + 1, budget - x.abs(), cur, out);
            }
            cur[j] = 0;
        }
        if n == 0 {
            return vec![MultiIndex(vec![])];
        }
        rec(0, radius, &mut cur, &mut out);
        out
    }
}

impl Neg for &MultiIndex {
    type Output = MultiIndex;
    fn neg(self) -> MultiIndex {
        MultiIndex(self.0.iter().map(|x| -x).collect())
    }
}

impl Add for &MultiIndex {
    type Output = MultiIndex;
    fn add(self, o: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// Finite series `sum_k c_k e^{i<k,theta>}` with `rows x cols` complex
/// matrix coefficients. Scalars are `1x1`, vectors `rows x 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierSeries<T: Real> {
    n: usize,
    rows: usize,
    cols: usize,
    coeffs: BTreeMap<MultiIndex, CMat<T>>,
}

impl<T: Real> FourierSeries<T> {
    pub fn zeros(n: usize, rows: usize, cols: usize) -> Self {
        FourierSeries {
            n,
            rows,
            cols,
            coeffs: BTreeMap::new(),
        }
    }

    /// θ-independent series.
    pub fn constant(n: usize, m: CMat<T>) -> Self {
        let mut s = Self::zeros(n, m.nrows(), m.ncols());
        s.set(MultiIndex::zero(n), m);
        s
    }

    pub fn scalar(n: usize, c: C<T>) -> Self {
        Self::constant(n, CMat::from_element(1, 1, c))
    }

    pub fn from_coeffs<I>(n: usize, rows: usize, cols: usize, items: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiIndex, CMat<T>)>,
    {
        let mut s = Self::zeros(n, rows, cols);
        for (k, m) in items {
            if k.n() != n {
                return Err(KamError::Dimension(format!(
                    "index {k} has length {}, expected {n}",
                    k.n()
                )));
            }
            if m.shape() != (rows, cols) {
                return Err(KamError::Dimension(format!(
                    "coefficient at {k} has shape {:?}, expected {:?}",
                    m.shape(),
                    (rows, cols)
                )));
            }
            s.add_to(k, &m);
        }
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &CMat<T>)> {
        self.coeffs.iter()
    }

    pub fn coeff(&self, k: &MultiIndex) -> Option<&CMat<T>> {
        self.coeffs.get(k)
    }

    pub fn coeff_or_zero(&self, k: &MultiIndex) -> CMat<T> {
        self.coeffs
            .get(k)
            .cloned()
            .unwrap_or_else(|| CMat::zeros(self.rows, self.cols))
    }

    /// Mean value (the `k = 0` coefficient).
    pub fn mean(&self) -> CMat<T> {
        self.coeff_or_zero(&MultiIndex::zero(self.n))
    }

    pub fn set(&mut self, k: MultiIndex, m: CMat<T>) {
        debug_assert_eq!(m.shape(), (self.rows, self.cols));
        self.coeffs.insert(k, m);
    }

    pub fn add_to(&mut self, k: MultiIndex, m: &CMat<T>) {
        match self.coeffs.get_mut(&k) {
            Some(e) => *e += m,
            None => {
                self.coeffs.insert(k, m.clone());
            }
        }
    }

    pub fn remove(&mut self, k: &MultiIndex) -> Option<CMat<T>> {
        self.coeffs.remove(k)
    }

    /// Largest `|k|_1` in the support (0 for an empty series).
    pub fn support_radius(&self) -> i64 {
        self.coeffs.keys().map(|k| k.l1()).max().unwrap_or(0)
    }

    pub fn max_coeff_norm(&self) -> T {
        self.coeffs
            .values()
            .map(coeff_norm)
            .fold(T::zero(), |a, b| if b > a { b } else { a })
    }

    /// Weighted norm `sum_k ||c_k|| e^{|k|_1 s}`.
    pub fn strip_norm(&self, s: T) -> T {
        self.coeffs.iter().fold(T::zero(), |acc, (k, m)| {
            acc + coeff_norm(m) * (T::lit(k.l1() as f64) * s).exp()
        })
    }

    /// Splits into modes `|k|_1 <= kmax` and the remaining tail.
    pub fn truncate(&self, kmax: i64) -> (Self, Self) {
        let mut low = Self::zeros(self.n, self.rows, self.cols);
        let mut high = Self::zeros(self.n, self.rows, self.cols);
        for (k, m) in &self.coeffs {
            if k.l1() <= kmax {
                low.coeffs.insert(k.clone(), m.clone());
            } else {
                high.coeffs.insert(k.clone(), m.clone());
            }
        }
        (low, high)
    }

    /// Drops coefficients with norm at most `rel` times the largest one
    /// (exact zeros are always dropped).
    pub fn prune(&mut self, rel: T) {
        let top = self.max_coeff_norm();
        let cut = top * rel;
        self.coeffs.retain(|_, m| {
            let v = coeff_norm(m);
            v > cut && v > T::zero()
        });
    }

    pub fn pruned(mut self) -> Self {
        self.prune(T::lit(DROP_REL));
        self
    }

    pub fn map_coeffs<F>(&self, rows: usize, cols: usize, f: F) -> Self
    where
        F: Fn(&MultiIndex, &CMat<T>) -> CMat<T>,
    {
        let mut out = Self::zeros(self.n, rows, cols);
        for (k, m) in &self.coeffs {
            let v = f(k, m);
            debug_assert_eq!(v.shape(), (rows, cols));
            out.coeffs.insert(k.clone(), v);
        }
        out
    }

    pub fn scale(&self, c: C<T>) -> Self {
        self.map_coeffs(self.rows, self.cols, |_, m| m * c)
    }

    pub fn scale_real(&self, c: T) -> Self {
        self.scale(cr(c))
    }

    /// Coefficientwise transpose, i.e. the series of `f(θ)^T`.
    pub fn transpose(&self) -> Self {
        self.map_coeffs(self.cols, self.rows, |_, m| m.transpose())
    }

    /// Series of `conj(f(θ))`: coefficient at `k` is `conj(c_{-k})`.
    pub fn conj_fn(&self) -> Self {
        let mut out = Self::zeros(self.n, self.rows, self.cols);
        for (k, m) in &self.coeffs {
            out.coeffs.insert(-k, m.map(|z| z.conj()));
        }
        out
    }

    /// Series of `f(θ)^*` (conjugate transpose at each θ).
    pub fn adjoint_fn(&self) -> Self {
        self.conj_fn().transpose()
    }

    /// Directional derivative `ω·∂_θ f`: coefficient `i<k,ω> c_k`.
    pub fn omega_derivative(&self, omega: &[T]) -> Self {
        let mut out = Self::zeros(self.n, self.rows, self.cols);
        for (k, m) in &self.coeffs {
            if k.is_zero() {
                continue;
            }
            let w = k.dot(omega);
            out.coeffs.insert(k.clone(), m * C::new(T::zero(), w));
        }
        out
    }

    /// Sub-block of every coefficient.
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Self {
        let mut out = Self::zeros(self.n, nr, nc);
        for (k, m) in &self.coeffs {
            let b = m.view((r0, c0), (nr, nc)).into_owned();
            if b.iter().any(|z| z.re != T::zero() || z.im != T::zero()) {
                out.coeffs.insert(k.clone(), b);
            }
        }
        out
    }

    /// Value at `θ`.
    pub fn evaluate(&self, theta: &[T]) -> CMat<T> {
        let mut out = CMat::zeros(self.rows, self.cols);
        for (k, m) in &self.coeffs {
            let ph = k.dot(theta);
            let e = C::new(ph.cos(), ph.sin());
            out += m * e;
        }
        out
    }

    /// Multiplies each coefficient on the left by a fixed matrix.
    pub fn left_mul(&self, a: &CMat<T>) -> Self {
        self.map_coeffs(a.nrows(), self.cols, |_, m| a * m)
    }

    /// Multiplies each coefficient on the right by a fixed matrix.
    pub fn right_mul(&self, a: &CMat<T>) -> Self {
        self.map_coeffs(self.rows, a.ncols(), |_, m| m * a)
    }

    /// Pointwise matrix product `f(θ) g(θ)` as a convolution of
    /// coefficients. Modes with `|k|_1 > kmax` are discarded and their
    /// combined unweighted norm is returned alongside the product.
    pub fn mul(&self, other: &Self, kmax: Option<i64>) -> Result<(Self, T)> {
        if self.n != other.n || self.cols != other.rows {
            return Err(KamError::Dimension(format!(
                "cannot multiply {}x{} series by {}x{} series (n = {}, {})",
                self.rows, self.cols, other.rows, other.cols, self.n, other.n
            )));
        }
        let mut out = Self::zeros(self.n, self.rows, other.cols);
        let mut dropped: BTreeMap<MultiIndex, CMat<T>> = BTreeMap::new();
        for (k1, a) in &self.coeffs {
            for (k2, b) in &other.coeffs {
                let k = k1 + k2;
                let p = a * b;
                if kmax.is_some_and(|km| k.l1() > km) {
                    match dropped.get_mut(&k) {
                        Some(e) => *e += &p,
                        None => {
                            dropped.insert(k, p);
                        }
                    }
                } else {
                    out.add_to(k, &p);
                }
            }
        }
        let lost = dropped.values().fold(T::zero(), |a, m| a + coeff_norm(m));
        Ok((out.pruned(), lost))
    }

    /// Product with the truncation bookkeeping discarded.
    pub fn mul_trunc(&self, other: &Self, kmax: Option<i64>) -> Result<Self> {
        self.mul(other, kmax).map(|(s, _)| s)
    }

    /// Largest deviation from `c_{-k} = conj(c_k)`, i.e. from being a
    /// real-valued function of θ.
    pub fn reality_defect(&self) -> T {
        let mut worst = T::zero();
        for (k, m) in &self.coeffs {
            let mk = self.coeff_or_zero(&-k);
            let d = (m - mk.map(|z| z.conj())).iter().fold(T::zero(), |a, z| {
                let v = cabs(*z);
                if v > a {
                    v
                } else {
                    a
                }
            });
            if d > worst {
                worst = d;
            }
        }
        worst
    }

    /// Serializable form.
    pub fn to_record(&self) -> SeriesRecord<T> {
        SeriesRecord {
            n: self.n,
            rows: self.rows,
            cols: self.cols,
            coeffs: self
                .coeffs
                .iter()
                .map(|(k, m)| {
                    let mut re = Vec::with_capacity(self.rows * self.cols);
                    let mut im = Vec::with_capacity(self.rows * self.cols);
                    for i in 0..self.rows {
                        for j in 0..self.cols {
                            re.push(m[(i, j)].re);
                            im.push(m[(i, j)].im);
                        }
                    }
                    CoeffRecord {
                        k: k.to_vec(),
                        re,
                        im,
                    }
                })
                .collect(),
        }
    }

    pub fn from_record(rec: &SeriesRecord<T>) -> Result<Self> {
        let size = rec.rows * rec.cols;
        let mut items = Vec::with_capacity(rec.coeffs.len());
        for c in &rec.coeffs {
            if c.re.len() != size || c.im.len() != size {
                return Err(KamError::Dimension(format!(
                    "coefficient {:?} carries {} / {} entries, expected {size}",
                    c.k,
                    c.re.len(),
                    c.im.len()
                )));
            }
            if c.re.iter().chain(&c.im).any(|x| !x.is_finite()) {
                return Err(KamError::Config(format!(
                    "non-finite coefficient at k = {:?}",
                    c.k
                )));
            }
            let m = CMat::from_fn(rec.rows, rec.cols, |i, j| {
                C::new(c.re[i * rec.cols + j], c.im[i * rec.cols + j])
            });
            items.push((MultiIndex::new(c.k.clone()), m));
        }
        Self::from_coeffs(rec.n, rec.rows, rec.cols, items)
    }

    fn check_same(&self, o: &Self) {
        assert!(
            self.n == o.n && self.rows == o.rows && self.cols == o.cols,
            "series shape mismatch: ({}, {}x{}) vs ({}, {}x{})",
            self.n,
            self.rows,
            self.cols,
            o.n,
            o.rows,
            o.cols
        );
    }
}

impl<T: Real> Add for &FourierSeries<T> {
    type Output = FourierSeries<T>;
    fn add(self, o: &FourierSeries<T>) -> FourierSeries<T> {
        self.check_same(o);
        let mut out = self.clone();
        for (k, m) in &o.coeffs {
            out.add_to(k.clone(), m);
        }
        out
    }
}

impl<T: Real> Sub for &FourierSeries<T> {
    type Output = FourierSeries<T>;
    fn sub(self, o: &FourierSeries<T>) -> FourierSeries<T> {
        self.check_same(o);
        let mut out = self.clone();
        for (k, m) in &o.coeffs {
            out.add_to(k.clone(), &(-m));
        }
        out
    }
}

impl<T: Real> Neg for &FourierSeries<T> {
    type Output = FourierSeries<T>;
    fn neg(self) -> FourierSeries<T> {
        self.scale_real(-T::one())
    }
}

/// One stored coefficient: `re`/`im` are the row-major entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoeffRecord<T> {
    pub k: Vec<i32>,
    pub re: Vec<T>,
    pub im: Vec<T>,
}

/// JSON layout of a [`FourierSeries`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesRecord<T> {
    pub n: usize,
    pub rows: usize,
    pub cols: usize,
    pub coeffs: Vec<CoeffRecord<T>>,
}
