//! Seeded generators for random test problems.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::{CMat, Real, C};
use crate::series::{FourierSeries, MultiIndex};
use crate::symbol::{QuadraticSymbol, RealBlocks, SymbolClass};

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn unit<R: Rng>(rng: &mut R) -> f64 {
    rng.random_range(-1.0..1.0)
}

/// Matrix with entries uniform in the unit square of `C`.
pub fn random_cmat<T: Real, R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMat<T> {
    CMat::from_fn(rows, cols, |_, _| {
        C::new(T::lit(unit(rng)), T::lit(unit(rng)))
    })
}

pub fn random_cvec<T: Real, R: Rng>(rng: &mut R, len: usize) -> CMat<T> {
    random_cmat(rng, len, 1)
}

/// Hermitian matrix `diag(base) + scale·(G + G^*)/2`.
pub fn random_hermitian<T: Real, R: Rng>(rng: &mut R, base: &[f64], scale: f64) -> CMat<T> {
    let d = base.len();
    let g = random_cmat::<T, R>(rng, d, d);
    let mut h = (&g + g.adjoint()) * C::new(T::lit(0.5 * scale), T::zero());
    for (i, &b) in base.iter().enumerate() {
        h[(i, i)] += C::new(T::lit(b), T::zero());
    }
    h
}

fn random_series<T: Real, R: Rng>(
    rng: &mut R,
    n: usize,
    rows: usize,
    cols: usize,
    radius: i64,
) -> FourierSeries<T> {
    let mut s = FourierSeries::zeros(n, rows, cols);
    for k in MultiIndex::ball(n, radius) {
        let w = T::lit((-(k.l1() as f64)).exp());
        s.set(
            k,
            random_cmat::<T, R>(rng, rows, cols) * C::new(w, T::zero()),
        );
    }
    s
}

/// Random symbol on `T^n` with modes `|k|_1 <= radius`, coefficients
/// decaying like `e^{-|k|}`, projected onto `class`.
pub fn random_symbol<T: Real, R: Rng>(
    rng: &mut R,
    n: usize,
    d: usize,
    radius: i64,
    class: SymbolClass,
) -> QuadraticSymbol<T> {
    let q = QuadraticSymbol::from_packed(
        random_series(rng, n, 2 * d, 2 * d, radius),
        random_series(rng, n, 2 * d, 1, radius),
        random_series(rng, n, 1, 1, radius),
    )
    .expect("consistent shapes");
    q.project(class)
}

/// Random real-valued blocks (coefficients satisfy `c_{-k} = conj(c_k)`).
pub fn random_real_blocks<T: Real, R: Rng>(
    rng: &mut R,
    n: usize,
    d: usize,
    radius: i64,
) -> RealBlocks<T> {
    let mut real = |rows: usize, cols: usize| {
        let s = random_series::<T, R>(rng, n, rows, cols, radius);
        (&s + &s.conj_fn()).scale_real(T::lit(0.5)).pruned()
    };
    RealBlocks {
        xx: real(d, d),
        xixi: real(d, d),
        xxi: real(d, d),
        x: real(d, 1),
        xi: real(d, 1),
        theta: real(1, 1),
    }
}
