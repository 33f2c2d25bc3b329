//! Independent reference computations used by the unit tests.

pub use crate::random::{
    random_cvec as rcv, random_real_blocks as rrb, random_symbol as rs, seeded,
};
use crate::scalar::{CMat, C};
use crate::series::FourierSeries;
use crate::symbol::{QuadraticSymbol, RealBlocks, SymbolClass};

pub fn rng(seed: u64) -> crate::random::SeededRng {
    seeded(seed)
}

pub fn random_symbol(
    rng: &mut crate::random::SeededRng,
    n: usize,
    d: usize,
    radius: i64,
    class: SymbolClass,
) -> QuadraticSymbol<f64> {
    rs(rng, n, d, radius, class)
}

pub fn random_real_blocks(
    rng: &mut crate::random::SeededRng,
    n: usize,
    d: usize,
    radius: i64,
) -> RealBlocks<f64> {
    rrb(rng, n, d, radius)
}

pub fn random_cvec(rng: &mut crate::random::SeededRng, len: usize) -> CMat<f64> {
    rcv(rng, len)
}

/// Central differences of `q(θ, ·)` at `u`; `q` is a
/// polynomial of degree two so the stencil is exact up to rounding.
fn fd_grad(q: &QuadraticSymbol<f64>, theta: &[f64], u: &CMat<f64>) -> Vec<C<f64>> {
    let h = 1e-3;
    (0..u.nrows())
        .map(|i| {
            let mut up = u.clone();
            let mut dn = u.clone();
            up[(i, 0)] += C::new(h, 0.0);
            dn[(i, 0)] -= C::new(h, 0.0);
            (q.evaluate(theta, &up) - q.evaluate(theta, &dn)) / C::new(2.0 * h, 0.0)
        })
        .collect()
}

/// `-i ∂_z q·∂_z̄ f + i ∂_z̄ q·∂_z f` from numerical derivatives.
pub fn fd_bracket(
    q: &QuadraticSymbol<f64>,
    f: &QuadraticSymbol<f64>,
    theta: &[f64],
    u: &CMat<f64>,
) -> C<f64> {
    let d = u.nrows() / 2;
    let gq = fd_grad(q, theta, u);
    let gf = fd_grad(f, theta, u);
    let i = C::new(0.0, 1.0);
    let mut s = C::new(0.0, 0.0);
    for j in 0..d {
        s += -i * gq[j] * gf[d + j] + i * gq[d + j] * gf[j];
    }
    s
}

/// Direct evaluation of the real-variable form.
pub fn eval_real_blocks(w: &RealBlocks<f64>, theta: &[f64], x: &[f64], xi: &[f64]) -> C<f64> {
    let d = x.len();
    let xv = CMat::from_fn(d, 1, |i, _| C::new(x[i], 0.0));
    let xiv = CMat::from_fn(d, 1, |i, _| C::new(xi[i], 0.0));
    let ev = |s: &FourierSeries<f64>| s.evaluate(theta);
    (xv.transpose() * ev(&w.xx) * &xv)[(0, 0)]
        + (xiv.transpose() * ev(&w.xixi) * &xiv)[(0, 0)]
        + (xv.transpose() * ev(&w.xxi) * &xiv)[(0, 0)]
        + (ev(&w.x).transpose() * &xv)[(0, 0)]
        + (ev(&w.xi).transpose() * &xiv)[(0, 0)]
        + ev(&w.theta)[(0, 0)]
}
