//! Independent checks of a reduction: direct integration of the original
//! time-dependent equations in the real variables, comparison with the
//! reduced dynamics, and norm inequalities on Fourier series.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::driver::{BoundChecks, Problem, RunReport, SCHEMA_VERSION};
use crate::error::{KamError, Result};
use crate::linalg::{complex_from_real, poisson_structure, real_from_complex};
use crate::scalar::{coeff_norm, cr, frob, CMat, Real, C};
use crate::series::FourierSeries;
use crate::symbol::RealBlocks;

type RMat<T> = DMatrix<T>;

/// Samples of a solution of the original system.
#[derive(Clone, Debug)]
pub struct Trajectory<T: Real> {
    pub times: Vec<T>,
    /// `u = (z, z̄)` at each time.
    pub states: Vec<CMat<T>>,
    /// Value of the time-dependent Hamiltonian along the solution.
    pub energy: Vec<T>,
    /// Richardson estimate of the largest absolute integration error.
    pub error_estimate: T,
}

/// The original Hamiltonian `Σ v_j (x_j² + ξ_j²)/2 + ε W(θ; x, ξ)` in
/// real coordinates, written out directly from the blocks.
struct RealSystem<T: Real> {
    d: usize,
    v: Vec<T>,
    eps: T,
    w: RealBlocks<T>,
    omega: Vec<T>,
}

fn re_mat<T: Real>(s: &FourierSeries<T>, theta: &[T]) -> RMat<T> {
    s.evaluate(theta).map(|z| z.re)
}

impl<T: Real> RealSystem<T> {
    fn from_problem(p: &Problem<T>) -> Self {
        RealSystem {
            d: p.config.d,
            v: p.config.v.clone(),
            eps: p.config.schedule.eps0,
            w: p.input.blocks.clone(),
            omega: p.config.omega.clone(),
        }
    }

    fn theta(&self, t: T) -> Vec<T> {
        self.omega.iter().map(|&w| w * t).collect()
    }

    /// `(∂H/∂x, ∂H/∂ξ, H)` at time `t`.
    fn grad(&self, t: T, y: &[T]) -> (Vec<T>, Vec<T>, T) {
        let d = self.d;
        let th = self.theta(t);
        let x = RMat::from_column_slice(d, 1, &y[..d]);
        let xi = RMat::from_column_slice(d, 1, &y[d..]);
        let a = re_mat(&self.w.xx, &th);
        let b = re_mat(&self.w.xixi, &th);
        let c = re_mat(&self.w.xxi, &th);
        let wx = re_mat(&self.w.x, &th);
        let wxi = re_mat(&self.w.xi, &th);
        let w0 = re_mat(&self.w.theta, &th)[(0, 0)];
        let gx = (&a + a.transpose()) * &x + &c * &xi + &wx;
        let gxi = (&b + b.transpose()) * &xi + c.transpose() * &x + &wxi;
        let wval = (x.transpose() * &a * &x)[(0, 0)]
            + (xi.transpose() * &b * &xi)[(0, 0)]
            + (x.transpose() * &c * &xi)[(0, 0)]
            + (wx.transpose() * &x)[(0, 0)]
            + (wxi.transpose() * &xi)[(0, 0)]
            + w0;
        let half = T::lit(0.5);
        let mut h = self.eps * wval;
        let mut dx = Vec::with_capacity(d);
        let mut dxi = Vec::with_capacity(d);
        for j in 0..d {
            h += half * self.v[j] * (x[j] * x[j] + xi[j] * xi[j]);
            dx.push(self.v[j] * x[j] + self.eps * gx[j]);
            dxi.push(self.v[j] * xi[j] + self.eps * gxi[j]);
        }
        (dx, dxi, h)
    }

    /// `ẋ = ∂H/∂ξ`, `ξ̇ = -∂H/∂x`.
    fn field(&self, t: T, y: &[T]) -> Vec<T> {
        let (dx, dxi, _) = self.grad(t, y);
        dxi.into_iter().chain(dx.into_iter().map(|g| -g)).collect()
    }

    fn rk4_step(&self, t: T, y: &[T], h: T) -> Vec<T> {
        let two = T::lit(2.0);
        let axpy = |a: &[T], s: T, b: &[T]| -> Vec<T> {
            a.iter().zip(b).map(|(p, q)| *p + s * *q).collect()
        };
        let k1 = self.field(t, y);
        let k2 = self.field(t + h / two, &axpy(y, h / two, &k1));
        let k3 = self.field(t + h / two, &axpy(y, h / two, &k2));
        let k4 = self.field(t + h, &axpy(y, h, &k3));
        (0..y.len())
            .map(|i| y[i] + h / T::lit(6.0) * (k1[i] + two * k2[i] + two * k3[i] + k4[i]))
            .collect()
    }

    /// Fixed-step RK4 returning the state after every step.
    fn integrate(&self, y0: &[T], steps: usize, dt: T) -> Vec<Vec<T>> {
        let mut out = Vec::with_capacity(steps + 1);
        out.push(y0.to_vec());
        let mut y = y0.to_vec();
        for i in 0..steps {
            y = self.rk4_step(T::lit(i as f64) * dt, &y, dt);
            out.push(y.clone());
        }
        out
    }
}

fn to_real<T: Real>(u: &CMat<T>, d: usize) -> Vec<T> {
    (real_from_complex::<T>(d) * u)
        .iter()
        .map(|z| z.re)
        .collect()
}

fn to_complex<T: Real>(y: &[T], d: usize) -> CMat<T> {
    let yc = CMat::from_fn(2 * d, 1, |i, _| cr(y[i]));
    complex_from_real::<T>(d) * yc
}

/// `u = (z, z̄)` from `z`.
pub fn packed_state<T: Real>(z: &[C<T>]) -> CMat<T> {
    let d = z.len();
    CMat::from_fn(2 * d, 1, |i, _| if i < d { z[i] } else { z[i - d].conj() })
}

/// Integrates the original equations `ż = -i ∂h/∂z̄` (in the equivalent
/// real form) from `z0` over `[0, t_end]` with RK4 at step `dt`, checked
/// against a second run at `dt/2`. The finer run is returned, sampled on
/// the coarse time grid.
pub fn integrate_original<T: Real>(
    problem: &Problem<T>,
    z0: &[C<T>],
    t_end: T,
    dt: T,
) -> Result<Trajectory<T>> {
    let d = problem.config.d;
    if z0.len() != d {
        return Err(KamError::Dimension(format!(
            "initial state has {} entries, d = {d}",
            z0.len()
        )));
    }
    if !dt.is_finite() || dt <= T::zero() || t_end < T::zero() {
        return Err(KamError::Config("need dt > 0 and t_end >= 0".into()));
    }
    let steps = (t_end / dt).round().to_usize().unwrap_or(0);
    let sys = RealSystem::from_problem(problem);
    let y0 = to_real(&packed_state(z0), d);
    let coarse = sys.integrate(&y0, steps, dt);
    let fine = sys.integrate(&y0, 2 * steps, dt / T::lit(2.0));
    let mut err = T::zero();
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut energy = Vec::with_capacity(steps + 1);
    for (i, yc) in coarse.iter().enumerate() {
        let yf = &fine[2 * i];
        let diff = yc
            .iter()
            .zip(yf)
            .fold(T::zero(), |a, (p, q)| a + (*p - *q) * (*p - *q))
            .sqrt();
        // RK4: the dt/2 error is about |y_dt - y_dt/2| / 15
        let e = diff / T::lit(15.0);
        if e > err {
            err = e;
        }
        let t = T::lit(i as f64) * dt;
        times.push(t);
        states.push(to_complex(yf, d));
        energy.push(sys.grad(t, yf).2);
    }
    Ok(Trajectory {
        times,
        states,
        energy,
        error_estimate: err,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjugacyReport<T> {
    pub schema: String,
    pub t_end: T,
    pub dt: T,
    /// `sup_t |u_red(t) - u(t)| / max(|u(t)|, |u0|)`
    pub sup_defect: T,
    pub times: Vec<T>,
    pub defect_series: Vec<T>,
    /// Richardson estimate of the reference solution's error, relative to `|u0|`.
    pub integrator_error: T,
    pub bound_checks: BoundChecks<T>,
}

/// Evolves `u0` with the reduced dynamics:
/// `Φ(ωt) · exp(t S H∞) · Φ(0)⁻¹ u0`.
pub fn reduced_solution<T: Real>(
    report: &RunReport<T>,
    u0: &CMat<T>,
    times: &[T],
) -> Result<Vec<CMat<T>>> {
    let phi = report.map()?;
    let nf = report.normal_form()?;
    let d = nf.d();
    let n = report.n;
    let a = poisson_structure::<T>(d) * nf.to_symbol(n).quad().mean();
    let zero = vec![T::zero(); n];
    let (mi, ci) = phi.inverse_at(&zero)?;
    let w0 = mi * u0 + ci;
    Ok(times
        .iter()
        .map(|&t| {
            let th: Vec<T> = report.omega.iter().map(|&w| w * t).collect();
            let wt = (&a * cr(t)).exp() * &w0;
            phi.apply(&th, &wt)
        })
        .collect())
}

/// Compares the reduced dynamics of a converged run with direct integration.
pub fn conjugacy_defect<T: Real>(
    report: &RunReport<T>,
    problem: &Problem<T>,
    z0: &[C<T>],
    t_end: T,
    dt: T,
) -> Result<ConjugacyReport<T>> {
    if !report.converged {
        return Err(KamError::Config(
            "conjugacy check needs a converged run".into(),
        ));
    }
    if report.n != problem.config.n || report.d != problem.config.d {
        return Err(KamError::Dimension(
            "report and problem sizes differ".into(),
        ));
    }
    let traj = integrate_original(problem, z0, t_end, dt)?;
    let u0 = packed_state(z0);
    let red = reduced_solution(report, &u0, &traj.times)?;
    let n0 = frob(&u0);
    let mut sup = T::zero();
    let mut series = Vec::with_capacity(red.len());
    for (ur, uref) in red.iter().zip(&traj.states) {
        let den = {
            let a = frob(uref);
            if a > n0 {
                a
            } else {
                n0
            }
        };
        let rel = if den > T::zero() {
            frob(&(ur - uref)) / den
        } else {
            frob(&(ur - uref))
        };
        if rel > sup {
            sup = rel;
        }
        series.push(rel);
    }
    let integrator_error = if n0 > T::zero() {
        traj.error_estimate / n0
    } else {
        traj.error_estimate
    };
    let bound_checks = BoundChecks::evaluate(
        report.eps0,
        report.e_inf,
        &report.v,
        &report.v_inf,
        report.map().map(|m| m.deviation_from_identity())?,
    );
    Ok(ConjugacyReport {
        schema: SCHEMA_VERSION.into(),
        t_end,
        dt,
        sup_defect: sup,
        times: traj.times,
        defect_series: series,
        integrator_error,
        bound_checks,
    })
}

/// `Σ_k ‖f̂(k)‖² e^{2|k|r} ≤ 2ⁿ sup_est²`, with `sup_est` defaulting to
/// the strip norm at width `r`.
pub fn parseval_check<T: Real>(f: &FourierSeries<T>, r: T, sup_est: Option<T>) -> bool {
    let sup = sup_est.unwrap_or_else(|| f.strip_norm(r));
    let lhs = f.iter().fold(T::zero(), |a, (k, c)| {
        let m = coeff_norm(c);
        a + m * m * (T::lit(2.0) * T::lit(k.l1() as f64) * r).exp()
    });
    lhs <= T::lit(2f64.powi(f.n() as i32)) * sup * sup
}

/// `‖∂_θ f‖_{r-ρ} ≤ ‖f‖_r / (e ρ)`, where `‖∂_θ f‖` weighs each mode by `|k|_1`.
pub fn cauchy_check<T: Real>(f: &FourierSeries<T>, r: T, rho: T) -> bool {
    if !(rho > T::zero() && rho <= r) {
        return false;
    }
    let lhs = f.iter().fold(T::zero(), |a, (k, c)| {
        let l = T::lit(k.l1() as f64);
        a + l * coeff_norm(c) * (l * (r - rho)).exp()
    });
    let e = T::one().exp();
    // tiny slack for rounding in the exponentials
    lhs <= f.strip_norm(r) / (e * rho) * (T::one() + T::lit(1e-12))
}
