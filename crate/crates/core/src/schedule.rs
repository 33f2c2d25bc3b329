//! Parameter sequences of the iteration: sizes `ε_m`, strips `s_m`,
//! truncation orders `K_m` and Diophantine constants `γ_m`.

use serde::{Deserialize, Serialize};

use crate::error::{KamError, Result};
use crate::scalar::Real;

/// User-facing schedule parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleParams<T> {
    pub eps0: T,
    pub rho: T,
    pub ell: T,
    pub beta: T,
    pub gamma0: T,
    /// Defaults to `n - 1 + β/8`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<T>,
    /// Optional hard ceiling on `eps0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_star: Option<T>,
}

/// Longest schedule ever tabulated.
const MAX_LEN: usize = 256;

#[derive(Clone, Debug, PartialEq)]
pub struct Schedule<T: Real> {
    pub params: ScheduleParams<T>,
    pub n: usize,
    pub tau: T,
    eps: Vec<T>,
    s: Vec<T>,
    mid: Vec<T>,
    kmax: Vec<i64>,
    gamma: Vec<T>,
}

fn window(ok: bool, what: String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(KamError::Config(what))
    }
}

/// Validates the parameter windows and tabulates the sequences for every
/// `m` at which they remain representable and well ordered.
pub fn make_schedule<T: Real>(params: &ScheduleParams<T>, n: usize) -> Result<Schedule<T>> {
    let p = params;
    let nf = T::lit(n as f64);
    let one = T::one();
    window(n >= 1, "n must be at least 1".into())?;
    window(
        p.eps0 > T::zero() && p.eps0 < one,
        format!("eps0 = {} violates 0 < eps0 < 1", p.eps0),
    )?;
    if let Some(star) = p.eps_star {
        window(
            p.eps0 < star,
            format!("eps0 = {} violates eps0 < eps_star = {star}", p.eps0),
        )?;
    }
    window(
        p.beta > T::zero() && p.beta < one,
        format!("beta = {} violates 0 < beta < 1", p.beta),
    )?;
    let ell_min = T::lit(2.0) * nf - one + p.beta;
    window(
        p.ell >= ell_min,
        format!("ell = {} violates ell >= 2n - 1 + beta = {ell_min}", p.ell),
    )?;
    let rho_max = p.beta / (T::lit(4.0) * (T::lit(2.0) * nf - one) + T::lit(3.0) * p.beta);
    window(
        p.rho > T::zero() && p.rho < rho_max,
        format!(
            "rho = {} violates 0 < rho < beta/(4(2n-1)+3beta) = {rho_max}",
            p.rho
        ),
    )?;
    let tau_lo = nf - one;
    let tau_hi = tau_lo + p.beta / T::lit(4.0);
    let tau = p.tau.unwrap_or(tau_lo + p.beta / T::lit(8.0));
    window(
        tau > tau_lo && tau < tau_hi,
        format!("tau = {tau} violates n - 1 = {tau_lo} < tau < n - 1 + beta/4 = {tau_hi}"),
    )?;
    window(
        p.gamma0 > T::zero(),
        format!("gamma0 = {} must be positive", p.gamma0),
    )?;

    let ln0 = p.eps0.ln();
    let mut eps = Vec::new();
    for m in 0..MAX_LEN + 2 {
        let e = ((one + p.rho).powi(m as i32) * ln0).exp();
        if e <= T::zero() || !e.is_finite() {
            break;
        }
        eps.push(e);
    }
    let s: Vec<T> = eps.iter().skip(1).map(|e| e.powf(one / p.ell)).collect();
    let mut sched = Schedule {
        params: p.clone(),
        n,
        tau,
        eps: Vec::new(),
        s: Vec::new(),
        mid: Vec::new(),
        kmax: Vec::new(),
        gamma: Vec::new(),
    };
    for m in 0..s.len().saturating_sub(1) {
        let (sm, sn) = (s[m], s[m + 1]);
        let mid = (sm + T::lit(3.0) * sn) / T::lit(4.0);
        if !(sn < mid && mid < sm) {
            break;
        }
        let k = (-eps[m].ln() / (sm - mid)).ceil();
        let Some(k) = k.to_i64().filter(|&k| k < i64::from(i32::MAX)) else {
            break;
        };
        sched.eps.push(eps[m]);
        sched.s.push(sm);
        sched.mid.push(mid);
        sched.kmax.push(k.max(1));
        sched.gamma.push(p.gamma0 / T::lit(2.0).powi(m as i32));
    }
    if sched.len() < 2 {
        return Err(KamError::Config(
            "schedule exhausts floating point range after fewer than two steps".into(),
        ));
    }
    Ok(sched)
}

impl<T: Real> Schedule<T> {
    /// Number of tabulated steps.
    pub fn len(&self) -> usize {
        self.eps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps.is_empty()
    }

    pub fn eps(&self, m: usize) -> T {
        self.eps[m]
    }

    /// Analyticity strip of the step-`m` objects, `ε_{m+1}^{1/ℓ}`.
    pub fn s(&self, m: usize) -> T {
        self.s[m]
    }

    /// Strip of the smoothed part `q_{0,m}`, `2 s_m`.
    pub fn sigma(&self, m: usize) -> T {
        self.s[m] * T::lit(2.0)
    }

    /// Intermediate strip `¼(s_m + 3 s_{m+1})`.
    pub fn s_mid(&self, m: usize) -> T {
        self.mid[m]
    }

    /// Truncation order `K_m = ⌈log(1/ε_m) / (s_m - s_mid(m))⌉`.
    pub fn kmax(&self, m: usize) -> i64 {
        self.kmax[m]
    }

    pub fn gamma(&self, m: usize) -> T {
        self.gamma[m]
    }

    pub fn eps_seq(&self) -> &[T] {
        &self.eps
    }
}
