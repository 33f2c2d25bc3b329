//! The reduction loop: per-step homological solve, flow, error assembly and
//! composition, with convergence tracking and the limit objects.

use serde::{Deserialize, Serialize};

use crate::diophantine::{check_admissible, DivisorOptions};
use crate::error::{KamError, Result};
use crate::flow::{
    compose, lie_transform, limit_log, pullback, time_one_map, LieWeight, MapRecord,
    ThetaAffineMap, DEFAULT_GRID_CAP,
};
use crate::homology::{homological_residual, solve_homological};
use crate::scalar::{CMat, Real, C};
use crate::schedule::{make_schedule, Schedule, ScheduleParams};
use crate::series::SeriesRecord;
use crate::smoothing::{decompose, measured_decay_constant, DecayCertificate, SmoothInput};
use crate::symbol::{NormalForm, QuadraticSymbol, RealBlocks, RealBlocksRecord, SymbolClass};

pub const SCHEMA_VERSION: &str = "v1";

fn default_max_steps() -> usize {
    12
}
fn default_stop_tol<T: Real>() -> T {
    T::lit(1e-14)
}
fn default_grid() -> usize {
    DEFAULT_GRID_CAP
}
fn default_divergence<T: Real>() -> T {
    T::lit(1e3)
}
fn default_lie_tol<T: Real>() -> T {
    T::lit(1e-16)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Limits<T: Real> {
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default = "default_stop_tol::<T>")]
    pub stop_tol: T,
    /// Optional ceiling on the truncation orders `K_m`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kmax_cap: Option<i64>,
    /// Largest θ-grid (points per axis) used when resolving maps.
    #[serde(default = "default_grid")]
    pub theta_grid: usize,
    /// Growth of `ε_m [q'_m]` over three consecutive steps treated as divergence.
    #[serde(default = "default_divergence::<T>")]
    pub divergence_factor: T,
    /// Relative cut-off of the Lie series.
    #[serde(default = "default_lie_tol::<T>")]
    pub lie_tol: T,
}

impl<T: Real> Default for Limits<T> {
    fn default() -> Self {
        Limits {
            max_steps: default_max_steps(),
            stop_tol: default_stop_tol(),
            kmax_cap: None,
            theta_grid: default_grid(),
            divergence_factor: default_divergence(),
            lie_tol: default_lie_tol(),
        }
    }
}

/// Problem description as read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ProblemConfig<T: Real> {
    pub n: usize,
    pub d: usize,
    pub v: Vec<T>,
    pub omega: Vec<T>,
    #[serde(rename = "W")]
    pub w: RealBlocksRecord<T>,
    /// Decay certificate of `W`; measured with `ℓ` from the schedule when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay: Option<DecayCertificate<T>>,
    pub schedule: ScheduleParams<T>,
    #[serde(default)]
    pub limits: Limits<T>,
    #[serde(default)]
    pub seed: u64,
}

/// Validated problem: `h = Σ v_j |z_j|² + ε_0 W(ωt)`.
#[derive(Clone, Debug)]
pub struct Problem<T: Real> {
    pub config: ProblemConfig<T>,
    pub input: SmoothInput<T>,
    pub schedule: Schedule<T>,
}

impl<T: Real> Problem<T> {
    pub fn new(config: ProblemConfig<T>) -> Result<Self> {
        let (n, d) = (config.n, config.d);
        if d == 0 {
            return Err(KamError::Config("d must be at least 1".into()));
        }
        if config.v.len() != d {
            return Err(KamError::Config(format!(
                "v has {} entries, d = {d}",
                config.v.len()
            )));
        }
        if config.omega.len() != n {
            return Err(KamError::Config(format!(
                "omega has {} entries, n = {n}",
                config.omega.len()
            )));
        }
        if config.v.iter().any(|&x| !x.is_finite() || x <= T::zero()) {
            return Err(KamError::Config("frequencies violate v_j >= v0 > 0".into()));
        }
        let schedule = make_schedule(&config.schedule, n)?;
        let gamma0 = config.schedule.gamma0;
        let mut vs = config.v.clone();
        vs.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        for w in vs.windows(2) {
            if w[1] - w[0] < gamma0 {
                return Err(KamError::Config(format!(
                    "frequency gap {} violates |v_i - v_j| >= gamma0 = {gamma0}",
                    w[1] - w[0]
                )));
            }
        }
        if config.limits.max_steps == 0 {
            return Err(KamError::Config("max_steps must be positive".into()));
        }
        let blocks = RealBlocks::from_record(&config.w, n, d)?;
        let cert = config.decay.unwrap_or_else(|| DecayCertificate {
            ell: config.schedule.ell,
            c_ell: measured_decay_constant(&blocks, config.schedule.ell),
        });
        let input = SmoothInput::new(blocks, cert)?;
        let gthr = T::lit(3f64.powi(-2 * (n as i32 + 3)) / (n as f64 * (d as f64).powi(4)));
        if gamma0 >= gthr {
            log::warn!("gamma0 = {gamma0:e} exceeds the sufficient threshold {gthr:e}");
        }
        if config.schedule.eps0 >= gamma0.powi(8) {
            log::warn!(
                "eps0 = {:e} is not small against gamma0^8 = {:e}",
                config.schedule.eps0,
                gamma0.powi(8)
            );
        }
        Ok(Problem {
            config,
            input,
            schedule,
        })
    }

    pub fn v0(&self) -> T {
        self.config
            .v
            .iter()
            .copied()
            .fold(
                T::max_value().expect("bounded"),
                |a, b| if b < a { b } else { a },
            )
    }

    /// The full time-dependent Hamiltonian as a symbol.
    pub fn hamiltonian(&self) -> Result<QuadraticSymbol<T>> {
        let h0 = NormalForm::diagonal(&self.config.v).to_symbol(self.config.n);
        Ok(h0.add(&self.input.symbol()?.scale_real(self.config.schedule.eps0)))
    }
}

/// Per-step numbers, one CSV row each.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics<T> {
    pub m: usize,
    pub eps: T,
    pub strip: T,
    pub kmax: i64,
    pub gamma: T,
    /// `[q'_m]_{s_m}`
    pub qprime_norm: T,
    /// `ε_m [q'_m]_{s_m}`
    pub scaled_norm: T,
    pub min_margin: T,
    pub homological_residual: T,
    pub remainder_norm: T,
    pub generator_norm: T,
    /// `‖Ñ‖`
    pub normal_form_increment: T,
    pub energy_increment: T,
    pub map_deviation: T,
    pub symplectic_defect: T,
    /// Norm of modes dropped by truncated products.
    pub truncation_defect: T,
    /// `ε_{m+1} [q_{m+1}]_{s_{m+1}}`
    pub next_scaled_norm: T,
    pub support_radius: i64,
}

/// State before step `m`: `h_m + ε_m q'_m` after the change of variables `Φ̃_{m-1}`.
#[derive(Clone, Debug)]
pub struct StepState<T: Real> {
    pub m: usize,
    pub h: NormalForm<T>,
    pub q: QuadraticSymbol<T>,
    pub q_prime: QuadraticSymbol<T>,
    pub phi_tilde: ThetaAffineMap<T>,
    pub diagnostics: Vec<StepDiagnostics<T>>,
}

impl<T: Real> StepState<T> {
    pub fn initial(v: &[T], n: usize, q_prime: QuadraticSymbol<T>) -> Self {
        let d = v.len();
        StepState {
            m: 0,
            h: NormalForm::diagonal(v),
            q: QuadraticSymbol::zero(n, d),
            q_prime,
            phi_tilde: ThetaAffineMap::identity(n, d),
            diagnostics: Vec::new(),
        }
    }
}

/// Options that stay fixed across the steps of a run.
#[derive(Clone, Debug)]
pub struct StepContext<'a, T: Real> {
    pub schedule: &'a Schedule<T>,
    pub omega: &'a [T],
    pub v: &'a [T],
    pub limits: &'a Limits<T>,
}

impl<T: Real> StepContext<'_, T> {
    fn v0(&self) -> T {
        self.v.iter().copied().fold(
            T::max_value().expect("bounded"),
            |a, b| if b < a { b } else { a },
        )
    }

    fn kmax(&self, m: usize) -> i64 {
        let k = self.schedule.kmax(m);
        self.limits.kmax_cap.map_or(k, |c| k.min(c))
    }
}

fn sorted_eigs<T: Real>(h: &NormalForm<T>) -> Result<Vec<T>> {
    Ok(h.eigen()?.values.as_slice().to_vec())
}

/// One step of the iteration. `q0_next` is the next smoothed part
/// `q_{0,m+1}` (budget `ε_{m+1}`), if any.
pub fn kam_step<T: Real>(
    state: StepState<T>,
    q0_next: Option<&QuadraticSymbol<T>>,
    ctx: &StepContext<'_, T>,
) -> Result<StepState<T>> {
    let m = state.m;
    let sched = ctx.schedule;
    if m + 1 >= sched.len() {
        return Err(KamError::Divergence {
            step: m,
            reason: "schedule exhausted".into(),
        });
    }
    let n = state.q_prime.n();
    let d = state.q_prime.d();
    let eps = sched.eps(m);
    let eps_next = sched.eps(m + 1);
    let kmax = ctx.kmax(m);
    let gamma = sched.gamma(m);
    let tau = sched.tau;
    let omega = ctx.omega;

    let eigs = sorted_eigs(&state.h)?;
    let mut v = ctx.v.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let drift = eigs
        .iter()
        .zip(&v)
        .map(|(a, b)| (*a - *b).mag())
        .fold(T::zero(), |a, b| if b > a { b } else { a });
    let v0 = ctx.v0();
    let one = T::one();
    let allowed = (if v0 < one { v0 } else { one }) / T::lit((8 * n).max(2 * d) as f64);
    if drift > allowed {
        return Err(KamError::Divergence {
            step: m,
            reason: format!("eigenvalues drifted by {drift:e}, allowed {allowed:e}"),
        });
    }

    let opts = DivisorOptions {
        v0: Some(v0),
        ..DivisorOptions::default()
    };
    let adm = check_admissible(omega, &eigs, kmax, gamma, tau, &opts)?;
    if !adm.admissible {
        return Err(adm.to_error());
    }

    let qp = &state.q_prime;
    let sol = solve_homological(&state.h, qp, omega, kmax, gamma, tau, eps)?;
    let residual = homological_residual(&state.h, qp, &sol, omega, eps)?;
    let f = &sol.f;
    let grid = ctx.limits.theta_grid;
    let lie_tol = ctx.limits.lie_tol;
    let mut lost = T::zero();

    let (phi, e1, e2) = if f.norm(T::zero()) == T::zero() {
        (
            ThetaAffineMap::identity(n, d),
            QuadraticSymbol::zero(n, d),
            QuadraticSymbol::zero(n, d),
        )
    } else {
        let phi = time_one_map(f, eps, grid)?;
        let hs = state.h.to_symbol(n);
        let (hf, l0) = hs.bracket(f, None)?;
        let hhat = hf.sub(&f.omega_derivative(omega));
        let (g1, l1) = hhat.bracket(f, None)?;
        let (e1, l2) = lie_transform(&g1, f, eps, LieWeight::OneMinusKappa, lie_tol, None)?;
        let (g2, l3) = qp.bracket(f, None)?;
        let (e2, l4) = lie_transform(&g2, f, eps, LieWeight::Uniform, lie_tol, None)?;
        lost += l0 + l1 + l2 + l3 + l4;
        let e2s = eps * eps;
        (phi, e1.scale_real(e2s), e2.scale_real(e2s))
    };

    let next_scaled = sol
        .remainder
        .add(&e1)
        .add(&e2)
        .project(SymbolClass::Re)
        .pruned();
    let q_next = next_scaled.scale_real(one / eps_next);
    let (phi_tilde, l5) = compose(&state.phi_tilde, &phi, None)?;
    lost += l5;
    let mut q_prime_next = q_next.clone();
    if let Some(q0) = q0_next {
        if q0.norm(T::zero()) > T::zero() {
            let (pb, l6) = pullback(q0, &phi_tilde, None)?;
            lost += l6;
            q_prime_next = q_prime_next.add(&pb).project(SymbolClass::Re).pruned();
        }
    }
    let h_next = NormalForm {
        e: state.h.e + sol.e_tilde,
        n: &state.h.n + &sol.n_tilde,
    };

    let s_m = sched.s(m);
    let qn = qp.norm(s_m);
    let diag = StepDiagnostics {
        m,
        eps,
        strip: s_m,
        kmax,
        gamma,
        qprime_norm: qn,
        scaled_norm: eps * qn,
        min_margin: adm.min_margin,
        homological_residual: residual,
        remainder_norm: sol.remainder.norm(T::zero()),
        generator_norm: f.norm(T::zero()),
        normal_form_increment: crate::scalar::coeff_norm(&sol.n_tilde),
        energy_increment: sol.e_tilde,
        map_deviation: phi.deviation_from_identity(),
        symplectic_defect: phi.symplectic_defect(),
        truncation_defect: lost,
        next_scaled_norm: next_scaled.norm(sched.s(m + 1)),
        support_radius: qp.support_radius(),
    };
    log::info!(
        "step {m}: eps*[q'] = {:.3e}, margin {:.3e}, |N~| = {:.3e}",
        diag.scaled_norm,
        diag.min_margin,
        diag.normal_form_increment
    );
    let mut diagnostics = state.diagnostics;
    diagnostics.push(diag);
    Ok(StepState {
        m: m + 1,
        h: h_next,
        q: q_next,
        q_prime: q_prime_next,
        phi_tilde,
        diagnostics,
    })
}

/// Dense complex matrix in JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixRecord<T> {
    pub rows: usize,
    pub cols: usize,
    /// Row-major.
    pub re: Vec<T>,
    pub im: Vec<T>,
}

impl<T: Real> MatrixRecord<T> {
    pub fn from_matrix(m: &CMat<T>) -> Self {
        let (rows, cols) = m.shape();
        let mut re = Vec::with_capacity(rows * cols);
        let mut im = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                re.push(m[(i, j)].re);
                im.push(m[(i, j)].im);
            }
        }
        MatrixRecord { rows, cols, re, im }
    }

    pub fn to_matrix(&self) -> Result<CMat<T>> {
        let len = self.rows * self.cols;
        if self.re.len() != len || self.im.len() != len {
            return Err(KamError::Dimension("matrix record length".into()));
        }
        Ok(CMat::from_fn(self.rows, self.cols, |i, j| {
            C::new(self.re[i * self.cols + j], self.im[i * self.cols + j])
        }))
    }
}

/// A measured quantity against its bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck<T> {
    pub value: T,
    pub bound: T,
    pub holds: bool,
}

impl<T: Real> BoundCheck<T> {
    pub fn new(value: T, bound: T) -> Self {
        BoundCheck {
            value,
            bound,
            holds: value <= bound,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundChecks<T> {
    /// `|e∞| ≤ ε^{1/2}`
    pub energy: BoundCheck<T>,
    /// `max_j |v∞_j - v_j| ≤ ε^{1/2}`
    pub frequencies: BoundCheck<T>,
    /// `sup_θ ‖Φ - id‖ ≤ ε_0^{1/4}`
    pub map: BoundCheck<T>,
}

impl<T: Real> BoundChecks<T> {
    pub fn all_hold(&self) -> bool {
        self.energy.holds && self.frequencies.holds && self.map.holds
    }

    pub fn evaluate(eps0: T, e_inf: T, v: &[T], v_inf: &[T], map_dev: T) -> Self {
        let mut a = v.to_vec();
        a.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
        let dv = a
            .iter()
            .zip(v_inf)
            .map(|(x, y)| (*x - *y).mag())
            .fold(T::zero(), |p, q| if q > p { q } else { p });
        let half = eps0.sqrt();
        BoundChecks {
            energy: BoundCheck::new(e_inf.mag(), half),
            frequencies: BoundCheck::new(dv, half),
            map: BoundCheck::new(map_dev, eps0.powf(T::lit(0.25))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub step: usize,
    pub kind: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_k: Option<Vec<i32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
}

impl Failure {
    fn from_error(step: usize, e: &KamError) -> Self {
        let (kind, worst_k, family, margin) = match e {
            KamError::SmallDivisor {
                k, family, value, ..
            } => (
                "small_divisor",
                Some(k.clone()),
                Some(family.clone()),
                Some(*value),
            ),
            KamError::NotAdmissible { k, family, margin } => (
                "not_admissible",
                Some(k.clone()),
                Some(family.clone()),
                Some(*margin),
            ),
            KamError::Divergence { .. } => ("divergence", None, None, None),
            KamError::NoConvergence(_) => ("no_convergence", None, None, None),
            KamError::Aliasing(_) => ("aliasing", None, None, None),
            _ => ("numerical", None, None, None),
        };
        Failure {
            step,
            kind: kind.into(),
            message: e.to_string(),
            worst_k,
            family,
            margin,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct RunReport<T: Real> {
    pub schema: String,
    pub converged: bool,
    pub stop_reason: String,
    pub steps: usize,
    pub n: usize,
    pub d: usize,
    pub eps0: T,
    pub omega: Vec<T>,
    pub v: Vec<T>,
    pub e_inf: T,
    pub n_inf: MatrixRecord<T>,
    /// Eigenvalues of `N∞`, ascending.
    pub v_inf: Vec<T>,
    /// `ε_m [q'_m]_{s_m}` for every step reached.
    pub history: Vec<T>,
    pub diagnostics: Vec<StepDiagnostics<T>>,
    pub bounds: BoundChecks<T>,
    /// `sup_θ ‖Φ - id‖` of the accumulated change of variables.
    pub map_deviation: T,
    /// The accumulated change of variables, complex coordinates.
    pub phi: MapRecord<T>,
    /// Generator `Φ = exp([[A∞, V∞], [0, 0]])` when the logarithm converges.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_inf: Option<SeriesRecord<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_gen_inf: Option<SeriesRecord<T>>,
    /// Size of the input left out of the decomposition.
    pub decomposition_residual: T,
    /// Largest scaled part `[q_{0,m}]_{σ_m}`.
    pub max_part_norm: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<Failure>,
    pub seed: u64,
}

impl<T: Real> RunReport<T> {
    pub fn normal_form(&self) -> Result<NormalForm<T>> {
        Ok(NormalForm {
            e: self.e_inf,
            n: self.n_inf.to_matrix()?,
        })
    }

    pub fn map(&self) -> Result<ThetaAffineMap<T>> {
        ThetaAffineMap::from_record(&self.phi)
    }

    /// Per-step CSV rows (header first).
    pub fn diagnostics_csv_rows(&self) -> Vec<Vec<String>> {
        let mut rows = vec![[
            "m",
            "eps",
            "strip",
            "kmax",
            "gamma",
            "qprime_norm",
            "scaled_norm",
            "min_margin",
            "homological_residual",
            "remainder_norm",
            "generator_norm",
            "normal_form_increment",
            "energy_increment",
            "map_deviation",
            "symplectic_defect",
            "truncation_defect",
            "next_scaled_norm",
            "support_radius",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect()];
        for d in &self.diagnostics {
            let e = |x: T| format!("{x:e}");
            rows.push(vec![
                d.m.to_string(),
                e(d.eps),
                e(d.strip),
                d.kmax.to_string(),
                e(d.gamma),
                e(d.qprime_norm),
                e(d.scaled_norm),
                e(d.min_margin),
                e(d.homological_residual),
                e(d.remainder_norm),
                e(d.generator_norm),
                e(d.normal_form_increment),
                e(d.energy_increment),
                e(d.map_deviation),
                e(d.symplectic_defect),
                e(d.truncation_defect),
                e(d.next_scaled_norm),
                d.support_radius.to_string(),
            ]);
        }
        rows
    }
}

/// Runs the reduction until `ε_m [q'_m]` drops below `stop_tol` with no
/// unprocessed input left, a step fails, or `max_steps` is reached.
/// Step failures produce a partial report; only invalid input is an error.
pub fn run<T: Real>(problem: &Problem<T>) -> Result<RunReport<T>> {
    let cfg = &problem.config;
    let (n, d) = (cfg.n, cfg.d);
    let sched = &problem.schedule;
    let limits = &cfg.limits;
    let q0 = problem.input.symbol()?.scale_real(cfg.schedule.eps0);
    let parts = (limits.max_steps + 1).min(sched.len());
    let dec = decompose(&q0, sched, parts)?;
    // norm of the parts not yet fed in after step m
    let pending: Vec<T> = (0..parts)
        .map(|m| {
            dec.parts[m + 1..]
                .iter()
                .fold(T::zero(), |a, p| a + p.eps * p.symbol.norm(T::zero()))
        })
        .collect();
    let ctx = StepContext {
        schedule: sched,
        omega: &cfg.omega,
        v: &cfg.v,
        limits,
    };

    let mut state = StepState::initial(&cfg.v, n, dec.parts[0].symbol.clone());
    let mut history = Vec::new();
    let mut failure = None;
    let mut converged = false;
    let stop_reason;
    loop {
        let m = state.m;
        let scaled = sched.eps(m) * state.q_prime.norm(sched.s(m));
        history.push(scaled);
        if !scaled.is_finite() {
            let e = KamError::Divergence {
                step: m,
                reason: "non-finite perturbation norm".into(),
            };
            failure = Some(Failure::from_error(m, &e));
            stop_reason = "divergence".to_string();
            break;
        }
        if scaled < limits.stop_tol && pending.get(m).is_none_or(|&p| p < limits.stop_tol) {
            converged = true;
            stop_reason = "tolerance".to_string();
            break;
        }
        if m >= 3 {
            let h = &history[m - 3..=m];
            if h.windows(2).all(|w| w[1] > w[0]) && h[3] > limits.divergence_factor * h[0] {
                let e = KamError::Divergence {
                    step: m,
                    reason: format!("perturbation grew by {:e} over three steps", h[3] / h[0]),
                };
                failure = Some(Failure::from_error(m, &e));
                stop_reason = "divergence".to_string();
                break;
            }
        }
        if m >= limits.max_steps {
            stop_reason = "max_steps".to_string();
            break;
        }
        let next = dec.parts.get(m + 1).map(|p| &p.symbol);
        match kam_step(state.clone(), next, &ctx) {
            Ok(s) => state = s,
            Err(e) => {
                log::warn!("step {m} failed: {e}");
                failure = Some(Failure::from_error(m, &e));
                stop_reason = "step_failure".to_string();
                break;
            }
        }
    }

    let v_inf = sorted_eigs(&state.h)?;
    let map_dev = state.phi_tilde.deviation_from_identity();
    let bounds = BoundChecks::evaluate(cfg.schedule.eps0, state.h.e, &cfg.v, &v_inf, map_dev);
    if converged && !bounds.all_hold() {
        log::warn!("converged run violates a bound check: {bounds:?}");
    }
    let (a_inf, v_gen_inf) = match limit_log(&state.phi_tilde, limits.theta_grid) {
        Ok((a, v)) => (Some(a.to_record()), Some(v.to_record())),
        Err(e) => {
            log::warn!("no logarithm of the limit map: {e}");
            (None, None)
        }
    };
    Ok(RunReport {
        schema: SCHEMA_VERSION.into(),
        converged,
        stop_reason,
        steps: state.m,
        n,
        d,
        eps0: cfg.schedule.eps0,
        omega: cfg.omega.clone(),
        v: cfg.v.clone(),
        e_inf: state.h.e,
        n_inf: MatrixRecord::from_matrix(&state.h.n),
        v_inf,
        history,
        diagnostics: state.diagnostics,
        bounds,
        map_deviation: map_dev,
        phi: state.phi_tilde.to_record(),
        a_inf,
        v_gen_inf,
        decomposition_residual: dec.residual_norm,
        max_part_norm: dec.max_scaled_norm(),
        failure,
        seed: cfg.seed,
    })
}
