//! Small-divisor conditions on the frequency vector `ω`.
//!
//! The divisors are `⟨k,ω⟩ - c` for constants `c` built from the
//! eigenvalues `μ` of the current normal form. A divisor is acceptable when
//! `|⟨k,ω⟩ - c| ≥ γ / (1 + |k|_1^τ)`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{KamError, Result};
use crate::scalar::Real;
use crate::series::MultiIndex;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivisorFamily {
    /// `⟨k,ω⟩ - μ_i + μ_j`, checked for `|k|_1 ≤ 2K`.
    Diff,
    /// `⟨k,ω⟩ ± μ_i ± μ_j ± μ_i' ± μ_j'`, checked for `0 < |k|_1 ≤ 2K`.
    QuadCombo,
    /// `⟨k,ω⟩ ∓ μ_i`, checked for `|k|_1 ≤ K`.
    Single,
    /// `⟨k,ω⟩ ∓ (μ_i + μ_j)`, checked for `|k|_1 ≤ K`.
    Sum,
}

impl std::fmt::Display for DivisorFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            DivisorFamily::Diff => "diff",
            DivisorFamily::QuadCombo => "quad_combo",
            DivisorFamily::Single => "single",
            DivisorFamily::Sum => "sum",
        };
        f.write_str(s)
    }
}

/// Which families to enforce and the `k = 0` reference frequency.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DivisorOptions<T> {
    pub quad_combo: bool,
    pub single_and_sum: bool,
    /// Lower bound `v0` on the unperturbed frequencies. At `k = 0` the
    /// single family must stay above `v0/2` and the sum family above `v0`.
    /// Defaults to the smallest `|μ_i|` when absent.
    pub v0: Option<T>,
}

impl<T> Default for DivisorOptions<T> {
    fn default() -> Self {
        DivisorOptions {
            quad_combo: true,
            single_and_sum: true,
            v0: None,
        }
    }
}

impl<T> DivisorOptions<T> {
    /// Only the difference family, as needed for the summation bound.
    pub fn diff_only() -> Self {
        DivisorOptions {
            quad_combo: false,
            single_and_sum: false,
            v0: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiophantineReport<T> {
    pub admissible: bool,
    /// `min |divisor| (1 + |k|^τ) / γ` over the checked range; exact
    /// whenever it is below `max_j |ω_j| / γ`.
    pub min_margin: T,
    pub worst_k: Vec<i32>,
    pub worst_family: DivisorFamily,
    pub worst_divisor: T,
    pub checked: usize,
}

impl<T: Real> DiophantineReport<T> {
    pub fn to_error(&self) -> KamError {
        KamError::NotAdmissible {
            k: self.worst_k.clone(),
            family: self.worst_family.to_string(),
            margin: self.min_margin.to_f64_lossy(),
        }
    }
}

/// Admissible threshold `γ / (1 + |k|_1^τ)`.
pub fn divisor_threshold<T: Real>(k: &MultiIndex, gamma: T, tau: T) -> T {
    gamma / (T::one() + T::lit(k.l1() as f64).powf(tau))
}

fn family_constants<T: Real>(eigs: &[T], fam: DivisorFamily) -> Vec<T> {
    let d = eigs.len();
    let mut cs = Vec::new();
    match fam {
        DivisorFamily::Diff => {
            for i in 0..d {
                for j in 0..d {
                    cs.push(eigs[i] - eigs[j]);
                }
            }
        }
        DivisorFamily::QuadCombo => {
            let signed: Vec<T> = eigs.iter().flat_map(|&m| [m, -m]).collect();
            for &a in &signed {
                for &b in &signed {
                    for &c in &signed {
                        for &e in &signed {
                            cs.push(a + b + c + e);
                        }
                    }
                }
            }
        }
        DivisorFamily::Single => {
            for &m in eigs {
                cs.push(m);
                cs.push(-m);
            }
        }
        DivisorFamily::Sum => {
            for i in 0..d {
                for j in 0..d {
                    cs.push(eigs[i] + eigs[j]);
                    cs.push(-(eigs[i] + eigs[j]));
                }
            }
        }
    }
    dedup_sorted(cs)
}

fn dedup_sorted<T: Real>(mut cs: Vec<T>) -> Vec<T> {
    cs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mut out: Vec<T> = Vec::with_capacity(cs.len());
    for c in cs {
        match out.last() {
            Some(&l) if (c - l).mag() <= T::lit(4.0) * T::eps() * (T::one() + c.mag()) => {}
            _ => out.push(c),
        }
    }
    out
}

/// Visits every `k ≠ 0` with `|k|_1 ≤ radius` whose divisor
/// `⟨k,ω⟩ - c` lies within `window` of zero.
fn scan_near<T: Real, F: FnMut(&MultiIndex, T)>(
    omega: &[T],
    radius: i64,
    c: T,
    window: T,
    visit: &mut F,
) {
    let n = omega.len();
    let axis = (0..n)
        .max_by(|&a, &b| {
            omega[a]
                .mag()
                .partial_cmp(&omega[b].mag())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .unwrap_or(0);
    let wa = omega[axis];
    let others: Vec<T> = (0..n).filter(|&j| j != axis).map(|j| omega[j]).collect();
    let reach = window / wa.mag();
    for row in MultiIndex::ball(n - 1, radius) {
        let used = row.l1();
        let base = row.dot(&others);
        let center = (c - base) / wa;
        let budget = (radius - used) as f64;
        let lo = (center - reach).ceil().to_f64_lossy().max(-budget);
        let hi = (center + reach).floor().to_f64_lossy().min(budget);
        if lo > hi {
            continue;
        }
        for ka in (lo as i64)..=(hi as i64) {
            let mut k = Vec::with_capacity(n);
            let mut it = row.as_slice().iter();
            for j in 0..n {
                if j == axis {
                    k.push(ka as i32);
                } else {
                    k.push(*it.next().expect("row has n - 1 entries"));
                }
            }
            let k = MultiIndex::new(k);
            if k.is_zero() {
                continue;
            }
            let lam = base + T::lit(ka as f64) * wa - c;
            visit(&k, lam);
        }
    }
}

/// Checks every enforced divisor family for the given `K`.
pub fn check_admissible<T: Real>(
    omega: &[T],
    eigs: &[T],
    kmax: i64,
    gamma: T,
    tau: T,
    opts: &DivisorOptions<T>,
) -> Result<DiophantineReport<T>> {
    if omega.is_empty() {
        return Err(KamError::Config("empty frequency vector".into()));
    }
    if omega.iter().all(|w| *w == T::zero()) {
        return Err(KamError::Config("frequency vector is zero".into()));
    }
    if gamma < T::zero() || kmax < 0 {
        return Err(KamError::Config("γ and K must be non-negative".into()));
    }
    let wmax = omega
        .iter()
        .fold(T::zero(), |a, w| if w.mag() > a { w.mag() } else { a });
    let v0 = opts.v0.unwrap_or_else(|| {
        eigs.iter()
            .fold(T::max_value().unwrap_or(T::one()), |a, m| {
                if m.mag() < a {
                    m.mag()
                } else {
                    a
                }
            })
    });

    let mut rep = DiophantineReport {
        admissible: true,
        min_margin: T::max_value().unwrap_or(T::one()),
        worst_k: vec![0; omega.len()],
        worst_family: DivisorFamily::Diff,
        worst_divisor: T::zero(),
        checked: 0,
    };
    let record = |rep: &mut DiophantineReport<T>, k: &MultiIndex, fam, lam: T, thr: T| {
        rep.checked += 1;
        let margin = if thr > T::zero() {
            lam.mag() / thr
        } else if lam == T::zero() {
            T::zero()
        } else {
            T::max_value().unwrap_or(T::one())
        };
        if margin < rep.min_margin {
            rep.min_margin = margin;
            rep.worst_k = k.to_vec();
            rep.worst_family = fam;
            rep.worst_divisor = lam;
        }
        if margin < T::one() {
            rep.admissible = false;
        }
    };

    let zero = MultiIndex::zero(omega.len());
    // k = 0 conditions
    for (i, &a) in eigs.iter().enumerate() {
        for (j, &b) in eigs.iter().enumerate() {
            if i != j {
                record(&mut rep, &zero, DivisorFamily::Diff, a - b, gamma);
            }
        }
    }
    if opts.single_and_sum {
        for &c in &family_constants(eigs, DivisorFamily::Single) {
            record(&mut rep, &zero, DivisorFamily::Single, c, v0 * T::lit(0.5));
        }
        for &c in &family_constants(eigs, DivisorFamily::Sum) {
            record(&mut rep, &zero, DivisorFamily::Sum, c, v0);
        }
    }

    let mut fams = vec![(DivisorFamily::Diff, 2 * kmax)];
    if opts.quad_combo {
        fams.push((DivisorFamily::QuadCombo, 2 * kmax));
    }
    if opts.single_and_sum {
        fams.push((DivisorFamily::Single, kmax));
        fams.push((DivisorFamily::Sum, kmax));
    }
    let window = {
        let top = gamma * (T::one() + T::lit(2.0 * kmax as f64).powf(tau));
        if top > wmax {
            top
        } else {
            wmax
        }
    };
    for (fam, radius) in fams {
        for c in family_constants(eigs, fam) {
            scan_near(omega, radius, c, window, &mut |k, lam| {
                let thr = divisor_threshold(k, gamma, tau);
                record(&mut rep, k, fam, lam, thr);
            });
        }
    }
    Ok(rep)
}

/// `D_k = min_{i,j} |⟨k,ω⟩ - μ_i + μ_j|`.
pub fn diff_divisor<T: Real>(omega: &[T], eigs: &[T], k: &MultiIndex) -> T {
    let kw = k.dot(omega);
    let mut best = T::max_value().unwrap_or(T::one());
    for &a in eigs {
        for &b in eigs {
            let v = (kw - a + b).mag();
            if v < best {
                best = v;
            }
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RussmannReport<T> {
    pub sum: T,
    pub bound: T,
    pub holds: bool,
}

/// Compares `Σ_{0<|k|≤m} D_k^{-2}` with `2^{2n+3} m^{2τ} / γ²`.
///
/// Fails with [`KamError::NotAdmissible`] unless the difference family is
/// admissible up to `|k| ≤ 2m`.
pub fn russmann_sum_check<T: Real>(
    omega: &[T],
    eigs: &[T],
    m: i64,
    gamma: T,
    tau: T,
) -> Result<RussmannReport<T>> {
    if m < 1 {
        return Err(KamError::Config(
            "summation range must be at least 1".into(),
        ));
    }
    let rep = check_admissible(omega, eigs, m, gamma, tau, &DivisorOptions::diff_only())?;
    if !rep.admissible {
        return Err(rep.to_error());
    }
    let n = omega.len();
    let mut sum = T::zero();
    for k in MultiIndex::ball(n, m) {
        if k.is_zero() {
            continue;
        }
        let dk = diff_divisor(omega, eigs, &k);
        sum += T::one() / (dk * dk);
    }
    let bound = T::lit(2f64.powi(2 * n as i32 + 3)) * T::lit(m as f64).powf(T::lit(2.0) * tau)
        / (gamma * gamma);
    Ok(RussmannReport {
        sum,
        bound,
        holds: sum <= bound,
    })
}

/// `∫_0^∞ e^{-s} c (s/δ)^p ds = c Γ(p+1) / δ^p`.
pub fn phist_tail_bound<T: Real>(c: T, p: T, delta: T) -> Result<T> {
    if delta <= T::zero() || p <= -T::one() {
        return Err(KamError::Config("need δ > 0 and p > -1".into()));
    }
    let g = statrs::function::gamma::gamma(p.to_f64_lossy() + 1.0);
    Ok(c * T::lit(g) / delta.powf(p))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    /// Fraction of sampled `ω ∈ (0, 2π)^n` that fail the check.
    pub fraction: f64,
    /// Half-width of the 95% normal confidence interval of `fraction`.
    pub ci95: f64,
    /// `fraction · (2π)^n`.
    pub measure: f64,
    pub samples: usize,
}

const CHUNK: usize = 4096;

/// Monte Carlo estimate of the excised set of frequency vectors.
///
/// Sample `i` is drawn from stream `i / 4096` of a ChaCha8 generator
/// seeded with `seed`, so the result does not depend on the thread count.
#[allow(clippy::too_many_arguments)]
pub fn measure_excised<T: Real>(
    n: usize,
    eigs: &[T],
    kmax: i64,
    gamma: T,
    tau: T,
    samples: usize,
    seed: u64,
    opts: &DivisorOptions<T>,
) -> Result<MeasureReport> {
    if n == 0 || samples == 0 {
        return Err(KamError::Config(
            "need n ≥ 1 and at least one sample".into(),
        ));
    }
    let chunks = samples.div_ceil(CHUNK);
    let bad: Result<Vec<usize>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let len = CHUNK.min(samples - c * CHUNK);
            let mut count = 0;
            for _ in 0..len {
                let omega: Vec<T> = (0..n)
                    .map(|_| T::lit(rng.random_range(0.0..std::f64::consts::TAU)))
                    .collect();
                if !check_admissible(&omega, eigs, kmax, gamma, tau, opts)?.admissible {
                    count += 1;
                }
            }
            Ok(count)
        })
        .collect();
    let bad: usize = bad?.into_iter().sum();
    let p = bad as f64 / samples as f64;
    let ci95 = 1.96 * (p * (1.0 - p) / samples as f64).sqrt();
    Ok(MeasureReport {
        fraction: p,
        ci95,
        measure: p * std::f64::consts::TAU.powi(n as i32),
        samples,
    })
}

/// Exact excised fraction of `(0, 2π)` for a single frequency, computed
/// as a union of resonance intervals.
pub fn excised_fraction_1d<T: Real>(
    eigs: &[T],
    kmax: i64,
    gamma: T,
    tau: T,
    opts: &DivisorOptions<T>,
) -> f64 {
    let tau_f = tau.to_f64_lossy();
    let g = gamma.to_f64_lossy();
    let mu: Vec<f64> = eigs.iter().map(|m| m.to_f64_lossy()).collect();
    let v0 = opts
        .v0
        .map(|v| v.to_f64_lossy())
        .unwrap_or_else(|| mu.iter().fold(f64::INFINITY, |a, m| a.min(m.abs())));

    // k = 0 conditions do not depend on ω
    for i in 0..mu.len() {
        for j in 0..mu.len() {
            if i != j && (mu[i] - mu[j]).abs() < g {
                return 1.0;
            }
            if opts.single_and_sum && (mu[i] + mu[j]).abs() < v0 {
                return 1.0;
            }
        }
        if opts.single_and_sum && mu[i].abs() < 0.5 * v0 {
            return 1.0;
        }
    }

    let mut fams = vec![(DivisorFamily::Diff, 2 * kmax)];
    if opts.quad_combo {
        fams.push((DivisorFamily::QuadCombo, 2 * kmax));
    }
    if opts.single_and_sum {
        fams.push((DivisorFamily::Single, kmax));
        fams.push((DivisorFamily::Sum, kmax));
    }
    let mut iv: Vec<(f64, f64)> = Vec::new();
    for (fam, radius) in fams {
        let cs: Vec<f64> = family_constants(eigs, fam)
            .into_iter()
            .map(|c| c.to_f64_lossy())
            .collect();
        for k in 1..=radius {
            let kf = k as f64;
            let half = g / (1.0 + kf.powf(tau_f)) / kf;
            for &c in &cs {
                // k and -k give mirrored constants; both are in the set
                for s in [1.0, -1.0] {
                    let centre = s * c / kf;
                    let lo = (centre - half).max(0.0);
                    let hi = (centre + half).min(std::f64::consts::TAU);
                    if lo < hi {
                        iv.push((lo, hi));
                    }
                }
            }
        }
    }
    iv.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut total = 0.0;
    let mut cur: Option<(f64, f64)> = None;
    for (a, b) in iv {
        match cur {
            Some((ca, cb)) if a <= cb => cur = Some((ca, cb.max(b))),
            Some((ca, cb)) => {
                total += cb - ca;
                cur = Some((a, b));
            }
            None => cur = Some((a, b)),
        }
    }
    if let Some((a, b)) = cur {
        total += b - a;
    }
    total / std::f64::consts::TAU
}
