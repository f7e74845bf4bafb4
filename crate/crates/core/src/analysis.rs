//! Channel-level model of the correction loop: jump statistics modulo four,
//! wait/correct Kraus maps on code-word weights, the product-formula fidelity,
//! effective decay rate and optimal waiting time, plus lifetime fits and
//! Husimi-Q grids.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{CMatrix, C64};
use crate::states::coherent_state_unchecked;

/// Truncation threshold for the Poisson series tail.
const TAIL_BOUND: f64 = 1e-15;

/// Probabilities of `k mod 4` jumps in one waiting interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpStats {
    /// `ε_jump = κ T_w n̄`.
    pub epsilon_jump: f64,
    pub p: [f64; 4],
}

/// Low-order expansions of the jump probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpApproximants {
    /// `1 − ε + ε²/2`
    pub p0: f64,
    /// `ε − ε²`
    pub p1: f64,
    /// `ε²/2`, two or more jumps.
    pub p23: f64,
}

impl JumpStats {
    pub fn approximants(&self) -> JumpApproximants {
        let e = self.epsilon_jump;
        JumpApproximants {
            p0: 1.0 - e + e * e / 2.0,
            p1: e - e * e,
            p23: e * e / 2.0,
        }
    }
}

/// `p_k = Σ_{m ≡ k mod 4} e^{−ε} ε^m / m!`, summed until the remainder bound
/// `ε^M/M! · e^ε` drops below `1e−15`.
pub fn poisson_mod4(epsilon: f64) -> JumpStats {
    let mut p = [0.0; 4];
    if epsilon <= 0.0 {
        p[0] = 1.0;
        return JumpStats {
            epsilon_jump: 0.0,
            p,
        };
    }
    let grow = epsilon.exp();
    // ε^m/m!
    let mut pow = 1.0;
    let mut m = 0usize;
    loop {
        p[m % 4] += pow / grow;
        m += 1;
        pow *= epsilon / m as f64;
        if m > epsilon as usize && pow * grow < TAIL_BOUND {
            break;
        }
    }
    JumpStats {
        epsilon_jump: epsilon,
        p,
    }
}

/// Mixture weights over the code words `ψ^(0..3)` with the amplitude tag of
/// the underlying coherent components. `lost` collects weight the model
/// treats as a logical failure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodeWeights {
    pub weights: [f64; 4],
    pub alpha: C64,
    pub lost: f64,
}

impl CodeWeights {
    pub fn pure(alpha: C64) -> Self {
        Self {
            weights: [1.0, 0.0, 0.0, 0.0],
            alpha,
            lost: 0.0,
        }
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum::<f64>() + self.lost
    }

    /// Relabels `ψ^(n) → ψ^(n+shift mod 4)`.
    pub fn rotated(&self, shift: usize) -> Self {
        let mut w = [0.0; 4];
        for (n, x) in self.weights.iter().enumerate() {
            w[(n + shift) % 4] = *x;
        }
        Self { weights: w, ..*self }
    }
}

/// Waiting channel: the weights are convolved modulo 4 with
/// `poisson_mod4(ε)` and `α → α e^{−κT_w/2}`, with `κT_w = ε/|α|²`.
pub fn kraus_wait(state: &CodeWeights, epsilon: f64) -> CodeWeights {
    let stats = poisson_mod4(epsilon);
    let mut w = [0.0; 4];
    for (n, x) in state.weights.iter().enumerate() {
        for (k, pk) in stats.p.iter().enumerate() {
            w[(n + k) % 4] += x * pk;
        }
    }
    let nbar = state.alpha.norm_sqr();
    let alpha = if nbar > 0.0 {
        state.alpha * (-epsilon / (2.0 * nbar)).exp()
    } else {
        state.alpha
    };
    CodeWeights {
        weights: w,
        alpha,
        lost: state.lost,
    }
}

/// Correction channel: `ψ^(0)` and `ψ^(1)` return to `ψ^(0)` at amplitude
/// `alpha` with probability `1 − ε_correct`; everything else is lost.
pub fn kraus_correct(state: &CodeWeights, epsilon_correct: f64, alpha: C64) -> CodeWeights {
    let good = state.weights[0] + state.weights[1];
    let kept = good * (1.0 - epsilon_correct);
    CodeWeights {
        weights: [kept, 0.0, 0.0, 0.0],
        alpha,
        lost: state.total() - kept,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectionBudget {
    pub epsilon_correct: f64,
    /// `ε_jump²/2`.
    pub epsilon_wait: f64,
    /// μs.
    pub t_c: f64,
    /// μs.
    pub t_w: f64,
}

impl CorrectionBudget {
    pub fn new(epsilon_correct: f64, epsilon_jump: f64, t_c: f64, t_w: f64) -> Result<Self> {
        let b = Self {
            epsilon_correct,
            epsilon_wait: epsilon_jump * epsilon_jump / 2.0,
            t_c,
            t_w,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn from_rates(epsilon_correct: f64, kappa: f64, nbar: f64, t_c: f64, t_w: f64) -> Result<Self> {
        Self::new(epsilon_correct, kappa * t_w * nbar, t_c, t_w)
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !unit(self.epsilon_correct) || !unit(self.epsilon_wait) {
            return Err(Error::InvalidArgument(format!(
                "error budget outside [0, 1]: correct {}, wait {}",
                self.epsilon_correct, self.epsilon_wait
            )));
        }
        if !(self.t_c >= 0.0 && self.t_w >= 0.0 && self.t_c.is_finite() && self.t_w.is_finite()) {
            return Err(Error::InvalidArgument("durations must be finite and non-negative".into()));
        }
        Ok(())
    }

    pub fn epsilon_jump(&self) -> f64 {
        (2.0 * self.epsilon_wait).sqrt()
    }
}

/// `F(t_N) ≈ ((1 − ε_correct)(1 − ε_wait))^N` and `t_N = N(T_c + T_w)`.
pub fn predicted_fidelity(n: usize, budget: &CorrectionBudget) -> (f64, f64) {
    let per_cycle = (1.0 - budget.epsilon_correct) * (1.0 - budget.epsilon_wait);
    (per_cycle.powi(n as i32), n as f64 * (budget.t_c + budget.t_w))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveDecay {
    /// At the budget's `T_w`, 1/μs.
    pub kappa_eff: f64,
    /// μs.
    pub optimal_tw: f64,
    /// `κ n̄ √(2 ε_correct)`.
    pub kappa_eff_at_optimum: f64,
}

/// `κ_eff(T_w) ≈ (ε_correct + (κ T_w n̄)²/2) / T_w`.
pub fn kappa_eff(epsilon_correct: f64, kappa: f64, nbar: f64, t_w: f64) -> f64 {
    let e = kappa * t_w * nbar;
    (epsilon_correct + e * e / 2.0) / t_w
}

pub fn effective_decay(budget: &CorrectionBudget, kappa: f64, nbar: f64) -> EffectiveDecay {
    let ec = budget.epsilon_correct;
    EffectiveDecay {
        kappa_eff: kappa_eff(ec, kappa, nbar, budget.t_w),
        optimal_tw: (2.0 * ec).sqrt() / (kappa * nbar),
        kappa_eff_at_optimum: kappa * nbar * (2.0 * ec).sqrt(),
    }
}

/// Golden-section minimization of a unimodal function on `[a, b]`.
pub fn golden_section_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, rel_tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > rel_tol * (a.abs() + b.abs()) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

/// Result of fitting `F(t) = A e^{−t/T_eff}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifetimeFit {
    /// μs; `f64::INFINITY` when no decay is resolved.
    pub t_eff: f64,
    pub amplitude: f64,
    /// RMS deviation of the fidelities from the model.
    pub residual: f64,
    pub n_points: usize,
}

impl LifetimeFit {
    pub fn decay_rate(&self) -> f64 {
        1.0 / self.t_eff
    }
}

const MAX_FIT_RESIDUAL: f64 = 0.05;

fn rms_residual(series: &[(f64, f64)], a: f64, k: f64) -> f64 {
    let ss: f64 = series.iter().map(|&(t, f)| (f - a * (-k * t).exp()).powi(2)).sum();
    (ss / series.len() as f64).sqrt()
}

/// Least-squares fit of `A e^{−t/T_eff}`: log-linear start, then
/// Gauss–Newton on the fidelities themselves.
pub fn fit_lifetime(series: &[(f64, f64)]) -> Result<LifetimeFit> {
    if series.len() < 5 {
        return Err(Error::InvalidArgument(format!(
            "lifetime fit needs at least 5 points, got {}",
            series.len()
        )));
    }
    if series
        .iter()
        .any(|&(t, f)| !t.is_finite() || !(f > 0.0 && f <= 1.0 + 1e-12))
    {
        return Err(Error::InvalidArgument("fidelities must lie in (0, 1]".into()));
    }
    let n = series.len() as f64;
    let (st, sy) = series
        .iter()
        .fold((0.0, 0.0), |(a, b), &(t, f)| (a + t, b + f.ln()));
    let (mt, my) = (st / n, sy / n);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(t, f) in series {
        sxy += (t - mt) * (f.ln() - my);
        sxx += (t - mt) * (t - mt);
    }
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("fit needs distinct times".into()));
    }
    let mut k = (-sxy / sxx).max(0.0);
    let mut a = (my + k * mt).exp();
    if k > 0.0 {
        for _ in 0..100 {
            // J^T J and J^T r for parameters (a, k)
            let (mut jaa, mut jak, mut jkk, mut ga, mut gk) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for &(t, f) in series {
                let e = (-k * t).exp();
                let r = f - a * e;
                let (da, dk) = (e, -a * t * e);
                jaa += da * da;
                jak += da * dk;
                jkk += dk * dk;
                ga += da * r;
                gk += dk * r;
            }
            let det = jaa * jkk - jak * jak;
            if det.abs() < 1e-300 {
                break;
            }
            let step_a = (jkk * ga - jak * gk) / det;
            let step_k = (jaa * gk - jak * ga) / det;
            let old = rms_residual(series, a, k);
            let mut lambda = 1.0;
            let mut accepted = false;
            while lambda > 1e-6 {
                let (na, nk) = (a + lambda * step_a, (k + lambda * step_k).max(0.0));
                if rms_residual(series, na, nk) <= old {
                    a = na;
                    k = nk;
                    accepted = true;
                    break;
                }
                lambda /= 2.0;
            }
            if !accepted || (step_k.abs() <= 1e-12 * k.abs() && step_a.abs() <= 1e-12) {
                break;
            }
        }
    }
    let residual = rms_residual(series, a, k);
    if !(residual <= MAX_FIT_RESIDUAL) {
        return Err(Error::FitDiverged { residual });
    }
    Ok(LifetimeFit {
        t_eff: if k > 0.0 { 1.0 / k } else { f64::INFINITY },
        amplitude: a,
        residual,
        n_points: series.len(),
    })
}

/// Cycles skipped at the start of a lifetime fit.
pub const FIT_BURN_IN_CYCLES: usize = 2;

/// Fidelity below which later cycles are left out of a lifetime fit: past
/// this point a superposition state drifts toward its mixed-state floor and
/// the single exponential no longer describes the decay.
pub const FIT_FLOOR: f64 = 0.606_530_659_712_633_4; // e^{-1/2}

/// `(time, fidelity)` points used for a lifetime fit: from cycle
/// [`FIT_BURN_IN_CYCLES`] up to the first fidelity below [`FIT_FLOOR`].
pub fn lifetime_window(series: &[(usize, f64, f64)]) -> Vec<(f64, f64)> {
    series
        .iter()
        .filter(|(c, _, _)| *c >= FIT_BURN_IN_CYCLES)
        .take_while(|(_, _, f)| *f >= FIT_FLOOR)
        .map(|&(_, t, f)| (t, f))
        .collect()
}

/// Rectangular sampling window in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub n_re: usize,
    pub n_im: usize,
}

impl GridSpec {
    pub fn square(half_width: f64, n: usize) -> Self {
        Self {
            re_min: -half_width,
            re_max: half_width,
            im_min: -half_width,
            im_max: half_width,
            n_re: n,
            n_im: n,
        }
    }

    fn axis(min: f64, max: f64, n: usize, k: usize) -> f64 {
        if n == 1 {
            min
        } else {
            min + (max - min) * k as f64 / (n - 1) as f64
        }
    }

    /// Point at column `i` (real axis) and row `j` (imaginary axis).
    pub fn point(&self, i: usize, j: usize) -> C64 {
        C64::new(
            Self::axis(self.re_min, self.re_max, self.n_re, i),
            Self::axis(self.im_min, self.im_max, self.n_im, j),
        )
    }

    fn validate(&self) -> Result<()> {
        let b = [self.re_min, self.re_max, self.im_min, self.im_max];
        if b.iter().any(|x| !x.is_finite()) || self.re_min > self.re_max || self.im_min > self.im_max {
            return Err(Error::InvalidArgument("grid bounds must be finite and ordered".into()));
        }
        if self.n_re == 0 || self.n_im == 0 {
            return Err(Error::InvalidArgument("grid needs at least one point per axis".into()));
        }
        Ok(())
    }
}

/// Husimi function sampled on a grid; `values[(j, i)]` is `Q` at
/// `spec.point(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HusimiGrid {
    pub spec: GridSpec,
    pub values: DMatrix<f64>,
}

impl HusimiGrid {
    /// Largest value and the grid point where it occurs.
    pub fn peak(&self) -> (f64, C64) {
        let mut best = (f64::NEG_INFINITY, C64::new(0.0, 0.0));
        for j in 0..self.spec.n_im {
            for i in 0..self.spec.n_re {
                if self.values[(j, i)] > best.0 {
                    best = (self.values[(j, i)], self.spec.point(i, j));
                }
            }
        }
        best
    }

    pub fn value_at(&self, i: usize, j: usize) -> f64 {
        self.values[(j, i)]
    }

    /// Row-major CSV, one row per imaginary-axis sample, preceded by a comment
    /// line with the grid bounds.
    pub fn to_csv(&self) -> String {
        let s = &self.spec;
        let mut out = format!(
            "# re_min={},re_max={},im_min={},im_max={},n_re={},n_im={}\n",
            s.re_min, s.re_max, s.im_min, s.im_max, s.n_re, s.n_im
        );
        for j in 0..s.n_im {
            let row: Vec<String> = (0..s.n_re).map(|i| format!("{:.12e}", self.values[(j, i)])).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}

/// `Q(γ) = ⟨γ|ρ|γ⟩/π` for a cavity density matrix.
pub fn phase_space_grid(rho: &CMatrix, spec: &GridSpec) -> Result<HusimiGrid> {
    spec.validate()?;
    if rho.nrows() != rho.ncols() || rho.nrows() == 0 {
        return Err(Error::DimensionMismatch {
            expected: rho.nrows(),
            got: rho.ncols(),
        });
    }
    let dim = rho.nrows();
    let mut values = DMatrix::zeros(spec.n_im, spec.n_re);
    for j in 0..spec.n_im {
        for i in 0..spec.n_re {
            let g = coherent_state_unchecked(spec.point(i, j), dim);
            let q = g.dotc(&(rho * &g)).re / std::f64::consts::PI;
            values[(j, i)] = q.max(0.0);
        }
    }
    Ok(HusimiGrid { spec: *spec, values })
}
