use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::ode::{dopri5_step, error_norm};
use super::{real_diagonal, Channel, IntegratorSettings, JumpRecord, MonomialOp, NoiseModel};
use crate::error::{Error, Result};
use crate::hilbert::{normalize, CMatrix, CVector, HilbertConfig, JointState, Operator, C64};

const BISECTION_STEPS: usize = 80;

#[derive(Debug, Clone)]
pub struct TrajectoryOutcome {
    pub state: JointState,
    pub jumps: JumpRecord,
}

/// Monte-Carlo wave-function unraveling over `duration` μs, seeded.
pub fn evolve_trajectory(
    state: &JointState,
    h: &Operator,
    noise: &NoiseModel,
    duration: f64,
    seed: u64,
) -> Result<TrajectoryOutcome> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    evolve_trajectory_with_rng(state, h, noise, duration, &mut rng)
}

pub fn evolve_trajectory_with_rng<R: Rng + ?Sized>(
    state: &JointState,
    h: &Operator,
    noise: &NoiseModel,
    duration: f64,
    rng: &mut R,
) -> Result<TrajectoryOutcome> {
    let cfg = *state.config();
    let psi = state
        .as_vector()
        .ok_or_else(|| Error::InvalidArgument("trajectories need a pure state".into()))?
        .clone();
    if h.dim() != cfg.total_dim() {
        return Err(Error::DimensionMismatch {
            expected: cfg.total_dim(),
            got: h.dim(),
        });
    }
    if duration < 0.0 {
        return Err(Error::InvalidArgument(format!("negative duration {duration}")));
    }
    let mut jumps = JumpRecord::default();
    let out = match real_diagonal(h) {
        Some(diag) => {
            let engine = DiagonalTrajectory::new(&cfg, &diag, noise);
            engine.run(psi, duration, rng, state.time_tag, &mut jumps)
        }
        None => run_dense(psi, h.matrix(), noise, &cfg, duration, rng, state.time_tag, &mut jumps)?,
    };
    let st = JointState::pure(cfg, out)?.with_time(state.time_tag + duration);
    Ok(TrajectoryOutcome { state: st, jumps })
}

/// Jump-time sampling for a diagonal effective Hamiltonian, where the
/// no-jump propagator is known in closed form.
#[derive(Debug, Clone)]
pub(crate) struct DiagonalTrajectory {
    h: Vec<f64>,
    gamma: Vec<f64>,
    ops: Vec<(Channel, MonomialOp)>,
}

impl DiagonalTrajectory {
    pub(crate) fn new(cfg: &HilbertConfig, h_diag: &[f64], noise: &NoiseModel) -> Self {
        let ops = noise.collapse_ops(cfg);
        let mut gamma = vec![0.0; cfg.total_dim()];
        for (_, l) in &ops {
            for (g, x) in gamma.iter_mut().zip(l.dagger_product_diagonal()) {
                *g += x;
            }
        }
        Self {
            h: h_diag.to_vec(),
            gamma,
            ops,
        }
    }

    fn drift(&self, psi: &CVector, t: f64) -> CVector {
        CVector::from_iterator(
            psi.len(),
            psi.iter()
                .zip(self.h.iter().zip(&self.gamma))
                .map(|(z, (h, g))| z * C64::from_polar((-0.5 * g * t).exp(), -h * t)),
        )
    }

    fn norm_sqr_at(&self, psi: &CVector, t: f64) -> f64 {
        psi.iter()
            .zip(&self.gamma)
            .map(|(z, g)| z.norm_sqr() * (-g * t).exp())
            .sum()
    }

    /// Evolve the normalized `psi` for `duration`, appending jumps (absolute
    /// times offset by `t0`) to `record`.
    pub(crate) fn run<R: Rng + ?Sized>(
        &self,
        mut psi: CVector,
        duration: f64,
        rng: &mut R,
        t0: f64,
        record: &mut JumpRecord,
    ) -> CVector {
        let mut t = 0.0;
        loop {
            let remaining = duration - t;
            if self.ops.is_empty() || remaining <= 0.0 {
                let mut out = self.drift(&psi, remaining.max(0.0));
                normalize(&mut out);
                return out;
            }
            let r: f64 = rng.random();
            if self.norm_sqr_at(&psi, remaining) > r {
                let mut out = self.drift(&psi, remaining);
                normalize(&mut out);
                return out;
            }
            let (mut lo, mut hi) = (0.0, remaining);
            for _ in 0..BISECTION_STEPS {
                let mid = 0.5 * (lo + hi);
                if self.norm_sqr_at(&psi, mid) > r {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let tau = 0.5 * (lo + hi);
            let pre = self.drift(&psi, tau);
            t += tau;
            let (ch, mut post) = select_jump(&self.ops, &pre, rng);
            normalize(&mut post);
            psi = post;
            record.jumps.push((t0 + t, ch));
        }
    }
}

fn select_jump<R: Rng + ?Sized>(ops: &[(Channel, MonomialOp)], psi: &CVector, rng: &mut R) -> (Channel, CVector) {
    let candidates: Vec<(Channel, CVector, f64)> = ops
        .iter()
        .map(|(c, l)| {
            let v = l.apply(psi);
            let w = v.norm_squared();
            (*c, v, w)
        })
        .collect();
    let total: f64 = candidates.iter().map(|c| c.2).sum();
    let mut x = rng.random::<f64>() * total;
    let last = candidates.len() - 1;
    for (k, (c, v, w)) in candidates.into_iter().enumerate() {
        if x < w || k == last {
            return (c, v);
        }
        x -= w;
    }
    unreachable!("at least one collapse channel is present")
}

#[allow(clippy::too_many_arguments)]
fn run_dense<R: Rng + ?Sized>(
    psi: CVector,
    h: &CMatrix,
    noise: &NoiseModel,
    cfg: &HilbertConfig,
    duration: f64,
    rng: &mut R,
    t0: f64,
    record: &mut JumpRecord,
) -> Result<CVector> {
    let ops = noise.collapse_ops(cfg);
    let d = cfg.total_dim();
    let mut heff = h.map(|z| z * C64::new(0.0, -1.0));
    for (_, l) in &ops {
        for (k, g) in l.dagger_product_diagonal().iter().enumerate() {
            heff[(k, k)] -= C64::new(0.5 * g, 0.0);
        }
    }
    // y' = −i H_eff y
    let mut f = |_t: f64, y: &CMatrix| &heff * y;
    let settings = IntegratorSettings::adaptive(1e-10, 1e-12)?;
    let mut y = CMatrix::from_column_slice(d, 1, psi.as_slice());
    let mut t = 0.0;
    let mut r: f64 = rng.random();
    let mut h_step = settings.max_step.min(duration).max(1e-12);
    while t < duration {
        let step = h_step.min(duration - t);
        let k1 = f(t, &y);
        let (y_new, err, _) = dopri5_step(&mut f, t, &y, &k1, step);
        let en = error_norm(&err, &y, &y_new, settings.rel_tol, settings.abs_tol);
        if en > 1.0 {
            h_step = step * (0.9 * en.powf(-0.25)).clamp(0.2, 1.0);
            if h_step < 1e-14 {
                return Err(Error::StepSizeUnderflow { t, h: h_step });
            }
            continue;
        }
        if y_new.norm_squared() > r || ops.is_empty() {
            t += step;
            y = y_new;
            h_step = (step * (0.9 * en.max(1e-10).powf(-0.2)).clamp(0.2, 5.0)).min(settings.max_step);
            continue;
        }
        // locate the crossing inside this step
        let (mut lo, mut hi) = (0.0, step);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let (ym, _, _) = dopri5_step(&mut f, t, &y, &k1, mid);
            if ym.norm_squared() > r {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let tau = 0.5 * (lo + hi);
        let (pre, _, _) = dopri5_step(&mut f, t, &y, &k1, tau);
        t += tau;
        let pre = CVector::from_column_slice(pre.as_slice());
        let (ch, mut post) = select_jump(&ops, &pre, rng);
        normalize(&mut post);
        record.jumps.push((t0 + t, ch));
        y = CMatrix::from_column_slice(d, 1, post.as_slice());
        r = rng.random();
    }
    let mut out = CVector::from_column_slice(y.as_slice());
    normalize(&mut out);
    Ok(out)
}
