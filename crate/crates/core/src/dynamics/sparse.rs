use super::Channel;
use crate::hilbert::{CMatrix, CVector, HilbertConfig, Operator, C64, ZERO};

/// Operator with at most one nonzero entry per column: column `j` maps to
/// row `map[j].0` with coefficient `map[j].1`.
///
/// Every collapse operator of the noise model has this form, which makes
/// `L ρ L†` an O(d²) scatter.
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialOp {
    map: Vec<Option<(usize, C64)>>,
}

impl MonomialOp {
    pub fn new(map: Vec<Option<(usize, C64)>>) -> Self {
        Self { map }
    }

    pub fn channel(ch: Channel, rate: f64, cfg: &HilbertConfig) -> Self {
        let n = cfg.fock_dim();
        let s = rate.sqrt();
        let map = (0..cfg.total_dim())
            .map(|j| {
                let (q, m) = (j / n, j % n);
                match ch {
                    Channel::CavityLoss => {
                        (m > 0).then(|| (j - 1, C64::new(s * (m as f64).sqrt(), 0.0)))
                    }
                    Channel::Relaxation => (q == 1).then(|| (m, C64::new(s, 0.0))),
                    Channel::Dephasing => {
                        Some((j, C64::new(if q == 1 { s } else { -s }, 0.0)))
                    }
                }
            })
            .collect();
        Self { map }
    }

    pub fn dim(&self) -> usize {
        self.map.len()
    }

    pub fn entries(&self) -> &[Option<(usize, C64)>] {
        &self.map
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        let mut out = CVector::zeros(self.dim());
        for (j, e) in self.map.iter().enumerate() {
            if let Some((r, c)) = e {
                out[*r] += c * v[j];
            }
        }
        out
    }

    /// `‖L v‖²`.
    pub fn norm_sqr_after(&self, v: &CVector) -> f64 {
        self.apply(v).norm_squared()
    }

    /// `out += L ρ L†`.
    pub fn sandwich_add(&self, rho: &CMatrix, out: &mut CMatrix) {
        for (l, el) in self.map.iter().enumerate() {
            let Some((rl, cl)) = el else { continue };
            let cl = cl.conj();
            for (k, ek) in self.map.iter().enumerate() {
                if let Some((rk, ck)) = ek {
                    out[(*rk, *rl)] += ck * cl * rho[(k, l)];
                }
            }
        }
    }

    /// Diagonal of `L†L`; exact because distinct columns map to distinct rows.
    pub fn dagger_product_diagonal(&self) -> Vec<f64> {
        self.map
            .iter()
            .map(|e| e.map_or(0.0, |(_, c)| c.norm_sqr()))
            .collect()
    }

    pub fn to_operator(&self, label: &str) -> Operator {
        let d = self.dim();
        let mut m = CMatrix::from_element(d, d, ZERO);
        for (j, e) in self.map.iter().enumerate() {
            if let Some((r, c)) = e {
                m[(*r, j)] = *c;
            }
        }
        Operator::from_square(m, label)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{annihilation, qubit_identity, sigma_minus, sigma_z, tensor, cavity_identity};

    #[test]
    fn channels_match_dense_operators() {
        let cfg = HilbertConfig::new(6).unwrap();
        let a = MonomialOp::channel(Channel::CavityLoss, 4.0, &cfg).to_operator("a");
        let dense = tensor(&qubit_identity(), &annihilation(&cfg), &cfg).unwrap().scaled(C64::new(2.0, 0.0));
        assert!(a.max_abs_diff(&dense) < 1e-15);
        let sm = MonomialOp::channel(Channel::Relaxation, 1.0, &cfg).to_operator("sm");
        let dense = tensor(&sigma_minus(), &cavity_identity(&cfg), &cfg).unwrap();
        assert_eq!(sm.max_abs_diff(&dense), 0.0);
        let sz = MonomialOp::channel(Channel::Dephasing, 0.25, &cfg).to_operator("sz");
        let dense = tensor(&sigma_z(), &cavity_identity(&cfg), &cfg).unwrap().scaled(C64::new(0.5, 0.0));
        assert_eq!(sz.max_abs_diff(&dense), 0.0);
    }

    #[test]
    fn sandwich_matches_dense_product() {
        let cfg = HilbertConfig::new(5).unwrap();
        let rho = CMatrix::from_fn(10, 10, |i, j| C64::new((i + 2 * j) as f64 * 0.1, (i as f64 - j as f64) * 0.05));
        for ch in [Channel::CavityLoss, Channel::Relaxation, Channel::Dephasing] {
            let op = MonomialOp::channel(ch, 0.7, &cfg);
            let dense = op.to_operator("L");
            let mut out = CMatrix::zeros(10, 10);
            op.sandwich_add(&rho, &mut out);
            let expect = dense.matrix() * &rho * dense.matrix().adjoint();
            assert!((out - expect).norm() < 1e-13);
            let ldl = dense.matrix().adjoint() * dense.matrix();
            for (k, x) in op.dagger_product_diagonal().iter().enumerate() {
                assert!((ldl[(k, k)].re - x).abs() < 1e-14);
            }
        }
    }
}
