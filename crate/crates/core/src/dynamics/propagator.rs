use super::{MonomialOp, NoiseModel};
use crate::error::{Error, Result};
use crate::hilbert::{CMatrix, CVector, HilbertConfig, C64};

/// Exact master-equation propagator `exp(t𝓛)` for a diagonal Hamiltonian.
///
/// With monomial collapse operators the Liouvillian maps each matrix element
/// `ρ_ij` onto a small set of other elements, so `𝓛` is block diagonal over
/// invariant sectors. Each sector is exponentiated densely. Sectors come in
/// transposed pairs whose propagators are complex conjugates; only one of
/// each pair is stored and the other half of `ρ` is filled by Hermiticity.
#[derive(Debug, Clone)]
pub struct MasterPropagator {
    dim: usize,
    duration: f64,
    sectors: Vec<Sector>,
}

#[derive(Debug, Clone)]
struct Sector {
    /// Column-major flat indices `i + j·d` of the member elements.
    members: Vec<usize>,
    propagator: CMatrix,
    /// True when the sector is its own transpose.
    self_mirror: bool,
}

impl MasterPropagator {
    pub fn new(cfg: &HilbertConfig, h_diag: &[f64], noise: &NoiseModel, duration: f64) -> Result<Self> {
        let d = cfg.total_dim();
        if h_diag.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: h_diag.len(),
            });
        }
        if duration < 0.0 || !duration.is_finite() {
            return Err(Error::InvalidArgument(format!("invalid duration {duration}")));
        }
        let ops: Vec<MonomialOp> = noise.collapse_ops(cfg).into_iter().map(|(_, l)| l).collect();
        let mut gamma = vec![0.0; d];
        for l in &ops {
            for (g, x) in gamma.iter_mut().zip(l.dagger_product_diagonal()) {
                *g += x;
            }
        }

        // (target, source, coefficient) couplings from the jump terms
        let mut couplings: Vec<(usize, usize, C64)> = Vec::new();
        for l in &ops {
            let e = l.entries();
            for (k, ek) in e.iter().enumerate() {
                let Some((rk, ck)) = ek else { continue };
                for (m, em) in e.iter().enumerate() {
                    let Some((rm, cm)) = em else { continue };
                    couplings.push((rk + rm * d, k + m * d, ck * cm.conj()));
                }
            }
        }

        let mut uf = UnionFind::new(d * d);
        for &(t, s, _) in &couplings {
            uf.union(t, s);
        }
        let mut root_to_sector = vec![usize::MAX; d * d];
        let mut members: Vec<Vec<usize>> = Vec::new();
        for e in 0..d * d {
            let r = uf.find(e);
            if root_to_sector[r] == usize::MAX {
                root_to_sector[r] = members.len();
                members.push(Vec::new());
            }
            members[root_to_sector[r]].push(e);
        }
        let sector_of = |e: usize, uf: &mut UnionFind| root_to_sector[uf.find(e)];
        let transpose = |e: usize| (e / d) + (e % d) * d;

        let mut local = vec![0usize; d * d];
        for m in &members {
            for (k, &e) in m.iter().enumerate() {
                local[e] = k;
            }
        }
        let mut generators: Vec<CMatrix> = members
            .iter()
            .map(|m| CMatrix::zeros(m.len(), m.len()))
            .collect();
        for (sid, m) in members.iter().enumerate() {
            for (k, &e) in m.iter().enumerate() {
                let (i, j) = (e % d, e / d);
                generators[sid][(k, k)] +=
                    C64::new(-0.5 * (gamma[i] + gamma[j]), -(h_diag[i] - h_diag[j]));
            }
        }
        for &(t, s, c) in &couplings {
            let sid = sector_of(t, &mut uf);
            generators[sid][(local[t], local[s])] += c;
        }

        let mut sectors = Vec::new();
        for (sid, (m, g)) in members.into_iter().zip(generators).enumerate() {
            let mirror = sector_of(transpose(m[0]), &mut uf);
            if mirror < sid {
                continue;
            }
            let propagator = if m.len() == 1 {
                CMatrix::from_element(1, 1, (g[(0, 0)] * duration).exp())
            } else {
                (g * C64::new(duration, 0.0)).exp()
            };
            sectors.push(Sector {
                members: m,
                propagator,
                self_mirror: mirror == sid,
            });
        }
        Ok(Self {
            dim: d,
            duration,
            sectors,
        })
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `exp(t𝓛) ρ` for Hermitian `ρ`.
    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        let d = self.dim;
        let src = rho.as_slice();
        let mut out = CMatrix::zeros(d, d);
        {
            let dst = out.as_mut_slice();
            for s in &self.sectors {
                let x = CVector::from_iterator(s.members.len(), s.members.iter().map(|&e| src[e]));
                let y = &s.propagator * x;
                for (&e, v) in s.members.iter().zip(y.iter()) {
                    dst[e] = *v;
                    if !s.self_mirror {
                        dst[(e / d) + (e % d) * d] = v.conj();
                    }
                }
            }
        }
        out
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{dispersive_diagonal, evolve_master_diagonal, IntegratorSettings};
    use crate::hilbert::{product_vector, JointState};
    use crate::states::coherent_state;

    #[test]
    fn matches_adaptive_integration() {
        let cfg = HilbertConfig::new(10).unwrap();
        let noise = NoiseModel::new(0.02, 5.0, 7.0).unwrap();
        let h = dispersive_diagonal(4.0, &cfg);
        let cav = coherent_state(C64::new(1.0, 0.5), &cfg).unwrap();
        let st = JointState::product(cfg, C64::new(0.6, 0.0), C64::new(0.0, 0.8), &cav).unwrap();
        let rho = st.density_matrix();
        let t = 1.3;
        let p = MasterPropagator::new(&cfg, &h, &noise, t).unwrap();
        let exact = p.apply(&rho);
        let rk = evolve_master_diagonal(&rho, &h, &noise, &cfg, t, &IntegratorSettings::adaptive(1e-12, 1e-14).unwrap()).unwrap();
        assert!((exact - rk).norm() < 1e-9);
    }

    #[test]
    fn noiseless_is_phase_rotation() {
        let cfg = HilbertConfig::new(6).unwrap();
        let h = dispersive_diagonal(2.0, &cfg);
        let v = product_vector(C64::new(0.6, 0.0), C64::new(0.8, 0.0), &coherent_state(C64::new(0.5, 0.0), &cfg).unwrap());
        let rho = &v * v.adjoint();
        let t = 0.9;
        let out = MasterPropagator::new(&cfg, &h, &NoiseModel::noiseless(), t).unwrap().apply(&rho);
        let w = v.map_with_location(|i, _, z| z * C64::from_polar(1.0, -h[i] * t));
        assert!((out - &w * w.adjoint()).norm() < 1e-13);
    }

    #[test]
    fn preserves_trace_and_hermiticity() {
        let cfg = HilbertConfig::new(12).unwrap();
        let noise = NoiseModel::from_lifetimes(20.0, 3.0, 4.0).unwrap();
        let h = dispersive_diagonal(10.0, &cfg);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = product_vector(C64::new(s, 0.0), C64::new(s, 0.0), &coherent_state(C64::new(1.5, 0.0), &cfg).unwrap());
        let rho = &v * v.adjoint();
        let out = MasterPropagator::new(&cfg, &h, &noise, 5.0).unwrap().apply(&rho);
        assert!((out.trace().re - 1.0).abs() < 1e-9);
        assert!(crate::hilbert::hermiticity_defect(&out) < 1e-15);
        assert!(crate::hilbert::min_eigenvalue(&out) > -1e-10);
    }
}
