//! Coherent states, two-component cats and the four-member logical family
//! `ψ^(n)_α` of the four-component cat code.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use crate::error::{Error, Result};
use crate::hilbert::{annihilation, normalize, CMatrix, CVector, HilbertConfig, C64, I, ONE, ZERO};

const QUBIT_NORM_TOL: f64 = 1e-12;
const MIN_CAT_AMPLITUDE: f64 = 1e-6;

/// Qubit amplitudes `c_g|g⟩ + c_e|e⟩` carried by the code.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogicalQubit {
    c_g: C64,
    c_e: C64,
}

impl LogicalQubit {
    pub fn new(c_g: C64, c_e: C64) -> Result<Self> {
        let norm = c_g.norm_sqr() + c_e.norm_sqr();
        if (norm - 1.0).abs() > QUBIT_NORM_TOL {
            return Err(Error::InvalidState(format!(
                "logical qubit amplitudes have squared norm {norm}"
            )));
        }
        Ok(Self { c_g, c_e })
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(c_g: C64, c_e: C64) -> Result<Self> {
        let norm = (c_g.norm_sqr() + c_e.norm_sqr()).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("zero logical amplitudes".into()));
        }
        Ok(Self {
            c_g: c_g / norm,
            c_e: c_e / norm,
        })
    }

    /// Point on the Bloch sphere at polar angle `theta` and azimuth `phi`.
    pub fn from_bloch(theta: f64, phi: f64) -> Self {
        Self {
            c_g: C64::new((theta / 2.0).cos(), 0.0),
            c_e: C64::from_polar((theta / 2.0).sin(), phi),
        }
    }

    pub fn zero() -> Self {
        Self { c_g: ONE, c_e: ZERO }
    }

    pub fn one() -> Self {
        Self { c_g: ZERO, c_e: ONE }
    }

    pub fn plus() -> Self {
        Self {
            c_g: C64::new(FRAC_1_SQRT_2, 0.0),
            c_e: C64::new(FRAC_1_SQRT_2, 0.0),
        }
    }

    pub fn c_g(&self) -> C64 {
        self.c_g
    }

    pub fn c_e(&self) -> C64 {
        self.c_e
    }

    pub fn vector(&self) -> CVector {
        CVector::from_vec(vec![self.c_g, self.c_e])
    }

    pub fn with_global_phase(&self, phi: f64) -> Self {
        let p = C64::from_polar(1.0, phi);
        Self {
            c_g: self.c_g * p,
            c_e: self.c_e * p,
        }
    }
}

/// The six cardinal Bloch-sphere states `±z, ±x, ±y`, labelled.
pub fn cardinal_states() -> [(&'static str, LogicalQubit); 6] {
    let s = FRAC_1_SQRT_2;
    let q = |g: C64, e: C64| LogicalQubit { c_g: g, c_e: e };
    [
        ("+z", q(ONE, ZERO)),
        ("-z", q(ZERO, ONE)),
        ("+x", q(C64::new(s, 0.0), C64::new(s, 0.0))),
        ("-x", q(C64::new(s, 0.0), C64::new(-s, 0.0))),
        ("+y", q(C64::new(s, 0.0), C64::new(0.0, s))),
        ("-y", q(C64::new(s, 0.0), C64::new(0.0, -s))),
    ]
}

/// Code instance: amplitude `α`, `n̄ = |α|²`, `β = α(−1+i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodeParams {
    alpha: C64,
}

impl CodeParams {
    pub fn new(alpha: C64) -> Result<Self> {
        if !(alpha.re.is_finite() && alpha.im.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite amplitude {alpha}")));
        }
        Ok(Self { alpha })
    }

    /// `α = √n̄ · e^{iφ}`.
    pub fn from_nbar(nbar: f64, phase: f64) -> Result<Self> {
        if !(nbar > 0.0) || !nbar.is_finite() {
            return Err(Error::InvalidArgument(format!("nbar must be positive, got {nbar}")));
        }
        Self::new(C64::from_polar(nbar.sqrt(), phase))
    }

    pub fn alpha(&self) -> C64 {
        self.alpha
    }

    pub fn nbar(&self) -> f64 {
        self.alpha.norm_sqr()
    }

    pub fn beta(&self) -> C64 {
        self.alpha * C64::new(-1.0, 1.0)
    }

    /// Same code with `α → α·factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            alpha: self.alpha * factor,
        }
    }

    /// Code after a no-jump interval: `α → α e^{−κt/2}`.
    pub fn damped(&self, kappa: f64, t: f64) -> Self {
        self.scaled((-kappa * t / 2.0).exp())
    }
}

/// Jump counter modulo 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct JumpIndex(u8);

impl JumpIndex {
    pub fn new(n: i64) -> Self {
        Self(n.rem_euclid(4) as u8)
    }

    pub fn value(self) -> usize {
        self.0 as usize
    }

    pub fn next(self) -> Self {
        self.add(1)
    }

    pub fn add(self, k: i64) -> Self {
        Self::new(self.0 as i64 + k)
    }

    /// `(−1)^n`.
    pub fn parity(self) -> f64 {
        if self.0.is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    pub fn all() -> [JumpIndex; 4] {
        [Self(0), Self(1), Self(2), Self(3)]
    }
}

impl fmt::Display for JumpIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Normalized Fock expansion of `|α⟩`.
pub fn coherent_state(alpha: C64, cfg: &HilbertConfig) -> Result<CVector> {
    cfg.check_amplitude(alpha)?;
    Ok(coherent_state_unchecked(alpha, cfg.fock_dim()))
}

pub(crate) fn coherent_state_unchecked(alpha: C64, dim: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    let mut c = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    v[0] = c;
    for k in 1..dim {
        c *= alpha / (k as f64).sqrt();
        v[k] = c;
    }
    normalize(&mut v);
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CatSign {
    Plus,
    Minus,
}

impl CatSign {
    fn value(self) -> f64 {
        match self {
            CatSign::Plus => 1.0,
            CatSign::Minus => -1.0,
        }
    }
}

/// `N(|α⟩ ± |−α⟩)`, normalized on the truncated space.
pub fn cat_state(alpha: C64, sign: CatSign, cfg: &HilbertConfig) -> Result<CVector> {
    if sign == CatSign::Minus && alpha.norm() < MIN_CAT_AMPLITUDE {
        return Err(Error::DegenerateCat(alpha.norm()));
    }
    cfg.check_amplitude(alpha)?;
    let s = sign.value();
    // |−α⟩ has coefficients (−1)^n relative to |α⟩, so the cat keeps one parity.
    let mut v = coherent_state_unchecked(alpha, cfg.fock_dim());
    for (k, z) in v.iter_mut().enumerate() {
        let parity = if k % 2 == 0 { 1.0 } else { -1.0 };
        *z *= 1.0 + s * parity;
    }
    normalize(&mut v);
    Ok(v)
}

/// Logical state `ψ^(n)_α`:
/// `n=0: c_g C⁺_α + c_e C⁺_{iα}`, `n=1: c_g C⁻_α + i c_e C⁻_{iα}`,
/// `n=2: c_g C⁺_α − c_e C⁺_{iα}`, `n=3: c_g C⁻_α − i c_e C⁻_{iα}`,
/// renormalized.
pub fn logical_state(
    n: JumpIndex,
    code: &CodeParams,
    q: &LogicalQubit,
    cfg: &HilbertConfig,
) -> Result<CVector> {
    let sign = if n.value().is_multiple_of(2) {
        CatSign::Plus
    } else {
        CatSign::Minus
    };
    let phase = [ONE, I, -ONE, -I][n.value()];
    let alpha = code.alpha();
    let mut v = cat_state(alpha, sign, cfg)? * q.c_g() + cat_state(alpha * I, sign, cfg)? * (phase * q.c_e());
    normalize(&mut v);
    Ok(v)
}

/// `a ψ^(n) / ‖a ψ^(n)‖` together with the advanced jump index.
pub fn apply_photon_loss(
    n: JumpIndex,
    code: &CodeParams,
    q: &LogicalQubit,
    cfg: &HilbertConfig,
) -> Result<(CVector, JumpIndex)> {
    let psi = logical_state(n, code, q, cfg)?;
    let mut out = annihilation(cfg).matrix() * psi;
    let norm = normalize(&mut out);
    if norm == 0.0 {
        return Err(Error::ZeroProbability(0.0));
    }
    Ok((out, n.next()))
}

/// State reached after a jump-free interval `t`: `ψ^(n)` at amplitude
/// `α e^{−κt/2}`.
pub fn no_jump_damp(
    n: JumpIndex,
    code: &CodeParams,
    q: &LogicalQubit,
    t: f64,
    kappa: f64,
    cfg: &HilbertConfig,
) -> Result<CVector> {
    if t < 0.0 || kappa < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "damping needs t ≥ 0 and κ ≥ 0, got t = {t}, κ = {kappa}"
        )));
    }
    logical_state(n, &code.damped(kappa, t), q, cfg)
}

/// Gram matrix of `|α⟩, |−α⟩, |iα⟩, |−iα⟩` on the truncated space.
pub fn overlap_matrix(code: &CodeParams, cfg: &HilbertConfig) -> Result<CMatrix> {
    let a = code.alpha();
    let comps = [a, -a, a * I, -a * I]
        .iter()
        .map(|&z| coherent_state(z, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(CMatrix::from_fn(4, 4, |j, k| comps[j].dotc(&comps[k])))
}

/// Analytic `⟨β|α⟩ = exp(−|α|²/2 − |β|²/2 + β̄α)`.
pub fn coherent_overlap(beta: C64, alpha: C64) -> C64 {
    (-(alpha.norm_sqr() + beta.norm_sqr()) / 2.0 + beta.conj() * alpha).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{number_operator, overlap_sq, parity_operator};

    fn cfg() -> HilbertConfig {
        HilbertConfig::new(70).unwrap()
    }

    fn code(a: f64) -> CodeParams {
        CodeParams::new(C64::new(a, 0.0)).unwrap()
    }

    #[test]
    fn code_params_relations() {
        let c = CodeParams::from_nbar(4.0, 0.3).unwrap();
        assert!((c.nbar() - 4.0).abs() < 1e-12);
        assert!((c.beta() / c.alpha() - C64::new(-1.0, 1.0)).norm() < 1e-12);
        assert!(CodeParams::from_nbar(0.0, 0.0).is_err());
    }

    #[test]
    fn logical_qubit_checks_norm() {
        assert!(LogicalQubit::new(ONE, ONE).is_err());
        let q = LogicalQubit::normalized(ONE, ONE).unwrap();
        assert!((q.c_g().norm_sqr() + q.c_e().norm_sqr() - 1.0).abs() < 1e-15);
        for (_, s) in cardinal_states() {
            assert!(LogicalQubit::new(s.c_g(), s.c_e()).is_ok());
        }
    }

    #[test]
    fn jump_index_wraps() {
        assert_eq!(JumpIndex::new(5).value(), 1);
        assert_eq!(JumpIndex::new(-1).value(), 3);
        assert_eq!(JumpIndex::new(3).next(), JumpIndex::new(0));
        assert_eq!(JumpIndex::new(2).parity(), 1.0);
    }

    #[test]
    fn coherent_state_properties() {
        let c = cfg();
        let vac = coherent_state(ZERO, &c).unwrap();
        assert_eq!(vac[0], ONE);
        let v = coherent_state(C64::new(2.0, 0.0), &c).unwrap();
        let n = v.dotc(&(number_operator(&c).matrix() * &v)).re;
        assert!((n - 4.0).abs() < 1e-8);
        let w = coherent_state(C64::new(-2.0, 0.0), &c).unwrap();
        assert!((v.dotc(&w).norm() - (-8.0f64).exp()).abs() < 1e-12);
        // ⟨0|α=2⟩² = e^{-4}
        assert!((vac.dotc(&v).norm_sqr() - (-4.0f64).exp()).abs() < 1e-12);
        assert!(matches!(
            coherent_state(C64::new(7.0, 0.0), &c),
            Err(Error::Truncation { .. })
        ));
    }

    #[test]
    fn coherent_matches_displaced_vacuum() {
        let c = cfg();
        let a = C64::new(1.2, -0.9);
        let d = crate::hilbert::displacement_operator(a, &c).unwrap();
        let from_d = d.matrix().column(0).into_owned();
        let v = coherent_state(a, &c).unwrap();
        assert!(1.0 - overlap_sq(&v, &from_d) < 1e-12);
        // phase convention: same vector, not just same ray
        assert!((v - from_d).norm() < 1e-9);
    }

    #[test]
    fn cat_parities() {
        let c = cfg();
        let a = C64::new(2.0, 0.0);
        let plus = cat_state(a, CatSign::Plus, &c).unwrap();
        let minus = cat_state(a, CatSign::Minus, &c).unwrap();
        for k in (1..70).step_by(2) {
            assert_eq!(plus[k], ZERO);
        }
        for k in (0..70).step_by(2) {
            assert_eq!(minus[k], ZERO);
        }
        assert_eq!(plus.dotc(&minus), ZERO);
        assert!((plus.norm() - 1.0).abs() < 1e-12);
        assert!(matches!(
            cat_state(C64::new(1e-8, 0.0), CatSign::Minus, &c),
            Err(Error::DegenerateCat(_))
        ));
        assert!(cat_state(ZERO, CatSign::Plus, &c).is_ok());
    }

    #[test]
    fn cat_matches_two_coherent_sum() {
        let c = cfg();
        let a = C64::new(1.5, 0.4);
        let mut direct = coherent_state(a, &c).unwrap() - coherent_state(-a, &c).unwrap();
        normalize(&mut direct);
        let cat = cat_state(a, CatSign::Minus, &c).unwrap();
        assert!((direct - cat).norm() < 1e-12);
    }

    #[test]
    fn logical_zero_is_even_cat() {
        let c = cfg();
        let k = code(2.0);
        let v = logical_state(JumpIndex::new(0), &k, &LogicalQubit::zero(), &c).unwrap();
        let cat = cat_state(k.alpha(), CatSign::Plus, &c).unwrap();
        assert!((v - cat).norm() < 1e-14);
    }

    #[test]
    fn logical_parity_eigenstates() {
        let c = cfg();
        let k = code(2.0);
        let p = parity_operator(&c);
        for n in JumpIndex::all() {
            for (_, q) in cardinal_states() {
                let v = logical_state(n, &k, &q, &c).unwrap();
                let pv = p.matrix() * &v;
                assert!((pv - &v * C64::new(n.parity(), 0.0)).norm() == 0.0);
            }
        }
    }

    #[test]
    fn quasi_orthogonality_scale() {
        let c = cfg();
        let k = code(2.0);
        // x = ⟨C⁺_α|C⁺_{iα}⟩ = 4N²e^{-4}cos 4 with N² = 1/(2(1+e^{-8})), real.
        let x = 2.0 * (-4.0f64).exp() * 4.0f64.cos() / (1.0 + (-8.0f64).exp());
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // ⟨ψ0|ψ2⟩ = (|c_g|² − |c_e|² + c̄_e c_g x − c̄_g c_e x) / √((1 + 2Re(c̄_g c_e)x)(1 − 2Re(c̄_g c_e)x))
        let cases = [(C64::new(s, 0.0), C64::new(s, 0.0)), (C64::new(s, 0.0), C64::new(0.0, s))];
        for (cg, ce) in cases {
            let q = LogicalQubit::new(cg, ce).unwrap();
            let v0 = logical_state(JumpIndex::new(0), &k, &q, &c).unwrap();
            let v2 = logical_state(JumpIndex::new(2), &k, &q, &c).unwrap();
            let r = (cg.conj() * ce).re * 2.0 * x;
            let num = cg.norm_sqr() - ce.norm_sqr() + (ce.conj() * cg - cg.conj() * ce) * x;
            let oracle = num / ((1.0 + r) * (1.0 - r)).sqrt();
            assert!((v0.dotc(&v2) - oracle).norm() < 1e-12);
        }
        // the real-amplitude +x pair is exactly orthogonal; the +y pair is not
        let qy = LogicalQubit::new(C64::new(s, 0.0), C64::new(0.0, s)).unwrap();
        let ov = logical_state(JumpIndex::new(0), &k, &qy, &c)
            .unwrap()
            .dotc(&logical_state(JumpIndex::new(2), &k, &qy, &c).unwrap())
            .norm();
        assert!((ov - 0.02396).abs() < 1e-4, "{ov}");
    }

    #[test]
    fn photon_loss_cycles_through_family() {
        let c = cfg();
        let k = code(2.0);
        let q = LogicalQubit::from_bloch(1.1, 0.7);
        for n in JumpIndex::all() {
            let (v, m) = apply_photon_loss(n, &k, &q, &c).unwrap();
            assert_eq!(m, n.next());
            let target = logical_state(m, &k, &q, &c).unwrap();
            assert!(1.0 - overlap_sq(&v, &target) < 1e-10);
        }
        let (v, _) = apply_photon_loss(JumpIndex::new(0), &k, &LogicalQubit::zero(), &c).unwrap();
        let minus = cat_state(k.alpha(), CatSign::Minus, &c).unwrap();
        assert!(1.0 - overlap_sq(&v, &minus) < 1e-12);
    }

    #[test]
    fn no_jump_damp_limits() {
        let c = cfg();
        let k = code(2.0);
        let q = LogicalQubit::plus();
        let n = JumpIndex::new(1);
        let v0 = no_jump_damp(n, &k, &q, 0.0, 0.5, &c).unwrap();
        assert!((v0 - logical_state(n, &k, &q, &c).unwrap()).norm() < 1e-15);
        let kappa = 1.0;
        let half = no_jump_damp(n, &k, &q, 2.0 * std::f64::consts::LN_2, kappa, &c).unwrap();
        let target = logical_state(n, &code(1.0), &q, &c).unwrap();
        assert!(1.0 - overlap_sq(&half, &target) < 1e-12);
        assert!(no_jump_damp(n, &k, &q, -1.0, 0.5, &c).is_err());
    }

    #[test]
    fn overlap_matrix_entries() {
        let c = cfg();
        let m = overlap_matrix(&code(2.0), &c).unwrap();
        for j in 0..4 {
            assert!((m[(j, j)] - ONE).norm() < 1e-12);
        }
        assert!((m[(0, 2)].norm() - (-4.0f64).exp()).abs() < 1e-12);
        assert!((m[(0, 1)].norm() - (-8.0f64).exp()).abs() < 1e-12);
        let a = C64::new(2.0, 0.0);
        assert!((m[(0, 2)] - coherent_overlap(a, a * I)).norm() < 1e-12);
    }
}
