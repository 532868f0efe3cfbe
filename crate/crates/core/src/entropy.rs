//! Entropy functionals, all in bits.
//!
//! Conditional entropies of measured outcomes use the Holevo decomposition
//! `H(P|b) = H(P) - chi(P, b)` with
//! `chi = S(rho_b) - sum_j p_j S(rho_{b,j})`, which stays finite and well
//! conditioned even when conditional blocks are singular.

use std::fmt;

use crate::error::{Error, Result};
use crate::qmath::{self, CMatrix};
use crate::states::{dephase_subsystem, BasisSet, Povm, QState};
use crate::tol;

/// An entropy in bits; relative entropy may be positive infinity.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct EntropyValue(f64);

impl EntropyValue {
    pub const INFINITE: Self = Self(f64::INFINITY);

    pub fn from_bits(bits: f64) -> Self {
        Self(bits)
    }

    pub fn bits(self) -> f64 {
        self.0
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }
}

impl fmt::Display for EntropyValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_finite() {
            write!(f, "{}", self.0)
        } else {
            write!(f, "inf")
        }
    }
}

fn entropy_of_probs<'a>(probs: impl Iterator<Item = &'a f64>) -> f64 {
    -probs
        .filter(|&&p| p > 1e-300)
        .map(|&p| p * p.log2())
        .sum::<f64>()
}

/// Shannon entropy of a probability vector (entries `>= -1e-12`, sum `1 +- 1e-8`).
pub fn shannon(p: &[f64]) -> Result<EntropyValue> {
    for &x in p {
        if !x.is_finite() || x < -1e-12 {
            return Err(Error::NotDistribution(format!("entry {x}")));
        }
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > tol::TRACE_ONE {
        return Err(Error::NotDistribution(format!("sum {total}")));
    }
    Ok(EntropyValue(entropy_of_probs(p.iter())))
}

/// Von Neumann entropy `S(rho) = -tr rho log2 rho`.
pub fn von_neumann(rho: &QState) -> EntropyValue {
    EntropyValue(entropy_of_probs(rho.eigenvalues().iter()))
}

fn von_neumann_mat(m: &CMatrix) -> Result<f64> {
    let eig = qmath::hermitian_eig(m)?;
    Ok(entropy_of_probs(eig.eigenvalues.iter()))
}

/// Relative entropy `S(rho || sigma) = tr rho log2 rho - tr rho log2 sigma`.
///
/// Returns [`EntropyValue::INFINITE`] when `rho` puts more than `1e-10` mass
/// on the null space of `sigma`. `sigma` must be positive semidefinite but
/// need not be normalised.
pub fn relative_entropy(rho: &QState, sigma: &CMatrix) -> Result<EntropyValue> {
    rel_entropy_mat(rho.matrix(), sigma)
}

pub(crate) fn rel_entropy_mat(rho: &CMatrix, sigma: &CMatrix) -> Result<EntropyValue> {
    if rho.shape() != sigma.shape() {
        return Err(Error::DimMismatch(format!(
            "shapes {:?} and {:?} differ",
            rho.shape(),
            sigma.shape()
        )));
    }
    let eig_r = qmath::hermitian_eig(rho)?;
    let eig_s = qmath::hermitian_eig(sigma)?;
    let smax = eig_s.eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
    let smin = eig_s.eigenvalues.first().copied().unwrap_or(0.0);
    if smin < -tol::PSD_REL * smax.max(1.0) {
        return Err(Error::NotPsd(smin));
    }
    let rmax = eig_r.eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
    let eps_r = tol::SUPP_REL * rmax;
    let tr_rho_log_rho: f64 = eig_r
        .eigenvalues
        .iter()
        .filter(|&&l| l > eps_r)
        .map(|&l| l * l.log2())
        .sum();
    let eps_s = tol::SUPP_REL * smax;
    // Diagonal of rho in sigma's eigenbasis.
    let rot = eig_s.eigenvectors.adjoint() * rho * &eig_s.eigenvectors;
    let mut leak = 0.0f64;
    let mut tr_rho_log_sigma = 0.0f64;
    for (j, &mu) in eig_s.eigenvalues.iter().enumerate() {
        let overlap = rot[(j, j)].re.max(0.0);
        if mu > eps_s {
            tr_rho_log_sigma += overlap * mu.log2();
        } else {
            leak += overlap;
        }
    }
    if leak > tol::SUPPORT_LEAK {
        return Ok(EntropyValue::INFINITE);
    }
    Ok(EntropyValue(tr_rho_log_rho - tr_rho_log_sigma))
}

/// Splits the subsystems of `rho` into a leading group matching the POVM
/// dimension and the trailing side group, and returns
/// `(probs, side blocks, rho_side)`.
fn measured_ensemble(povm: &Povm, rho: &QState) -> Result<(Vec<f64>, Vec<CMatrix>, CMatrix)> {
    let dims = rho.dims();
    let mut lead = 1usize;
    let mut split = None;
    for (k, &d) in dims.iter().enumerate() {
        lead *= d;
        if lead == povm.dim() {
            split = Some(k + 1);
            break;
        }
        if lead > povm.dim() {
            break;
        }
    }
    let split = split.ok_or_else(|| {
        Error::DimMismatch(format!(
            "POVM dimension {} does not match a leading subsystem group of {dims:?}",
            povm.dim()
        ))
    })?;
    let side: Vec<usize> = (split..dims.len()).collect();
    let mut probs = Vec::with_capacity(povm.n());
    let mut blocks = Vec::with_capacity(povm.n());
    let id_side: usize = dims[split..].iter().product();
    let id = CMatrix::identity(id_side, id_side);
    for j in 0..povm.n() {
        let e = qmath::kron(povm.element(j), &id);
        let me = e * rho.matrix();
        let block = qmath::hermitize(&qmath::partial_trace(&me, dims, &side)?);
        probs.push(block.trace().re.max(0.0));
        blocks.push(block);
    }
    let rho_side = qmath::partial_trace(rho.matrix(), dims, &side)?;
    Ok((probs, blocks, rho_side))
}

/// Holevo information `chi(P, side) = S(rho_side) - sum_j p_j S(rho_side|j)`
/// for the POVM applied to the leading subsystem group.
pub fn holevo(povm: &Povm, rho: &QState) -> Result<EntropyValue> {
    let (probs, blocks, rho_side) = measured_ensemble(povm, rho)?;
    let mut chi = von_neumann_mat(&rho_side)?;
    for (j, p) in probs.iter().enumerate() {
        if *p > 1e-15 {
            chi -= p * von_neumann_mat(&blocks[j].unscale(*p))?;
        }
    }
    Ok(EntropyValue(chi))
}

/// Conditional entropy of the measurement outcomes given the side systems,
/// `H(P|side) = H(P) - chi(P, side)`.
pub fn cond_entropy_meas(povm: &Povm, rho: &QState) -> Result<EntropyValue> {
    let (probs, blocks, rho_side) = measured_ensemble(povm, rho)?;
    let mut h = entropy_of_probs(probs.iter()) - von_neumann_mat(&rho_side)?;
    for (j, p) in probs.iter().enumerate() {
        if *p > 1e-15 {
            h += p * von_neumann_mat(&blocks[j].unscale(*p))?;
        }
    }
    Ok(EntropyValue(h))
}

/// Fully quantum conditional entropy `S(rest | last) = S(rho) - S(rho_last)`.
///
/// Can be negative, hence a bare `f64`.
pub fn cond_entropy_vn(rho: &QState) -> Result<f64> {
    let n = rho.n_parts();
    if n < 2 {
        return Err(Error::DimMismatch(
            "conditional entropy needs at least two subsystems".into(),
        ));
    }
    let last = rho.marginal(&[n - 1])?;
    Ok(von_neumann(rho).bits() - von_neumann(&last).bits())
}

/// Classical conditional entropy `H(P|Q) = H(P,Q) - H(Q)` of two commuting
/// measurements: `p` on the leading group, `q` on the trailing group.
pub fn cond_entropy_classical(p: &Povm, q: &Povm, rho: &QState) -> Result<EntropyValue> {
    let dims = rho.dims();
    let total: usize = dims.iter().product();
    if p.dim()
        .checked_mul(q.dim())
        .map(|x| x != total)
        .unwrap_or(true)
    {
        return Err(Error::DimMismatch(format!(
            "POVM dimensions {}x{} do not factor the state dimension {total}",
            p.dim(),
            q.dim()
        )));
    }
    let mut joint = Vec::with_capacity(p.n() * q.n());
    let mut q_marg = vec![0.0f64; q.n()];
    for j in 0..p.n() {
        for k in 0..q.n() {
            let e = qmath::kron(p.element(j), q.element(k));
            let r = (e * rho.matrix()).trace().re.max(0.0);
            joint.push(r);
            q_marg[k] += r;
        }
    }
    Ok(EntropyValue(
        entropy_of_probs(joint.iter()) - entropy_of_probs(q_marg.iter()),
    ))
}

/// For a pure tripartite state, the measured conditional entropy on one wing
/// equals a relative entropy to the dephased state on the other:
/// `H(v|c) = S(rho_ab || sum_j [v_j] rho_ab [v_j])`.
///
/// Returns `(lhs, rhs)` computed by the two independent routes.
pub fn rel_entropy_identity(
    v: &BasisSet,
    rho_abc: &QState,
) -> Result<(EntropyValue, EntropyValue)> {
    let dims = rho_abc.dims();
    if dims.len() != 3 {
        return Err(Error::DimMismatch(format!(
            "need three subsystems, got {dims:?}"
        )));
    }
    if v.dim() != dims[0] {
        return Err(Error::DimMismatch(format!(
            "basis dimension {} but first subsystem has dimension {}",
            v.dim(),
            dims[0]
        )));
    }
    if !rho_abc.is_pure() {
        return Err(Error::NotPure(rho_abc.largest_eigenvalue()));
    }
    let rho_ac = rho_abc.marginal(&[0, 2])?;
    let lhs = cond_entropy_meas(&v.to_povm(), &rho_ac)?;
    let rho_ab = rho_abc.marginal(&[0, 1])?;
    let sigma = dephase_subsystem(rho_ab.matrix(), rho_ab.dims(), 0, v)?;
    let rhs = rel_entropy_mat(rho_ab.matrix(), &sigma)?;
    Ok((lhs, rhs))
}

/// Data-processed counterpart of [`rel_entropy_identity`] for a general POVM:
/// `H(P|b) >= S(rho_ac || sum_j (P_j (x) I) rho_ac (P_j (x) I))` with equality
/// for projective rank-one measurements on pure states.
///
/// Returns `(lhs, rhs)`; holds for any tripartite state.
pub fn rel_entropy_povm_bound(p: &Povm, rho_abc: &QState) -> Result<(EntropyValue, EntropyValue)> {
    let dims = rho_abc.dims();
    if dims.len() != 3 {
        return Err(Error::DimMismatch(format!(
            "need three subsystems, got {dims:?}"
        )));
    }
    if p.dim() != dims[0] {
        return Err(Error::DimMismatch(format!(
            "POVM dimension {} but first subsystem has dimension {}",
            p.dim(),
            dims[0]
        )));
    }
    let rho_ab = rho_abc.marginal(&[0, 1])?;
    let lhs = cond_entropy_meas(p, &rho_ab)?;
    let rho_ac = rho_abc.marginal(&[0, 2])?;
    let id_c = CMatrix::identity(dims[2], dims[2]);
    let mut sigma = CMatrix::zeros(rho_ac.dim(), rho_ac.dim());
    for j in 0..p.n() {
        let e = qmath::kron(p.element(j), &id_c);
        sigma += &e * rho_ac.matrix() * &e;
    }
    let rhs = rel_entropy_mat(rho_ac.matrix(), &qmath::hermitize(&sigma))?;
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::{cplx, kron, max_abs, CVector};
    use crate::states::{
        fourier_pair, gaussian_matrix, random_basis, random_povm, random_state, QState,
    };

    fn bell() -> QState {
        let mut psi = CVector::zeros(4);
        psi[0] = cplx(1.0, 0.0);
        psi[3] = cplx(1.0, 0.0);
        QState::from_ket(&psi, vec![2, 2]).unwrap()
    }

    #[test]
    fn shannon_examples() {
        assert!(shannon(&[0.5, 0.5]).unwrap().bits() - 1.0 == 0.0);
        assert!(shannon(&[1.0, 0.0]).unwrap().bits() == 0.0);
        let u = vec![0.25; 4];
        assert!((shannon(&u).unwrap().bits() - 2.0).abs() < 1e-15);
        assert!(matches!(
            shannon(&[0.7, 0.2]),
            Err(Error::NotDistribution(_))
        ));
        assert!(matches!(
            shannon(&[1.1, -0.1]),
            Err(Error::NotDistribution(_))
        ));
        // tiny negative roundoff is tolerated
        assert!(shannon(&[1.0 + 5e-13, -5e-13]).is_ok());
    }

    #[test]
    fn von_neumann_examples() {
        let pure = random_state(&[3], 1, 1).unwrap();
        assert!(von_neumann(&pure).bits().abs() < 1e-10);
        let mixed = QState::new(CMatrix::identity(4, 4).scale(0.25), vec![4]).unwrap();
        assert!((von_neumann(&mixed).bits() - 2.0).abs() < 1e-12);
        let a = random_state(&[2], 2, 2).unwrap();
        let b = random_state(&[3], 3, 3).unwrap();
        let ab = QState::new(kron(a.matrix(), b.matrix()), vec![2, 3]).unwrap();
        let sum = von_neumann(&a).bits() + von_neumann(&b).bits();
        assert!((von_neumann(&ab).bits() - sum).abs() < 1e-10);
    }

    #[test]
    fn relative_entropy_to_self_and_identity() {
        let rho = random_state(&[4], 4, 5).unwrap();
        let zero = relative_entropy(&rho, rho.matrix()).unwrap();
        assert!(zero.bits().abs() < 1e-10);
        let id4 = CMatrix::identity(4, 4).scale(0.25);
        let v = relative_entropy(&rho, &id4).unwrap().bits();
        let want = 2.0 - von_neumann(&rho).bits();
        assert!((v - want).abs() < 1e-10);
    }

    #[test]
    fn relative_entropy_scaling_rule() {
        let rho = random_state(&[3], 3, 7).unwrap();
        let sigma = random_state(&[3], 3, 8).unwrap();
        let base = relative_entropy(&rho, sigma.matrix()).unwrap().bits();
        for &beta in &[0.5f64, 2.0, 10.0] {
            let scaled = relative_entropy(&rho, &sigma.matrix().scale(beta))
                .unwrap()
                .bits();
            assert!((scaled - (base - beta.log2())).abs() < 1e-10);
        }
    }

    #[test]
    fn relative_entropy_klein_and_infinite() {
        for seed in 0..20 {
            let rho = random_state(&[3], 3, 100 + seed).unwrap();
            let sigma = random_state(&[3], 2, 200 + seed).unwrap();
            let v = relative_entropy(&rho, sigma.matrix()).unwrap();
            // full-rank rho vs rank-2 sigma leaks mass onto the null space
            assert!(!v.is_finite());
            let w = relative_entropy(&rho, rho.matrix()).unwrap();
            assert!(w.is_finite() && w.bits().abs() < 1e-9);
        }
        for seed in 0..20 {
            let rho = random_state(&[3], 2, 300 + seed).unwrap();
            let sigma = random_state(&[3], 3, 400 + seed).unwrap();
            let v = relative_entropy(&rho, sigma.matrix()).unwrap();
            assert!(v.is_finite());
            assert!(v.bits() > -1e-10, "Klein inequality, got {}", v.bits());
        }
    }

    #[test]
    fn relative_entropy_classical_diagonal() {
        let p = [0.6f64, 0.3, 0.1];
        let q = [0.2f64, 0.5, 0.3];
        let dp = CMatrix::from_fn(3, 3, |i, j| {
            if i == j {
                cplx(p[i], 0.0)
            } else {
                cplx(0.0, 0.0)
            }
        });
        let dq = CMatrix::from_fn(3, 3, |i, j| {
            if i == j {
                cplx(q[i], 0.0)
            } else {
                cplx(0.0, 0.0)
            }
        });
        let rho = QState::new(dp, vec![3]).unwrap();
        let got = relative_entropy(&rho, &dq).unwrap().bits();
        let want: f64 = p
            .iter()
            .zip(q.iter())
            .map(|(&a, &b)| a * (a.log2() - b.log2()))
            .sum();
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn relative_entropy_dominance() {
        // tau >= sigma implies S(rho||sigma) >= S(rho||tau)
        for seed in 0..10 {
            let rho = random_state(&[3], 3, 500 + seed).unwrap();
            let sigma = random_state(&[3], 3, 600 + seed).unwrap();
            let g = gaussian_matrix(3, 3, 700 + seed);
            let bump = &g * g.adjoint();
            let tau = sigma.matrix() + bump.unscale(bump.trace().re);
            let v_sigma = relative_entropy(&rho, sigma.matrix()).unwrap().bits();
            let v_tau = relative_entropy(&rho, &tau).unwrap().bits();
            assert!(v_sigma >= v_tau - 1e-10);
        }
    }

    #[test]
    fn relative_entropy_monotone_under_partial_trace() {
        for seed in 0..10 {
            let rho = random_state(&[2, 3], 6, 800 + seed).unwrap();
            let sigma = random_state(&[2, 3], 6, 900 + seed).unwrap();
            let full = relative_entropy(&rho, sigma.matrix()).unwrap().bits();
            let ra = rho.marginal(&[0]).unwrap();
            let sa = sigma.marginal(&[0]).unwrap();
            let reduced = relative_entropy(&ra, sa.matrix()).unwrap().bits();
            assert!(full >= reduced - 1e-9);
        }
    }

    #[test]
    fn holevo_of_classical_correlations() {
        // rho = sum_j p_j [z_j] (x) [z_j]: chi equals H(p), H(z|b) = 0
        let p = [0.3f64, 0.7];
        let (z, _) = fourier_pair(2).unwrap();
        let mut m = CMatrix::zeros(4, 4);
        for j in 0..2 {
            m += kron(&z.projector(j), &z.projector(j)).scale(p[j]);
        }
        let rho = QState::new(m, vec![2, 2]).unwrap();
        let chi = holevo(&z.to_povm(), &rho).unwrap().bits();
        let hp = shannon(&p).unwrap().bits();
        assert!((chi - hp).abs() < 1e-12);
        let h = cond_entropy_meas(&z.to_povm(), &rho).unwrap().bits();
        assert!(h.abs() < 1e-12);
    }

    #[test]
    fn holevo_vanishes_on_products() {
        let a = random_state(&[3], 3, 11).unwrap();
        let b = random_state(&[2], 2, 12).unwrap();
        let rho = QState::new(kron(a.matrix(), b.matrix()), vec![3, 2]).unwrap();
        let povm = random_povm(3, 4, 13).unwrap();
        assert!(holevo(&povm, &rho).unwrap().bits().abs() < 1e-10);
        let h = cond_entropy_meas(&povm, &rho).unwrap().bits();
        let probs: Vec<f64> = (0..4)
            .map(|j| (povm.element(j) * a.matrix()).trace().re)
            .collect();
        assert!((h - shannon(&probs).unwrap().bits()).abs() < 1e-10);
    }

    #[test]
    fn bell_state_conditional_entropies() {
        let rho = bell();
        let (z, x) = fourier_pair(2).unwrap();
        assert!(cond_entropy_meas(&z.to_povm(), &rho).unwrap().bits().abs() < 1e-10);
        assert!(cond_entropy_meas(&x.to_povm(), &rho).unwrap().bits().abs() < 1e-10);
        assert!((cond_entropy_vn(&rho).unwrap() + 1.0).abs() < 1e-10);
    }

    #[test]
    fn vn_conditional_on_product_is_marginal_entropy() {
        let a = random_state(&[3], 2, 21).unwrap();
        let b = random_state(&[2], 2, 22).unwrap();
        let rho = QState::new(kron(a.matrix(), b.matrix()), vec![3, 2]).unwrap();
        let got = cond_entropy_vn(&rho).unwrap();
        assert!((got - von_neumann(&a).bits()).abs() < 1e-10);
    }

    #[test]
    fn classical_conditional_from_joint_table() {
        let rho = random_state(&[2, 2], 4, 31).unwrap();
        let (z, _) = fourier_pair(2).unwrap();
        let zp = z.to_povm();
        let got = cond_entropy_classical(&zp, &zp, &rho).unwrap().bits();
        // oracle: explicit joint distribution from diagonal entries
        let m = rho.matrix();
        let joint = [m[(0, 0)].re, m[(1, 1)].re, m[(2, 2)].re, m[(3, 3)].re];
        let qm = [joint[0] + joint[2], joint[1] + joint[3]];
        let want = shannon(&[joint[0], joint[1], joint[2], joint[3]])
            .unwrap()
            .bits()
            - shannon(&qm).unwrap().bits();
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn measured_conditional_never_exceeds_classical() {
        // conditioning on the quantum side is at least as informative as on
        // any measurement of it
        for seed in 0..5 {
            let rho = random_state(&[2, 2], 4, 1000 + seed).unwrap();
            let (z, x) = fourier_pair(2).unwrap();
            let hq = cond_entropy_meas(&z.to_povm(), &rho).unwrap().bits();
            for b in [&z, &x] {
                let hc = cond_entropy_classical(&z.to_povm(), &b.to_povm(), &rho)
                    .unwrap()
                    .bits();
                assert!(hq <= hc + 1e-10);
            }
        }
    }

    #[test]
    fn identity_between_conditional_and_relative_entropy() {
        for seed in 0..8 {
            let rho = random_state(&[3, 2, 2], 1, 1100 + seed).unwrap();
            let v = random_basis(3, 1200 + seed).unwrap();
            let (lhs, rhs) = rel_entropy_identity(&v, &rho).unwrap();
            assert!(
                (lhs.bits() - rhs.bits()).abs() < 1e-8,
                "seed {seed}: {} vs {}",
                lhs.bits(),
                rhs.bits()
            );
        }
        let mixed = random_state(&[2, 2, 2], 4, 9).unwrap();
        let v = random_basis(2, 10).unwrap();
        assert!(matches!(
            rel_entropy_identity(&v, &mixed),
            Err(Error::NotPure(_))
        ));
    }

    #[test]
    fn povm_relative_entropy_bound() {
        for seed in 0..6 {
            let rho = random_state(&[2, 2, 2], 3, 1300 + seed).unwrap();
            let povm = random_povm(2, 3, 1400 + seed).unwrap();
            let (lhs, rhs) = rel_entropy_povm_bound(&povm, &rho).unwrap();
            assert!(lhs.bits() >= rhs.bits() - 1e-9, "seed {seed}");
        }
        // equality for a rank-one projective measurement on a pure state
        for seed in 0..6 {
            let rho = random_state(&[3, 2, 2], 1, 1500 + seed).unwrap();
            let v = random_basis(3, 1600 + seed).unwrap();
            let (lhs, rhs) = rel_entropy_povm_bound(&v.to_povm(), &rho).unwrap();
            assert!((lhs.bits() - rhs.bits()).abs() < 1e-8, "seed {seed}");
        }
    }

    #[test]
    fn ensemble_split_rejects_mismatch() {
        let rho = random_state(&[2, 2], 4, 41).unwrap();
        let povm = random_povm(3, 3, 42).unwrap();
        assert!(matches!(
            cond_entropy_meas(&povm, &rho),
            Err(Error::DimMismatch(_))
        ));
    }

    #[test]
    fn grouped_prefix_measurement() {
        // POVM on C^6 matches the (2,3) leading group of a (2,3,2) state
        let rho = random_state(&[2, 3, 2], 6, 51).unwrap();
        let povm = random_povm(6, 4, 52).unwrap();
        let grouped = QState::new(rho.matrix().clone(), vec![6, 2]).unwrap();
        let a = cond_entropy_meas(&povm, &rho).unwrap().bits();
        let b = cond_entropy_meas(&povm, &grouped).unwrap().bits();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn entropy_value_display() {
        assert_eq!(EntropyValue::from_bits(1.5).to_string(), "1.5");
        assert_eq!(EntropyValue::INFINITE.to_string(), "inf");
        assert!(max_abs(&CMatrix::zeros(1, 1)) == 0.0);
    }
}
