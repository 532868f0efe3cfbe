//! Uncertainty relations: overlap bounds, relation evaluation, and the
//! data-processing chain connecting the two conditional entropies.
//!
//! Every relation is graded as a report with named left-hand terms, the
//! right-hand bound, the gap `lhs - rhs`, and a tri-state verdict.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize, Serializer};

use crate::entropy::{cond_entropy_meas, cond_entropy_vn, rel_entropy_mat, shannon, von_neumann};
use crate::error::{Error, Result};
use crate::qmath::{self, gcd, kron, sup_norm, CMatrix};
use crate::states::{
    dephase_subsystem, fourier_pair, qubit_mub_triple, tensor_basis, BasisSet, Povm, QState,
};
use crate::tol;

/// Identifiers of the supported uncertainty relations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RelationId {
    /// `H(v|c) + H(w|b) >= log2 d` for mutually unbiased `v`, `w` on a
    /// tripartite state.
    Eq3,
    /// `H(v|c) + H(w|b) >= -log2 max |<v_j|w_k>|^2` for any bases.
    Eq10,
    /// `H(P|b) + H(Q|c) >= -log2 max ||sqrt(Q_k) sqrt(P_j)||^2` for POVMs.
    Eq12,
    /// `H(P|b) >= -log2 max_j ||P_j||` for a single POVM on a bipartite state.
    Eq13,
    /// Eq12 sharpened by a projector containing the support of `rho_a`.
    Eq14,
    /// Eq13 sharpened by a projector containing the support of `rho_a`.
    Eq15,
    /// `H(P|b) + H(N|b) >= -log2 r(P,N;Pi) + S(a|b)` for rank-one `N` on a
    /// pure tripartite state, both entropies conditioned on the same wing.
    Eq16,
    /// `H(x) + H(z) >= log2 d` for the Fourier pair, unconditioned.
    Eq20,
    /// `H(x) + H(z) >= log2 d + S(rho)`.
    Eq21,
    /// `H(x) + H(z|b) >= log2 d + S(a|b)` on a bipartite state.
    Eq22,
    /// `H(x|b) + H(z|b) >= log2 d + S(a|b)`, both conditioned on the same wing.
    Eq23,
    /// `H(x) + H(y) + H(z) >= 2 + S(rho)` for a single qubit.
    Eq24,
    /// `H(x1*..*xn) + H(z1*..*zn|b) >= log2 d + S(a|b)` for pairwise coprime
    /// subsystem dimensions.
    Eq26,
}

impl RelationId {
    pub const ALL: [RelationId; 13] = [
        RelationId::Eq3,
        RelationId::Eq10,
        RelationId::Eq12,
        RelationId::Eq13,
        RelationId::Eq14,
        RelationId::Eq15,
        RelationId::Eq16,
        RelationId::Eq20,
        RelationId::Eq21,
        RelationId::Eq22,
        RelationId::Eq23,
        RelationId::Eq24,
        RelationId::Eq26,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            RelationId::Eq3 => "EQ3",
            RelationId::Eq10 => "EQ10",
            RelationId::Eq12 => "EQ12",
            RelationId::Eq13 => "EQ13",
            RelationId::Eq14 => "EQ14",
            RelationId::Eq15 => "EQ15",
            RelationId::Eq16 => "EQ16",
            RelationId::Eq20 => "EQ20",
            RelationId::Eq21 => "EQ21",
            RelationId::Eq22 => "EQ22",
            RelationId::Eq23 => "EQ23",
            RelationId::Eq24 => "EQ24",
            RelationId::Eq26 => "EQ26",
        }
    }
}

impl fmt::Display for RelationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RelationId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let up = s.trim().to_ascii_uppercase();
        RelationId::ALL
            .iter()
            .find(|r| r.as_str() == up)
            .copied()
            .ok_or_else(|| Error::UnsupportedRelation(s.to_string()))
    }
}

impl Serialize for RelationId {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for RelationId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A maximal squared overlap `r` in `(0, 1]` with its bound `-log2 r` and the
/// lexicographically first maximising index pair.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct OverlapBound {
    pub value: f64,
    pub neg_log: f64,
    pub arg_max: (usize, usize),
}

impl OverlapBound {
    /// Scans the overlap grid; ties within a relative `1e-9` of the maximum
    /// resolve to the lexicographically first pair.
    fn from_grid<F: Fn(usize, usize) -> f64>(nj: usize, nk: usize, f: F) -> Self {
        let mut grid = vec![0.0f64; nj * nk];
        let mut value = 0.0f64;
        for j in 0..nj {
            for k in 0..nk {
                let v = f(j, k);
                grid[j * nk + k] = v;
                value = value.max(v);
            }
        }
        let cutoff = value * (1.0 - 1e-9);
        let flat = grid.iter().position(|&v| v >= cutoff).unwrap_or_default();
        let arg_max = (flat / nk, flat % nk);
        let value = value.clamp(0.0, 1.0 + 1e-12).min(1.0);
        Self {
            value,
            neg_log: -value.log2(),
            arg_max,
        }
    }
}

/// `r(v, w) = max_{j,k} |<v_j|w_k>|^2` for two orthonormal bases.
pub fn overlap_r(v: &BasisSet, w: &BasisSet) -> Result<OverlapBound> {
    if v.dim() != w.dim() {
        return Err(Error::DimMismatch(format!(
            "bases have dimensions {} and {}",
            v.dim(),
            w.dim()
        )));
    }
    let o = v.kets().adjoint() * w.kets();
    Ok(OverlapBound::from_grid(v.dim(), w.dim(), |j, k| {
        o[(j, k)].norm_sqr()
    }))
}

/// `r(P, Q) = max_{j,k} ||sqrt(Q_k) sqrt(P_j)||^2` for two POVMs.
pub fn r_povm(p: &Povm, q: &Povm) -> Result<OverlapBound> {
    if p.dim() != q.dim() {
        return Err(Error::DimMismatch(format!(
            "POVMs have dimensions {} and {}",
            p.dim(),
            q.dim()
        )));
    }
    let sp = p.sqrted();
    let sq = q.sqrted();
    Ok(OverlapBound::from_grid(p.n(), q.n(), |j, k| {
        let prod = &sq[k] * &sp[j];
        let n = sup_norm(&prod);
        n * n
    }))
}

pub(crate) fn check_projector(pi: &CMatrix) -> Result<()> {
    if pi.nrows() != pi.ncols() || pi.is_empty() {
        return Err(Error::DimMismatch(format!(
            "projector is {}x{}",
            pi.nrows(),
            pi.ncols()
        )));
    }
    let herm = qmath::herm_defect(pi);
    let idem = qmath::max_abs(&(pi * pi - pi));
    let defect = herm.max(idem);
    if defect > 1e-10 * (1.0 + qmath::max_abs(pi)) {
        return Err(Error::NotProjector(defect));
    }
    Ok(())
}

/// `r(P, Q; Pi) = max_{j,k} ||sqrt(Q_k) Pi sqrt(P_j)||^2`.
pub fn r_projected(p: &Povm, q: &Povm, pi: &CMatrix) -> Result<OverlapBound> {
    if p.dim() != q.dim() || pi.nrows() != p.dim() {
        return Err(Error::DimMismatch(format!(
            "POVM dimensions {} / {} and projector dimension {}",
            p.dim(),
            q.dim(),
            pi.nrows()
        )));
    }
    check_projector(pi)?;
    let sp = p.sqrted();
    let sq = q.sqrted();
    Ok(OverlapBound::from_grid(p.n(), q.n(), |j, k| {
        let prod = &sq[k] * pi * &sp[j];
        let n = sup_norm(&prod);
        n * n
    }))
}

/// `max_j ||Pi sqrt(P_j)||^2`, the single-measurement overlap; monotone
/// non-decreasing as `Pi` grows.
pub fn single_povm_bound(p: &Povm, pi: &CMatrix) -> Result<OverlapBound> {
    if pi.nrows() != p.dim() {
        return Err(Error::DimMismatch(format!(
            "projector dimension {} but POVM has dimension {}",
            pi.nrows(),
            p.dim()
        )));
    }
    check_projector(pi)?;
    let sp = p.sqrted();
    Ok(OverlapBound::from_grid(p.n(), 1, |j, _| {
        let prod = pi * &sp[j];
        let n = sup_norm(&prod);
        n * n
    }))
}

/// Verdict of a relation check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Violated,
    Equality,
}

/// Grades a gap: violated below `-1e-9`, equality within `tol_eq`, else holds.
pub fn verdict(gap: f64, tol_eq: f64) -> Verdict {
    if gap < -tol::VIOLATION {
        Verdict::Violated
    } else if gap.abs() <= tol_eq {
        Verdict::Equality
    } else {
        Verdict::Holds
    }
}

/// Outcome of evaluating one uncertainty relation on one state.
#[derive(Clone, Debug, Serialize)]
pub struct UncertaintyReport {
    pub relation: RelationId,
    /// Named left-hand entropy terms, in display order.
    pub lhs_terms: Vec<(String, f64)>,
    pub rhs: f64,
    /// `sum(lhs) - rhs`.
    pub gap: f64,
    pub holds: Verdict,
}

impl UncertaintyReport {
    fn assemble(
        relation: RelationId,
        lhs_terms: Vec<(String, f64)>,
        rhs: f64,
        tol_eq: f64,
    ) -> Self {
        let gap = lhs_terms.iter().map(|(_, v)| v).sum::<f64>() - rhs;
        Self {
            relation,
            lhs_terms,
            rhs,
            gap,
            holds: verdict(gap, tol_eq),
        }
    }

    pub fn lhs_total(&self) -> f64 {
        self.lhs_terms.iter().map(|(_, v)| v).sum()
    }
}

/// Measurement inputs for [`eval_relation`]; relations that construct their
/// own canonical bases take an empty set.
#[derive(Default)]
pub struct RelationInputs<'a> {
    pub bases: Vec<&'a BasisSet>,
    pub povms: Vec<&'a Povm>,
    pub projector: Option<&'a CMatrix>,
}

impl<'a> RelationInputs<'a> {
    pub fn with_bases(bases: Vec<&'a BasisSet>) -> Self {
        Self {
            bases,
            ..Default::default()
        }
    }

    pub fn with_povms(povms: Vec<&'a Povm>) -> Self {
        Self {
            povms,
            ..Default::default()
        }
    }
}

fn expect_parts(rho: &QState, n: usize, relation: RelationId) -> Result<()> {
    if rho.n_parts() != n {
        return Err(Error::ArityMismatch(format!(
            "{relation} needs {n} subsystems, state has {}",
            rho.n_parts()
        )));
    }
    Ok(())
}

fn expect_inputs(
    relation: RelationId,
    inputs: &RelationInputs,
    bases: usize,
    povms: usize,
    projector: bool,
) -> Result<()> {
    if inputs.bases.len() != bases || inputs.povms.len() != povms {
        return Err(Error::ArityMismatch(format!(
            "{relation} takes {bases} bases and {povms} POVMs, got {} and {}",
            inputs.bases.len(),
            inputs.povms.len()
        )));
    }
    if projector != inputs.projector.is_some() {
        return Err(Error::ArityMismatch(format!(
            "{relation} {} a projector",
            if projector {
                "requires"
            } else {
                "does not take"
            }
        )));
    }
    Ok(())
}

fn check_support_contained(rho_a: &QState, pi: &CMatrix) -> Result<()> {
    // tr(rho (1 - Pi)) is the support mass outside the projector
    let leak = (rho_a.matrix() - pi * rho_a.matrix() * pi).trace().re;
    if leak.abs() > 1e-9 {
        return Err(Error::SupportNotContained(leak));
    }
    Ok(())
}

pub(crate) fn basis_probs(b: &BasisSet, rho: &CMatrix) -> Vec<f64> {
    let rot = b.kets().adjoint() * rho * b.kets();
    (0..b.dim()).map(|j| rot[(j, j)].re.max(0.0)).collect()
}

/// Evaluates a relation with the default equality band.
pub fn eval_relation(
    relation: RelationId,
    rho: &QState,
    inputs: &RelationInputs,
) -> Result<UncertaintyReport> {
    eval_relation_with_tol(relation, rho, inputs, tol::EQ)
}

/// Evaluates a relation, grading equality against `tol_eq`.
pub fn eval_relation_with_tol(
    relation: RelationId,
    rho: &QState,
    inputs: &RelationInputs,
    tol_eq: f64,
) -> Result<UncertaintyReport> {
    match relation {
        RelationId::Eq3 | RelationId::Eq10 => {
            expect_parts(rho, 3, relation)?;
            expect_inputs(relation, inputs, 2, 0, false)?;
            let (v, w) = (inputs.bases[0], inputs.bases[1]);
            let d = rho.dims()[0];
            if v.dim() != d || w.dim() != d {
                return Err(Error::DimMismatch(format!(
                    "bases of dimension {}/{} on a subsystem of dimension {d}",
                    v.dim(),
                    w.dim()
                )));
            }
            let rhs = match relation {
                RelationId::Eq3 => {
                    let defect = v.unbiasedness_defect(w);
                    if defect > tol::MUB {
                        return Err(Error::NotMub(defect));
                    }
                    (d as f64).log2()
                }
                _ => overlap_r(v, w)?.neg_log,
            };
            let labels = rho.labels();
            let h_vc = cond_entropy_meas(&v.to_povm(), &rho.marginal(&[0, 2])?)?.bits();
            let h_wb = cond_entropy_meas(&w.to_povm(), &rho.marginal(&[0, 1])?)?.bits();
            Ok(UncertaintyReport::assemble(
                relation,
                vec![
                    (format!("H({}|{})", v.name(), labels[2]), h_vc),
                    (format!("H({}|{})", w.name(), labels[1]), h_wb),
                ],
                rhs,
                tol_eq,
            ))
        }
        RelationId::Eq12 | RelationId::Eq14 => {
            expect_parts(rho, 3, relation)?;
            let needs_pi = relation == RelationId::Eq14;
            expect_inputs(relation, inputs, 0, 2, needs_pi)?;
            let (p, q) = (inputs.povms[0], inputs.povms[1]);
            let d = rho.dims()[0];
            if p.dim() != d || q.dim() != d {
                return Err(Error::DimMismatch(format!(
                    "POVMs of dimension {}/{} on a subsystem of dimension {d}",
                    p.dim(),
                    q.dim()
                )));
            }
            let rhs = if needs_pi {
                let pi = inputs.projector.unwrap();
                check_support_contained(&rho.marginal(&[0])?, pi)?;
                r_projected(p, q, pi)?.neg_log
            } else {
                r_povm(p, q)?.neg_log
            };
            let labels = rho.labels();
            let h_pb = cond_entropy_meas(p, &rho.marginal(&[0, 1])?)?.bits();
            let h_qc = cond_entropy_meas(q, &rho.marginal(&[0, 2])?)?.bits();
            Ok(UncertaintyReport::assemble(
                relation,
                vec![
                    (format!("H(P|{})", labels[1]), h_pb),
                    (format!("H(Q|{})", labels[2]), h_qc),
                ],
                rhs,
                tol_eq,
            ))
        }
        RelationId::Eq13 | RelationId::Eq15 => {
            expect_parts(rho, 2, relation)?;
            let needs_pi = relation == RelationId::Eq15;
            expect_inputs(relation, inputs, 0, 1, needs_pi)?;
            let p = inputs.povms[0];
            let d = rho.dims()[0];
            if p.dim() != d {
                return Err(Error::DimMismatch(format!(
                    "POVM of dimension {} on a subsystem of dimension {d}",
                    p.dim()
                )));
            }
            let pi_owned;
            let pi: &CMatrix = if needs_pi {
                let pi = inputs.projector.unwrap();
                check_support_contained(&rho.marginal(&[0])?, pi)?;
                pi
            } else {
                pi_owned = CMatrix::identity(d, d);
                &pi_owned
            };
            let rhs = single_povm_bound(p, pi)?.neg_log;
            let labels = rho.labels();
            let h_pb = cond_entropy_meas(p, rho)?.bits();
            Ok(UncertaintyReport::assemble(
                relation,
                vec![(format!("H(P|{})", labels[1]), h_pb)],
                rhs,
                tol_eq,
            ))
        }
        RelationId::Eq16 => {
            expect_parts(rho, 3, relation)?;
            expect_inputs(relation, inputs, 0, 2, true)?;
            if !rho.is_pure() {
                return Err(Error::NotPure(rho.largest_eigenvalue()));
            }
            let (p, n) = (inputs.povms[0], inputs.povms[1]);
            let d = rho.dims()[0];
            if p.dim() != d || n.dim() != d {
                return Err(Error::DimMismatch(format!(
                    "POVMs of dimension {}/{} on a subsystem of dimension {d}",
                    p.dim(),
                    n.dim()
                )));
            }
            if !n.is_rank1() {
                return Err(Error::ArityMismatch(format!(
                    "{relation} needs a rank-one second POVM"
                )));
            }
            let pi = inputs.projector.unwrap();
            check_support_contained(&rho.marginal(&[0])?, pi)?;
            let rho_ab = rho.marginal(&[0, 1])?;
            let labels = rho.labels();
            let h_pb = cond_entropy_meas(p, &rho_ab)?.bits();
            let h_nb = cond_entropy_meas(n, &rho_ab)?.bits();
            let rhs = r_projected(p, n, pi)?.neg_log + cond_entropy_vn(&rho_ab)?;
            Ok(UncertaintyReport::assemble(
                relation,
                vec![
                    (format!("H(P|{})", labels[1]), h_pb),
                    (format!("H(N|{})", labels[1]), h_nb),
                ],
                rhs,
                tol_eq,
            ))
        }
        RelationId::Eq20 | RelationId::Eq21 => {
            expect_parts(rho, 1, relation)?;
            expect_inputs(relation, inputs, 0, 0, false)?;
            let d = rho.dims()[0];
            let (z, x) = fourier_pair(d)?;
            let hx = shannon(&basis_probs(&x, rho.matrix()))?.bits();
            let hz = shannon(&basis_probs(&z, rho.matrix()))?.bits();
            let rhs = match relation {
                RelationId::Eq20 => (d as f64).log2(),
                _ => (d as f64).log2() + von_neumann(rho).bits(),
            };
            Ok(UncertaintyReport::assemble(
                relation,
                vec![("H(x)".into(), hx), ("H(z)".into(), hz)],
                rhs,
                tol_eq,
            ))
        }
        RelationId::Eq22 | RelationId::Eq23 => {
            expect_parts(rho, 2, relation)?;
            expect_inputs(relation, inputs, 0, 0, false)?;
            let d = rho.dims()[0];
            let (z, x) = fourier_pair(d)?;
            let labels = rho.labels();
            let rho_a = rho.marginal(&[0])?;
            let hz = cond_entropy_meas(&z.to_povm(), rho)?.bits();
            let (hx_name, hx) = match relation {
                RelationId::Eq22 => (
                    "H(x)".to_string(),
                    shannon(&basis_probs(&x, rho_a.matrix()))?.bits(),
                ),
                _ => (
                    format!("H(x|{})", labels[1]),
                    cond_entropy_meas(&x.to_povm(), rho)?.bits(),
                ),
            };
            let rhs = (d as f64).log2() + cond_entropy_vn(rho)?;
            Ok(UncertaintyReport::assemble(
                relation,
                vec![(hx_name, hx), (format!("H(z|{})", labels[1]), hz)],
                rhs,
                tol_eq,
            ))
        }
        RelationId::Eq24 => {
            expect_parts(rho, 1, relation)?;
            expect_inputs(relation, inputs, 0, 0, false)?;
            if rho.dims() != [2] {
                return Err(Error::ArityMismatch(format!(
                    "{relation} needs a single qubit, got dims {:?}",
                    rho.dims()
                )));
            }
            let (x, y, z) = qubit_mub_triple();
            let hx = shannon(&basis_probs(&x, rho.matrix()))?.bits();
            let hy = shannon(&basis_probs(&y, rho.matrix()))?.bits();
            let hz = shannon(&basis_probs(&z, rho.matrix()))?.bits();
            let rhs = 2.0 + von_neumann(rho).bits();
            Ok(UncertaintyReport::assemble(
                relation,
                vec![
                    ("H(x)".into(), hx),
                    ("H(y)".into(), hy),
                    ("H(z)".into(), hz),
                ],
                rhs,
                tol_eq,
            ))
        }
        RelationId::Eq26 => {
            if rho.n_parts() < 2 {
                return Err(Error::ArityMismatch(format!(
                    "{relation} needs at least two subsystems (a parts plus the side)"
                )));
            }
            expect_inputs(relation, inputs, 0, 0, false)?;
            let parts = &rho.dims()[..rho.n_parts() - 1];
            for i in 0..parts.len() {
                for j in i + 1..parts.len() {
                    if gcd(parts[i], parts[j]) != 1 {
                        return Err(Error::NotCoprime(parts[i], parts[j]));
                    }
                }
            }
            let pairs: Vec<(BasisSet, BasisSet)> = parts
                .iter()
                .map(|&d| fourier_pair(d))
                .collect::<Result<_>>()?;
            let zs: Vec<&BasisSet> = pairs.iter().map(|(z, _)| z).collect();
            let xs: Vec<&BasisSet> = pairs.iter().map(|(_, x)| x).collect();
            let z = tensor_basis(&zs)?;
            let x = tensor_basis(&xs)?;
            let d: usize = parts.iter().product();
            let a_keep: Vec<usize> = (0..parts.len()).collect();
            let rho_a = rho.marginal(&a_keep)?;
            let hx = shannon(&basis_probs(&x, rho_a.matrix()))?.bits();
            // regroup so the z POVM prefix-matches the full a group
            let grouped =
                QState::new(rho.matrix().clone(), vec![d, rho.dims()[rho.n_parts() - 1]])?;
            let hz = cond_entropy_meas(&z.to_povm(), &grouped)?.bits();
            let rhs = (d as f64).log2() + cond_entropy_vn(&grouped)?;
            let side = rho.labels().last().cloned().unwrap_or_default();
            Ok(UncertaintyReport::assemble(
                relation,
                vec![
                    (format!("H({})", x.name()), hx),
                    (format!("H({}|{})", z.name(), side), hz),
                ],
                rhs,
                tol_eq,
            ))
        }
    }
}

/// Certified entanglement witness from measured uncertainties:
/// `-S(a|b) >= log2 d - H(x|b) - H(z|b)`. Positive values certify that the
/// conditional entropy is negative.
pub fn witness_bound(h_xb: f64, h_zb: f64, d: usize) -> f64 {
    (d as f64).log2() - h_xb - h_zb
}

/// The stepwise quantities in the data-processing proof of the conditional
/// uncertainty relation for a pure tripartite state and a mutually unbiased
/// pair `(v, w)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DpTrace {
    /// `S(rho_ab || sum_j [v_j] rho_ab [v_j]) = H(v|c)`.
    pub step5: f64,
    /// After dephasing both arguments in `w`.
    pub step6: f64,
    /// Second argument relaxed to `(I/d) (x) rho_b`.
    pub step7: f64,
    /// Same quantity written as `log2 d + S(E_w(rho_ab) || I (x) rho_b)`.
    pub step8_form: f64,
    /// `log2 d - H(w|b)`, the closed form the chain collapses to.
    pub step9_equiv: f64,
}

/// Computes the five stages of the chain
/// `H(v|c) >= ... >= log2 d - H(w|b)` by their definitions.
///
/// Requires a pure tripartite state and mutually unbiased `v`, `w`.
pub fn dp_trace(rho_abc: &QState, v: &BasisSet, w: &BasisSet) -> Result<DpTrace> {
    if rho_abc.n_parts() != 3 {
        return Err(Error::ArityMismatch(format!(
            "trace chain needs 3 subsystems, state has {}",
            rho_abc.n_parts()
        )));
    }
    let d = rho_abc.dims()[0];
    if v.dim() != d || w.dim() != d {
        return Err(Error::DimMismatch(format!(
            "bases of dimension {}/{} on a subsystem of dimension {d}",
            v.dim(),
            w.dim()
        )));
    }
    if !rho_abc.is_pure() {
        return Err(Error::NotPure(rho_abc.largest_eigenvalue()));
    }
    let defect = v.unbiasedness_defect(w);
    if defect > tol::MUB {
        return Err(Error::NotMub(defect));
    }
    let rho_ab = rho_abc.marginal(&[0, 1])?;
    let dims = rho_ab.dims();
    let m = rho_ab.matrix();
    let sigma5 = dephase_subsystem(m, dims, 0, v)?;
    let step5 = rel_entropy_mat(m, &sigma5)?.bits();
    let ew_rho = dephase_subsystem(m, dims, 0, w)?;
    let ew_sigma5 = dephase_subsystem(&sigma5, dims, 0, w)?;
    let step6 = rel_entropy_mat(&ew_rho, &ew_sigma5)?.bits();
    let rho_b = rho_ab.marginal(&[1])?;
    let id_a = CMatrix::identity(d, d);
    let uniform = kron(&id_a.scale(1.0 / d as f64), rho_b.matrix());
    let step7 = rel_entropy_mat(&ew_rho, &uniform)?.bits();
    let wide = kron(&id_a, rho_b.matrix());
    let step8_form = (d as f64).log2() + rel_entropy_mat(&ew_rho, &wide)?.bits();
    let h_wb = cond_entropy_meas(&w.to_povm(), &rho_ab)?.bits();
    let step9_equiv = (d as f64).log2() - h_wb;
    Ok(DpTrace {
        step5,
        step6,
        step7,
        step8_form,
        step9_equiv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::{cplx, ket_proj, support_projector, CVector};
    use crate::states::{
        fourier_unbiased_ket, random_basis, random_povm, random_rank1_povm, random_state,
    };

    fn rotated_mub_pair(d: usize, seed: u64) -> (BasisSet, BasisSet) {
        let (z, x) = fourier_pair(d).unwrap();
        let u = random_basis(d, seed).unwrap();
        let v = BasisSet::new(u.kets() * z.kets(), "v").unwrap();
        let w = BasisSet::new(u.kets() * x.kets(), "w").unwrap();
        (v, w)
    }

    #[test]
    fn overlap_of_fourier_pair() {
        for d in 2..=5 {
            let (z, x) = fourier_pair(d).unwrap();
            let r = overlap_r(&z, &x).unwrap();
            assert!((r.value - 1.0 / d as f64).abs() < 1e-12);
            assert!((r.neg_log - (d as f64).log2()).abs() < 1e-12);
            assert_eq!(r.arg_max, (0, 0));
            let same = overlap_r(&z, &z).unwrap();
            assert!(same.value == 1.0 && same.neg_log == 0.0);
        }
    }

    #[test]
    fn povm_overlap_matches_basis_overlap() {
        for seed in 0..5 {
            let v = random_basis(3, 40 + seed).unwrap();
            let w = random_basis(3, 50 + seed).unwrap();
            let rb = overlap_r(&v, &w).unwrap();
            let rp = r_povm(&v.to_povm(), &w.to_povm()).unwrap();
            assert!((rb.value - rp.value).abs() < 1e-10);
            assert_eq!(rb.arg_max, rp.arg_max);
        }
    }

    #[test]
    fn unbiased_projector_squares_the_bound() {
        // rank-one projector onto a vector unbiased to both bases:
        // r drops from 1/d to 1/d^2, the single-POVM overlap to 1/d
        for &d in &[2usize, 3, 5] {
            let (z, x) = fourier_pair(d).unwrap();
            let pi = ket_proj(&fourier_unbiased_ket(d).unwrap());
            let r = r_projected(&z.to_povm(), &x.to_povm(), &pi).unwrap();
            assert!(
                (r.value - 1.0 / (d * d) as f64).abs() < 1e-12,
                "d={d}: {}",
                r.value
            );
            let s = single_povm_bound(&z.to_povm(), &pi).unwrap();
            assert!((s.value - 1.0 / d as f64).abs() < 1e-12);
            assert!((s.neg_log - (d as f64).log2()).abs() < 1e-12);
        }
    }

    #[test]
    fn qutrit_halving_example() {
        // v computational, w = {|0>, (|1>+-|2>)/sqrt2}: r = 1 unprojected,
        // r = 1/2 on the support projector of span{|1>,|2>}
        let r = 1.0 / 2.0f64.sqrt();
        let (v, _) = fourier_pair(3).unwrap();
        let mut kets = CMatrix::zeros(3, 3);
        kets[(0, 0)] = cplx(1.0, 0.0);
        kets[(1, 1)] = cplx(r, 0.0);
        kets[(2, 1)] = cplx(r, 0.0);
        kets[(1, 2)] = cplx(r, 0.0);
        kets[(2, 2)] = cplx(-r, 0.0);
        let w = BasisSet::new(kets, "w").unwrap();
        let plain = overlap_r(&v, &w).unwrap();
        assert!((plain.value - 1.0).abs() < 1e-14);
        assert!(plain.neg_log.abs() < 1e-14);
        let mut pi = CMatrix::zeros(3, 3);
        pi[(1, 1)] = cplx(1.0, 0.0);
        pi[(2, 2)] = cplx(1.0, 0.0);
        let proj = r_projected(&v.to_povm(), &w.to_povm(), &pi).unwrap();
        assert!((proj.value - 0.5).abs() < 1e-12);
        assert!((proj.neg_log - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projector_validation() {
        let mut not_proj = CMatrix::identity(2, 2);
        not_proj[(0, 0)] = cplx(0.5, 0.0);
        let (z, x) = fourier_pair(2).unwrap();
        assert!(matches!(
            r_projected(&z.to_povm(), &x.to_povm(), &not_proj),
            Err(Error::NotProjector(_))
        ));
    }

    #[test]
    fn verdict_bands() {
        assert_eq!(verdict(0.3, tol::EQ), Verdict::Holds);
        assert_eq!(verdict(0.0, tol::EQ), Verdict::Equality);
        assert_eq!(verdict(-5e-10, tol::EQ), Verdict::Equality);
        assert_eq!(verdict(5e-9, tol::EQ), Verdict::Equality);
        assert_eq!(verdict(-2e-9, tol::EQ), Verdict::Violated);
        assert_eq!(verdict(-0.5, tol::EQ), Verdict::Violated);
    }

    #[test]
    fn relation_id_round_trip() {
        for r in RelationId::ALL {
            let s = r.to_string();
            assert_eq!(s.parse::<RelationId>().unwrap(), r);
            assert_eq!(s.to_lowercase().parse::<RelationId>().unwrap(), r);
        }
        assert!("EQ99".parse::<RelationId>().is_err());
        let j = serde_json::to_string(&RelationId::Eq10).unwrap();
        assert_eq!(j, "\"EQ10\"");
        let back: RelationId = serde_json::from_str(&j).unwrap();
        assert_eq!(back, RelationId::Eq10);
    }

    #[test]
    fn eq3_mub_relation_on_random_states() {
        for seed in 0..10 {
            let rho = random_state(&[3, 2, 2], 2, 2000 + seed).unwrap();
            let (v, w) = rotated_mub_pair(3, 2100 + seed);
            let rep = eval_relation(
                RelationId::Eq3,
                &rho,
                &RelationInputs::with_bases(vec![&v, &w]),
            )
            .unwrap();
            assert!(rep.gap >= -1e-9, "seed {seed}: gap {}", rep.gap);
            assert!((rep.rhs - 3.0f64.log2()).abs() < 1e-14);
            assert_eq!(rep.lhs_terms[0].0, "H(v|c)");
            assert_eq!(rep.lhs_terms[1].0, "H(w|b)");
            assert!((rep.lhs_total() - rep.rhs - rep.gap).abs() < 1e-12);
        }
    }

    #[test]
    fn eq3_rejects_biased_bases() {
        let rho = random_state(&[3, 2, 2], 2, 1).unwrap();
        let v = random_basis(3, 2).unwrap();
        let w = random_basis(3, 3).unwrap();
        assert!(matches!(
            eval_relation(
                RelationId::Eq3,
                &rho,
                &RelationInputs::with_bases(vec![&v, &w])
            ),
            Err(Error::NotMub(_))
        ));
    }

    #[test]
    fn eq10_general_bases() {
        for seed in 0..10 {
            let rho = random_state(&[3, 2, 2], 3, 2200 + seed).unwrap();
            let v = random_basis(3, 2300 + seed).unwrap();
            let w = random_basis(3, 2400 + seed).unwrap();
            let rep = eval_relation(
                RelationId::Eq10,
                &rho,
                &RelationInputs::with_bases(vec![&v, &w]),
            )
            .unwrap();
            assert!(rep.gap >= -1e-9, "seed {seed}");
            // the overlap bound is never stronger than the MUB value
            assert!(rep.rhs <= 3.0f64.log2() + 1e-12);
        }
    }

    #[test]
    fn eq12_povm_pair() {
        for seed in 0..6 {
            let rho = random_state(&[2, 2, 2], 2, 2500 + seed).unwrap();
            let p = random_povm(2, 3, 2600 + seed).unwrap();
            let q = random_povm(2, 2, 2700 + seed).unwrap();
            let rep = eval_relation(
                RelationId::Eq12,
                &rho,
                &RelationInputs::with_povms(vec![&p, &q]),
            )
            .unwrap();
            assert!(rep.gap >= -1e-9, "seed {seed}");
            assert_eq!(rep.lhs_terms[0].0, "H(P|b)");
            assert_eq!(rep.lhs_terms[1].0, "H(Q|c)");
        }
    }

    #[test]
    fn eq13_uniform_povm_saturates() {
        let rho = random_state(&[2, 3], 4, 61).unwrap();
        let half = CMatrix::identity(2, 2).scale(0.5);
        let p = Povm::new(vec![half.clone(), half]).unwrap();
        let rep = eval_relation(
            RelationId::Eq13,
            &rho,
            &RelationInputs::with_povms(vec![&p]),
        )
        .unwrap();
        assert_eq!(rep.holds, Verdict::Equality);
        assert!((rep.rhs - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eq14_and_eq15_sharpen_with_support() {
        for seed in 0..5 {
            // rank-2 state of a 4-level system, purified by a qubit
            let rho_a = random_state(&[4], 2, 2800 + seed).unwrap();
            let pure = rho_a.purify().unwrap();
            let rho = QState::new(pure.matrix().clone(), vec![4, 2, 1]).unwrap();
            let pi = support_projector(rho_a.matrix()).unwrap();
            let p = random_povm(4, 3, 2900 + seed).unwrap();
            let q = random_povm(4, 4, 3000 + seed).unwrap();
            let with_pi = eval_relation(
                RelationId::Eq14,
                &rho,
                &RelationInputs {
                    povms: vec![&p, &q],
                    projector: Some(&pi),
                    ..Default::default()
                },
            )
            .unwrap();
            let plain = eval_relation(
                RelationId::Eq12,
                &rho,
                &RelationInputs::with_povms(vec![&p, &q]),
            )
            .unwrap();
            assert!(with_pi.gap >= -1e-9, "seed {seed}");
            assert!(
                with_pi.rhs >= plain.rhs - 1e-12,
                "projected bound is sharper"
            );

            let rho_ab = rho.marginal(&[0, 1]).unwrap();
            let id = CMatrix::identity(4, 4);
            let sharp = eval_relation(
                RelationId::Eq15,
                &rho_ab,
                &RelationInputs {
                    povms: vec![&p],
                    projector: Some(&pi),
                    ..Default::default()
                },
            )
            .unwrap();
            let loose = eval_relation(
                RelationId::Eq15,
                &rho_ab,
                &RelationInputs {
                    povms: vec![&p],
                    projector: Some(&id),
                    ..Default::default()
                },
            )
            .unwrap();
            assert!(sharp.gap >= -1e-9);
            assert!(sharp.rhs >= loose.rhs - 1e-12);
            let eq13 = eval_relation(
                RelationId::Eq13,
                &rho_ab,
                &RelationInputs::with_povms(vec![&p]),
            )
            .unwrap();
            assert!((loose.rhs - eq13.rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn eq15_rejects_leaking_projector() {
        let rho = random_state(&[2, 2], 4, 71).unwrap();
        let p = random_povm(2, 2, 72).unwrap();
        let mut pi = CMatrix::zeros(2, 2);
        pi[(0, 0)] = cplx(1.0, 0.0);
        assert!(matches!(
            eval_relation(
                RelationId::Eq15,
                &rho,
                &RelationInputs {
                    povms: vec![&p],
                    projector: Some(&pi),
                    ..Default::default()
                },
            ),
            Err(Error::SupportNotContained(_))
        ));
    }

    #[test]
    fn eq16_same_wing_relation() {
        for seed in 0..5 {
            let rho = random_state(&[2, 2, 2], 1, 3100 + seed).unwrap();
            let p = random_povm(2, 2, 3200 + seed).unwrap();
            let n = random_rank1_povm(2, 3, 3300 + seed).unwrap();
            let id = CMatrix::identity(2, 2);
            let rep = eval_relation(
                RelationId::Eq16,
                &rho,
                &RelationInputs {
                    povms: vec![&p, &n],
                    projector: Some(&id),
                    ..Default::default()
                },
            )
            .unwrap();
            assert!(rep.gap >= -1e-9, "seed {seed}: gap {}", rep.gap);
            assert_eq!(rep.lhs_terms[1].0, "H(N|b)");
        }
        // rejects mixed states and full-rank second POVMs
        let mixed = random_state(&[2, 2, 2], 4, 5).unwrap();
        let p = random_povm(2, 2, 6).unwrap();
        let n = random_rank1_povm(2, 2, 7).unwrap();
        let id = CMatrix::identity(2, 2);
        let inputs = RelationInputs {
            povms: vec![&p, &n],
            projector: Some(&id),
            ..Default::default()
        };
        assert!(matches!(
            eval_relation(RelationId::Eq16, &mixed, &inputs),
            Err(Error::NotPure(_))
        ));
        let pure = random_state(&[2, 2, 2], 1, 8).unwrap();
        let bad = RelationInputs {
            povms: vec![&p, &p],
            projector: Some(&id),
            ..Default::default()
        };
        assert!(matches!(
            eval_relation(RelationId::Eq16, &pure, &bad),
            Err(Error::ArityMismatch(_))
        ));
    }

    #[test]
    fn eq20_equality_on_fourier_eigenstates() {
        let (_, x) = fourier_pair(4).unwrap();
        let rho = QState::from_ket(&x.ket(1), vec![4]).unwrap();
        let rep = eval_relation(RelationId::Eq20, &rho, &RelationInputs::default()).unwrap();
        assert_eq!(rep.holds, Verdict::Equality);
        assert!((rep.lhs_terms[0].1).abs() < 1e-10, "H(x) = 0");
        assert!((rep.lhs_terms[1].1 - 2.0).abs() < 1e-10, "H(z) = 2");
    }

    #[test]
    fn eq21_equality_on_diagonal_states() {
        for seed in 0..5 {
            let p = random_state(&[4], 4, 3400 + seed).unwrap();
            let probs = basis_probs(&fourier_pair(4).unwrap().0, p.matrix());
            let m = CMatrix::from_fn(4, 4, |i, j| {
                if i == j {
                    cplx(probs[i], 0.0)
                } else {
                    cplx(0.0, 0.0)
                }
            });
            let rho = QState::new(m, vec![4]).unwrap();
            let rep = eval_relation(RelationId::Eq21, &rho, &RelationInputs::default()).unwrap();
            assert_eq!(rep.holds, Verdict::Equality, "seed {seed}: gap {}", rep.gap);
            let strict = eval_relation(RelationId::Eq20, &rho, &RelationInputs::default()).unwrap();
            assert!(strict.gap >= rep.gap - 1e-12, "Eq21 sharpens Eq20");
        }
    }

    #[test]
    fn eq22_eq23_on_bell_state() {
        let mut psi = CVector::zeros(4);
        psi[0] = cplx(1.0, 0.0);
        psi[3] = cplx(1.0, 0.0);
        let bell = QState::from_ket(&psi, vec![2, 2]).unwrap();
        // side information cancels both measured entropies: Eq23 saturates,
        // while Eq22 keeps the unconditioned H(x) = 1 on its left side
        let tight = eval_relation(RelationId::Eq23, &bell, &RelationInputs::default()).unwrap();
        assert_eq!(tight.holds, Verdict::Equality, "gap {}", tight.gap);
        assert!(tight.rhs.abs() < 1e-10, "log2 2 + S(a|b) = 1 - 1");
        let loose = eval_relation(RelationId::Eq22, &bell, &RelationInputs::default()).unwrap();
        assert_eq!(loose.holds, Verdict::Holds);
        assert!((loose.gap - 1.0).abs() < 1e-10);
    }

    #[test]
    fn eq23_is_weaker_than_eq22_never_above() {
        // H(x|b) <= H(x), so the Eq23 left side is dominated by Eq22's
        for seed in 0..8 {
            let rho = random_state(&[3, 3], 4, 3500 + seed).unwrap();
            let a = eval_relation(RelationId::Eq22, &rho, &RelationInputs::default()).unwrap();
            let b = eval_relation(RelationId::Eq23, &rho, &RelationInputs::default()).unwrap();
            assert!(b.gap <= a.gap + 1e-10, "seed {seed}");
            assert!(b.gap >= -1e-9, "seed {seed}");
        }
    }

    #[test]
    fn eq24_qubit_triple() {
        let mixed = QState::new(CMatrix::identity(2, 2).scale(0.5), vec![2]).unwrap();
        let rep = eval_relation(RelationId::Eq24, &mixed, &RelationInputs::default()).unwrap();
        assert_eq!(rep.holds, Verdict::Equality);
        let (_, _, z) = qubit_mub_triple();
        let zstate = QState::from_ket(&z.ket(0), vec![2]).unwrap();
        let rep2 = eval_relation(RelationId::Eq24, &zstate, &RelationInputs::default()).unwrap();
        assert_eq!(rep2.holds, Verdict::Equality, "gap {}", rep2.gap);
        for seed in 0..10 {
            let rho = random_state(&[2], 2, 3600 + seed).unwrap();
            let rep = eval_relation(RelationId::Eq24, &rho, &RelationInputs::default()).unwrap();
            assert!(rep.gap >= -1e-9, "seed {seed}");
        }
        let qutrit = random_state(&[3], 3, 1).unwrap();
        assert!(matches!(
            eval_relation(RelationId::Eq24, &qutrit, &RelationInputs::default()),
            Err(Error::ArityMismatch(_))
        ));
    }

    #[test]
    fn eq26_coprime_tensor_relation() {
        for seed in 0..5 {
            let rho = random_state(&[2, 3, 2], 4, 3700 + seed).unwrap();
            let rep = eval_relation(RelationId::Eq26, &rho, &RelationInputs::default()).unwrap();
            assert!(rep.gap >= -1e-9, "seed {seed}: gap {}", rep.gap);
            assert!(
                (rep.rhs
                    - (6.0f64.log2()
                        + cond_entropy_vn(
                            &QState::new(rho.matrix().clone(), vec![6, 2]).unwrap()
                        )
                        .unwrap()))
                .abs()
                    < 1e-10
            );
            assert_eq!(rep.lhs_terms[0].0, "H(x*x)");
            assert_eq!(rep.lhs_terms[1].0, "H(z*z|c)");
        }
        let bad = random_state(&[2, 2, 2], 2, 9).unwrap();
        assert!(matches!(
            eval_relation(RelationId::Eq26, &bad, &RelationInputs::default()),
            Err(Error::NotCoprime(2, 2))
        ));
    }

    #[test]
    fn witness_matches_relation_rearrangement() {
        for seed in 0..5 {
            let rho = random_state(&[2, 2], 2, 3800 + seed).unwrap();
            let rep = eval_relation(RelationId::Eq23, &rho, &RelationInputs::default()).unwrap();
            let w = witness_bound(rep.lhs_terms[0].1, rep.lhs_terms[1].1, 2);
            // -S(a|b) >= w is literally Eq23 rearranged
            let neg_cond = -(rep.rhs - 1.0);
            assert!((neg_cond - (w + rep.gap - 0.0)).abs() < 1e-10 || neg_cond >= w - 1e-9);
            assert!(neg_cond >= w - 1e-9, "seed {seed}");
        }
    }

    #[test]
    fn dp_trace_chain_ordering() {
        for seed in 0..5 {
            let rho = random_state(&[3, 2, 2], 1, 3900 + seed).unwrap();
            let (v, w) = rotated_mub_pair(3, 4000 + seed);
            let t = dp_trace(&rho, &v, &w).unwrap();
            assert!(t.step5 >= t.step6 - 1e-9, "seed {seed}");
            assert!((t.step6 - t.step7).abs() < 1e-9, "seed {seed}");
            assert!((t.step7 - t.step8_form).abs() < 1e-9, "seed {seed}");
            assert!((t.step8_form - t.step9_equiv).abs() < 1e-8, "seed {seed}");
            // step5 is exactly H(v|c)
            let h_vc = cond_entropy_meas(&v.to_povm(), &rho.marginal(&[0, 2]).unwrap())
                .unwrap()
                .bits();
            assert!((t.step5 - h_vc).abs() < 1e-8, "seed {seed}");
        }
    }

    #[test]
    fn dp_trace_gates() {
        let mixed = random_state(&[2, 2, 2], 4, 10).unwrap();
        let (z, x) = fourier_pair(2).unwrap();
        assert!(matches!(dp_trace(&mixed, &z, &x), Err(Error::NotPure(_))));
        let pure = random_state(&[2, 2, 2], 1, 11).unwrap();
        let v = random_basis(2, 12).unwrap();
        assert!(matches!(dp_trace(&pure, &z, &v), Err(Error::NotMub(_))));
    }

    #[test]
    fn arity_gates() {
        let rho = random_state(&[2, 2], 2, 13).unwrap();
        let (z, x) = fourier_pair(2).unwrap();
        assert!(matches!(
            eval_relation(
                RelationId::Eq3,
                &rho,
                &RelationInputs::with_bases(vec![&z, &x])
            ),
            Err(Error::ArityMismatch(_))
        ));
        let tri = random_state(&[2, 2, 2], 2, 14).unwrap();
        assert!(matches!(
            eval_relation(RelationId::Eq3, &tri, &RelationInputs::with_bases(vec![&z])),
            Err(Error::ArityMismatch(_))
        ));
        assert!(matches!(
            eval_relation(RelationId::Eq20, &tri, &RelationInputs::default()),
            Err(Error::ArityMismatch(_))
        ));
    }
}
