//! Equality cases of the uncertainty relations: measurement channels, the
//! Petz recovery map, analytic minimum-uncertainty families, the f/g residual
//! system, and classification of tripartite equality states.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::Serialize;

use crate::bounds::{basis_probs, eval_relation, RelationId, RelationInputs, UncertaintyReport};
use crate::entropy::cond_entropy_meas;
use crate::error::{Error, Result};
use crate::qmath::{
    embed, gcd, herm_defect, hermitian_eig, hermitize, ket_proj, kron, matrix_func, max_abs,
    partial_trace, sup_norm, trace_distance, CMatrix, CVector, MatrixFunc,
};
use crate::states::{
    factors, fourier_pair, gaussian_matrix, tensor_basis, trial_seed, w_basis, BasisSet, QState,
};
use crate::tol;

/// Completely positive trace-preserving map in operator-element form.
#[derive(Clone, Debug)]
pub struct Channel {
    kraus: Vec<CMatrix>,
    in_dim: usize,
    out_dim: usize,
}

impl Channel {
    /// Validates `sum_i K_i^dag K_i = I`.
    pub fn new(kraus: Vec<CMatrix>) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::DimMismatch(
                "channel needs at least one operator element".into(),
            ));
        }
        let out_dim = kraus[0].nrows();
        let in_dim = kraus[0].ncols();
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::DimMismatch("empty operator element".into()));
        }
        for (i, k) in kraus.iter().enumerate() {
            if k.nrows() != out_dim || k.ncols() != in_dim {
                return Err(Error::DimMismatch(format!(
                    "operator element {i} is {}x{}, expected {out_dim}x{in_dim}",
                    k.nrows(),
                    k.ncols()
                )));
            }
        }
        let c = Self {
            kraus,
            in_dim,
            out_dim,
        };
        let defect = c.tp_defect();
        if defect > tol::ORTHO {
            return Err(Error::NotPovm(format!(
                "operator elements do not close: completeness defect {defect:.3e}"
            )));
        }
        Ok(c)
    }

    /// Skips the completeness gate; for maps that are trace preserving only
    /// on a known support, like the recovery map.
    pub(crate) fn trusted(kraus: Vec<CMatrix>, in_dim: usize, out_dim: usize) -> Self {
        Self {
            kraus,
            in_dim,
            out_dim,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.out_dim
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    /// `max_abs(sum K^dag K - I)`.
    pub fn tp_defect(&self) -> f64 {
        let mut s = CMatrix::zeros(self.in_dim, self.in_dim);
        for k in &self.kraus {
            s += k.adjoint() * k;
        }
        max_abs(&(s - CMatrix::identity(self.in_dim, self.in_dim)))
    }

    /// `sum_i K_i m K_i^dag`.
    pub fn apply(&self, m: &CMatrix) -> Result<CMatrix> {
        if m.nrows() != self.in_dim || m.ncols() != self.in_dim {
            return Err(Error::DimMismatch(format!(
                "input is {}x{}, channel acts on dimension {}",
                m.nrows(),
                m.ncols(),
                self.in_dim
            )));
        }
        let mut out = CMatrix::zeros(self.out_dim, self.out_dim);
        for k in &self.kraus {
            out += k * m * k.adjoint();
        }
        Ok(out)
    }

    /// The adjoint map `sum_i K_i^dag m K_i`.
    pub fn apply_adjoint(&self, m: &CMatrix) -> Result<CMatrix> {
        if m.nrows() != self.out_dim || m.ncols() != self.out_dim {
            return Err(Error::DimMismatch(format!(
                "input is {}x{}, adjoint acts on dimension {}",
                m.nrows(),
                m.ncols(),
                self.out_dim
            )));
        }
        let mut out = CMatrix::zeros(self.in_dim, self.in_dim);
        for k in &self.kraus {
            out += k.adjoint() * m * k;
        }
        Ok(out)
    }
}

/// Pushes a state through a channel.
pub fn apply_channel(e: &Channel, rho: &QState) -> Result<QState> {
    if e.in_dim != rho.dim() {
        return Err(Error::DimMismatch(format!(
            "channel acts on dimension {}, state has {}",
            e.in_dim,
            rho.dim()
        )));
    }
    let out = e.apply(rho.matrix())?;
    if e.out_dim == e.in_dim {
        Ok(QState::trusted(
            out,
            rho.dims().to_vec(),
            rho.labels().to_vec(),
        ))
    } else {
        QState::new(out, vec![e.out_dim])
    }
}

/// The adjoint map on a raw operator.
pub fn adjoint_apply(e: &Channel, m: &CMatrix) -> Result<CMatrix> {
    e.apply_adjoint(m)
}

/// Projective measurement channel `rho -> sum_k [w_k] rho [w_k]`; its own
/// adjoint.
pub fn measurement_channel(w: &BasisSet) -> Channel {
    let d = w.dim();
    let kraus = (0..d).map(|k| w.projector(k)).collect();
    Channel::trusted(kraus, d, d)
}

/// The same measurement acting on one subsystem of a composite space.
pub fn measurement_channel_on(w: &BasisSet, dims: &[usize], sys: usize) -> Result<Channel> {
    let d: usize = dims.iter().product();
    let kraus = (0..w.dim())
        .map(|k| embed(&w.projector(k), dims, sys))
        .collect::<Result<Vec<_>>>()?;
    Ok(Channel::trusted(kraus, d, d))
}

/// Haar-flavoured random channel from a QR-orthonormalised block isometry.
pub fn random_channel(dim: usize, n_kraus: usize, seed: u64) -> Result<Channel> {
    if dim == 0 || n_kraus == 0 {
        return Err(Error::DimMismatch(
            "channel needs a positive dimension and at least one operator element".into(),
        ));
    }
    let g = gaussian_matrix(dim * n_kraus, dim, seed);
    let q = g.qr().q();
    let kraus = (0..n_kraus)
        .map(|i| q.rows(i * dim, dim).into_owned())
        .collect();
    Channel::new(kraus)
}

/// Petz transpose map of `e` with reference state `sigma`:
/// `rho -> sqrt(sigma) e^dag(e(sigma)^{-1/2} rho e(sigma)^{-1/2}) sqrt(sigma)`,
/// inverses taken on supports. Satisfies `petz(e(sigma)) = sigma`.
pub fn petz_map(e: &Channel, sigma: &CMatrix) -> Result<Channel> {
    if sigma.nrows() != e.in_dim || sigma.ncols() != e.in_dim {
        return Err(Error::DimMismatch(format!(
            "reference is {}x{}, channel input has dimension {}",
            sigma.nrows(),
            sigma.ncols(),
            e.in_dim
        )));
    }
    let sq = matrix_func(sigma, MatrixFunc::Sqrt)?;
    let es = e.apply(sigma)?;
    let inv = matrix_func(&hermitize(&es), MatrixFunc::InvSqrt)?;
    let kraus = e.kraus.iter().map(|k| &sq * k.adjoint() * &inv).collect();
    Ok(Channel::trusted(kraus, e.out_dim, e.in_dim))
}

/// Trace distances after the recovery round trip,
/// `(||petz(e(rho)) - rho||, ||petz(e(sigma)) - sigma||)` with the Petz map
/// built from `sigma`. A vanishing first component certifies equality in the
/// data-processing step that `e` implements.
pub fn recovery_check(rho: &CMatrix, sigma: &CMatrix, e: &Channel) -> Result<(f64, f64)> {
    let hat = petz_map(e, sigma)?;
    let res_rho = trace_distance(&hat.apply(&e.apply(rho)?)?, rho)?;
    let res_sigma = trace_distance(&hat.apply(&e.apply(sigma)?)?, sigma)?;
    Ok((res_rho, res_sigma))
}

/// One term of the block-mixture family
/// `sum_i g_i [w^{s_i}_{beta_i,gamma_i}] (x) side_i`.
#[derive(Clone, Debug)]
pub struct OmegaTerm {
    pub s: usize,
    pub beta: usize,
    pub gamma: usize,
    pub weight: f64,
    /// Unit-trace PSD operator on the side system; terms must be mutually
    /// orthogonal.
    pub side: CMatrix,
}

/// Parameters of the analytic equality families.
///
/// `dims` and `s` pick the intermediate basis `w^{s_nu}` per `a` subsystem.
/// `p` holds the gamma weights (row-major over subsystems), `side_blocks` the
/// PSD beta blocks (row-major), `q` the beta weights of the state-only
/// diagonal family, and `omega_terms` the block-mixture family. The families
/// share the trace condition `d * sum(p) * sum(tr sigma) = 1`.
#[derive(Clone, Debug, Default)]
pub struct MusFamilySpec {
    pub dims: Vec<usize>,
    pub s: Vec<usize>,
    pub p: Vec<f64>,
    pub q: Option<Vec<f64>>,
    pub side_blocks: Option<Vec<CMatrix>>,
    pub omega_terms: Option<Vec<OmegaTerm>>,
}

impl MusFamilySpec {
    /// Seeded random instance for the side-information families: weights sum
    /// to one, side blocks are full-rank PSD with total trace `1/d`.
    pub fn random(dims: &[usize], s: &[usize], db: usize, seed: u64) -> Result<Self> {
        if dims.is_empty() || dims.len() != s.len() {
            return Err(Error::BadSpec(format!(
                "{} dimensions with {} divisors",
                dims.len(),
                s.len()
            )));
        }
        if db == 0 {
            return Err(Error::BadSpec("side dimension must be positive".into()));
        }
        for (&dv, &sv) in dims.iter().zip(s) {
            if dv == 0 {
                return Err(Error::BadSpec("zero subsystem dimension".into()));
            }
            if sv == 0 || dv % sv != 0 {
                return Err(Error::NotDivisor(dv, sv));
            }
        }
        let d: usize = dims.iter().product();
        let s_total: usize = s.iter().product();
        let t_total: usize = dims.iter().zip(s).map(|(&dv, &sv)| dv / sv).product();
        let p = positive_weights(s_total, 1.0, trial_seed(seed, 0));
        let y = positive_weights(t_total, 1.0 / d as f64, trial_seed(seed, 1));
        let side_blocks = (0..t_total)
            .map(|b| {
                let g = gaussian_matrix(db, db, trial_seed(seed, 2 + b as u64));
                let m = &g * g.adjoint();
                let tr = m.trace().re;
                m.scale(y[b] / tr)
            })
            .collect();
        Ok(Self {
            dims: dims.to_vec(),
            s: s.to_vec(),
            p,
            q: None,
            side_blocks: Some(side_blocks),
            omega_terms: None,
        })
    }

    /// Seeded random instance for the state-only diagonal family.
    pub fn random_diagonal(d: usize, s: usize, seed: u64) -> Result<Self> {
        if d == 0 {
            return Err(Error::BadSpec("zero dimension".into()));
        }
        if s == 0 || d % s != 0 {
            return Err(Error::NotDivisor(d, s));
        }
        Ok(Self {
            dims: vec![d],
            s: vec![s],
            p: positive_weights(s, 1.0, trial_seed(seed, 0)),
            q: Some(positive_weights(d / s, 1.0 / d as f64, trial_seed(seed, 1))),
            side_blocks: None,
            omega_terms: None,
        })
    }
}

/// General tensor equality family over pairwise coprime subsystem dimensions:
/// `rho = d * sum_{beta,gamma} p_gamma (prod_nu [w^{s_nu}_{beta_nu,gamma_nu}]) (x) sigma_beta`.
pub fn construct_thm5(spec: &MusFamilySpec) -> Result<QState> {
    let lam = spec.dims.len();
    if lam == 0 {
        return Err(Error::BadSpec("no a subsystems".into()));
    }
    if spec.s.len() != lam {
        return Err(Error::BadSpec(format!(
            "{} divisors for {lam} subsystems",
            spec.s.len()
        )));
    }
    if spec.q.is_some() {
        return Err(Error::BadSpec(
            "q weights belong to the state-only diagonal family".into(),
        ));
    }
    if spec.omega_terms.is_some() {
        return Err(Error::BadSpec(
            "omega terms belong to construct_omega".into(),
        ));
    }
    for (&dv, &sv) in spec.dims.iter().zip(&spec.s) {
        if dv == 0 {
            return Err(Error::BadSpec("zero subsystem dimension".into()));
        }
        if sv == 0 || dv % sv != 0 {
            return Err(Error::NotDivisor(dv, sv));
        }
    }
    for i in 0..lam {
        for j in i + 1..lam {
            if gcd(spec.dims[i], spec.dims[j]) != 1 {
                return Err(Error::NotCoprime(spec.dims[i], spec.dims[j]));
            }
        }
    }
    let sides = spec
        .side_blocks
        .as_ref()
        .ok_or_else(|| Error::BadSpec("missing side blocks".into()))?;
    let t_dims: Vec<usize> = spec
        .dims
        .iter()
        .zip(&spec.s)
        .map(|(&d, &s)| d / s)
        .collect();
    let s_total: usize = spec.s.iter().product();
    let t_total: usize = t_dims.iter().product();
    if spec.p.len() != s_total {
        return Err(Error::BadSpec(format!(
            "{} gamma weights, expected {s_total}",
            spec.p.len()
        )));
    }
    if spec.p.iter().any(|v| !v.is_finite() || *v < -1e-12) {
        return Err(Error::BadSpec(
            "gamma weights must be finite and nonnegative".into(),
        ));
    }
    if sides.len() != t_total {
        return Err(Error::BadSpec(format!(
            "{} side blocks, expected {t_total}",
            sides.len()
        )));
    }
    let db = sides[0].nrows();
    if db == 0 {
        return Err(Error::BadSpec("empty side block".into()));
    }
    let mut tr_sides = 0.0;
    for (i, m) in sides.iter().enumerate() {
        tr_sides += check_psd_block(m, db, &format!("side block {i}"))?;
    }
    let d: usize = spec.dims.iter().product();
    let p_sum: f64 = spec.p.iter().map(|v| v.max(0.0)).sum();
    let total = d as f64 * p_sum * tr_sides;
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::BadSpec(format!(
            "trace condition d*sum(p)*sum(tr sigma) = {total:.8}, expected 1"
        )));
    }
    let bases: Vec<BasisSet> = spec
        .dims
        .iter()
        .zip(&spec.s)
        .map(|(&dv, &sv)| w_basis(dv, sv))
        .collect::<Result<_>>()?;
    let betas = multi_indices(&t_dims);
    let gammas = multi_indices(&spec.s);
    let full = d * db;
    let mut mat = CMatrix::zeros(full, full);
    for (bi, beta) in betas.iter().enumerate() {
        for (gi, gamma) in gammas.iter().enumerate() {
            let wt = d as f64 * spec.p[gi].max(0.0);
            if wt == 0.0 {
                continue;
            }
            let mut proj = bases[0].projector(beta[0] * spec.s[0] + gamma[0]);
            for nu in 1..lam {
                proj = kron(
                    &proj,
                    &bases[nu].projector(beta[nu] * spec.s[nu] + gamma[nu]),
                );
            }
            mat += kron(&proj, &sides[bi]).scale(wt);
        }
    }
    mat = mat.scale(1.0 / total);
    let mut dims = spec.dims.clone();
    dims.push(db);
    let labels: Vec<String> = if lam == 1 {
        vec!["a".into(), "b".into()]
    } else {
        (1..=lam)
            .map(|i| format!("a{i}"))
            .chain(std::iter::once("b".to_string()))
            .collect()
    };
    QState::with_labels(mat, dims, labels)
}

/// Single-subsystem block family
/// `rho = d * sum_{beta,gamma} p_gamma [w_{beta,gamma}] (x) sigma_beta`.
pub fn construct_thm4_iii(spec: &MusFamilySpec) -> Result<QState> {
    if spec.dims.len() != 1 {
        return Err(Error::BadSpec(format!(
            "the single-system family takes exactly one a subsystem, got {}",
            spec.dims.len()
        )));
    }
    construct_thm5(spec)
}

/// [`construct_thm4_iii`] restricted to prime dimension, where the only
/// intermediate bases are `z` and `x` themselves.
pub fn construct_thm2(spec: &MusFamilySpec) -> Result<QState> {
    if spec.dims.len() != 1 {
        return Err(Error::BadSpec(format!(
            "the prime family takes exactly one a subsystem, got {}",
            spec.dims.len()
        )));
    }
    if !is_prime(spec.dims[0]) {
        return Err(Error::BadSpec(format!(
            "dimension {} is not prime",
            spec.dims[0]
        )));
    }
    construct_thm5(spec)
}

/// State-only diagonal family `rho_a = d * sum q_beta p_gamma [w_{beta,gamma}]`,
/// equal to `d (sum_beta q_beta [z_beta]) (x) (sum_gamma p_gamma [x_gamma])`
/// under the tensor identification of the `w` basis.
pub fn construct_thm4_ii(spec: &MusFamilySpec) -> Result<QState> {
    if spec.dims.len() != 1 || spec.s.len() != 1 {
        return Err(Error::BadSpec(
            "the diagonal family takes exactly one a subsystem".into(),
        ));
    }
    if spec.side_blocks.is_some() {
        return Err(Error::BadSpec(
            "the state-only family takes no side blocks".into(),
        ));
    }
    if spec.omega_terms.is_some() {
        return Err(Error::BadSpec(
            "omega terms belong to construct_omega".into(),
        ));
    }
    let (d, s) = (spec.dims[0], spec.s[0]);
    if d == 0 {
        return Err(Error::BadSpec("zero dimension".into()));
    }
    if s == 0 || d % s != 0 {
        return Err(Error::NotDivisor(d, s));
    }
    let t = d / s;
    let q = spec
        .q
        .as_ref()
        .ok_or_else(|| Error::BadSpec("missing q weights".into()))?;
    if spec.p.len() != s || q.len() != t {
        return Err(Error::BadSpec(format!(
            "{} gamma and {} beta weights, expected {s} and {t}",
            spec.p.len(),
            q.len()
        )));
    }
    if spec
        .p
        .iter()
        .chain(q)
        .any(|v| !v.is_finite() || *v < -1e-12)
    {
        return Err(Error::BadSpec(
            "weights must be finite and nonnegative".into(),
        ));
    }
    let p_sum: f64 = spec.p.iter().map(|v| v.max(0.0)).sum();
    let q_sum: f64 = q.iter().map(|v| v.max(0.0)).sum();
    let total = d as f64 * p_sum * q_sum;
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::BadSpec(format!(
            "trace condition d*sum(q)*sum(p) = {total:.8}, expected 1"
        )));
    }
    let w = w_basis(d, s)?;
    let mut mat = CMatrix::zeros(d, d);
    for beta in 0..t {
        for gamma in 0..s {
            let wt = d as f64 * q[beta].max(0.0) * spec.p[gamma].max(0.0);
            if wt == 0.0 {
                continue;
            }
            mat += w.projector(beta * s + gamma).scale(wt);
        }
    }
    mat = mat.scale(1.0 / total);
    QState::with_labels(mat, vec![d], vec!["a".into()])
}

/// Block-mixture family `sum_i g_i [w^{s_i}_{beta,gamma}] (x) side_i` with
/// mutually orthogonal unit-trace sides. Satisfies
/// `H(z|b) = sum g_i log2(s_i)` and `H(x|b) = sum g_i log2(d/s_i)`.
pub fn construct_omega(spec: &MusFamilySpec) -> Result<QState> {
    if spec.dims.len() != 1 {
        return Err(Error::BadSpec(
            "the block-mixture family lives on a single a subsystem".into(),
        ));
    }
    if !spec.s.is_empty() || !spec.p.is_empty() || spec.q.is_some() || spec.side_blocks.is_some() {
        return Err(Error::BadSpec(
            "block-mixture terms carry their own bases, weights and sides".into(),
        ));
    }
    let d = spec.dims[0];
    if d == 0 {
        return Err(Error::BadSpec("zero dimension".into()));
    }
    let terms = spec
        .omega_terms
        .as_ref()
        .ok_or_else(|| Error::BadSpec("missing omega terms".into()))?;
    if terms.is_empty() {
        return Err(Error::BadSpec("no omega terms".into()));
    }
    let db = terms[0].side.nrows();
    let mut wsum = 0.0;
    let mut sides = Vec::with_capacity(terms.len());
    let mut kets = Vec::with_capacity(terms.len());
    for (i, term) in terms.iter().enumerate() {
        if term.s == 0 || d % term.s != 0 {
            return Err(Error::NotDivisor(d, term.s));
        }
        if term.beta >= d / term.s || term.gamma >= term.s {
            return Err(Error::BadSpec(format!(
                "term {i}: index (beta, gamma) = ({}, {}) out of range for s = {}",
                term.beta, term.gamma, term.s
            )));
        }
        if !term.weight.is_finite() || term.weight < -1e-12 {
            return Err(Error::BadSpec(format!("term {i}: bad weight")));
        }
        let tr = check_psd_block(&term.side, db, &format!("term {i} side"))?;
        if (tr - 1.0).abs() > 1e-6 {
            return Err(Error::BadSpec(format!(
                "term {i} side has trace {tr:.8}, expected 1"
            )));
        }
        sides.push(hermitize(&term.side).scale(1.0 / tr));
        kets.push(w_basis(d, term.s)?.ket(term.beta * term.s + term.gamma));
        wsum += term.weight.max(0.0);
    }
    if (wsum - 1.0).abs() > 1e-6 {
        return Err(Error::BadSpec(format!(
            "weights sum to {wsum:.8}, expected 1"
        )));
    }
    for i in 0..sides.len() {
        for j in i + 1..sides.len() {
            let ov = (&sides[i] * &sides[j]).trace().re;
            if ov.abs() > 1e-10 {
                return Err(Error::NotOrthogonal(ov));
            }
        }
    }
    let mut mat = CMatrix::zeros(d * db, d * db);
    for (i, term) in terms.iter().enumerate() {
        mat += kron(&ket_proj(&kets[i]), &sides[i]).scale(term.weight.max(0.0) / wsum);
    }
    QState::with_labels(mat, vec![d, db], vec!["a".into(), "b".into()])
}

/// Which two-branch entangled family to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LambdaKind {
    /// `(|z0>|phi_b>|phi_c> + |z1>|varphi_b>|varphi_c>)/sqrt(2)`.
    ZForm,
    /// The same superposition over the Fourier pair `x0`, `x1`.
    XForm,
    /// The fixed qutrit example
    /// `(|z0>|0>|0> + |z1>|+>|+> + |z2>|y+>|y->)/sqrt(3)` on qubit sides.
    QutritExample,
}

/// Branch kets for [`LambdaKind::ZForm`] and [`LambdaKind::XForm`].
#[derive(Clone, Debug)]
pub struct LambdaKets {
    pub phi_b: CVector,
    pub phi_c: CVector,
    pub varphi_b: CVector,
    pub varphi_c: CVector,
}

/// Entangled two-branch equality states. The branch overlaps must satisfy
/// `<phi_b|varphi_b><phi_c|varphi_c>` real; kets are normalised here.
pub fn construct_lambda(kind: LambdaKind, kets: Option<&LambdaKets>) -> Result<QState> {
    match kind {
        LambdaKind::QutritExample => {
            if kets.is_some() {
                return Err(Error::BadSpec("the qutrit example takes no kets".into()));
            }
            let zero = CVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]);
            let one = CVector::from_vec(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
            let r = 1.0 / 2.0f64.sqrt();
            let plus = zero.scale(r) + one.scale(r);
            let yplus = zero.scale(r) + (&one * Complex64::new(0.0, r));
            let yminus = zero.scale(r) + (&one * Complex64::new(0.0, -r));
            let mut psi = CVector::zeros(12);
            for (j, bk, ck) in [(0, &zero, &zero), (1, &plus, &plus), (2, &yplus, &yminus)] {
                let branch = kron_ket(bk, ck);
                for i in 0..4 {
                    psi[j * 4 + i] = branch[i];
                }
            }
            QState::from_ket(&psi, vec![3, 2, 2])
        }
        LambdaKind::ZForm | LambdaKind::XForm => {
            let k = kets.ok_or_else(|| Error::BadSpec("missing branch kets".into()))?;
            if k.phi_b.len() != k.varphi_b.len() || k.phi_c.len() != k.varphi_c.len() {
                return Err(Error::DimMismatch(
                    "branch kets must share side dimensions".into(),
                ));
            }
            let phi_b = unit(&k.phi_b)?;
            let phi_c = unit(&k.phi_c)?;
            let var_b = unit(&k.varphi_b)?;
            let var_c = unit(&k.varphi_c)?;
            let t = phi_b.dotc(&var_b) * phi_c.dotc(&var_c);
            if t.im.abs() > 1e-10 {
                return Err(Error::RealityViolated(t.im));
            }
            let (z, x) = fourier_pair(2)?;
            let a = if kind == LambdaKind::ZForm { z } else { x };
            let psi = kron_ket(&a.ket(0), &kron_ket(&phi_b, &phi_c))
                + kron_ket(&a.ket(1), &kron_ket(&var_b, &var_c));
            QState::from_ket(&psi, vec![2, phi_b.len(), phi_c.len()])
        }
    }
}

/// The equality residual system: operators `f_mu = Tr_a(Z^mu rho_ab)` on the
/// side space and scalars `g_mu = 1 - sum_j sqrt(p_j p_{j+mu})` from the `x`
/// probabilities. Every product vanishes exactly on the equality families.
#[derive(Clone, Debug)]
pub struct FgSystem {
    /// Multi-index `mu` per row; length one for a single subsystem.
    pub mu: Vec<Vec<usize>>,
    pub f_ops: Vec<CMatrix>,
    pub g_vals: Vec<f64>,
    /// `sup_norm(f_mu) * |g_mu|`.
    pub residuals: Vec<f64>,
}

impl FgSystem {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |a, &b| a.max(b))
    }
}

/// Builds the residual system for a bipartite state with `Z = sum omega^k [z_k]`.
pub fn fg_system(rho_ab: &QState, z: &BasisSet, x: &BasisSet) -> Result<FgSystem> {
    if rho_ab.n_parts() != 2 {
        return Err(Error::DimMismatch(format!(
            "need a bipartite state, got {} parts",
            rho_ab.n_parts()
        )));
    }
    let d = rho_ab.dims()[0];
    if z.dim() != d || x.dim() != d {
        return Err(Error::DimMismatch(format!(
            "bases of dimension {}/{} on a subsystem of dimension {d}",
            z.dim(),
            x.dim()
        )));
    }
    let p = basis_probs(x, rho_ab.marginal(&[0])?.matrix());
    let mut zmat = CMatrix::zeros(d, d);
    for k in 0..d {
        zmat += z.projector(k) * Complex64::from_polar(1.0, 2.0 * PI * k as f64 / d as f64);
    }
    let mut sys = FgSystem {
        mu: Vec::new(),
        f_ops: Vec::new(),
        g_vals: Vec::new(),
        residuals: Vec::new(),
    };
    let mut zpow = zmat.clone();
    for m in 1..d {
        let f = partial_trace(
            &(embed(&zpow, rho_ab.dims(), 0)? * rho_ab.matrix()),
            rho_ab.dims(),
            &[1],
        )?;
        let g = 1.0 - (0..d).map(|j| (p[j] * p[(j + m) % d]).sqrt()).sum::<f64>();
        sys.mu.push(vec![m]);
        sys.residuals.push(sup_norm(&f) * g.abs());
        sys.f_ops.push(f);
        sys.g_vals.push(g);
        zpow = &zpow * &zmat;
    }
    Ok(sys)
}

/// Vector-indexed residual system for coprime tensor dimensions; rows run
/// over all nonzero multi-indices `mu`, row-major.
pub fn fg_system_tensor(rho: &QState) -> Result<FgSystem> {
    let n = rho.n_parts();
    if n < 2 {
        return Err(Error::DimMismatch(
            "need the a subsystems plus a side subsystem".into(),
        ));
    }
    let parts = rho.dims()[..n - 1].to_vec();
    for i in 0..parts.len() {
        for j in i + 1..parts.len() {
            if gcd(parts[i], parts[j]) != 1 {
                return Err(Error::NotCoprime(parts[i], parts[j]));
            }
        }
    }
    let da: usize = parts.iter().product();
    let db = rho.dims()[n - 1];
    let grouped = [da, db];
    let a_keep: Vec<usize> = (0..n - 1).collect();
    let rho_a = rho.marginal(&a_keep)?;
    let xs: Vec<BasisSet> = parts
        .iter()
        .map(|&dv| fourier_pair(dv).map(|(_, x)| x))
        .collect::<Result<_>>()?;
    let x_refs: Vec<&BasisSet> = xs.iter().collect();
    let xt = tensor_basis(&x_refs)?;
    let p = basis_probs(&xt, rho_a.matrix());
    let idx = multi_indices(&parts);
    let mut sys = FgSystem {
        mu: Vec::new(),
        f_ops: Vec::new(),
        g_vals: Vec::new(),
        residuals: Vec::new(),
    };
    for mu in &idx {
        if mu.iter().all(|&m| m == 0) {
            continue;
        }
        let mut zm = diag_phase_power(parts[0], mu[0]);
        for nu in 1..parts.len() {
            zm = kron(&zm, &diag_phase_power(parts[nu], mu[nu]));
        }
        let f = partial_trace(&(embed(&zm, &grouped, 0)? * rho.matrix()), &grouped, &[1])?;
        let g = 1.0
            - idx
                .iter()
                .enumerate()
                .map(|(flat, j)| {
                    let shifted: Vec<usize> = j
                        .iter()
                        .zip(mu)
                        .zip(&parts)
                        .map(|((&jv, &mv), &dv)| (jv + mv) % dv)
                        .collect();
                    (p[flat] * p[flat_index(&shifted, &parts)]).sqrt()
                })
                .sum::<f64>();
        sys.mu.push(mu.clone());
        sys.residuals.push(sup_norm(&f) * g.abs());
        sys.f_ops.push(f);
        sys.g_vals.push(g);
    }
    Ok(sys)
}

/// Closed form of the recovered state when the `x` outcomes carry no side
/// information:
/// `sum_{j,j'} sqrt(p_j p_{j'}) |x_j><x_{j'}| (x) Tr_a(Z^{j-j'} rho_ab)`.
/// Equals `rho_ab` exactly on the equality families.
pub fn petz_fixed_point_ansatz(rho_ab: &QState) -> Result<CMatrix> {
    if rho_ab.n_parts() != 2 {
        return Err(Error::DimMismatch(format!(
            "need a bipartite state, got {} parts",
            rho_ab.n_parts()
        )));
    }
    let d = rho_ab.dims()[0];
    let db = rho_ab.dims()[1];
    let (_, x) = fourier_pair(d)?;
    let p = basis_probs(&x, rho_ab.marginal(&[0])?.matrix());
    let mut f = Vec::with_capacity(d);
    for m in 0..d {
        let zm = diag_phase_power(d, m);
        f.push(partial_trace(
            &(embed(&zm, rho_ab.dims(), 0)? * rho_ab.matrix()),
            rho_ab.dims(),
            &[1],
        )?);
    }
    let mut out = CMatrix::zeros(d * db, d * db);
    for j in 0..d {
        for jp in 0..d {
            let w = (p[j] * p[jp]).sqrt();
            if w == 0.0 {
                continue;
            }
            let outer = x.ket(j) * x.ket(jp).adjoint();
            out += kron(&outer, &f[(j + d - jp) % d]).scale(w);
        }
    }
    Ok(out)
}

/// Evaluates both orderings of the tripartite equality condition
/// `H(z|c) + H(x|b) = H(x|c) + H(z|b) = log2 d` on a pure state.
pub fn check_mus_equality(rho: &QState) -> Result<(UncertaintyReport, UncertaintyReport)> {
    if rho.n_parts() != 3 {
        return Err(Error::ArityMismatch(format!(
            "need a tripartite state, got {} parts",
            rho.n_parts()
        )));
    }
    if !rho.is_pure() {
        return Err(Error::NotPure(rho.largest_eigenvalue()));
    }
    let (z, x) = fourier_pair(rho.dims()[0])?;
    let first = eval_relation(
        RelationId::Eq3,
        rho,
        &RelationInputs::with_bases(vec![&z, &x]),
    )?;
    let second = eval_relation(
        RelationId::Eq3,
        rho,
        &RelationInputs::with_bases(vec![&x, &z]),
    )?;
    Ok((first, second))
}

/// Equality-state classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MusClass {
    /// Some intermediate basis is perfectly predicted by one side.
    Upsilon,
    /// Both marginals are separable block mixtures over intermediate bases.
    Omega,
    /// Both marginals are entangled.
    Lambda,
    /// The equality condition itself fails.
    NotMus,
    /// Entanglement of the marginals cannot be decided by the PPT test.
    Indeterminate,
}

impl fmt::Display for MusClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MusClass::Upsilon => "upsilon",
            MusClass::Omega => "omega",
            MusClass::Lambda => "lambda",
            MusClass::NotMus => "not_mus",
            MusClass::Indeterminate => "indeterminate",
        };
        write!(f, "{s}")
    }
}

/// Conditional entropies of one intermediate basis against both sides.
#[derive(Clone, Debug, Serialize)]
pub struct WCondEntry {
    pub s: usize,
    pub h_wb: f64,
    pub h_wc: f64,
}

/// Everything the classifier measured.
#[derive(Clone, Debug, Serialize)]
pub struct ClassEvidence {
    /// Gap of `H(z|c) + H(x|b) - log2 d`.
    pub eq27_gap_first: f64,
    /// Gap of `H(x|c) + H(z|b) - log2 d`.
    pub eq27_gap_second: f64,
    pub w_conditionals: Vec<WCondEntry>,
    pub omega_form_ab: bool,
    pub omega_form_ac: bool,
    pub pt_min_ab: f64,
    pub pt_min_ac: f64,
}

/// Classification outcome with its supporting measurements.
#[derive(Clone, Debug, Serialize)]
pub struct ClassLabel {
    pub label: MusClass,
    pub evidence: ClassEvidence,
}

/// Classifies a pure tripartite equality state.
///
/// Order: equality check, then perfect side prediction of some `w^s`
/// (Upsilon), then detected block form on both marginals with both PPT
/// (Omega), then both marginals NPT (Lambda). PPT is conclusive for
/// separability only at small dimensions, so the remainder is Indeterminate
/// rather than guessed.
pub fn classify_mus(rho: &QState) -> Result<ClassLabel> {
    let (first, second) = check_mus_equality(rho)?;
    let d = rho.dims()[0];
    let rho_ab = rho.marginal(&[0, 1])?;
    let rho_ac = rho.marginal(&[0, 2])?;
    let mut w_conditionals = Vec::new();
    for &s in &factors(d).divisors {
        let povm = w_basis(d, s)?.to_povm();
        w_conditionals.push(WCondEntry {
            s,
            h_wb: cond_entropy_meas(&povm, &rho_ab)?.bits(),
            h_wc: cond_entropy_meas(&povm, &rho_ac)?.bits(),
        });
    }
    let pool = omega_pool(d)?;
    let omega_form_ab = omega_block_form(&rho_ab, &pool)?;
    let omega_form_ac = omega_block_form(&rho_ac, &pool)?;
    let pt_min_ab = rho_ab.pt_min_eigenvalue(0)?;
    let pt_min_ac = rho_ac.pt_min_eigenvalue(0)?;
    let label = if first.gap.abs() > tol::EQ || second.gap.abs() > tol::EQ {
        MusClass::NotMus
    } else if w_conditionals
        .iter()
        .any(|e| e.h_wb <= 1e-8 || e.h_wc <= 1e-8)
    {
        MusClass::Upsilon
    } else if omega_form_ab
        && omega_form_ac
        && pt_min_ab >= -tol::VIOLATION
        && pt_min_ac >= -tol::VIOLATION
    {
        MusClass::Omega
    } else if pt_min_ab < -tol::VIOLATION && pt_min_ac < -tol::VIOLATION {
        MusClass::Lambda
    } else {
        MusClass::Indeterminate
    };
    Ok(ClassLabel {
        label,
        evidence: ClassEvidence {
            eq27_gap_first: first.gap,
            eq27_gap_second: second.gap,
            w_conditionals,
            omega_form_ab,
            omega_form_ac,
            pt_min_ab,
            pt_min_ac,
        },
    })
}

/// All intermediate-basis kets of dimension `d`, over every divisor.
fn omega_pool(d: usize) -> Result<Vec<CVector>> {
    let mut pool = Vec::new();
    for &s in &factors(d).divisors {
        let w = w_basis(d, s)?;
        for j in 0..d {
            pool.push(w.ket(j));
        }
    }
    Ok(pool)
}

/// Compresses both factors of `(I (x) q) rho (I (x) q)`.
fn block_pair(rho: &QState, q: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    let e = embed(q, rho.dims(), 1)?;
    let m = &e * rho.matrix() * &e;
    Ok((
        partial_trace(&m, rho.dims(), &[0])?,
        partial_trace(&m, rho.dims(), &[1])?,
    ))
}

/// `Tr_a((c (x) I) rho)` for a Hermitian probe `c` on the a side.
fn compress_side(rho: &QState, c: &CMatrix) -> Result<CMatrix> {
    let e = embed(c, rho.dims(), 0)?;
    Ok(hermitize(&partial_trace(
        &(e * rho.matrix()),
        rho.dims(),
        &[1],
    )?))
}

/// Splits orthonormal column blocks into eigenblocks of `probe`.
fn refine_blocks(blocks: Vec<CMatrix>, probe: &CMatrix) -> Result<Vec<CMatrix>> {
    let mut out = Vec::new();
    for v in blocks {
        let sub = hermitize(&(v.adjoint() * probe * &v));
        let eig = hermitian_eig(&sub)?;
        let k = eig.eigenvalues.len();
        let scale = eig.eigenvalues.iter().fold(1.0f64, |a, &l| a.max(l.abs()));
        let mut start = 0;
        for i in 1..=k {
            if i == k || eig.eigenvalues[i] - eig.eigenvalues[i - 1] > 1e-7 * scale {
                out.push(&v * eig.eigenvectors.columns(start, i - start));
                start = i;
            }
        }
    }
    Ok(out)
}

/// Detects the block-mixture form `sum_i g_i [u_i] (x) sigma_i` with `u_i`
/// drawn from the intermediate-basis pool and mutually orthogonal sides.
///
/// The sides of any such decomposition are simultaneously block-diagonal with
/// every compression `Tr_a((c (x) I) rho)`, so two random probes split the
/// side space into the candidate supports even through degenerate spectra;
/// each block must then condition `a` onto a pure pool ket, and the grouped
/// reconstruction must reproduce the state.
fn omega_block_form(rho: &QState, pool: &[CVector]) -> Result<bool> {
    if rho.n_parts() != 2 {
        return Err(Error::DimMismatch(format!(
            "need a bipartite state, got {} parts",
            rho.n_parts()
        )));
    }
    let d = rho.dims()[0];
    let rho_b = rho.marginal(&[1])?;
    let eig_b = hermitian_eig(rho_b.matrix())?;
    let lmax = eig_b.eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
    let keep: Vec<usize> = (0..eig_b.eigenvalues.len())
        .filter(|&i| eig_b.eigenvalues[i] > 1e-10 * lmax.max(1e-300))
        .collect();
    if keep.is_empty() {
        return Ok(false);
    }
    let support = CMatrix::from_fn(rho.dims()[1], keep.len(), |r, c| {
        eig_b.eigenvectors[(r, keep[c])]
    });
    let mut blocks = vec![support];
    let probes = [
        rho_b.matrix().clone(),
        compress_side(rho, &hermitize(&gaussian_matrix(d, d, 0xA11C_E5EED)))?,
        compress_side(rho, &hermitize(&gaussian_matrix(d, d, 0xB0B5_EED)))?,
    ];
    for probe in &probes {
        blocks = refine_blocks(blocks, probe)?;
    }
    let mut grouped: BTreeMap<usize, CMatrix> = BTreeMap::new();
    for v in &blocks {
        let q = v * v.adjoint();
        let (a_op, _) = block_pair(rho, &q)?;
        let mass = a_op.trace().re;
        if mass <= 1e-12 {
            continue;
        }
        let eig = hermitian_eig(&a_op)?;
        let top = eig.eigenvalues.last().copied().unwrap_or(0.0);
        if top / mass < 1.0 - 1e-8 {
            return Ok(false);
        }
        let u = eig.eigenvectors.column(d - 1);
        let matched = pool
            .iter()
            .position(|cand| cand.dotc(&u).norm_sqr() >= 1.0 - 1e-8);
        let Some(idx) = matched else {
            return Ok(false);
        };
        grouped.entry(idx).and_modify(|acc| *acc += &q).or_insert(q);
    }
    let mut rec = CMatrix::zeros(rho.dim(), rho.dim());
    for (idx, q) in &grouped {
        let (_, sigma) = block_pair(rho, q)?;
        rec += kron(&ket_proj(&pool[*idx]), &sigma);
    }
    Ok(trace_distance(&rec, rho.matrix())? <= 1e-8)
}

fn check_psd_block(m: &CMatrix, db: usize, what: &str) -> Result<f64> {
    if m.nrows() != db || m.ncols() != db {
        return Err(Error::BadSpec(format!(
            "{what} is {}x{}, expected {db}x{db}",
            m.nrows(),
            m.ncols()
        )));
    }
    let defect = herm_defect(m);
    if defect > tol::HERM * (1.0 + max_abs(m)) {
        return Err(Error::NotHermitian(defect));
    }
    let eig = hermitian_eig(&hermitize(m))?;
    let lmax = eig.eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
    let lmin = eig.eigenvalues.first().copied().unwrap_or(0.0);
    if lmin < -tol::PSD_REL * lmax.max(1.0) {
        return Err(Error::NotPsd(lmin));
    }
    Ok(m.trace().re)
}

/// Diagonal `Z^m = diag(omega^{k m})` in the computational basis.
fn diag_phase_power(d: usize, m: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |r, c| {
        if r == c {
            Complex64::from_polar(1.0, 2.0 * PI * ((r * m) % d) as f64 / d as f64)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Row-major multi-indices over `dims` (last index fastest).
fn multi_indices(dims: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = dims.iter().product();
    (0..total)
        .map(|mut flat| {
            let mut idx = vec![0; dims.len()];
            for pos in (0..dims.len()).rev() {
                idx[pos] = flat % dims[pos];
                flat /= dims[pos];
            }
            idx
        })
        .collect()
}

fn flat_index(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&g, &d)| acc * d + g)
}

fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    let mut k = 2;
    while k * k <= n {
        if n % k == 0 {
            return false;
        }
        k += 1;
    }
    true
}

fn unit(v: &CVector) -> Result<CVector> {
    let n = v.norm();
    if n < 1e-12 {
        return Err(Error::BadSpec("zero ket".into()));
    }
    Ok(v.unscale(n))
}

fn kron_ket(a: &CVector, b: &CVector) -> CVector {
    let nb = b.len();
    CVector::from_fn(a.len() * nb, |i, _| a[i / nb] * b[i % nb])
}

fn positive_weights(n: usize, total: f64, seed: u64) -> Vec<f64> {
    let g = gaussian_matrix(1, n, seed);
    let raw: Vec<f64> = (0..n).map(|i| g[(0, i)].norm_sqr() + 0.05).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v * total / sum).collect()
}
