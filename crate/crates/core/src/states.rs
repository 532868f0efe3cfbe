//! Validated density operators, measurement bases, POVMs, and seeded
//! random ensembles.
//!
//! A [`QState`] always stores an exactly Hermitian, unit-trace matrix together
//! with its subsystem dimensions and labels. Bases store their kets as unitary
//! columns with a canonical global phase: the largest-magnitude entry
//! (smallest index on ties) is rotated to the positive real axis.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::qmath::{
    self, cplx, embed, herm_defect, hermitize, ket_proj, kron, max_abs, partial_trace,
    partial_transpose, CMatrix, CVector,
};
use crate::tol;

fn default_labels(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| {
            if i < 26 {
                ((b'a' + i as u8) as char).to_string()
            } else {
                format!("s{i}")
            }
        })
        .collect()
}

/// Density operator on a tensor product of labelled subsystems.
#[derive(Clone, Debug)]
pub struct QState {
    mat: CMatrix,
    dims: Vec<usize>,
    labels: Vec<String>,
}

impl QState {
    /// Validates Hermiticity, positivity, and unit trace (to `1e-8`), then
    /// stores the hermitized, exactly renormalised matrix.
    pub fn new(mat: CMatrix, dims: Vec<usize>) -> Result<Self> {
        let labels = default_labels(dims.len());
        Self::with_labels(mat, dims, labels)
    }

    pub fn with_labels(mat: CMatrix, dims: Vec<usize>, labels: Vec<String>) -> Result<Self> {
        if dims.is_empty() || dims.iter().any(|&d| d == 0) {
            return Err(Error::DimMismatch(format!("invalid dims {dims:?}")));
        }
        let d = dims
            .iter()
            .try_fold(1usize, |acc, &k| acc.checked_mul(k))
            .ok_or_else(|| Error::DimMismatch(format!("dims {dims:?} overflow")))?;
        if mat.nrows() != d || mat.ncols() != d {
            return Err(Error::DimMismatch(format!(
                "matrix is {}x{} but dims {:?} require {d}x{d}",
                mat.nrows(),
                mat.ncols(),
                dims
            )));
        }
        if labels.len() != dims.len() {
            return Err(Error::DimMismatch(format!(
                "{} labels for {} subsystems",
                labels.len(),
                dims.len()
            )));
        }
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NotState("matrix has nonfinite entries".into()));
        }
        let defect = herm_defect(&mat);
        if defect > tol::HERM * (1.0 + max_abs(&mat)) {
            return Err(Error::NotState(format!("hermiticity defect {defect:.3e}")));
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > tol::TRACE_ONE || tr.im.abs() > tol::TRACE_ONE {
            return Err(Error::NotState(format!("trace {tr} is not 1")));
        }
        let h = hermitize(&mat);
        let eig = qmath::hermitian_eig(&h).expect("hermitized matrix");
        let lmax = eig.eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
        let lmin = eig.eigenvalues.first().copied().unwrap_or(0.0);
        if lmin < -tol::PSD_REL * lmax.max(1.0) {
            return Err(Error::NotState(format!("negative eigenvalue {lmin:.3e}")));
        }
        let mat = if (tr.re - 1.0).abs() <= 1e-13 {
            h
        } else {
            h.unscale(tr.re)
        };
        Ok(Self { mat, dims, labels })
    }

    /// Constructor for matrices positive and normalisable by construction;
    /// hermitizes and renormalises but skips the spectral gate.
    pub(crate) fn trusted(mat: CMatrix, dims: Vec<usize>, labels: Vec<String>) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), mat.nrows());
        debug_assert_eq!(labels.len(), dims.len());
        let h = hermitize(&mat);
        let tr = h.trace().re;
        let mat = if (tr - 1.0).abs() <= 1e-13 {
            h
        } else {
            h.unscale(tr)
        };
        Self { mat, dims, labels }
    }

    /// Pure state from a (not necessarily normalised) ket.
    pub fn from_ket(ket: &CVector, dims: Vec<usize>) -> Result<Self> {
        let d: usize = dims.iter().product();
        if dims.is_empty() || ket.len() != d {
            return Err(Error::DimMismatch(format!(
                "ket has length {} but dims {:?} require {d}",
                ket.len(),
                dims
            )));
        }
        let n = ket.norm();
        if n < 1e-12 {
            return Err(Error::NotState("zero vector".into()));
        }
        let v = ket.unscale(n);
        let labels = default_labels(dims.len());
        Ok(Self::trusted(ket_proj(&v), dims, labels))
    }

    pub fn relabel(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.dims.len() {
            return Err(Error::DimMismatch(format!(
                "{} labels for {} subsystems",
                labels.len(),
                self.dims.len()
            )));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Total Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn n_parts(&self) -> usize {
        self.dims.len()
    }

    /// Reduced state on the subsystems in `keep` (nonempty, strictly increasing).
    pub fn marginal(&self, keep: &[usize]) -> Result<QState> {
        if keep.is_empty() {
            return Err(Error::DimMismatch(
                "marginal needs at least one subsystem".into(),
            ));
        }
        let mat = partial_trace(&self.mat, &self.dims, keep)?;
        let dims = keep.iter().map(|&k| self.dims[k]).collect();
        let labels = keep.iter().map(|&k| self.labels[k].clone()).collect();
        Ok(Self::trusted(mat, dims, labels))
    }

    pub fn partial_transpose(&self, sys: usize) -> Result<CMatrix> {
        partial_transpose(&self.mat, &self.dims, sys)
    }

    /// Smallest eigenvalue of the partial transpose on `sys`; negative values
    /// witness entanglement across that cut.
    pub fn pt_min_eigenvalue(&self, sys: usize) -> Result<f64> {
        let pt = self.partial_transpose(sys)?;
        let eig = qmath::hermitian_eig(&pt)?;
        Ok(eig.eigenvalues.first().copied().unwrap_or(0.0))
    }

    /// Appends a minimal purifying subsystem labelled `r`.
    pub fn purify(&self) -> Result<QState> {
        let (psi, rank) = qmath::purify(&self.mat)?;
        let mut dims = self.dims.clone();
        dims.push(rank);
        let mut labels = self.labels.clone();
        labels.push("r".into());
        Ok(Self::trusted(ket_proj(&psi), dims, labels))
    }

    /// Spectrum, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        qmath::hermitian_eig(&self.mat)
            .expect("state matrix is Hermitian")
            .eigenvalues
    }

    pub fn largest_eigenvalue(&self) -> f64 {
        self.eigenvalues().last().copied().unwrap_or(0.0)
    }

    pub fn is_pure(&self) -> bool {
        self.largest_eigenvalue() >= 1.0 - tol::PURE
    }
}

/// Orthonormal measurement basis stored as unitary columns.
#[derive(Clone, Debug)]
pub struct BasisSet {
    dim: usize,
    name: String,
    kets: CMatrix,
}

impl BasisSet {
    /// Validates column orthonormality to `1e-10` and fixes each ket's global
    /// phase canonically.
    pub fn new(kets: CMatrix, name: impl Into<String>) -> Result<Self> {
        let d = kets.nrows();
        if d == 0 || kets.ncols() != d {
            return Err(Error::DimMismatch(format!(
                "basis matrix is {}x{}, need square",
                kets.nrows(),
                kets.ncols()
            )));
        }
        if kets.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NotBasis(f64::INFINITY));
        }
        let gram = kets.adjoint() * &kets;
        let defect = max_abs(&(gram - CMatrix::identity(d, d)));
        if defect > tol::ORTHO {
            return Err(Error::NotBasis(defect));
        }
        let mut fixed = kets;
        for j in 0..d {
            let phase = qmath::canonical_phase(fixed.column(j).into_owned().as_slice());
            if phase == qmath::C_ONE {
                continue;
            }
            for i in 0..d {
                fixed[(i, j)] *= phase;
            }
        }
        Ok(Self {
            dim: d,
            name: name.into(),
            kets: fixed,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kets(&self) -> &CMatrix {
        &self.kets
    }

    pub fn ket(&self, j: usize) -> CVector {
        self.kets.column(j).into_owned()
    }

    pub fn projector(&self, j: usize) -> CMatrix {
        let v = self.ket(j);
        ket_proj(&v)
    }

    /// Pinching map `m -> sum_j |v_j><v_j| m |v_j><v_j|`.
    pub fn dephase(&self, m: &CMatrix) -> CMatrix {
        let rot = self.kets.adjoint() * m * &self.kets;
        let diag = CMatrix::from_diagonal(&rot.diagonal());
        &self.kets * diag * self.kets.adjoint()
    }

    pub fn to_povm(&self) -> Povm {
        let elements = (0..self.dim).map(|j| self.projector(j)).collect();
        Povm::new(elements).expect("basis projectors form a POVM")
    }

    /// Largest deviation of the squared overlaps from `1/d`.
    pub fn unbiasedness_defect(&self, other: &BasisSet) -> f64 {
        assert_eq!(self.dim, other.dim);
        let o = self.kets.adjoint() * &other.kets;
        let target = 1.0 / self.dim as f64;
        o.iter()
            .fold(0.0f64, |acc, z| acc.max((z.norm_sqr() - target).abs()))
    }
}

/// Positive operator-valued measure; elements sum to the identity to `1e-10`.
#[derive(Clone, Debug)]
pub struct Povm {
    dim: usize,
    elements: Vec<CMatrix>,
}

impl Povm {
    pub fn new(elements: Vec<CMatrix>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::NotPovm("no elements".into()));
        }
        let d = elements[0].nrows();
        if d == 0 {
            return Err(Error::NotPovm("empty elements".into()));
        }
        let mut sum = CMatrix::zeros(d, d);
        for (j, e) in elements.iter().enumerate() {
            if e.nrows() != d || e.ncols() != d {
                return Err(Error::NotPovm(format!(
                    "element {j} is {}x{}, expected {d}x{d}",
                    e.nrows(),
                    e.ncols()
                )));
            }
            let defect = herm_defect(e);
            if defect > tol::HERM * (1.0 + max_abs(e)) {
                return Err(Error::NotPovm(format!(
                    "element {j} hermiticity defect {defect:.3e}"
                )));
            }
            let eig = qmath::hermitian_eig(&hermitize(e))?;
            let lmax = eig.eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
            let lmin = eig.eigenvalues.first().copied().unwrap_or(0.0);
            if lmin < -tol::PSD_REL * lmax.max(1.0) {
                return Err(Error::NotPovm(format!(
                    "element {j} has negative eigenvalue {lmin:.3e}"
                )));
            }
            sum += e;
        }
        let defect = max_abs(&(sum - CMatrix::identity(d, d)));
        if defect > tol::ORTHO {
            return Err(Error::NotPovm(format!("completeness defect {defect:.3e}")));
        }
        let elements = elements.iter().map(hermitize).collect();
        Ok(Self { dim: d, elements })
    }

    pub fn n(&self) -> usize {
        self.elements.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn element(&self, j: usize) -> &CMatrix {
        &self.elements[j]
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    /// Positive square roots of all elements.
    pub fn sqrted(&self) -> Vec<CMatrix> {
        self.elements
            .iter()
            .map(|e| qmath::matrix_func(e, qmath::MatrixFunc::Sqrt).expect("POVM element is PSD"))
            .collect()
    }

    /// True when every element has rank at most one.
    pub fn is_rank1(&self) -> bool {
        self.elements.iter().all(|e| {
            let eig = qmath::hermitian_eig(e).expect("POVM element is Hermitian");
            let lmax = eig.eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
            let eps = tol::SUPP_REL.max(1e-10) * lmax.max(1.0);
            eig.eigenvalues.iter().filter(|&&l| l > eps).count() <= 1
        })
    }
}

/// The ordered divisors of a dimension.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorSet {
    pub d: usize,
    pub divisors: Vec<usize>,
}

impl FactorSet {
    /// Number of divisors.
    pub fn eta(&self) -> usize {
        self.divisors.len()
    }
}

/// All divisors of `d`, ascending.
pub fn factors(d: usize) -> FactorSet {
    let divisors = (1..=d).filter(|s| d % s == 0).collect();
    FactorSet { d, divisors }
}

/// Computational basis `z` and its Fourier conjugate `x` with
/// `<z_k|x_j> = omega^{-jk}/sqrt(d)`, `omega = exp(2 pi i / d)`.
pub fn fourier_pair(d: usize) -> Result<(BasisSet, BasisSet)> {
    if d < 1 {
        return Err(Error::BadDim(d));
    }
    let z = BasisSet::new(CMatrix::identity(d, d), "z").expect("identity is unitary");
    let inv_sqrt = 1.0 / (d as f64).sqrt();
    let x_kets = CMatrix::from_fn(d, d, |k, j| {
        Complex64::from_polar(inv_sqrt, -2.0 * PI * (j * k) as f64 / d as f64)
    });
    let x = BasisSet::new(x_kets, "x").expect("Fourier matrix is unitary");
    Ok((z, x))
}

/// Intermediate basis for a divisor `s` of `d`:
/// `|w_{beta,gamma}> = sum_{n<s} omega^{-n gamma d/s} / sqrt(s) |z_{beta + n d/s}>`
/// with columns ordered lexicographically in `(beta, gamma)`,
/// `beta < d/s`, `gamma < s`. `s = 1` gives `z`, `s = d` gives `x`.
pub fn w_basis(d: usize, s: usize) -> Result<BasisSet> {
    if d < 1 {
        return Err(Error::BadDim(d));
    }
    if s == 0 || d % s != 0 {
        return Err(Error::NotDivisor(d, s));
    }
    let t = d / s;
    let inv_sqrt = 1.0 / (s as f64).sqrt();
    let mut kets = CMatrix::zeros(d, d);
    for beta in 0..t {
        for gamma in 0..s {
            let col = beta * s + gamma;
            for n in 0..s {
                kets[(beta + n * t, col)] =
                    Complex64::from_polar(inv_sqrt, -2.0 * PI * (n * gamma * t) as f64 / d as f64);
            }
        }
    }
    let name = if s == 1 {
        "z".to_string()
    } else if s == d {
        "x".to_string()
    } else {
        format!("w{s}")
    };
    BasisSet::new(kets, name)
}

/// Kronecker product of bases; names join with `*`.
pub fn tensor_basis(parts: &[&BasisSet]) -> Result<BasisSet> {
    if parts.is_empty() {
        return Err(Error::DimMismatch(
            "tensor_basis needs at least one factor".into(),
        ));
    }
    let mut kets = parts[0].kets.clone();
    let mut name = parts[0].name.clone();
    for p in &parts[1..] {
        kets = kron(&kets, &p.kets);
        name = format!("{name}*{}", p.name);
    }
    BasisSet::new(kets, name)
}

/// The qubit triple `(x, y, z)` of pairwise unbiased bases.
pub fn qubit_mub_triple() -> (BasisSet, BasisSet, BasisSet) {
    let (z, x) = fourier_pair(2).expect("qubit");
    let r = 1.0 / 2.0f64.sqrt();
    let y_kets = CMatrix::from_vec(
        2,
        2,
        vec![cplx(r, 0.0), cplx(0.0, r), cplx(r, 0.0), cplx(0.0, -r)],
    );
    let y = BasisSet::new(y_kets, "y").expect("unitary");
    (x, y, z)
}

/// A unit vector unbiased to both `z` and `x` at once.
///
/// Supported for `d = 2` (an eigenstate of the remaining unbiased qubit basis)
/// and odd `d` (quadratic phases `omega^{k^2}/sqrt(d)`).
pub fn fourier_unbiased_ket(d: usize) -> Result<CVector> {
    if d == 2 {
        let r = 1.0 / 2.0f64.sqrt();
        return Ok(CVector::from_vec(vec![cplx(r, 0.0), cplx(0.0, r)]));
    }
    if d < 2 || d % 2 == 0 {
        return Err(Error::BadDim(d));
    }
    let inv_sqrt = 1.0 / (d as f64).sqrt();
    Ok(CVector::from_fn(d, |k, _| {
        Complex64::from_polar(inv_sqrt, 2.0 * PI * ((k * k) % d) as f64 / d as f64)
    }))
}

/// Pinches subsystem `sys` of `m` in the given basis.
pub fn dephase_subsystem(
    m: &CMatrix,
    dims: &[usize],
    sys: usize,
    basis: &BasisSet,
) -> Result<CMatrix> {
    if sys >= dims.len() || dims[sys] != basis.dim() {
        return Err(Error::DimMismatch(format!(
            "basis of dimension {} cannot dephase subsystem {sys} of {dims:?}",
            basis.dim()
        )));
    }
    let u = embed(basis.kets(), dims, sys)?;
    let rot = u.adjoint() * m * &u;
    let d: usize = dims.iter().product();
    let stride: usize = dims[sys + 1..].iter().product();
    let ds = dims[sys];
    let mut out = CMatrix::zeros(d, d);
    for r in 0..d {
        let dr = (r / stride) % ds;
        for c in 0..d {
            if (c / stride) % ds == dr {
                out[(r, c)] = rot[(r, c)];
            }
        }
    }
    Ok(&u * out * u.adjoint())
}

/// Measurement statistics of a POVM applied to one subsystem.
#[derive(Clone, Debug)]
pub struct MeasStats {
    /// Outcome probabilities.
    pub probs: Vec<f64>,
    /// Unnormalised post-measurement operators on the `side` subsystem,
    /// `Tr_{not side}((P_j (x) I) rho)`; block `j` has trace `probs[j]`.
    pub blocks: Vec<CMatrix>,
}

/// Applies `povm` to subsystem `measured` and conditions on subsystem `side`.
pub fn measure_stats(rho: &QState, povm: &Povm, measured: usize, side: usize) -> Result<MeasStats> {
    let dims = rho.dims();
    if measured >= dims.len() || side >= dims.len() || measured == side {
        return Err(Error::DimMismatch(format!(
            "measured {measured} / side {side} invalid for {} subsystems",
            dims.len()
        )));
    }
    if povm.dim() != dims[measured] {
        return Err(Error::DimMismatch(format!(
            "POVM dimension {} but subsystem {measured} has dimension {}",
            povm.dim(),
            dims[measured]
        )));
    }
    let mut probs = Vec::with_capacity(povm.n());
    let mut blocks = Vec::with_capacity(povm.n());
    for j in 0..povm.n() {
        let e = embed(povm.element(j), dims, measured)?;
        let me = e * rho.matrix();
        let block = hermitize(&partial_trace(&me, dims, &[side])?);
        probs.push(block.trace().re.max(0.0));
        blocks.push(block);
    }
    Ok(MeasStats { probs, blocks })
}

/// SplitMix64 scrambler, used to derive independent per-trial seeds.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for trial `i` of a sweep started from `master`.
pub fn trial_seed(master: u64, i: u64) -> u64 {
    master ^ splitmix64(i)
}

fn gaussian_from_rng(rows: usize, cols: usize, rng: &mut ChaCha12Rng) -> CMatrix {
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        cplx(re, im)
    })
}

/// Seeded complex Gaussian matrix, the building block of all random ensembles.
pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> CMatrix {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    gaussian_from_rng(rows, cols, &mut rng)
}

/// Random density operator of the given rank, `G G† / tr` with a `dim x rank`
/// Gaussian `G`.
pub fn random_state(dims: &[usize], rank: usize, seed: u64) -> Result<QState> {
    if dims.is_empty() || dims.iter().any(|&d| d == 0) {
        return Err(Error::DimMismatch(format!("invalid dims {dims:?}")));
    }
    let d: usize = dims.iter().product();
    if rank == 0 || rank > d {
        return Err(Error::BadRank { rank, dim: d });
    }
    let g = gaussian_matrix(d, rank, seed);
    let m = &g * g.adjoint();
    Ok(QState::trusted(
        m,
        dims.to_vec(),
        default_labels(dims.len()),
    ))
}

/// Random unit vector.
pub fn random_ket(dim: usize, seed: u64) -> CVector {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    random_ket_from_rng(dim, &mut rng)
}

fn random_ket_from_rng(dim: usize, rng: &mut ChaCha12Rng) -> CVector {
    let g = gaussian_from_rng(dim, 1, rng);
    let v = CVector::from_column_slice(g.as_slice());
    let n = v.norm();
    v.unscale(n)
}

/// Haar-like random basis: orthonormalised seeded Gaussian with the canonical
/// per-ket phase fix.
pub fn random_basis(d: usize, seed: u64) -> Result<BasisSet> {
    if d == 0 {
        return Err(Error::BadDim(d));
    }
    let g = gaussian_matrix(d, d, seed);
    let q = g.qr().q();
    BasisSet::new(q, format!("u{seed}"))
}

/// Random `n`-element POVM `P_j = S^{-1/2} A_j† A_j S^{-1/2}` with Gaussian
/// `A_j` and `S = sum_j A_j† A_j`.
pub fn random_povm(d: usize, n: usize, seed: u64) -> Result<Povm> {
    if d == 0 {
        return Err(Error::BadDim(d));
    }
    if n == 0 {
        return Err(Error::NotPovm("no elements".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let grams: Vec<CMatrix> = (0..n)
        .map(|_| {
            let a = gaussian_from_rng(d, d, &mut rng);
            a.adjoint() * a
        })
        .collect();
    let mut s = CMatrix::zeros(d, d);
    for g in &grams {
        s += g;
    }
    let is = qmath::matrix_func(&hermitize(&s), qmath::MatrixFunc::InvSqrt)?;
    let elements = grams.iter().map(|g| hermitize(&(&is * g * &is))).collect();
    Povm::new(elements)
}

/// Random rank-one POVM from `n >= d` Gaussian kets, normalised through the
/// frame operator.
pub fn random_rank1_povm(d: usize, n: usize, seed: u64) -> Result<Povm> {
    if d == 0 {
        return Err(Error::BadDim(d));
    }
    if n < d {
        return Err(Error::NotPovm(format!(
            "need at least {d} rank-one elements to resolve the identity, got {n}"
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let projs: Vec<CMatrix> = (0..n)
        .map(|_| ket_proj(&random_ket_from_rng(d, &mut rng)))
        .collect();
    let mut s = CMatrix::zeros(d, d);
    for p in &projs {
        s += p;
    }
    let is = qmath::matrix_func(&hermitize(&s), qmath::MatrixFunc::InvSqrt)?;
    let elements = projs.iter().map(|p| hermitize(&(&is * p * &is))).collect();
    Povm::new(elements)
}
