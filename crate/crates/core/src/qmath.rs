//! Dense complex linear algebra for Hermitian operators.
//!
//! Everything here works on `nalgebra` dynamic matrices over `Complex<f64>`.
//! Subsystem indexing is row-major: for dims `[d0, d1, ...]` the flat index of
//! the multi-index `(i0, i1, ...)` is `i0*d1*d2*... + i1*d2*... + ...`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tol;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const C_ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const C_ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn cplx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Largest entry magnitude; zero for an empty matrix.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Maximum deviation from Hermitian symmetry, `max_ij |m_ij - conj(m_ji)|`.
pub fn herm_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Hermitian part `(m + m†)/2`.
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

fn check_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::DimMismatch(format!(
            "expected a nonempty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

fn check_hermitian(m: &CMatrix) -> Result<()> {
    let defect = herm_defect(m);
    if defect > tol::HERM * (1.0 + max_abs(m)) {
        return Err(Error::NotHermitian(defect));
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues are sorted ascending. Each eigenvector's global phase is fixed
/// by rotating its largest-magnitude entry (smallest index on ties) to the
/// positive real axis, so the decomposition is deterministic for a fixed
/// input. Reconstruction `V diag(w) V†` matches the input to
/// `1e-10 * (1 + max |entry|)`.
pub struct HermEig {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

pub fn hermitian_eig(m: &CMatrix) -> Result<HermEig> {
    let d = check_square(m)?;
    check_hermitian(m)?;
    let se = hermitize(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut eigenvectors = CMatrix::zeros(d, d);
    for (dst, &src) in order.iter().enumerate() {
        let col = se.eigenvectors.column(src).into_owned();
        let phase = canonical_phase(col.as_slice());
        for i in 0..d {
            eigenvectors[(i, dst)] = if phase == C_ONE {
                col[i]
            } else {
                col[i] * phase
            };
        }
    }
    Ok(HermEig {
        eigenvalues,
        eigenvectors,
    })
}

/// Multiplier rotating the vector's pivot entry to the positive real axis.
///
/// The pivot is the smallest index whose magnitude is within a relative
/// `1e-9` of the largest, so equal-magnitude entries tie-break by index
/// instead of roundoff noise. Phases within `1e-12` of one snap to exactly
/// one, making the canonicalisation bitwise idempotent.
pub(crate) fn canonical_phase(v: &[Complex64]) -> Complex64 {
    let max_mag = v.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
    if max_mag <= 0.0 {
        return C_ONE;
    }
    let cutoff = max_mag * (1.0 - 1e-9);
    let pivot = v
        .iter()
        .find(|z| z.norm() >= cutoff)
        .expect("some entry attains the maximum");
    let phase = pivot.conj() / cplx(pivot.norm(), 0.0);
    if (phase - C_ONE).norm() <= 1e-12 {
        C_ONE
    } else {
        phase
    }
}

impl HermEig {
    /// `V diag(vals) V†`, hermitized.
    pub fn reassemble(&self, vals: &[f64]) -> CMatrix {
        let d = self.eigenvectors.nrows();
        let mut scaled = self.eigenvectors.clone();
        for j in 0..d {
            let s = cplx(vals[j], 0.0);
            for i in 0..d {
                scaled[(i, j)] *= s;
            }
        }
        hermitize(&(scaled * self.eigenvectors.adjoint()))
    }
}

/// Spectral functions of a positive semidefinite Hermitian matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MatrixFunc {
    /// Natural logarithm on the support; zero eigenvalues map to zero.
    Log,
    Sqrt,
    /// Pseudo-inverse square root: zero eigenvalues map to zero.
    InvSqrt,
}

pub fn matrix_func(m: &CMatrix, f: MatrixFunc) -> Result<CMatrix> {
    let eig = hermitian_eig(m)?;
    let lmax = eig.eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
    let lmin = eig.eigenvalues.first().copied().unwrap_or(0.0);
    if lmin < -tol::PSD_REL * lmax.max(1.0) {
        return Err(Error::NotPsd(lmin));
    }
    let eps_supp = tol::SUPP_REL * lmax;
    let vals: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&l| match f {
            MatrixFunc::Log => {
                if l > eps_supp {
                    l.ln()
                } else {
                    0.0
                }
            }
            MatrixFunc::Sqrt => l.max(0.0).sqrt(),
            MatrixFunc::InvSqrt => {
                if l > eps_supp {
                    1.0 / l.sqrt()
                } else {
                    0.0
                }
            }
        })
        .collect();
    Ok(eig.reassemble(&vals))
}

/// Kronecker product, row-major subsystem order (`a` is the slow index).
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

fn check_dims(m: &CMatrix, dims: &[usize]) -> Result<()> {
    if dims.is_empty() || dims.iter().any(|&d| d == 0) {
        return Err(Error::DimMismatch(format!(
            "invalid subsystem dimensions {dims:?}"
        )));
    }
    let d: usize = dims.iter().product();
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::DimMismatch(format!(
            "matrix is {}x{} but dims {:?} require {}x{}",
            m.nrows(),
            m.ncols(),
            dims,
            d,
            d
        )));
    }
    Ok(())
}

/// Flat row offsets of every multi-index over the subsystems `sys`.
fn subsystem_offsets(sys: &[usize], dims: &[usize], st: &[usize]) -> Vec<usize> {
    let n: usize = sys.iter().map(|&k| dims[k]).product();
    (0..n)
        .map(|flat| {
            let mut rem = flat;
            let mut off = 0usize;
            for pos in (0..sys.len()).rev() {
                let d = dims[sys[pos]];
                off += (rem % d) * st[sys[pos]];
                rem /= d;
            }
            off
        })
        .collect()
}

/// Partial trace keeping the subsystems in `keep` (strictly increasing).
///
/// `keep` may be empty, in which case the result is the 1x1 total trace.
pub fn partial_trace(m: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    check_dims(m, dims)?;
    for w in keep.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::DimMismatch(format!(
                "keep indices must be strictly increasing, got {keep:?}"
            )));
        }
    }
    if keep.iter().any(|&k| k >= dims.len()) {
        return Err(Error::DimMismatch(format!(
            "keep indices {keep:?} out of range for {} subsystems",
            dims.len()
        )));
    }
    let traced: Vec<usize> = (0..dims.len()).filter(|i| !keep.contains(i)).collect();
    let st = strides(dims);
    let keep_off = subsystem_offsets(keep, dims, &st);
    let traced_off = subsystem_offsets(&traced, dims, &st);
    let dk = keep_off.len();
    let mut out = CMatrix::zeros(dk, dk);
    for i in 0..dk {
        for j in 0..dk {
            let mut acc = C_ZERO;
            for &t in &traced_off {
                acc += m[(keep_off[i] + t, keep_off[j] + t)];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// Transpose of the single subsystem `sys`, identity on the rest.
pub fn partial_transpose(m: &CMatrix, dims: &[usize], sys: usize) -> Result<CMatrix> {
    check_dims(m, dims)?;
    if sys >= dims.len() {
        return Err(Error::DimMismatch(format!(
            "subsystem {sys} out of range for {} subsystems",
            dims.len()
        )));
    }
    let st = strides(dims);
    let s = st[sys];
    let ds = dims[sys];
    let d = m.nrows();
    let mut out = CMatrix::zeros(d, d);
    for r in 0..d {
        let dr = (r / s) % ds;
        for c in 0..d {
            let dc = (c / s) % ds;
            let r2 = (r + dc * s) - dr * s;
            let c2 = (c + dr * s) - dc * s;
            out[(r2, c2)] = m[(r, c)];
        }
    }
    Ok(out)
}

/// Embeds `op` acting on subsystem `sys`, identity elsewhere.
pub fn embed(op: &CMatrix, dims: &[usize], sys: usize) -> Result<CMatrix> {
    if sys >= dims.len() {
        return Err(Error::DimMismatch(format!(
            "subsystem {sys} out of range for {} subsystems",
            dims.len()
        )));
    }
    if op.nrows() != dims[sys] || op.ncols() != dims[sys] {
        return Err(Error::DimMismatch(format!(
            "operator is {}x{} but subsystem {} has dimension {}",
            op.nrows(),
            op.ncols(),
            sys,
            dims[sys]
        )));
    }
    let before: usize = dims[..sys].iter().product();
    let after: usize = dims[sys + 1..].iter().product();
    let left = kron(&CMatrix::identity(before, before), op);
    Ok(kron(&left, &CMatrix::identity(after, after)))
}

/// Operator norm (largest singular value).
pub fn sup_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    sv.iter().fold(0.0, |acc: f64, &s| acc.max(s))
}

/// Orthogonal projector onto the support (eigenvalues above `1e-12 * lambda_max`).
pub fn support_projector(rho: &CMatrix) -> Result<CMatrix> {
    let eig = hermitian_eig(rho)?;
    let lmax = eig.eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
    let lmin = eig.eigenvalues.first().copied().unwrap_or(0.0);
    if lmin < -tol::PSD_REL * lmax.max(1.0) {
        return Err(Error::NotPsd(lmin));
    }
    let eps = tol::SUPP_REL * lmax;
    let vals: Vec<f64> = eig
        .eigenvalues
        .iter()
        .map(|&l| if l > eps { 1.0 } else { 0.0 })
        .collect();
    Ok(eig.reassemble(&vals))
}

/// Purifies a density operator with the smallest possible ancilla.
///
/// Returns the purifying unit vector (ancilla appended as the fast index,
/// dimension `rank`) and the rank. Eigenvalues pair with ancilla levels in
/// descending order, so a pure input returns a vector proportional to
/// `psi (x) |0>`.
pub fn purify(rho: &CMatrix) -> Result<(CVector, usize)> {
    let d = check_square(rho)?;
    let eig = hermitian_eig(rho).map_err(|e| Error::NotState(e.to_string()))?;
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > tol::TRACE_ONE || tr.im.abs() > tol::TRACE_ONE {
        return Err(Error::NotState(format!("trace {tr} is not 1")));
    }
    let lmax = eig.eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
    let lmin = eig.eigenvalues.first().copied().unwrap_or(0.0);
    if lmin < -tol::PSD_REL * lmax.max(1.0) {
        return Err(Error::NotState(format!("negative eigenvalue {lmin:.3e}")));
    }
    let eps = tol::SUPP_REL * lmax;
    let rank = eig.eigenvalues.iter().filter(|&&l| l > eps).count().max(1);
    let mut psi = CVector::zeros(d * rank);
    for k in 0..rank {
        let src = d - 1 - k;
        let w = cplx(eig.eigenvalues[src].max(0.0).sqrt(), 0.0);
        for i in 0..d {
            psi[i * rank + k] = w * eig.eigenvectors[(i, src)];
        }
    }
    let n = psi.norm();
    Ok((psi.unscale(n), rank))
}

/// Trace distance `0.5 * ||a - b||_1` between Hermitian operators.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::DimMismatch(format!(
            "shapes {:?} and {:?} differ",
            a.shape(),
            b.shape()
        )));
    }
    check_square(a)?;
    let eig = hermitian_eig(&hermitize(&(a - b)))?;
    Ok(0.5 * eig.eigenvalues.iter().map(|l| l.abs()).sum::<f64>())
}

/// Rank-one projector `|v><v|`.
pub fn ket_proj(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

pub(crate) fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
