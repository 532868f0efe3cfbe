//! JSON fixtures for states, bases, POVMs, projectors and family specs.
//!
//! Complex entries are `[re, im]` pairs and matrices are row-major nested
//! arrays, so fixtures stay human-diffable. Parsing runs the same validating
//! constructors as programmatic use: a file that parses is ready to use.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bounds::check_projector;
use crate::error::{Error, Result};
use crate::mus::{MusFamilySpec, OmegaTerm};
use crate::qmath::CMatrix;
use crate::states::{BasisSet, Povm, QState};

type RawMatrix = Vec<Vec<(f64, f64)>>;

fn matrix_to_raw(m: &CMatrix) -> RawMatrix {
    (0..m.nrows())
        .map(|r| {
            (0..m.ncols())
                .map(|c| (m[(r, c)].re, m[(r, c)].im))
                .collect()
        })
        .collect()
}

fn raw_to_matrix(raw: &RawMatrix) -> Result<CMatrix> {
    let rows = raw.len();
    if rows == 0 {
        return Err(Error::BadSpec("empty matrix".into()));
    }
    let cols = raw[0].len();
    if cols == 0 || raw.iter().any(|row| row.len() != cols) {
        return Err(Error::BadSpec("ragged or empty matrix rows".into()));
    }
    Ok(CMatrix::from_fn(rows, cols, |r, c| {
        Complex64::new(raw[r][c].0, raw[r][c].1)
    }))
}

#[derive(Serialize, Deserialize)]
struct StateDoc {
    dims: Vec<usize>,
    labels: Vec<String>,
    matrix: RawMatrix,
}

pub fn state_to_string(state: &QState) -> String {
    let doc = StateDoc {
        dims: state.dims().to_vec(),
        labels: state.labels().to_vec(),
        matrix: matrix_to_raw(state.matrix()),
    };
    serde_json::to_string_pretty(&doc).expect("serializable")
}

pub fn state_from_str(s: &str) -> Result<QState> {
    state_from_slice(s.as_bytes())
}

pub fn state_from_slice(bytes: &[u8]) -> Result<QState> {
    let doc: StateDoc = serde_json::from_slice(bytes)?;
    QState::with_labels(raw_to_matrix(&doc.matrix)?, doc.dims, doc.labels)
}

#[derive(Serialize, Deserialize)]
struct BasisDoc {
    dim: usize,
    name: String,
    /// Kets as columns.
    kets: RawMatrix,
}

pub fn basis_to_string(basis: &BasisSet) -> String {
    let doc = BasisDoc {
        dim: basis.dim(),
        name: basis.name().to_string(),
        kets: matrix_to_raw(basis.kets()),
    };
    serde_json::to_string_pretty(&doc).expect("serializable")
}

pub fn basis_from_str(s: &str) -> Result<BasisSet> {
    basis_from_slice(s.as_bytes())
}

pub fn basis_from_slice(bytes: &[u8]) -> Result<BasisSet> {
    let doc: BasisDoc = serde_json::from_slice(bytes)?;
    let kets = raw_to_matrix(&doc.kets)?;
    if kets.nrows() != doc.dim {
        return Err(Error::BadSpec(format!(
            "dim field says {} but kets are {}x{}",
            doc.dim,
            kets.nrows(),
            kets.ncols()
        )));
    }
    BasisSet::new(kets, doc.name)
}

#[derive(Serialize, Deserialize)]
struct PovmDoc {
    elements: Vec<RawMatrix>,
}

pub fn povm_to_string(povm: &Povm) -> String {
    let doc = PovmDoc {
        elements: povm.elements().iter().map(matrix_to_raw).collect(),
    };
    serde_json::to_string_pretty(&doc).expect("serializable")
}

pub fn povm_from_str(s: &str) -> Result<Povm> {
    povm_from_slice(s.as_bytes())
}

pub fn povm_from_slice(bytes: &[u8]) -> Result<Povm> {
    let doc: PovmDoc = serde_json::from_slice(bytes)?;
    Povm::new(
        doc.elements
            .iter()
            .map(raw_to_matrix)
            .collect::<Result<Vec<_>>>()?,
    )
}

#[derive(Serialize, Deserialize)]
struct ProjectorDoc {
    matrix: RawMatrix,
}

pub fn projector_to_string(pi: &CMatrix) -> String {
    let doc = ProjectorDoc {
        matrix: matrix_to_raw(pi),
    };
    serde_json::to_string_pretty(&doc).expect("serializable")
}

pub fn projector_from_str(s: &str) -> Result<CMatrix> {
    projector_from_slice(s.as_bytes())
}

pub fn projector_from_slice(bytes: &[u8]) -> Result<CMatrix> {
    let doc: ProjectorDoc = serde_json::from_slice(bytes)?;
    let pi = raw_to_matrix(&doc.matrix)?;
    check_projector(&pi)?;
    Ok(pi)
}

#[derive(Serialize, Deserialize)]
struct OmegaTermDoc {
    s: usize,
    beta: usize,
    gamma: usize,
    weight: f64,
    side: RawMatrix,
}

#[derive(Serialize, Deserialize)]
struct SpecDoc {
    dims: Vec<usize>,
    s: Vec<usize>,
    p: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    q: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    side_blocks: Option<Vec<RawMatrix>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    omega_terms: Option<Vec<OmegaTermDoc>>,
}

pub fn spec_to_string(spec: &MusFamilySpec) -> String {
    let doc = SpecDoc {
        dims: spec.dims.clone(),
        s: spec.s.clone(),
        p: spec.p.clone(),
        q: spec.q.clone(),
        side_blocks: spec
            .side_blocks
            .as_ref()
            .map(|v| v.iter().map(matrix_to_raw).collect()),
        omega_terms: spec.omega_terms.as_ref().map(|v| {
            v.iter()
                .map(|t| OmegaTermDoc {
                    s: t.s,
                    beta: t.beta,
                    gamma: t.gamma,
                    weight: t.weight,
                    side: matrix_to_raw(&t.side),
                })
                .collect()
        }),
    };
    serde_json::to_string_pretty(&doc).expect("serializable")
}

pub fn spec_from_str(s: &str) -> Result<MusFamilySpec> {
    spec_from_slice(s.as_bytes())
}

pub fn spec_from_slice(bytes: &[u8]) -> Result<MusFamilySpec> {
    let doc: SpecDoc = serde_json::from_slice(bytes)?;
    let side_blocks = doc
        .side_blocks
        .map(|v| v.iter().map(raw_to_matrix).collect::<Result<Vec<_>>>())
        .transpose()?;
    let omega_terms = doc
        .omega_terms
        .map(|v| {
            v.into_iter()
                .map(|t| {
                    Ok(OmegaTerm {
                        s: t.s,
                        beta: t.beta,
                        gamma: t.gamma,
                        weight: t.weight,
                        side: raw_to_matrix(&t.side)?,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .transpose()?;
    Ok(MusFamilySpec {
        dims: doc.dims,
        s: doc.s,
        p: doc.p,
        q: doc.q,
        side_blocks,
        omega_terms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mus::{construct_omega, construct_thm4_iii};
    use crate::qmath::max_abs;
    use crate::states::{fourier_pair, random_povm, random_state, w_basis};

    #[test]
    fn state_round_trip_is_bitwise() {
        for seed in [0u64, 7, 19] {
            let rho = random_state(&[2, 3], 4, seed).unwrap();
            let back = state_from_str(&state_to_string(&rho)).unwrap();
            assert_eq!(back.dims(), rho.dims());
            assert_eq!(back.labels(), rho.labels());
            assert!(max_abs(&(back.matrix() - rho.matrix())) == 0.0);
        }
        let spec = MusFamilySpec::random(&[4], &[2], 2, 5).unwrap();
        let rho = construct_thm4_iii(&spec).unwrap();
        let back = state_from_str(&state_to_string(&rho)).unwrap();
        assert!(max_abs(&(back.matrix() - rho.matrix())) == 0.0);
    }

    #[test]
    fn basis_and_povm_round_trips() {
        let w = w_basis(6, 2).unwrap();
        let back = basis_from_str(&basis_to_string(&w)).unwrap();
        assert_eq!(back.name(), "w2");
        assert!(max_abs(&(back.kets() - w.kets())) == 0.0);

        let povm = random_povm(3, 5, 9).unwrap();
        let back = povm_from_str(&povm_to_string(&povm)).unwrap();
        assert_eq!(back.n(), povm.n());
        for (a, b) in back.elements().iter().zip(povm.elements()) {
            assert!(max_abs(&(a - b)) == 0.0);
        }
    }

    #[test]
    fn projector_round_trip_and_gate() {
        let w = w_basis(4, 2).unwrap();
        let pi = w.projector(1) + w.projector(2);
        let back = projector_from_str(&projector_to_string(&pi)).unwrap();
        assert!(max_abs(&(&back - &pi)) == 0.0);

        let half = CMatrix::identity(2, 2).scale(0.5);
        assert!(matches!(
            projector_from_str(&projector_to_string(&half)),
            Err(Error::NotProjector(_))
        ));
    }

    #[test]
    fn spec_round_trips_rebuild_identical_states() {
        let spec = MusFamilySpec::random(&[2, 3], &[1, 3], 2, 21).unwrap();
        let back = spec_from_str(&spec_to_string(&spec)).unwrap();
        assert_eq!(back.p, spec.p);
        assert_eq!(back.q, spec.q);
        let a = crate::mus::construct_thm5(&spec).unwrap();
        let b = crate::mus::construct_thm5(&back).unwrap();
        assert!(max_abs(&(a.matrix() - b.matrix())) == 0.0);

        let (z, _) = fourier_pair(2).unwrap();
        let omega = MusFamilySpec {
            dims: vec![2],
            omega_terms: Some(vec![
                OmegaTerm {
                    s: 2,
                    beta: 0,
                    gamma: 0,
                    weight: 0.4,
                    side: z.projector(0),
                },
                OmegaTerm {
                    s: 1,
                    beta: 1,
                    gamma: 0,
                    weight: 0.6,
                    side: z.projector(1),
                },
            ]),
            ..Default::default()
        };
        let text = spec_to_string(&omega);
        assert!(!text.contains("side_blocks"), "None fields are omitted");
        let back = spec_from_str(&text).unwrap();
        let a = construct_omega(&omega).unwrap();
        let b = construct_omega(&back).unwrap();
        assert!(max_abs(&(a.matrix() - b.matrix())) == 0.0);
    }

    #[test]
    fn parse_failures_are_typed() {
        assert!(matches!(state_from_str("{"), Err(Error::Json(_))));
        assert!(matches!(
            state_from_str(
                r#"{"dims": [2], "labels": ["a"], "matrix": [[[1.0,0.0],[0.0,0.0]],[[0.0,0.0]]]}"#
            ),
            Err(Error::BadSpec(_))
        ));
        assert!(matches!(
            state_from_str(
                r#"{"dims": [2], "labels": ["a"], "matrix": [[[2.0,0.0],[0.0,0.0]],[[0.0,0.0],[-1.0,0.0]]]}"#
            ),
            Err(Error::NotState(_))
        ));
        let (z, _) = fourier_pair(2).unwrap();
        let mut doc: serde_json::Value = serde_json::from_str(&basis_to_string(&z)).unwrap();
        doc["dim"] = serde_json::json!(3);
        assert!(matches!(
            basis_from_str(&doc.to_string()),
            Err(Error::BadSpec(_))
        ));
        // JSON has no nonfinite literals and overflowing floats are rejected,
        // so parsed fixtures are always finite.
        assert!(matches!(
            projector_from_str(r#"{"matrix": [[[1e999, 0.0]]]}"#),
            Err(Error::Json(_))
        ));
        assert!(matches!(
            state_from_str(
                r#"{"dims": [4294967296, 4294967296, 4294967296], "labels": ["a", "b", "c"], "matrix": [[[1.0, 0.0]]]}"#
            ),
            Err(Error::DimMismatch(_))
        ));
    }

    #[test]
    fn full_precision_numbers_survive() {
        let v = [1.0 / 3.0, 2.0f64.sqrt() / 2.0, 0.1 + 0.2];
        let pi = CMatrix::identity(3, 3);
        let mut m = pi.clone();
        for (i, x) in v.iter().enumerate() {
            m[(i, i)] = Complex64::new(*x / (v.iter().sum::<f64>()), 0.0);
        }
        let rho = QState::new(m, vec![3]).unwrap();
        let back = state_from_str(&state_to_string(&rho)).unwrap();
        assert!(max_abs(&(back.matrix() - rho.matrix())) == 0.0);
    }
}
