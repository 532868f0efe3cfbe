//! Numerical search for minimum-uncertainty states: simplex descent over
//! relation gaps, the brute-force Bloch-ball scan for the qubit triple, and
//! projections onto the analytic equality families.

use crate::bounds::{eval_relation, RelationId, RelationInputs};
use crate::error::{Error, Result};
use crate::qmath::{trace_distance, CMatrix};
use crate::states::{
    factors, fourier_pair, gaussian_matrix, qubit_mub_triple, trial_seed, w_basis, QState,
};

/// A relation gap as an objective over the full state on fixed dimensions.
#[derive(Clone, Debug)]
pub struct GapObjective {
    relation: RelationId,
    dims: Vec<usize>,
}

impl GapObjective {
    /// Supports the single- and two-system relations whose minimisers are the
    /// analytic families: EQ20-EQ24.
    pub fn new(relation: RelationId, dims: Vec<usize>) -> Result<Self> {
        match relation {
            RelationId::Eq20 | RelationId::Eq21 => {
                if dims.len() != 1 || dims[0] < 2 {
                    return Err(Error::DimMismatch(format!(
                        "{relation} searches a single system, got {dims:?}"
                    )));
                }
            }
            RelationId::Eq22 | RelationId::Eq23 => {
                if dims.len() != 2 || dims[0] < 2 || dims[1] == 0 {
                    return Err(Error::DimMismatch(format!(
                        "{relation} searches a bipartite system, got {dims:?}"
                    )));
                }
            }
            RelationId::Eq24 => {
                if dims != [2] {
                    return Err(Error::DimMismatch(format!(
                        "{relation} searches a qubit, got {dims:?}"
                    )));
                }
            }
            other => {
                return Err(Error::UnsupportedRelation(format!(
                    "{other}: gap search covers EQ20-EQ24"
                )))
            }
        }
        Ok(Self { relation, dims })
    }

    pub fn relation(&self) -> RelationId {
        self.relation
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// The relation gap at `state`.
    pub fn evaluate(&self, state: &QState) -> Result<f64> {
        if state.dims() != self.dims.as_slice() {
            return Err(Error::DimMismatch(format!(
                "state on {:?}, objective on {:?}",
                state.dims(),
                self.dims
            )));
        }
        Ok(eval_relation(self.relation, state, &RelationInputs::default())?.gap)
    }

    /// Interprets `2 d^2` reals as an unnormalised `d x d` factor `M` and
    /// evaluates at `M M^dag / tr`.
    fn params_to_state(&self, x: &[f64]) -> Result<QState> {
        let d = self.total_dim();
        let m = CMatrix::from_fn(d, d, |r, c| {
            let k = 2 * (c * d + r);
            num_complex::Complex64::new(x[k], x[k + 1])
        });
        let rho = &m * m.adjoint();
        let tr = rho.trace().re;
        if tr < 1e-14 {
            return Err(Error::NotState("zero-norm search point".into()));
        }
        QState::new(rho.scale(1.0 / tr), self.dims.clone())
    }

    fn eval_params(&self, x: &[f64]) -> f64 {
        match self.params_to_state(x).and_then(|s| self.evaluate(&s)) {
            Ok(v) => v,
            Err(_) => 1e6,
        }
    }
}

/// Outcome of a multistart gap minimisation.
#[derive(Clone, Debug)]
pub struct SearchResult {
    pub best_state: QState,
    pub best_gap: f64,
    pub iterations: usize,
    pub restarts_used: usize,
    pub converged: bool,
}

struct NmRun {
    value: f64,
    point: Vec<f64>,
    iterations: usize,
    converged: bool,
}

/// Derivative-free simplex descent (coefficients 1, 2, 0.5, 0.5) on the gap,
/// restarted from seeded random factors and merged best-first. Deterministic
/// for a fixed seed and configuration.
pub fn minimize_gap(
    obj: &GapObjective,
    seed: u64,
    restarts: usize,
    max_iter: usize,
) -> Result<SearchResult> {
    if restarts == 0 {
        return Err(Error::BadSpec("need at least one restart".into()));
    }
    let n = 2 * obj.total_dim() * obj.total_dim();
    let mut best: Option<NmRun> = None;
    let mut iterations = 0;
    for r in 0..restarts {
        let run = nelder_mead(
            &mut |x| obj.eval_params(x),
            n,
            trial_seed(seed, r as u64),
            max_iter,
        );
        iterations += run.iterations;
        if best.as_ref().is_none_or(|b| run.value < b.value) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one restart");
    let best_state = obj.params_to_state(&best.point)?;
    let best_gap = obj.evaluate(&best_state)?;
    Ok(SearchResult {
        best_state,
        best_gap,
        iterations,
        restarts_used: restarts,
        converged: best.converged,
    })
}

fn nelder_mead(f: &mut dyn FnMut(&[f64]) -> f64, n: usize, seed: u64, max_iter: usize) -> NmRun {
    let g = gaussian_matrix(1, n, seed);
    let x0: Vec<f64> = (0..n).map(|i| g[(0, i)].re).collect();
    let mut verts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    verts.push(x0.clone());
    for i in 0..n {
        let mut v = x0.clone();
        v[i] += 0.5;
        verts.push(v);
    }
    let mut vals: Vec<f64> = verts.iter().map(|v| f(v)).collect();

    let order = |verts: &mut Vec<Vec<f64>>, vals: &mut Vec<f64>| {
        let mut idx: Vec<usize> = (0..vals.len()).collect();
        idx.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).expect("finite objective"));
        *verts = idx.iter().map(|&i| verts[i].clone()).collect();
        *vals = idx.iter().map(|&i| vals[i]).collect();
    };
    let diameter = |verts: &[Vec<f64>]| {
        verts[1..]
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&verts[0])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0f64, f64::max)
    };

    let mut iterations = 0;
    let mut converged = false;
    loop {
        order(&mut verts, &mut vals);
        if diameter(&verts) < 1e-9 {
            converged = true;
            break;
        }
        if iterations >= max_iter {
            break;
        }
        iterations += 1;

        let worst = n;
        let centroid: Vec<f64> = (0..n)
            .map(|i| verts[..n].iter().map(|v| v[i]).sum::<f64>() / n as f64)
            .collect();
        let shifted = |coef: f64| -> Vec<f64> {
            (0..n)
                .map(|i| centroid[i] + coef * (centroid[i] - verts[worst][i]))
                .collect()
        };
        let xr = shifted(1.0);
        let fr = f(&xr);
        if fr < vals[0] {
            let xe = shifted(2.0);
            let fe = f(&xe);
            if fe < fr {
                verts[worst] = xe;
                vals[worst] = fe;
            } else {
                verts[worst] = xr;
                vals[worst] = fr;
            }
        } else if fr < vals[n - 1] {
            verts[worst] = xr;
            vals[worst] = fr;
        } else {
            let (xc, fc) = if fr < vals[worst] {
                let xc = shifted(0.5);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = shifted(-0.5);
                let fc = f(&xc);
                (xc, fc)
            };
            if fc < fr.min(vals[worst]) {
                verts[worst] = xc;
                vals[worst] = fc;
            } else {
                for i in 1..=n {
                    let v: Vec<f64> = (0..n)
                        .map(|k| verts[0][k] + 0.5 * (verts[i][k] - verts[0][k]))
                        .collect();
                    vals[i] = f(&v);
                    verts[i] = v;
                }
            }
        }
    }
    order(&mut verts, &mut vals);
    NmRun {
        value: vals[0],
        point: verts[0].clone(),
        iterations,
        converged,
    }
}

/// One sampled Bloch vector with its triple-uncertainty excess
/// `zeta = H(x) + H(y) + H(z) - 2 - S(rho)`.
#[derive(Clone, Copy, Debug)]
pub struct BlochPoint {
    pub r: [f64; 3],
    pub zeta: f64,
}

/// Grid scan over the closed Bloch ball.
#[derive(Clone, Debug)]
pub struct BlochScan {
    pub step: f64,
    pub points: Vec<BlochPoint>,
}

impl BlochScan {
    pub fn min_zeta(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.zeta)
            .fold(f64::INFINITY, f64::min)
    }

    /// `r_x,r_y,r_z,zeta` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r_x,r_y,r_z,zeta\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{},{}\n", p.r[0], p.r[1], p.r[2], p.zeta));
        }
        out
    }
}

fn binary_entropy(p: f64) -> f64 {
    let p = p.clamp(0.0, 1.0);
    let mut h = 0.0;
    if p > 0.0 {
        h -= p * p.log2();
    }
    if p < 1.0 {
        h -= (1.0 - p) * (1.0 - p).log2();
    }
    h
}

fn zeta_of(r: [f64; 3]) -> f64 {
    let norm = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt().min(1.0);
    let h: f64 = r.iter().map(|&v| binary_entropy((1.0 + v) / 2.0)).sum();
    h - 2.0 - binary_entropy((1.0 + norm) / 2.0)
}

/// Evaluates `zeta` on a cubic grid of spacing `step` intersected with the
/// closed Bloch ball. For the qubit triple relation this is the brute-force
/// oracle: `zeta` vanishes exactly on the axis diameters.
pub fn bloch_grid_scan(step: f64) -> Result<BlochScan> {
    if !(step > 0.0 && step <= 0.1) {
        return Err(Error::BadStep(step));
    }
    let nsteps = (1.0 / step).floor() as i64;
    let mut points = Vec::new();
    for i in -nsteps..=nsteps {
        for j in -nsteps..=nsteps {
            for k in -nsteps..=nsteps {
                let r = [i as f64 * step, j as f64 * step, k as f64 * step];
                if r[0] * r[0] + r[1] * r[1] + r[2] * r[2] > 1.0 + 1e-12 {
                    continue;
                }
                points.push(BlochPoint {
                    r,
                    zeta: zeta_of(r),
                });
            }
        }
    }
    Ok(BlochScan { step, points })
}

/// Analytic equality family to project onto.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    /// Basis projectors of `z` or `x` (prime-dimension family).
    Thm2,
    /// Basis projectors of every intermediate basis `w^s`.
    Thm4,
    /// Qubit states diagonal in `x`, `y` or `z`.
    Corollary3,
}

/// Minimum trace distance from `state` to the family, with a description of
/// the closest member.
pub fn nearest_family(state: &QState, family: Family) -> Result<(f64, String)> {
    let d = state.dim();
    let m = state.matrix();
    match family {
        Family::Thm2 => {
            let (z, x) = fourier_pair(d)?;
            let mut best = (f64::INFINITY, String::new());
            for b in [&z, &x] {
                for k in 0..d {
                    let dist = trace_distance(m, &b.projector(k))?;
                    if dist < best.0 {
                        best = (dist, format!("{}[{k}]", b.name()));
                    }
                }
            }
            Ok(best)
        }
        Family::Thm4 => {
            let mut best = (f64::INFINITY, String::new());
            for &s in &factors(d).divisors {
                let w = w_basis(d, s)?;
                for k in 0..d {
                    let dist = trace_distance(m, &w.projector(k))?;
                    if dist < best.0 {
                        let desc = if s == 1 || s == d {
                            format!("{}[{k}]", w.name())
                        } else {
                            format!("{}[beta={},gamma={}]", w.name(), k / s, k % s)
                        };
                        best = (dist, desc);
                    }
                }
            }
            Ok(best)
        }
        Family::Corollary3 => {
            if d != 2 {
                return Err(Error::BadDim(d));
            }
            let (x, y, z) = qubit_mub_triple();
            let mut best = (f64::INFINITY, String::new());
            for b in [&x, &y, &z] {
                let dist = trace_distance(m, &b.dephase(m))?;
                if dist < best.0 {
                    best = (dist, format!("{}-diagonal", b.name()));
                }
            }
            Ok(best)
        }
    }
}
