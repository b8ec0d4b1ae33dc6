//! Least-squares initialization of a functional map.
//!
//! The unknown `X` (`k₂ × k₁`) minimizes
//!
//! ```text
//! w₁‖X A₁ − A₂‖² + w₂ Σᵢ‖X D₁ᵢ − D₂ᵢ X‖² + w₃‖Λ₂ X − X Λ₁‖² + w₄ Σᵢ‖X O₁ᵢ − O₂ᵢ X‖²
//! ```
//!
//! with `D` multiplicative and `O` orientation operators. Vectorizing `X`
//! column by column turns every term into a Kronecker-structured block of
//! one dense symmetric normal system, solved by Cholesky factorization.

use log::{debug, warn};
use nalgebra::{Cholesky, DMatrix, DVector};
use serde::Serialize;

use super::{FunctionalMap, Provenance};
use crate::error::{Error, Result};

/// Pivot ratio below which a Cholesky factor is treated as singular.
const PIVOT_RATIO: f64 = 1e-14;
/// Relative diagonal shift used for the single regularized retry.
const RETRY_SHIFT: f64 = 1e-9;

/// Source and target versions of one operator.
#[derive(Debug, Clone)]
pub struct OperatorPair {
    pub source: DMatrix<f64>,
    pub target: DMatrix<f64>,
}

/// Resolved (absolute) weights of the four energy terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyWeights {
    pub descriptors: f64,
    pub multiplicative: f64,
    pub laplacian: f64,
    pub orientation: f64,
}

/// Inputs of the initialization energy.
#[derive(Debug, Clone)]
pub struct InitialMapProblem {
    /// Reduced source descriptors `A₁` (`k₁ × q`).
    pub source_descriptors: DMatrix<f64>,
    /// Reduced target descriptors `A₂` (`k₂ × q`).
    pub target_descriptors: DMatrix<f64>,
    pub source_evals: Vec<f64>,
    pub target_evals: Vec<f64>,
    pub multiplicative: Vec<OperatorPair>,
    pub orientation: Vec<OperatorPair>,
}

/// Unweighted value of each energy term.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct TermResiduals {
    pub descriptors: f64,
    pub multiplicative: f64,
    pub laplacian: f64,
    pub orientation: f64,
}

impl TermResiduals {
    pub fn weighted(&self, w: &EnergyWeights) -> f64 {
        w.descriptors * self.descriptors
            + w.multiplicative * self.multiplicative
            + w.laplacian * self.laplacian
            + w.orientation * self.orientation
    }
}

#[derive(Debug, Clone)]
pub struct InitialMapSolution {
    pub map: FunctionalMap,
    pub weights: EnergyWeights,
    pub residuals: TermResiduals,
    pub energy: f64,
    /// Energy of `X = 0`.
    pub zero_energy: f64,
    /// Energy of the descriptor-only least-squares map `A₂ A₁⁺`.
    pub descriptor_only_energy: f64,
    /// True when a diagonal shift was needed to factor the system.
    pub regularized: bool,
}

impl InitialMapSolution {
    /// The solution is no worse than the two reference maps.
    pub fn is_minimizer(&self) -> bool {
        let slack = 1e-9 * self.zero_energy.max(self.descriptor_only_energy).max(1e-300);
        self.energy <= self.zero_energy + slack && self.energy <= self.descriptor_only_energy + slack
    }
}

impl InitialMapProblem {
    pub fn source_k(&self) -> usize {
        self.source_descriptors.nrows()
    }

    pub fn target_k(&self) -> usize {
        self.target_descriptors.nrows()
    }

    fn validate(&self) -> Result<()> {
        let (k1, k2) = (self.source_k(), self.target_k());
        let check = |what: &'static str, expected: usize, got: usize| {
            if expected == got {
                Ok(())
            } else {
                Err(Error::DimensionMismatch { what, expected, got })
            }
        };
        check("descriptor count", self.source_descriptors.ncols(), self.target_descriptors.ncols())?;
        check("source eigenvalue count", k1, self.source_evals.len())?;
        check("target eigenvalue count", k2, self.target_evals.len())?;
        for p in self.multiplicative.iter().chain(&self.orientation) {
            check("source operator size", k1, p.source.nrows())?;
            check("source operator size", k1, p.source.ncols())?;
            check("target operator size", k2, p.target.nrows())?;
            check("target operator size", k2, p.target.ncols())?;
        }
        Ok(())
    }

    /// Unweighted term values at `x`.
    pub fn residuals(&self, x: &DMatrix<f64>) -> TermResiduals {
        let commutator = |pairs: &[OperatorPair]| -> f64 {
            pairs
                .iter()
                .map(|p| (x * &p.source - &p.target * x).norm_squared())
                .sum()
        };
        let lap = DMatrix::from_fn(x.nrows(), x.ncols(), |r, c| {
            (self.target_evals[r] - self.source_evals[c]) * x[(r, c)]
        });
        TermResiduals {
            descriptors: (x * &self.source_descriptors - &self.target_descriptors).norm_squared(),
            multiplicative: commutator(&self.multiplicative),
            laplacian: lap.norm_squared(),
            orientation: commutator(&self.orientation),
        }
    }

    pub fn energy(&self, x: &DMatrix<f64>, w: &EnergyWeights) -> f64 {
        self.residuals(x).weighted(w)
    }

    /// `A₂ A₁⁺`, the minimizer of the descriptor term alone.
    pub fn descriptor_only_map(&self) -> DMatrix<f64> {
        let pinv = self
            .source_descriptors
            .clone()
            .pseudo_inverse(1e-12 * self.source_descriptors.amax().max(f64::MIN_POSITIVE))
            .expect("non-negative epsilon");
        &self.target_descriptors * pinv
    }
}

/// Converts relative weights into absolute ones.
///
/// `descriptors` and `multiplicative` are used as given. The Laplacian weight
/// is `laplacian · ‖A₂‖² / Σᵢⱼ(λ₂ᵢ − λ₁ⱼ)²`, putting it on the scale of the
/// descriptor term. The orientation weight is
/// `orientation · multiplicative · Σ‖D‖² / Σ‖O‖²`, so the orientation term
/// starts on the scale of the multiplicative term; 0 disables it.
pub fn resolve_weights(problem: &InitialMapProblem, relative: &EnergyWeights) -> EnergyWeights {
    let lap_scale: f64 = problem
        .target_evals
        .iter()
        .flat_map(|l2| problem.source_evals.iter().map(move |l1| (l2 - l1) * (l2 - l1)))
        .sum();
    let laplacian = if lap_scale > 0.0 {
        relative.laplacian * problem.target_descriptors.norm_squared() / lap_scale
    } else {
        0.0
    };
    let op_norm = |pairs: &[OperatorPair]| -> f64 {
        pairs
            .iter()
            .map(|p| p.source.norm_squared() + p.target.norm_squared())
            .sum()
    };
    let (mult, orient) = (op_norm(&problem.multiplicative), op_norm(&problem.orientation));
    let orientation = if orient > 0.0 && relative.orientation > 0.0 {
        let base = if mult > 0.0 && relative.multiplicative > 0.0 {
            relative.multiplicative * mult
        } else {
            relative.descriptors * problem.target_descriptors.norm_squared()
        };
        relative.orientation * base / orient
    } else {
        0.0
    };
    EnergyWeights {
        descriptors: relative.descriptors,
        multiplicative: relative.multiplicative,
        laplacian,
        orientation,
    }
}

/// Assembles the normal matrix and right-hand side for `vec(X)`
/// (column-major, index `r + c·k₂`).
fn normal_system(problem: &InitialMapProblem, w: &EnergyWeights) -> (DMatrix<f64>, DVector<f64>) {
    let (k1, k2) = (problem.source_k(), problem.target_k());
    let n = k1 * k2;
    let idx = |r: usize, c: usize| r + c * k2;
    let mut g = DMatrix::zeros(n, n);

    // Descriptor term: (A₁A₁ᵀ ⊗ I) vec X = vec(A₂A₁ᵀ).
    let a1 = &problem.source_descriptors;
    let aat = a1 * a1.transpose() * w.descriptors;
    let rhs_mat = &problem.target_descriptors * a1.transpose() * w.descriptors;
    for c in 0..k1 {
        for c2 in 0..k1 {
            let v = aat[(c, c2)];
            if v != 0.0 {
                for r in 0..k2 {
                    g[(idx(r, c), idx(r, c2))] += v;
                }
            }
        }
    }

    // Commutator terms: (D₁D₁ᵀ ⊗ I) − (D₁ ⊗ D₂) − (D₁ᵀ ⊗ D₂ᵀ) + (I ⊗ D₂ᵀD₂).
    for (pairs, weight) in [(&problem.multiplicative, w.multiplicative), (&problem.orientation, w.orientation)] {
        if weight == 0.0 || pairs.is_empty() {
            continue;
        }
        let mut s1 = DMatrix::zeros(k1, k1);
        let mut s2 = DMatrix::zeros(k2, k2);
        for p in pairs {
            s1 += &p.source * p.source.transpose();
            s2 += p.target.tr_mul(&p.target);
            let (d1, d2) = (&p.source, &p.target);
            for c in 0..k1 {
                for c2 in 0..k1 {
                    let (a, b) = (d1[(c, c2)], d1[(c2, c)]);
                    if a == 0.0 && b == 0.0 {
                        continue;
                    }
                    for r in 0..k2 {
                        let row = idx(r, c);
                        for r2 in 0..k2 {
                            g[(row, idx(r2, c2))] -= weight * (a * d2[(r, r2)] + b * d2[(r2, r)]);
                        }
                    }
                }
            }
        }
        for c in 0..k1 {
            for c2 in 0..k1 {
                let v = weight * s1[(c, c2)];
                for r in 0..k2 {
                    g[(idx(r, c), idx(r, c2))] += v;
                }
            }
            for r in 0..k2 {
                for r2 in 0..k2 {
                    g[(idx(r, c), idx(r2, c))] += weight * s2[(r, r2)];
                }
            }
        }
    }

    // Laplacian term is diagonal in vec(X).
    if w.laplacian != 0.0 {
        for c in 0..k1 {
            for r in 0..k2 {
                let d = problem.target_evals[r] - problem.source_evals[c];
                g[(idx(r, c), idx(r, c))] += w.laplacian * d * d;
            }
        }
    }

    let rhs = DVector::from_fn(n, |i, _| rhs_mat[(i % k2, i / k2)]);
    let g = (&g + g.transpose()) * 0.5;
    (g, rhs)
}

fn factor(g: DMatrix<f64>) -> Option<Cholesky<f64, nalgebra::Dyn>> {
    let chol = Cholesky::new(g)?;
    let diag = chol.l_dirty().diagonal();
    let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &d| (lo.min(d * d), hi.max(d * d)));
    if hi > 0.0 && lo / hi >= PIVOT_RATIO {
        Some(chol)
    } else {
        None
    }
}

/// Minimizes the initialization energy with absolute weights `weights`.
pub fn solve_initial_map(problem: &InitialMapProblem, weights: &EnergyWeights) -> Result<InitialMapSolution> {
    problem.validate()?;
    for w in [weights.descriptors, weights.multiplicative, weights.laplacian, weights.orientation] {
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::Config(format!("energy weights must be finite and non-negative, got {w}")));
        }
    }
    let (k1, k2) = (problem.source_k(), problem.target_k());
    let (g, rhs) = normal_system(problem, weights);
    let mut regularized = false;
    let chol = match factor(g.clone()) {
        Some(c) => c,
        None => {
            let n = g.nrows();
            let mean_diag = g.trace() / n.max(1) as f64;
            let shift = RETRY_SHIFT * if mean_diag > 0.0 { mean_diag } else { 1.0 };
            warn!("initial map system is singular; retrying with diagonal shift {shift:e}");
            regularized = true;
            factor(g + DMatrix::identity(n, n) * shift).ok_or(Error::SingularSystem)?
        }
    };
    let x = chol.solve(&rhs);
    let x = DMatrix::from_column_slice(k2, k1, x.as_slice());

    let residuals = problem.residuals(&x);
    let energy = residuals.weighted(weights);
    let zero_energy = problem.energy(&DMatrix::zeros(k2, k1), weights);
    let descriptor_only_energy = problem.energy(&problem.descriptor_only_map(), weights);
    debug!("initial map energy {energy:e} (zero map {zero_energy:e}, descriptor-only {descriptor_only_energy:e})");
    Ok(InitialMapSolution {
        map: FunctionalMap::new(x, Provenance::Initialized),
        weights: *weights,
        residuals,
        energy,
        zero_energy,
        descriptor_only_energy,
        regularized,
    })
}
