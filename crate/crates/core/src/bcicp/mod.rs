//! Iterative refinement of a pair of functional maps.
//!
//! The refinement alternates nearest-neighbor updates of the point maps in
//! both directions with closed-form updates of the functional maps, keeping
//! the two directions and their round trips consistent. Between sweeps the
//! point maps are cleaned: outliers are pulled back, uncovered target
//! vertices are claimed, and the displacement field is smoothed.

mod coverage;
mod energy;
mod outliers;
mod proj;
mod smooth;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fmap::nn::{nearest_rows, NearestRows};
use crate::fmap::{solve_initial_map, EnergyWeights, InitialMapProblem, OperatorPair, PointMap};
use crate::mesh::TriangleMesh;
use crate::operators::{orientation_operator, Orientation};
use crate::spectral::SpectralBasis;

pub use coverage::{area_coverage, improve_coverage};
pub use energy::{refinement_energy, EnergyBreakdown};
pub use outliers::{fix_outliers, OutlierFix};
pub use proj::{proj_orthonormal, Projection, RANK_TOLERANCE};
pub use smooth::{smooth_map, SmoothingStep};

/// A mesh together with its truncated eigenbasis.
#[derive(Debug, Clone, Copy)]
pub struct Shape<'a> {
    pub mesh: &'a TriangleMesh,
    pub basis: &'a SpectralBasis,
}

impl<'a> Shape<'a> {
    pub fn new(mesh: &'a TriangleMesh, basis: &'a SpectralBasis) -> Result<Self> {
        if mesh.n_vertices() != basis.n() {
            return Err(Error::DimensionMismatch {
                what: "mesh and basis vertex count",
                expected: mesh.n_vertices(),
                got: basis.n(),
            });
        }
        Ok(Self { mesh, basis })
    }
}

/// Functional and point maps in both directions plus the round-trip maps.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinementState {
    /// Source to target, `k₂ × k₁`.
    pub c12: DMatrix<f64>,
    /// Target to source, `k₁ × k₂`.
    pub c21: DMatrix<f64>,
    /// Source round trip, `k₁ × k₁`.
    pub c11: DMatrix<f64>,
    /// Target round trip, `k₂ × k₂`.
    pub c22: DMatrix<f64>,
    /// Source vertex to target vertex.
    pub t12: PointMap,
    /// Target vertex to source vertex.
    pub t21: PointMap,
}

/// `C = Φ_toᵀ M_to Φ_from[map]` for `map` sending vertices of `to` to
/// vertices of `from`: the functional map from `from` to `to` induced by it.
pub fn fit_fmap(from: &SpectralBasis, to: &SpectralBasis, map: &PointMap) -> Result<DMatrix<f64>> {
    if map.n_source() != to.n() || map.n_target() != from.n() {
        return Err(Error::DimensionMismatch {
            what: "point map between bases",
            expected: to.n(),
            got: map.n_source(),
        });
    }
    to.project(&from.gather_rows(map.as_slice()))
}

/// Point map from `to` to `from` induced by a functional map `from → to`.
fn induced_pointmap(from: &SpectralBasis, to: &SpectralBasis, c: &DMatrix<f64>) -> Result<PointMap> {
    PointMap::new(nearest_rows(&(to.phi() * c), from.phi()), from.n())
}

fn round_trip(basis: &SpectralBasis, there: &PointMap, back: &PointMap) -> Result<DMatrix<f64>> {
    let fitted = fit_fmap(basis, basis, &there.then(back)?)?;
    Ok(proj_orthonormal(&fitted).matrix)
}

impl RefinementState {
    /// State seeded from functional maps; the point maps and round trips are
    /// derived from them.
    pub fn from_fmaps(c12: DMatrix<f64>, c21: DMatrix<f64>, source: &SpectralBasis, target: &SpectralBasis) -> Result<Self> {
        let (k1, k2) = (source.k(), target.k());
        for (what, m, rows, cols) in [("c12 shape", &c12, k2, k1), ("c21 shape", &c21, k1, k2)] {
            if m.shape() != (rows, cols) {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: rows * cols,
                    got: m.nrows() * m.ncols(),
                });
            }
        }
        let t21 = induced_pointmap(source, target, &c12)?;
        let t12 = induced_pointmap(target, source, &c21)?;
        let c11 = round_trip(source, &t12, &t21)?;
        let c22 = round_trip(target, &t21, &t12)?;
        Ok(Self { c12, c21, c11, c22, t12, t21 })
    }

    /// State seeded from point maps; the functional maps are their
    /// least-squares fits.
    pub fn from_pointmaps(t12: PointMap, t21: PointMap, source: &SpectralBasis, target: &SpectralBasis) -> Result<Self> {
        let c12 = fit_fmap(source, target, &t21)?;
        let c21 = fit_fmap(target, source, &t12)?;
        let c11 = round_trip(source, &t12, &t21)?;
        let c22 = round_trip(target, &t21, &t12)?;
        Ok(Self { c12, c21, c11, c22, t12, t21 })
    }
}

/// Switches for the refinement loop.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefineConfig {
    pub max_iter: usize,
    pub lambdas: [f64; 4],
    /// Use the joint two-direction sweep; otherwise each direction runs
    /// plain ICP independently.
    pub bijective: bool,
    pub fix_outliers: bool,
    pub coverage: bool,
    pub continuity: bool,
    /// Compose each direction with the projected round trip of the other.
    pub coupling: bool,
    /// Coverage promotion runs while coverage is below this.
    pub coverage_gate: f64,
    /// Smoothing runs once coverage reaches this.
    pub continuity_gate: f64,
    /// Outlier edge threshold; `None` uses the longest target edge.
    pub outlier_threshold: Option<f64>,
    pub smooth_sweeps: usize,
    /// Add orientation-commutativity terms to the functional map updates.
    pub refine_orientation: Option<Orientation>,
    /// Every this many basis functions contribute an orientation term.
    pub orientation_stride: usize,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self::bcicp()
    }
}

impl RefineConfig {
    /// Full refinement with every cleaning step.
    pub fn bcicp() -> Self {
        Self {
            max_iter: 5,
            lambdas: [1.0; 4],
            bijective: true,
            fix_outliers: true,
            coverage: true,
            continuity: true,
            coupling: true,
            coverage_gate: 0.5,
            continuity_gate: 0.6,
            outlier_threshold: None,
            smooth_sweeps: 5,
            refine_orientation: None,
            orientation_stride: 10,
        }
    }

    /// Independent ICP in each direction.
    pub fn icp() -> Self {
        Self {
            bijective: false,
            fix_outliers: false,
            coverage: false,
            continuity: false,
            coupling: false,
            ..Self::bcicp()
        }
    }

    /// Joint sweep without the cleaning steps.
    pub fn bijective_icp() -> Self {
        Self {
            fix_outliers: false,
            coverage: false,
            continuity: false,
            ..Self::bcicp()
        }
    }

    pub fn without_coverage() -> Self {
        Self {
            coverage: false,
            ..Self::bcicp()
        }
    }

    /// Drops outlier removal and smoothing.
    pub fn without_continuity() -> Self {
        Self {
            fix_outliers: false,
            continuity: false,
            ..Self::bcicp()
        }
    }
}

/// Per-iteration record of the refinement loop. Iteration 0 is the input.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationDiagnostics {
    pub iter: usize,
    pub energy: EnergyBreakdown,
    pub coverage12: f64,
    pub coverage21: f64,
    /// Mean Euclidean round-trip drift over both shapes, normalized by the
    /// square root of each shape's area.
    pub bijectivity: f64,
    /// Fraction of vertices reassigned by outlier removal, both directions.
    pub outlier_ratio: f64,
    /// A round-trip projection was rank deficient and its coupling skipped.
    pub rank_deficient: bool,
}

#[derive(Debug, Clone)]
pub struct Refinement {
    pub state: RefinementState,
    pub diagnostics: Vec<IterationDiagnostics>,
}

/// Flags raised by a single sweep.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepReport {
    pub rank_deficient: bool,
}

/// Undoes the rotation left by the round trip: with `R = Proj(back · c)`,
/// returns `c Rᵀ`, so that `back · c Rᵀ` is as close to the identity as an
/// orthonormal correction allows. Skipped when `R` is rank deficient.
fn couple(c: &DMatrix<f64>, back: &DMatrix<f64>) -> (DMatrix<f64>, bool) {
    let p = proj_orthonormal(&(back * c));
    if p.rank_deficient {
        (c.clone(), true)
    } else {
        (c * p.matrix.transpose(), false)
    }
}

/// `argmin_C ‖C − C_fit‖² + α Σ‖C O_from − O_to C‖²` with orientation
/// operators of basis functions on `from` and their images on `to` under the
/// previous map. `α` puts the orientation term on the scale of the fit term.
fn fit_with_orientation(
    from: Shape<'_>,
    to: Shape<'_>,
    fitted: &DMatrix<f64>,
    previous: &DMatrix<f64>,
    orientation: Orientation,
    stride: usize,
) -> Result<DMatrix<f64>> {
    let (k_from, k_to) = (from.basis.k(), to.basis.k());
    let images = to.basis.phi() * previous;
    let mut pairs = Vec::new();
    for i in (0..k_from).step_by(stride.max(1)) {
        let f: Vec<f64> = from.basis.phi().column(i).iter().copied().collect();
        let g: Vec<f64> = images.column(i).iter().copied().collect();
        pairs.push(OperatorPair {
            source: orientation_operator(from.mesh, from.basis, &f, Orientation::Preserve)?.matrix,
            target: orientation_operator(to.mesh, to.basis, &g, orientation)?.matrix,
        });
    }
    let scale: f64 = pairs
        .iter()
        .map(|p| p.source.norm_squared() + p.target.norm_squared())
        .sum();
    if scale <= 0.0 {
        return Ok(fitted.clone());
    }
    let problem = InitialMapProblem {
        source_descriptors: DMatrix::identity(k_from, k_from),
        target_descriptors: fitted.clone(),
        source_evals: vec![0.0; k_from],
        target_evals: vec![0.0; k_to],
        multiplicative: Vec::new(),
        orientation: pairs,
    };
    let weights = EnergyWeights {
        descriptors: 1.0,
        multiplicative: 0.0,
        laplacian: 0.0,
        orientation: fitted.norm_squared().max(1.0) / scale,
    };
    Ok(solve_initial_map(&problem, &weights)?.map.matrix)
}

fn update_fmaps(state: &mut RefinementState, source: Shape<'_>, target: Shape<'_>, config: &RefineConfig) -> Result<bool> {
    let mut rank_deficient = false;
    let mut c12 = proj_orthonormal(&fit_fmap(source.basis, target.basis, &state.t21)?).matrix;
    if let Some(o) = config.refine_orientation {
        c12 = fit_with_orientation(source, target, &c12, &state.c12, o, config.orientation_stride)?;
    }
    if config.coupling {
        let (c, flag) = couple(&c12, &state.c21);
        c12 = c;
        rank_deficient |= flag;
    }
    let mut c21 = proj_orthonormal(&fit_fmap(target.basis, source.basis, &state.t12)?).matrix;
    if let Some(o) = config.refine_orientation {
        c21 = fit_with_orientation(target, source, &c21, &state.c21, o, config.orientation_stride)?;
    }
    if config.coupling {
        let (c, flag) = couple(&c21, &c12);
        c21 = c;
        rank_deficient |= flag;
    }
    state.c12 = c12;
    state.c21 = c21;
    Ok(rank_deficient)
}

/// For each row `i` of `round_queries`, the vertex `m` of the other shape
/// minimizing `‖round_queries_i − Φ_home[back(m)]‖`. All `m` with the same
/// `back(m)` tie exactly; among them the one minimizing
/// `‖direct_queries_i − Φ_other[m]‖` is chosen (smallest index on exact ties).
fn round_trip_assignment(
    round_queries: &DMatrix<f64>,
    home: &SpectralBasis,
    back: &PointMap,
    direct_queries: &DMatrix<f64>,
    other: &SpectralBasis,
) -> Result<PointMap> {
    let fibers = back.preimages();
    let images: Vec<usize> = (0..fibers.len()).filter(|&v| !fibers[v].is_empty()).collect();
    let index = NearestRows::new(&home.gather_rows(&images));
    let hits = index.nearest_rows(round_queries);
    let phi = other.phi();
    let targets = hits
        .into_iter()
        .enumerate()
        .map(|(i, h)| {
            let fiber = &fibers[images[h]];
            if fiber.len() == 1 {
                return fiber[0];
            }
            let q = direct_queries.row(i);
            let mut best = (f64::INFINITY, usize::MAX);
            for &m in fiber {
                let d = (phi.row(m) - q).norm_squared();
                if d < best.0 {
                    best = (d, m);
                }
            }
            best.1
        })
        .collect();
    PointMap::new(targets, other.n())
}

/// One joint sweep over both directions.
///
/// Point maps are re-read from the functional maps, the round-trip maps are
/// fitted and projected, the point maps are re-chosen so that the round trips
/// agree with those, and finally both functional maps are refitted.
pub fn bijective_icp_step(
    state: &mut RefinementState,
    source: Shape<'_>,
    target: Shape<'_>,
    config: &RefineConfig,
) -> Result<StepReport> {
    let (b1, b2) = (source.basis, target.basis);
    state.t21 = induced_pointmap(b1, b2, &state.c12)?;
    state.t12 = induced_pointmap(b2, b1, &state.c21)?;
    state.c11 = round_trip(b1, &state.t12, &state.t21)?;
    state.c22 = round_trip(b2, &state.t21, &state.t12)?;
    // Source vertex i goes to a target vertex m whose image Φ₁[T₂₁(m)] best
    // matches row i of Φ₁C₁₁; target vertices sharing that image tie, and the
    // tie goes to the one closest to row i of Φ₁C₂₁.
    state.t12 = round_trip_assignment(
        &(b1.phi() * &state.c11),
        b1,
        &state.t21,
        &(b1.phi() * &state.c21),
        b2,
    )?;
    state.t21 = round_trip_assignment(
        &(b2.phi() * &state.c22),
        b2,
        &state.t12,
        &(b2.phi() * &state.c12),
        b1,
    )?;
    let rank_deficient = update_fmaps(state, source, target, config)?;
    Ok(StepReport { rank_deficient })
}

/// One plain ICP step in each direction: fit, project to orthonormal, and
/// re-read the point map.
pub fn icp_step(state: &mut RefinementState, source: Shape<'_>, target: Shape<'_>) -> Result<StepReport> {
    let (b1, b2) = (source.basis, target.basis);
    state.c12 = proj_orthonormal(&fit_fmap(b1, b2, &state.t21)?).matrix;
    state.t21 = induced_pointmap(b1, b2, &state.c12)?;
    state.c21 = proj_orthonormal(&fit_fmap(b2, b1, &state.t12)?).matrix;
    state.t12 = induced_pointmap(b2, b1, &state.c21)?;
    state.c11 = round_trip(b1, &state.t12, &state.t21)?;
    state.c22 = round_trip(b2, &state.t21, &state.t12)?;
    Ok(StepReport::default())
}

/// Mean Euclidean distance between each vertex and its round-trip image,
/// normalized by `√area`, averaged over both shapes.
pub fn euclidean_bijectivity(t12: &PointMap, t21: &PointMap, source: &TriangleMesh, target: &TriangleMesh) -> Result<f64> {
    let drift = |mesh: &TriangleMesh, there: &PointMap, back: &PointMap| -> Result<f64> {
        let loop_map = there.then(back)?;
        let n = mesh.n_vertices().max(1) as f64;
        let sum: f64 = (0..mesh.n_vertices())
            .map(|i| (mesh.vertex(loop_map.get(i)) - mesh.vertex(i)).norm())
            .sum();
        Ok(sum / n / mesh.total_area().sqrt())
    };
    Ok(0.5 * (drift(source, t12, t21)? + drift(target, t21, t12)?))
}

struct Areas {
    source: Vec<f64>,
    target: Vec<f64>,
}

fn diagnostics(
    iter: usize,
    state: &RefinementState,
    source: Shape<'_>,
    target: Shape<'_>,
    areas: &Areas,
    config: &RefineConfig,
    outlier_ratio: f64,
    rank_deficient: bool,
) -> Result<IterationDiagnostics> {
    Ok(IterationDiagnostics {
        iter,
        energy: refinement_energy(state, source.basis, target.basis, config.lambdas)?,
        coverage12: area_coverage(&state.t12, &areas.target),
        coverage21: area_coverage(&state.t21, &areas.source),
        bijectivity: euclidean_bijectivity(&state.t12, &state.t21, source.mesh, target.mesh)?,
        outlier_ratio,
        rank_deficient,
    })
}

/// Runs the refinement loop for `config.max_iter` iterations.
pub fn bcicp_refine(
    initial: RefinementState,
    source: Shape<'_>,
    target: Shape<'_>,
    config: &RefineConfig,
) -> Result<Refinement> {
    let areas = Areas {
        source: source.mesh.vertex_areas(),
        target: target.mesh.vertex_areas(),
    };
    let mut state = initial;
    let mut log = vec![diagnostics(0, &state, source, target, &areas, config, 0.0, false)?];
    for iter in 1..=config.max_iter {
        let report = if config.bijective {
            bijective_icp_step(&mut state, source, target, config)?
        } else {
            icp_step(&mut state, source, target)?
        };
        let mut rank_deficient = report.rank_deficient;
        let mut outlier_ratio = 0.0;
        let mut cleaned = false;
        if config.fix_outliers {
            let f12 = fix_outliers(&state.t12, source.mesh, target.mesh, config.outlier_threshold)?;
            let f21 = fix_outliers(&state.t21, target.mesh, source.mesh, config.outlier_threshold)?;
            outlier_ratio = (f12.outliers.len() + f21.outliers.len()) as f64
                / (source.mesh.n_vertices() + target.mesh.n_vertices()).max(1) as f64;
            cleaned |= f12.map != state.t12 || f21.map != state.t21;
            state.t12 = f12.map;
            state.t21 = f21.map;
        }
        if config.coverage {
            if area_coverage(&state.t12, &areas.target) < config.coverage_gate {
                let t = improve_coverage(&state.t12, &state.t21, source.mesh, target.mesh)?;
                cleaned |= t != state.t12;
                state.t12 = t;
            }
            if area_coverage(&state.t21, &areas.source) < config.coverage_gate {
                let t = improve_coverage(&state.t21, &state.t12, target.mesh, source.mesh)?;
                cleaned |= t != state.t21;
                state.t21 = t;
            }
        }
        if config.continuity {
            if area_coverage(&state.t12, &areas.target) >= config.continuity_gate {
                let t = smooth_map(&state.t12, source.mesh, target.mesh, config.smooth_sweeps, |_| {})?;
                cleaned |= t != state.t12;
                state.t12 = t;
            }
            if area_coverage(&state.t21, &areas.source) >= config.continuity_gate {
                let t = smooth_map(&state.t21, target.mesh, source.mesh, config.smooth_sweeps, |_| {})?;
                cleaned |= t != state.t21;
                state.t21 = t;
            }
        }
        if config.bijective && cleaned {
            rank_deficient |= update_fmaps(&mut state, source, target, config)?;
            state.c11 = round_trip(source.basis, &state.t12, &state.t21)?;
            state.c22 = round_trip(target.basis, &state.t21, &state.t12)?;
        }
        log.push(diagnostics(iter, &state, source, target, &areas, config, outlier_ratio, rank_deficient)?);
    }
    Ok(Refinement { state, diagnostics: log })
}
