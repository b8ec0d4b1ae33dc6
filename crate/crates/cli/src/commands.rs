//! The four subcommands. Each reads its inputs, runs the pipeline and writes
//! plain-text artifacts into the output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use fmap_core::bcicp::{bcicp_refine, IterationDiagnostics, Refinement, RefinementState, Shape};
use fmap_core::eval::{cumulative_curve, evaluate_map, GroundTruth, MapReport};
use fmap_core::fmap::PointMap;
use fmap_core::io::{load_matrix_csv, load_pointmap, pointmap_to_text, save_matrix_csv};
use fmap_core::mesh::io::load_mesh;
use fmap_core::operators::Orientation;
use fmap_core::pipeline::{match_shapes, DescriptorSource, MatchConfig};
use fmap_core::spectral::{build_laplacian, eigenbasis};
use fmap_core::{Error, Result, TriangleMesh};

use crate::manifest::{DescriptorKind, Manifest};

/// A command-level failure: bad usage or a pipeline error.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Pipeline(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Pipeline(e)
    }
}

impl Failure {
    pub fn kind(&self) -> &'static str {
        match self {
            Failure::Usage(_) => "UsageError",
            Failure::Pipeline(e) => e.kind(),
        }
    }

    pub fn message(&self) -> String {
        match self {
            Failure::Usage(m) => m.clone(),
            Failure::Pipeline(e) => e.to_string(),
        }
    }

    /// 2 for bad input, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Pipeline(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

pub type CommandResult = std::result::Result<(), Failure>;

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn output_dir(manifest: &Manifest) -> Result<PathBuf> {
    let dir = manifest.output.clone();
    fs::create_dir_all(&dir).map_err(|e| Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    Ok(dir)
}

fn load_pair(manifest: &Manifest) -> Result<(TriangleMesh, TriangleMesh)> {
    let source = load_mesh(manifest.require("source", &manifest.source)?)?;
    let target = load_mesh(manifest.require("target", &manifest.target)?)?;
    Ok((source, target))
}

fn ground_truth(manifest: &Manifest, n_target: usize) -> Result<Option<GroundTruth>> {
    let Some(path) = &manifest.ground_truth else {
        return Ok(None);
    };
    let direct = load_pointmap(path, n_target)?;
    Ok(Some(match &manifest.ground_truth_symmetric {
        Some(sym) => GroundTruth::with_symmetric(direct, load_pointmap(sym, n_target)?)?,
        None => GroundTruth::direct(direct),
    }))
}

fn check_map_source(map: &PointMap, n_source: usize, what: &'static str) -> Result<()> {
    if map.len() != n_source {
        return Err(Error::DimensionMismatch {
            what,
            expected: n_source,
            got: map.len(),
        });
    }
    Ok(())
}

fn config_for(manifest: &Manifest) -> Result<MatchConfig> {
    let mut config = manifest.config.clone();
    if manifest.descriptors == DescriptorKind::Csv {
        let source = load_matrix_csv(manifest.require("source_descriptors", &manifest.source_descriptors)?)?;
        let target = load_matrix_csv(manifest.require("target_descriptors", &manifest.target_descriptors)?)?;
        config.descriptors = DescriptorSource::External { source, target };
    }
    Ok(config)
}

pub fn diagnostics_csv(diagnostics: &[IterationDiagnostics]) -> String {
    let mut out = String::from("iter,energy,e1,e2,e3,e4,coverage12,coverage21,bijectivity,outlier_ratio,rank_deficient\n");
    for d in diagnostics {
        let e = &d.energy;
        let _ = writeln!(
            out,
            "{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{}",
            d.iter, e.total, e.e1, e.e2, e.e3, e.e4, d.coverage12, d.coverage21, d.bijectivity, d.outlier_ratio, d.rank_deficient
        );
    }
    out
}

pub fn curves_csv(errors: &[f64]) -> String {
    let mut out = String::from("threshold,fraction\n");
    for (t, f) in cumulative_curve(errors) {
        let _ = writeln!(out, "{t:?},{f:?}");
    }
    out
}

/// Writes `report.json` and, when accuracy was measured, `curves.csv`.
fn write_report(dir: &Path, report: &MapReport) -> Result<()> {
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    write_text(&dir.join("report.json"), &(json + "\n"))?;
    if let Some(acc) = &report.accuracy {
        write_text(&dir.join("curves.csv"), &curves_csv(&acc.per_vertex))?;
    }
    Ok(())
}

fn write_refinement(dir: &Path, refinement: &Refinement) -> Result<()> {
    let s = &refinement.state;
    save_matrix_csv(dir.join("C12.csv"), &s.c12)?;
    save_matrix_csv(dir.join("C21.csv"), &s.c21)?;
    write_text(&dir.join("T12.txt"), &pointmap_to_text(&s.t12))?;
    write_text(&dir.join("T21.txt"), &pointmap_to_text(&s.t21))?;
    write_text(&dir.join("diagnostics.csv"), &diagnostics_csv(&refinement.diagnostics))
}

fn finish(
    manifest: &Manifest,
    refinement: &Refinement,
    source: &TriangleMesh,
    target: &TriangleMesh,
    require_truth: bool,
) -> CommandResult {
    let gt = ground_truth(manifest, target.n_vertices())?;
    if require_truth && gt.is_none() {
        return Err(Failure::Usage("--evaluate needs the ground_truth key".into()));
    }
    if let Some(gt) = &gt {
        check_map_source(&gt.direct, source.n_vertices(), "ground truth length (source vertices)")?;
    }
    let dir = output_dir(manifest)?;
    write_refinement(&dir, refinement)?;
    let s = &refinement.state;
    let report = evaluate_map(&s.t12, Some(&s.t21), gt.as_ref(), source, target)?;
    write_report(&dir, &report)?;
    Ok(())
}

pub fn run_match(manifest: &Manifest, evaluate: bool) -> CommandResult {
    let (source, target) = load_pair(manifest)?;
    let result = match_shapes(&source, &target, &config_for(manifest)?)?;
    finish(manifest, &result.refinement, &source, &target, evaluate)
}

/// Initial maps given on the command line take precedence over the manifest.
#[derive(Debug, Default, Clone)]
pub struct RefineInputs {
    pub t12: Option<PathBuf>,
    pub t21: Option<PathBuf>,
    pub c12: Option<PathBuf>,
    pub c21: Option<PathBuf>,
}

pub fn run_refine(manifest: &Manifest, inputs: &RefineInputs) -> CommandResult {
    let pick = |flag: &Option<PathBuf>, key: &Option<PathBuf>| flag.clone().or_else(|| key.clone());
    let t12 = pick(&inputs.t12, &manifest.init_t12);
    let t21 = pick(&inputs.t21, &manifest.init_t21);
    let c12 = pick(&inputs.c12, &manifest.init_c12);
    let c21 = pick(&inputs.c21, &manifest.init_c21);
    let (source, target) = load_pair(manifest)?;
    let k = manifest.config.k;
    let (b1, b2) = rayon::join(
        || eigenbasis(&build_laplacian(&source)?, k),
        || eigenbasis(&build_laplacian(&target)?, k),
    );
    let (b1, b2) = (b1?, b2?);
    let state = match (t12, t21, c12, c21) {
        (Some(t12), Some(t21), _, _) => {
            let t12 = load_pointmap(&t12, target.n_vertices())?;
            let t21 = load_pointmap(&t21, source.n_vertices())?;
            check_map_source(&t12, source.n_vertices(), "T12 length (source vertices)")?;
            check_map_source(&t21, target.n_vertices(), "T21 length (target vertices)")?;
            RefinementState::from_pointmaps(t12, t21, &b1, &b2)?
        }
        (_, _, Some(c12), Some(c21)) => RefinementState::from_fmaps(load_matrix_csv(c12)?, load_matrix_csv(c21)?, &b1, &b2)?,
        _ => return Err(Failure::Usage("refine needs T12 and T21, or C12 and C21".into())),
    };
    let refinement = bcicp_refine(state, Shape::new(&source, &b1)?, Shape::new(&target, &b2)?, &manifest.config.refine)?;
    finish(manifest, &refinement, &source, &target, false)
}

pub fn run_evaluate(manifest: &Manifest, t12: Option<&Path>, t21: Option<&Path>) -> CommandResult {
    let (source, target) = load_pair(manifest)?;
    let gt = ground_truth(manifest, target.n_vertices())?
        .ok_or_else(|| Failure::Usage("evaluate needs the ground_truth key".into()))?;
    check_map_source(&gt.direct, source.n_vertices(), "ground truth length (source vertices)")?;
    let t12_path = t12.map(Path::to_path_buf).unwrap_or_else(|| manifest.output.join("T12.txt"));
    let map = load_pointmap(&t12_path, target.n_vertices())?;
    check_map_source(&map, source.n_vertices(), "T12 length (source vertices)")?;
    let back = match t21 {
        Some(p) => Some(p.to_path_buf()),
        None => Some(manifest.output.join("T21.txt")).filter(|p| t12.is_none() && p.exists()),
    };
    let back = back.map(|p| load_pointmap(p, source.n_vertices())).transpose()?;
    if let Some(b) = &back {
        check_map_source(b, target.n_vertices(), "T21 length (target vertices)")?;
    }
    let report = evaluate_map(&map, back.as_ref(), Some(&gt), &source, &target)?;
    write_report(&output_dir(manifest)?, &report)?;
    Ok(())
}

pub fn run_selfsym(manifest: &Manifest) -> CommandResult {
    if manifest.explicit.contains("orientation") && manifest.config.orientation != Some(Orientation::Reverse) {
        return Err(Failure::Usage("selfsym always uses orientation = reverse".into()));
    }
    let path = manifest
        .mesh
        .clone()
        .or_else(|| manifest.source.clone())
        .ok_or_else(|| Error::Config("missing required key \"mesh\"".into()))?;
    let mesh = load_mesh(path)?;
    let mut config = config_for(manifest)?;
    config.orientation = Some(Orientation::Reverse);
    let result = match_shapes(&mesh, &mesh, &config)?;
    let s = &result.refinement.state;
    let gt = ground_truth(manifest, mesh.n_vertices())?;
    let dir = output_dir(manifest)?;
    write_text(&dir.join("T11.txt"), &pointmap_to_text(&s.t12))?;
    write_text(&dir.join("diagnostics.csv"), &diagnostics_csv(&result.refinement.diagnostics))?;
    let report = evaluate_map(&s.t12, Some(&s.t21), gt.as_ref(), &mesh, &mesh)?;
    write_report(&dir, &report)?;
    Ok(())
}
