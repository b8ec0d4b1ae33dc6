use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fmap_core::fixtures::{bent_cylinder, corrupt, mirrored_pair};
use fmap_core::fmap::PointMap;
use fmap_core::io::{parse_pointmap, pointmap_to_text};
use fmap_core::mesh::io::save_off;
use fmap_core::mesh::{shapes, Vec3};
use fmap_core::TriangleMesh;
use serde_json::Value;
use tempfile::TempDir;

fn fmap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fmap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = fmap(args);
    assert!(
        out.status.success(),
        "fmap {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn error_json(out: &Output) -> Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().last().expect("stderr has an error line");
    serde_json::from_str(line).expect("error line is JSON")
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn read_map(path: &Path, n_target: usize) -> PointMap {
    parse_pointmap(&fs::read_to_string(path).unwrap(), n_target, "test map").unwrap()
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Self { dir: TempDir::new().unwrap() }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn mesh(&self, name: &str, mesh: &TriangleMesh) -> PathBuf {
        let p = self.path(name);
        save_off(mesh, &p).unwrap();
        p
    }

    fn map(&self, name: &str, map: &PointMap) -> PathBuf {
        let p = self.path(name);
        fs::write(&p, pointmap_to_text(map)).unwrap();
        p
    }

    fn manifest(&self, name: &str, lines: &[&str]) -> String {
        let p = self.path(name);
        fs::write(&p, lines.join("\n")).unwrap();
        p.to_str().unwrap().to_string()
    }
}

#[test]
fn self_match_recovers_identity_deterministically() {
    let ws = Workspace::new();
    let mesh = fmap_core::fixtures::lopsided_blob(0.1);
    ws.mesh("blob.off", &mesh);
    let m = ws.manifest("run.fmap", &["source = blob.off", "target = blob.off", "output = first"]);
    ok(&["match", &m]);
    ok(&["match", &m, "--set", "output=unused", "--out", ws.path("second").to_str().unwrap()]);
    let first = ws.path("first");
    let t12 = read_map(&first.join("T12.txt"), mesh.n_vertices());
    assert!(t12.identity_fraction() >= 0.99, "identity {}", t12.identity_fraction());
    assert_eq!(
        fs::read(first.join("T12.txt")).unwrap(),
        fs::read(ws.path("second").join("T12.txt")).unwrap()
    );
    for name in ["C12.csv", "C21.csv", "T21.txt", "diagnostics.csv", "report.json"] {
        assert!(first.join(name).exists(), "{name} missing");
    }
    assert!(!first.join("curves.csv").exists());
    let diag = fs::read_to_string(first.join("diagnostics.csv")).unwrap();
    assert_eq!(diag.lines().count(), 1 + 1 + 5);
    assert!(report(&first)["accuracy"].is_null());
}

#[test]
fn orientation_mode_flips_the_consistency_sign() {
    let ws = Workspace::new();
    let pair = mirrored_pair(0.1);
    ws.mesh("a.off", &pair.source);
    ws.mesh("b.off", &pair.target);
    let m = ws.manifest("run.fmap", &["source = a.off", "target = b.off"]);
    let mut scores = Vec::new();
    for mode in ["preserve", "reverse"] {
        let out = ws.path(mode);
        ok(&["match", &m, "--set", &format!("orientation={mode}"), "--out", out.to_str().unwrap()]);
        scores.push(report(&out)["orientation_consistency"].as_f64().unwrap());
    }
    assert!(scores[0] > 0.0 && scores[1] < 0.0, "{scores:?}");
}

#[test]
fn missing_mesh_is_a_parse_error() {
    let ws = Workspace::new();
    let m = ws.manifest("run.fmap", &["source = nowhere.off", "target = nowhere.off"]);
    let out = fmap(&["match", &m]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["kind"], "ParseError");
}

#[test]
fn bad_keys_and_arguments_exit_with_code_two() {
    let ws = Workspace::new();
    let m = ws.manifest("run.fmap", &["k = 1"]);
    let out = fmap(&["match", &m]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["kind"], "ParseError");
    let out = fmap(&["match", "--set", "alpha9=1"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["kind"], "ConfigError");
    let out = fmap(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["kind"], "UsageError");
    assert!(fmap(&["--help"]).status.success());
}

#[test]
fn refine_keeps_identity_and_repairs_corruption() {
    let ws = Workspace::new();
    let pair = bent_cylinder();
    let n = pair.source.n_vertices();
    ws.mesh("a.off", &pair.source);
    ws.mesh("b.off", &pair.target);
    let id = PointMap::identity(n);
    ws.map("id.txt", &id);
    ws.map("bad12.txt", &corrupt(&id, 0.2, 1));
    ws.map("bad21.txt", &corrupt(&id, 0.2, 2));
    let m = ws.manifest("run.fmap", &["source = a.off", "target = b.off", "ground_truth = id.txt"]);

    let kept = ws.path("kept");
    let same = format!("target={}", ws.path("a.off").display());
    ok(&["refine", &m, "--set", &same, "--set", "init_t12=x", "--t12", ws.path("id.txt").to_str().unwrap(), "--t21", ws.path("id.txt").to_str().unwrap(), "--out", kept.to_str().unwrap()]);
    assert_eq!(read_map(&kept.join("T12.txt"), n), id);
    assert_eq!(read_map(&kept.join("T21.txt"), n), id);

    let before = ws.path("before");
    ok(&["evaluate", &m, "--t12", ws.path("bad12.txt").to_str().unwrap(), "--out", before.to_str().unwrap()]);
    let fixed = ws.path("fixed");
    let r = ws.manifest(
        "refine.fmap",
        &["source = a.off", "target = b.off", "ground_truth = id.txt", "init_t12 = bad12.txt", "init_t21 = bad21.txt"],
    );
    ok(&["refine", &r, "--out", fixed.to_str().unwrap()]);
    let e0 = report(&before)["accuracy"]["direct"].as_f64().unwrap();
    let e1 = report(&fixed)["accuracy"]["direct"].as_f64().unwrap();
    assert!(e1 * 5.0 <= e0, "direct error {e0} -> {e1}");
    assert!(fixed.join("curves.csv").exists());
}

#[test]
fn refine_rejects_out_of_range_maps() {
    let ws = Workspace::new();
    let mesh = shapes::icosphere(1);
    ws.mesh("s.off", &mesh);
    fs::write(ws.path("bad.txt"), "0\n1\n99\n").unwrap();
    let m = ws.manifest("run.fmap", &["source = s.off", "target = s.off", "k = 6", "init_t12 = bad.txt", "init_t21 = bad.txt"]);
    let out = fmap(&["refine", &m]);
    assert_eq!(out.status.code(), Some(2));
    let out = fmap(&["refine", &m, "--set", "init_t12=", "--set", "init_t21="]);
    assert_eq!(out.status.code(), Some(2));
    let m = ws.manifest("none.fmap", &["source = s.off", "target = s.off", "k = 6"]);
    let out = fmap(&["refine", &m]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["kind"], "UsageError");
}

#[test]
fn evaluate_ground_truth_constant_and_missing_symmetry() {
    let ws = Workspace::new();
    let mesh = shapes::grid(6, 6, 1.0, 1.0);
    let n = mesh.n_vertices();
    ws.mesh("g.off", &mesh);
    let id = PointMap::identity(n);
    ws.map("id.txt", &id);
    ws.map("const.txt", &PointMap::constant(n, 0, n).unwrap());
    let m = ws.manifest("run.fmap", &["source = g.off", "target = g.off", "ground_truth = id.txt"]);

    let exact = ws.path("exact");
    ok(&["evaluate", &m, "--t12", ws.path("id.txt").to_str().unwrap(), "--t21", ws.path("id.txt").to_str().unwrap(), "--out", exact.to_str().unwrap()]);
    let r = report(&exact);
    assert_eq!(r["accuracy"]["direct"], 0.0);
    assert_eq!(r["accuracy"]["per_map"], 0.0);
    assert_eq!(r["accuracy"]["symmetric_missing"], true);
    assert_eq!(r["bijectivity"], 0.0);
    let curve = fs::read_to_string(exact.join("curves.csv")).unwrap();
    assert_eq!(curve.lines().count(), 101);
    assert!(curve.lines().skip(1).all(|l| l.ends_with(",1.0")));

    let flat = ws.path("flat");
    ok(&["evaluate", &m, "--t12", ws.path("const.txt").to_str().unwrap(), "--out", flat.to_str().unwrap()]);
    let r = report(&flat);
    assert!(r["bijectivity"].is_null());
    assert_eq!(r["continuity"]["max"], 0.0);
    let corner_area = mesh.vertex_areas()[0] / mesh.total_area();
    assert!((r["coverage"].as_f64().unwrap() - corner_area).abs() < 1e-12);

    let sym = ws.manifest("sym.fmap", &["source = g.off", "target = g.off", "ground_truth = id.txt", "ground_truth_symmetric = const.txt"]);
    let both = ws.path("both");
    ok(&["evaluate", &sym, "--t12", ws.path("const.txt").to_str().unwrap(), "--out", both.to_str().unwrap()]);
    let r = report(&both);
    assert_eq!(r["accuracy"]["symmetric_missing"], false);
    assert_eq!(r["accuracy"]["per_map"], 0.0);
}

#[test]
fn inline_evaluation_matches_separate_evaluation() {
    let ws = Workspace::new();
    let pair = mirrored_pair(0.1);
    ws.mesh("a.off", &pair.source);
    ws.mesh("b.off", &pair.target);
    ws.map("gt.txt", &pair.ground_truth.direct);
    let m = ws.manifest("run.fmap", &["source = a.off", "target = b.off", "ground_truth = gt.txt", "k = 30", "max_iter = 2"]);
    let (inline, split) = (ws.path("inline"), ws.path("split"));
    ok(&["match", &m, "--evaluate", "--out", inline.to_str().unwrap()]);
    ok(&["match", &m, "--out", split.to_str().unwrap()]);
    ok(&["evaluate", &m, "--out", split.to_str().unwrap()]);
    for name in ["report.json", "curves.csv"] {
        assert_eq!(fs::read(inline.join(name)).unwrap(), fs::read(split.join(name)).unwrap(), "{name}");
    }
    let out = fmap(&["match", &m, "--evaluate", "--set", "ground_truth=", "--set", "source=/nowhere.off"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn selfsym_rejects_orientation_override() {
    let ws = Workspace::new();
    ws.mesh("s.off", &shapes::icosphere(1));
    let m = ws.manifest("run.fmap", &["mesh = s.off", "orientation = preserve"]);
    let out = fmap(&["selfsym", &m]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["kind"], "UsageError");
    let m = ws.manifest("ok.fmap", &["mesh = s.off"]);
    let out = fmap(&["selfsym", &m, "--set", "orientation=off"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn selfsym_on_a_sphere_reverses_orientation() {
    let ws = Workspace::new();
    ws.mesh("s.off", &shapes::geodesic_sphere(6));
    let m = ws.manifest("run.fmap", &["mesh = s.off", "k = 30", "orientation = reverse"]);
    ok(&["selfsym", &m]);
    assert!(ws.path("T11.txt").exists());
    assert!(report(ws.dir.path())["orientation_consistency"].as_f64().unwrap() < 0.0);
}

/// Curved strip that is mirror symmetric in x only. Diagonals flip at the
/// middle so the reflection is an exact symmetry of the triangulation.
fn symmetric_strip() -> (TriangleMesh, PointMap) {
    let (nx, ny) = (31, 11);
    let (w, h) = (3.0, 1.0);
    let mut vertices = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let (x, y) = (w * i as f64 / (nx - 1) as f64, h * j as f64 / (ny - 1) as f64);
            vertices.push(Vec3::new(x, y, 0.6 * (std::f64::consts::PI * x / w).sin() * y * y));
        }
    }
    let mut faces = Vec::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let a = j * nx + i;
            let (b, c, d) = (a + 1, a + nx, a + nx + 1);
            if 2 * i < nx - 1 {
                faces.extend([[a, b, d], [a, d, c]]);
            } else {
                faces.extend([[a, b, c], [b, d, c]]);
            }
        }
    }
    let reflection = (0..nx * ny).map(|v| (v / nx) * nx + (nx - 1 - v % nx)).collect();
    (TriangleMesh::new(vertices, faces).unwrap(), PointMap::new(reflection, nx * ny).unwrap())
}

fn reflection_hits(ws: &Workspace, manifest: &str, extra: &[&str], reflection: &PointMap) -> usize {
    let out = ws.path("sym");
    let mut args = vec!["selfsym", manifest, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    ok(&args);
    let t11 = read_map(&out.join("T11.txt"), reflection.len());
    assert!(report(&out)["identity_fraction"].as_f64().unwrap() < 0.1);
    (0..t11.len()).filter(|&i| t11.get(i) == reflection.get(i)).count()
}

#[test]
fn selfsym_recovers_a_planted_reflection() {
    let ws = Workspace::new();
    let (mesh, reflection) = symmetric_strip();
    let n = mesh.n_vertices() as f64;
    ws.mesh("strip.off", &mesh);
    ws.map("gt.txt", &reflection);
    let m = ws.manifest("run.fmap", &["mesh = strip.off", "ground_truth = gt.txt"]);
    let exact = reflection_hits(&ws, &m, &["--set", "continuity=false"], &reflection);
    assert!(exact as f64 >= 0.95 * n, "recovered {exact} of {n}");
    // Neighbor-averaged displacements are one-sided on the boundary, so the
    // continuity step moves boundary vertices of a reflection by one edge.
    let smoothed = reflection_hits(&ws, &m, &[], &reflection);
    assert!(smoothed as f64 >= 0.8 * n, "recovered {smoothed} of {n}");
}
