use nalgebra::DMatrix;

use fmap_core::fixtures::{blob_reflection, lopsided_blob, wobbly_tube_with};
use fmap_core::operators::Orientation;
use fmap_core::pipeline::{match_shapes, self_symmetry, DescriptorSource, MatchConfig};
use fmap_core::{Error, TriangleMesh};

fn coordinate_descriptors(mesh: &TriangleMesh) -> DMatrix<f64> {
    DMatrix::from_fn(mesh.n_vertices(), 6, |i, j| {
        let v = mesh.vertex(i);
        [v.x, v.y, v.z, v.x * v.z, v.y * v.z, v.z * v.z][j]
    })
}

fn external(mesh: &TriangleMesh) -> MatchConfig {
    MatchConfig {
        k: 20,
        descriptors: DescriptorSource::External {
            source: coordinate_descriptors(mesh),
            target: coordinate_descriptors(mesh),
        },
        operator_stride: 1,
        ..MatchConfig::default()
    }
}

#[test]
fn external_descriptors_drive_a_self_match() {
    let mesh = wobbly_tube_with(16, 20);
    let result = match_shapes(&mesh, &mesh, &external(&mesh)).unwrap();
    let exact = result.refinement.state.t12.identity_fraction();
    assert!(exact >= 0.95, "identity fraction {exact}");
    assert_eq!(result.c12.shape(), (20, 20));
}

#[test]
fn matching_is_deterministic() {
    let mesh = wobbly_tube_with(12, 14);
    let config = external(&mesh);
    let a = match_shapes(&mesh, &mesh, &config).unwrap();
    let b = match_shapes(&mesh, &mesh, &config).unwrap();
    assert_eq!(a.c12, b.c12);
    assert_eq!(a.refinement.state.t12, b.refinement.state.t12);
}

#[test]
fn basis_smaller_than_two_is_a_config_error() {
    let mesh = wobbly_tube_with(8, 6);
    let config = MatchConfig { k: 1, ..external(&mesh) };
    let err = match_shapes(&mesh, &mesh, &config).unwrap_err();
    assert!(matches!(err, Error::Config(_)), "{err}");
}

#[test]
fn descriptor_shapes_are_checked() {
    let mesh = wobbly_tube_with(8, 6);
    let full = coordinate_descriptors(&mesh);
    let narrow = full.columns(0, 3).into_owned();
    let short = full.rows(0, 10).into_owned();
    for (source, target) in [(full.clone(), narrow), (short, full.clone())] {
        let config = MatchConfig {
            k: 6,
            descriptors: DescriptorSource::External { source, target },
            ..MatchConfig::default()
        };
        let err = match_shapes(&mesh, &mesh, &config).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }), "{err}");
    }
}

#[test]
fn self_symmetry_finds_the_blob_reflection() {
    let mesh = lopsided_blob(0.0);
    let config = MatchConfig {
        orientation: Some(Orientation::Preserve),
        ..MatchConfig::default()
    };
    let result = self_symmetry(&mesh, &config).unwrap();
    let reflection = blob_reflection();
    let t = &result.refinement.state.t12;
    let hits = (0..t.len()).filter(|&i| t.get(i) == reflection.get(i)).count();
    let fraction = hits as f64 / t.len() as f64;
    assert!(fraction >= 0.8, "reflection recovered at {fraction}");
}
