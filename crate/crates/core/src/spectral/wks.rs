use nalgebra::DMatrix;

use super::basis::SpectralBasis;
use super::descriptors::DescriptorSet;
use crate::error::{Error, Result};

/// Wave kernel signature with `num_energies` log-spaced energy levels built
/// from the first `num_eigs` eigenpairs (the constant mode is skipped).
///
/// The energy range is `[log λ₁ + 2σ, log λ_max − 2σ]` with
/// `σ = 7 · (log λ_max − log λ₁) / num_energies`. Each column is divided by
/// the sum of its spectral weights, so its mass-weighted integral is 1.
pub fn wks(basis: &SpectralBasis, num_energies: usize, num_eigs: usize) -> Result<DescriptorSet> {
    if num_eigs > basis.k() {
        return Err(Error::InsufficientBasis {
            needed: num_eigs,
            available: basis.k(),
        });
    }
    if num_eigs < 3 || num_energies == 0 {
        return Err(Error::Config(format!(
            "wks needs at least 3 eigenpairs and one energy level (got {num_eigs}, {num_energies})"
        )));
    }
    let evals = &basis.evals()[1..num_eigs];
    let floor = 1e-12 * evals.last().copied().unwrap_or(1.0).abs().max(f64::MIN_POSITIVE);
    let log_l: Vec<f64> = evals.iter().map(|l| l.max(floor).ln()).collect();
    let (lo, hi) = (log_l[0], log_l[log_l.len() - 1]);
    let sigma = 7.0 * (hi - lo) / num_energies as f64;
    if !(sigma > 0.0) {
        return Err(Error::Config("wks needs a non-degenerate eigenvalue range".into()));
    }
    let (e_min, e_max) = (lo + 2.0 * sigma, hi - 2.0 * sigma);
    let energies: Vec<f64> = if num_energies == 1 {
        vec![0.5 * (e_min + e_max)]
    } else {
        (0..num_energies)
            .map(|i| e_min + (e_max - e_min) * i as f64 / (num_energies - 1) as f64)
            .collect()
    };

    // weights[(j, e)]: contribution of eigenpair j+1 at energy e, column-normalized.
    let m = log_l.len();
    let mut weights = DMatrix::from_fn(m, num_energies, |j, e| {
        let d = energies[e] - log_l[j];
        (-d * d / (2.0 * sigma * sigma)).exp()
    });
    for mut col in weights.column_iter_mut() {
        let s = col.sum();
        col /= s;
    }
    let phi = basis.phi();
    let sq = DMatrix::from_fn(basis.n(), m, |i, j| phi[(i, j + 1)] * phi[(i, j + 1)]);
    DescriptorSet::from_raw(basis, sq * weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{shapes, TriangleMesh, Vec3};
    use crate::spectral::{build_laplacian, eigenbasis};
    use nalgebra::Rotation3;

    fn basis_of(m: &TriangleMesh, k: usize) -> SpectralBasis {
        eigenbasis(&build_laplacian(m).unwrap(), k).unwrap()
    }

    fn bumpy() -> TriangleMesh {
        shapes::icosphere(3)
            .map_vertices(|v| v * (1.0 + 0.2 * v.z + 0.15 * v.x * v.y + 0.1 * v.x))
            .unwrap()
    }

    fn assert_close(a: &DMatrix<f64>, b: &DMatrix<f64>, rel: f64) {
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() <= rel * x.abs().max(y.abs()) + 1e-12, "{x} vs {y}");
        }
    }

    #[test]
    fn columns_integrate_to_one_and_are_nonnegative() {
        let m = bumpy();
        let b = basis_of(&m, 30);
        let d = wks(&b, 40, 30).unwrap();
        assert!(d.raw().iter().all(|&v| v >= 0.0));
        for j in 0..d.len() {
            let integral: f64 = d.raw().column(j).iter().zip(b.mass()).map(|(v, a)| v * a).sum();
            assert!((integral - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn invariant_under_rigid_motion() {
        let m = bumpy();
        let r = Rotation3::from_euler_angles(0.3, -1.1, 2.0);
        let moved = m.map_vertices(|v| r * v + Vec3::new(3.0, -1.0, 0.5)).unwrap();
        let a = wks(&basis_of(&m, 30), 50, 30).unwrap();
        let b = wks(&basis_of(&moved, 30), 50, 30).unwrap();
        assert_close(a.raw(), b.raw(), 1e-6);
    }

    #[test]
    fn invariant_under_mirroring() {
        let m = bumpy();
        let a = wks(&basis_of(&m, 30), 50, 30).unwrap();
        let b = wks(&basis_of(&m.mirrored().unwrap(), 30), 50, 30).unwrap();
        assert_close(a.raw(), b.raw(), 1e-6);
    }

    #[test]
    fn nearly_homogeneous_on_sphere() {
        // Complete eigenspaces (l ≤ 5) give vertex-independent values on the
        // smooth sphere. The icosphere splits each eigenspace slightly, which
        // the narrow energy windows amplify most at high energies.
        let m = shapes::icosphere(4);
        let d = wks(&basis_of(&m, 36), 100, 36).unwrap();
        for j in 0..d.len() {
            let col = d.raw().column(j);
            let spread = (col.max() - col.min()) / col.mean();
            let bound = if j < 50 { 3e-3 } else { 2.5e-2 };
            assert!(spread < bound, "column {j}: {spread}");
        }
    }

    #[test]
    fn requires_enough_eigenpairs() {
        let b = basis_of(&shapes::icosphere(1), 10);
        assert!(matches!(wks(&b, 10, 11), Err(Error::InsufficientBasis { needed: 11, available: 10 })));
    }
}
