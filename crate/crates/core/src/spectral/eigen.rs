//! Smallest eigenpairs of the generalized problem `W φ = λ M φ`.
//!
//! With diagonal `M` the problem is symmetric in the scaled variable
//! `y = M^{1/2} φ`. Small problems are solved densely. Larger ones use a
//! restarted block Krylov method on the shift-inverted operator
//! `M^{1/2} (W + σM)^{-1} M^{1/2}` with Rayleigh–Ritz extraction against `W`.

use log::debug;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sprs::{CsMat, TriMat};
use sprs_ldl::{Ldl, LdlNumeric};

use super::basis::SpectralBasis;
use super::laplacian::{sparse_mul, Laplacian};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct EigenOptions {
    /// Residual tolerance relative to the largest wanted eigenvalue.
    pub tol: f64,
    pub max_restarts: usize,
    /// Meshes with at most this many vertices are solved densely.
    pub dense_threshold: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_restarts: 80,
            dense_threshold: 400,
            seed: 0x5eed,
        }
    }
}

/// The `k` smallest eigenpairs with the default options.
pub fn eigenbasis(lap: &Laplacian, k: usize) -> Result<SpectralBasis> {
    eigenbasis_with(lap, k, &EigenOptions::default())
}

pub fn eigenbasis_with(lap: &Laplacian, k: usize, opts: &EigenOptions) -> Result<SpectralBasis> {
    let n = lap.n();
    if k > n {
        return Err(Error::InsufficientBasis { needed: k, available: n });
    }
    let block = block_size(k);
    let (mut evals, mut phi) = if k == 0 {
        (Vec::new(), DMatrix::zeros(n, 0))
    } else if n <= opts.dense_threshold || 3 * block > n / 2 {
        dense_solve(lap, k)
    } else {
        krylov_solve(lap, k, block, opts)?
    };
    for l in &mut evals {
        if *l < 0.0 {
            *l = 0.0;
        }
    }
    fix_signs(&mut phi);
    SpectralBasis::new(evals, phi, lap.mass.clone())
}

fn block_size(k: usize) -> usize {
    k + (k / 2).max(10)
}

/// Makes the entry of largest magnitude in every column positive; ties go to
/// the lowest row index.
pub fn fix_signs(phi: &mut DMatrix<f64>) {
    for mut col in phi.column_iter_mut() {
        let mut best = 0;
        for i in 1..col.len() {
            if col[i].abs() > col[best].abs() {
                best = i;
            }
        }
        if col.len() > 0 && col[best] < 0.0 {
            col.neg_mut();
        }
    }
}

fn dense_solve(lap: &Laplacian, k: usize) -> (Vec<f64>, DMatrix<f64>) {
    let inv_s: Vec<f64> = lap.mass.iter().map(|m| 1.0 / m.sqrt()).collect();
    let mut a = lap.stiffness_dense();
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            a[(i, j)] *= inv_s[i] * inv_s[j];
        }
    }
    let a = (&a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(a);
    let order = ascending(eig.eigenvalues.as_slice());
    let evals = order[..k].iter().map(|&i| eig.eigenvalues[i]).collect();
    let phi = DMatrix::from_fn(lap.n(), k, |r, c| eig.eigenvectors[(r, order[c])] * inv_s[r]);
    (evals, phi)
}

fn ascending(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    order
}

struct ShiftInvert {
    factor: LdlNumeric<f64, usize>,
    sqrt_mass: Vec<f64>,
}

impl ShiftInvert {
    fn new(lap: &Laplacian, shift: f64) -> Result<Self> {
        let n = lap.n();
        let mut tri = TriMat::with_capacity((n, n), lap.stiffness.nnz() + n);
        for (&v, (i, j)) in lap.stiffness.iter() {
            tri.add_triplet(i, j, v);
        }
        for (i, &m) in lap.mass.iter().enumerate() {
            tri.add_triplet(i, i, shift * m);
        }
        let k: CsMat<f64> = tri.to_csc();
        let factor = Ldl::new()
            .numeric(k.view())
            .map_err(|_| Error::ConvergenceFailure { converged: 0, requested: n })?;
        Ok(Self {
            factor,
            sqrt_mass: lap.mass.iter().map(|m| m.sqrt()).collect(),
        })
    }

    fn apply(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(y.nrows(), y.ncols());
        let mut rhs = vec![0.0; y.nrows()];
        for c in 0..y.ncols() {
            for (i, r) in rhs.iter_mut().enumerate() {
                *r = self.sqrt_mass[i] * y[(i, c)];
            }
            let z: Vec<f64> = self.factor.solve(&rhs);
            let mut oc = out.column_mut(c);
            for i in 0..z.len() {
                oc[i] = self.sqrt_mass[i] * z[i];
            }
        }
        out
    }
}

fn normalize_columns(x: &mut DMatrix<f64>) {
    for mut c in x.column_iter_mut() {
        let n = c.norm();
        if n > 0.0 {
            c /= n;
        }
    }
}

fn krylov_solve(lap: &Laplacian, k: usize, p: usize, opts: &EigenOptions) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = lap.n();
    let trace_w: f64 = lap.stiffness.diag_iter().map(|d| d.copied().unwrap_or(0.0)).sum();
    let trace_m: f64 = lap.mass.iter().sum();
    let shift = 1e-5 * trace_w / trace_m;
    let op = ShiftInvert::new(lap, shift)?;
    let inv_s: Vec<f64> = lap.mass.iter().map(|m| 1.0 / m.sqrt()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x = DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng));
    for i in 0..n {
        x[(i, 0)] = lap.mass[i].sqrt();
    }
    normalize_columns(&mut x);

    let mut converged = 0;
    for restart in 0..opts.max_restarts {
        let mut y1 = op.apply(&x);
        normalize_columns(&mut y1);
        let mut y2 = op.apply(&y1);
        normalize_columns(&mut y2);
        let mut b = DMatrix::zeros(n, 3 * p);
        b.columns_mut(0, p).copy_from(&x);
        b.columns_mut(p, p).copy_from(&y1);
        b.columns_mut(2 * p, p).copy_from(&y2);
        let q = b.qr().q();

        // Rayleigh–Ritz against M^{-1/2} W M^{-1/2}.
        let mut z = q.clone();
        for (i, mut row) in z.row_iter_mut().enumerate() {
            row *= inv_s[i];
        }
        let wz = sparse_mul(&lap.stiffness, &z);
        let h = z.tr_mul(&wz);
        let h = (&h + h.transpose()) * 0.5;
        let eig = SymmetricEigen::new(h);
        let order = ascending(eig.eigenvalues.as_slice());
        let s = DMatrix::from_fn(3 * p, p, |r, c| eig.eigenvectors[(r, order[c])]);
        let theta: Vec<f64> = order[..p].iter().map(|&i| eig.eigenvalues[i]).collect();
        x = &q * &s;

        let mut ax = &wz * &s;
        for (i, mut row) in ax.row_iter_mut().enumerate() {
            row *= inv_s[i];
        }
        let scale = theta[k - 1].abs().max(f64::MIN_POSITIVE);
        converged = (0..k)
            .take_while(|&j| (ax.column(j) - x.column(j) * theta[j]).norm() <= opts.tol * scale)
            .count();
        debug!("eigensolver restart {restart}: {converged}/{k} converged");
        if converged == k {
            let phi = DMatrix::from_fn(n, k, |r, c| x[(r, c)] * inv_s[r]);
            return Ok((theta[..k].to_vec(), phi));
        }
    }
    Err(Error::ConvergenceFailure { converged, requested: k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;
    use crate::spectral::build_laplacian;

    fn check_invariants(lap: &Laplacian, b: &SpectralBasis) {
        let k = b.k();
        let mut mphi = b.phi().clone();
        for (i, mut row) in mphi.row_iter_mut().enumerate() {
            row *= lap.mass[i];
        }
        let gram = b.phi().tr_mul(&mphi);
        assert!((gram - DMatrix::identity(k, k)).amax() < 1e-8);
        let wphi = sparse_mul(&lap.stiffness, b.phi());
        let lam = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(b.evals()));
        let rhs = &mphi * lam;
        assert!((&wphi - &rhs).norm() <= 1e-6 * wphi.norm().max(1.0));
        assert!(b.evals().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn krylov_matches_dense_on_torus() {
        let m = shapes::torus(30, 16, 1.0, 0.4);
        let lap = build_laplacian(&m).unwrap();
        let dense = eigenbasis_with(&lap, 20, &EigenOptions { dense_threshold: usize::MAX, ..Default::default() }).unwrap();
        let sparse = eigenbasis_with(&lap, 20, &EigenOptions { dense_threshold: 0, ..Default::default() }).unwrap();
        check_invariants(&lap, &sparse);
        for (a, b) in dense.evals().iter().zip(sparse.evals()) {
            assert!((a - b).abs() < 1e-8 * (1.0 + a.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn first_eigenfunction_is_constant() {
        let m = shapes::icosphere(2);
        let lap = build_laplacian(&m).unwrap();
        let b = eigenbasis(&lap, 1).unwrap();
        assert!(b.evals()[0].abs() < 1e-10);
        let c = 1.0 / m.total_area().sqrt();
        for i in 0..m.n_vertices() {
            assert!((b.phi()[(i, 0)] - c).abs() < 1e-10);
        }
    }

    #[test]
    fn sphere_spectrum_groups() {
        let m = shapes::icosphere(3);
        let lap = build_laplacian(&m).unwrap();
        let b = eigenbasis(&lap, 16).unwrap();
        check_invariants(&lap, &b);
        let ev = b.evals();
        assert!(ev[0].abs() < 1e-9);
        for &l in &ev[1..4] {
            assert!((l - 2.0).abs() < 0.06);
        }
        for &l in &ev[4..9] {
            assert!((l - 6.0).abs() < 0.18);
        }
        for &l in &ev[9..16] {
            assert!((l - 12.0).abs() < 0.36);
        }
    }

    #[test]
    fn deterministic_bit_for_bit() {
        let m = shapes::geodesic_sphere(9);
        let lap = build_laplacian(&m).unwrap();
        let a = eigenbasis(&lap, 12).unwrap();
        let b = eigenbasis(&lap, 12).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sign_convention_makes_largest_entry_positive() {
        let mut phi = DMatrix::from_row_slice(3, 2, &[1.0, -2.0, -3.0, 2.0, 0.5, 0.0]);
        fix_signs(&mut phi);
        assert_eq!(phi.column(0).as_slice(), &[-1.0, 3.0, -0.5]);
        // Tie between rows 0 and 1: the lower index decides.
        assert_eq!(phi.column(1).as_slice(), &[2.0, -2.0, 0.0]);
    }

    #[test]
    fn too_many_eigenpairs_is_rejected() {
        let lap = build_laplacian(&shapes::icosahedron()).unwrap();
        assert!(matches!(eigenbasis(&lap, 13), Err(Error::InsufficientBasis { .. })));
    }
}
