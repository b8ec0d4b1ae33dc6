use nalgebra::DMatrix;

/// Singular values below this mark a projection as rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Nearest orthonormal matrix `U Vᵀ` of a square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub matrix: DMatrix<f64>,
    /// The smallest singular value fell below [`RANK_TOLERANCE`]; the result
    /// is orthonormal but not unique.
    pub rank_deficient: bool,
}

pub fn proj_orthonormal(a: &DMatrix<f64>) -> Projection {
    assert!(a.is_square(), "projection needs a square matrix");
    if a.is_empty() {
        return Projection {
            matrix: a.clone(),
            rank_deficient: false,
        };
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested Vᵀ");
    let min_sv = svd.singular_values.min();
    Projection {
        matrix: u * v_t,
        rank_deficient: !(min_sv >= RANK_TOLERANCE),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_and_scaled_identity() {
        let i = DMatrix::<f64>::identity(4, 4);
        assert!((proj_orthonormal(&i).matrix - &i).amax() < 1e-15);
        assert!((proj_orthonormal(&(&i * 2.0)).matrix - &i).amax() < 1e-15);
    }

    #[test]
    fn recovers_rotation_from_stretched_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = DMatrix::from_fn(2, 2, |_, _| rng.random_range(-1.0..1.0)).qr().q();
        let a = &r * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.0]));
        assert!((proj_orthonormal(&a).matrix - r).amax() < 1e-10);
    }

    #[test]
    fn flags_rank_deficiency() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let p = proj_orthonormal(&a);
        assert!(p.rank_deficient);
        assert!((p.matrix.transpose() * &p.matrix - DMatrix::identity(2, 2)).amax() < 1e-10);
    }

    proptest! {
        #[test]
        fn output_is_orthonormal_and_idempotent(seed in 0u64..500, k in 1usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..1.0));
            let q = proj_orthonormal(&a).matrix;
            prop_assert!((q.transpose() * &q - DMatrix::identity(k, k)).amax() < 1e-10);
            prop_assert!((proj_orthonormal(&q).matrix - &q).amax() < 1e-10);
        }
    }
}
