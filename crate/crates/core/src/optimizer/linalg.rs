//! Dense symmetric positive-definite solves for the Newton step.

use crate::scalar::Scalar;

/// In-place Cholesky factorization of a row-major `dim x dim` matrix.
/// Leaves the lower triangle holding `L`; returns `false` if a pivot is not positive.
fn cholesky_in_place<T: Scalar>(a: &mut [T], dim: usize) -> bool {
    for j in 0..dim {
        let mut diag = a[j * dim + j];
        for k in 0..j {
            diag -= a[j * dim + k] * a[j * dim + k];
        }
        if !(diag > T::zero()) || !diag.is_finite() {
            return false;
        }
        let ljj = diag.sqrt();
        a[j * dim + j] = ljj;
        for i in (j + 1)..dim {
            let mut v = a[i * dim + j];
            for k in 0..j {
                v -= a[i * dim + k] * a[j * dim + k];
            }
            a[i * dim + j] = v / ljj;
        }
    }
    true
}

fn substitute<T: Scalar>(l: &[T], dim: usize, rhs: &[T]) -> Vec<T> {
    let mut y = rhs.to_vec();
    for i in 0..dim {
        let mut v = y[i];
        for k in 0..i {
            v -= l[i * dim + k] * y[k];
        }
        y[i] = v / l[i * dim + i];
    }
    for i in (0..dim).rev() {
        let mut v = y[i];
        for k in (i + 1)..dim {
            v -= l[k * dim + i] * y[k];
        }
        y[i] = v / l[i * dim + i];
    }
    y
}

/// Solves `(H + lambda I) x = rhs` for symmetric `H`.
///
/// `lambda` starts at `floor * max|diag H|` and grows tenfold until the
/// factorization succeeds. Returns `None` only if `H` has non-finite entries.
pub(crate) fn solve_regularized<T: Scalar>(h: &[T], dim: usize, rhs: &[T], floor: T) -> Option<Vec<T>> {
    let scale = (0..dim)
        .map(|i| h[i * dim + i].abs())
        .fold(T::zero(), T::max)
        .max(T::min_positive_value());
    if !scale.is_finite() {
        return None;
    }
    let mut lambda = floor * scale;
    for _ in 0..40 {
        let mut a = h.to_vec();
        for i in 0..dim {
            a[i * dim + i] += lambda;
        }
        if cholesky_in_place(&mut a, dim) {
            return Some(substitute(&a, dim, rhs));
        }
        lambda = (lambda * T::lit(10.0)).max(T::epsilon() * scale);
    }
    None
}
