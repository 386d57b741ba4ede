use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::Real;

const MAX_SWEEPS: usize = 64;

/// Thin singular value decomposition `A = U · diag(S) · Vᵀ` with
/// `r = min(n, m)` columns in `U` and `V` and `S` non-increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct Svd<T> {
    pub u: Array2<T>,
    pub s: Vec<T>,
    pub v: Array2<T>,
}

/// One-sided Jacobi SVD. Rotations are applied to column pairs until all
/// normalized inner products vanish; column norms are then the singular
/// values. Deterministic, and accurate to machine precision for the
/// desk-scale matrices this crate handles.
pub fn svd<T: Real>(a: ArrayView2<'_, T>) -> Result<Svd<T>> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation("matrix has non-finite entries"));
    }
    let (n, m) = a.dim();
    if n < m {
        let t = svd_tall(a.t().to_owned());
        return Ok(Svd {
            u: t.v,
            s: t.s,
            v: t.u,
        });
    }
    Ok(svd_tall(a.to_owned()))
}

fn svd_tall<T: Real>(mut w: Array2<T>) -> Svd<T> {
    let (n, m) = w.dim();
    let mut v = Array2::<T>::eye(m);
    let tol = T::epsilon() * T::from_usize(n.max(16)).unwrap();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..m.saturating_sub(1) {
            for q in (p + 1)..m {
                let mut alpha = T::zero();
                let mut beta = T::zero();
                let mut gamma = T::zero();
                for i in 0..n {
                    let wp = w[[i, p]];
                    let wq = w[[i, q]];
                    alpha += wp * wp;
                    beta += wq * wq;
                    gamma += wp * wq;
                }
                if alpha == T::zero() || beta == T::zero() {
                    continue;
                }
                if gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let two = T::one() + T::one();
                let zeta = (beta - alpha) / (two * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for i in 0..n {
                    let wp = w[[i, p]];
                    let wq = w[[i, q]];
                    w[[i, p]] = c * wp - s * wq;
                    w[[i, q]] = s * wp + c * wq;
                }
                for i in 0..m {
                    let vp = v[[i, p]];
                    let vq = v[[i, q]];
                    v[[i, p]] = c * vp - s * vq;
                    v[[i, q]] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<T> = (0..m)
        .map(|j| {
            let mut ss = T::zero();
            for i in 0..n {
                ss += w[[i, j]] * w[[i, j]];
            }
            ss.sqrt()
        })
        .collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap().then(i.cmp(&j)));

    let mut u = Array2::<T>::zeros((n, m));
    let mut s = vec![T::zero(); m];
    let mut v_sorted = Array2::<T>::zeros((m, m));
    for (out, &src) in order.iter().enumerate() {
        s[out] = norms[src];
        if norms[src] > T::zero() {
            for i in 0..n {
                u[[i, out]] = w[[i, src]] / norms[src];
            }
        }
        for i in 0..m {
            v_sorted[[i, out]] = v[[i, src]];
        }
    }
    complete_zero_columns(&mut u, &s);
    Svd { u, s, v: v_sorted }
}

/// Replaces the columns that belong to zero singular values with an
/// orthonormal completion of the remaining basis, so `UᵀU = I` also holds
/// for rank-deficient inputs.
fn complete_zero_columns<T: Real>(u: &mut Array2<T>, s: &[T]) {
    let (n, m) = u.dim();
    let half = T::from_f64(0.5).unwrap();
    for j in 0..m {
        if s[j] > T::zero() {
            continue;
        }
        'candidates: for e in 0..n {
            let mut candidate = vec![T::zero(); n];
            candidate[e] = T::one();
            for other in 0..m {
                if other == j || (s[other] == T::zero() && other > j) {
                    continue;
                }
                let mut dot = T::zero();
                for i in 0..n {
                    dot += candidate[i] * u[[i, other]];
                }
                for i in 0..n {
                    candidate[i] = candidate[i] - dot * u[[i, other]];
                }
            }
            let norm = candidate
                .iter()
                .map(|&x| x * x)
                .fold(T::zero(), |acc, x| acc + x)
                .sqrt();
            if norm > half {
                for i in 0..n {
                    u[[i, j]] = candidate[i] / norm;
                }
                break 'candidates;
            }
        }
    }
}
