//! Small dense vector helpers on `f64` slices.

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(alpha: f64, x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| alpha * v).collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|v| v.is_finite())
}

/// Minimizes `0.5 λᵀQλ − cᵀλ` over `λ ≥ 0` for a small symmetric PSD `Q`
/// by enumerating active sets. Returns `None` when no KKT point exists
/// (the problem is unbounded below).
///
/// Intended for at most a couple dozen variables.
pub fn nonneg_qp_small(q: &nalgebra::DMatrix<f64>, c: &[f64], tol: f64) -> Option<Vec<f64>> {
    let m = c.len();
    assert!(m <= 24, "active-set enumeration limited to 24 variables");
    if m == 0 {
        return Some(Vec::new());
    }
    let scale = 1.0 + q.amax() + c.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    // Subsets visited in order of increasing size so sparse multipliers win ties.
    let mut masks: Vec<u32> = (0..(1u32 << m)).collect();
    masks.sort_by_key(|s| (s.count_ones(), *s));
    for mask in masks {
        let idx: Vec<usize> = (0..m).filter(|j| mask & (1 << j) != 0).collect();
        let mut lam = vec![0.0; m];
        if !idx.is_empty() {
            let k = idx.len();
            let sub = nalgebra::DMatrix::from_fn(k, k, |r, s| q[(idx[r], idx[s])]);
            let rhs = nalgebra::DVector::from_iterator(k, idx.iter().map(|&j| c[j]));
            let svd = sub.clone().svd(true, true);
            let Ok(sol) = svd.solve(&rhs, 1e-12 * scale) else {
                continue;
            };
            // Singular subsystems must still be consistent.
            let resid = (&sub * &sol - &rhs).amax();
            if resid > tol * scale {
                continue;
            }
            for (r, &j) in idx.iter().enumerate() {
                lam[j] = sol[r];
            }
        }
        if lam.iter().any(|&v| v < -tol * scale) {
            continue;
        }
        for v in lam.iter_mut() {
            *v = v.max(0.0);
        }
        // Gradient Qλ − c must be nonnegative off the support and ~0 on it.
        let ok = (0..m).all(|j| {
            let g: f64 = (0..m).map(|s| q[(j, s)] * lam[s]).sum::<f64>() - c[j];
            if mask & (1 << j) != 0 {
                g.abs() <= tol * scale
            } else {
                g >= -tol * scale
            }
        });
        // The first KKT point found is optimal for a convex problem.
        if ok {
            return Some(lam);
        }
    }
    None
}
