//! Scalar helpers shared by the models and the effect formulas.

/// Logistic function `1 / (1 + exp(-z))`.
///
/// Branches on the sign of `z` so that `exp` is only ever evaluated at a
/// non-positive argument and cannot overflow.
#[inline]
pub fn expit(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(p / (1 - p))`.
#[inline]
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// `log(1 + exp(z))` without overflow; returns `z` itself once `exp(-z)`
/// vanishes relative to 1.
#[inline]
pub fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// `log[(1 + exp(a)) / (1 + exp(b))]`.
#[inline]
pub fn log1pexp_ratio(a: f64, b: f64) -> f64 {
    softplus(a) - softplus(b)
}

/// Inner product of two equal-length slices.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}
