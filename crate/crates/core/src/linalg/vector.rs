//! Small helpers on complex slices.

use crate::C64;

/// Hermitian inner product `x^H y`.
pub fn dot(x: &[C64], y: &[C64]) -> C64 {
    debug_assert_eq!(x.len(), y.len());
    let mut acc = C64::new(0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        acc += a.conj() * b;
    }
    acc
}

pub fn norm2(x: &[C64]) -> f64 {
    // scaled accumulation is unnecessary at these magnitudes
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: C64, x: &mut [C64]) {
    for v in x.iter_mut() {
        *v *= alpha;
    }
}

pub fn sub(x: &[C64], y: &[C64]) -> Vec<C64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

pub fn zeros(n: usize) -> Vec<C64> {
    vec![C64::new(0.0, 0.0); n]
}

/// Relative 2-norm distance `|x - y| / |y|` (absolute when `y = 0`).
pub fn rel_diff(x: &[C64], y: &[C64]) -> f64 {
    let d = norm2(&sub(x, y));
    let n = norm2(y);
    if n == 0.0 {
        d
    } else {
        d / n
    }
}
