//! Symmetric quadrature rules on triangles (barycentric points, weights
//! summing to one) and Gauss-Legendre rules on [0, 1].

#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

fn orbit3(a: f64, b: f64) -> [[f64; 3]; 3] {
    [[a, b, b], [b, a, b], [b, b, a]]
}

fn orbit6(a: f64, b: f64, c: f64) -> [[f64; 3]; 6] {
    [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]]
}

impl TriangleRule {
    /// 7-point rule, exact for degree 5.
    pub fn degree5() -> Self {
        let s15 = 15f64.sqrt();
        let b1 = (6.0 + s15) / 21.0;
        let b2 = (6.0 - s15) / 21.0;
        let w1 = (155.0 + s15) / 1200.0;
        let w2 = (155.0 - s15) / 1200.0;
        let mut points = vec![[1.0 / 3.0; 3]];
        let mut weights = vec![0.225];
        for p in orbit3(1.0 - 2.0 * b1, b1) {
            points.push(p);
            weights.push(w1);
        }
        for p in orbit3(1.0 - 2.0 * b2, b2) {
            points.push(p);
            weights.push(w2);
        }
        Self { points, weights }
    }

    /// 12-point rule, exact for degree 6.
    pub fn degree6() -> Self {
        let mut points = Vec::with_capacity(12);
        let mut weights = Vec::with_capacity(12);
        for p in orbit3(0.501426509658179, 0.249286745170910) {
            points.push(p);
            weights.push(0.116786275726379);
        }
        for p in orbit3(0.873821971016996, 0.063089014491502) {
            points.push(p);
            weights.push(0.050844906370207);
        }
        for p in orbit6(0.053145049844817, 0.310352451033784, 0.636502499121399) {
            points.push(p);
            weights.push(0.082851075618374);
        }
        Self { points, weights }
    }

    /// Rule used for element order `p`.
    pub fn for_order(order: usize) -> Self {
        if order <= 2 {
            Self::degree5()
        } else {
            Self::degree6()
        }
    }
}

/// Gauss-Legendre nodes and weights mapped to [0, 1].
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    // Newton on P_n starting from Chebyshev-like guesses
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pnm1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = 0.5 * (1.0 - z);
        w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exact integral of l1^a l2^b l3^c over the reference triangle divided
    /// by its area: 2 a! b! c! / (a + b + c + 2)!.
    fn exact(a: u32, b: u32, c: u32) -> f64 {
        let f = |n: u32| (1..=n).map(f64::from).product::<f64>();
        2.0 * f(a) * f(b) * f(c) / f(a + b + c + 2)
    }

    fn check(rule: &TriangleRule, degree: u32) {
        assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        for a in 0..=degree {
            for b in 0..=(degree - a) {
                let c = degree - a - b;
                let q: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32) * p[2].powi(c as i32))
                    .sum();
                assert!((q - exact(a, b, c)).abs() < 1e-13, "({a},{b},{c}): {q} vs {}", exact(a, b, c));
            }
        }
    }

    #[test]
    fn triangle_rules_are_exact() {
        for d in 0..=5 {
            check(&TriangleRule::degree5(), d);
        }
        for d in 0..=6 {
            check(&TriangleRule::degree6(), d);
        }
    }

    #[test]
    fn gauss_legendre_exactness() {
        let (x, w) = gauss_legendre_unit(5);
        for d in 0..10 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(d)).sum();
            assert!((q - 1.0 / (d as f64 + 1.0)).abs() < 1e-14, "degree {d}");
        }
    }
}
