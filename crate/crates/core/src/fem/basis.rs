//! Lagrange basis of order 1-3 on triangles, written in barycentric
//! coordinates.
//!
//! Local node order: the three vertices, then `p - 1` nodes on each edge
//! (0,1), (1,2), (2,0) running from the first to the second vertex, then
//! interior nodes.

pub const LOCAL_EDGES: [[usize; 2]; 3] = [[0, 1], [1, 2], [2, 0]];

/// Barycentric multi-indices `alpha` (summing to `p`) of the local nodes.
pub fn node_multi_indices(order: usize) -> Vec<[usize; 3]> {
    let p = order;
    let mut out = vec![[p, 0, 0], [0, p, 0], [0, 0, p]];
    for [a, b] in LOCAL_EDGES {
        for t in 1..p {
            let mut m = [0; 3];
            m[a] = p - t;
            m[b] = t;
            out.push(m);
        }
    }
    if p == 3 {
        out.push([1, 1, 1]);
    }
    out
}

pub fn num_local_nodes(order: usize) -> usize {
    (order + 1) * (order + 2) / 2
}

/// Value and barycentric gradient of the Lagrange function with node index
/// `alpha` at barycentric point `l`.
fn lagrange(alpha: [usize; 3], p: usize, l: [f64; 3]) -> (f64, [f64; 3]) {
    // phi = prod_i f_i(l_i), f_i(s) = prod_{j < alpha_i} (p s - j) / (j + 1)
    let mut vals = [1.0; 3];
    let mut ders = [0.0; 3];
    for i in 0..3 {
        let (mut f, mut df) = (1.0, 0.0);
        for j in 0..alpha[i] {
            let fac = (p as f64 * l[i] - j as f64) / (j as f64 + 1.0);
            let dfac = p as f64 / (j as f64 + 1.0);
            df = df * fac + f * dfac;
            f *= fac;
        }
        vals[i] = f;
        ders[i] = df;
    }
    let v = vals[0] * vals[1] * vals[2];
    let g = [
        ders[0] * vals[1] * vals[2],
        vals[0] * ders[1] * vals[2],
        vals[0] * vals[1] * ders[2],
    ];
    (v, g)
}

/// Basis values and barycentric gradients tabulated at a set of points.
#[derive(Debug, Clone)]
pub struct Tabulation {
    /// `values[q][i]`
    pub values: Vec<Vec<f64>>,
    /// `bary_grads[q][i]`: derivative with respect to each barycentric coordinate.
    pub bary_grads: Vec<Vec<[f64; 3]>>,
}

pub fn tabulate(order: usize, points: &[[f64; 3]]) -> Tabulation {
    let alphas = node_multi_indices(order);
    let mut values = Vec::with_capacity(points.len());
    let mut bary_grads = Vec::with_capacity(points.len());
    for &l in points {
        let (v, g): (Vec<f64>, Vec<[f64; 3]>) = alphas.iter().map(|&a| lagrange(a, order, l)).unzip();
        values.push(v);
        bary_grads.push(g);
    }
    Tabulation { values, bary_grads }
}

/// Physical gradient from barycentric derivatives and the gradients of the
/// barycentric coordinates.
#[inline]
pub fn physical_grad(bg: [f64; 3], grad_l: &[[f64; 2]; 3]) -> [f64; 2] {
    [
        bg[0] * grad_l[0][0] + bg[1] * grad_l[1][0] + bg[2] * grad_l[2][0],
        bg[0] * grad_l[0][1] + bg[1] * grad_l[1][1] + bg[2] * grad_l[2][1],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronecker_property_and_partition_of_unity() {
        for p in 1..=3 {
            let alphas = node_multi_indices(p);
            assert_eq!(alphas.len(), num_local_nodes(p));
            let pts: Vec<[f64; 3]> = alphas
                .iter()
                .map(|a| [a[0] as f64 / p as f64, a[1] as f64 / p as f64, a[2] as f64 / p as f64])
                .collect();
            let tab = tabulate(p, &pts);
            for (q, row) in tab.values.iter().enumerate() {
                for (i, v) in row.iter().enumerate() {
                    let want = if i == q { 1.0 } else { 0.0 };
                    assert!((v - want).abs() < 1e-13, "p={p} node {q} basis {i}: {v}");
                }
            }
            let tab = tabulate(p, &[[0.2, 0.3, 0.5]]);
            assert!((tab.values[0].iter().sum::<f64>() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = 3;
        let l = [0.21, 0.33, 0.46];
        let base = tabulate(p, &[l]);
        let h = 1e-6;
        for d in 0..3 {
            let mut lp = l;
            lp[d] += h;
            let mut lm = l;
            lm[d] -= h;
            let (tp, tm) = (tabulate(p, &[lp]), tabulate(p, &[lm]));
            for i in 0..num_local_nodes(p) {
                let fd = (tp.values[0][i] - tm.values[0][i]) / (2.0 * h);
                assert!((fd - base.bary_grads[0][i][d]).abs() < 1e-7);
            }
        }
    }
}
