//! Tiny dense helpers. All tensors are flat `&[f64]` slices in row-major
//! order; dimensions stay in the single digits so nothing fancy is needed.

#[inline]
pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[inline]
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `out[p*d + q] += a[p] * b[q]`
#[inline]
pub fn outer_add(out: &mut [f64], a: &[f64], b: &[f64]) {
    let d = b.len();
    for (p, &ap) in a.iter().enumerate() {
        for (q, &bq) in b.iter().enumerate() {
            out[p * d + q] += ap * bq;
        }
    }
}
