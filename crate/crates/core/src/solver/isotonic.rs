//! Nondecreasing projection of a mass function.

/// Least-squares nondecreasing fit (pool adjacent violators) of the interior
/// values, then clamped into `[values[0], values[last]]`. Endpoints are kept.
pub(crate) fn project_nondecreasing(values: &mut [f64]) {
    let len = values.len();
    if len < 3 {
        return;
    }
    let lo = values[0];
    let hi = values[len - 1];
    let interior = &mut values[1..len - 1];
    // blocks of (mean, count)
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(interior.len());
    for &x in interior.iter() {
        blocks.push((x, 1));
        while blocks.len() > 1 {
            let (m2, c2) = blocks[blocks.len() - 1];
            let (m1, c1) = blocks[blocks.len() - 2];
            if m1 <= m2 {
                break;
            }
            blocks.pop();
            let c = c1 + c2;
            *blocks.last_mut().unwrap() = ((m1 * c1 as f64 + m2 * c2 as f64) / c as f64, c);
        }
    }
    let mut k = 0;
    for (mean, count) in blocks {
        for x in &mut interior[k..k + count] {
            *x = mean.clamp(lo, hi);
        }
        k += count;
    }
}
