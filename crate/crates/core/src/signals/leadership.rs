/// Relative tolerance under which consecutive series values count as equal.
/// Absorbs floating-point noise from recomputing betweenness per window.
pub const PLATEAU_TOLERANCE: f64 = 1e-9;

fn same(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= PLATEAU_TOLERANCE * a.abs().max(b.abs())
}

/// Number of interior strict local extrema after collapsing runs of equal
/// values. A constant series scores 0.
pub fn rotating_leadership(series: &[f64]) -> u32 {
    let mut collapsed: Vec<f64> = Vec::with_capacity(series.len());
    for &x in series {
        if collapsed.last().is_none_or(|&prev| !same(prev, x)) {
            collapsed.push(x);
        }
    }
    collapsed
        .windows(3)
        .filter(|w| (w[1] > w[0] && w[1] > w[2]) || (w[1] < w[0] && w[1] < w[2]))
        .count() as u32
}
