//! One-dimensional golden-section search.

/// 1/φ
const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchResult {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
}

/// Maximizes a unimodal `f` on `[lo, hi]` until the bracket is narrower than
/// `tol` or `max_iter` iterations have run. The bracket endpoints are compared
/// with the interior optimum so boundary maxima are returned exactly.
pub fn golden_section_max<F>(f: F, lo: f64, hi: f64, tol: f64, max_iter: usize) -> SearchResult
where
    F: Fn(f64) -> f64,
{
    assert!(lo <= hi, "empty bracket [{lo}, {hi}]");
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iterations = 0;
    while (b - a) > tol && iterations < max_iter {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        iterations += 1;
    }
    let mid = 0.5 * (a + b);
    let mut best = SearchResult {
        x: mid,
        value: f(mid),
        iterations,
    };
    for edge in [lo, hi] {
        let v = f(edge);
        if v > best.value {
            best = SearchResult {
                x: edge,
                value: v,
                iterations,
            };
        }
    }
    best
}
