/// Outcome of a one-dimensional bracketed minimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoldenResult {
    pub x: f64,
    pub fx: f64,
    pub evaluations: usize,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the minimum of `f` on `[lo, hi]`.
///
/// Narrows the bracket until it is narrower than `tol`. Assumes `f` is
/// unimodal on the bracket; the endpoints are also evaluated so a monotone
/// objective returns the better boundary.
pub fn golden_section_min<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> GoldenResult {
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut evaluations = 2;
    while (b - a) > tol && evaluations < 500 {
        if fc <= fd {
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
        evaluations += 1;
    }
    let mid = 0.5 * (a + b);
    let candidates = [(c, fc), (d, fd), (mid, f(mid)), (lo, f(lo)), (hi, f(hi))];
    evaluations += 3;
    let (x, fx) =
        candidates
            .into_iter()
            .filter(|(_, v)| !v.is_nan())
            .fold(
                (mid, f64::INFINITY),
                |best, cand| if cand.1 < best.1 { cand } else { best },
            );
    GoldenResult { x, fx, evaluations }
}
