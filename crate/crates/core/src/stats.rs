//! Small fitting helpers shared by the scaling studies.

/// Least-squares slope of `ln y` against `ln x`. Points with non-positive coordinates are skipped.
pub fn loglog_slope(points: impl IntoIterator<Item = (f64, f64)>) -> Option<f64> {
    let (mut n, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (x, y) in points {
        if !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite()) {
            continue;
        }
        let (lx, ly) = (libm::log(x), libm::log(y));
        n += 1.0;
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    let den = n * sxx - sx * sx;
    (n >= 2.0 && den > 0.0).then(|| (n * sxy - sx * sy) / den)
}
