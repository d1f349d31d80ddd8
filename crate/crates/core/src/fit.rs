//! Straight-line fits in log-log space.

/// Slope and intercept of ln y = slope·ln x + intercept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw {
    pub slope: f64,
    pub intercept: f64,
}

impl PowerLaw {
    pub fn eval(&self, x: f64) -> f64 {
        (self.intercept + self.slope * x.ln()).exp()
    }
}

/// Ordinary least squares on (ln x, ln y). Needs at least two distinct x and
/// strictly positive data.
pub fn loglog_fit(points: &[(f64, f64)]) -> Option<PowerLaw> {
    if points.len() < 2 || points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return None;
    }
    let n = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x.ln(), b + y.ln()));
    let (mx, my) = (sx / n, sy / n);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for &(x, y) in points {
        let dx = x.ln() - mx;
        sxx += dx * dx;
        sxy += dx * (y.ln() - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some(PowerLaw {
        slope,
        intercept: my - slope * mx,
    })
}
