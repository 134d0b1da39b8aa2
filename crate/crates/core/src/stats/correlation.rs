use super::special::student_t_sf;
use super::{Method, StatsError, TestResult};

/// Pearson product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(StatsError::InsufficientSample {
            needed: 2,
            got: x.len(),
        });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Williams test for the difference between two dependent correlations
/// `r12` and `r13` that share variable 1, given `r23` and sample size `n`.
///
/// `p_greater` tests `r12 > r13` against Student's t with `n - 3` degrees of
/// freedom.
pub fn williams(r12: f64, r13: f64, r23: f64, n: usize) -> Result<TestResult, StatsError> {
    if n < 4 {
        return Err(StatsError::InsufficientSample { needed: 4, got: n });
    }
    for (name, r) in [("r12", r12), ("r13", r13), ("r23", r23)] {
        if !(r > -1.0 && r < 1.0) {
            return Err(StatsError::InvalidCorrelation(format!("{name} = {r} outside (-1, 1)")));
        }
    }
    let k = 1.0 - r12 * r12 - r13 * r13 - r23 * r23 + 2.0 * r12 * r13 * r23;
    if k < 0.0 {
        return Err(StatsError::InvalidCorrelation(
            "correlations are not jointly consistent (negative determinant)".into(),
        ));
    }
    let nf = n as f64;
    let mean_r = (r12 + r13) / 2.0;
    let denom = (2.0 * k * (nf - 1.0) / (nf - 3.0) + mean_r * mean_r * (1.0 - r23).powi(3)).sqrt();
    let t = if r12 == r13 {
        0.0
    } else {
        (r12 - r13) * ((nf - 1.0) * (1.0 + r23)).sqrt() / denom
    };
    let df = nf - 3.0;
    let p_greater = student_t_sf(t, df);
    let p_less = student_t_sf(-t, df);
    Ok(TestResult {
        statistic: t,
        p_greater,
        p_less,
        p_two_sided: (2.0 * p_greater.min(p_less)).min(1.0),
        method: Method::TDist,
        n,
    })
}
