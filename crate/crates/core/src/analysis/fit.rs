//! Least-squares decay exponents on log-log data.

use serde::{Deserialize, Serialize};

use crate::analysis::AnalysisError;

/// Which points of a refinement sequence enter the fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Window {
    All,
    /// The finest `n` points (the end of the list).
    Last(usize),
    /// Points `start..end`.
    Range(usize, usize),
}

impl Default for Window {
    fn default() -> Self {
        Window::Last(4)
    }
}

impl Window {
    fn bounds(self, len: usize) -> (usize, usize) {
        match self {
            Window::All => (0, len),
            Window::Last(n) => (len.saturating_sub(n), len),
            Window::Range(a, b) => (a.min(len), b.min(len)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// `d log(error) / d log(scale)`.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `(scale, error)` pairs that entered the fit.
    pub points: Vec<(f64, f64)>,
    pub window: Window,
}

pub fn fit_rate(points: &[(f64, f64)], window: Window) -> Result<RateFit, AnalysisError> {
    let (a, b) = window.bounds(points.len());
    let used = &points[a..b.max(a)];
    if used.len() < 3 {
        return Err(AnalysisError::Domain(format!(
            "rate fit needs at least 3 points, window leaves {}",
            used.len()
        )));
    }
    for &(s, e) in used {
        if !(s > 0.0 && s.is_finite()) || !(e > 0.0 && e.is_finite()) {
            return Err(AnalysisError::Domain(format!("nonpositive value in rate fit: ({s}, {e})")));
        }
    }
    let n = used.len() as f64;
    let xs: Vec<f64> = used.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = used.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(AnalysisError::Domain("all scales coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let d = y - (intercept + slope * x);
            d * d
        })
        .sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(RateFit {
        slope,
        intercept,
        r_squared,
        points: used.to_vec(),
        window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_laws() {
        let pts: Vec<(f64, f64)> = [8.0, 16.0, 32.0, 64.0, 128.0f64]
            .iter()
            .map(|&n| (n, n.powf(-0.75)))
            .collect();
        let f = fit_rate(&pts, Window::All).unwrap();
        assert!((f.slope + 0.75).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        let pts: Vec<(f64, f64)> = [0.125, 0.0625, 0.03125, 0.015625f64].iter().map(|&h| (h, 3.0 * h)).collect();
        let f = fit_rate(&pts, Window::default()).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-12);
        assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn disk_mode_gaps_decay_like_inverse_lambda() {
        let pts: Vec<(f64, f64)> = [4.0, 8.0, 16.0, 32.0f64]
            .iter()
            .map(|&l| (l, 2.0 / (l + 1.0)))
            .collect();
        let f = fit_rate(&pts, Window::All).unwrap();
        // pre-asymptotic on this grid: the least-squares slope is about -0.91
        assert!(f.slope < -0.89 && f.slope > -0.93, "{}", f.slope);
        let shifted: Vec<(f64, f64)> = pts.iter().map(|&(l, g)| (l + 1.0, g)).collect();
        assert!((fit_rate(&shifted, Window::All).unwrap().slope + 1.0).abs() < 1e-12);
    }

    #[test]
    fn window_selects_finest_points() {
        let pts: Vec<(f64, f64)> = (1..=6).map(|i| (i as f64, if i < 3 { 1.0 } else { (i as f64).powi(-2) })).collect();
        let f = fit_rate(&pts, Window::default()).unwrap();
        assert_eq!(f.points.len(), 4);
        assert!((f.slope + 2.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_nonpositive_and_short_input() {
        assert!(fit_rate(&[(1.0, 1.0), (2.0, 0.0), (4.0, 1.0)], Window::All).is_err());
        assert!(fit_rate(&[(1.0, 1.0), (2.0, 0.5)], Window::default()).is_err());
        assert!(fit_rate(&[], Window::All).is_err());
    }
}
