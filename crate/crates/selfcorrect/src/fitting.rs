//! Forward prediction of the accuracy curve from single-round measurements,
//! and the inverse problem: recovering (upp, alpha, acc0) from an observed
//! curve.

use crate::error::{Error, Result};
use crate::theory::{closed_form_accuracy, derive_params, AccuracyCurve};

/// First differences below this are indistinguishable from a flat curve.
pub const NOISE_FLOOR: f64 = 1e-6;

const MIN_CURVE_LEN: usize = 4;

/// Recovered geometric-curve parameters with residual diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub upp: f64,
    pub alpha: f64,
    pub acc0: f64,
    pub rmse: f64,
    pub max_abs_residual: f64,
    /// Set when every first difference is below the noise floor; alpha is
    /// unidentifiable and reported as 0.
    pub flat: bool,
}

impl FitResult {
    /// True when the curve decreases toward its bound (upp below acc0).
    pub fn is_descending(&self) -> bool {
        !self.flat && self.upp < self.acc0
    }
}

/// Pointwise comparison of an empirical curve against a theoretical one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoodnessOfFit {
    pub rmse: f64,
    pub max_abs_residual: f64,
    /// Every |residual| within 3 standard errors when the empirical curve
    /// carries them, otherwise max |residual| <= 0.02.
    pub within_band: bool,
}

/// Theoretical curve out to `rounds` from single-round measurements
/// `(acc0, cl_hat, cs_hat)`.
pub fn predict_from_single_round(
    acc0: f64,
    cl_hat: f64,
    cs_hat: f64,
    rounds: u32,
) -> Result<AccuracyCurve> {
    let params = derive_params(cl_hat, cs_hat, acc0)?;
    let values = (0..=rounds)
        .map(|t| closed_form_accuracy(&params, t))
        .collect::<Result<_>>()?;
    Ok(AccuracyCurve::new(values))
}

/// Fit `acc_t = upp - alpha^t (upp - acc0)` to a curve.
///
/// The gap recursion gives `d_{t+1} = alpha * d_t` for first differences
/// `d_t = acc_t - acc_{t-1}`, so alpha is the through-origin least-squares
/// slope over consecutive difference pairs. With alpha fixed, `upp` and
/// `acc0` enter linearly through the basis `(1 - alpha^t, alpha^t)`.
pub fn fit_geometric(curve: &AccuracyCurve) -> Result<FitResult> {
    let y = &curve.values;
    if y.len() < MIN_CURVE_LEN {
        return Err(Error::CurveTooShort {
            len: y.len(),
            min: MIN_CURVE_LEN,
        });
    }
    let diffs: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    if diffs.iter().all(|d| d.abs() < NOISE_FLOOR) {
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        return Ok(finish_fit(y, mean, 0.0, mean, true));
    }

    let mut num = 0.0;
    let mut den = 0.0;
    for w in diffs.windows(2) {
        num += w[0] * w[1];
        den += w[0] * w[0];
    }
    // den > 0 since some difference exceeds the noise floor.
    let ratio_alpha = (num / den).clamp(-ALPHA_LIMIT, ALPHA_LIMIT);

    // The ratio estimate is exact on noiseless curves but amplifies noise
    // badly near |alpha| = 1, so refine alpha against the full-curve SSE:
    // deterministic coarse grid, then golden-section around the best cell.
    let alpha = refine_alpha(y, ratio_alpha);
    match solve_linear(y, alpha) {
        Some((upp, acc0)) => Ok(finish_fit(y, upp, alpha, acc0, false)),
        None => {
            let mean = y.iter().sum::<f64>() / y.len() as f64;
            Ok(finish_fit(y, mean, 0.0, mean, true))
        }
    }
}

const ALPHA_LIMIT: f64 = 1.0 - 1e-9;
const GRID_STEPS: usize = 400;

/// Least-squares (upp, acc0) for fixed alpha over the basis
/// `(1 - alpha^t, alpha^t)`; `None` when the basis is degenerate.
fn solve_linear(y: &[f64], alpha: f64) -> Option<(f64, f64)> {
    let mut s_aa = 0.0;
    let mut s_ab = 0.0;
    let mut s_bb = 0.0;
    let mut s_ay = 0.0;
    let mut s_by = 0.0;
    for (t, &yt) in y.iter().enumerate() {
        let b = alpha.powi(t as i32);
        let a = 1.0 - b;
        s_aa += a * a;
        s_ab += a * b;
        s_bb += b * b;
        s_ay += a * yt;
        s_by += b * yt;
    }
    let det = s_aa * s_bb - s_ab * s_ab;
    if det.abs() < 1e-12 {
        return None;
    }
    Some((
        (s_ay * s_bb - s_by * s_ab) / det,
        (s_aa * s_by - s_ab * s_ay) / det,
    ))
}

fn sse_at(y: &[f64], alpha: f64) -> f64 {
    match solve_linear(y, alpha) {
        None => f64::INFINITY,
        Some((upp, acc0)) => y
            .iter()
            .enumerate()
            .map(|(t, &yt)| {
                let r = yt - (upp - alpha.powi(t as i32) * (upp - acc0));
                r * r
            })
            .sum(),
    }
}

fn refine_alpha(y: &[f64], ratio_alpha: f64) -> f64 {
    let step = 2.0 * ALPHA_LIMIT / GRID_STEPS as f64;
    let mut best = ratio_alpha;
    let mut best_sse = sse_at(y, ratio_alpha);
    for i in 0..=GRID_STEPS {
        let a = -ALPHA_LIMIT + step * i as f64;
        let s = sse_at(y, a);
        if s < best_sse {
            best_sse = s;
            best = a;
        }
    }
    let mut lo = (best - step).max(-ALPHA_LIMIT);
    let mut hi = (best + step).min(ALPHA_LIMIT);
    const INV_PHI: f64 = 0.618_033_988_749_895;
    for _ in 0..80 {
        let m1 = hi - (hi - lo) * INV_PHI;
        let m2 = lo + (hi - lo) * INV_PHI;
        if sse_at(y, m1) <= sse_at(y, m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let refined = 0.5 * (lo + hi);
    if sse_at(y, refined) <= best_sse {
        refined
    } else {
        best
    }
}

fn finish_fit(y: &[f64], upp: f64, alpha: f64, acc0: f64, flat: bool) -> FitResult {
    let mut sq_sum = 0.0;
    let mut max_abs = 0.0f64;
    for (t, &yt) in y.iter().enumerate() {
        let fitted = upp - alpha.powi(t as i32) * (upp - acc0);
        let r = yt - fitted;
        sq_sum += r * r;
        max_abs = max_abs.max(r.abs());
    }
    FitResult {
        upp,
        alpha,
        acc0,
        rmse: (sq_sum / y.len() as f64).sqrt(),
        max_abs_residual: max_abs,
        flat,
    }
}

/// Residual statistics between two equal-length curves.
pub fn goodness_of_fit(
    empirical: &AccuracyCurve,
    theoretical: &AccuracyCurve,
) -> Result<GoodnessOfFit> {
    if empirical.len() != theoretical.len() {
        return Err(Error::LengthMismatch {
            left: empirical.len(),
            right: theoretical.len(),
        });
    }
    let mut sq_sum = 0.0;
    let mut max_abs = 0.0f64;
    let mut within_band = true;
    for t in 0..empirical.len() {
        let r = empirical.values[t] - theoretical.values[t];
        sq_sum += r * r;
        max_abs = max_abs.max(r.abs());
        if let Some(se) = &empirical.stderr {
            if r.abs() > 3.0 * se[t] {
                within_band = false;
            }
        }
    }
    if empirical.stderr.is_none() {
        within_band = max_abs <= 0.02;
    }
    let n = empirical.len().max(1);
    Ok(GoodnessOfFit {
        rmse: (sq_sum / n as f64).sqrt(),
        max_abs_residual: max_abs,
        within_band,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::ChainRng;
    use crate::theory::recursive_curve;

    fn exact_curve(upp: f64, alpha: f64, acc0: f64, rounds: u32) -> AccuracyCurve {
        let values = (0..=rounds)
            .map(|t| upp - alpha.powi(t as i32) * (upp - acc0))
            .collect();
        AccuracyCurve::new(values)
    }

    #[test]
    fn predict_matches_hand_iterated_recursion() {
        let c = predict_from_single_round(0.5, 0.9, 0.3, 5).unwrap();
        let expected = [0.5, 0.6, 0.66, 0.696, 0.7176, 0.73056];
        for (got, want) in c.values.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        // Cross-check against the recursion route.
        let rec = recursive_curve(&derive_params(0.9, 0.3, 0.5).unwrap(), 5).unwrap();
        for (a, b) in c.values.iter().zip(&rec.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn predict_descending_regime() {
        // Upp = 0.2/0.6 = 1/3 < acc0 = 0.8.
        let c = predict_from_single_round(0.8, 0.6, 0.2, 3).unwrap();
        let expected = [0.8, 0.52, 0.408, 0.3632];
        for (got, want) in c.values.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn predict_fixed_point_constant() {
        let c = predict_from_single_round(0.75, 0.9, 0.3, 7).unwrap();
        for v in &c.values {
            assert!((v - 0.75).abs() < 1e-12);
        }
    }

    #[test]
    fn fit_recovers_exact_ascending_curve() {
        let fit = fit_geometric(&exact_curve(0.8, 0.5, 0.2, 6)).unwrap();
        assert!((fit.upp - 0.8).abs() < 1e-8);
        assert!((fit.alpha - 0.5).abs() < 1e-8);
        assert!((fit.acc0 - 0.2).abs() < 1e-8);
        assert!(fit.rmse < 1e-10);
        assert!(!fit.flat && !fit.is_descending());
    }

    #[test]
    fn fit_recovers_exact_descending_curve() {
        let fit = fit_geometric(&exact_curve(0.3, 0.6, 0.9, 6)).unwrap();
        assert!((fit.upp - 0.3).abs() < 1e-8);
        assert!((fit.alpha - 0.6).abs() < 1e-8);
        assert!((fit.acc0 - 0.9).abs() < 1e-8);
        assert!(fit.is_descending());
    }

    #[test]
    fn fit_flat_curve_flagged() {
        let fit = fit_geometric(&AccuracyCurve::new(vec![0.4; 6])).unwrap();
        assert!(fit.flat);
        assert_eq!(fit.alpha, 0.0);
        assert!((fit.upp - 0.4).abs() < 1e-12);
        assert!((fit.acc0 - 0.4).abs() < 1e-12);
    }

    #[test]
    fn fit_short_curve_rejected() {
        assert!(matches!(
            fit_geometric(&AccuracyCurve::new(vec![0.1, 0.2, 0.3])),
            Err(Error::CurveTooShort { .. })
        ));
    }

    #[test]
    fn fit_round_trip_random_draws() {
        let mut rng = ChainRng::from_seed(0xF17);
        for _ in 0..500 {
            let upp = rng.next_f64();
            let alpha_mag = 0.05 + 0.90 * rng.next_f64();
            let alpha = if rng.next_f64() < 0.5 { alpha_mag } else { -alpha_mag };
            let mut acc0 = rng.next_f64();
            if (upp - acc0).abs() < 0.05 {
                acc0 = if upp < 0.5 { upp + 0.05 } else { upp - 0.05 };
            }
            let fit = fit_geometric(&exact_curve(upp, alpha, acc0, 10)).unwrap();
            assert!((fit.upp - upp).abs() < 1e-8, "upp {} vs {}", fit.upp, upp);
            assert!((fit.alpha - alpha).abs() < 1e-8);
            assert!((fit.acc0 - acc0).abs() < 1e-8);
        }
    }

    #[test]
    fn fit_noise_robustness() {
        let mut rng = ChainRng::from_seed(0xB0B);
        for _ in 0..500 {
            let upp = rng.next_f64();
            let alpha = 0.05 + 0.90 * rng.next_f64();
            let mut acc0 = rng.next_f64();
            if (upp - acc0).abs() < 0.05 {
                acc0 = if upp < 0.5 { upp + 0.05 } else { upp - 0.05 };
            }
            let mut curve = exact_curve(upp, alpha, acc0, 20);
            for v in curve.values.iter_mut() {
                *v += 0.005 * (2.0 * rng.next_f64() - 1.0);
            }
            let fit = fit_geometric(&curve).unwrap();
            assert!(
                (fit.upp - upp).abs() <= 0.05,
                "upp {} vs {} (alpha {alpha})",
                fit.upp,
                upp
            );
        }
    }

    #[test]
    fn goodness_of_fit_cases() {
        let a = AccuracyCurve::new(vec![0.1, 0.2, 0.3]);
        let g = goodness_of_fit(&a, &a.clone()).unwrap();
        assert_eq!((g.rmse, g.max_abs_residual, g.within_band), (0.0, 0.0, true));

        let emp =
            AccuracyCurve::with_stderr(vec![0.1, 0.25, 0.3], vec![0.01, 0.01, 0.01]).unwrap();
        let theo = AccuracyCurve::new(vec![0.1, 0.2, 0.3]);
        let g = goodness_of_fit(&emp, &theo).unwrap();
        assert!(!g.within_band); // 0.05 > 3 * 0.01

        assert!(matches!(
            goodness_of_fit(&a, &AccuracyCurve::new(vec![0.1, 0.2])),
            Err(Error::LengthMismatch { .. })
        ));
    }
}
