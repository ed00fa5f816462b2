//! Time-domain vibration descriptors: activity, mobility, complexity, and
//! linear correlation between channels.
//!
//! The discrete derivative is the forward difference `x[m+1] - x[m]`, so the
//! derivative of a length-`M` sequence has length `M - 1`. Variances are
//! population variances (divided by `M`).

use super::FeatureError;

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Variance treated as zero when it is at rounding level relative to the
/// signal's magnitude.
fn is_zero_variance(var: f64, x: &[f64]) -> bool {
    let scale = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    var <= (scale * 1e-12).powi(2) || var == 0.0
}

pub fn diff(x: &[f64]) -> Vec<f64> {
    x.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Population variance of `x`.
pub fn activity(x: &[f64]) -> Result<f64, FeatureError> {
    if x.len() < 2 {
        return Err(FeatureError::DegenerateSequence { len: x.len(), min: 2 });
    }
    let mu = mean(x);
    Ok(x.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / x.len() as f64)
}

/// `sqrt(Act(dx) / Act(x))`.
pub fn mobility(x: &[f64]) -> Result<f64, FeatureError> {
    if x.len() < 3 {
        return Err(FeatureError::DegenerateSequence { len: x.len(), min: 3 });
    }
    let act = activity(x)?;
    if is_zero_variance(act, x) {
        return Err(FeatureError::ZeroVariance("mobility"));
    }
    let dx = diff(x);
    Ok((activity(&dx)? / act).sqrt())
}

/// `Mob(dx) / Mob(x)`. Needs at least four samples so that `dx` has a
/// mobility of its own.
pub fn complexity(x: &[f64]) -> Result<f64, FeatureError> {
    if x.len() < 4 {
        return Err(FeatureError::DegenerateSequence { len: x.len(), min: 4 });
    }
    let mob = mobility(x)?;
    if mob == 0.0 {
        return Err(FeatureError::ZeroVariance("complexity"));
    }
    let dx = diff(x);
    let mob_dx = mobility(&dx).map_err(|e| match e {
        FeatureError::ZeroVariance(_) => FeatureError::ZeroVariance("complexity"),
        other => other,
    })?;
    Ok(mob_dx / mob)
}

/// Pearson correlation of two equal-length sequences.
pub fn linear_correlation(x: &[f64], y: &[f64]) -> Result<f64, FeatureError> {
    if x.len() != y.len() {
        return Err(FeatureError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(FeatureError::DegenerateSequence { len: x.len(), min: 2 });
    }
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    let n = x.len() as f64;
    if is_zero_variance(sxx / n, x) || is_zero_variance(syy / n, y) {
        return Err(FeatureError::ZeroVariance("linear_correlation"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sine(omega: f64, n: usize) -> Vec<f64> {
        (0..n).map(|m| (omega * m as f64).sin()).collect()
    }

    #[test]
    fn activity_by_hand() {
        assert_eq!(activity(&[3.0, 3.0, 3.0]).unwrap(), 0.0);
        assert!((activity(&[-1.0, 1.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!(activity(&[1.0]).is_err());
    }

    #[test]
    fn sinusoid_statistics() {
        // variance of sin over many periods is 1/2
        let x = sine(0.05, 20_000);
        assert!((activity(&x).unwrap() - 0.5).abs() < 1e-2);
        // mobility of sin(ωm) is 2 sin(ω/2) ≈ ω, complexity ≈ 1
        for omega in [0.05, 0.2, 0.6] {
            let x = sine(omega, 20_000);
            let mob = mobility(&x).unwrap();
            assert!((mob / omega - 1.0).abs() < 0.05, "omega {omega}: {mob}");
            let comp = complexity(&x).unwrap();
            assert!((comp - 1.0).abs() < 0.05, "omega {omega}: {comp}");
        }
    }

    #[test]
    fn constant_sequences_error() {
        let c = vec![0.1; 50];
        assert!(matches!(mobility(&c), Err(FeatureError::ZeroVariance(_))));
        assert!(matches!(complexity(&c), Err(FeatureError::ZeroVariance(_))));
        assert!(matches!(linear_correlation(&c, &sine(0.3, 50)), Err(FeatureError::ZeroVariance(_))));
        // linear ramp: derivative is constant, so complexity is undefined
        let ramp: Vec<f64> = (0..50).map(|m| m as f64).collect();
        assert!(matches!(complexity(&ramp), Err(FeatureError::ZeroVariance(_))));
    }

    #[test]
    fn correlation_identities_and_oracle() {
        let x: Vec<f64> = (0..37).map(|m| ((m * 7919 % 101) as f64).sqrt()).collect();
        let y: Vec<f64> = (0..37).map(|m| ((m * 104729 % 97) as f64).ln_1p()).collect();
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((linear_correlation(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        assert!((linear_correlation(&x, &neg).unwrap() + 1.0).abs() < 1e-12);

        // direct textbook formula with sample standard deviations
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let my = y.iter().sum::<f64>() / n;
        let cov = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (n - 1.0);
        let sx = (x.iter().map(|a| (a - mx).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let sy = (y.iter().map(|b| (b - my).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let oracle = cov / (sx * sy);
        assert!((linear_correlation(&x, &y).unwrap() - oracle).abs() < 1e-12);
        assert!(linear_correlation(&x, &y[..10]).is_err());
    }

    fn signal() -> impl Strategy<Value = Vec<f64>> {
        (8usize..200, 0.05f64..1.2, 0.0f64..3.0, any::<u64>()).prop_map(|(n, w, phase, seed)| {
            (0..n)
                .map(|m| {
                    let jitter = ((seed.wrapping_mul(m as u64 + 1) % 1000) as f64 / 1000.0 - 0.5) * 0.3;
                    (w * m as f64 + phase).sin() + jitter
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn scale_and_shift_behaviour(x in signal(), c in prop_oneof![-5.0f64..-0.2, 0.2f64..5.0], shift in -50.0f64..50.0) {
            let scaled: Vec<f64> = x.iter().map(|v| c * v).collect();
            let shifted: Vec<f64> = x.iter().map(|v| v + shift).collect();
            let act = activity(&x).unwrap();
            prop_assert!((activity(&scaled).unwrap() - c * c * act).abs() <= 1e-9 * (1.0 + c * c * act));
            prop_assert!((activity(&shifted).unwrap() - act).abs() <= 1e-9 * (1.0 + act));
            let mob = mobility(&x).unwrap();
            prop_assert!((mobility(&scaled).unwrap() - mob).abs() <= 1e-9 * (1.0 + mob));
            prop_assert!((mobility(&shifted).unwrap() - mob).abs() <= 1e-9 * (1.0 + mob));
            let comp = complexity(&x).unwrap();
            prop_assert!((complexity(&scaled).unwrap() - comp).abs() <= 1e-9 * (1.0 + comp));
            prop_assert!((complexity(&shifted).unwrap() - comp).abs() <= 1e-9 * (1.0 + comp));
        }

        #[test]
        fn correlation_affine_invariance(x in signal(), a in 0.1f64..10.0, b in -20.0f64..20.0) {
            let y: Vec<f64> = x.iter().enumerate().map(|(m, v)| v * 0.5 + (m as f64 * 0.37).cos()).collect();
            let r = linear_correlation(&x, &y).unwrap();
            let xa: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            let ya: Vec<f64> = y.iter().map(|v| a * v - b).collect();
            prop_assert!((linear_correlation(&xa, &y).unwrap() - r).abs() < 1e-9);
            prop_assert!((linear_correlation(&x, &ya).unwrap() - r).abs() < 1e-9);
            prop_assert!((-1.0..=1.0).contains(&r));
        }
    }
}
