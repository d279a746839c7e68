use super::NumericsError;

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than 2 values.
pub fn sample_sd(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

fn centered_sum_squares(values: &[f64], m: f64) -> f64 {
    values.iter().map(|v| (v - m) * (v - m)).sum()
}

/// True when `ss` is indistinguishable from the rounding residue of a
/// constant vector.
fn is_degenerate(values: &[f64], ss: f64) -> bool {
    let scale = values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let floor = values.len() as f64 * (16.0 * f64::EPSILON * scale).powi(2);
    ss <= floor
}

/// Pearson product-moment correlation.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64, NumericsError> {
    if a.len() != b.len() {
        return Err(NumericsError::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    if a.len() < 3 {
        return Err(NumericsError::InvalidShape(format!(
            "correlation needs at least 3 pairs, found {}",
            a.len()
        )));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(NumericsError::NonFinite);
    }
    let ma = mean(a);
    let mb = mean(b);
    let ssa = centered_sum_squares(a, ma);
    let ssb = centered_sum_squares(b, mb);
    if is_degenerate(a, ssa) || is_degenerate(b, ssb) {
        return Err(NumericsError::ConstantInput);
    }
    let cross: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    Ok((cross / (ssa.sqrt() * ssb.sqrt())).clamp(-1.0, 1.0))
}

/// Spearman-Brown prophecy for doubling test length: `2r / (1 + r)`.
pub fn spearman_brown(r: f64) -> Result<f64, NumericsError> {
    if !(r > -1.0 && r <= 1.0) {
        return Err(NumericsError::Domain(r));
    }
    Ok(2.0 * r / (1.0 + r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pearson_hand_example() {
        // cov = 3/3 ... r = 3 / sqrt(2 * 14/3)
        let r = pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap();
        let expected = 3.0 / (2.0f64 * 14.0 / 3.0).sqrt();
        assert!((r - expected).abs() < 1e-12);
        assert!((r - 0.98198).abs() < 1e-5);
    }

    #[test]
    fn pearson_self_and_negation() {
        let a = [0.3, -1.2, 4.0, 2.2, 0.0];
        let neg: Vec<f64> = a.iter().map(|v| -v).collect();
        assert!((pearson(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&a, &neg).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn pearson_errors() {
        assert_eq!(
            pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(NumericsError::ConstantInput)
        );
        assert_eq!(
            pearson(&[0.1; 7], &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]),
            Err(NumericsError::ConstantInput)
        );
        assert!(matches!(
            pearson(&[1.0, 2.0], &[1.0, 2.0]),
            Err(NumericsError::InvalidShape(_))
        ));
        assert!(matches!(
            pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0]),
            Err(NumericsError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn spearman_brown_values() {
        assert_eq!(spearman_brown(1.0).unwrap(), 1.0);
        assert_eq!(spearman_brown(0.0).unwrap(), 0.0);
        assert!((spearman_brown(0.5).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(spearman_brown(-1.0).is_err());
        assert!(spearman_brown(1.5).is_err());
        assert!(spearman_brown(f64::NAN).is_err());
    }

    proptest! {
        #[test]
        fn pearson_affine_invariance(
            a in proptest::collection::vec(-100.0f64..100.0, 5..40),
            scale in 0.01f64..50.0,
            shift in -100.0f64..100.0,
            seed in 0u64..1000,
        ) {
            let b: Vec<f64> = a.iter().enumerate()
                .map(|(i, v)| v * 0.5 + ((i as u64 * 7919 + seed) % 13) as f64)
                .collect();
            let Ok(r) = pearson(&a, &b) else { return Ok(()); };
            let mapped: Vec<f64> = a.iter().map(|v| v * scale + shift).collect();
            let r2 = pearson(&mapped, &b).unwrap();
            prop_assert!((r - r2).abs() < 1e-12);
            let neg: Vec<f64> = b.iter().map(|v| -v).collect();
            prop_assert!((pearson(&a, &neg).unwrap() + r).abs() < 1e-12);
        }

        #[test]
        fn spearman_brown_strictly_increasing(x in -0.999f64..0.999, dx in 1e-6f64..0.5) {
            let y = (x + dx).min(1.0);
            prop_assert!(spearman_brown(y).unwrap() > spearman_brown(x).unwrap());
        }
    }
}
