use nalgebra::DMatrix;
use serde::Serialize;

use super::fit::SemFit;
use super::SemError;

/// Guard used when the CFI denominator vanishes.
const CFI_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitIndices {
    pub rmsea: f64,
    pub cfi: f64,
    pub srmr: f64,
}

/// `sqrt(max(T - df, 0) / (df (n - 1)))`.
pub fn rmsea(chi_square: f64, df: i64, n: usize) -> Result<f64, SemError> {
    if df <= 0 {
        return Err(SemError::ZeroDf);
    }
    let df = df as f64;
    Ok(((chi_square - df).max(0.0) / (df * (n as f64 - 1.0))).sqrt())
}

pub fn cfi(chi_square: f64, df: i64, baseline_chi_square: f64, baseline_df: i64) -> f64 {
    let excess = (chi_square - df as f64).max(0.0);
    let baseline_excess = baseline_chi_square - baseline_df as f64;
    let denom = baseline_excess.max(excess).max(0.0);
    let denom = if denom > 0.0 { denom } else { CFI_EPS };
    (1.0 - excess / denom).clamp(0.0, 1.0)
}

/// Root mean square of `(s_ij - sigma_ij) / sqrt(s_ii s_jj)` over the lower
/// triangle including the diagonal.
pub fn srmr(sample: &DMatrix<f64>, implied: &DMatrix<f64>) -> f64 {
    let q = sample.nrows();
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in 0..q {
        for j in 0..=i {
            let r = (sample[(i, j)] - implied[(i, j)]) / (sample[(i, i)] * sample[(j, j)]).sqrt();
            sum += r * r;
            count += 1;
        }
    }
    (sum / count as f64).sqrt()
}

pub fn fit_indices(fit: &SemFit) -> Result<FitIndices, SemError> {
    Ok(FitIndices {
        rmsea: rmsea(fit.chi_square, fit.df, fit.n)?,
        cfi: cfi(fit.chi_square, fit.df, fit.baseline_chi_square, fit.baseline_df),
        srmr: srmr(&fit.sample.cov, &fit.implied_cov),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_fit_limit() {
        assert_eq!(rmsea(10.0, 10, 500).unwrap(), 0.0);
        assert_eq!(cfi(10.0, 10, 900.0, 45), 1.0);
        assert_eq!(rmsea(5.0, 10, 500).unwrap(), 0.0);
    }

    #[test]
    fn zero_df_rmsea_is_an_error() {
        assert!(matches!(rmsea(0.0, 0, 100), Err(SemError::ZeroDf)));
    }

    #[test]
    fn hand_values() {
        // sqrt(40 / (20 * 399))
        let r = rmsea(60.0, 20, 400).unwrap();
        assert!((r - (40.0f64 / 7980.0).sqrt()).abs() < 1e-15);
        // 1 - 40 / 955
        assert!((cfi(60.0, 20, 1000.0, 45) - (1.0 - 40.0 / 955.0)).abs() < 1e-15);
    }

    #[test]
    fn cfi_baseline_and_saturated() {
        assert_eq!(cfi(500.0, 45, 500.0, 45), 0.0);
        assert_eq!(cfi(0.0, 0, 500.0, 45), 1.0);
        assert_eq!(cfi(0.0, 0, 0.0, 0), 1.0);
    }

    #[test]
    fn srmr_zero_on_exact_fit() {
        let s = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        assert_eq!(srmr(&s, &s), 0.0);
        let implied = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let r = 0.2 / 2.0f64.sqrt();
        assert!((srmr(&s, &implied) - (r * r / 3.0).sqrt()).abs() < 1e-15);
    }
}
