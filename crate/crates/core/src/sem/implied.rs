use nalgebra::DMatrix;

use super::model::SemModel;
use super::SemError;

/// Coefficient matrix `A` (row = target, column = source) and symmetric
/// covariance matrix `S` over all model variables, plus `B = (I - A)^-1`.
#[derive(Debug, Clone)]
pub struct RamMatrices {
    pub a: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

impl RamMatrices {
    pub fn new(model: &SemModel, theta: &[f64]) -> Result<Self, SemError> {
        let n = model.n_vars();
        let mut a = DMatrix::zeros(n, n);
        for e in model.directed_edges() {
            a[(e.to, e.from)] = SemModel::value(e.param, theta);
        }
        let mut s = DMatrix::zeros(n, n);
        for c in model.covariance_terms() {
            let v = SemModel::value(c.param, theta);
            s[(c.a, c.b)] = v;
            s[(c.b, c.a)] = v;
        }
        let b = (DMatrix::identity(n, n) - &a)
            .try_inverse()
            .ok_or(SemError::SingularSystem)?;
        Ok(Self { a, s, b })
    }

    /// `B S B'` over every variable.
    pub fn full_covariance(&self) -> DMatrix<f64> {
        let c = &self.b * &self.s * self.b.transpose();
        symmetrize(c)
    }
}

pub(crate) fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Model-implied covariance over every variable (observed then latent).
pub fn full_covariance(model: &SemModel, theta: &[f64]) -> Result<DMatrix<f64>, SemError> {
    Ok(RamMatrices::new(model, theta)?.full_covariance())
}

/// Observed block of the model-implied covariance.
pub fn implied_covariance(model: &SemModel, theta: &[f64]) -> Result<DMatrix<f64>, SemError> {
    let q = model.q();
    let full = full_covariance(model, theta)?;
    Ok(full.view((0, 0), (q, q)).into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sem::parse_model_spec;

    #[test]
    fn two_indicator_closed_form() {
        // free order: F=~b, a~~a, b~~b, F~~F
        let m = parse_model_spec("F =~ a + b").unwrap();
        let (lam, t1, t2, phi) = (0.7, 0.3, 0.4, 1.5);
        let sigma = implied_covariance(&m, &[lam, t1, t2, phi]).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[phi + t1, lam * phi, lam * phi, lam * lam * phi + t2]);
        assert!((sigma - expected).abs().max() < 1e-15);
    }

    #[test]
    fn zero_loadings_leave_residual_diagonal() {
        let m = parse_model_spec("F =~ 0*a + b + c").unwrap();
        // free: F=~b, F=~c, a~~a, b~~b, c~~c, F~~F
        let sigma = implied_covariance(&m, &[0.0, 0.0, 0.3, 0.4, 0.5, 2.0]).unwrap();
        assert_eq!(sigma, DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.3, 0.4, 0.5])));
    }

    #[test]
    fn one_level_factor_model_is_lambda_phi_lambda_plus_theta() {
        let m = parse_model_spec("F =~ x1 + x2 + x3\nG =~ x4 + x5").unwrap();
        // free: F=~x2, F=~x3, G=~x5, 5 residuals, F~~F, G~~G, F~~G
        let theta = [0.8, 1.2, 0.6, 0.3, 0.35, 0.4, 0.45, 0.5, 1.1, 0.9, 0.25];
        let lambda = DMatrix::from_row_slice(5, 2, &[1.0, 0.0, 0.8, 0.0, 1.2, 0.0, 0.0, 1.0, 0.0, 0.6]);
        let phi = DMatrix::from_row_slice(2, 2, &[1.1, 0.25, 0.25, 0.9]);
        let residual = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.3, 0.35, 0.4, 0.45, 0.5]));
        let expected = &lambda * phi * lambda.transpose() + residual;
        let sigma = implied_covariance(&m, &theta).unwrap();
        assert!((sigma - expected).abs().max() < 1e-14);
    }
}
