//! Chi-square tail, normal CDF and normal quantile.

use statrs::function::erf::erfc;
use statrs::function::gamma::gamma_ur;

use crate::error::{CmcError, Result};

/// Upper tail `P(χ²_df > x) = Q(df/2, x/2)`.
pub fn chi_square_survival(x: f64, df: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(CmcError::Domain(format!("chi-square statistic {x} is negative")));
    }
    if !(df >= 1.0 && df.fract() == 0.0 && df.is_finite()) {
        return Err(CmcError::Domain(format!("chi-square df {df} must be a positive integer")));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(gamma_ur(df / 2.0, x / 2.0).clamp(0.0, 1.0))
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `Φ⁻¹(p)`: Acklam's rational approximation followed by one Newton step.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(CmcError::Domain(format!("quantile level {p} outside (0,1)")));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    let z = acklam(p);
    // Newton on Φ(z) − p, evaluated from whichever tail keeps precision
    let err = if p < 0.5 { normal_cdf(z) - p } else { (1.0 - p) - normal_cdf(-z) };
    let pdf = normal_pdf(z);
    Ok(if pdf > 0.0 { z - err / pdf } else { z })
}

fn acklam(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.38357751867269e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let tail = |q: f64| {
        let r = (-2.0 * q.ln()).sqrt();
        (((((C[0] * r + C[1]) * r + C[2]) * r + C[3]) * r + C[4]) * r + C[5])
            / ((((D[0] * r + D[1]) * r + D[2]) * r + D[3]) * r + 1.0)
    };
    if p < P_LOW {
        tail(p)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail(1.0 - p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_square_closed_forms() {
        assert_eq!(chi_square_survival(0.0, 7.0).unwrap(), 1.0);
        for x in [0.1, 1.0, 5.0, 40.0] {
            assert!((chi_square_survival(x, 2.0).unwrap() - (-x / 2.0f64).exp()).abs() < 1e-14);
        }
        assert!((chi_square_survival(3.841459, 1.0).unwrap() - 0.05).abs() < 1e-6);
        assert!(chi_square_survival(-1.0, 1.0).is_err());
        assert!(chi_square_survival(1.0, 0.0).is_err());
        assert!(chi_square_survival(1.0, 1.5).is_err());
    }

    #[test]
    fn quantile_basics() {
        assert_eq!(normal_quantile(0.5).unwrap(), 0.0);
        assert!((normal_quantile(0.975).unwrap() - 1.959964).abs() < 1e-6);
        assert!(normal_quantile(0.0).is_err());
        assert!(normal_quantile(1.0).is_err());
    }
}
