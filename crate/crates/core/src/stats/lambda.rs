use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::LambdaPoly;

/// Summary of one distance bin: centre, sample mean and sample count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaBin {
    pub d_center: f64,
    pub mean: f64,
    pub n: usize,
}

pub fn eval_lambda(poly: &LambdaPoly, d: f64) -> f64 {
    poly.eval(d)
}

/// Count-weighted least-squares polynomial through bin means.
///
/// `degree` may be 0, 1 or 2. Returns the polynomial, with its valid range
/// spanning the bin centres, and the unweighted mean squared residual of
/// the fitted curve against the bin means.
pub fn fit_lambda(bins: &[LambdaBin], degree: usize) -> Result<(LambdaPoly, f64)> {
    if degree > 2 {
        return Err(Error::validation("degree", format!("must be 0, 1 or 2, got {degree}")));
    }
    let used: Vec<&LambdaBin> = bins.iter().filter(|b| b.n > 0).collect();
    if used.len() < degree + 2 {
        return Err(Error::InsufficientData(format!(
            "degree-{degree} fit needs at least {} non-empty bins, got {}",
            degree + 2,
            used.len()
        )));
    }
    // Scale distance to O(1) before forming normal equations.
    const SCALE: f64 = 100.0;
    let m = degree + 1;
    let mut a = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for b in &used {
        let w = b.n as f64;
        let x = b.d_center / SCALE;
        let pows = [1.0, x, x * x];
        for i in 0..m {
            rhs[i] += w * pows[i] * b.mean;
            for j in 0..m {
                a[i][j] += w * pows[i] * pows[j];
            }
        }
    }
    let c = solve(&mut a, &mut rhs, m)?;
    let mut p = [0.0; 3];
    for (i, ci) in c.iter().enumerate() {
        p[i] = ci / SCALE.powi(i as i32);
    }
    let lo = used.iter().map(|b| b.d_center).fold(f64::INFINITY, f64::min);
    let hi = used.iter().map(|b| b.d_center).fold(f64::NEG_INFINITY, f64::max);
    let poly = LambdaPoly::new(p[0], p[1], p[2]).with_range(lo, hi.max(lo + 1e-9));
    let mse = used.iter().map(|b| (b.mean - poly.raw(b.d_center)).powi(2)).sum::<f64>() / used.len() as f64;
    Ok((poly, mse))
}

/// Gaussian elimination with partial pivoting on the leading `m×m` block.
fn solve(a: &mut [[f64; 3]; 3], b: &mut [f64; 3], m: usize) -> Result<Vec<f64>> {
    for col in 0..m {
        let piv = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap_or(col);
        if a[piv][col].abs() < 1e-12 {
            return Err(Error::InsufficientData("bin centres do not determine the polynomial".into()));
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..m {
            let f = a[row][col] / a[col][col];
            for k in col..m {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; m];
    for row in (0..m).rev() {
        let s: f64 = (row + 1..m).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{builtin_model, ScenarioId};
    use crate::stats::dist::DistSpec;
    use crate::stats::rng::seeded;

    #[test]
    fn evaluation_examples() {
        let uot = builtin_model(ScenarioId::UOT);
        assert!((eval_lambda(&uot.number.poly, 100.0) - 13.85).abs() < 1e-9);
        let tct = builtin_model(ScenarioId::TCT);
        for d in [10.0, 77.0, 499.0] {
            assert_eq!(eval_lambda(&tct.number.poly, d), 12.2);
        }
        assert_eq!(eval_lambda(&LambdaPoly::new(1.0, -0.01, 0.0), 200.0), 0.0);
    }

    #[test]
    fn exact_line_recovered() {
        let bins: Vec<_> = (0..20)
            .map(|i| {
                let d = 5.0 + 10.0 * i as f64;
                LambdaBin { d_center: d, mean: 10.0 - 0.02 * d, n: 1 + i }
            })
            .collect();
        let (poly, mse) = fit_lambda(&bins, 1).unwrap();
        assert!((poly.p0 - 10.0).abs() < 1e-9 && (poly.p1 + 0.02).abs() < 1e-12 && poly.p2 == 0.0);
        assert!(mse < 1e-20);
    }

    #[test]
    fn too_few_bins() {
        let bins = [LambdaBin { d_center: 5.0, mean: 1.0, n: 3 }, LambdaBin { d_center: 15.0, mean: 2.0, n: 3 }];
        assert!(matches!(fit_lambda(&bins, 1), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn poisson_bins_recover_uot_number_law() {
        let uot = builtin_model(ScenarioId::UOT).number.poly;
        let mut rng = seeded(77);
        let bins: Vec<_> = (0..40)
            .map(|i| {
                let d = 15.0 + 10.0 * i as f64;
                let xs = DistSpec::poisson(uot.raw(d)).unwrap().sample_n(10_000, &mut rng);
                LambdaBin { d_center: d, mean: xs.iter().sum::<f64>() / xs.len() as f64, n: xs.len() }
            })
            .collect();
        let (poly, _) = fit_lambda(&bins, 1).unwrap();
        assert!((poly.p0 / uot.p0 - 1.0).abs() < 0.1 && (poly.p1 / uot.p1 - 1.0).abs() < 0.1, "{poly:?}");
    }
}
