//! Matrix-level solvers: Newton–Raphson logistic MLE and QR least squares.
//! Design matrices carry the intercept as column 0.

use nalgebra::{DMatrix, DVector};

use super::{FitSummary, LogisticOptions};
use crate::error::{Error, Result};
use crate::scm_sim::sigmoid;

/// Relative threshold on scaled `|R_jj|` below which a column is treated as
/// linearly dependent on the previous ones.
const RANK_TOL: f64 = 1e-10;

/// `ln(1 + e^x)` without overflow.
pub(crate) fn log1pexp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub(crate) fn check_full_rank(x: &DMatrix<f64>, names: &[String]) -> Result<()> {
    let (n, p) = x.shape();
    if n < p {
        return Err(Error::RankDeficient(format!("{n} rows for {p} parameters")));
    }
    let mut scaled = x.clone();
    for j in 0..p {
        let norm = scaled.column(j).norm();
        if norm == 0.0 {
            return Err(Error::RankDeficient(format!(
                "column `{}` is identically zero",
                names[j]
            )));
        }
        scaled.column_mut(j).unscale_mut(norm);
    }
    let r = scaled.qr().r();
    for j in 0..p {
        if r[(j, j)].abs() <= RANK_TOL {
            return Err(Error::RankDeficient(format!(
                "column `{}` is a linear combination of earlier columns",
                names[j]
            )));
        }
    }
    Ok(())
}

fn penalized_log_likelihood(x: &DMatrix<f64>, y: &[f64], beta: &DVector<f64>, ridge: f64) -> f64 {
    let eta = x * beta;
    let ll: f64 = eta
        .iter()
        .zip(y)
        .map(|(&e, &yi)| yi * e - log1pexp(e))
        .sum();
    let penalty: f64 = beta.iter().skip(1).map(|b| b * b).sum();
    ll - 0.5 * ridge * penalty
}

/// Score vector `Xᵀ(y − σ(Xβ)) − ridge·β` (intercept unpenalized).
pub(crate) fn logistic_gradient(
    x: &DMatrix<f64>,
    y: &[f64],
    beta: &DVector<f64>,
    ridge: f64,
) -> DVector<f64> {
    let eta = x * beta;
    let resid = DVector::from_iterator(y.len(), eta.iter().zip(y).map(|(&e, &yi)| yi - sigmoid(e)));
    let mut g = x.tr_mul(&resid);
    for j in 1..g.len() {
        g[j] -= ridge * beta[j];
    }
    g
}

fn separates(eta: &DVector<f64>, y: &[f64]) -> bool {
    eta.iter()
        .zip(y)
        .all(|(&e, &yi)| if yi == 1.0 { e > 0.0 } else { e < 0.0 })
}

/// Maximum-likelihood logistic regression from a zero start.
///
/// Any iterate that classifies every row strictly correctly proves the data
/// linearly separable, in which case no finite MLE exists and an error is
/// returned. Runaway coefficient norms are reported the same way.
pub(crate) fn logistic_mle(
    x: &DMatrix<f64>,
    y: &[f64],
    names: &[String],
    opts: &LogisticOptions,
) -> Result<(DVector<f64>, FitSummary)> {
    let p = x.ncols();
    if opts.ridge == 0.0 {
        check_full_rank(x, names)?;
    }
    let mut beta = DVector::zeros(p);
    let mut ll = penalized_log_likelihood(x, y, &beta, opts.ridge);
    let mut iterations = 0;
    loop {
        let eta = x * &beta;
        if iterations > 0 && separates(&eta, y) {
            return Err(Error::PerfectSeparation(format!(
                "iterate at step {iterations} classifies every training row correctly"
            )));
        }
        let grad = logistic_gradient(x, y, &beta, opts.ridge);
        let gnorm = grad.amax();
        if gnorm <= opts.gradient_tol || iterations >= opts.max_iter {
            return Ok((
                beta,
                FitSummary {
                    iterations,
                    gradient_inf_norm: gnorm,
                    log_likelihood: Some(ll),
                    converged: gnorm <= opts.gradient_tol,
                },
            ));
        }

        let mut weighted = x.clone();
        for (i, &e) in eta.iter().enumerate() {
            let mu = sigmoid(e);
            weighted.row_mut(i).scale_mut(mu * (1.0 - mu));
        }
        let mut hessian = x.tr_mul(&weighted);
        for j in 1..p {
            hessian[(j, j)] += opts.ridge;
        }
        let step = hessian
            .cholesky()
            .ok_or_else(|| {
                Error::Numerical(format!(
                    "information matrix not positive definite at step {iterations}"
                ))
            })?
            .solve(&grad);

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let cand = &beta + &step * t;
            let cand_ll = penalized_log_likelihood(x, y, &cand, opts.ridge);
            if cand_ll >= ll - 1e-12 * (1.0 + ll.abs()) {
                accepted = Some((cand, cand_ll));
                break;
            }
            t *= 0.5;
        }
        let (next, next_ll) = accepted.ok_or_else(|| {
            Error::Numerical(format!(
                "step halving failed to increase the likelihood at step {iterations}"
            ))
        })?;
        beta = next;
        ll = next_ll;
        iterations += 1;

        if beta.amax() > opts.divergence_norm {
            return Err(Error::PerfectSeparation(format!(
                "coefficient norm {:.3e} exceeded {:.1e} after {iterations} steps",
                beta.amax(),
                opts.divergence_norm
            )));
        }
    }
}

/// Least squares via thin QR; errors on rank deficiency.
pub(crate) fn ols(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    names: &[String],
) -> Result<(DVector<f64>, FitSummary)> {
    check_full_rank(x, names)?;
    let qr = x.clone().qr();
    let qty = qr.q().tr_mul(y);
    let beta = qr
        .r()
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Numerical("singular triangular factor".into()))?;
    let resid = y - x * &beta;
    let ortho = x.tr_mul(&resid).amax();
    Ok((
        beta,
        FitSummary {
            iterations: 0,
            gradient_inf_norm: ortho,
            log_likelihood: None,
            converged: true,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(p: usize) -> Vec<String> {
        (0..p).map(|j| format!("x{j}")).collect()
    }

    #[test]
    fn log1pexp_is_stable() {
        assert!((log1pexp(0.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((log1pexp(800.0) - 800.0).abs() < 1e-12);
        assert!(log1pexp(-800.0) >= 0.0);
    }

    #[test]
    fn ols_exact_line() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0]);
        let y = DVector::from_vec(vec![1.0, 3.0, 5.0, 7.0]);
        let (b, s) = ols(&x, &y, &names(2)).unwrap();
        assert!((b[0] - 1.0).abs() < 1e-12 && (b[1] - 2.0).abs() < 1e-12);
        assert!(s.gradient_inf_norm < 1e-10);
    }

    #[test]
    fn rank_deficiency_detected() {
        let x = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 2.0, 1.0, 2.0, 4.0, 1.0, 3.0, 6.0]);
        let y = DVector::from_vec(vec![0.0, 1.0, 0.0]);
        assert!(matches!(
            ols(&x, &y, &names(3)),
            Err(Error::RankDeficient(_))
        ));
        let zero = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        assert!(matches!(
            check_full_rank(&zero, &names(2)),
            Err(Error::RankDeficient(_))
        ));
    }

    #[test]
    fn ridge_tolerates_duplicate_columns() {
        let x = DMatrix::from_row_slice(
            6,
            3,
            &[
                1.0, 0.1, 0.1, 1.0, 0.4, 0.4, 1.0, 0.5, 0.5, 1.0, 0.6, 0.6, 1.0, 0.9, 0.9, 1.0,
                0.3, 0.3,
            ],
        );
        let y = [0.0, 1.0, 0.0, 1.0, 1.0, 0.0];
        let plain = logistic_mle(&x, &y, &names(3), &LogisticOptions::default());
        assert!(matches!(plain, Err(Error::RankDeficient(_))));
        let opts = LogisticOptions {
            ridge: 1e-3,
            ..Default::default()
        };
        let (b, s) = logistic_mle(&x, &y, &names(3), &opts).unwrap();
        assert!(s.converged);
        assert!((b[1] - b[2]).abs() < 1e-9);
    }
}
