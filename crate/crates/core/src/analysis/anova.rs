use super::cqm::RunResult;
use super::AnalysisError;
use crate::intervention::Arm;
use crate::measure::Measure;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor, StudentsT};
use std::collections::BTreeMap;

/// Two-sided significance level used when flagging terms.
pub const ALPHA: f64 = 0.05;

/// Weighted least-squares fit.
#[derive(Clone, Debug, PartialEq)]
pub struct WlsFit {
    pub beta: Vec<f64>,
    pub se: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Weighted residual sum of squares.
    pub rss: f64,
    pub df_resid: usize,
    pub sigma2: f64,
}

/// Minimise `sum w_i (y_i - x_i b)^2` through a QR factorisation of the
/// row-scaled design.
pub fn wls(x: &DMatrix<f64>, y: &[f64], w: &[f64]) -> Result<WlsFit, AnalysisError> {
    let (n, p) = x.shape();
    if y.len() != n || w.len() != n {
        return Err(AnalysisError::SingularDesign(format!(
            "design has {n} rows but {} responses and {} weights",
            y.len(),
            w.len()
        )));
    }
    if n <= p {
        return Err(AnalysisError::SingularDesign(format!("{n} observations for {p} parameters")));
    }
    if let Some(bad) = w.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
        return Err(AnalysisError::SingularDesign(format!("weight {bad} is not positive")));
    }
    let sw: Vec<f64> = w.iter().map(|w| w.sqrt()).collect();
    let xs = DMatrix::from_fn(n, p, |i, j| x[(i, j)] * sw[i]);
    let ys = DVector::from_iterator(n, y.iter().zip(&sw).map(|(y, s)| y * s));
    let scale = (0..p).map(|j| xs.column(j).norm()).fold(0.0, f64::max);
    let qr = xs.qr();
    let r = qr.r();
    for j in 0..p {
        if r[(j, j)].abs() <= 1e-10 * scale.max(1.0) {
            return Err(AnalysisError::SingularDesign(format!("column {j} is collinear with earlier columns")));
        }
    }
    let qty = qr.q().transpose() * &ys;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| AnalysisError::SingularDesign("triangular solve failed".into()))?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| AnalysisError::SingularDesign("triangular solve failed".into()))?;
    let fitted = x * &beta;
    let residuals: Vec<f64> = (0..n).map(|i| y[i] - fitted[i]).collect();
    let rss: f64 = residuals.iter().zip(w).map(|(r, w)| w * r * r).sum();
    let df_resid = n - p;
    let sigma2 = rss / df_resid as f64;
    let se = (0..p)
        .map(|j| (sigma2 * r_inv.row(j).norm_squared()).sqrt())
        .collect();
    Ok(WlsFit {
        beta: beta.iter().copied().collect(),
        se,
        residuals,
        rss,
        df_resid,
        sigma2,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub term: String,
    pub estimate: f64,
    pub se: f64,
    /// Absent when the standard error is zero.
    pub t: Option<f64>,
    pub p: Option<f64>,
    pub significant: bool,
}

/// Partial F-test for dropping all columns of one factor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorTest {
    pub factor: String,
    pub df_num: usize,
    pub df_den: usize,
    pub f: Option<f64>,
    pub p: Option<f64>,
    pub significant: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnovaTable {
    pub measure: Measure,
    pub n: usize,
    pub df_resid: usize,
    pub sigma2: f64,
    pub coefficients: Vec<Coefficient>,
    pub factors: Vec<FactorTest>,
}

struct Design {
    names: Vec<String>,
    factors: Vec<(String, Vec<usize>)>,
    x: DMatrix<f64>,
}

fn design(runs: &[&RunResult]) -> Design {
    let arms: Vec<Arm> = {
        let mut a: Vec<Arm> = runs.iter().map(|r| r.arm).collect();
        a.sort();
        a.dedup();
        a
    };
    let mut pilot_ks: Vec<u8> = runs.iter().filter(|r| r.arm == Arm::Pilot).map(|r| r.trainings_k).collect();
    pilot_ks.sort();
    pilot_ks.dedup();
    let mut clusters: Vec<u8> = runs.iter().map(|r| r.cluster_id).collect();
    clusters.sort();
    clusters.dedup();

    type Column = Box<dyn Fn(&RunResult) -> f64>;
    let mut names = vec!["intercept".to_string()];
    let mut cols: Vec<Column> = vec![Box::new(|_| 1.0)];
    let mut factors = Vec::new();
    if arms.len() == 2 {
        factors.push(("arm".to_string(), vec![cols.len()]));
        names.push("arm[pilot]".into());
        cols.push(Box::new(|r| (r.arm == Arm::Pilot) as u8 as f64));
    }
    if pilot_ks.len() >= 2 {
        factors.push(("trainings".to_string(), vec![cols.len()]));
        names.push("trainings_k".into());
        cols.push(Box::new(|r| r.trainings_k as f64));
    }
    if clusters.len() >= 2 {
        let mut idx = Vec::new();
        for &c in &clusters[1..] {
            idx.push(cols.len());
            names.push(format!("cluster[{c}]"));
            cols.push(Box::new(move |r| (r.cluster_id == c) as u8 as f64));
        }
        factors.push(("cluster".to_string(), idx));
    }
    let x = DMatrix::from_fn(runs.len(), cols.len(), |i, j| cols[j](runs[i]));
    Design { names, factors, x }
}

fn t_p(estimate: f64, se: f64, df: usize) -> (Option<f64>, Option<f64>) {
    if se <= 0.0 || !se.is_finite() {
        return (None, None);
    }
    let t = estimate / se;
    let dist = StudentsT::new(0.0, 1.0, df as f64).expect("positive degrees of freedom");
    (Some(t), Some(2.0 * dist.sf(t.abs())))
}

/// Weighted regression of run-level rates on arm, training count and cluster,
/// with each run weighted by its cluster's weight.
///
/// Terms are included only when the data vary along them: an arm indicator
/// when both arms are present, a linear training count when pilot runs span at
/// least two training levels, and treatment-coded cluster indicators (first
/// cluster as reference) when there are two or more clusters.
pub fn weighted_anova(
    runs: &[RunResult],
    measure: Measure,
    weights: &BTreeMap<u8, f64>,
) -> Result<AnovaTable, AnalysisError> {
    if runs.is_empty() {
        return Err(AnalysisError::MissingRuns);
    }
    let mut sorted: Vec<&RunResult> = runs.iter().collect();
    sorted.sort_by_key(|r| (r.cluster_id, r.arm, r.trainings_k, r.run_index));
    let w = sorted
        .iter()
        .map(|r| weights.get(&r.cluster_id).copied().ok_or(AnalysisError::MissingCluster(r.cluster_id)))
        .collect::<Result<Vec<_>, _>>()?;
    let y: Vec<f64> = sorted.iter().map(|r| r.rate(measure)).collect();
    let d = design(&sorted);
    let fit = wls(&d.x, &y, &w)?;

    let coefficients = d
        .names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let (t, p) = t_p(fit.beta[j], fit.se[j], fit.df_resid);
            Coefficient {
                term: name.clone(),
                estimate: fit.beta[j],
                se: fit.se[j],
                t,
                p,
                significant: p.is_some_and(|p| p < ALPHA),
            }
        })
        .collect();

    let mut factors = Vec::new();
    for (factor, drop) in &d.factors {
        let keep: Vec<usize> = (0..d.x.ncols()).filter(|j| !drop.contains(j)).collect();
        let reduced = d.x.select_columns(&keep);
        let rfit = wls(&reduced, &y, &w)?;
        let q = drop.len();
        let (f, p) = if fit.rss > 0.0 {
            let f = ((rfit.rss - fit.rss).max(0.0) / q as f64) / (fit.rss / fit.df_resid as f64);
            let dist = FisherSnedecor::new(q as f64, fit.df_resid as f64).expect("positive degrees of freedom");
            (Some(f), Some(dist.sf(f)))
        } else {
            (None, None)
        };
        factors.push(FactorTest {
            factor: factor.clone(),
            df_num: q,
            df_den: fit.df_resid,
            f,
            p,
            significant: p.is_some_and(|p| p < ALPHA),
        });
    }

    Ok(AnovaTable {
        measure,
        n: sorted.len(),
        df_resid: fit.df_resid,
        sigma2: fit.sigma2,
        coefficients,
        factors,
    })
}
