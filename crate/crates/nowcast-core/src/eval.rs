//! Vintage replay into prediction-evolution curves and the comparison
//! metrics: MAE, RMSE, a paired one-tailed t-test, and revision statistics.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nowcaster::Nowcaster;
use crate::period::Quarter;
use crate::stats;
use crate::vintage::VintageStore;

/// Day-difference anchor: the first day of the quarter's final month
/// (0 days difference for 2020 Q2 is 1 June 2020).
pub fn anchor(target: Quarter) -> NaiveDate {
    target.end_month().first_day()
}

/// Calendar days from the anchor to `asof` (negative before it).
pub fn day_difference(asof: NaiveDate, target: Quarter) -> i64 {
    (asof - anchor(target)).num_days()
}

/// One point of a prediction-evolution curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub asof_date: NaiveDate,
    pub day_difference: i64,
    pub prediction: f64,
}

/// A model's predictions for one target quarter as vintages accumulate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionCurve {
    pub model_id: String,
    pub target_period: Quarter,
    pub points: Vec<CurvePoint>,
    /// The eventually observed growth rate, once known.
    pub actual: Option<f64>,
}

impl PredictionCurve {
    pub fn dates(&self) -> Vec<NaiveDate> {
        self.points.iter().map(|p| p.asof_date).collect()
    }

    /// Absolute errors against the known actual, one per point.
    pub fn absolute_errors(&self) -> Result<Vec<f64>> {
        let actual = self.actual.ok_or(Error::ActualUnknown)?;
        if self.points.is_empty() {
            return Err(Error::Validation("curve has no points".to_string()));
        }
        Ok(self
            .points
            .iter()
            .map(|p| (p.prediction - actual).abs())
            .collect())
    }
}

/// Mean absolute deviation of the curve from the actual.
pub fn mae(curve: &PredictionCurve) -> Result<f64> {
    let errs = curve.absolute_errors()?;
    Ok(stats::mean(&errs))
}

/// Root mean square deviation of the curve from the actual.
pub fn rmse(curve: &PredictionCurve) -> Result<f64> {
    let errs = curve.absolute_errors()?;
    let ms = errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64;
    Ok(ms.sqrt())
}

/// Replay every vintage whose as-of date falls within
/// `[anchor - window_days, anchor + window_days]` through each model.
/// All returned curves share the same date grid.
pub fn replay(
    store: &VintageStore,
    models: &[&dyn Nowcaster],
    target: Quarter,
    window_days: i64,
) -> Result<Vec<PredictionCurve>> {
    if store.is_empty() {
        return Err(Error::EmptyVintageStore);
    }
    if window_days <= 0 {
        return Err(Error::Validation("window_days must be positive".to_string()));
    }
    let anchor_date = anchor(target);
    let lo = anchor_date - chrono::Duration::days(window_days);
    let hi = anchor_date + chrono::Duration::days(window_days);
    let dates: Vec<NaiveDate> = store.dates().filter(|d| *d >= lo && *d <= hi).collect();
    if dates.is_empty() {
        return Err(Error::NoVintagesInWindow);
    }

    let mut curves = Vec::with_capacity(models.len());
    for model in models {
        let mut points = Vec::with_capacity(dates.len());
        for &asof in &dates {
            let snapshot = store.get(asof).expect("date came from the store");
            let prediction = model.predict(snapshot, target)?;
            points.push(CurvePoint {
                asof_date: asof,
                day_difference: day_difference(asof, target),
                prediction,
            });
        }
        curves.push(PredictionCurve {
            model_id: model.model_id().to_string(),
            target_period: target,
            points,
            actual: None,
        });
    }
    Ok(curves)
}

/// Result of the paired one-tailed t-test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t: f64,
    pub df: usize,
    pub p: f64,
    pub stars: String,
}

/// Paired one-tailed t-test on `d_i = |errors_b[i]| - |errors_a[i]|`
/// against the alternative that the `b` errors are lower (`b` is the LSTM,
/// `a` the DFM in the reporting convention): `t = mean(d) / (sd(d)/sqrt(n))`
/// with `df = n - 1` and a lower-tail Student-t p-value.
pub fn one_tailed_t_test(errors_a: &[f64], errors_b: &[f64]) -> Result<TTestResult> {
    if errors_a.len() != errors_b.len() {
        return Err(Error::LengthMismatch(errors_a.len(), errors_b.len()));
    }
    let n = errors_a.len();
    if n < 3 {
        return Err(Error::Validation(format!(
            "need at least 3 paired observations, got {n}"
        )));
    }
    let d: Vec<f64> = errors_a
        .iter()
        .zip(errors_b.iter())
        .map(|(a, b)| b.abs() - a.abs())
        .collect();
    let sd = stats::sample_sd(&d);
    if !(sd > 0.0) {
        return Err(Error::DegenerateTTest);
    }
    let t = stats::mean(&d) / (sd / (n as f64).sqrt());
    let df = n - 1;
    let p = stats::student_t_cdf(t, df as f64);
    Ok(TTestResult {
        t,
        df,
        p,
        stars: stats::significance_stars(p).to_string(),
    })
}

/// Figure-style revision comparison of two curves on the same date grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevisionStats {
    /// Fraction of dates where model a's revision is strictly larger in
    /// magnitude. Ties count to neither, so the shares may sum below 1.
    pub share_a_bigger: f64,
    pub share_b_bigger: f64,
    pub avg_abs_revision_a: f64,
    pub avg_abs_revision_b: f64,
}

/// Revision at date i is `prediction_i - prediction_{i-1}`.
pub fn revision_stats(
    curve_a: &PredictionCurve,
    curve_b: &PredictionCurve,
) -> Result<RevisionStats> {
    if curve_a.dates() != curve_b.dates() {
        return Err(Error::GridMismatch);
    }
    if curve_a.points.len() < 2 {
        return Err(Error::Validation(
            "revision statistics need at least 2 curve points".to_string(),
        ));
    }
    let revisions = |curve: &PredictionCurve| -> Vec<f64> {
        curve
            .points
            .windows(2)
            .map(|w| w[1].prediction - w[0].prediction)
            .collect()
    };
    let rev_a = revisions(curve_a);
    let rev_b = revisions(curve_b);
    let n = rev_a.len() as f64;
    let mut a_bigger = 0usize;
    let mut b_bigger = 0usize;
    for (a, b) in rev_a.iter().zip(rev_b.iter()) {
        if a.abs() > b.abs() {
            a_bigger += 1;
        } else if b.abs() > a.abs() {
            b_bigger += 1;
        }
    }
    Ok(RevisionStats {
        share_a_bigger: a_bigger as f64 / n,
        share_b_bigger: b_bigger as f64 / n,
        avg_abs_revision_a: rev_a.iter().map(|r| r.abs()).sum::<f64>() / n,
        avg_abs_revision_b: rev_b.iter().map(|r| r.abs()).sum::<f64>() / n,
    })
}

/// Per-model summary metrics over one curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetrics {
    pub model_id: String,
    pub mae: f64,
    pub rmse: f64,
}

/// Everything the comparison produces for one target period.
///
/// The t-test and revision statistics are present only when exactly two
/// models were replayed (the DFM/LSTM pairing); metrics are always
/// computed over the identical vintage-date set for all models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestResult {
    pub target_period: Quarter,
    pub actual: f64,
    pub curves: Vec<PredictionCurve>,
    pub metrics: Vec<ModelMetrics>,
    /// Paired test of the second model's errors being lower than the
    /// first's (a = first model, b = second).
    pub t_test: Option<TTestResult>,
    pub revision: Option<RevisionStats>,
}

/// Assemble metrics for curves sharing one date grid and a known actual.
pub fn backtest_result(
    target: Quarter,
    actual: f64,
    mut curves: Vec<PredictionCurve>,
) -> Result<BacktestResult> {
    if curves.is_empty() {
        return Err(Error::Validation("no curves to summarize".to_string()));
    }
    let grid = curves[0].dates();
    for c in &curves {
        if c.dates() != grid {
            return Err(Error::GridMismatch);
        }
    }
    for c in &mut curves {
        c.actual = Some(actual);
    }
    let metrics = curves
        .iter()
        .map(|c| {
            Ok(ModelMetrics {
                model_id: c.model_id.clone(),
                mae: mae(c)?,
                rmse: rmse(c)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let (t_test, revision) = if curves.len() == 2 {
        let errors_a = curves[0].absolute_errors()?;
        let errors_b = curves[1].absolute_errors()?;
        let t = match one_tailed_t_test(&errors_a, &errors_b) {
            Ok(t) => Some(t),
            Err(Error::DegenerateTTest) => None,
            Err(e) => return Err(e),
        };
        let r = if curves[0].points.len() >= 2 {
            Some(revision_stats(&curves[0], &curves[1])?)
        } else {
            None
        };
        (t, r)
    } else {
        (None, None)
    };

    Ok(BacktestResult {
        target_period: target,
        actual,
        curves,
        metrics,
        t_test,
        revision,
    })
}

/// Tidy plot-ready rows: `model,target_period,asof_date,day_difference,prediction,actual`.
pub fn curves_to_csv(curves: &[PredictionCurve]) -> String {
    let mut out = String::from("model,target_period,asof_date,day_difference,prediction,actual\n");
    for curve in curves {
        for p in &curve.points {
            let actual = curve
                .actual
                .map(|a| a.to_string())
                .unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                curve.model_id,
                curve.target_period,
                p.asof_date,
                p.day_difference,
                p.prediction,
                actual
            ));
        }
    }
    out
}
