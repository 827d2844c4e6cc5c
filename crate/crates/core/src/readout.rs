//! Affine readouts on filter outputs, trained by ridge regression.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{QlsmError, Result};

pub const DEFAULT_REGULARIZATION: f64 = 1e-6;
/// Fraction of a time-ordered data set used for training.
pub const TRAIN_FRACTION: f64 = 0.8;

/// Relative eigenvalue floor below which the unregularized normal system is
/// treated as singular.
const SINGULAR_RTOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainingSet {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub split: Split,
}

impl TrainingSet {
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<f64>, split: Split) -> Result<Self> {
        if inputs.len() != targets.len() {
            return Err(QlsmError::Size(format!(
                "{} inputs but {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        if inputs.is_empty() {
            return Err(QlsmError::Config(format!("{split:?} split is empty")));
        }
        let dim = inputs[0].len();
        if inputs.iter().any(|x| x.len() != dim) {
            return Err(QlsmError::Size("inputs have differing dimensions".into()));
        }
        Ok(Self {
            inputs,
            targets,
            split,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.inputs[0].len()
    }
}

/// Splits time-ordered data into a leading train part and trailing test part.
pub fn time_ordered_split(inputs: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<(TrainingSet, TrainingSet)> {
    if inputs.len() != targets.len() {
        return Err(QlsmError::Size("inputs and targets differ in length".into()));
    }
    let cut = (inputs.len() as f64 * TRAIN_FRACTION).round() as usize;
    let mut inputs = inputs;
    let mut targets = targets;
    let test_inputs = inputs.split_off(cut);
    let test_targets = targets.split_off(cut);
    Ok((
        TrainingSet::new(inputs, targets, Split::Train)?,
        TrainingSet::new(test_inputs, test_targets, Split::Test)?,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub regularization: f64,
    /// Hash of the filter bank whose outputs this model reads, if known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter_bank_hash: Option<String>,
}

/// Minimizes `mean((y − b − c·x)²) + regularization·‖c‖²`. The intercept is
/// not penalized.
pub fn train_readout(data: &TrainingSet, regularization: f64) -> Result<ReadoutModel> {
    if data.len() < 2 {
        return Err(QlsmError::Config("need at least two training examples".into()));
    }
    if !(regularization >= 0.0 && regularization.is_finite()) {
        return Err(QlsmError::Config(format!("regularization {regularization} must be >= 0")));
    }
    let rows = data.len();
    let dim = data.dim();
    let x_mean: Vec<f64> = (0..dim)
        .map(|j| data.inputs.iter().map(|x| x[j]).sum::<f64>() / rows as f64)
        .collect();
    let y_mean = data.targets.iter().sum::<f64>() / rows as f64;
    let xc = DMatrix::from_fn(rows, dim, |r, c| data.inputs[r][c] - x_mean[c]);
    let yc = DVector::from_iterator(rows, data.targets.iter().map(|y| y - y_mean));

    let mut gram = xc.tr_mul(&xc) / rows as f64;
    let rhs = xc.tr_mul(&yc) / rows as f64;
    if regularization == 0.0 {
        let eig = gram.clone().symmetric_eigen();
        let max = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if max == 0.0 && rhs.iter().all(|&v| v == 0.0) {
            // Constant inputs and targets: the zero solution is optimal.
        } else if min <= SINGULAR_RTOL * max.max(f64::MIN_POSITIVE) {
            return Err(QlsmError::Solver(
                "normal equations are singular; use a regularization > 0".into(),
            ));
        }
    }
    for i in 0..dim {
        gram[(i, i)] += regularization;
    }
    let coefficients = if rhs.iter().all(|&v| v == 0.0) {
        DVector::zeros(dim)
    } else {
        gram.cholesky()
            .ok_or_else(|| {
                QlsmError::Solver("normal equations are not positive definite; use a regularization > 0".into())
            })?
            .solve(&rhs)
    };
    let intercept = y_mean - coefficients.iter().zip(&x_mean).map(|(c, m)| c * m).sum::<f64>();
    Ok(ReadoutModel {
        coefficients: coefficients.iter().copied().collect(),
        intercept,
        regularization,
        filter_bank_hash: None,
    })
}

impl ReadoutModel {
    pub fn with_filter_bank_hash(mut self, hash: String) -> Self {
        self.filter_bank_hash = Some(hash);
        self
    }

    /// Value minimized by [`train_readout`] on `data`.
    pub fn objective(&self, data: &TrainingSet) -> Result<f64> {
        let mse = mean_squared_error(self, data)?;
        Ok(mse + self.regularization * self.coefficients.iter().map(|c| c * c).sum::<f64>())
    }
}

/// `intercept + coefficients · x`.
pub fn predict(model: &ReadoutModel, x: &[f64]) -> Result<f64> {
    if x.len() != model.coefficients.len() {
        return Err(QlsmError::Size(format!(
            "input of dimension {} for model of dimension {}",
            x.len(),
            model.coefficients.len()
        )));
    }
    Ok(model.intercept + model.coefficients.iter().zip(x).map(|(c, v)| c * v).sum::<f64>())
}

pub fn predict_all(model: &ReadoutModel, data: &TrainingSet) -> Result<Vec<f64>> {
    data.inputs.iter().map(|x| predict(model, x)).collect()
}

pub fn mean_squared_error(model: &ReadoutModel, data: &TrainingSet) -> Result<f64> {
    let preds = predict_all(model, data)?;
    Ok(preds
        .iter()
        .zip(&data.targets)
        .map(|(p, y)| (p - y).powi(2))
        .sum::<f64>()
        / data.len() as f64)
}

/// Root-mean-square error divided by the standard deviation of the targets,
/// so the constant-mean predictor scores 1.
pub fn nrmse(predictions: &[f64], targets: &[f64]) -> f64 {
    let n = targets.len() as f64;
    let mean = targets.iter().sum::<f64>() / n;
    let var = targets.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n;
    let mse = predictions
        .iter()
        .zip(targets)
        .map(|(p, y)| (p - y).powi(2))
        .sum::<f64>()
        / n;
    if var == 0.0 {
        if mse == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (mse / var).sqrt()
    }
}

/// NRMSE of predicting `baseline_value` everywhere.
pub fn constant_nrmse(baseline_value: f64, targets: &[f64]) -> f64 {
    nrmse(&vec![baseline_value; targets.len()], targets)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ApproximationReport {
    pub rho: f64,
    /// `max |h(x) − f(x)|` over the test inputs.
    pub sup_error: f64,
    /// Test point attaining the supremum.
    pub witness_index: usize,
    pub passed: bool,
    pub test_points: usize,
}

/// Compares the model against target values `h(x)` on a test split. The
/// verdict covers only the points supplied.
pub fn approximation_report(model: &ReadoutModel, test: &TrainingSet, rho: f64) -> Result<ApproximationReport> {
    if test.is_empty() {
        return Err(QlsmError::Config("test split is empty".into()));
    }
    let preds = predict_all(model, test)?;
    let (witness_index, sup_error) = preds
        .iter()
        .zip(&test.targets)
        .map(|(p, y)| (p - y).abs())
        .enumerate()
        .fold((0, 0.0f64), |acc, (i, e)| if e > acc.1 { (i, e) } else { acc });
    Ok(ApproximationReport {
        rho,
        sup_error,
        witness_index,
        passed: sup_error <= rho,
        test_points: test.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(inputs: Vec<Vec<f64>>, targets: Vec<f64>) -> TrainingSet {
        TrainingSet::new(inputs, targets, Split::Train).unwrap()
    }

    #[test]
    fn zero_targets_give_zero_model() {
        let data = set(vec![vec![1.0, 2.0], vec![-0.5, 0.3], vec![0.2, 0.9]], vec![0.0; 3]);
        let m = train_readout(&data, 1e-3).unwrap();
        assert!(m.coefficients.iter().all(|&c| c == 0.0));
        assert_eq!(m.intercept, 0.0);
    }

    #[test]
    fn exact_line() {
        let xs = [-1.0, 0.0, 0.5, 2.0, 3.5];
        let data = set(xs.iter().map(|&x| vec![x]).collect(), xs.iter().map(|x| 2.0 * x).collect());
        let m = train_readout(&data, 0.0).unwrap();
        assert!((m.coefficients[0] - 2.0).abs() < 1e-9);
        assert!((predict(&m, &[3.0]).unwrap() - 6.0).abs() < 1e-9);
    }

    #[test]
    fn singular_system_without_regularization() {
        let data = set(vec![vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]], vec![1.0, 2.0, 3.5]);
        assert!(matches!(train_readout(&data, 0.0), Err(QlsmError::Solver(_))));
        assert!(train_readout(&data, 1e-3).is_ok());
    }

    #[test]
    fn predict_contract() {
        let m = ReadoutModel {
            coefficients: vec![0.0, 1.0, 0.0],
            intercept: 0.25,
            regularization: 0.0,
            filter_bank_hash: None,
        };
        assert_eq!(predict(&m, &[5.0, 7.0, 9.0]).unwrap(), 7.25);
        let zero = ReadoutModel {
            coefficients: vec![0.0; 3],
            ..m.clone()
        };
        assert_eq!(predict(&zero, &[5.0, 7.0, 9.0]).unwrap(), 0.25);
        assert!(matches!(predict(&m, &[1.0]), Err(QlsmError::Size(_))));
    }

    #[test]
    fn report_self_target_and_failure_witness() {
        let m = ReadoutModel {
            coefficients: vec![1.0],
            intercept: 0.0,
            regularization: 0.0,
            filter_bank_hash: None,
        };
        let xs = vec![vec![0.1], vec![0.4], vec![-0.3]];
        let exact = TrainingSet::new(xs.clone(), vec![0.1, 0.4, -0.3], Split::Test).unwrap();
        let r = approximation_report(&m, &exact, 1e-12).unwrap();
        assert_eq!(r.sup_error, 0.0);
        assert!(r.passed);

        let off = TrainingSet::new(xs, vec![0.1, 0.9, -0.3], Split::Test).unwrap();
        let r = approximation_report(&m, &off, 0.1).unwrap();
        assert!(!r.passed);
        assert_eq!(r.witness_index, 1);
        assert!((r.sup_error - 0.5).abs() < 1e-12);
    }

    #[test]
    fn split_is_time_ordered() {
        let inputs: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let targets: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let (train, test) = time_ordered_split(inputs, targets).unwrap();
        assert_eq!(train.len(), 8);
        assert_eq!(test.targets, vec![8.0, 9.0]);
        assert!(time_ordered_split(vec![vec![0.0]], vec![0.0]).is_err());
    }

    #[test]
    fn too_few_examples() {
        let data = set(vec![vec![1.0]], vec![1.0]);
        assert!(train_readout(&data, 1e-3).is_err());
    }
}
