use crate::error::{Error, Result};
use crate::model::{Indicator, Matrix};

/// Confusion counts over off-diagonal cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Metrics {
    pub tpr: f64,
    pub fpr: f64,
    pub fdr: f64,
    pub mcc: f64,
    /// `None` when the truth has a single class.
    pub auc: Option<f64>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Confusion {
    pub fn metrics(&self) -> Metrics {
        let Confusion { tp, fp, tn, fn_ } = *self;
        let factors = [tp + fp, tp + fn_, tn + fp, tn + fn_];
        let mcc = if factors.contains(&0) {
            0.0
        } else {
            let num = tp as f64 * tn as f64 - fp as f64 * fn_ as f64;
            num / factors.iter().map(|&f| f as f64).product::<f64>().sqrt()
        };
        Metrics {
            tpr: ratio(tp, tp + fn_),
            fpr: ratio(fp, fp + tn),
            fdr: ratio(fp, tp + fp),
            mcc,
            auc: None,
        }
    }
}

fn off_diagonal(rows: usize, cols: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..rows).flat_map(move |i| (0..cols).map(move |j| (i, j))).filter(|(i, j)| i != j)
}

/// TPR, FPR, FDR and MCC of a predicted adjacency. Diagonal cells are ignored.
pub fn classification_metrics(truth: &Indicator, predicted: &Indicator) -> Result<(Confusion, Metrics)> {
    if truth.shape() != predicted.shape() {
        return Err(Error::Dimension(format!(
            "truth is {:?}, prediction is {:?}",
            truth.shape(),
            predicted.shape()
        )));
    }
    let mut c = Confusion::default();
    let (r, k) = truth.shape();
    for (i, j) in off_diagonal(r, k) {
        match (truth[(i, j)] != 0, predicted[(i, j)] != 0) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (false, false) => c.tn += 1,
            (true, false) => c.fn_ += 1,
        }
    }
    Ok((c, c.metrics()))
}

/// Mann–Whitney AUC of `scores` for true edges against non-edges; ties count ½.
pub fn auc(truth: &Indicator, scores: &Matrix) -> Result<f64> {
    if truth.shape() != scores.shape() {
        return Err(Error::Dimension(format!(
            "truth is {:?}, scores are {:?}",
            truth.shape(),
            scores.shape()
        )));
    }
    let (r, k) = truth.shape();
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (i, j) in off_diagonal(r, k) {
        if truth[(i, j)] != 0 {
            pos.push(scores[(i, j)]);
        } else {
            neg.push(scores[(i, j)]);
        }
    }
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::Domain("AUC undefined: truth has a single class".into()));
    }
    let mut wins = 0.0;
    for &s in &pos {
        for &t in &neg {
            if s > t {
                wins += 1.0;
            } else if s == t {
                wins += 0.5;
            }
        }
    }
    Ok(wins / (pos.len() * neg.len()) as f64)
}

/// Mean `|est − truth|` over off-diagonal cells.
pub fn mean_absolute_deviation(est: &Matrix, truth: &Matrix) -> f64 {
    let (r, k) = truth.shape();
    let cells: Vec<f64> = off_diagonal(r, k).map(|(i, j)| (est[(i, j)] - truth[(i, j)]).abs()).collect();
    cells.iter().sum::<f64>() / cells.len().max(1) as f64
}
