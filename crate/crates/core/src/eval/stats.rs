//! Correlation and error statistics.

use crate::error::{Error, Result};

fn check_pair(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("vectors have lengths {} and {}", a.len(), b.len())));
    }
    if a.len() < 2 {
        return Err(Error::Degenerate(format!("need at least 2 samples, got {}", a.len())));
    }
    Ok(())
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b)?;
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::UndefinedCorrelation("one of the vectors is constant".into()));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Pearson correlation between fitted predictions and DMOS.
pub fn plcc(fitted: &[f64], dmos: &[f64]) -> Result<f64> {
    pearson(fitted, dmos)
}

/// 1-based ranks; tied values share the mean of their positions.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut ranks = vec![0.0; v.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && v[idx[end]] == v[idx[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation (Pearson on average ranks).
pub fn srocc(scores: &[f64], dmos: &[f64]) -> Result<f64> {
    check_pair(scores, dmos)?;
    pearson(&average_ranks(scores), &average_ranks(dmos))
}

pub fn rmse(fitted: &[f64], dmos: &[f64]) -> Result<f64> {
    check_pair(fitted, dmos)?;
    let ss: f64 = fitted.iter().zip(dmos).map(|(f, d)| (d - f).powi(2)).sum();
    Ok((ss / fitted.len() as f64).sqrt())
}
