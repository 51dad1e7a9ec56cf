//! Datasets: CSV ingestion and the five-component Gaussian reference data.

use std::path::Path;

use rand::Rng;
use rand_distr::weighted::WeightedIndex;
use rand_distr::{Distribution, Normal};

use crate::par::substream;
use crate::{Error, Result};

/// Univariate responses with optional covariate rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub response_name: String,
    pub y: Vec<f64>,
    pub covariate_names: Vec<String>,
    /// One row per observation; empty rows when there are no covariates.
    pub x: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn from_response(y: Vec<f64>) -> Self {
        let x = vec![Vec::new(); y.len()];
        Dataset {
            response_name: "y".into(),
            y,
            covariate_names: Vec::new(),
            x,
        }
    }

    pub fn with_covariates(y: Vec<f64>, names: Vec<String>, x: Vec<Vec<f64>>) -> Result<Self> {
        if x.len() != y.len() || x.iter().any(|r| r.len() != names.len()) {
            return Err(Error::domain("covariate rows do not match responses and names"));
        }
        Ok(Dataset {
            response_name: "y".into(),
            y,
            covariate_names: names,
            x,
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Number of covariates (without the intercept).
    pub fn p(&self) -> usize {
        self.covariate_names.len()
    }

    /// Z-scores every covariate column in place and returns (mean, sd) per column.
    pub fn standardize_covariates(&mut self) -> Vec<(f64, f64)> {
        let n = self.len() as f64;
        (0..self.p())
            .map(|j| {
                let mean = self.x.iter().map(|r| r[j]).sum::<f64>() / n;
                let var = self.x.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
                let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
                for r in &mut self.x {
                    r[j] = (r[j] - mean) / sd;
                }
                (mean, sd)
            })
            .collect()
    }
}

fn is_na(cell: &str) -> bool {
    matches!(cell.trim(), "" | "NA" | "na" | "NaN" | "nan" | "null")
}

/// Reads `response` and `covariates` columns from a headed CSV file.
///
/// Rows with a missing value in any requested column are rejected; the error
/// lists their line numbers.
pub fn ingest_csv(path: impl AsRef<Path>, response: &str, covariates: &[String]) -> Result<Dataset> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let header = reader.headers()?.clone();
    let find = |name: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            path: shown.clone(),
            line: 1,
            msg: format!(
                "column '{name}' not found (have: {})",
                header.iter().collect::<Vec<_>>().join(", ")
            ),
        })
    };
    let ry = find(response)?;
    let rx = covariates.iter().map(|c| find(c)).collect::<Result<Vec<_>>>()?;

    let mut y = Vec::new();
    let mut x = Vec::new();
    let mut na_lines = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(i + 2, |p| p.line() as usize);
        let cols: Vec<usize> = std::iter::once(ry).chain(rx.iter().copied()).collect();
        let mut vals = Vec::with_capacity(cols.len());
        let mut na = false;
        for &c in &cols {
            let cell = rec.get(c).unwrap_or("");
            if is_na(cell) {
                na = true;
                break;
            }
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                path: shown.clone(),
                line,
                msg: format!("column '{}': '{cell}' is not a number", &header[c]),
            })?;
            vals.push(v);
        }
        if na {
            na_lines.push(line);
            continue;
        }
        y.push(vals[0]);
        x.push(vals[1..].to_vec());
    }
    if !na_lines.is_empty() {
        return Err(Error::Parse {
            path: shown,
            line: na_lines[0],
            msg: format!("missing values on lines {na_lines:?}"),
        });
    }
    if y.is_empty() {
        return Err(Error::Parse {
            path: shown,
            line: 1,
            msg: "no data rows".into(),
        });
    }
    Ok(Dataset {
        response_name: response.to_string(),
        y,
        covariate_names: covariates.to_vec(),
        x,
    })
}

/// Components (weight, mean, sd) of the simulated reference mixture.
pub const REFERENCE_MIXTURE: [(f64, f64, f64); 5] = [
    (10.0, 15.0, 1.1),
    (9.0, 50.0, 1.0),
    (4.0, 20.0, 4.0),
    (5.0, 30.0, 5.0),
    (5.0, 40.0, 5.0),
];

/// Density of the reference mixture.
pub fn reference_density(y: f64) -> f64 {
    let total: f64 = REFERENCE_MIXTURE.iter().map(|c| c.0).sum();
    REFERENCE_MIXTURE
        .iter()
        .map(|&(w, m, s)| w / total * (-0.5 * ((y - m) / s).powi(2)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt()))
        .sum()
}

/// `n` draws from the reference mixture.
pub fn simulate_reference_data(seed: u64, n: usize) -> Dataset {
    let mut rng = substream(seed, 0);
    let pick = WeightedIndex::new(REFERENCE_MIXTURE.iter().map(|c| c.0)).expect("positive weights");
    let y = (0..n)
        .map(|_| {
            let (_, m, s) = REFERENCE_MIXTURE[pick.sample(&mut rng)];
            Normal::new(m, s).expect("positive sd").sample(&mut rng)
        })
        .collect();
    Dataset::from_response(y)
}

/// Two-regime linear data: covariate uniform on (0, 10), responses from
/// `theta_a` or `theta_b` (intercept first) with noise sd `sd`; returns the
/// dataset and the true regime labels.
pub fn simulate_two_regimes(
    seed: u64,
    n: usize,
    theta_a: [f64; 2],
    theta_b: [f64; 2],
    sd: f64,
) -> (Dataset, Vec<usize>) {
    let mut rng = substream(seed, 1);
    let noise = Normal::new(0.0, sd).expect("positive sd");
    let mut y = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let xi: f64 = rng.random_range(0.0..10.0);
        let label = i % 2;
        let t = if label == 0 { theta_a } else { theta_b };
        y.push(t[0] + t[1] * xi + noise.sample(&mut rng));
        x.push(vec![xi]);
        labels.push(label);
    }
    let d = Dataset::with_covariates(y, vec!["x".into()], x).expect("consistent shapes");
    (d, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_data_is_deterministic_and_centred() {
        let a = simulate_reference_data(3, 1000);
        assert_eq!(a, simulate_reference_data(3, 1000));
        let mean = a.y.iter().sum::<f64>() / 1000.0;
        let want = (10.0 * 15.0 + 9.0 * 50.0 + 4.0 * 20.0 + 5.0 * 30.0 + 5.0 * 40.0) / 33.0;
        let var = a.y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 999.0;
        assert!((mean - want).abs() < 3.0 * (var / 1000.0).sqrt(), "{mean} vs {want}");
    }

    #[test]
    fn reference_density_integrates_to_one() {
        let h = 0.01;
        let s: f64 = (0..10_000)
            .map(|i| reference_density(-20.0 + (i as f64 + 0.5) * h))
            .sum::<f64>()
            * h;
        assert!((s - 1.0).abs() < 1e-9);
    }

    #[test]
    fn standardization() {
        let mut d =
            Dataset::with_covariates(vec![0.0; 3], vec!["a".into()], vec![vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let s = d.standardize_covariates();
        assert_eq!(s, vec![(2.0, 1.0)]);
        assert_eq!(d.x, vec![vec![-1.0], vec![0.0], vec![1.0]]);
    }
}
