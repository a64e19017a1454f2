use std::path::Path;

use super::{normal_logpdf, softplus, softplus_sigmoid, TargetError, TargetModel};

const BUNDLED_SYNTHETIC: &str = include_str!("../../data/german_credit_synthetic.data-numeric");

pub(crate) const FEATURES: usize = 24;

/// Bayesian logistic regression with a standard-normal prior on the intercept
/// and the 24 feature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct GermanCredit {
    id: String,
    /// Row-major `rows × (1 + FEATURES)`, first column the intercept.
    design: Vec<f64>,
    labels: Vec<f64>,
}

impl GermanCredit {
    /// Read a `german.data-numeric` style file: 24 integer features then a
    /// label in `{1, 2}`, separated by whitespace or commas.
    pub fn from_path(path: &Path, standardize: bool) -> Result<Self, TargetError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            TargetError::Config(format!(
                "cannot read German credit data {} ({e}); place `german.data-numeric` in the data \
                 directory or use the bundled `german_credit_synthetic` target",
                path.display()
            ))
        })?;
        Self::parse(&text, &path.display().to_string(), standardize, "german_credit")
    }

    /// A synthetic dataset with the same shape as the original, generated by
    /// [`crate::targets::data::german_credit_synthetic`].
    pub fn bundled_synthetic() -> Self {
        Self::parse(BUNDLED_SYNTHETIC, "german_credit_synthetic.data-numeric", true, "german_credit_synthetic")
            .expect("bundled data parses")
    }

    pub fn parse(text: &str, origin: &str, standardize: bool, id: &str) -> Result<Self, TargetError> {
        let mut features: Vec<[f64; FEATURES]> = Vec::new();
        let mut labels = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |message: String| TargetError::Ingest {
                path: origin.to_string(),
                line: i + 1,
                message,
            };
            let fields: Vec<&str> = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .collect();
            if fields.len() != FEATURES + 1 {
                return Err(bad(format!("expected {} columns, found {}", FEATURES + 1, fields.len())));
            }
            let mut row = [0.0; FEATURES];
            for (slot, f) in row.iter_mut().zip(&fields) {
                *slot = f.parse().map_err(|_| bad(format!("bad number `{f}`")))?;
            }
            let label = match fields[FEATURES] {
                "1" => 0.0,
                "2" => 1.0,
                other => return Err(bad(format!("label must be 1 or 2, found `{other}`"))),
            };
            features.push(row);
            labels.push(label);
        }
        if features.is_empty() {
            return Err(TargetError::Ingest {
                path: origin.to_string(),
                line: 1,
                message: "no rows".into(),
            });
        }
        if standardize {
            let n = features.len() as f64;
            for j in 0..FEATURES {
                let mean = features.iter().map(|r| r[j]).sum::<f64>() / n;
                let var = features.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
                let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
                for r in &mut features {
                    r[j] = (r[j] - mean) / sd;
                }
            }
        }
        let design = features
            .iter()
            .flat_map(|r| std::iter::once(1.0).chain(r.iter().copied()))
            .collect();
        Ok(Self {
            id: id.to_string(),
            design,
            labels,
        })
    }

    pub fn rows(&self) -> usize {
        self.labels.len()
    }

    /// Bernoulli-logit log-likelihood alone.
    pub fn log_likelihood(&self, theta: &[f64]) -> f64 {
        let d = FEATURES + 1;
        self.design
            .chunks_exact(d)
            .zip(&self.labels)
            .map(|(x, &y)| {
                let s: f64 = x.iter().zip(theta).map(|(a, b)| a * b).sum();
                y * s - softplus(s)
            })
            .sum()
    }
}

impl TargetModel for GermanCredit {
    fn id(&self) -> &str {
        &self.id
    }

    fn dim(&self) -> usize {
        FEATURES + 1
    }

    fn log_density_and_gradient(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let d = FEATURES + 1;
        let mut lp = 0.0;
        for (g, &t) in grad.iter_mut().zip(theta) {
            lp += normal_logpdf(t, 0.0, 1.0);
            *g = -t;
        }
        for (x, &y) in self.design.chunks_exact(d).zip(&self.labels) {
            let s: f64 = x.iter().zip(theta).map(|(a, b)| a * b).sum();
            let (sp, sg) = softplus_sigmoid(s);
            lp += y * s - sp;
            let r = y - sg;
            for (g, &xi) in grad.iter_mut().zip(x) {
                *g += r * xi;
            }
        }
        lp
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::finite_difference_error;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn zero_weights_give_coin_flip_likelihood() {
        let t = GermanCredit::bundled_synthetic();
        assert_eq!(t.dim(), 25);
        assert_relative_eq!(
            t.log_likelihood(&[0.0; 25]),
            t.rows() as f64 * 0.5f64.ln(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn standardized_columns_have_unit_scale() {
        let t = GermanCredit::bundled_synthetic();
        let d = FEATURES + 1;
        let n = t.rows() as f64;
        for j in 1..d {
            let col: Vec<f64> = t.design.iter().skip(j).step_by(d).copied().collect();
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            assert!(mean.abs() < 1e-10);
            assert!((var - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn malformed_rows_report_line_numbers() {
        let good = "1 ".repeat(24) + "2\n";
        let text = format!("{good}{}", "1 ".repeat(23) + "1\n");
        match GermanCredit::parse(&text, "mem", true, "x").unwrap_err() {
            TargetError::Ingest { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
        let text = format!("{good}{}", "1 ".repeat(24) + "3\n");
        assert!(GermanCredit::parse(&text, "mem", true, "x").is_err());
    }

    #[test]
    fn comma_separated_rows_are_accepted_unstandardized() {
        let row = vec!["2"; 24].join(",") + ",1\n";
        let t = GermanCredit::parse(&row, "mem", false, "x").unwrap();
        assert_eq!(t.design[1], 2.0);
        assert_eq!(t.labels, vec![0.0]);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let t = GermanCredit::bundled_synthetic();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let coords: Vec<usize> = (0..25).collect();
        for _ in 0..100 {
            let theta: Vec<f64> = (0..25).map(|_| 0.5 * rng.sample::<f64, _>(StandardNormal)).collect();
            assert!(finite_difference_error(&t, &theta, &coords) < 1e-5);
        }
    }
}
