use std::path::Path;

use super::{normal_logpdf, TargetError, TargetModel};

const BUNDLED: &str = include_str!("../../data/eight_schools.csv");

const MU_PRIOR_MEAN: f64 = 5.0;
const MU_PRIOR_SD: f64 = 3.0;
const TAU_PRIOR_SD: f64 = 10.0;

/// Non-centered hierarchical model over `(µ, log σ, η₁, …, η_J)` with
/// `θ_j = µ + η_j σ` and `y_j ~ N(θ_j, s_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EightSchools {
    y: Vec<f64>,
    se: Vec<f64>,
    prior_only: bool,
}

impl EightSchools {
    pub fn new(y: Vec<f64>, se: Vec<f64>) -> Self {
        assert_eq!(y.len(), se.len());
        Self {
            y,
            se,
            prior_only: false,
        }
    }

    /// The classic eight-schools coaching data shipped with the crate.
    pub fn bundled() -> Self {
        Self::from_csv(BUNDLED, "eight_schools.csv").expect("bundled data parses")
    }

    pub fn from_path(path: &Path) -> Result<Self, TargetError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            TargetError::Config(format!("cannot read eight-schools data {}: {e}", path.display()))
        })?;
        Self::from_csv(&text, &path.display().to_string())
    }

    /// CSV with header `school,y,sigma`.
    pub fn from_csv(text: &str, origin: &str) -> Result<Self, TargetError> {
        let mut y = Vec::new();
        let mut se = Vec::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| TargetError::Ingest {
                    path: origin.to_string(),
                    line: i + 1,
                    message: format!("bad number `{s}`"),
                })
            };
            if fields.len() != 3 {
                return Err(TargetError::Ingest {
                    path: origin.to_string(),
                    line: i + 1,
                    message: "expected `school,y,sigma`".into(),
                });
            }
            y.push(parse(fields[1])?);
            se.push(parse(fields[2])?);
        }
        Ok(Self::new(y, se))
    }

    /// Drop the likelihood so the density is the prior.
    pub fn prior_only(mut self) -> Self {
        self.prior_only = true;
        self
    }

    pub fn schools(&self) -> usize {
        self.y.len()
    }
}

impl TargetModel for EightSchools {
    fn id(&self) -> &str {
        "eight_schools"
    }

    fn dim(&self) -> usize {
        2 + self.y.len()
    }

    fn log_density_and_gradient(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let mu = theta[0];
        let log_tau = theta[1];
        let tau = log_tau.exp();
        let eta = &theta[2..];

        // µ ~ N(5, 3); τ ~ N⁺(0, 10) on the log scale (Jacobian adds log τ); η ~ N(0, 1)
        let mut lp = normal_logpdf(mu, MU_PRIOR_MEAN, MU_PRIOR_SD)
            + normal_logpdf(tau, 0.0, TAU_PRIOR_SD)
            + std::f64::consts::LN_2
            + log_tau;
        grad[0] = -(mu - MU_PRIOR_MEAN) / (MU_PRIOR_SD * MU_PRIOR_SD);
        grad[1] = -tau * tau / (TAU_PRIOR_SD * TAU_PRIOR_SD) + 1.0;
        for (j, &e) in eta.iter().enumerate() {
            lp += normal_logpdf(e, 0.0, 1.0);
            grad[2 + j] = -e;
        }
        if self.prior_only {
            return lp;
        }
        for (j, &e) in eta.iter().enumerate() {
            let effect = mu + e * tau;
            lp += normal_logpdf(self.y[j], effect, self.se[j]);
            let r = (self.y[j] - effect) / (self.se[j] * self.se[j]);
            grad[0] += r;
            grad[1] += r * e * tau;
            grad[2 + j] += r * tau;
        }
        lp
    }
}
