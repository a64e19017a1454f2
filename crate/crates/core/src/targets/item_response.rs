use super::{normal_logpdf, softplus, softplus_sigmoid, TargetError, TargetModel};

const BUNDLED: &str = include_str!("../../data/irt_sim.csv");

pub(crate) const DELTA_PRIOR_MEAN: f64 = 0.75;

/// Two-way logistic item-response model over `(δ, α₁…α_J, β₁…β_L)` with
/// `P(y_jl = 1) = logit⁻¹(α_j − β_l + δ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemResponse {
    students: usize,
    questions: usize,
    /// Row-major `students × questions` responses in `{0, 1}`.
    responses: Vec<u8>,
}

impl ItemResponse {
    pub fn new(students: usize, questions: usize, responses: Vec<u8>) -> Self {
        assert_eq!(responses.len(), students * questions);
        Self {
            students,
            questions,
            responses,
        }
    }

    /// Simulated 400 × 100 response matrix shipped with the crate.
    pub fn bundled() -> Self {
        Self::from_csv(BUNDLED, "irt_sim.csv").expect("bundled data parses")
    }

    /// CSV with header `student,question,response`; every cell must be present.
    pub fn from_csv(text: &str, origin: &str) -> Result<Self, TargetError> {
        let mut cells = Vec::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |message: String| TargetError::Ingest {
                path: origin.to_string(),
                line: i + 1,
                message,
            };
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 3 {
                return Err(bad("expected `student,question,response`".into()));
            }
            let j: usize = f[0].parse().map_err(|_| bad(format!("bad student `{}`", f[0])))?;
            let l: usize = f[1].parse().map_err(|_| bad(format!("bad question `{}`", f[1])))?;
            let y: u8 = match f[2] {
                "0" => 0,
                "1" => 1,
                other => return Err(bad(format!("response must be 0 or 1, found `{other}`"))),
            };
            cells.push((j, l, y));
        }
        let students = cells.iter().map(|c| c.0 + 1).max().unwrap_or(0);
        let questions = cells.iter().map(|c| c.1 + 1).max().unwrap_or(0);
        if cells.len() != students * questions {
            return Err(TargetError::Ingest {
                path: origin.to_string(),
                line: 0,
                message: format!("expected {} responses, found {}", students * questions, cells.len()),
            });
        }
        let mut responses = vec![0u8; students * questions];
        for (j, l, y) in cells {
            responses[j * questions + l] = y;
        }
        Ok(Self::new(students, questions, responses))
    }

    pub fn students(&self) -> usize {
        self.students
    }

    pub fn questions(&self) -> usize {
        self.questions
    }

    pub fn log_likelihood(&self, theta: &[f64]) -> f64 {
        let delta = theta[0];
        let alpha = &theta[1..1 + self.students];
        let beta = &theta[1 + self.students..];
        let mut ll = 0.0;
        for (j, row) in self.responses.chunks_exact(self.questions).enumerate() {
            for (l, &y) in row.iter().enumerate() {
                let s = alpha[j] - beta[l] + delta;
                ll += f64::from(y) * s - softplus(s);
            }
        }
        ll
    }
}

impl TargetModel for ItemResponse {
    fn id(&self) -> &str {
        "item_response"
    }

    fn dim(&self) -> usize {
        1 + self.students + self.questions
    }

    fn log_density_and_gradient(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let (j_n, l_n) = (self.students, self.questions);
        let delta = theta[0];
        let mut lp = normal_logpdf(delta, DELTA_PRIOR_MEAN, 1.0);
        grad[0] = -(delta - DELTA_PRIOR_MEAN);
        for i in 1..1 + j_n + l_n {
            lp += normal_logpdf(theta[i], 0.0, 1.0);
            grad[i] = -theta[i];
        }
        let (alpha, beta) = theta[1..].split_at(j_n);
        let (g_alpha, g_beta) = grad[1..].split_at_mut(j_n);
        let mut g_delta = 0.0;
        for (j, row) in self.responses.chunks_exact(l_n).enumerate() {
            let mut g_row = 0.0;
            for (l, &y) in row.iter().enumerate() {
                let s = alpha[j] - beta[l] + delta;
                let y = f64::from(y);
                let (sp, sg) = softplus_sigmoid(s);
                lp += y * s - sp;
                let r = y - sg;
                g_row += r;
                g_beta[l] -= r;
            }
            g_alpha[j] += g_row;
            g_delta += g_row;
        }
        grad[0] += g_delta;
        lp
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::targets::finite_difference_error;
    use approx::assert_relative_eq;
    use rand::seq::index::sample;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn dimension_and_coin_flip_likelihood() {
        let t = ItemResponse::bundled();
        assert_eq!((t.students(), t.questions()), (400, 100));
        assert_eq!(t.dim(), 501);
        assert_relative_eq!(t.log_likelihood(&vec![0.0; 501]), 40_000.0 * 0.5f64.ln(), max_relative = 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences_on_subsample() {
        let t = ItemResponse::bundled();
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..20 {
            let theta: Vec<f64> = (0..501).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let coords = sample(&mut rng, 501, 50).into_vec();
            assert!(finite_difference_error(&t, &theta, &coords) < 1e-5);
        }
    }

    #[test]
    fn incomplete_matrix_is_rejected() {
        let text = "student,question,response\n0,0,1\n1,1,0\n";
        assert!(ItemResponse::from_csv(text, "mem").is_err());
        assert!(ItemResponse::from_csv("student,question,response\n0,0,2\n", "mem").is_err());
    }
}
