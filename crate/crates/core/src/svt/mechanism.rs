use serde::{Deserialize, Serialize};

use crate::dp::{check_scale, NoiseSource};
use crate::{Error, Result};

/// One output of a sparse-vector run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SvtOutput {
    /// The noisy answer cleared the noisy threshold.
    One,
    /// It did not.
    Zero,
    /// Vanilla placeholder for a query that did not clear the threshold.
    Bottom,
    /// Vanilla release of the noisy answer itself.
    Value(f64),
}

impl SvtOutput {
    pub fn is_positive(self) -> bool {
        matches!(self, SvtOutput::One | SvtOutput::Value(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvtRun {
    pub outputs: Vec<SvtOutput>,
    pub threshold_draws: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvtConfig {
    pub threshold: f64,
    pub lambda: f64,
    /// Number of positive outputs after which the halting variants stop.
    pub t: usize,
}

impl SvtConfig {
    pub fn new(threshold: f64, lambda: f64, t: usize) -> Result<Self> {
        check_scale(lambda)?;
        if !threshold.is_finite() {
            return Err(Error::param("threshold must be finite"));
        }
        if t < 1 {
            return Err(Error::param("t must be at least 1"));
        }
        Ok(SvtConfig { threshold, lambda, t })
    }

    fn answer_scale(&self) -> f64 {
        self.t as f64 * self.lambda
    }
}

/// Sensitivity-one counting query over a dataset of labelled tuples: the
/// number of tuples whose label is in `labels`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountQuery {
    pub labels: Vec<char>,
}

impl CountQuery {
    pub fn of(label: char) -> Self {
        CountQuery { labels: vec![label] }
    }

    pub fn eval(&self, data: &[char]) -> f64 {
        data.iter().filter(|c| self.labels.contains(c)).count() as f64
    }
}

pub fn evaluate(queries: &[CountQuery], data: &[char]) -> Vec<f64> {
    queries.iter().map(|q| q.eval(data)).collect()
}

/// One noisy threshold at scale `λ`, per-query noise at scale `λ`, never
/// halts.
pub fn binary_svt(answers: &[f64], threshold: f64, lambda: f64, noise: &mut impl NoiseSource) -> Result<SvtRun> {
    check_scale(lambda)?;
    let t_hat = threshold + noise.laplace(lambda);
    let outputs = answers
        .iter()
        .map(|&q| if q + noise.laplace(lambda) > t_hat { SvtOutput::One } else { SvtOutput::Zero })
        .collect();
    Ok(SvtRun { outputs, threshold_draws: 1 })
}

/// Releases noisy answers (scale `t·λ`) that clear a single noisy threshold
/// (scale `λ`); stops after `t` releases.
pub fn vanilla_svt(answers: &[f64], cfg: &SvtConfig, noise: &mut impl NoiseSource) -> Result<SvtRun> {
    let t_hat = cfg.threshold + noise.laplace(cfg.lambda);
    let mut outputs = Vec::new();
    let mut released = 0;
    for &q in answers {
        let q_hat = q + noise.laplace(cfg.answer_scale());
        if q_hat > t_hat {
            outputs.push(SvtOutput::Value(q_hat));
            released += 1;
            if released >= cfg.t {
                break;
            }
        } else {
            outputs.push(SvtOutput::Bottom);
        }
    }
    Ok(SvtRun { outputs, threshold_draws: 1 })
}

/// Threshold and answers both at scale `t·λ`; the threshold is redrawn after
/// every 1 and the run stops after `t` ones.
pub fn reduced_svt(answers: &[f64], cfg: &SvtConfig, noise: &mut impl NoiseSource) -> Result<SvtRun> {
    let scale = cfg.answer_scale();
    let mut t_hat = cfg.threshold + noise.laplace(scale);
    let mut draws = 1;
    let mut outputs = Vec::new();
    let mut ones = 0;
    for &q in answers {
        if q + noise.laplace(scale) > t_hat {
            outputs.push(SvtOutput::One);
            ones += 1;
            if ones >= cfg.t {
                break;
            }
            t_hat = cfg.threshold + noise.laplace(scale);
            draws += 1;
        } else {
            outputs.push(SvtOutput::Zero);
        }
    }
    Ok(SvtRun { outputs, threshold_draws: draws })
}

/// A single threshold at scale `λ`, answers at scale `t·λ`, stops after `t`
/// ones.
pub fn improved_svt(answers: &[f64], cfg: &SvtConfig, noise: &mut impl NoiseSource) -> Result<SvtRun> {
    let t_hat = cfg.threshold + noise.laplace(cfg.lambda);
    let mut outputs = Vec::new();
    let mut ones = 0;
    for &q in answers {
        if q + noise.laplace(cfg.answer_scale()) > t_hat {
            outputs.push(SvtOutput::One);
            ones += 1;
            if ones >= cfg.t {
                break;
            }
        } else {
            outputs.push(SvtOutput::Zero);
        }
    }
    Ok(SvtRun { outputs, threshold_draws: 1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dp::Noiseless;

    #[test]
    fn noiseless_traces() {
        use SvtOutput::*;
        let d1 = ['a', 'b'];
        let q = [CountQuery::of('a'), CountQuery::of('a'), CountQuery::of('b'), CountQuery::of('b')];
        let run = binary_svt(&evaluate(&q, &d1), 1.0, 2.0, &mut Noiseless).unwrap();
        assert_eq!(run.outputs, vec![Zero; 4]);

        let cfg = SvtConfig::new(0.0, 1.0, 2).unwrap();
        let run = vanilla_svt(&[2.0, 0.0, 3.0, 5.0], &cfg, &mut Noiseless).unwrap();
        assert_eq!(run.outputs, vec![Value(2.0), Bottom, Value(3.0)]);

        let run = reduced_svt(&[1.0, 0.0, 1.0, 1.0], &cfg, &mut Noiseless).unwrap();
        assert_eq!(run.outputs, vec![One, Zero, One]);
        assert_eq!(run.threshold_draws, 2);

        let run = improved_svt(&[1.0, 0.0, 1.0, 1.0], &cfg, &mut Noiseless).unwrap();
        assert_eq!(run.outputs, vec![One, Zero, One]);
        assert_eq!(run.threshold_draws, 1);
    }

    #[test]
    fn config_validation() {
        assert!(SvtConfig::new(0.0, 0.0, 1).is_err());
        assert!(SvtConfig::new(0.0, 1.0, 0).is_err());
        assert!(SvtConfig::new(f64::NAN, 1.0, 1).is_err());
    }
}
