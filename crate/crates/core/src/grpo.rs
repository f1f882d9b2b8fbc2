//! Numeric kernels of group-relative policy optimization.
//!
//! These are the pieces of the objective that can be checked by hand:
//! group-standardized advantages, the importance ratio, the clipped
//! surrogate and the per-batch objective. KL estimates are supplied by the
//! caller.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GrpoError {
    #[error("a group needs at least 2 outputs, got {0}")]
    GroupTooSmall(usize),
    #[error("group fields have mismatched lengths (rewards {rewards}, {field} {len})")]
    LengthMismatch { rewards: usize, field: &'static str, len: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrpoConfig {
    pub epsilon: f64,
    pub beta: f64,
}

impl Default for GrpoConfig {
    fn default() -> Self {
        GrpoConfig { epsilon: 0.2, beta: 0.0 }
    }
}

/// G sampled outputs for one prompt.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RolloutGroup {
    pub rewards: Vec<f64>,
    pub logp_new: Vec<f64>,
    pub logp_old: Vec<f64>,
    /// Empty means no KL penalty information (treated as zeros).
    #[serde(default)]
    pub kl_estimate: Vec<f64>,
}

impl RolloutGroup {
    /// A group observed at the sampling policy itself: all ratios are 1.
    pub fn on_policy(rewards: Vec<f64>) -> Self {
        let g = rewards.len();
        RolloutGroup {
            rewards,
            logp_new: vec![0.0; g],
            logp_old: vec![0.0; g],
            kl_estimate: vec![0.0; g],
        }
    }

    pub fn validate(&self) -> Result<(), GrpoError> {
        let g = self.rewards.len();
        if g < 2 {
            return Err(GrpoError::GroupTooSmall(g));
        }
        for (field, len) in [
            ("logp_new", self.logp_new.len()),
            ("logp_old", self.logp_old.len()),
            ("kl_estimate", self.kl_estimate.len()),
        ] {
            if len != g && !(field == "kl_estimate" && len == 0) {
                return Err(GrpoError::LengthMismatch { rewards: g, field, len });
            }
        }
        Ok(())
    }
}

/// (r - mean) / std with the population standard deviation. A group whose
/// rewards are all equal gets zero advantages.
pub fn standardize_advantages(rewards: &[f64]) -> Result<Vec<f64>, GrpoError> {
    let g = rewards.len();
    if g < 2 {
        return Err(GrpoError::GroupTooSmall(g));
    }
    // Checked directly: the mean of equal values can round away from them.
    if rewards.iter().all(|&r| r == rewards[0]) {
        return Ok(vec![0.0; g]);
    }
    let n = g as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if std == 0.0 || !std.is_normal() {
        return Ok(vec![0.0; g]);
    }
    Ok(rewards.iter().map(|r| (r - mean) / std).collect())
}

pub fn prob_ratio(logp_new: f64, logp_old: f64) -> f64 {
    (logp_new - logp_old).exp()
}

pub fn clip(rho: f64, epsilon: f64) -> f64 {
    rho.clamp(1.0 - epsilon, 1.0 + epsilon)
}

pub fn clipped_term(rho: f64, advantage: f64, epsilon: f64) -> f64 {
    (rho * advantage).min(clip(rho, epsilon) * advantage)
}

/// Per-output values behind one group's contribution to the objective.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupTerms {
    pub advantages: Vec<f64>,
    pub ratios: Vec<f64>,
    pub clipped: Vec<f64>,
    pub mean_kl: f64,
    pub value: f64,
}

pub fn group_terms(group: &RolloutGroup, config: &GrpoConfig) -> Result<GroupTerms, GrpoError> {
    group.validate()?;
    let advantages = standardize_advantages(&group.rewards)?;
    let ratios: Vec<f64> = group
        .logp_new
        .iter()
        .zip(&group.logp_old)
        .map(|(&new, &old)| prob_ratio(new, old))
        .collect();
    let clipped: Vec<f64> = ratios
        .iter()
        .zip(&advantages)
        .map(|(&rho, &a)| clipped_term(rho, a, config.epsilon))
        .collect();
    let g = group.rewards.len() as f64;
    let mean_kl = group.kl_estimate.iter().sum::<f64>() / g;
    let value = clipped.iter().sum::<f64>() / g - config.beta * mean_kl;
    Ok(GroupTerms {
        advantages,
        ratios,
        clipped,
        mean_kl,
        value,
    })
}

/// Mean over groups of the clipped surrogate minus the KL penalty. An empty
/// batch has objective 0.
pub fn grpo_objective(groups: &[RolloutGroup], config: &GrpoConfig) -> Result<f64, GrpoError> {
    if groups.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for group in groups {
        total += group_terms(group, config)?.value;
    }
    Ok(total / groups.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn uniform_rewards_have_zero_advantage() {
        assert_eq!(standardize_advantages(&[1.0; 4]).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn constant_group_with_inexact_mean() {
        assert_eq!(standardize_advantages(&[1.1; 3]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn two_point_group() {
        assert_eq!(standardize_advantages(&[0.0, 2.0]).unwrap(), vec![-1.0, 1.0]);
    }

    #[test]
    fn skewed_group_matches_closed_form() {
        // mean 1.25, population variance 0.4375
        let a = standardize_advantages(&[3.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
        let std = 0.4375f64.sqrt();
        assert!(close(a[0], 1.75 / std, 1e-12));
        assert!(a[1..].iter().all(|&x| close(x, -0.25 / std, 1e-12)));
        let mean: f64 = a.iter().sum::<f64>() / 8.0;
        let var: f64 = a.iter().map(|x| x * x).sum::<f64>() / 8.0;
        assert!(close(mean, 0.0, 1e-12) && close(var, 1.0, 1e-12));
    }

    #[test]
    fn singleton_group_is_rejected() {
        assert_eq!(standardize_advantages(&[1.0]), Err(GrpoError::GroupTooSmall(1)));
        assert_eq!(grpo_objective(&[RolloutGroup::on_policy(vec![])], &GrpoConfig::default()), Err(GrpoError::GroupTooSmall(0)));
    }

    #[test]
    fn ratios() {
        assert_eq!(prob_ratio(-2.0, -2.0), 1.0);
        assert!(close(prob_ratio(-1.0, -2.0), std::f64::consts::E, 1e-9));
        assert!(close(prob_ratio(-3.0, -1.0), 0.135335283, 1e-9));
    }

    #[test]
    fn clipping() {
        assert!(close(clipped_term(1.5, 1.0, 0.2), 1.2, 1e-12));
        assert!(close(clipped_term(0.5, -1.0, 0.2), -0.8, 1e-12));
        assert_eq!(clipped_term(1.0, -3.5, 0.2), -3.5);
    }

    #[test]
    fn objective_examples() {
        let cfg = GrpoConfig::default();
        assert_eq!(grpo_objective(&[RolloutGroup::on_policy(vec![1.0, 1.0, 1.0])], &cfg).unwrap(), 0.0);
        assert_eq!(grpo_objective(&[RolloutGroup::on_policy(vec![0.0, 2.0])], &cfg).unwrap(), 0.0);
        let mut g = RolloutGroup::on_policy(vec![2.0; 4]);
        g.kl_estimate = vec![0.5; 4];
        let cfg = GrpoConfig { epsilon: 0.2, beta: 0.1 };
        assert!(close(grpo_objective(&[g], &cfg).unwrap(), -0.05, 1e-12));
    }

    #[test]
    fn mismatched_lengths_are_reported() {
        let mut g = RolloutGroup::on_policy(vec![0.0, 1.0]);
        g.logp_new.pop();
        assert!(matches!(g.validate(), Err(GrpoError::LengthMismatch { field: "logp_new", .. })));
    }

    fn group_strategy() -> impl Strategy<Value = RolloutGroup> {
        (2usize..8).prop_flat_map(|g| {
            (
                proptest::collection::vec(-3.0f64..3.0, g),
                proptest::collection::vec(-0.3f64..0.3, g),
                proptest::collection::vec(-5.0f64..-0.5, g),
            )
                .prop_map(|(rewards, delta, old)| RolloutGroup {
                    logp_new: old.iter().zip(&delta).map(|(o, d)| o + d).collect(),
                    kl_estimate: vec![0.0; rewards.len()],
                    rewards,
                    logp_old: old,
                })
        })
    }

    proptest! {
        #[test]
        fn advantages_ignore_shift_and_scale(r in proptest::collection::vec(-10.0f64..10.0, 2..10), shift in -5.0f64..5.0, scale in 0.1f64..10.0) {
            let base = standardize_advantages(&r).unwrap();
            let moved: Vec<f64> = r.iter().map(|x| x * scale + shift).collect();
            let other = standardize_advantages(&moved).unwrap();
            for (a, b) in base.iter().zip(&other) {
                prop_assert!(close(*a, *b, 1e-6), "{a} vs {b}");
            }
        }

        #[test]
        fn on_policy_objective_is_kl_penalty(r in proptest::collection::vec(-10.0f64..10.0, 2..10), kl in 0.0f64..2.0, beta in 0.0f64..1.0) {
            let mut g = RolloutGroup::on_policy(r);
            g.kl_estimate = vec![kl; g.rewards.len()];
            let j = grpo_objective(&[g], &GrpoConfig { epsilon: 0.2, beta }).unwrap();
            prop_assert!(close(j, -beta * kl, 1e-9));
        }

        #[test]
        fn clipped_term_bounded_by_both_branches(rho in 0.01f64..5.0, a in -5.0f64..5.0, eps in 0.01f64..0.9) {
            let t = clipped_term(rho, a, eps);
            prop_assert!(t <= (rho * a).max(clip(rho, eps) * a) + 1e-12);
            prop_assert!(t <= rho * a + 1e-12 && t <= clip(rho, eps) * a + 1e-12);
        }

        #[test]
        fn finite_difference_matches_analytic_gradient(group in group_strategy(), which in 0usize..8) {
            let cfg = GrpoConfig::default();
            let i = which % group.rewards.len();
            let terms = group_terms(&group, &cfg).unwrap();
            let (rho, a) = (terms.ratios[i], terms.advantages[i]);
            // Away from the clip boundary the active branch is smooth.
            prop_assume!(a.abs() > 1e-3);
            prop_assume!((rho - (1.0 - cfg.epsilon)).abs() > 1e-3 && (rho - (1.0 + cfg.epsilon)).abs() > 1e-3);
            let unclipped_active = rho * a <= clip(rho, cfg.epsilon) * a;
            let analytic = if unclipped_active { rho * a / group.rewards.len() as f64 } else { 0.0 };
            let delta = 1e-6;
            let mut bumped = group.clone();
            bumped.logp_new[i] += delta;
            let numeric = (grpo_objective(&[bumped], &cfg).unwrap() - grpo_objective(&[group], &cfg).unwrap()) / delta;
            if analytic == 0.0 {
                prop_assert!(numeric.abs() < 1e-6);
            } else {
                prop_assert!(((numeric - analytic) / analytic).abs() < 1e-4, "numeric {numeric} analytic {analytic}");
            }
        }
    }
}
