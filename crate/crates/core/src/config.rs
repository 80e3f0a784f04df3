use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

pub const DEFAULT_PLAN_LENGTH_CAP: usize = 50;

/// Loop budgets for one episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineConfig {
    /// Consecutive failed attempts at one target before replanning.
    pub attempt_budget: usize,
    /// Replan cycles allowed per stuck cursor position.
    pub max_replans: usize,
    /// Total Realize calls across the episode.
    pub global_step_cap: usize,
    #[serde(default = "default_plan_length_cap")]
    pub plan_length_cap: usize,
}

fn default_plan_length_cap() -> usize {
    DEFAULT_PLAN_LENGTH_CAP
}

impl EngineConfig {
    pub fn new(attempt_budget: usize, max_replans: usize, global_step_cap: usize) -> Self {
        Self {
            attempt_budget,
            max_replans,
            global_step_cap,
            plan_length_cap: DEFAULT_PLAN_LENGTH_CAP,
        }
    }

    /// Itinerary planning: budget 3, 5 replans, 60 steps.
    pub fn constraint() -> Self {
        Self::new(3, 5, 60)
    }

    /// Interactive text world: budget 30, 5 replans, 500 steps.
    pub fn textworld() -> Self {
        Self::new(30, 5, 500)
    }

    /// Two-hop QA: budget 3, 2 replans, 20 steps.
    pub fn two_hop() -> Self {
        Self::new(3, 2, 20)
    }

    /// 2–4 hop QA: budget 3, 2 replans, 25 steps.
    pub fn multi_hop() -> Self {
        Self::new(3, 2, 25)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.attempt_budget == 0 {
            return Err(ConfigError::NonPositive("attempt_budget"));
        }
        if self.global_step_cap == 0 {
            return Err(ConfigError::NonPositive("global_step_cap"));
        }
        if self.plan_length_cap == 0 {
            return Err(ConfigError::NonPositive("plan_length_cap"));
        }
        Ok(())
    }

    /// Upper bound on replans across the whole episode.
    pub fn replan_ceiling(&self, plan_length: usize) -> usize {
        self.max_replans.saturating_mul(plan_length.max(1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_match_published_settings() {
        assert_eq!(EngineConfig::constraint(), EngineConfig::new(3, 5, 60));
        assert_eq!(EngineConfig::textworld(), EngineConfig::new(30, 5, 500));
        assert_eq!(EngineConfig::two_hop(), EngineConfig::new(3, 2, 20));
        assert_eq!(EngineConfig::multi_hop(), EngineConfig::new(3, 2, 25));
        assert_eq!(EngineConfig::constraint().plan_length_cap, 50);
    }

    #[test]
    fn zero_budget_rejected() {
        let mut c = EngineConfig::constraint();
        c.attempt_budget = 0;
        assert_eq!(c.validate(), Err(ConfigError::NonPositive("attempt_budget")));
        c.attempt_budget = 1;
        c.global_step_cap = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn plan_length_cap_defaults_when_absent() {
        let c: EngineConfig = serde_json::from_str(
            r#"{"attempt_budget":3,"max_replans":0,"global_step_cap":9}"#,
        )
        .unwrap();
        assert_eq!(c.plan_length_cap, DEFAULT_PLAN_LENGTH_CAP);
    }
}
