use super::action::Action;
use crate::error::{Error, Result};
use crate::sim::units::ft_to_m;

/// Reward coefficients. Distances are evaluated in meters.
#[derive(Clone, Debug, PartialEq)]
pub struct RewardConfig {
    /// χ: proximity penalty offset.
    pub chi: f64,
    /// δ: proximity penalty slope per meter.
    pub delta: f64,
    /// ε: speed-change penalty.
    pub epsilon: f64,
    /// λ: altitude-change penalty.
    pub lambda: f64,
    /// Ω: per-step penalty.
    pub omega: f64,
    pub nmac_horizontal_ft: f64,
    pub nmac_vertical_ft: f64,
    pub d_max_m: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            chi: 0.1,
            delta: 0.0001,
            epsilon: 0.001,
            lambda: 0.01,
            omega: 0.001,
            nmac_horizontal_ft: 500.0,
            nmac_vertical_ft: 100.0,
            d_max_m: 1000.0,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.chi,
            self.delta,
            self.epsilon,
            self.lambda,
            self.omega,
            self.nmac_horizontal_ft,
            self.nmac_vertical_ft,
            self.d_max_m,
        ];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(Error::Config("reward coefficients must be positive".into()))
        }
    }

    pub fn nmac_horizontal_m(&self) -> f64 {
        ft_to_m(self.nmac_horizontal_ft)
    }

    pub fn nmac_vertical_m(&self) -> f64 {
        ft_to_m(self.nmac_vertical_ft)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RewardContext {
    /// Horizontal distance and absolute vertical separation (both meters) to
    /// the closest intruder, if any.
    pub closest: Option<(f64, f64)>,
    /// Ownship took part in an NMAC at any tick of the decision interval.
    pub nmac_in_interval: bool,
}

/// Per-step reward: separation term, action term, and the constant −Ω.
pub fn reward(ctx: &RewardContext, action: Action, cfg: &RewardConfig) -> f64 {
    let separation = match ctx.closest {
        _ if ctx.nmac_in_interval => -1.0,
        Some((d, dz)) if d < cfg.nmac_horizontal_m() && dz < cfg.nmac_vertical_m() => -1.0,
        Some((d, _)) if d >= cfg.nmac_horizontal_m() && d < cfg.d_max_m => -cfg.chi + cfg.delta * d,
        _ => 0.0,
    };
    let action_term = if action.is_speed_change() {
        -cfg.epsilon
    } else if action.is_vertical_change() {
        -cfg.lambda
    } else {
        0.0
    };
    separation + action_term - cfg.omega
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(d: f64, dz: f64) -> RewardContext {
        RewardContext {
            closest: Some((d, dz)),
            nmac_in_interval: false,
        }
    }

    #[test]
    fn branch_values() {
        let cfg = RewardConfig::default();
        assert!((reward(&at(120.0, 15.0), Action::MaintainSpeed, &cfg) - -1.001).abs() < 1e-12);
        assert!((reward(&at(500.0, 0.0), Action::Accelerate, &cfg) - -0.052).abs() < 1e-12);
        assert!((reward(&at(1000.0, 0.0), Action::MaintainAltitude, &cfg) - -0.001).abs() < 1e-12);
        assert_eq!(reward(&RewardContext::default(), Action::Climb, &cfg), -0.011);
    }

    #[test]
    fn interval_nmac_overrides_geometry() {
        let cfg = RewardConfig::default();
        let ctx = RewardContext {
            closest: Some((800.0, 100.0)),
            nmac_in_interval: true,
        };
        assert!((reward(&ctx, Action::MaintainSpeed, &cfg) - -1.001).abs() < 1e-12);
    }

    #[test]
    fn close_but_vertically_separated_is_not_penalised() {
        let cfg = RewardConfig::default();
        assert_eq!(reward(&at(100.0, 91.44), Action::MaintainSpeed, &cfg), -0.001);
    }

    #[test]
    fn nonpositive_coefficients_are_rejected() {
        let cfg = RewardConfig {
            lambda: 0.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        assert!(RewardConfig::default().validate().is_ok());
    }
}
