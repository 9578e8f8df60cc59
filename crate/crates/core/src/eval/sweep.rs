use super::evaluate::{evaluate, EvalConfig, EvalReport};
use crate::error::{Error, Result};
use crate::policy::Policy;
use crate::sim::Surveillance;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    FleetSize,
    PComm,
    PEquip,
    Surveillance,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::FleetSize => "fleet_size",
            SweepAxis::PComm => "p_comm",
            SweepAxis::PEquip => "p_equip",
            SweepAxis::Surveillance => "surveillance",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "fleet_size" => Some(SweepAxis::FleetSize),
            "p_comm" => Some(SweepAxis::PComm),
            "p_equip" => Some(SweepAxis::PEquip),
            "surveillance" => Some(SweepAxis::Surveillance),
            _ => None,
        }
    }

    /// Copy of `base` with this axis set to `value`.
    pub fn apply(self, base: &EvalConfig, value: &str) -> Result<EvalConfig> {
        let bad = || Error::Config(format!("bad {} value '{value}'", self.as_str()));
        let mut c = base.clone();
        match self {
            SweepAxis::FleetSize => c.scenario.fleet_size = value.parse().map_err(|_| bad())?,
            SweepAxis::PComm => c.scenario.p_comm = value.parse().map_err(|_| bad())?,
            SweepAxis::PEquip => c.scenario.p_equip = value.parse().map_err(|_| bad())?,
            SweepAxis::Surveillance => c.env.surveillance = Surveillance::parse(value).ok_or_else(bad)?,
        }
        c.scenario.validate()?;
        Ok(c)
    }
}

/// One paired evaluation per value, all sharing `base.seed`.
pub fn sweep(
    policy: &dyn Policy,
    axis: SweepAxis,
    values: &[String],
    base: &EvalConfig,
) -> Result<Vec<(String, EvalReport)>> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    values
        .iter()
        .map(|v| {
            let config = axis.apply(base, v)?;
            Ok((v.clone(), evaluate(policy, &config)?))
        })
        .collect()
}
