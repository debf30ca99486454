use serde::{Deserialize, Serialize};

use super::rule::Piecewise;
use super::state::HvacState;
use crate::error::{Error, Result};

/// Floor/wall heating table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FloorWallTable {
    /// W per deck in Preheating.
    pub preheat_max: [f64; 3],
    /// t_amb °C → W per deck in Heating; non-increasing.
    pub heating: Piecewise,
}

impl Default for FloorWallTable {
    fn default() -> Self {
        FloorWallTable {
            preheat_max: [1500.0, 1000.0, 1500.0],
            heating: Piecewise::new(vec![(-20.0, 1500.0), (0.0, 800.0), (10.0, 0.0)]),
        }
    }
}

impl FloorWallTable {
    pub fn validate(&self) -> Result<()> {
        self.heating.validate("floor/wall table")?;
        if self.heating.knots.windows(2).any(|w| w[1].1 > w[0].1) {
            return Err(Error::Config(
                "floor/wall table: heating power must be non-increasing".into(),
            ));
        }
        if self.heating.knots.iter().any(|k| k.1 < 0.0) || self.preheat_max.iter().any(|q| *q < 0.0) {
            return Err(Error::Config("floor/wall table: negative power".into()));
        }
        Ok(())
    }
}

pub fn floor_wall_heating(state: HvacState, t_amb: f64, table: &FloorWallTable) -> [f64; 3] {
    match state {
        HvacState::Preheating => table.preheat_max,
        HvacState::Heating => [table.heating.eval(t_amb); 3],
        _ => [0.0; 3],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn only_heating_states_are_active() {
        let t = FloorWallTable::default();
        assert_eq!(floor_wall_heating(HvacState::Cooling, -10.0, &t), [0.0; 3]);
        assert_eq!(floor_wall_heating(HvacState::ActiveHeating, -10.0, &t), [0.0; 3]);
        assert_eq!(floor_wall_heating(HvacState::Preheating, 30.0, &t), t.preheat_max);
        assert_eq!(floor_wall_heating(HvacState::Heating, 0.0, &t), [800.0; 3]);
        assert_eq!(floor_wall_heating(HvacState::Heating, 25.0, &t), [0.0; 3]);
    }

    #[test]
    fn increasing_table_rejected() {
        let mut t = FloorWallTable::default();
        assert!(t.validate().is_ok());
        t.heating = Piecewise::new(vec![(0.0, 100.0), (10.0, 200.0)]);
        assert!(t.validate().is_err());
    }
}
