//! Rule-based setpoint, HVAC state machine, per-deck PID and floor/wall
//! heating.

mod floor_wall;
mod pid;
mod rule;
mod state;

use serde::{Deserialize, Serialize};

pub use floor_wall::{floor_wall_heating, FloorWallTable};
pub use pid::{pid_step, DeckPid, PidGains, PidMemory};
pub use rule::{rule_based_setpoint, Piecewise, RuleTable};
pub use state::{
    hvac_state_update, hvac_substate_update, HvacMode, HvacState, HvacSubstate, StateThresholds,
    SubstateRule,
};

use crate::coach_sim::DisturbanceSample;
use crate::error::Result;

/// Everything the HVAC layer reads from the parameter file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HvacConfig {
    pub rule: RuleTable,
    pub thresholds: StateThresholds,
    pub substate: SubstateRule,
    pub pid: PidGains,
    pub fw: FloorWallTable,
}

impl HvacConfig {
    pub fn validate(&self) -> Result<()> {
        self.rule.validate()?;
        self.pid.validate()?;
        self.fw.validate()
    }
}

/// Commands for one simulator step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HvacOutput {
    pub q_hvac: [f64; 3],
    pub q_fw: [f64; 3],
    pub outside_air: f64,
    pub state: HvacState,
    pub substate: HvacSubstate,
}

impl HvacOutput {
    /// Layout expected by the heat distribution matrix.
    pub fn q_in(&self) -> [f64; 6] {
        let [a, b, c] = self.q_hvac;
        let [d, e, f] = self.q_fw;
        [a, b, c, d, e, f]
    }
}

/// State machine plus PID memory for one coach.
#[derive(Clone, Debug, PartialEq)]
pub struct HvacController {
    config: HvacConfig,
    mode: HvacMode,
    state: HvacState,
    mem: PidMemory,
}

impl HvacController {
    pub fn new(config: HvacConfig, mode: HvacMode) -> Result<Self> {
        config.validate()?;
        Ok(HvacController {
            config,
            mode,
            state: HvacState::initial(mode),
            mem: PidMemory::default(),
        })
    }

    pub fn config(&self) -> &HvacConfig {
        &self.config
    }

    pub fn state(&self) -> HvacState {
        self.state
    }

    pub fn memory(&self) -> &PidMemory {
        &self.mem
    }

    pub fn set_mode(&mut self, mode: HvacMode) {
        if mode != self.mode {
            self.mode = mode;
            self.state = HvacState::initial(mode);
            self.mem.reset_integrators();
        }
    }

    pub fn setpoint(&self, t_amb: f64) -> f64 {
        self.config.rule.setpoint(t_amb)
    }

    pub fn step(
        &mut self,
        t_ref: f64,
        t_room: &[f64; 3],
        d: &DisturbanceSample,
        dt: f64,
    ) -> Result<HvacOutput> {
        let cfg = &self.config;
        let next = hvac_state_update(self.mode, self.state, t_room, t_ref, d.t_amb, &cfg.thresholds);
        if next != self.state {
            self.mem.reset_integrators();
            self.state = next;
        }
        let (q_hvac, mem) = pid_step(&cfg.pid, &self.mem, t_ref, t_room, dt, next)?;
        self.mem = mem;
        let substate = hvac_substate_update(next, t_room, d.t_amb, d.occupancy_pct, &cfg.substate);
        Ok(HvacOutput {
            q_hvac,
            q_fw: floor_wall_heating(next, d.t_amb, &cfg.fw),
            outside_air: substate.outside_air_fraction(),
            state: next,
            substate,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coach_sim::{Coach, CoachState};

    fn regulate(t_amb: f64, t_ref: f64, start: f64) -> f64 {
        let coach = Coach::default();
        let mut hvac = HvacController::new(HvacConfig::default(), HvacMode::Regular).unwrap();
        let d = DisturbanceSample::calm(t_amb);
        let mut x = CoachState::uniform(start);
        let dt = 10.0;
        for _ in 0..720 {
            let out = hvac.step(t_ref, &x.t_room, &d, dt).unwrap();
            x = coach.step_ventilated(&x, &out.q_in(), out.outside_air, &d, dt).unwrap();
        }
        x.t_room.iter().map(|t| (t - t_ref).abs()).sum::<f64>() / 3.0
    }

    #[test]
    fn closed_loop_reaches_setpoint_within_two_hours() {
        for (t_amb, start) in [(0.0, 12.0), (30.0, 30.0), (12.0, 18.0)] {
            let t_ref = RuleTable::default().setpoint(t_amb);
            let err = regulate(t_amb, t_ref, start);
            assert!(err < 0.5, "t_amb {t_amb}: mean error {err}");
        }
    }

    #[test]
    fn config_roundtrips_through_toml() {
        let cfg = HvacConfig::default();
        let s = toml::to_string(&cfg).unwrap();
        let back: HvacConfig = toml::from_str(&s).unwrap();
        assert_eq!(cfg, back);
    }
}
