use serde::{Deserialize, Serialize};

use super::state::HvacState;
use crate::error::{Error, Result};

/// PID gains and limits for one deck.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeckPid {
    /// W/K
    pub kp: f64,
    /// W/(K·s)
    pub ki: f64,
    /// W·s/K
    pub kd: f64,
    /// W; nonpositive.
    pub q_min: f64,
    /// W; nonnegative.
    pub q_max: f64,
    /// W/s
    pub rate_limit: f64,
    /// Back-calculation gain, K/W. Defaults to 1/kp.
    #[serde(default)]
    pub anti_windup: Option<f64>,
}

impl Default for DeckPid {
    fn default() -> Self {
        DeckPid {
            kp: 2000.0,
            ki: 3.0,
            kd: 0.0,
            q_min: -8000.0,
            q_max: 8000.0,
            rate_limit: 200.0,
            anti_windup: None,
        }
    }
}

impl DeckPid {
    pub fn back_calculation_gain(&self) -> f64 {
        match self.anti_windup {
            Some(k) => k,
            None if self.kp > 0.0 => 1.0 / self.kp,
            None => 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q_min <= 0.0 && 0.0 <= self.q_max) {
            return Err(Error::invalid("pid", "limits must satisfy q_min <= 0 <= q_max"));
        }
        if !(self.rate_limit > 0.0) {
            return Err(Error::invalid("pid", "rate limit must be positive"));
        }
        if [self.kp, self.ki, self.kd].iter().any(|g| !g.is_finite()) {
            return Err(Error::invalid("pid", "gains must be finite"));
        }
        Ok(())
    }

    /// Output limits under the given HVAC state.
    pub fn limits(&self, state: HvacState) -> (f64, f64) {
        use HvacState::*;
        match state {
            Preheating | Heating | ActiveHeating => (self.q_min.max(0.0), self.q_max),
            Precooling | Cooling | ActiveCooling => (self.q_min, self.q_max.min(0.0)),
            Mixed => (self.q_min, self.q_max),
            ActiveVentilation | OffState => (0.0, 0.0),
        }
    }
}

/// Gains for (up, mid, low).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PidGains {
    pub up: DeckPid,
    pub mid: DeckPid,
    pub low: DeckPid,
}

impl Default for PidGains {
    fn default() -> Self {
        let mid = DeckPid {
            kp: 1200.0,
            ki: 1.8,
            q_min: -5000.0,
            q_max: 5000.0,
            ..DeckPid::default()
        };
        PidGains {
            up: DeckPid::default(),
            mid,
            low: DeckPid::default(),
        }
    }
}

impl PidGains {
    pub fn decks(&self) -> [&DeckPid; 3] {
        [&self.up, &self.mid, &self.low]
    }

    pub fn validate(&self) -> Result<()> {
        self.decks().iter().try_for_each(|d| d.validate())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PidMemory {
    /// K·s
    pub integrator: [f64; 3],
    /// K
    pub prev_error: [f64; 3],
    /// W
    pub prev_output: [f64; 3],
}

impl PidMemory {
    pub fn reset_integrators(&mut self) {
        self.integrator = [0.0; 3];
    }
}

/// One PID update per deck: saturation to the state-dependent limits, rate
/// limiting against the previous output, and back-calculation anti-windup.
pub fn pid_step(
    gains: &PidGains,
    mem: &PidMemory,
    t_ref: f64,
    t_room: &[f64; 3],
    dt: f64,
    state: HvacState,
) -> Result<([f64; 3], PidMemory)> {
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", "time step must be positive"));
    }
    let mut out = [0.0; 3];
    let mut next = *mem;
    for (i, g) in gains.decks().into_iter().enumerate() {
        let e = t_ref - t_room[i];
        let de = (e - mem.prev_error[i]) / dt;
        let raw = g.kp * e + g.ki * mem.integrator[i] + g.kd * de;
        let (lo, hi) = g.limits(state);
        let step = g.rate_limit * dt;
        let prev = mem.prev_output[i];
        let applied = raw.clamp(lo, hi).clamp(prev - step, prev + step).clamp(lo, hi);
        next.integrator[i] = mem.integrator[i] + dt * (e + g.back_calculation_gain() * (applied - raw));
        next.prev_error[i] = e;
        next.prev_output[i] = applied;
        out[i] = applied;
    }
    Ok((out, next))
}
