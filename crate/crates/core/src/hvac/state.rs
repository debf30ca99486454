use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HvacMode {
    Regular,
    Slumber,
    Off,
}

impl HvacMode {
    pub fn as_str(self) -> &'static str {
        match self {
            HvacMode::Regular => "Regular",
            HvacMode::Slumber => "Slumber",
            HvacMode::Off => "Off",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "regular" => Some(HvacMode::Regular),
            "slumber" => Some(HvacMode::Slumber),
            "off" => Some(HvacMode::Off),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HvacState {
    Preheating,
    Precooling,
    Heating,
    Cooling,
    Mixed,
    ActiveHeating,
    ActiveVentilation,
    ActiveCooling,
    OffState,
}

impl HvacState {
    pub fn is_admissible(self, mode: HvacMode) -> bool {
        use HvacState::*;
        match mode {
            HvacMode::Regular => matches!(self, Preheating | Precooling | Heating | Cooling | Mixed),
            HvacMode::Slumber => {
                matches!(self, ActiveHeating | ActiveVentilation | ActiveCooling | OffState)
            }
            HvacMode::Off => self == OffState,
        }
    }

    pub fn initial(mode: HvacMode) -> Self {
        match mode {
            HvacMode::Regular => HvacState::Heating,
            HvacMode::Slumber | HvacMode::Off => HvacState::OffState,
        }
    }

    pub fn as_str(self) -> &'static str {
        use HvacState::*;
        match self {
            Preheating => "Preheating",
            Precooling => "Precooling",
            Heating => "Heating",
            Cooling => "Cooling",
            Mixed => "Mixed",
            ActiveHeating => "ActiveHeating",
            ActiveVentilation => "ActiveVentilation",
            ActiveCooling => "ActiveCooling",
            OffState => "OffState",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        use HvacState::*;
        [
            Preheating,
            Precooling,
            Heating,
            Cooling,
            Mixed,
            ActiveHeating,
            ActiveVentilation,
            ActiveCooling,
            OffState,
        ]
        .into_iter()
        .find(|v| v.as_str() == s)
    }
}

/// Air source selected by the substate logic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum HvacSubstate {
    Circulated,
    Outside,
    /// Fraction of outside air in (0, 1).
    Mixed(f64),
}

impl HvacSubstate {
    pub fn outside_air_fraction(self) -> f64 {
        match self {
            HvacSubstate::Circulated => 0.0,
            HvacSubstate::Outside => 1.0,
            HvacSubstate::Mixed(f) => f,
        }
    }
}

/// Switching thresholds of the state machine, all in K.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StateThresholds {
    /// Mean room temperature this far from the setpoint triggers
    /// preheating or precooling.
    pub pre_band: f64,
    /// Pre-states are left once the mean error falls below this.
    pub pre_exit: f64,
    /// Heating/cooling switch hysteresis.
    pub hysteresis: f64,
    /// Deck errors of opposite sign spanning more than this select Mixed.
    pub mixed_spread: f64,
    /// Slumber mode: error beyond which active heating/cooling starts.
    pub slumber_band: f64,
}

impl Default for StateThresholds {
    fn default() -> Self {
        StateThresholds {
            pre_band: 3.0,
            pre_exit: 1.0,
            hysteresis: 0.5,
            mixed_spread: 1.0,
            slumber_band: 2.0,
        }
    }
}

/// Outside-air fraction grows linearly with occupancy between two levels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubstateRule {
    pub occupancy_low: f64,
    pub occupancy_high: f64,
}

impl Default for SubstateRule {
    fn default() -> Self {
        SubstateRule {
            occupancy_low: 0.1,
            occupancy_high: 0.8,
        }
    }
}

/// Next HVAC state from the current one and the measured temperatures.
pub fn hvac_state_update(
    mode: HvacMode,
    state: HvacState,
    t_room: &[f64; 3],
    t_ref: f64,
    t_amb: f64,
    th: &StateThresholds,
) -> HvacState {
    use HvacState::*;
    let mean = t_room.iter().sum::<f64>() / 3.0;
    let e = t_ref - mean;
    match mode {
        HvacMode::Off => OffState,
        HvacMode::Regular => {
            if e > th.pre_band {
                return Preheating;
            }
            if e < -th.pre_band {
                return Precooling;
            }
            if state == Preheating && e > th.pre_exit {
                return Preheating;
            }
            if state == Precooling && e < -th.pre_exit {
                return Precooling;
            }
            let errs = t_room.map(|t| t_ref - t);
            let hi = errs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = errs.iter().copied().fold(f64::INFINITY, f64::min);
            let opposed = hi > 0.0 && lo < 0.0;
            let spread = hi - lo;
            if opposed && spread > th.mixed_spread {
                return Mixed;
            }
            if state == Mixed && opposed && spread > 0.5 * th.mixed_spread {
                return Mixed;
            }
            match state {
                Heating if e < -th.hysteresis => Cooling,
                Heating => Heating,
                Cooling if e > th.hysteresis => Heating,
                Cooling => Cooling,
                _ if e >= 0.0 => Heating,
                _ => Cooling,
            }
        }
        HvacMode::Slumber => {
            if e > th.slumber_band {
                ActiveHeating
            } else if e < -th.slumber_band {
                ActiveCooling
            } else if state == ActiveHeating && e > 0.0 {
                ActiveHeating
            } else if state == ActiveCooling && e < 0.0 {
                ActiveCooling
            } else if e < 0.0 && t_amb < mean && (t_amb - t_ref).abs() < th.slumber_band {
                ActiveVentilation
            } else {
                OffState
            }
        }
    }
}

/// Air-source selection for the given state and occupancy.
pub fn hvac_substate_update(
    state: HvacState,
    _t_room: &[f64; 3],
    _t_amb: f64,
    occupancy_pct: f64,
    rule: &SubstateRule,
) -> HvacSubstate {
    match state {
        HvacState::OffState => HvacSubstate::Circulated,
        HvacState::ActiveVentilation => HvacSubstate::Outside,
        _ => {
            let span = (rule.occupancy_high - rule.occupancy_low).max(f64::EPSILON);
            let f = ((occupancy_pct - rule.occupancy_low) / span).clamp(0.0, 1.0);
            if f <= 0.0 {
                HvacSubstate::Circulated
            } else if f >= 1.0 {
                HvacSubstate::Outside
            } else {
                HvacSubstate::Mixed(f)
            }
        }
    }
}
