//! Lumped thermal model of one half-coach.
//!
//! Nine capacitive nodes: room air, inventory (seats, panels) and chassis,
//! each for the upper, middle and lower level. Heat moves between nodes by
//! convection and conduction, enters from the HVAC and floor/wall heating
//! through the heat-distribution matrix, and from the environment through
//! ambient convection, solar gains, ground radiation, passengers and open
//! doors. Integration is fixed-step RK4 with inputs held over the step.

mod flows;
mod params;

pub use flows::{
    door_exchange, ground_radiation, occupancy_heat, solar_components, state_derivative,
    HeatLedger, PairFlow,
};
pub use params::{Coupling, HeatDistribution, Node, PartValues, ThermalParams};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower/upper limit of the physical sanity band in °C.
pub const SANITY_BAND: (f64, f64) = (-60.0, 100.0);

/// Nine node temperatures in °C, ordered (up, mid, low) within each part.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoachState {
    pub t_room: [f64; 3],
    pub t_inv: [f64; 3],
    pub t_chassis: [f64; 3],
}

impl CoachState {
    pub fn uniform(t: f64) -> Self {
        CoachState {
            t_room: [t; 3],
            t_inv: [t; 3],
            t_chassis: [t; 3],
        }
    }

    /// Steady-state guess from room temperatures only: inventory at room
    /// temperature, chassis halfway between the room average and ambient.
    pub fn from_room_estimate(t_room: [f64; 3], t_amb: f64) -> Self {
        let avg = t_room.iter().sum::<f64>() / 3.0;
        CoachState {
            t_room,
            t_inv: t_room,
            t_chassis: [0.5 * (avg + t_amb); 3],
        }
    }

    pub fn to_array(&self) -> [f64; 9] {
        let mut out = [0.0; 9];
        out[..3].copy_from_slice(&self.t_room);
        out[3..6].copy_from_slice(&self.t_inv);
        out[6..].copy_from_slice(&self.t_chassis);
        out
    }

    pub fn from_array(a: [f64; 9]) -> Self {
        CoachState {
            t_room: [a[0], a[1], a[2]],
            t_inv: [a[3], a[4], a[5]],
            t_chassis: [a[6], a[7], a[8]],
        }
    }

    pub fn mean_room(&self) -> f64 {
        self.t_room.iter().sum::<f64>() / 3.0
    }

    /// Rejects non-finite entries and anything outside [`SANITY_BAND`].
    pub fn validate(&self) -> Result<()> {
        for (i, v) in self.to_array().into_iter().enumerate() {
            if !v.is_finite() || v < SANITY_BAND.0 || v > SANITY_BAND.1 {
                return Err(Error::Integration {
                    node: Node::ALL[i].name(),
                    value: v,
                });
            }
        }
        Ok(())
    }
}

/// Environmental conditions at one instant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceSample {
    /// Ambient temperature, °C.
    pub t_amb: f64,
    /// Global irradiation, W/m².
    pub q_g: f64,
    /// Solar elevation, rad.
    pub alpha: f64,
    /// Solar azimuth, rad.
    pub beta: f64,
    /// Train heading, rad.
    pub theta: f64,
    /// Fraction of the maximum passenger capacity, in [0, 1].
    pub occupancy_pct: f64,
    /// Train speed, m/s.
    pub speed: f64,
    pub door_open: bool,
}

impl DisturbanceSample {
    /// No sun, no passengers, standing still, doors closed.
    pub fn calm(t_amb: f64) -> Self {
        DisturbanceSample {
            t_amb,
            q_g: 0.0,
            alpha: 0.0,
            beta: 0.0,
            theta: 0.0,
            occupancy_pct: 0.0,
            speed: 0.0,
            door_open: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.t_amb,
            self.q_g,
            self.alpha,
            self.beta,
            self.theta,
            self.occupancy_pct,
            self.speed,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("disturbance", "non-finite entry"));
        }
        if self.q_g < 0.0 {
            return Err(Error::invalid("q_g", "irradiation must be nonnegative"));
        }
        if !(0.0..=1.0).contains(&self.occupancy_pct) {
            return Err(Error::invalid("occupancy_pct", "must lie in [0, 1]"));
        }
        if self.speed < 0.0 {
            return Err(Error::invalid("speed", "must be nonnegative"));
        }
        Ok(())
    }

    /// The five-channel disturbance used by the predictor:
    /// (T_amb, Q_Gt, Q_Gs, P, V).
    pub fn features(&self) -> [f64; 5] {
        let (q_gt, q_gs) = solar_components(self.q_g, self.alpha, self.beta, self.theta);
        [self.t_amb, q_gt, q_gs, self.occupancy_pct, self.speed]
    }
}

/// Validated parameter bundle for stepping the coach model.
#[derive(Clone, Debug, PartialEq)]
pub struct Coach {
    params: ThermalParams,
    dist: HeatDistribution,
}

impl Coach {
    pub fn new(params: ThermalParams, dist: HeatDistribution) -> Result<Self> {
        params.validate()?;
        dist.validate()?;
        Ok(Coach { params, dist })
    }

    pub fn params(&self) -> &ThermalParams {
        &self.params
    }

    pub fn distribution(&self) -> &HeatDistribution {
        &self.dist
    }

    pub fn derivative(
        &self,
        state: &CoachState,
        q_in: &[f64; 6],
        outside_air: f64,
        d: &DisturbanceSample,
    ) -> [f64; 9] {
        let q_act = self.dist.apply(q_in);
        state_derivative(state, &q_act, outside_air, d, &self.params)
    }

    /// One RK4 step with recirculated air only.
    pub fn step(
        &self,
        state: &CoachState,
        q_in: &[f64; 6],
        d: &DisturbanceSample,
        dt: f64,
    ) -> Result<CoachState> {
        self.step_ventilated(state, q_in, 0.0, d, dt)
    }

    /// One RK4 step where `outside_air` is the fresh-air fraction selected
    /// by the HVAC substate.
    pub fn step_ventilated(
        &self,
        state: &CoachState,
        q_in: &[f64; 6],
        outside_air: f64,
        d: &DisturbanceSample,
        dt: f64,
    ) -> Result<CoachState> {
        if !(dt > 0.0) {
            return Err(Error::invalid("dt", "time step must be positive"));
        }
        let x0 = state.to_array();
        let f = |x: &[f64; 9]| self.derivative(&CoachState::from_array(*x), q_in, outside_air, d);
        let axpy = |x: &[f64; 9], k: &[f64; 9], h: f64| {
            let mut out = *x;
            for i in 0..9 {
                out[i] += h * k[i];
            }
            out
        };
        let k1 = f(&x0);
        let k2 = f(&axpy(&x0, &k1, 0.5 * dt));
        let k3 = f(&axpy(&x0, &k2, 0.5 * dt));
        let k4 = f(&axpy(&x0, &k3, dt));
        let mut x1 = x0;
        for i in 0..9 {
            x1[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let next = CoachState::from_array(x1);
        next.validate()?;
        Ok(next)
    }
}

impl Default for Coach {
    fn default() -> Self {
        Coach::new(ThermalParams::default(), HeatDistribution::default())
            .expect("shipped defaults are valid")
    }
}
