use super::params::{Node, ThermalParams};
use super::{CoachState, DisturbanceSample};
use crate::error::{Error, Result};

const KELVIN: f64 = 273.15;

/// Projections of the global irradiation on the roof and on the side of
/// the train: `(|q_g cos α|, |q_g sin α sin(β − θ)|)`.
pub fn solar_components(q_g: f64, alpha: f64, beta: f64, theta: f64) -> (f64, f64) {
    let top = (q_g * alpha.cos()).abs();
    let side = (q_g * alpha.sin() * (beta - theta).sin()).abs();
    (top, side)
}

/// Heat flow into the lower chassis from the warm track bed, W. Zero unless
/// the ambient temperature exceeds the configured threshold.
pub fn ground_radiation(t_amb: f64, t_chassis_low: f64, params: &ThermalParams) -> f64 {
    if t_amb <= params.ground_threshold {
        return 0.0;
    }
    let tg = params.track_temperature(t_amb) + KELVIN;
    let tc = t_chassis_low + KELVIN;
    params.ground_emis_coeff * (tg.powi(4) - tc.powi(4))
}

/// Passenger heat per deck, W.
pub fn occupancy_heat(occupancy_pct: f64, params: &ThermalParams) -> Result<[f64; 3]> {
    if !(0.0..=1.0).contains(&occupancy_pct) {
        return Err(Error::invalid(
            "occupancy_pct",
            format!("{occupancy_pct} outside [0, 1]"),
        ));
    }
    let passengers = (occupancy_pct * f64::from(params.max_capacity)).round();
    let total = passengers * params.occupant_power;
    Ok(params.occupancy_split.map(|s| s * total))
}

/// Exchange through open doors into the lower deck, W.
pub fn door_exchange(t_amb: f64, t_room_low: f64, door_open: bool, params: &ThermalParams) -> f64 {
    if door_open {
        params.door_coeff * (t_amb - t_room_low)
    } else {
        0.0
    }
}

/// A two-node exchange as booked into the ledger.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairFlow {
    pub a: Node,
    pub b: Node,
    /// Heat into `a`, W.
    pub to_a: f64,
    /// Heat into `b`, W; always the exact negation of `to_a`.
    pub to_b: f64,
}

/// Every heat flow acting on the nine nodes, before division by m·c.
#[derive(Clone, Debug, PartialEq)]
pub struct HeatLedger {
    pub pairwise: Vec<PairFlow>,
    /// Flows from outside the node network (inputs and environment), W.
    pub external: [f64; 9],
}

impl HeatLedger {
    pub fn build(
        state: &CoachState,
        q_act: &[f64; 6],
        outside_air: f64,
        d: &DisturbanceSample,
        params: &ThermalParams,
    ) -> Self {
        let t = state.to_array();
        let mut pairwise = Vec::with_capacity(params.conv_coeff.len() + params.cond_coeff.len());
        for c in params.conv_coeff.iter().chain(&params.cond_coeff) {
            let to_a = c.value * (t[c.b.index()] - t[c.a.index()]);
            pairwise.push(PairFlow {
                a: c.a,
                b: c.b,
                to_a,
                to_b: -to_a,
            });
        }

        let mut ext = [0.0; 9];
        // delivered inputs: rooms then chassis
        for deck in 0..3 {
            ext[deck] += q_act[deck];
            ext[6 + deck] += q_act[3 + deck];
        }

        let speed = d.speed.max(0.0);
        let up = Node::ChassisUp.index();
        let low = Node::ChassisLow.index();
        ext[up] += (params.ext_conv_base[0] + params.ext_conv_speed_gain[0] * speed) * (d.t_amb - t[up]);
        ext[low] +=
            (params.ext_conv_base[1] + params.ext_conv_speed_gain[1] * speed) * (d.t_amb - t[low]);

        let (q_gt, q_gs) = solar_components(d.q_g, d.alpha, d.beta, d.theta);
        ext[up] += params.window_gain_top * q_gt;
        let side = params.window_gain_side * q_gs / 3.0;
        for e in &mut ext[..3] {
            *e += side;
        }

        ext[low] += ground_radiation(d.t_amb, t[low], params);

        let occ = occupancy_heat(d.occupancy_pct.clamp(0.0, 1.0), params)
            .expect("clamped occupancy is in range");
        let fresh = outside_air.clamp(0.0, 1.0) * params.vent_coeff;
        for deck in 0..3 {
            ext[deck] += occ[deck] + fresh * (d.t_amb - t[deck]);
        }

        ext[Node::RoomLow.index()] += door_exchange(d.t_amb, t[2], d.door_open, params);

        HeatLedger {
            pairwise,
            external: ext,
        }
    }

    /// Net heat into each node, W.
    pub fn net(&self) -> [f64; 9] {
        let mut net = self.external;
        for f in &self.pairwise {
            net[f.a.index()] += f.to_a;
            net[f.b.index()] += f.to_b;
        }
        net
    }
}

/// Temperature rates for all nine nodes, K/s.
pub fn state_derivative(
    state: &CoachState,
    q_act: &[f64; 6],
    outside_air: f64,
    d: &DisturbanceSample,
    params: &ThermalParams,
) -> [f64; 9] {
    let net = HeatLedger::build(state, q_act, outside_air, d, params).net();
    let mut rate = [0.0; 9];
    for node in Node::ALL {
        rate[node.index()] = net[node.index()] / params.heat_capacity_of(node);
    }
    rate
}
