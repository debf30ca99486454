use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One of the nine thermal nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    RoomUp,
    RoomMid,
    RoomLow,
    InvUp,
    InvMid,
    InvLow,
    ChassisUp,
    ChassisMid,
    ChassisLow,
}

impl Node {
    pub const ALL: [Node; 9] = [
        Node::RoomUp,
        Node::RoomMid,
        Node::RoomLow,
        Node::InvUp,
        Node::InvMid,
        Node::InvLow,
        Node::ChassisUp,
        Node::ChassisMid,
        Node::ChassisLow,
    ];

    /// Position in the flattened state vector.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Node::RoomUp => "room_up",
            Node::RoomMid => "room_mid",
            Node::RoomLow => "room_low",
            Node::InvUp => "inv_up",
            Node::InvMid => "inv_mid",
            Node::InvLow => "inv_low",
            Node::ChassisUp => "chassis_up",
            Node::ChassisMid => "chassis_mid",
            Node::ChassisLow => "chassis_low",
        }
    }

    pub fn is_chassis(self) -> bool {
        matches!(self, Node::ChassisUp | Node::ChassisMid | Node::ChassisLow)
    }
}

/// A value per (part, deck).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartValues {
    pub room: [f64; 3],
    pub inv: [f64; 3],
    pub chassis: [f64; 3],
}

impl PartValues {
    pub fn get(&self, node: Node) -> f64 {
        let i = node.index();
        match i / 3 {
            0 => self.room[i % 3],
            1 => self.inv[i % 3],
            _ => self.chassis[i % 3],
        }
    }

    fn all(&self) -> impl Iterator<Item = f64> + '_ {
        self.room.iter().chain(&self.inv).chain(&self.chassis).copied()
    }
}

/// A symmetric heat-exchange coefficient between two nodes, W/K.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub a: Node,
    pub b: Node,
    pub value: f64,
}

impl Coupling {
    pub const fn new(a: Node, b: Node, value: f64) -> Self {
        Coupling { a, b, value }
    }
}

/// Physical parameters of the half-coach. The shipped defaults are
/// placeholders: plausible magnitudes chosen for room-air time constants of
/// roughly ten minutes and chassis time constants of 1.5 to 3 hours.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalParams {
    /// kg
    pub mass: PartValues,
    /// J/(kg·K)
    pub heat_capacity: PartValues,
    /// Convective couplings, W/K.
    pub conv_coeff: Vec<Coupling>,
    /// Conductive couplings between chassis nodes, W/K.
    pub cond_coeff: Vec<Coupling>,
    /// Ambient convection for (upper, lower) chassis at standstill, W/K.
    pub ext_conv_base: [f64; 2],
    /// Speed sensitivity of ambient convection for (upper, lower) chassis,
    /// W/(K·m/s).
    pub ext_conv_speed_gain: [f64; 2],
    /// Effective absorbing roof area for the top solar component, m².
    pub window_gain_top: f64,
    /// Effective window area for the side solar component, m², split
    /// equally over the three decks.
    pub window_gain_side: f64,
    /// Lumped emissivity·σ·area for ground radiation, W/K⁴.
    pub ground_emis_coeff: f64,
    /// Ambient temperature above which the track radiates, °C.
    pub ground_threshold: f64,
    /// Track temperature map T_G = slope·T_amb + offset, °C.
    pub track_slope: f64,
    pub track_offset: f64,
    /// Open-door exchange with the lower deck, W/K.
    pub door_coeff: f64,
    /// Heat per passenger, W.
    pub occupant_power: f64,
    pub max_capacity: u32,
    /// Passenger share per deck (up, mid, low); sums to one.
    pub occupancy_split: [f64; 3],
    /// Fresh-air exchange per deck at full outside-air substate, W/K.
    pub vent_coeff: f64,
}

impl Default for ThermalParams {
    fn default() -> Self {
        use Node::*;
        ThermalParams {
            mass: PartValues {
                room: [150.0, 90.0, 150.0],
                inv: [500.0, 250.0, 500.0],
                chassis: [3000.0, 1500.0, 4000.0],
            },
            heat_capacity: PartValues {
                room: [1005.0; 3],
                inv: [1400.0; 3],
                chassis: [900.0; 3],
            },
            conv_coeff: vec![
                Coupling::new(RoomUp, RoomMid, 25.0),
                Coupling::new(RoomMid, RoomLow, 25.0),
                Coupling::new(RoomUp, RoomLow, 10.0),
                Coupling::new(RoomUp, InvUp, 80.0),
                Coupling::new(RoomMid, InvMid, 40.0),
                Coupling::new(RoomLow, InvLow, 80.0),
                Coupling::new(RoomUp, ChassisUp, 90.0),
                Coupling::new(RoomUp, ChassisMid, 40.0),
                Coupling::new(RoomMid, ChassisUp, 25.0),
                Coupling::new(RoomMid, ChassisLow, 35.0),
                Coupling::new(RoomLow, ChassisMid, 40.0),
                Coupling::new(RoomLow, ChassisLow, 90.0),
            ],
            cond_coeff: vec![
                Coupling::new(ChassisUp, ChassisMid, 40.0),
                Coupling::new(ChassisMid, ChassisLow, 40.0),
            ],
            ext_conv_base: [350.0, 300.0],
            ext_conv_speed_gain: [15.0, 12.0],
            window_gain_top: 6.0,
            window_gain_side: 4.0,
            ground_emis_coeff: 5.0e-7,
            ground_threshold: 20.0,
            track_slope: 1.0,
            track_offset: 10.0,
            door_coeff: 150.0,
            occupant_power: 100.0,
            max_capacity: 120,
            occupancy_split: [1.0 / 3.0; 3],
            vent_coeff: 60.0,
        }
    }
}

impl ThermalParams {
    pub fn heat_capacity_of(&self, node: Node) -> f64 {
        self.mass.get(node) * self.heat_capacity.get(node)
    }

    /// Track temperature for a given ambient temperature, °C.
    pub fn track_temperature(&self, t_amb: f64) -> f64 {
        self.track_slope * t_amb + self.track_offset
    }

    pub fn validate(&self) -> Result<()> {
        if self.mass.all().any(|m| !(m > 0.0) || !m.is_finite()) {
            return Err(Error::invalid("mass", "all masses must be strictly positive"));
        }
        if self.heat_capacity.all().any(|c| !(c > 0.0) || !c.is_finite()) {
            return Err(Error::invalid(
                "heat_capacity",
                "all heat capacities must be strictly positive",
            ));
        }
        for c in &self.conv_coeff {
            check_coupling("conv_coeff", c)?;
        }
        for c in &self.cond_coeff {
            check_coupling("cond_coeff", c)?;
            if !(c.a.is_chassis() && c.b.is_chassis()) {
                return Err(Error::invalid(
                    "cond_coeff",
                    format!("{}-{} is not a chassis pair", c.a.name(), c.b.name()),
                ));
            }
        }
        let scalars = [
            ("ext_conv_base", self.ext_conv_base[0]),
            ("ext_conv_base", self.ext_conv_base[1]),
            ("ext_conv_speed_gain", self.ext_conv_speed_gain[0]),
            ("ext_conv_speed_gain", self.ext_conv_speed_gain[1]),
            ("window_gain_top", self.window_gain_top),
            ("window_gain_side", self.window_gain_side),
            ("ground_emis_coeff", self.ground_emis_coeff),
            ("door_coeff", self.door_coeff),
            ("occupant_power", self.occupant_power),
            ("vent_coeff", self.vent_coeff),
        ];
        for (name, v) in scalars {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(name, "must be finite and nonnegative"));
            }
        }
        if !self.track_slope.is_finite() || !self.track_offset.is_finite() {
            return Err(Error::invalid("track_slope", "track map must be finite"));
        }
        let split_sum: f64 = self.occupancy_split.iter().sum();
        if self.occupancy_split.iter().any(|s| *s < 0.0) || (split_sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(
                "occupancy_split",
                "shares must be nonnegative and sum to one",
            ));
        }
        Ok(())
    }
}

fn check_coupling(name: &str, c: &Coupling) -> Result<()> {
    if c.a == c.b {
        return Err(Error::invalid(name, format!("self-coupling on {}", c.a.name())));
    }
    if !(c.value >= 0.0) || !c.value.is_finite() {
        return Err(Error::invalid(
            name,
            format!("{}-{} must be nonnegative", c.a.name(), c.b.name()),
        ));
    }
    Ok(())
}

/// Column-stochastic map from the six commanded heat inputs
/// (HVAC up/mid/low, floor-wall up/mid/low) to the six actually delivered
/// inputs (room up/mid/low, chassis up/mid/low).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatDistribution {
    /// Row-major; entry [i][j] is the share of input j delivered to channel i.
    pub lambda: [[f64; 6]; 6],
}

impl HeatDistribution {
    pub fn identity() -> Self {
        let mut lambda = [[0.0; 6]; 6];
        for (i, row) in lambda.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        HeatDistribution { lambda }
    }

    pub fn validate(&self) -> Result<()> {
        for j in 0..6 {
            let mut sum = 0.0;
            for i in 0..6 {
                let v = self.lambda[i][j];
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::invalid(
                        "lambda",
                        format!("entry ({i},{j}) = {v} outside [0, 1]"),
                    ));
                }
                sum += v;
            }
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::invalid(
                    "lambda",
                    format!("column {j} sums to {sum}, expected 1"),
                ));
            }
        }
        Ok(())
    }

    pub fn apply(&self, q_in: &[f64; 6]) -> [f64; 6] {
        let mut out = [0.0; 6];
        for (i, row) in self.lambda.iter().enumerate() {
            out[i] = row.iter().zip(q_in).map(|(l, q)| l * q).sum();
        }
        out
    }
}

impl Default for HeatDistribution {
    /// Most HVAC heat reaches its own deck, with duct losses to
    /// the adjacent chassis; floor/wall heating splits between the deck and
    /// the floor it is embedded in.
    fn default() -> Self {
        HeatDistribution {
            lambda: [
                [0.80, 0.05, 0.00, 0.50, 0.00, 0.00],
                [0.05, 0.85, 0.05, 0.00, 0.50, 0.00],
                [0.00, 0.05, 0.80, 0.00, 0.00, 0.50],
                [0.15, 0.00, 0.00, 0.00, 0.00, 0.00],
                [0.00, 0.05, 0.00, 0.50, 0.00, 0.00],
                [0.00, 0.00, 0.15, 0.00, 0.50, 0.50],
            ],
        }
    }
}
