use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Piecewise-linear lookup over strictly increasing knots, clamped to the
/// end values outside the knot range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Piecewise {
    pub knots: Vec<(f64, f64)>,
}

impl Piecewise {
    pub fn new(knots: Vec<(f64, f64)>) -> Self {
        Piecewise { knots }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        if self.knots.is_empty() {
            return Err(Error::Config(format!("{name}: table has no breakpoints")));
        }
        if self.knots.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::Config(format!("{name}: non-finite breakpoint")));
        }
        if self.knots.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Config(format!(
                "{name}: breakpoints must be strictly increasing"
            )));
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        let k = &self.knots;
        if x <= k[0].0 {
            return k[0].1;
        }
        if x >= k[k.len() - 1].0 {
            return k[k.len() - 1].1;
        }
        let i = k.partition_point(|(kx, _)| *kx <= x);
        let (x0, y0) = k[i - 1];
        let (x1, y1) = k[i];
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }
}

/// Ambient temperature → rule-based setpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleTable {
    pub breakpoints: Piecewise,
}

impl Default for RuleTable {
    /// Placeholder rule curve.
    fn default() -> Self {
        RuleTable {
            breakpoints: Piecewise::new(vec![
                (-20.0, 20.0),
                (5.0, 21.0),
                (15.0, 22.0),
                (25.0, 24.0),
                (35.0, 26.0),
            ]),
        }
    }
}

impl RuleTable {
    pub fn new(breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        let table = RuleTable {
            breakpoints: Piecewise::new(breakpoints),
        };
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<()> {
        self.breakpoints.validate("rule table")?;
        if self.breakpoints.knots.windows(2).any(|w| w[1].1 < w[0].1) {
            return Err(Error::Config(
                "rule table: setpoints must be non-decreasing".into(),
            ));
        }
        Ok(())
    }

    pub fn setpoint(&self, t_amb: f64) -> f64 {
        self.breakpoints.eval(t_amb)
    }
}

/// Rule-based setpoint for an ambient temperature.
pub fn rule_based_setpoint(t_amb: f64, table: &RuleTable) -> Result<f64> {
    table.validate()?;
    Ok(table.setpoint(t_amb))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn knots_clamp_and_midpoint() {
        let t = RuleTable::default();
        assert_eq!(t.setpoint(15.0), 22.0);
        assert_eq!(t.setpoint(-40.0), 20.0);
        assert_eq!(t.setpoint(50.0), 26.0);
        assert!((t.setpoint(10.0) - 21.5).abs() < 1e-12);
    }

    #[test]
    fn empty_table_is_config_error() {
        let t = RuleTable {
            breakpoints: Piecewise::new(vec![]),
        };
        assert!(matches!(rule_based_setpoint(0.0, &t), Err(Error::Config(_))));
    }

    #[test]
    fn decreasing_setpoints_rejected() {
        assert!(RuleTable::new(vec![(0.0, 22.0), (10.0, 21.0)]).is_err());
        assert!(RuleTable::new(vec![(0.0, 22.0), (0.0, 23.0)]).is_err());
    }

    proptest! {
        #[test]
        fn rule_is_non_decreasing(a in -50.0f64..50.0, b in -50.0f64..50.0) {
            let t = RuleTable::default();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(t.setpoint(lo) <= t.setpoint(hi));
        }
    }
}
