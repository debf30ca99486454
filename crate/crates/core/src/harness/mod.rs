//! Closed-loop experiments: scenario files, disturbance schedules, the
//! simulated coach under HVAC and DDPC control, energy accounting, A/B
//! comparison and reports.

mod energy;
mod params;
mod report;
mod run;
mod scenario;
mod schedule;
mod synth;

pub use energy::{compare, energy_account, savings_pct, Bucket, CompareOptions, Comparison, EnergyModel};
pub use params::ParamFile;
pub use report::emit_report;
pub use run::{run_closed_loop, LogRow, Plant, RunLog};
pub use scenario::{RunMode, Scenario, ScenarioConfig};
pub use schedule::{Profile, Schedule};
pub use synth::{generate_training, raw_records, train_model, TrainingSpec};
