//! Forward model: background fields, the transmission solve and simulated
//! boundary measurements.

mod background;
mod measure;
mod transmission;

pub use background::{background_fields, BackgroundField, SourceConfig};
pub use measure::{add_noise, measure, MeasurementConfig, MeasurementSet};
pub use transmission::{
    solve_transmission, FieldSamples, ForwardOptions, ForwardSolution, NodePolicy,
};
