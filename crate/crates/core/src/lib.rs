pub mod error;
pub mod fading;
pub mod linkbudget;
pub mod metrics;
pub mod montecarlo;
pub mod series;
pub mod specfun;

pub use error::{Error, Result};
pub use fading::{EtaMuParams, FadingModel, KappaMuParams};
pub use series::{Approach, Evaluation, Mode, SumDistribution, Terms, TruncationControl};
pub use specfun::SignedLogValue;
pub use metrics::{BinaryModulation, MaryFamily, MaryModulation, Metric};
pub use linkbudget::{LinkScenario, SweepTable, SweepVariable};
