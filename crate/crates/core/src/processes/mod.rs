//! Point-process domain types: spike trains, ages, kernels, intensity
//! models and distributions of the past.

mod func;
mod kernel;
mod model;
mod past;
mod train;

pub use func::{Envelope, RateFn, WoldRate};
pub use kernel::{Kernel, KernelForm, EXP_TAIL_TOLERANCE};
pub use model::{evaluate_intensity, IntensityModel, ModelKind};
pub use past::{PastDensity, PastSpec, PAST_DENSITY_NODES, PAST_TRUNCATION_MASS};
pub use train::{age_at, successive_ages, AgeState, SpikeTrain};
