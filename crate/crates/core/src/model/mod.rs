//! Domain types: rate laws, generators, clock and service laws, model specs.

pub mod generator;
pub mod laws;
pub mod rates;
pub mod spec;

pub use generator::Generator;
pub use laws::{ClockLaw, PositiveLaw, ServiceLaw};
pub use rates::{Atom, RateLawFinite, RateLawGeneral, RateMoments};
pub use spec::{
    load_model_spec, parse_model_spec, EndogenousSpec, GeneralResampledSpec, MMQueueSpec, ModelDescriptor,
    ModelFile, ModelKind, ResampledSpec,
};
