#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision, clippy::should_implement_trait)]

pub mod correlation;
pub mod data;
pub mod error;
pub mod glasso;
pub mod numeric;
pub mod selection;
pub mod network;
pub mod pipeline;
pub mod bootstrap;
pub mod simulator;
