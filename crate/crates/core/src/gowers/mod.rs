//! Box tensors `Δ^k f`, Gowers `U^k` norms, the `r_k(β)` rate and the
//! mollification-difference decay experiment.

mod box_tensor;
mod norms;
mod prop1;
mod rate;

pub use box_tensor::{
    box_tensor, box_tensor_recursive, box_value_direct, box_value_direct_flat,
    box_value_recursive, BoxTensor, MemoryBudget,
};
pub use norms::{uk_norm, uk_norm_spectral_u2, uk_norm_with, uk_power_streaming, UkMethod};
pub use prop1::{prop1_decay_check, GowersReport, Prop1Config};
pub(crate) use prop1::fitted_betas;
pub use rate::{positivity_threshold, r_k, RateInputs};
