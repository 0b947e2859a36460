//! Weighted fractional Sobolev norms on dyadic shells and their direct
//! quadrature relatives.

pub mod hs;
pub mod integer;
pub mod partition;
pub mod weighted;

pub use hs::{hs_norm, hs_norm_radial, HsNorm};
pub use integer::{
    l2_delta_field, l2_delta_norm, weighted_norm_integer, weighted_norm_integer_field,
    weighted_sup_field, weighted_sup_norm,
};
pub use partition::DyadicPartition;
pub use weighted::{
    weighted_inner_product, weighted_inner_product_fields, weighted_norm, weighted_norm_field,
    weighted_norm_fields, InnerProduct, NormBreakdown, ShellEngine, ShellSpectra, WeightedNormSpec,
};
