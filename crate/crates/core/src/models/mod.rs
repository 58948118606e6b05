//! Benchmark models built on the agent kernels.

pub mod finance;
pub mod predation;
pub mod traffic;

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::field::Scalar;
use crate::kernels::PairingKernel;

pub(crate) fn parse_kv<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
}

pub(crate) fn parse_kernel(value: &str) -> Result<PairingKernel> {
    match value.trim() {
        "rm" | "rank_match" => Ok(PairingKernel::RankMatch),
        "sci" | "sort_count_iterate" => Ok(PairingKernel::SortCountIterate),
        other => Err(Error::Config(format!("unknown kernel `{other}` (expected rm or sci)"))),
    }
}

/// Conversion from an override scalar into a config field.
pub(crate) trait FromScalar: Sized {
    fn from_scalar(v: Scalar) -> Option<Self>;
}

impl FromScalar for f64 {
    fn from_scalar(v: Scalar) -> Option<Self> {
        match v {
            Scalar::Real(x) => Some(x),
            Scalar::Int(x) => Some(x as f64),
            Scalar::Bool(_) => None,
        }
    }
}

impl FromScalar for i64 {
    fn from_scalar(v: Scalar) -> Option<Self> {
        match v {
            Scalar::Int(x) => Some(x),
            _ => None,
        }
    }
}

impl FromScalar for usize {
    fn from_scalar(v: Scalar) -> Option<Self> {
        match v {
            Scalar::Int(x) if x >= 0 => Some(x as usize),
            _ => None,
        }
    }
}

pub(crate) fn apply_override<T: FromScalar>(slot: &mut T, name: &str, v: Scalar) -> Result<()> {
    *slot = T::from_scalar(v).ok_or_else(|| Error::Config(format!("invalid override {v:?} for `{name}`")))?;
    Ok(())
}
