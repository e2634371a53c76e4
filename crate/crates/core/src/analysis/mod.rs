//! Closed-form throughput and detection-error formulas, plus the simulation
//! studies that check them.

mod fusion;
mod montecarlo;
mod sweep;

pub use fusion::{
    fusion_gain_experiment, max_distance_ratio, recovery_fractions, FusionRow, FusionStudy,
    FusionSummary, MaxDistance,
};
pub use montecarlo::{
    der_camera, der_study, monte_carlo_der, monte_carlo_skip, wilson_interval, DerEstimate, DerRow,
};
pub use sweep::{
    overhead_chips, sweep_frequency, sweep_report, table8_comparison, write_sweep_csv, SweepRow,
    SweepStatus, Table8Row, DEFAULT_FREQUENCIES,
};

use num_integer::Integer;
use thiserror::Error;

use crate::rll::RllScheme;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error("payload budget is not positive: {0}")]
    NonPositiveBudget(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("experiment has no trials")]
    NoTrials,
}

/// Recordable OOK states per image: the smallest integer strictly above `0.0311·f`.
pub fn symbols_per_image(f_hz: u64) -> u64 {
    Integer::div_floor(&(311 * f_hz), &10_000) + 1
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThroughputInputs<T> {
    pub scheme: RllScheme,
    /// L: recordable states per image.
    pub symbols_per_image: T,
    /// L_symbol: payload states per image.
    pub symbol_payload: T,
    /// OH: SF and Ab chips per image.
    pub overhead: T,
    /// N_frame: sub-packets captured per image.
    pub subpackets_per_image: T,
    pub min_frame_rate: T,
    pub packet_rate: T,
    /// R′: packet rate enabled by missed-payload detection.
    pub detect_packet_rate: T,
    /// Error-correction overhead per sub-frame.
    pub correction_overhead: T,
}

impl<T: Scalar> ThroughputInputs<T> {
    /// Inputs with `L_symbol = L`, `N_frame = 1`, `R′ = R` and no correction overhead.
    pub fn new(
        scheme: RllScheme,
        symbols_per_image: T,
        overhead: T,
        min_frame_rate: T,
        packet_rate: T,
    ) -> Self {
        Self {
            scheme,
            symbols_per_image,
            symbol_payload: symbols_per_image,
            overhead,
            subpackets_per_image: T::one(),
            min_frame_rate,
            packet_rate,
            detect_packet_rate: packet_rate,
            correction_overhead: T::zero(),
        }
    }

    fn check_rates(&self) -> Result<(), AnalysisError> {
        let z = T::zero();
        if self.min_frame_rate <= z || self.packet_rate <= z || self.subpackets_per_image <= z {
            return Err(AnalysisError::InvalidInput(format!(
                "rates and N_frame must be positive (fps {:?}, packets/s {:?}, N_frame {:?})",
                self.min_frame_rate, self.packet_rate, self.subpackets_per_image
            )));
        }
        Ok(())
    }
}

/// `η·(L/N_frame − OH)·R_frame,min`.
pub fn bit_rate_limit<T: Scalar>(inputs: &ThroughputInputs<T>) -> Result<T, AnalysisError> {
    inputs.check_rates()?;
    let budget = inputs.symbols_per_image / inputs.subpackets_per_image - inputs.overhead;
    if budget <= T::zero() {
        return Err(AnalysisError::NonPositiveBudget(format!(
            "L/N_frame = {:?} does not exceed OH = {:?}",
            (inputs.symbols_per_image / inputs.subpackets_per_image),
            inputs.overhead
        )));
    }
    Ok(inputs.scheme.efficiency::<T>() * budget * inputs.min_frame_rate)
}

fn symbol_budget<T: Scalar>(inputs: &ThroughputInputs<T>) -> Result<T, AnalysisError> {
    inputs.check_rates()?;
    let budget = inputs.symbol_payload - inputs.overhead;
    if budget <= T::zero() {
        return Err(AnalysisError::NonPositiveBudget(format!(
            "L_symbol = {:?} does not exceed OH = {:?}",
            inputs.symbol_payload, inputs.overhead
        )));
    }
    Ok(budget)
}

/// `η·(L_symbol − OH)·R_packet`; repetitions of a packet add nothing.
pub fn throughput_packet<T: Scalar>(inputs: &ThroughputInputs<T>) -> Result<T, AnalysisError> {
    Ok(inputs.scheme.efficiency::<T>() * symbol_budget(inputs)? * inputs.packet_rate)
}

/// `η·(L_symbol − OH)·R′_packet − OH_error_correction`.
pub fn throughput_with_detection<T: Scalar>(
    inputs: &ThroughputInputs<T>,
) -> Result<T, AnalysisError> {
    if inputs.detect_packet_rate < inputs.packet_rate {
        return Err(AnalysisError::InvalidInput(format!(
            "R′ = {:?} is below R = {:?}",
            inputs.detect_packet_rate, inputs.packet_rate
        )));
    }
    Ok(
        inputs.scheme.efficiency::<T>() * symbol_budget(inputs)? * inputs.detect_packet_rate
            - inputs.correction_overhead,
    )
}

/// Probability that a sampling instant overruns by more than the detectable
/// window, for packet length `t` and excess interval `delta`.
///
/// `Δ/(24T)` while `Δ < T`; `(Δ − T/2)/(12Δ)` beyond, which meets the first
/// branch at `Δ = T`.
pub fn skip_probability<T: Scalar>(t: T, delta: T) -> Result<T, AnalysisError> {
    if t <= T::zero() || delta < T::zero() {
        return Err(AnalysisError::InvalidInput(format!(
            "need T > 0 and Δ ≥ 0, got T = {t:?}, Δ = {delta:?}"
        )));
    }
    if delta == T::zero() {
        return Ok(T::zero());
    }
    if delta < t {
        Ok(delta / (T::from_int(24) * t))
    } else {
        Ok((delta - t / T::from_int(2)) / (T::from_int(12) * delta))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerInputs<T> {
    pub packet_rate: T,
    pub mean_frame_rate: T,
    /// Lowest instantaneous frame rate.
    pub min_frame_rate: T,
}

/// Detection error rate: zero when the frame rate never drops below a quarter
/// of the packet rate, else `(R_packet − R̄_frame)/(24·R_packet²)` (never negative).
pub fn der<T: Scalar>(inputs: &DerInputs<T>) -> Result<T, AnalysisError> {
    let z = T::zero();
    if inputs.packet_rate <= z || inputs.mean_frame_rate <= z || inputs.min_frame_rate < z {
        return Err(AnalysisError::InvalidInput(format!(
            "rates must be positive: {inputs:?}"
        )));
    }
    if T::from_int(4) * inputs.min_frame_rate >= inputs.packet_rate {
        return Ok(z);
    }
    let num = inputs.packet_rate - inputs.mean_frame_rate;
    if num <= z {
        return Ok(z);
    }
    Ok(num / (T::from_int(24) * inputs.packet_rate * inputs.packet_rate))
}
