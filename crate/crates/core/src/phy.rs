//! Single-path line-of-sight mmWave channel for a uniform linear array.
//!
//! A gNB with `M` elements reaches user `u` through
//! `h = a(θ) · α / (√L · (1 + d^η))`, where `a(θ)` is the array steering
//! vector at the angle of departure. Beams use matched (conjugate) analog
//! weights pointed at a cluster direction.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::units;

pub type C64 = Complex<f64>;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct PhyConfig {
    pub num_antennas: usize,
    /// Element spacing over wavelength, D/λ.
    pub antenna_spacing: f64,
    pub num_paths: usize,
    pub pathloss_exponent: f64,
    /// Variance of the circularly-symmetric complex path gain.
    pub gain_variance: f64,
    pub carrier_frequency_hz: f64,
    pub bandwidth_hz: f64,
    pub subcarrier_spacing_hz: f64,
    pub subcarriers_per_rb: usize,
    pub max_tx_power_dbm: f64,
    pub noise_figure_db: f64,
    /// Overrides the thermal noise derived from bandwidth and noise figure.
    pub noise_variance_w: Option<f64>,
}

impl Default for PhyConfig {
    fn default() -> Self {
        Self {
            num_antennas: 256,
            antenna_spacing: 0.5,
            num_paths: 1,
            pathloss_exponent: 2.0,
            gain_variance: 1.0,
            carrier_frequency_hz: 30e9,
            bandwidth_hz: 20e6,
            subcarrier_spacing_hz: 15e3,
            subcarriers_per_rb: 12,
            max_tx_power_dbm: 28.0,
            noise_figure_db: 9.0,
            noise_variance_w: None,
        }
    }
}

impl PhyConfig {
    /// Receiver noise variance σ² in Watts.
    pub fn noise_w(&self) -> f64 {
        self.noise_variance_w
            .unwrap_or_else(|| units::thermal_noise_watts(self.bandwidth_hz, self.noise_figure_db))
    }

    pub fn max_tx_power_w(&self) -> f64 {
        units::dbm_to_watts(self.max_tx_power_dbm)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_antennas == 0 {
            return Err(Error::invalid("phy.num_antennas", "must be at least 1"));
        }
        if !(self.antenna_spacing > 0.0) {
            return Err(Error::invalid("phy.antenna_spacing", "must be positive"));
        }
        if self.num_paths == 0 {
            return Err(Error::invalid("phy.num_paths", "must be at least 1"));
        }
        if !(self.pathloss_exponent >= 0.0) {
            return Err(Error::invalid("phy.pathloss_exponent", "must be non-negative"));
        }
        if !(self.gain_variance > 0.0) {
            return Err(Error::invalid("phy.gain_variance", "must be positive"));
        }
        if !(self.bandwidth_hz > 0.0) {
            return Err(Error::invalid("phy.bandwidth_hz", "must be positive"));
        }
        if !(self.carrier_frequency_hz > 0.0) {
            return Err(Error::invalid("phy.carrier_frequency_hz", "must be positive"));
        }
        if !self.max_tx_power_dbm.is_finite() {
            return Err(Error::invalid("phy.max_tx_power_dbm", "must be finite"));
        }
        if let Some(n) = self.noise_variance_w {
            if !(n > 0.0) {
                return Err(Error::invalid("phy.noise_variance_w", "must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    pub distance_m: f64,
    /// Angle of departure in [-π/2, π/2].
    pub aod_rad: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector {
    pub coeffs: Vec<C64>,
    pub gain: C64,
}

impl ChannelVector {
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Unit-norm analog beamforming vector.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingWeight {
    coeffs: Vec<C64>,
}

impl BeamformingWeight {
    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// Normalizes an arbitrary non-zero vector.
    pub fn from_vector(mut coeffs: Vec<C64>) -> Self {
        let norm = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.0 {
            for c in &mut coeffs {
                *c /= norm;
            }
        }
        Self { coeffs }
    }
}

/// `a(θ)[m] = exp(-i·2π·m·(D/λ)·sin θ)` for `m = 0..M`.
pub fn steering_vector(aod_rad: f64, phy: &PhyConfig) -> Vec<C64> {
    let step = -2.0 * PI * phy.antenna_spacing * aod_rad.sin();
    (0..phy.num_antennas)
        .map(|m| C64::from_polar(1.0, step * m as f64))
        .collect()
}

pub fn channel_vector(geom: LinkGeometry, gain: C64, phy: &PhyConfig) -> ChannelVector {
    let scale = gain
        / ((phy.num_paths as f64).sqrt() * (1.0 + geom.distance_m.powf(phy.pathloss_exponent)));
    let coeffs = steering_vector(geom.aod_rad, phy)
        .into_iter()
        .map(|a| a * scale)
        .collect();
    ChannelVector { coeffs, gain }
}

/// Draws α ~ CN(0, σ_α²).
pub fn draw_complex_gain<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * s, im * s)
}

/// Matched beam toward `aod_rad`: the steering vector scaled to unit norm.
pub fn beamforming_weight(aod_rad: f64, phy: &PhyConfig) -> BeamformingWeight {
    let norm = (phy.num_antennas as f64).sqrt();
    BeamformingWeight {
        coeffs: steering_vector(aod_rad, phy)
            .into_iter()
            .map(|a| a / norm)
            .collect(),
    }
}

/// `|h^H w|²`.
pub fn effective_gain(h: &ChannelVector, w: &BeamformingWeight) -> Result<f64> {
    if h.len() != w.coeffs.len() {
        return Err(Error::DimensionMismatch {
            expected: h.len(),
            actual: w.coeffs.len(),
        });
    }
    Ok(inner(&h.coeffs, &w.coeffs).norm_sqr())
}

/// `x^H y`.
pub(crate) fn inner(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

/// Per-(user, gNB) channel table. The physical channel does not depend on
/// which beam serves the user, so one vector per pair suffices.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTable {
    num_gnbs: usize,
    links: Vec<ChannelVector>,
    geometry: Vec<LinkGeometry>,
}

impl ChannelTable {
    pub fn new(num_gnbs: usize, links: Vec<ChannelVector>, geometry: Vec<LinkGeometry>) -> Self {
        assert_eq!(links.len(), geometry.len());
        assert!(num_gnbs > 0 && links.len() % num_gnbs == 0);
        Self {
            num_gnbs,
            links,
            geometry,
        }
    }

    pub fn num_gnbs(&self) -> usize {
        self.num_gnbs
    }

    pub fn num_users(&self) -> usize {
        self.links.len() / self.num_gnbs
    }

    pub fn channel(&self, user: usize, gnb: usize) -> &ChannelVector {
        &self.links[user * self.num_gnbs + gnb]
    }

    pub fn geometry(&self, user: usize, gnb: usize) -> LinkGeometry {
        self.geometry[user * self.num_gnbs + gnb]
    }
}
