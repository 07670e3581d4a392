//! Line-of-sight THz channel and target reflection channel for a ULA.
//!
//! Both channels share the free-space spreading term `c / (4 pi f d)` and the
//! molecular absorption factor `exp(-K(f) d / 2)` per traversal. The echo path
//! traverses the link twice, so its spreading term is squared and its
//! absorption exponent is doubled.
//!
//! The received echo applies `G^H` while the sensing SINR uses `G`. Since
//! `G = s * a a^H` is a scalar multiple of a Hermitian matrix,
//! `||G w|| == ||G^H w||` and the two conventions give identical metrics.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{IsacError, Result};
use crate::linalg::{outer, CMatrix, CVector, C64};
use crate::SPEED_OF_LIGHT;

/// Uniform linear array layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub num_antennas: usize,
    /// Element spacing divided by the carrier wavelength.
    pub spacing_ratio: f64,
}

impl ArrayGeometry {
    pub fn new(num_antennas: usize, spacing_ratio: f64) -> Result<Self> {
        if num_antennas == 0 {
            return Err(IsacError::InvalidConfig("array needs at least one antenna".into()));
        }
        if !(spacing_ratio > 0.0 && spacing_ratio.is_finite()) {
            return Err(IsacError::InvalidConfig(format!(
                "element spacing ratio must be positive, got {spacing_ratio}"
            )));
        }
        Ok(Self { num_antennas, spacing_ratio })
    }

    /// Half-wavelength spaced array.
    pub fn half_wavelength(num_antennas: usize) -> Result<Self> {
        Self::new(num_antennas, 0.5)
    }
}

/// Carrier frequency and molecular absorption coefficient of the band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Propagation {
    /// Hz.
    pub carrier_frequency: f64,
    /// K(f), 1/m.
    pub absorption: f64,
}

impl Propagation {
    pub fn new(carrier_frequency: f64, absorption: f64) -> Result<Self> {
        if !(carrier_frequency > 0.0 && carrier_frequency.is_finite()) {
            return Err(IsacError::InvalidConfig(format!(
                "carrier frequency must be positive, got {carrier_frequency}"
            )));
        }
        if !(absorption >= 0.0 && absorption.is_finite()) {
            return Err(IsacError::InvalidConfig(format!(
                "absorption coefficient must be non-negative, got {absorption}"
            )));
        }
        Ok(Self { carrier_frequency, absorption })
    }

    /// Free-space spreading amplitude `c / (4 pi f d)`.
    pub fn spreading(&self, distance: f64) -> Result<f64> {
        check_distance(distance)?;
        Ok(SPEED_OF_LIGHT / (4.0 * PI * self.carrier_frequency * distance))
    }

    /// One-way amplitude path loss including absorption.
    pub fn one_way_gain(&self, distance: f64) -> Result<f64> {
        Ok(self.spreading(distance)? * (-0.5 * self.absorption * distance).exp())
    }

    /// Two-way (echo) amplitude factor excluding RCS and Doppler.
    pub fn two_way_gain(&self, distance: f64) -> Result<f64> {
        Ok(self.spreading(distance)?.powi(2) * (-self.absorption * distance).exp())
    }
}

fn check_distance(distance: f64) -> Result<()> {
    if distance > 0.0 && distance.is_finite() {
        Ok(())
    } else {
        Err(IsacError::NonPositiveDistance(distance))
    }
}

/// ULA response `a(theta)`, entry `m` is `exp(j 2 pi (d/lambda) m sin theta)`.
pub fn array_response(theta: f64, geom: &ArrayGeometry) -> CVector {
    let step = 2.0 * PI * geom.spacing_ratio * theta.sin();
    CVector::from_fn(geom.num_antennas, |m, _| C64::from_polar(1.0, step * m as f64))
}

/// LoS channel vector of one user.
#[derive(Debug, Clone, PartialEq)]
pub struct LosChannel {
    /// Per-element amplitude gain.
    pub path_gain: f64,
    pub h: CVector,
}

pub fn los_channel(prop: &Propagation, distance: f64, theta: f64, geom: &ArrayGeometry) -> Result<LosChannel> {
    let path_gain = prop.one_way_gain(distance)?;
    Ok(LosChannel { path_gain, h: array_response(theta, geom).scale(path_gain) })
}

/// Rank-one echo channel `G = s a(theta) a(theta)^H`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionChannel {
    /// Complex scalar `s` (two-way loss, RCS and Doppler phase).
    pub prefactor: C64,
    pub steering: CVector,
    pub g: CMatrix,
}

impl ReflectionChannel {
    /// `G^H G`, so that `||G w||^2 = w^H (G^H G) w` and
    /// `Tr(G W G^H) = <G^H G, W>`.
    pub fn gram(&self) -> CMatrix {
        self.g.adjoint() * &self.g
    }
}

/// Echo channel of a user moving with radial velocity `radial_velocity`
/// observed at time `time` (seconds).
#[allow(clippy::too_many_arguments)]
pub fn reflection_channel(
    prop: &Propagation,
    distance: f64,
    rcs: f64,
    radial_velocity: f64,
    time: f64,
    theta: f64,
    geom: &ArrayGeometry,
) -> Result<ReflectionChannel> {
    let magnitude = prop.two_way_gain(distance)? * rcs;
    let doppler = -4.0 * PI * prop.carrier_frequency * radial_velocity * time / SPEED_OF_LIGHT;
    let prefactor = C64::from_polar(1.0, doppler).scale(magnitude);
    let steering = array_response(theta, geom);
    let g = outer(&steering, &steering) * prefactor;
    Ok(ReflectionChannel { prefactor, steering, g })
}
