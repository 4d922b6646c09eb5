//! Free-space uplink attenuation: diffraction and turbulence beam spreading,
//! Fried-parameter scaling, atmospheric extinction, and sky background.
//!
//! Attenuation is always a positive dB loss; linear transmittance is
//! `10^(-A/10)`.

use crate::error::{domain, Result};
use std::f64::consts::{FRAC_PI_2, PI};

/// Full Airy-disk diameter factor for the transmitter divergence.
pub const AIRY_FULL_DIAMETER_FACTOR: f64 = 2.44;
/// Ratio of spatial coherence radius to Fried parameter used for turbulence spreading.
pub const TURBULENCE_SPREAD_FACTOR: f64 = 2.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    pub wavelength_m: f64,
    /// Zenith atmospheric attenuation.
    pub a_atm0_db: f64,
    pub d_r_m: f64,
    pub d_t_m: f64,
    pub t_r: f64,
    pub t_t: f64,
    /// Pointing loss fraction.
    pub l_p: f64,
    /// Orbit height, the reference path length for the slant-ratio airmass.
    pub altitude_km: f64,
}

impl Default for LinkParams {
    fn default() -> Self {
        LinkParams {
            wavelength_m: 808e-9,
            a_atm0_db: 3.0,
            d_r_m: 0.15,
            d_t_m: 1.0,
            t_r: 0.8,
            t_t: 0.8,
            l_p: 0.2,
            altitude_km: 550.0,
        }
    }
}

impl LinkParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("wavelength_m", self.wavelength_m),
            ("d_r_m", self.d_r_m),
            ("d_t_m", self.d_t_m),
            ("altitude_km", self.altitude_km),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return domain(format!("{name} must be > 0, got {v}"));
            }
        }
        for (name, v) in [("t_r", self.t_r), ("t_t", self.t_t)] {
            if !(v > 0.0 && v <= 1.0) {
                return domain(format!("{name} must be in (0, 1], got {v}"));
            }
        }
        if !(self.l_p >= 0.0 && self.l_p < 1.0) {
            return domain(format!("l_p must be in [0, 1), got {}", self.l_p));
        }
        if !self.a_atm0_db.is_finite() || self.a_atm0_db < 0.0 {
            return domain(format!("a_atm0_db must be >= 0, got {}", self.a_atm0_db));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atmosphere {
    /// Fried parameter at the reference wavelength, looking straight up.
    pub fried_r0_m: f64,
    pub reference_wavelength_m: f64,
}

impl Default for Atmosphere {
    fn default() -> Self {
        Atmosphere {
            fried_r0_m: 0.20,
            reference_wavelength_m: 808e-9,
        }
    }
}

impl Atmosphere {
    pub fn validate(&self) -> Result<()> {
        if !(self.fried_r0_m > 0.0) {
            return domain(format!("fried_r0_m must be > 0, got {}", self.fried_r0_m));
        }
        if !(self.reference_wavelength_m > 0.0) {
            return domain(format!(
                "reference_wavelength_m must be > 0, got {}",
                self.reference_wavelength_m
            ));
        }
        Ok(())
    }
}

/// How the path length through the atmosphere grows away from zenith.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Airmass {
    /// `L / h`, the slant range over the orbit height.
    #[default]
    SlantRatio,
    /// `1 / cos(zenith)`.
    Secant,
}

impl Airmass {
    pub fn name(self) -> &'static str {
        match self {
            Airmass::SlantRatio => "slant-ratio",
            Airmass::Secant => "secant",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "slant-ratio" => Some(Airmass::SlantRatio),
            "secant" => Some(Airmass::Secant),
            _ => None,
        }
    }
}

/// Model switches for [`link_attenuation_db`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkOptions {
    pub airmass: Airmass,
    /// Shrink r0 with the airmass to the power 3/5.
    pub zenith_r0_scaling: bool,
}

impl Default for LinkOptions {
    fn default() -> Self {
        LinkOptions {
            airmass: Airmass::SlantRatio,
            zenith_r0_scaling: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackgroundModel {
    /// In-band sky photon radiance (photons s^-1 sr^-1 m^-2).
    pub spectral_radiance_photons: f64,
    /// Full-angle receiver field of view.
    pub fov_rad: f64,
    pub pde: f64,
}

impl Default for BackgroundModel {
    fn default() -> Self {
        BackgroundModel {
            spectral_radiance_photons: 2.5e11,
            fov_rad: 215e-6,
            pde: 0.4,
        }
    }
}

impl BackgroundModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.spectral_radiance_photons >= 0.0) || !(self.fov_rad >= 0.0) {
            return domain("background radiance and field of view must be >= 0");
        }
        if !(0.0..=1.0).contains(&self.pde) {
            return domain(format!(
                "background pde must be in [0, 1], got {}",
                self.pde
            ));
        }
        Ok(())
    }
}

/// Diffraction-limited full-cone divergence of the transmitter.
pub fn diffraction_divergence(params: &LinkParams) -> Result<f64> {
    if !(params.d_t_m > 0.0) {
        return domain(format!("d_t_m must be > 0, got {}", params.d_t_m));
    }
    Ok(AIRY_FULL_DIAMETER_FACTOR * params.wavelength_m / params.d_t_m)
}

/// Turbulence-induced full-cone divergence.
pub fn turbulence_divergence(wavelength_m: f64, fried_r0_m: f64) -> Result<f64> {
    if !(fried_r0_m > 0.0) {
        return domain(format!("fried_r0_m must be > 0, got {fried_r0_m}"));
    }
    Ok(TURBULENCE_SPREAD_FACTOR * wavelength_m / fried_r0_m)
}

/// r0 grows as wavelength^(6/5).
pub fn fried_scale_wavelength(
    r0_at_ref_m: f64,
    lambda_ref_m: f64,
    lambda_target_m: f64,
) -> Result<f64> {
    if !(r0_at_ref_m > 0.0 && lambda_ref_m > 0.0 && lambda_target_m > 0.0) {
        return domain("Fried scaling needs positive r0 and wavelengths");
    }
    Ok(r0_at_ref_m * (lambda_target_m / lambda_ref_m).powf(1.2))
}

fn check_zenith(zenith_rad: f64) -> Result<()> {
    if !(0.0..FRAC_PI_2).contains(&zenith_rad) {
        return domain(format!(
            "zenith angle must be in [0, pi/2), got {zenith_rad}"
        ));
    }
    Ok(())
}

/// r0 along a slanted path: `r0 * cos(zenith)^(3/5)`.
pub fn fried_scale_zenith(r0_zenith_m: f64, zenith_rad: f64) -> Result<f64> {
    check_zenith(zenith_rad)?;
    Ok(r0_zenith_m * zenith_rad.cos().powf(0.6))
}

/// Extinction along a slanted path: `A0 / cos(zenith)`.
pub fn atmospheric_attenuation_db(a_atm0_db: f64, zenith_rad: f64) -> Result<f64> {
    check_zenith(zenith_rad)?;
    Ok(a_atm0_db / zenith_rad.cos())
}

fn airmass_factor(
    params: &LinkParams,
    options: &LinkOptions,
    slant_range_km: f64,
    zenith_rad: f64,
) -> f64 {
    match options.airmass {
        Airmass::SlantRatio => slant_range_km / params.altitude_km,
        Airmass::Secant => 1.0 / zenith_rad.cos(),
    }
}

/// Fried parameter seen by the link at its own wavelength and path.
pub fn effective_fried_r0(
    params: &LinkParams,
    atmosphere: &Atmosphere,
    options: &LinkOptions,
    slant_range_km: f64,
    zenith_rad: f64,
) -> Result<f64> {
    check_zenith(zenith_rad)?;
    let r0 = fried_scale_wavelength(
        atmosphere.fried_r0_m,
        atmosphere.reference_wavelength_m,
        params.wavelength_m,
    )?;
    if options.zenith_r0_scaling {
        let m = airmass_factor(params, options, slant_range_km, zenith_rad);
        Ok(r0 * m.powf(-0.6))
    } else {
        Ok(r0)
    }
}

/// Average uplink attenuation in dB for one slant geometry.
///
/// Geometric spreading of the quadratic sum of diffraction and turbulence
/// divergences over the receiver aperture, optical transmissions, pointing
/// loss and atmospheric extinction.
pub fn link_attenuation_db(
    params: &LinkParams,
    atmosphere: &Atmosphere,
    options: &LinkOptions,
    slant_range_km: f64,
    zenith_rad: f64,
) -> Result<f64> {
    params.validate()?;
    atmosphere.validate()?;
    check_zenith(zenith_rad)?;
    if !(slant_range_km > 0.0) {
        return domain(format!("slant range must be > 0, got {slant_range_km}"));
    }
    let theta_t = diffraction_divergence(params)?;
    let r0 = effective_fried_r0(params, atmosphere, options, slant_range_km, zenith_rad)?;
    let theta_atm = turbulence_divergence(params.wavelength_m, r0)?;
    let a_atm_db = params.a_atm0_db * airmass_factor(params, options, slant_range_km, zenith_rad);

    let l_m = slant_range_km * 1e3;
    let geometric =
        l_m * l_m * (theta_t * theta_t + theta_atm * theta_atm) / (params.d_r_m * params.d_r_m);
    let optics = 1.0 / (params.t_t * (1.0 - params.l_p) * params.t_r);
    Ok(10.0 * (geometric * optics).log10() + a_atm_db)
}

/// Sky background counts at the satellite detectors.
///
/// Étendue of the receiver (aperture area times FOV solid angle) times the
/// sky radiance, attenuated by the receiver optics, the atmosphere and the
/// detector efficiency. Independent of slant range.
pub fn background_count_rate(
    model: &BackgroundModel,
    params: &LinkParams,
    zenith_rad: f64,
) -> Result<f64> {
    let a_atm_db = atmospheric_attenuation_db(params.a_atm0_db, zenith_rad)?;
    let aperture_m2 = PI * params.d_r_m * params.d_r_m / 4.0;
    let half_fov = model.fov_rad / 2.0;
    let solid_angle_sr = PI * half_fov * half_fov;
    Ok(model.spectral_radiance_photons
        * aperture_m2
        * solid_angle_sr
        * params.t_r
        * db_to_transmittance(a_atm_db)
        * model.pde)
}

pub fn db_to_transmittance(a_db: f64) -> f64 {
    10f64.powf(-a_db / 10.0)
}

pub fn transmittance_to_db(t: f64) -> f64 {
    -10.0 * t.log10()
}
