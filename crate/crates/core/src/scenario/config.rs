//! Scenario files: flat `dotted.key = value` lines with `#` comments.

use crate::data_budget::CodecMode;
use crate::error::{Error, Result};
use crate::keyrate::{CoincidenceModel, FriedHistogram, IntegrationSettings, SourceDetectorParams};
use crate::link::{Airmass, Atmosphere, BackgroundModel, LinkOptions, LinkParams};
use crate::orbit::OrbitSpec;
use crate::sim::{ClockRecoveryConfig, SimConfig};
use std::path::Path;

/// Monte Carlo analysis settings that are not part of event generation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloAnalysis {
    pub coincidence_window_s: f64,
    pub clock: ClockRecoveryConfig,
}

impl Default for MonteCarloAnalysis {
    fn default() -> Self {
        MonteCarloAnalysis {
            coincidence_window_s: 1e-9,
            clock: ClockRecoveryConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataBudgetSettings {
    pub horizon_s: f64,
    pub delta_t_s: f64,
    pub event_rate_cps: f64,
    pub experiment_s: f64,
    pub passes_per_day: f64,
    pub housekeeping_channels: u32,
    pub housekeeping_bytes: f64,
    pub housekeeping_rate_hz: f64,
    pub housekeeping_duration_s: f64,
    pub codec_mode: CodecMode,
}

impl Default for DataBudgetSettings {
    fn default() -> Self {
        DataBudgetSettings {
            horizon_s: crate::data_budget::SIX_MONTHS_S,
            delta_t_s: 25e-12,
            event_rate_cps: 1e4,
            experiment_s: 300.0,
            passes_per_day: 3.0,
            housekeeping_channels: 64,
            housekeeping_bytes: 2.0,
            housekeeping_rate_hz: 1.0,
            housekeeping_duration_s: 86_400.0,
            codec_mode: CodecMode::Relative,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct YieldSettings {
    pub passes_per_year: f64,
    pub histogram: FriedHistogram,
}

impl Default for YieldSettings {
    fn default() -> Self {
        YieldSettings {
            passes_per_year: 100.0,
            histogram: FriedHistogram {
                bins: vec![(0.15, 116.0), (0.20, 103.0), (0.30, 9.0)],
            },
        }
    }
}

/// Grids used by the sweep-style commands.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub attenuation_min_db: f64,
    pub attenuation_max_db: f64,
    pub attenuation_step_db: f64,
    pub dark_counts_cps: Vec<f64>,
    pub tau_s: Vec<f64>,
    pub fried_r0_m: Vec<f64>,
    pub wavelengths_m: Vec<f64>,
    pub offsets_km: Vec<f64>,
    pub time_half_span_s: f64,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            attenuation_min_db: 20.0,
            attenuation_max_db: 60.0,
            attenuation_step_db: 0.5,
            dark_counts_cps: vec![100.0, 250.0, 1000.0],
            tau_s: vec![1e-9, 250e-12],
            fried_r0_m: vec![0.15, 0.20, 0.25],
            wavelengths_m: vec![808e-9, 1550e-9],
            offsets_km: vec![0.0, 500.0],
            time_half_span_s: 300.0,
        }
    }
}

impl SweepGrid {
    /// Attenuation grid from min to max inclusive.
    pub fn attenuation_points(&self) -> Vec<f64> {
        let n = ((self.attenuation_max_db - self.attenuation_min_db) / self.attenuation_step_db
            + 1e-9)
            .floor() as usize;
        (0..=n)
            .map(|k| self.attenuation_min_db + k as f64 * self.attenuation_step_db)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScenarioConfig {
    pub orbit: OrbitSpec,
    /// `link.altitude_km` always mirrors `orbit.altitude_km`; see [`Self::link_params`].
    pub link: LinkParams,
    pub link_options: LinkOptions,
    pub atmosphere: Atmosphere,
    pub source: SourceDetectorParams,
    pub background: BackgroundModel,
    pub integration: IntegrationSettings,
    pub sim: SimConfig,
    pub analysis: MonteCarloAnalysis,
    pub data: DataBudgetSettings,
    pub annual: YieldSettings,
    pub sweep: SweepGrid,
    /// `key = value` overrides in the order they were applied.
    pub overrides: Vec<(String, String)>,
}

enum Slot<'a> {
    F64(&'a mut f64),
    U32(&'a mut u32),
    U64(&'a mut u64),
    Bool(&'a mut bool),
    Airmass(&'a mut Airmass),
    Model(&'a mut CoincidenceModel),
    Codec(&'a mut CodecMode),
    List(&'a mut Vec<f64>),
    Histogram(&'a mut FriedHistogram),
}

/// Every settable key, in canonical dump order.
pub const KEYS: &[&str] = &[
    "orbit.altitude_km",
    "orbit.ground_track_offset_km",
    "link.wavelength_m",
    "link.a_atm0_db",
    "link.d_r_m",
    "link.d_t_m",
    "link.t_r",
    "link.t_t",
    "link.l_p",
    "link.airmass",
    "link.zenith_r0_scaling",
    "atmosphere.fried_r0_m",
    "atmosphere.reference_wavelength_m",
    "source.mu",
    "source.tau_s",
    "source.q_sift",
    "source.f_ec",
    "source.d_a_cps",
    "source.d_b_cps",
    "source.b_cps",
    "source.n_det",
    "source.pde",
    "source.eta_a",
    "source.e0",
    "source.e_d",
    "source.model",
    "background.spectral_radiance_photons",
    "background.fov_rad",
    "background.pde",
    "integration.min_elevation_rad",
    "integration.loss_cutoff_db",
    "integration.max_window_s",
    "integration.dt_s",
    "sim.pair_rate_cps",
    "sim.duration_s",
    "sim.eta_a",
    "sim.eta_b",
    "sim.d_a_cps",
    "sim.d_b_cps",
    "sim.b_cps",
    "sim.n_det",
    "sim.jitter_sigma_s",
    "sim.e_d",
    "sim.clock_offset_s",
    "sim.clock_drift_ppb",
    "sim.rng_seed",
    "sim.coincidence_window_s",
    "sim.clock_bin_s",
    "sim.clock_block_s",
    "sim.clock_max_lag_s",
    "data.horizon_s",
    "data.delta_t_s",
    "data.event_rate_cps",
    "data.experiment_s",
    "data.passes_per_day",
    "data.housekeeping_channels",
    "data.housekeeping_bytes",
    "data.housekeeping_rate_hz",
    "data.housekeeping_duration_s",
    "data.codec_mode",
    "yield.passes_per_year",
    "yield.fried_histogram",
    "sweep.attenuation_min_db",
    "sweep.attenuation_max_db",
    "sweep.attenuation_step_db",
    "sweep.dark_counts_cps",
    "sweep.tau_s",
    "sweep.fried_r0_m",
    "sweep.wavelengths_m",
    "sweep.offsets_km",
    "sweep.time_half_span_s",
];

impl ScenarioConfig {
    /// Link parameters with the altitude taken from the orbit.
    pub fn link_params(&self) -> LinkParams {
        LinkParams {
            altitude_km: self.orbit.altitude_km,
            ..self.link
        }
    }

    fn slot(&mut self, key: &str) -> Option<Slot<'_>> {
        use Slot::*;
        let s = self;
        Some(match key {
            "orbit.altitude_km" => F64(&mut s.orbit.altitude_km),
            "orbit.ground_track_offset_km" => F64(&mut s.orbit.ground_track_offset_km),
            "link.wavelength_m" => F64(&mut s.link.wavelength_m),
            "link.a_atm0_db" => F64(&mut s.link.a_atm0_db),
            "link.d_r_m" => F64(&mut s.link.d_r_m),
            "link.d_t_m" => F64(&mut s.link.d_t_m),
            "link.t_r" => F64(&mut s.link.t_r),
            "link.t_t" => F64(&mut s.link.t_t),
            "link.l_p" => F64(&mut s.link.l_p),
            "link.airmass" => Airmass(&mut s.link_options.airmass),
            "link.zenith_r0_scaling" => Bool(&mut s.link_options.zenith_r0_scaling),
            "atmosphere.fried_r0_m" => F64(&mut s.atmosphere.fried_r0_m),
            "atmosphere.reference_wavelength_m" => F64(&mut s.atmosphere.reference_wavelength_m),
            "source.mu" => F64(&mut s.source.mu),
            "source.tau_s" => F64(&mut s.source.tau_s),
            "source.q_sift" => F64(&mut s.source.q_sift),
            "source.f_ec" => F64(&mut s.source.f_ec),
            "source.d_a_cps" => F64(&mut s.source.d_a_cps),
            "source.d_b_cps" => F64(&mut s.source.d_b_cps),
            "source.b_cps" => F64(&mut s.source.b_cps),
            "source.n_det" => U32(&mut s.source.n_det),
            "source.pde" => F64(&mut s.source.pde),
            "source.eta_a" => F64(&mut s.source.eta_a),
            "source.e0" => F64(&mut s.source.e0),
            "source.e_d" => F64(&mut s.source.e_d),
            "source.model" => Model(&mut s.source.model),
            "background.spectral_radiance_photons" => {
                F64(&mut s.background.spectral_radiance_photons)
            }
            "background.fov_rad" => F64(&mut s.background.fov_rad),
            "background.pde" => F64(&mut s.background.pde),
            "integration.min_elevation_rad" => F64(&mut s.integration.min_elevation_rad),
            "integration.loss_cutoff_db" => F64(&mut s.integration.loss_cutoff_db),
            "integration.max_window_s" => F64(&mut s.integration.max_window_s),
            "integration.dt_s" => F64(&mut s.integration.dt_s),
            "sim.pair_rate_cps" => F64(&mut s.sim.pair_rate_cps),
            "sim.duration_s" => F64(&mut s.sim.duration_s),
            "sim.eta_a" => F64(&mut s.sim.eta_a),
            "sim.eta_b" => F64(&mut s.sim.eta_b),
            "sim.d_a_cps" => F64(&mut s.sim.d_a_cps),
            "sim.d_b_cps" => F64(&mut s.sim.d_b_cps),
            "sim.b_cps" => F64(&mut s.sim.b_cps),
            "sim.n_det" => U32(&mut s.sim.n_det),
            "sim.jitter_sigma_s" => F64(&mut s.sim.jitter_sigma_s),
            "sim.e_d" => F64(&mut s.sim.e_d),
            "sim.clock_offset_s" => F64(&mut s.sim.clock_offset_s),
            "sim.clock_drift_ppb" => F64(&mut s.sim.clock_drift_ppb),
            "sim.rng_seed" => U64(&mut s.sim.rng_seed),
            "sim.coincidence_window_s" => F64(&mut s.analysis.coincidence_window_s),
            "sim.clock_bin_s" => F64(&mut s.analysis.clock.bin_s),
            "sim.clock_block_s" => F64(&mut s.analysis.clock.block_s),
            "sim.clock_max_lag_s" => F64(&mut s.analysis.clock.max_lag_s),
            "data.horizon_s" => F64(&mut s.data.horizon_s),
            "data.delta_t_s" => F64(&mut s.data.delta_t_s),
            "data.event_rate_cps" => F64(&mut s.data.event_rate_cps),
            "data.experiment_s" => F64(&mut s.data.experiment_s),
            "data.passes_per_day" => F64(&mut s.data.passes_per_day),
            "data.housekeeping_channels" => U32(&mut s.data.housekeeping_channels),
            "data.housekeeping_bytes" => F64(&mut s.data.housekeeping_bytes),
            "data.housekeeping_rate_hz" => F64(&mut s.data.housekeeping_rate_hz),
            "data.housekeeping_duration_s" => F64(&mut s.data.housekeeping_duration_s),
            "data.codec_mode" => Codec(&mut s.data.codec_mode),
            "yield.passes_per_year" => F64(&mut s.annual.passes_per_year),
            "yield.fried_histogram" => Histogram(&mut s.annual.histogram),
            "sweep.attenuation_min_db" => F64(&mut s.sweep.attenuation_min_db),
            "sweep.attenuation_max_db" => F64(&mut s.sweep.attenuation_max_db),
            "sweep.attenuation_step_db" => F64(&mut s.sweep.attenuation_step_db),
            "sweep.dark_counts_cps" => List(&mut s.sweep.dark_counts_cps),
            "sweep.tau_s" => List(&mut s.sweep.tau_s),
            "sweep.fried_r0_m" => List(&mut s.sweep.fried_r0_m),
            "sweep.wavelengths_m" => List(&mut s.sweep.wavelengths_m),
            "sweep.offsets_km" => List(&mut s.sweep.offsets_km),
            "sweep.time_half_span_s" => F64(&mut s.sweep.time_half_span_s),
            _ => return None,
        })
    }

    /// Current value of `key` in canonical text form.
    pub fn get(&self, key: &str) -> Result<String> {
        let mut copy = self.clone();
        let slot = copy
            .slot(key)
            .ok_or_else(|| Error::UnknownKey(key.to_string()))?;
        Ok(match slot {
            Slot::F64(v) => format_f64(*v),
            Slot::U32(v) => v.to_string(),
            Slot::U64(v) => v.to_string(),
            Slot::Bool(v) => v.to_string(),
            Slot::Airmass(v) => v.name().to_string(),
            Slot::Model(v) => v.name().to_string(),
            Slot::Codec(v) => v.name().to_string(),
            Slot::List(v) => v
                .iter()
                .map(|x| format_f64(*x))
                .collect::<Vec<_>>()
                .join(", "),
            Slot::Histogram(h) => h
                .bins
                .iter()
                .map(|(r0, d)| format!("{}:{}", format_f64(*r0), format_f64(*d)))
                .collect::<Vec<_>>()
                .join(", "),
        })
    }

    /// Sets one key from its text form and re-checks the affected section.
    /// The override is recorded for output headers.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let range = |message: String| Error::Range {
            key: key.to_string(),
            message,
        };
        let value = value.trim();
        let mut trial = self.clone();
        let slot = trial
            .slot(key)
            .ok_or_else(|| Error::UnknownKey(key.to_string()))?;
        match slot {
            Slot::F64(v) => *v = parse_f64(value).map_err(range)?,
            Slot::U32(v) => {
                *v = value
                    .parse()
                    .map_err(|_| range(format!("expected a non-negative integer, got `{value}`")))?
            }
            Slot::U64(v) => {
                *v = value
                    .parse()
                    .map_err(|_| range(format!("expected a non-negative integer, got `{value}`")))?
            }
            Slot::Bool(v) => {
                *v = value
                    .parse()
                    .map_err(|_| range(format!("expected true or false, got `{value}`")))?
            }
            Slot::Airmass(v) => {
                *v = Airmass::parse(value).ok_or_else(|| {
                    range(format!("expected slant-ratio or secant, got `{value}`"))
                })?
            }
            Slot::Model(v) => {
                *v = CoincidenceModel::parse(value).ok_or_else(|| {
                    range(format!("expected ma-fong-lo or plus-sign, got `{value}`"))
                })?
            }
            Slot::Codec(v) => {
                *v = CodecMode::parse(value)
                    .ok_or_else(|| range(format!("expected absolute or relative, got `{value}`")))?
            }
            Slot::List(v) => *v = parse_list(value).map_err(range)?,
            Slot::Histogram(h) => {
                let mut bins = Vec::new();
                for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    let (r0, days) = item
                        .split_once(':')
                        .ok_or_else(|| range(format!("histogram bin `{item}` is not r0:days")))?;
                    bins.push((
                        parse_f64(r0).map_err(range)?,
                        parse_f64(days).map_err(range)?,
                    ));
                }
                h.bins = bins;
            }
        }
        trial.validate_section(key).map_err(|e| match e {
            Error::Domain(m) => range(m),
            other => other,
        })?;
        trial.overrides.push((key.to_string(), value.to_string()));
        *self = trial;
        Ok(())
    }

    fn validate_section(&self, key: &str) -> Result<()> {
        let section = key.split('.').next().unwrap_or("");
        match section {
            "orbit" => self.orbit.validate(),
            "link" => self.link_params().validate(),
            "atmosphere" => self.atmosphere.validate(),
            "source" => self.source.validate(),
            "background" => self.background.validate(),
            "integration" => validate_integration(&self.integration),
            "sim" => {
                self.sim.validate()?;
                let a = &self.analysis;
                if !(a.coincidence_window_s > 0.0) {
                    return Err(Error::Domain("coincidence window must be > 0".into()));
                }
                if !(a.clock.bin_s > 0.0
                    && a.clock.block_s > 0.0
                    && a.clock.max_lag_s > a.clock.bin_s)
                {
                    return Err(Error::Domain(
                        "clock recovery needs 0 < bin < max_lag and block > 0".into(),
                    ));
                }
                Ok(())
            }
            "data" => validate_data(&self.data),
            "yield" => {
                if !(self.annual.passes_per_year >= 0.0) {
                    return Err(Error::Domain("passes per year must be >= 0".into()));
                }
                self.annual.histogram.validate()
            }
            "sweep" => validate_sweep(&self.sweep),
            _ => Ok(()),
        }
    }

    /// Checks every section.
    pub fn validate(&self) -> Result<()> {
        for section in [
            "orbit",
            "link",
            "atmosphere",
            "source",
            "background",
            "integration",
            "sim",
            "data",
            "yield",
            "sweep",
        ] {
            self.validate_section(section)?;
        }
        Ok(())
    }

    /// Parses scenario text on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ScenarioConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            })?;
            cfg.set(key.trim(), value).map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Every key with its current value, one per line, in canonical order.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let v = self.get(key).expect("registered key");
            out.push_str(key);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        }
        out
    }

    /// The same scenario without the override log.
    pub fn without_overrides(&self) -> Self {
        ScenarioConfig {
            overrides: Vec::new(),
            ..self.clone()
        }
    }
}

fn validate_integration(s: &IntegrationSettings) -> Result<()> {
    if !(s.min_elevation_rad >= 0.0 && s.min_elevation_rad < std::f64::consts::FRAC_PI_2) {
        return Err(Error::Domain("min elevation must be in [0, pi/2)".into()));
    }
    if !(s.dt_s > 0.0) || !(s.max_window_s >= 0.0) || s.loss_cutoff_db.is_nan() {
        return Err(Error::Domain(
            "integration needs dt > 0, window >= 0 and a numeric cutoff".into(),
        ));
    }
    Ok(())
}

fn validate_data(d: &DataBudgetSettings) -> Result<()> {
    if !(d.delta_t_s > 0.0) || !(d.horizon_s >= d.delta_t_s) {
        return Err(Error::Domain(
            "data budget needs horizon >= delta_t > 0".into(),
        ));
    }
    for (name, v) in [
        ("event_rate_cps", d.event_rate_cps),
        ("experiment_s", d.experiment_s),
        ("passes_per_day", d.passes_per_day),
        ("housekeeping_bytes", d.housekeeping_bytes),
        ("housekeeping_rate_hz", d.housekeeping_rate_hz),
        ("housekeeping_duration_s", d.housekeeping_duration_s),
    ] {
        if !(v >= 0.0) {
            return Err(Error::Domain(format!("{name} must be >= 0, got {v}")));
        }
    }
    Ok(())
}

fn validate_sweep(s: &SweepGrid) -> Result<()> {
    if !(s.attenuation_step_db > 0.0) || !(s.attenuation_max_db >= s.attenuation_min_db) {
        return Err(Error::Domain(
            "attenuation grid needs step > 0 and max >= min".into(),
        ));
    }
    if !(s.time_half_span_s > 0.0) {
        return Err(Error::Domain("time half span must be > 0".into()));
    }
    let positive = |name: &str, v: &[f64]| {
        if v.iter().all(|x| *x > 0.0) {
            Ok(())
        } else {
            Err(Error::Domain(format!("{name} entries must be > 0")))
        }
    };
    positive("tau_s", &s.tau_s)?;
    positive("fried_r0_m", &s.fried_r0_m)?;
    positive("wavelengths_m", &s.wavelengths_m)?;
    if s.dark_counts_cps.iter().any(|x| !(*x >= 0.0)) || s.offsets_km.iter().any(|x| !x.is_finite())
    {
        return Err(Error::Domain(
            "dark counts must be >= 0 and offsets finite".into(),
        ));
    }
    Ok(())
}

/// Shortest text that parses back to the same value.
pub fn format_f64(v: f64) -> String {
    format!("{v:?}")
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("expected a finite number, got `{s}`")),
    }
}

fn parse_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(parse_f64)
        .collect()
}
