//! Analytic key-rate model for an entangled-pair source on the ground and a
//! four-detector polarization receiver in orbit.
//!
//! A "window" is one coincidence interval `tau`; the source emits on average
//! `mu` pairs per window with thermal statistics, so the pair rate is
//! `mu / tau`. Link attenuation enters only through the satellite-side
//! efficiency `eta_b = pde * 10^(-A/10)`.

use crate::error::{domain, Result};
use crate::link::{db_to_transmittance, link_attenuation_db};
use crate::orbit::pass_profile;
use crate::scenario::ScenarioConfig;

/// Coincidences needed for a three-sigma Bell violation.
pub const BELL_TEST_COINCIDENCES: f64 = 1000.0;

/// Sign of the `eta_a * eta_b * mu / 2` term in the last denominator of the
/// coincidence probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoincidenceModel {
    /// Minus sign: the thermal-source result, consistent with the QBER
    /// denominator. Gives physical probabilities.
    #[default]
    MaFongLo,
    /// Plus sign. Produces negative probabilities at realistic parameters
    /// and is kept only for comparison.
    PlusSign,
}

impl CoincidenceModel {
    pub fn name(self) -> &'static str {
        match self {
            CoincidenceModel::MaFongLo => "ma-fong-lo",
            CoincidenceModel::PlusSign => "plus-sign",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ma-fong-lo" => Some(CoincidenceModel::MaFongLo),
            "plus-sign" => Some(CoincidenceModel::PlusSign),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceDetectorParams {
    /// Mean pairs per coincidence window.
    pub mu: f64,
    pub tau_s: f64,
    pub q_sift: f64,
    pub f_ec: f64,
    /// Ground dark count rate per detector.
    pub d_a_cps: f64,
    /// Satellite dark count rate per detector.
    pub d_b_cps: f64,
    /// Satellite background rate summed over detectors.
    pub b_cps: f64,
    pub n_det: u32,
    pub pde: f64,
    pub eta_a: f64,
    pub e0: f64,
    pub e_d: f64,
    pub model: CoincidenceModel,
}

impl Default for SourceDetectorParams {
    fn default() -> Self {
        SourceDetectorParams {
            mu: 0.1,
            tau_s: 1e-9,
            q_sift: 0.5,
            f_ec: 1.22,
            d_a_cps: 100.0,
            d_b_cps: 100.0,
            b_cps: 400.0,
            n_det: 4,
            pde: 0.4,
            eta_a: 0.6,
            e0: 0.5,
            e_d: 0.01,
            model: CoincidenceModel::MaFongLo,
        }
    }
}

impl SourceDetectorParams {
    /// The shorter-window, brighter source: 250 ps and 4e8 pairs/s.
    pub fn improved() -> Self {
        SourceDetectorParams {
            tau_s: 250e-12,
            ..Self::default()
        }
    }

    pub fn pair_rate_cps(&self) -> f64 {
        self.mu / self.tau_s
    }

    pub fn eta_b(&self, attenuation_db: f64) -> f64 {
        self.pde * db_to_transmittance(attenuation_db)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return domain(format!("mu must be in (0, 1), got {}", self.mu));
        }
        if !(self.tau_s > 0.0) {
            return domain(format!("tau must be > 0, got {}", self.tau_s));
        }
        if !(self.q_sift > 0.0 && self.q_sift <= 1.0) {
            return domain(format!("q must be in (0, 1], got {}", self.q_sift));
        }
        if !(self.f_ec >= 1.0) {
            return domain(format!("f must be >= 1, got {}", self.f_ec));
        }
        for (name, v) in [
            ("d_a", self.d_a_cps),
            ("d_b", self.d_b_cps),
            ("b", self.b_cps),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return domain(format!("{name} rate must be >= 0, got {v}"));
            }
        }
        for (name, v) in [("pde", self.pde), ("eta_a", self.eta_a)] {
            if !(0.0..=1.0).contains(&v) {
                return domain(format!("{name} must be in [0, 1], got {v}"));
            }
        }
        if !(0.0..=0.5).contains(&self.e0) {
            return domain(format!("e0 must be in [0, 0.5], got {}", self.e0));
        }
        if !(self.e_d >= 0.0 && self.e_d < 0.5) {
            return domain(format!("e_d must be in [0, 0.5), got {}", self.e_d));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyRateMetrics {
    pub attenuation_db: f64,
    pub eta_b: f64,
    pub y0a: f64,
    pub y0b: f64,
    pub q_coinc: f64,
    pub r_coinc_cps: f64,
    pub qber: f64,
    pub visibility: f64,
    pub snr: f64,
    pub r_dist: f64,
    pub r_secure_cps: f64,
}

/// Per-window probabilities of a noise click at the ground and satellite.
pub fn noise_probabilities(p: &SourceDetectorParams) -> (f64, f64) {
    let n = p.n_det as f64;
    (n * p.d_a_cps * p.tau_s, (n * p.d_b_cps + p.b_cps) * p.tau_s)
}

/// Coincidence probability per window from explicit efficiencies and noise.
pub fn coincidence_probability_from(
    mu: f64,
    eta_a: f64,
    eta_b: f64,
    y0a: f64,
    y0b: f64,
    model: CoincidenceModel,
) -> f64 {
    let half = mu / 2.0;
    let a = 1.0 + eta_a * half;
    let b = 1.0 + eta_b * half;
    let joint = match model {
        CoincidenceModel::MaFongLo => 1.0 + eta_a * half + eta_b * half - eta_a * eta_b * half,
        CoincidenceModel::PlusSign => 1.0 + eta_a * half + eta_b * half + eta_a * eta_b * half,
    };
    1.0 - (1.0 - y0a) / (a * a) - (1.0 - y0b) / (b * b)
        + (1.0 - y0a) * (1.0 - y0b) / (joint * joint)
}

/// Probability of a coincidence in one window.
pub fn coincidence_probability(p: &SourceDetectorParams, eta_b: f64) -> f64 {
    let (y0a, y0b) = noise_probabilities(p);
    coincidence_probability_from(p.mu, p.eta_a, eta_b, y0a, y0b, p.model)
}

pub fn coincidence_rate(p: &SourceDetectorParams, q_coinc: f64) -> f64 {
    q_coinc / p.tau_s
}

/// Accidental coincidences between uncorrelated singles streams.
pub fn accidental_rate(
    pair_rate_cps: f64,
    eta_a: f64,
    receiver_singles_cps: f64,
    tau_s: f64,
) -> f64 {
    eta_a * pair_rate_cps * receiver_singles_cps * tau_s
}

/// Satellite singles: attenuated pair photons plus noise.
pub fn receiver_singles_cps(
    pair_rate_cps: f64,
    eta_b_unattenuated: f64,
    attenuation_db: f64,
    noise_cps: f64,
) -> f64 {
    eta_b_unattenuated * pair_rate_cps * db_to_transmittance(attenuation_db) + noise_cps
}

/// Quantum bit error rate.
pub fn qber(p: &SourceDetectorParams, eta_b: f64) -> f64 {
    qber_with(p, eta_b, coincidence_probability(p, eta_b))
}

fn qber_with(p: &SourceDetectorParams, eta_b: f64, q_coinc: f64) -> f64 {
    let mu = p.mu;
    let eta_a = p.eta_a;
    let correlated = (p.e0 - p.e_d) * eta_a * eta_b * mu * (1.0 + mu / 2.0)
        / ((1.0 + eta_a * mu / 2.0)
            * (1.0 + eta_b * mu / 2.0)
            * (1.0 + eta_a * mu / 2.0 + eta_b * mu / 2.0 - eta_a * eta_b * mu / 2.0));
    p.e0 - correlated / q_coinc
}

pub fn visibility(qber: f64) -> f64 {
    (1.0 - qber) / (1.0 + qber)
}

pub fn snr(qber: f64) -> f64 {
    1.0 / qber - 1.0
}

/// SNR at which the visibility reaches `1/sqrt(2)`.
pub fn bell_snr_threshold() -> f64 {
    2.0 / (std::f64::consts::SQRT_2 - 1.0)
}

/// Binary Shannon entropy in bits; zero at both endpoints.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return domain(format!(
            "binary entropy argument must be in [0, 1], got {x}"
        ));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    Ok(-x * x.log2() - (1.0 - x) * (1.0 - x).log2())
}

/// Lower bound on the secret fraction of sifted coincidences, floored at zero.
pub fn distillation_fraction(qber: f64, q_sift: f64, f_ec: f64) -> f64 {
    let Ok(h) = binary_entropy(qber.clamp(0.0, 1.0)) else {
        return 0.0;
    };
    if qber >= 0.5 {
        return 0.0;
    }
    (q_sift * (1.0 - f_ec * h - h)).max(0.0)
}

/// Every rate-model quantity at one link attenuation.
pub fn evaluate(p: &SourceDetectorParams, attenuation_db: f64) -> KeyRateMetrics {
    let eta_b = p.eta_b(attenuation_db);
    let (y0a, y0b) = noise_probabilities(p);
    let q_coinc = coincidence_probability(p, eta_b);
    let r_coinc_cps = coincidence_rate(p, q_coinc);
    let e = qber_with(p, eta_b, q_coinc);
    let r_dist = distillation_fraction(e, p.q_sift, p.f_ec);
    let r_secure_cps = if r_coinc_cps > 0.0 {
        r_coinc_cps * r_dist
    } else {
        0.0
    };
    KeyRateMetrics {
        attenuation_db,
        eta_b,
        y0a,
        y0b,
        q_coinc,
        r_coinc_cps,
        qber: e,
        visibility: visibility(e),
        snr: snr(e),
        r_dist,
        r_secure_cps,
    }
}

pub fn secure_key_rate(p: &SourceDetectorParams, attenuation_db: f64) -> f64 {
    evaluate(p, attenuation_db).r_secure_cps
}

/// Seconds to accumulate `n_required` coincidences; infinite without signal.
pub fn bell_test_time(p: &SourceDetectorParams, attenuation_db: f64, n_required: f64) -> f64 {
    let r = evaluate(p, attenuation_db).r_coinc_cps;
    if r > 0.0 {
        n_required / r
    } else {
        f64::INFINITY
    }
}

/// Attenuation at which the QBER first reaches `threshold`, by bisection on
/// `[lo_db, hi_db]`. `None` when the threshold is not crossed in the interval.
pub fn qber_crossing_db(
    p: &SourceDetectorParams,
    threshold: f64,
    lo_db: f64,
    hi_db: f64,
) -> Option<f64> {
    let f = |a: f64| qber(p, p.eta_b(a)) - threshold;
    let (mut lo, mut hi) = (lo_db, hi_db);
    if f(lo) >= 0.0 || f(hi) < 0.0 {
        return None;
    }
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Which parts of a pass count towards the key.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationSettings {
    pub min_elevation_rad: f64,
    /// Samples with a higher loss contribute nothing.
    pub loss_cutoff_db: f64,
    /// Usable window, centred on closest approach.
    pub max_window_s: f64,
    pub dt_s: f64,
}

impl Default for IntegrationSettings {
    fn default() -> Self {
        IntegrationSettings {
            min_elevation_rad: 20f64.to_radians(),
            loss_cutoff_db: 45.0,
            max_window_s: 300.0,
            dt_s: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassKeySample {
    pub t_s: f64,
    pub slant_range_km: f64,
    pub elevation_rad: f64,
    pub attenuation_db: f64,
    /// Whether the sample lies inside the usable window and below the cutoff.
    pub used: bool,
    pub r_secure_cps: f64,
    pub cumulative_bits: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PassKey {
    pub samples: Vec<PassKeySample>,
    pub total_bits: f64,
}

/// Secure key accumulated over one encounter (trapezoidal rule).
pub fn key_per_pass(scenario: &ScenarioConfig) -> Result<PassKey> {
    let settings = &scenario.integration;
    let profile = pass_profile(&scenario.orbit, settings.dt_s, settings.min_elevation_rad)?;
    let link = scenario.link_params();
    let mut samples = Vec::with_capacity(profile.len());
    let mut total = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for s in profile {
        let attenuation_db = link_attenuation_db(
            &link,
            &scenario.atmosphere,
            &scenario.link_options,
            s.slant_range_km,
            s.zenith_rad,
        )?;
        let used = s.t_s.abs() <= settings.max_window_s / 2.0 + 1e-9
            && attenuation_db <= settings.loss_cutoff_db;
        let rate = if used {
            secure_key_rate(&scenario.source, attenuation_db)
        } else {
            0.0
        };
        if let Some((t0, r0)) = prev {
            total += 0.5 * (rate + r0) * (s.t_s - t0);
        }
        prev = Some((s.t_s, rate));
        samples.push(PassKeySample {
            t_s: s.t_s,
            slant_range_km: s.slant_range_km,
            elevation_rad: s.elevation_rad,
            attenuation_db,
            used,
            r_secure_cps: rate,
            cumulative_bits: total,
        });
    }
    Ok(PassKey {
        samples,
        total_bits: total,
    })
}

/// Fried-parameter climatology: `(r0, days per year)` bins.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FriedHistogram {
    pub bins: Vec<(f64, f64)>,
}

impl FriedHistogram {
    pub fn new(bins: Vec<(f64, f64)>) -> Result<Self> {
        let h = FriedHistogram { bins };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, &(r0, days)) in self.bins.iter().enumerate() {
            if !(r0 > 0.0) {
                return domain(format!("histogram bin {i}: r0 must be > 0, got {r0}"));
            }
            if !(days >= 0.0) {
                return domain(format!("histogram bin {i}: days must be >= 0, got {days}"));
            }
            if i > 0 && r0 <= self.bins[i - 1].0 {
                return domain(format!(
                    "histogram bin {i}: r0 values must be strictly increasing"
                ));
            }
        }
        Ok(())
    }

    pub fn total_days(&self) -> f64 {
        self.bins.iter().map(|b| b.1).sum()
    }

    /// Number of passes falling in each bin when `passes_per_year` are spread
    /// over the histogram in proportion to its day counts.
    pub fn pass_shares(&self, passes_per_year: f64) -> Vec<f64> {
        let total = self.total_days();
        self.bins
            .iter()
            .map(|&(_, d)| {
                if total > 0.0 {
                    passes_per_year * d / total
                } else {
                    0.0
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct YieldBin {
    pub r0_m: f64,
    pub days: f64,
    pub passes: f64,
    pub key_per_pass_bits: f64,
    pub bits: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnualYield {
    pub bins: Vec<YieldBin>,
    pub total_bits: f64,
}

/// Histogram-weighted yearly key, given a per-pass key for each r0.
pub fn annual_yield_with<F>(
    hist: &FriedHistogram,
    passes_per_year: f64,
    mut key_for_r0: F,
) -> Result<AnnualYield>
where
    F: FnMut(f64) -> Result<f64>,
{
    hist.validate()?;
    if !(passes_per_year >= 0.0) {
        return domain(format!(
            "passes per year must be >= 0, got {passes_per_year}"
        ));
    }
    let shares = hist.pass_shares(passes_per_year);
    let mut bins = Vec::with_capacity(shares.len());
    for (&(r0_m, days), passes) in hist.bins.iter().zip(shares) {
        let key = key_for_r0(r0_m)?;
        bins.push(YieldBin {
            r0_m,
            days,
            passes,
            key_per_pass_bits: key,
            bits: key * passes,
        });
    }
    let total_bits = bins.iter().map(|b| b.bits).sum();
    Ok(AnnualYield { bins, total_bits })
}

/// Histogram-weighted yearly key for a scenario, re-running the pass
/// integration at each bin's r0.
pub fn annual_yield(
    hist: &FriedHistogram,
    passes_per_year: f64,
    scenario: &ScenarioConfig,
) -> Result<AnnualYield> {
    annual_yield_with(hist, passes_per_year, |r0| {
        let mut s = scenario.clone();
        s.atmosphere.fried_r0_m = r0;
        Ok(key_per_pass(&s)?.total_bits)
    })
}
