//! Photon-event Monte Carlo of the ground/satellite detection streams, with
//! coincidence matching, error-rate estimation and clock-offset recovery.
//!
//! Generation is split into fixed-length blocks. Each block draws from its
//! own ChaCha stream keyed by `(seed, block index)`, so the output does not
//! depend on how blocks are scheduled across threads.
//!
//! Estimators take [`TimeTag`] slices, which carry no origin information;
//! [`DetectionEvent::origin`] is only for diagnostics.

use crate::error::{Error, Result};
use crate::keyrate::{CoincidenceModel, SourceDetectorParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;

/// Upper bound on the expected number of generated events.
pub const MAX_EVENTS: f64 = 1e8;
/// Length of one generation block.
pub const GENERATION_BLOCK_S: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    Alice,
    Bob,
}

/// Polarization analysis basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    /// H/V
    Rectilinear,
    /// D/A
    Diagonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Origin {
    /// Photon from entangled pair `pair`.
    Signal {
        pair: u64,
    },
    Dark,
    Background,
}

/// What a time tagger records for one click.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeTag {
    pub time_s: f64,
    pub basis: Basis,
    pub outcome: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionEvent {
    pub tag: TimeTag,
    pub channel: Channel,
    pub origin: Origin,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub pair_rate_cps: f64,
    pub duration_s: f64,
    pub eta_a: f64,
    pub eta_b: f64,
    /// Dark rate per ground detector.
    pub d_a_cps: f64,
    /// Dark rate per satellite detector.
    pub d_b_cps: f64,
    /// Satellite background, all detectors.
    pub b_cps: f64,
    pub n_det: u32,
    /// Per-detection Gaussian timing jitter.
    pub jitter_sigma_s: f64,
    pub e_d: f64,
    pub clock_offset_s: f64,
    pub clock_drift_ppb: f64,
    pub rng_seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            pair_rate_cps: 1e6,
            duration_s: 2.0,
            eta_a: 0.6,
            eta_b: 1e-2,
            d_a_cps: 100.0,
            d_b_cps: 100.0,
            b_cps: 400.0,
            n_det: 4,
            jitter_sigma_s: 100e-12 / std::f64::consts::SQRT_2,
            e_d: 0.01,
            clock_offset_s: 0.0,
            clock_drift_ppb: 0.0,
            rng_seed: 1,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0) || !self.duration_s.is_finite() {
            return Err(Error::Domain(format!(
                "duration must be > 0, got {}",
                self.duration_s
            )));
        }
        for (name, v) in [
            ("pair_rate_cps", self.pair_rate_cps),
            ("d_a_cps", self.d_a_cps),
            ("d_b_cps", self.d_b_cps),
            ("b_cps", self.b_cps),
            ("jitter_sigma_s", self.jitter_sigma_s),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!("{name} must be >= 0, got {v}")));
            }
        }
        for (name, v) in [
            ("eta_a", self.eta_a),
            ("eta_b", self.eta_b),
            ("e_d", self.e_d),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain(format!("{name} must be in [0, 1], got {v}")));
            }
        }
        if !self.clock_offset_s.is_finite() || !self.clock_drift_ppb.is_finite() {
            return Err(Error::Domain(
                "clock offset and drift must be finite".into(),
            ));
        }
        Ok(())
    }

    fn alice_noise_cps(&self) -> f64 {
        self.n_det as f64 * self.d_a_cps
    }

    fn bob_dark_cps(&self) -> f64 {
        self.n_det as f64 * self.d_b_cps
    }

    /// Expected number of generated detection events over the whole run.
    pub fn expected_events(&self) -> f64 {
        let r = self.pair_rate_cps;
        let per_s = r * (self.eta_a + self.eta_b)
            + self.alice_noise_cps()
            + self.bob_dark_cps()
            + self.b_cps;
        per_s * self.duration_s
    }

    /// Analytic rate-model parameters describing the same experiment with a
    /// coincidence window `tau_s`.
    pub fn analytic_params(&self, tau_s: f64) -> SourceDetectorParams {
        SourceDetectorParams {
            mu: self.pair_rate_cps * tau_s,
            tau_s,
            d_a_cps: self.d_a_cps,
            d_b_cps: self.d_b_cps,
            b_cps: self.b_cps,
            n_det: self.n_det,
            pde: 1.0,
            eta_a: self.eta_a,
            e0: 0.5,
            e_d: self.e_d,
            model: CoincidenceModel::MaFongLo,
            ..SourceDetectorParams::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SimulatedStreams {
    pub alice: Vec<DetectionEvent>,
    pub bob: Vec<DetectionEvent>,
}

impl SimulatedStreams {
    pub fn alice_tags(&self) -> Vec<TimeTag> {
        self.alice.iter().map(|e| e.tag).collect()
    }

    pub fn bob_tags(&self) -> Vec<TimeTag> {
        self.bob.iter().map(|e| e.tag).collect()
    }
}

fn random_basis<R: Rng>(rng: &mut R) -> Basis {
    if rng.random::<bool>() {
        Basis::Diagonal
    } else {
        Basis::Rectilinear
    }
}

/// Poisson arrival times on `[start, end)`, sorted.
fn poisson_times<R: Rng>(rng: &mut R, rate: f64, start: f64, end: f64) -> Vec<f64> {
    let mean = rate * (end - start);
    if mean <= 0.0 {
        return Vec::new();
    }
    let n = Poisson::new(mean).expect("positive mean").sample(rng) as usize;
    let mut t: Vec<f64> = (0..n).map(|_| rng.random_range(start..end)).collect();
    t.sort_by(f64::total_cmp);
    t
}

struct BlockOutput {
    alice: Vec<DetectionEvent>,
    bob: Vec<DetectionEvent>,
}

fn simulate_block(cfg: &SimConfig, block: u64, jitter: Option<Normal<f64>>) -> BlockOutput {
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.rng_seed);
    rng.set_stream(block);
    let start = block as f64 * GENERATION_BLOCK_S;
    let end = (start + GENERATION_BLOCK_S).min(cfg.duration_s);
    let r = cfg.pair_rate_cps;
    let (ea, eb) = (cfg.eta_a, cfg.eta_b);

    let mut alice = Vec::new();
    let mut bob = Vec::new();
    let pair_base = block << 40;
    let mut pair_id = 0u64;
    let mut next_pair = || {
        pair_id += 1;
        pair_base + pair_id
    };

    // Independent thinning of the pair process into both/only-A/only-B.
    let both = poisson_times(&mut rng, r * ea * eb, start, end);
    let only_a = poisson_times(&mut rng, r * ea * (1.0 - eb), start, end);
    let only_b = poisson_times(&mut rng, r * eb * (1.0 - ea), start, end);

    for t in both {
        let pair = next_pair();
        let ba = random_basis(&mut rng);
        let bb = random_basis(&mut rng);
        let oa: bool = rng.random();
        let ob = if ba == bb {
            oa ^ rng.random_bool(cfg.e_d)
        } else {
            rng.random()
        };
        alice.push(event(t, ba, oa, Channel::Alice, Origin::Signal { pair }));
        bob.push(event(t, bb, ob, Channel::Bob, Origin::Signal { pair }));
    }
    for t in only_a {
        let pair = next_pair();
        let (b, o) = (random_basis(&mut rng), rng.random());
        alice.push(event(t, b, o, Channel::Alice, Origin::Signal { pair }));
    }
    for t in only_b {
        let pair = next_pair();
        let (b, o) = (random_basis(&mut rng), rng.random());
        bob.push(event(t, b, o, Channel::Bob, Origin::Signal { pair }));
    }
    for t in poisson_times(&mut rng, cfg.alice_noise_cps(), start, end) {
        let (b, o) = (random_basis(&mut rng), rng.random());
        alice.push(event(t, b, o, Channel::Alice, Origin::Dark));
    }
    for t in poisson_times(&mut rng, cfg.bob_dark_cps(), start, end) {
        let (b, o) = (random_basis(&mut rng), rng.random());
        bob.push(event(t, b, o, Channel::Bob, Origin::Dark));
    }
    for t in poisson_times(&mut rng, cfg.b_cps, start, end) {
        let (b, o) = (random_basis(&mut rng), rng.random());
        bob.push(event(t, b, o, Channel::Bob, Origin::Background));
    }

    if let Some(j) = jitter {
        for e in alice.iter_mut().chain(bob.iter_mut()) {
            e.tag.time_s += j.sample(&mut rng);
        }
    }
    let scale = 1.0 + cfg.clock_drift_ppb * 1e-9;
    for e in bob.iter_mut() {
        e.tag.time_s = scale * e.tag.time_s + cfg.clock_offset_s;
    }
    BlockOutput { alice, bob }
}

fn event(
    time_s: f64,
    basis: Basis,
    outcome: bool,
    channel: Channel,
    origin: Origin,
) -> DetectionEvent {
    DetectionEvent {
        tag: TimeTag {
            time_s,
            basis,
            outcome,
        },
        channel,
        origin,
    }
}

fn finish(mut events: Vec<DetectionEvent>) -> Vec<DetectionEvent> {
    events.retain(|e| e.tag.time_s >= 0.0);
    events.sort_by(|a, b| a.tag.time_s.total_cmp(&b.tag.time_s));
    events
}

/// Generates time-sorted ground and satellite detection streams.
pub fn simulate_streams(cfg: &SimConfig) -> Result<SimulatedStreams> {
    cfg.validate()?;
    let expected = cfg.expected_events();
    if expected > MAX_EVENTS {
        return Err(Error::Resource {
            expected,
            limit: MAX_EVENTS,
        });
    }
    let jitter = (cfg.jitter_sigma_s > 0.0)
        .then(|| Normal::new(0.0, cfg.jitter_sigma_s).expect("finite sigma"));
    let n_blocks = (cfg.duration_s / GENERATION_BLOCK_S).ceil() as u64;
    let blocks: Vec<BlockOutput> = (0..n_blocks)
        .into_par_iter()
        .map(|k| simulate_block(cfg, k, jitter))
        .collect();
    let mut alice = Vec::new();
    let mut bob = Vec::new();
    for b in blocks {
        alice.extend(b.alice);
        bob.extend(b.bob);
    }
    Ok(SimulatedStreams {
        alice: finish(alice),
        bob: finish(bob),
    })
}

fn check_sorted(tags: &[TimeTag], name: &str) -> Result<()> {
    if let Some(i) = tags.windows(2).position(|w| w[1].time_s < w[0].time_s) {
        return Err(Error::Contract(format!(
            "{name} stream not sorted at index {}",
            i + 1
        )));
    }
    Ok(())
}

/// Pairs ground and satellite events whose times agree within `tau_s / 2`
/// after removing `offset_s` from the satellite clock.
///
/// All candidate pairs are ranked by time difference and accepted greedily
/// (nearest first); each event is used at most once. Output is ordered by
/// ground index.
pub fn match_coincidences(
    alice: &[TimeTag],
    bob: &[TimeTag],
    tau_s: f64,
    offset_s: f64,
) -> Result<Vec<(usize, usize)>> {
    check_sorted(alice, "alice")?;
    check_sorted(bob, "bob")?;
    if !(tau_s >= 0.0) {
        return Err(Error::Domain(format!(
            "coincidence window must be >= 0, got {tau_s}"
        )));
    }
    let half = tau_s / 2.0;
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    let mut lo = 0usize;
    for (i, a) in alice.iter().enumerate() {
        while lo < bob.len() && bob[lo].time_s - offset_s < a.time_s - half {
            lo += 1;
        }
        let mut j = lo;
        while j < bob.len() && bob[j].time_s - offset_s <= a.time_s + half {
            candidates.push(((bob[j].time_s - offset_s - a.time_s).abs(), i, j));
            j += 1;
        }
    }
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut used_a = vec![false; alice.len()];
    let mut used_b = vec![false; bob.len()];
    let mut matches = Vec::new();
    for (_, i, j) in candidates {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            matches.push((i, j));
        }
    }
    matches.sort_unstable();
    Ok(matches)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsEstimate {
    pub coincidences: usize,
    pub sifted: usize,
    pub errors: usize,
    pub coincidence_rate_cps: f64,
    /// One-sigma Poisson error on the rate.
    pub coincidence_rate_sigma: f64,
    pub qber: f64,
    /// One-sigma binomial error on the QBER.
    pub qber_sigma: f64,
    pub visibility: f64,
}

/// Sifts matched pairs measured in the same basis and counts disagreements.
pub fn estimate_metrics(
    matches: &[(usize, usize)],
    alice: &[TimeTag],
    bob: &[TimeTag],
    duration_s: f64,
) -> Result<MetricsEstimate> {
    let mut sifted = 0usize;
    let mut errors = 0usize;
    for &(i, j) in matches {
        let (a, b) = (alice.get(i), bob.get(j));
        let (Some(a), Some(b)) = (a, b) else {
            return Err(Error::Contract(format!("match ({i}, {j}) out of range")));
        };
        if a.basis == b.basis {
            sifted += 1;
            if a.outcome != b.outcome {
                errors += 1;
            }
        }
    }
    if sifted == 0 {
        return Err(Error::UndefinedQber);
    }
    let n = matches.len() as f64;
    let qber = errors as f64 / sifted as f64;
    Ok(MetricsEstimate {
        coincidences: matches.len(),
        sifted,
        errors,
        coincidence_rate_cps: n / duration_s,
        coincidence_rate_sigma: n.sqrt() / duration_s,
        qber,
        qber_sigma: (qber * (1.0 - qber) / sifted as f64).sqrt(),
        visibility: crate::keyrate::visibility(qber),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClockRecoveryConfig {
    /// Histogram bin width.
    pub bin_s: f64,
    /// Length of each correlation block.
    pub block_s: f64,
    /// Offsets searched: `[-max_lag_s, max_lag_s)`.
    pub max_lag_s: f64,
}

impl Default for ClockRecoveryConfig {
    fn default() -> Self {
        ClockRecoveryConfig {
            bin_s: 1e-9,
            block_s: 0.1,
            max_lag_s: 20e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockOffset {
    pub block: usize,
    pub block_start_s: f64,
    /// Satellite minus ground time at the correlation peak.
    pub offset_s: f64,
    pub peak_counts: f64,
    pub threshold: f64,
}

/// Bins excluded on each side of the peak when measuring the noise floor.
const PEAK_GUARD_BINS: usize = 10;

/// Estimates the satellite clock offset block by block from the peak of the
/// cross-correlation of the two streams (the histogram of time differences
/// at `bin_s` resolution), refined by a three-point parabola.
pub fn recover_clock_offset(
    alice: &[TimeTag],
    bob: &[TimeTag],
    cfg: &ClockRecoveryConfig,
) -> Result<Vec<BlockOffset>> {
    check_sorted(alice, "alice")?;
    check_sorted(bob, "bob")?;
    if !(cfg.bin_s > 0.0) || !(cfg.block_s > 0.0) || !(cfg.max_lag_s > cfg.bin_s) {
        return Err(Error::Domain(
            "clock recovery needs 0 < bin < max_lag and block > 0".into(),
        ));
    }
    let Some(last) = alice.last() else {
        return Ok(Vec::new());
    };
    let n_blocks = (last.time_s / cfg.block_s).floor() as usize + 1;
    let n_bins = (2.0 * cfg.max_lag_s / cfg.bin_s).ceil() as usize;

    (0..n_blocks)
        .into_par_iter()
        .map(|k| {
            let start = k as f64 * cfg.block_s;
            let end = start + cfg.block_s;
            let a0 = alice.partition_point(|t| t.time_s < start);
            let a1 = alice.partition_point(|t| t.time_s < end);
            let mut hist = vec![0u32; n_bins];
            let mut lo = bob.partition_point(|t| t.time_s < start - cfg.max_lag_s);
            for a in &alice[a0..a1] {
                while lo < bob.len() && bob[lo].time_s < a.time_s - cfg.max_lag_s {
                    lo += 1;
                }
                let mut j = lo;
                while j < bob.len() && bob[j].time_s < a.time_s + cfg.max_lag_s {
                    let idx = ((bob[j].time_s - a.time_s + cfg.max_lag_s) / cfg.bin_s).floor();
                    if idx >= 0.0 && (idx as usize) < n_bins {
                        hist[idx as usize] += 1;
                    }
                    j += 1;
                }
            }
            locate_peak(&hist, k, start, cfg)
        })
        .collect()
}

fn locate_peak(
    hist: &[u32],
    block: usize,
    block_start_s: f64,
    cfg: &ClockRecoveryConfig,
) -> Result<BlockOffset> {
    let (peak_idx, &peak) = hist
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.cmp(y.1).then(y.0.cmp(&x.0)))
        .expect("non-empty histogram");
    let lo = peak_idx.saturating_sub(PEAK_GUARD_BINS);
    let hi = (peak_idx + PEAK_GUARD_BINS + 1).min(hist.len());
    let floor: Vec<f64> = hist[..lo]
        .iter()
        .chain(&hist[hi..])
        .map(|&c| c as f64)
        .collect();
    let (mean, std) = if floor.is_empty() {
        (0.0, 0.0)
    } else {
        let m = floor.iter().sum::<f64>() / floor.len() as f64;
        let v = floor.iter().map(|c| (c - m) * (c - m)).sum::<f64>() / floor.len() as f64;
        (m, v.sqrt())
    };
    // Poisson floor of one count so an empty background still needs a real peak.
    let sigma = std.max(mean.sqrt()).max(1.0);
    let threshold = mean + 5.0 * sigma;
    let peak = peak as f64;
    if peak <= threshold {
        return Err(Error::LockFailure {
            block,
            peak,
            threshold,
        });
    }
    let at = |i: usize| hist[i] as f64;
    let mut delta = 0.0;
    if peak_idx > 0 && peak_idx + 1 < hist.len() {
        let (l, c, r) = (at(peak_idx - 1), peak, at(peak_idx + 1));
        let curvature = l - 2.0 * c + r;
        if curvature < 0.0 {
            delta = (0.5 * (l - r) / curvature).clamp(-0.5, 0.5);
        }
    }
    Ok(BlockOffset {
        block,
        block_start_s,
        offset_s: -cfg.max_lag_s + (peak_idx as f64 + 0.5 + delta) * cfg.bin_s,
        peak_counts: peak,
        threshold,
    })
}

/// Least-squares slope of the recovered offset per block.
pub fn offset_slope_per_block(offsets: &[BlockOffset]) -> Option<f64> {
    if offsets.len() < 2 {
        return None;
    }
    let n = offsets.len() as f64;
    let mx = offsets.iter().map(|o| o.block as f64).sum::<f64>() / n;
    let my = offsets.iter().map(|o| o.offset_s).sum::<f64>() / n;
    let sxy: f64 = offsets
        .iter()
        .map(|o| (o.block as f64 - mx) * (o.offset_s - my))
        .sum();
    let sxx: f64 = offsets.iter().map(|o| (o.block as f64 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tag(t: f64) -> TimeTag {
        TimeTag {
            time_s: t,
            basis: Basis::Rectilinear,
            outcome: false,
        }
    }

    fn quiet(cfg: SimConfig) -> SimConfig {
        SimConfig {
            d_a_cps: 0.0,
            d_b_cps: 0.0,
            b_cps: 0.0,
            ..cfg
        }
    }

    #[test]
    fn zero_rates_give_empty_streams() {
        let cfg = SimConfig {
            pair_rate_cps: 0.0,
            ..quiet(SimConfig::default())
        };
        let s = simulate_streams(&cfg).unwrap();
        assert!(s.alice.is_empty() && s.bob.is_empty());
    }

    #[test]
    fn perfect_detection_pairs_up() {
        let cfg = SimConfig {
            pair_rate_cps: 1e4,
            duration_s: 1.5,
            eta_a: 1.0,
            eta_b: 1.0,
            jitter_sigma_s: 0.0,
            ..quiet(SimConfig::default())
        };
        let s = simulate_streams(&cfg).unwrap();
        assert_eq!(s.alice.len(), s.bob.len());
        assert!(!s.alice.is_empty());
        for (a, b) in s.alice.iter().zip(&s.bob) {
            assert_eq!(a.tag.time_s, b.tag.time_s);
            assert_eq!(a.origin, b.origin);
        }
    }

    #[test]
    fn bob_signal_count_is_poisson() {
        let cfg = SimConfig {
            pair_rate_cps: 1e6,
            eta_b: 1e-3,
            duration_s: 100.0,
            eta_a: 0.0,
            ..quiet(SimConfig::default())
        };
        let s = simulate_streams(&cfg).unwrap();
        let n = s.bob.len() as f64;
        let mean = 1e6 * 1e-3 * 100.0;
        assert!((n - mean).abs() < 4.0 * mean.sqrt(), "{n}");
    }

    #[test]
    fn event_guard() {
        let cfg = SimConfig {
            pair_rate_cps: 1e8,
            duration_s: 10.0,
            ..SimConfig::default()
        };
        assert!(matches!(
            simulate_streams(&cfg),
            Err(Error::Resource { .. })
        ));
    }

    #[test]
    fn same_seed_same_streams() {
        let cfg = SimConfig {
            duration_s: 1.2,
            ..SimConfig::default()
        };
        assert_eq!(
            simulate_streams(&cfg).unwrap(),
            simulate_streams(&cfg).unwrap()
        );
        let other = SimConfig { rng_seed: 2, ..cfg };
        assert_ne!(
            simulate_streams(&cfg).unwrap(),
            simulate_streams(&other).unwrap()
        );
    }

    #[test]
    fn matching_basics() {
        let a: Vec<_> = [1.0, 2.0, 3.0].into_iter().map(tag).collect();
        let far: Vec<_> = [10.0, 11.0].into_iter().map(tag).collect();
        assert!(match_coincidences(&a, &far, 1e-9, 0.0).unwrap().is_empty());
        assert_eq!(
            match_coincidences(&a, &a, 1e-9, 0.0).unwrap(),
            vec![(0, 0), (1, 1), (2, 2)]
        );
        let shifted: Vec<_> = [1.5, 2.5, 3.5].into_iter().map(tag).collect();
        assert_eq!(
            match_coincidences(&a, &shifted, 1e-9, 0.5).unwrap().len(),
            3
        );
        let unsorted: Vec<_> = [2.0, 1.0].into_iter().map(tag).collect();
        assert!(matches!(
            match_coincidences(&unsorted, &a, 1e-9, 0.0),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn matching_prefers_nearest() {
        let a: Vec<_> = [0.0, 1.0e-9].into_iter().map(tag).collect();
        let b: Vec<_> = [0.9e-9].into_iter().map(tag).collect();
        assert_eq!(match_coincidences(&a, &b, 2e-9, 0.0).unwrap(), vec![(1, 0)]);
    }

    #[test]
    fn noiseless_qber_is_zero() {
        let cfg = SimConfig {
            pair_rate_cps: 1e5,
            eta_a: 1.0,
            eta_b: 1.0,
            e_d: 0.0,
            jitter_sigma_s: 0.0,
            duration_s: 1.0,
            ..quiet(SimConfig::default())
        };
        let s = simulate_streams(&cfg).unwrap();
        let (a, b) = (s.alice_tags(), s.bob_tags());
        let m = match_coincidences(&a, &b, 1e-9, 0.0).unwrap();
        let est = estimate_metrics(&m, &a, &b, cfg.duration_s).unwrap();
        assert_eq!(est.errors, 0);
        assert_eq!(est.qber, 0.0);
        assert_eq!(est.visibility, 1.0);
    }

    #[test]
    fn noise_only_qber_near_half() {
        let cfg = SimConfig {
            pair_rate_cps: 0.0,
            d_a_cps: 2.5e5,
            d_b_cps: 2.5e5,
            b_cps: 0.0,
            duration_s: 1.0,
            ..SimConfig::default()
        };
        let s = simulate_streams(&cfg).unwrap();
        let (a, b) = (s.alice_tags(), s.bob_tags());
        let m = match_coincidences(&a, &b, 100e-9, 0.0).unwrap();
        let est = estimate_metrics(&m, &a, &b, 1.0).unwrap();
        assert!(est.sifted > 1000);
        assert!(
            (est.qber - 0.5).abs() < 3.0 * est.qber_sigma.max(0.5 / (est.sifted as f64).sqrt())
        );
    }

    #[test]
    fn no_sifted_pairs_is_undefined() {
        let a = vec![tag(1.0)];
        let b = vec![TimeTag {
            basis: Basis::Diagonal,
            ..tag(1.0)
        }];
        let m = match_coincidences(&a, &b, 1e-9, 0.0).unwrap();
        assert_eq!(estimate_metrics(&m, &a, &b, 1.0), Err(Error::UndefinedQber));
        assert_eq!(
            estimate_metrics(&[], &a, &b, 1.0),
            Err(Error::UndefinedQber)
        );
    }

    #[test]
    fn recovers_injected_offset() {
        let cfg = SimConfig {
            duration_s: 0.3,
            clock_offset_s: 12.345e-6,
            ..SimConfig::default()
        };
        let s = simulate_streams(&cfg).unwrap();
        let rc = ClockRecoveryConfig::default();
        let offsets = recover_clock_offset(&s.alice_tags(), &s.bob_tags(), &rc).unwrap();
        assert_eq!(offsets.len(), 3);
        for o in offsets {
            assert!(
                (o.offset_s - 12.345e-6).abs() <= rc.bin_s / 2.0,
                "{}",
                o.offset_s
            );
        }
    }

    #[test]
    fn zero_offset_recovered() {
        let cfg = SimConfig {
            duration_s: 0.2,
            ..SimConfig::default()
        };
        let s = simulate_streams(&cfg).unwrap();
        let rc = ClockRecoveryConfig::default();
        for o in recover_clock_offset(&s.alice_tags(), &s.bob_tags(), &rc).unwrap() {
            assert!(o.offset_s.abs() <= rc.bin_s / 2.0);
        }
    }

    #[test]
    fn uncorrelated_streams_fail_to_lock() {
        let cfg = SimConfig {
            pair_rate_cps: 0.0,
            d_a_cps: 1e4,
            d_b_cps: 1e3,
            duration_s: 0.1,
            ..SimConfig::default()
        };
        let s = simulate_streams(&cfg).unwrap();
        let rc = ClockRecoveryConfig {
            max_lag_s: 2e-6,
            ..ClockRecoveryConfig::default()
        };
        let r = recover_clock_offset(&s.alice_tags(), &s.bob_tags(), &rc);
        assert!(matches!(r, Err(Error::LockFailure { .. })), "{r:?}");
    }
}
