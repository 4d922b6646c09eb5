//! Acceptance gate. Each test prints one PASS/FAIL line per check and fails
//! if any check in its group fails.

use qkdsim::data_budget::{
    bits_per_event, decode_stream, encode_stream, housekeeping_volume, pass_volume, stream_rate,
    CodecMode, TimeTagRecord, SIX_MONTHS_S,
};
use qkdsim::keyrate::{
    self, accidental_rate, annual_yield_with, bell_test_time, distillation_fraction, evaluate,
    key_per_pass, qber_crossing_db, receiver_singles_cps, FriedHistogram, SourceDetectorParams,
    BELL_TEST_COINCIDENCES,
};
use qkdsim::link::{
    background_count_rate, diffraction_divergence, fried_scale_wavelength, link_attenuation_db,
    Atmosphere, BackgroundModel, LinkOptions, LinkParams,
};
use qkdsim::orbit::{
    orbit_kinematics, pass_sample, point_ahead, slew_rates, visibility_duration_s,
    visibility_half_window, OrbitSpec,
};
use qkdsim::scenario::{self, Command, ScenarioConfig};
use qkdsim::sim::{
    estimate_metrics, match_coincidences, offset_slope_per_block, recover_clock_offset,
    simulate_streams, ClockRecoveryConfig, SimConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Gate {
    criterion: u32,
    failed: Vec<String>,
}

impl Gate {
    fn new(criterion: u32) -> Self {
        Gate {
            criterion,
            failed: Vec::new(),
        }
    }

    fn check(&mut self, name: &str, ok: bool, detail: String) {
        let tag = if ok { "PASS" } else { "FAIL" };
        println!("{tag} [{}] {name}: {detail}", self.criterion);
        if !ok {
            self.failed.push(name.to_string());
        }
    }

    /// `|value - target| <= tol * |target|`.
    fn rel(&mut self, name: &str, value: f64, target: f64, tol: f64) {
        let err = (value - target) / target;
        self.check(
            name,
            err.abs() <= tol,
            format!(
                "{value:.6e} vs {target:.6e} ({:+.3}%, tol {:.2}%)",
                100.0 * err,
                100.0 * tol
            ),
        );
    }

    /// `|value - target| <= tol`.
    fn abs(&mut self, name: &str, value: f64, target: f64, tol: f64) {
        self.check(
            name,
            (value - target).abs() <= tol,
            format!("{value:.6} vs {target:.6} (tol {tol})"),
        );
    }

    /// `target / factor <= value <= target * factor`.
    fn factor(&mut self, name: &str, value: f64, target: f64, factor: f64) {
        self.check(
            name,
            value >= target / factor && value <= target * factor,
            format!("{value:.4e} vs {target:.4e} (within x/{factor})"),
        );
    }

    fn finish(self) {
        assert!(
            self.failed.is_empty(),
            "criterion {} failed: {}",
            self.criterion,
            self.failed.join(", ")
        );
    }
}

fn orbit(offset_km: f64) -> OrbitSpec {
    OrbitSpec::new(550.0, offset_km).unwrap()
}

fn attenuation_at(o: &OrbitSpec, r0: f64, t: f64) -> f64 {
    let s = pass_sample(o, t);
    let atm = Atmosphere {
        fried_r0_m: r0,
        ..Atmosphere::default()
    };
    let link = LinkParams {
        altitude_km: o.altitude_km,
        ..LinkParams::default()
    };
    link_attenuation_db(
        &link,
        &atm,
        &LinkOptions::default(),
        s.slant_range_km,
        s.zenith_rad,
    )
    .unwrap()
}

/// Length of the interval around closest approach with attenuation below `limit_db`.
fn window_below(o: &OrbitSpec, r0: f64, limit_db: f64) -> f64 {
    let horizon = visibility_half_window(o, 1e-3).unwrap();
    if attenuation_at(o, r0, 0.0) >= limit_db {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, horizon);
    if attenuation_at(o, r0, hi) < limit_db {
        return 2.0 * hi;
    }
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if attenuation_at(o, r0, mid) < limit_db {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    2.0 * lo
}

#[test]
fn criterion_1_geometry() {
    let mut g = Gate::new(1);
    let direct = orbit(0.0);
    let rates = slew_rates(&direct, 0.0);
    g.rel(
        "OGS slew rate at zenith (rad/s)",
        rates.ogs_rate_rad_s,
        13.7e-3,
        0.02,
    );
    g.rel(
        "satellite slew rate at zenith (rad/s)",
        rates.sat_rate_rad_s,
        12.6e-3,
        0.02,
    );
    let pa = point_ahead(&direct, 0.0);
    g.rel("one-way light time (s)", pa.light_time_s, 1.83e-3, 0.005);
    g.rel("point-ahead angle (rad)", pa.angle_rad, 25e-6, 0.05);
    g.rel(
        "orbital period (s)",
        orbit_kinematics(&direct).unwrap().period_s,
        96.0 * 60.0,
        0.01,
    );
    for offset in [0.0, 250.0, 500.0] {
        let d = visibility_duration_s(&orbit(offset), 20f64.to_radians());
        g.check(
            &format!("time above 20 deg elevation, {offset} km offset"),
            d > 440.0,
            format!("{d:.1} s (need > 440 s)"),
        );
    }
    g.finish();
}

#[test]
fn criterion_2_link_budget() {
    let mut g = Gate::new(2);
    let r0_1550 = fried_scale_wavelength(0.20, 808e-9, 1550e-9).unwrap();
    g.rel("r0 scaled 808 nm -> 1550 nm (m)", r0_1550, 0.44, 0.02);

    let p = LinkParams::default();
    let spot = diffraction_divergence(&p).unwrap() * 550e3;
    g.rel("diffraction-limited spot at 550 km (m)", spot, 1.08, 0.02);

    let big = LinkParams {
        d_r_m: 2.0 * p.d_r_m,
        ..p
    };
    let atm = Atmosphere::default();
    let opts = LinkOptions::default();
    let a1 = link_attenuation_db(&p, &atm, &opts, 800.0, 0.5).unwrap();
    let a2 = link_attenuation_db(&big, &atm, &opts, 800.0, 0.5).unwrap();
    g.abs(
        "attenuation drop on doubling D_R (dB)",
        a1 - a2,
        20.0 * 2f64.log10(),
        1e-9,
    );
    g.abs(
        "attenuation drop on doubling D_R, two decimals (dB)",
        a1 - a2,
        6.02,
        0.005,
    );

    g.rel(
        "window with A < 45 dB, r0 = 0.20 m, direct (s)",
        window_below(&orbit(0.0), 0.20, 45.0),
        200.0,
        0.15,
    );
    g.rel(
        "window with A < 45 dB, r0 = 0.20 m, 500 km offset (s)",
        window_below(&orbit(500.0), 0.20, 45.0),
        140.0,
        0.15,
    );
    for r0 in [0.30, 0.40] {
        let worst = (-120..=120)
            .map(|t| attenuation_at(&orbit(0.0), r0, t as f64))
            .fold(f64::MIN, f64::max);
        g.check(
            &format!("A < 45 dB over central 240 s, r0 = {r0} m"),
            worst < 45.0,
            format!("max {worst:.3} dB"),
        );
    }
    g.finish();
}

#[test]
fn criterion_3_background() {
    let mut g = Gate::new(3);
    let b =
        background_count_rate(&BackgroundModel::default(), &LinkParams::default(), 0.0).unwrap();
    g.check("background below 400 cps", b < 400.0, format!("{b:.3} cps"));
    g.rel("background golden value (cps)", b, 25.723448, 1e-6);
    g.finish();
}

#[test]
fn criterion_4_key_rate_thresholds() {
    let mut g = Gate::new(4);
    let base = SourceDetectorParams::default();
    let dcr = |d: f64| SourceDetectorParams { d_b_cps: d, ..base };

    let c100 = qber_crossing_db(&dcr(100.0), 0.094, 20.0, 70.0).unwrap_or(f64::NAN);
    g.abs("QBER = 9.4% crossing, DCR 100 (dB)", c100, 47.0, 1.0);
    let c1000 = qber_crossing_db(&dcr(1000.0), 0.094, 20.0, 70.0).unwrap_or(f64::NAN);
    g.abs("QBER = 9.4% crossing, DCR 1000 (dB)", c1000, 40.0, 1.0);

    let zero = |f: f64| {
        let (mut lo, mut hi) = (0.01, 0.2);
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if distillation_fraction(mid, 0.5, f) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    g.abs("distillation zero, f = 1 (QBER)", zero(1.0), 0.110, 0.001);
    g.abs(
        "distillation zero, f = 1.22 (QBER)",
        zero(1.22),
        0.094,
        0.001,
    );

    let ratio = 1.0 / distillation_fraction(0.05, base.q_sift, base.f_ec);
    g.check(
        "coincidences per secure bit at QBER 5%",
        (4.5..=6.0).contains(&ratio),
        format!("{ratio:.3} (need 4.5..6)"),
    );

    for d in [100.0, 250.0] {
        let v = evaluate(&dcr(d), 51.0).visibility;
        g.check(
            &format!("visibility >= 1/sqrt(2) at 51 dB, DCR {d}"),
            v >= std::f64::consts::FRAC_1_SQRT_2,
            format!("{v:.5}"),
        );
    }

    let singles = receiver_singles_cps(1e8, 0.32, 50.0, 0.0);
    g.rel(
        "accidental rate, worked example (cps)",
        accidental_rate(1e8, 0.32, singles, 1e-9),
        10.0,
        0.10,
    );

    let t = bell_test_time(&base, 50.0, BELL_TEST_COINCIDENCES);
    g.check("Bell test time at 50 dB", t < 60.0, format!("{t:.2} s"));
    g.finish();
}

fn pass_key(offset_km: f64, d_b: f64, tau_s: f64, cutoff_db: f64) -> f64 {
    let mut s = ScenarioConfig::default();
    s.orbit.ground_track_offset_km = offset_km;
    s.source.d_b_cps = d_b;
    s.source.tau_s = tau_s;
    s.integration.loss_cutoff_db = cutoff_db;
    key_per_pass(&s).unwrap().total_bits
}

#[test]
fn criterion_5_pass_key() {
    let mut g = Gate::new(5);
    let conservative = SourceDetectorParams::default();
    assert_eq!(conservative.pair_rate_cps(), 1e8);
    assert_eq!(SourceDetectorParams::improved().pair_rate_cps(), 4e8);

    g.factor(
        "conservative, DCR 250, direct (bits)",
        pass_key(0.0, 250.0, 1e-9, 45.0),
        1.2e5,
        2.0,
    );
    g.factor(
        "conservative, DCR 250, 500 km offset (bits)",
        pass_key(500.0, 250.0, 1e-9, 45.0),
        2.1e4,
        2.0,
    );
    g.factor(
        "conservative, DCR 1000, direct (bits)",
        pass_key(0.0, 1000.0, 1e-9, 45.0),
        7e4,
        2.0,
    );
    let off = pass_key(500.0, 1000.0, 1e-9, 45.0);
    g.check(
        "conservative, DCR 1000, 500 km offset (bits)",
        off == 0.0,
        format!("{off:.4e} (need 0)"),
    );
    g.factor(
        "improved, DCR 1000, direct (bits)",
        pass_key(0.0, 1000.0, 250e-12, 50.0),
        5.1e5,
        2.0,
    );
    g.factor(
        "improved, DCR 1000, 500 km offset (bits)",
        pass_key(500.0, 1000.0, 250e-12, 50.0),
        1.0e5,
        2.0,
    );

    let hist = ScenarioConfig::default().annual.histogram;
    let y = annual_yield_with(&hist, 100.0, |_| Ok(2e5)).unwrap();
    g.check(
        "annual yield, 2e5 bits x 100 passes",
        y.total_bits == 2e7,
        format!("{:.6e}", y.total_bits),
    );
    let flat = FriedHistogram::new(vec![(0.2, 365.0)]).unwrap();
    let y = annual_yield_with(&flat, 100.0, |_| Ok(2e5)).unwrap();
    g.check(
        "annual yield, single bin",
        y.total_bits == 2e7,
        format!("{:.6e}", y.total_bits),
    );
    g.finish();
}

#[test]
fn criterion_6_monte_carlo() {
    let mut g = Gate::new(6);
    let cfg = SimConfig {
        duration_s: 4.0,
        rng_seed: 2024,
        ..SimConfig::default()
    };
    let tau = 1e-9;
    let s = simulate_streams(&cfg).unwrap();
    let (a, b) = (s.alice_tags(), s.bob_tags());
    let m = match_coincidences(&a, &b, tau, 0.0).unwrap();
    let est = estimate_metrics(&m, &a, &b, cfg.duration_s).unwrap();
    g.check(
        "sifted pairs",
        est.sifted >= 10_000,
        format!("{} (need >= 10000)", est.sifted),
    );

    let p = cfg.analytic_params(tau);
    let rate = keyrate::coincidence_rate(&p, keyrate::coincidence_probability(&p, cfg.eta_b));
    let qber = keyrate::qber(&p, cfg.eta_b);
    let vis = keyrate::visibility(qber);
    let v_sigma = 2.0 / (1.0 + est.qber).powi(2) * est.qber_sigma;
    for (name, analytic, mc, sigma) in [
        (
            "coincidence rate (cps)",
            rate,
            est.coincidence_rate_cps,
            est.coincidence_rate_sigma,
        ),
        ("QBER", qber, est.qber, est.qber_sigma),
        ("visibility", vis, est.visibility, v_sigma),
    ] {
        let z = (mc - analytic) / sigma;
        g.check(
            &format!("MC vs analytic {name}"),
            z.abs() <= 3.0,
            format!("mc {mc:.6e} analytic {analytic:.6e} z = {z:+.2}"),
        );
    }

    let sparse = SimConfig {
        duration_s: 1.0,
        eta_b: 1e-3,
        clock_offset_s: 12.345e-6,
        rng_seed: 7,
        ..SimConfig::default()
    };
    let s = simulate_streams(&sparse).unwrap();
    let (a, b) = (s.alice_tags(), s.bob_tags());
    let rc = ClockRecoveryConfig::default();
    let matches = match_coincidences(&a, &b, tau, sparse.clock_offset_s).unwrap();
    let mut per_block = [0usize; 10];
    for &(i, _) in &matches {
        per_block[((a[i].time_s / rc.block_s) as usize).min(9)] += 1;
    }
    let fewest = *per_block.iter().min().unwrap();
    g.check(
        "coincidences in every 100 ms block",
        fewest >= 30,
        format!("fewest {fewest} (need >= 30)"),
    );
    match recover_clock_offset(&a, &b, &rc) {
        Ok(offsets) => {
            let worst = offsets
                .iter()
                .map(|o| (o.offset_s - sparse.clock_offset_s).abs())
                .fold(0.0, f64::max);
            g.check(
                "clock offset error <= bin/2",
                worst <= rc.bin_s / 2.0,
                format!("worst {:.1} ps over {} blocks", worst * 1e12, offsets.len()),
            );
        }
        Err(e) => g.check("clock offset error <= bin/2", false, e.to_string()),
    }

    let drift = SimConfig {
        duration_s: 5.0,
        clock_drift_ppb: 0.1,
        rng_seed: 8,
        ..SimConfig::default()
    };
    let s = simulate_streams(&drift).unwrap();
    let rc = ClockRecoveryConfig {
        bin_s: 50e-12,
        block_s: 0.1,
        max_lag_s: 5e-9,
    };
    let slope = recover_clock_offset(&s.alice_tags(), &s.bob_tags(), &rc)
        .ok()
        .and_then(|o| offset_slope_per_block(&o))
        .unwrap_or(f64::NAN);
    g.rel(
        "offset slope from 0.1 ppb drift (s per block)",
        slope,
        10e-12,
        0.20,
    );
    g.finish();
}

#[test]
fn criterion_7_data_budget() {
    let mut g = Gate::new(7);
    let bits = bits_per_event(SIX_MONTHS_S, 25e-12).unwrap();
    g.abs("bits per event, 6 months at 25 ps", bits.exact, 61.1, 0.05);
    g.check(
        "byte-aligned bits per event",
        bits.byte_aligned == 64,
        format!("{}", bits.byte_aligned),
    );
    let rate = stream_rate(1e4, bits.byte_aligned as f64);
    g.check("stream rate (B/s)", rate == 80_000.0, format!("{rate}"));
    let v = pass_volume(300.0, rate, 3.0);
    g.check(
        "volume per experiment (B)",
        v.per_experiment_bytes == 24e6,
        format!("{}", v.per_experiment_bytes),
    );
    g.check(
        "volume per day (B)",
        v.per_day_bytes == 72e6,
        format!("{}", v.per_day_bytes),
    );
    g.rel(
        "housekeeping per day (B)",
        housekeeping_volume(64, 2.0, 1.0, 86_400.0),
        12e6,
        0.10,
    );

    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let mut t = 0u64;
    let records: Vec<TimeTagRecord> = (0..1_000_000)
        .map(|_| {
            // Exponential-ish gaps around 100 us at 25 ps resolution.
            t += rng.random_range(0..8_000_000u64);
            TimeTagRecord {
                quantized_time: t,
                basis_bit: rng.random(),
                outcome_bit: rng.random(),
            }
        })
        .collect();
    let abs = encode_stream(&records, 25e-12, CodecMode::Absolute).unwrap();
    let rel = encode_stream(&records, 25e-12, CodecMode::Relative).unwrap();
    let back_abs = decode_stream(&abs).unwrap();
    let back_rel = decode_stream(&rel).unwrap();
    g.check(
        "codec round trip, 1e6 events, absolute",
        back_abs.records == records,
        format!("{} bytes", abs.len()),
    );
    g.check(
        "codec round trip, 1e6 events, relative",
        back_rel.records == records,
        format!("{} bytes", rel.len()),
    );
    let saving = 1.0 - rel.len() as f64 / abs.len() as f64;
    g.abs("relative mode size saving", saving, 0.25, 0.005);
    g.finish();
}

#[test]
fn criterion_8_determinism() {
    let mut g = Gate::new(8);
    let mut cfg = ScenarioConfig::default();
    cfg.set("sim.duration_s", "1.0").unwrap();
    cfg.set("sim.rng_seed", "123").unwrap();
    for command in Command::ALL {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let pa = scenario::run(command, &cfg, a.path()).unwrap();
        let pb = scenario::run(command, &cfg, b.path()).unwrap();
        let same = pa.len() == pb.len()
            && pa
                .iter()
                .zip(&pb)
                .all(|(x, y)| std::fs::read(x).unwrap() == std::fs::read(y).unwrap());
        g.check(
            &format!("{} rerun is byte-identical", command.name()),
            same,
            format!("{} file(s)", pa.len()),
        );
    }
    g.finish();
}
