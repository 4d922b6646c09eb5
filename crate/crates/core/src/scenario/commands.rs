use super::config::ScenarioConfig;
use super::csv::{Cell, Table};
use super::ARTIFACT_VERSION;
use crate::data_budget::{
    bits_per_event, encode_stream, housekeeping_volume, pass_volume, quantize, stream_rate,
    DELTA_BITS,
};
use crate::error::{Error, Result};
use crate::keyrate::{self, annual_yield, evaluate, key_per_pass, SourceDetectorParams};
use crate::link::{background_count_rate, link_attenuation_db, LinkParams};
use crate::orbit::{pass_profile, pass_sample, point_ahead_from, slew_rates, OrbitSpec};
use crate::sim::{estimate_metrics, match_coincidences, recover_clock_offset, simulate_streams};
use rayon::prelude::*;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    PassProfile,
    LinkSweep,
    QberSweep,
    KeyrateSweep,
    PassKey,
    MonteCarlo,
    DataBudget,
    AnnualYield,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::PassProfile,
        Command::LinkSweep,
        Command::QberSweep,
        Command::KeyrateSweep,
        Command::PassKey,
        Command::MonteCarlo,
        Command::DataBudget,
        Command::AnnualYield,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::PassProfile => "pass-profile",
            Command::LinkSweep => "link-sweep",
            Command::QberSweep => "qber-sweep",
            Command::KeyrateSweep => "keyrate-sweep",
            Command::PassKey => "pass-key",
            Command::MonteCarlo => "montecarlo",
            Command::DataBudget => "databudget",
            Command::AnnualYield => "annual-yield",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::UnknownCommand(s.to_string()))
    }
}

fn header(table: &mut Table, command: Command, scenario: &ScenarioConfig) {
    table.note(ARTIFACT_VERSION);
    table.note(format!("command = {}", command.name()));
    for (k, v) in &scenario.overrides {
        table.note(format!("override {k} = {v}"));
    }
    table.note("resolved scenario:");
    for line in scenario.dump().lines() {
        table.note(format!("  {line}"));
    }
}

fn cols(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Runs one command and writes its output files into `out_dir`.
/// Returns the paths written, in a fixed order.
pub fn run(command: Command, scenario: &ScenarioConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    scenario.validate()?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| Error::Io(format!("{}: {e}", out_dir.display())))?;
    let mut written = Vec::new();
    let mut table = match command {
        Command::PassProfile => pass_profile_table(scenario)?,
        Command::LinkSweep => link_sweep_table(scenario)?,
        Command::QberSweep => qber_sweep_table(scenario),
        Command::KeyrateSweep => keyrate_sweep_table(scenario),
        Command::PassKey => pass_key_table(scenario)?,
        Command::MonteCarlo => montecarlo(scenario, out_dir, &mut written)?,
        Command::DataBudget => databudget_table(scenario)?,
        Command::AnnualYield => annual_yield_table(scenario)?,
    };
    let mut full = Table::new(Vec::new());
    header(&mut full, command, scenario);
    full.header.append(&mut table.header);
    full.columns = table.columns;
    full.rows = table.rows;
    let path = out_dir.join(format!("{}.csv", command.name()));
    full.write(&path)?;
    written.insert(0, path);
    Ok(written)
}

/// Runs `command` once per value of `key`, each into `out_dir/<key>=<value>/`.
/// Points run in parallel; the returned paths follow the order of `values`.
pub fn sweep(
    key: &str,
    values: &[String],
    base: &ScenarioConfig,
    command: Command,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    // Resolve the key before doing any work so a bad path fails even for one value.
    base.get(key)?;
    let scenarios = values
        .iter()
        .map(|v| {
            let mut s = base.clone();
            s.set(key, v)?;
            Ok((v, s))
        })
        .collect::<Result<Vec<_>>>()?;
    let outputs = scenarios
        .par_iter()
        .map(|(v, s)| run(command, s, &out_dir.join(format!("{key}={}", v.trim()))))
        .collect::<Result<Vec<_>>>()?;
    Ok(outputs.into_iter().flatten().collect())
}

fn pass_profile_table(s: &ScenarioConfig) -> Result<Table> {
    let mut t = Table::new(cols(&[
        "t_s",
        "slant_range_km",
        "zenith_rad",
        "elevation_rad",
        "ogs_slew_rad_s",
        "sat_slew_rad_s",
        "point_ahead_rad",
    ]));
    for p in pass_profile(&s.orbit, s.integration.dt_s, 0.0)? {
        let rates = slew_rates(&s.orbit, p.t_s);
        let pa = point_ahead_from(p.slant_range_km, rates.ogs_rate_rad_s);
        t.push(vec![
            p.t_s.into(),
            p.slant_range_km.into(),
            p.zenith_rad.into(),
            p.elevation_rad.into(),
            rates.ogs_rate_rad_s.into(),
            rates.sat_rate_rad_s.into(),
            pa.angle_rad.into(),
        ]);
    }
    Ok(t)
}

fn link_sweep_table(s: &ScenarioConfig) -> Result<Table> {
    let g = &s.sweep;
    let mut columns = vec!["t_s".to_string()];
    let mut series: Vec<(OrbitSpec, LinkParams, crate::link::Atmosphere)> = Vec::new();
    for &offset in &g.offsets_km {
        columns.push(format!("elevation_rad_offset{offset}km"));
        for &wl in &g.wavelengths_m {
            for &r0 in &g.fried_r0_m {
                columns.push(format!("a_db_offset{offset}km_{:.0}nm_r0_{r0}m", wl * 1e9));
                let orbit = OrbitSpec {
                    ground_track_offset_km: offset,
                    ..s.orbit
                };
                let link = LinkParams {
                    wavelength_m: wl,
                    ..s.link_params()
                };
                let atm = crate::link::Atmosphere {
                    fried_r0_m: r0,
                    ..s.atmosphere
                };
                series.push((orbit, link, atm));
            }
        }
    }
    let mut t = Table::new(columns);
    t.note("a_db is nan where the satellite is below the horizon");
    let per_offset = g.wavelengths_m.len() * g.fried_r0_m.len();
    let n = (g.time_half_span_s / s.integration.dt_s + 1e-9).floor() as i64;
    for k in -n..=n {
        let time = k as f64 * s.integration.dt_s;
        let mut row: Vec<Cell> = vec![time.into()];
        for (oi, &offset) in g.offsets_km.iter().enumerate() {
            let orbit = OrbitSpec {
                ground_track_offset_km: offset,
                ..s.orbit
            };
            let p = pass_sample(&orbit, time);
            row.push(p.elevation_rad.into());
            for (orbit, link, atm) in &series[oi * per_offset..(oi + 1) * per_offset] {
                let a = if p.above_horizon() {
                    let p = pass_sample(orbit, time);
                    link_attenuation_db(link, atm, &s.link_options, p.slant_range_km, p.zenith_rad)?
                } else {
                    f64::NAN
                };
                row.push(a.into());
            }
        }
        t.push(row);
    }
    Ok(t)
}

fn with_dark(p: &SourceDetectorParams, d_b: f64) -> SourceDetectorParams {
    SourceDetectorParams { d_b_cps: d_b, ..*p }
}

fn qber_sweep_table(s: &ScenarioConfig) -> Table {
    let mut columns = vec!["attenuation_db".to_string()];
    for d in &s.sweep.dark_counts_cps {
        for q in ["qber", "snr", "visibility", "coincidence_rate_cps"] {
            columns.push(format!("{q}_dcr{d}"));
        }
    }
    let mut t = Table::new(columns);
    t.note("dcr is the satellite dark count rate per detector");
    for a in s.sweep.attenuation_points() {
        let mut row: Vec<Cell> = vec![a.into()];
        for &d in &s.sweep.dark_counts_cps {
            let m = evaluate(&with_dark(&s.source, d), a);
            row.extend([
                m.qber.into(),
                m.snr.into(),
                m.visibility.into(),
                m.r_coinc_cps.into(),
            ]);
        }
        t.push(row);
    }
    t
}

fn keyrate_sweep_table(s: &ScenarioConfig) -> Table {
    let mut columns = vec!["attenuation_db".to_string()];
    for tau in &s.sweep.tau_s {
        for d in &s.sweep.dark_counts_cps {
            columns.push(format!("r_secure_cps_tau{:.0}ps_dcr{d}", tau * 1e12));
        }
    }
    let mut t = Table::new(columns);
    t.note("mean pairs per window held fixed; pair rate = mu / tau");
    for a in s.sweep.attenuation_points() {
        let mut row: Vec<Cell> = vec![a.into()];
        for &tau in &s.sweep.tau_s {
            for &d in &s.sweep.dark_counts_cps {
                let p = SourceDetectorParams {
                    tau_s: tau,
                    ..with_dark(&s.source, d)
                };
                row.push(keyrate::secure_key_rate(&p, a).into());
            }
        }
        t.push(row);
    }
    t
}

fn pass_key_table(s: &ScenarioConfig) -> Result<Table> {
    let pk = key_per_pass(s)?;
    let mut t = Table::new(cols(&[
        "t_s",
        "slant_range_km",
        "elevation_rad",
        "attenuation_db",
        "used",
        "r_secure_cps",
        "cumulative_bits",
    ]));
    t.note(format!(
        "total_bits = {}",
        super::format_number(pk.total_bits)
    ));
    for p in pk.samples {
        t.push(vec![
            p.t_s.into(),
            p.slant_range_km.into(),
            p.elevation_rad.into(),
            p.attenuation_db.into(),
            Cell::Int(p.used as i64),
            p.r_secure_cps.into(),
            p.cumulative_bits.into(),
        ]);
    }
    Ok(t)
}

fn montecarlo(s: &ScenarioConfig, out_dir: &Path, written: &mut Vec<PathBuf>) -> Result<Table> {
    let cfg = &s.sim;
    let tau = s.analysis.coincidence_window_s;
    let streams = simulate_streams(cfg)?;
    let (alice, bob) = (streams.alice_tags(), streams.bob_tags());
    let matches = match_coincidences(&alice, &bob, tau, cfg.clock_offset_s)?;
    let est = estimate_metrics(&matches, &alice, &bob, cfg.duration_s)?;

    let p = cfg.analytic_params(tau);
    let q = keyrate::coincidence_probability(&p, cfg.eta_b);
    let rate = keyrate::coincidence_rate(&p, q);
    let e = keyrate::qber(&p, cfg.eta_b);
    let v = keyrate::visibility(e);
    // Visibility error propagated from the QBER error.
    let v_sigma = 2.0 / (1.0 + est.qber).powi(2) * est.qber_sigma;

    let mut t = Table::new(cols(&[
        "metric",
        "analytic",
        "monte_carlo",
        "mc_sigma",
        "z_score",
    ]));
    t.note(format!("alice_events = {}", alice.len()));
    t.note(format!("bob_events = {}", bob.len()));
    t.note(format!("coincidences = {}", est.coincidences));
    t.note(format!("sifted = {}", est.sifted));
    let z = |a: f64, m: f64, sd: f64| if sd > 0.0 { (m - a) / sd } else { f64::NAN };
    for (name, a, m, sd) in [
        (
            "coincidence_rate_cps",
            rate,
            est.coincidence_rate_cps,
            est.coincidence_rate_sigma,
        ),
        ("qber", e, est.qber, est.qber_sigma),
        ("visibility", v, est.visibility, v_sigma),
    ] {
        t.push(vec![
            name.into(),
            a.into(),
            m.into(),
            sd.into(),
            z(a, m, sd).into(),
        ]);
    }

    let clock_path = out_dir.join("montecarlo_clock.csv");
    let mut clock = Table::new(cols(&[
        "block",
        "block_start_s",
        "offset_s",
        "peak_counts",
        "threshold",
    ]));
    clock.note(ARTIFACT_VERSION);
    match recover_clock_offset(&alice, &bob, &s.analysis.clock) {
        Ok(offsets) => {
            for o in offsets {
                clock.push(vec![
                    Cell::Int(o.block as i64),
                    o.block_start_s.into(),
                    o.offset_s.into(),
                    o.peak_counts.into(),
                    o.threshold.into(),
                ]);
            }
        }
        Err(err) => clock.note(format!("clock recovery failed: {err}")),
    }
    clock.write(&clock_path)?;
    written.push(clock_path);

    for (name, tags) in [("alice", &alice), ("bob", &bob)] {
        let records = quantize(tags, s.data.delta_t_s)?;
        let bytes = encode_stream(&records, s.data.delta_t_s, s.data.codec_mode)?;
        let path = out_dir.join(format!("montecarlo_{name}.nqtt"));
        std::fs::write(&path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        written.push(path);
    }
    Ok(t)
}

fn databudget_table(s: &ScenarioConfig) -> Result<Table> {
    let d = &s.data;
    let bits = bits_per_event(d.horizon_s, d.delta_t_s)?;
    let bits_used = bits.byte_aligned as f64;
    let rate = stream_rate(d.event_rate_cps, bits_used);
    let vol = pass_volume(d.experiment_s, rate, d.passes_per_day);
    let relative_bits = (DELTA_BITS + 2) as f64;
    let relative_rate = stream_rate(d.event_rate_cps, relative_bits);
    let hk = housekeeping_volume(
        d.housekeeping_channels,
        d.housekeeping_bytes,
        d.housekeeping_rate_hz,
        d.housekeeping_duration_s,
    );
    let background = background_count_rate(&s.background, &s.link_params(), 0.0)?;
    let mut t = Table::new(cols(&["quantity", "value", "unit"]));
    let rows: [(&str, f64, &str); 10] = [
        ("bits_per_event_exact", bits.exact, "bit"),
        ("bits_per_event_aligned", bits_used, "bit"),
        ("stream_rate", rate, "B/s"),
        ("per_experiment", vol.per_experiment_bytes, "B"),
        ("per_day", vol.per_day_bytes, "B"),
        ("relative_bits_per_event", relative_bits, "bit"),
        ("relative_stream_rate", relative_rate, "B/s"),
        (
            "relative_saving",
            1.0 - relative_bits / bits_used,
            "fraction",
        ),
        ("housekeeping_per_day", hk, "B"),
        ("background_rate_zenith", background, "cps"),
    ];
    for (name, v, unit) in rows {
        t.push(vec![name.into(), v.into(), unit.into()]);
    }
    t.note(format!(
        "codec mode for time-tag files = {}",
        d.codec_mode.name()
    ));
    Ok(t)
}

fn annual_yield_table(s: &ScenarioConfig) -> Result<Table> {
    let y = annual_yield(&s.annual.histogram, s.annual.passes_per_year, s)?;
    let mut t = Table::new(cols(&[
        "r0_m",
        "days",
        "passes",
        "key_per_pass_bits",
        "bits",
    ]));
    t.note(format!(
        "total_bits = {}",
        super::format_number(y.total_bits)
    ));
    for b in y.bins {
        t.push(vec![
            b.r0_m.into(),
            b.days.into(),
            b.passes.into(),
            b.key_per_pass_bits.into(),
            b.bits.into(),
        ]);
    }
    Ok(t)
}
