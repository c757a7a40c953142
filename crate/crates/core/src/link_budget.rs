//! Distance-dependent rate selection.
//!
//! The received power after path loss and fade margin is compared against the
//! thermal noise floor plus the Eb/N0 each MCS needs at its bit rate; a
//! station uses the fastest MCS whose margin is non-negative.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{Environment, OutOfRange, PhyProfile, Scenario};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;
const BOLTZMANN: f64 = 1.380_649e-23;

/// Outdoor pico-cell model: `23.3 + 37.6 log10(d)`.
const OUTDOOR_INTERCEPT_DB: f64 = 23.3;
const OUTDOOR_SLOPE_DB: f64 = 37.6;
/// Indoor slope past the breakpoint, dB per decade.
const INDOOR_FAR_SLOPE_DB: f64 = 35.0;

/// Stream id reserved for station placement draws.
const PLACEMENT_STREAM: u64 = 0x706c_6163_656d_656e;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McsEntry {
    pub mode_name: String,
    pub modulation: String,
    pub code_rate: String,
    /// Bits per second.
    pub data_rate: f64,
    pub required_ebn0_db: f64,
}

impl McsEntry {
    fn new(mode: &str, modulation: &str, code_rate: &str, kbps: f64, ebn0: f64) -> Self {
        McsEntry {
            mode_name: mode.to_string(),
            modulation: modulation.to_string(),
            code_rate: code_rate.to_string(),
            data_rate: kbps * 1e3,
            required_ebn0_db: ebn0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.data_rate.is_finite() && self.data_rate > 0.0) {
            return Err(Error::validation(
                "phy.mcs_table",
                format!("{}: data_rate must be > 0", self.mode_name),
            ));
        }
        if !self.required_ebn0_db.is_finite() {
            return Err(Error::validation(
                "phy.mcs_table",
                format!("{}: required_ebn0_db must be finite", self.mode_name),
            ));
        }
        Ok(())
    }
}

/// 1 MHz MCS0..MCS9.
///
/// Required Eb/N0 is a calibration table, not measured data: it is the SNR
/// ladder behind the 802.11 minimum receiver sensitivities (10 % PER,
/// implementation loss included; 4, 7, 9, 12, 16, 20, 21, 22, 27, 29 dB)
/// converted with `Eb/N0 = SNR - 10 log10(R / B)` at B = 1 MHz.
pub fn default_mcs_table() -> Vec<McsEntry> {
    vec![
        McsEntry::new("MCS0", "BPSK", "1/2", 300.0, 9.23),
        McsEntry::new("MCS1", "QPSK", "1/2", 600.0, 9.22),
        McsEntry::new("MCS2", "QPSK", "3/4", 900.0, 9.46),
        McsEntry::new("MCS3", "16-QAM", "1/2", 1200.0, 11.21),
        McsEntry::new("MCS4", "16-QAM", "3/4", 1800.0, 13.45),
        McsEntry::new("MCS5", "64-QAM", "2/3", 2400.0, 16.20),
        McsEntry::new("MCS6", "64-QAM", "3/4", 2700.0, 16.69),
        McsEntry::new("MCS7", "64-QAM", "5/6", 3000.0, 17.23),
        McsEntry::new("MCS8", "256-QAM", "3/4", 3600.0, 21.44),
        McsEntry::new("MCS9", "256-QAM", "5/6", 4000.0, 22.98),
    ]
}

fn check_distance(d: f64) -> Result<()> {
    if d.is_finite() && d > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("distance must be > 0 m, got {d}")))
    }
}

fn free_space_loss(d: f64, freq: f64) -> f64 {
    20.0 * (4.0 * std::f64::consts::PI * d * freq / SPEED_OF_LIGHT).log10()
}

/// Path loss in dB at distance `d` metres.
pub fn path_loss(d: f64, env: Environment, phy: &PhyProfile) -> Result<f64> {
    check_distance(d)?;
    Ok(match env {
        Environment::Outdoor => OUTDOOR_INTERCEPT_DB + OUTDOOR_SLOPE_DB * d.log10(),
        Environment::Indoor => {
            let d_bp = phy.breakpoint_distance;
            if d <= d_bp {
                free_space_loss(d, phy.carrier_freq)
            } else {
                free_space_loss(d_bp, phy.carrier_freq) + INDOOR_FAR_SLOPE_DB * (d / d_bp).log10()
            }
        }
    })
}

/// Thermal noise power over the channel bandwidth plus noise figure, in dBm.
pub fn noise_floor_dbm(phy: &PhyProfile) -> f64 {
    let kt_b_watts = BOLTZMANN * phy.receiver_temp_k * phy.bandwidth;
    10.0 * (kt_b_watts * 1e3).log10() + phy.noise_figure_db
}

/// Received power in dBm after path loss and fade margin.
pub fn received_power_dbm(d: f64, env: Environment, phy: &PhyProfile) -> Result<f64> {
    Ok(phy.p_tx_dbm + phy.g_tx_dbi + phy.g_rx_dbi - path_loss(d, env, phy)? - phy.fade_margin_db(env))
}

/// Excess SNR over what `mcs` needs at its bit rate; the link closes iff >= 0.
pub fn link_margin(d: f64, mcs: &McsEntry, env: Environment, phy: &PhyProfile) -> Result<f64> {
    let snr = received_power_dbm(d, env, phy)? - noise_floor_dbm(phy);
    let required_snr = mcs.required_ebn0_db + 10.0 * (mcs.data_rate / phy.bandwidth).log10();
    Ok(snr - required_snr)
}

/// Fastest MCS that closes the link at distance `d`.
pub fn select_mcs<'a>(d: f64, env: Environment, phy: &'a PhyProfile) -> Result<&'a McsEntry> {
    let mut best = None;
    for mcs in &phy.mcs_table {
        if link_margin(d, mcs, env, phy)? >= 0.0 {
            best = Some(mcs);
        }
    }
    match best {
        Some(m) => Ok(m),
        None => Err(Error::Unreachable {
            distance: d,
            margin_db: link_margin(d, &phy.mcs_table[0], env, phy)?,
        }),
    }
}

/// Largest distance at which `mcs` still closes, found by bisection.
pub fn max_range(mcs: &McsEntry, env: Environment, phy: &PhyProfile) -> Result<f64> {
    let closes = |d: f64| -> Result<bool> { Ok(link_margin(d, mcs, env, phy)? >= 0.0) };
    let (mut lo, mut hi) = (1e-3, 1e-3);
    if !closes(lo)? {
        return Ok(0.0);
    }
    while closes(hi)? {
        lo = hi;
        hi *= 2.0;
        if hi > 1e9 {
            return Ok(f64::INFINITY);
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if closes(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationPlacement {
    pub station_id: u32,
    /// Position relative to the AP at the area center.
    pub x: f64,
    pub y: f64,
    pub distance: f64,
    pub mcs: String,
    pub assigned_rate: f64,
}

/// Drop `n_sta` stations uniformly over the scenario area and give each the
/// rate its distance to the AP supports. Deterministic in `seed`.
pub fn place_stations(scenario: &Scenario, seed: u64) -> Result<Vec<StationPlacement>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(PLACEMENT_STREAM);
    let phy = &scenario.phy;
    let (w, h) = (scenario.area.width, scenario.area.height);
    let mut out = Vec::with_capacity(scenario.n_sta as usize);
    for id in 0..scenario.n_sta {
        let x = (rng.random::<f64>() - 0.5) * w;
        let y = (rng.random::<f64>() - 0.5) * h;
        // A station exactly on the AP is nudged off it to keep log(d) finite.
        let distance = x.hypot(y).max(1e-3);
        let mcs = match select_mcs(distance, scenario.environment, phy) {
            Ok(m) => m,
            Err(Error::Unreachable { .. }) if phy.out_of_range == OutOfRange::LowestMcs => {
                &phy.mcs_table[0]
            }
            Err(e) => return Err(e),
        };
        out.push(StationPlacement {
            station_id: id,
            x,
            y,
            distance,
            mcs: mcs.mode_name.clone(),
            assigned_rate: mcs.data_rate,
        });
    }
    Ok(out)
}

/// `(rate, count)` pairs in ascending rate order.
pub fn rate_histogram(placements: &[StationPlacement]) -> Vec<(f64, usize)> {
    let mut hist: Vec<(f64, usize)> = Vec::new();
    for p in placements {
        match hist.iter_mut().find(|(r, _)| *r == p.assigned_rate) {
            Some((_, c)) => *c += 1,
            None => hist.push((p.assigned_rate, 1)),
        }
    }
    hist.sort_by(|a, b| a.0.total_cmp(&b.0));
    hist
}

pub fn write_placements_csv<W: Write>(placements: &[StationPlacement], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["station_id", "x", "y", "distance", "mcs", "rate"])?;
    for p in placements {
        w.write_record([
            p.station_id.to_string(),
            p.x.to_string(),
            p.y.to_string(),
            p.distance.to_string(),
            p.mcs.clone(),
            p.assigned_rate.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::Output(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::builtin;
    use approx::assert_relative_eq;

    fn phy() -> PhyProfile {
        PhyProfile::default()
    }

    #[test]
    fn free_space_at_breakpoint() {
        // 20 log10(4 pi * 5 * 900e6 / c), evaluated by hand: 45.512 dB.
        let pl = path_loss(5.0, Environment::Indoor, &phy()).unwrap();
        assert_relative_eq!(pl, 45.5120, epsilon = 1e-3);
    }

    #[test]
    fn outdoor_at_ten_metres() {
        let pl = path_loss(10.0, Environment::Outdoor, &phy()).unwrap();
        assert_relative_eq!(pl, 60.9, epsilon = 1e-12);
    }

    #[test]
    fn indoor_slope_past_breakpoint() {
        let p = phy();
        let at_bp = path_loss(5.0, Environment::Indoor, &p).unwrap();
        let at_50 = path_loss(50.0, Environment::Indoor, &p).unwrap();
        assert_relative_eq!(at_50 - at_bp, 35.0, epsilon = 1e-12);
    }

    #[test]
    fn non_positive_distance_is_domain_error() {
        for d in [0.0, -1.0, f64::NAN] {
            assert!(matches!(
                path_loss(d, Environment::Indoor, &phy()),
                Err(Error::Domain(_))
            ));
            assert!(matches!(
                link_margin(d, &phy().mcs_table[0], Environment::Outdoor, &phy()),
                Err(Error::Domain(_))
            ));
        }
    }

    #[test]
    fn noise_floor_one_megahertz() {
        // kT0B at 293 K over 1 MHz is -113.93 dBm; plus 3 dB noise figure.
        assert_relative_eq!(noise_floor_dbm(&phy()), -110.9305, epsilon = 1e-3);
    }

    #[test]
    fn margin_drops_with_distance_and_requirement() {
        let p = phy();
        let m0 = &p.mcs_table[0];
        let mut prev = f64::INFINITY;
        for d in [1.0, 2.0, 5.0, 7.0, 20.0, 100.0] {
            let m = link_margin(d, m0, Environment::Indoor, &p).unwrap();
            assert!(m < prev);
            prev = m;
        }
        let mut harder = m0.clone();
        harder.required_ebn0_db += 3.0;
        let a = link_margin(30.0, m0, Environment::Outdoor, &p).unwrap();
        let b = link_margin(30.0, &harder, Environment::Outdoor, &p).unwrap();
        assert_relative_eq!(a - b, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn lowest_mcs_reaches_farthest() {
        let p = phy();
        for env in [Environment::Indoor, Environment::Outdoor] {
            let r0 = max_range(&p.mcs_table[0], env, &p).unwrap();
            let r9 = max_range(p.mcs_table.last().unwrap(), env, &p).unwrap();
            assert!(r0 > r9, "{env}: {r0} vs {r9}");
            // Just beyond MCS0 range nothing closes.
            assert!(matches!(
                select_mcs(r0 * 1.01, env, &p),
                Err(Error::Unreachable { .. })
            ));
            assert_eq!(select_mcs(r0 * 0.99, env, &p).unwrap().data_rate, 300e3);
        }
    }

    #[test]
    fn short_range_gets_top_mcs() {
        let p = phy();
        assert_eq!(
            select_mcs(4.9, Environment::Indoor, &p).unwrap().data_rate,
            4000e3
        );
    }

    #[test]
    fn selected_mcs_is_tight() {
        let p = phy();
        for env in [Environment::Indoor, Environment::Outdoor] {
            let mut d = 0.5;
            while d < 400.0 {
                if let Ok(m) = select_mcs(d, env, &p) {
                    assert!(link_margin(d, m, env, &p).unwrap() >= 0.0);
                    let idx = p.mcs_table.iter().position(|e| e == m).unwrap();
                    if let Some(next) = p.mcs_table.get(idx + 1) {
                        assert!(link_margin(d, next, env, &p).unwrap() < 0.0);
                    }
                }
                d *= 1.07;
            }
        }
    }

    #[test]
    fn placement_is_deterministic_and_bounded() {
        let s = builtin("industrial").unwrap();
        let a = place_stations(&s, 7).unwrap();
        let b = place_stations(&s, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, place_stations(&s, 8).unwrap());
        let max = s.area.max_distance();
        assert_eq!(a.len(), 500);
        for p in &a {
            assert!(p.distance > 0.0 && p.distance <= max);
            assert!(s.phy.mcs_table.iter().any(|m| m.data_rate == p.assigned_rate));
        }
    }

    #[test]
    fn smart_metering_all_top_rate() {
        let s = builtin("smart_metering").unwrap();
        // Worst corner is 6.4 m away; MCS9 still has margin there.
        let corner = s.area.max_distance();
        assert_relative_eq!(corner, 6.403, epsilon = 1e-3);
        let top = s.phy.mcs_table.last().unwrap();
        assert!(link_margin(corner, top, s.environment, &s.phy).unwrap() > 0.0);
        for p in place_stations(&s, 3).unwrap() {
            assert_eq!(p.assigned_rate, 4000e3);
        }
    }

    #[test]
    fn unreachable_station_reports_distance() {
        let mut s = builtin("animal_monitoring").unwrap();
        s.phy.out_of_range = OutOfRange::Error;
        match place_stations(&s, 1) {
            Err(Error::Unreachable { distance, .. }) => {
                let r0 = max_range(&s.phy.mcs_table[0], s.environment, &s.phy).unwrap();
                assert!(distance > r0);
            }
            other => panic!("expected unreachable error, got {other:?}"),
        }
    }

    #[test]
    fn csv_export_has_one_row_per_station() {
        let s = builtin("smart_metering").unwrap();
        let placements = place_stations(&s, 1).unwrap();
        let mut buf = Vec::new();
        write_placements_csv(&placements, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 16);
        assert!(text.starts_with("station_id,x,y,distance,mcs,rate\n"));
    }
}
