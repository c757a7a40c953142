//! Deployment descriptions: station population, traffic, MAC constants, radio
//! and power profiles.
//!
//! Scenarios are stored as TOML. Every section except the top-level fields is
//! optional in a file and falls back to the defaults below, so a minimal file
//! only needs the deployment itself:
//!
//! ```toml
//! name = "greenhouse"
//! n_sta = 120
//! environment = "indoor"
//! mean_dl_interval = 240.0
//! mean_ul_interval = 60.0
//!
//! [area]
//! width = 40.0
//! height = 25.0
//! ```
//!
//! See `scenarios/SCHEMA.md` in the crate root for the full list of keys.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::link_budget::{default_mcs_table, McsEntry};

/// Environment variable naming a directory searched for `<name>.toml` when a
/// scenario name is not one of the builtins.
pub const SCENARIO_DIR_ENV: &str = "AH_ENERGY_SCENARIO_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Environment {
    Indoor,
    Outdoor,
}

impl fmt::Display for Environment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Environment::Indoor => f.write_str("indoor"),
            Environment::Outdoor => f.write_str("outdoor"),
        }
    }
}

/// Rectangular deployment area with the AP at its center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Area {
    pub width: f64,
    pub height: f64,
}

impl Area {
    pub fn square(side: f64) -> Self {
        Area {
            width: side,
            height: side,
        }
    }

    /// Largest possible station-to-AP distance (half the diagonal).
    pub fn max_distance(&self) -> f64 {
        0.5 * self.width.hypot(self.height)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MacConstants {
    pub t_sifs: f64,
    pub t_difs: f64,
    pub t_slot: f64,
    pub cw_min: u32,
    pub cw_max: u32,
    pub m_col: u32,
    pub m_err: u32,
    pub l_data: u32,
    pub l_ps_poll: u32,
    pub l_ack: u32,
    pub l_rts: u32,
    pub l_cts: u32,
    pub p_e_dl: f64,
    pub p_e_ul: f64,
}

impl Default for MacConstants {
    fn default() -> Self {
        MacConstants {
            t_sifs: 160e-6,
            t_difs: 264e-6,
            t_slot: 52e-6,
            cw_min: 16,
            cw_max: 1024,
            m_col: 7,
            m_err: 1,
            l_data: 100,
            l_ps_poll: 14,
            l_ack: 14,
            l_rts: 20,
            l_cts: 14,
            p_e_dl: 0.0,
            p_e_ul: 0.1,
        }
    }
}

impl MacConstants {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("mac.t_sifs", self.t_sifs),
            ("mac.t_difs", self.t_difs),
            ("mac.t_slot", self.t_slot),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(field, format!("must be > 0, got {v}")));
            }
        }
        if self.cw_min == 0 || self.cw_min > self.cw_max {
            return Err(Error::validation(
                "mac.cw_min",
                format!("need 0 < cw_min <= cw_max, got {} / {}", self.cw_min, self.cw_max),
            ));
        }
        if self.m_col < 1 {
            return Err(Error::validation("mac.m_col", "must be >= 1"));
        }
        if self.m_err < 1 {
            return Err(Error::validation("mac.m_err", "must be >= 1"));
        }
        for (field, v) in [
            ("mac.l_data", self.l_data),
            ("mac.l_ps_poll", self.l_ps_poll),
            ("mac.l_ack", self.l_ack),
            ("mac.l_rts", self.l_rts),
            ("mac.l_cts", self.l_cts),
        ] {
            if v == 0 {
                return Err(Error::validation(field, "frame size must be > 0 bytes"));
            }
        }
        for (field, v) in [("mac.p_e_dl", self.p_e_dl), ("mac.p_e_ul", self.p_e_ul)] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::validation(field, format!("must lie in [0, 1), got {v}")));
            }
        }
        Ok(())
    }
}

/// What station placement does when even the lowest MCS cannot close the link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OutOfRange {
    /// Fail with [`Error::Unreachable`].
    #[default]
    Error,
    /// Keep the station and run it at the lowest MCS.
    LowestMcs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhyProfile {
    pub carrier_freq: f64,
    pub breakpoint_distance: f64,
    pub p_tx_dbm: f64,
    pub g_tx_dbi: f64,
    pub g_rx_dbi: f64,
    pub noise_figure_db: f64,
    pub receiver_temp_k: f64,
    pub bandwidth: f64,
    pub fade_margin_indoor_db: f64,
    pub fade_margin_outdoor_db: f64,
    pub out_of_range: OutOfRange,
    pub mcs_table: Vec<McsEntry>,
}

impl Default for PhyProfile {
    fn default() -> Self {
        PhyProfile {
            carrier_freq: 900e6,
            breakpoint_distance: 5.0,
            p_tx_dbm: 0.0,
            g_tx_dbi: 0.0,
            g_rx_dbi: 3.0,
            noise_figure_db: 3.0,
            receiver_temp_k: 293.0,
            bandwidth: 1e6,
            fade_margin_indoor_db: 3.84,
            fade_margin_outdoor_db: 12.82,
            out_of_range: OutOfRange::Error,
            mcs_table: default_mcs_table(),
        }
    }
}

impl PhyProfile {
    pub fn fade_margin_db(&self, env: Environment) -> f64 {
        match env {
            Environment::Indoor => self.fade_margin_indoor_db,
            Environment::Outdoor => self.fade_margin_outdoor_db,
        }
    }

    /// Lowest data rate in the MCS table; every beacon is sent at this rate.
    pub fn r_min(&self) -> f64 {
        self.mcs_table[0].data_rate
    }

    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("phy.carrier_freq", self.carrier_freq),
            ("phy.breakpoint_distance", self.breakpoint_distance),
            ("phy.receiver_temp_k", self.receiver_temp_k),
            ("phy.bandwidth", self.bandwidth),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(field, format!("must be > 0, got {v}")));
            }
        }
        for (field, v) in [
            ("phy.p_tx_dbm", self.p_tx_dbm),
            ("phy.g_tx_dbi", self.g_tx_dbi),
            ("phy.g_rx_dbi", self.g_rx_dbi),
            ("phy.noise_figure_db", self.noise_figure_db),
            ("phy.fade_margin_indoor_db", self.fade_margin_indoor_db),
            ("phy.fade_margin_outdoor_db", self.fade_margin_outdoor_db),
        ] {
            if !v.is_finite() {
                return Err(Error::validation(field, "must be finite"));
            }
        }
        if self.mcs_table.is_empty() {
            return Err(Error::validation("phy.mcs_table", "must not be empty"));
        }
        for entry in &self.mcs_table {
            entry.validate()?;
        }
        if self
            .mcs_table
            .windows(2)
            .any(|w| w[1].data_rate <= w[0].data_rate)
        {
            return Err(Error::validation(
                "phy.mcs_table",
                "entries must be sorted by strictly increasing data rate",
            ));
        }
        Ok(())
    }
}

/// Transceiver currents per radio state and battery size.
///
/// The default is a placeholder typical of a commodity sub-GHz transceiver
/// (19 mA receive, 25 mA transmit at 0 dBm, 1.5 mA idle, 0.3 uA sleep, two AA
/// cells). Absolute lifetimes computed from it are illustrative only; ratios
/// and fractions do not depend on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerProfile {
    pub i_rx: f64,
    pub i_tx: f64,
    pub i_id: f64,
    pub i_sl: f64,
    /// Supply voltage used to turn charge into energy.
    pub supply_voltage: f64,
    /// Battery capacity in mAh.
    pub battery_capacity: f64,
}

impl Default for PowerProfile {
    fn default() -> Self {
        PowerProfile {
            i_rx: 19.0,
            i_tx: 25.0,
            i_id: 1.5,
            i_sl: 0.0003,
            supply_voltage: 3.0,
            battery_capacity: 2400.0,
        }
    }
}

impl PowerProfile {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("power.i_rx", self.i_rx),
            ("power.i_tx", self.i_tx),
            ("power.i_id", self.i_id),
            ("power.i_sl", self.i_sl),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::validation(field, format!("must be >= 0, got {v}")));
            }
        }
        if !(self.i_sl <= self.i_id && self.i_id <= self.i_rx) {
            return Err(Error::validation(
                "power",
                format!(
                    "need i_sl <= i_id <= i_rx, got {} / {} / {}",
                    self.i_sl, self.i_id, self.i_rx
                ),
            ));
        }
        if !(self.battery_capacity.is_finite() && self.battery_capacity > 0.0) {
            return Err(Error::validation("power.battery_capacity", "must be > 0"));
        }
        if !(self.supply_voltage.is_finite() && self.supply_voltage > 0.0) {
            return Err(Error::validation("power.supply_voltage", "must be > 0"));
        }
        Ok(())
    }

    /// Scale every current by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        PowerProfile {
            i_rx: self.i_rx * factor,
            i_tx: self.i_tx * factor,
            i_id: self.i_id * factor,
            i_sl: self.i_sl * factor,
            ..self.clone()
        }
    }
}

fn default_p_mc() -> f64 {
    0.0
}
fn default_dtim_period() -> f64 {
    1.6
}
fn default_n_tim() -> u32 {
    8
}
fn default_beta() -> f64 {
    0.5
}
fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub n_sta: u32,
    pub environment: Environment,
    /// Expected time between downlink packets for one station (s).
    pub mean_dl_interval: f64,
    /// Expected time between uplink packets for one station (s).
    pub mean_ul_interval: f64,
    /// Probability that a DTIM period carries a multicast packet.
    #[serde(default = "default_p_mc")]
    pub p_mc: f64,
    /// Time between DTIM beacons, `T` (s).
    #[serde(default = "default_dtim_period")]
    pub dtim_period: f64,
    #[serde(default = "default_n_tim")]
    pub n_tim: u32,
    #[serde(default = "default_beta")]
    pub beta_dl: f64,
    #[serde(default = "default_beta")]
    pub beta_ul: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub area: Area,
    #[serde(default)]
    pub mac: MacConstants,
    #[serde(default)]
    pub phy: PhyProfile,
    #[serde(default)]
    pub power: PowerProfile,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.n_sta < 1 {
            return Err(Error::validation("n_sta", "must be >= 1"));
        }
        if self.n_tim < 1 {
            return Err(Error::validation("n_tim", "must be >= 1"));
        }
        if !(self.dtim_period.is_finite() && self.dtim_period > 0.0) {
            return Err(Error::validation(
                "dtim_period",
                format!("must be > 0, got {}", self.dtim_period),
            ));
        }
        for (field, v) in [
            ("mean_dl_interval", self.mean_dl_interval),
            ("mean_ul_interval", self.mean_ul_interval),
        ] {
            // Infinity is allowed and means "no traffic in this direction".
            if v.is_nan() || v <= 0.0 {
                return Err(Error::validation(field, format!("must be > 0, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.p_mc) {
            return Err(Error::validation("p_mc", format!("must lie in [0, 1], got {}", self.p_mc)));
        }
        for (field, v) in [("beta_dl", self.beta_dl), ("beta_ul", self.beta_ul)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::validation(field, format!("must lie in [0, 1], got {v}")));
            }
        }
        if (self.beta_dl + self.beta_ul - 1.0).abs() > 1e-9 {
            return Err(Error::validation(
                "beta_dl",
                format!(
                    "beta_dl + beta_ul must equal 1, got {} + {}",
                    self.beta_dl, self.beta_ul
                ),
            ));
        }
        for (field, v) in [("area.width", self.area.width), ("area.height", self.area.height)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(field, format!("must be > 0, got {v}")));
            }
        }
        self.mac.validate()?;
        self.phy.validate()?;
        self.power.validate()?;
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let scenario: Scenario = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Output(e.to_string()))
    }

    /// Copy with a different TIM group count and DTIM period.
    pub fn with_config(&self, n_tim: u32, dtim_period: f64) -> Self {
        Scenario {
            n_tim,
            dtim_period,
            ..self.clone()
        }
    }
}

/// Read and validate a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Scenario::from_toml_str(&text)
}

pub fn save_scenario(scenario: &Scenario, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, scenario.to_toml_string()?).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn preset(
    name: &str,
    n_sta: u32,
    mean_ul_interval: f64,
    area: Area,
    environment: Environment,
) -> Scenario {
    let mut phy = PhyProfile::default();
    if environment == Environment::Outdoor {
        // The 0 dBm budget does not cover a 1 km square; far stations fall back to MCS0.
        phy.out_of_range = OutOfRange::LowestMcs;
    }
    Scenario {
        name: name.to_string(),
        n_sta,
        environment,
        mean_dl_interval: 240.0,
        mean_ul_interval,
        p_mc: 0.0,
        dtim_period: 1.6,
        n_tim: 8,
        beta_dl: 0.5,
        beta_ul: 0.5,
        seed: 1,
        area,
        mac: MacConstants::default(),
        phy,
        power: PowerProfile::default(),
    }
}

/// The four M2M use cases: agricultural monitoring, smart metering,
/// industrial automation and animal monitoring.
pub fn builtin_scenarios() -> Vec<Scenario> {
    vec![
        preset(
            "agricultural",
            3500,
            120.0,
            Area::square(1000.0),
            Environment::Outdoor,
        ),
        preset(
            "smart_metering",
            15,
            50.0,
            Area {
                width: 8.0,
                height: 10.0,
            },
            Environment::Indoor,
        ),
        preset(
            "industrial",
            500,
            180.0,
            Area::square(250.0),
            Environment::Indoor,
        ),
        preset(
            "animal_monitoring",
            250,
            60.0,
            Area::square(1000.0),
            Environment::Outdoor,
        ),
    ]
}

/// Symmetric load patterns with equal per-period DL and UL packet
/// probabilities (5 %, 15 %, 25 %) in a 100 x 100 m indoor and a
/// 1000 x 1000 m outdoor network of 100 stations.
pub fn load_pattern_scenarios() -> Vec<Scenario> {
    let mut out = Vec::new();
    for (env, side) in [(Environment::Indoor, 100.0), (Environment::Outdoor, 1000.0)] {
        for pct in [5u32, 15, 25] {
            let mut s = preset(
                &format!("{env}_load_{pct}"),
                100,
                1.0,
                Area::square(side),
                env,
            );
            let interval = s.dtim_period / (pct as f64 / 100.0);
            s.mean_dl_interval = interval;
            s.mean_ul_interval = interval;
            out.push(s);
        }
    }
    out
}

fn builtin_names() -> String {
    builtin_scenarios()
        .iter()
        .chain(load_pattern_scenarios().iter())
        .map(|s| s.name.clone())
        .collect::<Vec<_>>()
        .join(", ")
}

/// Look up a builtin (including the load patterns) by name, with a few aliases.
pub fn builtin(name: &str) -> Option<Scenario> {
    let canonical = match name {
        "agricultural_monitoring" | "agriculture" => "agricultural",
        "industrial_automation" => "industrial",
        "animal" => "animal_monitoring",
        "metering" => "smart_metering",
        other => other,
    };
    builtin_scenarios()
        .into_iter()
        .chain(load_pattern_scenarios())
        .find(|s| s.name == canonical)
}

/// Resolve a scenario by builtin name, then by `<name>.toml` in the directory
/// named by [`SCENARIO_DIR_ENV`].
pub fn resolve(name: &str) -> Result<Scenario> {
    if let Some(s) = builtin(name) {
        return Ok(s);
    }
    if let Some(dir) = std::env::var_os(SCENARIO_DIR_ENV) {
        let path = PathBuf::from(dir).join(format!("{name}.toml"));
        if path.is_file() {
            return load_scenario(path);
        }
    }
    Err(Error::UnknownScenario {
        name: name.to_string(),
        available: builtin_names(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal(extra: &str) -> String {
        format!(
            r#"
name = "t"
n_sta = 10
environment = "indoor"
mean_dl_interval = 240.0
mean_ul_interval = 60.0
{extra}

[area]
width = 10.0
height = 10.0
"#
        )
    }

    #[test]
    fn minimal_file_takes_defaults() {
        let s = Scenario::from_toml_str(&minimal("")).unwrap();
        assert_eq!(s.n_tim, 8);
        assert_eq!(s.dtim_period, 1.6);
        assert_eq!(s.mac, MacConstants::default());
        assert_eq!(s.phy.mcs_table.len(), 10);
    }

    #[test]
    fn zero_stations_rejected() {
        let text = minimal("").replace("n_sta = 10", "n_sta = 0");
        match Scenario::from_toml_str(&text) {
            Err(Error::Validation { field, .. }) => assert_eq!(field, "n_sta"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn beta_sum_must_be_one() {
        let text = minimal("beta_dl = 0.6\nbeta_ul = 0.6");
        match Scenario::from_toml_str(&text) {
            Err(Error::Validation { field, reason }) => {
                assert_eq!(field, "beta_dl");
                assert!(reason.contains("must equal 1"));
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn garbage_is_a_parse_error() {
        assert!(matches!(
            Scenario::from_toml_str("n_sta = [1, 2"),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            Scenario::from_toml_str(&minimal("bogus_key = 3")),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn power_ordering_checked() {
        let mut s = builtin("smart_metering").unwrap();
        s.power.i_id = 30.0;
        assert!(matches!(s.validate(), Err(Error::Validation { field: "power", .. })));
    }

    #[test]
    fn unsorted_mcs_table_rejected() {
        let mut s = builtin("industrial").unwrap();
        s.phy.mcs_table.swap(0, 1);
        assert!(s.validate().is_err());
    }

    #[test]
    fn builtins_match_use_case_table() {
        let all = builtin_scenarios();
        assert_eq!(all.len(), 4);
        let expect = [
            ("agricultural", 3500, 120.0, 1000.0, 1000.0, Environment::Outdoor),
            ("smart_metering", 15, 50.0, 8.0, 10.0, Environment::Indoor),
            ("industrial", 500, 180.0, 250.0, 250.0, Environment::Indoor),
            ("animal_monitoring", 250, 60.0, 1000.0, 1000.0, Environment::Outdoor),
        ];
        for (s, (name, n, ul, w, h, env)) in all.iter().zip(expect) {
            assert_eq!(s.name, name);
            assert_eq!(s.n_sta, n);
            assert_eq!(s.mean_ul_interval, ul);
            assert_eq!(s.mean_dl_interval, 240.0);
            assert_eq!((s.area.width, s.area.height), (w, h));
            assert_eq!(s.environment, env);
            assert_eq!(s.dtim_period, 1.6);
            assert_eq!(s.n_tim, 8);
            assert_eq!(s.p_mc, 0.0);
            s.validate().unwrap();
        }
        assert_eq!(builtin("smart_metering").unwrap().n_sta, 15);
        assert_eq!(builtin("animal_monitoring").unwrap().mean_ul_interval, 60.0);
    }

    #[test]
    fn load_patterns_hit_their_probabilities() {
        let pats = load_pattern_scenarios();
        assert_eq!(pats.len(), 6);
        for s in &pats {
            s.validate().unwrap();
            let p = s.dtim_period / s.mean_ul_interval;
            assert!([0.05, 0.15, 0.25].iter().any(|q| (p - q).abs() < 1e-12));
        }
    }

    #[test]
    fn unknown_name_lists_builtins() {
        let err = resolve("nope").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("agricultural") && msg.contains("smart_metering"));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn toml_round_trip_is_identity() {
        for s in builtin_scenarios() {
            let text = s.to_toml_string().unwrap();
            assert_eq!(Scenario::from_toml_str(&text).unwrap(), s);
        }
    }
}
