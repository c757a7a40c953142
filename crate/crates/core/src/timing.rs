//! Derived MAC durations: beacon airtimes, RAW segment lengths and frame
//! exchange times.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{MacConstants, Scenario};

/// Stations addressable by one page of the TIM bitmap.
pub const STATIONS_PER_PAGE: u32 = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Dl,
    Ul,
}

impl Direction {
    pub const BOTH: [Direction; 2] = [Direction::Dl, Direction::Ul];
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Dl => "dl",
            Direction::Ul => "ul",
        })
    }
}

fn airtime(bytes: u32, rate: f64) -> f64 {
    bytes as f64 * 8.0 / rate
}

pub fn pages(n_sta: u32) -> u32 {
    n_sta.div_ceil(STATIONS_PER_PAGE)
}

/// DTIM beacon length in bytes.
pub fn dtim_beacon_bytes(n_tim: u32, n_pages: u32) -> f64 {
    let n = n_tim as f64;
    25.0 + (11.0 + 17.0 / 4.0 * n + 256.0 / n) * n_pages as f64
}

/// TIM beacon length in bytes.
pub fn tim_beacon_bytes(n_tim: u32, n_pages: u32) -> f64 {
    25.0 + (10.0 + 256.0 / n_tim as f64) * n_pages as f64
}

pub fn dtim_beacon_time(n_tim: u32, n_pages: u32, r_min: f64) -> f64 {
    dtim_beacon_bytes(n_tim, n_pages) * 8.0 / r_min
}

pub fn tim_beacon_time(n_tim: u32, n_pages: u32, r_min: f64) -> f64 {
    tim_beacon_bytes(n_tim, n_pages) * 8.0 / r_min
}

/// Multicast segment after each DTIM: one DATA frame at `r_min` plus DIFS.
pub fn multicast_time(mac: &MacConstants, r_min: f64) -> f64 {
    airtime(mac.l_data, r_min) + mac.t_difs
}

/// Channel time one TIM interval leaves to the RAW after its beacon.
///
/// The first interval of a page carries the DTIM beacon and the multicast
/// segment; the others carry a TIM beacon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalLayout {
    pub interval: f64,
    pub first_available: f64,
    pub other_available: f64,
}

impl IntervalLayout {
    pub fn new(
        dtim_period: f64,
        n_tim: u32,
        n_pages: u32,
        t_mc: f64,
        t_dtim: f64,
        t_tim: f64,
    ) -> Result<Self> {
        let interval = dtim_period / (n_tim as f64 * n_pages as f64);
        let first_available = interval - t_mc - t_dtim;
        let other_available = interval - t_tim;
        if first_available <= 0.0 || (n_tim > 1 && other_available <= 0.0) {
            return Err(Error::Infeasible(format!(
                "T = {dtim_period} s leaves no RAW time with N_TIM = {n_tim} and {n_pages} page(s) \
                 (TIM interval {interval:.6} s)"
            )));
        }
        Ok(IntervalLayout {
            interval,
            first_available,
            other_available,
        })
    }
}

/// Mean RAW segment length for one direction across the TIM intervals of a page.
#[allow(clippy::too_many_arguments)]
pub fn raw_time(
    dtim_period: f64,
    n_tim: u32,
    n_pages: u32,
    beta: f64,
    t_mc: f64,
    t_dtim: f64,
    t_tim: f64,
) -> Result<f64> {
    let layout = IntervalLayout::new(dtim_period, n_tim, n_pages, t_mc, t_dtim, t_tim)?;
    let n = n_tim as f64;
    Ok((1.0 / n) * (layout.first_available * beta)
        + ((n - 1.0) / n) * (layout.other_available * beta))
}

/// Complete exchange: PS-Poll/DATA/ACK for DL, RTS/CTS/DATA/ACK for UL, then DIFS.
pub fn exchange_time(dir: Direction, rate: f64, mac: &MacConstants) -> f64 {
    match dir {
        Direction::Dl => {
            airtime(mac.l_ps_poll, rate)
                + mac.t_sifs
                + airtime(mac.l_data, rate)
                + mac.t_sifs
                + airtime(mac.l_ack, rate)
                + mac.t_difs
        }
        Direction::Ul => {
            airtime(mac.l_rts, rate)
                + mac.t_sifs
                + airtime(mac.l_cts, rate)
                + mac.t_sifs
                + airtime(mac.l_data, rate)
                + mac.t_sifs
                + airtime(mac.l_ack, rate)
                + mac.t_difs
        }
    }
}

/// Channel time lost to a PS-Poll or RTS collision.
pub fn collision_time(dir: Direction, rate: f64, mac: &MacConstants) -> f64 {
    match dir {
        Direction::Dl => airtime(mac.l_ps_poll, rate) + mac.t_difs,
        Direction::Ul => airtime(mac.l_rts, rate) + mac.t_difs,
    }
}

/// Channel time of an exchange whose DATA frame is corrupted.
pub fn error_time(dir: Direction, rate: f64, mac: &MacConstants) -> f64 {
    match dir {
        Direction::Dl => {
            airtime(mac.l_ps_poll, rate) + mac.t_sifs + airtime(mac.l_data, rate) + mac.t_difs
        }
        Direction::Ul => {
            airtime(mac.l_rts, rate)
                + mac.t_sifs
                + airtime(mac.l_cts, rate)
                + mac.t_sifs
                + airtime(mac.l_data, rate)
                + mac.t_difs
        }
    }
}

/// Frame airtimes at one rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameTimes {
    pub data: f64,
    pub ps_poll: f64,
    pub ack: f64,
    pub rts: f64,
    pub cts: f64,
}

impl FrameTimes {
    pub fn at(rate: f64, mac: &MacConstants) -> Self {
        FrameTimes {
            data: airtime(mac.l_data, rate),
            ps_poll: airtime(mac.l_ps_poll, rate),
            ack: airtime(mac.l_ack, rate),
            rts: airtime(mac.l_rts, rate),
            cts: airtime(mac.l_cts, rate),
        }
    }
}

/// Exchange, collision and error durations for one direction at one rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExchangeTimes {
    pub exchange: f64,
    pub collision: f64,
    pub error: f64,
}

impl ExchangeTimes {
    pub fn at(dir: Direction, rate: f64, mac: &MacConstants) -> Self {
        ExchangeTimes {
            exchange: exchange_time(dir, rate, mac),
            collision: collision_time(dir, rate, mac),
            error: error_time(dir, rate, mac),
        }
    }
}

/// Rate-independent timing of one (N_TIM, T) configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct MacTiming {
    pub dtim_period: f64,
    pub n_tim: u32,
    pub n_pages: u32,
    /// Stations per TIM group (real-valued).
    pub n_sta_per_group: f64,
    pub r_min: f64,
    pub t_dtim_beacon: f64,
    pub t_tim_beacon: f64,
    pub t_mc: f64,
    pub t_raw_dl: f64,
    pub t_raw_ul: f64,
    pub layout: IntervalLayout,
    pub mac: MacConstants,
}

impl MacTiming {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        let mac = scenario.mac.clone();
        let r_min = scenario.phy.r_min();
        let n_pages = pages(scenario.n_sta);
        let n_tim = scenario.n_tim;
        let t_dtim = dtim_beacon_time(n_tim, n_pages, r_min);
        let t_tim = tim_beacon_time(n_tim, n_pages, r_min);
        let t_mc = multicast_time(&mac, r_min);
        let t = scenario.dtim_period;
        let layout = IntervalLayout::new(t, n_tim, n_pages, t_mc, t_dtim, t_tim)?;
        let t_raw_dl = raw_time(t, n_tim, n_pages, scenario.beta_dl, t_mc, t_dtim, t_tim)?;
        let t_raw_ul = raw_time(t, n_tim, n_pages, scenario.beta_ul, t_mc, t_dtim, t_tim)?;
        Ok(MacTiming {
            dtim_period: t,
            n_tim,
            n_pages,
            n_sta_per_group: scenario.n_sta as f64 / n_tim as f64,
            r_min,
            t_dtim_beacon: t_dtim,
            t_tim_beacon: t_tim,
            t_mc,
            t_raw_dl,
            t_raw_ul,
            layout,
            mac,
        })
    }

    pub fn t_raw(&self, dir: Direction) -> f64 {
        match dir {
            Direction::Dl => self.t_raw_dl,
            Direction::Ul => self.t_raw_ul,
        }
    }

    pub fn exchange(&self, dir: Direction, rate: f64) -> ExchangeTimes {
        ExchangeTimes::at(dir, rate, &self.mac)
    }

    /// Upper bound on packets of one direction a RAW segment can carry.
    /// Reported only; the energy model does not use it.
    pub fn max_packets(&self, dir: Direction, rate: f64) -> u64 {
        (self.t_raw(dir) / exchange_time(dir, rate, &self.mac)).floor() as u64
    }

    /// One `(quantity, seconds)` row per derived duration at `rate`.
    pub fn breakdown(&self, rate: f64) -> Vec<(String, f64)> {
        let mut rows = vec![
            ("t_dtim_beacon".to_string(), self.t_dtim_beacon),
            ("t_tim_beacon".to_string(), self.t_tim_beacon),
            ("t_mc".to_string(), self.t_mc),
            ("t_raw_dl".to_string(), self.t_raw_dl),
            ("t_raw_ul".to_string(), self.t_raw_ul),
            ("tim_interval".to_string(), self.layout.interval),
        ];
        for dir in Direction::BOTH {
            let x = self.exchange(dir, rate);
            rows.push((format!("t_exchange_{dir}"), x.exchange));
            rows.push((format!("t_collision_{dir}"), x.collision));
            rows.push((format!("t_error_{dir}"), x.error));
        }
        rows
    }

    pub fn write_breakdown_csv<W: Write>(&self, rate: f64, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["quantity", "seconds"])?;
        w.write_record(["n_pages", &self.n_pages.to_string()])?;
        w.write_record(["n_sta_per_group", &self.n_sta_per_group.to_string()])?;
        for (name, v) in self.breakdown(rate) {
            w.write_record([name, v.to_string()])?;
        }
        w.flush().map_err(|e| Error::Output(e.to_string()))?;
        Ok(())
    }
}
