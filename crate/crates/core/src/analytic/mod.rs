//! Closed-form per-DTIM energy model of a TIM station.
//!
//! For each direction the station walks a retry lattice `(i, j)` of `i`
//! PS-Poll/RTS collisions and `j` DATA errors. Every outcome (delivery,
//! error drop, collision drop, RAW-boundary drop) contributes a receive,
//! transmit and idle duration weighted by its probability; sleep is what is
//! left of the DTIM period.

mod probability;

pub use probability::{
    collision_drop_probability, collision_probability, error_drop_probability,
    no_success_probability, packet_probability, success_probability,
};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::link_budget::{place_stations, rate_histogram, StationPlacement};
use crate::scenario::{MacConstants, PowerProfile, Scenario};
use crate::timing::{Direction, ExchangeTimes, FrameTimes, MacTiming};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrafficProbabilities {
    pub p_dl: f64,
    pub p_ul: f64,
    pub p_mc: f64,
    /// Probability the DTIM flags the station's TIM group for downlink.
    pub p_dl_tim: f64,
}

impl TrafficProbabilities {
    pub fn new(scenario: &Scenario, n_sta_per_group: f64) -> Self {
        let t = scenario.dtim_period;
        let p_dl = packet_probability(t, scenario.mean_dl_interval);
        let p_ul = packet_probability(t, scenario.mean_ul_interval);
        TrafficProbabilities {
            p_dl,
            p_ul,
            p_mc: scenario.p_mc,
            p_dl_tim: 1.0 - (1.0 - p_dl).powf(n_sta_per_group),
        }
    }

    pub fn p(&self, dir: Direction) -> f64 {
        match dir {
            Direction::Dl => self.p_dl,
            Direction::Ul => self.p_ul,
        }
    }

    /// Probability the station wakes for its TIM beacon.
    pub fn p_listen_tim(&self) -> f64 {
        self.p_dl_tim + self.p_ul - self.p_dl_tim * self.p_ul
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContentionProfile {
    pub p_c_dl: f64,
    pub p_c_ul: f64,
    pub p_e_dl: f64,
    pub p_e_ul: f64,
    /// Group members with pending traffic, `N_STA_psi * p_psi`.
    pub n_contenders_dl: f64,
    pub n_contenders_ul: f64,
}

impl ContentionProfile {
    pub fn new(traffic: &TrafficProbabilities, n_sta_per_group: f64, mac: &MacConstants) -> Self {
        ContentionProfile {
            p_c_dl: collision_probability(traffic.p_dl, n_sta_per_group, mac.cw_min),
            p_c_ul: collision_probability(traffic.p_ul, n_sta_per_group, mac.cw_min),
            p_e_dl: mac.p_e_dl,
            p_e_ul: mac.p_e_ul,
            n_contenders_dl: n_sta_per_group * traffic.p_dl,
            n_contenders_ul: n_sta_per_group * traffic.p_ul,
        }
    }

    pub fn p_c(&self, dir: Direction) -> f64 {
        match dir {
            Direction::Dl => self.p_c_dl,
            Direction::Ul => self.p_c_ul,
        }
    }

    pub fn p_e(&self, dir: Direction) -> f64 {
        match dir {
            Direction::Dl => self.p_e_dl,
            Direction::Ul => self.p_e_ul,
        }
    }

    pub fn n_contenders(&self, dir: Direction) -> f64 {
        match dir {
            Direction::Dl => self.n_contenders_dl,
            Direction::Ul => self.n_contenders_ul,
        }
    }
}

/// Seconds spent in each radio state during one DTIM period.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct StateTimes {
    pub t_rx: f64,
    pub t_tx: f64,
    pub t_id: f64,
    pub t_sl: f64,
}

impl StateTimes {
    pub fn total(&self) -> f64 {
        self.t_rx + self.t_tx + self.t_id + self.t_sl
    }

    /// Fractions of the period, in `rx, tx, id, sl` order.
    pub fn fractions(&self) -> [f64; 4] {
        let t = self.total();
        [self.t_rx / t, self.t_tx / t, self.t_id / t, self.t_sl / t]
    }

    /// Mean current in mA over the period.
    pub fn mean_current(&self, power: &PowerProfile) -> f64 {
        (self.t_rx * power.i_rx + self.t_tx * power.i_tx + self.t_id * power.i_id + self.t_sl * power.i_sl)
            / self.total()
    }

    fn scaled(&self, w: f64) -> Self {
        StateTimes {
            t_rx: self.t_rx * w,
            t_tx: self.t_tx * w,
            t_id: self.t_id * w,
            t_sl: self.t_sl * w,
        }
    }

    fn add(&mut self, other: &StateTimes) {
        self.t_rx += other.t_rx;
        self.t_tx += other.t_tx;
        self.t_id += other.t_id;
        self.t_sl += other.t_sl;
    }
}

/// Remainder of the period spent asleep.
pub fn sleep_time(t: f64, t_rx: f64, t_tx: f64, t_id: f64) -> Result<f64> {
    let sl = t - t_rx - t_tx - t_id;
    if sl < 0.0 {
        return Err(Error::Infeasible(format!(
            "active time {:.6} s exceeds the DTIM period {t} s",
            t_rx + t_tx + t_id
        )));
    }
    Ok(sl)
}

/// Mean backoff duration over stages `0..=stages`.
pub fn backoff_time(stages: u32, mac: &MacConstants) -> f64 {
    let cap = mac.cw_max as f64 + 1.0;
    let slots: f64 = (0..=stages)
        .map(|k| (2f64.powi(k as i32) * (mac.cw_min as f64 + 1.0)).min(cap) / 2.0)
        .sum();
    mac.t_slot * slots
}

/// One terminal point of the retry lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// Delivered after `i` collisions and `j` errors.
    Success { i: u32, j: u32 },
    /// Dropped on the `m_err`-th DATA error after `i` collisions.
    ErrorDrop { i: u32 },
    /// Dropped on the `m_col`-th collision after `j` errors.
    CollisionDrop { j: u32 },
    /// Gave up at `(i, j)` because the exchange would cross the RAW boundary.
    BoundaryDrop { i: u32, j: u32 },
}

/// Inputs of one direction's four-way sum at a given station rate.
#[derive(Debug, Clone)]
pub struct DirectionModel {
    pub dir: Direction,
    pub p_c: f64,
    pub p_e: f64,
    pub n_contenders: f64,
    pub t_raw: f64,
    pub times: ExchangeTimes,
    pub frames: FrameTimes,
    pub mac: MacConstants,
}

impl DirectionModel {
    pub fn new(
        dir: Direction,
        rate: f64,
        timing: &MacTiming,
        contention: &ContentionProfile,
    ) -> Self {
        DirectionModel {
            dir,
            p_c: contention.p_c(dir),
            p_e: contention.p_e(dir),
            n_contenders: contention.n_contenders(dir),
            t_raw: timing.t_raw(dir),
            times: ExchangeTimes::at(dir, rate, &timing.mac),
            frames: FrameTimes::at(rate, &timing.mac),
            mac: timing.mac.clone(),
        }
    }

    /// Mean channel time taken by the contenders served ahead of this station.
    pub fn foreign_occupancy(&self) -> f64 {
        let (pc, pe, x) = (self.p_c, self.p_e, &self.times);
        self.n_contenders / 2.0
            * ((1.0 - pc) * (1.0 - pe) * x.exchange + pc * x.collision + (1.0 - pc) * pe * x.error)
    }

    /// 1 if the `(i, j)` attempt still ends inside the RAW segment, else 0.
    pub fn raw_fit(&self, i: u32, j: u32) -> f64 {
        let x = &self.times;
        let needed = self.foreign_occupancy() + i as f64 * x.collision + j as f64 * x.error + x.exchange;
        if needed <= self.t_raw {
            1.0
        } else {
            0.0
        }
    }

    pub fn p_success(&self, i: u32, j: u32) -> f64 {
        success_probability(i, j, self.p_c, self.p_e, self.raw_fit(i, j))
    }

    pub fn p_error_drop(&self, i: u32) -> f64 {
        let m_err = self.mac.m_err;
        error_drop_probability(i, m_err, self.p_c, self.p_e, self.raw_fit(i, m_err))
    }

    pub fn p_collision_drop(&self, j: u32) -> f64 {
        let m_col = self.mac.m_col;
        collision_drop_probability(m_col, j, self.p_c, self.p_e, self.raw_fit(m_col, j))
    }

    /// Probability a pending packet is delivered within its DTIM period.
    pub fn success(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.mac.m_col {
            for j in 0..self.mac.m_err {
                s += self.p_success(i, j);
            }
        }
        s
    }

    /// Delivery probability relative to the best case without contention,
    /// `1 - p_e^m_err`; losses to collisions and RAW overflow only.
    pub fn contention_success(&self) -> f64 {
        let ceiling = 1.0 - self.p_e.powi(self.mac.m_err as i32);
        self.success() / ceiling
    }

    /// Every weighted term of the four-way sum.
    pub fn outcomes(&self) -> Vec<(Outcome, f64)> {
        let (m_col, m_err) = (self.mac.m_col, self.mac.m_err);
        let mut out = Vec::with_capacity((2 * m_col * m_err + m_col + m_err) as usize);
        for i in 0..m_col {
            for j in 0..m_err {
                out.push((Outcome::Success { i, j }, self.p_success(i, j)));
            }
        }
        for i in 0..m_col {
            out.push((Outcome::ErrorDrop { i }, self.p_error_drop(i)));
        }
        for j in 0..m_err {
            out.push((Outcome::CollisionDrop { j }, self.p_collision_drop(j)));
        }
        for i in 0..m_col {
            for j in 0..m_err {
                out.push((Outcome::BoundaryDrop { i, j }, 1.0 - self.raw_fit(i, j)));
            }
        }
        out
    }

    /// Receive time of one outcome (DATA for DL; CTS and ACK for UL).
    pub fn rx_duration(&self, outcome: Outcome) -> f64 {
        let m_err = self.mac.m_err as f64;
        let f = &self.frames;
        match self.dir {
            Direction::Dl => {
                let data = match outcome {
                    Outcome::Success { j, .. } => j as f64 + 1.0,
                    Outcome::ErrorDrop { .. } => m_err,
                    Outcome::CollisionDrop { j } | Outcome::BoundaryDrop { j, .. } => j as f64,
                };
                data * f.data
            }
            Direction::Ul => {
                let (cts, ack) = match outcome {
                    Outcome::Success { j, .. } => (j as f64 + 1.0, 1.0),
                    Outcome::ErrorDrop { .. } => (m_err, 0.0),
                    Outcome::CollisionDrop { j } | Outcome::BoundaryDrop { j, .. } => (j as f64, 0.0),
                };
                cts * f.cts + ack * f.ack
            }
        }
    }

    /// Transmit time of one outcome (PS-Poll and ACK for DL; RTS and DATA for UL).
    pub fn tx_duration(&self, outcome: Outcome) -> f64 {
        let (m_col, m_err) = (self.mac.m_col as f64, self.mac.m_err as f64);
        let f = &self.frames;
        // Control frames sent, and DATA/ACK frames sent.
        let (ctrl, second) = match outcome {
            Outcome::Success { i, j } => (
                (i + j) as f64 + 1.0,
                match self.dir {
                    Direction::Dl => 1.0,
                    Direction::Ul => j as f64 + 1.0,
                },
            ),
            Outcome::ErrorDrop { i } => (
                i as f64 + m_err,
                match self.dir {
                    Direction::Dl => 0.0,
                    Direction::Ul => m_err,
                },
            ),
            Outcome::CollisionDrop { j } => (
                m_col + j as f64,
                match self.dir {
                    Direction::Dl => 0.0,
                    Direction::Ul => j as f64,
                },
            ),
            Outcome::BoundaryDrop { i, j } => (
                (i + j) as f64,
                match self.dir {
                    Direction::Dl => 0.0,
                    Direction::Ul => j as f64,
                },
            ),
        };
        match self.dir {
            Direction::Dl => ctrl * f.ps_poll + second * f.ack,
            Direction::Ul => ctrl * f.rts + second * f.data,
        }
    }

    /// Idle time of one outcome: DIFS and SIFS gaps, backoff, and waiting
    /// out the contenders served first.
    pub fn idle_duration(&self, outcome: Outcome) -> f64 {
        let (m_col, m_err) = (self.mac.m_col, self.mac.m_err);
        let sifs_per_error = match self.dir {
            Direction::Dl => 1,
            Direction::Ul => 2,
        };
        // (DIFS count, SIFS count, last backoff stage)
        let (difs, sifs, stages) = match outcome {
            Outcome::Success { i, j } => (i + j + 1, sifs_per_error * j + sifs_per_error + 1, i + j),
            Outcome::ErrorDrop { i } => (i + m_err, sifs_per_error * m_err, i + m_err - 1),
            Outcome::CollisionDrop { j } => (m_col + j, sifs_per_error * j, m_col + j - 1),
            Outcome::BoundaryDrop { i, j } => (i + j, sifs_per_error * j, i + j),
        };
        difs as f64 * self.mac.t_difs
            + sifs as f64 * self.mac.t_sifs
            + backoff_time(stages, &self.mac)
            + self.foreign_occupancy()
    }

    /// The four-way sums for rx, tx and idle (before weighting by `p_psi`).
    pub fn active_times(&self) -> StateTimes {
        let mut st = StateTimes::default();
        for (outcome, w) in self.outcomes() {
            if w == 0.0 {
                continue;
            }
            st.t_rx += w * self.rx_duration(outcome);
            st.t_tx += w * self.tx_duration(outcome);
            st.t_id += w * self.idle_duration(outcome);
        }
        st
    }
}

/// Model of one station at a fixed PHY rate.
#[derive(Debug, Clone)]
pub struct StationModel {
    pub rate: f64,
    pub timing: MacTiming,
    pub traffic: TrafficProbabilities,
    pub dl: DirectionModel,
    pub ul: DirectionModel,
    /// Multicast DATA airtime at the beacon rate.
    pub t_mc_data: f64,
}

impl StationModel {
    pub fn direction(&self, dir: Direction) -> &DirectionModel {
        match dir {
            Direction::Dl => &self.dl,
            Direction::Ul => &self.ul,
        }
    }

    pub fn state_times(&self) -> Result<StateTimes> {
        let dl = self.dl.active_times();
        let ul = self.ul.active_times();
        let tr = &self.traffic;
        let t = &self.timing;
        let n = t.n_tim as f64;
        let t_rx = t.t_dtim_beacon
            + (n - 1.0) / n * tr.p_listen_tim() * t.t_tim_beacon
            + tr.p_mc * self.t_mc_data
            + tr.p_dl * dl.t_rx
            + tr.p_ul * ul.t_rx;
        let t_tx = tr.p_dl * dl.t_tx + tr.p_ul * ul.t_tx;
        let t_id = tr.p_mc * t.mac.t_difs + tr.p_dl * dl.t_id + tr.p_ul * ul.t_id;
        let t_sl = sleep_time(t.dtim_period, t_rx, t_tx, t_id)?;
        Ok(StateTimes {
            t_rx,
            t_tx,
            t_id,
            t_sl,
        })
    }
}

/// Results for one rate class of a network evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateClass {
    pub rate: f64,
    pub stations: usize,
    pub state_times: StateTimes,
    pub mean_current: f64,
    pub success_dl: f64,
    pub success_ul: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub scenario: String,
    pub n_tim: u32,
    pub dtim_period: f64,
    pub state_times: StateTimes,
    /// Joules per DTIM period.
    pub energy_per_dtim: f64,
    /// mA.
    pub mean_current: f64,
    pub success_dl: f64,
    pub success_ul: f64,
    pub contention_success_dl: f64,
    pub contention_success_ul: f64,
    /// Hours.
    pub battery_lifetime: f64,
    pub traffic: TrafficProbabilities,
    pub contention: ContentionProfile,
    pub per_rate: Vec<RateClass>,
}

impl EnergyReport {
    pub fn sleep_fraction(&self) -> f64 {
        self.state_times.t_sl / self.dtim_period
    }

    pub fn min_success(&self) -> f64 {
        self.success_dl.min(self.success_ul)
    }

    pub fn min_contention_success(&self) -> f64 {
        self.contention_success_dl.min(self.contention_success_ul)
    }
}

/// Network-wide part of the model for one scenario configuration.
#[derive(Debug, Clone)]
pub struct EnergyModel {
    pub scenario: Scenario,
    pub timing: MacTiming,
    pub traffic: TrafficProbabilities,
    pub contention: ContentionProfile,
}

impl EnergyModel {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        let timing = MacTiming::new(scenario)?;
        let traffic = TrafficProbabilities::new(scenario, timing.n_sta_per_group);
        let contention = ContentionProfile::new(&traffic, timing.n_sta_per_group, &scenario.mac);
        Ok(EnergyModel {
            scenario: scenario.clone(),
            timing,
            traffic,
            contention,
        })
    }

    pub fn station(&self, rate: f64) -> StationModel {
        StationModel {
            rate,
            timing: self.timing.clone(),
            traffic: self.traffic,
            dl: DirectionModel::new(Direction::Dl, rate, &self.timing, &self.contention),
            ul: DirectionModel::new(Direction::Ul, rate, &self.timing, &self.contention),
            t_mc_data: FrameTimes::at(self.timing.r_min, &self.timing.mac).data,
        }
    }

    /// Report for a single station at `rate`.
    pub fn evaluate_rate(&self, rate: f64) -> Result<EnergyReport> {
        self.evaluate_classes(&[(rate, 1)])
    }

    /// Network report: per-station results averaged with equal weights.
    pub fn evaluate_placements(&self, placements: &[StationPlacement]) -> Result<EnergyReport> {
        if placements.is_empty() {
            return Err(Error::Domain("no stations to evaluate".into()));
        }
        self.evaluate_classes(&rate_histogram(placements))
    }

    fn evaluate_classes(&self, classes: &[(f64, usize)]) -> Result<EnergyReport> {
        let power = &self.scenario.power;
        let total: usize = classes.iter().map(|(_, c)| c).sum();
        let mut times = StateTimes::default();
        let (mut s_dl, mut s_ul, mut cs_dl, mut cs_ul, mut current) = (0.0, 0.0, 0.0, 0.0, 0.0);
        let mut per_rate = Vec::with_capacity(classes.len());
        for &(rate, count) in classes {
            let sta = self.station(rate);
            let st = sta.state_times()?;
            let w = count as f64 / total as f64;
            let i = st.mean_current(power);
            times.add(&st.scaled(w));
            current += w * i;
            s_dl += w * sta.dl.success();
            s_ul += w * sta.ul.success();
            cs_dl += w * sta.dl.contention_success();
            cs_ul += w * sta.ul.contention_success();
            per_rate.push(RateClass {
                rate,
                stations: count,
                state_times: st,
                mean_current: i,
                success_dl: sta.dl.success(),
                success_ul: sta.ul.success(),
            });
        }
        let t = self.scenario.dtim_period;
        Ok(EnergyReport {
            scenario: self.scenario.name.clone(),
            n_tim: self.scenario.n_tim,
            dtim_period: t,
            state_times: times,
            energy_per_dtim: power.supply_voltage * current * 1e-3 * t,
            mean_current: current,
            success_dl: s_dl,
            success_ul: s_ul,
            contention_success_dl: cs_dl,
            contention_success_ul: cs_ul,
            battery_lifetime: power.battery_capacity / current,
            traffic: self.traffic,
            contention: self.contention,
            per_rate,
        })
    }
}

/// Evaluate a scenario over its own station placement (`scenario.seed`).
pub fn evaluate(scenario: &Scenario) -> Result<EnergyReport> {
    let placements = place_stations(scenario, scenario.seed)?;
    EnergyModel::new(scenario)?.evaluate_placements(&placements)
}

/// Evaluate with every station at one rate.
pub fn evaluate_at_rate(scenario: &Scenario, rate: f64) -> Result<EnergyReport> {
    EnergyModel::new(scenario)?.evaluate_rate(rate)
}
