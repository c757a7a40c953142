use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp;

use super::event::{EventKind, EventQueue, SimEvent};
use super::report::{ledger_current, SimReport, StationSummary};
use super::station::{DirectionCounts, RadioLedger, RadioState, StaRuntime, Timeline};
use super::trace::Trace;
use super::{ArrivalProcess, SimOptions};
use crate::error::{Error, Result};
use crate::link_budget::place_stations;
use crate::scenario::Scenario;
use crate::timing::{collision_time, error_time, exchange_time, Direction, FrameTimes, MacTiming};

const EPS: f64 = 1e-12;
const AP_STREAM: u64 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TxOutcome {
    Success,
    Error,
    Collision,
}

impl TxOutcome {
    fn name(self) -> &'static str {
        match self {
            TxOutcome::Success => "success",
            TxOutcome::Error => "error",
            TxOutcome::Collision => "collision",
        }
    }
}

struct Segment {
    dir: Direction,
    start: f64,
    end: f64,
    token: u64,
    contenders: Vec<u32>,
    /// Slots counted down by the pending tick.
    tick_slots: u32,
    busy: Option<Vec<(u32, TxOutcome)>>,
}

pub(crate) struct Engine<'a> {
    scenario: &'a Scenario,
    opts: &'a SimOptions,
    timing: MacTiming,
    stations: Vec<StaRuntime>,
    /// Station ids per `page * n_tim + group`.
    slots: Vec<Vec<u32>>,
    flagged: Vec<bool>,
    queue: EventQueue,
    end: f64,
    periods: u64,
    ap_rng: ChaCha8Rng,
    multicast: bool,
    multicast_packets: u64,
    segment: Option<Segment>,
    next_token: u64,
    collision_events: u64,
    trace: Option<Trace>,
    seed: u64,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn mean_interval(s: &Scenario, dir: Direction) -> f64 {
    match dir {
        Direction::Dl => s.mean_dl_interval,
        Direction::Ul => s.mean_ul_interval,
    }
}

impl<'a> Engine<'a> {
    pub(crate) fn new(
        scenario: &'a Scenario,
        periods: u64,
        seed: u64,
        opts: &'a SimOptions,
        trace: Option<Trace>,
    ) -> Result<Self> {
        scenario.validate()?;
        let timing = MacTiming::new(scenario)?;
        let placements = place_stations(scenario, scenario.seed)?;
        let n_slots = timing.n_pages * timing.n_tim;
        let mut slots = vec![Vec::new(); n_slots as usize];
        let stations: Vec<StaRuntime> = placements
            .iter()
            .map(|p| {
                let id = p.station_id;
                let slot = id % n_slots;
                slots[slot as usize].push(id);
                StaRuntime {
                    station_id: id,
                    page: slot / timing.n_tim,
                    tim_group: slot % timing.n_tim,
                    rate: p.assigned_rate,
                    buffer_ul: VecDeque::new(),
                    pending_dl: VecDeque::new(),
                    eligible_dl: 0,
                    eligible_ul: 0,
                    backoff_counter: 0,
                    stage: 0,
                    retry_col: 0,
                    retry_err: 0,
                    timeline: Timeline::default(),
                    counts_dl: DirectionCounts::default(),
                    counts_ul: DirectionCounts::default(),
                    collisions: 0,
                    errors: 0,
                    traffic_rng: stream(seed, 2 * id as u64 + 1),
                    mac_rng: stream(seed, 2 * id as u64 + 2),
                }
            })
            .collect();

        let engine = Engine {
            scenario,
            opts,
            stations,
            slots,
            flagged: vec![false; n_slots as usize],
            queue: EventQueue::default(),
            end: periods as f64 * scenario.dtim_period,
            periods,
            ap_rng: stream(seed, AP_STREAM),
            multicast: false,
            multicast_packets: 0,
            segment: None,
            next_token: 0,
            collision_events: 0,
            trace,
            seed,
            timing,
        };
        engine.check_feasible()?;
        Ok(engine)
    }

    fn check_feasible(&self) -> Result<()> {
        let layout = &self.timing.layout;
        let shortest = if self.timing.n_tim > 1 {
            layout.first_available.min(layout.other_available)
        } else {
            layout.first_available
        };
        let slowest = self.stations.iter().map(|s| s.rate).fold(f64::INFINITY, f64::min);
        for dir in Direction::BOTH {
            let has_traffic =
                mean_interval(self.scenario, dir).is_finite() || (dir == Direction::Ul && self.opts.preload_ul > 0);
            if !has_traffic {
                continue;
            }
            let beta = match dir {
                Direction::Dl => self.scenario.beta_dl,
                Direction::Ul => self.scenario.beta_ul,
            };
            let need = exchange_time(dir, slowest, &self.timing.mac);
            if beta * shortest < need {
                return Err(Error::Infeasible(format!(
                    "{dir} RAW segment of {:.6} s cannot fit one exchange of {need:.6} s",
                    beta * shortest
                )));
            }
        }
        Ok(())
    }

    fn log(&mut self, time: f64, kind: &str, station: Option<u32>, outcome: &str) -> Result<()> {
        match &mut self.trace {
            Some(t) => t.line(time, kind, station, outcome),
            None => Ok(()),
        }
    }

    fn next_arrival(&mut self, id: u32, dir: Direction, after: f64, first: bool) {
        let mean = mean_interval(self.scenario, dir);
        if !mean.is_finite() {
            return;
        }
        let rng = &mut self.stations[id as usize].traffic_rng;
        let t = match self.opts.arrivals {
            ArrivalProcess::Exponential => after + rng.sample(Exp::new(1.0 / mean).expect("positive mean")),
            ArrivalProcess::Periodic if first => after + mean * rng.random::<f64>(),
            ArrivalProcess::Periodic => after + mean,
        };
        if t < self.end {
            self.queue.push(t, EventKind::PacketArrival { dir }, id, 0);
        }
    }

    fn interval_start(&self, period: u64, page: u32, k: u32) -> f64 {
        period as f64 * self.scenario.dtim_period
            + (page * self.timing.n_tim + k) as f64 * self.timing.layout.interval
    }

    /// RAW window `(start, end)` of one direction in interval `k`.
    fn raw_window(&self, period: u64, page: u32, k: u32, dir: Direction) -> (f64, f64) {
        let t = &self.timing;
        let s = self.interval_start(period, page, k);
        let (r0, avail) = if k == 0 {
            (s + t.t_dtim_beacon + t.t_mc, t.layout.first_available)
        } else {
            (s + t.t_tim_beacon, t.layout.other_available)
        };
        let dl_len = self.scenario.beta_dl * avail;
        match dir {
            Direction::Dl => (r0, r0 + dl_len),
            Direction::Ul => (r0 + dl_len, r0 + dl_len + self.scenario.beta_ul * avail),
        }
    }

    fn schedule_period(&mut self, period: u64) {
        let n_tim = self.timing.n_tim;
        for page in 0..self.timing.n_pages {
            for k in 0..n_tim {
                let s = self.interval_start(period, page, k);
                if k == 0 {
                    if page > 0 {
                        self.queue.push(s, EventKind::DtimBeacon { page }, SimEvent::NETWORK, period);
                    }
                } else {
                    self.queue
                        .push(s, EventKind::TimBeacon { page, group: k }, SimEvent::NETWORK, period);
                }
                let (dl0, dl1) = self.raw_window(period, page, k, Direction::Dl);
                if dl1 > dl0 {
                    self.queue
                        .push(dl0, EventKind::RawDlStart { page, group: k }, SimEvent::NETWORK, period);
                }
                let (ul0, ul1) = self.raw_window(period, page, k, Direction::Ul);
                if ul1 > ul0 {
                    self.queue
                        .push(ul0, EventKind::RawUlStart { page, group: k }, SimEvent::NETWORK, period);
                }
            }
        }
        let next = period + 1;
        if next < self.periods {
            let t = next as f64 * self.scenario.dtim_period;
            self.queue.push(t, EventKind::DtimBeacon { page: 0 }, SimEvent::NETWORK, next);
        }
    }

    pub(crate) fn run(mut self) -> Result<SimReport> {
        for id in 0..self.stations.len() as u32 {
            for _ in 0..self.opts.preload_ul {
                let st = &mut self.stations[id as usize];
                st.buffer_ul.push_back(0.0);
                st.counts_ul.generated += 1;
            }
            for dir in Direction::BOTH {
                self.next_arrival(id, dir, 0.0, true);
            }
        }
        self.queue.push(0.0, EventKind::DtimBeacon { page: 0 }, SimEvent::NETWORK, 0);

        while let Some(ev) = self.queue.pop() {
            // The last RAW of a period may close exactly on the horizon.
            let closing = matches!(ev.kind, EventKind::RawEnd { .. } | EventKind::TxComplete);
            if ev.time >= self.end && !closing {
                continue;
            }
            self.dispatch(ev)?;
        }
        if let Some(seg) = &self.segment {
            return Err(Error::Invariant(format!(
                "{} segment still open at the end of the run",
                seg.dir
            )));
        }
        self.finish()
    }

    fn dispatch(&mut self, ev: SimEvent) -> Result<()> {
        let now = ev.time;
        match ev.kind {
            EventKind::PacketArrival { dir } => {
                let st = &mut self.stations[ev.station as usize];
                st.queue_mut(dir).push_back(now);
                st.counts_mut(dir).generated += 1;
                self.next_arrival(ev.station, dir, now, false);
                self.log(now, "packet_arrival", Some(ev.station), &dir.to_string())
            }
            EventKind::DtimBeacon { page } => self.on_dtim(now, ev.token, page),
            EventKind::TimBeacon { page, group } => self.on_tim(now, page, group),
            EventKind::RawDlStart { page, group } => self.on_raw_start(now, ev.token, page, group, Direction::Dl),
            EventKind::RawUlStart { page, group } => self.on_raw_start(now, ev.token, page, group, Direction::Ul),
            EventKind::SlotTick => self.on_slot_tick(now, ev.token),
            EventKind::TxComplete => self.on_tx_complete(now, ev.token),
            EventKind::RawEnd { .. } => self.on_raw_end(now, ev.token),
        }
    }

    fn slot_index(&self, page: u32, group: u32) -> usize {
        (page * self.timing.n_tim + group) as usize
    }

    fn on_dtim(&mut self, now: f64, period: u64, page: u32) -> Result<()> {
        if page == 0 {
            self.multicast = self.scenario.p_mc > 0.0 && self.ap_rng.random::<f64>() < self.scenario.p_mc;
            if self.multicast {
                self.multicast_packets += 1;
            }
            self.schedule_period(period);
        }
        let t_dtim = self.timing.t_dtim_beacon;
        let mc_data = FrameTimes::at(self.timing.r_min, &self.timing.mac).data;
        let difs = self.timing.mac.t_difs;
        for group in 0..self.timing.n_tim {
            let slot = self.slot_index(page, group);
            let mut flagged = false;
            for &id in &self.slots[slot] {
                let st = &mut self.stations[id as usize];
                st.timeline.advance_to(now, RadioState::Sleep);
                st.timeline.push(RadioState::Rx, t_dtim);
                if self.multicast {
                    st.timeline.push(RadioState::Rx, mc_data);
                    st.timeline.push(RadioState::Idle, difs);
                }
                st.eligible_dl = st.queued_by(Direction::Dl, now);
                flagged |= st.eligible_dl > 0;
                if group == 0 {
                    st.eligible_ul = st.queued_by(Direction::Ul, now);
                }
            }
            self.flagged[slot] = flagged;
        }
        let mc = if self.multicast { " multicast" } else { "" };
        self.log(now, "dtim_beacon", None, &format!("page={page}{mc}"))
    }

    fn on_tim(&mut self, now: f64, page: u32, group: u32) -> Result<()> {
        let slot = self.slot_index(page, group);
        let flagged = self.flagged[slot];
        let t_tim = self.timing.t_tim_beacon;
        let mut listeners = 0;
        for &id in &self.slots[slot] {
            let st = &mut self.stations[id as usize];
            st.eligible_ul = st.queued_by(Direction::Ul, now);
            if flagged || st.eligible_ul > 0 {
                st.timeline.advance_to(now, RadioState::Sleep);
                st.timeline.push(RadioState::Rx, t_tim);
                listeners += 1;
            }
        }
        self.log(now, "tim_beacon", None, &format!("page={page} group={group} listeners={listeners}"))
    }

    fn draw_backoff(&mut self, id: u32, initial: bool) {
        let mac = &self.timing.mac;
        let st = &mut self.stations[id as usize];
        st.backoff_counter = match (initial, self.opts.forced_backoff) {
            (true, Some(b)) => b,
            _ => {
                let w = ((mac.cw_min as u64) << st.stage.min(32)).min(mac.cw_max as u64).max(1);
                st.mac_rng.random_range(0..w) as u32
            }
        };
    }

    fn on_raw_start(&mut self, now: f64, period: u64, page: u32, group: u32, dir: Direction) -> Result<()> {
        if let Some(seg) = &self.segment {
            return Err(Error::Invariant(format!("{dir} RAW starts while a {} RAW is open", seg.dir)));
        }
        let (start, end) = self.raw_window(period, page, group, dir);
        let slot = self.slot_index(page, group);
        let mut contenders = Vec::new();
        for i in 0..self.slots[slot].len() {
            let id = self.slots[slot][i];
            let st = &mut self.stations[id as usize];
            let eligible = match dir {
                Direction::Dl => st.eligible_dl,
                Direction::Ul => st.eligible_ul,
            };
            if eligible == 0 {
                continue;
            }
            st.timeline.advance_to(now, RadioState::Sleep);
            st.reset_retries();
            self.draw_backoff(id, true);
            contenders.push(id);
        }
        self.next_token += 1;
        let token = self.next_token;
        self.queue.push(end, EventKind::RawEnd { dir }, SimEvent::NETWORK, token);
        let n = contenders.len();
        self.segment = Some(Segment {
            dir,
            start,
            end,
            token,
            contenders,
            tick_slots: 0,
            busy: None,
        });
        let kind = match dir {
            Direction::Dl => "raw_dl_start",
            Direction::Ul => "raw_ul_start",
        };
        self.log(now, kind, None, &format!("page={page} group={group} contenders={n}"))?;
        self.channel_idle(now)
    }

    /// Stations whose exchange can no longer fit defer to a later period;
    /// the rest count down to the next transmission slot.
    fn channel_idle(&mut self, now: f64) -> Result<()> {
        let Some(seg) = self.segment.as_mut() else {
            return Ok(());
        };
        let slot_time = self.timing.mac.t_slot;
        let mut keep = Vec::with_capacity(seg.contenders.len());
        let mut deferred = Vec::new();
        for &id in &seg.contenders {
            let st = &mut self.stations[id as usize];
            let need = exchange_time(seg.dir, st.rate, &self.timing.mac);
            if now + st.backoff_counter as f64 * slot_time + need <= seg.end + EPS {
                keep.push(id);
            } else {
                st.timeline.advance_to(now, RadioState::Idle);
                st.reset_retries();
                deferred.push(id);
            }
        }
        seg.contenders = keep;
        let next = seg
            .contenders
            .iter()
            .map(|&id| self.stations[id as usize].backoff_counter)
            .min();
        let token = seg.token;
        if let Some(b) = next {
            seg.tick_slots = b;
            self.queue
                .push(now + b as f64 * slot_time, EventKind::SlotTick, SimEvent::NETWORK, token);
        }
        for id in deferred {
            self.log(now, "defer", Some(id), "raw_boundary")?;
        }
        Ok(())
    }

    fn on_slot_tick(&mut self, now: f64, token: u64) -> Result<()> {
        let seg = match self.segment.as_mut() {
            Some(s) if s.token == token && s.busy.is_none() => s,
            _ => return Ok(()),
        };
        let dir = seg.dir;
        let mut tx = Vec::new();
        for &id in &seg.contenders {
            let st = &mut self.stations[id as usize];
            st.backoff_counter -= seg.tick_slots;
            if st.backoff_counter == 0 {
                tx.push(id);
            }
        }
        let mac = &self.timing.mac;
        let p_e = match dir {
            Direction::Dl => mac.p_e_dl,
            Direction::Ul => mac.p_e_ul,
        };
        let mut busy = 0.0f64;
        let mut outcomes = Vec::with_capacity(tx.len());
        if tx.len() == 1 {
            let st = &mut self.stations[tx[0] as usize];
            let outcome = if st.mac_rng.random::<f64>() < p_e {
                TxOutcome::Error
            } else {
                TxOutcome::Success
            };
            busy = match outcome {
                TxOutcome::Success => exchange_time(dir, st.rate, mac),
                _ => error_time(dir, st.rate, mac),
            };
            outcomes.push((tx[0], outcome));
        } else {
            self.collision_events += 1;
            for &id in &tx {
                busy = busy.max(collision_time(dir, self.stations[id as usize].rate, mac));
                outcomes.push((id, TxOutcome::Collision));
            }
        }
        if now < seg.start - EPS || now + busy > seg.end + EPS {
            return Err(Error::Invariant(format!(
                "transmission [{now:.9}, {:.9}] outside its RAW [{:.9}, {:.9}]",
                now + busy,
                seg.start,
                seg.end
            )));
        }
        for &(id, outcome) in &outcomes {
            let st = &mut self.stations[id as usize];
            record_exchange(&mut st.timeline, now, dir, outcome, &FrameTimes::at(st.rate, mac), mac);
        }
        seg.busy = Some(outcomes.clone());
        self.queue.push(now + busy, EventKind::TxComplete, SimEvent::NETWORK, token);
        for (id, outcome) in outcomes {
            self.log(now, "slot_tick", Some(id), outcome.name())?;
        }
        Ok(())
    }

    fn on_tx_complete(&mut self, now: f64, token: u64) -> Result<()> {
        let (dir, outcomes) = match self.segment.as_mut() {
            Some(s) if s.token == token => (s.dir, s.busy.take().unwrap_or_default()),
            _ => return Ok(()),
        };
        let (m_col, m_err) = (self.timing.mac.m_col, self.timing.mac.m_err);
        let mut leaving = Vec::new();
        for &(id, outcome) in &outcomes {
            let st = &mut self.stations[id as usize];
            st.timeline.advance_to(now, RadioState::Idle);
            let finished = match outcome {
                TxOutcome::Success => {
                    st.counts_mut(dir).delivered += 1;
                    true
                }
                TxOutcome::Error => {
                    st.errors += 1;
                    st.retry_err += 1;
                    st.stage += 1;
                    if st.retry_err >= m_err {
                        st.counts_mut(dir).dropped_error += 1;
                        true
                    } else {
                        false
                    }
                }
                TxOutcome::Collision => {
                    st.collisions += 1;
                    st.retry_col += 1;
                    st.stage += 1;
                    if st.retry_col >= m_col {
                        st.counts_mut(dir).dropped_collision += 1;
                        true
                    } else {
                        false
                    }
                }
            };
            if finished {
                st.queue_mut(dir).pop_front();
                st.reset_retries();
                let eligible = match dir {
                    Direction::Dl => &mut st.eligible_dl,
                    Direction::Ul => &mut st.eligible_ul,
                };
                *eligible -= 1;
                if *eligible == 0 {
                    leaving.push(id);
                    continue;
                }
            }
            self.draw_backoff(id, false);
        }
        if let Some(seg) = self.segment.as_mut() {
            seg.contenders.retain(|id| !leaving.contains(id));
        }
        for &(id, outcome) in &outcomes {
            self.log(now, "tx_complete", Some(id), outcome.name())?;
        }
        self.channel_idle(now)
    }

    fn on_raw_end(&mut self, now: f64, token: u64) -> Result<()> {
        let Some(seg) = self.segment.take_if(|s| s.token == token) else {
            return Ok(());
        };
        if seg.busy.is_some() {
            return Err(Error::Invariant(format!("{} RAW ends during a transmission", seg.dir)));
        }
        for &id in &seg.contenders {
            let st = &mut self.stations[id as usize];
            st.timeline.advance_to(now, RadioState::Idle);
            st.reset_retries();
        }
        let kind = format!("{} left={}", seg.dir, seg.contenders.len());
        self.log(now, "raw_end", None, &kind)
    }

    fn finish(mut self) -> Result<SimReport> {
        let end = self.end;
        let power = &self.scenario.power;
        let mut ledger = RadioLedger::default();
        let (mut dl, mut ul) = (DirectionCounts::default(), DirectionCounts::default());
        let (mut collisions, mut errors) = (0, 0);
        let mut summaries = Vec::with_capacity(self.stations.len());
        let mut current_sum = 0.0;
        for st in &mut self.stations {
            st.timeline.advance_to(end, RadioState::Sleep);
            st.counts_dl.buffered = st.pending_dl.len() as u64;
            st.counts_ul.buffered = st.buffer_ul.len() as u64;
            let l = st.timeline.ledger;
            if (l.total() - end).abs() > 1e-9 * end {
                return Err(Error::Invariant(format!(
                    "station {} ledger sums to {} s over a {end} s run",
                    st.station_id,
                    l.total()
                )));
            }
            for c in [&st.counts_dl, &st.counts_ul] {
                if c.generated != c.delivered + c.dropped() + c.buffered {
                    return Err(Error::Invariant(format!(
                        "station {} packet count mismatch: {c:?}",
                        st.station_id
                    )));
                }
            }
            ledger.add(&l);
            dl.add(&st.counts_dl);
            ul.add(&st.counts_ul);
            collisions += st.collisions;
            errors += st.errors;
            let i = ledger_current(&l, power);
            current_sum += i;
            summaries.push(StationSummary {
                station_id: st.station_id,
                page: st.page,
                tim_group: st.tim_group,
                rate: st.rate,
                ledger: l,
                mean_current: i,
            });
        }
        if let Some(t) = self.trace.take() {
            t.finish()?;
        }
        let mean_current = current_sum / self.stations.len() as f64;
        Ok(SimReport {
            scenario: self.scenario.name.clone(),
            n_tim: self.timing.n_tim,
            dtim_period: self.scenario.dtim_period,
            seed: self.seed,
            periods: self.periods,
            duration: end,
            ledger,
            dl,
            ul,
            station_collisions: collisions,
            collision_events: self.collision_events,
            errors,
            multicast_packets: self.multicast_packets,
            mean_current,
            battery_lifetime: power.battery_capacity / mean_current,
            stations: summaries,
        })
    }
}

/// Write one exchange attempt into a station's ledger, starting at `now`.
fn record_exchange(
    tl: &mut Timeline,
    now: f64,
    dir: Direction,
    outcome: TxOutcome,
    f: &FrameTimes,
    mac: &crate::scenario::MacConstants,
) {
    use RadioState::{Idle, Rx, Tx};
    tl.advance_to(now, Idle);
    let ctrl = match dir {
        Direction::Dl => f.ps_poll,
        Direction::Ul => f.rts,
    };
    tl.push(Tx, ctrl);
    if outcome == TxOutcome::Collision {
        tl.push(Idle, mac.t_difs);
        return;
    }
    tl.push(Idle, mac.t_sifs);
    match dir {
        Direction::Dl => tl.push(Rx, f.data),
        Direction::Ul => {
            tl.push(Rx, f.cts);
            tl.push(Idle, mac.t_sifs);
            tl.push(Tx, f.data);
        }
    }
    if outcome == TxOutcome::Success {
        tl.push(Idle, mac.t_sifs);
        match dir {
            Direction::Dl => tl.push(Tx, f.ack),
            Direction::Ul => tl.push(Rx, f.ack),
        }
    }
    tl.push(Idle, mac.t_difs);
}
