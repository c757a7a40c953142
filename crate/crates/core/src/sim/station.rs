use std::collections::VecDeque;

use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::timing::Direction;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadioState {
    Rx,
    Tx,
    Idle,
    Sleep,
}

/// Seconds accumulated in each radio state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct RadioLedger {
    pub rx: f64,
    pub tx: f64,
    pub id: f64,
    pub sl: f64,
}

impl RadioLedger {
    pub fn total(&self) -> f64 {
        self.rx + self.tx + self.id + self.sl
    }

    pub fn get_mut(&mut self, state: RadioState) -> &mut f64 {
        match state {
            RadioState::Rx => &mut self.rx,
            RadioState::Tx => &mut self.tx,
            RadioState::Idle => &mut self.id,
            RadioState::Sleep => &mut self.sl,
        }
    }

    pub fn add(&mut self, other: &RadioLedger) {
        self.rx += other.rx;
        self.tx += other.tx;
        self.id += other.id;
        self.sl += other.sl;
    }
}

/// Ledger plus the time up to which it has been written.
#[derive(Debug, Clone, Default)]
pub struct Timeline {
    pub ledger: RadioLedger,
    pub cursor: f64,
}

impl Timeline {
    /// Fill the gap up to `t` with `state`. Earlier times are a no-op, which
    /// happens when a station's own phases already run past `t`.
    pub fn advance_to(&mut self, t: f64, state: RadioState) {
        if t > self.cursor {
            *self.ledger.get_mut(state) += t - self.cursor;
            self.cursor = t;
        }
    }

    pub fn push(&mut self, state: RadioState, dur: f64) {
        *self.ledger.get_mut(state) += dur;
        self.cursor += dur;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct DirectionCounts {
    pub generated: u64,
    pub delivered: u64,
    pub dropped_collision: u64,
    pub dropped_error: u64,
    pub buffered: u64,
}

impl DirectionCounts {
    pub fn dropped(&self) -> u64 {
        self.dropped_collision + self.dropped_error
    }

    /// Delivered share of the packets whose fate is settled.
    pub fn success(&self) -> f64 {
        let settled = self.delivered + self.dropped();
        if settled == 0 {
            1.0
        } else {
            self.delivered as f64 / settled as f64
        }
    }

    pub fn add(&mut self, o: &DirectionCounts) {
        self.generated += o.generated;
        self.delivered += o.delivered;
        self.dropped_collision += o.dropped_collision;
        self.dropped_error += o.dropped_error;
        self.buffered += o.buffered;
    }
}

#[derive(Debug, Clone)]
pub struct StaRuntime {
    pub station_id: u32,
    pub page: u32,
    pub tim_group: u32,
    pub rate: f64,
    /// Arrival times, oldest first.
    pub buffer_ul: VecDeque<f64>,
    pub pending_dl: VecDeque<f64>,
    /// Packets allowed to contend in this period's RAW, per direction.
    pub eligible_dl: u32,
    pub eligible_ul: u32,
    pub backoff_counter: u32,
    pub stage: u32,
    pub retry_col: u32,
    pub retry_err: u32,
    pub timeline: Timeline,
    pub counts_dl: DirectionCounts,
    pub counts_ul: DirectionCounts,
    pub collisions: u64,
    pub errors: u64,
    pub traffic_rng: ChaCha8Rng,
    pub mac_rng: ChaCha8Rng,
}

impl StaRuntime {
    pub fn queue_mut(&mut self, dir: Direction) -> &mut VecDeque<f64> {
        match dir {
            Direction::Dl => &mut self.pending_dl,
            Direction::Ul => &mut self.buffer_ul,
        }
    }

    pub fn counts_mut(&mut self, dir: Direction) -> &mut DirectionCounts {
        match dir {
            Direction::Dl => &mut self.counts_dl,
            Direction::Ul => &mut self.counts_ul,
        }
    }

    /// Packets queued no later than `cutoff`.
    pub fn queued_by(&self, dir: Direction, cutoff: f64) -> u32 {
        let q = match dir {
            Direction::Dl => &self.pending_dl,
            Direction::Ul => &self.buffer_ul,
        };
        q.iter().take_while(|&&t| t <= cutoff).count() as u32
    }

    pub fn reset_retries(&mut self) {
        self.stage = 0;
        self.retry_col = 0;
        self.retry_err = 0;
    }
}
