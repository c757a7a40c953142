use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;

use crate::timing::Direction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    TxComplete,
    RawEnd { dir: Direction },
    DtimBeacon { page: u32 },
    TimBeacon { page: u32, group: u32 },
    RawDlStart { page: u32, group: u32 },
    RawUlStart { page: u32, group: u32 },
    SlotTick,
    PacketArrival { dir: Direction },
}

impl EventKind {
    /// Tie-break order for events at the same instant.
    pub fn priority(&self) -> u8 {
        match self {
            EventKind::TxComplete => 0,
            EventKind::RawEnd { .. } => 1,
            EventKind::DtimBeacon { .. } => 2,
            EventKind::TimBeacon { .. } => 3,
            EventKind::RawDlStart { .. } => 4,
            EventKind::RawUlStart { .. } => 5,
            EventKind::SlotTick => 6,
            EventKind::PacketArrival { .. } => 7,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EventKind::TxComplete => "tx_complete",
            EventKind::RawEnd { .. } => "raw_end",
            EventKind::DtimBeacon { .. } => "dtim_beacon",
            EventKind::TimBeacon { .. } => "tim_beacon",
            EventKind::RawDlStart { .. } => "raw_dl_start",
            EventKind::RawUlStart { .. } => "raw_ul_start",
            EventKind::SlotTick => "slot_tick",
            EventKind::PacketArrival { .. } => "packet_arrival",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEvent {
    pub time: f64,
    pub kind: EventKind,
    /// Station the event concerns; `u32::MAX` for network-wide events.
    pub station: u32,
    /// Segment generation for channel events, so stale ticks can be ignored.
    pub token: u64,
    seq: u64,
}

impl SimEvent {
    pub const NETWORK: u32 = u32::MAX;
}

impl Eq for SimEvent {}

impl Ord for SimEvent {
    // Reversed: BinaryHeap is a max-heap and we want the earliest first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.kind.priority().cmp(&self.kind.priority()))
            .then_with(|| other.station.cmp(&self.station))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for SimEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<SimEvent>,
    seq: u64,
}

impl EventQueue {
    pub fn push(&mut self, time: f64, kind: EventKind, station: u32, token: u64) {
        self.seq += 1;
        self.heap.push(SimEvent {
            time,
            kind,
            station,
            token,
            seq: self.seq,
        });
    }

    pub fn pop(&mut self) -> Option<SimEvent> {
        self.heap.pop()
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}
