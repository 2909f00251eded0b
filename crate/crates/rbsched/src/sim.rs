//! Discrete-event simulation of the multi-stage shop: parallel workstations,
//! blocking into the routing buffer, setup times on the buffer's next stage,
//! and full metric computation, plus an independent feasibility checker.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::buffer::{
    apply_linkage, lane_heads, lane_landing_cell, place_entering_bus, select_min_cost_linkage,
    select_random_linkage, BufferError, BufferGrid, Cell, Move,
};
use crate::model::{BusId, Instance, Minutes, SetupError};
use crate::rng::{stream, Stream};
use crate::setup::{total_buffer_setup_cost, CostContext};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MovementPolicy {
    /// Enumerate all linkage chains and apply one with minimum resulting
    /// total buffer setup cost.
    MinSetupCost,
    /// Build one chain by uniform random feeder choices.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DispatchPolicy {
    /// Among lane heads, pick the bus with the cheapest changeover against
    /// the requesting workstation's last-processed bus; ties by lowest row.
    MinSetupVsLast,
    /// Among lane heads, pick the bus that entered the buffer first; ties by
    /// lowest row.
    FifoEntry,
    /// Each workstation is served by its own group of lanes (round-robin by
    /// row); within the group, cheapest changeover first. A workstation with
    /// no bus in its own lanes falls back to the full head set.
    LaneAffinity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryPolicy {
    /// Enter through the lane whose landing cell minimizes the resulting
    /// total buffer setup cost; ties by lowest row.
    MinCost,
    /// Enter through a uniformly random open lane.
    Random,
}

/// Everything that distinguishes one simulation run: the movement policy
/// under study, the dispatch rule, the chain-enumeration variant, and the
/// seed that fully determines all stochastic choices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchemeConfig {
    pub movement: MovementPolicy,
    pub dispatch: DispatchPolicy,
    pub entry: EntryPolicy,
    pub allow_early_stop: bool,
    pub seed: u64,
}

impl SchemeConfig {
    /// Scheme 1: all buffer decisions guided by total setup cost.
    pub fn min_setup_cost(seed: u64) -> Self {
        SchemeConfig {
            movement: MovementPolicy::MinSetupCost,
            dispatch: DispatchPolicy::LaneAffinity,
            entry: EntryPolicy::MinCost,
            allow_early_stop: false,
            seed,
        }
    }

    /// Scheme 2: unguided buffer movement (random linkage choices and random
    /// lane entry), same dispatch rule.
    pub fn random_movement(seed: u64) -> Self {
        SchemeConfig {
            movement: MovementPolicy::Random,
            entry: EntryPolicy::Random,
            ..Self::min_setup_cost(seed)
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// One processed bus on one workstation. The setup interval, if any, is
/// `[setup_start, start)`; processing runs `[start, end)` with
/// `end = start + processing_time`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineEntry {
    pub bus: BusId,
    pub setup_start: Minutes,
    pub start: Minutes,
    pub end: Minutes,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkstationTimeline {
    /// 1-based stage.
    pub stage: u32,
    /// 1-based workstation index within the stage.
    pub index: u32,
    pub entries: Vec<TimelineEntry>,
}

/// Time-stamped buffer activity: entries into the entry column and the
/// linkage cascade fired by each departure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum BufferEvent {
    Entry {
        time: Minutes,
        bus: BusId,
        cell: Cell,
    },
    Linkage {
        time: Minutes,
        /// The dispatched bus whose departure triggered the cascade.
        bus: BusId,
        trigger: Cell,
        moves: Vec<Move>,
        /// Total buffer setup cost after the cascade.
        cost_after: Minutes,
    },
}

impl BufferEvent {
    pub fn time(&self) -> Minutes {
        match self {
            BufferEvent::Entry { time, .. } | BufferEvent::Linkage { time, .. } => *time,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metrics {
    /// Total setup minutes per stage and workstation.
    pub setup_time_total: Vec<Vec<Minutes>>,
    /// Number of entries with a positive setup interval, same shape.
    pub setup_count: Vec<Vec<u32>>,
    /// Completion time of the buffer's next stage.
    pub next_stage_completion: Minutes,
    /// Completion time of the last bus at the last stage.
    pub makespan: Minutes,
    /// Total buffer setup cost after every linkage, in event order.
    pub buffer_cost_trace: Vec<Minutes>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleResult {
    pub sequence: Vec<BusId>,
    pub timelines: Vec<WorkstationTimeline>,
    pub buffer_trace: Vec<BufferEvent>,
    pub metrics: Metrics,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("sequence is not a permutation of the instance's bus ids: {0}")]
    BadSequence(String),
    #[error(transparent)]
    Setup(#[from] SetupError),
    #[error(transparent)]
    Buffer(#[from] BufferError),
    #[error("deadlock at t={time}: {detail}")]
    Deadlock { time: Minutes, detail: String },
}

struct Station {
    running: Option<(BusId, Minutes)>,
    /// A bus that finished the pre-buffer stage but found the entry column
    /// full; it blocks this workstation until a space frees.
    holding: Option<BusId>,
    last_done: Option<BusId>,
    entries: Vec<TimelineEntry>,
}

struct Sim<'a> {
    inst: &'a Instance,
    cfg: &'a SchemeConfig,
    costs: CostContext,
    stations: Vec<Vec<Station>>,
    /// Waiting buses per stage; index `l - 1`. Stage 1's queue is the release
    /// sequence, the buffer's next stage never uses its queue.
    queues: Vec<VecDeque<BusId>>,
    grid: BufferGrid,
    entry_time: BTreeMap<BusId, Minutes>,
    trace: Vec<BufferEvent>,
    movement_rng: ChaCha8Rng,
    finished: u32,
}

/// Run one simulation of `inst` releasing buses in `sequence` order.
///
/// Event handling at each time point: completions first (lower stage, then
/// lower workstation index), then alternating dispatch and buffer-release
/// passes until nothing changes, so a bus can flow through several resources
/// at one instant (buffer moves take zero time).
pub fn simulate(
    inst: &Instance,
    sequence: &[BusId],
    cfg: &SchemeConfig,
) -> Result<ScheduleResult, SimError> {
    check_sequence(inst, sequence)?;
    let costs = CostContext::new(&inst.buses, &inst.setup)?;
    let stations = inst
        .stages
        .iter()
        .map(|&m| {
            (0..m)
                .map(|_| Station {
                    running: None,
                    holding: None,
                    last_done: None,
                    entries: Vec::new(),
                })
                .collect()
        })
        .collect();
    let mut queues: Vec<VecDeque<BusId>> = inst.stages.iter().map(|_| VecDeque::new()).collect();
    queues[0] = sequence.iter().copied().collect();

    let mut sim = Sim {
        inst,
        cfg,
        costs,
        stations,
        queues,
        grid: BufferGrid::new(inst.buffer.rows, inst.buffer.cols),
        entry_time: BTreeMap::new(),
        trace: Vec::new(),
        movement_rng: stream(cfg.seed, Stream::Movement),
        finished: 0,
    };

    let mut now = 0;
    sim.fixpoint(now)?;
    while sim.finished < inst.bus_count() {
        match sim.next_completion() {
            Some(t) => {
                now = t;
                sim.complete_at(now);
                sim.fixpoint(now)?;
            }
            None => {
                return Err(SimError::Deadlock {
                    time: now,
                    detail: sim.deadlock_detail(),
                })
            }
        }
    }

    let timelines = sim
        .stations
        .into_iter()
        .enumerate()
        .flat_map(|(l, stage)| {
            stage.into_iter().enumerate().map(move |(t, st)| WorkstationTimeline {
                stage: l as u32 + 1,
                index: t as u32 + 1,
                entries: st.entries,
            })
        })
        .collect();

    let mut result = ScheduleResult {
        sequence: sequence.to_vec(),
        timelines,
        buffer_trace: sim.trace,
        metrics: Metrics::default(),
    };
    result.metrics = compute_metrics(inst, &result);
    Ok(result)
}

fn check_sequence(inst: &Instance, sequence: &[BusId]) -> Result<(), SimError> {
    let s = inst.bus_count();
    if sequence.len() != s as usize {
        return Err(SimError::BadSequence(format!(
            "expected {s} ids, found {}",
            sequence.len()
        )));
    }
    let mut seen = BTreeSet::new();
    for id in sequence {
        if id.0 == 0 || id.0 > s {
            return Err(SimError::BadSequence(format!("{id} out of range 1..={s}")));
        }
        if !seen.insert(*id) {
            return Err(SimError::BadSequence(format!("{id} listed twice")));
        }
    }
    Ok(())
}

impl Sim<'_> {
    fn pre_stage(&self) -> u32 {
        self.inst.buffer.after_stage
    }

    fn next_stage(&self) -> u32 {
        self.inst.buffer_next_stage()
    }

    fn next_completion(&self) -> Option<Minutes> {
        self.stations
            .iter()
            .flatten()
            .filter_map(|s| s.running.map(|(_, end)| end))
            .min()
    }

    fn complete_at(&mut self, t: Minutes) {
        let (pre, last) = (self.pre_stage(), self.inst.stage_count());
        for l in 1..=last {
            for station in &mut self.stations[l as usize - 1] {
                let Some((bus, end)) = station.running else { continue };
                if end != t {
                    continue;
                }
                station.running = None;
                station.last_done = Some(bus);
                if l == last {
                    self.finished += 1;
                } else if l == pre {
                    station.holding = Some(bus);
                } else {
                    // Unbounded FIFO hand-off to the next stage.
                    self.queues[l as usize].push_back(bus);
                }
            }
        }
    }

    fn fixpoint(&mut self, t: Minutes) -> Result<(), SimError> {
        loop {
            let mut changed = self.dispatch_pass(t)?;
            changed |= self.release_pass(t)?;
            if !changed {
                return Ok(());
            }
        }
    }

    fn dispatch_pass(&mut self, t: Minutes) -> Result<bool, SimError> {
        let mut changed = false;
        for l in 1..=self.inst.stage_count() {
            for ws in 0..self.stations[l as usize - 1].len() {
                let station = &self.stations[l as usize - 1][ws];
                if station.running.is_some() || station.holding.is_some() {
                    continue;
                }
                if l == self.next_stage() {
                    let Some((bus, cell)) = self.pick_from_buffer(l, ws)? else { continue };
                    self.grid.remove(cell);
                    self.entry_time.remove(&bus);
                    self.start_processing(l, ws, bus, t)?;
                    self.run_linkage(t, bus, cell)?;
                    changed = true;
                } else if let Some(bus) = self.queues[l as usize - 1].pop_front() {
                    self.start_processing(l, ws, bus, t)?;
                    changed = true;
                }
            }
        }
        Ok(changed)
    }

    fn release_pass(&mut self, t: Minutes) -> Result<bool, SimError> {
        let mut changed = false;
        let pre = self.pre_stage() as usize - 1;
        for ws in 0..self.stations[pre].len() {
            let Some(bus) = self.stations[pre][ws].holding else { continue };
            match self.enter_buffer(bus) {
                Ok(Some(cell)) => {
                    self.entry_time.insert(bus, t);
                    self.trace.push(BufferEvent::Entry { time: t, bus, cell });
                    self.stations[pre][ws].holding = None;
                    changed = true;
                }
                Ok(None) => {} // entry column full, stay blocked
                Err(e) => return Err(e),
            }
        }
        Ok(changed)
    }

    fn enter_buffer(&mut self, bus: BusId) -> Result<Option<Cell>, SimError> {
        match self.cfg.entry {
            EntryPolicy::MinCost => match place_entering_bus(&self.grid, bus, &self.costs) {
                Ok((grid, cell)) => {
                    self.grid = grid;
                    Ok(Some(cell))
                }
                Err(BufferError::EntryColumnFull) => Ok(None),
                Err(e) => Err(e.into()),
            },
            EntryPolicy::Random => {
                use rand::Rng;
                let landings: Vec<Cell> = (1..=self.grid.rows())
                    .filter_map(|row| lane_landing_cell(&self.grid, row))
                    .collect();
                if landings.is_empty() {
                    return Ok(None);
                }
                let cell = landings[self.movement_rng.gen_range(0..landings.len())];
                self.grid.place(cell, bus)?;
                Ok(Some(cell))
            }
        }
    }

    fn pick_from_buffer(&self, l: u32, ws: usize) -> Result<Option<(BusId, Cell)>, SimError> {
        let mut heads = lane_heads(&self.grid);
        if heads.is_empty() {
            return Ok(None);
        }
        if self.cfg.dispatch == DispatchPolicy::LaneAffinity {
            let group = self.stations[l as usize - 1].len() as u32;
            let own: Vec<(BusId, Cell)> = heads
                .iter()
                .copied()
                .filter(|(_, cell)| (cell.row - 1) % group == ws as u32)
                .collect();
            if !own.is_empty() {
                heads = own;
            }
        }
        let mut best: Option<(u64, BusId, Cell)> = None;
        for (bus, cell) in heads {
            // Lane heads come in ascending row order, so strict improvement
            // breaks ties toward the lowest row.
            let key = match self.cfg.dispatch {
                DispatchPolicy::MinSetupVsLast | DispatchPolicy::LaneAffinity => {
                    match self.stations[l as usize - 1][ws].last_done {
                        Some(prev) => self.costs.pair_cost(prev, bus)? as u64,
                        None => 0,
                    }
                }
                DispatchPolicy::FifoEntry => self.entry_time[&bus] as u64,
            };
            if best.as_ref().is_none_or(|(b, _, _)| key < *b) {
                best = Some((key, bus, cell));
            }
        }
        Ok(best.map(|(_, bus, cell)| (bus, cell)))
    }

    fn start_processing(&mut self, l: u32, ws: usize, bus: BusId, t: Minutes) -> Result<(), SimError> {
        let proc = self
            .inst
            .bus(bus)
            .expect("sequence is checked against the fleet")
            .proc_times[l as usize - 1];
        let station = &mut self.stations[l as usize - 1][ws];
        let setup = if self.inst.setup.applies_to_stages.contains(&l) {
            match station.last_done {
                Some(prev) => self.costs.pair_cost(prev, bus)?,
                None => 0,
            }
        } else {
            0
        };
        let entry = TimelineEntry {
            bus,
            setup_start: t,
            start: t + setup,
            end: t + setup + proc,
        };
        station.running = Some((bus, entry.end));
        station.entries.push(entry);
        Ok(())
    }

    fn run_linkage(&mut self, t: Minutes, departed: BusId, trigger: Cell) -> Result<(), SimError> {
        let chain = match self.cfg.movement {
            MovementPolicy::MinSetupCost => {
                select_min_cost_linkage(&self.grid, trigger, &self.costs, self.cfg.allow_early_stop)?.0
            }
            MovementPolicy::Random => {
                select_random_linkage(&self.grid, trigger, &mut self.movement_rng)?
            }
        };
        self.grid = apply_linkage(&self.grid, &chain)?;
        let cost_after = total_buffer_setup_cost(&self.grid, &self.costs)?;
        self.trace.push(BufferEvent::Linkage {
            time: t,
            bus: departed,
            trigger,
            moves: chain.moves,
            cost_after,
        });
        Ok(())
    }

    fn deadlock_detail(&self) -> String {
        let mut parts = Vec::new();
        for (l, stage) in self.stations.iter().enumerate() {
            for (ws, station) in stage.iter().enumerate() {
                if let Some(bus) = station.holding {
                    parts.push(format!("stage {} workstation {} blocked by {}", l + 1, ws + 1, bus));
                }
            }
        }
        for (l, queue) in self.queues.iter().enumerate() {
            if !queue.is_empty() {
                parts.push(format!("{} buses queued for stage {}", queue.len(), l + 1));
            }
        }
        parts.push(format!("{} buses parked in the buffer", self.grid.occupied_count()));
        parts.join("; ")
    }
}

/// Derive all metrics from a result's timelines and buffer trace.
pub fn compute_metrics(inst: &Instance, result: &ScheduleResult) -> Metrics {
    let q = inst.stage_count() as usize;
    let mut setup_time_total = vec![Vec::new(); q];
    let mut setup_count = vec![Vec::new(); q];
    for (l, &m) in inst.stages.iter().enumerate() {
        setup_time_total[l] = vec![0; m as usize];
        setup_count[l] = vec![0; m as usize];
    }
    let mut next_stage_completion = 0;
    let mut makespan = 0;
    for tl in &result.timelines {
        let (l, ws) = (tl.stage as usize - 1, tl.index as usize - 1);
        for e in &tl.entries {
            setup_time_total[l][ws] += e.start - e.setup_start;
            if e.start > e.setup_start {
                setup_count[l][ws] += 1;
            }
            if tl.stage == inst.buffer_next_stage() {
                next_stage_completion = next_stage_completion.max(e.end);
            }
            if tl.stage == inst.stage_count() {
                makespan = makespan.max(e.end);
            }
        }
    }
    let buffer_cost_trace = result
        .buffer_trace
        .iter()
        .filter_map(|ev| match ev {
            BufferEvent::Linkage { cost_after, .. } => Some(*cost_after),
            BufferEvent::Entry { .. } => None,
        })
        .collect();
    Metrics {
        setup_time_total,
        setup_count,
        next_stage_completion,
        makespan,
        buffer_cost_trace,
    }
}

// ---------------------------------------------------------------------------
// Independent feasibility checker
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleViolationKind {
    Equation1,
    Equation2,
    StageOrder,
    Exclusivity,
    SetupMismatch,
    Completeness,
    BufferReplay,
    Blocking,
    MetricsMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleViolation {
    pub kind: ScheduleViolationKind,
    pub message: String,
}

impl fmt::Display for ScheduleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.kind, self.message)
    }
}

/// Re-check a schedule against every feasibility rule: completion-time
/// arithmetic, stage ordering, workstation exclusivity including setup
/// intervals, setup-time correctness, buffer legality by replaying the
/// trace, blocking consistency, and metric agreement. Returns every
/// violation found; an empty list means the schedule is feasible.
pub fn verify_schedule(inst: &Instance, result: &ScheduleResult) -> Vec<ScheduleViolation> {
    let mut out = Vec::new();
    let mut push = |kind, message: String| out.push(ScheduleViolation { kind, message });

    let q = inst.stage_count();
    let costs = CostContext::new(&inst.buses, &inst.setup).ok();

    // Per-(bus, stage) processing windows, and per-entry arithmetic.
    let mut windows: BTreeMap<(BusId, u32), (Minutes, Minutes)> = BTreeMap::new();
    for tl in &result.timelines {
        for e in &tl.entries {
            let bus = match inst.bus(e.bus) {
                Some(b) => b,
                None => {
                    push(
                        ScheduleViolationKind::Completeness,
                        format!("timeline lists unknown bus {}", e.bus),
                    );
                    continue;
                }
            };
            let tw = bus.proc_times[tl.stage as usize - 1];
            if e.end != e.start + tw {
                push(
                    ScheduleViolationKind::Equation1,
                    format!(
                        "{} at stage {}: end {} != start {} + processing {}",
                        e.bus, tl.stage, e.end, e.start, tw
                    ),
                );
            }
            if e.end <= e.start {
                push(
                    ScheduleViolationKind::Equation2,
                    format!("{} at stage {}: end {} <= start {}", e.bus, tl.stage, e.end, e.start),
                );
            }
            if e.setup_start > e.start {
                push(
                    ScheduleViolationKind::Exclusivity,
                    format!("{} at stage {}: setup_start after start", e.bus, tl.stage),
                );
            }
            if windows.insert((e.bus, tl.stage), (e.start, e.end)).is_some() {
                push(
                    ScheduleViolationKind::Completeness,
                    format!("{} appears twice at stage {}", e.bus, tl.stage),
                );
            }
        }
    }

    // Every bus exactly once per stage.
    for bus in &inst.buses {
        for l in 1..=q {
            if !windows.contains_key(&(bus.id, l)) {
                push(
                    ScheduleViolationKind::Completeness,
                    format!("{} missing at stage {l}", bus.id),
                );
            }
        }
    }

    // Stage ordering per bus.
    for bus in &inst.buses {
        for l in 1..q {
            if let (Some(&(_, end_l)), Some(&(start_next, _))) =
                (windows.get(&(bus.id, l)), windows.get(&(bus.id, l + 1)))
            {
                if start_next < end_l {
                    push(
                        ScheduleViolationKind::StageOrder,
                        format!(
                            "{} starts stage {} at {} before finishing stage {} at {}",
                            bus.id,
                            l + 1,
                            start_next,
                            l,
                            end_l
                        ),
                    );
                }
            }
        }
    }

    // Exclusivity (setup intervals included) and setup-time correctness per
    // workstation.
    for tl in &result.timelines {
        let mut sorted = tl.entries.clone();
        sorted.sort_by_key(|e| e.setup_start);
        if sorted != tl.entries {
            push(
                ScheduleViolationKind::Exclusivity,
                format!("stage {} workstation {}: entries not time-ordered", tl.stage, tl.index),
            );
        }
        for pair in sorted.windows(2) {
            let (u, v) = (&pair[0], &pair[1]);
            if v.setup_start < u.end {
                push(
                    ScheduleViolationKind::Exclusivity,
                    format!(
                        "stage {} workstation {}: {} begins at {} while {} runs until {}",
                        tl.stage, tl.index, v.bus, v.setup_start, u.bus, u.end
                    ),
                );
            }
        }
        let setup_stage = inst.setup.applies_to_stages.contains(&tl.stage);
        for (i, e) in sorted.iter().enumerate() {
            let expected = if setup_stage && i > 0 {
                match costs.as_ref().map(|c| c.pair_cost(sorted[i - 1].bus, e.bus)) {
                    Some(Ok(c)) => c,
                    _ => continue,
                }
            } else {
                0
            };
            if e.start - e.setup_start != expected {
                push(
                    ScheduleViolationKind::SetupMismatch,
                    format!(
                        "stage {} workstation {}: {} has setup {} but the changeover costs {}",
                        tl.stage,
                        tl.index,
                        e.bus,
                        e.start - e.setup_start,
                        expected
                    ),
                );
            }
        }
    }

    // Replay the buffer trace: legal entries, legal cascades, capacity, and
    // agreement with the recorded costs and the next-stage dispatch times.
    let mut grid = BufferGrid::new(inst.buffer.rows.max(1), inst.buffer.cols.max(1));
    let mut entered: BTreeMap<BusId, Minutes> = BTreeMap::new();
    let mut departed: BTreeSet<BusId> = BTreeSet::new();
    let mut last_time = 0;
    for ev in &result.buffer_trace {
        if ev.time() < last_time {
            push(
                ScheduleViolationKind::BufferReplay,
                format!("trace goes backwards at t={}", ev.time()),
            );
        }
        last_time = ev.time();
        match ev {
            BufferEvent::Entry { time, bus, cell } => {
                // A legal entry drives through vacant cells from column 1 and
                // stops at the lane's deepest vacant cell.
                let path_clear = (1..=cell.col)
                    .all(|col| grid.get(Cell { row: cell.row, col }).is_none());
                let ahead = Cell { row: cell.row, col: cell.col + 1 };
                let stops_at_front = !grid.contains(ahead) || grid.get(ahead).is_some();
                if !path_clear || !stops_at_front {
                    push(
                        ScheduleViolationKind::BufferReplay,
                        format!("{bus} cannot legally land at {cell}"),
                    );
                }
                if let Err(e) = grid.place(*cell, *bus) {
                    push(
                        ScheduleViolationKind::BufferReplay,
                        format!("entry of {bus} at {cell}: {e}"),
                    );
                    continue;
                }
                if entered.insert(*bus, *time).is_some() {
                    push(
                        ScheduleViolationKind::BufferReplay,
                        format!("{bus} enters the buffer twice"),
                    );
                }
                match windows.get(&(*bus, inst.buffer.after_stage)) {
                    Some(&(_, end_pre)) if *time < end_pre => push(
                        ScheduleViolationKind::BufferReplay,
                        format!("{bus} enters the buffer at {time} before finishing the pre-buffer stage at {end_pre}"),
                    ),
                    _ => {}
                }
            }
            BufferEvent::Linkage { time, bus, trigger, moves, cost_after } => {
                if grid.get(*trigger) != Some(*bus) {
                    push(
                        ScheduleViolationKind::BufferReplay,
                        format!("linkage at t={time}: {bus} is not parked at {trigger}"),
                    );
                    continue;
                }
                grid.remove(*trigger);
                departed.insert(*bus);
                let chain = crate::buffer::LinkageChain { trigger: *trigger, moves: moves.clone() };
                match apply_linkage(&grid, &chain) {
                    Ok(next) => grid = next,
                    Err(e) => {
                        push(
                            ScheduleViolationKind::BufferReplay,
                            format!("linkage at t={time}: {e}"),
                        );
                        continue;
                    }
                }
                if let Some(c) = costs.as_ref() {
                    match total_buffer_setup_cost(&grid, c) {
                        Ok(actual) if actual != *cost_after => push(
                            ScheduleViolationKind::BufferReplay,
                            format!("linkage at t={time}: recorded cost {cost_after}, recomputed {actual}"),
                        ),
                        _ => {}
                    }
                }
                match entered.get(bus) {
                    Some(t_in) if *t_in > *time => push(
                        ScheduleViolationKind::BufferReplay,
                        format!("{bus} departs at {time} before entering at {t_in}"),
                    ),
                    None => push(
                        ScheduleViolationKind::BufferReplay,
                        format!("{bus} departs without ever entering"),
                    ),
                    _ => {}
                }
                // Departure is the dispatch moment: the next-stage timeline
                // entry must begin its setup exactly then.
                let dispatched = result
                    .timelines
                    .iter()
                    .filter(|tl| tl.stage == inst.buffer_next_stage())
                    .flat_map(|tl| tl.entries.iter())
                    .find(|e| e.bus == *bus);
                match dispatched {
                    Some(e) if e.setup_start != *time => push(
                        ScheduleViolationKind::BufferReplay,
                        format!(
                            "{bus} departs the buffer at {time} but occupies the next stage from {}",
                            e.setup_start
                        ),
                    ),
                    None => push(
                        ScheduleViolationKind::BufferReplay,
                        format!("{bus} departs the buffer but never runs on the next stage"),
                    ),
                    _ => {}
                }
            }
        }
    }
    for bus in &inst.buses {
        if !entered.contains_key(&bus.id) {
            push(
                ScheduleViolationKind::BufferReplay,
                format!("{} never passes through the buffer", bus.id),
            );
        } else if !departed.contains(&bus.id) {
            push(
                ScheduleViolationKind::BufferReplay,
                format!("{} never leaves the buffer", bus.id),
            );
        }
    }

    // Blocking: a pre-buffer workstation stays occupied until its bus has
    // physically entered the buffer, so the successor cannot begin earlier.
    for tl in &result.timelines {
        if tl.stage != inst.buffer.after_stage {
            continue;
        }
        for pair in tl.entries.windows(2) {
            let (u, v) = (&pair[0], &pair[1]);
            if let Some(t_in) = entered.get(&u.bus) {
                if v.setup_start < *t_in {
                    push(
                        ScheduleViolationKind::Blocking,
                        format!(
                            "stage {} workstation {}: {} begins at {} while {} still blocks it until {}",
                            tl.stage, tl.index, v.bus, v.setup_start, u.bus, t_in
                        ),
                    );
                }
            }
        }
    }

    // Metrics must agree with a recomputation.
    if compute_metrics(inst, result) != result.metrics {
        push(
            ScheduleViolationKind::MetricsMismatch,
            "stored metrics differ from recomputation".into(),
        );
    }

    out
}
