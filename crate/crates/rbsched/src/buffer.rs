//! Routing buffer state and movement: the n x m parking grid, legal moves,
//! linkage-chain enumeration, minimum-cost and random chain selection, entry
//! placement, and dispatch eligibility.
//!
//! Lanes are rows; columns run from the entry side (j = 1) to the exit side
//! (j = m). A bus may move forward within its lane (column + 1) or laterally
//! to an adjacent lane (row +/- 1) at the same column; column-decreasing
//! moves are illegal.

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{BusId, Minutes, SetupError};
use crate::setup::CostContext;

/// 1-based grid coordinate: `row` is the lane, `col` the position along it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub row: u32,
    pub col: u32,
}

impl Cell {
    pub fn new(row: u32, col: u32) -> Self {
        Cell { row, col }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BufferError {
    #[error("cell {0} is outside the grid")]
    OutOfBounds(Cell),
    #[error("cell {0} is already occupied")]
    Occupied(Cell),
    #[error("cell {0} is vacant")]
    Vacant(Cell),
    #[error("bus {0} is already parked on the grid")]
    DuplicateBus(BusId),
    #[error("move {index} is illegal: {reason}")]
    IllegalMove { index: usize, reason: String },
    #[error("entry column is full")]
    EntryColumnFull,
    #[error(transparent)]
    Cost(#[from] SetupError),
}

/// Occupancy of the routing buffer. Values are immutable snapshots in the
/// movement operations below: each returns a new grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BufferGrid {
    rows: u32,
    cols: u32,
    cells: Vec<Option<BusId>>,
}

impl BufferGrid {
    pub fn new(rows: u32, cols: u32) -> Self {
        assert!(rows >= 1 && cols >= 1, "grid must be at least 1x1");
        BufferGrid {
            rows,
            cols,
            cells: vec![None; (rows * cols) as usize],
        }
    }

    pub fn rows(&self) -> u32 {
        self.rows
    }

    pub fn cols(&self) -> u32 {
        self.cols
    }

    pub fn contains(&self, cell: Cell) -> bool {
        (1..=self.rows).contains(&cell.row) && (1..=self.cols).contains(&cell.col)
    }

    fn idx(&self, cell: Cell) -> usize {
        debug_assert!(self.contains(cell));
        ((cell.row - 1) * self.cols + (cell.col - 1)) as usize
    }

    /// Occupant of `cell`, or `None` if vacant. `cell` must be in bounds.
    pub fn get(&self, cell: Cell) -> Option<BusId> {
        self.cells[self.idx(cell)]
    }

    /// Park `bus` at `cell`; the cell must be vacant and the bus not already
    /// on the grid.
    pub fn place(&mut self, cell: Cell, bus: BusId) -> Result<(), BufferError> {
        if !self.contains(cell) {
            return Err(BufferError::OutOfBounds(cell));
        }
        if self.get(cell).is_some() {
            return Err(BufferError::Occupied(cell));
        }
        if self.find(bus).is_some() {
            return Err(BufferError::DuplicateBus(bus));
        }
        let i = self.idx(cell);
        self.cells[i] = Some(bus);
        Ok(())
    }

    /// Clear `cell`, returning its occupant if any.
    pub fn remove(&mut self, cell: Cell) -> Option<BusId> {
        let i = self.idx(cell);
        self.cells[i].take()
    }

    pub fn occupied_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }

    /// Occupied cells in row-major order.
    pub fn occupied(&self) -> impl Iterator<Item = (Cell, BusId)> + '_ {
        self.cells.iter().enumerate().filter_map(move |(i, slot)| {
            slot.map(|bus| {
                let row = i as u32 / self.cols + 1;
                let col = i as u32 % self.cols + 1;
                (Cell { row, col }, bus)
            })
        })
    }

    pub fn find(&self, bus: BusId) -> Option<Cell> {
        self.occupied().find(|(_, b)| *b == bus).map(|(c, _)| c)
    }

    /// Entry-column cells (column 1), ascending row.
    pub fn entry_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (1..=self.rows).map(|row| Cell { row, col: 1 })
    }

    fn move_unchecked(&mut self, from: Cell, to: Cell) {
        let i = self.idx(from);
        let bus = self.cells[i].take();
        let j = self.idx(to);
        debug_assert!(bus.is_some() && self.cells[j].is_none());
        self.cells[j] = bus;
    }
}

/// A single-bus relocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Move {
    pub bus: BusId,
    pub from: Cell,
    pub to: Cell,
}

impl Move {
    /// Forward within the lane or lateral to an adjacent lane. Anything else
    /// (including any column-decreasing move) is illegal.
    pub fn is_legal_shape(&self) -> bool {
        let forward = self.to.row == self.from.row && self.to.col == self.from.col + 1;
        let lateral = self.to.col == self.from.col && self.to.row.abs_diff(self.from.row) == 1;
        forward || lateral
    }
}

/// The cascade of moves triggered by one departure: each move fills the cell
/// vacated by the previous one, starting from the trigger cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkageChain {
    pub trigger: Cell,
    pub moves: Vec<Move>,
}

impl LinkageChain {
    pub fn empty(trigger: Cell) -> Self {
        LinkageChain { trigger, moves: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    /// The cell left vacant after the chain runs: the last move's origin, or
    /// the trigger itself for an empty chain.
    pub fn vacancy(&self) -> Cell {
        self.moves.last().map(|m| m.from).unwrap_or(self.trigger)
    }
}

fn check_vacant_target(grid: &BufferGrid, cell: Cell) -> Result<(), BufferError> {
    if !grid.contains(cell) {
        return Err(BufferError::OutOfBounds(cell));
    }
    if grid.get(cell).is_some() {
        return Err(BufferError::Occupied(cell));
    }
    Ok(())
}

/// Feeder moves into `vacant`, in deterministic order: the forward feeder
/// from (i, j-1) first, then lateral feeders by ascending row. Buses listed
/// in `already_moved` are skipped.
pub fn eligible_feeders(
    grid: &BufferGrid,
    vacant: Cell,
    already_moved: &BTreeSet<BusId>,
) -> Result<Vec<Move>, BufferError> {
    check_vacant_target(grid, vacant)?;
    Ok(feeders_unchecked(grid, vacant, already_moved))
}

fn feeders_unchecked(grid: &BufferGrid, vacant: Cell, already_moved: &BTreeSet<BusId>) -> Vec<Move> {
    let mut sources = Vec::with_capacity(3);
    if vacant.col > 1 {
        sources.push(Cell { row: vacant.row, col: vacant.col - 1 });
    }
    if vacant.row > 1 {
        sources.push(Cell { row: vacant.row - 1, col: vacant.col });
    }
    if vacant.row < grid.rows() {
        sources.push(Cell { row: vacant.row + 1, col: vacant.col });
    }
    sources
        .into_iter()
        .filter_map(|from| {
            grid.get(from)
                .filter(|bus| !already_moved.contains(bus))
                .map(|bus| Move { bus, from, to: vacant })
        })
        .collect()
}

/// All linkage chains from `trigger` (which must already be vacant), in
/// depth-first order over the deterministic feeder ordering, i.e.
/// lexicographic by move sequence.
///
/// Chains are maximal: a chain ends exactly when the newly vacated cell has
/// no eligible feeder. With `allow_early_stop` every proper prefix (including
/// the empty chain) is emitted as well, each before its own continuations.
pub fn enumerate_linkages(
    grid: &BufferGrid,
    trigger: Cell,
    allow_early_stop: bool,
) -> Result<Vec<LinkageChain>, BufferError> {
    check_vacant_target(grid, trigger)?;
    let mut scratch = grid.clone();
    let mut out = Vec::new();
    let mut prefix = Vec::new();
    let mut moved = BTreeSet::new();
    dfs_enumerate(&mut scratch, trigger, trigger, &mut moved, &mut prefix, allow_early_stop, &mut out);
    Ok(out)
}

fn dfs_enumerate(
    grid: &mut BufferGrid,
    trigger: Cell,
    vacant: Cell,
    moved: &mut BTreeSet<BusId>,
    prefix: &mut Vec<Move>,
    allow_early_stop: bool,
    out: &mut Vec<LinkageChain>,
) {
    let feeders = feeders_unchecked(grid, vacant, moved);
    if allow_early_stop || feeders.is_empty() {
        out.push(LinkageChain { trigger, moves: prefix.clone() });
    }
    for mv in feeders {
        grid.move_unchecked(mv.from, mv.to);
        moved.insert(mv.bus);
        prefix.push(mv);
        dfs_enumerate(grid, trigger, mv.from, moved, prefix, allow_early_stop, out);
        prefix.pop();
        moved.remove(&mv.bus);
        grid.move_unchecked(mv.to, mv.from);
    }
}

/// Among all chains [`enumerate_linkages`] would produce, return one whose
/// resulting grid has minimum total setup cost, together with that cost.
/// Ties go to the first minimal chain in enumeration order.
pub fn select_min_cost_linkage(
    grid: &BufferGrid,
    trigger: Cell,
    costs: &CostContext,
    allow_early_stop: bool,
) -> Result<(LinkageChain, Minutes), BufferError> {
    check_vacant_target(grid, trigger)?;
    for (_, bus) in grid.occupied() {
        if !costs.knows_bus(bus) {
            return Err(SetupError::UnknownBus(bus).into());
        }
    }
    let mut scratch = grid.clone();
    let mut prefix = Vec::new();
    let mut moved = BTreeSet::new();
    let mut best: Option<(LinkageChain, Minutes)> = None;
    dfs_select(
        &mut scratch,
        trigger,
        trigger,
        &mut moved,
        &mut prefix,
        allow_early_stop,
        costs,
        &mut best,
    );
    Ok(best.expect("at least the dead-end chain is scored"))
}

#[allow(clippy::too_many_arguments)]
fn dfs_select(
    grid: &mut BufferGrid,
    trigger: Cell,
    vacant: Cell,
    moved: &mut BTreeSet<BusId>,
    prefix: &mut Vec<Move>,
    allow_early_stop: bool,
    costs: &CostContext,
    best: &mut Option<(LinkageChain, Minutes)>,
) {
    let feeders = feeders_unchecked(grid, vacant, moved);
    if allow_early_stop || feeders.is_empty() {
        let cost = costs.grid_cost_unchecked(grid);
        // Strict improvement keeps the first minimal chain in DFS order.
        if best.as_ref().is_none_or(|(_, b)| cost < *b) {
            *best = Some((LinkageChain { trigger, moves: prefix.clone() }, cost));
        }
    }
    for mv in feeders {
        grid.move_unchecked(mv.from, mv.to);
        moved.insert(mv.bus);
        prefix.push(mv);
        dfs_select(grid, trigger, mv.from, moved, prefix, allow_early_stop, costs, best);
        prefix.pop();
        moved.remove(&mv.bus);
        grid.move_unchecked(mv.to, mv.from);
    }
}

/// Build one maximal chain by drawing uniformly among the eligible feeders
/// at every step. Deterministic for a fixed rng state and grid.
pub fn select_random_linkage(
    grid: &BufferGrid,
    trigger: Cell,
    rng: &mut impl Rng,
) -> Result<LinkageChain, BufferError> {
    check_vacant_target(grid, trigger)?;
    let mut scratch = grid.clone();
    let mut moved = BTreeSet::new();
    let mut moves = Vec::new();
    let mut vacant = trigger;
    loop {
        let feeders = feeders_unchecked(&scratch, vacant, &moved);
        if feeders.is_empty() {
            return Ok(LinkageChain { trigger, moves });
        }
        let mv = feeders[rng.gen_range(0..feeders.len())];
        scratch.move_unchecked(mv.from, mv.to);
        moved.insert(mv.bus);
        vacant = mv.from;
        moves.push(mv);
    }
}

/// Apply a chain move by move, validating each against the evolving grid.
/// Returns the new grid; occupancy is preserved and only the vacancy shifts
/// from the trigger to the chain's final origin.
pub fn apply_linkage(grid: &BufferGrid, chain: &LinkageChain) -> Result<BufferGrid, BufferError> {
    check_vacant_target(grid, chain.trigger)?;
    let mut out = grid.clone();
    let mut vacant = chain.trigger;
    let mut moved = BTreeSet::new();
    for (index, mv) in chain.moves.iter().enumerate() {
        let illegal = |reason: String| BufferError::IllegalMove { index, reason };
        if mv.to != vacant {
            return Err(illegal(format!("target {} is not the vacated cell {}", mv.to, vacant)));
        }
        if !mv.is_legal_shape() {
            return Err(illegal(format!("{} -> {} is neither forward nor lateral", mv.from, mv.to)));
        }
        if !out.contains(mv.from) {
            return Err(illegal(format!("source {} is outside the grid", mv.from)));
        }
        match out.get(mv.from) {
            Some(bus) if bus == mv.bus => {}
            Some(bus) => return Err(illegal(format!("source {} holds {}, not {}", mv.from, bus, mv.bus))),
            None => return Err(illegal(format!("source {} is vacant", mv.from))),
        }
        if !moved.insert(mv.bus) {
            return Err(illegal(format!("bus {} moves twice in one linkage", mv.bus)));
        }
        out.move_unchecked(mv.from, mv.to);
        vacant = mv.from;
    }
    Ok(out)
}

/// The cell a bus driving into lane `row` ends up on: it rolls forward from
/// the entry cell to the deepest vacant cell before the first occupied one.
/// `None` if the lane's entry cell is occupied.
pub fn lane_landing_cell(grid: &BufferGrid, row: u32) -> Option<Cell> {
    let mut landing = None;
    for col in 1..=grid.cols() {
        let cell = Cell { row, col };
        if grid.get(cell).is_some() {
            break;
        }
        landing = Some(cell);
    }
    landing
}

/// Park an entering bus. The bus drives in through a lane whose entry cell
/// (column 1) is vacant and rolls forward to that lane's deepest vacant
/// cell; among the reachable landing cells the one minimizing the resulting
/// total setup cost is chosen, ties going to the lowest row. Errors if the
/// entry column is full (the caller treats the buffer as blocking).
pub fn place_entering_bus(
    grid: &BufferGrid,
    bus: BusId,
    costs: &CostContext,
) -> Result<(BufferGrid, Cell), BufferError> {
    if !costs.knows_bus(bus) {
        return Err(SetupError::UnknownBus(bus).into());
    }
    if grid.find(bus).is_some() {
        return Err(BufferError::DuplicateBus(bus));
    }
    let mut scratch = grid.clone();
    let mut best: Option<(Cell, Minutes)> = None;
    for row in 1..=grid.rows() {
        let Some(cell) = lane_landing_cell(grid, row) else { continue };
        let i = scratch.idx(cell);
        scratch.cells[i] = Some(bus);
        let cost = costs.grid_cost_unchecked(&scratch);
        scratch.cells[i] = None;
        if best.as_ref().is_none_or(|(_, b)| cost < *b) {
            best = Some((cell, cost));
        }
    }
    match best {
        Some((cell, _)) => {
            let mut out = grid.clone();
            out.place(cell, bus)?;
            Ok((out, cell))
        }
        None => Err(BufferError::EntryColumnFull),
    }
}

/// Dispatch-eligible buses: for each lane with any occupant, the occupant
/// with the maximal column, ordered by ascending row.
pub fn lane_heads(grid: &BufferGrid) -> Vec<(BusId, Cell)> {
    let mut heads = Vec::new();
    for row in 1..=grid.rows() {
        let head = (1..=grid.cols())
            .rev()
            .map(|col| Cell { row, col })
            .find_map(|cell| grid.get(cell).map(|bus| (bus, cell)));
        if let Some(h) = head {
            heads.push(h);
        }
    }
    heads
}
