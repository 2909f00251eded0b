//! Pairwise setup costs between buses and the total adjacency setup cost of
//! a buffer grid: the score the movement policy minimizes.

use crate::buffer::{BufferGrid, Cell};
use crate::model::{Bus, BusId, Minutes, SetupError, SetupModel};

/// An unordered pair of 4-adjacent grid coordinates, stored with `a < b` in
/// row-major order so each pair has one canonical representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct AdjacentPair {
    pub a: Cell,
    pub b: Cell,
}

impl AdjacentPair {
    /// Canonicalize two 4-adjacent cells; `None` if they are not 4-adjacent.
    pub fn new(x: Cell, y: Cell) -> Option<Self> {
        if !is_adjacent(x, y) {
            return None;
        }
        let (a, b) = if x <= y { (x, y) } else { (y, x) };
        Some(AdjacentPair { a, b })
    }
}

/// 4-neighborhood test: |di| + |dj| = 1 (diagonals excluded).
pub fn is_adjacent(x: Cell, y: Cell) -> bool {
    let di = x.row.abs_diff(y.row);
    let dj = x.col.abs_diff(y.col);
    di + dj == 1
}

/// Every unordered pair of 4-adjacent cells where both hold a bus, each pair
/// once, in row-major order of the first cell.
pub fn occupied_adjacent_pairs(grid: &BufferGrid) -> Vec<AdjacentPair> {
    let mut pairs = Vec::new();
    for (cell, _) in grid.occupied() {
        // Scanning right and down from each occupied cell visits each
        // unordered pair exactly once.
        let right = Cell { row: cell.row, col: cell.col + 1 };
        if grid.contains(right) && grid.get(right).is_some() {
            pairs.push(AdjacentPair { a: cell, b: right });
        }
        let down = Cell { row: cell.row + 1, col: cell.col };
        if grid.contains(down) && grid.get(down).is_some() {
            pairs.push(AdjacentPair { a: cell, b: down });
        }
    }
    pairs
}

/// Setup costs between every pair of buses of a fixed fleet, precomputed so
/// grid scoring inside linkage enumeration stays cheap.
#[derive(Debug, Clone)]
pub struct CostContext {
    /// Type index per bus id (position `id - 1`); `u16::MAX` marks a gap.
    type_of: Vec<u16>,
    /// Dense type-pair cost table, `type_count` x `type_count`.
    costs: Vec<Minutes>,
    type_count: usize,
}

impl CostContext {
    /// Resolve each bus against the setup model and precompute all pair
    /// costs. Fails if any occurring type pair has no defined cost.
    pub fn new(buses: &[Bus], setup: &SetupModel) -> Result<Self, SetupError> {
        let max_id = buses.iter().map(|b| b.id.0).max().unwrap_or(0) as usize;
        let mut types = Vec::new();
        let mut type_of = vec![u16::MAX; max_id];
        for bus in buses {
            let idx = match types.iter().position(|t| t == &bus.bus_type) {
                Some(i) => i,
                None => {
                    types.push(bus.bus_type.clone());
                    types.len() - 1
                }
            };
            type_of[bus.id.index()] = idx as u16;
        }
        let n = types.len();
        let mut costs = vec![0; n * n];
        for i in 0..n {
            for j in i..n {
                let c = setup.cost_between(&types[i], &types[j])?;
                costs[i * n + j] = c;
                costs[j * n + i] = c;
            }
        }
        Ok(CostContext { type_of, costs, type_count: n })
    }

    /// Setup cost between two buses of the fleet.
    pub fn pair_cost(&self, a: BusId, b: BusId) -> Result<Minutes, SetupError> {
        let ta = self.type_index(a).ok_or(SetupError::UnknownBus(a))?;
        let tb = self.type_index(b).ok_or(SetupError::UnknownBus(b))?;
        Ok(self.costs[ta * self.type_count + tb])
    }

    pub fn knows_bus(&self, id: BusId) -> bool {
        self.type_index(id).is_some()
    }

    fn type_index(&self, id: BusId) -> Option<usize> {
        match self.type_of.get(id.index()) {
            Some(&t) if t != u16::MAX => Some(t as usize),
            _ => None,
        }
    }

    /// Total adjacency cost without id checks; used by the enumeration hot
    /// path after the grid has been resolved once.
    pub(crate) fn grid_cost_unchecked(&self, grid: &BufferGrid) -> Minutes {
        let mut total = 0;
        for (cell, bus) in grid.occupied() {
            let ta = self.type_of[bus.index()] as usize;
            let right = Cell { row: cell.row, col: cell.col + 1 };
            if grid.contains(right) {
                if let Some(other) = grid.get(right) {
                    total += self.costs[ta * self.type_count + self.type_of[other.index()] as usize];
                }
            }
            let down = Cell { row: cell.row + 1, col: cell.col };
            if grid.contains(down) {
                if let Some(other) = grid.get(down) {
                    total += self.costs[ta * self.type_count + self.type_of[other.index()] as usize];
                }
            }
        }
        total
    }
}

/// Total setup cost of a buffer arrangement: the sum of pairwise setup costs
/// over all 4-adjacent occupied pairs, each unordered pair counted once.
/// Empty and singleton occupancies cost 0.
pub fn total_buffer_setup_cost(grid: &BufferGrid, costs: &CostContext) -> Result<Minutes, SetupError> {
    for (_, bus) in grid.occupied() {
        if !costs.knows_bus(bus) {
            return Err(SetupError::UnknownBus(bus));
        }
    }
    Ok(costs.grid_cost_unchecked(grid))
}
