//! Shared proptest generators for small grids and small valid instances.

// Each test binary uses a different subset of these helpers.
#![allow(dead_code)]

use proptest::prelude::*;
use rbsched::buffer::{BufferGrid, Cell};
use rbsched::model::{
    builtin_factors_instance, builtin_instance, Bus, BusId, BusType, Instance, SetupModel,
};

/// The five bus types of the reference fleet.
pub const FLEET_TYPES: [(&str, &str); 5] = [
    ("Type1", "Color1"),
    ("Type2", "Color1"),
    ("Type3", "Color2"),
    ("Type2", "Color2"),
    ("Type1", "Color3"),
];

pub fn fleet_type(idx: u8) -> BusType {
    let (m, c) = FLEET_TYPES[idx as usize];
    BusType::new(m, c)
}

pub fn matrix_setup() -> SetupModel {
    builtin_instance().setup
}

/// A grid state: dimensions, an occupancy mask of type indices, the fleet of
/// parked buses (ids 1..=k in row-major cell order), and one vacant trigger
/// cell.
#[derive(Debug, Clone)]
pub struct GridState {
    pub grid: BufferGrid,
    pub buses: Vec<Bus>,
    pub trigger: Cell,
    /// Row-major occupancy: `Some(type index)` per cell.
    pub mask: Vec<Option<u8>>,
}

pub fn arb_grid_state(max_dim: u32, occupancy: f64) -> impl Strategy<Value = GridState> {
    (1..=max_dim, 1..=max_dim)
        .prop_flat_map(move |(rows, cols)| {
            let cells = (rows * cols) as usize;
            (
                Just(rows),
                Just(cols),
                prop::collection::vec(prop::option::weighted(occupancy, 0u8..5), cells),
                any::<prop::sample::Index>(),
            )
        })
        .prop_filter_map("needs a vacant cell", |(rows, cols, mask, pick)| {
            let vacant: Vec<usize> = mask
                .iter()
                .enumerate()
                .filter_map(|(i, m)| m.is_none().then_some(i))
                .collect();
            if vacant.is_empty() {
                return None;
            }
            let trigger_idx = vacant[pick.index(vacant.len())];
            let trigger = Cell::new(trigger_idx as u32 / cols + 1, trigger_idx as u32 % cols + 1);
            let mut grid = BufferGrid::new(rows, cols);
            let mut buses = Vec::new();
            for (i, slot) in mask.iter().enumerate() {
                let Some(ty) = slot else { continue };
                let id = BusId(buses.len() as u32 + 1);
                buses.push(Bus {
                    id,
                    bus_type: fleet_type(*ty),
                    proc_times: vec![1],
                });
                let cell = Cell::new(i as u32 / cols + 1, i as u32 % cols + 1);
                grid.place(cell, id).unwrap();
            }
            Some(GridState { grid, buses, trigger, mask })
        })
}

/// Small valid instances: 2..=4 stages of 1..=3 workstations, buffer up to
/// 3x3 after any stage, up to 10 buses typed from the reference fleet, and
/// either the matrix or the factors setup model applying to a random subset
/// of stages.
pub fn arb_instance() -> impl Strategy<Value = Instance> {
    prop::collection::vec(1u32..=3, 2..=4)
        .prop_flat_map(|stages| {
            let q = stages.len() as u32;
            (
                Just(stages),
                1..q,
                1u32..=3,
                1u32..=3,
                prop::collection::vec((0u8..5, prop::collection::vec(1u32..=20, q as usize)), 0..=10),
                prop::collection::vec(any::<bool>(), q as usize),
                any::<bool>(),
            )
        })
        .prop_map(|(stages, after, rows, cols, fleet, applies, use_factors)| {
            let mut inst = if use_factors {
                builtin_factors_instance()
            } else {
                builtin_instance()
            };
            inst.stages = stages;
            inst.buffer.after_stage = after;
            inst.buffer.rows = rows;
            inst.buffer.cols = cols;
            inst.buses = fleet
                .into_iter()
                .enumerate()
                .map(|(i, (ty, proc_times))| Bus {
                    id: BusId(i as u32 + 1),
                    bus_type: fleet_type(ty),
                    proc_times,
                })
                .collect();
            inst.setup.applies_to_stages = applies
                .into_iter()
                .enumerate()
                .filter_map(|(l, on)| on.then_some(l as u32 + 1))
                .collect();
            inst
        })
}
