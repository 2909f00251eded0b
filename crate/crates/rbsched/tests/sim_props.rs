//! Fuzzed feasibility of the simulator: every run on a small random instance
//! must pass the independent schedule checker under both schemes, respect
//! simple makespan lower bounds, and replay deterministically.

mod common;

use common::arb_instance;
use proptest::prelude::*;
use rbsched::harness::random_permutation;
use rbsched::sim::{compute_metrics, simulate, verify_schedule, SchemeConfig};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn both_schemes_produce_feasible_schedules(inst in arb_instance(), seed in any::<u64>()) {
        let sequence = random_permutation(inst.bus_count(), seed);
        for cfg in [SchemeConfig::min_setup_cost(seed), SchemeConfig::random_movement(seed)] {
            let result = simulate(&inst, &sequence, &cfg).unwrap();
            let violations = verify_schedule(&inst, &result);
            prop_assert!(violations.is_empty(), "{:?}", violations);
            prop_assert_eq!(&compute_metrics(&inst, &result), &result.metrics);
            prop_assert!(result.metrics.next_stage_completion <= result.metrics.makespan);

            // Makespan lower bounds: no bus finishes before its own work,
            // no stage before its total load spread over its workstations.
            let makespan = result.metrics.makespan as u64;
            for bus in &inst.buses {
                let total: u64 = bus.proc_times.iter().map(|&t| t as u64).sum();
                prop_assert!(makespan >= total);
            }
            for (l, &m) in inst.stages.iter().enumerate() {
                let load: u64 = inst.buses.iter().map(|b| b.proc_times[l] as u64).sum();
                prop_assert!(makespan * m as u64 >= load);
            }

            // Flow conservation: one buffer entry and one departure per bus.
            let entries = result
                .buffer_trace
                .iter()
                .filter(|e| matches!(e, rbsched::sim::BufferEvent::Entry { .. }))
                .count();
            let departures = result.buffer_trace.len() - entries;
            prop_assert_eq!(entries, inst.buses.len());
            prop_assert_eq!(departures, inst.buses.len());
        }
    }

    #[test]
    fn replay_is_byte_identical(inst in arb_instance(), seed in any::<u64>()) {
        let sequence = random_permutation(inst.bus_count(), seed);
        let cfg = SchemeConfig::random_movement(seed);
        let a = simulate(&inst, &sequence, &cfg).unwrap();
        let b = simulate(&inst, &sequence, &cfg).unwrap();
        prop_assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }
}
