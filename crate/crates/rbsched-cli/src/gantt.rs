//! Gantt rendering of a schedule as an SVG document: one horizontal band per
//! workstation, black processing segments, red setup segments, and green
//! buffer-residency segments with linkage moves marked as ticks.

use std::collections::BTreeMap;
use std::fmt::Write;

use rbsched::model::BusId;
use rbsched::sim::{BufferEvent, ScheduleResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentClass {
    Processing,
    Setup,
    Buffer,
}

impl SegmentClass {
    fn css(self) -> &'static str {
        match self {
            SegmentClass::Processing => "proc",
            SegmentClass::Setup => "setup",
            SegmentClass::Buffer => "buffer",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub band: usize,
    pub class: SegmentClass,
    pub t0: u32,
    pub t1: u32,
    pub bus: BusId,
}

/// Geometry-free description of the chart; the SVG renderer only maps times
/// to pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GanttLayout {
    pub bands: Vec<String>,
    pub segments: Vec<Segment>,
    /// (band, time) markers for individual linkage moves.
    pub move_ticks: Vec<(usize, u32)>,
    pub max_time: u32,
}

pub fn layout(result: &ScheduleResult) -> GanttLayout {
    let mut bands = Vec::new();
    let mut segments = Vec::new();
    let mut max_time = 0;

    for tl in &result.timelines {
        let band = bands.len();
        bands.push(format!("stage {} ws {}", tl.stage, tl.index));
        for e in &tl.entries {
            if e.start > e.setup_start {
                segments.push(Segment {
                    band,
                    class: SegmentClass::Setup,
                    t0: e.setup_start,
                    t1: e.start,
                    bus: e.bus,
                });
            }
            segments.push(Segment {
                band,
                class: SegmentClass::Processing,
                t0: e.start,
                t1: e.end,
                bus: e.bus,
            });
            max_time = max_time.max(e.end);
        }
    }

    // Buffer residency per bus: entry time until the departure that names it,
    // with every move of the bus marked.
    let mut open: BTreeMap<BusId, (u32, Vec<u32>)> = BTreeMap::new();
    let mut residencies: Vec<(u32, u32, BusId, Vec<u32>)> = Vec::new();
    for ev in &result.buffer_trace {
        match ev {
            BufferEvent::Entry { time, bus, .. } => {
                open.insert(*bus, (*time, Vec::new()));
            }
            BufferEvent::Linkage { time, bus, moves, .. } => {
                if let Some((t0, ticks)) = open.remove(bus) {
                    residencies.push((t0, *time, *bus, ticks));
                }
                for mv in moves {
                    if let Some((_, ticks)) = open.get_mut(&mv.bus) {
                        ticks.push(*time);
                    }
                }
            }
        }
    }
    for (bus, (t0, ticks)) in open {
        // A bus still parked when the trace ends (never happens in complete
        // runs, but render it rather than lose it).
        residencies.push((t0, max_time, bus, ticks));
    }
    residencies.sort();

    // First-fit stacking of the residency intervals onto buffer sub-lanes.
    let mut lane_busy_until: Vec<u32> = Vec::new();
    let mut move_ticks = Vec::new();
    for (t0, t1, bus, ticks) in residencies {
        if t1 <= t0 {
            continue; // zero-length pass-through
        }
        let lane = match lane_busy_until.iter().position(|&busy| busy <= t0) {
            Some(i) => i,
            None => {
                lane_busy_until.push(0);
                lane_busy_until.len() - 1
            }
        };
        lane_busy_until[lane] = t1;
        let band = bands.len() + lane;
        segments.push(Segment { band, class: SegmentClass::Buffer, t0, t1, bus });
        for t in ticks {
            move_ticks.push((band, t));
        }
        max_time = max_time.max(t1);
    }
    for i in 0..lane_busy_until.len() {
        bands.push(format!("buffer {}", i + 1));
    }
    // Buffer segments were appended after the workstation bands existed, so
    // their band indices are already final.

    GanttLayout { bands, segments, move_ticks, max_time }
}

const LEFT: f64 = 90.0;
const TOP: f64 = 50.0;
const ROW_H: f64 = 22.0;
const BAR_H: f64 = 14.0;
const PLOT_W: f64 = 900.0;

fn nice_step(max_time: u32) -> u32 {
    let target = (max_time as f64 / 10.0).max(1.0);
    let mag = 10f64.powf(target.log10().floor());
    for mult in [1.0, 2.0, 5.0, 10.0] {
        let step = mag * mult;
        if step >= target {
            return step as u32;
        }
    }
    mag as u32 * 10
}

pub fn render_svg(layout: &GanttLayout) -> String {
    let max_time = layout.max_time.max(1);
    let scale = PLOT_W / max_time as f64;
    let x = |t: u32| LEFT + t as f64 * scale;
    let height = TOP + layout.bands.len() as f64 * ROW_H + 40.0;
    let width = LEFT + PLOT_W + 30.0;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">"
    );
    svg.push_str(
        "<style>\n\
         text { font: 10px sans-serif; fill: #333; }\n\
         .proc { fill: #111111; }\n\
         .setup { fill: #d62728; }\n\
         .buffer { fill: #2ca02c; }\n\
         .tick { stroke: #0b4d14; stroke-width: 1; }\n\
         .axis { stroke: #666; stroke-width: 1; }\n\
         .grid { stroke: #dddddd; stroke-width: 1; }\n\
         </style>\n",
    );
    let _ = writeln!(svg, "<rect width=\"{width:.0}\" height=\"{height:.0}\" fill=\"white\"/>");

    // Legend.
    let legend = [
        ("proc", "processing"),
        ("setup", "setup"),
        ("buffer", "buffer residency"),
    ];
    for (i, (class, name)) in legend.iter().enumerate() {
        let lx = LEFT + i as f64 * 150.0;
        let _ = writeln!(svg, "<rect class=\"{class}\" x=\"{lx:.2}\" y=\"14\" width=\"12\" height=\"12\"/>");
        let _ = writeln!(svg, "<text x=\"{:.2}\" y=\"24\">{name}</text>", lx + 16.0);
    }

    // Time axis with grid lines, labeled in minutes.
    let axis_y = TOP + layout.bands.len() as f64 * ROW_H + 6.0;
    let step = nice_step(max_time);
    let mut t = 0;
    while t <= max_time {
        let gx = x(t);
        let _ = writeln!(svg, "<line class=\"grid\" x1=\"{gx:.2}\" y1=\"{TOP}\" x2=\"{gx:.2}\" y2=\"{axis_y:.2}\"/>");
        let _ = writeln!(svg, "<text x=\"{gx:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{t}</text>", axis_y + 14.0);
        t += step;
    }
    let _ = writeln!(
        svg,
        "<line class=\"axis\" x1=\"{LEFT}\" y1=\"{axis_y:.2}\" x2=\"{:.2}\" y2=\"{axis_y:.2}\"/>",
        LEFT + PLOT_W
    );
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">minutes</text>",
        LEFT + PLOT_W / 2.0,
        axis_y + 30.0
    );

    // Band labels.
    for (i, name) in layout.bands.iter().enumerate() {
        let y = TOP + i as f64 * ROW_H + ROW_H / 2.0 + 3.0;
        let _ = writeln!(svg, "<text x=\"6\" y=\"{y:.2}\">{name}</text>");
    }

    // Segments.
    for seg in &layout.segments {
        let y = TOP + seg.band as f64 * ROW_H + (ROW_H - BAR_H) / 2.0;
        let x0 = x(seg.t0);
        let w = (seg.t1 - seg.t0) as f64 * scale;
        let _ = writeln!(
            svg,
            "<rect class=\"{}\" x=\"{x0:.2}\" y=\"{y:.2}\" width=\"{w:.2}\" height=\"{BAR_H}\" data-bus=\"{}\" data-t0=\"{}\" data-t1=\"{}\"/>",
            seg.class.css(),
            seg.bus,
            seg.t0,
            seg.t1
        );
    }

    // Linkage-move ticks on the buffer bands.
    for (band, t) in &layout.move_ticks {
        let tx = x(*t);
        let y = TOP + *band as f64 * ROW_H + (ROW_H - BAR_H) / 2.0;
        let _ = writeln!(
            svg,
            "<line class=\"tick\" x1=\"{tx:.2}\" y1=\"{y:.2}\" x2=\"{tx:.2}\" y2=\"{:.2}\"/>",
            y + BAR_H
        );
    }

    svg.push_str("</svg>\n");
    svg
}
