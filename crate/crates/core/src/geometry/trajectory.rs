use alloc::vec::Vec;
use core::ops::Range;

use super::{assign_lane, ccw_span_deg, classify_movement, GeometryTemplate, Lane, Point};
use crate::math::{asin_deg, ceil, floor, wrap_deg};
use crate::record::{Compass, VehicleRecord};

/// Maximum spacing of samples on straight segments, feet.
const STRAIGHT_STEP_FT: f64 = 2.0;

/// Vehicle path: inbound leg, counterclockwise arc on one circulating lane,
/// outbound leg.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub points: Vec<Point>,
    /// Compass heading of travel at each point.
    pub headings: Vec<f64>,
    pub lane: Lane,
    /// Indices of the points on the circulating arc.
    pub circulating: Range<usize>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Pure arc on `radius`, counterclockwise from `start_az` through
    /// `span_deg` degrees. Arc samples sit on whole-degree azimuths (plus the
    /// exact end points) so arcs on the same ring share points.
    pub fn circular_arc(radius: f64, start_az: f64, span_deg: f64, lane: Lane) -> Self {
        let mut t = Trajectory {
            points: Vec::new(),
            headings: Vec::new(),
            lane,
            circulating: 0..0,
        };
        t.push_arc(radius, start_az, span_deg);
        t.circulating = 0..t.points.len();
        t
    }

    fn push(&mut self, p: Point, heading: f64) {
        self.points.push(p);
        self.headings.push(wrap_deg(heading));
    }

    fn push_arc(&mut self, radius: f64, start_az: f64, span_deg: f64) {
        let end_az = start_az - span_deg;
        let at = |az: f64| (Point::polar(radius, az), az - 90.0);
        let (p, h) = at(start_az);
        self.push(p, h);
        let first = floor(start_az);
        let last = ceil(end_az);
        let mut k = first as i64;
        while (k as f64) >= last {
            let az = k as f64;
            if az < start_az - 1e-9 && az > end_az + 1e-9 {
                let (p, h) = at(wrap_deg(az));
                self.push(p, h);
            }
            k -= 1;
        }
        let (p, h) = at(wrap_deg(end_az));
        self.push(p, h);
    }

    /// Samples `from -> to`, excluding `to`.
    fn push_straight(&mut self, from: Point, to: Point, heading: f64) {
        let n = ceil(from.dist(to) / STRAIGHT_STEP_FT).max(1.0) as usize;
        for i in 0..n {
            let t = i as f64 / n as f64;
            self.push(from + (to - from) * t, heading);
        }
    }

    /// Samples `from -> to`, excluding `from`.
    fn push_straight_after(&mut self, from: Point, to: Point, heading: f64) {
        let n = ceil(from.dist(to) / STRAIGHT_STEP_FT).max(1.0) as usize;
        for i in 1..=n {
            let t = i as f64 / n as f64;
            self.push(from + (to - from) * t, heading);
        }
    }
}

pub fn compute_trajectory(vehicle: &VehicleRecord, template: &GeometryTemplate) -> Trajectory {
    let lane = assign_lane(classify_movement(vehicle.entry_leg, vehicle.exit_leg));
    compute_trajectory_in_lane(vehicle.entry_leg, vehicle.exit_leg, lane, template)
}

/// Builds the path for an explicit lane choice.
pub fn compute_trajectory_in_lane(
    entry: Compass,
    exit: Compass,
    lane: Lane,
    template: &GeometryTemplate,
) -> Trajectory {
    let radius = template.lane_centerline_radius(lane);
    let offset = template.approach_offset(lane).min(radius * 0.99);
    let join_deg = asin_deg(offset / radius);
    let entry_bearing = template.bearing(entry);
    let exit_bearing = template.bearing(exit);
    let far = template.extent();

    let mut t = Trajectory {
        points: Vec::new(),
        headings: Vec::new(),
        lane,
        circulating: 0..0,
    };

    // Inbound: on the driver's right of the leg axis, heading toward center.
    let axis_in = Point::heading_unit(entry_bearing);
    let right_in = Point::new(-axis_in.y, axis_in.x);
    let arc_start_az = entry_bearing - join_deg;
    let arc_start = Point::polar(radius, arc_start_az);
    t.push_straight(axis_in * far + right_in * offset, arc_start, entry_bearing + 180.0);

    let span = (ccw_span_deg(entry_bearing, exit_bearing) - 2.0 * join_deg).max(0.0);
    let arc_from = t.points.len();
    t.push_arc(radius, arc_start_az, span);
    t.circulating = arc_from..t.points.len();

    // Outbound: on the driver's right heading away from center.
    let axis_out = Point::heading_unit(exit_bearing);
    let right_out = Point::new(axis_out.y, -axis_out.x);
    let arc_end = t.points[t.points.len() - 1];
    t.push_straight_after(arc_end, axis_out * far + right_out * offset, exit_bearing);
    t
}
