//! Two-lane roundabout geometry in plan coordinates.
//!
//! Origin is the roundabout center, `+y` points North and `+x` East, units
//! are feet. Angles are compass degrees (N=0, E=90, clockwise). Traffic
//! circulates counterclockwise, which in compass terms means decreasing
//! azimuth.

mod impact;
mod trajectory;
mod zones;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::math::{atan2_deg, cos_deg, round, sin_deg, sqrt, wrap_deg};
use crate::record::{ApproachLeg, Compass};

pub use impact::{compute_impact, ImpactSolution};
pub use trajectory::{compute_trajectory, compute_trajectory_in_lane, Trajectory};
pub use zones::{body_zone, zone_centroid, BodyZone, PERIMETER_ZONES};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("damage code {0} is non-localized")]
    NonLocalizedCode(u8),
    #[error("no body zone for damage code {0}")]
    UnsupportedCode(u8),
    #[error("invalid template: {0}")]
    InvalidTemplate(String),
    #[error("empty trajectory")]
    EmptyTrajectory,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Point at compass azimuth `azimuth_deg` and distance `radius` from the
    /// origin.
    pub fn polar(radius: f64, azimuth_deg: f64) -> Self {
        Self::new(radius * sin_deg(azimuth_deg), radius * cos_deg(azimuth_deg))
    }

    /// Unit vector pointing along compass heading `heading_deg`.
    pub fn heading_unit(heading_deg: f64) -> Self {
        Self::polar(1.0, heading_deg)
    }

    pub fn norm(self) -> f64 {
        sqrt(self.x * self.x + self.y * self.y)
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// Compass azimuth of the point as seen from the origin, in `[0, 360)`.
    /// Values within 1e-9 degrees of a whole degree snap to it so points
    /// built with trigonometry land on the intended side of a boundary.
    pub fn azimuth_deg(self) -> f64 {
        let az = wrap_deg(atan2_deg(self.x, self.y));
        let whole = round(az);
        let az = if crate::math::abs(az - whole) < 1e-9 { whole } else { az };
        wrap_deg(az)
    }

    pub fn normalized(self) -> Option<Point> {
        let n = self.norm();
        (n > 1e-12).then(|| self * (1.0 / n))
    }

    /// Rotates a body-frame vector (`x` forward, `y` left) into plan
    /// coordinates for a body facing `heading_deg`.
    pub fn body_to_world(self, heading_deg: f64) -> Point {
        let forward = Point::heading_unit(heading_deg);
        let left = Point::new(-forward.y, forward.x);
        forward * self.x + left * self.y
    }

    /// Inverse of [`Point::body_to_world`].
    pub fn world_to_body(self, heading_deg: f64) -> Point {
        let forward = Point::heading_unit(heading_deg);
        let left = Point::new(-forward.y, forward.x);
        Point::new(self.dot(forward), self.dot(left))
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Position plus compass heading.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Point,
    pub heading_deg: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Lane {
    Inner,
    Outer,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TurnMovement {
    RightTurn,
    Through,
    LeftTurn,
    UTurn,
}

/// Vehicle outline used for glyphs and damage zones.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Footprint {
    pub length_ft: f64,
    pub width_ft: f64,
}

impl Default for Footprint {
    fn default() -> Self {
        Self {
            length_ft: 15.0,
            width_ft: 6.0,
        }
    }
}

impl Footprint {
    /// Scales a body-frame fraction point to feet.
    pub fn scale(&self, fraction: Point) -> Point {
        Point::new(fraction.x * self.length_ft, fraction.y * self.width_ft)
    }

    /// Outline corners in plan coordinates for a body at `pose`.
    pub fn polygon(&self, pose: Pose) -> [Point; 4] {
        let (hl, hw) = (self.length_ft / 2.0, self.width_ft / 2.0);
        [
            Point::new(hl, hw),
            Point::new(-hl, hw),
            Point::new(-hl, -hw),
            Point::new(hl, -hw),
        ]
        .map(|c| pose.position + c.body_to_world(pose.heading_deg))
    }
}

/// Parameterized roundabout. Serialized with the `*_ft` key names of the
/// template file format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryTemplate {
    #[serde(rename = "island_radius_ft")]
    pub island_radius: f64,
    #[serde(rename = "lane_width_ft")]
    pub lane_width: f64,
    #[serde(rename = "lanes")]
    pub num_circulating_lanes: u32,
    pub legs: Vec<ApproachLeg>,
    #[serde(rename = "leg_length_ft")]
    pub leg_length: f64,
    #[serde(rename = "entry_lane_width_ft")]
    pub entry_lane_width: f64,
}

/// The Malta US 9 / NY 67 roundabout: 165 ft inscribed diameter, 105 ft
/// island, two 15 ft circulating lanes.
pub fn standard_template() -> GeometryTemplate {
    let leg = |position: Compass, name: &str| ApproachLeg {
        position,
        road_name: name.into(),
        bearing_deg: position.bearing_deg(),
    };
    GeometryTemplate {
        island_radius: 52.5,
        lane_width: 15.0,
        num_circulating_lanes: 2,
        legs: vec![
            leg(Compass::North, "US 9"),
            leg(Compass::East, "Dunning Street"),
            leg(Compass::South, "US 9 / US 7"),
            leg(Compass::West, "NY 67"),
        ],
        leg_length: 100.0,
        entry_lane_width: 12.5,
    }
}

impl GeometryTemplate {
    pub fn outer_radius(&self) -> f64 {
        self.island_radius + f64::from(self.num_circulating_lanes) * self.lane_width
    }

    /// Radius of a circulating lane's centerline.
    pub fn lane_centerline_radius(&self, lane: Lane) -> f64 {
        let k = match lane {
            Lane::Inner => 1,
            Lane::Outer => self.num_circulating_lanes.max(1),
        };
        self.island_radius + (f64::from(k) - 0.5) * self.lane_width
    }

    /// Lateral offset of the approach lane feeding `lane`, measured from the
    /// leg axis toward the driver's right.
    pub fn approach_offset(&self, lane: Lane) -> f64 {
        match lane {
            Lane::Inner => 0.5 * self.entry_lane_width,
            Lane::Outer if self.num_circulating_lanes >= 2 => 1.5 * self.entry_lane_width,
            Lane::Outer => 0.5 * self.entry_lane_width,
        }
    }

    /// Half-width of a leg corridor (both directions of travel).
    pub fn corridor_half_width(&self) -> f64 {
        2.0 * self.entry_lane_width
    }

    /// Distance from the center to the drawn end of each leg.
    pub fn extent(&self) -> f64 {
        self.outer_radius() + self.leg_length
    }

    pub fn leg(&self, position: Compass) -> Option<&ApproachLeg> {
        self.legs.iter().find(|l| l.position == position)
    }

    pub fn bearing(&self, position: Compass) -> f64 {
        self.leg(position)
            .map_or(position.bearing_deg(), |l| l.bearing_deg)
    }

    pub fn road_name(&self, position: Compass) -> &str {
        self.leg(position).map_or("", |l| l.road_name.as_str())
    }

    pub fn with_road_name(mut self, position: Compass, name: &str) -> Self {
        if let Some(leg) = self.legs.iter_mut().find(|l| l.position == position) {
            leg.road_name = name.into();
        }
        self
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let bad = |msg: &str| Err(GeometryError::InvalidTemplate(msg.into()));
        if !(self.island_radius > 0.0 && self.lane_width > 0.0 && self.leg_length > 0.0) {
            return bad("radii, widths and leg length must be positive");
        }
        if self.entry_lane_width.is_nan() || self.entry_lane_width <= 0.0 {
            return bad("entry lane width must be positive");
        }
        if !(1..=2).contains(&self.num_circulating_lanes) {
            return bad("only one- and two-lane roundabouts are supported");
        }
        if self.legs.len() != 4 {
            return bad("exactly four legs required");
        }
        for position in Compass::ALL {
            let matching: Vec<_> = self.legs.iter().filter(|l| l.position == position).collect();
            if matching.len() != 1 {
                return bad("each compass position needs exactly one leg");
            }
            if matching[0].bearing_deg != position.bearing_deg() {
                return bad("leg bearings must be the cardinal bearing of their position");
            }
        }
        Ok(())
    }

    /// Leg whose corridor contains `p`, if `p` lies outside the inscribed
    /// circle.
    pub fn corridor_of(&self, p: Point) -> Option<Compass> {
        if p.norm() <= self.outer_radius() {
            return None;
        }
        self.legs.iter().find_map(|leg| {
            let axis = Point::heading_unit(leg.bearing_deg);
            let along = p.dot(axis);
            let lateral = p.dot(Point::new(-axis.y, axis.x));
            (along > 0.0 && crate::math::abs(lateral) <= self.corridor_half_width())
                .then_some(leg.position)
        })
    }

    /// Inside the circulatory roadway or an approach corridor.
    pub fn is_drivable(&self, p: Point) -> bool {
        let r = p.norm();
        (r > self.island_radius && r <= self.outer_radius()) || self.corridor_of(p).is_some()
    }

    /// True when the polygon stays clear of the central island disk.
    pub fn clears_island(&self, polygon: &[Point]) -> bool {
        island_clearance(polygon) >= self.island_radius
    }
}

/// Smallest distance from the origin to a closed polygon (0 if the origin
/// is inside).
pub fn island_clearance(polygon: &[Point]) -> f64 {
    if polygon.is_empty() {
        return f64::INFINITY;
    }
    if contains_origin(polygon) {
        return 0.0;
    }
    (0..polygon.len())
        .map(|i| segment_distance_to_origin(polygon[i], polygon[(i + 1) % polygon.len()]))
        .fold(f64::INFINITY, f64::min)
}

fn segment_distance_to_origin(a: Point, b: Point) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    let t = if len2 > 0.0 {
        (-a.dot(ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (a + ab * t).norm()
}

fn contains_origin(polygon: &[Point]) -> bool {
    let mut inside = false;
    let n = polygon.len();
    for i in 0..n {
        let (a, b) = (polygon[i], polygon[(i + n - 1) % n]);
        if (a.y > 0.0) != (b.y > 0.0) {
            let x = a.x + (0.0 - a.y) * (b.x - a.x) / (b.y - a.y);
            if x > 0.0 {
                inside = !inside;
            }
        }
    }
    inside
}

/// Counterclockwise angular distance in degrees from `entry` to `exit`,
/// in `(0, 360]`; a return to the same leg is a full turn.
pub fn ccw_span_deg(entry_bearing: f64, exit_bearing: f64) -> f64 {
    let span = wrap_deg(entry_bearing - exit_bearing);
    if span < 1e-9 {
        360.0
    } else {
        span
    }
}

/// Counts the exits passed counterclockwise from the entry leg.
pub fn classify_movement(entry: Compass, exit: Compass) -> TurnMovement {
    const CCW_ORDER: [Compass; 4] = [Compass::North, Compass::West, Compass::South, Compass::East];
    let index = |c| CCW_ORDER.iter().position(|&o| o == c).unwrap_or(0);
    match (index(exit) + 4 - index(entry)) % 4 {
        1 => TurnMovement::RightTurn,
        2 => TurnMovement::Through,
        3 => TurnMovement::LeftTurn,
        _ => TurnMovement::UTurn,
    }
}

/// Left turns and U-turns use the inner lane; right turns and through
/// movements the outer.
pub fn assign_lane(movement: TurnMovement) -> Lane {
    match movement {
        TurnMovement::LeftTurn | TurnMovement::UTurn => Lane::Inner,
        TurnMovement::RightTurn | TurnMovement::Through => Lane::Outer,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Quadrant {
    NE,
    SE,
    SW,
    NW,
}

/// Where a point falls for collision-location scoring.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Location {
    Quadrant(Quadrant),
    Leg(Compass),
}

/// Leg corridor beyond the inscribed circle, else the compass quadrant by
/// half-open azimuth intervals starting at North.
pub fn quadrant_of(point: Point, template: &GeometryTemplate) -> Location {
    if let Some(leg) = template.corridor_of(point) {
        return Location::Leg(leg);
    }
    let az = point.azimuth_deg();
    Location::Quadrant(if az < 90.0 {
        Quadrant::NE
    } else if az < 180.0 {
        Quadrant::SE
    } else if az < 270.0 {
        Quadrant::SW
    } else {
        Quadrant::NW
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_template_constants() {
        let t = standard_template();
        assert_eq!(t.outer_radius(), 82.5);
        assert_eq!(t.outer_radius() * 2.0, 165.0);
        assert_eq!(t.island_radius * 2.0, 105.0);
        assert_eq!(t.lane_width * f64::from(t.num_circulating_lanes), 30.0);
        assert_eq!(t.lane_centerline_radius(Lane::Inner), 60.0);
        assert_eq!(t.lane_centerline_radius(Lane::Outer), 75.0);
        assert_eq!(t.road_name(Compass::East), "Dunning Street");
        assert_eq!(t.entry_lane_width, 12.5);
        t.validate().unwrap();
    }

    #[test]
    fn template_validation_rejects_duplicate_positions() {
        let mut t = standard_template();
        t.legs[1].position = Compass::North;
        assert!(t.validate().is_err());
        let mut t = standard_template();
        t.num_circulating_lanes = 3;
        assert!(t.validate().is_err());
    }

    /// Walks counterclockwise one degree at a time and counts legs reached.
    fn brute_force_movement(entry: Compass, exit: Compass) -> TurnMovement {
        let mut passed = 0;
        for step in 1..=360 {
            let az = wrap_deg(entry.bearing_deg() - f64::from(step));
            if let Some(leg) = Compass::ALL.into_iter().find(|c| c.bearing_deg() == az) {
                passed += 1;
                if leg == exit {
                    break;
                }
            }
        }
        match passed {
            1 => TurnMovement::RightTurn,
            2 => TurnMovement::Through,
            3 => TurnMovement::LeftTurn,
            _ => TurnMovement::UTurn,
        }
    }

    #[test]
    fn movement_matches_brute_force_on_all_pairs() {
        for entry in Compass::ALL {
            for exit in Compass::ALL {
                assert_eq!(
                    classify_movement(entry, exit),
                    brute_force_movement(entry, exit),
                    "{entry} -> {exit}"
                );
            }
        }
        assert_eq!(classify_movement(Compass::South, Compass::East), TurnMovement::RightTurn);
        assert_eq!(classify_movement(Compass::South, Compass::West), TurnMovement::LeftTurn);
        assert_eq!(classify_movement(Compass::North, Compass::North), TurnMovement::UTurn);
    }

    #[test]
    fn lane_discipline() {
        assert_eq!(assign_lane(TurnMovement::LeftTurn), Lane::Inner);
        assert_eq!(assign_lane(TurnMovement::UTurn), Lane::Inner);
        assert_eq!(assign_lane(TurnMovement::RightTurn), Lane::Outer);
        assert_eq!(assign_lane(TurnMovement::Through), Lane::Outer);
    }

    #[test]
    fn quadrant_examples() {
        let t = standard_template();
        assert_eq!(
            quadrant_of(Point::polar(70.0, 45.0), &t),
            Location::Quadrant(Quadrant::NE)
        );
        assert_eq!(
            quadrant_of(Point::new(70.0, 0.0), &t),
            Location::Quadrant(Quadrant::SE)
        );
        assert_eq!(
            quadrant_of(Point::polar(70.0, 90.0), &t),
            Location::Quadrant(Quadrant::SE)
        );
        assert_eq!(quadrant_of(Point::new(120.0, 0.0), &t), Location::Leg(Compass::East));
        assert_eq!(quadrant_of(Point::new(0.0, 70.0), &t), Location::Quadrant(Quadrant::NE));
        // Outside the circle but between corridors.
        assert_eq!(
            quadrant_of(Point::polar(120.0, 225.0), &t),
            Location::Quadrant(Quadrant::SW)
        );
    }

    #[test]
    fn body_frame_rotation() {
        let fwd = Point::new(1.0, 0.0).body_to_world(90.0);
        assert!((fwd.x - 1.0).abs() < 1e-12 && fwd.y.abs() < 1e-12);
        let left = Point::new(0.0, 1.0).body_to_world(0.0);
        assert!((left.x + 1.0).abs() < 1e-12 && left.y.abs() < 1e-12);
        let v = Point::new(3.0, -2.0);
        let back = v.body_to_world(37.0).world_to_body(37.0);
        assert!(back.dist(v) < 1e-12);
    }

    #[test]
    fn clearance_of_polygons() {
        let square = [
            Point::new(60.0, -1.0),
            Point::new(62.0, -1.0),
            Point::new(62.0, 1.0),
            Point::new(60.0, 1.0),
        ];
        assert!((island_clearance(&square) - 60.0).abs() < 1e-12);
        let around = [
            Point::new(-1.0, -1.0),
            Point::new(1.0, -1.0),
            Point::new(1.0, 1.0),
            Point::new(-1.0, 1.0),
        ];
        assert_eq!(island_clearance(&around), 0.0);
    }

    #[test]
    fn drivable_region() {
        let t = standard_template();
        assert!(t.is_drivable(Point::new(0.0, 70.0)));
        assert!(!t.is_drivable(Point::new(0.0, 40.0)));
        assert!(t.is_drivable(Point::new(150.0, 20.0)));
        assert!(!t.is_drivable(Point::polar(120.0, 45.0)));
    }
}
