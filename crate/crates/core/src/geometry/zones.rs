//! Vehicle body zones for damage codes 1..=13.
//!
//! Body frame: `x` forward, `y` left, both as fractions of the footprint
//! (length, width), so the outline is `[-0.5, 0.5]²`. Codes 1..=12 tile a
//! perimeter band 0.2 deep; code 13 is the interior top. Front corners take
//! 20% of the width each, and along each side strip the fenders take a
//! quarter each with the door in the middle half.

use alloc::vec::Vec;

use super::{GeometryError, Point};
use crate::record::DamageCode;

#[derive(Clone, Debug, PartialEq)]
pub struct BodyZone {
    pub code: DamageCode,
    /// Reference point on the zone's outer edge (the interior center for 13).
    pub centroid: Point,
    /// Rectangle in the body frame, counterclockwise.
    pub polygon: Vec<Point>,
}

const BAND: f64 = 0.3;

/// (code, x range, y range, anchor)
type ZoneRow = (u8, [f64; 2], [f64; 2], [f64; 2]);

const ZONES: [ZoneRow; 13] = [
    (1, [BAND, 0.5], [BAND, 0.5], [0.5, 0.5]),
    (2, [BAND, 0.5], [-BAND, BAND], [0.5, 0.0]),
    (3, [BAND, 0.5], [-0.5, -BAND], [0.5, -0.5]),
    (4, [0.15, BAND], [-0.5, -BAND], [0.225, -0.5]),
    (5, [-0.15, 0.15], [-0.5, -BAND], [0.0, -0.5]),
    (6, [-BAND, -0.15], [-0.5, -BAND], [-0.225, -0.5]),
    (7, [-0.5, -BAND], [-0.5, -BAND], [-0.5, -0.5]),
    (8, [-0.5, -BAND], [-BAND, BAND], [-0.5, 0.0]),
    (9, [-0.5, -BAND], [BAND, 0.5], [-0.5, 0.5]),
    (10, [-BAND, -0.15], [BAND, 0.5], [-0.225, 0.5]),
    (11, [-0.15, 0.15], [BAND, 0.5], [0.0, 0.5]),
    (12, [0.15, BAND], [BAND, 0.5], [0.225, 0.5]),
    (13, [-BAND, BAND], [-BAND, BAND], [0.0, 0.0]),
];

/// Codes of the perimeter band, in table order.
pub const PERIMETER_ZONES: core::ops::RangeInclusive<u8> = 1..=12;

pub fn body_zone(code: DamageCode) -> Result<BodyZone, GeometryError> {
    let (_, xs, ys, anchor) = ZONES
        .iter()
        .find(|z| z.0 == code.get())
        .ok_or(GeometryError::UnsupportedCode(code.get()))?;
    Ok(BodyZone {
        code,
        centroid: Point::new(anchor[0], anchor[1]),
        polygon: alloc::vec![
            Point::new(xs[0], ys[0]),
            Point::new(xs[1], ys[0]),
            Point::new(xs[1], ys[1]),
            Point::new(xs[0], ys[1]),
        ],
    })
}

pub fn zone_centroid(code: DamageCode) -> Result<Point, GeometryError> {
    body_zone(code).map(|z| z.centroid)
}

impl BodyZone {
    /// Inclusive containment test in the body frame.
    pub fn contains(&self, p: Point) -> bool {
        let (lo, hi) = (self.polygon[0], self.polygon[2]);
        p.x >= lo.x - 1e-12 && p.x <= hi.x + 1e-12 && p.y >= lo.y - 1e-12 && p.y <= hi.y + 1e-12
    }
}
