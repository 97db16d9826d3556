use super::{GeometryError, Point, Pose, Trajectory};
use crate::record::DamageCode;

/// Distances within this tolerance of the running minimum count as ties.
const TIE_EPS: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct ImpactSolution {
    pub point: Point,
    pub v1_pose: Pose,
    pub v2_pose: Pose,
    /// Unit vector from V1's pose position toward `point`, body frame. Zero
    /// when the two coincide.
    pub contact_vector_v1: Point,
    pub contact_vector_v2: Point,
    /// Closest approach between the two trajectories, feet.
    pub residual: f64,
    pub v1_index: usize,
    pub v2_index: usize,
}

/// Impact at the midpoint of the closest pair of trajectory samples. Ties
/// resolve to the earliest sample along `t1`, then along `t2`.
pub fn compute_impact(
    t1: &Trajectory,
    t2: &Trajectory,
    c1: DamageCode,
    c2: DamageCode,
) -> Result<ImpactSolution, GeometryError> {
    for code in [c1, c2] {
        if !code.is_localized() {
            return Err(GeometryError::NonLocalizedCode(code.get()));
        }
    }
    if t1.is_empty() || t2.is_empty() {
        return Err(GeometryError::EmptyTrajectory);
    }

    let mut best = (f64::INFINITY, 0, 0);
    for (i, a) in t1.points.iter().enumerate() {
        for (j, b) in t2.points.iter().enumerate() {
            let d = a.dist(*b);
            if d < best.0 - TIE_EPS {
                best = (d, i, j);
            }
        }
    }
    let (residual, i, j) = best;
    let (p1, p2) = (t1.points[i], t2.points[j]);
    let point = (p1 + p2) * 0.5;
    let v1_pose = Pose {
        position: p1,
        heading_deg: t1.headings[i],
    };
    let v2_pose = Pose {
        position: p2,
        heading_deg: t2.headings[j],
    };
    Ok(ImpactSolution {
        point,
        contact_vector_v1: contact_vector(v1_pose, point),
        contact_vector_v2: contact_vector(v2_pose, point),
        v1_pose,
        v2_pose,
        residual,
        v1_index: i,
        v2_index: j,
    })
}

fn contact_vector(pose: Pose, point: Point) -> Point {
    (point - pose.position)
        .world_to_body(pose.heading_deg)
        .normalized()
        .unwrap_or(Point::ORIGIN)
}
