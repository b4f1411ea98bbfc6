//! 2-D floor-plan geometry and straight-line wall counting.
//!
//! Walls are zero-width segments tagged with a [`WallCategory`]. The only
//! geometric question the propagation models ask is how many walls the
//! direct transmitter-receiver segment passes through, answered by
//! [`wall_crossings`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance, in meters, for orientation and on-segment tests.
pub const GEOMETRY_EPSILON_M: f64 = 1e-9;

pub const WARN_GRAZING: &str = "grazing propagation not modeled";
pub const WARN_ENDPOINT_ON_WALL: &str = "antenna lies on a wall; wall not counted";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("wall {wall}: category `{category}` is not defined in the plan")]
    DanglingCategory { wall: usize, category: String },
    #[error("wall {wall}: zero-length segment")]
    ZeroLengthWall { wall: usize },
    #[error("wall {wall}: non-finite coordinate")]
    NonFiniteWall { wall: usize },
    #[error("duplicate wall category id `{0}`")]
    DuplicateCategory(String),
    #[error("category `{id}`: {reason}")]
    InvalidCategory { id: String, reason: String },
    #[error("non-finite point ({x}, {y})")]
    NonFinitePoint { x: f64, y: f64 },
    #[error("degenerate path: transmitter and receiver coincide")]
    DegeneratePath,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance_to(&self, other: Point2D) -> f64 {
        (other.x - self.x).hypot(other.y - self.y)
    }

    fn ensure_finite(self) -> Result<Self, GeometryError> {
        if self.is_finite() {
            Ok(self)
        } else {
            Err(GeometryError::NonFinitePoint { x: self.x, y: self.y })
        }
    }
}

impl From<(f64, f64)> for Point2D {
    fn from((x, y): (f64, f64)) -> Self {
        Self { x, y }
    }
}

/// A class of walls sharing one penetration loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallCategory {
    pub id: String,
    pub loss_db: f64,
    pub thickness_m: f64,
    pub material: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wall {
    pub a: Point2D,
    pub b: Point2D,
    pub category: String,
}

impl Wall {
    pub fn new(a: impl Into<Point2D>, b: impl Into<Point2D>, category: impl Into<String>) -> Self {
        Self {
            a: a.into(),
            b: b.into(),
            category: category.into(),
        }
    }

    pub fn length(&self) -> f64 {
        self.a.distance_to(self.b)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FloorPlan {
    pub name: String,
    /// Carrier frequency. Recorded for reference; no model term uses it.
    pub frequency_hz: Option<f64>,
    pub categories: Vec<WallCategory>,
    pub walls: Vec<Wall>,
}

impl FloorPlan {
    pub fn category(&self, id: &str) -> Option<&WallCategory> {
        self.categories.iter().find(|c| c.id == id)
    }
}

/// Checks every plan invariant and hands the plan back unchanged.
pub fn validate_plan(plan: FloorPlan) -> Result<FloorPlan, GeometryError> {
    let mut seen = std::collections::BTreeSet::new();
    for cat in &plan.categories {
        if !seen.insert(cat.id.as_str()) {
            return Err(GeometryError::DuplicateCategory(cat.id.clone()));
        }
        if !(cat.loss_db.is_finite() && cat.loss_db >= 0.0) {
            return Err(GeometryError::InvalidCategory {
                id: cat.id.clone(),
                reason: format!("loss_db must be finite and >= 0, got {}", cat.loss_db),
            });
        }
        if !(cat.thickness_m.is_finite() && cat.thickness_m > 0.0) {
            return Err(GeometryError::InvalidCategory {
                id: cat.id.clone(),
                reason: format!("thickness_m must be finite and > 0, got {}", cat.thickness_m),
            });
        }
    }
    for (wall_idx, wall) in plan.walls.iter().enumerate() {
        if !(wall.a.is_finite() && wall.b.is_finite()) {
            return Err(GeometryError::NonFiniteWall { wall: wall_idx });
        }
        if wall.a == wall.b {
            return Err(GeometryError::ZeroLengthWall { wall: wall_idx });
        }
        if !seen.contains(wall.category.as_str()) {
            return Err(GeometryError::DanglingCategory {
                wall: wall_idx,
                category: wall.category.clone(),
            });
        }
    }
    Ok(plan)
}

pub fn straight_line_distance(tx: Point2D, rx: Point2D) -> f64 {
    tx.distance_to(rx)
}

/// Walls traversed by one transmitter-receiver segment.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CrossingReport {
    pub crossed_wall_indices: Vec<usize>,
    pub m_total: usize,
    pub per_category_counts: BTreeMap<String, usize>,
    pub warnings: Vec<String>,
}

/// Outcome of testing a single wall against a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum WallHit {
    Miss,
    Crossed,
    /// Path runs along the wall.
    Grazing,
    /// An antenna sits on the wall.
    EndpointOnWall,
}

/// Side of the directed line `from -> to` that `p` lies on, judged by its
/// perpendicular distance against [`GEOMETRY_EPSILON_M`].
#[inline]
fn side(from: Point2D, dir: (f64, f64), len: f64, p: Point2D) -> i8 {
    let cross = dir.0 * (p.y - from.y) - dir.1 * (p.x - from.x);
    let dist = cross / len;
    if dist > GEOMETRY_EPSILON_M {
        1
    } else if dist < -GEOMETRY_EPSILON_M {
        -1
    } else {
        0
    }
}

/// Distance from `p` to the closed segment `a-b`.
fn point_segment_distance(p: Point2D, a: Point2D, b: Point2D) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    let (qx, qy) = (a.x + t * dx, a.y + t * dy);
    (p.x - qx).hypot(p.y - qy)
}

/// Precomputed direction data for a segment.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Segment {
    a: Point2D,
    b: Point2D,
    dir: (f64, f64),
    len: f64,
}

impl Segment {
    pub(crate) fn new(a: Point2D, b: Point2D) -> Self {
        let dir = (b.x - a.x, b.y - a.y);
        Self {
            a,
            b,
            dir,
            len: dir.0.hypot(dir.1),
        }
    }

    fn bbox_disjoint(&self, other: &Segment) -> bool {
        let e = GEOMETRY_EPSILON_M;
        self.a.x.max(self.b.x) + e < other.a.x.min(other.b.x)
            || other.a.x.max(other.b.x) + e < self.a.x.min(self.b.x)
            || self.a.y.max(self.b.y) + e < other.a.y.min(other.b.y)
            || other.a.y.max(other.b.y) + e < self.a.y.min(self.b.y)
    }
}

/// Classifies one wall against the path `path` (from tx to rx).
pub(crate) fn classify(path: &Segment, wall: &Segment) -> WallHit {
    if path.bbox_disjoint(wall) {
        return WallHit::Miss;
    }
    if point_segment_distance(path.a, wall.a, wall.b) <= GEOMETRY_EPSILON_M
        || point_segment_distance(path.b, wall.a, wall.b) <= GEOMETRY_EPSILON_M
    {
        return WallHit::EndpointOnWall;
    }
    let sa = side(path.a, path.dir, path.len, wall.a);
    let sb = side(path.a, path.dir, path.len, wall.b);
    if sa == 0 && sb == 0 {
        // Collinear. The antennas are not on the wall, so any overlap means
        // the wall lies strictly inside the path.
        let proj = |p: Point2D| {
            ((p.x - path.a.x) * path.dir.0 + (p.y - path.a.y) * path.dir.1) / path.len
        };
        let (lo, hi) = {
            let (u, v) = (proj(wall.a), proj(wall.b));
            (u.min(v), u.max(v))
        };
        return if hi > GEOMETRY_EPSILON_M && lo < path.len - GEOMETRY_EPSILON_M {
            WallHit::Grazing
        } else {
            WallHit::Miss
        };
    }
    if sa * sb > 0 {
        return WallHit::Miss;
    }
    let st = side(wall.a, wall.dir, wall.len, path.a);
    let sr = side(wall.a, wall.dir, wall.len, path.b);
    if st * sr < 0 {
        WallHit::Crossed
    } else {
        WallHit::Miss
    }
}

/// Counts the walls whose segment the open tx-rx segment passes through.
///
/// A wall endpoint touching the interior of the path counts as a crossing.
/// A wall running along the path, or a wall an antenna sits on, counts zero
/// and leaves a warning in the report.
pub fn wall_crossings(
    plan: &FloorPlan,
    tx: Point2D,
    rx: Point2D,
) -> Result<CrossingReport, GeometryError> {
    let tx = tx.ensure_finite()?;
    let rx = rx.ensure_finite()?;
    if straight_line_distance(tx, rx) <= GEOMETRY_EPSILON_M {
        return Err(GeometryError::DegeneratePath);
    }
    let path = Segment::new(tx, rx);
    let mut report = CrossingReport::default();
    for (idx, wall) in plan.walls.iter().enumerate() {
        match classify(&path, &Segment::new(wall.a, wall.b)) {
            WallHit::Miss => {}
            WallHit::Crossed => {
                report.crossed_wall_indices.push(idx);
                *report
                    .per_category_counts
                    .entry(wall.category.clone())
                    .or_default() += 1;
            }
            WallHit::Grazing => report
                .warnings
                .push(format!("wall {idx}: {WARN_GRAZING}")),
            WallHit::EndpointOnWall => report
                .warnings
                .push(format!("wall {idx}: {WARN_ENDPOINT_ON_WALL}")),
        }
    }
    report.m_total = report.crossed_wall_indices.len();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cat(id: &str, loss: f64) -> WallCategory {
        WallCategory {
            id: id.into(),
            loss_db: loss,
            thickness_m: 0.25,
            material: "cement mortar".into(),
        }
    }

    fn plan(walls: Vec<Wall>) -> FloorPlan {
        FloorPlan {
            name: "t".into(),
            frequency_hz: None,
            categories: vec![cat("c", 10.0)],
            walls,
        }
    }

    #[test]
    fn empty_plan_is_valid() {
        assert!(validate_plan(FloorPlan::default()).is_ok());
    }

    #[test]
    fn dangling_category_names_wall() {
        let mut p = plan(vec![Wall::new((0., 0.), (1., 0.), "c")]);
        p.walls.push(Wall::new((0., 1.), (1., 1.), "brick"));
        assert_eq!(
            validate_plan(p),
            Err(GeometryError::DanglingCategory {
                wall: 1,
                category: "brick".into()
            })
        );
    }

    #[test]
    fn zero_length_and_non_finite_walls() {
        let p = plan(vec![Wall::new((2., 2.), (2., 2.), "c")]);
        assert_eq!(validate_plan(p), Err(GeometryError::ZeroLengthWall { wall: 0 }));
        let p = plan(vec![
            Wall::new((0., 0.), (1., 0.), "c"),
            Wall::new((0., f64::NAN), (1., 0.), "c"),
        ]);
        assert_eq!(validate_plan(p), Err(GeometryError::NonFiniteWall { wall: 1 }));
    }

    #[test]
    fn duplicate_and_invalid_categories() {
        let mut p = plan(vec![]);
        p.categories.push(cat("c", 3.0));
        assert!(matches!(validate_plan(p), Err(GeometryError::DuplicateCategory(_))));
        let mut p = plan(vec![]);
        p.categories[0].loss_db = -1.0;
        assert!(matches!(validate_plan(p), Err(GeometryError::InvalidCategory { .. })));
        let mut p = plan(vec![]);
        p.categories[0].thickness_m = 0.0;
        assert!(matches!(validate_plan(p), Err(GeometryError::InvalidCategory { .. })));
    }

    #[test]
    fn distances() {
        let o = Point2D::new(0., 0.);
        assert_eq!(straight_line_distance(o, o), 0.0);
        assert_eq!(straight_line_distance(o, Point2D::new(3., 4.)), 5.0);
        let d = straight_line_distance(Point2D::new(1.0, 2.0), Point2D::new(3.15, 2.0));
        assert!((d - 2.15).abs() < 1e-12);
    }

    #[test]
    fn perpendicular_crossing() {
        let p = plan(vec![Wall::new((2., -1.), (2., 1.), "c")]);
        let r = wall_crossings(&p, Point2D::new(0., 0.), Point2D::new(4., 0.)).unwrap();
        assert_eq!(r.m_total, 1);
        assert_eq!(r.crossed_wall_indices, vec![0]);
        assert_eq!(r.per_category_counts["c"], 1);
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn empty_plan_counts_nothing() {
        let r = wall_crossings(
            &FloorPlan::default(),
            Point2D::new(-3., 7.),
            Point2D::new(4., 0.5),
        )
        .unwrap();
        assert_eq!(r.m_total, 0);
    }

    #[test]
    fn degenerate_path_is_error() {
        let p = Point2D::new(1., 1.);
        assert_eq!(
            wall_crossings(&FloorPlan::default(), p, p),
            Err(GeometryError::DegeneratePath)
        );
    }

    #[test]
    fn non_finite_endpoint_is_error() {
        let r = wall_crossings(
            &FloorPlan::default(),
            Point2D::new(f64::INFINITY, 0.),
            Point2D::new(1., 1.),
        );
        assert!(matches!(r, Err(GeometryError::NonFinitePoint { .. })));
    }

    #[test]
    fn wall_endpoint_touching_path_counts() {
        let p = plan(vec![Wall::new((2., 0.), (2., 3.), "c")]);
        let r = wall_crossings(&p, Point2D::new(0., 0.), Point2D::new(4., 0.)).unwrap();
        assert_eq!(r.m_total, 1);
    }

    #[test]
    fn wall_stopping_short_does_not_count() {
        let p = plan(vec![Wall::new((2., 0.5), (2., 3.), "c")]);
        let r = wall_crossings(&p, Point2D::new(0., 0.), Point2D::new(4., 0.)).unwrap();
        assert_eq!(r.m_total, 0);
    }

    #[test]
    fn wall_beyond_receiver_does_not_count() {
        let p = plan(vec![Wall::new((5., -1.), (5., 1.), "c")]);
        let r = wall_crossings(&p, Point2D::new(0., 0.), Point2D::new(4., 0.)).unwrap();
        assert_eq!(r.m_total, 0);
    }

    #[test]
    fn collinear_overlap_warns_and_counts_zero() {
        let p = plan(vec![Wall::new((1., 0.), (3., 0.), "c")]);
        let r = wall_crossings(&p, Point2D::new(0., 0.), Point2D::new(4., 0.)).unwrap();
        assert_eq!(r.m_total, 0);
        assert_eq!(r.warnings.len(), 1);
        assert!(r.warnings[0].contains(WARN_GRAZING));
    }

    #[test]
    fn collinear_disjoint_is_silent() {
        let p = plan(vec![Wall::new((6., 0.), (9., 0.), "c")]);
        let r = wall_crossings(&p, Point2D::new(0., 0.), Point2D::new(4., 0.)).unwrap();
        assert_eq!(r.m_total, 0);
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn antenna_on_wall_warns_and_counts_zero() {
        let p = plan(vec![Wall::new((0., -1.), (0., 1.), "c")]);
        let r = wall_crossings(&p, Point2D::new(0., 0.), Point2D::new(4., 0.)).unwrap();
        assert_eq!(r.m_total, 0);
        assert!(r.warnings[0].contains(WARN_ENDPOINT_ON_WALL));
        let r = wall_crossings(&p, Point2D::new(4., 0.), Point2D::new(0., 0.5)).unwrap();
        assert_eq!(r.m_total, 0);
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn pierced_corner_counts_each_wall() {
        let p = plan(vec![
            Wall::new((2., 0.), (2., 2.), "c"),
            Wall::new((2., 0.), (4., -2.), "c"),
        ]);
        let r = wall_crossings(&p, Point2D::new(0., 0.), Point2D::new(4., 0.)).unwrap();
        assert_eq!(r.m_total, 2);
    }

    #[test]
    fn per_category_counts_sum_to_total() {
        let mut p = plan(vec![
            Wall::new((1., -1.), (1., 1.), "c"),
            Wall::new((2., -1.), (2., 1.), "d"),
            Wall::new((3., -1.), (3., 1.), "c"),
        ]);
        p.categories.push(cat("d", 4.0));
        let r = wall_crossings(&p, Point2D::new(0., 0.), Point2D::new(4., 0.)).unwrap();
        assert_eq!(r.m_total, 3);
        assert_eq!(r.per_category_counts["c"], 2);
        assert_eq!(r.per_category_counts["d"], 1);
        assert_eq!(r.per_category_counts.values().sum::<usize>(), r.m_total);
    }
}
