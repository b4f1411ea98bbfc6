#![allow(dead_code)]

//! Test-only oracles, independent of the library's float code paths.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use multiwall::{FloorPlan, Point2D, Wall, WallCategory};

pub type Q = BigRational;

pub fn q(v: i64) -> Q {
    Q::from_integer(BigInt::from(v))
}

fn cross(ax: &Q, ay: &Q, bx: &Q, by: &Q) -> Q {
    ax * by - ay * bx
}

/// Exact closed-segment membership for rational points.
fn on_segment(p: (&Q, &Q), a: (&Q, &Q), b: (&Q, &Q)) -> bool {
    let c = cross(&(b.0 - a.0), &(b.1 - a.1), &(p.0 - a.0), &(p.1 - a.1));
    if !c.is_zero() {
        return false;
    }
    let within = |v: &Q, lo: &Q, hi: &Q| {
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        lo <= v && v <= hi
    };
    within(p.0, a.0, b.0) && within(p.1, a.1, b.1)
}

/// Parametric crossing test in exact arithmetic.
///
/// The path is `tx + t (rx - tx)`, the wall `a + u (b - a)`. A wall counts
/// when it meets the open path (`0 < t < 1`) anywhere on the closed wall
/// (`0 <= u <= 1`), is not parallel to the path, and neither antenna sits on
/// it.
pub fn exact_crosses(tx: (i64, i64), rx: (i64, i64), a: (i64, i64), b: (i64, i64)) -> bool {
    let (tx, rx, a, b) = (
        (q(tx.0), q(tx.1)),
        (q(rx.0), q(rx.1)),
        (q(a.0), q(a.1)),
        (q(b.0), q(b.1)),
    );
    if on_segment((&tx.0, &tx.1), (&a.0, &a.1), (&b.0, &b.1))
        || on_segment((&rx.0, &rx.1), (&a.0, &a.1), (&b.0, &b.1))
    {
        return false;
    }
    let r = (&rx.0 - &tx.0, &rx.1 - &tx.1);
    let s = (&b.0 - &a.0, &b.1 - &a.1);
    let denom = cross(&r.0, &r.1, &s.0, &s.1);
    if denom.is_zero() {
        return false;
    }
    let qp = (&a.0 - &tx.0, &a.1 - &tx.1);
    let t = cross(&qp.0, &qp.1, &s.0, &s.1) / &denom;
    let u = cross(&qp.0, &qp.1, &r.0, &r.1) / &denom;
    t.is_positive() && t < Q::one() && !u.is_negative() && u <= Q::one()
}

pub fn exact_count(walls: &[((i64, i64), (i64, i64))], tx: (i64, i64), rx: (i64, i64)) -> usize {
    walls.iter().filter(|(a, b)| exact_crosses(tx, rx, *a, *b)).count()
}

pub fn category(id: &str, loss: f64) -> WallCategory {
    WallCategory {
        id: id.into(),
        loss_db: loss,
        thickness_m: 0.25,
        material: "cement mortar".into(),
    }
}

pub fn int_plan(walls: &[((i64, i64), (i64, i64))]) -> FloorPlan {
    FloorPlan {
        name: "random".into(),
        frequency_hz: None,
        categories: vec![category("c", 10.0)],
        walls: walls
            .iter()
            .map(|&((ax, ay), (bx, by))| Wall::new((ax as f64, ay as f64), (bx as f64, by as f64), "c"))
            .collect(),
    }
}

pub fn pt(p: (i64, i64)) -> Point2D {
    Point2D::new(p.0 as f64, p.1 as f64)
}

/// `ln(x)` for rational `x > 0` via `2 atanh((x - 1) / (x + 1))`, summed in
/// exact arithmetic to `terms` terms.
pub fn ln_rational(x: &Q, terms: usize) -> Q {
    let z = (x - Q::one()) / (x + Q::one());
    let z2 = &z * &z;
    let mut power = z.clone();
    let mut sum = Q::zero();
    for k in 0..terms {
        sum += &power / q(2 * k as i64 + 1);
        power = (&power * &z2).reduced();
    }
    sum * q(2)
}

pub fn to_f64(v: &Q) -> f64 {
    use num_traits::ToPrimitive;
    v.to_f64().expect("finite rational")
}
