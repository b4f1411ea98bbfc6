use multiwall::calibration::{Measurement, Observation, WallLossSample};
use multiwall::dataio::{
    load_measurements, load_params, load_plan, load_wall_samples, measurements_to_csv, params_to_json,
    plan_to_json, wall_samples_to_csv,
};
use multiwall::floorplan::{FloorPlan, Point2D, Wall, WallCategory};
use multiwall::ModelParams;
use proptest::prelude::*;

fn coord() -> impl Strategy<Value = f64> {
    -1.0e4..1.0e4f64
}

fn plan_strategy() -> impl Strategy<Value = FloorPlan> {
    let cats = prop::collection::vec((0.0..60.0f64, 0.01..1.0f64, "[a-z ]{0,12}"), 1..4);
    (cats, prop::option::of(1.0e8..1.0e10f64), "[A-Za-z0-9 _-]{0,20}").prop_flat_map(|(cats, freq, name)| {
        let n_cats = cats.len();
        let walls = prop::collection::vec(((coord(), coord()), (coord(), coord()), 0..n_cats), 0..20);
        (Just(cats), Just(freq), Just(name), walls)
    })
    .prop_map(|(cats, frequency_hz, name, walls)| FloorPlan {
        name,
        frequency_hz,
        categories: cats
            .into_iter()
            .enumerate()
            .map(|(i, (loss_db, thickness_m, material))| WallCategory {
                id: format!("cat{i}"),
                loss_db,
                thickness_m,
                material,
            })
            .collect(),
        walls: walls
            .into_iter()
            .filter(|(a, b, _)| a != b)
            .map(|(a, b, c)| Wall::new(a, b, format!("cat{c}")))
            .collect(),
    })
}

fn measurement_strategy() -> impl Strategy<Value = Measurement> {
    (
        (coord(), coord()),
        (coord(), coord()),
        prop::bool::ANY,
        -150.0..150.0f64,
        prop::option::of(-10.0..40.0f64),
        prop::option::of(0usize..20),
    )
        .prop_map(|(tx, rx, rss, value, power, m_override)| {
            let (observed, tx_power_dbm) = if rss {
                (Observation::RssDbm(value), Some(power.unwrap_or(20.0)))
            } else {
                (Observation::PlDb(value), power)
            };
            Measurement {
                tx: Point2D::from(tx),
                rx: Point2D::from(rx),
                observed,
                tx_power_dbm,
                m_override,
            }
        })
}

proptest! {
    #[test]
    fn plan_round_trip(plan in plan_strategy()) {
        let back = load_plan(&plan_to_json(&plan)).unwrap();
        prop_assert_eq!(back, plan);
    }

    #[test]
    fn params_round_trip(pl0 in -50.0..150.0f64, n in 0.01..10.0f64, w in 0.0..60.0f64) {
        let p = ModelParams { pl0_db: pl0, n, pl_w_db: w };
        prop_assert_eq!(load_params(&params_to_json(&p)).unwrap(), p);
    }

    #[test]
    fn measurement_round_trip(ms in prop::collection::vec(measurement_strategy(), 0..30)) {
        let back = load_measurements(&measurements_to_csv(&ms)).unwrap();
        prop_assert_eq!(back, ms);
    }

    #[test]
    fn wall_sample_round_trip(rows in prop::collection::vec(
        (1usize..10, -10.0..200.0f64, prop::option::of(0.0..5.0f64), prop::option::of(0.1..50.0f64)), 0..10)
    ) {
        let samples: Vec<_> = rows
            .into_iter()
            .map(|(m, l, s, d)| WallLossSample { m_walls: m, loss_db: l, std_db: s, distance_m: d })
            .collect();
        prop_assert_eq!(load_wall_samples(&wall_samples_to_csv(&samples)).unwrap(), samples);
    }
}

#[test]
fn invalid_fixtures_are_rejected_with_locations() {
    let plans = [
        (r#"{"name": "x", "categories": [], "walls": [{"x1": 0, "y1": 0, "x2": 0, "y2": 0, "category": "c"}]}"#, "walls[0]"),
        (r#"{"name": "x", "categories": [{"id": "c", "loss_db": -1, "thickness_m": 1, "material": ""}], "walls": []}"#, "categories[0]"),
        (r#"{"name": "x", "categories": [{"id": "c", "loss_db": 1, "material": ""}], "walls": []}"#, "categories[0].thickness_m"),
        (r#"{"name": "x", "categories": [], "walls": {}}"#, "walls"),
        (r#"{"name": "x", "categories": [], "walls": [], "frequency_hz": "2.4G"}"#, "frequency_hz"),
    ];
    for (text, path) in plans {
        let msg = load_plan(text).unwrap_err().to_string();
        assert!(msg.starts_with(path), "{msg} should start with {path}");
    }
    let csvs = [
        "tx_x,tx_y,rx_x,rx_y,pl_db\n0,0,1,0,60\n0,0,1,,61\n",
        "tx_x,tx_y,rx_x,rx_y,pl_db,m_override\n0,0,1,0,60,-1\n",
        "tx_x,tx_y,rx_x,rx_y,pl_db\n0,0,1,0,inf\n",
    ];
    for text in csvs {
        let msg = load_measurements(text).unwrap_err().to_string();
        assert!(msg.starts_with("line "), "{msg}");
    }
}
