//! Readers and writers for the plan, parameter, measurement and wall-loss
//! sample formats, plus the bundled reference datasets.
//!
//! Every parse error carries a locator: a JSON path such as
//! `walls[2].category` or a 1-based CSV line number.

use std::collections::HashMap;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::calibration::{Measurement, Observation, WallLossSample};
use crate::floorplan::{validate_plan, FloorPlan, GeometryError, Point2D, Wall, WallCategory};
use crate::pathloss::ModelParams;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("JSON syntax error at line {line}, column {column}: {message}")]
    Json { line: usize, column: usize, message: String },
    #[error("{path}: missing required key")]
    Missing { path: String },
    #[error("{path}: expected {expected}")]
    Type { path: String, expected: &'static str },
    #[error("{path}: {reason}")]
    Invalid { path: String, reason: String },
    #[error("line {line}: {reason}")]
    Csv { line: u64, reason: String },
}

fn parse_json(text: &str) -> Result<Value, DataError> {
    serde_json::from_str(text).map_err(|e| DataError::Json {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

fn object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>, DataError> {
    v.as_object().ok_or_else(|| DataError::Type {
        path: path.into(),
        expected: "an object",
    })
}

fn child(parent: &str, key: &str) -> String {
    if parent.is_empty() {
        key.to_string()
    } else {
        format!("{parent}.{key}")
    }
}

fn required<'a>(obj: &'a Map<String, Value>, parent: &str, key: &str) -> Result<&'a Value, DataError> {
    obj.get(key).ok_or_else(|| DataError::Missing { path: child(parent, key) })
}

fn number(obj: &Map<String, Value>, parent: &str, key: &str) -> Result<f64, DataError> {
    required(obj, parent, key)?
        .as_f64()
        .ok_or_else(|| DataError::Type { path: child(parent, key), expected: "a number" })
}

fn string(obj: &Map<String, Value>, parent: &str, key: &str) -> Result<String, DataError> {
    required(obj, parent, key)?
        .as_str()
        .map(str::to_owned)
        .ok_or_else(|| DataError::Type { path: child(parent, key), expected: "a string" })
}

fn array<'a>(obj: &'a Map<String, Value>, parent: &str, key: &str) -> Result<&'a Vec<Value>, DataError> {
    required(obj, parent, key)?
        .as_array()
        .ok_or_else(|| DataError::Type { path: child(parent, key), expected: "an array" })
}

fn geometry_error(e: GeometryError, plan: &FloorPlan) -> DataError {
    let path = match &e {
        GeometryError::DanglingCategory { wall, .. } => format!("walls[{wall}].category"),
        GeometryError::ZeroLengthWall { wall } | GeometryError::NonFiniteWall { wall } => {
            format!("walls[{wall}]")
        }
        GeometryError::DuplicateCategory(id) | GeometryError::InvalidCategory { id, .. } => {
            let idx = plan.categories.iter().rposition(|c| &c.id == id).unwrap_or(0);
            format!("categories[{idx}]")
        }
        GeometryError::NonFinitePoint { .. } | GeometryError::DegeneratePath => "$".into(),
    };
    DataError::Invalid { path, reason: e.to_string() }
}

/// Parses and validates a floor-plan document. Unknown keys are ignored.
pub fn load_plan(text: &str) -> Result<FloorPlan, DataError> {
    let root = parse_json(text)?;
    let top = object(&root, "$")?;
    let name = string(top, "", "name")?;
    let frequency_hz = match top.get("frequency_hz") {
        None | Some(Value::Null) => None,
        Some(v) => Some(v.as_f64().ok_or_else(|| DataError::Type {
            path: "frequency_hz".into(),
            expected: "a number",
        })?),
    };

    let mut categories = Vec::new();
    for (i, v) in array(top, "", "categories")?.iter().enumerate() {
        let path = format!("categories[{i}]");
        let obj = object(v, &path)?;
        categories.push(WallCategory {
            id: string(obj, &path, "id")?,
            loss_db: number(obj, &path, "loss_db")?,
            thickness_m: number(obj, &path, "thickness_m")?,
            material: string(obj, &path, "material")?,
        });
    }

    let mut walls = Vec::new();
    for (i, v) in array(top, "", "walls")?.iter().enumerate() {
        let path = format!("walls[{i}]");
        let obj = object(v, &path)?;
        walls.push(Wall {
            a: Point2D::new(number(obj, &path, "x1")?, number(obj, &path, "y1")?),
            b: Point2D::new(number(obj, &path, "x2")?, number(obj, &path, "y2")?),
            category: string(obj, &path, "category")?,
        });
    }

    let plan = FloorPlan { name, frequency_hz, categories, walls };
    validate_plan(plan.clone()).map_err(|e| geometry_error(e, &plan))
}

pub fn plan_to_json(plan: &FloorPlan) -> String {
    let mut top = Map::new();
    top.insert("name".into(), json!(plan.name));
    if let Some(f) = plan.frequency_hz {
        top.insert("frequency_hz".into(), json!(f));
    }
    top.insert(
        "categories".into(),
        plan.categories
            .iter()
            .map(|c| {
                json!({
                    "id": c.id,
                    "loss_db": c.loss_db,
                    "thickness_m": c.thickness_m,
                    "material": c.material,
                })
            })
            .collect(),
    );
    top.insert(
        "walls".into(),
        plan.walls
            .iter()
            .map(|w| {
                json!({
                    "x1": w.a.x, "y1": w.a.y, "x2": w.b.x, "y2": w.b.y,
                    "category": w.category,
                })
            })
            .collect(),
    );
    let mut s = serde_json::to_string_pretty(&Value::Object(top)).expect("plain JSON values");
    s.push('\n');
    s
}

/// Parses `{pl0_db, n, pl_w_db}`.
pub fn load_params(text: &str) -> Result<ModelParams, DataError> {
    let root = parse_json(text)?;
    let obj = object(&root, "$")?;
    let pl0_db = number(obj, "", "pl0_db")?;
    let n = number(obj, "", "n")?;
    let pl_w_db = number(obj, "", "pl_w_db")?;
    if !(n > 0.0) {
        return Err(DataError::Invalid { path: "n".into(), reason: format!("must be > 0, got {n}") });
    }
    if !(pl_w_db >= 0.0) {
        return Err(DataError::Invalid {
            path: "pl_w_db".into(),
            reason: format!("must be >= 0, got {pl_w_db}"),
        });
    }
    Ok(ModelParams { pl0_db, n, pl_w_db })
}

pub fn params_to_json(params: &ModelParams) -> String {
    let mut s = serde_json::to_string_pretty(&json!({
        "pl0_db": params.pl0_db,
        "n": params.n,
        "pl_w_db": params.pl_w_db,
    }))
    .expect("plain JSON values");
    s.push('\n');
    s
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(false)
        .from_reader(text.as_bytes())
}

fn csv_error(e: csv::Error) -> DataError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    DataError::Csv { line, reason: e.to_string() }
}

/// Column lookup over a CSV header with a fixed vocabulary.
struct Columns {
    index: HashMap<String, usize>,
}

impl Columns {
    fn new(headers: &csv::StringRecord, allowed: &[&str], required: &[&str]) -> Result<Self, DataError> {
        let mut index = HashMap::new();
        for (i, h) in headers.iter().enumerate() {
            if !allowed.contains(&h) {
                return Err(DataError::Csv { line: 1, reason: format!("unknown column `{h}`") });
            }
            if index.insert(h.to_string(), i).is_some() {
                return Err(DataError::Csv { line: 1, reason: format!("duplicate column `{h}`") });
            }
        }
        for r in required {
            if !index.contains_key(*r) {
                return Err(DataError::Csv { line: 1, reason: format!("missing column `{r}`") });
            }
        }
        Ok(Self { index })
    }

    fn has(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    fn field<'r>(&self, rec: &'r csv::StringRecord, name: &str) -> Option<&'r str> {
        self.index
            .get(name)
            .and_then(|&i| rec.get(i))
            .filter(|s| !s.is_empty())
    }

    fn float(&self, rec: &csv::StringRecord, line: u64, name: &str) -> Result<Option<f64>, DataError> {
        self.field(rec, name)
            .map(|s| {
                let v: f64 = s.parse().map_err(|_| DataError::Csv {
                    line,
                    reason: format!("column `{name}`: not a number: `{s}`"),
                })?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(DataError::Csv { line, reason: format!("column `{name}`: non-finite value") })
                }
            })
            .transpose()
    }

    fn required_float(&self, rec: &csv::StringRecord, line: u64, name: &str) -> Result<f64, DataError> {
        self.float(rec, line, name)?
            .ok_or_else(|| DataError::Csv { line, reason: format!("column `{name}` is empty") })
    }

    fn count(&self, rec: &csv::StringRecord, line: u64, name: &str) -> Result<Option<usize>, DataError> {
        self.field(rec, name)
            .map(|s| {
                s.parse::<usize>().map_err(|_| DataError::Csv {
                    line,
                    reason: format!("column `{name}`: expected a non-negative integer, got `{s}`"),
                })
            })
            .transpose()
    }
}

const MEASUREMENT_COLUMNS: [&str; 8] = [
    "tx_x", "tx_y", "rx_x", "rx_y", "rss_dbm", "pl_db", "tx_power_dbm", "m_override",
];

/// Parses the measurement CSV. Each row carries exactly one of `rss_dbm`
/// and `pl_db`; RSS rows also need `tx_power_dbm`.
pub fn load_measurements(text: &str) -> Result<Vec<Measurement>, DataError> {
    let mut rdr = csv_reader(text);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    let cols = Columns::new(&headers, &MEASUREMENT_COLUMNS, &["tx_x", "tx_y", "rx_x", "rx_y"])?;
    if !cols.has("rss_dbm") && !cols.has("pl_db") {
        return Err(DataError::Csv { line: 1, reason: "need an `rss_dbm` or `pl_db` column".into() });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let tx = Point2D::new(cols.required_float(&rec, line, "tx_x")?, cols.required_float(&rec, line, "tx_y")?);
        let rx = Point2D::new(cols.required_float(&rec, line, "rx_x")?, cols.required_float(&rec, line, "rx_y")?);
        let tx_power_dbm = cols.float(&rec, line, "tx_power_dbm")?;
        let observed = match (cols.float(&rec, line, "rss_dbm")?, cols.float(&rec, line, "pl_db")?) {
            (Some(_), Some(_)) => {
                return Err(DataError::Csv { line, reason: "both rss_dbm and pl_db are set".into() })
            }
            (None, None) => {
                return Err(DataError::Csv { line, reason: "neither rss_dbm nor pl_db is set".into() })
            }
            (Some(rss), None) => {
                if tx_power_dbm.is_none() {
                    return Err(DataError::Csv { line, reason: "rss_dbm requires tx_power_dbm".into() });
                }
                Observation::RssDbm(rss)
            }
            (None, Some(pl)) => Observation::PlDb(pl),
        };
        out.push(Measurement {
            tx,
            rx,
            observed,
            tx_power_dbm,
            m_override: cols.count(&rec, line, "m_override")?,
        });
    }
    Ok(out)
}

fn fmt_opt_f64(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

/// Writes only the optional columns some row actually uses.
pub fn measurements_to_csv(measurements: &[Measurement]) -> String {
    let any_rss = measurements.iter().any(|m| matches!(m.observed, Observation::RssDbm(_)));
    let any_pl = measurements.is_empty() || measurements.iter().any(|m| matches!(m.observed, Observation::PlDb(_)));
    let any_power = measurements.iter().any(|m| m.tx_power_dbm.is_some());
    let any_override = measurements.iter().any(|m| m.m_override.is_some());

    let mut header = vec!["tx_x", "tx_y", "rx_x", "rx_y"];
    header.extend(any_rss.then_some("rss_dbm"));
    header.extend(any_pl.then_some("pl_db"));
    header.extend(any_power.then_some("tx_power_dbm"));
    header.extend(any_override.then_some("m_override"));

    let mut out = header.join(",");
    out.push('\n');
    for m in measurements {
        let mut fields = vec![
            format!("{:?}", m.tx.x),
            format!("{:?}", m.tx.y),
            format!("{:?}", m.rx.x),
            format!("{:?}", m.rx.y),
        ];
        let (rss, pl) = match m.observed {
            Observation::RssDbm(v) => (Some(v), None),
            Observation::PlDb(v) => (None, Some(v)),
        };
        if any_rss {
            fields.push(fmt_opt_f64(rss));
        }
        if any_pl {
            fields.push(fmt_opt_f64(pl));
        }
        if any_power {
            fields.push(fmt_opt_f64(m.tx_power_dbm));
        }
        if any_override {
            fields.push(m.m_override.map(|v| v.to_string()).unwrap_or_default());
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Parses `m_walls,loss_db[,std_db][,distance_m]`.
pub fn load_wall_samples(text: &str) -> Result<Vec<WallLossSample>, DataError> {
    let mut rdr = csv_reader(text);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    let cols = Columns::new(
        &headers,
        &["m_walls", "loss_db", "std_db", "distance_m"],
        &["m_walls", "loss_db"],
    )?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let m_walls = cols
            .count(&rec, line, "m_walls")?
            .ok_or_else(|| DataError::Csv { line, reason: "column `m_walls` is empty".into() })?;
        if m_walls == 0 {
            return Err(DataError::Csv { line, reason: "m_walls must be >= 1".into() });
        }
        let std_db = cols.float(&rec, line, "std_db")?;
        if std_db.is_some_and(|s| s < 0.0) {
            return Err(DataError::Csv { line, reason: "std_db must be >= 0".into() });
        }
        let distance_m = cols.float(&rec, line, "distance_m")?;
        if distance_m.is_some_and(|d| d <= 0.0) {
            return Err(DataError::Csv { line, reason: "distance_m must be > 0".into() });
        }
        out.push(WallLossSample {
            m_walls,
            loss_db: cols.required_float(&rec, line, "loss_db")?,
            std_db,
            distance_m,
        });
    }
    Ok(out)
}

pub fn wall_samples_to_csv(samples: &[WallLossSample]) -> String {
    let any_std = samples.iter().any(|s| s.std_db.is_some());
    let any_dist = samples.iter().any(|s| s.distance_m.is_some());
    let mut out = String::from("m_walls,loss_db");
    if any_std {
        out.push_str(",std_db");
    }
    if any_dist {
        out.push_str(",distance_m");
    }
    out.push('\n');
    for s in samples {
        out.push_str(&format!("{},{:?}", s.m_walls, s.loss_db));
        if any_std {
            out.push_str(&format!(",{}", fmt_opt_f64(s.std_db)));
        }
        if any_dist {
            out.push_str(&format!(",{}", fmt_opt_f64(s.distance_m)));
        }
        out.push('\n');
    }
    out
}

/// Parses wall-free `distance_m,pl_db` points for the log-distance fit.
pub fn load_distance_points(text: &str) -> Result<Vec<(f64, f64)>, DataError> {
    let mut rdr = csv_reader(text);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    let cols = Columns::new(&headers, &["distance_m", "pl_db"], &["distance_m", "pl_db"])?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let d = cols.required_float(&rec, line, "distance_m")?;
        if d <= 0.0 {
            return Err(DataError::Csv { line, reason: format!("distance_m must be > 0, got {d}") });
        }
        out.push((d, cols.required_float(&rec, line, "pl_db")?));
    }
    Ok(out)
}

/// Reference datasets compiled into the library.
pub mod bundled {
    /// Measured wall losses for 1, 2 and 3 cement-mortar walls at 2.45 GHz.
    pub const TABLE1_CSV: &str = include_str!("../data/table1.csv");
    /// Illustrative plan: three parallel 25 cm cement-mortar walls at
    /// x = 1, 3, 5 m. Not a survey of any real building.
    pub const DEMO_PLAN_JSON: &str = include_str!("../data/demo_plan.json");
    /// Free-space `pl0` at 2.45 GHz, `n = 3`, 17.78 dB per wall.
    pub const REFERENCE_PARAMS_JSON: &str = include_str!("../data/reference_params.json");
    /// Links from (0, 0) over the demo plan at the Table 1 distances, each
    /// observed loss being the reference one-slope loss plus the measured
    /// wall loss for that row.
    pub const TABLE1_LINKS_CSV: &str = include_str!("../data/table1_links.csv");

    pub const NAMES: [(&str, &str); 4] = [
        ("table1", TABLE1_CSV),
        ("demo-plan", DEMO_PLAN_JSON),
        ("reference-params", REFERENCE_PARAMS_JSON),
        ("table1-links", TABLE1_LINKS_CSV),
    ];

    pub fn get(name: &str) -> Option<&'static str> {
        NAMES.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
    }
}
