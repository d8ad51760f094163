//! JSON entry points for the browser demo.
//!
//! Every call regenerates the park from `(n, seed)`, which is cheap at demo
//! sizes and keeps the page stateless. The plain functions are what the
//! tests call; the `wasm` module only wraps them for JavaScript.

use serde::Serialize;

use scair::simulation::run_simulation;
use scair::*;

#[derive(Serialize)]
struct FacilityView {
    id: usize,
    name: String,
    /// Meters east and north of the park's south-west corner.
    x: f64,
    y: f64,
    duration: f64,
    capacity: f64,
    popularity: f64,
}

#[derive(Serialize)]
struct ParkView {
    start: usize,
    width: f64,
    height: f64,
    facilities: Vec<FacilityView>,
}

#[derive(Serialize)]
struct PathView {
    facilities: Vec<usize>,
    total_time: f64,
    popularity: f64,
}

#[derive(Serialize)]
struct PathsView {
    budget: f64,
    feasible: Vec<PathView>,
    baselines: Vec<(String, PathView)>,
}

#[derive(Serialize)]
struct SweepPoint {
    lambda: f64,
    agents: usize,
    avg_qt: f64,
    qt_ratio: f64,
    qt_ratio_pairwise: f64,
    avg_pop: f64,
    /// Path index per agent for SCAIR, first 40 agents only.
    assignments: Vec<usize>,
}

#[derive(Serialize)]
struct SweepView {
    budget: f64,
    paths: usize,
    series: Vec<(String, Vec<SweepPoint>)>,
}

fn make_park(n: usize, seed: u64) -> Result<Park, String> {
    generate_park(&SyntheticParkSpec::new(n, seed), scair::park::DEFAULT_WALKING_SPEED).map_err(|e| e.to_string())
}

fn to_json(v: &impl Serialize) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

fn path_view(park: &Park, p: &Path) -> PathView {
    PathView { facilities: p.facilities.clone(), total_time: p.total_time, popularity: p.popularity(park) }
}

/// Facilities with planar coordinates for drawing.
pub fn park_json(n: usize, seed: u64) -> Result<String, String> {
    let park = make_park(n, seed)?;
    let f = park.facilities();
    let lat0 = f.iter().map(|x| x.lat).fold(f64::INFINITY, f64::min);
    let lon0 = f.iter().map(|x| x.lon).fold(f64::INFINITY, f64::min);
    let planar = |lat: f64, lon: f64| {
        let x = scair::park::haversine(lat, lon0, lat, lon);
        let y = scair::park::haversine(lat0, lon0, lat, lon0);
        (x, y)
    };
    let facilities: Vec<FacilityView> = f
        .iter()
        .map(|x| {
            let (px, py) = planar(x.lat, x.lon);
            FacilityView {
                id: x.id,
                name: x.name.clone(),
                x: px,
                y: py,
                duration: x.duration,
                capacity: x.capacity,
                popularity: x.popularity,
            }
        })
        .collect();
    let width = facilities.iter().map(|v| v.x).fold(0.0, f64::max);
    let height = facilities.iter().map(|v| v.y).fold(0.0, f64::max);
    to_json(&ParkView { start: park.start(), width, height, facilities })
}

/// Feasible itineraries and the three baseline paths for one budget.
pub fn paths_json(n: usize, seed: u64, budget: f64, dist_cap: f64, max_paths: usize) -> Result<String, String> {
    let park = make_park(n, seed)?;
    let fs = find_feasible_paths(&park, budget, dist_cap, max_paths).map_err(|e| e.to_string())?;
    let mut baselines = Vec::new();
    for s in Strategy::BASELINES {
        let p = baseline_path(s, &park, budget, dist_cap).map_err(|e| e.to_string())?.expect("baseline");
        baselines.push((s.to_string(), path_view(&park, &p)));
    }
    to_json(&PathsView { budget, feasible: fs.paths.iter().map(|p| path_view(&park, p)).collect(), baselines })
}

/// Every strategy at each arrival interval for one budget.
pub fn sweep_json(
    n: usize,
    seed: u64,
    budget: f64,
    lambdas: &[f64],
    horizon: f64,
    max_paths: usize,
) -> Result<String, String> {
    if lambdas.is_empty() {
        return Err("no arrival intervals given".into());
    }
    let park = make_park(n, seed)?;
    let fs = find_feasible_paths(&park, budget, DEFAULT_DIST_CAP, max_paths).map_err(|e| e.to_string())?;
    let mut series = Vec::new();
    for s in Strategy::ALL {
        let mut points = Vec::new();
        for &lambda in lambdas {
            let config = SimulationConfig { horizon, ..SimulationConfig::new(s, budget, lambda) };
            let tm = match s {
                Strategy::Scair => Some(construct_tm(&park, &fs, lambda, DEFAULT_Q_MIN).map_err(|e| e.to_string())?),
                _ => None,
            };
            let r = run_simulation(&park, &fs, tm.as_ref(), &config).map_err(|e| e.to_string())?;
            points.push(SweepPoint {
                lambda,
                agents: r.n_agents,
                avg_qt: r.avg_qt,
                qt_ratio: r.qt_ratio,
                qt_ratio_pairwise: r.qt_ratio_markov,
                avg_pop: r.avg_pop,
                assignments: r.agents.iter().take(40).filter_map(|a| a.path_index).collect(),
            });
        }
        series.push((s.to_string(), points));
    }
    to_json(&SweepView { budget, paths: fs.len(), series })
}

#[cfg(target_arch = "wasm32")]
mod wasm {
    use wasm_bindgen::prelude::*;

    fn js(r: Result<String, String>) -> Result<String, JsValue> {
        r.map_err(|e| JsValue::from_str(&e))
    }

    #[wasm_bindgen]
    pub fn park(n: usize, seed: u32) -> Result<String, JsValue> {
        js(super::park_json(n, u64::from(seed)))
    }

    #[wasm_bindgen]
    pub fn paths(n: usize, seed: u32, budget: f64, dist_cap: f64) -> Result<String, JsValue> {
        js(super::paths_json(n, u64::from(seed), budget, dist_cap, 20_000))
    }

    #[wasm_bindgen]
    pub fn sweep(n: usize, seed: u32, budget: f64, lambdas: Vec<f64>, horizon: f64) -> Result<String, JsValue> {
        js(super::sweep_json(n, u64::from(seed), budget, &lambdas, horizon, 2_000))
    }
}
