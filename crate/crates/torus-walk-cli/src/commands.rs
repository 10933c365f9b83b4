use std::time::Instant;

use serde::Serialize;

use torus_walk::chain::{build_shape_graph, exact_diffusivity, solve_corrector, DiffusivityReport, SolveMode};
use torus_walk::loops::loop_space_size;
use torus_walk::montecarlo::{
    counting_constant_check, default_burn_in, estimate_diffusivity, random_shape, run_rng, simplex_integral_check,
    strip_statistics, CountingCheck, SimConfig, SimplexCheck,
};
use torus_walk::render::render_svg;
use torus_walk::shapes::{canonical_shape, enumerate_shapes, is_height_shape, ShapeRecord};
use torus_walk::verify::{run_suite, Suite};
use torus_walk::{make_params, Error, Shape, TorusParams};

use crate::{Command, Failure, Format, Mode, Output, ShapeSource, Solve, SuiteArg, Torus};

const TOOL: &str = env!("CARGO_PKG_NAME");
const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Serialize)]
struct Artifact<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    config: &'a Command,
    result: T,
    #[serde(skip_serializing_if = "Option::is_none")]
    elapsed_seconds: Option<f64>,
}

fn params_of(t: &Torus) -> Result<TorusParams, Failure> {
    Ok(make_params(t.p, t.n)?)
}

fn mode_of(s: &Solve) -> SolveMode {
    match s.mode {
        Mode::Auto => SolveMode::Auto { rational_cap: s.rational_cap },
        Mode::Rational => SolveMode::Rational,
        Mode::Float => SolveMode::Float,
    }
}

fn write(out: &Output, bytes: &[u8]) -> Result<(), Failure> {
    match &out.out {
        Some(path) => std::fs::write(path, bytes)?,
        None => {
            use std::io::Write;
            std::io::stdout().write_all(bytes)?;
        }
    }
    Ok(())
}

fn config_json(cmd: &Command) -> String {
    serde_json::to_string(cmd).expect("config serialises")
}

fn emit<T: Serialize>(cmd: &Command, out: &Output, start: Instant, result: T) -> Result<(), Failure> {
    let elapsed = start.elapsed().as_secs_f64();
    eprintln!("elapsed: {elapsed:.3} s");
    let art = Artifact { tool: TOOL, version: VERSION, config: cmd, result, elapsed_seconds: out.timing.then_some(elapsed) };
    if out.format == Format::Csv {
        // flatten the result object into one header row and one value row
        let v = serde_json::to_value(&art.result).expect("result serialises");
        let obj = v.as_object().ok_or_else(|| Failure::Io("result has no CSV form".into()))?;
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(obj.keys()).map_err(|e| Failure::Io(e.to_string()))?;
        w.write_record(obj.values().map(|x| match x {
            serde_json::Value::String(s) => s.clone(),
            other => other.to_string(),
        }))
        .map_err(|e| Failure::Io(e.to_string()))?;
        return write_csv(cmd, out, w);
    }
    let mut text = serde_json::to_string_pretty(&art).expect("artifact serialises");
    text.push('\n');
    write(out, text.as_bytes())
}

fn write_csv(cmd: &Command, out: &Output, w: csv::Writer<Vec<u8>>) -> Result<(), Failure> {
    let body = w.into_inner().map_err(|e| Failure::Io(e.to_string()))?;
    let mut bytes = format!("# {TOOL} {VERSION}\n# config: {}\n", config_json(cmd)).into_bytes();
    bytes.extend(body);
    write(out, &bytes)
}

#[derive(Serialize)]
struct ParamsReport {
    p: [u32; 2],
    n: [u32; 2],
    t: [u32; 2],
    q: [String; 2],
    g: u32,
    d: [u32; 2],
    vertex_count: usize,
    edge_count: usize,
    loop_len: usize,
    loop_space_size: String,
    strip_period: String,
    strip_slope: String,
}

#[derive(Serialize)]
struct GraphReport {
    shape_count: usize,
    orbit_count: usize,
    /// Ordered neighbour pairs including the diagonal.
    pair_count: u64,
    total_weight: u64,
    connected: bool,
    min_degree: usize,
    max_degree: usize,
}

#[derive(Serialize)]
struct SweepRow {
    p1: u32,
    p2: u32,
    n1: u32,
    n2: u32,
    t1: u32,
    t2: u32,
    shapes: usize,
    orbits: usize,
    exact: bool,
    sigma2_xhat: f64,
    sigma2_xhat_exact: String,
    limit: String,
    gap: f64,
    max_drift_residual: f64,
}

impl From<&DiffusivityReport> for SweepRow {
    fn from(r: &DiffusivityReport) -> Self {
        SweepRow {
            p1: r.p[0],
            p2: r.p[1],
            n1: r.n[0],
            n2: r.n[1],
            t1: r.t[0],
            t2: r.t[1],
            shapes: r.shape_count,
            orbits: r.orbit_count,
            exact: r.exact,
            sigma2_xhat: r.sigma2_xhat,
            sigma2_xhat_exact: r.sigma2_xhat_exact.clone().unwrap_or_default(),
            limit: r.limit_value.clone(),
            gap: r.gap,
            max_drift_residual: r.max_drift_residual,
        }
    }
}

#[derive(Serialize)]
struct IntegralReport {
    simplex: SimplexCheck,
    families: Option<CountingCheck>,
}

fn exact_report(params: &TorusParams, loop_cap: u64, solve: &Solve) -> Result<DiffusivityReport, Failure> {
    let graph = build_shape_graph(params, loop_cap)?;
    let k = solve_corrector(&graph, mode_of(solve))?;
    Ok(exact_diffusivity(&graph, &k))
}

fn parse_p_list(s: &str) -> Result<Vec<[i64; 2]>, Failure> {
    s.split(';')
        .filter(|x| !x.trim().is_empty())
        .map(|x| crate::parse_pair(x).map_err(|e| Failure::Lib(Error::Param(e))))
        .collect()
}

fn select_shape(params: &TorusParams, torus: &Torus, src: ShapeSource, index: usize, file: Option<&std::path::Path>, attempts: u64, seed: u64) -> Result<Shape, Failure> {
    let shape = match src {
        ShapeSource::Canonical => canonical_shape(params),
        ShapeSource::Index => {
            let shapes = enumerate_shapes(params, torus.loop_cap)?;
            let n = shapes.len();
            shapes
                .into_iter()
                .nth(index)
                .ok_or_else(|| Failure::Lib(Error::Param(format!("index {index} out of range, {n} shapes"))))?
        }
        ShapeSource::Random => random_shape(params, attempts, &mut run_rng(seed, 0))?,
        ShapeSource::File => {
            let path = file.ok_or_else(|| Failure::Lib(Error::Param("--shape file needs --file".into())))?;
            let text = std::fs::read_to_string(path)?;
            let text = text.trim();
            if text.starts_with('{') {
                let rec: ShapeRecord =
                    serde_json::from_str(text).map_err(|e| Failure::Lib(Error::Shape(e.to_string())))?;
                if let Some(&bad) = rec.edges.iter().find(|&&i| i >= params.edge_count()) {
                    return Err(Failure::Lib(Error::Shape(format!("edge index {bad} out of range"))));
                }
                Shape::from_indices(params, rec.edges)
            } else {
                Shape::from_hex(params, text)?
            }
        }
    };
    if !is_height_shape(params, &shape) {
        return Err(Failure::Lib(Error::Shape("not the shape of a height function".into())));
    }
    Ok(shape)
}

pub fn run(cmd: &Command) -> Result<(), Failure> {
    let start = Instant::now();
    match cmd {
        Command::Params { torus, out } => {
            let p = params_of(torus)?;
            let r = ParamsReport {
                p: p.p,
                n: p.n,
                t: p.t,
                q: [p.q[0].to_string(), p.q[1].to_string()],
                g: p.g,
                d: p.d,
                vertex_count: p.vertex_count(),
                edge_count: p.edge_count(),
                loop_len: p.loop_len(),
                loop_space_size: loop_space_size(&p).to_string(),
                strip_period: p.strip_period().to_string(),
                strip_slope: p.strip_slope().to_string(),
            };
            emit(cmd, out, start, r)
        }
        Command::Enumerate { torus, out } => {
            let p = params_of(torus)?;
            let shapes = enumerate_shapes(&p, torus.loop_cap)?;
            if out.format == Format::Csv {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["index", "hex", "edges"]).map_err(|e| Failure::Io(e.to_string()))?;
                for (i, s) in shapes.iter().enumerate() {
                    let edges: Vec<String> = s.indices().map(|e| e.to_string()).collect();
                    w.write_record([i.to_string(), s.to_hex(&p), edges.join(" ")]).map_err(|e| Failure::Io(e.to_string()))?;
                }
                return write_csv(cmd, out, w);
            }
            #[derive(Serialize)]
            struct R {
                count: usize,
                shapes: Vec<String>,
            }
            emit(cmd, out, start, R { count: shapes.len(), shapes: shapes.iter().map(|s| s.to_hex(&p)).collect() })
        }
        Command::Graph { torus, out } => {
            let p = params_of(torus)?;
            let g = build_shape_graph(&p, torus.loop_cap)?;
            let degs = (0..g.reps.len()).map(|o| g.degree_of_orbit(o));
            let r = GraphReport {
                shape_count: g.shape_count(),
                orbit_count: g.reps.len(),
                pair_count: g.pair_count(),
                total_weight: g.total_weight(),
                connected: g.is_connected(),
                min_degree: degs.clone().min().unwrap_or(0),
                max_degree: degs.max().unwrap_or(0),
            };
            emit(cmd, out, start, r)
        }
        Command::ExactSigma { torus, solve, out } => {
            let p = params_of(torus)?;
            let r = exact_report(&p, torus.loop_cap, solve)?;
            emit(cmd, out, start, r)
        }
        Command::Sweep { p_list, n, loop_cap, solve, out } => {
            let list = parse_p_list(p_list)?;
            let mut rows = Vec::new();
            for pp in list {
                let p = make_params(pp, *n)?;
                rows.push(exact_report(&p, *loop_cap, solve)?);
            }
            if out.format == Format::Json {
                return emit(cmd, out, start, rows);
            }
            eprintln!("elapsed: {:.3} s", start.elapsed().as_secs_f64());
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in &rows {
                w.serialize(SweepRow::from(r)).map_err(|e| Failure::Io(e.to_string()))?;
            }
            write_csv(cmd, out, w)
        }
        Command::Simulate { torus, steps, runs, burn_in, batch, out } => {
            let p = params_of(torus)?;
            let burn_in = burn_in.unwrap_or_else(|| {
                let cheap = p.g == 1 && loop_space_size(&p) <= 20_000u32.into();
                let count = if cheap { enumerate_shapes(&p, 20_000).ok().map(|s| s.len() as u64) } else { None };
                default_burn_in(count)
            });
            let cfg = SimConfig { steps: *steps, runs: *runs, burn_in, seed: out.seed, batch: *batch };
            let r = estimate_diffusivity(&p, &cfg)?;
            emit(cmd, out, start, r)
        }
        Command::SampleLoops { torus, samples, eps, out } => {
            let p = params_of(torus)?;
            let eps: Vec<f64> = eps
                .split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|e| Failure::Lib(Error::Param(format!("eps: {e}")))))
                .collect::<Result<_, _>>()?;
            let r = strip_statistics(&p, *samples, &eps, &mut run_rng(out.seed, 0));
            emit(cmd, out, start, r)
        }
        Command::Verify { torus, suite, out } => {
            let p = params_of(torus)?;
            let suites: Vec<Suite> = match suite {
                SuiteArg::All => Suite::ALL.to_vec(),
                SuiteArg::NeighbourTest => vec![Suite::NeighbourTest],
                SuiteArg::Volume => vec![Suite::Volume],
                SuiteArg::ClosedForm => vec![Suite::ClosedForm],
                SuiteArg::StripDrift => vec![Suite::StripDrift],
                SuiteArg::Corrector => vec![Suite::Corrector],
                SuiteArg::Bijection => vec![Suite::Bijection],
                SuiteArg::Counts => vec![Suite::Counts],
            };
            let reports = suites.into_iter().map(|s| run_suite(&p, s, torus.loop_cap)).collect::<Result<Vec<_>, _>>()?;
            let ok = reports.iter().all(|r| r.passed);
            emit(cmd, out, start, &reports)?;
            if ok {
                Ok(())
            } else {
                Err(Failure::Verify)
            }
        }
        Command::IntegralCheck { g, samples, family_samples, family_t, out } => {
            if *g == 0 || *family_t <= *g {
                return Err(Failure::Lib(Error::Param("need g >= 1 and family-t > g".into())));
            }
            let simplex = simplex_integral_check(*g, *samples, &mut run_rng(out.seed, 0));
            let families = if *family_samples > 0 {
                let side = (*family_t - *g) as i64;
                let p = make_params([side, side], [*g as i64, *g as i64])?;
                Some(counting_constant_check(&p, *family_samples, &mut run_rng(out.seed, 1)))
            } else {
                None
            };
            emit(cmd, out, start, IntegralReport { simplex, families })
        }
        Command::Render { torus, shape, index, file, attempts, out } => {
            let p = params_of(torus)?;
            let a = select_shape(&p, torus, *shape, *index, file.as_deref(), *attempts, out.seed)?;
            let svg = render_svg(&p, &a);
            let (head, rest) = svg.split_once('\n').unwrap_or(("", &svg));
            let mut text = format!("{head}\n<!-- {TOOL} {VERSION} config: {} -->\n", config_json(cmd).replace("--", "-\\-"));
            text.push_str(rest);
            eprintln!("elapsed: {:.3} s", start.elapsed().as_secs_f64());
            write(out, text.as_bytes())
        }
    }
}
