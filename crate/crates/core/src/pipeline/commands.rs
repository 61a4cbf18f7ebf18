use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::{json, Map, Value};

use super::config::*;
use super::io::*;
use crate::calibration::{bin_scores, fit_calibration, FitOptions};
use crate::confidence::{CosetOracle, Scorer};
use crate::decoder::{is_success, Decoder};
use crate::error::{Error, Result};
use crate::graph::{DecodingGraph, GraphDocument, NoiseModel};
use crate::mle::{
    estimate_mle, estimate_noiseless, estimate_unmitigated, estimator_metrics, synthesize_runs,
    Estimator, EstimatorOutput, MleOptions,
};
use crate::multiwindow::{
    abort_filter, circuit_moments, discard_fraction, retained_ler_curve, select_distance,
    simulate_circuits, spacetime_plan, time_overhead, window_mean_for_circuit_mean, AbortTarget,
    MomentPoint, PoolEntry, WindowPool,
};
use crate::noise::{perturb_weights, stream_rng, syndrome_of, ErrorSampler};
use crate::scale_model::{
    compare_abort_channels, deform_to_target_mean, gaussian_density, implied_dcs_distribution,
    ChannelTarget, GridDensity, LatentOddsModel,
};

const CHUNK: u64 = 1 << 16;
const LEP_HIST_BINS: usize = 50;

/// Where a stage reads and writes, and what it stamps on its outputs.
pub struct Context {
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    pub input_dir: PathBuf,
    pub prov: Provenance,
}

impl Context {
    fn output(&self, p: &Path) -> PathBuf {
        self.out_dir.join(p)
    }

    fn input(&self, p: &Path) -> PathBuf {
        self.input_dir.join(p)
    }

    fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| Error::Config("this stage needs a seed (--seed)".into()))
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(splitmix(seed), |acc, &t| splitmix(acc ^ splitmix(t)))
}

pub fn run_stage(stage: &Stage, ctx: &Context) -> Result<Vec<PathBuf>> {
    match stage {
        Stage::BuildGraph(a) => build_graph(a, ctx),
        Stage::Sample(a) => sample(a, ctx),
        Stage::Decode(a) => decode(a, ctx),
        Stage::Score(a) => score(a, ctx),
        Stage::Calibrate(a) => calibrate(a, ctx),
        Stage::SweepAbort(a) => sweep_abort(a, ctx),
        Stage::Mle(a) => mle(a, ctx),
        Stage::AnalyticModel(a) => analytic_model(a, ctx),
        Stage::Plan(a) => plan(a, ctx),
        Stage::Report(a) => report(a, ctx),
    }
}

fn build_graph(a: &BuildGraphArgs, ctx: &Context) -> Result<Vec<PathBuf>> {
    let g = match a.model {
        NoiseModel::CodeCapacity => DecodingGraph::code_capacity(a.dx, a.dz.unwrap_or(a.dx), a.p)?,
        NoiseModel::Phenomenological => {
            if a.dz.is_some_and(|dz| dz != a.dx) {
                return Err(Error::invalid("phenomenological graphs are square; drop --dz"));
            }
            DecodingGraph::phenomenological(a.dx, a.rounds.unwrap_or(a.dx), a.p, a.p_meas.unwrap_or(a.p))?
        }
    };
    let doc = serde_json::to_value(g.to_document(Map::new()))?;
    Ok(vec![write_json(&ctx.output(&a.out), "graph", &ctx.prov, doc)?])
}

pub fn load_graph(path: &Path) -> Result<DecodingGraph> {
    let value = read_json(path, "graph")?;
    let doc: GraphDocument = serde_json::from_value(value)
        .map_err(|e| Error::Schema { path: path.to_path_buf(), msg: e.to_string() })?;
    DecodingGraph::from_document(&doc)
        .map_err(|e| Error::Schema { path: path.to_path_buf(), msg: e.to_string() })
}

fn sample(a: &SampleArgs, ctx: &Context) -> Result<Vec<PathBuf>> {
    let g = load_graph(&ctx.input(&a.graph))?;
    let seed = ctx.seed()?;
    let sampler = ErrorSampler::new(&g);
    let mut sink = CsvSink::create(&ctx.output(&a.out), "samples", &ctx.prov)?;
    let mut start = 0;
    while start < a.shots {
        let end = (start + CHUNK).min(a.shots);
        let rows: Vec<(String, String)> = (start..end)
            .into_par_iter()
            .map(|shot| {
                let s = sampler.sample(&mut stream_rng(seed, shot));
                (edges_to_hex(&s.error_edges, g.num_edges()), ids_to_text(&s.syndrome))
            })
            .collect();
        for (i, (err, syn)) in rows.iter().enumerate() {
            sink.row([(start + i as u64).to_string().as_str(), err, syn])?;
        }
        start = end;
    }
    Ok(vec![sink.finish()?])
}

struct Shot {
    id: u64,
    error: Vec<usize>,
    syndrome: Vec<usize>,
}

/// Reads up to [`CHUNK`] shots; an empty result means end of file.
fn read_shots(src: &mut CsvSource, g: &DecodingGraph) -> Result<Vec<Shot>> {
    let (c_id, c_err, c_syn) = (src.column("shot_id"), src.column("error"), src.column("syndrome"));
    let mut rec = csv::StringRecord::new();
    let mut out = Vec::new();
    while (out.len() as u64) < CHUNK && src.next_record(&mut rec)? {
        let id = src.parse(&rec, c_id)?;
        let error = hex_to_edges(&rec[c_err], g.num_edges())
            .ok_or_else(|| src.schema_error("column `error` is not a bitmask over the graph's edges"))?;
        let syndrome = text_to_ids(&rec[c_syn])
            .ok_or_else(|| src.schema_error("column `syndrome` is not a list of detector ids"))?;
        if syndrome_of(g, &error)? != syndrome {
            return Err(src.schema_error("column `syndrome` does not match column `error`"));
        }
        out.push(Shot { id, error, syndrome });
    }
    Ok(out)
}

fn decode(a: &DecodeArgs, ctx: &Context) -> Result<Vec<PathBuf>> {
    let g = load_graph(&ctx.input(&a.graph))?;
    let mut src = open_csv(&ctx.input(&a.syndromes), "samples")?;
    let mut sink = CsvSink::create(&ctx.output(&a.out), "decodes", &ctx.prov)?;
    loop {
        let shots = read_shots(&mut src, &g)?;
        if shots.is_empty() {
            break;
        }
        let rows: Result<Vec<[String; 4]>> = shots
            .par_iter()
            .map_init(
                || Decoder::new(&g),
                |dec, s| {
                    let c = dec.decode(&s.syndrome)?;
                    Ok([
                        s.id.to_string(),
                        fmt_f64(c.total_weight),
                        fmt_bool(is_success(&g, &s.error, &c)?).into(),
                        fmt_bool(g.logical_parity(&c.edges)).into(),
                    ])
                },
            )
            .collect();
        for r in rows? {
            sink.row(&r)?;
        }
    }
    Ok(vec![sink.finish()?])
}

fn score(a: &ScoreArgs, ctx: &Context) -> Result<Vec<PathBuf>> {
    let g = load_graph(&ctx.input(&a.graph))?;
    let seen = if a.delta > 0.0 {
        perturb_weights(&g, a.delta, &mut stream_rng(ctx.seed()?, u64::MAX))?
    } else {
        g.clone()
    };
    let oracle = match a.exact_odds {
        Switch::On => Some(CosetOracle::new(&g)?),
        Switch::Off => None,
    };
    let mut src = open_csv(&ctx.input(&a.syndromes), "samples")?;
    let mut sink = CsvSink::create(&ctx.output(&a.out), "scores", &ctx.prov)?;
    loop {
        let shots = read_shots(&mut src, &g)?;
        if shots.is_empty() {
            break;
        }
        let rows: Result<Vec<[String; 7]>> = shots
            .par_iter()
            .map_init(
                || Scorer::new(&seen),
                |sc, s| {
                    let (correction, gap, swim) = match a.dcs {
                        DcsChoice::Gap => {
                            let (gap, c) = sc.complementary_gap(&s.syndrome)?;
                            (c, Some(gap), None)
                        }
                        DcsChoice::Swim => {
                            let c = sc.decode(&s.syndrome)?;
                            (c, None, Some(sc.swim_distance(&s.syndrome)?))
                        }
                        DcsChoice::Both => {
                            let r = sc.score(&s.syndrome)?;
                            (r.correction, Some(r.gap), Some(r.swim))
                        }
                    };
                    let odds = oracle.as_ref().map(|o| o.log_odds(&correction.edges));
                    let success = g.logical_parity(&s.error) == g.logical_parity(&correction.edges);
                    Ok([
                        s.id.to_string(),
                        fmt_f64(correction.total_weight),
                        fmt_opt(gap),
                        fmt_opt(swim),
                        fmt_opt(odds.map(|o| o.lambda)),
                        fmt_opt(odds.map(|o| o.p_l)),
                        fmt_bool(success).into(),
                    ])
                },
            )
            .collect();
        for r in rows? {
            sink.row(&r)?;
        }
    }
    Ok(vec![sink.finish()?])
}

fn calibrate(a: &CalibrateArgs, ctx: &Context) -> Result<Vec<PathBuf>> {
    let mut src = open_csv(&ctx.input(&a.scores), "scores")?;
    let name = match a.dcs {
        ScoreColumn::Gap => "gap",
        ScoreColumn::Swim => "swim",
    };
    let (c_id, c_phi, c_ok) = (src.column("shot_id"), src.column(name), src.column("success"));
    let (mut ids, mut phi, mut failed) = (Vec::<u64>::new(), Vec::new(), Vec::new());
    let mut rec = csv::StringRecord::new();
    while src.next_record(&mut rec)? {
        ids.push(src.parse(&rec, c_id)?);
        let v: Option<f64> = src.parse_opt(&rec, c_phi)?;
        phi.push(v.ok_or_else(|| src.schema_error(format!("column `{name}` is empty")))?);
        failed.push(!src.parse_bool(&rec, c_ok)?);
    }
    let bins = bin_scores(&phi, &failed, a.bins, 1.96)?;
    let curve = fit_calibration(&bins, FitOptions { pseudocount: a.pseudocount, p_min: a.p_min })?;
    let mut doc = serde_json::to_value(&curve)?;
    doc["dcs"] = name.into();
    let mut written = vec![write_json(&ctx.output(&a.out), "curve", &ctx.prov, doc)?];
    if let Some(pool_out) = &a.pool_out {
        let mut sink = CsvSink::create(&ctx.output(pool_out), "pool", &ctx.prov)?;
        for i in 0..phi.len() {
            sink.row([
                ids[i].to_string(),
                fmt_f64(phi[i]),
                fmt_f64(curve.lep(phi[i])),
                fmt_bool(failed[i]).into(),
            ])?;
        }
        written.push(sink.finish()?);
    }
    Ok(written)
}

pub fn load_pool(path: &Path) -> Result<WindowPool> {
    let mut src = open_csv(path, "pool")?;
    let (c_p, c_x) = (src.column("p_l"), src.column("x"));
    let mut entries = Vec::new();
    let mut rec = csv::StringRecord::new();
    while src.next_record(&mut rec)? {
        entries.push(PoolEntry { p_l: src.parse(&rec, c_p)?, x: src.parse_bool(&rec, c_x)? });
    }
    if entries.is_empty() {
        return Err(Error::Schema { path: path.to_path_buf(), msg: "pool has no rows".into() });
    }
    WindowPool::new(entries)
}

fn circuit_mean(mu1: f64, n: u64) -> f64 {
    circuit_moments(mu1, 0.0, n as f64).0
}

fn sweep_abort(a: &SweepAbortArgs, ctx: &Context) -> Result<Vec<PathBuf>> {
    let pool = load_pool(&ctx.input(&a.pool))?;
    if a.n_windows == 0 {
        return Err(Error::invalid("--n-windows must be at least 1"));
    }
    let curve = retained_ler_curve(&pool, &a.fractions, a.z)?;
    let mut sorted: Vec<f64> = pool.entries.iter().map(|e| e.p_l).collect();
    sorted.sort_by(|x, y| y.total_cmp(x));
    let mut sink = CsvSink::create(&ctx.output(&a.out), "sweep", &ctx.prov)?;
    for pt in &curve {
        let k = ((pt.fraction * pool.len() as f64).round() as usize).min(pool.len() - 1);
        let f_circ = discard_fraction(pt.fraction, a.n_windows as f64);
        let overhead = time_overhead(f_circ, a.n_windows).unwrap_or(f64::INFINITY);
        sink.row([
            fmt_f64(pt.fraction),
            fmt_f64(sorted[k]),
            pt.retained.to_string(),
            fmt_f64(pt.mean_p_l),
            fmt_f64(pt.ler),
            fmt_f64(pt.wilson_lo),
            fmt_f64(pt.wilson_hi),
            a.n_windows.to_string(),
            fmt_f64(f_circ),
            fmt_f64(overhead),
            fmt_f64(circuit_mean(pt.mean_p_l, a.n_windows)),
        ])?;
    }
    let mut written = vec![sink.finish()?];
    if let Some(hist_out) = &a.hist_out {
        let mut sink = CsvSink::create(&ctx.output(hist_out), "lep-histogram", &ctx.prov)?;
        for (lo, hi, count) in log_histogram(&sorted, LEP_HIST_BINS) {
            let frac = count as f64 / pool.len() as f64;
            sink.row([
                fmt_f64(lo),
                fmt_f64(hi),
                count.to_string(),
                fmt_f64(frac),
                fmt_f64(frac * a.n_windows as f64),
            ])?;
        }
        written.push(sink.finish()?);
    }
    Ok(written)
}

/// Equal-width bins in `log10 p` spanning the positive values. Zeros are
/// counted in the first bin.
fn log_histogram(values: &[f64], bins: usize) -> Vec<(f64, f64, u64)> {
    let pos = values.iter().copied().filter(|&v| v > 0.0);
    let (mut lo, mut hi) = pos.fold((f64::INFINITY, 0.0f64), |(l, h), v| (l.min(v), h.max(v)));
    if !lo.is_finite() {
        return Vec::new();
    }
    if lo == hi {
        lo /= 10.0;
        hi *= 10.0;
    }
    let (a, b) = (lo.log10(), hi.log10());
    let width = (b - a) / bins as f64;
    let mut counts = vec![0u64; bins];
    for &v in values {
        let i = if v > 0.0 { ((v.log10() - a) / width) as usize } else { 0 };
        counts[i.min(bins - 1)] += 1;
    }
    (0..bins)
        .map(|i| (10f64.powf(a + i as f64 * width), 10f64.powf(a + (i + 1) as f64 * width), counts[i]))
        .collect()
}

fn estimator_name(e: Estimator) -> String {
    serde_json::to_value(e).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

fn mle(a: &MleArgs, ctx: &Context) -> Result<Vec<PathBuf>> {
    let pool = load_pool(&ctx.input(&a.pool))?;
    let seed = ctx.seed()?;
    if a.reps < 2 || a.shots < 2 {
        return Err(Error::invalid("mle needs at least two repetitions and two shots"));
    }
    if !(a.lep_scale > 0.0) {
        return Err(Error::invalid("--lep-scale must be positive"));
    }
    let opts = MleOptions { eta_max: a.eta_max, eta_step: a.eta_step, eta_fixed: None };
    let mut metrics = CsvSink::create(&ctx.output(&a.out), "mle-metrics", &ctx.prov)?;
    let mut raw = match &a.estimates_out {
        Some(p) => Some(CsvSink::create(&ctx.output(p), "mle-estimates", &ctx.prov)?),
        None => None,
    };
    for (fi, &f) in a.discard.iter().enumerate() {
        let overhead = time_overhead(f, a.n_windows)?;
        let kept = if f == 0.0 {
            pool.clone()
        } else {
            abort_filter(&pool, AbortTarget::CircuitFraction { f, n: a.n_windows as f64 })?.pool
        };
        let reps: Result<Vec<[EstimatorOutput; 3]>> = (0..a.reps as u64)
            .into_par_iter()
            .map(|r| {
                let s = derive_seed(seed, &[fi as u64, r]);
                let circuits = simulate_circuits(&kept, a.n_windows, a.shots, s)?;
                let mut ds = synthesize_runs(&circuits, a.z_true, a.mode, true, derive_seed(s, &[1]))?;
                ds.p_l.iter_mut().for_each(|p| *p = (*p * a.lep_scale).min(0.5));
                let mut plain = estimate_unmitigated(&ds)?;
                if f > 0.0 {
                    plain.estimator = Estimator::Abort;
                }
                Ok([plain, estimate_mle(&ds, opts)?, estimate_noiseless(&ds)?])
            })
            .collect();
        let reps = reps?;
        for k in 0..3 {
            let est: Vec<f64> = reps.iter().map(|r| r[k].estimate).collect();
            let m = estimator_metrics(&est, a.z_true)?;
            let etas: Vec<f64> = reps.iter().filter_map(|r| r[k].eta).collect();
            let mean_eta = (!etas.is_empty()).then(|| etas.iter().sum::<f64>() / etas.len() as f64);
            let n = reps.len() as f64;
            metrics.row([
                estimator_name(reps[0][k].estimator),
                fmt_f64(f),
                a.shots.to_string(),
                a.reps.to_string(),
                fmt_f64(m.mspe),
                fmt_f64(m.bias),
                fmt_f64(m.variance),
                fmt_f64(m.sample_variance),
                fmt_f64(est.iter().sum::<f64>() / n),
                fmt_opt(mean_eta),
                fmt_f64(reps.iter().filter(|r| r[k].degenerate).count() as f64 / n),
                fmt_f64(reps.iter().map(|r| r[k].clamp_fraction).sum::<f64>() / n),
                fmt_f64(overhead),
            ])?;
            if let Some(sink) = raw.as_mut() {
                for (rep, r) in reps.iter().enumerate() {
                    sink.row([
                        rep.to_string(),
                        estimator_name(r[k].estimator),
                        fmt_f64(f),
                        fmt_f64(r[k].estimate),
                        fmt_opt(r[k].eta),
                    ])?;
                }
            }
        }
    }
    let mut written = vec![metrics.finish()?];
    if let Some(sink) = raw {
        written.push(sink.finish()?);
    }
    Ok(written)
}

fn load_latent_histogram(path: &Path) -> Result<GridDensity> {
    let mut src = open_csv(path, "latent-histogram")?;
    let (c_lo, c_hi, c_n) = (src.column("lo"), src.column("hi"), src.column("count"));
    let mut bins = Vec::new();
    let mut rec = csv::StringRecord::new();
    while src.next_record(&mut rec)? {
        bins.push((src.parse(&rec, c_lo)?, src.parse(&rec, c_hi)?, src.parse(&rec, c_n)?));
    }
    GridDensity::from_histogram(&bins)
}

fn analytic_model(a: &AnalyticModelArgs, ctx: &Context) -> Result<Vec<PathBuf>> {
    let seed = ctx.seed()?;
    if a.n_windows == 0 {
        return Err(Error::invalid("--n-windows must be at least 1"));
    }
    let density = match &a.dcs_hist {
        Some(p) => load_latent_histogram(&ctx.input(p))?,
        None => gaussian_density(a.gauss_mean, a.gauss_sd)?,
    };
    let model = match a.target_mean_pl {
        Some(t) => {
            let window = match a.target_scope {
                TargetScope::Window => t,
                TargetScope::Circuit => window_mean_for_circuit_mean(t, a.n_windows as f64),
            };
            deform_to_target_mean(&density, a.delta, window, a.deformation)?
        }
        None => LatentOddsModel::new(density, a.delta)?,
    };
    let targets: Vec<ChannelTarget> = a
        .thresholds
        .iter()
        .map(|&t| ChannelTarget::Threshold(t))
        .chain(a.fractions.iter().map(|&f| ChannelTarget::CircuitFraction(f)))
        .collect();
    let rows = compare_abort_channels(&model, &targets, a.n_windows, a.trials, seed)?;
    let mut sink = CsvSink::create(&ctx.output(&a.out), "analytic", &ctx.prov)?;
    for r in &rows {
        let (kind, target) = match r.target {
            ChannelTarget::Threshold(t) => ("threshold", t),
            ChannelTarget::CircuitFraction(f) => ("circuit-fraction", f),
        };
        let mut fields = vec![kind.to_string(), fmt_f64(target), fmt_f64(r.baseline_p_l)];
        for c in [&r.phi, &r.lambda] {
            fields.extend([
                fmt_f64(c.threshold),
                fmt_f64(c.rho),
                fmt_f64(c.overhead),
                fmt_f64(c.mean_p_l),
                fmt_f64(c.se_p_l),
                fmt_f64(c.analytic_p_l),
                fmt_f64(c.reduction),
            ]);
        }
        sink.row(&fields)?;
    }
    let mut written = vec![sink.finish()?];
    if let Some(p) = &a.density_out {
        let mut sink = CsvSink::create(&ctx.output(p), "analytic-density", &ctx.prov)?;
        for (series, d) in [("lambda", &model.lambda), ("phi", &implied_dcs_distribution(&model))] {
            for i in (0..d.mass.len()).filter(|&i| d.mass[i] > 1e-300) {
                let (lo, hi) = d.cell(i);
                sink.row([series.to_string(), fmt_f64(lo), fmt_f64(hi), fmt_f64(d.mass[i])])?;
            }
        }
        written.push(sink.finish()?);
    }
    Ok(written)
}

fn plan(a: &PlanArgs, ctx: &Context) -> Result<Vec<PathBuf>> {
    let mut src = open_csv(&ctx.input(&a.mu_model), "mu-model")?;
    let (c_d, c_mu, c_s) = (src.column("d"), src.column("mu1"), src.column("sigma1_sq"));
    let mut model = Vec::new();
    let mut rec = csv::StringRecord::new();
    while src.next_record(&mut rec)? {
        model.push(MomentPoint {
            d: src.parse(&rec, c_d)?,
            mu1: src.parse(&rec, c_mu)?,
            sigma1_sq: src.parse(&rec, c_s)?,
        });
    }
    model.sort_by_key(|p| p.d);
    let selected = select_distance(&model, a.n_windows, a.eps)?;
    let distances: Vec<Value> = model
        .iter()
        .map(|p| {
            let (mu_n, sigma_n_sq) = circuit_moments(p.mu1, p.sigma1_sq, a.n_windows);
            json!({"d": p.d, "mu1": p.mu1, "sigma1_sq": p.sigma1_sq, "mu_n": mu_n, "sigma_n_sq": sigma_n_sq})
        })
        .collect();
    let spacetime = match (a.baseline_d, a.abort_d, a.overhead) {
        (Some(from), Some(to), Some(o)) => {
            let p = spacetime_plan(from, to, o)?;
            json!({"baseline_d": from, "abort_d": to, "overhead": o,
                   "qubit_factor": p.qubit_factor, "duration_factor": p.duration_factor,
                   "spacetime_factor": p.spacetime_factor})
        }
        (None, None, None) => Value::Null,
        _ => return Err(Error::Config("--baseline-d, --abort-d and --overhead go together".into())),
    };
    let doc = json!({
        "eps": a.eps,
        "n_windows": a.n_windows,
        "selected_d": selected,
        "distances": distances,
        "spacetime": spacetime,
    });
    Ok(vec![write_json(&ctx.output(&a.out), "plan", &ctx.prov, doc)?])
}

fn csv_rows(src: &mut CsvSource) -> Result<Vec<Value>> {
    let names: Vec<String> = src.reader.headers()?.iter().map(str::to_string).collect();
    let mut rec = csv::StringRecord::new();
    let mut out = Vec::new();
    while src.next_record(&mut rec)? {
        let mut row = Map::new();
        for (name, raw) in names.iter().zip(rec.iter()) {
            let v = if raw.is_empty() {
                Value::Null
            } else if let Ok(n) = raw.parse::<f64>() {
                serde_json::Number::from_f64(n).map_or(Value::String(raw.into()), Value::Number)
            } else {
                Value::String(raw.into())
            };
            row.insert(name.clone(), v);
        }
        out.push(Value::Object(row));
    }
    Ok(out)
}

fn pick(rows: &[Value], keys: &[&str]) -> Vec<Value> {
    rows.iter()
        .map(|r| Value::Object(keys.iter().map(|k| (k.to_string(), r[*k].clone())).collect()))
        .collect()
}

fn report(a: &ReportArgs, ctx: &Context) -> Result<Vec<PathBuf>> {
    // Format and kind of every input, before any content is read.
    let mut found = Vec::new();
    for p in &a.inputs {
        let path = ctx.input(p);
        let (format, kind) = if path.extension().is_some_and(|e| e == "json") {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Error::Schema { path: path.clone(), msg: e.to_string() })?;
            let v: Value = serde_json::from_str(&text)
                .map_err(|e| Error::Schema { path: path.clone(), msg: e.to_string() })?;
            (
                v["meta"]["format"].as_u64().map(|f| f as u32),
                v["meta"]["kind"].as_str().unwrap_or("").to_string(),
            )
        } else {
            let h = peek_header(&path)?;
            (h.as_ref().map(|h| h.format), h.map(|h| h.kind).unwrap_or_default())
        };
        found.push((p.clone(), path, format, kind));
    }
    if let Some(first) = found.first() {
        if let Some(other) = found.iter().find(|f| f.2 != first.2) {
            return Err(Error::Schema {
                path: other.1.clone(),
                msg: format!(
                    "mixed format versions: {:?} here, {:?} in {}",
                    other.2,
                    first.2,
                    first.0.display()
                ),
            });
        }
    }
    let mut sources = Vec::new();
    let (mut calibration, mut retained, mut overhead, mut metrics, mut analytic, mut plans) =
        (vec![], vec![], vec![], vec![], vec![], vec![]);
    for (given, path, _, kind) in &found {
        let name = given.display().to_string();
        if schema().json.contains_key(kind.as_str()) {
            let v = read_json(path, kind)?;
            sources.push(json!({"path": name, "kind": kind, "config": v["meta"]["config"], "seed": v["meta"]["seed"]}));
            let mut body = v.clone();
            body.as_object_mut().unwrap().remove("meta");
            match kind.as_str() {
                "curve" => calibration.push(json!({"source": name, "dcs": v["dcs"], "a": v["a"], "b": v["b"],
                                                    "a_se": v["a_se"], "b_se": v["b_se"], "bin_count": v["bin_count"]})),
                "plan" => plans.push(json!({"source": name, "plan": body})),
                _ => {}
            }
        } else if schema().csv.contains_key(kind.as_str()) {
            let mut src = open_csv(path, kind)?;
            let h = src.header.clone();
            sources.push(json!({"path": name, "kind": kind,
                                "config": h.as_ref().map(|h| h.config.clone()),
                                "seed": h.and_then(|h| h.seed)}));
            match kind.as_str() {
                "sweep" => {
                    let rows = csv_rows(&mut src)?;
                    overhead.push(json!({"source": name,
                        "rows": pick(&rows, &["fraction", "n_windows", "circuit_discard", "time_overhead"])}));
                    retained.push(json!({"source": name, "rows": rows}));
                }
                "mle-metrics" => metrics.push(json!({"source": name, "rows": csv_rows(&mut src)?})),
                "analytic" => analytic.push(json!({"source": name, "rows": csv_rows(&mut src)?})),
                _ => {}
            }
        } else {
            return Err(Error::Schema { path: path.clone(), msg: format!("unknown artifact kind `{kind}`") });
        }
    }
    let doc = json!({
        "sources": sources,
        "calibration": calibration,
        "retained_ler": retained,
        "overhead": overhead,
        "estimator_metrics": metrics,
        "analytic": analytic,
        "plan": plans,
    });
    Ok(vec![write_json(&ctx.output(&a.out), "report", &ctx.prov, doc)?])
}
