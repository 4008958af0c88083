use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use looptree::continuum::{self, LoopMetric};
use looptree::experiment::{self, ExperimentSpec, Model, Statistic};
use looptree::labels::{self, Labelling};
use looptree::loopforge::{self, Looptree};
use looptree::mapbij::{self, BipartiteMap};
use looptree::mmspace::{self, MatchingStrategy};
use looptree::{io, rng, DegreeSequence, LukaPath, ThetaParams};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::{
    Cli, Command, ContinuumCmd, InvarianceArgs, LabelsCmd, LukaCmd, MapCmd, MmCmd, ModelKind, SampleKind, SeqArgs,
    Strategy, ThetaArgs,
};

/// Bad or missing input (exit code 2).
#[derive(Debug)]
pub struct InputError(pub String);

/// A checked property does not hold (exit code 3).
#[derive(Debug)]
pub struct Violation(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "property violation: {}", self.0)
    }
}

impl std::error::Error for InputError {}
impl std::error::Error for Violation {}

pub fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<Violation>().is_some() {
        return 3;
    }
    if let Some(err) = e.downcast_ref::<looptree::Error>() {
        return if matches!(err, looptree::Error::MismatchFound(_)) { 3 } else { 2 };
    }
    if e.downcast_ref::<InputError>().is_some() {
        return 2;
    }
    1
}

fn input(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

struct Ctx {
    seed: u64,
    out: PathBuf,
}

impl Ctx {
    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        let p = self.out.join(name);
        Ok(BufWriter::new(File::create(&p).with_context(|| format!("creating {}", p.display()))?))
    }

    fn write<F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>>(&self, name: &str, f: F) -> Result<()> {
        let mut w = self.create(name)?;
        f(&mut w).with_context(|| format!("writing {name}"))?;
        w.flush()?;
        Ok(())
    }

    /// Writes `summary` to `name` and echoes it on stdout.
    fn summary(&self, name: &str, summary: &Value) -> Result<()> {
        let text = serde_json::to_string_pretty(summary)? + "\n";
        self.write(name, |w| w.write_all(text.as_bytes()))?;
        print!("{text}");
        Ok(())
    }
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(input("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().ok();
    }
    std::fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    let ctx = Ctx { seed: cli.seed, out: cli.out };
    match cli.command {
        Command::Sample { kind, seq } => cmd_sample(&ctx, kind, &load_seq(&seq)?),
        Command::Roundtrip { seq, count, exhaustive } => cmd_roundtrip(&ctx, &seq, count, exhaustive),
        Command::Invariance(args) => cmd_invariance(&ctx, &args),
        Command::Continuum { cmd: ContinuumCmd::Sample { theta, grid, jmax, deltas, label_a } } => {
            cmd_continuum(&ctx, &theta, grid, jmax, &deltas, label_a)
        }
        Command::Mm { cmd } => match cmd {
            MmCmd::Ghp { a, b, strategy } => cmd_ghp(&ctx, &a, &b, strategy),
            MmCmd::Looptree { seq, grid, name } => {
                let path = experiment::sample_excursion(&load_seq(&seq)?, ctx.seed);
                let space = experiment::looptree_grid_space(&path, grid)?;
                io::write_mm(&ctx.out.join(&name), &space)?;
                ctx.summary("mm_summary.json", &json!({"points": grid, "edges": path.len(), "diameter": space.diameter(), "seed": ctx.seed}))
            }
        },
        Command::Luka { cmd: LukaCmd::Sample { seq } } => {
            let seq = load_seq(&seq)?;
            let path = experiment::sample_excursion(&seq, ctx.seed);
            ctx.write("path.csv", |w| io::write_path_csv(w, &path, ctx.seed))?;
            ctx.summary("summary.json", &seq_summary(&seq, ctx.seed))
        }
        Command::Labels { cmd: LabelsCmd::Sample { seq, path } } => {
            let path = match path {
                Some(p) => read_path(&p)?,
                None => experiment::sample_excursion(&load_seq(&seq)?, ctx.seed),
            };
            let lt = loopforge::looptree_from_path(&path)?;
            let lab = labels::good_labelling_uniform(&lt, rng::derive(ctx.seed, 7));
            let z = labels::label_process(&lt, &lab)?;
            ctx.write("path.csv", |w| io::write_path_csv(w, &path, ctx.seed))?;
            ctx.write("labels.csv", |w| io::write_labels_csv(w, &lt, &z))?;
            let (lo, hi) = (z.iter().min().unwrap(), z.iter().max().unwrap());
            ctx.summary("summary.json", &json!({"edges": path.len(), "cycles": lt.cycle_count(), "min_z": lo, "max_z": hi, "seed": ctx.seed}))
        }
        Command::Map { cmd } => match cmd {
            MapCmd::FromLooptree { path, labels: lab_path } => cmd_map_from_looptree(&ctx, &path, lab_path.as_deref()),
            MapCmd::RoundtripCheck { map } => cmd_map_roundtrip(&ctx, &read_map(&map)?),
            MapCmd::Profile { map, vstar } => cmd_map_profile(&ctx, &read_map(&map)?, vstar),
        },
    }
}

fn read_text(p: &Path) -> Result<String> {
    std::fs::read_to_string(p).map_err(|e| input(format!("{}: {e}", p.display())))
}

fn read_path(p: &Path) -> Result<LukaPath> {
    let path = io::parse_path_csv(&read_text(p)?)?;
    if !path.is_excursion() {
        return Err(looptree::Error::NotExcursion.into());
    }
    Ok(path)
}

fn read_map(p: &Path) -> Result<BipartiteMap> {
    Ok(io::parse_map(&read_text(p)?)?)
}

fn load_seq(a: &SeqArgs) -> Result<DegreeSequence> {
    match (&a.degrees, a.quadrangulation) {
        (Some(p), None) => Ok(io::parse_degrees(&read_text(p)?)?),
        (None, Some(n)) => Ok(DegreeSequence::quadrangulation(n)),
        _ => Err(input("give exactly one of --degrees and --quadrangulation")),
    }
}

fn seq_summary(seq: &DegreeSequence, seed: u64) -> Value {
    let st = seq.stats();
    json!({
        "seed": seed,
        "rho": seq.rho(),
        "n": st.n,
        "edges": st.edges,
        "faces": st.faces,
        "leaves": st.leaves,
        "sigma2": st.sigma2,
        "sigma": (st.sigma2 as f64).sqrt(),
        "max_part": seq.max_part(),
    })
}

fn check(name: &str, ok: bool, failures: &mut Vec<String>) -> bool {
    if !ok {
        failures.push(name.to_string());
    }
    ok
}

fn cmd_sample(ctx: &Ctx, kind: SampleKind, seq: &DegreeSequence) -> Result<()> {
    let path = experiment::sample_excursion(seq, ctx.seed);
    ctx.write("path.csv", |w| io::write_path_csv(w, &path, ctx.seed))?;
    let mut summary = seq_summary(seq, ctx.seed);
    let mut failures = Vec::new();
    let mut checks = serde_json::Map::new();
    checks.insert("excursion".into(), check("excursion", path.is_excursion(), &mut failures).into());
    checks.insert("parts".into(), check("parts", path.sorted_jumps() == seq.parts(), &mut failures).into());
    summary["kind"] = json!(format!("{kind:?}").to_lowercase());
    if kind == SampleKind::Forest {
        let forest = loopforge::forest_from_path(&path)?;
        ctx.write("forest.csv", |w| {
            writeln!(w, "vertex,parent,children")?;
            for v in 0..forest.vertex_count() {
                let p = forest.parent(v).map_or(String::new(), |p| p.to_string());
                writeln!(w, "{v},{p},{}", forest.num_children(v))?;
            }
            Ok(())
        })?;
        let ok = loopforge::path_of_forest(&forest) == path;
        checks.insert("path_of_forest".into(), check("path_of_forest", ok, &mut failures).into());
        summary["vertices"] = json!(forest.vertex_count());
    } else {
        let lt = loopforge::looptree_from_path(&path)?;
        ctx.write("looptree.csv", |w| io::write_looptree_csv(w, &lt))?;
        ctx.write("contour.csv", |w| io::write_contour_csv(w, &lt))?;
        summary["vertices"] = json!(lt.vertex_count());
        summary["cycles"] = json!(lt.cycle_count());
        let ok = lt.vertex_count() == seq.count(0) && lt.edge_count() == seq.edges();
        checks.insert("counts".into(), check("counts", ok, &mut failures).into());
        let ok = loopforge::luka_of_looptree(&lt) == path;
        checks.insert("luka_of_looptree".into(), check("luka_of_looptree", ok, &mut failures).into());
        if kind != SampleKind::Looptree {
            let lab = labels::good_labelling_uniform(&lt, rng::derive(ctx.seed, 7));
            let z = labels::label_process(&lt, &lab)?;
            ctx.write("labels.csv", |w| io::write_labels_csv(w, &lt, &z))?;
            checks.insert("good_labelling".into(), check("good_labelling", lab.check_good().is_ok(), &mut failures).into());
            if kind == SampleKind::Map {
                let m = mapbij::map_from_labelled_looptree(&lt, &lab)?;
                ctx.write("map.txt", |w| io::write_map(w, &m))?;
                let ok = experiment::check_instance(&path, &lt, &lab, &m).is_ok();
                checks.insert("map_invariants".into(), check("map_invariants", ok, &mut failures).into());
                let prof = mapbij::profile_stats(&m, m.vstar().expect("pointed"));
                summary["map_vertices"] = json!(m.vertex_count());
                summary["map_faces"] = json!(m.face_count());
                summary["radius"] = json!(prof.radius);
            }
        }
    }
    summary["checks"] = Value::Object(checks);
    ctx.summary("summary.json", &summary)?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Violation(failures.join(", ")).into())
    }
}

/// Path, forest, looptree and map identities for one labelled instance.
fn roundtrip_one(path: &LukaPath, lab: &Labelling) -> std::result::Result<(), String> {
    let forest = loopforge::forest_from_path(path).map_err(|e| e.to_string())?;
    if loopforge::path_of_forest(&forest) != *path {
        return Err("path -> forest -> path".into());
    }
    let lt = loopforge::looptree_from_path(path).map_err(|e| e.to_string())?;
    if loopforge::looptree_from_forest(&forest) != lt || loopforge::luka_of_looptree(&lt) != *path {
        return Err("path -> forest -> looptree -> path".into());
    }
    let m = mapbij::map_from_labelled_looptree(&lt, lab).map_err(|e| e.to_string())?;
    experiment::check_instance(path, &lt, lab, &m).map_err(|e| e.to_string())?;
    let (lt2, lab2, flipped) = mapbij::looptree_from_pointed_map(&m).map_err(|e| e.to_string())?;
    if flipped || lt2 != lt || lab2.bridges != lab.bridges {
        return Err("looptree -> map -> looptree".into());
    }
    Ok(())
}

fn cmd_roundtrip(ctx: &Ctx, seq: &SeqArgs, count: usize, exhaustive: Option<usize>) -> Result<()> {
    let mut instances = 0usize;
    let mut failures: Vec<String> = Vec::new();
    let mode;
    if let Some(max_e) = exhaustive {
        if max_e > 8 {
            return Err(input("exhaustive enumeration is limited to 8 edges"));
        }
        mode = format!("exhaustive up to {max_e} edges");
        for e in 1..=max_e {
            for path in experiment::all_excursions(e) {
                let lt = loopforge::looptree_from_path(&path)?;
                experiment::for_each_labelling(&lt, |lab| {
                    instances += 1;
                    if let Err(m) = roundtrip_one(&path, lab) {
                        failures.push(format!("{:?}: {m}", path.jumps()));
                    }
                });
            }
        }
    } else {
        let seq = load_seq(seq)?;
        mode = format!("{count} random instances");
        let results: Vec<std::result::Result<(), String>> = (0..count)
            .into_par_iter()
            .map(|i| {
                let s = rng::derive(ctx.seed, i as u64);
                let path = experiment::sample_excursion(&seq, s);
                let lt = loopforge::looptree_from_path(&path).map_err(|e| e.to_string())?;
                let lab = labels::good_labelling_uniform(&lt, rng::derive(s, 7));
                roundtrip_one(&path, &lab).map_err(|m| format!("replica {i}: {m}"))
            })
            .collect();
        instances = count;
        failures.extend(results.into_iter().filter_map(|r| r.err()));
    }
    let summary = json!({
        "mode": mode,
        "seed": ctx.seed,
        "instances": instances,
        "mismatches": failures.len(),
        "first_mismatch": failures.first(),
        "result": if failures.is_empty() { "PASS" } else { "FAIL" },
    });
    ctx.summary("roundtrip.json", &summary)?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(looptree::Error::MismatchFound(format!("{} of {instances} instances", failures.len())).into())
    }
}

fn parse_thetas(spec: &Option<String>) -> Result<Vec<f64>> {
    let Some(s) = spec else { return Ok(Vec::new()) };
    let text = if Path::new(s).is_file() { read_text(Path::new(s))? } else { s.clone() };
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty() && !t.starts_with('#'))
        .map(|t| t.parse::<f64>().map_err(|_| input(format!("not a number: {t:?}"))))
        .collect()
}

fn theta_params(a: &ThetaArgs) -> Result<ThetaParams> {
    let mut p = ThetaParams::new(a.theta0, parse_thetas(&a.thetas)?, a.rho)?;
    p.a = a.a;
    p.validate()?;
    Ok(p)
}

fn cmd_invariance(ctx: &Ctx, args: &InvarianceArgs) -> Result<()> {
    let model = match args.model {
        ModelKind::Quadrangulation => Model::Quadrangulation,
        ModelKind::Theta => Model::Theta(theta_params(&args.theta)?),
        ModelKind::Template => {
            let p = args.degrees.as_ref().ok_or_else(|| input("--model template needs --degrees"))?;
            Model::Template(io::parse_degrees(&read_text(p)?)?)
        }
    };
    let statistics = args.stats.iter().map(|s| s.parse::<Statistic>()).collect::<looptree::Result<Vec<_>>>()?;
    let spec = ExperimentSpec {
        statistics,
        delta: args.delta,
        continuum_grid: args.continuum_grid,
        continuum_replicas: args.continuum_replicas,
        ..ExperimentSpec::new(model, args.sizes.clone(), args.replicas, ctx.seed)?
    };
    spec.validate()?;
    let report = experiment::run_invariance(&spec)?;
    ctx.write("samples.csv", |w| experiment::write_samples_csv(w, &report))?;
    ctx.summary("invariance.json", &serde_json::to_value(&report)?)
}

fn cmd_continuum(ctx: &Ctx, theta: &ThetaArgs, grid: usize, jmax: Option<usize>, deltas: &[f64], label_a: Option<f64>) -> Result<()> {
    let params = theta_params(theta)?;
    if grid == 0 {
        return Err(input("--grid must be positive"));
    }
    if deltas.iter().any(|d| !(*d > 0.0)) {
        return Err(input("deltas must be positive"));
    }
    let jmax = jmax.unwrap_or(params.thetas.len());
    let x = continuum::sample_excursion(&params, grid, jmax, ctx.seed)?;
    let metric = LoopMetric::new(&x);
    let knots: Vec<usize> = (0..x.len()).collect();
    let a = label_a.unwrap_or(1.0 / 3.0);
    let field = continuum::snake_labels(&x, a, &knots, rng::derive(ctx.seed, 9));
    ctx.write("continuum.csv", |w| {
        write!(w, "knot,t,x_left,x")?;
        for d in deltas {
            write!(w, ",c_delta_{d}")?;
        }
        writeln!(w, ",c,z")?;
        for k in 0..x.len() {
            write!(w, "{k},{},{},{}", x.time(k), x.left(k), x.right(k))?;
            for &d in deltas {
                write!(w, ",{}", metric.continuous_part(k, d))?;
            }
            writeln!(w, ",{},{}", metric.c()[k], field.values[k])?;
        }
        Ok(())
    })?;
    ctx.write("loops.csv", |w| {
        writeln!(w, "knot,loop_knot,loop_length,position")?;
        for k in 0..x.len() {
            if let Some(&(p, r)) = metric.jump_ancestors(k).first() {
                writeln!(w, "{k},{p},{},{r}", x.jump(p))?;
            }
        }
        Ok(())
    })?;
    let jumps: Vec<Value> = (0..x.len())
        .filter(|&k| x.jump(k) > 0.0)
        .map(|k| json!({"knot": k, "t": x.time(k), "size": x.jump(k)}))
        .collect();
    ctx.summary(
        "continuum.json",
        &json!({
            "seed": ctx.seed,
            "theta0": params.theta0,
            "thetas": params.thetas,
            "rho": params.rho,
            "grid": grid,
            "jmax": jmax,
            "knots": x.len(),
            "label_a": a,
            "dropped_l2": x.dropped_l2,
            "jumps": jumps,
        }),
    )
}

fn cmd_ghp(ctx: &Ctx, a: &Path, b: &Path, strategy: Strategy) -> Result<()> {
    let sa = io::read_mm(a)?;
    let sb = io::read_mm(b)?;
    let strategy = match strategy {
        Strategy::IndexAligned => MatchingStrategy::IndexAligned,
        Strategy::Greedy => MatchingStrategy::Greedy,
    };
    let bound = mmspace::ghp_bound(&sa, &sb, strategy)?;
    ctx.summary(
        "ghp.json",
        &json!({
            "strategy": strategy,
            "epsilon": bound.epsilon,
            "distortion": bound.distortion,
            "uncoupled_mass": bound.uncoupled_mass,
            "coupling_size": bound.coupling.len(),
            "sizes": [sa.len(), sb.len()],
        }),
    )
}

fn cmd_map_from_looptree(ctx: &Ctx, path: &Path, lab_path: Option<&Path>) -> Result<()> {
    let path = read_path(path)?;
    let lt: Looptree = loopforge::looptree_from_path(&path)?;
    let lab = match lab_path {
        Some(p) => labels::labelling_from_process(&lt, &io::parse_labels_csv(&read_text(p)?)?)?,
        None => labels::good_labelling_uniform(&lt, rng::derive(ctx.seed, 7)),
    };
    let m = mapbij::map_from_labelled_looptree(&lt, &lab)?;
    ctx.write("map.txt", |w| io::write_map(w, &m))?;
    let check = experiment::check_instance(&path, &lt, &lab, &m);
    ctx.summary(
        "map_summary.json",
        &json!({
            "vertices": m.vertex_count(),
            "edges": m.edge_count(),
            "faces": m.face_count(),
            "root": m.root(),
            "vstar": m.vstar(),
            "checks": check.is_ok(),
        }),
    )?;
    check.map_err(|e| Violation(e.to_string()).into())
}

fn cmd_map_roundtrip(ctx: &Ctx, m: &BipartiteMap) -> Result<()> {
    if m.vstar().is_none() {
        return Err(input("map has no distinguished vertex"));
    }
    let (lt, lab, flipped) = mapbij::looptree_from_pointed_map(m)?;
    let back = mapbij::map_from_labelled_looptree(&lt, &lab)?;
    let expected = if flipped {
        BipartiteMap::new(
            (0..m.half_edge_count()).map(|h| m.twin(h)).collect(),
            (0..m.half_edge_count()).map(|h| m.next(h)).collect(),
            m.twin(m.root()),
            m.vstar(),
        )?
    } else {
        m.clone()
    };
    let ok = mapbij::rooted_isomorphic(&expected, &back);
    ctx.summary(
        "roundtrip.json",
        &json!({"edges": m.edge_count(), "cycles": lt.cycle_count(), "root_flipped": flipped, "result": if ok { "PASS" } else { "FAIL" }}),
    )?;
    if ok {
        Ok(())
    } else {
        Err(looptree::Error::MismatchFound("map -> looptree -> map".into()).into())
    }
}

fn cmd_map_profile(ctx: &Ctx, m: &BipartiteMap, source: Option<usize>) -> Result<()> {
    let v = source.or(m.vstar()).ok_or_else(|| input("map has no distinguished vertex; pass --vstar"))?;
    if v >= m.vertex_count() {
        return Err(input(format!("vertex {v} out of range")));
    }
    let prof = mapbij::profile_stats(m, v);
    ctx.write("profile.csv", |w| {
        writeln!(w, "distance,count")?;
        for (d, c) in prof.histogram.iter().enumerate().skip(1) {
            writeln!(w, "{d},{c}")?;
        }
        Ok(())
    })?;
    ctx.summary(
        "profile.json",
        &json!({"source": v, "radius": prof.radius, "root_distance": prof.root_distance, "vertices": m.vertex_count()}),
    )
}
