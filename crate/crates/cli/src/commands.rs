//! Command implementations.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use pohozaev::mfg::{mfg_summary, to_mfg, write_mfg_csv};
use pohozaev::profiles::{CertificateOptions, EnergyCertificate};
use pohozaev::{
    classify_fibering, extremal::ScalingCheck, minimize_degenerate, minimize_ground, minimize_mountain,
    morse_index_radial, mu_star, scaling_law_check, strict_inequality_certificate, Branch,
    ExtremalReport, ProblemParams, RadialFunction, SolutionRecord, SolverOptions,
};

use crate::config::{SweepConfig, SweepPoint};
use crate::manifest::{GridSpec, RunInputs, RunManifest, Status};
use crate::{json, ClassifyArgs, CertifyArgs, Failure, GridArgs, SolveArgs, SweepArgs};

const MORSE_EIGENVALUES: usize = 4;

fn solver_options(grid: &GridArgs) -> SolverOptions {
    SolverOptions { grid_n: grid.grid_n, grid_r: grid.grid_r, ..SolverOptions::default() }
}

fn grid_spec(grid: &GridArgs) -> GridSpec {
    GridSpec { n: grid.grid_n, radius: grid.grid_r }
}

fn solve_branch(params: &ProblemParams, branch: Branch, opts: &SolverOptions) -> pohozaev::Result<SolutionRecord> {
    match branch {
        Branch::Plus => minimize_ground(params, opts),
        Branch::Minus => minimize_mountain(params, opts),
        Branch::Zero => minimize_degenerate(params, opts),
    }
}

pub fn solve(args: &SolveArgs) -> Result<(), Failure> {
    let params = args.params.with_mu(args.mu)?;
    if let Some(c) = args.mfg {
        if !(c > 0.0) {
            return Err(Failure::Usage(format!("--mfg expects a positive C_H, got {c}")));
        }
    }
    fs::create_dir_all(&args.out)?;
    let extra = serde_json::json!({ "branch": args.branch, "morse": args.morse, "mfg": args.mfg });
    let mut manifest = RunManifest::start(RunInputs::new("solve", params, grid_spec(&args.grid), extra));
    manifest.write(&args.out)?;

    let result = run_solve(args, &params);
    match result {
        Ok(outputs) => {
            manifest.finish(outputs);
            manifest.write(&args.out)?;
            Ok(())
        }
        Err(f) => {
            manifest.fail(f.message().to_string());
            manifest.write(&args.out)?;
            Err(f)
        }
    }
}

fn run_solve(args: &SolveArgs, params: &ProblemParams) -> Result<Vec<String>, Failure> {
    let mut rec = solve_branch(params, args.branch, &solver_options(&args.grid))?;
    let mut outputs = vec!["profile.csv".to_string()];
    rec.profile.write_csv(&args.out.join("profile.csv"))?;
    if args.morse {
        let report = morse_index_radial(&rec, MORSE_EIGENVALUES)?;
        rec.morse_index = Some(report.index_radial);
        json::write(&args.out.join("morse.json"), &report)?;
        outputs.push("morse.json".into());
    }
    if let Some(c_h) = args.mfg {
        let fields = to_mfg(&rec, c_h)?;
        write_mfg_csv(&fields, &args.out.join("mfg.csv"))?;
        json::write(&args.out.join("mfg.json"), &mfg_summary(&fields, &rec))?;
        outputs.push("mfg.csv".into());
        outputs.push("mfg.json".into());
    }
    json::write(&args.out.join("record.json"), &rec.summary("profile.csv"))?;
    outputs.insert(0, "record.json".into());
    Ok(outputs)
}

pub fn classify(args: &ClassifyArgs) -> Result<(), Failure> {
    let params = args.params.with_mu(args.mu)?;
    let u = RadialFunction::read_csv(&args.profile, params.dim)?;
    let report = classify_fibering(&u, &params)?;
    print!("{}", json::to_string(&report));
    Ok(())
}

#[derive(Debug, Serialize)]
struct CertifyOutput {
    certificate: EnergyCertificate,
    bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    scaling: Option<ScalingCheck>,
}

pub fn certify(args: &CertifyArgs) -> Result<(), Failure> {
    // Gate the regime before any extremal computation.
    let probe = args.params.with_mu(1.0)?;
    if !probe.is_critical() {
        return Err(Failure::Usage(format!(
            "the certificate needs q2 = p* = {}, got q2 = {}",
            probe.p_star(),
            probe.q2
        )));
    }
    let mut solver = solver_options(&args.grid);
    let mu = match (args.mu, args.mu_frac) {
        (Some(mu), _) => mu,
        (None, Some(f)) => {
            let rep = mu_star(&probe, &solver)?;
            let mu = f * rep.mu_star;
            solver.extremal = Some(Arc::new(rep));
            mu
        }
        (None, None) => return Err(Failure::Usage("one of --mu and --mu-frac is required".into())),
    };
    if let Some(m) = &args.masses {
        if m.len() != 2 {
            return Err(Failure::Usage(format!("--masses expects two values, got {}", m.len())));
        }
    }
    let params = args.params.with_mu(mu)?;
    let mut manifest = args.out.as_ref().map(|_| {
        let extra = serde_json::json!({ "mu_frac": args.mu_frac, "masses": args.masses });
        RunManifest::start(RunInputs::new("certify", params, grid_spec(&args.grid), extra))
    });
    if let (Some(dir), Some(m)) = (&args.out, &manifest) {
        fs::create_dir_all(dir)?;
        m.write(dir)?;
    }
    let opts = CertificateOptions { solver: solver.clone(), ..CertificateOptions::default() };
    let result = strict_inequality_certificate(&params, &opts).map_err(Failure::from).and_then(|certificate| {
        let scaling = match &args.masses {
            Some(m) => Some(scaling_law_check(m[0], m[1], &params, &SolverOptions { extremal: None, ..solver.clone() })?),
            None => None,
        };
        Ok(CertifyOutput { bound: certificate.bound(params.dim), certificate, scaling })
    });
    let out = match result {
        Ok(o) => o,
        Err(f) => {
            if let (Some(dir), Some(m)) = (&args.out, &mut manifest) {
                m.fail(f.message().to_string());
                m.write(dir)?;
            }
            return Err(f);
        }
    };
    let text = json::to_string(&out);
    print!("{text}");
    if let (Some(dir), Some(m)) = (&args.out, &mut manifest) {
        fs::write(dir.join("certificate.json"), &text)?;
        m.finish(vec!["certificate.json".into()]);
        m.write(dir)?;
    }
    if !(out.certificate.margin > 0.0) {
        return Err(Failure::Numeric(format!("certificate margin {} is not positive", out.certificate.margin)));
    }
    if let Some(s) = &out.scaling {
        if !(s.defect < 0.01) {
            return Err(Failure::Numeric(format!("scaling-law defect {} exceeds 1%", s.defect)));
        }
    }
    Ok(())
}

/// Per-point sweep result, stored as `result.json`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct PointResult {
    index: usize,
    a: f64,
    mu: f64,
    mu_star: Option<f64>,
    m_plus: Option<f64>,
    m_minus: Option<f64>,
    index_plus: Option<usize>,
    index_minus: Option<usize>,
    errors: Vec<String>,
}

/// The inputs that identify a sweep point before `μ_a*` is known.
#[derive(Debug, Serialize)]
struct PointSpec<'a> {
    index: usize,
    a: f64,
    mu: Option<f64>,
    mu_frac: Option<f64>,
    grid_n: usize,
    grid_r: Option<f64>,
    morse: bool,
    config: &'a SweepConfigView,
}

#[derive(Debug, Serialize)]
struct SweepConfigView {
    #[serde(rename = "N")]
    dim: usize,
    p: f64,
    q1: f64,
    q2: f64,
}

fn jobs(requested: Option<usize>) -> Result<usize, Failure> {
    if let Ok(v) = std::env::var("POHOZAEV_JOBS") {
        return v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&j| j > 0)
            .ok_or_else(|| Failure::Usage(format!("POHOZAEV_JOBS must be a positive integer, got '{v}'")));
    }
    match requested {
        Some(0) => Err(Failure::Usage("--jobs must be positive".into())),
        Some(j) => Ok(j),
        None => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

pub fn sweep(args: &SweepArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&args.config)?;
    let cfg = SweepConfig::parse(&text).map_err(Failure::Usage)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs(args.jobs)?)
        .build()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    fs::create_dir_all(&args.out)?;
    let view = SweepConfigView { dim: cfg.dim, p: cfg.p, q1: cfg.q1, q2: cfg.q2 };
    let points = cfg.points();
    let specs: Vec<serde_json::Value> = points
        .iter()
        .map(|pt| {
            serde_json::to_value(PointSpec {
                index: pt.index,
                a: pt.a,
                mu: pt.mu,
                mu_frac: pt.mu_fraction,
                grid_n: cfg.grid_n,
                grid_r: cfg.grid_r,
                morse: cfg.morse,
                config: &view,
            })
            .expect("point spec serializes")
        })
        .collect();
    let done: Vec<Option<PointResult>> = points
        .iter()
        .zip(&specs)
        .map(|(pt, spec)| if args.resume { finished_result(&args.out, pt, spec) } else { None })
        .collect();

    let opts = SolverOptions { grid_n: cfg.grid_n, grid_r: cfg.grid_r, ..SolverOptions::default() };
    let mut masses: Vec<f64> = points
        .iter()
        .zip(&done)
        .filter(|(_, d)| d.is_none())
        .map(|(p, _)| p.a)
        .collect();
    masses.sort_by(f64::total_cmp);
    masses.dedup();
    let extremal: BTreeMap<u64, Result<Arc<ExtremalReport>, String>> = pool.install(|| {
        masses
            .par_iter()
            .map(|&a| {
                let r = mu_star(&cfg.params(a, 1.0), &opts).map(Arc::new).map_err(|e| e.to_string());
                (a.to_bits(), r)
            })
            .collect()
    });

    let results: Vec<PointResult> = pool.install(|| {
        points
            .par_iter()
            .zip(&specs)
            .zip(done)
            .map(|((pt, spec), done)| match done {
                Some(r) => r,
                None => run_point(&args.out, &cfg, pt, spec, extremal.get(&pt.a.to_bits()), &opts),
            })
            .collect()
    });
    write_aggregate(&args.out.join("aggregate.csv"), &cfg, &results)?;
    let ok = results.iter().filter(|r| r.m_plus.is_some() || r.m_minus.is_some()).count();
    eprintln!("sweep: {ok} of {} points succeeded", results.len());
    if ok == 0 {
        return Err(Failure::Numeric("no sweep point succeeded".into()));
    }
    Ok(())
}

fn point_dir(out: &Path, pt: &SweepPoint) -> std::path::PathBuf {
    out.join(format!("point-{:04}", pt.index))
}

fn finished_result(out: &Path, pt: &SweepPoint, spec: &serde_json::Value) -> Option<PointResult> {
    let dir = point_dir(out, pt);
    let m = RunManifest::read(&dir)?;
    if m.status != Status::Finished || &m.inputs.extra != spec || m.inputs.hash() != m.input_hash {
        return None;
    }
    serde_json::from_str(&fs::read_to_string(dir.join("result.json")).ok()?).ok()
}

fn run_point(
    out: &Path,
    cfg: &SweepConfig,
    pt: &SweepPoint,
    spec: &serde_json::Value,
    extremal: Option<&Result<Arc<ExtremalReport>, String>>,
    opts: &SolverOptions,
) -> PointResult {
    let dir = point_dir(out, pt);
    let mut res = PointResult { index: pt.index, a: pt.a, ..PointResult::default() };
    let rep = match extremal {
        Some(Ok(r)) => Some(r.clone()),
        Some(Err(e)) => {
            res.errors.push(format!("mu_star: {e}"));
            None
        }
        None => None,
    };
    res.mu_star = rep.as_ref().map(|r| r.mu_star);
    let mu = match (pt.mu, pt.mu_fraction, &rep) {
        (Some(mu), _, _) => mu,
        (None, Some(f), Some(r)) => f * r.mu_star,
        _ => {
            res.errors.push("coupling given as a fraction of an unavailable mu_star".into());
            return res;
        }
    };
    res.mu = mu;
    let params = cfg.params(pt.a, mu);
    let grid = GridSpec { n: cfg.grid_n, radius: cfg.grid_r };
    let mut manifest = RunManifest::start(RunInputs::new("sweep-point", params, grid, spec.clone()));
    let written = fs::create_dir_all(&dir).and_then(|_| manifest.write(&dir));
    if let Err(e) = written {
        res.errors.push(format!("cannot write manifest: {e}"));
        return res;
    }
    let opts = SolverOptions { extremal: rep, ..opts.clone() };
    for branch in [Branch::Plus, Branch::Minus] {
        match solve_branch(&params, branch, &opts) {
            Ok(rec) => {
                let name = format!("{branch}_profile.csv");
                if let Err(e) = rec.profile.write_csv(&dir.join(&name)) {
                    res.errors.push(format!("{branch}: {e}"));
                }
                let index = if cfg.morse {
                    match morse_index_radial(&rec, MORSE_EIGENVALUES) {
                        Ok(m) => Some(m.index_radial),
                        Err(e) => {
                            res.errors.push(format!("{branch} morse: {e}"));
                            None
                        }
                    }
                } else {
                    None
                };
                match branch {
                    Branch::Plus => (res.m_plus, res.index_plus) = (Some(rec.energy), index),
                    _ => (res.m_minus, res.index_minus) = (Some(rec.energy), index),
                }
            }
            Err(e) => res.errors.push(format!("{branch}: {e}")),
        }
    }
    let stored = json::write(&dir.join("result.json"), &res);
    if res.m_plus.is_some() || res.m_minus.is_some() {
        manifest.finish(vec!["result.json".into(), "plus_profile.csv".into(), "minus_profile.csv".into()]);
    } else {
        manifest.fail(res.errors.join("; "));
    }
    if let Err(e) = stored.and_then(|_| manifest.write(&dir)) {
        res.errors.push(format!("cannot finalize point: {e}"));
    }
    res
}

fn opt_f(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.16e}")).unwrap_or_default()
}

fn opt_u(x: Option<usize>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn write_aggregate(path: &Path, cfg: &SweepConfig, results: &[PointResult]) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(f, "index,N,p,q1,q2,a,mu,mu_star,m_plus,m_minus,index_plus,index_minus,status")?;
    for r in results {
        let status = if r.m_plus.is_some() || r.m_minus.is_some() { "ok" } else { "failed" };
        writeln!(
            f,
            "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{},{},{},{status}",
            r.index,
            cfg.dim,
            cfg.p,
            cfg.q1,
            cfg.q2,
            r.a,
            r.mu,
            opt_f(r.mu_star),
            opt_f(r.m_plus),
            opt_f(r.m_minus),
            opt_u(r.index_plus),
            opt_u(r.index_minus),
        )?;
    }
    f.flush()
}
