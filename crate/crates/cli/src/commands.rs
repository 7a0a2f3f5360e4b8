//! The five pipelines behind the subcommands.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::PathBuf;

use ranksde_core::analysis::csv::{self, num};
use ranksde_core::analysis::{
    collision_stats, ergodic_average_of, integrate_simplex_seeded, local_time_gap, mu_cell, occupation_times,
    rank_dynamics_residual, ranked_path, uniform_simplex_point, CollisionReport, CollisionRung, ErgodicAverage,
    Histogram, LocalTimeMethod, OccupationReport, TestFunction,
};
use ranksde_core::models::{bps_gap_density, check_nonexplosion, check_stability, concavity_holds, Verdict};
use ranksde_core::sim::{path_rng, simulate_ensemble, PathSample, Termination};
use ranksde_core::{CellLabel, Error, Execution, ModelSpec};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::manifest::{write_manifest, Clock, Outputs};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Occupancy,
    Check,
    Gaps,
    Integrate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Occupancy => "occupancy",
            Command::Check => "check",
            Command::Gaps => "gaps",
            Command::Integrate => "integrate",
        }
    }
}

/// What a command wrote and how it ended.
#[derive(Debug, Clone)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub manifest: PathBuf,
    pub digests: BTreeMap<String, String>,
    pub summary: Vec<String>,
    /// Set when some path hit the explosion guard or exhausted the boundary policy.
    pub explosion: Option<String>,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        if self.explosion.is_some() {
            3
        } else {
            0
        }
    }
}

/// Seed offset for quadrature so it never shares a stream with simulation.
const QUADRATURE_SALT: u64 = 0x7175_6164;

pub fn run(command: Command, config: &RunConfig) -> Result<Report, CliError> {
    let clock = Clock::start();
    let spec = config.model.build()?;
    let mut out = Outputs::new(&config.output.dir, &config.output.prefix)?;
    let mut summary = Vec::new();
    let explosion = match command {
        Command::Simulate => simulate_cmd(&spec, config, &mut out, &mut summary)?,
        Command::Occupancy => occupancy_cmd(&spec, config, &mut out, &mut summary)?,
        Command::Check => {
            check_cmd(&spec, config, &mut out, &mut summary)?;
            None
        }
        Command::Gaps => gaps_cmd(&spec, config, &mut out, &mut summary)?,
        Command::Integrate => {
            integrate_cmd(&spec, config, &mut out, &mut summary)?;
            None
        }
    };
    let termination = match &explosion {
        None => "completed".to_string(),
        Some(m) => format!("exploded: {m}"),
    };
    let manifest = clock.manifest(command.name(), config, &out, &termination);
    let manifest_path = write_manifest(&out, &manifest)?;
    Ok(Report {
        files: out.written().to_vec(),
        manifest: manifest_path,
        digests: out.digests().clone(),
        summary,
        explosion,
    })
}

fn ensemble(spec: &ModelSpec, config: &RunConfig) -> Result<(Vec<PathSample>, Option<String>), CliError> {
    let x0 = config.start()?;
    let result = simulate_ensemble(spec, &x0, &config.sim, config.analysis.paths, Execution::Parallel)?;
    let mut paths = Vec::with_capacity(result.paths.len());
    for p in result.paths {
        paths.push(p?);
    }
    let explosion = paths.iter().enumerate().find_map(|(i, p)| match &p.terminated {
        Termination::Exploded { time, reason } => Some(format!("path {i} stopped at t = {time}: {reason}")),
        Termination::Completed => None,
    });
    Ok((paths, explosion))
}

fn indexed(stem: &str, i: usize, n: usize) -> String {
    if n == 1 {
        stem.to_string()
    } else {
        format!("{stem}_{i}")
    }
}

fn simulate_cmd(
    spec: &ModelSpec,
    config: &RunConfig,
    out: &mut Outputs,
    summary: &mut Vec<String>,
) -> Result<Option<String>, CliError> {
    let (paths, explosion) = ensemble(spec, config)?;
    for (i, p) in paths.iter().enumerate() {
        out.write(&indexed("path", i, paths.len()), |w| csv::write_path(w, p))?;
        let status = if p.is_completed() { "completed" } else { "exploded" };
        summary.push(format!("path {i}: {} states, {status}, {} halvings", p.len(), p.halvings));
    }
    Ok(explosion)
}

/// Mean over paths; the standard error is the spread across paths when there
/// are several, the batch-means error otherwise.
fn combine(parts: &[ErgodicAverage]) -> ErgodicAverage {
    if parts.len() == 1 {
        return parts[0];
    }
    let n = parts.len() as f64;
    let mean = parts.iter().map(|a| a.mean).sum::<f64>() / n;
    let var = parts.iter().map(|a| (a.mean - mean).powi(2)).sum::<f64>() / (n - 1.0);
    ErgodicAverage { mean, std_error: (var / n).sqrt() }
}

fn combine_occupation(reports: &[OccupationReport]) -> OccupationReport {
    let mut theta_tau = BTreeMap::new();
    let cells: std::collections::BTreeSet<&CellLabel> = reports.iter().flat_map(|r| r.theta_tau.keys()).collect();
    for cell in cells {
        let parts: Vec<ErgodicAverage> = reports
            .iter()
            .map(|r| r.theta_tau.get(cell).copied().unwrap_or(ErgodicAverage { mean: 0.0, std_error: 0.0 }))
            .collect();
        theta_tau.insert(cell.clone(), combine(&parts));
    }
    let mut theta_ki = reports[0].theta_ki.clone() * 0.0;
    for r in reports {
        theta_ki += &r.theta_ki;
    }
    theta_ki /= reports.len() as f64;
    OccupationReport { theta_tau, theta_ki, ergodic_averages: BTreeMap::new(), reference_values: BTreeMap::new() }
}

fn combine_collisions(reports: &[CollisionReport]) -> CollisionReport {
    let samples: usize = reports.iter().map(|r| r.samples).sum();
    let ladder = (0..reports[0].ladder.len())
        .map(|j| {
            let w = |f: &dyn Fn(&CollisionRung) -> f64| {
                reports.iter().map(|r| f(&r.ladder[j]) * r.samples as f64).sum::<f64>() / samples as f64
            };
            CollisionRung {
                eps: reports[0].ladder[j].eps,
                pair_fraction: w(&|r| r.pair_fraction),
                triple_fraction: w(&|r| r.triple_fraction),
            }
        })
        .collect();
    CollisionReport { ladder, exact_ties: reports.iter().map(|r| r.exact_ties).sum(), samples }
}

fn factorial(d: usize) -> f64 {
    (1..=d).map(|k| k as f64).product()
}

/// `μ(E_τ)/Σμ` for every cell; exact `1/d!` for exchangeable specs.
fn cell_references(spec: &ModelSpec, config: &RunConfig) -> Result<BTreeMap<String, f64>, CliError> {
    let d = spec.dim();
    let cells = CellLabel::all(d);
    if spec.is_exchangeable() {
        let v = 1.0 / factorial(d);
        return Ok(cells.into_iter().map(|c| (c.to_string(), v)).collect());
    }
    let n = config.analysis.quadrature_samples;
    if n == 0 || !spec.domain().is_simplex() {
        return Ok(BTreeMap::new());
    }
    let seed = config.sim.seed ^ QUADRATURE_SALT;
    let mu: Vec<f64> = Execution::Parallel
        .map(cells.len(), |j| mu_cell(spec, &cells[j], n, &mut path_rng(seed, j as u64)).map(|r| r.value))
        .into_iter()
        .collect::<ranksde_core::Result<_>>()?;
    let total: f64 = mu.iter().sum();
    Ok(cells.into_iter().zip(mu).map(|(c, m)| (c.to_string(), m / total)).collect())
}

/// `∫ f p / ∫ p` on the simplex with common random numbers.
fn function_reference(spec: &ModelSpec, f: TestFunction, n: usize, seed: u64) -> Result<f64, CliError> {
    let d = spec.dim();
    let z = integrate_simplex_seeded(|x| spec.density(x), d, n, seed, Execution::Parallel)?;
    let fz = integrate_simplex_seeded(|x| f.eval(x) * spec.density(x), d, n, seed, Execution::Parallel)?;
    Ok(fz.value / z.value)
}

fn occupancy_cmd(
    spec: &ModelSpec,
    config: &RunConfig,
    out: &mut Outputs,
    summary: &mut Vec<String>,
) -> Result<Option<String>, CliError> {
    let (paths, explosion) = ensemble(spec, config)?;
    let mut occ = Vec::with_capacity(paths.len());
    let mut coll = Vec::with_capacity(paths.len());
    for p in &paths {
        let rp = ranked_path(p)?;
        occ.push(occupation_times(&rp)?);
        coll.push(collision_stats(&rp, &config.analysis.eps)?);
    }
    let mut report = combine_occupation(&occ);
    for &f in &config.analysis.functions {
        let parts = paths.iter().map(|p| ergodic_average_of(p, f)).collect::<ranksde_core::Result<Vec<_>>>()?;
        report.ergodic_averages.insert(f.to_string(), combine(&parts));
    }
    report.reference_values = cell_references(spec, config)?;
    let n = config.analysis.quadrature_samples;
    for &f in &config.analysis.functions {
        let reference = match (f, spec.domain().is_simplex()) {
            (TestFunction::One, _) => Some(1.0),
            (_, true) if n > 0 => Some(function_reference(spec, f, n, config.sim.seed ^ QUADRATURE_SALT)?),
            _ => None,
        };
        if let Some(v) = reference {
            report.reference_values.insert(f.to_string(), v);
        }
    }
    let collisions = combine_collisions(&coll);

    out.write("occupation", |w| csv::write_occupation(w, &report))?;
    out.write("rank_occupancy", |w| csv::write_rank_occupancy(w, &report))?;
    if !config.analysis.functions.is_empty() {
        out.write("ergodic", |w| csv::write_ergodic(w, &report))?;
    }
    out.write("collisions", |w| {
        csv::write_collisions(w, &collisions)?;
        writeln!(w, "exact_ties,{},{}", collisions.exact_ties, collisions.samples)
    })?;
    if config.analysis.diagnostics {
        let p = &paths[0];
        let rp = ranked_path(p)?;
        let lt = (1..spec.dim())
            .map(|k| local_time_gap(&rp, k, LocalTimeMethod::Tanaka))
            .collect::<ranksde_core::Result<Vec<_>>>()?;
        let res = rank_dynamics_residual(p, &rp)?;
        out.write("local_times", |w| csv::write_local_times(w, p.times(), &lt))?;
        out.write("residuals", |w| csv::write_residuals(w, p.times(), &res))?;
        summary.push(format!("residual max |.| per rank: {:?}; telescoped {:e}", res.max_abs, res.telescoped_max));
    }

    for (cell, avg) in &report.theta_tau {
        let r = report.reference_values.get(&cell.to_string()).map(|v| format!(" (reference {v:.6})")).unwrap_or_default();
        summary.push(format!("theta[{cell}] = {:.6} +/- {:.6}{r}", avg.mean, avg.std_error));
    }
    if let Some(last) = collisions.ladder.last() {
        summary.push(format!("triple fraction at eps = {:e}: {:e}", last.eps, last.triple_fraction));
    }
    Ok(explosion)
}

/// Minimal CSV quoting for free-text fields.
fn field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn check_cmd(spec: &ModelSpec, config: &RunConfig, out: &mut Outputs, summary: &mut Vec<String>) -> Result<(), CliError> {
    let mut rows: Vec<(String, String, String)> = Vec::new();
    let mut push = |a: &str, b: String, c: String| rows.push((a.to_string(), b, c));
    push("model", "family".into(), config.model.family().into());
    push("model", "dim".into(), spec.dim().to_string());
    push("model", "conforming".into(), spec.is_conforming().to_string());
    push("model", "exchangeable".into(), spec.is_exchangeable().to_string());

    if let Some(params) = config.model.hybrid_params() {
        let s = check_stability(&params)?;
        push("stability", "satisfied".into(), s.satisfied.to_string());
        for (l, m) in s.margins.iter().enumerate() {
            push("stability", format!("margin_{}", l + 1), num(*m));
        }
        push("stability", "worst_margin".into(), num(s.worst_margin));
        push("stability", "witness_l".into(), s.witness_l.to_string());
        summary.push(format!("stability: {} (worst margin {:.6} at l = {})", s.satisfied, s.worst_margin, s.witness_l));
    }
    if spec.domain().is_simplex() {
        let r = check_nonexplosion(spec, config.analysis.nonexplosion_samples)?;
        let verdict = match r.verdict {
            Verdict::Satisfied => "satisfied",
            Verdict::Violated => "violated",
            Verdict::Inconclusive => "inconclusive",
        };
        push("nonexplosion", "verdict".into(), verdict.into());
        push("nonexplosion", "diagnostics".into(), field(&r.diagnostics));
        for (j, rung) in r.ladder.iter().enumerate() {
            push("nonexplosion", format!("shell_{j}"), format!("{} {} {} {}", num(rung.delta_lo), num(rung.delta_hi), num(rung.shell), num(rung.cumulative)));
        }
        summary.push(format!("non-explosion: {verdict} ({})", r.diagnostics));
    }
    if let Some(params) = config.model.bps_params() {
        for (k, ok) in concavity_holds(&params.sigma2).iter().enumerate() {
            push("bps", format!("concavity_{}", k + 2), ok.to_string());
        }
        match bps_gap_density(&params) {
            Ok(gd) => {
                push("bps", "normalizable".into(), gd.is_normalizable().to_string());
                for (k, r) in gd.gap_rates().iter().enumerate() {
                    push("bps", format!("gap_rate_{}", k + 1), num(*r));
                }
                summary.push(format!("gap law normalisable: {} (rates {:?})", gd.is_normalizable(), gd.gap_rates()));
            }
            Err(Error::AssumptionViolation(m)) => {
                push("bps", "gap_density".into(), field(&m));
                summary.push(format!("no closed-form gap density: {m}"));
            }
            Err(e) => return Err(e.into()),
        }
    }
    out.write("check", |w| {
        writeln!(w, "section,item,value")?;
        for (a, b, c) in &rows {
            writeln!(w, "{a},{b},{c}")?;
        }
        Ok(())
    })?;
    Ok(())
}

/// Bin probabilities of gap `k` under the normalised invariant density, by
/// uniform sampling weighted with `p`.
fn simplex_gap_reference(spec: &ModelSpec, edges: &[f64], n: usize, seed: u64) -> Vec<(Vec<f64>, f64)> {
    const CHUNK: usize = 4096;
    let d = spec.dim();
    let bins = edges.len() - 1;
    let upper = edges[bins];
    let width = upper / bins as f64;
    let chunks = n.div_ceil(CHUNK);
    // per chunk: (per gap: bin weights, overflow weight), total weight
    let parts = Execution::Parallel.map(chunks, |c| {
        let mut rng = path_rng(seed, c as u64);
        let mut acc = vec![(vec![0.0; bins], 0.0); d - 1];
        let mut total = 0.0;
        for _ in 0..CHUNK.min(n - c * CHUNK) {
            let x = uniform_simplex_point(&mut rng, d);
            let p = spec.density(&x);
            if !p.is_finite() {
                continue;
            }
            total += p;
            let mut y = x;
            y.sort_by(|a, b| b.total_cmp(a));
            for (k, a) in acc.iter_mut().enumerate() {
                let b = ((y[k] - y[k + 1]) / width) as usize;
                if b < bins {
                    a.0[b] += p;
                } else {
                    a.1 += p;
                }
            }
        }
        (acc, total)
    });
    let total: f64 = parts.iter().map(|p| p.1).sum();
    (0..d - 1)
        .map(|k| {
            let mut w = vec![0.0; bins];
            let mut over = 0.0;
            for (acc, _) in &parts {
                for (b, v) in acc[k].0.iter().enumerate() {
                    w[b] += v;
                }
                over += acc[k].1;
            }
            (w.into_iter().map(|v| v / total).collect(), over / total)
        })
        .collect()
}

enum GapReference {
    /// Closed-form exponential gap law with rate `r`; unnormalised when `r <= 0`.
    Exponential(f64),
    /// Bin probabilities and overflow probability.
    Binned(Vec<f64>, f64),
    None,
}

fn gaps_cmd(
    spec: &ModelSpec,
    config: &RunConfig,
    out: &mut Outputs,
    summary: &mut Vec<String>,
) -> Result<Option<String>, CliError> {
    let d = spec.dim();
    if d < 2 {
        return Err(Error::InvalidParameters("gaps need d >= 2".into()).into());
    }
    let (paths, explosion) = ensemble(spec, config)?;
    let ranked = paths.iter().map(ranked_path).collect::<ranksde_core::Result<Vec<_>>>()?;
    let series: Vec<Vec<f64>> = (1..d)
        .map(|k| {
            let mut v = Vec::new();
            for rp in &ranked {
                v.extend(rp.gap_series(k)?);
            }
            Ok(v)
        })
        .collect::<ranksde_core::Result<_>>()?;
    let bins = config.analysis.bins;
    let upper = match config.analysis.gap_max {
        Some(u) => u,
        None => {
            let m = series.iter().flatten().copied().fold(0.0, f64::max);
            if m > 0.0 {
                m * (1.0 + 1e-9)
            } else {
                1.0
            }
        }
    };
    let mut references: Vec<GapReference> = (1..d).map(|_| GapReference::None).collect();
    if let Some(params) = config.model.bps_params() {
        match bps_gap_density(&params) {
            Ok(gd) => {
                for (k, r) in gd.gap_rates().into_iter().enumerate() {
                    references[k] = GapReference::Exponential(r);
                }
                if !gd.is_normalizable() {
                    summary.push(format!("gap law is not normalisable (rates {:?}); overlay is unnormalised", gd.gap_rates()));
                }
            }
            Err(Error::AssumptionViolation(m)) => summary.push(format!("no closed-form gap density: {m}")),
            Err(e) => return Err(e.into()),
        }
    } else if spec.domain().is_simplex() && config.analysis.quadrature_samples > 0 {
        let edges: Vec<f64> = (0..=bins).map(|b| b as f64 * upper / bins as f64).collect();
        let refs = simplex_gap_reference(spec, &edges, config.analysis.quadrature_samples, config.sim.seed ^ QUADRATURE_SALT);
        for (k, (w, over)) in refs.into_iter().enumerate() {
            references[k] = GapReference::Binned(w, over);
        }
    }

    let mut table = Vec::new();
    for (k, values) in series.iter().enumerate() {
        let h = Histogram::new(values, bins, upper)?;
        let (tv, ref_mean) = match &references[k] {
            GapReference::Exponential(r) if *r > 0.0 => {
                let r = *r;
                (Some(h.total_variation(|x| 1.0 - (-r * x).exp())), Some(1.0 / r))
            }
            GapReference::Binned(w, over) => {
                let n = h.total as f64;
                let mut tv = (h.overflow as f64 / n - over).abs();
                for (c, p) in h.counts.iter().zip(w) {
                    tv += (*c as f64 / n - p).abs();
                }
                (Some(0.5 * tv), None)
            }
            _ => (None, None),
        };
        let overlay: Option<Box<dyn Fn(f64, f64) -> f64>> = match &references[k] {
            GapReference::Exponential(r) => {
                let r = *r;
                Some(Box::new(move |lo: f64, hi: f64| {
                    if r > 0.0 {
                        ((-r * lo).exp() - (-r * hi).exp()) / (hi - lo)
                    } else if r == 0.0 {
                        1.0
                    } else {
                        ((-r * hi).exp() - (-r * lo).exp()) / (-r * (hi - lo))
                    }
                }))
            }
            GapReference::Binned(w, _) => {
                let w = w.clone();
                let width = upper / bins as f64;
                Some(Box::new(move |lo: f64, _hi: f64| w[((lo / width).round() as usize).min(w.len() - 1)] / width))
            }
            GapReference::None => None,
        };
        out.write(&format!("gap_{}", k + 1), |wr| csv::write_histogram(wr, &h, overlay.as_deref()))?;
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        summary.push(format!(
            "gap {}: mean {:.6}{}{}",
            k + 1,
            mean,
            ref_mean.map(|m| format!(" (reference {m:.6})")).unwrap_or_default(),
            tv.map(|t| format!(", total variation {t:.4}")).unwrap_or_default()
        ));
        table.push((k + 1, mean, ref_mean, tv, h.overflow, h.total));
    }
    out.write("gap_summary", |w| {
        writeln!(w, "k,mean,reference_mean,total_variation,overflow,samples")?;
        for (k, mean, rm, tv, over, total) in &table {
            writeln!(
                w,
                "{k},{},{},{},{over},{total}",
                num(*mean),
                rm.map(num).unwrap_or_default(),
                tv.map(num).unwrap_or_default()
            )?;
        }
        Ok(())
    })?;
    Ok(explosion)
}

fn integrate_cmd(
    spec: &ModelSpec,
    config: &RunConfig,
    out: &mut Outputs,
    summary: &mut Vec<String>,
) -> Result<(), CliError> {
    if !spec.domain().is_simplex() {
        return Err(Error::UnsupportedDomain.into());
    }
    let d = spec.dim();
    let n = match config.analysis.quadrature_samples {
        0 => 100_000,
        n => n,
    };
    let seed = config.sim.seed ^ QUADRATURE_SALT;
    let z = integrate_simplex_seeded(|x| spec.density(x), d, n, seed, Execution::Parallel)?;
    let mut rows = vec![("Z".to_string(), z)];
    let cells = CellLabel::all(d);
    let mus = Execution::Parallel
        .map(cells.len(), |j| mu_cell(spec, &cells[j], n, &mut path_rng(seed, 1 + j as u64)))
        .into_iter()
        .collect::<ranksde_core::Result<Vec<_>>>()?;
    let (mut sum, mut var) = (0.0, 0.0);
    for (c, m) in cells.iter().zip(&mus) {
        sum += m.value;
        var += m.std_error * m.std_error;
        rows.push((format!("mu[{c}]"), *m));
    }
    let n_cells: usize = mus.iter().map(|m| m.n_samples).sum();
    let skipped: usize = mus.iter().map(|m| m.skipped).sum();
    rows.push((
        "sum_mu".to_string(),
        ranksde_core::analysis::QuadratureResult { value: sum, std_error: var.sqrt(), n_samples: n_cells, skipped },
    ));
    for &f in &config.analysis.functions {
        let r = integrate_simplex_seeded(|x| f.eval(x) * spec.density(x), d, n, seed, Execution::Parallel)?;
        rows.push((format!("int[{f}]"), r));
    }
    if !(z.value.is_finite() && z.value > 0.0) {
        return Err(Error::Numeric(format!("normalising constant estimate is {}", z.value)).into());
    }
    out.write("integrate", |w| write_quadrature(w, &rows))?;
    summary.push(format!("Z = {:.6e} +/- {:.2e} (uniform-measure convention)", z.value, z.std_error));
    summary.push(format!("sum of cell masses = {sum:.6e} +/- {:.2e}", var.sqrt()));
    Ok(())
}

fn write_quadrature<W: Write>(w: &mut W, rows: &[(String, ranksde_core::analysis::QuadratureResult)]) -> io::Result<()> {
    writeln!(w, "quantity,value,std_error,n_samples,skipped")?;
    for (name, r) in rows {
        writeln!(w, "{},{},{},{},{}", field(name), num(r.value), num(r.std_error), r.n_samples, r.skipped)?;
    }
    Ok(())
}
