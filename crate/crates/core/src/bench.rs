//! Seeded experiment suites emitting one CSV row per (instance, spec).

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instances::{brunovsky, brunovsky_disturbed, double_integrator, random_polytope, with_input_box};
use crate::invariance::{hierarchy, implicit_rcis, LassoSpec};
use crate::numlin::Vector;
use crate::oracle::{convergence_curve, fixed_points, maximal_rcis, nominal_problem, DEFAULT_MAX_ITERS};
use crate::polytope::{mc_volume_ratio, project, HPolytope, HyperBox};
use crate::system::LinearSystem;

pub const INPUT_BOUND: f64 = 0.5;
const TIMING_RUNS: usize = 5;
const CONTAINMENT_SLACK: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Hierarchy,
    Scal,
    Volume,
    Sweep,
    Converge,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "hierarchy" => Suite::Hierarchy,
            "scal" => Suite::Scal,
            "volume" => Suite::Volume,
            "sweep" => Suite::Sweep,
            "converge" => Suite::Converge,
            other => return Err(Error::Parse(format!("unknown suite {other:?}"))),
        })
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Hierarchy => "hierarchy",
            Suite::Scal => "scal",
            Suite::Volume => "volume",
            Suite::Sweep => "sweep",
            Suite::Converge => "converge",
        })
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub seed: u64,
    /// Monte Carlo samples per volume estimate.
    pub samples: usize,
    /// Random instances per dimension.
    pub instances: usize,
    /// Largest chain length in the scalability suite.
    pub n_max: usize,
    /// Largest `n` that also gets an `n²`-row safe set.
    pub n_square_max: usize,
    pub q_max: usize,
    pub sweep_step: f64,
    pub sweep_cap: f64,
    pub timing: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            samples: 100_000,
            instances: 10,
            n_max: 50,
            n_square_max: 16,
            q_max: 6,
            sweep_step: 0.05,
            sweep_cap: 10.0,
            timing: true,
        }
    }
}

/// One CSV line; unused columns stay empty.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ReportRow {
    pub experiment: String,
    pub instance: usize,
    pub n: usize,
    /// Number of random safe-set constraints.
    pub k: Option<usize>,
    pub tau: Option<usize>,
    pub lambda: Option<usize>,
    pub q: Option<usize>,
    pub wbar: Option<f64>,
    pub time_s: Option<f64>,
    pub rows: Option<usize>,
    pub volume: Option<f64>,
    pub ratio: Option<f64>,
    pub sbar_ratio: Option<f64>,
    pub distance: Option<f64>,
    pub implicit_empty: Option<bool>,
    pub cmax_empty: Option<bool>,
    pub sbar_empty: Option<bool>,
    pub fixed_point: Option<bool>,
    pub converged: Option<bool>,
    pub error: Option<String>,
}

impl ReportRow {
    fn new(suite: Suite, instance: usize, n: usize) -> Self {
        Self { experiment: suite.to_string(), instance, n, ..Self::default() }
    }
}

pub fn run(suite: Suite, cfg: &BenchConfig) -> Vec<ReportRow> {
    match suite {
        Suite::Hierarchy => hierarchy_suite(cfg),
        Suite::Scal => scal_suite(cfg),
        Suite::Volume => volume_suite(cfg),
        Suite::Sweep => sweep_suite(cfg),
        Suite::Converge => converge_suite(cfg),
    }
}

/// `# seed=…` header line followed by the CSV table.
pub fn write_csv<W: Write>(rows: &[ReportRow], seed: u64, mut out: W) -> Result<()> {
    let io = |e: std::io::Error| Error::Parse(e.to_string());
    writeln!(out, "# seed={seed}").map_err(io)?;
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
    }
    w.flush().map_err(io)
}

/// Independent stream per `(n, instance)` so rows do not depend on scheduling.
pub fn instance_rng(seed: u64, n: usize, instance: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((n as u64) << 32) | instance as u64);
    rng
}

/// Random bounded safe set with `k` constraints, checked before use.
pub fn random_safe_set(seed: u64, n: usize, k: usize, instance: usize) -> Result<HPolytope> {
    let sx = random_polytope(n, k, &mut instance_rng(seed, n, instance))?;
    if !sx.is_bounded()? || sx.is_empty()? {
        return Err(Error::UnboundedSet);
    }
    Ok(with_input_box(&sx, 1, INPUT_BOUND))
}

/// Rounds to three significant digits.
pub fn sig3(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.2e}").parse().unwrap_or(x)
}

fn timed<T>(cfg: &BenchConfig, mut f: impl FnMut() -> Result<T>) -> Result<(T, Option<f64>)> {
    if !cfg.timing {
        return Ok((f()?, None));
    }
    let mut times = Vec::with_capacity(TIMING_RUNS);
    let mut last = None;
    for _ in 0..TIMING_RUNS {
        let t = Instant::now();
        last = Some(f()?);
        times.push(t.elapsed().as_secs_f64());
    }
    times.sort_by(f64::total_cmp);
    Ok((last.expect("at least one run"), Some(sig3(times[TIMING_RUNS / 2]))))
}

fn record(mut row: ReportRow, f: impl FnOnce(&mut ReportRow) -> Result<()>) -> ReportRow {
    if let Err(e) = f(&mut row) {
        row.error = Some(e.to_string());
    }
    row
}

/// Fraction of a fixed set of box samples hit by any of `sets`, times the box volume.
pub fn union_volume(sets: &[HPolytope], region: &HyperBox, samples: usize, seed: u64) -> f64 {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hits = (0..samples)
        .filter(|_| {
            let x = Vector::from_fn(region.dim(), |i, _| rng.random_range(region.lower[i]..=region.upper[i]));
            sets.iter().any(|s| s.contains_point(&x, 0.0))
        })
        .count();
    region.volume() * hits as f64 / samples.max(1) as f64
}

/// Explicit level-`q` union volumes for the double integrator. Every level
/// reuses one sample stream, so the column is monotone whenever the sets are nested.
fn hierarchy_suite(cfg: &BenchConfig) -> Vec<ReportRow> {
    let (sys, s) = double_integrator();
    (1..=cfg.q_max)
        .into_par_iter()
        .map(|q| {
            record(ReportRow { q: Some(q), ..ReportRow::new(Suite::Hierarchy, 0, 2) }, |row| {
                let nil = sys.nilpotentize(&s)?;
                let region = project(&s, 2)?.bounding_box()?.ok_or(Error::Infeasible)?;
                let (h, time) = timed(cfg, || hierarchy(&nil.system, &nil.safe_set, q))?;
                let sets = h.components.iter().map(|c| c.explicit()).collect::<Result<Vec<_>>>()?;
                row.time_s = time;
                row.implicit_empty = Some(h.union.is_empty());
                row.volume = Some(union_volume(&sets, &region, cfg.samples, cfg.seed));
                Ok(())
            })
        })
        .collect()
}

fn scal_sizes(n_max: usize) -> Vec<usize> {
    let mut sizes: Vec<usize> = std::iter::successors(Some(2usize), |n| Some(n * 2)).take_while(|n| *n <= n_max).collect();
    if n_max >= 2 && sizes.last() != Some(&n_max) {
        sizes.push(n_max);
    }
    sizes
}

/// Implicit synthesis timings on Brunovsky chains. Runs sequentially so the
/// timings are not skewed by sibling workers.
fn scal_suite(cfg: &BenchConfig) -> Vec<ReportRow> {
    let spec = (4, 2);
    let mut rows = Vec::new();
    for n in scal_sizes(cfg.n_max) {
        let mut shapes = vec![2 * n];
        if n <= cfg.n_square_max && n * n != 2 * n {
            shapes.push(n * n);
        }
        for k in shapes {
            for i in 0..cfg.instances {
                let row = ReportRow { k: Some(k), tau: Some(spec.0), lambda: Some(spec.1), ..ReportRow::new(Suite::Scal, i, n) };
                rows.push(record(row, |row| {
                    let sxu = random_safe_set(cfg.seed ^ k as u64, n, k, i)?;
                    let sys = brunovsky(n);
                    let lasso = LassoSpec::lasso(spec.0, spec.1, 1)?;
                    let (ir, time) = timed(cfg, || implicit_rcis(&sys, &sxu, &lasso))?;
                    row.time_s = time;
                    row.rows = Some(ir.polytope.nrows());
                    row.implicit_empty = Some(ir.empty);
                    Ok(())
                }));
            }
        }
    }
    rows
}

/// `vol(explicit C_(4,2)) / vol(C_max)` on undisturbed Brunovsky chains, n = 2..4.
fn volume_suite(cfg: &BenchConfig) -> Vec<ReportRow> {
    let spec = (4, 2);
    let tasks: Vec<(usize, usize)> = (2..=4).flat_map(|n| (0..cfg.instances).map(move |i| (n, i))).collect();
    tasks
        .into_par_iter()
        .map(|(n, i)| {
            let row = ReportRow { k: Some(2 * n), tau: Some(spec.0), lambda: Some(spec.1), ..ReportRow::new(Suite::Volume, i, n) };
            record(row, |row| {
                let sxu = random_safe_set(cfg.seed, n, 2 * n, i)?;
                let sys = brunovsky(n);
                let ir = implicit_rcis(&sys, &sxu, &LassoSpec::lasso(spec.0, spec.1, 1)?)?;
                let ex = ir.explicit()?;
                let cmax = maximal_rcis(&sys, &sxu, DEFAULT_MAX_ITERS, CONTAINMENT_SLACK)?;
                row.implicit_empty = Some(ir.empty);
                row.cmax_empty = Some(cmax.set.is_empty()?);
                row.converged = Some(cmax.converged);
                row.rows = Some(ex.nrows());
                row.ratio = Some(mc_volume_ratio(&ex, &cmax.set, cfg.samples, cfg.seed)?);
                Ok(())
            })
        })
        .collect()
}

/// Fixed 4D instance whose disturbance bound grows until the nominal safe set empties.
pub fn sweep_instance(seed: u64) -> Result<HPolytope> {
    random_safe_set(seed, 4, 8, 0)
}

/// `w̄` grid from `step` upward, ending at the first value with an empty nominal safe set.
pub fn sweep_grid(sxu: &HPolytope, step: f64, cap: f64) -> Result<Vec<f64>> {
    let mut grid = Vec::new();
    let mut k = 1;
    loop {
        // Rounded so grid values print as typed.
        let wbar = (step * k as f64 * 1e9).round() / 1e9;
        if wbar > cap + 1e-12 {
            break;
        }
        grid.push(wbar);
        if nominal_problem(&brunovsky_disturbed(4, wbar), sxu)?.safe_set.is_empty()? {
            break;
        }
        k += 1;
    }
    Ok(grid)
}

fn sweep_suite(cfg: &BenchConfig) -> Vec<ReportRow> {
    let spec = (2, 2);
    let sxu = match sweep_instance(cfg.seed) {
        Ok(s) => s,
        Err(e) => return vec![ReportRow { error: Some(e.to_string()), ..ReportRow::new(Suite::Sweep, 0, 4) }],
    };
    let grid = match sweep_grid(&sxu, cfg.sweep_step, cfg.sweep_cap) {
        Ok(g) => g,
        Err(e) => return vec![ReportRow { error: Some(e.to_string()), ..ReportRow::new(Suite::Sweep, 0, 4) }],
    };
    grid.into_par_iter()
        .map(|wbar| {
            let row =
                ReportRow { k: Some(8), tau: Some(spec.0), lambda: Some(spec.1), wbar: Some(wbar), ..ReportRow::new(Suite::Sweep, 0, 4) };
            record(row, |row| sweep_row(cfg, &brunovsky_disturbed(4, wbar), &sxu, spec, row))
        })
        .collect()
}

fn sweep_row(cfg: &BenchConfig, sys: &LinearSystem, sxu: &HPolytope, spec: (usize, usize), row: &mut ReportRow) -> Result<()> {
    let nominal = nominal_problem(sys, sxu)?;
    let sbar_empty = nominal.safe_set.is_empty()?;
    row.sbar_empty = Some(sbar_empty);
    row.sbar_ratio = Some(if sbar_empty { 0.0 } else { mc_volume_ratio(&nominal.safe_set, sxu, cfg.samples, cfg.seed)? });
    row.fixed_point = Some(!sbar_empty && fixed_points(&nominal)?.exists);
    let ir = implicit_rcis(sys, sxu, &LassoSpec::lasso(spec.0, spec.1, 1)?)?;
    let cmax = maximal_rcis(sys, sxu, DEFAULT_MAX_ITERS, CONTAINMENT_SLACK)?;
    let cmax_empty = cmax.set.is_empty()?;
    row.implicit_empty = Some(ir.empty);
    row.cmax_empty = Some(cmax_empty);
    row.converged = Some(cmax.converged);
    row.ratio = match (cmax_empty, ir.empty) {
        (true, _) => None,
        (false, true) => Some(0.0),
        (false, false) => Some(mc_volume_ratio(&ir.explicit()?, &cmax.set, cfg.samples, cfg.seed)?),
    };
    Ok(())
}

pub const CONVERGE_TAUS: [usize; 5] = [0, 2, 4, 6, 8];

/// Hausdorff distance of explicit `C_(τ,2)` to the maximal CIS of the double integrator.
fn converge_suite(_cfg: &BenchConfig) -> Vec<ReportRow> {
    let (sys, s) = double_integrator();
    let base = ReportRow { lambda: Some(2), ..ReportRow::new(Suite::Converge, 0, 2) };
    match convergence_curve(&sys, &s, 2, &CONVERGE_TAUS) {
        Ok(c) => c
            .points
            .iter()
            .map(|(tau, d)| ReportRow {
                tau: Some(*tau),
                distance: Some(*d),
                fixed_point: Some(c.fixed_point.interior),
                converged: Some(c.precondition_met),
                ..base.clone()
            })
            .collect(),
        Err(e) => vec![ReportRow { error: Some(e.to_string()), ..base }],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> BenchConfig {
        BenchConfig { samples: 2000, instances: 2, n_max: 8, n_square_max: 4, q_max: 3, timing: false, ..BenchConfig::default() }
    }

    #[test]
    fn suite_names_round_trip() {
        for s in [Suite::Hierarchy, Suite::Scal, Suite::Volume, Suite::Sweep, Suite::Converge] {
            assert_eq!(s.to_string().parse::<Suite>().unwrap(), s);
        }
        assert!("tables".parse::<Suite>().is_err());
    }

    #[test]
    fn significant_digits() {
        assert_eq!(sig3(0.0012345), 0.00123);
        assert_eq!(sig3(98765.0), 98800.0);
        assert_eq!(sig3(0.0), 0.0);
    }

    #[test]
    fn scal_sizes_include_the_cap() {
        assert_eq!(scal_sizes(50), vec![2, 4, 8, 16, 32, 50]);
        assert_eq!(scal_sizes(8), vec![2, 4, 8]);
    }

    #[test]
    fn csv_is_seeded_and_deterministic() {
        let cfg = quick();
        let render = || {
            let mut out = Vec::new();
            write_csv(&run(Suite::Volume, &cfg), cfg.seed, &mut out).unwrap();
            String::from_utf8(out).unwrap()
        };
        let a = render();
        assert_eq!(a, render());
        assert!(a.starts_with("# seed=0\nexperiment,instance,n,k,"));
        assert_eq!(a.lines().count(), 2 + 3 * cfg.instances);
    }

    #[test]
    fn hierarchy_column_is_monotone() {
        let rows = run(Suite::Hierarchy, &quick());
        let v: Vec<f64> = rows.iter().map(|r| r.volume.unwrap()).collect();
        assert!(v.windows(2).all(|w| w[0] <= w[1]), "{v:?}");
    }

    #[test]
    fn failures_are_recorded() {
        let row = record(ReportRow::new(Suite::Scal, 0, 1), |_| Err(Error::Infeasible));
        assert_eq!(row.error.as_deref(), Some("problem is infeasible"));
    }
}
