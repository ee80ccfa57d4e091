//! Grid sweeps over a Poincaré surface: sections, Lyapunov and P_R maps,
//! with a resumable per-point ledger and deterministic output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classical::{
    derive_seed, lyapunov_benettin, lyapunov_cloud, poincare_section, BenettinOptions,
    CloudOptions, Crossing, PoincareSurface, SectionOptions,
};
use crate::dynamics::pr_point;
use crate::error::{Error, Result};
use crate::maps::{MapGrid, MapRecord, PointStatus, ScalarMap};
use crate::model::ModelParams;
use crate::spectrum::EigenSystem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScanTask {
    /// Value: number of recorded crossings.
    Sections {
        n_crossings: usize,
        options: SectionOptions,
    },
    Lyapunov {
        options: BenettinOptions,
    },
    /// Cloud estimator; the per-point seed is derived from the job seed.
    LyapunovCloud {
        options: CloudOptions,
    },
    Pr,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanJob {
    pub params: ModelParams,
    /// Surface energy in units of J.
    pub energy_over_j: f64,
    pub grid: MapGrid,
    pub task: ScanTask,
    pub seed: u64,
}

impl ScanJob {
    pub fn surface(&self) -> PoincareSurface {
        PoincareSurface::scaled(self.params, self.energy_over_j)
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; 0 means the available parallelism.
    pub threads: usize,
    /// Continue from an existing ledger instead of starting over.
    pub resume: bool,
    /// Stop after this many newly completed points (leaves a partial ledger).
    pub stop_after: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PointResult {
    #[serde(rename = "i")]
    index: usize,
    #[serde(rename = "v")]
    value: Option<f64>,
    #[serde(rename = "s")]
    status: PointStatus,
    #[serde(rename = "c", default, skip_serializing_if = "Vec::is_empty")]
    crossings: Vec<[f64; 5]>,
}

#[derive(Debug, Clone)]
pub struct ScanOutcome {
    pub map: ScalarMap,
    /// Crossings per grid point (sections task only).
    pub crossings: Vec<Vec<Crossing>>,
    pub complete: bool,
    pub computed_now: usize,
    /// Set when the surface is empty at the requested energy.
    pub diagnostic: Option<String>,
}

pub const LEDGER_FILE: &str = "ledger.jsonl";
pub const MAP_FILE: &str = "map.csv";
pub const SECTIONS_FILE: &str = "sections.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

fn compute_point(
    job: &ScanJob,
    surface: &PoincareSurface,
    es: Option<&EigenSystem>,
    index: usize,
) -> PointResult {
    let (phi, jt) = job.grid.coords(index);
    let missing = |status| PointResult {
        index,
        value: None,
        status,
        crossings: Vec::new(),
    };
    let Some(pt) = surface.point(phi, jt) else {
        return missing(PointStatus::OffShell);
    };
    let classify = |e: Error| {
        log::warn!("scan point {index} (phi = {phi:.4}, jz/J = {jt:.4}): {e}");
        match e {
            Error::StepBudget { .. } => missing(PointStatus::Timeout),
            _ => missing(PointStatus::Failed),
        }
    };
    let ok = |v: f64| PointResult {
        index,
        value: Some(v),
        status: PointStatus::Ok,
        crossings: Vec::new(),
    };
    match &job.task {
        ScanTask::Lyapunov { options } => match lyapunov_benettin(&pt, &job.params, options) {
            Ok(est) => ok(est.lambda),
            Err(e) => classify(e),
        },
        ScanTask::LyapunovCloud { options } => {
            let opts = CloudOptions {
                seed: derive_seed(job.seed, index as u64),
                ..*options
            };
            match lyapunov_cloud(&pt, &job.params, &opts) {
                Ok(est) => ok(est.lambda),
                Err(e) => classify(e),
            }
        }
        ScanTask::Sections {
            n_crossings,
            options,
        } => match poincare_section(&pt, *n_crossings, &job.params, options) {
            Ok(sec) => PointResult {
                crossings: sec
                    .crossings
                    .iter()
                    .map(|c| [c.t, c.phi, c.jz_tilde, c.q, c.p])
                    .collect(),
                ..ok(sec.crossings.len() as f64)
            },
            Err(e) => classify(e),
        },
        ScanTask::Pr => {
            let es = es.expect("checked before the scan starts");
            let r = pr_point(surface, &job.grid, es, index);
            PointResult {
                index,
                value: (r.status == PointStatus::Ok).then_some(r.value),
                status: r.status,
                crossings: Vec::new(),
            }
        }
    }
}

fn job_header(job: &ScanJob) -> Result<String> {
    Ok(serde_json::to_string(&serde_json::json!({ "job": job }))?)
}

/// Completed points from an existing ledger. A torn final line (from an
/// interrupted write) is dropped.
fn read_ledger(path: &Path, job: &ScanJob) -> Result<BTreeMap<usize, PointResult>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(f).lines();
    let header = match lines.next() {
        Some(line) => line.map_err(|e| Error::io(path, e))?,
        None => return Ok(BTreeMap::new()),
    };
    if header != job_header(job)? {
        return Err(Error::InvalidArgument(format!(
            "ledger {} belongs to a different job; remove it or run without resume",
            path.display()
        )));
    }
    let mut done = BTreeMap::new();
    for line in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        match serde_json::from_str::<PointResult>(&line) {
            Ok(r) if r.index < job.grid.len() => {
                done.insert(r.index, r);
            }
            _ => {
                log::warn!("ignoring malformed ledger line in {}", path.display());
                break;
            }
        }
    }
    Ok(done)
}

fn resolve_threads(n: usize) -> usize {
    if n > 0 {
        n
    } else {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    }
}

/// Run (or resume) a scan, writing the ledger, map CSV, section CSV and
/// manifest into `out_dir`. Work is split statically by grid row across
/// workers; results are assembled by index, so the artifacts do not depend
/// on scheduling.
pub fn run_scan(
    job: &ScanJob,
    es: Option<&EigenSystem>,
    out_dir: &Path,
    opts: &RunOptions,
) -> Result<ScanOutcome> {
    job.grid.validate()?;
    if matches!(job.task, ScanTask::Pr) {
        match es {
            None => {
                return Err(Error::InvalidArgument(
                    "the pr task needs an eigensystem; run the spectrum step first".into(),
                ))
            }
            Some(es) if es.params() != &job.params => {
                return Err(Error::InvalidArgument(
                    "eigensystem parameters differ from the scan job".into(),
                ))
            }
            _ => {}
        }
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let ledger_path = out_dir.join(LEDGER_FILE);
    let started = Instant::now();

    let mut done = if opts.resume && ledger_path.exists() {
        read_ledger(&ledger_path, job)?
    } else {
        BTreeMap::new()
    };
    // rewrite the ledger so that a torn tail never survives
    {
        let mut f = File::create(&ledger_path).map_err(|e| Error::io(&ledger_path, e))?;
        let mut text = job_header(job)?;
        text.push('\n');
        for r in done.values() {
            text.push_str(&serde_json::to_string(r)?);
            text.push('\n');
        }
        f.write_all(text.as_bytes())
            .map_err(|e| Error::io(&ledger_path, e))?;
    }
    if !done.is_empty() {
        log::info!(
            "resuming scan: {} of {} points already done",
            done.len(),
            job.grid.len()
        );
    }

    let surface = job.surface();
    let diagnostic = surface.is_empty().then(|| {
        let msg = format!(
            "energy {}J lies below the classical ground state; every grid point is off the shell",
            job.energy_over_j
        );
        log::warn!("{msg}");
        msg
    });

    let threads = resolve_threads(opts.threads);
    let n_jz = job.grid.n_jz;
    let n_phi = job.grid.n_phi;
    let stop = AtomicBool::new(false);
    let mut computed_now = 0usize;
    let mut ledger = OpenOptions::new()
        .append(true)
        .open(&ledger_path)
        .map_err(|e| Error::io(&ledger_path, e))?;
    let pending: Vec<bool> = (0..job.grid.len())
        .map(|i| !done.contains_key(&i))
        .collect();

    std::thread::scope(|scope| -> Result<()> {
        let (tx, rx) = mpsc::channel::<PointResult>();
        for w in 0..threads {
            let tx = tx.clone();
            let (surface, stop, pending) = (&surface, &stop, &pending);
            scope.spawn(move || {
                for row in (w..n_jz).step_by(threads) {
                    for col in 0..n_phi {
                        let index = row * n_phi + col;
                        if !pending[index] {
                            continue;
                        }
                        if stop.load(Ordering::Relaxed) {
                            return;
                        }
                        if tx.send(compute_point(job, surface, es, index)).is_err() {
                            return;
                        }
                    }
                }
            });
        }
        drop(tx);
        for r in rx {
            let mut line = serde_json::to_string(&r)?;
            line.push('\n');
            ledger
                .write_all(line.as_bytes())
                .map_err(|e| Error::io(&ledger_path, e))?;
            done.insert(r.index, r);
            computed_now += 1;
            if opts.stop_after.is_some_and(|n| computed_now >= n) {
                stop.store(true, Ordering::Relaxed);
                break;
            }
        }
        Ok(())
    })?;
    ledger.sync_all().map_err(|e| Error::io(&ledger_path, e))?;

    let complete = done.len() == job.grid.len();
    let records: Vec<MapRecord> = (0..job.grid.len())
        .map(|i| match done.get(&i) {
            Some(r) => match r.value {
                Some(v) => MapRecord {
                    value: v,
                    status: r.status,
                },
                None => MapRecord::missing(r.status),
            },
            None => MapRecord::missing(PointStatus::Failed),
        })
        .collect();
    let crossings: Vec<Vec<Crossing>> = (0..job.grid.len())
        .map(|i| {
            done.get(&i)
                .map(|r| {
                    r.crossings
                        .iter()
                        .map(|c| Crossing {
                            t: c[0],
                            phi: c[1],
                            jz_tilde: c[2],
                            q: c[3],
                            p: c[4],
                        })
                        .collect()
                })
                .unwrap_or_default()
        })
        .collect();
    let map = ScalarMap {
        grid: job.grid,
        records,
    };
    let outcome = ScanOutcome {
        map,
        crossings,
        complete,
        computed_now,
        diagnostic,
    };
    if complete {
        write_artifacts(
            job,
            &outcome,
            out_dir,
            started.elapsed().as_secs_f64(),
            threads,
        )?;
    } else {
        log::info!(
            "scan interrupted after {computed_now} new points; {} of {} done",
            done.len(),
            job.grid.len()
        );
    }
    Ok(outcome)
}

pub fn sections_csv(crossings: &[Vec<Crossing>], grid: &MapGrid) -> String {
    let mut s = String::from("point,phi0,jz_tilde0,t,phi,jz_tilde,q,p\n");
    for (i, list) in crossings.iter().enumerate() {
        let (phi0, jt0) = grid.coords(i);
        for c in list {
            let _ = writeln!(
                s,
                "{i},{phi0:.16e},{jt0:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                c.t, c.phi, c.jz_tilde, c.q, c.p
            );
        }
    }
    s
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn write_artifacts(
    job: &ScanJob,
    out: &ScanOutcome,
    dir: &Path,
    seconds: f64,
    threads: usize,
) -> Result<()> {
    let mut files = serde_json::Map::new();
    let mut put = |name: &str, text: String| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, &text).map_err(|e| Error::io(&path, e))?;
        files.insert(name.to_string(), sha256_hex(text.as_bytes()).into());
        Ok(())
    };
    put(MAP_FILE, out.map.to_csv())?;
    if matches!(job.task, ScanTask::Sections { .. }) {
        put(SECTIONS_FILE, sections_csv(&out.crossings, &job.grid))?;
    }
    let counts: serde_json::Map<String, serde_json::Value> = [
        PointStatus::Ok,
        PointStatus::OffShell,
        PointStatus::Failed,
        PointStatus::Timeout,
    ]
    .iter()
    .map(|s| (s.as_str().to_string(), out.map.count(*s).into()))
    .collect();
    let manifest = serde_json::json!({
        "job": job,
        "version": env!("CARGO_PKG_VERSION"),
        "files": files,
        "counts": counts,
        "diagnostic": out.diagnostic,
        "runtime_seconds": seconds,
        "threads": threads,
    });
    let path = dir.join(MANIFEST_FILE);
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
        .map_err(|e| Error::io(&path, e))
}

/// Paths of the artifacts a completed scan leaves in `dir`.
pub fn artifact_paths(dir: &Path) -> Vec<PathBuf> {
    [MAP_FILE, SECTIONS_FILE, MANIFEST_FILE]
        .iter()
        .map(|f| dir.join(f))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointHistogram {
    pub x_edges: Vec<f64>,
    pub y_edges: Vec<f64>,
    /// Row-major counts, rows along y.
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub spearman: f64,
    pub n: usize,
    /// True when one side has no rank variation (reported as 0).
    pub degenerate: bool,
    pub histogram: JointHistogram,
}

pub const HISTOGRAM_BINS: usize = 20;

/// Average ranks (1-based) with ties sharing their mean rank.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

fn edges(v: &[f64], bins: usize) -> Vec<f64> {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if lo.is_finite() && hi > lo {
        (lo, hi)
    } else {
        (0.0, 1.0)
    };
    (0..=bins)
        .map(|k| lo + (hi - lo) * k as f64 / bins as f64)
        .collect()
}

fn bin_of(edges: &[f64], x: f64) -> usize {
    let bins = edges.len() - 1;
    edges
        .partition_point(|&e| e <= x)
        .saturating_sub(1)
        .min(bins - 1)
}

/// Spearman rank correlation over points present in both maps, plus a joint
/// histogram of the raw values.
pub fn correlate_maps(a: &ScalarMap, b: &ScalarMap) -> Result<Correlation> {
    if a.grid != b.grid || a.records.len() != b.records.len() {
        return Err(Error::GridMismatch(format!(
            "{}x{} vs {}x{}",
            a.grid.n_phi, a.grid.n_jz, b.grid.n_phi, b.grid.n_jz
        )));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = (0..a.records.len())
        .filter_map(|i| Some((a.value(i)?, b.value(i)?)))
        .unzip();
    let (rho, degenerate) = match (xs.len() >= 2)
        .then(|| pearson(&ranks(&xs), &ranks(&ys)))
        .flatten()
    {
        Some(r) => (r, false),
        None => (0.0, true),
    };
    let (xe, ye) = (edges(&xs, HISTOGRAM_BINS), edges(&ys, HISTOGRAM_BINS));
    let mut counts = vec![0usize; HISTOGRAM_BINS * HISTOGRAM_BINS];
    for (x, y) in xs.iter().zip(&ys) {
        counts[bin_of(&ye, *y) * HISTOGRAM_BINS + bin_of(&xe, *x)] += 1;
    }
    Ok(Correlation {
        spearman: rho,
        n: xs.len(),
        degenerate,
        histogram: JointHistogram {
            x_edges: xe,
            y_edges: ye,
            counts,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(values: &[f64]) -> ScalarMap {
        ScalarMap {
            grid: MapGrid::new(values.len(), 1),
            records: values.iter().map(|&v| MapRecord::ok(v)).collect(),
        }
    }

    #[test]
    fn spearman_contract() {
        let a = map(&[0.3, 1.0, -2.0, 5.0, 4.0]);
        let self_corr = correlate_maps(&a, &a).unwrap();
        assert!((self_corr.spearman - 1.0).abs() < 1e-15);
        assert_eq!(self_corr.histogram.counts.iter().sum::<usize>(), 5);
        let c = correlate_maps(&a, &map(&[2.0; 5])).unwrap();
        assert_eq!(c.spearman, 0.0);
        assert!(c.degenerate);
        let rev = correlate_maps(&a, &map(&[-0.3, -1.0, 2.0, -5.0, -4.0])).unwrap();
        assert!((rev.spearman + 1.0).abs() < 1e-15);
        let other = ScalarMap {
            grid: MapGrid::new(5, 2),
            records: vec![MapRecord::ok(1.0); 10],
        };
        assert!(matches!(
            correlate_maps(&a, &other),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn tied_ranks_are_averaged() {
        assert_eq!(ranks(&[2.0, 1.0, 2.0, 3.0]), vec![2.5, 1.0, 2.5, 4.0]);
    }

    #[test]
    fn empty_shell_gives_empty_map() {
        let dir = tempfile::tempdir().unwrap();
        let job = ScanJob {
            params: ModelParams::new(1.0, 1.0, 1.0, 10.0).unwrap(),
            energy_over_j: -3.0,
            grid: MapGrid::new(4, 4),
            task: ScanTask::Lyapunov {
                options: BenettinOptions::default(),
            },
            seed: 1,
        };
        let out = run_scan(&job, None, dir.path(), &RunOptions::default()).unwrap();
        assert!(out.complete);
        assert!(out.diagnostic.is_some());
        assert_eq!(out.map.count(PointStatus::OffShell), 16);
        assert!(dir.path().join(MANIFEST_FILE).exists());
    }

    #[test]
    fn pr_task_requires_eigensystem() {
        let dir = tempfile::tempdir().unwrap();
        let job = ScanJob {
            params: ModelParams::new(1.0, 1.0, 1.0, 10.0).unwrap(),
            energy_over_j: -1.5,
            grid: MapGrid::new(4, 4),
            task: ScanTask::Pr,
            seed: 1,
        };
        assert!(run_scan(&job, None, dir.path(), &RunOptions::default()).is_err());
    }

    #[test]
    fn interrupted_scan_resumes_to_identical_output() {
        let job = ScanJob {
            params: ModelParams::new(1.0, 1.0, 1.0, 10.0).unwrap(),
            energy_over_j: -1.4,
            grid: MapGrid::new(5, 4),
            task: ScanTask::Lyapunov {
                options: BenettinOptions {
                    t_total: 50.0,
                    ..Default::default()
                },
            },
            seed: 3,
        };
        let full = tempfile::tempdir().unwrap();
        let opts = RunOptions {
            threads: 2,
            ..Default::default()
        };
        run_scan(&job, None, full.path(), &opts).unwrap();
        let part = tempfile::tempdir().unwrap();
        let stop = RunOptions {
            threads: 2,
            stop_after: Some(3),
            ..Default::default()
        };
        let first = run_scan(&job, None, part.path(), &stop).unwrap();
        assert!(!first.complete);
        let resume = RunOptions {
            threads: 1,
            resume: true,
            ..Default::default()
        };
        let second = run_scan(&job, None, part.path(), &resume).unwrap();
        assert!(second.complete);
        let a = std::fs::read(full.path().join(MAP_FILE)).unwrap();
        let b = std::fs::read(part.path().join(MAP_FILE)).unwrap();
        assert_eq!(a, b);
    }
}
