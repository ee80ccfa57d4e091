use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use sha2::{Digest, Sha256};

use dicke_core::analytic::{detect_sequences, sp_analytic, AnalyticOptions, SequenceSet};
use dicke_core::cache::{self, CacheKey};
use dicke_core::classical::PoincareSurface;
use dicke_core::coherent::{coherent_vector, phase_to_labels, spreading_contour, PhasePoint};
use dicke_core::config::{LyapunovMethodChoice, PhasePointSection, RunConfig, COARSE_GRID};
use dicke_core::dynamics::{
    decompose_with_threshold, equilibration_stats, hybrid_time_grid, survival_probability,
    Decomposition, EquilibrationOptions, SpOptions, DEFAULT_NORM_THRESHOLD,
};
use dicke_core::model::{build_basis, build_hamiltonian, ModelParams};
use dicke_core::plots;
use dicke_core::scan::{self, run_scan, RunOptions, ScanJob, ScanTask};
use dicke_core::spectrum::{
    convergence_against, diagonalize, diagonalize_window, EigenSystem, EnergyWindow,
};
use dicke_core::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "dicke",
    version,
    about = "Quantum and classical chaos diagnostics for the Dicke model"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Run configuration (TOML).
    #[arg(long, short = 'c', global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides io.output.
    #[arg(long, short = 'o', global = true)]
    output: Option<PathBuf>,
    /// Eigen-data cache directory; overrides io.cache_dir.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Global seed; overrides scan.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    plot: bool,
    /// Use the 40x40 grid for maps.
    #[arg(long, global = true)]
    coarse: bool,
    /// Continue interrupted scans from their ledgers.
    #[arg(long, global = true)]
    resume: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Diagonalize, store the eigen cache and check convergence.
    Spectrum {
        /// Larger truncation for the convergence check.
        #[arg(long)]
        check_n_max: Option<u32>,
        /// Skip the convergence check.
        #[arg(long)]
        no_check: bool,
    },
    /// Survival probability of a coherent state.
    Survival {
        #[command(flatten)]
        point: PointArgs,
        /// Fit Gaussian sequences and add the analytic curve.
        #[arg(long)]
        analytic: bool,
    },
    /// Poincaré sections from a grid of initial conditions.
    Poincare(MapArgs),
    /// Maximal Lyapunov exponent map.
    LyapunovMap {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, value_enum)]
        method: Option<Method>,
    },
    /// Participation ratio map (needs the eigen cache).
    PrMap(MapArgs),
    /// Spreading contour of a coherent state on the Poincaré surface.
    Contour {
        #[command(flatten)]
        point: PointArgs,
    },
    /// Detect and fit Gaussian sequences in a decomposition.
    FitSequences {
        #[command(flatten)]
        point: PointArgs,
    },
}

#[derive(Args, Debug, Clone, Copy)]
struct PointArgs {
    /// Energy in units of J.
    #[arg(long, allow_hyphen_values = true)]
    energy: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    phi: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    jz: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct MapArgs {
    /// Surface energies in units of J; overrides surface.energies.
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
    energy: Vec<f64>,
}

#[derive(clap::ValueEnum, Debug, Clone, Copy)]
enum Method {
    Benettin,
    Cloud,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

struct Ctx {
    cfg: RunConfig,
    params: ModelParams,
    plot: bool,
    resume: bool,
    threads: usize,
    command: &'static str,
}

fn run(cli: Cli) -> Result<u8> {
    let g = cli.global;
    let path = g
        .config
        .ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut cfg = RunConfig::load(&path)?;
    if let Some(o) = g.output {
        cfg.io.output = o;
    }
    if let Some(c) = g.cache_dir {
        cfg.io.cache_dir = c;
    }
    if let Some(s) = g.seed {
        cfg.scan.seed = s;
    }
    if g.coarse {
        cfg.scan.n_phi = COARSE_GRID;
        cfg.scan.n_jz = COARSE_GRID;
    }
    cfg.io.plot |= g.plot;
    let threads = g.threads.unwrap_or(0);
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    }
    let command = match &cli.command {
        Command::Spectrum { .. } => "spectrum",
        Command::Survival { .. } => "survival",
        Command::Poincare(_) => "poincare",
        Command::LyapunovMap { .. } => "lyapunov-map",
        Command::PrMap(_) => "pr-map",
        Command::Contour { .. } => "contour",
        Command::FitSequences { .. } => "fit-sequences",
    };
    match &cli.command {
        Command::Survival { point, .. }
        | Command::Contour { point }
        | Command::FitSequences { point } => apply_point(&mut cfg, point)?,
        Command::Poincare(m) | Command::LyapunovMap { map: m, .. } | Command::PrMap(m)
            if !m.energy.is_empty() =>
        {
            cfg.surface = Some(dicke_core::config::SurfaceSection {
                energies: m.energy.clone(),
            })
        }
        _ => {}
    }
    if let Command::LyapunovMap {
        method: Some(m), ..
    } = cli.command
    {
        cfg.scan.method = match m {
            Method::Benettin => LyapunovMethodChoice::Benettin,
            Method::Cloud => LyapunovMethodChoice::Cloud,
        };
    }
    cfg.validate()?;
    let ctx = Ctx {
        params: cfg.params()?,
        plot: cfg.io.plot,
        resume: g.resume,
        threads,
        command,
        cfg,
    };
    match cli.command {
        Command::Spectrum {
            check_n_max,
            no_check,
        } => cmd_spectrum(&ctx, check_n_max, no_check),
        Command::Survival { analytic, .. } => cmd_survival(&ctx, analytic),
        Command::Poincare(_) => cmd_maps(&ctx, Kind::Sections),
        Command::LyapunovMap { .. } => cmd_maps(&ctx, Kind::Lyapunov),
        Command::PrMap(_) => cmd_maps(&ctx, Kind::Pr),
        Command::Contour { .. } => cmd_contour(&ctx),
        Command::FitSequences { .. } => cmd_fit(&ctx),
    }
}

fn apply_point(cfg: &mut RunConfig, a: &PointArgs) -> Result<()> {
    let base = cfg.phase_point;
    let pick = |flag: Option<f64>, from: Option<f64>, name: &str| {
        flag.or(from)
            .ok_or_else(|| Error::Config(format!("missing phase_point.{name} (or --{name})")))
    };
    cfg.phase_point = Some(PhasePointSection {
        energy: pick(a.energy, base.map(|b| b.energy), "energy")?,
        phi: pick(a.phi, base.map(|b| b.phi), "phi")?,
        jz_tilde: pick(a.jz, base.map(|b| b.jz_tilde), "jz")?,
    });
    Ok(())
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn write(
    dir: &Path,
    name: &str,
    text: &str,
    files: &mut serde_json::Map<String, serde_json::Value>,
) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })?;
    files.insert(name.to_string(), sha256_hex(text.as_bytes()).into());
    Ok(())
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

/// Echo of the effective configuration next to the artifacts.
fn write_config_echo(ctx: &Ctx, dir: &Path) -> Result<()> {
    let text = toml::to_string(&ctx.cfg).map_err(|e| Error::Config(e.to_string()))?;
    let path = dir.join("config.toml");
    std::fs::write(&path, text).map_err(|e| Error::Io { path, source: e })
}

fn write_manifest(
    ctx: &Ctx,
    dir: &Path,
    files: serde_json::Map<String, serde_json::Value>,
    extra: serde_json::Value,
) -> Result<()> {
    write_config_echo(ctx, dir)?;
    let manifest = json!({
        "command": ctx.command,
        "version": env!("CARGO_PKG_VERSION"),
        "config": ctx.cfg,
        "seed": ctx.cfg.scan.seed,
        "files": files,
        "summary": extra,
    });
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest)? + "\n";
    std::fs::write(&path, text).map_err(|e| Error::Io { path, source: e })
}

fn cache_key(ctx: &Ctx) -> Result<CacheKey> {
    Ok(CacheKey::new(
        ctx.params,
        ctx.cfg.basis.n_max,
        ctx.cfg.window()?,
    ))
}

fn compute_spectrum(ctx: &Ctx) -> Result<EigenSystem> {
    let basis = build_basis(&ctx.params, ctx.cfg.basis.n_max as i64)?;
    let h = build_hamiltonian(&ctx.params, &basis)?;
    log::info!(
        "diagonalizing dim = {} (bandwidth {})",
        h.dim(),
        h.bandwidth()
    );
    match ctx.cfg.window()? {
        Some(w) => diagonalize_window(&h, w),
        None => diagonalize(&h),
    }
}

fn cached_spectrum(ctx: &Ctx) -> Result<EigenSystem> {
    let key = cache_key(ctx)?;
    let path = key.path_in(&ctx.cfg.io.cache_dir);
    if !path.exists() {
        return Err(Error::InvalidArgument(format!(
            "no eigen cache at {}; run `dicke spectrum` with the same config first",
            path.display()
        )));
    }
    log::info!("eigen cache hit: {}", path.display());
    cache::load(&path, &key)
}

fn cmd_spectrum(ctx: &Ctx, check_n_max: Option<u32>, no_check: bool) -> Result<u8> {
    let key = cache_key(ctx)?;
    let (es, hit) = cache::load_or_compute(&ctx.cfg.io.cache_dir, &key, || compute_spectrum(ctx))?;
    let j = ctx.params.j();
    let dir = ctx.cfg.io.output.join("spectrum");
    create_dir(&dir)?;
    let mut files = serde_json::Map::new();
    let mut csv = String::from("index,energy,e_over_j,stored\n");
    let stored = es.offset()..es.offset() + es.num_vectors();
    for (k, e) in es.all_energies().iter().enumerate() {
        csv.push_str(&format!(
            "{k},{e:.16e},{:.16e},{}\n",
            e / j,
            stored.contains(&k) as u8
        ));
    }
    write(&dir, "energies.csv", &csv, &mut files)?;

    let mut summary = json!({
        "dim": es.dim(),
        "stored_vectors": es.num_vectors(),
        "cache_hit": hit,
        "cache_file": key.path_in(&ctx.cfg.io.cache_dir),
        "ground_energy": es.all_energies().first(),
        "ground_e_over_j": es.all_energies().first().map(|e| e / j),
        "degenerate_pairs": es.degenerate_pairs().len(),
    });
    let spectrum = &ctx.cfg.spectrum;
    if let Some([lo, hi]) = spectrum.spacing_window {
        let w = EnergyWindow::scaled(lo, hi, &ctx.params)?;
        let stats = es.level_spacing_stats(w, &spectrum.spacing.unwrap_or_default())?;
        summary["mean_gap_ratio"] = json!(stats.mean_ratio);
        write(
            &dir,
            "spacing.json",
            &(serde_json::to_string_pretty(&stats)? + "\n"),
            &mut files,
        )?;
    }

    let mut code = 0;
    let check = if no_check {
        Some(0)
    } else {
        check_n_max.or(spectrum.check_n_max)
    };
    if check != Some(0) {
        let n_max = ctx.cfg.basis.n_max;
        let high = check.unwrap_or(n_max + (n_max / 10).max(20));
        let window = match (spectrum.check_window, es.window()) {
            (Some([lo, hi]), _) => EnergyWindow::scaled(lo, hi, &ctx.params)?,
            (None, Some(w)) => w,
            (None, None) => {
                let all = es.all_energies();
                EnergyWindow::new(all[0] - 1e-9, all[all.len() / 2])?
            }
        };
        log::info!("convergence check against n_max = {high}");
        let report =
            convergence_against(&es, high, window, spectrum.tolerances.unwrap_or_default())?;
        summary["convergence"] = json!({
            "n_max_high": high,
            "levels": report.levels.len(),
            "converged": report.converged_count,
            "converged_prefix": report.converged_prefix,
            "all_converged": report.all_converged(),
        });
        write(
            &dir,
            "convergence.json",
            &(serde_json::to_string_pretty(&report)? + "\n"),
            &mut files,
        )?;
        if report.all_converged() {
            log::info!("all {} requested levels converged", report.levels.len());
        } else {
            log::error!(
                "{} of {} levels converged (prefix {}); increase n_max",
                report.converged_count,
                report.levels.len(),
                report.converged_prefix
            );
            code = 2;
        }
    }
    write_manifest(ctx, &dir, files, summary)?;
    Ok(code)
}

struct Prepared {
    point: PhasePoint,
    section: PhasePointSection,
    decomposition: Decomposition,
}

fn prepare_state(ctx: &Ctx) -> Result<Prepared> {
    let section = ctx.cfg.phase_point.expect("phase point applied");
    let surface = PoincareSurface::scaled(ctx.params, section.energy);
    let point = surface
        .point(section.phi, section.jz_tilde)
        .ok_or_else(|| {
            Error::OffShell(format!(
                "(phi = {}, jz/J = {}) has no solution on the surface at E/J = {}",
                section.phi, section.jz_tilde, section.energy
            ))
        })?;
    let es = cached_spectrum(ctx)?;
    let cp = phase_to_labels(&point, &ctx.params)?;
    let cv = coherent_vector(&cp, &ctx.params, es.basis())?;
    let decomposition = decompose_with_threshold(&cv, &es, DEFAULT_NORM_THRESHOLD)?;
    log::info!(
        "P_R = {:.4}, <E>/J = {:.6}, captured {:.6}",
        decomposition.pr,
        decomposition.mean_energy / ctx.params.j(),
        decomposition.norm_captured
    );
    Ok(Prepared {
        point,
        section,
        decomposition,
    })
}

fn point_dir(ctx: &Ctx, sub: &str, s: &PhasePointSection) -> PathBuf {
    ctx.cfg.io.output.join(sub).join(format!(
        "e{:+.4}_phi{:.4}_jz{:+.4}",
        s.energy, s.phi, s.jz_tilde
    ))
}

fn decomposition_json(ctx: &Ctx, p: &Prepared) -> serde_json::Value {
    let d = &p.decomposition;
    let j = ctx.params.j();
    json!({
        "phase_point": {"q": p.point.q, "p": p.point.p, "jz": p.point.jz, "phi": p.point.phi},
        "energy_over_j": p.section.energy,
        "pr": d.pr,
        "mean_energy": d.mean_energy,
        "mean_e_over_j": d.mean_energy / j,
        "energy_width": d.energy_width(),
        "norm_captured": d.norm_captured,
        "expected_norm": d.expected_norm,
        "level_offset": d.level_offset,
        "degenerate_pairs": d.degenerate_pairs,
        "energies": d.energies,
        "e_over_j": d.energies.iter().map(|e| e / j).collect::<Vec<_>>(),
        "weights": d.weights,
    })
}

fn detect(ctx: &Ctx, d: &Decomposition) -> Result<SequenceSet> {
    detect_sequences(d, &ctx.cfg.fit)
}

fn cmd_survival(ctx: &Ctx, analytic: bool) -> Result<u8> {
    let prep = prepare_state(ctx)?;
    let d = &prep.decomposition;
    let dir = point_dir(ctx, "survival", &prep.section);
    create_dir(&dir)?;
    let mut files = serde_json::Map::new();
    let time = &ctx.cfg.time;
    let times = hybrid_time_grid(time.t_max, time.n_points)?;
    let opts = SpOptions {
        allow_degenerate: time.allow_degenerate,
        ..Default::default()
    };
    let series = survival_probability(d, &times, &opts)?;
    let stats = equilibration_stats(
        &series,
        d,
        &EquilibrationOptions {
            decay_multiple: time.decay_multiple,
            window_start: time.window_start,
            ..Default::default()
        },
    )
    .ok();
    write(&dir, "sp.csv", &series.to_csv(), &mut files)?;
    let mut decomp = decomposition_json(ctx, &prep);
    decomp["equilibration"] = json!(stats);
    write(
        &dir,
        "decomposition.json",
        &(serde_json::to_string_pretty(&decomp)? + "\n"),
        &mut files,
    )?;

    let mut code = 0;
    let mut summary = json!({"pr": d.pr, "plateau": d.plateau(), "equilibration": stats});
    let mut analytic_csv = None;
    if analytic {
        match detect(ctx, d) {
            Ok(ss) => {
                let curve = sp_analytic(
                    &ss,
                    &times,
                    &AnalyticOptions {
                        min_r_squared: ctx.cfg.fit.min_r_squared,
                    },
                )?;
                write(
                    &dir,
                    "analytic.csv",
                    &curve.to_csv(Some(&series.sp)),
                    &mut files,
                )?;
                write(
                    &dir,
                    "sequences.json",
                    &(serde_json::to_string_pretty(&ss.report_json())? + "\n"),
                    &mut files,
                )?;
                summary["sequences"] = json!(ss.sequences.len());
                analytic_csv = Some(dir.join("analytic.csv"));
            }
            Err(e @ Error::Unstructured(_)) => {
                log::warn!("{e}; only the numeric survival probability was written");
                summary["analytic"] = json!(e.to_string());
                code = 3;
            }
            Err(e) => return Err(e),
        }
    }
    if ctx.plot {
        plots::plot_survival(
            &dir.join("sp.csv"),
            analytic_csv.as_deref(),
            &dir.join("sp.svg"),
        )?;
    }
    write_manifest(ctx, &dir, files, summary)?;
    log::info!("wrote {}", dir.display());
    Ok(code)
}

fn cmd_fit(ctx: &Ctx) -> Result<u8> {
    let prep = prepare_state(ctx)?;
    let d = &prep.decomposition;
    let dir = point_dir(ctx, "sequences", &prep.section);
    create_dir(&dir)?;
    let mut files = serde_json::Map::new();
    write(
        &dir,
        "decomposition.json",
        &(serde_json::to_string_pretty(&decomposition_json(ctx, &prep))? + "\n"),
        &mut files,
    )?;
    let (code, summary) = match detect(ctx, d) {
        Ok(ss) => {
            let mut owner = vec![-1i64; d.len()];
            for (s, seq) in ss.sequences.iter().enumerate() {
                for &m in &seq.members {
                    owner[m] = s as i64;
                }
            }
            let j = ctx.params.j();
            let mut csv = String::from("energy,e_over_j,weight,sequence,envelope\n");
            for (k, (e, w)) in d.energies.iter().zip(&d.weights).enumerate() {
                let env = usize::try_from(owner[k])
                    .map(|s| ss.sequences[s].envelope(*e))
                    .unwrap_or(f64::NAN);
                csv.push_str(&format!(
                    "{e:.16e},{:.16e},{w:.16e},{},{env:.16e}\n",
                    e / j,
                    owner[k]
                ));
            }
            write(&dir, "components.csv", &csv, &mut files)?;
            let report = ss.report_json();
            write(
                &dir,
                "sequences.json",
                &(serde_json::to_string_pretty(&report)? + "\n"),
                &mut files,
            )?;
            if ctx.plot {
                plots::plot_scatter(
                    &dir.join("components.csv"),
                    "e_over_j",
                    "weight",
                    &dir.join("components.svg"),
                    "components",
                )?;
            }
            (
                0,
                json!({"sequences": ss.sequences.len(), "residual_weight": ss.residual_weight}),
            )
        }
        Err(e @ Error::Unstructured(_)) => {
            log::warn!("{e}");
            (3, json!({"unstructured": e.to_string()}))
        }
        Err(e) => return Err(e),
    };
    write_manifest(ctx, &dir, files, summary)?;
    Ok(code)
}

fn cmd_contour(ctx: &Ctx) -> Result<u8> {
    let section = ctx.cfg.phase_point.expect("phase point applied");
    let surface = PoincareSurface::scaled(ctx.params, section.energy);
    let center = surface
        .point(section.phi, section.jz_tilde)
        .ok_or_else(|| Error::OffShell(format!("no surface point at E/J = {}", section.energy)))?;
    let contour = spreading_contour(&center, &surface, &ctx.cfg.contour)?;
    let dir = point_dir(ctx, "contour", &section);
    create_dir(&dir)?;
    let mut files = serde_json::Map::new();
    write(&dir, "contour.csv", &contour.to_csv(), &mut files)?;
    if ctx.plot {
        plots::plot_scatter(
            &dir.join("contour.csv"),
            "phi",
            "jz_tilde",
            &dir.join("contour.svg"),
            "spreading contour",
        )?;
    }
    write_manifest(
        ctx,
        &dir,
        files,
        json!({"area": contour.area, "clipped": contour.clipped}),
    )?;
    Ok(0)
}

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Sections,
    Lyapunov,
    Pr,
}

fn cmd_maps(ctx: &Ctx, kind: Kind) -> Result<u8> {
    let energies = ctx
        .cfg
        .surface
        .as_ref()
        .map(|s| s.energies.clone())
        .filter(|e| !e.is_empty())
        .ok_or_else(|| Error::Config("missing surface.energies (or --energy)".into()))?;
    let sc = &ctx.cfg.scan;
    let (task, sub, title) = match kind {
        Kind::Sections => (
            ScanTask::Sections {
                n_crossings: sc.n_crossings,
                options: sc.sections,
            },
            "poincare",
            "crossings",
        ),
        Kind::Lyapunov => match sc.method {
            LyapunovMethodChoice::Benettin => (
                ScanTask::Lyapunov {
                    options: sc.benettin,
                },
                "lyapunov",
                "lambda",
            ),
            LyapunovMethodChoice::Cloud => (
                ScanTask::LyapunovCloud { options: sc.cloud },
                "lyapunov",
                "lambda",
            ),
        },
        Kind::Pr => (ScanTask::Pr, "pr", "P_R"),
    };
    let es = if kind == Kind::Pr {
        Some(cached_spectrum(ctx)?)
    } else {
        None
    };
    let opts = RunOptions {
        threads: ctx.threads,
        resume: ctx.resume,
        stop_after: None,
    };
    for e in energies {
        let job = ScanJob {
            params: ctx.params,
            energy_over_j: e,
            grid: sc.grid(),
            task,
            seed: sc.seed,
        };
        let dir = ctx.cfg.io.output.join(sub).join(format!("e{e:+.4}"));
        log::info!(
            "{} map at E/J = {e} on {}x{}",
            sub,
            job.grid.n_phi,
            job.grid.n_jz
        );
        let outcome = run_scan(&job, es.as_ref(), &dir, &opts)?;
        write_config_echo(ctx, &dir)?;
        if let Some(d) = &outcome.diagnostic {
            log::warn!("{d}");
        }
        log::info!(
            "E/J = {e}: {} points on the shell, median {}",
            outcome.map.count(dicke_core::maps::PointStatus::Ok),
            outcome
                .map
                .median()
                .map_or("n/a".into(), |m| format!("{m:.5}"))
        );
        if ctx.plot {
            let map_csv = dir.join(scan::MAP_FILE);
            plots::plot_heatmap(
                &map_csv,
                &dir.join("map.svg"),
                &format!("{title}, E/J = {e}"),
            )?;
            if kind == Kind::Sections {
                plots::plot_scatter(
                    &dir.join(scan::SECTIONS_FILE),
                    "phi",
                    "jz_tilde",
                    &dir.join("sections.svg"),
                    &format!("Poincare section, E/J = {e}"),
                )?;
            }
        }
    }
    Ok(0)
}
