//! Eigenbasis decomposition of coherent states, participation ratio,
//! survival probability and its equilibration.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::PoincareSurface;
use crate::coherent::{coherent_vector, phase_to_labels_allow_pole, CoherentVector};
use crate::error::{Error, Result};
use crate::maps::{MapGrid, MapRecord, PointStatus, ScalarMap};
use crate::spectrum::{EigenSystem, DEGENERACY_TOL};

/// Minimum fraction of the sector weight that the eigenbasis must capture.
pub const DEFAULT_NORM_THRESHOLD: f64 = 0.99;

/// Weights |c_k|² of a state over eigenlevels, renormalized to unit sum.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Decomposition {
    pub weights: Vec<f64>,
    pub energies: Vec<f64>,
    pub mean_energy: f64,
    pub pr: f64,
    /// Σ|c_k|² before renormalization.
    pub norm_captured: f64,
    /// Weight of the state in the parity sector (1 for synthetic input).
    pub expected_norm: f64,
    /// Index of `energies[0]` in the full spectrum.
    pub level_offset: usize,
    /// Adjacent levels closer than the degeneracy tolerance.
    pub degenerate_pairs: usize,
}

impl Decomposition {
    /// Build from raw (unnormalized) weights over ascending energies.
    pub fn from_weights(energies: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if energies.len() != weights.len() || energies.is_empty() {
            return Err(Error::InvalidArgument(
                "energies and weights must be non-empty and of equal length".into(),
            ));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidArgument(
                "weights must be finite and non-negative".into(),
            ));
        }
        if energies.windows(2).any(|e| e[1] < e[0]) {
            return Err(Error::InvalidArgument("energies must be ascending".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidArgument("weights sum to zero".into()));
        }
        let scale = energies.iter().fold(1.0f64, |m, e| m.max(e.abs()));
        let degenerate_pairs = energies
            .windows(2)
            .zip(weights.windows(2))
            .filter(|(e, w)| e[1] - e[0] < DEGENERACY_TOL * scale && w[0] > 0.0 && w[1] > 0.0)
            .count();
        Ok(Self::assemble(
            energies,
            weights,
            total,
            1.0,
            0,
            degenerate_pairs,
        ))
    }

    fn assemble(
        energies: Vec<f64>,
        mut weights: Vec<f64>,
        norm_captured: f64,
        expected_norm: f64,
        level_offset: usize,
        degenerate_pairs: usize,
    ) -> Self {
        weights.iter_mut().for_each(|w| *w /= norm_captured);
        let mean_energy = weights.iter().zip(&energies).map(|(w, e)| w * e).sum();
        let ipr: f64 = weights.iter().map(|w| w * w).sum();
        Self {
            weights,
            energies,
            mean_energy,
            pr: 1.0 / ipr,
            norm_captured,
            expected_norm,
            level_offset,
            degenerate_pairs,
        }
    }

    /// Energy standard deviation of the distribution.
    pub fn energy_width(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.energies)
            .map(|(w, e)| w * (e - self.mean_energy).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Gaussian estimate of the initial decay time, 1/σ_E.
    pub fn decay_time(&self) -> f64 {
        1.0 / self.energy_width()
    }

    pub fn plateau(&self) -> f64 {
        1.0 / self.pr
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Complex amplitudes ⟨E_k|ψ⟩ over the stored eigenvectors.
pub fn amplitudes(cv: &CoherentVector, es: &EigenSystem) -> Result<Vec<Complex64>> {
    let b = es.basis();
    if cv.coefficients.len() != es.dim()
        || cv.n_max != b.n_max()
        || cv.two_j != b.two_j()
        || cv.parity != b.parity()
    {
        return Err(Error::InvalidArgument(
            "coherent vector and eigensystem were built on different bases".into(),
        ));
    }
    Ok((0..es.num_vectors())
        .map(|k| {
            let v = es.vector(k);
            let (mut re, mut im) = (0.0, 0.0);
            for (x, c) in v.iter().zip(&cv.coefficients) {
                re += x * c.re;
                im += x * c.im;
            }
            Complex64::new(re, im)
        })
        .collect())
}

pub fn decompose(cv: &CoherentVector, es: &EigenSystem) -> Result<Decomposition> {
    decompose_with_threshold(cv, es, DEFAULT_NORM_THRESHOLD)
}

/// Decompose and renormalize; fails when less than `threshold` of the
/// sector weight is captured by the stored eigenvectors.
pub fn decompose_with_threshold(
    cv: &CoherentVector,
    es: &EigenSystem,
    threshold: f64,
) -> Result<Decomposition> {
    let amps = amplitudes(cv, es)?;
    let weights: Vec<f64> = amps.iter().map(|c| c.norm_sqr()).collect();
    let captured: f64 = weights.iter().sum();
    let fraction = captured / cv.expected_norm;
    if !(fraction >= threshold) {
        return Err(Error::Truncation {
            captured: fraction,
            threshold,
        });
    }
    log::debug!(
        "decomposition captured {captured:.12} (sector weight {:.12})",
        cv.expected_norm
    );
    let tol = DEGENERACY_TOL * es.norm_bound().max(1.0);
    let degenerate_pairs = es
        .energies()
        .windows(2)
        .zip(weights.windows(2))
        .filter(|(e, w)| e[1] - e[0] < tol && w[0] > 0.0 && w[1] > 0.0)
        .count();
    Ok(Decomposition::assemble(
        es.energies().to_vec(),
        weights,
        captured,
        cv.expected_norm,
        es.offset(),
        degenerate_pairs,
    ))
}

/// Survival probability on a time grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SPSeries {
    pub times: Vec<f64>,
    pub sp: Vec<f64>,
    /// 1/P_R reference.
    pub plateau: f64,
}

impl SPSeries {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,sp,plateau\n");
        for (t, v) in self.times.iter().zip(&self.sp) {
            let _ = writeln!(s, "{t:.16e},{v:.16e},{:.16e}", self.plateau);
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpOptions {
    /// Evaluate even when degenerate levels are flagged.
    pub allow_degenerate: bool,
    /// Components below this fraction of the largest weight are dropped.
    pub drop_below: f64,
}

impl Default for SpOptions {
    fn default() -> Self {
        Self {
            allow_degenerate: false,
            drop_below: 1e-14,
        }
    }
}

pub(crate) fn check_grid(times: &[f64]) -> Result<()> {
    if let Some(i) = times.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(Error::TimeGridNotIncreasing { index: i + 1 });
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidArgument("non-finite time".into()));
    }
    Ok(())
}

/// SP(t) = |Σ_k w_k e^(−i E_k t)|², with energies measured from the mean.
pub fn survival_probability(
    d: &Decomposition,
    times: &[f64],
    opts: &SpOptions,
) -> Result<SPSeries> {
    check_grid(times)?;
    if d.degenerate_pairs > 0 && !opts.allow_degenerate {
        return Err(Error::Degenerate {
            count: d.degenerate_pairs,
        });
    }
    let w_max = d.weights.iter().fold(0.0f64, |m, &w| m.max(w));
    let kept: Vec<(f64, f64)> = d
        .weights
        .iter()
        .zip(&d.energies)
        .filter(|(w, _)| **w >= opts.drop_below * w_max)
        .map(|(w, e)| (*w, e - d.mean_energy))
        .collect();
    let dropped = 1.0 - kept.iter().map(|p| p.0).sum::<f64>();
    if dropped > 0.0 {
        log::debug!("survival probability: dropped weight {dropped:.3e}");
    }
    let e_max = kept.iter().fold(0.0f64, |m, p| m.max(p.1.abs()));
    let t_max = times.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    if t_max * e_max >= 2f64.powi(53) {
        return Err(Error::InvalidArgument(format!(
            "phase t * |E| = {:e} exceeds double precision range",
            t_max * e_max
        )));
    }
    let sp = times
        .par_iter()
        .map(|&t| {
            let (mut re, mut im) = (0.0, 0.0);
            for &(w, e) in &kept {
                let (s, c) = (e * t).sin_cos();
                re += w * c;
                im -= w * s;
            }
            re * re + im * im
        })
        .collect();
    Ok(SPSeries {
        times: times.to_vec(),
        sp,
        plateau: d.plateau(),
    })
}

/// Infinite-time average of SP: Σ over degenerate groups of (Σ w)²; equals
/// 1/P_R when no level is degenerate.
pub fn infinite_time_average(d: &Decomposition) -> f64 {
    let scale = d.energies.iter().fold(1.0f64, |m, e| m.max(e.abs()));
    let tol = DEGENERACY_TOL * scale;
    let mut total = 0.0;
    let mut group = d.weights[0];
    for k in 1..d.len() {
        if d.energies[k] - d.energies[k - 1] < tol {
            group += d.weights[k];
        } else {
            total += group * group;
            group = d.weights[k];
        }
    }
    total + group * group
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibrationOptions {
    /// The averaging window starts at this multiple of the decay time.
    pub decay_multiple: f64,
    /// Explicit window start; overrides `decay_multiple`.
    pub window_start: Option<f64>,
    pub min_points: usize,
}

impl Default for EquilibrationOptions {
    fn default() -> Self {
        Self {
            decay_multiple: 10.0,
            window_start: None,
            min_points: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibrationStats {
    pub window_start: f64,
    pub window_end: f64,
    pub n_points: usize,
    pub time_average: f64,
    pub rms_fluctuation: f64,
    /// time_average · P_R.
    pub ratio_to_plateau: f64,
    /// rms_fluctuation · P_R.
    pub rms_to_plateau: f64,
}

/// Time average and rms of SP over the late window (trapezoid rule).
pub fn equilibration_stats(
    series: &SPSeries,
    d: &Decomposition,
    opts: &EquilibrationOptions,
) -> Result<EquilibrationStats> {
    let start = opts
        .window_start
        .unwrap_or(opts.decay_multiple * d.decay_time());
    let first = series.times.partition_point(|&t| t < start);
    let (t, v) = (&series.times[first..], &series.sp[first..]);
    if t.len() < opts.min_points.max(2) {
        return Err(Error::InvalidArgument(format!(
            "equilibration window [{start}, ..] holds {} grid points, need {}",
            t.len(),
            opts.min_points
        )));
    }
    let span = t[t.len() - 1] - t[0];
    let avg = |f: &dyn Fn(f64) -> f64| {
        t.windows(2)
            .zip(v.windows(2))
            .map(|(tt, vv)| 0.5 * (tt[1] - tt[0]) * (f(vv[0]) + f(vv[1])))
            .sum::<f64>()
            / span
    };
    let mean = avg(&|x| x);
    let var = avg(&|x| (x - mean) * (x - mean));
    let rms = var.max(0.0).sqrt();
    Ok(EquilibrationStats {
        window_start: t[0],
        window_end: t[t.len() - 1],
        n_points: t.len(),
        time_average: mean,
        rms_fluctuation: rms,
        ratio_to_plateau: mean * d.pr,
        rms_to_plateau: rms * d.pr,
    })
}

/// Log-then-linear grid: t = 0, `n_points / 10` logarithmic points up to
/// `t_switch`, then uniform spacing to `t_max`.
pub fn hybrid_time_grid(t_max: f64, n_points: usize) -> Result<Vec<f64>> {
    if !(t_max > 0.0) || n_points < 20 {
        return Err(Error::InvalidArgument(
            "hybrid grid needs t_max > 0 and at least 20 points".into(),
        ));
    }
    let n_log = n_points / 10;
    let n_lin = n_points - 1 - n_log;
    let t_switch = (t_max / 10.0).min(1.0);
    let t_lo = t_switch * 1e-3;
    let mut out = Vec::with_capacity(n_points);
    out.push(0.0);
    for i in 0..n_log {
        let f = i as f64 / n_log as f64;
        out.push(t_lo * (t_switch / t_lo).powf(f));
    }
    for i in 0..n_lin {
        out.push(t_switch + (t_max - t_switch) * i as f64 / (n_lin - 1) as f64);
    }
    Ok(out)
}

pub const DEFAULT_T_MAX: f64 = 500.0;
pub const DEFAULT_N_TIMES: usize = 20_000;

/// Participation ratio of the coherent state centred on every grid point of
/// the surface. Off-shell points are marked missing; points whose
/// decomposition is truncated are marked failed.
pub fn pr_map(surface: &PoincareSurface, grid: &MapGrid, es: &EigenSystem) -> Result<ScalarMap> {
    grid.validate()?;
    if surface.params() != es.params() {
        return Err(Error::InvalidArgument(
            "surface and eigensystem parameters differ".into(),
        ));
    }
    if surface.is_empty() {
        return Err(Error::OffShell(format!(
            "energy {} lies below the classical ground state",
            surface.energy()
        )));
    }
    let records = (0..grid.len())
        .into_par_iter()
        .map(|i| pr_point(surface, grid, es, i))
        .collect();
    Ok(ScalarMap {
        grid: *grid,
        records,
    })
}

pub(crate) fn pr_point(
    surface: &PoincareSurface,
    grid: &MapGrid,
    es: &EigenSystem,
    index: usize,
) -> MapRecord {
    let (phi, jt) = grid.coords(index);
    let Some(pt) = surface.point(phi, jt) else {
        return MapRecord::missing(PointStatus::OffShell);
    };
    let result = phase_to_labels_allow_pole(&pt, es.params())
        .and_then(|cp| coherent_vector(&cp, es.params(), es.basis()))
        .and_then(|cv| decompose(&cv, es));
    match result {
        Ok(d) => MapRecord::ok(d.pr),
        Err(e) => {
            log::warn!("pr map point {index} (phi = {phi:.4}, jz/J = {jt:.4}): {e}");
            MapRecord::missing(PointStatus::Failed)
        }
    }
}
