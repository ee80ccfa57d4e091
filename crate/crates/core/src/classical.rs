//! Classical limit: Hamiltonian, equations of motion, Poincaré sections on
//! p = 0 (upper branch) and maximal Lyapunov exponents.
//!
//! Trajectories are integrated in scaled Cartesian variables
//! `u = j / J`, `Q = q / √J`, `P = p / √J`, which have no coordinate
//! singularity at the poles of the Bloch sphere. In these variables the
//! flow is independent of J at fixed E/J.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::coherent::PhasePoint;
use crate::error::{Error, Result};
use crate::model::{ground_state_energy_classical, ModelParams};
use crate::ode::{Dop853, OdeOptions};

/// Chaos threshold on the maximal Lyapunov exponent.
pub const LYAPUNOV_CUTOFF: f64 = 0.004;

/// Classical energy of a phase point.
pub fn hcl(pt: &PhasePoint, params: &ModelParams) -> f64 {
    let j = params.j();
    let x = (pt.jz / j).clamp(-1.0, 1.0);
    let s = (1.0 - x * x).max(0.0).sqrt();
    0.5 * params.omega() * (pt.p * pt.p + pt.q * pt.q)
        + params.omega0() * pt.jz
        + 2.0 * params.gamma() * j.sqrt() * s * pt.q * pt.phi.cos()
}

/// Time derivatives `(dφ/dt, djz/dt, dq/dt, dp/dt)` in canonical variables.
pub fn hamilton_rhs(pt: &PhasePoint, params: &ModelParams) -> Result<[f64; 4]> {
    let j = params.j();
    let x = pt.jz / j;
    if x.abs() > 1.0 - 1e-10 {
        return Err(Error::Pole(format!(
            "jz/J = {x} is within 1e-10 of a pole; integrate in the Cartesian chart"
        )));
    }
    let s = (1.0 - x * x).sqrt();
    let g = 2.0 * params.gamma() * j.sqrt();
    let (sin, cos) = pt.phi.sin_cos();
    Ok([
        params.omega0() - g * pt.q * cos * x / (j * s),
        g * s * pt.q * sin,
        params.omega() * pt.p,
        -params.omega() * pt.q - g * s * cos,
    ])
}

/// Scaled Cartesian state `[ux, uy, uz, Q, P]`.
pub type CartState = [f64; 5];

pub fn to_cartesian(pt: &PhasePoint, params: &ModelParams) -> CartState {
    let j = params.j();
    let x = (pt.jz / j).clamp(-1.0, 1.0);
    let s = (1.0 - x * x).max(0.0).sqrt();
    let (sin, cos) = pt.phi.sin_cos();
    let r = j.sqrt();
    [s * cos, s * sin, x, pt.q / r, pt.p / r]
}

pub fn from_cartesian(y: &CartState, params: &ModelParams) -> PhasePoint {
    let j = params.j();
    let r = j.sqrt();
    let phi = y[1].atan2(y[0]).rem_euclid(TAU);
    PhasePoint::new(y[3] * r, y[4] * r, y[2] * j, phi)
}

/// Energy per J in scaled variables.
pub fn scaled_energy(y: &CartState, params: &ModelParams) -> f64 {
    0.5 * params.omega() * (y[3] * y[3] + y[4] * y[4])
        + params.omega0() * y[2]
        + 2.0 * params.gamma() * y[3] * y[0]
}

pub(crate) fn cart_rhs(params: &ModelParams) -> impl Fn(f64, &CartState) -> CartState + Copy {
    let (w, w0, g2) = (params.omega(), params.omega0(), 2.0 * params.gamma());
    move |_t, y| {
        [
            -w0 * y[1],
            w0 * y[0] - g2 * y[3] * y[2],
            g2 * y[3] * y[1],
            w * y[4],
            -w * y[3] - g2 * y[0],
        ]
    }
}

/// Larger root of the energy condition on p = 0, or `None` outside the shell.
pub fn poincare_q_plus(e: f64, jz: f64, phi: f64, params: &ModelParams) -> Option<f64> {
    let j = params.j();
    let x = jz / j;
    if x.abs() > 1.0 {
        return None;
    }
    let s = (1.0 - x * x).max(0.0).sqrt();
    let w = params.omega();
    let b = 2.0 * params.gamma() * j.sqrt() * s * phi.cos();
    let c = params.omega0() * jz - e;
    let disc = b * b - 2.0 * w * c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    if b <= 0.0 {
        Some((-b + sq) / w)
    } else {
        // avoid cancellation: q+ = (2c/ω) / q-
        let denom = -b - sq;
        Some(if denom == 0.0 { 0.0 } else { 2.0 * c / denom })
    }
}

/// Smaller root, for completeness checks.
pub fn poincare_q_minus(e: f64, jz: f64, phi: f64, params: &ModelParams) -> Option<f64> {
    let j = params.j();
    let x = jz / j;
    if x.abs() > 1.0 {
        return None;
    }
    let s = (1.0 - x * x).max(0.0).sqrt();
    let w = params.omega();
    let b = 2.0 * params.gamma() * j.sqrt() * s * phi.cos();
    let c = params.omega0() * jz - e;
    let disc = b * b - 2.0 * w * c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    if b >= 0.0 {
        Some((-b - sq) / w)
    } else {
        let denom = -b + sq;
        Some(if denom == 0.0 { 0.0 } else { 2.0 * c / denom })
    }
}

/// Surface p = 0, q = q₊ at fixed energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoincareSurface {
    params: ModelParams,
    energy: f64,
}

impl PoincareSurface {
    pub fn new(params: ModelParams, energy: f64) -> Self {
        Self { params, energy }
    }

    pub fn scaled(params: ModelParams, e_over_j: f64) -> Self {
        Self::new(params, e_over_j * params.j())
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn q_plus(&self, jz: f64, phi: f64) -> Option<f64> {
        poincare_q_plus(self.energy, jz, phi, &self.params)
    }

    /// Surface point over `(φ, jz/J)`, or `None` outside the shell.
    pub fn point(&self, phi: f64, jz_tilde: f64) -> Option<PhasePoint> {
        let jz = jz_tilde * self.params.j();
        self.q_plus(jz, phi)
            .map(|q| PhasePoint::new(q, 0.0, jz, phi))
    }

    /// True when the energy lies below the classical minimum.
    pub fn is_empty(&self) -> bool {
        self.energy < ground_state_energy_classical(&self.params).energy - 1e-12 * self.params.j()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalState {
    pub point: PhasePoint,
    pub t: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<ClassicalState>,
    pub end: ClassicalState,
    /// max |H(t) − H(0)| / |H(0)| over accepted steps.
    pub max_energy_drift: f64,
    pub steps: usize,
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Integrate from `state0` to `t_end` (either direction), sampling the state
/// at `sample_times` (must lie between 0 and `t_end`, in order).
pub fn integrate(
    state0: &PhasePoint,
    params: &ModelParams,
    t_end: f64,
    sample_times: &[f64],
    opts: &OdeOptions,
) -> Result<Trajectory> {
    state0.check(params)?;
    let y0 = to_cartesian(state0, params);
    let h0 = scaled_energy(&y0, params);
    let mut ode = Dop853::new(cart_rhs(params), 0.0, y0, *opts);
    let dir = t_end.signum();
    let mut samples = Vec::with_capacity(sample_times.len());
    let mut next = 0;
    while next < sample_times.len() && sample_times[next] == 0.0 {
        samples.push(ClassicalState {
            point: *state0,
            t: 0.0,
        });
        next += 1;
    }
    let mut drift = 0.0f64;
    while ode.t() != t_end {
        ode.step(t_end)?;
        drift = drift.max(relative(scaled_energy(ode.y(), params), h0));
        if next < sample_times.len() && (sample_times[next] - ode.t()) * dir <= 0.0 {
            let dense = ode.dense().expect("step was taken");
            while next < sample_times.len() && (sample_times[next] - ode.t()) * dir <= 0.0 {
                let t = sample_times[next];
                samples.push(ClassicalState {
                    point: from_cartesian(&dense.eval(t), params),
                    t,
                });
                next += 1;
            }
        }
    }
    Ok(Trajectory {
        samples,
        end: ClassicalState {
            point: from_cartesian(ode.y(), params),
            t: ode.t(),
        },
        max_energy_drift: drift,
        steps: ode.steps(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub t: f64,
    pub phi: f64,
    pub jz_tilde: f64,
    pub q: f64,
    pub p: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoincareSection {
    pub crossings: Vec<Crossing>,
    /// False when `t_max` ran out before the requested number of crossings.
    pub complete: bool,
    pub energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SectionOptions {
    pub t_max: f64,
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for SectionOptions {
    fn default() -> Self {
        Self {
            t_max: 1e5,
            rtol: 1e-12,
            atol: 1e-12,
            h_max: 0.5,
            max_steps: 50_000_000,
        }
    }
}

/// Record crossings of p = 0 on the q₊ branch (both directions), refined
/// on the dense interpolant.
/// True when `pt.q` is closer to q₊ than to q₋ at the point's (jz, φ).
fn on_upper_branch(pt: &PhasePoint, energy: f64, params: &ModelParams) -> bool {
    match (
        poincare_q_plus(energy, pt.jz, pt.phi, params),
        poincare_q_minus(energy, pt.jz, pt.phi, params),
    ) {
        (Some(hi), Some(lo)) => (pt.q - hi).abs() <= (pt.q - lo).abs(),
        // tangent to the shell edge: both roots merge
        _ => true,
    }
}

pub fn poincare_section(
    state0: &PhasePoint,
    n_crossings: usize,
    params: &ModelParams,
    opts: &SectionOptions,
) -> Result<PoincareSection> {
    state0.check(params)?;
    let energy = hcl(state0, params);
    let ode_opts = OdeOptions {
        rtol: opts.rtol,
        atol: opts.atol,
        h_max: opts.h_max,
        max_steps: opts.max_steps,
        ..Default::default()
    };
    let y0 = to_cartesian(state0, params);
    let mut ode = Dop853::new(cart_rhs(params), 0.0, y0, ode_opts);
    let p_tol = 1e-9 / params.j().sqrt();
    let mut crossings = Vec::with_capacity(n_crossings);
    let mut prev = y0;
    while crossings.len() < n_crossings && ode.t() < opts.t_max {
        let t_prev = ode.t();
        ode.step(opts.t_max)?;
        let cur = *ode.y();
        let (pa, pb) = (prev[4], cur[4]);
        prev = cur;
        // a point exactly on the surface is handled by the step that ends there
        if pa == 0.0 || pa * pb > 0.0 {
            continue;
        }
        let dense = ode.dense().expect("step was taken");
        // Illinois false position on P(t)
        let (mut ta, mut tb) = (t_prev, ode.t());
        let (mut fa, mut fb) = (pa, pb);
        let mut side = 0;
        let mut tc = tb;
        let mut y = cur;
        for _ in 0..200 {
            if fb == 0.0 {
                tc = tb;
                y = dense.eval(tc);
                break;
            }
            tc = (fa * tb - fb * ta) / (fa - fb);
            y = dense.eval(tc);
            let fc = y[4];
            if fc.abs() < p_tol * 1e-3 || (tb - ta).abs() < 1e-15 * tb.abs().max(1.0) {
                break;
            }
            if fc * fb > 0.0 {
                tb = tc;
                fb = fc;
                if side == -1 {
                    fa *= 0.5;
                }
                side = -1;
            } else {
                ta = tc;
                fa = fc;
                if side == 1 {
                    fb *= 0.5;
                }
                side = 1;
            }
        }
        let pt = from_cartesian(&y, params);
        if on_upper_branch(&pt, energy, params) {
            crossings.push(Crossing {
                t: tc,
                phi: pt.phi,
                jz_tilde: y[2],
                q: pt.q,
                p: pt.p,
            });
        }
    }
    Ok(PoincareSection {
        complete: crossings.len() >= n_crossings,
        crossings,
        energy,
    })
}

impl PoincareSection {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t_cross,phi,jz_tilde,q\n");
        for c in &self.crossings {
            let _ = writeln!(
                s,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                c.t, c.phi, c.jz_tilde, c.q
            );
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    /// Box-counting dimension of the crossings between two grid resolutions
    /// over their bounding box: ≈ 1 for an invariant curve, ≈ 2 for a
    /// filled region.
    pub fn box_dimension(&self, coarse: usize, fine: usize) -> f64 {
        let pts: Vec<(f64, f64)> = self.crossings.iter().map(|c| (c.phi, c.jz_tilde)).collect();
        box_dimension(&pts, coarse, fine)
    }
}

pub(crate) fn box_dimension(pts: &[(f64, f64)], coarse: usize, fine: usize) -> f64 {
    if pts.len() < 2 {
        return 0.0;
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let count = |n: usize| {
        let mut occ = std::collections::HashSet::new();
        for &(x, y) in pts {
            let i = (((x - x0) / (x1 - x0).max(1e-300)) * n as f64).min(n as f64 - 1.0) as usize;
            let j = (((y - y0) / (y1 - y0).max(1e-300)) * n as f64).min(n as f64 - 1.0) as usize;
            occ.insert((i, j));
        }
        occ.len() as f64
    };
    (count(fine) / count(coarse)).ln() / (fine as f64 / coarse as f64).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LyapunovMethod {
    Benettin,
    Cloud,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LyapunovEstimate {
    pub lambda: f64,
    pub method: LyapunovMethod,
    /// `(t, accumulated ln(d/d0))` samples.
    pub trace: Vec<(f64, f64)>,
    pub is_chaotic: bool,
    pub cutoff: f64,
    /// False when the running estimate still moves by more than 50% over
    /// the last quarter of the run.
    pub converged: bool,
}

impl LyapunovEstimate {
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("t,ln_d\n");
        for (t, l) in &self.trace {
            let _ = writeln!(s, "{t:.16e},{l:.16e}");
        }
        s
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "lambda": self.lambda,
            "method": self.method,
            "is_chaotic": self.is_chaotic,
            "cutoff": self.cutoff,
            "converged": self.converged,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenettinOptions {
    pub t_total: f64,
    pub renorm_interval: f64,
    pub d0: f64,
    pub cutoff: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on integrator steps (deterministic work budget).
    pub max_steps: usize,
}

impl Default for BenettinOptions {
    fn default() -> Self {
        Self {
            t_total: 3000.0,
            renorm_interval: 0.5,
            d0: 1e-8,
            cutoff: LYAPUNOV_CUTOFF,
            rtol: 1e-11,
            atol: 1e-13,
            max_steps: 5_000_000,
        }
    }
}

/// Unit perturbation tangent to the Bloch sphere at `y`.
fn tangent_direction(y: &CartState, raw: [f64; 5]) -> [f64; 5] {
    let mut d = raw;
    let radial = d[0] * y[0] + d[1] * y[1] + d[2] * y[2];
    for i in 0..3 {
        d[i] -= radial * y[i];
    }
    let n = d.iter().map(|v| v * v).sum::<f64>().sqrt();
    d.map(|v| v / n)
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn convergence_flag(trace: &[(f64, f64)], lambda: f64, cutoff: f64) -> bool {
    let Some(&(t_end, _)) = trace.last() else {
        return false;
    };
    let idx = trace.partition_point(|&(t, _)| t < 0.75 * t_end);
    let Some(&(t3, l3)) = trace.get(idx) else {
        return true;
    };
    if t3 <= 0.0 || lambda <= cutoff {
        return true;
    }
    ((l3 / t3) - lambda).abs() <= 0.5 * lambda.abs()
}

/// Two-trajectory estimate with periodic renormalization of the separation.
pub fn lyapunov_benettin(
    state0: &PhasePoint,
    params: &ModelParams,
    opts: &BenettinOptions,
) -> Result<LyapunovEstimate> {
    state0.check(params)?;
    if !(opts.t_total > 0.0 && opts.renorm_interval > 0.0 && opts.d0 > 0.0) {
        return Err(Error::InvalidArgument(
            "t_total, renorm_interval and d0 must be positive".into(),
        ));
    }
    let y = to_cartesian(state0, params);
    let dir = tangent_direction(&y, [0.31, -0.47, 0.23, 0.59, -0.53]);
    let mut z = [0.0; 10];
    for i in 0..5 {
        z[i] = y[i];
        z[5 + i] = y[i] + opts.d0 * dir[i];
    }
    let rhs = cart_rhs(params);
    let pair = move |t: f64, z: &[f64; 10]| {
        let a = rhs(t, &[z[0], z[1], z[2], z[3], z[4]]);
        let b = rhs(t, &[z[5], z[6], z[7], z[8], z[9]]);
        [a[0], a[1], a[2], a[3], a[4], b[0], b[1], b[2], b[3], b[4]]
    };
    let ode_opts = OdeOptions {
        rtol: opts.rtol,
        atol: opts.atol,
        max_steps: opts.max_steps,
        ..Default::default()
    };
    let mut ode = Dop853::new(pair, 0.0, z, ode_opts);
    let n_intervals = (opts.t_total / opts.renorm_interval).round().max(1.0) as usize;
    let mut acc = 0.0;
    let mut trace = Vec::with_capacity(n_intervals);
    for k in 1..=n_intervals {
        let t_k = k as f64 * opts.renorm_interval;
        ode.integrate_to(t_k)?;
        let mut z = *ode.y();
        let d = distance(&z[..5], &z[5..]);
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::Integration {
                t: t_k,
                reason: "separation collapsed or diverged".into(),
            });
        }
        acc += (d / opts.d0).ln();
        for i in 0..5 {
            z[5 + i] = z[i] + (z[5 + i] - z[i]) * opts.d0 / d;
        }
        ode.reset_state(z);
        trace.push((t_k, acc));
    }
    let t_end = n_intervals as f64 * opts.renorm_interval;
    let lambda = acc / t_end;
    Ok(LyapunovEstimate {
        lambda,
        method: LyapunovMethod::Benettin,
        converged: convergence_flag(&trace, lambda, opts.cutoff),
        trace,
        is_chaotic: lambda > opts.cutoff,
        cutoff: opts.cutoff,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CloudOptions {
    pub n_neighbors: usize,
    pub radius: f64,
    pub t_total: f64,
    /// Interval at which every neighbour is pulled back to `radius`.
    pub rescale_interval: f64,
    /// Fraction of the run discarded before the slope fit.
    pub transient_fraction: f64,
    pub seed: u64,
    pub cutoff: f64,
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for CloudOptions {
    fn default() -> Self {
        Self {
            n_neighbors: 16,
            radius: 1e-6,
            t_total: 3000.0,
            rescale_interval: 5.0,
            transient_fraction: 0.1,
            seed: 0,
            cutoff: LYAPUNOV_CUTOFF,
            rtol: 1e-11,
            atol: 1e-13,
            max_steps: 5_000_000,
        }
    }
}

const CLOUD_MAX: usize = 16;

/// Cloud estimate: neighbours on a small sphere around the centre, slope of
/// the cloud-averaged ln d(t) after the transient. Separations are rescaled
/// periodically so that growth stays in the tangent regime.
pub fn lyapunov_cloud(
    state0: &PhasePoint,
    params: &ModelParams,
    opts: &CloudOptions,
) -> Result<LyapunovEstimate> {
    state0.check(params)?;
    if opts.n_neighbors == 0 || opts.n_neighbors > CLOUD_MAX {
        return Err(Error::InvalidArgument(format!(
            "n_neighbors must be in 1..={CLOUD_MAX}"
        )));
    }
    let y = to_cartesian(state0, params);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    const DIM: usize = 5 * (CLOUD_MAX + 1);
    let m = opts.n_neighbors;
    let mut z = [0.0; DIM];
    z[..5].copy_from_slice(&y);
    for k in 0..m {
        let raw: [f64; 5] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
        let d = tangent_direction(&y, raw);
        for i in 0..5 {
            z[5 * (k + 1) + i] = y[i] + opts.radius * d[i];
        }
    }
    let rhs = cart_rhs(params);
    let active = m + 1;
    let cloud = move |t: f64, z: &[f64; DIM]| {
        let mut out = [0.0; DIM];
        for k in 0..active {
            let s = &z[5 * k..5 * k + 5];
            let d = rhs(t, &[s[0], s[1], s[2], s[3], s[4]]);
            out[5 * k..5 * k + 5].copy_from_slice(&d);
        }
        out
    };
    let ode_opts = OdeOptions {
        rtol: opts.rtol,
        atol: opts.atol,
        max_steps: opts.max_steps,
        ..Default::default()
    };
    let mut ode = Dop853::new(cloud, 0.0, z, ode_opts);
    let sample_dt = opts.rescale_interval / 5.0;
    let n_samples = (opts.t_total / sample_dt).round().max(1.0) as usize;
    let mut offsets = vec![0.0; m];
    let mut trace = Vec::with_capacity(n_samples);
    for s in 1..=n_samples {
        let t_s = s as f64 * sample_dt;
        ode.integrate_to(t_s)?;
        let mut z = *ode.y();
        let mut mean = 0.0;
        let mut dists = vec![0.0; m];
        for k in 0..m {
            let d = distance(&z[..5], &z[5 * (k + 1)..5 * (k + 2)]);
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::Integration {
                    t: t_s,
                    reason: "cloud separation collapsed or diverged".into(),
                });
            }
            dists[k] = d;
            mean += offsets[k] + (d / opts.radius).ln();
        }
        trace.push((t_s, mean / m as f64));
        if s % 5 == 0 {
            for k in 0..m {
                offsets[k] += (dists[k] / opts.radius).ln();
                for i in 0..5 {
                    let idx = 5 * (k + 1) + i;
                    z[idx] = z[i] + (z[idx] - z[i]) * opts.radius / dists[k];
                }
            }
            ode.reset_state(z);
        }
    }
    let t_end = n_samples as f64 * sample_dt;
    let window: Vec<(f64, f64)> = trace
        .iter()
        .copied()
        .filter(|&(t, _)| t >= opts.transient_fraction * t_end)
        .collect();
    if window.len() < 10 {
        return Err(Error::Integration {
            t: t_end,
            reason: "run too short for a fittable growth window".into(),
        });
    }
    let lambda = slope(&window);
    Ok(LyapunovEstimate {
        lambda,
        method: LyapunovMethod::Cloud,
        converged: convergence_flag(&trace, lambda, opts.cutoff),
        trace,
        is_chaotic: lambda > opts.cutoff,
        cutoff: opts.cutoff,
    })
}

/// Ordinary least-squares slope.
pub(crate) fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// SplitMix64 mixing of a global seed with an orbit index.
pub fn derive_seed(global: u64, index: u64) -> u64 {
    let mut z = global ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(g: f64, j: f64) -> ModelParams {
        ModelParams::new(1.0, 1.0, g, j).unwrap()
    }

    #[test]
    fn hcl_examples() {
        let p = params(1.0, 10.0);
        assert_eq!(hcl(&PhasePoint::new(0.0, 0.0, -10.0, 0.0), &p), -10.0);
        let a = hcl(&PhasePoint::new(1.3, 0.2, 10.0, 0.0), &p);
        let b = hcl(&PhasePoint::new(1.3, 0.2, 10.0, 2.0), &p);
        assert_eq!(a, b);
    }

    #[test]
    fn decoupled_rhs() {
        let p = params(0.0, 3.0);
        let r = hamilton_rhs(&PhasePoint::new(0.7, -0.2, 1.0, 2.0), &p).unwrap();
        assert_eq!(r, [1.0, 0.0, -0.2, -0.7]);
    }

    #[test]
    fn rhs_vanishes_at_minimum() {
        let p = params(1.0, 5.0);
        let gs = ground_state_energy_classical(&p);
        let r = hamilton_rhs(&PhasePoint::new(gs.q, gs.p, gs.jz, gs.phi), &p).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-7), "{r:?}");
    }

    #[test]
    fn pole_is_flagged() {
        let p = params(1.0, 5.0);
        assert!(matches!(
            hamilton_rhs(&PhasePoint::new(0.0, 0.0, 5.0, 0.0), &p),
            Err(Error::Pole(_))
        ));
    }

    #[test]
    fn cartesian_round_trip() {
        let p = params(1.0, 7.0);
        let pt = PhasePoint::new(1.1, -0.4, 2.5, 4.0);
        let back = from_cartesian(&to_cartesian(&pt, &p), &p);
        for (a, b) in [
            (pt.q, back.q),
            (pt.p, back.p),
            (pt.jz, back.jz),
            (pt.phi, back.phi),
        ] {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((scaled_energy(&to_cartesian(&pt, &p), &p) * 7.0 - hcl(&pt, &p)).abs() < 1e-12);
    }

    #[test]
    fn q_plus_examples() {
        let p = params(1.0, 10.0);
        assert!(poincare_q_plus(-18.0, -10.0, 0.3, &p).is_none());
        let q = poincare_q_plus(-5.0, -8.0, std::f64::consts::FRAC_PI_2, &p).unwrap();
        assert!((q - 6f64.sqrt()).abs() < 1e-12);
        for &(jt, phi) in &[(-0.5, 0.1), (0.2, 3.0), (-0.9, 2.0), (0.6, 5.5)] {
            let jz = jt * 10.0;
            if let (Some(qp), Some(qm)) = (
                poincare_q_plus(-11.0, jz, phi, &p),
                poincare_q_minus(-11.0, jz, phi, &p),
            ) {
                assert!(qp >= qm);
                let e = hcl(&PhasePoint::new(qp, 0.0, jz, phi), &p);
                assert!((e + 11.0).abs() < 1e-10 * 11.0);
            }
        }
    }

    #[test]
    fn decoupled_orbit_keeps_jz() {
        let p = params(0.0, 4.0);
        let pt = PhasePoint::new(1.0, 0.5, -1.0, 0.3);
        let tr = integrate(&pt, &p, 50.0, &[10.0, 20.0], &OdeOptions::default()).unwrap();
        for s in tr.samples.iter().chain([&tr.end]) {
            assert!((s.point.jz + 1.0).abs() < 1e-10);
            assert!((s.point.q.powi(2) + s.point.p.powi(2) - 1.25).abs() < 1e-10);
        }
    }

    #[test]
    fn section_crossings_lie_on_surface() {
        let p = params(1.0, 10.0);
        let surf = PoincareSurface::scaled(p, -1.5);
        let pt = surf.point(3.0, -0.5).unwrap();
        let sec = poincare_section(&pt, 30, &p, &SectionOptions::default()).unwrap();
        assert!(sec.complete);
        for c in &sec.crossings {
            assert!(c.p.abs() < 1e-8);
            let jz = c.jz_tilde * 10.0;
            assert!((c.q - poincare_q_plus(surf.energy(), jz, c.phi, &p).unwrap()).abs() < 1e-6);
            let e = hcl(&PhasePoint::new(c.q, c.p, c.jz_tilde * 10.0, c.phi), &p);
            assert!((e - surf.energy()).abs() < 1e-8 * surf.energy().abs());
        }
    }

    #[test]
    fn lobe_with_negative_upper_root_has_crossings() {
        let p = params(1.0, 10.0);
        let surf = PoincareSurface::scaled(p, -1.8);
        let pt = surf.point(0.0, -0.3).unwrap();
        assert!(pt.q < 0.0);
        let sec = poincare_section(&pt, 20, &p, &SectionOptions::default()).unwrap();
        assert!(sec.complete);
    }

    #[test]
    fn seeds_differ_per_index() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
    }
}
