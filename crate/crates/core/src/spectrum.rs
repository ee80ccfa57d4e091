//! Diagonalization of the Hamiltonian, truncation convergence checks and
//! nearest-neighbour level statistics.
//!
//! Two eigensolvers are provided:
//!
//! * [`diagonalize`]: dense divide-and-conquer on the full block, every
//!   eigenpair.
//! * [`diagonalize_window`]: all eigenvalues from a band-to-tridiagonal
//!   reduction, eigenvectors only inside an energy window, by shifted inverse
//!   iteration on the band matrix. Memory is `O(dim · window)` instead of
//!   `O(dim²)`, which is what makes J ≈ 60 feasible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, BandLu, LapackError};
use crate::model::{build_hamiltonian, BasisSpec, HamiltonianMatrix, ModelParams, Parity};

/// Closed energy interval `[lo, hi]` in absolute energy units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyWindow {
    pub lo: f64,
    pub hi: f64,
}

impl EnergyWindow {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidArgument(format!(
                "invalid energy window [{lo}, {hi}]"
            )));
        }
        Ok(Self { lo, hi })
    }

    /// Window given in units of J.
    pub fn scaled(lo_over_j: f64, hi_over_j: f64, params: &ModelParams) -> Result<Self> {
        Self::new(lo_over_j * params.j(), hi_over_j * params.j())
    }

    pub fn contains(&self, e: f64) -> bool {
        e >= self.lo && e <= self.hi
    }
}

/// Eigenpairs of one parity block. `vectors` holds the eigenvectors as
/// contiguous columns in basis order, matching `energies` (ascending).
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub(crate) params: ModelParams,
    pub(crate) basis: BasisSpec,
    pub(crate) energies: Vec<f64>,
    pub(crate) vectors: Vec<f64>,
    /// Every eigenvalue of the block, ascending.
    pub(crate) all_energies: Vec<f64>,
    /// Index of `energies[0]` within `all_energies`.
    pub(crate) offset: usize,
    pub(crate) window: Option<EnergyWindow>,
    pub(crate) norm: f64,
}

/// Tolerance (relative to ‖H‖) below which two levels count as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;

impl EigenSystem {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn basis(&self) -> &BasisSpec {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// Energies of the stored eigenvectors.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn all_energies(&self) -> &[f64] {
        &self.all_energies
    }

    pub fn num_vectors(&self) -> usize {
        self.energies.len()
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn window(&self) -> Option<EnergyWindow> {
        self.window
    }

    pub fn norm_bound(&self) -> f64 {
        self.norm
    }

    pub fn vector(&self, k: usize) -> &[f64] {
        let d = self.dim();
        &self.vectors[k * d..(k + 1) * d]
    }

    /// Pairs `(k, k + 1)` of stored levels closer than `DEGENERACY_TOL · ‖H‖`.
    pub fn degenerate_pairs(&self) -> Vec<usize> {
        let tol = DEGENERACY_TOL * self.norm.max(1.0);
        self.energies
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[1] - w[0] < tol)
            .map(|(k, _)| k)
            .collect()
    }

    /// max |VᵀV − I| over the stored vectors.
    pub fn orthonormality_error(&self) -> f64 {
        let nv = self.num_vectors();
        let mut worst = 0.0f64;
        for a in 0..nv {
            let va = self.vector(a);
            for b in a..nv {
                let dot: f64 = va.iter().zip(self.vector(b)).map(|(x, y)| x * y).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    /// max ‖H v_k − E_k v_k‖ over the stored pairs.
    pub fn max_residual(&self, h: &HamiltonianMatrix) -> f64 {
        (0..self.num_vectors())
            .map(|k| residual(h, self.vector(k), self.energies[k]))
            .fold(0.0, f64::max)
    }

    /// Probability of eigenvector `k` in the top 10% of Fock layers.
    pub fn tail_weight(&self, k: usize) -> f64 {
        let range = self.basis.layers_from(top_layer_start(self.basis.n_max()));
        self.vector(k)[range].iter().map(|x| x * x).sum()
    }

    /// Nearest-neighbour statistics for the stored levels in `window`.
    pub fn level_spacing_stats(
        &self,
        window: EnergyWindow,
        opts: &SpacingOptions,
    ) -> Result<SpacingStats> {
        level_spacing_stats(&self.all_energies, window, opts)
    }
}

/// First Fock layer of the "top 10%" used for tail weights.
pub(crate) fn top_layer_start(n_max: u32) -> u32 {
    let width = (((n_max + 1) as f64) * 0.1).round().max(1.0) as u32;
    (n_max + 1).saturating_sub(width)
}

fn residual(h: &HamiltonianMatrix, v: &[f64], e: f64) -> f64 {
    let hv = h.matvec(v);
    hv.iter()
        .zip(v)
        .map(|(a, b)| (a - e * b).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn lapack_error(err: LapackError, h: &HamiltonianMatrix) -> Error {
    let p = h.params();
    Error::Eigensolver {
        routine: err.routine,
        info: err.info,
        dim: h.dim(),
        context: format!(
            "omega = {}, omega0 = {}, gamma = {}, j = {}, n_max = {}",
            p.omega(),
            p.omega0(),
            p.gamma(),
            p.j(),
            h.basis().n_max()
        ),
    }
}

/// Fix the overall sign: the largest-magnitude component is made positive.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0.0f64;
    let mut sign = 1.0;
    for &x in v.iter() {
        if x.abs() > best {
            best = x.abs();
            sign = x.signum();
        }
    }
    if sign < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Default limit for the dense solver (memory ≈ 3 · 8 · dim² bytes).
pub const DEFAULT_DENSE_MAX_DIM: usize = 12_000;

/// Dense eigendecomposition of the whole block.
pub fn diagonalize(h: &HamiltonianMatrix) -> Result<EigenSystem> {
    diagonalize_dense_with_limit(h, DEFAULT_DENSE_MAX_DIM)
}

pub fn diagonalize_dense_with_limit(h: &HamiltonianMatrix, max_dim: usize) -> Result<EigenSystem> {
    let n = h.dim();
    if n == 0 {
        return Err(Error::InvalidArgument("empty basis".into()));
    }
    if n > max_dim {
        return Err(Error::DimensionOverflow {
            dim: n,
            limit: max_dim,
        });
    }
    let mut a = h.to_dense();
    let energies = linalg::syevd(&mut a, n).map_err(|e| lapack_error(e, h))?;
    for k in 0..n {
        fix_sign(&mut a[k * n..(k + 1) * n]);
    }
    Ok(EigenSystem {
        params: *h.params(),
        basis: h.basis().clone(),
        all_energies: energies.clone(),
        energies,
        vectors: a,
        offset: 0,
        window: None,
        norm: h.norm_bound(),
    })
}

/// Eigenvalues only, from the band reduction.
pub fn eigenvalues(h: &HamiltonianMatrix) -> Result<Vec<f64>> {
    linalg::band_eigenvalues(h.band_upper().to_vec(), h.dim(), h.bandwidth())
        .map_err(|e| lapack_error(e, h))
}

/// Eigenvalues of the whole block plus eigenvectors for the levels inside
/// `window`.
pub fn diagonalize_window(h: &HamiltonianMatrix, window: EnergyWindow) -> Result<EigenSystem> {
    let all = eigenvalues(h)?;
    let (min, max) = (all[0], *all.last().unwrap());
    if window.hi < min || window.lo > max {
        return Err(Error::WindowOutsideSpectrum {
            lo: window.lo,
            hi: window.hi,
            min,
            max,
        });
    }
    let offset = all.partition_point(|&e| e < window.lo);
    let end = all.partition_point(|&e| e <= window.hi);
    let energies = all[offset..end].to_vec();
    let vectors = inverse_iteration(h, &energies)?;
    Ok(EigenSystem {
        params: *h.params(),
        basis: h.basis().clone(),
        energies,
        vectors,
        all_energies: all,
        offset,
        window: Some(window),
        norm: h.norm_bound(),
    })
}

/// Eigenvectors for the given (accurate, ascending) eigenvalues by inverse
/// iteration with the band LU of `H − λI`. Vectors of levels closer than the
/// cluster tolerance are re-orthogonalized against each other.
fn inverse_iteration(h: &HamiltonianMatrix, energies: &[f64]) -> Result<Vec<f64>> {
    let n = h.dim();
    let kd = h.bandwidth();
    let norm = h.norm_bound().max(1.0);
    let cluster_tol = 1e-5 * norm;
    let target = 1e-10 * norm;
    let ldab = BandLu::ldab(kd, kd);
    let upper = h.band_upper();

    let mut template = vec![0.0; ldab * n];
    for c in 0..n {
        for r in c.saturating_sub(kd)..=c {
            let v = upper[c * (kd + 1) + kd + r - c];
            template[c * ldab + 2 * kd + r - c] = v;
            if r != c {
                // mirror into the lower band: entry (c, r)
                template[r * ldab + 2 * kd + c - r] = v;
            }
        }
    }

    let mut vectors = vec![0.0; n * energies.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_d1c6e);
    for (k, &e) in energies.iter().enumerate() {
        let cluster_start = energies[..k].partition_point(|&x| x < e - cluster_tol);
        let mut shift = e;
        let lu = loop {
            let mut ab = template.clone();
            for c in 0..n {
                ab[c * ldab + 2 * kd] -= shift;
            }
            match BandLu::factor(ab, n, kd, kd) {
                Ok(lu) => break lu,
                Err(err) if err.info > 0 => shift += f64::EPSILON * norm * 4.0,
                Err(err) => return Err(lapack_error(err, h)),
            }
        };
        let mut x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        normalize(&mut x);
        let (done, rest) = vectors.split_at_mut(k * n);
        for _ in 0..6 {
            lu.solve(&mut x).map_err(|err| lapack_error(err, h))?;
            for prev in cluster_start..k {
                let p = &done[prev * n..(prev + 1) * n];
                let dot: f64 = p.iter().zip(&x).map(|(a, b)| a * b).sum();
                x.iter_mut().zip(p).for_each(|(xi, pi)| *xi -= dot * pi);
            }
            normalize(&mut x);
            if residual(h, &x, e) <= target {
                break;
            }
        }
        fix_sign(&mut x);
        rest[..n].copy_from_slice(&x);
    }
    Ok(vectors)
}

fn normalize(x: &mut [f64]) {
    let nrm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if nrm > 0.0 {
        x.iter_mut().for_each(|v| *v /= nrm);
    }
}

/// Thresholds for declaring a level converged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceTolerances {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub tail_tol: f64,
}

impl Default for ConvergenceTolerances {
    fn default() -> Self {
        Self {
            abs_tol: 1e-8,
            rel_tol: 1e-10,
            tail_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelConvergence {
    /// Index within the full low-truncation spectrum.
    pub index: usize,
    pub energy: f64,
    pub shift: f64,
    pub tail_weight: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub n_max_low: u32,
    pub n_max_high: u32,
    pub window: EnergyWindow,
    pub tolerances: ConvergenceTolerances,
    pub levels: Vec<LevelConvergence>,
    pub converged_count: usize,
    /// Number of consecutive converged levels from the bottom of the window.
    pub converged_prefix: usize,
    pub dim_low: usize,
}

impl ConvergenceReport {
    pub fn all_converged(&self) -> bool {
        self.converged_count == self.levels.len()
    }
}

/// Compare two truncations level by level.
///
/// Each low-truncation level is paired with the nearest high-truncation
/// eigenvalue.
pub fn check_convergence(
    params: &ModelParams,
    n_max_low: u32,
    n_max_high: u32,
    window: EnergyWindow,
    tol: ConvergenceTolerances,
) -> Result<ConvergenceReport> {
    if n_max_high <= n_max_low {
        return Err(Error::InvalidArgument(format!(
            "n_max_high ({n_max_high}) must exceed n_max_low ({n_max_low})"
        )));
    }
    let basis_low = BasisSpec::new(params, n_max_low, Parity::Positive);
    let h_low = build_hamiltonian(params, &basis_low)?;
    let low = diagonalize_window(&h_low, window)?;
    let h_high = build_hamiltonian(
        params,
        &BasisSpec::new(params, n_max_high, Parity::Positive),
    )?;
    let high = eigenvalues(&h_high)?;
    Ok(convergence_report(&low, &high, n_max_high, window, tol))
}

/// Check the stored levels of `low` inside `window` against a larger
/// truncation.
pub fn convergence_against(
    low: &EigenSystem,
    n_max_high: u32,
    window: EnergyWindow,
    tol: ConvergenceTolerances,
) -> Result<ConvergenceReport> {
    let n_max_low = low.basis.n_max();
    if n_max_high <= n_max_low {
        return Err(Error::InvalidArgument(format!(
            "n_max_high ({n_max_high}) must exceed n_max_low ({n_max_low})"
        )));
    }
    if let Some(w) = low.window {
        if window.lo < w.lo || window.hi > w.hi {
            return Err(Error::InvalidArgument(format!(
                "check window [{}, {}] exceeds the stored window [{}, {}]",
                window.lo, window.hi, w.lo, w.hi
            )));
        }
    }
    let h_high = build_hamiltonian(
        &low.params,
        &BasisSpec::new(&low.params, n_max_high, low.basis.parity()),
    )?;
    let high = eigenvalues(&h_high)?;
    Ok(convergence_report(low, &high, n_max_high, window, tol))
}

pub(crate) fn convergence_report(
    low: &EigenSystem,
    high: &[f64],
    n_max_high: u32,
    window: EnergyWindow,
    tol: ConvergenceTolerances,
) -> ConvergenceReport {
    let levels: Vec<LevelConvergence> = low
        .energies
        .iter()
        .enumerate()
        .filter(|(_, &e)| window.contains(e))
        .map(|(k, &e)| {
            let pos = high.partition_point(|&x| x < e);
            let nearest = [pos.checked_sub(1), Some(pos)]
                .into_iter()
                .flatten()
                .filter_map(|i| high.get(i))
                .min_by(|a, b| (*a - e).abs().total_cmp(&(*b - e).abs()))
                .copied()
                .unwrap_or(f64::NAN);
            let shift = nearest - e;
            let tail_weight = low.tail_weight(k);
            let converged =
                shift.abs() <= tol.abs_tol + tol.rel_tol * e.abs() && tail_weight <= tol.tail_tol;
            LevelConvergence {
                index: low.offset + k,
                energy: e,
                shift,
                tail_weight,
                converged,
            }
        })
        .collect();
    let converged_count = levels.iter().filter(|l| l.converged).count();
    let converged_prefix = levels.iter().take_while(|l| l.converged).count();
    ConvergenceReport {
        n_max_low: low.basis.n_max(),
        n_max_high,
        window,
        tolerances: tol,
        levels,
        converged_count,
        converged_prefix,
        dim_low: low.dim(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpacingOptions {
    /// Degree of the polynomial fitted to the cumulative level count.
    pub degree: usize,
    pub bins: usize,
    pub max_spacing: f64,
    pub min_levels: usize,
}

impl Default for SpacingOptions {
    fn default() -> Self {
        Self {
            degree: 9,
            bins: 40,
            max_spacing: 4.0,
            min_levels: 50,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpacingStats {
    pub n_levels: usize,
    /// Unfolded nearest-neighbour spacings normalized to unit mean.
    pub spacings: Vec<f64>,
    pub bin_edges: Vec<f64>,
    /// Probability density per bin.
    pub density: Vec<f64>,
    /// Mean of min(s_k, s_{k+1}) / max(s_k, s_{k+1}).
    pub mean_ratio: f64,
}

impl SpacingStats {
    /// Fraction of spacings below `s`.
    pub fn fraction_below(&self, s: f64) -> f64 {
        self.spacings.iter().filter(|&&x| x < s).count() as f64 / self.spacings.len() as f64
    }
}

/// Unfold the levels in `window` with a polynomial fit of the cumulative count
/// and return spacing histogram and gap-ratio statistics.
pub fn level_spacing_stats(
    energies: &[f64],
    window: EnergyWindow,
    opts: &SpacingOptions,
) -> Result<SpacingStats> {
    let levels: Vec<f64> = energies
        .iter()
        .copied()
        .filter(|&e| window.contains(e))
        .collect();
    let needed = opts.min_levels.max(opts.degree + 3);
    if levels.len() < needed {
        return Err(Error::TooFewLevels {
            found: levels.len(),
            needed,
        });
    }
    let n = levels.len();
    let (e0, e1) = (levels[0], levels[n - 1]);
    let (center, half) = ((e0 + e1) / 2.0, ((e1 - e0) / 2.0).max(f64::MIN_POSITIVE));
    let u: Vec<f64> = levels.iter().map(|e| (e - center) / half).collect();
    // Chebyshev basis for conditioning
    let ncoef = opts.degree + 1;
    let mut a = vec![0.0; n * ncoef];
    for (i, &x) in u.iter().enumerate() {
        let (mut t0, mut t1) = (1.0, x);
        for d in 0..ncoef {
            let t = match d {
                0 => 1.0,
                1 => x,
                _ => {
                    let t2 = 2.0 * x * t1 - t0;
                    t0 = t1;
                    t1 = t2;
                    t2
                }
            };
            a[d * n + i] = t;
        }
    }
    let counts: Vec<f64> = (0..n).map(|k| k as f64).collect();
    let coef = linalg::least_squares(a.clone(), n, ncoef, &counts).map_err(|e| {
        Error::InvalidArgument(format!(
            "unfolding fit failed ({}, info {})",
            e.routine, e.info
        ))
    })?;
    let unfolded: Vec<f64> = (0..n)
        .map(|i| (0..ncoef).map(|d| coef[d] * a[d * n + i]).sum())
        .collect();
    let raw: Vec<f64> = unfolded.windows(2).map(|w| w[1] - w[0]).collect();
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    let spacings: Vec<f64> = raw.iter().map(|s| s / mean).collect();

    let width = opts.max_spacing / opts.bins as f64;
    let bin_edges: Vec<f64> = (0..=opts.bins).map(|b| b as f64 * width).collect();
    let mut density = vec![0.0; opts.bins];
    for &s in &spacings {
        let b = (s / width).floor();
        if b >= 0.0 && (b as usize) < opts.bins {
            density[b as usize] += 1.0;
        }
    }
    density
        .iter_mut()
        .for_each(|d| *d /= spacings.len() as f64 * width);

    let gaps: Vec<f64> = levels.windows(2).map(|w| w[1] - w[0]).collect();
    let ratios: Vec<f64> = gaps
        .windows(2)
        .filter_map(|g| {
            let (lo, hi) = (g[0].min(g[1]), g[0].max(g[1]));
            (hi > 0.0).then(|| lo / hi)
        })
        .collect();
    let mean_ratio = ratios.iter().sum::<f64>() / ratios.len() as f64;
    Ok(SpacingStats {
        n_levels: n,
        spacings,
        bin_edges,
        density,
        mean_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_basis;

    fn params(g: f64, j: f64) -> ModelParams {
        ModelParams::new(1.0, 1.0, g, j).unwrap()
    }

    #[test]
    fn decoupled_small_spectrum() {
        let p = params(0.0, 1.0);
        let h = build_hamiltonian(&p, &build_basis(&p, 1).unwrap()).unwrap();
        let es = diagonalize(&h).unwrap();
        assert_eq!(es.energies(), &[-1.0, 1.0, 1.0]);
    }

    #[test]
    fn one_by_one_block() {
        let p = params(1.0, 0.5);
        let h = build_hamiltonian(&p, &build_basis(&p, 0).unwrap()).unwrap();
        let es = diagonalize(&h).unwrap();
        assert_eq!(es.energies(), &[-0.5]);
        assert_eq!(es.vector(0), &[1.0]);
    }

    #[test]
    fn dense_invariants() {
        let p = params(1.0, 3.0);
        let h = build_hamiltonian(&p, &build_basis(&p, 20).unwrap()).unwrap();
        let es = diagonalize(&h).unwrap();
        assert!(es.energies().windows(2).all(|w| w[0] <= w[1]));
        assert!(es.orthonormality_error() < 1e-10);
        assert!(es.max_residual(&h) < 1e-8 * h.norm_bound());
        let trace: f64 = es.energies().iter().sum();
        assert!((trace - h.trace()).abs() < 1e-8 * h.trace().abs().max(1.0));
    }

    #[test]
    fn windowed_matches_dense() {
        let p = params(1.0, 4.0);
        let h = build_hamiltonian(&p, &build_basis(&p, 40).unwrap()).unwrap();
        let dense = diagonalize(&h).unwrap();
        let window = EnergyWindow::new(-6.0, 2.0).unwrap();
        let win = diagonalize_window(&h, window).unwrap();
        assert!(win.num_vectors() > 10);
        assert!(win.orthonormality_error() < 1e-10);
        assert!(win.max_residual(&h) < 1e-8 * h.norm_bound());
        for (k, &e) in win.energies().iter().enumerate() {
            let kd = win.offset() + k;
            assert!((e - dense.energies()[kd]).abs() < 1e-10);
            let overlap: f64 = win
                .vector(k)
                .iter()
                .zip(dense.vector(kd))
                .map(|(a, b)| a * b)
                .sum();
            assert!(
                (overlap.abs() - 1.0).abs() < 1e-9,
                "level {kd}: overlap {overlap}"
            );
        }
        for (a, b) in win.all_energies().iter().zip(dense.energies()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn window_outside_spectrum_is_rejected() {
        let p = params(1.0, 2.0);
        let h = build_hamiltonian(&p, &build_basis(&p, 10).unwrap()).unwrap();
        let err = diagonalize_window(&h, EnergyWindow::new(-100.0, -50.0).unwrap());
        assert!(matches!(err, Err(Error::WindowOutsideSpectrum { .. })));
    }

    #[test]
    fn convergence_precondition() {
        let p = params(1.0, 2.0);
        let w = EnergyWindow::new(-5.0, 0.0).unwrap();
        assert!(check_convergence(&p, 10, 10, w, ConvergenceTolerances::default()).is_err());
    }

    #[test]
    fn decoupled_levels_have_zero_shift() {
        let p = params(0.0, 2.0);
        let w = EnergyWindow::new(-2.5, 12.0).unwrap();
        let r = check_convergence(&p, 12, 16, w, ConvergenceTolerances::default()).unwrap();
        assert!(r.levels.iter().all(|l| l.shift == 0.0));
        // every level not living in the top layers is converged
        for l in &r.levels {
            assert_eq!(l.converged, l.tail_weight <= 1e-6);
        }
        assert!(r.converged_count > 0 && r.converged_count <= r.dim_low);
    }

    #[test]
    fn picket_fence_unfolds_to_unit_spacings() {
        let levels: Vec<f64> = (0..200).map(|k| k as f64).collect();
        let s = level_spacing_stats(
            &levels,
            EnergyWindow::new(-0.5, 199.5).unwrap(),
            &SpacingOptions::default(),
        )
        .unwrap();
        assert!(s.spacings.iter().all(|x| (x - 1.0).abs() < 1e-8));
        assert!((s.mean_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_levels() {
        let levels: Vec<f64> = (0..20).map(|k| k as f64).collect();
        let r = level_spacing_stats(
            &levels,
            EnergyWindow::new(0.0, 30.0).unwrap(),
            &SpacingOptions::default(),
        );
        assert!(matches!(r, Err(Error::TooFewLevels { found: 20, .. })));
    }
}
