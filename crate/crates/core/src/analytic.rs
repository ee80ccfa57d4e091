//! Gaussian energy sequences in a decomposition and the closed-form
//! survival probability built from them.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{check_grid, Decomposition, SPSeries};
use crate::error::{Error, Result};

const SERIES_CUTOFF: f64 = 1e-16;

/// Jacobi theta function Θ₃(x, y) = 1 + 2 Σ_{p≥1} y^(p²) cos(2px).
pub fn theta3(x: f64, y: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&y) {
        return Err(Error::InvalidArgument(format!(
            "theta3 nome must lie in [0, 1), got {y}"
        )));
    }
    if y == 0.0 {
        return Ok(1.0);
    }
    let ln_y = y.ln();
    let mut sum = 0.0;
    for p in 1.. {
        let p = p as f64;
        let term = (p * p * ln_y).exp();
        if term < SERIES_CUTOFF {
            break;
        }
        sum += term * (2.0 * p * x).cos();
    }
    Ok(1.0 + 2.0 * sum)
}

/// One Gaussian sequence g_k = A exp[−(E_k − Ē)²/(2σ²)].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianSequence {
    /// Indices into the decomposition, ascending in energy.
    pub members: Vec<usize>,
    pub energies: Vec<f64>,
    pub weights: Vec<f64>,
    pub amplitude: f64,
    pub mean: f64,
    pub sigma: f64,
    pub omega1: f64,
    pub e2: f64,
    pub t_d: f64,
    /// R² of the fitted envelope against the member weights.
    pub r_squared: f64,
}

impl GaussianSequence {
    /// Fit a Gaussian envelope to members (ascending energies, positive
    /// weights) and derive the local spectral parameters.
    pub fn fit(members: Vec<usize>, energies: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let n = members.len();
        if n < 3 || energies.len() != n || weights.len() != n {
            return Err(Error::InvalidArgument(
                "a sequence needs at least three members".into(),
            ));
        }
        if weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::InvalidArgument(
                "sequence weights must be positive".into(),
            ));
        }
        let (amplitude, mean, sigma, r_squared) = fit_gaussian(&energies, &weights)
            .ok_or_else(|| Error::Unstructured("sequence weights are not peaked".into()))?;
        let (omega1, e2) = local_spacing(&energies, mean);
        if !(omega1 > 0.0) {
            return Err(Error::Unstructured(
                "sequence levels are not separated".into(),
            ));
        }
        Ok(Self {
            members,
            energies,
            weights,
            amplitude,
            mean,
            sigma,
            omega1,
            e2,
            t_d: decay_time(omega1, e2, sigma),
            r_squared,
        })
    }

    /// Gaussian envelope at energy `e`.
    pub fn envelope(&self, e: f64) -> f64 {
        self.amplitude * (-(e - self.mean).powi(2) / (2.0 * self.sigma * self.sigma)).exp()
    }

    /// A²σ√π/ω₁, the long-time value of this sequence's contribution.
    pub fn plateau(&self) -> f64 {
        self.amplitude * self.amplitude * self.sigma * PI.sqrt() / self.omega1
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// t_D = ω₁/(|e₂|σ); infinite for a harmonic sequence.
pub fn decay_time(omega1: f64, e2: f64, sigma: f64) -> f64 {
    if e2 == 0.0 {
        f64::INFINITY
    } else {
        omega1 / (e2.abs() * sigma)
    }
}

/// Weighted least squares of ln w on (1, E, E²), weights w.
fn fit_gaussian(e: &[f64], w: &[f64]) -> Option<(f64, f64, f64, f64)> {
    let w_max = w.iter().fold(0.0f64, |m, &v| m.max(v));
    let e0 = e.iter().zip(w).map(|(e, w)| e * w).sum::<f64>() / w.iter().sum::<f64>();
    let scale = e
        .iter()
        .fold(0.0f64, |m, &x| m.max((x - e0).abs()))
        .max(f64::MIN_POSITIVE);
    // normal equations in the centred, scaled variable u = (E − e0)/scale
    let mut m = [[0.0f64; 3]; 3];
    let mut b = [0.0f64; 3];
    for (&ek, &wk) in e.iter().zip(w) {
        let u = (ek - e0) / scale;
        let basis = [1.0, u, u * u];
        let y = (wk / w_max).ln();
        let c = wk / w_max;
        for r in 0..3 {
            b[r] += c * basis[r] * y;
            for s in 0..3 {
                m[r][s] += c * basis[r] * basis[s];
            }
        }
    }
    let coef = solve3(m, b)?;
    if !(coef[2] < 0.0) {
        return None;
    }
    let (c0, c1, c2) = (coef[0], coef[1] / scale, coef[2] / (scale * scale));
    let var = -1.0 / (2.0 * c2);
    let mean = e0 + c1 * var;
    let ln_a = c0 + c1 * c1 * var / 2.0 + w_max.ln();
    let w_bar = w.iter().sum::<f64>() / w.len() as f64;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for (&ek, &wk) in e.iter().zip(w) {
        let fit = (ln_a - (ek - mean).powi(2) / (2.0 * var)).exp();
        ss_res += (wk - fit).powi(2);
        ss_tot += (wk - w_bar).powi(2);
    }
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    Some((ln_a.exp(), mean, var.sqrt(), r2))
}

fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..3 {
            let f = m[r][col] / m[col][col];
            for c in col..3 {
                m[r][c] -= f * m[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for r in (0..3).rev() {
        let s: f64 = (r + 1..3).map(|c| m[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / m[r][r];
    }
    Some(x)
}

/// Index k with E_k ≤ e ≤ E_{k+1}, clamped so that k−1 and k+1 exist
/// whenever the sequence has three or more levels.
fn bracket(energies: &[f64], e: f64) -> usize {
    let k = energies.partition_point(|&x| x <= e).saturating_sub(1);
    k.clamp(1.min(energies.len() - 2), energies.len() - 2)
}

/// (ω₁, e₂) around energy `e`.
fn local_spacing(energies: &[f64], e: f64) -> (f64, f64) {
    let k = bracket(energies, e);
    let omega1 = energies[k + 1] - energies[k];
    let e2 = if k >= 1 {
        0.5 * (energies[k + 1] + energies[k - 1]) - energies[k]
    } else {
        0.0
    };
    (omega1, e2)
}

/// Interference parameters between two fitted sequences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferencePair {
    pub i: usize,
    pub j: usize,
    pub delta_e: f64,
    pub omega_ij: f64,
    pub e_i: f64,
    pub sigma_ij: f64,
}

/// Number of level pairs averaged in δE_ij.
pub const PAIRING_LEVELS: usize = 5;

impl InterferencePair {
    pub fn new(seqs: &[GaussianSequence], i: usize, j: usize) -> Result<Self> {
        let (a, b) = match (seqs.get(i), seqs.get(j)) {
            (Some(a), Some(b)) if i != j => (a, b),
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "invalid sequence pair ({i}, {j})"
                )))
            }
        };
        let (si2, sj2) = (a.sigma * a.sigma, b.sigma * b.sigma);
        let e_i = (a.mean * sj2 + b.mean * si2) / (si2 + sj2);
        let k = bracket(&a.energies, e_i);
        let omega_ij = a.energies[k + 1] - a.energies[k];
        let sigma_ij = 2.0 * a.e2.abs() * a.sigma * b.sigma / (omega_ij * (si2 + sj2).sqrt());
        let near_a = nearest_sorted(&a.energies, e_i, PAIRING_LEVELS);
        let near_b = nearest_sorted(&b.energies, e_i, PAIRING_LEVELS);
        let n = near_a.len().min(near_b.len());
        let delta_e = near_a.iter().zip(&near_b).map(|(x, y)| x - y).sum::<f64>() / n as f64;
        Ok(Self {
            i,
            j,
            delta_e,
            omega_ij,
            e_i,
            sigma_ij,
        })
    }
}

/// The `count` energies closest to `e`, returned in ascending order.
fn nearest_sorted(energies: &[f64], e: f64, count: usize) -> Vec<f64> {
    let count = count.min(energies.len());
    let mut lo = energies.partition_point(|&x| x < e);
    let mut hi = lo;
    while hi - lo < count {
        let take_lo = if lo == 0 {
            false
        } else if hi == energies.len() {
            true
        } else {
            e - energies[lo - 1] <= energies[hi] - e
        };
        if take_lo {
            lo -= 1;
        } else {
            hi += 1;
        }
    }
    energies[lo..hi].to_vec()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectOptions {
    /// Components below this fraction of the largest weight are ignored.
    pub weight_threshold: f64,
    /// Largest extrapolation residual, as a fraction of the local spacing.
    pub frac_tol: f64,
    pub min_members: usize,
    /// Keep at most this many sequences (heaviest first).
    pub max_sequences: Option<usize>,
    pub min_components: usize,
    /// Fixed sequence spacing for seeding; estimated when absent.
    pub spacing: Option<f64>,
    /// Sequences with a worse fit go to the residual weight.
    pub min_r_squared: f64,
    /// Below this assigned weight the decomposition counts as unstructured.
    pub min_assigned: f64,
}

impl Default for DetectOptions {
    fn default() -> Self {
        Self {
            weight_threshold: 1e-4,
            frac_tol: 0.25,
            min_members: 4,
            max_sequences: None,
            min_components: 10,
            spacing: None,
            min_r_squared: 0.9,
            min_assigned: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceSet {
    pub sequences: Vec<GaussianSequence>,
    pub pairs: Vec<InterferencePair>,
    /// Weight of components outside every sequence.
    pub residual_weight: f64,
    /// Seed spacing used by the assignment.
    pub spacing: f64,
}

impl SequenceSet {
    pub fn from_sequences(
        sequences: Vec<GaussianSequence>,
        residual_weight: f64,
        spacing: f64,
    ) -> Result<Self> {
        if sequences.is_empty() {
            return Err(Error::Unstructured("no sequences".into()));
        }
        let mut pairs = Vec::new();
        for i in 0..sequences.len() {
            for j in i + 1..sequences.len() {
                pairs.push(InterferencePair::new(&sequences, i, j)?);
            }
        }
        Ok(Self {
            sequences,
            pairs,
            residual_weight,
            spacing,
        })
    }

    pub fn fit_quality(&self) -> Vec<f64> {
        self.sequences.iter().map(|s| s.r_squared).collect()
    }

    pub fn report_json(&self) -> serde_json::Value {
        let seqs: Vec<_> = self
            .sequences
            .iter()
            .map(|s| {
                serde_json::json!({
                    "A": s.amplitude,
                    "E_bar": s.mean,
                    "sigma": s.sigma,
                    "omega1": s.omega1,
                    "e2": s.e2,
                    "t_D": if s.t_d.is_finite() { serde_json::json!(s.t_d) } else { serde_json::Value::Null },
                    "members": s.members,
                    "R2": s.r_squared,
                })
            })
            .collect();
        serde_json::json!({
            "sequences": seqs,
            "pairs": self.pairs,
            "residual_weight": self.residual_weight,
            "spacing": self.spacing,
        })
    }
}

/// Grow a chain through the available positions of `e` from `seed`: each
/// step takes the available level closest to the linear extrapolation of
/// the last two members (the first step uses `s`), within `tol` times the
/// local spacing.
fn grow_chain(e: &[f64], available: &[bool], seed: usize, s: f64, tol: f64) -> Vec<usize> {
    let mut chain = vec![seed];
    for dir in [1.0, -1.0] {
        let (mut last, mut local) = (seed, s);
        loop {
            let pred = e[last] + dir * local;
            let reach = tol * local;
            let lo = e.partition_point(|&x| x < pred - reach);
            let hi = e.partition_point(|&x| x <= pred + reach);
            let best = (lo..hi)
                .filter(|&i| available[i] && i != last && (e[i] - e[last]) * dir > 0.0)
                .min_by(|&a, &b| (e[a] - pred).abs().total_cmp(&(e[b] - pred).abs()));
            match best {
                Some(i) => {
                    local = (e[i] - e[last]).abs();
                    chain.push(i);
                    last = i;
                }
                None => break,
            }
        }
    }
    chain.sort_unstable();
    chain
}

/// Dominant level spacing: among trial spacings E_x − E_seed from the
/// heaviest component, the one whose chain collects the largest weight.
fn estimate_spacing(e: &[f64], w: &[f64], tol: f64) -> Option<f64> {
    let seed = (0..e.len()).max_by(|&a, &b| w[a].total_cmp(&w[b]))?;
    let available = vec![true; e.len()];
    let min_gap = 1e-9 * e.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let mut best: Option<(f64, f64)> = None;
    for x in 0..e.len() {
        let s = (e[x] - e[seed]).abs();
        if s <= min_gap || w[x] < 1e-2 * w[seed] {
            continue;
        }
        let chain = grow_chain(e, &available, seed, s, tol);
        if chain.len() < 3 {
            continue;
        }
        let score: f64 = chain.iter().map(|&i| w[i]).sum();
        if best.is_none_or(|(b, _)| score > b * (1.0 + 1e-12)) {
            let span = e[*chain.last().unwrap()] - e[chain[0]];
            best = Some((score, span / (chain.len() - 1) as f64));
        }
    }
    best.map(|b| b.1)
}

/// Partition the significant components into spacing-coherent sequences and
/// fit a Gaussian to each. Chains are grown from the heaviest unassigned
/// component until every component is assigned; chains that are too short,
/// not peaked inside their own energy range, or poorly fitted go to the
/// residual weight.
pub fn detect_sequences(d: &Decomposition, opts: &DetectOptions) -> Result<SequenceSet> {
    let w_max = d.weights.iter().fold(0.0f64, |m, &v| m.max(v));
    let idx: Vec<usize> = (0..d.len())
        .filter(|&k| d.weights[k] >= opts.weight_threshold * w_max)
        .collect();
    if idx.len() < opts.min_components {
        return Err(Error::Unstructured(format!(
            "{} components above threshold, need {}",
            idx.len(),
            opts.min_components
        )));
    }
    let e: Vec<f64> = idx.iter().map(|&k| d.energies[k]).collect();
    let w: Vec<f64> = idx.iter().map(|&k| d.weights[k]).collect();
    let spacing = match opts.spacing {
        Some(s) if s > 0.0 => s,
        Some(s) => {
            return Err(Error::InvalidArgument(format!(
                "spacing must be positive, got {s}"
            )))
        }
        None => estimate_spacing(&e, &w, opts.frac_tol)
            .ok_or_else(|| Error::Unstructured("no level spacing found".into()))?,
    };

    let mut available = vec![true; e.len()];
    let mut order: Vec<usize> = (0..e.len()).collect();
    order.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
    let mut sequences = Vec::new();
    for &seed in &order {
        if !available[seed] {
            continue;
        }
        let chain = grow_chain(&e, &available, seed, spacing, opts.frac_tol);
        for &c in &chain {
            available[c] = false;
        }
        if chain.len() < opts.min_members {
            continue;
        }
        let members: Vec<usize> = chain.iter().map(|&p| idx[p]).collect();
        let energies: Vec<f64> = chain.iter().map(|&p| e[p]).collect();
        let weights: Vec<f64> = chain.iter().map(|&p| w[p]).collect();
        match GaussianSequence::fit(members, energies, weights) {
            Ok(s) if s.mean < s.energies[0] || s.mean > *s.energies.last().unwrap() => {
                log::debug!("dropping chain peaked outside its levels at {}", s.mean)
            }
            Ok(s) if !(s.r_squared >= opts.min_r_squared) => {
                log::debug!("dropping chain with R² = {:.3}", s.r_squared)
            }
            Ok(s) => sequences.push(s),
            Err(err) => log::debug!("dropping chain: {err}"),
        }
    }
    sequences.sort_by(|a, b| b.total_weight().total_cmp(&a.total_weight()));
    if let Some(m) = opts.max_sequences {
        sequences.truncate(m);
    }
    if sequences.is_empty() {
        return Err(Error::Unstructured(format!(
            "no well-fitted sequence with at least {} members",
            opts.min_members
        )));
    }
    let assigned: f64 = sequences.iter().map(|s| s.total_weight()).sum();
    if assigned < opts.min_assigned {
        return Err(Error::Unstructured(format!(
            "sequences hold {assigned:.3} of the weight, need {}",
            opts.min_assigned
        )));
    }
    let residual = (1.0 - assigned).clamp(0.0, 1.0);
    SequenceSet::from_sequences(sequences, residual, spacing)
}

/// Contribution of one sequence, A²σ√π/ω₁ · Θ₃(ω₁t/2, y(t)).
pub fn sp_sequence(seq: &GaussianSequence, t: f64) -> f64 {
    let y0 = (-0.25 * (seq.omega1 / seq.sigma).powi(2)).exp();
    let decay = if seq.t_d.is_finite() {
        (-(t / seq.t_d).powi(2)).exp()
    } else {
        1.0
    };
    // the nome lies in [0, 1) by construction
    seq.plateau() * theta3(0.5 * seq.omega1 * t, y0 * decay).unwrap_or(f64::NAN)
}

/// Interference term between sequences `pair.i` and `pair.j`.
pub fn sp_interference(pair: &InterferencePair, seqs: &[GaussianSequence], t: f64) -> f64 {
    let (a, b) = (&seqs[pair.i], &seqs[pair.j]);
    let s2 = a.sigma * a.sigma + b.sigma * b.sigma;
    let pref = 2.0 * a.amplitude * b.amplitude * (2.0 * PI).sqrt() * a.sigma * b.sigma
        / (pair.omega_ij * s2.sqrt());
    // level differences E_i - E_j cluster around the mean offset
    let shift = pair.delta_e - (a.mean - b.mean);
    let center = -shift / pair.omega_ij;
    let reach = ((2.0 * s2 * (1.0 / SERIES_CUTOFF).ln()).sqrt() / pair.omega_ij).ceil() + 1.0;
    let (p_lo, p_hi) = (
        (center - reach).floor() as i64,
        (center + reach).ceil() as i64,
    );
    let mut sum = 0.0;
    for p in p_lo..=p_hi {
        let p = p as f64;
        let g1 = (-(p * pair.omega_ij + shift).powi(2) / (2.0 * s2)).exp();
        let g2 = (-0.5 * (pair.sigma_ij * p * t).powi(2)).exp();
        if g1 < SERIES_CUTOFF || g2 < SERIES_CUTOFF {
            continue;
        }
        sum += g1 * g2 * ((pair.delta_e + p * pair.omega_ij) * t).cos();
    }
    pref * sum
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticOptions {
    /// Minimum R² of every sequence fit.
    pub min_r_squared: f64,
}

impl Default for AnalyticOptions {
    fn default() -> Self {
        Self { min_r_squared: 0.9 }
    }
}

/// Analytic SP with its per-term breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticSp {
    pub times: Vec<f64>,
    pub total: Vec<f64>,
    pub sequence_terms: Vec<Vec<f64>>,
    pub interference_terms: Vec<Vec<f64>>,
    pub pairs: Vec<(usize, usize)>,
}

impl AnalyticSp {
    pub fn to_series(&self, plateau: f64) -> SPSeries {
        SPSeries {
            times: self.times.clone(),
            sp: self.total.clone(),
            plateau,
        }
    }

    /// Columns t, sp_numeric (optional), sp_analytic, seq_i..., int_i_j...
    pub fn to_csv(&self, numeric: Option<&[f64]>) -> String {
        let mut s = String::from("t");
        if numeric.is_some() {
            s.push_str(",sp_numeric");
        }
        s.push_str(",sp_analytic");
        for i in 0..self.sequence_terms.len() {
            let _ = write!(s, ",seq_{i}");
        }
        for (i, j) in &self.pairs {
            let _ = write!(s, ",int_{i}_{j}");
        }
        s.push('\n');
        for (r, t) in self.times.iter().enumerate() {
            let _ = write!(s, "{t:.16e}");
            if let Some(num) = numeric {
                let _ = write!(s, ",{:.16e}", num[r]);
            }
            let _ = write!(s, ",{:.16e}", self.total[r]);
            for col in self.sequence_terms.iter().chain(&self.interference_terms) {
                let _ = write!(s, ",{:.16e}", col[r]);
            }
            s.push('\n');
        }
        s
    }

    pub fn write_csv(&self, path: &Path, numeric: Option<&[f64]>) -> Result<()> {
        std::fs::write(path, self.to_csv(numeric)).map_err(|e| Error::io(path, e))
    }
}

pub fn sp_analytic(ss: &SequenceSet, times: &[f64], opts: &AnalyticOptions) -> Result<AnalyticSp> {
    check_grid(times)?;
    if ss.sequences.is_empty() {
        return Err(Error::Unstructured("no sequences".into()));
    }
    if let Some(bad) = ss
        .sequences
        .iter()
        .position(|s| !(s.r_squared >= opts.min_r_squared))
    {
        return Err(Error::Unstructured(format!(
            "sequence {bad} fit quality R² = {:.4} below {}",
            ss.sequences[bad].r_squared, opts.min_r_squared
        )));
    }
    let rows: Vec<(Vec<f64>, Vec<f64>)> = times
        .par_iter()
        .map(|&t| {
            let seq: Vec<f64> = ss.sequences.iter().map(|s| sp_sequence(s, t)).collect();
            let int: Vec<f64> = ss
                .pairs
                .iter()
                .map(|p| sp_interference(p, &ss.sequences, t))
                .collect();
            (seq, int)
        })
        .collect();
    let mut sequence_terms = vec![Vec::with_capacity(times.len()); ss.sequences.len()];
    let mut interference_terms = vec![Vec::with_capacity(times.len()); ss.pairs.len()];
    let mut total = Vec::with_capacity(times.len());
    for (seq, int) in rows {
        total.push(seq.iter().sum::<f64>() + int.iter().sum::<f64>());
        for (col, v) in sequence_terms.iter_mut().zip(seq) {
            col.push(v);
        }
        for (col, v) in interference_terms.iter_mut().zip(int) {
            col.push(v);
        }
    }
    Ok(AnalyticSp {
        times: times.to_vec(),
        total,
        sequence_terms,
        interference_terms,
        pairs: ss.pairs.iter().map(|p| (p.i, p.j)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta3_special_values() {
        assert_eq!(theta3(1.234, 0.0).unwrap(), 1.0);
        let v = theta3(0.0, 0.5).unwrap();
        assert!((v - 2.128_936_827_211_877).abs() < 1e-12, "{v}");
        let y: f64 = 0.3;
        let alt =
            1.0 - 2.0 * y + 2.0 * y.powi(4) - 2.0 * y.powi(9) + 2.0 * y.powi(16) - 2.0 * y.powi(25);
        assert!((theta3(PI / 2.0, y).unwrap() - alt).abs() < 1e-14);
        assert!(theta3(0.0, 1.0).is_err());
        assert!(theta3(0.0, -0.1).is_err());
    }

    #[test]
    fn gaussian_fit_recovers_parameters() {
        let e: Vec<f64> = (0..30)
            .map(|k| 0.7 * k as f64 + 0.01 * (k * k) as f64)
            .collect();
        let w: Vec<f64> = e
            .iter()
            .map(|x| 0.2 * (-(x - 9.0f64).powi(2) / (2.0 * 2.5 * 2.5)).exp())
            .collect();
        let s = GaussianSequence::fit((0..30).collect(), e, w).unwrap();
        assert!((s.amplitude - 0.2).abs() < 1e-10);
        assert!((s.mean - 9.0).abs() < 1e-10);
        assert!((s.sigma - 2.5).abs() < 1e-10);
        assert!((s.r_squared - 1.0).abs() < 1e-10);
        assert!((s.e2 - 0.01).abs() < 1e-12);
    }

    #[test]
    fn decay_time_halves_with_doubled_width() {
        assert_eq!(decay_time(0.8, 0.01, 2.0), 2.0 * decay_time(0.8, 0.01, 4.0));
        assert!(decay_time(0.8, 0.0, 2.0).is_infinite());
    }

    #[test]
    fn nearest_levels() {
        let e = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert_eq!(nearest_sorted(&e, 0.2, 3), vec![0.0, 1.0, 2.0]);
        assert_eq!(nearest_sorted(&e, 3.4, 2), vec![3.0, 4.0]);
        assert_eq!(nearest_sorted(&e, 9.0, 2), vec![5.0, 6.0]);
    }

    #[test]
    fn harmonic_sequence_is_periodic() {
        let e: Vec<f64> = (0..40).map(|k| 0.5 * k as f64).collect();
        let w: Vec<f64> = e
            .iter()
            .map(|x| (-(x - 10.0f64).powi(2) / 8.0).exp())
            .collect();
        let s = GaussianSequence::fit((0..40).collect(), e, w).unwrap();
        assert!(s.t_d.is_infinite());
        let period = 2.0 * PI / s.omega1;
        for t in [0.3, 1.7, 5.0] {
            assert!((sp_sequence(&s, t) - sp_sequence(&s, t + period)).abs() < 1e-12);
        }
    }
}
