//! Checks against independent reference computations.

use dicke_core::analytic::*;
use dicke_core::dynamics::*;
use dicke_core::model::*;
use dicke_core::spectrum::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Hamiltonian written directly from the ladder-operator algebra.
fn reference_matrix(w: f64, w0: f64, g: f64, j: f64, n_max: u32, parity: i32) -> Vec<Vec<f64>> {
    let two_j = (2.0 * j) as i32;
    let mut states = Vec::new();
    for n in 0..=n_max as i32 {
        for k in 0..=two_j {
            let sign = if (n + k) % 2 == 0 { 1 } else { -1 };
            if sign == parity {
                states.push((n, k as f64 - j));
            }
        }
    }
    let c = g / (2.0 * j).sqrt();
    let dim = states.len();
    let mut h = vec![vec![0.0; dim]; dim];
    for (a, &(n, m)) in states.iter().enumerate() {
        h[a][a] = w * n as f64 + w0 * m;
        for (b, &(n2, m2)) in states.iter().enumerate() {
            let field = if n2 == n + 1 {
                ((n + 1) as f64).sqrt()
            } else if n2 == n - 1 {
                (n as f64).sqrt()
            } else {
                continue;
            };
            let spin = if m2 == m + 1.0 {
                (j * (j + 1.0) - m * (m + 1.0)).sqrt()
            } else if m2 == m - 1.0 {
                (j * (j + 1.0) - m * (m - 1.0)).sqrt()
            } else {
                continue;
            };
            h[b][a] += c * field * spin;
        }
    }
    h
}

/// Cyclic Jacobi rotations.
#[allow(clippy::needless_range_loop)]
fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&k| k != i).map(move |k| (i, k)))
            .map(|(i, k)| a[i][k] * a[i][k])
            .sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut e: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    e.sort_by(f64::total_cmp);
    e
}

#[test]
fn spectrum_matches_reference_diagonalization() {
    for (j, n_max, g) in [(1.0, 8, 0.7), (2.5, 10, 1.0), (4.0, 6, 0.3)] {
        let p = ModelParams::new(1.3, 0.8, g, j).unwrap();
        for (parity, sign) in [(Parity::Positive, 1), (Parity::Negative, -1)] {
            let basis = BasisSpec::new(&p, n_max, parity);
            let es = diagonalize(&build_hamiltonian(&p, &basis).unwrap()).unwrap();
            let reference = jacobi_eigenvalues(reference_matrix(1.3, 0.8, g, j, n_max, sign));
            assert_eq!(es.energies().len(), reference.len());
            for (a, b) in es.energies().iter().zip(&reference) {
                assert!((a - b).abs() < 1e-10, "J={j} {parity:?}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn windowed_levels_match_reference() {
    let p = ModelParams::new(1.0, 1.0, 1.0, 3.0).unwrap();
    let basis = build_basis(&p, 14).unwrap();
    let h = build_hamiltonian(&p, &basis).unwrap();
    let es = diagonalize_window(&h, EnergyWindow::new(-6.0, -2.0).unwrap()).unwrap();
    let reference = jacobi_eigenvalues(reference_matrix(1.0, 1.0, 1.0, 3.0, 14, 1));
    for (a, b) in es.all_energies().iter().zip(&reference) {
        assert!((a - b).abs() < 1e-9);
    }
    assert!(es.energies().iter().all(|&e| (-6.0..=-2.0).contains(&e)));
}

#[test]
fn poisson_levels_have_uncorrelated_gap_ratio() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut levels: Vec<f64> = (0..4000).map(|_| rng.random::<f64>()).collect();
    levels.sort_by(f64::total_cmp);
    let stats = level_spacing_stats(
        &levels,
        EnergyWindow::new(0.0, 1.0).unwrap(),
        &SpacingOptions::default(),
    )
    .unwrap();
    let poisson = 2.0 * 2f64.ln() - 1.0;
    assert!(
        (stats.mean_ratio - poisson).abs() < 0.015,
        "{}",
        stats.mean_ratio
    );
    // P(s < 0.5) = 1 - exp(-0.5)
    assert!((stats.fraction_below(0.5) - (1.0 - (-0.5f64).exp())).abs() < 0.03);
}

fn interleaved(offsets: &[f64], means: &[f64], amps: &[f64]) -> Decomposition {
    let mut levels = Vec::new();
    for ((&off, &mean), &amp) in offsets.iter().zip(means).zip(amps) {
        for k in 0..40 {
            let k = k as f64;
            let e = off + 1.0 * k + 0.002 * k * k;
            let w = amp * (-(e - mean).powi(2) / (2.0 * 3.0 * 3.0)).exp();
            levels.push((e, w));
        }
    }
    levels.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (e, w) = levels.into_iter().unzip();
    Decomposition::from_weights(e, w).unwrap()
}

#[test]
fn three_interleaved_sequences_are_separated() {
    let d = interleaved(&[0.0, 0.31, 0.64], &[18.0, 20.0, 21.5], &[1.0, 0.6, 0.3]);
    let ss = detect_sequences(&d, &DetectOptions::default()).unwrap();
    assert_eq!(ss.sequences.len(), 3);
    assert!(ss.residual_weight < 0.01, "{}", ss.residual_weight);
    let mut means: Vec<f64> = ss.sequences.iter().map(|s| s.mean).collect();
    means.sort_by(f64::total_cmp);
    for (m, want) in means.iter().zip([18.0, 20.0, 21.5]) {
        assert!((m - want).abs() < 1e-6, "{m}");
    }
    for s in &ss.sequences {
        assert!((s.sigma - 3.0).abs() < 1e-6);
        assert!(s.r_squared > 0.999);
        assert!(s.e2 > 0.0);
    }
}

#[test]
fn analytic_sp_of_interleaved_sequences_tracks_numeric() {
    let d = interleaved(&[0.0, 0.31, 0.64], &[18.0, 20.0, 21.5], &[1.0, 0.6, 0.3]);
    let ss = detect_sequences(&d, &DetectOptions::default()).unwrap();
    let t_d = ss
        .sequences
        .iter()
        .map(|s| s.t_d)
        .fold(f64::INFINITY, f64::min);
    let times: Vec<f64> = (0..600).map(|k| k as f64 * t_d / 600.0).collect();
    let num = survival_probability(&d, &times, &SpOptions::default()).unwrap();
    let an = sp_analytic(&ss, &times, &AnalyticOptions::default()).unwrap();
    let worst = num
        .sp
        .iter()
        .zip(&an.total)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    // continuum approximation error at sigma/omega1 = 3
    assert!(worst < 0.05, "{worst}");
}

#[test]
fn interference_term_matches_double_sum() {
    let seq = |offset: f64, mean: f64, amp: f64, sigma: f64| {
        let e: Vec<f64> = (0..80).map(|k| offset + 0.5 * k as f64).collect();
        let w: Vec<f64> = e
            .iter()
            .map(|x| amp * (-(x - mean).powi(2) / (2.0 * sigma * sigma)).exp())
            .collect();
        GaussianSequence::fit((0..80).collect(), e, w).unwrap()
    };
    let seqs = vec![seq(0.0, 20.0, 0.05, 2.5), seq(0.17, 19.3, 0.03, 3.0)];
    let pair = InterferencePair::new(&seqs, 0, 1).unwrap();
    let rev = 4.0 * std::f64::consts::PI;
    for t in [0.0, 0.4, 0.5 * rev, rev, rev + 0.3, 2.0 * rev] {
        let mut direct = 0.0;
        for (ea, wa) in seqs[0].energies.iter().zip(&seqs[0].weights) {
            for (eb, wb) in seqs[1].energies.iter().zip(&seqs[1].weights) {
                direct += 2.0 * wa * wb * ((ea - eb) * t).cos();
            }
        }
        let closed = sp_interference(&pair, &seqs, t);
        assert!(
            (closed - direct).abs() < 1e-10,
            "t={t}: {closed} vs {direct}"
        );
    }
}

#[test]
fn sequence_term_matches_direct_sum() {
    let e: Vec<f64> = (0..80).map(|k| 0.5 * k as f64).collect();
    let w: Vec<f64> = e
        .iter()
        .map(|x| 0.05 * (-(x - 20.0f64).powi(2) / (2.0 * 6.25)).exp())
        .collect();
    let s = GaussianSequence::fit((0..80).collect(), e.clone(), w.clone()).unwrap();
    for t in [0.0, 0.9, 3.3, 12.0] {
        let re: f64 = e.iter().zip(&w).map(|(e, w)| w * (e * t).cos()).sum();
        let im: f64 = e.iter().zip(&w).map(|(e, w)| w * (e * t).sin()).sum();
        assert!((sp_sequence(&s, t) - (re * re + im * im)).abs() < 1e-10);
    }
}
