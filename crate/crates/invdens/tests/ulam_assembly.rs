mod common;

use common::{exact_ulam, linear_mod_one, load_map, q, row_sum_violations, Dense};
use invdens::map::PiecewiseMap;
use invdens::matrix::{markovize, nnz_bound, TransitionMatrix};
use invdens::ulam::{assemble_row, assemble_ulam, AssemblyConfig};
use invdens::ExactRational;

fn nu_for(k: usize) -> AssemblyConfig {
    AssemblyConfig::new(1e-10 / k as f64)
}

/// Entries not enclosed by `value ± err`.
fn oracle_misses(m: &TransitionMatrix<f64>, exact: &Dense) -> usize {
    let mut bad = 0;
    for (i, row) in exact.iter().enumerate() {
        let got: Vec<(usize, f64, f64)> = m.row(i).collect();
        for (j, e) in row.iter().enumerate() {
            let (v, err) = got.iter().find(|t| t.0 == j).map_or((0.0, 0.0), |t| (t.1, t.2));
            if (&q(v) - e).abs() > q(err) {
                bad += 1;
            }
        }
    }
    bad
}

#[test]
fn tripling_matches_exact_oracle() {
    let map = PiecewiseMap::<f64>::parse("linear 3 mod 1").unwrap();
    for k in [3, 6, 9, 81] {
        let m = assemble_ulam(&map, k, &nu_for(k)).unwrap();
        let exact = exact_ulam(&linear_mod_one(3, 1), k);
        assert_eq!(oracle_misses(&m, &exact), 0, "k = {k}");
        assert!(m.eps <= f64::EPSILON, "k = {k}: eps {}", m.eps);
        for (i, row) in exact.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                // equal up to one ulp of representation
                let (v, x) = (m.get(i, j), e.to_f64());
                assert!((v - x).abs() <= x * f64::EPSILON, "entry ({i},{j}) at k = {k}: {v} vs {x}");
            }
        }
    }
}

#[test]
fn non_markov_map_matches_exact_oracle() {
    let map = PiecewiseMap::<f64>::parse("linear 17/5 mod 1").unwrap();
    for k in [17, 64, 100] {
        let raw = assemble_ulam(&map, k, &nu_for(k)).unwrap();
        let exact = exact_ulam(&linear_mod_one(17, 5), k);
        assert_eq!(oracle_misses(&raw, &exact), 0, "raw, k = {k}");
        let m = markovize(&raw).unwrap();
        assert_eq!(oracle_misses(&m, &exact), 0, "markovized, k = {k}");
        assert_eq!(row_sum_violations(&m), 0);
    }
}

#[test]
fn column_sums_match_preimage_measure() {
    let k = 128;
    let map = PiecewiseMap::<f64>::parse("linear 17/5 mod 1").unwrap();
    let m = markovize(&assemble_ulam(&map, k, &nu_for(k)).unwrap()).unwrap();
    let exact = exact_ulam(&linear_mod_one(17, 5), k);
    let sums = m.column_sums();
    for (j, s) in sums.iter().enumerate() {
        let e = exact.iter().fold(ExactRational::zero(), |a, row| &a + &row[j]);
        assert!((s - e.to_f64()).abs() < 1e-12, "column {j}");
    }
    let map = PiecewiseMap::<f64>::parse("linear 3 mod 1").unwrap();
    let m = assemble_ulam(&map, 81, &nu_for(81)).unwrap();
    assert!(m.column_sums().iter().all(|&s| (s - 1.0).abs() < 1e-15));
}

#[test]
fn every_assembled_matrix_is_row_stochastic() {
    for name in ["tripling", "linear_17_5", "quadratic_lorenz", "quadratic_17_5", "lanford"] {
        let map = load_map(name);
        for k in [64, 250] {
            let m = markovize(&assemble_ulam(&map, k, &AssemblyConfig::for_k(k)).unwrap()).unwrap();
            assert_eq!(row_sum_violations(&m), 0, "{name} k = {k}");
            assert!(nnz_bound(&m, map.sup_abs_derivative().hi).is_ok(), "{name} k = {k}");
        }
    }
}

#[test]
fn halving_nu_never_increases_eps() {
    let map = load_map("quadratic_lorenz");
    let k = 64;
    let mut last = f64::INFINITY;
    let mut nu = 1e-4 / k as f64;
    for _ in 0..8 {
        let m = assemble_ulam(&map, k, &AssemblyConfig::new(nu)).unwrap();
        assert!(m.eps <= last, "nu = {nu}: eps {} after {last}", m.eps);
        last = m.eps;
        nu /= 2.0;
    }
}

#[test]
fn rows_enclose_sampled_transition_probabilities() {
    // k |I_i ∩ T^{-1} I_j| estimated on a fine uniform grid
    let map = load_map("quadratic_lorenz");
    let k = 16;
    let cfg = AssemblyConfig::for_k(k);
    let n = 200_000;
    for i in [0, 3, 7, 12, 15] {
        let (row, _) = assemble_row(&map, k, i, &cfg).unwrap();
        let mut hits = vec![0usize; k];
        for s in 0..n {
            let x = (i as f64 + (s as f64 + 0.5) / n as f64) / k as f64;
            let y = map.eval_point(x).unwrap();
            hits[((y * k as f64) as usize).min(k - 1)] += 1;
        }
        for (j, &h) in hits.iter().enumerate() {
            let v = row.iter().find(|t| t.0 as usize == j).map_or(0.0, |t| t.1);
            assert!((v - h as f64 / n as f64).abs() < 1e-4, "row {i} col {j}: {v} vs {}", h as f64 / n as f64);
        }
    }
}
