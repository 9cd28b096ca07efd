use ghz_witness::bound::{alpha_upper, GridSpec, GRID_SLACK};
use ghz_witness::operators::{family_operator, StateVector};
use ghz_witness::oracle::{
    alpha_oracle, anti_diagonal_coefficients, rest_block_spectrum, m_rest_dense, rest_parameters,
    seesaw, SeesawConfig,
};
use ghz_witness::search::{search_optimal, CMode, SearchConfig};
use ghz_witness::settings::SettingSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_set(rng: &mut impl Rng, n: usize) -> SettingSet {
    loop {
        let idx: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
        if !idx.is_empty() {
            return SettingSet::new(n, idx).unwrap();
        }
    }
}

#[test]
fn rest_spectrum_is_union_of_two_by_two_blocks() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for _ in 0..100 {
        let n = rng.random_range(2..=6);
        let k = rng.random_range(1..n);
        let s = random_set(&mut rng, n);
        let c = rng.random_range(s.len() as f64..=2.0 * s.len() as f64);
        let phi = StateVector::random(k, &mut rng).unwrap();

        let dense = m_rest_dense(&s, c, &phi).unwrap();
        let p = rest_parameters(&s, &phi).unwrap();
        let f = anti_diagonal_coefficients(&s, c, &p.z, n - k);
        let blocks = rest_block_spectrum(n - k, p.x, p.y, &f);
        let eig = dense.eigenvalues_hermitian();
        assert_eq!(eig.len(), blocks.len());
        for (a, b) in eig.iter().zip(&blocks) {
            assert!(
                (a - b).abs() < 1e-9,
                "N={n} k={k} S={s}: {eig:?} vs {blocks:?}"
            );
        }
    }
}

#[test]
fn seesaw_objective_never_decreases() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let n = rng.random_range(3..=5);
        let s = random_set(&mut rng, n);
        let c = s.len() as f64 + 1.0;
        let m = family_operator(n, &s, c).unwrap();
        let k = rng.random_range(1..n);
        let start = StateVector::random(k, &mut rng).unwrap();
        let t = seesaw(&m, start, &SeesawConfig::default()).unwrap();
        for w in t.history.windows(2) {
            assert!(w[1] >= w[0] - 1e-12, "{:?}", t.history);
        }
    }
}

#[test]
fn cut_value_depends_only_on_cut_size() {
    // the operator is symmetric under party permutations, so cutting off the
    // first k or the last k parties gives the same value
    for (n, idx, c) in [
        (4, vec![0, 1], 3.0),
        (5, vec![1, 4], 3.0),
        (5, vec![0, 2, 3], 4.0),
    ] {
        let s = SettingSet::new(n, idx).unwrap();
        let r = alpha_oracle(&s, c, &SeesawConfig::default()).unwrap();
        for k in 1..n {
            let a = r.per_k[k - 1].f_value;
            let b = r.per_k[n - k - 1].f_value;
            assert!((a - b).abs() < 1e-8, "N={n} S={s} k={k}: {a} vs {b}");
        }
        assert_eq!(
            r.alpha_best,
            r.per_k.iter().map(|p| p.f_value).fold(f64::MIN, f64::max)
        );
    }
}

#[test]
fn oracle_respects_the_bound_for_tabulated_pair() {
    let s = SettingSet::new(5, [1, 4]).unwrap();
    let oracle = alpha_oracle(&s, 3.0, &SeesawConfig::default()).unwrap();
    assert!(oracle.alpha_best >= 1.0);
    assert!(oracle.alpha_best <= 1.103 + 0.01);
    let bound = alpha_upper(&s, 3.0, &GridSpec::default()).unwrap();
    assert!(oracle.alpha_best <= bound.alpha_upper + GRID_SLACK);
}

#[test]
fn dedup_does_not_change_best_threshold() {
    let grid = GridSpec::coarse(0.02);
    for budget in 1..=5 {
        let on = search_optimal(
            5,
            budget,
            &SearchConfig {
                grid,
                ..SearchConfig::default()
            },
        )
        .unwrap();
        let off = search_optimal(
            5,
            budget,
            &SearchConfig {
                grid,
                dedup: false,
                ..SearchConfig::default()
            },
        )
        .unwrap();
        // equivalent sets share the operator but not the grid, so their bounds
        // agree only to grid accuracy
        let gap = (on.best.p_asymptotic - off.best.p_asymptotic).abs();
        assert!(gap < GRID_SLACK, "budget {budget}: {gap}");
        assert!(on.scanned <= off.scanned);
        assert_eq!(off.pruned, 0);
    }
}

#[test]
fn reflection_observed_not_assumed() {
    // j → N−j is not used for pruning; this only records that the bound
    // happens to agree on it for N = 5
    let grid = GridSpec::coarse(0.02);
    for idx in [vec![0, 1], vec![1, 2, 4], vec![0, 1, 3]] {
        let s = SettingSet::new(5, idx.clone()).unwrap();
        let mirrored = SettingSet::new(5, idx.iter().map(|j| (5 - j) % 5)).unwrap();
        for c in s.len()..=2 * s.len() {
            let a = alpha_upper(&s, c as f64, &grid).unwrap().alpha_upper;
            let b = alpha_upper(&mirrored, c as f64, &grid).unwrap().alpha_upper;
            assert!((a - b).abs() < 2.0 * GRID_SLACK, "{s} vs {mirrored}");
        }
    }
}

#[test]
fn full_budget_reaches_one_half() {
    for n in [5, 10, 15] {
        let cfg = SearchConfig {
            c_mode: CMode::FixedAtSize,
            grid: GridSpec::coarse(0.02),
            ..SearchConfig::default()
        };
        let r = search_optimal(n, n, &cfg).unwrap();
        assert_eq!(r.best.settings, SettingSet::full(n).unwrap());
        assert!((r.best.p_asymptotic - 0.5).abs() < 5e-3);
    }
}
