mod common;

use lsmtopo_core::energy::{
    disco_decomposition, k_sample_statistic, permutation_test, two_sample_statistic, DistanceCache, StatisticKind,
};
use lsmtopo_core::landscape::build_landscape;
use lsmtopo_core::persistence::PersistenceDiagram;
use lsmtopo_core::seed;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn cache_from(points: &[Vec<f64>]) -> DistanceCache {
    DistanceCache::from_points(points)
}

/// Splits `0..n` into `k` non-empty groups by a random labelling.
fn random_groups(rng: &mut impl Rng, n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let mut groups: Vec<Vec<usize>> = idx[..k].iter().map(|&i| vec![i]).collect();
    for &i in &idx[k..] {
        groups[rng.gen_range(0..k)].push(i);
    }
    groups
}

proptest! {
    #[test]
    fn disco_identity_and_signs(
        pts in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 4..20),
        k in 2usize..4,
        s in any::<u64>(),
    ) {
        let d = cache_from(&pts);
        let mut rng = seed::rng(s);
        let groups = random_groups(&mut rng, pts.len(), k.min(pts.len()));
        for rho in [0.5, 1.0, 1.5, 2.0] {
            let r = disco_decomposition(&d, &groups, rho).unwrap();
            prop_assert!((r.total - (r.within + r.between)).abs() <= 1e-10 * r.total.abs().max(1e-300));
            prop_assert!(r.within >= 0.0);
            prop_assert!(r.between >= -1e-12 * r.total);
        }
    }

    #[test]
    fn energy_statistics_nonnegative(
        pts in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 4..20),
        s in any::<u64>(),
    ) {
        let d = cache_from(&pts);
        let mut rng = seed::rng(s);
        let groups = random_groups(&mut rng, pts.len(), 2);
        let t = two_sample_statistic(&d, &groups[0], &groups[1]).unwrap();
        prop_assert!(t >= -1e-12);
    }
}

#[test]
fn k_sample_is_sum_of_pairs() {
    let mut rng = seed::rng(41);
    for _ in 0..20 {
        let pts: Vec<Vec<f64>> = (0..12).map(|_| vec![rng.gen(), rng.gen()]).collect();
        let d = cache_from(&pts);
        let g = random_groups(&mut rng, 12, 3);
        let direct = two_sample_statistic(&d, &g[0], &g[1]).unwrap()
            + two_sample_statistic(&d, &g[0], &g[2]).unwrap()
            + two_sample_statistic(&d, &g[1], &g[2]).unwrap();
        let k = k_sample_statistic(&d, &g).unwrap();
        assert!((direct - k).abs() <= 1e-12 * direct.abs());
    }
}

/// Hand evaluation of the two-sample statistic from its definition.
#[test]
fn two_sample_matches_definition() {
    let xs = [0.3, 1.7, 2.2];
    let ys = [0.9, 4.0];
    let all: Vec<f64> = xs.iter().chain(&ys).copied().collect();
    let d = DistanceCache::from_scalars(&all);
    let mean = |a: &[f64], b: &[f64]| {
        a.iter().flat_map(|x| b.iter().map(move |y| (x - y).abs())).sum::<f64>() / (a.len() * b.len()) as f64
    };
    let e = 2.0 * mean(&xs, &ys) - mean(&xs, &xs) - mean(&ys, &ys);
    let want = 3.0 * 2.0 / 5.0 * e;
    let got = two_sample_statistic(&d, &[0, 1, 2], &[3, 4]).unwrap();
    assert!((got - want).abs() < 1e-12);
}

#[test]
fn p_values_are_on_the_permutation_lattice() {
    let mut rng = seed::rng(42);
    let pts: Vec<Vec<f64>> = (0..16).map(|_| vec![rng.gen()]).collect();
    let d = cache_from(&pts);
    for (b, kind) in [(99, StatisticKind::KSample), (49, StatisticKind::Disco { rho: 1.0 })] {
        let r = permutation_test(&d, &[8, 8], kind, b, 3).unwrap();
        let scaled = r.p_value * (b + 1) as f64;
        assert!((scaled - scaled.round()).abs() < 1e-9);
        assert!(r.p_value >= 1.0 / (b + 1) as f64 && r.p_value <= 1.0);
    }
}

#[test]
fn scaling_the_cache_preserves_p_values() {
    let mut rng = seed::rng(43);
    let pts: Vec<Vec<f64>> = (0..18).map(|i| vec![rng.gen::<f64>() + (i / 6) as f64 * 0.3]).collect();
    let d = cache_from(&pts);
    for kind in [StatisticKind::TwoSample, StatisticKind::KSample, StatisticKind::Disco { rho: 1.0 }] {
        let sizes: &[usize] = if kind == StatisticKind::TwoSample { &[9, 9] } else { &[6, 6, 6] };
        let a = permutation_test(&d, sizes, kind, 199, 5).unwrap();
        for c in [2.0, 0.5, 3.7] {
            let b = permutation_test(&d.scaled(c), sizes, kind, 199, 5).unwrap();
            assert_eq!(a.p_value, b.p_value, "{kind:?} c={c}");
        }
    }
}

#[test]
fn landscape_cache_is_symmetric_with_zero_diagonal() {
    let mut rng = seed::rng(44);
    let ls: Vec<_> = (0..6)
        .map(|_| {
            let count = rng.gen_range(1..5);
            build_landscape(&PersistenceDiagram::new(0, common::random_diagram(&mut rng, count), 9.0))
        })
        .collect();
    let d = DistanceCache::from_landscapes(&ls).unwrap();
    for i in 0..6 {
        assert_eq!(d.get(i, i), 0.0);
        for j in 0..6 {
            assert_eq!(d.get(i, j), d.get(j, i));
        }
    }
    assert!(DistanceCache::from_matrix(6, d.as_slice().to_vec()).is_ok());
}

/// Under exchangeability `P(p̂ ≤ α) ≤ α`; a small Monte Carlo check of the
/// rejection rate on a pool of identically distributed scalars.
#[test]
fn rejection_rate_under_null() {
    let mut rng = seed::rng(45);
    let runs = 200;
    let mut rejections = 0;
    for r in 0..runs {
        let pts: Vec<Vec<f64>> = (0..20).map(|_| vec![rng.gen::<f64>()]).collect();
        let d = cache_from(&pts);
        let rep = permutation_test(&d, &[10, 10], StatisticKind::KSample, 99, r).unwrap();
        if rep.p_value <= 0.05 {
            rejections += 1;
        }
    }
    let rate = rejections as f64 / runs as f64;
    assert!((0.01..=0.10).contains(&rate), "rate {rate}");
}
