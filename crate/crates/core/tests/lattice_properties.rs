use std::collections::HashMap;

use freeprob::nc_lattice::catalan;
use freeprob::{enumerate_nc, is_noncrossing, kreweras, leq, moebius_to_top, NCPartition};
use proptest::prelude::*;

/// Möbius function to the top by the defining recursion on the explicit lattice.
fn moebius_by_recursion(r: usize) -> HashMap<NCPartition, i64> {
    let all = enumerate_nc(r).unwrap();
    let top = NCPartition::one_block(r);
    let mut mu: HashMap<NCPartition, i64> = HashMap::new();
    // Coarser partitions first: fewer blocks.
    let mut order: Vec<&NCPartition> = all.iter().collect();
    order.sort_by_key(|p| p.blocks().len());
    for sigma in order {
        if *sigma == top {
            mu.insert(sigma.clone(), 1);
            continue;
        }
        let total: i64 = all
            .iter()
            .filter(|tau| *tau != sigma && leq(sigma, tau).unwrap())
            .map(|tau| mu[tau])
            .sum();
        mu.insert(sigma.clone(), -total);
    }
    mu
}

/// `π` on odd points and `σ` on even points of `{1..2r}`.
fn interleaved(pi: &NCPartition, sigma: &NCPartition) -> Vec<Vec<usize>> {
    let mut blocks: Vec<Vec<usize>> = pi
        .blocks()
        .iter()
        .map(|b| b.iter().map(|&i| 2 * i - 1).collect())
        .collect();
    blocks.extend(
        sigma
            .blocks()
            .iter()
            .map(|b| b.iter().map(|&i| 2 * i).collect::<Vec<_>>()),
    );
    blocks
}

#[test]
fn counts_are_catalan() {
    for r in 1..=10 {
        assert_eq!(enumerate_nc(r).unwrap().len() as u64, catalan(r), "r = {r}");
    }
}

#[test]
fn moebius_row_sums_vanish() {
    assert_eq!(enumerate_nc(1).unwrap().iter().map(moebius_to_top).sum::<i64>(), 1);
    for r in 2..=10 {
        let s: i64 = enumerate_nc(r).unwrap().iter().map(moebius_to_top).sum();
        assert_eq!(s, 0, "r = {r}");
    }
}

#[test]
fn moebius_matches_recursive_definition() {
    for r in 1..=6 {
        let mu = moebius_by_recursion(r);
        for pi in enumerate_nc(r).unwrap().iter() {
            assert_eq!(moebius_to_top(pi), mu[pi], "{pi}");
        }
    }
}

#[test]
fn kreweras_is_an_order_reversing_bijection() {
    for r in 1..=6 {
        let all = enumerate_nc(r).unwrap();
        let images: Vec<NCPartition> = all.iter().map(kreweras).collect();
        let mut sorted = images.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), all.len(), "injective on NC({r})");
        for (i, sigma) in all.iter().enumerate() {
            for (j, pi) in all.iter().enumerate() {
                if leq(sigma, pi).unwrap() {
                    assert!(leq(&images[j], &images[i]).unwrap(), "{sigma} ≤ {pi}");
                }
            }
        }
    }
}

#[test]
fn kreweras_is_the_maximal_interleaved_complement() {
    for r in 1..=6 {
        let all = enumerate_nc(r).unwrap();
        for pi in all.iter() {
            let k = kreweras(pi);
            assert!(is_noncrossing(2 * r, &interleaved(pi, &k)).unwrap());
            for sigma in all.iter() {
                if is_noncrossing(2 * r, &interleaved(pi, sigma)).unwrap() {
                    assert!(leq(sigma, &k).unwrap(), "{sigma} not below K({pi}) = {k}");
                }
            }
        }
    }
}

#[test]
fn double_complement_is_a_rotation() {
    for r in 1..=8 {
        for pi in enumerate_nc(r).unwrap().iter() {
            let kk = kreweras(&kreweras(pi));
            let shifted = NCPartition::new(
                r,
                pi.blocks()
                    .iter()
                    .map(|b| b.iter().map(|&i| (i + r - 2) % r + 1).collect())
                    .collect(),
            )
            .unwrap();
            assert_eq!(kk, shifted, "{pi}");
        }
    }
}

fn partition_strategy() -> impl Strategy<Value = NCPartition> {
    (1usize..=9).prop_flat_map(|r| {
        let n = catalan(r) as usize;
        (Just(r), 0..n)
    })
    .prop_map(|(r, i)| enumerate_nc(r).unwrap()[i].clone())
}

proptest! {
    #[test]
    fn extremes_bracket_every_partition(pi in partition_strategy()) {
        let r = pi.r();
        prop_assert!(leq(&NCPartition::singletons(r), &pi).unwrap());
        prop_assert!(leq(&pi, &NCPartition::one_block(r)).unwrap());
        prop_assert!(leq(&pi, &pi).unwrap());
    }

    #[test]
    fn complement_block_count(pi in partition_strategy()) {
        // |π| + |K(π)| = r + 1 on NC(r).
        prop_assert_eq!(pi.blocks().len() + kreweras(&pi).blocks().len(), pi.r() + 1);
    }
}
