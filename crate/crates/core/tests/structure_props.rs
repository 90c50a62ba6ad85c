use lqnet_core::atlas::nonisomorphic_graphs;
use lqnet_core::structure::{classify, is_nested_split, is_nested_split_by_nesting, link_distance, stats, Label};
use lqnet_core::Network;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Forbidden induced subgraphs of threshold graphs: 2K2, P4, C4.
fn has_forbidden_quad(g: &Network) -> bool {
    let n = g.n();
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                for d in c + 1..n {
                    let v = [a, b, c, d];
                    let mut deg = [0usize; 4];
                    let mut m = 0;
                    for x in 0..4 {
                        for y in x + 1..4 {
                            if g.has_link(v[x], v[y]) {
                                deg[x] += 1;
                                deg[y] += 1;
                                m += 1;
                            }
                        }
                    }
                    deg.sort_unstable();
                    // 2K2: two edges, all degrees 1; P4: three edges 1,1,2,2; C4: all degrees 2
                    let quad = (m == 2 && deg == [1, 1, 1, 1])
                        || (m == 3 && deg == [1, 1, 2, 2])
                        || (m == 4 && deg == [2, 2, 2, 2]);
                    if quad {
                        return true;
                    }
                }
            }
        }
    }
    false
}

#[test]
fn nested_split_checks_agree_on_five_node_atlas() {
    let atlas = nonisomorphic_graphs(5).unwrap();
    assert_eq!(atlas.len(), 34);
    let mut nsg = 0;
    for g in &atlas {
        let a = is_nested_split(g);
        assert_eq!(a, is_nested_split_by_nesting(g), "{:?}", g.edges());
        assert_eq!(a, !has_forbidden_quad(g), "{:?}", g.edges());
        nsg += a as usize;
    }
    // threshold graphs on n labeled-up-to-isomorphism nodes: 2^(n-1)
    assert_eq!(nsg, 16);
}

#[test]
fn nested_split_checks_agree_on_random_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(91);
    let mut positives = 0;
    for _ in 0..1000 {
        let n = rng.random_range(2..=9);
        let density: f64 = rng.random();
        let mut g = Network::empty(n);
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<f64>() < density {
                    g.add_link(i, j);
                }
            }
        }
        let a = is_nested_split(&g);
        assert_eq!(a, is_nested_split_by_nesting(&g), "{:?}", g.edges());
        assert_eq!(a, !has_forbidden_quad(&g), "{:?}", g.edges());
        positives += a as usize;
    }
    assert!(positives > 50, "sample should contain nested-split graphs");
}

fn graph(n: usize) -> impl Strategy<Value = Network> {
    let pairs = n * (n - 1) / 2;
    any::<u64>().prop_map(move |c| Network::from_upper_bits(n, c & (u64::MAX >> (64 - pairs))))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn link_distance_is_a_metric(a in graph(7), b in graph(7), c in graph(7)) {
        let d = |x: &Network, y: &Network| link_distance(x, y).unwrap();
        prop_assert_eq!(d(&a, &a), 0);
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c));
        prop_assert_eq!(d(&a, &b) == 0, a == b);
    }

    #[test]
    fn stars_are_nested_split(g in graph(8)) {
        if classify(&g).label == Label::Star {
            prop_assert!(is_nested_split(&g));
        }
    }

    #[test]
    fn trees_have_no_clustering(parents in prop::collection::vec(any::<prop::sample::Index>(), 1..12)) {
        let n = parents.len() + 1;
        let mut g = Network::empty(n);
        for (k, p) in parents.iter().enumerate() {
            let child = k + 1;
            g.add_link(child, p.index(child));
        }
        prop_assert_eq!(stats(&g).clustering, 0.0);
    }
}

#[test]
fn complete_network_clustering_is_one() {
    for n in 3..=9 {
        assert_eq!(stats(&Network::complete(n)).clustering, 1.0);
    }
}
