//! Graph-structure predicates and statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{bits, Network};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkStats {
    pub link_count: usize,
    pub link_fraction: f64,
    pub avg_degree: f64,
    pub min_degree: usize,
    pub max_degree: usize,
    /// Mean local clustering; nodes of degree below 2 contribute 0.
    pub clustering: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Empty,
    Complete,
    Star,
    OtherNestedSplit,
    NonNestedSplit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationLabel {
    pub label: Label,
    /// Core nodes (pairwise linked), when a core-periphery partition exists.
    pub core: Option<Vec<usize>>,
    /// Periphery nodes (pairwise unlinked).
    pub periphery: Option<Vec<usize>>,
}

/// Nested-split test by direct evaluation of the defining quantifier:
/// `g_il = 1` and `deg(k) >= deg(l)` with `k != i, l` imply `g_ik = 1`.
pub fn is_nested_split(network: &Network) -> bool {
    let n = network.n();
    let deg = network.degrees();
    for i in 0..n {
        for l in 0..n {
            if !network.has_link(i, l) {
                continue;
            }
            for k in 0..n {
                if k != i && k != l && deg[k] >= deg[l] && !network.has_link(i, k) {
                    return false;
                }
            }
        }
    }
    true
}

/// Nested-split test through neighborhood nesting in degree order: whenever
/// `deg(k) >= deg(l)`, the neighborhood of `l` (minus `k`) sits inside that of `k`.
pub fn is_nested_split_by_nesting(network: &Network) -> bool {
    let n = network.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| std::cmp::Reverse(network.degree(v)));
    for (a, &k) in order.iter().enumerate() {
        let nk = network.neighbor_mask(k);
        for &l in &order[a + 1..] {
            let nl = network.neighbor_mask(l) & !(1 << k);
            if nl & !nk != 0 {
                return false;
            }
            // equal degrees must nest both ways
            if network.degree(l) == network.degree(k) && (nk & !(1 << l)) & !network.neighbor_mask(l) != 0 {
                return false;
            }
        }
    }
    true
}

/// Center of a star (one node of degree `n - 1`, all others degree 1), if any.
pub fn star_center(network: &Network) -> Option<usize> {
    let n = network.n();
    if n < 3 || network.link_count() != n - 1 {
        return None;
    }
    let centers: Vec<usize> = (0..n).filter(|&v| network.degree(v) == n - 1).collect();
    match centers.as_slice() {
        [c] if (0..n).all(|v| v == *c || network.degree(v) == 1) => Some(*c),
        _ => None,
    }
}

fn is_clique(network: &Network, mask: u32) -> bool {
    bits(mask).all(|v| network.neighbor_mask(v) & mask == mask & !(1 << v))
}

fn is_independent(network: &Network, mask: u32) -> bool {
    bits(mask).all(|v| network.neighbor_mask(v) & mask == 0)
}

fn valid_partition(network: &Network, core: u32) -> bool {
    let all = (1u32 << network.n()) - 1;
    is_clique(network, core) && is_independent(network, all & !core)
}

/// Core-periphery partition: the core is pairwise linked, the periphery pairwise
/// unlinked. Degree-threshold cores (all nodes with degree at least some cutoff)
/// are preferred, smallest first; otherwise the smallest core found by exhaustive
/// search over bipartitions, ties broken by lowest bitmask.
pub fn core_periphery(network: &Network) -> Option<(Vec<usize>, Vec<usize>)> {
    let n = network.n();
    if n > 16 {
        return None;
    }
    let all = (1u32 << n) - 1;
    let deg = network.degrees();
    let mut cutoffs: Vec<usize> = deg.clone();
    cutoffs.push(n); // cutoff above every degree gives the empty core
    cutoffs.sort_unstable();
    cutoffs.dedup();
    let threshold = cutoffs.iter().rev().map(|&d| {
        (0..n).filter(|&v| deg[v] >= d).fold(0u32, |m, v| m | 1 << v)
    });
    let chosen = threshold
        .filter(|&core| valid_partition(network, core))
        .min_by_key(|core| core.count_ones())
        .or_else(|| {
            (0..=all)
                .filter(|&core| valid_partition(network, core))
                .min_by_key(|core| (core.count_ones(), *core))
        })?;
    Some((bits(chosen).collect(), bits(all & !chosen).collect()))
}

pub fn classify(network: &Network) -> ClassificationLabel {
    let links = network.link_count();
    let label = if links == 0 {
        Label::Empty
    } else if links == network.max_links() {
        Label::Complete
    } else if star_center(network).is_some() {
        Label::Star
    } else if is_nested_split(network) {
        Label::OtherNestedSplit
    } else {
        Label::NonNestedSplit
    };
    let (core, periphery) = match core_periphery(network) {
        Some((c, p)) => (Some(c), Some(p)),
        None => (None, None),
    };
    ClassificationLabel {
        label,
        core,
        periphery,
    }
}

pub fn stats(network: &Network) -> NetworkStats {
    let n = network.n();
    let deg = network.degrees();
    let link_count = network.link_count();
    let clustering = (0..n)
        .map(|v| {
            let d = deg[v];
            if d < 2 {
                return 0.0;
            }
            let nbrs = network.neighbor_mask(v);
            let among: usize = bits(nbrs)
                .map(|u| (network.neighbor_mask(u) & nbrs).count_ones() as usize)
                .sum::<usize>()
                / 2;
            among as f64 / (d * (d - 1) / 2) as f64
        })
        .sum::<f64>()
        / n as f64;
    NetworkStats {
        link_count,
        link_fraction: link_count as f64 / network.max_links() as f64,
        avg_degree: 2.0 * link_count as f64 / n as f64,
        min_degree: deg.iter().copied().min().unwrap_or(0),
        max_degree: deg.iter().copied().max().unwrap_or(0),
        clustering,
    }
}

/// Number of unordered pairs whose link status differs.
pub fn link_distance(a: &Network, b: &Network) -> Result<usize> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch {
            expected: a.n(),
            found: b.n(),
        });
    }
    Ok((0..a.n())
        .map(|i| (a.neighbor_mask(i) ^ b.neighbor_mask(i)).count_ones() as usize)
        .sum::<usize>()
        / 2)
}

/// Smallest link distance from `network` to any star on the same node set.
pub fn distance_to_star(network: &Network) -> usize {
    let n = network.n();
    (0..n)
        .map(|c| link_distance(network, &Network::star(n, c)).expect("same size"))
        .min()
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::nonisomorphic_graphs;

    /// Threshold-graph recognition by repeatedly deleting an isolated or
    /// dominating vertex; independent of both implementations above.
    fn threshold_by_elimination(network: &Network) -> bool {
        let mut g = network.clone();
        let mut alive: u32 = (1u32 << g.n()) - 1;
        while alive != 0 {
            let pick = bits(alive).find(|&v| {
                let nb = g.neighbor_mask(v) & alive;
                nb == 0 || nb == alive & !(1 << v)
            });
            match pick {
                Some(v) => {
                    for u in bits(g.neighbor_mask(v)) {
                        g.remove_link(u, v);
                    }
                    alive &= !(1 << v);
                }
                None => return false,
            }
        }
        true
    }

    #[test]
    fn nested_split_examples() {
        for n in 2..=9 {
            assert!(is_nested_split(&Network::complete(n)));
            assert!(is_nested_split(&Network::empty(n)));
        }
        assert!(is_nested_split(&Network::star(5, 2)));
        assert!(!is_nested_split(&Network::cycle(4)));
        assert!(!is_nested_split_by_nesting(&Network::cycle(4)));
    }

    #[test]
    fn nested_split_implementations_agree_on_five_node_atlas() {
        let graphs = nonisomorphic_graphs(5).unwrap();
        assert_eq!(graphs.len(), 34);
        let mut nsg = 0;
        for g in &graphs {
            let a = is_nested_split(g);
            assert_eq!(a, is_nested_split_by_nesting(g), "{:?}", g.edges());
            assert_eq!(a, threshold_by_elimination(g), "{:?}", g.edges());
            nsg += a as usize;
        }
        // threshold graphs on n unlabeled nodes number 2^(n-1)
        assert_eq!(nsg, 16);
    }

    #[test]
    fn classify_examples() {
        let empty = classify(&Network::empty(9));
        assert_eq!(empty.label, Label::Empty);
        assert_eq!(empty.core, Some(vec![]));

        let star = classify(&Network::star(5, 0));
        assert_eq!(star.label, Label::Star);
        assert_eq!(star.core, Some(vec![0]));
        assert_eq!(star.periphery, Some(vec![1, 2, 3, 4]));

        let complete = classify(&Network::complete(5));
        assert_eq!(complete.label, Label::Complete);
        assert_eq!(complete.core, Some(vec![0, 1, 2, 3, 4]));

        let mut almost = Network::complete(5);
        almost.remove_link(0, 1);
        let c = classify(&almost);
        assert_eq!(c.label, Label::OtherNestedSplit);
        assert_eq!(c.core, Some(vec![2, 3, 4]));
    }

    #[test]
    fn path_on_four_nodes() {
        // The middle pair forms a clique and the endpoints are unlinked, so a
        // core-periphery partition exists even though the graph is not NSG.
        let c = classify(&Network::path(4));
        assert_eq!(c.label, Label::NonNestedSplit);
        assert_eq!(c.core, Some(vec![1, 2]));
        assert_eq!(c.periphery, Some(vec![0, 3]));
        // the 4-cycle has no partition at all
        assert_eq!(classify(&Network::cycle(4)).core, None);
    }

    #[test]
    fn stats_examples() {
        let s = stats(&Network::complete(9));
        assert_eq!(s.link_count, 36);
        assert_eq!(s.link_fraction, 1.0);
        assert_eq!((s.avg_degree, s.min_degree, s.max_degree), (8.0, 8, 8));
        assert_eq!(s.clustering, 1.0);

        let s = stats(&Network::star(5, 0));
        assert_eq!(s.link_count, 4);
        assert!((s.link_fraction - 0.4).abs() < 1e-12);
        assert!((s.avg_degree - 1.6).abs() < 1e-12);
        assert_eq!((s.min_degree, s.max_degree), (1, 4));
        assert_eq!(s.clustering, 0.0);

        let s = stats(&Network::empty(5));
        assert_eq!(s.link_count, 0);
        assert_eq!((s.link_fraction, s.avg_degree, s.clustering), (0.0, 0.0, 0.0));
        assert_eq!((s.min_degree, s.max_degree), (0, 0));
    }

    #[test]
    fn clustering_of_triangle_with_pendant() {
        let g = Network::from_edges(4, &[(0, 1), (1, 2), (0, 2), (2, 3)]).unwrap();
        // nodes 0, 1: 1; node 2: 1 of 3 pairs; node 3: degree 1
        let expected = (1.0 + 1.0 + 1.0 / 3.0 + 0.0) / 4.0;
        assert!((stats(&g).clustering - expected).abs() < 1e-12);
    }

    #[test]
    fn link_distance_examples() {
        let k5 = Network::complete(5);
        assert_eq!(link_distance(&k5, &k5).unwrap(), 0);
        let mut minus = k5.clone();
        minus.remove_link(2, 4);
        assert_eq!(link_distance(&k5, &minus).unwrap(), 1);
        assert_eq!(link_distance(&Network::empty(5), &Network::star(5, 0)).unwrap(), 4);
        assert!(link_distance(&Network::empty(5), &Network::empty(4)).is_err());
    }
}
