//! Canonical forms and exhaustive enumeration of small graphs up to isomorphism.
//!
//! A graph's canonical code is the minimum upper-triangle bit string over all
//! `n!` relabelings. Enumeration walks every labeled graph once, expanding the
//! orbit of each unvisited code, so the cost is `classes * n!` rather than
//! `2^(n(n-1)/2) * n!`.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::model::Network;

/// Largest group size the atlas enumerates.
pub const MAX_ATLAS_N: usize = 7;

/// Bit-position permutation tables, one per node permutation.
fn pair_maps(n: usize) -> Vec<Vec<u8>> {
    let mut index = vec![vec![0u8; n]; n];
    let mut pos = 0u8;
    for i in 0..n {
        for j in i + 1..n {
            index[i][j] = pos;
            index[j][i] = pos;
            pos += 1;
        }
    }
    permutations(n)
        .into_iter()
        .map(|perm| {
            let mut map = Vec::with_capacity(n * n.saturating_sub(1) / 2);
            for i in 0..n {
                for j in i + 1..n {
                    map.push(index[perm[i]][perm[j]]);
                }
            }
            map
        })
        .collect()
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        out.push(perm.clone());
        // next lexicographic permutation
        let Some(k) = (0..n.saturating_sub(1)).rev().find(|&k| perm[k] < perm[k + 1]) else {
            break;
        };
        let l = (k + 1..n).rev().find(|&l| perm[k] < perm[l]).unwrap();
        perm.swap(k, l);
        perm[k + 1..].reverse();
    }
    out
}

fn remap(code: u64, map: &[u8]) -> u64 {
    let mut out = 0u64;
    let mut rest = code;
    while rest != 0 {
        let pos = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        out |= 1 << map[pos];
    }
    out
}

fn tables(n: usize) -> &'static [Vec<u8>] {
    static TABLES: OnceLock<Vec<Vec<Vec<u8>>>> = OnceLock::new();
    let all = TABLES.get_or_init(|| (0..=MAX_ATLAS_N).map(pair_maps).collect());
    &all[n]
}

fn check_size(n: usize) -> Result<()> {
    if n > MAX_ATLAS_N {
        return Err(Error::TooManyAgents {
            n,
            limit: MAX_ATLAS_N,
        });
    }
    Ok(())
}

/// Minimum upper-triangle code over all relabelings.
pub fn canonical_code(network: &Network) -> Result<u64> {
    let n = network.n();
    check_size(n)?;
    let code = network.upper_bits();
    static MEMO: OnceLock<Mutex<HashMap<(usize, u64), u64>>> = OnceLock::new();
    let memo = MEMO.get_or_init(Default::default);
    if let Some(&c) = memo.lock().expect("memo lock").get(&(n, code)) {
        return Ok(c);
    }
    let canon = tables(n).iter().map(|map| remap(code, map)).min().unwrap_or(code);
    memo.lock().expect("memo lock").insert((n, code), canon);
    Ok(canon)
}

/// Canonical representative of the isomorphism class of `network`.
pub fn canonical_form(network: &Network) -> Result<Network> {
    Ok(Network::from_upper_bits(network.n(), canonical_code(network)?))
}

pub fn is_isomorphic(a: &Network, b: &Network) -> Result<bool> {
    Ok(a.n() == b.n() && canonical_code(a)? == canonical_code(b)?)
}

/// One canonical representative per isomorphism class, sorted by code.
pub fn nonisomorphic_graphs(n: usize) -> Result<Vec<Network>> {
    check_size(n)?;
    static ATLAS: OnceLock<Mutex<HashMap<usize, Vec<u64>>>> = OnceLock::new();
    let atlas = ATLAS.get_or_init(Default::default);
    if let Some(codes) = atlas.lock().expect("atlas lock").get(&n) {
        return Ok(codes.iter().map(|&c| Network::from_upper_bits(n, c)).collect());
    }
    let pairs = n * n.saturating_sub(1) / 2;
    let total = 1usize << pairs;
    let maps = tables(n);
    let mut visited = vec![false; total];
    let mut codes = Vec::new();
    for start in 0..total {
        if visited[start] {
            continue;
        }
        let mut min = start as u64;
        for map in maps {
            let image = remap(start as u64, map);
            visited[image as usize] = true;
            min = min.min(image);
        }
        codes.push(min);
    }
    codes.sort_unstable();
    atlas.lock().expect("atlas lock").insert(n, codes.clone());
    Ok(codes.into_iter().map(|c| Network::from_upper_bits(n, c)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_counts_match_known_sequence() {
        // number of graphs on n unlabeled nodes
        let known = [1, 1, 2, 4, 11, 34, 156];
        for (n, &count) in known.iter().enumerate() {
            assert_eq!(nonisomorphic_graphs(n).unwrap().len(), count, "n = {n}");
        }
    }

    #[test]
    fn canonical_form_is_label_invariant() {
        let star_a = Network::star(5, 0);
        let star_b = Network::star(5, 3);
        assert!(is_isomorphic(&star_a, &star_b).unwrap());
        assert!(!is_isomorphic(&Network::path(5), &Network::star(5, 0)).unwrap());
        let perm = [4, 2, 0, 1, 3];
        let c = Network::cycle(5);
        assert_eq!(canonical_code(&c).unwrap(), canonical_code(&c.permuted(&perm)).unwrap());
    }

    #[test]
    fn permutation_count() {
        assert_eq!(permutations(5).len(), 120);
        assert_eq!(permutations(0).len(), 1);
    }

    #[test]
    fn atlas_rejects_large_n() {
        assert!(nonisomorphic_graphs(8).is_err());
    }
}
