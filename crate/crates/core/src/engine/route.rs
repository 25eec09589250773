/// Proper edge colouring of a bipartite multigraph with `max_degree` colours.
///
/// `edges[i] = (left, right)`; returns the colour of every edge. Edges sharing
/// an endpoint on the same side get different colours.
pub fn bipartite_edge_coloring(left: usize, right: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    const FREE: usize = usize::MAX;
    let mut ldeg = vec![0usize; left];
    let mut rdeg = vec![0usize; right];
    for &(u, v) in edges {
        ldeg[u] += 1;
        rdeg[v] += 1;
    }
    let delta = ldeg.iter().chain(&rdeg).copied().max().unwrap_or(0);
    if delta == 0 {
        return vec![0; edges.len()];
    }
    // lc[u][a] = edge of colour a at left vertex u
    let mut lc = vec![FREE; left * delta];
    let mut rc = vec![FREE; right * delta];
    let mut color = vec![FREE; edges.len()];
    let free_at = |table: &[usize], x: usize| (0..delta).find(|&a| table[x * delta + a] == FREE).expect("degree bound");

    for (e, &(u, v)) in edges.iter().enumerate() {
        let a = free_at(&lc, u);
        let b = free_at(&rc, v);
        if rc[v * delta + a] != FREE {
            // swap colours a and b along the alternating path that starts at v with colour a
            let mut path = Vec::new();
            let mut on_right = true;
            let mut x = v;
            let mut want = a;
            loop {
                let table = if on_right { &rc } else { &lc };
                let f = table[x * delta + want];
                if f == FREE {
                    break;
                }
                path.push(f);
                let (fu, fv) = edges[f];
                x = if on_right { fu } else { fv };
                on_right = !on_right;
                want = if want == a { b } else { a };
            }
            for &f in &path {
                let (fu, fv) = edges[f];
                lc[fu * delta + color[f]] = FREE;
                rc[fv * delta + color[f]] = FREE;
            }
            for &f in &path {
                let (fu, fv) = edges[f];
                color[f] = if color[f] == a { b } else { a };
                lc[fu * delta + color[f]] = f;
                rc[fv * delta + color[f]] = f;
            }
        }
        color[e] = a;
        lc[u * delta + a] = e;
        rc[v * delta + a] = e;
    }
    color
}

/// Splits a demand set into rounds of at most `cap` payloads out of and into
/// every node. Returns, for every demand, the invocation carrying it, and the
/// number of invocations (`ceil(max degree / cap)`).
pub fn split_demands(n: usize, pairs: &[(usize, usize)], cap: usize) -> (Vec<usize>, usize) {
    let colors = bipartite_edge_coloring(n, n, pairs);
    let invocation: Vec<usize> = colors.iter().map(|&c| c / cap).collect();
    let count = invocation.iter().map(|&i| i + 1).max().unwrap_or(0);
    (invocation, count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn check(left: usize, right: usize, edges: &[(usize, usize)]) {
        let colors = bipartite_edge_coloring(left, right, edges);
        let mut ldeg = vec![0; left];
        let mut rdeg = vec![0; right];
        for &(u, v) in edges {
            ldeg[u] += 1;
            rdeg[v] += 1;
        }
        let delta = ldeg.iter().chain(&rdeg).copied().max().unwrap_or(0);
        let mut seen = std::collections::HashSet::new();
        for (&(u, v), &c) in edges.iter().zip(&colors) {
            assert!(c < delta.max(1));
            assert!(seen.insert((0, u, c)), "left clash");
            assert!(seen.insert((1, v, c)), "right clash");
        }
    }

    #[test]
    fn complete_bipartite_multigraph() {
        let mut edges = Vec::new();
        for u in 0..6 {
            for v in 0..6 {
                edges.push((u, v));
                edges.push((u, (v + u) % 6));
            }
        }
        check(6, 6, &edges);
    }

    #[test]
    fn split_respects_cap() {
        let pairs: Vec<(usize, usize)> = (0..8).flat_map(|u| (0..16).map(move |k| (u, (u + k) % 8))).collect();
        let (inv, count) = split_demands(8, &pairs, 8);
        assert_eq!(count, 2);
        for r in 0..count {
            let mut out = [0; 8];
            let mut inn = [0; 8];
            for (&(u, v), &i) in pairs.iter().zip(&inv) {
                if i == r {
                    out[u] += 1;
                    inn[v] += 1;
                }
            }
            assert!(out.iter().chain(&inn).all(|&d| d <= 8));
        }
    }

    proptest! {
        #[test]
        fn coloring_is_proper(edges in prop::collection::vec((0usize..7, 0usize..5), 0..80)) {
            check(7, 5, &edges);
        }
    }
}
