//! Exact balanced transportation by successive shortest paths.
//!
//! Supplies and demands are integers, so every augmentation moves a whole
//! number of units and the method terminates without floating-point cycling.
//! Shortest paths use Dijkstra on reduced costs with node potentials; the
//! bipartite residual graph is dense and kept implicit.

/// Solves `min Σ f_ij c_ij` subject to row sums `supply`, column sums
/// `demand`, `f ≥ 0`. `cost` is row-major `supply.len() × demand.len()` and
/// must be non-negative. Returns integer flows in the same layout.
///
/// Panics if total supply and total demand differ.
pub fn solve_transport(supply: &[u64], demand: &[u64], cost: &[f64]) -> Vec<u64> {
    let m = supply.len();
    let n = demand.len();
    assert_eq!(cost.len(), m * n, "cost matrix shape");
    assert_eq!(
        supply.iter().sum::<u64>(),
        demand.iter().sum::<u64>(),
        "unbalanced transport problem"
    );

    let mut flow = vec![0u64; m * n];
    let mut supply_left = supply.to_vec();
    let mut demand_left = demand.to_vec();

    // nodes 0..m are sources, m..m+n sinks
    let v = m + n;
    let mut potential = vec![0.0f64; v];
    let mut dist = vec![f64::INFINITY; v];
    let mut parent = vec![usize::MAX; v];
    let mut done = vec![false; v];

    while supply_left.iter().any(|&s| s > 0) {
        dist.fill(f64::INFINITY);
        parent.fill(usize::MAX);
        done.fill(false);
        for i in 0..m {
            if supply_left[i] > 0 {
                dist[i] = 0.0;
            }
        }

        loop {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for k in 0..v {
                if !done[k] && dist[k] < best {
                    best = dist[k];
                    u = k;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            if u < m {
                let i = u;
                for j in 0..n {
                    let node = m + j;
                    if done[node] {
                        continue;
                    }
                    let reduced = (cost[i * n + j] + potential[i] - potential[node]).max(0.0);
                    let nd = dist[i] + reduced;
                    if nd < dist[node] {
                        dist[node] = nd;
                        parent[node] = i;
                    }
                }
            } else {
                let j = u - m;
                for i in 0..m {
                    if done[i] || flow[i * n + j] == 0 {
                        continue;
                    }
                    let reduced = (-cost[i * n + j] + potential[u] - potential[i]).max(0.0);
                    let nd = dist[u] + reduced;
                    if nd < dist[i] {
                        dist[i] = nd;
                        parent[i] = u;
                    }
                }
            }
        }

        // cheapest sink that still has demand; lowest index wins ties
        let mut sink = usize::MAX;
        let mut best = f64::INFINITY;
        for j in 0..n {
            if demand_left[j] > 0 && dist[m + j] < best {
                best = dist[m + j];
                sink = j;
            }
        }
        assert!(sink != usize::MAX, "no augmenting path in a balanced problem");

        // walk back to the originating source and find the bottleneck
        let mut bottleneck = demand_left[sink];
        let mut node = m + sink;
        loop {
            let p = parent[node];
            if p == usize::MAX {
                break;
            }
            if node < m {
                // backward residual edge sink p -> source node
                bottleneck = bottleneck.min(flow[node * n + (p - m)]);
            }
            node = p;
        }
        let origin = node;
        bottleneck = bottleneck.min(supply_left[origin]);
        debug_assert!(bottleneck > 0);

        let mut node = m + sink;
        while parent[node] != usize::MAX {
            let p = parent[node];
            if node >= m {
                flow[p * n + (node - m)] += bottleneck;
            } else {
                flow[node * n + (p - m)] -= bottleneck;
            }
            node = p;
        }
        supply_left[origin] -= bottleneck;
        demand_left[sink] -= bottleneck;

        for k in 0..v {
            if dist[k].is_finite() {
                potential[k] += dist[k];
            }
        }
    }
    flow
}
