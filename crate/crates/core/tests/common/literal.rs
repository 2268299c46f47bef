//! Dense, literal implementation of the distress update used as the oracle
//! for the sparse engine. O(n²) per step; only for small graphs.

use supplyshock::Direction;
#[derive(Clone, Copy, PartialEq, Eq)]
enum State {
    Active,
    Distressed,
    Inactive,
}

/// Final distress vector and step count for `seeds` on the graph given by
/// `edges` (supplier, customer) over `n` firms.
pub fn cascade(
    n: usize,
    edges: &[(usize, usize)],
    seeds: &[usize],
    direction: Direction,
) -> (Vec<f64>, usize) {
    let mut adj = vec![vec![0.0f64; n]; n];
    for &(s, t) in edges {
        match direction {
            Direction::Downstream => adj[s][t] = 1.0,
            Direction::Upstream => adj[t][s] = 1.0,
        }
    }
    // w[j][i] = A_ji / k_i^in
    let k_in: Vec<f64> = (0..n).map(|i| (0..n).map(|j| adj[j][i]).sum()).collect();
    let w: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            (0..n)
                .map(|i| {
                    if k_in[i] > 0.0 {
                        adj[j][i] / k_in[i]
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();

    let mut h = vec![0.0; n];
    let mut state = vec![State::Active; n];
    for &s in seeds {
        h[s] = 1.0;
        state[s] = State::Distressed;
    }
    let mut t = 0;
    while state.contains(&State::Distressed) {
        let mut h_next = vec![0.0; n];
        for i in 0..n {
            let mut sum = 0.0;
            for j in 0..n {
                if state[j] == State::Distressed {
                    sum += w[j][i] * h[j];
                }
            }
            h_next[i] = f64::min(1.0, h[i] + sum);
        }
        let state_next: Vec<State> = (0..n)
            .map(|i| match state[i] {
                State::Active if h_next[i] > 0.0 => State::Distressed,
                State::Distressed => State::Inactive,
                s => s,
            })
            .collect();
        h = h_next;
        state = state_next;
        t += 1;
    }
    (h, t)
}
