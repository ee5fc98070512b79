//! Shortest paths and feasible labels on an implicit complete digraph.

use std::collections::{BinaryHeap, VecDeque};

pub(crate) enum PathOutcome {
    Distances(Vec<f64>),
    /// The predecessor graph closed a cycle of negative (shifted) weight.
    NegativeCycle,
}

/// Arc weights `w(i -> j) = own[i] - <a_i, b_j>` on the complete digraph,
/// with `a` and `b` stored row-major.
pub(crate) struct BilinearArcs<'a> {
    pub dim: usize,
    pub a: &'a [f64],
    pub b: &'a [f64],
    pub own: &'a [f64],
}

impl BilinearArcs<'_> {
    /// Writes `w(i -> j)` into `out[j]` for every `j`.
    pub fn fill_row(&self, i: usize, out: &mut [f64]) {
        match self.dim {
            1 => self.fill_fixed::<1>(i, out),
            2 => self.fill_fixed::<2>(i, out),
            3 => self.fill_fixed::<3>(i, out),
            d => {
                let ai = &self.a[i * d..(i + 1) * d];
                for (o, bj) in out.iter_mut().zip(self.b.chunks_exact(d)) {
                    *o = self.own[i] - ai.iter().zip(bj).map(|(p, q)| p * q).sum::<f64>();
                }
            }
        }
    }

    /// Pushes `(j, base + w(i -> j) - p_j)` for every `j < p.len()` where
    /// that value is below `bound[j]`.
    pub fn scan_row(&self, i: usize, base: f64, p: &[f64], bound: &[f64], out: &mut Vec<(usize, f64)>) {
        match self.dim {
            1 => self.scan_fixed::<1>(i, base, p, bound, out),
            2 => self.scan_fixed::<2>(i, base, p, bound, out),
            3 => self.scan_fixed::<3>(i, base, p, bound, out),
            d => {
                let ai = &self.a[i * d..(i + 1) * d];
                let base = base + self.own[i];
                for (j, ((bj, pj), lim)) in self.b.chunks_exact(d).zip(p).zip(bound).enumerate() {
                    let c = base - ai.iter().zip(bj).map(|(x, y)| x * y).sum::<f64>() - pj;
                    if c < *lim {
                        out.push((j, c));
                    }
                }
            }
        }
    }

    fn scan_fixed<const D: usize>(&self, i: usize, base: f64, p: &[f64], bound: &[f64], out: &mut Vec<(usize, f64)>) {
        let ai: [f64; D] = self.a[i * D..(i + 1) * D].try_into().expect("row of length D");
        let base = base + self.own[i];
        for (j, ((bj, pj), lim)) in self.b.chunks_exact(D).zip(p).zip(bound).enumerate() {
            let mut acc = 0.0;
            for k in 0..D {
                acc += ai[k] * bj[k];
            }
            let c = base - acc - pj;
            if c < *lim {
                out.push((j, c));
            }
        }
    }

    /// Writes `w(i -> j)` into `out[i]` for `i < out.len()`.
    pub fn fill_col(&self, j: usize, out: &mut [f64]) {
        let d = self.dim;
        let bj = &self.b[j * d..(j + 1) * d];
        for ((o, ai), own) in out.iter_mut().zip(self.a.chunks_exact(d)).zip(self.own) {
            *o = own - ai.iter().zip(bj).map(|(p, q)| p * q).sum::<f64>();
        }
    }

    fn fill_fixed<const D: usize>(&self, i: usize, out: &mut [f64]) {
        let ai: [f64; D] = self.a[i * D..(i + 1) * D].try_into().expect("row of length D");
        let own = self.own[i];
        for (o, bj) in out.iter_mut().zip(self.b.chunks_exact(D)) {
            let mut acc = 0.0;
            for k in 0..D {
                acc += ai[k] * bj[k];
            }
            *o = own - acc;
        }
    }
}

#[derive(PartialEq)]
struct Key(f64, usize);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    // reversed, so that `BinaryHeap` pops the least key
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// Labels `p` with `p_j <= p_i + w(i -> j) + shift` on every arc, built by
/// inserting nodes one at a time. Each new node `v` enters at its best
/// label through the old nodes; a Dijkstra search from `v` on the reduced
/// weights (nonnegative away from `v`) then lowers exactly the labels that
/// must drop. A search that returns to `v` below zero closes a negative
/// cycle.
pub(crate) fn feasible_labels(arcs: &BilinearArcs, shift: f64) -> std::result::Result<Vec<f64>, Vec<usize>> {
    let n = arcs.own.len();
    let mut p = vec![0.0; n];
    let mut drop = vec![0.0; n];
    let mut pred = vec![usize::MAX; n];
    let mut touched = Vec::new();
    let mut row = vec![0.0; n];
    let mut heap = BinaryHeap::new();
    let mut improved = Vec::new();
    for v in 1..n {
        arcs.fill_col(v, &mut row[..v]);
        p[v] = (0..v).map(|i| p[i] + row[i] + shift).fold(f64::INFINITY, f64::min);
        heap.push(Key(0.0, v));
        while let Some(Key(du, u)) = heap.pop() {
            if du > drop[u] {
                continue;
            }
            let base = du + p[u] + shift;
            improved.clear();
            arcs.scan_row(u, base, &p[..=v], &drop[..=v], &mut improved);
            for &(j, candidate) in &improved {
                if j == u || candidate >= drop[j] {
                    continue;
                }
                if j == v {
                    let mut cycle = vec![u];
                    while *cycle.last().expect("non-empty") != v {
                        cycle.push(pred[*cycle.last().expect("non-empty")]);
                    }
                    cycle.reverse();
                    return Err(canonical_rotation(cycle));
                }
                if drop[j] == 0.0 {
                    touched.push(j);
                }
                drop[j] = candidate;
                pred[j] = u;
                heap.push(Key(candidate, j));
            }
        }
        for &j in &touched {
            p[j] += drop[j];
            drop[j] = 0.0;
            pred[j] = usize::MAX;
        }
        touched.clear();
    }
    Ok(p)
}

/// Label-correcting search over the complete digraph on `n` nodes with arc
/// weights `row(i)[j] + shift`, where `fill(i, buf)` writes row `i`. A label
/// is only lowered when it improves by more than `min_gain`.
///
/// Without `order` nodes are scanned first in, first out. With a potential
/// `p` the open node of least `label - p` is scanned next; when `p` makes
/// the reduced weights `w(i -> j) + p_i - p_j` nonnegative this is
/// Dijkstra's method and every node is scanned once.
///
/// Whenever a recorded path length reaches `n` the predecessor graph is
/// searched for a cycle; any such cycle is negative.
pub(crate) fn shortest_paths<F>(
    n: usize,
    fill: F,
    shift: f64,
    min_gain: f64,
    source: usize,
    order: Option<&[f64]>,
) -> PathOutcome
where
    F: Fn(usize, &mut [f64]),
{
    let mut distance = vec![f64::INFINITY; n];
    let mut edges = vec![0usize; n];
    let mut pred = vec![usize::MAX; n];
    let mut queued = vec![false; n];
    let mut queue = VecDeque::with_capacity(n);
    let mut row = vec![0.0; n];
    distance[source] = 0.0;
    queue.push_back(source);
    queued[source] = true;
    let mut open = queue.len();

    loop {
        let i = match order {
            None => match queue.pop_front() {
                Some(i) => i,
                None => break,
            },
            Some(p) => {
                if open == 0 {
                    break;
                }
                let mut best = usize::MAX;
                let mut key = f64::INFINITY;
                for v in 0..n {
                    if queued[v] && (best == usize::MAX || distance[v] - p[v] < key) {
                        best = v;
                        key = distance[v] - p[v];
                    }
                }
                best
            }
        };
        queued[i] = false;
        open -= 1;
        fill(i, &mut row);
        let base = distance[i] + shift;
        for j in 0..n {
            if j == i {
                continue;
            }
            let candidate = base + row[j];
            if candidate + min_gain < distance[j] {
                distance[j] = candidate;
                pred[j] = i;
                edges[j] = edges[i] + 1;
                if edges[j] >= n {
                    if has_pred_cycle(&pred) {
                        return PathOutcome::NegativeCycle;
                    }
                    edges[j] = chain_len(&pred, j);
                }
                if !queued[j] {
                    queued[j] = true;
                    open += 1;
                    if order.is_none() {
                        queue.push_back(j);
                    }
                }
            }
        }
    }
    PathOutcome::Distances(distance)
}

fn chain_len(pred: &[usize], start: usize) -> usize {
    let mut len = 0;
    let mut v = start;
    while pred[v] != usize::MAX {
        v = pred[v];
        len += 1;
    }
    len
}

fn has_pred_cycle(pred: &[usize]) -> bool {
    // 0 = unseen, 1 = on the current walk, 2 = done
    let mut state = vec![0u8; pred.len()];
    for start in 0..pred.len() {
        let mut v = start;
        while v != usize::MAX && state[v] == 0 {
            state[v] = 1;
            v = pred[v];
        }
        if v != usize::MAX && state[v] == 1 {
            return true;
        }
        let mut u = start;
        while u != usize::MAX && state[u] == 1 {
            state[u] = 2;
            u = pred[u];
        }
    }
    false
}

/// Rotates a cycle to start at its smallest node.
fn canonical_rotation(mut cycle: Vec<usize>) -> Vec<usize> {
    let k = cycle.iter().enumerate().min_by_key(|(_, c)| **c).map_or(0, |m| m.0);
    cycle.rotate_left(k);
    cycle
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense<const N: usize>(w: &[[f64; N]; N]) -> impl Fn(usize, &mut [f64]) + '_ {
        move |i, out| out.copy_from_slice(&w[i])
    }

    #[test]
    fn finds_shortest_paths() {
        let w = [[0.0, 1.0, 5.0], [1.0, 0.0, 1.0], [5.0, 1.0, 0.0]];
        match shortest_paths(3, dense(&w), 0.0, 0.0, 0, None) {
            PathOutcome::Distances(d) => assert_eq!(d, vec![0.0, 1.0, 2.0]),
            PathOutcome::NegativeCycle => panic!("no negative cycle expected"),
        }
    }

    #[test]
    fn reports_negative_cycle() {
        // 0 -> 2 -> 1 -> 0 has weight -3, the reverse direction +3
        let w = [[0.0, 1.0, -1.0], [-1.0, 0.0, 1.0], [1.0, -1.0, 0.0]];
        assert!(matches!(shortest_paths(3, dense(&w), 0.0, 0.0, 0, None), PathOutcome::NegativeCycle));
    }

    #[test]
    fn shift_removes_zero_cycles() {
        let w = [[0.0, 1.0], [-1.0, 0.0]];
        assert!(matches!(
            shortest_paths(2, dense(&w), 1e-12, 0.0, 0, None),
            PathOutcome::Distances(_)
        ));
    }

    #[test]
    fn potential_order_matches_fifo() {
        let w = [[0.0, 4.0, 1.0, 7.0], [2.0, 0.0, 3.0, 1.0], [5.0, 1.0, 0.0, 6.0], [1.0, 2.0, 2.0, 0.0]];
        let PathOutcome::Distances(fifo) = shortest_paths(4, dense(&w), 0.0, 0.0, 0, None) else {
            panic!("no cycle")
        };
        for p in [[0.0; 4], [3.0, -1.0, 0.5, 2.0]] {
            let PathOutcome::Distances(d) = shortest_paths(4, dense(&w), 0.0, 0.0, 0, Some(&p)) else {
                panic!("no cycle")
            };
            assert_eq!(d, fifo);
        }
    }

    #[test]
    fn bilinear_rows() {
        let (a, b, own) = ([1.0, 2.0, 0.0, 1.0], [3.0, 1.0, -1.0, 2.0], [0.5, -0.5]);
        let arcs = BilinearArcs { dim: 2, a: &a, b: &b, own: &own };
        let mut row = [0.0; 2];
        arcs.fill_row(1, &mut row);
        assert_eq!(row, [-1.5, -2.5]);
        let arcs = BilinearArcs { dim: 4, a: &a, b: &b, own: &own[..1] };
        let mut row = [0.0; 1];
        arcs.fill_row(0, &mut row);
        assert_eq!(row, [-6.5]);
    }

    fn arcs_from(dim: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
        a.chunks_exact(dim).zip(b.chunks_exact(dim)).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum()).collect()
    }

    #[test]
    fn columns_and_scans_agree_with_rows() {
        for dim in [1, 2, 3, 5] {
            let a: Vec<f64> = (0..4 * dim).map(|k| ((k * 7) % 5) as f64 - 2.0).collect();
            let b: Vec<f64> = (0..4 * dim).map(|k| ((k * 3) % 7) as f64 - 3.0).collect();
            let own = arcs_from(dim, &a, &b);
            let arcs = BilinearArcs { dim, a: &a, b: &b, own: &own };
            let mut rows = [[0.0; 4]; 4];
            for (i, r) in rows.iter_mut().enumerate() {
                arcs.fill_row(i, r);
            }
            let mut col = [0.0; 4];
            #[allow(clippy::needless_range_loop)]
            for j in 0..4 {
                arcs.fill_col(j, &mut col);
                assert!((0..4).all(|i| col[i] == rows[i][j]));
            }
            let p = [0.5, -1.0, 2.0, 0.0];
            let mut hits = Vec::new();
            arcs.scan_row(2, 1.0, &p, &[0.0; 4], &mut hits);
            let expected: Vec<(usize, f64)> =
                (0..4).map(|j| (j, 1.0 + rows[2][j] - p[j])).filter(|h| h.1 < 0.0).collect();
            assert_eq!(hits, expected);
        }
    }

    #[test]
    fn incremental_labels_are_feasible() {
        // pairs on a convex parabola's gradient are cyclically monotone
        let xs: Vec<f64> = (0..40).map(|k| ((k * 17) % 40) as f64 / 7.0 - 3.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + x * x * x).collect();
        let own = arcs_from(1, &xs, &ys);
        let arcs = BilinearArcs { dim: 1, a: &xs, b: &ys, own: &own };
        let p = feasible_labels(&arcs, 1e-12).unwrap();
        let mut row = vec![0.0; 40];
        for i in 0..40 {
            arcs.fill_row(i, &mut row);
            for j in 0..40 {
                assert!(p[j] <= p[i] + row[j] + 1e-12 + 1e-9, "arc {i} -> {j}");
            }
        }
        // reversing one pair's target breaks monotonicity
        let mut bad = ys.clone();
        bad.swap(3, 11);
        let own = arcs_from(1, &xs, &bad);
        let arcs = BilinearArcs { dim: 1, a: &xs, b: &bad, own: &own };
        let cycle = feasible_labels(&arcs, 1e-12).unwrap_err();
        let sum: f64 = (0..cycle.len())
            .map(|m| {
                let (i, j) = (cycle[m], cycle[(m + 1) % cycle.len()]);
                own[i] - xs[i] * bad[j]
            })
            .sum();
        assert!(sum < 0.0, "{cycle:?} {sum}");
        assert_eq!(cycle[0], *cycle.iter().min().unwrap());
    }
}
