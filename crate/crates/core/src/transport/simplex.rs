//! Primal network simplex for the uncapacitated transportation problem on a
//! complete bipartite graph.
//!
//! Arcs are never materialised: arc `i * n + j` joins source `i` to sink `j`
//! and its cost is evaluated on demand, so memory stays linear in the number
//! of nodes. Non-tree arcs carry no flow, which means the spanning tree alone
//! describes the basis. Anti-cycling uses Cunningham's strongly feasible trees
//! started from an all-artificial basis; pricing scans fixed-size blocks and
//! takes the most negative reduced cost in the first block that has one.

const NONE: usize = usize::MAX;

/// Reduced costs above `-EPS` count as nonnegative. Costs are pre-scaled to
/// `[0, 1]`.
const EPS: f64 = 1e-11;

/// Cost of the artificial arcs through the root. Any value above half the
/// largest scaled cost keeps their optimal flow at zero.
const ART_COST: f64 = 1.0;

/// Optimal tree flows: `(source, sink, mass)` for each real basic arc with
/// positive flow.
pub(crate) struct SimplexSolution {
    pub entries: Vec<(usize, usize, f64)>,
}

pub(crate) struct TransportSimplex<'a, C: Fn(usize, usize) -> f64> {
    m: usize,
    n: usize,
    cost: &'a C,
    root: usize,
    parent: Vec<usize>,
    pred_arc: Vec<usize>,
    /// true when the tree arc of `v` is oriented `v -> parent[v]`
    up: Vec<bool>,
    flow: Vec<f64>,
    pi: Vec<f64>,
    depth: Vec<usize>,
    first_child: Vec<usize>,
    next_sib: Vec<usize>,
    prev_sib: Vec<usize>,
    next_arc: usize,
    block: usize,
}

impl<'a, C: Fn(usize, usize) -> f64> TransportSimplex<'a, C> {
    /// `cost(i, j)` must lie in `[0, 1]`; supplies and demands must be
    /// positive with equal totals.
    pub fn new(supply: &[f64], demand: &[f64], cost: &'a C) -> Self {
        let (m, n) = (supply.len(), demand.len());
        let nodes = m + n + 1;
        let root = m + n;
        let real_arcs = m * n;
        let mut s = TransportSimplex {
            m,
            n,
            cost,
            root,
            parent: vec![NONE; nodes],
            pred_arc: vec![NONE; nodes],
            up: vec![false; nodes],
            flow: vec![0.0; nodes],
            pi: vec![0.0; nodes],
            depth: vec![0; nodes],
            first_child: vec![NONE; nodes],
            next_sib: vec![NONE; nodes],
            prev_sib: vec![NONE; nodes],
            next_arc: 0,
            block: ((real_arcs + m + n) as f64).sqrt().ceil().max(10.0) as usize,
        };
        for v in 0..root {
            s.attach(v, root);
            s.pred_arc[v] = real_arcs + v;
            s.depth[v] = 1;
            if v < m {
                s.up[v] = true;
                s.flow[v] = supply[v];
                s.pi[v] = -ART_COST;
            } else {
                s.up[v] = false;
                s.flow[v] = demand[v - m];
                s.pi[v] = ART_COST;
            }
        }
        s
    }

    fn arc_count(&self) -> usize {
        self.m * self.n + self.m + self.n
    }

    fn endpoints(&self, arc: usize) -> (usize, usize) {
        let real = self.m * self.n;
        if arc < real {
            (arc / self.n, self.m + arc % self.n)
        } else {
            let v = arc - real;
            if v < self.m {
                (v, self.root)
            } else {
                (self.root, v)
            }
        }
    }

    fn arc_cost(&self, arc: usize) -> f64 {
        if arc < self.m * self.n {
            (self.cost)(arc / self.n, arc % self.n)
        } else {
            ART_COST
        }
    }

    fn reduced_cost(&self, arc: usize) -> f64 {
        let (s, t) = self.endpoints(arc);
        self.arc_cost(arc) + self.pi[s] - self.pi[t]
    }

    fn in_tree(&self, arc: usize) -> bool {
        let (s, t) = self.endpoints(arc);
        (self.parent[s] == t && self.pred_arc[s] == arc) || (self.parent[t] == s && self.pred_arc[t] == arc)
    }

    fn attach(&mut self, v: usize, p: usize) {
        self.parent[v] = p;
        self.prev_sib[v] = NONE;
        self.next_sib[v] = self.first_child[p];
        if self.first_child[p] != NONE {
            self.prev_sib[self.first_child[p]] = v;
        }
        self.first_child[p] = v;
    }

    fn detach(&mut self, v: usize) {
        let p = self.parent[v];
        let (prev, next) = (self.prev_sib[v], self.next_sib[v]);
        if prev != NONE {
            self.next_sib[prev] = next;
        } else {
            self.first_child[p] = next;
        }
        if next != NONE {
            self.prev_sib[next] = prev;
        }
        self.parent[v] = NONE;
        self.prev_sib[v] = NONE;
        self.next_sib[v] = NONE;
    }

    /// Block search: the most negative reduced cost within the first block
    /// (cyclically from the last position) that contains an eligible arc.
    /// Ties keep the lowest scanned index.
    fn find_entering(&mut self) -> Option<usize> {
        let (m, n) = (self.m, self.n);
        let total = self.arc_count();
        let real = m * n;
        let mut best = NONE;
        let mut best_rc = -EPS;
        let mut left = self.block;
        let mut arc = self.next_arc;
        let mut remaining = total;
        while remaining > 0 {
            // one row segment of real arcs, or a single artificial arc
            let (len, hit) = if arc < real {
                let (i, j0) = (arc / n, arc % n);
                let len = (n - j0).min(remaining);
                let pi_i = self.pi[i];
                let mut hit = None;
                for (k, &pi_j) in self.pi[m + j0..m + j0 + len].iter().enumerate() {
                    let rc = (self.cost)(i, j0 + k) + pi_i - pi_j;
                    if rc < best_rc && !self.in_tree(arc + k) {
                        best_rc = rc;
                        best = arc + k;
                    }
                    left -= 1;
                    if left == 0 {
                        if best != NONE {
                            hit = Some(k + 1);
                            break;
                        }
                        left = self.block;
                    }
                }
                (len, hit)
            } else {
                let rc = self.reduced_cost(arc);
                if rc < best_rc && !self.in_tree(arc) {
                    best_rc = rc;
                    best = arc;
                }
                left -= 1;
                let mut hit = None;
                if left == 0 {
                    if best != NONE {
                        hit = Some(1);
                    }
                    left = self.block;
                }
                (1, hit)
            };
            if let Some(used) = hit {
                self.next_arc = (arc + used) % total;
                return Some(best);
            }
            arc = (arc + len) % total;
            remaining -= len;
        }
        (best != NONE).then_some(best)
    }

    fn join(&self, mut a: usize, mut b: usize) -> usize {
        while self.depth[a] > self.depth[b] {
            a = self.parent[a];
        }
        while self.depth[b] > self.depth[a] {
            b = self.parent[b];
        }
        while a != b {
            a = self.parent[a];
            b = self.parent[b];
        }
        a
    }

    /// One pivot on entering arc `arc`. Returns false if the cycle has no
    /// blocking arc (unbounded direction).
    fn pivot(&mut self, arc: usize) -> bool {
        let (s, t) = self.endpoints(arc);
        let apex = self.join(s, t);

        // Flow is pushed s -> t, then up from t to the apex and down from the
        // apex to s. Among blocking arcs the last one met in that orientation
        // leaves, which keeps the tree strongly feasible.
        let mut delta = f64::INFINITY;
        let mut leaving = NONE;
        let mut on_source_side = true;
        let mut v = s;
        while v != apex {
            if self.up[v] && self.flow[v] < delta {
                delta = self.flow[v];
                leaving = v;
            }
            v = self.parent[v];
        }
        let mut v = t;
        while v != apex {
            if !self.up[v] && self.flow[v] <= delta {
                delta = self.flow[v];
                leaving = v;
                on_source_side = false;
            }
            v = self.parent[v];
        }
        if leaving == NONE {
            return false;
        }
        let delta = delta.max(0.0);

        if delta > 0.0 {
            let mut v = s;
            while v != apex {
                self.flow[v] += if self.up[v] { -delta } else { delta };
                v = self.parent[v];
            }
            let mut v = t;
            while v != apex {
                self.flow[v] += if self.up[v] { delta } else { -delta };
                v = self.parent[v];
            }
        }

        let (u_in, v_in) = if on_source_side { (s, t) } else { (t, s) };
        self.reroot(u_in, leaving);
        self.attach(u_in, v_in);
        self.pred_arc[u_in] = arc;
        self.up[u_in] = u_in == s;
        self.flow[u_in] = delta;
        self.refresh_subtree(u_in);
        true
    }

    /// Cuts the arc above `top` and reverses the tree path from `bottom` up
    /// to `top`, so that `bottom` becomes the root of the detached subtree.
    fn reroot(&mut self, bottom: usize, top: usize) {
        let mut path = vec![bottom];
        let mut v = bottom;
        while v != top {
            v = self.parent[v];
            path.push(v);
        }
        self.detach(top);
        // walk from the top so each reversed arc is read before overwritten
        for k in (0..path.len() - 1).rev() {
            let (child, upper) = (path[k], path[k + 1]);
            self.detach(child);
            self.attach(upper, child);
            self.pred_arc[upper] = self.pred_arc[child];
            self.up[upper] = !self.up[child];
            self.flow[upper] = self.flow[child];
        }
    }

    fn refresh_subtree(&mut self, top: usize) {
        let mut stack = vec![top];
        while let Some(v) = stack.pop() {
            let p = self.parent[v];
            let c = self.arc_cost(self.pred_arc[v]);
            self.pi[v] = if self.up[v] { self.pi[p] - c } else { self.pi[p] + c };
            self.depth[v] = self.depth[p] + 1;
            let mut c = self.first_child[v];
            while c != NONE {
                stack.push(c);
                c = self.next_sib[c];
            }
        }
    }

    pub fn solve(mut self, max_pivots: usize) -> Result<SimplexSolution, String> {
        let mut pivots = 0;
        while let Some(arc) = self.find_entering() {
            if !self.pivot(arc) {
                return Err("unbounded pivot cycle".into());
            }
            pivots += 1;
            if pivots > max_pivots {
                return Err(format!("no convergence after {max_pivots} pivots"));
            }
        }
        let real = self.m * self.n;
        let total: f64 = self.flow[..self.m].iter().sum::<f64>().max(1.0);
        let mut entries = Vec::new();
        for v in 0..self.root {
            let arc = self.pred_arc[v];
            if arc >= real {
                if self.flow[v] > 1e-12 * total {
                    return Err(format!("artificial arc of node {v} keeps flow {}", self.flow[v]));
                }
            } else if self.flow[v] > 0.0 {
                entries.push((arc / self.n, arc % self.n, self.flow[v]));
            }
        }
        entries.sort_by_key(|a| (a.0, a.1));
        Ok(SimplexSolution { entries })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(supply: &[f64], demand: &[f64], c: &[Vec<f64>]) -> Vec<(usize, usize, f64)> {
        let cost = |i: usize, j: usize| c[i][j];
        TransportSimplex::new(supply, demand, &cost).solve(10_000).unwrap().entries
    }

    #[test]
    fn two_by_two_assignment() {
        let c = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert_eq!(solve(&[0.5, 0.5], &[0.5, 0.5], &c), vec![(0, 0, 0.5), (1, 1, 0.5)]);
        let c = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(solve(&[0.5, 0.5], &[0.5, 0.5], &c), vec![(0, 1, 0.5), (1, 0, 0.5)]);
    }

    #[test]
    fn unequal_sizes_split_mass() {
        let c = vec![vec![0.0, 0.5, 1.0]];
        let plan = solve(&[1.0], &[0.2, 0.3, 0.5], &c);
        assert_eq!(plan.len(), 3);
        let total: f64 = plan.iter().map(|e| e.2).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }
}
