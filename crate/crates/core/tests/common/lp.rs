//! Dense two-phase simplex with Bland's rule. Slow and simple on purpose: it
//! shares no code with the flow solver it checks.

const EPS: f64 = 1e-12;

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        *self.rows[i].last().unwrap()
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Minimizes `cost · x` letting only columns below `allowed` enter.
    fn optimize(&mut self, cost: &[f64], allowed: usize) {
        loop {
            let entering = (0..allowed).find(|&j| {
                let reduced = cost[j] - self.rows.iter().zip(&self.basis).map(|(row, &b)| cost[b] * row[j]).sum::<f64>();
                reduced < -1e-12
            });
            let Some(j) = entering else { return };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][j];
                if a > EPS {
                    let ratio = self.rhs(i) / a;
                    let better = match leave {
                        None => true,
                        Some((k, best)) => ratio < best - 1e-15 || (ratio <= best + 1e-15 && self.basis[i] < self.basis[k]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let (r, _) = leave.expect("transport LPs are bounded");
            self.pivot(r, j);
        }
    }
}

/// Optimal value of `min c·x  s.t.  A x = b, x ≥ 0`, or `None` when infeasible.
pub fn lp_min(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Option<f64> {
    let (m, n) = (a.len(), c.len());
    let width = n + m + 1;
    let mut t = Tableau {
        rows: vec![vec![0.0; width]; m],
        basis: (n..n + m).collect(),
    };
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t.rows[i][j] = sign * a[i][j];
        }
        t.rows[i][n + i] = 1.0;
        t.rows[i][width - 1] = sign * b[i];
    }

    let mut phase1 = vec![0.0; n + m];
    phase1[n..].iter_mut().for_each(|v| *v = 1.0);
    t.optimize(&phase1, n + m);
    let infeasibility: f64 = (0..m).filter(|&i| t.basis[i] >= n).map(|i| t.rhs(i)).sum();
    if infeasibility > 1e-9 {
        return None;
    }
    for i in 0..m {
        if t.basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| t.rows[i][j].abs() > 1e-9) {
                t.pivot(i, j);
            }
        }
    }

    let mut phase2 = c.to_vec();
    phase2.extend(std::iter::repeat(0.0).take(m));
    t.optimize(&phase2, n);
    Some((0..m).filter(|&i| t.basis[i] < n).map(|i| c[t.basis[i]] * t.rhs(i)).sum())
}

/// Balanced transport between weight vectors `a` and `b` with row-major costs.
pub fn transport_lp(a: &[f64], b: &[f64], cost: &[f64]) -> f64 {
    let (m, n) = (a.len(), b.len());
    let mut rows = Vec::with_capacity(m + n);
    let mut rhs = Vec::with_capacity(m + n);
    for i in 0..m {
        let mut row = vec![0.0; m * n];
        row[i * n..(i + 1) * n].iter_mut().for_each(|v| *v = 1.0);
        rows.push(row);
        rhs.push(a[i]);
    }
    for j in 0..n {
        let mut row = vec![0.0; m * n];
        for i in 0..m {
            row[i * n + j] = 1.0;
        }
        rows.push(row);
        rhs.push(b[j]);
    }
    lp_min(&rows, &rhs, cost).expect("balanced transport is feasible")
}

/// Known small cases; run before the oracle is trusted.
pub fn self_check() {
    // min x + 2y  s.t. x + y = 1  ->  1
    assert!((lp_min(&[vec![1.0, 1.0]], &[1.0], &[1.0, 2.0]).unwrap() - 1.0).abs() < 1e-12);
    // x = 1, x = 2 is infeasible
    assert!(lp_min(&[vec![1.0], vec![1.0]], &[1.0, 2.0], &[0.0]).is_none());
    // 2x2 transport, diagonal free
    let v = transport_lp(&[0.5, 0.5], &[0.5, 0.5], &[0.0, 1.0, 1.0, 0.0]);
    assert!(v.abs() < 1e-12);
}
