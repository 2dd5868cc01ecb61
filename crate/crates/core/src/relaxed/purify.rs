//! With packet sizes held fixed the latency penalty is concave in the caching
//! weights and every constraint on them is linear, so some vertex of the
//! feasible polytope is at least as good as any interior point. This module
//! walks a relaxed point to such a vertex along null directions of the tight
//! constraints, taking the better endpoint each time.

use super::projection::FREE;
use super::RelaxedProblem;

const SNAP: f64 = 1e-12;
const TIGHT: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Row {
    Capacity(usize),
    File(usize),
    Packet(usize),
}

struct Rows {
    usage: Vec<f64>,
    file_sum: Vec<f64>,
    packet_sum: Vec<f64>,
}

impl RelaxedProblem<'_> {
    fn rows(&self, m: &[f64], sigma: &[f64]) -> Rows {
        let (kk, n, ff) = (self.k, self.n, self.f);
        let mut usage = vec![0.0; kk];
        let mut file_sum = vec![0.0; ff];
        let mut packet_sum = vec![0.0; n * ff];
        for (j, total) in file_sum.iter_mut().enumerate() {
            for i in 0..n {
                let p = j * n + i;
                for k in 0..kk {
                    let w = m[p * kk + k];
                    usage[k] += w * sigma[p];
                    packet_sum[p] += w;
                }
                *total += packet_sum[p];
            }
        }
        Rows {
            usage,
            file_sum,
            packet_sum,
        }
    }

    fn row_is_tight(&self, row: Row, rows: &Rows) -> bool {
        match row {
            Row::Capacity(k) => self.cap[k] - rows.usage[k] <= TIGHT * self.cap[k].max(1.0),
            Row::File(j) => {
                rows.file_sum[j] - self.lower[j] <= TIGHT
                    || self.n as f64 - rows.file_sum[j] <= TIGHT
            }
            Row::Packet(p) => 1.0 - rows.packet_sum[p] <= TIGHT,
        }
    }

    fn rows_of(&self, var: usize) -> [Option<Row>; 3] {
        let p = var / self.k;
        [
            Some(Row::Capacity(var % self.k)),
            Some(Row::File(p / self.n)),
            (self.k > 1).then_some(Row::Packet(p)),
        ]
    }

    fn coefficient(&self, row: Row, var: usize, sigma: &[f64]) -> f64 {
        let p = var / self.k;
        match row {
            Row::Capacity(k) if var % self.k == k => sigma[p],
            Row::File(j) if p / self.n == j => 1.0,
            Row::Packet(q) if q == p => 1.0,
            _ => 0.0,
        }
    }

    /// Exact penalty sum over the given files.
    fn penalty_of(&self, m: &[f64], sigma: &[f64], files: &[usize]) -> f64 {
        files.iter().map(|&j| self.file_penalty(m, sigma, j)).sum()
    }

    /// Moves `m` to a vertex without increasing the exact penalty.
    pub(super) fn purify(&self, m: &mut [f64], sigma: &[f64], pins: &[i8]) {
        let budget = 4 * m.len() + 16;
        for _ in 0..budget {
            let frac: Vec<usize> = (0..m.len())
                .filter(|&v| pins[v] == FREE && m[v] > SNAP && m[v] < 1.0 - SNAP)
                .collect();
            if frac.is_empty() {
                break;
            }
            let rows = self.rows(m, sigma);
            let Some((cols, dir)) = self.null_direction(&frac, &rows, sigma) else {
                break;
            };
            let (t_lo, t_hi) = self.step_range(m, sigma, &rows, &cols, &dir);
            if t_hi - t_lo <= 1e-15 {
                break;
            }
            let mut files: Vec<usize> = cols.iter().map(|&v| v / self.k / self.n).collect();
            files.dedup();
            let candidate = |t: f64| {
                let mut next = m.to_vec();
                for (&v, &d) in cols.iter().zip(&dir) {
                    next[v] = (next[v] + t * d).clamp(0.0, 1.0);
                    if next[v] < SNAP {
                        next[v] = 0.0;
                    } else if next[v] > 1.0 - SNAP {
                        next[v] = 1.0;
                    }
                }
                next
            };
            let up = candidate(t_hi);
            let down = candidate(t_lo);
            let chosen =
                if self.penalty_of(&up, sigma, &files) <= self.penalty_of(&down, sigma, &files) {
                    up
                } else {
                    down
                };
            m.copy_from_slice(&chosen);
        }
    }

    /// Grows a column set until the tight rows restricted to it become rank
    /// deficient and returns a null vector.
    fn null_direction(
        &self,
        frac: &[usize],
        rows: &Rows,
        sigma: &[f64],
    ) -> Option<(Vec<usize>, Vec<f64>)> {
        let mut cols: Vec<usize> = Vec::new();
        let mut tight: Vec<Row> = Vec::new();
        for &v in frac {
            cols.push(v);
            for row in self.rows_of(v).into_iter().flatten() {
                if self.row_is_tight(row, rows) && !tight.contains(&row) {
                    tight.push(row);
                }
            }
            let matrix: Vec<Vec<f64>> = tight
                .iter()
                .map(|&row| {
                    cols.iter()
                        .map(|&c| self.coefficient(row, c, sigma))
                        .collect()
                })
                .collect();
            if let Some(d) = null_vector(&matrix, cols.len()) {
                return Some((cols, d));
            }
        }
        None
    }

    /// Largest interval `[t_lo, t_hi] ∋ 0` keeping `m + t·dir` feasible.
    fn step_range(
        &self,
        m: &[f64],
        sigma: &[f64],
        rows: &Rows,
        cols: &[usize],
        dir: &[f64],
    ) -> (f64, f64) {
        let mut t_lo = f64::NEG_INFINITY;
        let mut t_hi = f64::INFINITY;
        let mut bound = |value: f64, rate: f64, lo: f64, hi: f64| {
            if rate > 0.0 {
                t_hi = t_hi.min((hi - value) / rate);
                t_lo = t_lo.max((lo - value) / rate);
            } else if rate < 0.0 {
                t_hi = t_hi.min((lo - value) / rate);
                t_lo = t_lo.max((hi - value) / rate);
            }
        };
        for (&v, &d) in cols.iter().zip(dir) {
            bound(m[v], d, 0.0, 1.0);
        }
        let mut touched: Vec<Row> = cols
            .iter()
            .flat_map(|&v| self.rows_of(v))
            .flatten()
            .collect();
        touched.sort();
        touched.dedup();
        for row in touched {
            if self.row_is_tight(row, rows) {
                continue;
            }
            let rate: f64 = cols
                .iter()
                .zip(dir)
                .map(|(&c, &d)| self.coefficient(row, c, sigma) * d)
                .sum();
            match row {
                Row::Capacity(k) => bound(rows.usage[k], rate, f64::NEG_INFINITY, self.cap[k]),
                Row::File(j) => bound(rows.file_sum[j], rate, self.lower[j], self.n as f64),
                Row::Packet(p) => bound(rows.packet_sum[p], rate, 0.0, 1.0),
            }
        }
        (t_lo.min(0.0), t_hi.max(0.0))
    }
}

/// A unit-scaled null vector of the `rows × cols` matrix, or `None` at full column rank.
fn null_vector(matrix: &[Vec<f64>], cols: usize) -> Option<Vec<f64>> {
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let scale = a
        .iter()
        .flatten()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
        .max(1.0);
    let eps = 1e-12 * scale;
    let mut pivots: Vec<usize> = Vec::new();
    let mut row = 0;
    let mut free_col = None;
    for col in 0..cols {
        let best = (row..a.len()).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()));
        match best {
            Some(r) if a[r][col].abs() > eps => {
                a.swap(row, r);
                let piv = a[row][col];
                a[row].iter_mut().for_each(|v| *v /= piv);
                let pivot_row = a[row].clone();
                for (other, line) in a.iter_mut().enumerate() {
                    if other != row && line[col] != 0.0 {
                        let factor = line[col];
                        line.iter_mut()
                            .zip(&pivot_row)
                            .for_each(|(v, p)| *v -= factor * p);
                    }
                }
                pivots.push(col);
                row += 1;
            }
            _ => {
                free_col = Some(col);
                break;
            }
        }
    }
    let free = free_col?;
    let mut d = vec![0.0; cols];
    d[free] = 1.0;
    for (r, &pc) in pivots.iter().enumerate() {
        d[pc] = -a[r][free];
    }
    let norm = d.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    d.iter_mut().for_each(|v| *v /= norm);
    Some(d)
}

#[cfg(test)]
mod tests {
    use super::null_vector;

    #[test]
    fn null_vector_of_dependent_columns() {
        let m = vec![vec![1.0, 2.0, 3.0], vec![1.0, 1.0, 1.0]];
        let d = null_vector(&m, 3).unwrap();
        for row in &m {
            let dot: f64 = row.iter().zip(&d).map(|(a, b)| a * b).sum();
            assert!(dot.abs() < 1e-12);
        }
    }

    #[test]
    fn full_rank_has_none() {
        let m = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!(null_vector(&m, 2).is_none());
        assert!(null_vector(&[], 1).is_some());
    }
}
