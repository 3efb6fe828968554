//! Householder QR with column pivoting and a minimum-norm least-squares
//! solve via a complete orthogonal decomposition.

/// A Householder reflector `I − β v vᵀ` acting on rows `start..`.
struct Reflector {
    start: usize,
    v: Vec<f64>,
    beta: f64,
}

impl Reflector {
    /// Reflector that maps `x` onto `alpha·e₁`. `None` when `x` is zero.
    fn annihilating(x: &[f64], start: usize) -> Option<(Self, f64)> {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return None;
        }
        let alpha = if x[0] >= 0.0 { -norm } else { norm };
        let mut v = x.to_vec();
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|t| t * t).sum();
        if vv == 0.0 {
            return None;
        }
        Some((
            Self {
                start,
                v,
                beta: 2.0 / vv,
            },
            alpha,
        ))
    }

    fn apply(&self, y: &mut [f64]) {
        let tail = &mut y[self.start..];
        let dot: f64 = self.v.iter().zip(tail.iter()).map(|(a, b)| a * b).sum();
        let s = self.beta * dot;
        for (t, v) in tail.iter_mut().zip(&self.v) {
            *t -= s * v;
        }
    }
}

/// Column-pivoted QR of a column-major `m × n` matrix.
struct PivotedQr {
    /// Upper-trapezoidal factor, column-major, first `min(m,n)` rows used.
    r: Vec<Vec<f64>>,
    perm: Vec<usize>,
    reflectors: Vec<Reflector>,
    rank: usize,
}

fn pivoted_qr(mut cols: Vec<Vec<f64>>, m: usize) -> PivotedQr {
    let n = cols.len();
    let steps = m.min(n);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut reflectors = Vec::with_capacity(steps);
    let mut diag = Vec::with_capacity(steps);

    for k in 0..steps {
        let sq = |c: &Vec<f64>| c[k..].iter().map(|v| v * v).sum::<f64>();
        let mut best = k;
        let mut best_norm = sq(&cols[k]);
        for (j, col) in cols.iter().enumerate().skip(k + 1) {
            let nrm = sq(col);
            if nrm > best_norm {
                best = j;
                best_norm = nrm;
            }
        }
        cols.swap(k, best);
        perm.swap(k, best);

        let Some((h, alpha)) = Reflector::annihilating(&cols[k][k..], k) else {
            break;
        };
        cols[k][k] = alpha;
        for v in cols[k][k + 1..].iter_mut() {
            *v = 0.0;
        }
        for col in cols.iter_mut().skip(k + 1) {
            h.apply(col);
        }
        reflectors.push(h);
        diag.push(alpha.abs());
    }

    let rank = match diag.first() {
        None => 0,
        Some(&d0) => {
            let tol = d0 * f64::EPSILON * m.max(n) as f64 * 10.0;
            diag.iter().take_while(|d| **d > tol).count()
        }
    };
    PivotedQr {
        r: cols,
        perm,
        reflectors,
        rank,
    }
}

pub(crate) struct LeastSquares {
    pub solution: Vec<f64>,
    pub rank: usize,
}

/// Minimum-norm solution of `min ‖A x − b‖₂` for column-major `A` (`m` rows).
pub(crate) fn least_squares(cols: Vec<Vec<f64>>, b: &[f64]) -> LeastSquares {
    let m = b.len();
    let n = cols.len();
    let qr = pivoted_qr(cols, m);
    let rank = qr.rank;

    let mut qtb = b.to_vec();
    for h in &qr.reflectors {
        h.apply(&mut qtb);
    }

    let mut z = vec![0.0; n];
    if rank == n {
        for i in (0..n).rev() {
            let mut s = qtb[i];
            for (j, zj) in z.iter().enumerate().skip(i + 1) {
                s -= qr.r[j][i] * zj;
            }
            z[i] = s / qr.r[i][i];
        }
    } else if rank > 0 {
        // T = R[0..rank, 0..n]. Factor Tᵀ = W S with S upper triangular;
        // the minimum-norm solution of T z = c is W [S⁻ᵀ c; 0].
        let mut t_cols: Vec<Vec<f64>> = (0..rank).map(|i| (0..n).map(|j| qr.r[j][i]).collect()).collect();
        let mut second = Vec::with_capacity(rank);
        for k in 0..rank {
            let (h, alpha) = Reflector::annihilating(&t_cols[k][k..], k).expect("leading rows of R are independent");
            t_cols[k][k] = alpha;
            for v in t_cols[k][k + 1..].iter_mut() {
                *v = 0.0;
            }
            for col in t_cols.iter_mut().skip(k + 1) {
                h.apply(col);
            }
            second.push(h);
        }
        // Solve Sᵀ w = c (forward substitution; S[i][j] = t_cols[j][i]).
        let mut w = vec![0.0; n];
        for i in 0..rank {
            let mut s = qtb[i];
            for (j, wj) in w.iter().enumerate().take(i) {
                s -= t_cols[i][j] * wj;
            }
            w[i] = s / t_cols[i][i];
        }
        for h in second.iter().rev() {
            h.apply(&mut w);
        }
        z = w;
    }

    let mut solution = vec![0.0; n];
    for (k, &p) in qr.perm.iter().enumerate() {
        solution[p] = z[k];
    }
    LeastSquares { solution, rank }
}
