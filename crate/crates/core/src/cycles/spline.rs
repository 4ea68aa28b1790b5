//! Cubic smoothing spline (Reinsch): minimise the integral of `g''^2`
//! subject to `sum (y_i - g(x_i))^2 <= s`.

/// Natural cubic spline given by knot values and knot second derivatives.
#[derive(Clone, Debug)]
pub struct SmoothingSpline {
    x: Vec<f64>,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl SmoothingSpline {
    /// `x` strictly increasing with at least two knots.
    pub fn fit(x: &[f64], y: &[f64], s: f64) -> Self {
        assert_eq!(x.len(), y.len());
        let n = x.len();
        assert!(n >= 2, "smoothing spline needs two knots");
        if n == 2 {
            return Self {
                x: x.to_vec(),
                values: y.to_vec(),
                second: vec![0.0; 2],
            };
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let m = n - 2;

        // column j of Q (interior knot j + 1) has entries at rows j, j + 1, j + 2
        let qcol: Vec<[f64; 3]> = (0..m)
            .map(|j| {
                let (h0, h1) = (h[j], h[j + 1]);
                [1.0 / h0, -1.0 / h0 - 1.0 / h1, 1.0 / h1]
            })
            .collect();
        // R and Q'Q are symmetric pentadiagonal; store diagonals 0, 1, 2
        let mut r = vec![[0.0f64; 3]; m];
        let mut qtq = vec![[0.0f64; 3]; m];
        for j in 0..m {
            r[j][0] = (h[j] + h[j + 1]) / 3.0;
            if j + 1 < m {
                r[j][1] = h[j + 1] / 6.0;
            }
            for d in 0..3 {
                if j + d < m {
                    // overlap of rows j..j+2 with rows j+d..j+d+2
                    qtq[j][d] = (d..3).map(|k| qcol[j][k] * qcol[j + d][k - d]).sum();
                }
            }
        }
        let qty: Vec<f64> = (0..m)
            .map(|j| (0..3).map(|k| qcol[j][k] * y[j + k]).sum())
            .collect();

        let solve_for = |lambda: f64| -> (Vec<f64>, Vec<f64>, f64) {
            let band: Vec<[f64; 3]> = (0..m)
                .map(|j| [0, 1, 2].map(|d| r[j][d] + lambda * qtq[j][d]))
                .collect();
            let gamma = solve_pentadiagonal(&band, &qty);
            let mut qg = vec![0.0; n];
            for j in 0..m {
                for k in 0..3 {
                    qg[j + k] += qcol[j][k] * gamma[j];
                }
            }
            let g: Vec<f64> = y.iter().zip(&qg).map(|(yi, d)| yi - lambda * d).collect();
            let resid = qg.iter().map(|d| (lambda * d).powi(2)).sum();
            (g, gamma, resid)
        };

        let line = least_squares_line(x, y);
        let line_resid: f64 = x.iter().zip(y).map(|(xi, yi)| (yi - line(*xi)).powi(2)).sum();
        if line_resid <= s {
            return Self {
                x: x.to_vec(),
                values: x.iter().map(|&xi| line(xi)).collect(),
                second: vec![0.0; n],
            };
        }
        if s <= 0.0 {
            let (g, gamma, _) = solve_for(0.0);
            return Self::from_parts(x, g, gamma);
        }

        // residual grows monotonically with lambda; bisect in log space
        let (mut lo, mut hi) = (-30.0f64, 30.0f64);
        for _ in 0..120 {
            let mid = 0.5 * (lo + hi);
            let (_, _, resid) = solve_for(mid.exp());
            if resid > s {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo < 1e-12 {
                break;
            }
        }
        let (g, gamma, _) = solve_for(lo.exp());
        Self::from_parts(x, g, gamma)
    }

    fn from_parts(x: &[f64], values: Vec<f64>, gamma: Vec<f64>) -> Self {
        let mut second = Vec::with_capacity(x.len());
        second.push(0.0);
        second.extend(gamma);
        second.push(0.0);
        Self {
            x: x.to_vec(),
            values,
            second,
        }
    }

    /// Evaluates the spline; linear extrapolation is not needed for the
    /// interpolation grid, so outside points clamp to the end intervals.
    pub fn eval(&self, at: f64) -> f64 {
        let n = self.x.len();
        let i = match self.x.partition_point(|&xi| xi <= at) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - at) / h;
        let b = (at - self.x[i]) / h;
        a * self.values[i]
            + b * self.values[i + 1]
            + ((a * a * a - a) * self.second[i] + (b * b * b - b) * self.second[i + 1]) * h * h / 6.0
    }

    /// Residual sum of squares at the knots.
    pub fn residual(&self, y: &[f64]) -> f64 {
        self.values.iter().zip(y).map(|(g, yi)| (g - yi).powi(2)).sum()
    }
}

fn least_squares_line(x: &[f64], y: &[f64]) -> impl Fn(f64) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|xi| (xi - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(xi, yi)| (xi - mx) * (yi - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    move |xi| my + slope * (xi - mx)
}

/// Solves a symmetric positive-definite pentadiagonal system given by its
/// main, first and second upper diagonals (LDL' without pivoting).
fn solve_pentadiagonal(band: &[[f64; 3]], rhs: &[f64]) -> Vec<f64> {
    let m = rhs.len();
    // full banded copy: a[i][i + d] for d in -2..=2
    let at = |i: usize, j: usize| -> f64 {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        if hi - lo <= 2 {
            band[lo][hi - lo]
        } else {
            0.0
        }
    };
    let mut a: Vec<[f64; 5]> = (0..m)
        .map(|i| {
            let mut row = [0.0; 5];
            for (slot, d) in row.iter_mut().zip(-2isize..=2) {
                let j = i as isize + d;
                if (0..m as isize).contains(&j) {
                    *slot = at(i, j as usize);
                }
            }
            row
        })
        .collect();
    let mut b = rhs.to_vec();
    for col in 0..m {
        let pivot = a[col][2];
        for off in 1..=2 {
            let row = col + off;
            if row >= m {
                break;
            }
            let f = a[row][2 - off] / pivot;
            if f == 0.0 {
                continue;
            }
            for k in 0..=2 {
                // a[row][col + k] -= f * a[col][col + k]
                let dst = 2 - off + k;
                a[row][dst] -= f * a[col][2 + k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut out = vec![0.0; m];
    for row in (0..m).rev() {
        let mut acc = b[row];
        for k in 1..=2 {
            if row + k < m {
                acc -= a[row][2 + k] * out[row + k];
            }
        }
        out[row] = acc / a[row][2];
    }
    out
}
