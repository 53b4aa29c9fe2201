//! Banded `L D L^T` factorization without pivoting.

/// Row-banded unit lower factor and pivots. Row `i` stores `L[i][i-b..i]`
/// contiguously; entries left of column 0 are zero padding.
#[derive(Debug, Clone)]
pub(crate) struct BandLdl {
    n: usize,
    b: usize,
    l: Vec<f64>,
    d: Vec<f64>,
}

impl BandLdl {
    /// Factors the symmetric band matrix whose lower part is produced by
    /// `entry(i, j)` for `i - b <= j <= i`. Returns `None` on a zero or
    /// non-finite pivot.
    pub fn factor(n: usize, b: usize, entry: impl Fn(usize, usize) -> f64) -> Option<BandLdl> {
        let w = b + 1;
        let mut l = vec![0.0; n * w];
        let mut d = vec![0.0; n];
        let mut t = vec![0.0; w];
        for i in 0..n {
            let lo = i.saturating_sub(b);
            let row = i * w;
            for j in lo..i {
                // t[k - lo] = L[i][k] d[k] for k < j
                let klo = lo.max(j.saturating_sub(b));
                let rj = j * w;
                let lj = &l[rj + (klo + b - j)..rj + b];
                let tk = &t[klo - lo..j - lo];
                let s: f64 = tk.iter().zip(lj).map(|(a, c)| a * c).sum();
                let lij = (entry(i, j) - s) / d[j];
                l[row + (j + b - i)] = lij;
                t[j - lo] = lij * d[j];
            }
            let mut di = entry(i, i);
            for k in lo..i {
                di -= l[row + (k + b - i)] * t[k - lo];
            }
            if di == 0.0 || !di.is_finite() {
                return None;
            }
            d[i] = di;
            l[row + b] = 1.0;
        }
        Some(BandLdl { n, b, l, d })
    }

    pub fn positive_definite(&self) -> bool {
        self.d.iter().all(|&v| v > 0.0)
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let (n, b, w) = (self.n, self.b, self.b + 1);
        let mut x = rhs.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(b);
            let row = i * w;
            let s: f64 = (lo..i).map(|k| self.l[row + (k + b - i)] * x[k]).sum();
            x[i] -= s;
        }
        for i in 0..n {
            x[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let xi = x[i];
            let lo = i.saturating_sub(b);
            let row = i * w;
            for k in lo..i {
                x[k] -= self.l[row + (k + b - i)] * xi;
            }
        }
        x
    }
}
