use super::{naive_mm, Matrix, MatmulError};
use crate::circuit::Semiring;

/// A bilinear scheme multiplying `m x m` matrices with `rank` products:
/// `X^_k = sum alpha[k][i][j] X[i][j]`, `Y^_k = sum beta[k][i][j] Y[i][j]`,
/// `(XY)[i][j] = sum_k gamma[i][j][k] X^_k Y^_k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MMTensor {
    pub name: String,
    pub m: usize,
    pub rank: usize,
    pub alpha: Vec<Vec<Vec<i64>>>,
    pub beta: Vec<Vec<Vec<i64>>>,
    pub gamma: Vec<Vec<Vec<i64>>>,
}

impl MMTensor {
    /// Schoolbook `<m, m, m; m^3>`: product `k = (i*m + l)*m + j` is `X[i][l] * Y[l][j]`.
    pub fn trivial(m: usize) -> Self {
        let rank = m * m * m;
        let mut alpha = vec![vec![vec![0; m]; m]; rank];
        let mut beta = alpha.clone();
        let mut gamma = vec![vec![vec![0; rank]; m]; m];
        for i in 0..m {
            for l in 0..m {
                for j in 0..m {
                    let k = (i * m + l) * m + j;
                    alpha[k][i][l] = 1;
                    beta[k][l][j] = 1;
                    gamma[i][j][k] = 1;
                }
            }
        }
        Self { name: format!("trivial-{m}"), m, rank, alpha, beta, gamma }
    }

    /// Strassen's `<2, 2, 2; 7>`.
    pub fn strassen() -> Self {
        // rows: products M1..M7; entries in (11, 12, 21, 22) order
        const A: [[i64; 4]; 7] = [
            [1, 0, 0, 1],
            [0, 0, 1, 1],
            [1, 0, 0, 0],
            [0, 0, 0, 1],
            [1, 1, 0, 0],
            [-1, 0, 1, 0],
            [0, 1, 0, -1],
        ];
        const B: [[i64; 4]; 7] = [
            [1, 0, 0, 1],
            [1, 0, 0, 0],
            [0, 1, 0, -1],
            [-1, 0, 1, 0],
            [0, 0, 0, 1],
            [1, 1, 0, 0],
            [0, 0, 1, 1],
        ];
        // rows: C11, C12, C21, C22; columns: M1..M7
        const G: [[i64; 7]; 4] = [
            [1, 0, 0, 1, -1, 0, 1],
            [0, 0, 1, 0, 1, 0, 0],
            [0, 1, 0, 1, 0, 0, 0],
            [1, -1, 1, 0, 0, 1, 0],
        ];
        let square = |row: &[i64; 4]| vec![vec![row[0], row[1]], vec![row[2], row[3]]];
        Self {
            name: "strassen".into(),
            m: 2,
            rank: 7,
            alpha: A.iter().map(square).collect(),
            beta: B.iter().map(square).collect(),
            gamma: vec![vec![G[0].to_vec(), G[1].to_vec()], vec![G[2].to_vec(), G[3].to_vec()]],
        }
    }

    /// `log_m(rank)`.
    pub fn sigma(&self) -> f64 {
        (self.rank as f64).ln() / (self.m as f64).ln()
    }

    /// Multiplies `x` and `y` through the bilinear scheme.
    pub fn apply(&self, x: &Matrix, y: &Matrix, ring: Semiring) -> Result<Matrix, MatmulError> {
        if !ring.is_ring() {
            return Err(MatmulError::NotARing);
        }
        if x.dim() != self.m || y.dim() != self.m {
            return Err(MatmulError::DimensionMismatch { left: x.dim(), right: y.dim() });
        }
        let coeff = |c: i64| ring.from_i64(c).ok_or(MatmulError::NotARing);
        let mut prods = Vec::with_capacity(self.rank);
        for k in 0..self.rank {
            let (mut xh, mut yh) = (ring.zero(), ring.zero());
            for i in 0..self.m {
                for j in 0..self.m {
                    xh = ring.add(xh, ring.mul(coeff(self.alpha[k][i][j])?, x.get(i, j)));
                    yh = ring.add(yh, ring.mul(coeff(self.beta[k][i][j])?, y.get(i, j)));
                }
            }
            prods.push(ring.mul(xh, yh));
        }
        let mut out = Matrix::zeros(self.m, ring);
        for i in 0..self.m {
            for j in 0..self.m {
                let mut acc = ring.zero();
                for (k, &p) in prods.iter().enumerate() {
                    acc = ring.add(acc, ring.mul(coeff(self.gamma[i][j][k])?, p));
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    /// Whether the scheme reproduces the schoolbook product on `x, y`.
    pub fn agrees(&self, x: &Matrix, y: &Matrix, ring: Semiring) -> Result<bool, MatmulError> {
        Ok(self.apply(x, y, ring)? == naive_mm(x, y, ring)?)
    }
}

/// Tensor by CLI name: `trivial` (m = 4) or `strassen`.
pub fn tensor_by_name(name: &str) -> Option<MMTensor> {
    match name {
        "trivial" => Some(MMTensor::trivial(4)),
        "strassen" => Some(MMTensor::strassen()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strassen_exhaustive_small_entries() {
        let ring = Semiring::PlusTimes { modulus: 101 };
        let t = MMTensor::strassen();
        let all: Vec<Matrix> = (0..81u32)
            .map(|code| {
                let mut c = code;
                let vals: Vec<u64> = (0..4)
                    .map(|_| {
                        let v = c % 3;
                        c /= 3;
                        v as u64
                    })
                    .collect();
                Matrix::from_vec(2, vals)
            })
            .collect();
        for x in &all {
            for y in &all {
                assert!(t.agrees(x, y, ring).unwrap());
            }
        }
    }

    #[test]
    fn trivial_rank_and_sigma() {
        let t = MMTensor::trivial(4);
        assert_eq!(t.rank, 64);
        assert!((t.sigma() - 3.0).abs() < 1e-12);
        assert!(MMTensor::strassen().sigma() < 2.81);
    }

    #[test]
    fn tropical_is_rejected() {
        let t = MMTensor::strassen();
        let x = Matrix::zeros(2, Semiring::tropical(4));
        assert!(matches!(t.apply(&x, &x, Semiring::tropical(4)), Err(MatmulError::NotARing)));
    }
}
