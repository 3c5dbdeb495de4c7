//! Independent numeric oracles for the acceptance suite. Deliberately
//! written from scratch (classical Jacobi with greedy pivoting, straight
//! power-series sums) so they share no code path with the library.

use grembed::numerics::matrix::DenseMatrix;

/// Classical Jacobi eigensolver: repeatedly zero the largest off-diagonal
/// element. Returns eigenvalues ascending and eigenvectors as columns.
pub fn jacobi_oracle(a: &DenseMatrix) -> (Vec<f64>, DenseMatrix) {
    let n = a.rows;
    assert_eq!(a.cols, n);
    let mut m: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _ in 0..20_000 {
        // greedy pivot search
        let (mut p, mut q, mut big) = (0, 1, 0.0_f64);
        for i in 0..n {
            for j in (i + 1)..n {
                if m[i][j].abs() > big {
                    big = m[i][j].abs();
                    p = i;
                    q = j;
                }
            }
        }
        if big < 1e-14 {
            break;
        }
        let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
        let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
        let c = 1.0 / (t * t + 1.0).sqrt();
        let s = t * c;
        for k in 0..n {
            let (mkp, mkq) = (m[k][p], m[k][q]);
            m[k][p] = c * mkp - s * mkq;
            m[k][q] = s * mkp + c * mkq;
        }
        for k in 0..n {
            let (mpk, mqk) = (m[p][k], m[q][k]);
            m[p][k] = c * mpk - s * mqk;
            m[q][k] = s * mpk + c * mqk;
        }
        for k in 0..n {
            let (vkp, vkq) = (v[k][p], v[k][q]);
            v[k][p] = c * vkp - s * vkq;
            v[k][q] = s * vkp + c * vkq;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m[x][x].partial_cmp(&m[y][y]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| m[i][i]).collect();
    let mut vectors = DenseMatrix::zeros(n, n);
    for (col, &old) in order.iter().enumerate() {
        for r in 0..n {
            vectors[(r, col)] = v[r][old];
        }
    }
    (values, vectors)
}

/// Singular values of a general matrix via the eigenvalues of AᵀA, using
/// the oracle eigensolver. Returned descending.
pub fn singular_values_oracle(a: &DenseMatrix) -> Vec<f64> {
    let mut ata = DenseMatrix::zeros(a.cols, a.cols);
    for i in 0..a.cols {
        for j in 0..a.cols {
            let mut s = 0.0;
            for r in 0..a.rows {
                s += a[(r, i)] * a[(r, j)];
            }
            ata[(i, j)] = s;
        }
    }
    let (vals, _) = jacobi_oracle(&ata);
    let mut sigma: Vec<f64> = vals.iter().map(|&l| l.max(0.0).sqrt()).collect();
    sigma.reverse();
    sigma
}
