//! Shared test oracles, deliberately independent of the library's solvers.

#![allow(dead_code)]

/// Brute-force OLS: explicit normal equations solved with a hand-rolled
/// Gauss-Jordan inverse. Returns (coefficients with intercept first,
/// t-statistics, r_squared).
pub fn naive_ols(design: &[Vec<f64>], response: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
    let n = response.len();
    let k = design.len();
    let p = k + 1;
    // X with intercept column, row major
    let x = |i: usize, j: usize| -> f64 {
        if j == 0 {
            1.0
        } else {
            design[j - 1][i]
        }
    };
    let mut xtx = vec![vec![0.0f64; p]; p];
    let mut xty = vec![0.0f64; p];
    for a in 0..p {
        for b in 0..p {
            let mut s = 0.0;
            for i in 0..n {
                s += x(i, a) * x(i, b);
            }
            xtx[a][b] = s;
        }
        let mut s = 0.0;
        for i in 0..n {
            s += x(i, a) * response[i];
        }
        xty[a] = s;
    }
    let inv = gauss_jordan_inverse(&xtx).expect("test problems are full rank");
    let beta: Vec<f64> = (0..p)
        .map(|a| (0..p).map(|b| inv[a][b] * xty[b]).sum())
        .collect();

    let mut ssr = 0.0;
    let mean = response.iter().sum::<f64>() / n as f64;
    let mut sst = 0.0;
    for i in 0..n {
        let fitted: f64 = (0..p).map(|j| beta[j] * x(i, j)).sum();
        ssr += (response[i] - fitted).powi(2);
        sst += (response[i] - mean).powi(2);
    }
    let dof = (n - p) as f64;
    let s2 = ssr / dof;
    let t: Vec<f64> = (0..p).map(|j| beta[j] / (s2 * inv[j][j]).sqrt()).collect();
    (beta, t, 1.0 - ssr / sst)
}

/// Dense inverse by Gauss-Jordan elimination with partial pivoting.
pub fn gauss_jordan_inverse(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        let scale = a[col][col];
        for v in a[col].iter_mut() {
            *v /= scale;
        }
        for row in 0..n {
            if row != col {
                let factor = a[row][col];
                if factor != 0.0 {
                    for j in 0..2 * n {
                        a[row][j] -= factor * a[col][j];
                    }
                }
            }
        }
    }
    Some(a.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let ra = average_ranks(a);
    let rb = average_ranks(b);
    pearson(&ra, &rb)
}

fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].partial_cmp(&v[j]).unwrap_or(std::cmp::Ordering::Equal));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &id in &idx[i..=j] {
            ranks[id] = avg;
        }
        i = j + 1;
    }
    ranks
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for i in 0..a.len() {
        let da = a[i] - ma;
        let db = b[i] - mb;
        cov += da * db;
        va += da * da;
        vb += db * db;
    }
    cov / (va.sqrt() * vb.sqrt())
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}
