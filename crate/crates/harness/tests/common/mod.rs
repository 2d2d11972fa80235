//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// Two-sided Kolmogorov-Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic(mut samples: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_two_sample(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut worst) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        worst = worst.max((i as f64 / na - j as f64 / nb).abs());
    }
    worst
}

/// Midpoint-grid averages of `||z||_2` and `||z||_2^2` over the points of
/// `[-1, 1]^d` accepted by `inside`, at spacing `2 / cells`.
pub fn grid_norm_moments(d: usize, cells: usize, inside: impl Fn(&[f64]) -> bool) -> (f64, f64) {
    let h = 2.0 / cells as f64;
    let mut idx = vec![0usize; d];
    let mut z = vec![0.0; d];
    let (mut count, mut s1, mut s2) = (0u64, 0.0, 0.0);
    loop {
        for (zi, &k) in z.iter_mut().zip(&idx) {
            *zi = -1.0 + (k as f64 + 0.5) * h;
        }
        if inside(&z) {
            let sq: f64 = z.iter().map(|v| v * v).sum();
            count += 1;
            s1 += sq.sqrt();
            s2 += sq;
        }
        let mut pos = 0;
        loop {
            if pos == d {
                return (s1 / count as f64, s2 / count as f64);
            }
            idx[pos] += 1;
            if idx[pos] < cells {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

pub fn in_cross_polytope(z: &[f64]) -> bool {
    z.iter().map(|v| v.abs()).sum::<f64>() <= 1.0
}

pub fn in_cube(z: &[f64]) -> bool {
    z.iter().all(|v| v.abs() <= 1.0)
}

/// `min c^T v` over `{A_eq v = b_eq, A_le v <= b_le}` by enumerating every
/// basic solution: each choice of inequality rows that, with the equalities,
/// pins down a unique point. Exponential; for a dozen variables at most.
pub fn brute_force_vertex_min(
    c: &[f64],
    a_eq: &[Vec<f64>],
    b_eq: &[f64],
    a_le: &[Vec<f64>],
    b_le: &[f64],
) -> Option<f64> {
    let nv = c.len();
    let need = nv - a_eq.len();
    let mut best: Option<f64> = None;
    let mut chosen: Vec<usize> = (0..need).collect();
    loop {
        let mut rows: Vec<&Vec<f64>> = a_eq.iter().collect();
        let mut rhs: Vec<f64> = b_eq.to_vec();
        for &k in &chosen {
            rows.push(&a_le[k]);
            rhs.push(b_le[k]);
        }
        let m = DMatrix::from_fn(nv, nv, |i, j| rows[i][j]);
        if let Some(v) = m.lu().solve(&DVector::from_vec(rhs)) {
            let feasible_eq = a_eq
                .iter()
                .zip(b_eq)
                .all(|(r, b)| (dot(r, v.as_slice()) - b).abs() <= 1e-9);
            let feasible_le = a_le
                .iter()
                .zip(b_le)
                .all(|(r, b)| dot(r, v.as_slice()) <= b + 1e-9);
            if feasible_eq && feasible_le && v.iter().all(|x| x.is_finite()) {
                let obj = dot(c, v.as_slice());
                best = Some(best.map_or(obj, |b: f64| b.min(obj)));
            }
        }
        // Next combination in lexicographic order.
        let mut i = need;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if chosen[i] < a_le.len() - need + i {
                chosen[i] += 1;
                for j in i + 1..need {
                    chosen[j] = chosen[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Brute-force optimum of the worst-case-error LP for databases on a line:
/// `points[x]` are the database values (also their query values), `answers`
/// the answer grid, `err = |a - x|`.
pub fn brute_force_line_optimum(points: &[f64], answers: &[f64], eps: f64) -> f64 {
    let nd = points.len();
    let nr = answers.len();
    let nv = nd * nr + 1;
    let t = nd * nr;
    let var = |x: usize, a: usize| x * nr + a;
    let mut c = vec![0.0; nv];
    c[t] = 1.0;
    let mut a_eq = Vec::new();
    let mut b_eq = Vec::new();
    for x in 0..nd {
        let mut row = vec![0.0; nv];
        for a in 0..nr {
            row[var(x, a)] = 1.0;
        }
        a_eq.push(row);
        b_eq.push(1.0);
    }
    let mut a_le = Vec::new();
    let mut b_le = Vec::new();
    for x in 0..nd {
        let mut row = vec![0.0; nv];
        for a in 0..nr {
            row[var(x, a)] = (answers[a] - points[x]).abs();
        }
        row[t] = -1.0;
        a_le.push(row);
        b_le.push(0.0);
        for y in 0..nd {
            if x == y {
                continue;
            }
            let factor = (eps * (points[x] - points[y]).abs()).exp();
            for a in 0..nr {
                let mut row = vec![0.0; nv];
                row[var(x, a)] = 1.0;
                row[var(y, a)] = -factor;
                a_le.push(row);
                b_le.push(0.0);
            }
        }
    }
    for v in 0..nv {
        let mut row = vec![0.0; nv];
        row[v] = -1.0;
        a_le.push(row);
        b_le.push(0.0);
    }
    brute_force_vertex_min(&c, &a_eq, &b_eq, &a_le, &b_le).expect("feasible instance")
}
