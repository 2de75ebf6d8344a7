//! Brute-force reference computations used by the integration tests.
//! Nothing here calls into the library.

#![allow(dead_code)]

/// Gaussian elimination with partial pivoting. `None` when singular.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-11 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

fn subsets(total: usize, size: usize) -> Vec<Vec<usize>> {
    fn rec(
        start: usize,
        total: usize,
        size: usize,
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..total {
            cur.push(i);
            rec(i + 1, total, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, total, size, &mut Vec::new(), &mut out);
    out
}

/// `min c.z` subject to `rows z <= rhs`, `lo <= z <= hi` (all finite), by
/// enumerating every basic solution. `None` when no vertex is feasible.
pub fn lp_vertex_min(
    c: &[f64],
    rows: &[Vec<f64>],
    rhs: &[f64],
    lo: &[f64],
    hi: &[f64],
) -> Option<f64> {
    let n = c.len();
    let mut all_rows: Vec<Vec<f64>> = rows.to_vec();
    let mut all_rhs: Vec<f64> = rhs.to_vec();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        all_rows.push(e.clone());
        all_rhs.push(hi[j]);
        e[j] = -1.0;
        all_rows.push(e);
        all_rhs.push(-lo[j]);
    }
    let mut best: Option<f64> = None;
    for basis in subsets(all_rows.len(), n) {
        let a: Vec<Vec<f64>> = basis.iter().map(|&i| all_rows[i].clone()).collect();
        let b: Vec<f64> = basis.iter().map(|&i| all_rhs[i]).collect();
        let Some(z) = solve_dense(a, b) else { continue };
        let feasible = all_rows.iter().zip(&all_rhs).all(|(r, &h)| {
            let lhs: f64 = r.iter().zip(&z).map(|(p, q)| p * q).sum();
            lhs <= h + 1e-9 * (1.0 + h.abs())
        });
        if feasible {
            let v: f64 = c.iter().zip(&z).map(|(p, q)| p * q).sum();
            best = Some(best.map_or(v, |b: f64| b.min(v)));
        }
    }
    best
}

/// `max 1/2 mu'Q mu + q'mu` over `{mu >= 0, sum mu <= beta}` for negative
/// definite `Q`, by solving the stationarity system on every face (each
/// coordinate is zero or free, the cap is active or not) and keeping the
/// best feasible candidate.
pub fn qp_face_max(quad: &[Vec<f64>], lin: &[f64], beta: f64) -> f64 {
    let m = lin.len();
    let objective = |mu: &[f64]| {
        let mut v = 0.0;
        for i in 0..m {
            v += lin[i] * mu[i];
            for j in 0..m {
                v += 0.5 * quad[i][j] * mu[i] * mu[j];
            }
        }
        v
    };
    let mut best = 0.0;
    for mask in 0u32..(1 << m) {
        let free: Vec<usize> = (0..m).filter(|&i| mask >> i & 1 == 1).collect();
        let k = free.len();
        if k == 0 {
            continue;
        }
        for cap in [false, true] {
            // unknowns: mu_free (k) and, with the cap, its multiplier nu
            let dim = if cap { k + 1 } else { k };
            let mut a = vec![vec![0.0; dim]; dim];
            let mut b = vec![0.0; dim];
            for (r, &i) in free.iter().enumerate() {
                for (c, &j) in free.iter().enumerate() {
                    a[r][c] = quad[i][j];
                }
                b[r] = -lin[i];
                if cap {
                    a[r][k] = -1.0;
                }
            }
            if cap {
                for c in 0..k {
                    a[k][c] = 1.0;
                }
                b[k] = beta;
            }
            let Some(sol) = solve_dense(a, b) else {
                continue;
            };
            let mut mu = vec![0.0; m];
            for (r, &i) in free.iter().enumerate() {
                mu[i] = sol[r];
            }
            let sum: f64 = mu.iter().sum();
            if mu.iter().all(|&v| v >= -1e-12) && sum <= beta + 1e-12 {
                best = f64::max(best, objective(&mu));
            }
        }
    }
    best
}

/// `min |sum lambda_i v_i|` over the probability simplex, evaluated on the
/// grid of weights that are multiples of `1/steps`. At most three vectors.
pub fn hull_distance_grid(vectors: &[Vec<f64>], steps: usize) -> f64 {
    let n = vectors[0].len();
    let norm_of = |w: &[f64]| {
        let mut acc = vec![0.0; n];
        for (v, &l) in vectors.iter().zip(w) {
            for (a, b) in acc.iter_mut().zip(v) {
                *a += l * b;
            }
        }
        acc.iter().map(|a| a * a).sum::<f64>().sqrt()
    };
    let h = 1.0 / steps as f64;
    match vectors.len() {
        1 => norm_of(&[1.0]),
        2 => (0..=steps)
            .map(|i| {
                let t = i as f64 * h;
                norm_of(&[t, 1.0 - t])
            })
            .fold(f64::INFINITY, f64::min),
        3 => {
            let mut best = f64::INFINITY;
            for i in 0..=steps {
                for j in 0..=steps - i {
                    let (a, b) = (i as f64 * h, j as f64 * h);
                    best = best.min(norm_of(&[a, b, 1.0 - a - b]));
                }
            }
            best
        }
        k => panic!("grid oracle supports up to three vectors, got {k}"),
    }
}

/// Decimal digits, least significant first.
fn digits_mul_small(digits: &mut Vec<u32>, k: u64) {
    let mut carry: u64 = 0;
    for d in digits.iter_mut() {
        let v = *d as u64 * k + carry;
        *d = (v % 10) as u32;
        carry = v / 10;
    }
    while carry > 0 {
        digits.push((carry % 10) as u32);
        carry /= 10;
    }
}

/// `d (2d-1)^(n+r) (2d+1)^m` as a decimal string, by repeated schoolbook
/// multiplication.
pub fn milnor_thom_decimal(n: u32, m: u32, d: u32, r: u32) -> String {
    let mut digits = vec![1u32];
    digits_mul_small(&mut digits, d as u64);
    for _ in 0..n + r {
        digits_mul_small(&mut digits, 2 * d as u64 - 1);
    }
    for _ in 0..m {
        digits_mul_small(&mut digits, 2 * d as u64 + 1);
    }
    while digits.len() > 1 && *digits.last().unwrap() == 0 {
        digits.pop();
    }
    digits
        .iter()
        .rev()
        .map(|d| char::from(b'0' + *d as u8))
        .collect()
}

/// Singular levels of `4n - |x-a|^2 <= alpha`, `x_i^2 <= 1`: the sphere
/// becomes tangent to a face of the cube at the nearest point of that face
/// to `a`. One level per proper face (3^n - 1 of them), sorted.
pub fn ball_box_levels(a: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut out = Vec::new();
    let mut code = vec![0u8; n];
    loop {
        // 0: coordinate free, 1: pinned at +1, 2: pinned at -1
        if code.iter().any(|&c| c != 0) {
            let dist2: f64 = (0..n)
                .map(|i| match code[i] {
                    0 => 0.0,
                    1 => (1.0 - a[i]).powi(2),
                    _ => (-1.0 - a[i]).powi(2),
                })
                .sum();
            out.push(4.0 * n as f64 - dist2);
        }
        let mut i = 0;
        while i < n && code[i] == 2 {
            code[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
        code[i] += 1;
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Singular levels of `4nd^2 - |x-a|^2 <= alpha` over the union of boxes
/// `prod [±(2k-1), ±2k]`: the level where the sphere leaves each box through
/// its farthest vertex. Vertices are enumerated directly.
pub fn grid_levels(n: usize, d: u32, a: &[f64]) -> Vec<f64> {
    let mut sides: Vec<(f64, f64)> = Vec::new();
    for k in 1..=d / 2 {
        let (lo, hi) = ((2 * k - 1) as f64, (2 * k) as f64);
        sides.push((lo, hi));
        sides.push((-hi, -lo));
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; n];
    loop {
        let mut far = 0.0f64;
        for corner in 0u32..(1 << n) {
            let dist2: f64 = (0..n)
                .map(|i| {
                    let (lo, hi) = sides[idx[i]];
                    let v = if corner >> i & 1 == 1 { hi } else { lo };
                    (v - a[i]).powi(2)
                })
                .sum();
            far = far.max(dist2);
        }
        out.push(4.0 * n as f64 * (d * d) as f64 - far);
        let mut i = 0;
        while i < n && idx[i] + 1 == sides.len() {
            idx[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
        idx[i] += 1;
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Largest `t` with `t^3 <= alpha` (so `(t, 0)` is the rightmost point of
/// the perturbed cusp), by bisection.
pub fn cusp_tip(alpha: f64) -> f64 {
    let (mut lo, mut hi) = (-10.0f64, 10.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid * mid * mid <= alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Feasible pieces of `{x : g_i(x) <= 0}` on `[lo, hi]` from a uniform sign
/// grid of `points` samples, refined at each switch by bisection on the
/// feasibility indicator. Isolated grid points become degenerate pieces.
pub fn sign_grid_pieces(
    feasible: impl Fn(f64) -> bool,
    lo: f64,
    hi: f64,
    points: usize,
) -> Vec<(f64, f64)> {
    let h = (hi - lo) / (points - 1) as f64;
    let xs: Vec<f64> = (0..points).map(|i| lo + i as f64 * h).collect();
    let refine = |a: f64, b: f64| {
        let (mut a, mut b) = (a, b);
        let fa = feasible(a);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if feasible(mid) == fa {
                a = mid;
            } else {
                b = mid;
            }
        }
        if fa {
            a
        } else {
            b
        }
    };
    let mut pieces = Vec::new();
    let mut start: Option<f64> = None;
    for i in 0..points {
        let f = feasible(xs[i]);
        match (f, start) {
            (true, None) => {
                start = Some(if i == 0 {
                    xs[0]
                } else {
                    refine(xs[i - 1], xs[i])
                });
            }
            (false, Some(s)) => {
                pieces.push((s, refine(xs[i - 1], xs[i])));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        pieces.push((s, hi));
    }
    pieces
}
