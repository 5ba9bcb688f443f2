//! Bounded Nelder–Mead with deterministic multistart.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub max_iter: usize,
    pub f_tol: f64,
    pub x_tol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self { max_iter: 4000, f_tol: 1e-10, x_tol: 1e-10 }
    }
}

fn clamp(x: &mut [f64], bounds: &[Bounds]) {
    for (v, b) in x.iter_mut().zip(bounds) {
        *v = v.clamp(b.lo, b.hi);
    }
}

/// Minimizes `f` inside the box, starting from `x0`. Trial points are clamped to the box.
pub fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], bounds: &[Bounds], opts: SimplexOptions) -> Minimum {
    let n = x0.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() { f64::INFINITY } else { v }
    };
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut start = x0.to_vec();
    clamp(&mut start, bounds);
    simplex.push(start.clone());
    for i in 0..n {
        let mut p = start.clone();
        let span = bounds[i].hi - bounds[i].lo;
        let step = 0.1 * span;
        p[i] = if p[i] + step <= bounds[i].hi { p[i] + step } else { p[i] - step };
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| eval(p)).collect();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let f_spread = (values[n] - values[0]).abs();
        let x_spread = (1..=n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| (simplex[i][j] - simplex[0][j]).abs() / (bounds[j].hi - bounds[j].lo))
            .fold(0.0, f64::max);
        if values[0].is_finite() && f_spread <= opts.f_tol * (1.0 + values[0].abs()) && x_spread <= opts.x_tol.max(1e-9) {
            converged = true;
            break;
        }
        if values[0].is_finite() && x_spread <= opts.x_tol {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = (0..n).map(|j| centroid[j] + t * (simplex[n][j] - centroid[j])).collect();
            clamp(&mut p, bounds);
            p
        };
        let xr = along(-1.0);
        let fr = eval(&xr);
        if fr < values[0] {
            let xe = along(-2.0);
            let fe = eval(&xe);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
        } else {
            let (xc, fc) = if fr < values[n] {
                let x = along(-0.5);
                let v = eval(&x);
                (x, v)
            } else {
                let x = along(0.5);
                let v = eval(&x);
                (x, v)
            };
            if fc < values[n].min(fr) {
                simplex[n] = xc;
                values[n] = fc;
            } else {
                for i in 1..=n {
                    let p: Vec<f64> = (0..n).map(|j| simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j])).collect();
                    values[i] = eval(&p);
                    simplex[i] = p;
                }
            }
        }
    }
    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    Minimum { x: simplex[best].clone(), value: values[best], iterations, converged }
}

/// Radical inverse in base `b`, for spreading starts over the box.
fn halton(mut i: usize, b: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= b as f64;
        r += f * (i % b) as f64;
        i /= b;
    }
    r
}

const PRIMES: [usize; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Runs `starts` simplex searches (the first from `x0`, the rest on a Halton
/// pattern over the box), polishes the best with a restart, and returns it.
pub fn multistart(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], bounds: &[Bounds], starts: usize, opts: SimplexOptions) -> Minimum {
    let mut best = nelder_mead(f, x0, bounds, opts);
    for k in 1..starts {
        let p: Vec<f64> = bounds
            .iter()
            .enumerate()
            .map(|(j, b)| b.lo + (b.hi - b.lo) * halton(k, PRIMES[j % PRIMES.len()]))
            .collect();
        let m = nelder_mead(f, &p, bounds, opts);
        if m.value < best.value {
            best = m;
        }
    }
    let polished = nelder_mead(f, &best.x, bounds, opts);
    if polished.value <= best.value {
        polished
    } else {
        best
    }
}
