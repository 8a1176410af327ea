//! Reference solver for the weighted SVC dual, used to cross-check the pair
//! solver.
//!
//! Accelerated projected gradient ascent (FISTA with function-value
//! restarts) on the full dual. The projection onto
//! `{0 <= a <= u, y'a = 0}` is exact: `a_i(mu) = clamp(z_i - mu y_i, 0, u_i)`
//! and `y'a(mu)` is piecewise linear and non-increasing in `mu`, so the root
//! is found by sorting the breakpoints. Nothing here shares code with
//! [`crate::svc`]; the kernel is evaluated locally as well.

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOptions {
    pub max_iterations: usize,
    /// Stop when the KKT violation of the iterate falls below this.
    pub tolerance: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            max_iterations: 2_000_000,
            tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub alpha: Vec<f64>,
    pub objective: f64,
    pub b: f64,
    pub iterations: usize,
    /// KKT violation at `alpha`; zero or negative at an exact optimum.
    pub violation: f64,
}

fn kernel_matrix(x: &[Vec<f64>], gamma: f64) -> Vec<Vec<f64>> {
    x.iter()
        .map(|a| {
            x.iter()
                .map(|b| {
                    let d2: f64 = a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum();
                    (-gamma * d2).exp()
                })
                .collect()
        })
        .collect()
}

/// `sum a - 1/2 a' Q a` with `Q_ij = y_i y_j K_ij`.
pub fn dual_value(q: &[Vec<f64>], alpha: &[f64]) -> f64 {
    let mut quad = 0.0;
    for (i, row) in q.iter().enumerate() {
        for (j, qij) in row.iter().enumerate() {
            quad += alpha[i] * qij * alpha[j];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Euclidean projection onto the box intersected with the hyperplane `y'a = 0`.
pub fn project(z: &[f64], y: &[f64], upper: &[f64]) -> Vec<f64> {
    let clamped = |i: usize, mu: f64| (z[i] - mu * y[i]).clamp(0.0, upper[i]);
    let h = |mu: f64| -> f64 { (0..z.len()).map(|i| clamped(i, mu) * y[i]).sum() };

    // breakpoints: z_i - mu y_i hits 0 or u_i
    let mut knots: Vec<f64> = z
        .iter()
        .zip(y)
        .zip(upper)
        .flat_map(|((zi, yi), ui)| [zi / yi, (zi - ui) / yi])
        .collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();

    // h is non-increasing; find adjacent knots with h(lo) >= 0 >= h(hi)
    let mut mu = *knots.last().unwrap();
    let mut lo = knots[0];
    let mut h_lo = h(lo);
    if h_lo <= 0.0 {
        mu = lo;
    } else {
        for &hi in &knots[1..] {
            let h_hi = h(hi);
            if h_hi <= 0.0 {
                // linear in between
                mu = if h_lo == h_hi {
                    lo
                } else {
                    lo + (hi - lo) * h_lo / (h_lo - h_hi)
                };
                break;
            }
            lo = hi;
            h_lo = h_hi;
        }
    }
    (0..z.len()).map(|i| clamped(i, mu)).collect()
}

/// `max_A v - min_B v` with `v_i = y_i G_i`, where `A` holds the moves that
/// raise `y'a` and `B` those that lower it. Non-positive at an optimum.
/// Multipliers within `1e-9 u_i` of a bound count as on it.
fn kkt_violation(grad: &[f64], y: &[f64], upper: &[f64], alpha: &[f64]) -> f64 {
    let mut up = f64::NEG_INFINITY;
    let mut down = f64::INFINITY;
    for i in 0..y.len() {
        let v = y[i] * grad[i];
        let slack = 1e-9 * upper[i];
        let below = alpha[i] < upper[i] - slack;
        let above = alpha[i] > slack;
        let (raises, lowers) = if y[i] > 0.0 {
            (below, above)
        } else {
            (above, below)
        };
        if raises {
            up = up.max(v);
        }
        if lowers {
            down = down.min(v);
        }
    }
    if up.is_finite() && down.is_finite() {
        up - down
    } else {
        0.0
    }
}

fn gradient(q: &[Vec<f64>], alpha: &[f64]) -> Vec<f64> {
    q.iter()
        .map(|row| 1.0 - row.iter().zip(alpha).map(|(a, b)| a * b).sum::<f64>())
        .collect()
}

/// Maximizes the dual for RBF kernel `gamma` and per-sample bounds `upper`.
pub fn solve_dual(
    x: &[Vec<f64>],
    y: &[f64],
    upper: &[f64],
    gamma: f64,
    opts: &OracleOptions,
) -> OracleSolution {
    let l = x.len();
    let k = kernel_matrix(x, gamma);
    let q: Vec<Vec<f64>> = (0..l)
        .map(|i| (0..l).map(|j| y[i] * y[j] * k[i][j]).collect())
        .collect();
    // Gershgorin bound on the largest eigenvalue of Q
    let lipschitz = q
        .iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
        .max(1e-12);
    let step = 1.0 / lipschitz;

    let mut alpha = vec![0.0; l];
    let mut momentum = alpha.clone();
    let mut t = 1.0f64;
    let mut value = dual_value(&q, &alpha);
    let mut iterations = 0;
    let mut restarted = false;
    while iterations < opts.max_iterations {
        iterations += 1;
        let grad = gradient(&q, &momentum);
        let z: Vec<f64> = momentum
            .iter()
            .zip(&grad)
            .map(|(a, g)| a + step * g)
            .collect();
        let next = project(&z, y, upper);
        let next_value = dual_value(&q, &next);

        if next_value < value {
            if restarted {
                // a plain projected step no longer improves: numerically optimal
                break;
            }
            // restart from the last iterate without momentum
            momentum.clone_from(&alpha);
            t = 1.0;
            restarted = true;
            continue;
        }
        restarted = false;
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_next;
        momentum = next
            .iter()
            .zip(&alpha)
            .map(|(n, a)| n + beta * (n - a))
            .collect();
        alpha = next;
        value = next_value;
        t = t_next;

        if iterations % 16 == 0
            && kkt_violation(&gradient(&q, &alpha), y, upper, &alpha) < opts.tolerance
        {
            break;
        }
    }
    let violation = kkt_violation(&gradient(&q, &alpha), y, upper, &alpha);

    let b = bias(&k, y, upper, &alpha);
    OracleSolution {
        objective: dual_value(&q, &alpha),
        alpha,
        b,
        iterations,
        violation,
    }
}

/// Bias from multipliers strictly inside their box, falling back to the
/// middle of the interval allowed by the KKT conditions.
fn bias(k: &[Vec<f64>], y: &[f64], upper: &[f64], alpha: &[f64]) -> f64 {
    let l = y.len();
    let f: Vec<f64> = (0..l)
        .map(|i| (0..l).map(|j| alpha[j] * y[j] * k[i][j]).sum())
        .collect();
    let inside: Vec<f64> = (0..l)
        .filter(|&i| alpha[i] > 1e-8 * upper[i] && alpha[i] < upper[i] * (1.0 - 1e-8))
        .map(|i| y[i] - f[i])
        .collect();
    if !inside.is_empty() {
        return inside.iter().sum::<f64>() / inside.len() as f64;
    }
    // alpha = 0: y (f + b) >= 1; alpha = u: y (f + b) <= 1
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for i in 0..l {
        let edge = y[i] - f[i];
        let at_zero = alpha[i] <= 1e-8 * upper[i];
        if (y[i] > 0.0) == at_zero {
            lo = lo.max(edge);
        } else {
            hi = hi.min(edge);
        }
    }
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => 0.5 * (lo + hi),
        (true, false) => lo,
        (false, true) => hi,
        _ => 0.0,
    }
}

/// Decision values of the oracle solution at `points`.
pub fn decision_values(
    x: &[Vec<f64>],
    y: &[f64],
    sol: &OracleSolution,
    gamma: f64,
    points: &[Vec<f64>],
) -> Vec<f64> {
    points
        .iter()
        .map(|p| {
            x.iter()
                .zip(y)
                .zip(&sol.alpha)
                .map(|((xi, yi), a)| {
                    let d2: f64 = xi.iter().zip(p).map(|(u, v)| (u - v).powi(2)).sum();
                    a * yi * (-gamma * d2).exp()
                })
                .sum::<f64>()
                + sol.b
        })
        .collect()
}
