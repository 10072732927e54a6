//! Derivative-free minimization (Nelder-Mead simplex).

/// Outcome of a simplex run.
#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimize `f` starting from `x0` with the standard reflection /
/// expansion / contraction / shrink coefficients (1, 2, 0.5, 0.5).
///
/// Converges when both the simplex value spread and vertex spread fall
/// below `tol`. Deterministic for a given start point.
pub fn nelder_mead(
    f: impl Fn(&[f64]) -> f64,
    x0: &[f64],
    initial_step: f64,
    tol: f64,
    max_iter: usize,
) -> SimplexResult {
    let n = x0.len();
    assert!(n > 0, "need at least one dimension");

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += if v[i].abs() > 1e-8 {
            initial_step * v[i].abs()
        } else {
            initial_step
        };
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;

        // Order vertices by value.
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];

        let spread = (values[worst] - values[best]).abs();
        let vertex_spread: f64 = (0..n)
            .map(|d| {
                let lo = simplex.iter().map(|v| v[d]).fold(f64::INFINITY, f64::min);
                let hi = simplex.iter().map(|v| v[d]).fold(f64::NEG_INFINITY, f64::max);
                hi - lo
            })
            .fold(0.0_f64, f64::max);
        if spread < tol && vertex_spread < tol {
            converged = true;
            break;
        }

        // Centroid of all but the worst vertex.
        let mut centroid = vec![0.0; n];
        for (i, v) in simplex.iter().enumerate() {
            if i == worst {
                continue;
            }
            for d in 0..n {
                centroid[d] += v[d] / n as f64;
            }
        }

        let point_along = |coef: f64| -> Vec<f64> {
            (0..n)
                .map(|d| centroid[d] + coef * (centroid[d] - simplex[worst][d]))
                .collect()
        };

        let reflected = point_along(1.0);
        let f_reflected = f(&reflected);

        if f_reflected < values[best] {
            let expanded = point_along(2.0);
            let f_expanded = f(&expanded);
            if f_expanded < f_reflected {
                simplex[worst] = expanded;
                values[worst] = f_expanded;
            } else {
                simplex[worst] = reflected;
                values[worst] = f_reflected;
            }
        } else if f_reflected < values[second_worst] {
            simplex[worst] = reflected;
            values[worst] = f_reflected;
        } else {
            let contracted = if f_reflected < values[worst] {
                point_along(0.5)
            } else {
                point_along(-0.5)
            };
            let f_contracted = f(&contracted);
            if f_contracted < values[worst].min(f_reflected) {
                simplex[worst] = contracted;
                values[worst] = f_contracted;
            } else {
                // Shrink towards the best vertex.
                let best_vertex = simplex[best].clone();
                for (i, v) in simplex.iter_mut().enumerate() {
                    if i == best {
                        continue;
                    }
                    for d in 0..n {
                        v[d] = best_vertex[d] + 0.5 * (v[d] - best_vertex[d]);
                    }
                    values[i] = f(v);
                }
            }
        }
    }

    let best = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal))
        .map(|(i, _)| i)
        .unwrap_or(0);
    SimplexResult {
        x: simplex[best].clone(),
        value: values[best],
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_shifted_quadratic() {
        let f = |x: &[f64]| (x[0] - 3.0).powi(2) + 2.0 * (x[1] + 1.0).powi(2) + 5.0;
        let res = nelder_mead(f, &[0.0, 0.0], 0.5, 1e-12, 2000);
        assert!(res.converged);
        assert!((res.x[0] - 3.0).abs() < 1e-5, "x0 = {}", res.x[0]);
        assert!((res.x[1] + 1.0).abs() < 1e-5, "x1 = {}", res.x[1]);
        assert!((res.value - 5.0).abs() < 1e-9);
    }

    #[test]
    fn handles_banana_valley() {
        let f = |x: &[f64]| {
            let a = 1.0 - x[0];
            let b = x[1] - x[0] * x[0];
            a * a + 10.0 * b * b
        };
        let res = nelder_mead(f, &[-1.0, 1.0], 0.5, 1e-13, 20_000);
        assert!((res.x[0] - 1.0).abs() < 1e-4);
        assert!((res.x[1] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn one_dimensional() {
        let f = |x: &[f64]| (x[0] - 0.25).powi(2);
        let res = nelder_mead(f, &[10.0], 0.5, 1e-14, 5000);
        assert!((res.x[0] - 0.25).abs() < 1e-6);
    }
}
