//! A small deterministic quasi-Newton minimizer.
//!
//! BFGS on the inverse Hessian with central finite-difference gradients and
//! Armijo backtracking.  No randomness is involved, so the iterate sequence
//! is a pure function of the objective and the starting point.  This is
//! plenty for the smooth low-dimensional likelihoods in this crate (at most
//! a few dozen parameters).

/// Options for [`minimize`].
#[derive(Clone, Copy, Debug)]
pub struct OptimOptions {
    /// Stop when an iteration improves the objective by less than this.
    pub tol: f64,
    /// Hard cap on BFGS iterations.
    pub max_iters: usize,
}

impl Default for OptimOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iters: 400,
        }
    }
}

/// Result of a minimization run.
#[derive(Clone, Debug)]
pub struct OptimOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    /// True when the improvement criterion was met before `max_iters`.
    pub converged: bool,
    pub iterations: usize,
    /// Number of objective evaluations spent (including gradients).
    pub evaluations: usize,
}

/// Central finite-difference gradient with per-coordinate steps
/// `h_i = ε^{1/3} (1 + |x_i|)`.
fn gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], buf: &mut Vec<f64>, evals: &mut usize) -> Vec<f64> {
    let h_base = f64::EPSILON.cbrt();
    let mut g = vec![0.0; x.len()];
    buf.clear();
    buf.extend_from_slice(x);
    for i in 0..x.len() {
        let h = h_base * (1.0 + x[i].abs());
        buf[i] = x[i] + h;
        let fp = f(buf);
        buf[i] = x[i] - h;
        let fm = f(buf);
        buf[i] = x[i];
        *evals += 2;
        g[i] = (fp - fm) / (2.0 * h);
    }
    g
}

/// Minimizes `f` from `x0` by BFGS; see the module docs.
pub fn minimize<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], opts: &OptimOptions) -> OptimOutcome {
    let m = x0.len();
    let mut x = x0.to_vec();
    let mut evals = 0usize;
    let mut fx = f(&x);
    evals += 1;
    let mut buf = Vec::with_capacity(m);
    let mut g = gradient(&f, &x, &mut buf, &mut evals);

    // inverse Hessian approximation, row-major, starts at the identity
    let mut h = identity(m);
    let mut converged = false;
    let mut iterations = 0usize;

    for iter in 0..opts.max_iters {
        iterations = iter + 1;

        // search direction p = −H g, reset to steepest descent if H has
        // drifted away from positive definiteness
        let mut p = mat_vec(&h, &g, m);
        p.iter_mut().for_each(|v| *v = -*v);
        let descent: f64 = dot(&p, &g);
        if !descent.is_finite() || descent >= 0.0 {
            h = identity(m);
            p = g.iter().map(|v| -v).collect();
        }
        let slope = dot(&p, &g);
        if slope.abs() < 1e-14 * (1.0 + fx.abs()) {
            converged = true;
            break;
        }

        // Armijo backtracking
        let c1 = 1e-4;
        let mut step = 1.0f64;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&p).map(|(xi, pi)| xi + step * pi).collect();
            let ft = f(&trial);
            evals += 1;
            if ft.is_finite() && ft <= fx + c1 * step * slope {
                accepted = Some((trial, ft));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            // no acceptable step: the gradient is at noise level
            converged = true;
            break;
        };

        let improvement = fx - f_new;
        let g_new = gradient(&f, &x_new, &mut buf, &mut evals);

        // BFGS update of the inverse Hessian
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        if sy > 1e-12 * norm(&s) * norm(&yv) {
            bfgs_update(&mut h, &s, &yv, sy, m);
        }

        x = x_new;
        fx = f_new;
        g = g_new;

        if improvement < opts.tol {
            converged = true;
            break;
        }
    }

    OptimOutcome {
        x,
        value: fx,
        converged,
        iterations,
        evaluations: evals,
    }
}

fn identity(m: usize) -> Vec<f64> {
    let mut h = vec![0.0; m * m];
    for i in 0..m {
        h[i * m + i] = 1.0;
    }
    h
}

fn mat_vec(h: &[f64], v: &[f64], m: usize) -> Vec<f64> {
    (0..m)
        .map(|i| {
            let row = &h[i * m..(i + 1) * m];
            dot(row, v)
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ` with `ρ = 1/(sᵀy)`.
fn bfgs_update(h: &mut Vec<f64>, s: &[f64], y: &[f64], sy: f64, m: usize) {
    let rho = 1.0 / sy;
    let hy = mat_vec(h, y, m); // H y
    let yhy = dot(y, &hy);
    // expanded form: H' = H − ρ(s (Hy)ᵀ + (Hy) sᵀ) + ρ² yᵀHy s sᵀ + ρ s sᵀ
    let coef = rho * rho * yhy + rho;
    for i in 0..m {
        for j in 0..m {
            h[i * m + j] += -rho * (s[i] * hy[j] + hy[i] * s[j]) + coef * s[i] * s[j];
        }
    }
}
