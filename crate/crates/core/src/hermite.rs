//! Hermite eigenbasis of the 1D harmonic oscillator: stable evaluation,
//! Gauss quadrature rules, exact forward/inverse transforms between node
//! samples and mode coefficients, and the ladder actions of x and d/dx.
//!
//! The basis functions are the L2-normalized eigenfunctions of -d^2/dx^2 + x^2
//! with eigenvalues 2n+1. Two quadrature rules are precomputed:
//!
//! * a "linear" rule (Q_lin = N_h + 1 standard Gauss-Hermite points) exact for
//!   integrands of the form P(x) e^{-x^2}, which covers all pairwise products
//!   e_m e_n of basis functions, and
//! * a "nonlinear" rule (Q_nl = 3 N_h + 2 points, nodes compressed by 1/sqrt(3))
//!   exact for P(x) e^{-3x^2}, which covers sextic products of basis functions
//!   and hence every projection of a quintic nonlinearity.
//!
//! Weights are stored in modified form (the Gaussian folded in), so integrands
//! are evaluated as plain function values: int f dx ~= sum_q w_q f(x_q).

use num_complex::Complex64;

use crate::error::{Result, SimError};

/// Hard cap on the mode truncation; the double precision recurrence is
/// validated up to this order.
pub const MAX_MODES: usize = 512;

/// Extra exactly-projectable modes kept on the nonlinear grid for truncation
/// diagnostics: the sextic rule integrates e_n * (quintic of the basis)
/// exactly for n <= N_h + 8.
pub const TAIL_PAD: usize = 8;

/// Which stored node set an operation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeGrid {
    Linear,
    Nonlinear,
}

/// Ladder action selector: multiplication by x or differentiation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Position,
    Derivative,
}

/// Precomputed eigenfunction samples, quadrature nodes/weights and sizes.
///
/// Immutable after construction; safe to share across threads.
#[derive(Debug, Clone)]
pub struct HermiteBasis {
    n_modes: usize,
    linear_nodes: Vec<f64>,
    /// Modified weights w'_q = w_q e^{u_q^2} for the standard rule.
    linear_weights: Vec<f64>,
    nonlinear_nodes: Vec<f64>,
    /// Modified weights for the sqrt(3)-substituted rule, 1/sqrt(3) Jacobian included.
    nonlinear_weights: Vec<f64>,
    /// e_n(u_q), row-major, n < n_modes.
    basis_on_linear: Vec<f64>,
    /// e_n(x_q), row-major, n < n_modes + TAIL_PAD (tail rows feed diagnostics).
    basis_on_nonlinear: Vec<f64>,
}

/// Evaluate the L2-normalized Hermite function e_n(x).
///
/// The three-term recurrence is run on (mantissa, exponent) pairs so the
/// Gaussian factor never under- or overflows an intermediate; values far in
/// the tunneling tail come out correct whenever they are representable.
pub fn hermite_eval(n: usize, x: f64) -> Result<f64> {
    if n > MAX_MODES {
        return Err(SimError::invalid(format!(
            "mode index {n} exceeds hard cap {MAX_MODES}"
        )));
    }
    if !x.is_finite() {
        return Err(SimError::invalid("non-finite coordinate"));
    }
    Ok(hermite_eval_unchecked(n, x))
}

const PI_QUARTER_INV: f64 = 0.7511255444649425; // pi^{-1/4}

fn hermite_eval_unchecked(n: usize, x: f64) -> f64 {
    // e_0 = pi^{-1/4} exp(-x^2/2), split as mantissa * 2^exp2.
    let log2_e0 = (-0.5 * x * x) * std::f64::consts::LOG2_E;
    let mut shift = log2_e0.floor() as i64;
    let mut prev = 0.0f64;
    let mut cur = PI_QUARTER_INV * (log2_e0 - shift as f64).exp2();
    for k in 0..n {
        let next = (2.0 / (k as f64 + 1.0)).sqrt() * x * cur
            - (k as f64 / (k as f64 + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        // renormalize so mantissas stay comfortably inside f64 range
        let mag = cur.abs().max(prev.abs());
        if mag > 2f64.powi(500) {
            cur = cur * 2f64.powi(-500);
            prev = prev * 2f64.powi(-500);
            shift += 500;
        } else if mag != 0.0 && mag < 2f64.powi(-500) {
            cur = cur * 2f64.powi(500);
            prev = prev * 2f64.powi(500);
            shift -= 500;
        }
    }
    ldexp(cur, shift)
}

fn ldexp(m: f64, e: i64) -> f64 {
    if m == 0.0 {
        return 0.0;
    }
    // apply in two halves to avoid intermediate overflow/underflow
    let h = (e / 2) as i32;
    m * 2f64.powi(h) * 2f64.powi((e - h as i64) as i32)
}

/// Build the basis for `n_modes` truncation (modes 0..n_modes-1).
pub fn build_basis(n_modes: usize) -> Result<HermiteBasis> {
    if n_modes == 0 || n_modes > MAX_MODES {
        return Err(SimError::invalid(format!(
            "n_modes must be in 1..={MAX_MODES}, got {n_modes}"
        )));
    }
    let q_lin = n_modes + 1;
    let q_nl = 3 * n_modes + 2;

    let (linear_nodes, linear_weights) = gauss_hermite_modified(q_lin)?;
    let (std_nodes, std_weights) = gauss_hermite_modified(q_nl)?;
    let sqrt3 = 3f64.sqrt();
    let nonlinear_nodes: Vec<f64> = std_nodes.iter().map(|u| u / sqrt3).collect();
    let nonlinear_weights: Vec<f64> = std_weights.iter().map(|w| w / sqrt3).collect();

    let basis_on_linear = sample_matrix(n_modes, &linear_nodes);
    let basis_on_nonlinear = sample_matrix(n_modes + TAIL_PAD, &nonlinear_nodes);

    let basis = HermiteBasis {
        n_modes,
        linear_nodes,
        linear_weights,
        nonlinear_nodes,
        nonlinear_weights,
        basis_on_linear,
        basis_on_nonlinear,
    };
    basis.check_finite()?;
    Ok(basis)
}

/// e_n(x) table, row-major over n then node index.
fn sample_matrix(rows: usize, nodes: &[f64]) -> Vec<f64> {
    let q = nodes.len();
    let mut out = vec![0.0; rows * q];
    for (j, &x) in nodes.iter().enumerate() {
        // same exponent-tracked recurrence as hermite_eval, vectorized over n
        let log2_e0 = (-0.5 * x * x) * std::f64::consts::LOG2_E;
        let mut shift = log2_e0.floor() as i64;
        let mut prev = 0.0f64;
        let mut cur = PI_QUARTER_INV * (log2_e0 - shift as f64).exp2();
        out[j] = ldexp(cur, shift);
        for k in 0..rows.saturating_sub(1) {
            let next = (2.0 / (k as f64 + 1.0)).sqrt() * x * cur
                - (k as f64 / (k as f64 + 1.0)).sqrt() * prev;
            prev = cur;
            cur = next;
            let mag = cur.abs().max(prev.abs());
            if mag > 2f64.powi(500) {
                cur *= 2f64.powi(-500);
                prev *= 2f64.powi(-500);
                shift += 500;
            } else if mag != 0.0 && mag < 2f64.powi(-500) {
                cur *= 2f64.powi(500);
                prev *= 2f64.powi(500);
                shift -= 500;
            }
            out[(k + 1) * q + j] = ldexp(cur, shift);
        }
    }
    out
}

/// Standard Gauss-Hermite rule of size q, returned with modified weights
/// w'_q = w_q e^{u_q^2} (exact for P(u) e^{-u^2}, deg P <= 2q-1).
///
/// Nodes are the eigenvalues of the Jacobi matrix (Golub-Welsch); the
/// modified weights use the closed form 1/(q * e_{q-1}(u)^2), which stays
/// finite at any rule size where the raw weight would underflow.
pub fn gauss_hermite_modified(q: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut nodes = jacobi_eigenvalues(q)?;
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // enforce exact symmetry about 0
    for i in 0..q / 2 {
        let s = 0.5 * (nodes[i] - nodes[q - 1 - i]);
        nodes[i] = s;
        nodes[q - 1 - i] = -s;
    }
    if q % 2 == 1 {
        nodes[q / 2] = 0.0;
    }
    // Newton polish on e_q (same roots as the degree-q Hermite polynomial)
    for x in nodes.iter_mut().take(q / 2) {
        for _ in 0..2 {
            let f = hermite_eval_unchecked(q, *x);
            let fm = hermite_eval_unchecked(q - 1, *x);
            let deriv = (2.0 * q as f64).sqrt() * fm - *x * f;
            if deriv != 0.0 {
                *x -= f / deriv;
            }
        }
    }
    for i in 0..q / 2 {
        nodes[q - 1 - i] = -nodes[i];
    }
    // residual check against the stated convergence contract
    let scale = (2.0 * q as f64 + 1.0).sqrt();
    for &x in &nodes {
        let r = hermite_eval_unchecked(q, x).abs();
        if r > 1e-10 {
            return Err(SimError::NodeSearch(format!(
                "node residual {r:.3e} at x = {x} (rule size {q}, scale {scale})"
            )));
        }
    }
    let weights: Vec<f64> = nodes
        .iter()
        .map(|&x| {
            let e = hermite_eval_unchecked(q - 1, x);
            1.0 / (q as f64 * e * e)
        })
        .collect();
    if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
        return Err(SimError::NodeSearch(format!(
            "non-positive or non-finite weight in rule of size {q}"
        )));
    }
    Ok((nodes, weights))
}

/// Eigenvalues of the symmetric tridiagonal Jacobi matrix for the Hermite
/// weight (zero diagonal, off-diagonal sqrt(k/2)), via implicit-shift QL.
fn jacobi_eigenvalues(q: usize) -> Result<Vec<f64>> {
    let mut d = vec![0.0f64; q];
    let mut e: Vec<f64> = (1..q).map(|k| (k as f64 / 2.0).sqrt()).collect();
    e.push(0.0);
    ql_implicit(&mut d, &mut e)?;
    Ok(d)
}

/// Implicit-shift QL iteration for a symmetric tridiagonal matrix
/// (diagonal d, subdiagonal e with e[n-1] unused). Eigenvalues land in d.
/// Convergence threshold per off-diagonal element: 1e-14 relative.
fn ql_implicit(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    if n == 1 {
        return Ok(());
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= 1e-14 * dd + f64::MIN_POSITIVE {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 50 {
                return Err(SimError::NodeSearch(format!(
                    "QL iteration failed to converge at row {l}"
                )));
            }
            // Wilkinson shift
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0f64, 1.0f64);
            let mut p = 0.0f64;
            let mut broke_early = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    broke_early = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if broke_early {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

impl HermiteBasis {
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn q_linear(&self) -> usize {
        self.linear_nodes.len()
    }

    pub fn q_nonlinear(&self) -> usize {
        self.nonlinear_nodes.len()
    }

    pub fn linear_nodes(&self) -> &[f64] {
        &self.linear_nodes
    }

    pub fn linear_weights(&self) -> &[f64] {
        &self.linear_weights
    }

    pub fn nonlinear_nodes(&self) -> &[f64] {
        &self.nonlinear_nodes
    }

    pub fn nonlinear_weights(&self) -> &[f64] {
        &self.nonlinear_weights
    }

    /// e_n(u_q) on the linear grid, row n.
    pub fn basis_row_linear(&self, n: usize) -> &[f64] {
        let q = self.q_linear();
        &self.basis_on_linear[n * q..(n + 1) * q]
    }

    /// e_n(x_q) on the nonlinear grid, row n; valid for n < n_modes + TAIL_PAD.
    pub fn basis_row_nonlinear(&self, n: usize) -> &[f64] {
        let q = self.q_nonlinear();
        &self.basis_on_nonlinear[n * q..(n + 1) * q]
    }

    fn check_finite(&self) -> Result<()> {
        let all_finite = self
            .basis_on_linear
            .iter()
            .chain(self.basis_on_nonlinear.iter())
            .chain(self.linear_weights.iter())
            .chain(self.nonlinear_weights.iter())
            .all(|v| v.is_finite());
        if all_finite {
            Ok(())
        } else {
            Err(SimError::NodeSearch("non-finite basis table entry".into()))
        }
    }

    /// Mode coefficients from samples on the linear grid:
    /// c_n = sum_q w'_q e_n(u_q) s_q. Exact whenever the sampled function is
    /// a combination of e_0..e_{N_h-1}.
    pub fn forward_transform(&self, samples: &[Complex64]) -> Result<Vec<Complex64>> {
        let q = self.q_linear();
        if samples.len() != q {
            return Err(SimError::LengthMismatch {
                expected: q,
                got: samples.len(),
            });
        }
        let mut coeffs = vec![Complex64::new(0.0, 0.0); self.n_modes];
        for (n, c) in coeffs.iter_mut().enumerate() {
            let row = self.basis_row_linear(n);
            let mut acc = Complex64::new(0.0, 0.0);
            for qi in 0..q {
                acc += self.linear_weights[qi] * row[qi] * samples[qi];
            }
            *c = acc;
        }
        Ok(coeffs)
    }

    /// Samples on the requested grid from mode coefficients.
    pub fn inverse_transform(&self, coeffs: &[Complex64], grid: NodeGrid) -> Result<Vec<Complex64>> {
        if coeffs.len() != self.n_modes {
            return Err(SimError::LengthMismatch {
                expected: self.n_modes,
                got: coeffs.len(),
            });
        }
        let q = match grid {
            NodeGrid::Linear => self.q_linear(),
            NodeGrid::Nonlinear => self.q_nonlinear(),
        };
        let mut out = vec![Complex64::new(0.0, 0.0); q];
        for (n, &c) in coeffs.iter().enumerate() {
            let row = match grid {
                NodeGrid::Linear => self.basis_row_linear(n),
                NodeGrid::Nonlinear => self.basis_row_nonlinear(n),
            };
            for qi in 0..q {
                out[qi] += c * row[qi];
            }
        }
        Ok(out)
    }

    /// Apply x (position) or d/dx (derivative) in coefficient space.
    ///
    /// x e_n = sqrt((n+1)/2) e_{n+1} + sqrt(n/2) e_{n-1},
    /// e_n' = -sqrt((n+1)/2) e_{n+1} + sqrt(n/2) e_{n-1};
    /// the output has one extra entry (exact band growth).
    pub fn ladder_apply(&self, which: Ladder, coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
        if coeffs.len() != self.n_modes {
            return Err(SimError::LengthMismatch {
                expected: self.n_modes,
                got: coeffs.len(),
            });
        }
        Ok(ladder_apply_raw(which, coeffs))
    }
}

/// Ladder action on an arbitrary-length coefficient slice; output len + 1.
pub fn ladder_apply_raw(which: Ladder, coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len();
    let up_sign = match which {
        Ladder::Position => 1.0,
        Ladder::Derivative => -1.0,
    };
    let mut out = vec![Complex64::new(0.0, 0.0); n + 1];
    for (k, &c) in coeffs.iter().enumerate() {
        // contribution to mode k+1 (raising) and k-1 (lowering)
        out[k + 1] += up_sign * ((k as f64 + 1.0) / 2.0).sqrt() * c;
        if k > 0 {
            out[k - 1] += (k as f64 / 2.0).sqrt() * c;
        }
    }
    out
}
