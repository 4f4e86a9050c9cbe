//! Mixed-representation field data model: a periodic grid (Fourier-capable)
//! along x1 crossed with the Hermite mode ladder in x2, plus the norms,
//! Sobolev weights, smooth frequency projectors and the X1/X2 trap operators.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Result, SimError};
use crate::fft;
use crate::hermite::{self, HermiteBasis, Ladder, NodeGrid};

/// Periodic x1 grid on [-L, L) with N1 points (power of two, >= 8).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    n_points: usize,
    half_length: f64,
}

impl Grid1D {
    pub fn new(n_points: usize, half_length: f64) -> Result<Self> {
        if n_points < 8 || !n_points.is_power_of_two() {
            return Err(SimError::invalid(format!(
                "n_points must be a power of two >= 8, got {n_points}"
            )));
        }
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(SimError::invalid("half_length must be positive"));
        }
        Ok(Grid1D {
            n_points,
            half_length,
        })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / self.n_points as f64
    }

    pub fn point(&self, j: usize) -> f64 {
        -self.half_length + j as f64 * self.spacing()
    }

    /// Fundamental wavenumber pi/L.
    pub fn dxi(&self) -> f64 {
        std::f64::consts::PI / self.half_length
    }

    /// Wavenumber of FFT bin k (FFT storage order, k in [-N1/2, N1/2)).
    pub fn wavenumber(&self, k: usize) -> f64 {
        let n = self.n_points;
        let signed = if k < n / 2 {
            k as i64
        } else {
            k as i64 - n as i64
        };
        signed as f64 * self.dxi()
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n_points).map(|k| self.wavenumber(k)).collect()
    }
}

/// Storage representation of the x1 axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    PhysicalX1,
    FourierX1,
}

/// Simulation state: coefficient c_n(x1_j) for every grid point and mode.
///
/// Stored mode-major (`data[n * n_points + j]`). In Fourier representation
/// the j axis holds FFT bins of each mode line (forward scaled by 1/N1).
/// Fields are value-semantic snapshots; every operation is pure.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Grid1D,
    basis: Arc<HermiteBasis>,
    data: Vec<Complex64>,
    repr: Representation,
}

impl Field {
    pub fn zero(grid: Grid1D, basis: Arc<HermiteBasis>) -> Field {
        let len = grid.n_points() * basis.n_modes();
        Field {
            grid,
            basis,
            data: vec![Complex64::new(0.0, 0.0); len],
            repr: Representation::PhysicalX1,
        }
    }

    pub fn from_data(
        grid: Grid1D,
        basis: Arc<HermiteBasis>,
        data: Vec<Complex64>,
        repr: Representation,
    ) -> Result<Field> {
        let expected = grid.n_points() * basis.n_modes();
        if data.len() != expected {
            return Err(SimError::LengthMismatch {
                expected,
                got: data.len(),
            });
        }
        Ok(Field {
            grid,
            basis,
            data,
            repr,
        })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn basis(&self) -> &Arc<HermiteBasis> {
        &self.basis
    }

    pub fn n_modes(&self) -> usize {
        self.basis.n_modes()
    }

    pub fn n_points(&self) -> usize {
        self.grid.n_points()
    }

    pub fn representation(&self) -> Representation {
        self.repr
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn mode_row(&self, n: usize) -> &[Complex64] {
        let np = self.n_points();
        &self.data[n * np..(n + 1) * np]
    }

    pub fn mode_row_mut(&mut self, n: usize) -> &mut [Complex64] {
        let np = self.n_points();
        &mut self.data[n * np..(n + 1) * np]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Convert in place to the requested representation.
    pub fn convert_to(&mut self, repr: Representation) {
        if self.repr == repr {
            return;
        }
        let np = self.n_points();
        for n in 0..self.n_modes() {
            let row = &mut self.data[n * np..(n + 1) * np];
            match repr {
                Representation::FourierX1 => fft::forward(row),
                Representation::PhysicalX1 => fft::inverse(row),
            }
        }
        self.repr = repr;
    }

    /// A copy in the requested representation (plain clone when it matches).
    pub fn to_representation(&self, repr: Representation) -> Field {
        let mut out = self.clone();
        out.convert_to(repr);
        out
    }

    pub fn compatible_with(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid || self.n_modes() != other.n_modes() {
            return Err(SimError::Incompatible(format!(
                "grid/mode shape mismatch: ({}, {:.6}, {}) vs ({}, {:.6}, {})",
                self.n_points(),
                self.grid.half_length(),
                self.n_modes(),
                other.n_points(),
                other.grid.half_length(),
                other.n_modes()
            )));
        }
        Ok(())
    }

    /// Pointwise difference (both fields brought to physical representation).
    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.compatible_with(other)?;
        let a = self.to_representation(Representation::PhysicalX1);
        let b = other.to_representation(Representation::PhysicalX1);
        let data = a.data.iter().zip(&b.data).map(|(x, y)| x - y).collect();
        Field::from_data(
            a.grid.clone(),
            a.basis.clone(),
            data,
            Representation::PhysicalX1,
        )
    }

    pub fn scale(&self, factor: Complex64) -> Field {
        let mut out = self.clone();
        for v in out.data.iter_mut() {
            *v *= factor;
        }
        out
    }

    /// Total L2 mass, representation independent (Parseval).
    pub fn mass(&self) -> f64 {
        let dx = self.grid.spacing();
        let sum: f64 = self.data.iter().map(|v| v.norm_sqr()).sum();
        match self.repr {
            Representation::PhysicalX1 => dx * sum,
            // forward transform carries 1/N1: sum_j |c|^2 = N1 sum_k |ĉ|^2
            Representation::FourierX1 => dx * self.n_points() as f64 * sum,
        }
    }

    /// Synthesize samples on the nonlinear x2 nodes: out[q * N1 + j].
    pub fn synthesize_nonlinear(&self) -> Vec<Complex64> {
        assert_eq!(self.repr, Representation::PhysicalX1);
        let np = self.n_points();
        let q_nl = self.basis.q_nonlinear();
        let mut out = vec![Complex64::new(0.0, 0.0); q_nl * np];
        for n in 0..self.n_modes() {
            let row = self.mode_row(n);
            let e_row = self.basis.basis_row_nonlinear(n);
            for q in 0..q_nl {
                let w = e_row[q];
                if w == 0.0 {
                    continue;
                }
                let dst = &mut out[q * np..(q + 1) * np];
                for (d, s) in dst.iter_mut().zip(row) {
                    *d += w * s;
                }
            }
        }
        out
    }
}

/// Norm bundle for one field.
#[derive(Debug, Clone, serde::Serialize)]
pub struct NormReport {
    pub mass: f64,
    /// L^p_{x1} of the per-point L^2_{x2} profile, at the requested p.
    pub lp_l2: f64,
    /// Hermite-Sobolev norm (sum over modes of (2n+1)^s weighted L2) at the
    /// requested s.
    pub hermite_sobolev_s: f64,
    /// Weighted-space norm: mass plus both gradient directions plus the trap
    /// moment.
    pub sigma: f64,
}

/// L^p_{x1} L^2_{x2} norm; `p` may be `f64::INFINITY`.
pub fn norm_lp_l2(f: &Field, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(SimError::invalid(format!("p must be >= 1, got {p}")));
    }
    let f = f.to_representation(Representation::PhysicalX1);
    let np = f.n_points();
    let dx = f.grid.spacing();
    let mut density = vec![0.0f64; np];
    for n in 0..f.n_modes() {
        for (d, v) in density.iter_mut().zip(f.mode_row(n)) {
            *d += v.norm_sqr();
        }
    }
    if p.is_infinite() {
        return Ok(density.iter().fold(0.0f64, |a, &d| a.max(d)).sqrt());
    }
    let sum: f64 = density.iter().map(|&d| d.powf(p / 2.0)).sum();
    Ok((dx * sum).powf(1.0 / p))
}

/// Squared L2 norm of the x1 derivative, via Fourier multipliers.
pub fn grad_x1_norm_sqr(f: &Field) -> f64 {
    let g = f.to_representation(Representation::FourierX1);
    let np = g.n_points();
    let dx = g.grid.spacing();
    let xi = g.grid.wavenumbers();
    let mut acc = 0.0;
    for n in 0..g.n_modes() {
        let row = g.mode_row(n);
        for k in 0..np {
            acc += xi[k] * xi[k] * row[k].norm_sqr();
        }
    }
    dx * np as f64 * acc
}

/// Squared Hermite-Sobolev sum: sum_n (2n+1)^s ||c_n||^2_{L2_{x1}}.
pub fn hermite_sobolev_sqr(f: &Field, s: f64) -> f64 {
    let g = f.to_representation(Representation::PhysicalX1);
    let dx = g.grid.spacing();
    let mut acc = 0.0;
    for n in 0..g.n_modes() {
        let w = (2.0 * n as f64 + 1.0).powf(s);
        let row_sum: f64 = g.mode_row(n).iter().map(|v| v.norm_sqr()).sum();
        acc += w * row_sum;
    }
    dx * acc
}

/// Full norm bundle; `p` for the mixed Lebesgue norm, `s` for the
/// Hermite-Sobolev weight.
pub fn sobolev_and_sigma(f: &Field, p: f64, s: f64) -> Result<NormReport> {
    let mass = f.mass();
    let lp_l2 = norm_lp_l2(f, p)?;
    let hermite_sobolev_s = hermite_sobolev_sqr(f, s).sqrt();
    // ||d_{x2} f||^2 + ||x2 f||^2 equals the (2n+1)-weighted sum; quadratic
    // form identity of the ladder algebra.
    let sigma_sqr = mass + grad_x1_norm_sqr(f) + hermite_sobolev_sqr(f, 1.0);
    Ok(NormReport {
        mass,
        lp_l2,
        hermite_sobolev_s,
        sigma: sigma_sqr.sqrt(),
    })
}

/// The fixed smooth bump: 1 on r <= 1, exp(1 - 1/(1-(r-1)^2)) on 1 < r < 2,
/// 0 on r >= 2.
pub fn smooth_cutoff(r: f64) -> f64 {
    if r <= 1.0 {
        1.0
    } else if r >= 2.0 {
        0.0
    } else {
        let t = r - 1.0;
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectorKind {
    LowPass,
    Band,
}

/// Smooth partial frequency projector along x1, optionally recentered at
/// xi0 (boosted-frame cutoff). Low-pass multiplies by chi(|xi-xi0|/N); band
/// applies the annular difference chi_N - chi_{N/2}.
pub fn freq_project(f: &Field, cutoff: f64, center: f64, kind: ProjectorKind) -> Result<Field> {
    if !(cutoff > 0.0) {
        return Err(SimError::invalid("cutoff must be positive"));
    }
    let mut g = f.to_representation(Representation::FourierX1);
    let np = g.n_points();
    let xi = g.grid.wavenumbers();
    let mult: Vec<f64> = (0..np)
        .map(|k| {
            let r = (xi[k] - center).abs();
            match kind {
                ProjectorKind::LowPass => smooth_cutoff(r / cutoff),
                ProjectorKind::Band => {
                    smooth_cutoff(r / cutoff) - smooth_cutoff(r / (cutoff / 2.0))
                }
            }
        })
        .collect();
    for n in 0..g.n_modes() {
        for (v, &m) in g.mode_row_mut(n).iter_mut().zip(&mult) {
            *v *= m;
        }
    }
    g.convert_to(f.representation());
    Ok(g)
}

/// Trap-frame operator selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XOperator {
    X1,
    X2,
}

/// Apply X1(t) = x2 sin t - i cos t d_{x2} or X2(t) = x2 cos t + i sin t d_{x2}
/// mode-wise. The band grows by one mode; the output is truncated back and
/// the discarded top-band L2 norm is returned alongside.
pub fn apply_x(f: &Field, which: XOperator, t: f64) -> (Field, f64) {
    let g = f.to_representation(Representation::PhysicalX1);
    let np = g.n_points();
    let n_modes = g.n_modes();
    let (pos_c, der_c): (Complex64, Complex64) = match which {
        XOperator::X1 => (
            Complex64::new(t.sin(), 0.0),
            Complex64::new(0.0, -t.cos()),
        ),
        XOperator::X2 => (
            Complex64::new(t.cos(), 0.0),
            Complex64::new(0.0, t.sin()),
        ),
    };
    let mut out = Field::zero(g.grid.clone(), g.basis.clone());
    let mut top = vec![Complex64::new(0.0, 0.0); np];
    // per x1 point, combine the two ladder actions on the mode column
    let mut col = vec![Complex64::new(0.0, 0.0); n_modes];
    for j in 0..np {
        for n in 0..n_modes {
            col[n] = g.data[n * np + j];
        }
        let pos = hermite::ladder_apply_raw(Ladder::Position, &col);
        let der = hermite::ladder_apply_raw(Ladder::Derivative, &col);
        for n in 0..n_modes {
            out.data[n * np + j] = pos_c * pos[n] + der_c * der[n];
        }
        top[j] = pos_c * pos[n_modes] + der_c * der[n_modes];
    }
    let dx = g.grid.spacing();
    let tail = (dx * top.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt();
    (out, tail)
}

/// Inner product <f, g> = int conj(f) g (physical representation).
pub fn inner(f: &Field, g: &Field) -> Result<Complex64> {
    f.compatible_with(g)?;
    let a = f.to_representation(Representation::PhysicalX1);
    let b = g.to_representation(Representation::PhysicalX1);
    let dx = a.grid.spacing();
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, y) in a.data.iter().zip(&b.data) {
        acc += x.conj() * y;
    }
    Ok(acc * dx)
}

/// Build a field from a per-mode profile over the physical grid.
pub fn from_profile<F>(grid: Grid1D, basis: Arc<HermiteBasis>, mut profile: F) -> Field
where
    F: FnMut(usize, f64) -> Complex64,
{
    let mut f = Field::zero(grid, basis);
    let np = f.n_points();
    for n in 0..f.n_modes() {
        for j in 0..np {
            let x = f.grid.point(j);
            f.data[n * np + j] = profile(n, x);
        }
    }
    f
}

/// Mass outside the inner half of the box, int_{|x1| > L/2} ||u||^2 dx1:
/// the validity indicator for the periodic truncation of the line.
pub fn boundary_mass(f: &Field) -> f64 {
    let g = f.to_representation(Representation::PhysicalX1);
    let np = g.n_points();
    let dx = g.grid.spacing();
    let half = g.grid.half_length() / 2.0;
    let mut acc = 0.0;
    for j in 0..np {
        if g.grid.point(j).abs() > half {
            for n in 0..g.n_modes() {
                acc += g.data[n * np + j].norm_sqr();
            }
        }
    }
    dx * acc
}

/// Max over grid points and nonlinear x2 nodes of |u|.
pub fn max_amplitude(f: &Field) -> f64 {
    let g = f.to_representation(Representation::PhysicalX1);
    let samples = g.synthesize_nonlinear();
    samples.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Samples of the field restricted to one x1 point, on the linear x2 grid.
pub fn column_on_linear_grid(f: &Field, j: usize) -> Result<Vec<Complex64>> {
    let g = f.to_representation(Representation::PhysicalX1);
    let np = g.n_points();
    let coeffs: Vec<Complex64> = (0..g.n_modes()).map(|n| g.data[n * np + j]).collect();
    g.basis.inverse_transform(&coeffs, NodeGrid::Linear)
}

#[cfg(test)]
pub(crate) fn random_field(n_points: usize, half_length: f64, n_modes: usize, seed: u64) -> Field {
    use rand::prelude::*;
    let grid = Grid1D::new(n_points, half_length).unwrap();
    let basis = Arc::new(hermite::build_basis(n_modes).unwrap());
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut f = Field::zero(grid, basis);
    let np = f.n_points();
    for n in 0..f.n_modes() {
        for j in 0..np {
            let x = f.grid.point(j);
            let env = (-x * x / 8.0).exp();
            f.data[n * np + j] = Complex64::new(
                env * rng.gen_range(-1.0..1.0),
                env * rng.gen_range(-1.0..1.0),
            );
        }
    }
    f
}
