//! The symmetry group acting on fields: phase rotation, Galilean boost along
//! x1, spatial translation, and the mass-critical dilation of the untrapped
//! direction.

use num_complex::Complex64;

use crate::error::{Result, SimError};
use crate::field::{Field, Grid1D, Representation};

/// Multiply by a constant phase e^{i theta}.
pub fn phase_rotate(f: &Field, theta: f64) -> Field {
    f.scale(Complex64::from_polar(1.0, theta))
}

/// Galilean boost: e^{-i t xi0^2} e^{i x1 xi0} f(x1 - 2 xi0 t, x2).
///
/// xi0 must sit on the Fourier lattice (a multiple of pi/L) so the
/// modulation is an exact bin shift; the drift 2 xi0 t is applied as a
/// Fourier phase, which on the lattice composes exactly with the free flow.
pub fn galilean(f: &Field, xi0: f64, t: f64) -> Result<Field> {
    let dxi = f.grid().dxi();
    let bins = xi0 / dxi;
    let shift = bins.round() as i64;
    if (bins - shift as f64).abs() > 1e-9 * (1.0 + bins.abs()) {
        return Err(SimError::invalid(format!(
            "boost velocity must sit on the Fourier lattice: xi0/dxi = {bins}"
        )));
    }
    let mut g = f.to_representation(Representation::FourierX1);
    let np = g.n_points() as i64;
    let global = Complex64::from_polar(1.0, -t * xi0 * xi0);
    let grid = g.grid().clone();
    for n in 0..g.n_modes() {
        let row = g.mode_row(n).to_vec();
        let out = g.mode_row_mut(n);
        for k in 0..np {
            // spectrum shifted by `shift` bins; source bin k - shift
            let src = (k - shift).rem_euclid(np) as usize;
            let xi_src = grid.wavenumber(src as usize);
            // translation by 2 xi0 t acts on the pre-modulation spectrum
            let drift = Complex64::from_polar(1.0, -2.0 * xi0 * t * xi_src);
            out[k as usize] = global * drift * row[src];
        }
    }
    g.convert_to(f.representation());
    Ok(g)
}

/// Mass-critical dilation: lambda^{-1/2} f(x1/lambda, x2) for lambda = 2^k,
/// k >= 0. The output keeps N1 points and stretches the box to lambda L, so
/// grid points map one-to-one and the action is exact.
pub fn rescale(f: &Field, lambda: f64) -> Result<Field> {
    if !(lambda > 0.0) {
        return Err(SimError::invalid("lambda must be positive"));
    }
    let k = lambda.log2();
    if (k - k.round()).abs() > 1e-12 || k < -1e-12 {
        return Err(SimError::invalid(format!(
            "lambda must be a power of two >= 1, got {lambda}"
        )));
    }
    let g = f.to_representation(Representation::PhysicalX1);
    let grid = Grid1D::new(g.n_points(), lambda * g.grid().half_length())?;
    let scale = Complex64::new(1.0 / lambda.sqrt(), 0.0);
    let data = g.data().iter().map(|v| v * scale).collect();
    Field::from_data(grid, g.basis().clone(), data, Representation::PhysicalX1)
}

/// How a translation was realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TranslationKind {
    /// x0 commensurate with the grid: exact cyclic index shift.
    Lattice,
    /// Off-lattice x0: Fourier-phase translation (spectral interpolation).
    Spectral,
}

/// Translate f(x1 - x0, x2) with periodic wrap.
pub fn translate(f: &Field, x0: f64) -> (Field, TranslationKind) {
    let dx = f.grid().spacing();
    let steps = x0 / dx;
    let rounded = steps.round();
    if (steps - rounded).abs() < 1e-9 * (1.0 + steps.abs()) {
        let np = f.n_points() as i64;
        let shift = (rounded as i64).rem_euclid(np);
        let mut g = f.to_representation(Representation::PhysicalX1);
        for n in 0..g.n_modes() {
            let row = g.mode_row(n).to_vec();
            let out = g.mode_row_mut(n);
            for j in 0..np {
                out[j as usize] = row[(j - shift).rem_euclid(np) as usize];
            }
        }
        g.convert_to(f.representation());
        (g, TranslationKind::Lattice)
    } else {
        let mut g = f.to_representation(Representation::FourierX1);
        for n in 0..g.n_modes() {
            for k in 0..g.n_points() {
                let xi = g.grid().wavenumber(k);
                g.mode_row_mut(n)[k] *= Complex64::from_polar(1.0, -xi * x0);
            }
        }
        g.convert_to(f.representation());
        (g, TranslationKind::Spectral)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::random_field;
    use crate::propagate::free_flow_x1;
    use crate::resonant::resonant_mass;

    #[test]
    fn phase_rotation_basics() {
        let f = random_field(32, 8.0, 4, 31);
        let g = phase_rotate(&f, 0.0);
        assert!(f.sub(&g).unwrap().mass() == 0.0);
        let h = phase_rotate(&f, std::f64::consts::PI);
        assert!(h.sub(&f.scale(Complex64::new(-1.0, 0.0))).unwrap().mass() < 1e-30);
        assert!((h.mass() - f.mass()).abs() < 1e-15 * f.mass());
    }

    #[test]
    fn galilean_lattice_shift() {
        let f = random_field(64, 8.0, 3, 33);
        let g = galilean(&f, 0.0, 1.3).unwrap();
        assert!(f.sub(&g).unwrap().mass().sqrt() < 1e-13);
        // one-bin modulation at t = 0
        let dxi = f.grid().dxi();
        let g = galilean(&f, dxi, 0.0).unwrap();
        let a = f.to_representation(Representation::FourierX1);
        let b = g.to_representation(Representation::FourierX1);
        let np = f.n_points();
        for n in 0..f.n_modes() {
            for k in 0..np {
                let want = a.mode_row(n)[(k + np - 1) % np];
                assert!((b.mode_row(n)[k] - want).norm() < 1e-12);
            }
        }
        // incommensurate velocity rejected
        assert!(galilean(&f, 0.37 * dxi, 0.0).is_err());
    }

    #[test]
    fn galilean_intertwines_free_flow() {
        let f = random_field(64, 10.0, 4, 35);
        let xi0 = 2.0 * f.grid().dxi();
        let t = 0.9;
        let lhs = free_flow_x1(&galilean(&f, xi0, 0.0).unwrap(), t);
        let rhs = galilean(&free_flow_x1(&f, t), xi0, t).unwrap();
        assert!(lhs.sub(&rhs).unwrap().mass().sqrt() < 1e-12);
    }

    #[test]
    fn rescale_mass_critical() {
        let f = random_field(64, 8.0, 4, 37);
        let g = rescale(&f, 1.0).unwrap();
        assert!(f.sub(&g).unwrap().mass() == 0.0);
        let g = rescale(&f, 4.0).unwrap();
        assert_eq!(g.grid().half_length(), 32.0);
        assert!((g.mass() - f.mass()).abs() < 1e-12 * f.mass());
        // gradient scales by 1/lambda
        let df = crate::field::grad_x1_norm_sqr(&f).sqrt();
        let dg = crate::field::grad_x1_norm_sqr(&g).sqrt();
        assert!((dg - df / 4.0).abs() < 1e-11 * df);
        assert!(rescale(&f, 0.0).is_err());
        assert!(rescale(&f, 3.0).is_err());
    }

    #[test]
    fn translation_group_law_and_wrap() {
        let f = random_field(64, 8.0, 3, 39);
        let (g, kind) = translate(&f, 0.0);
        assert_eq!(kind, TranslationKind::Lattice);
        assert!(f.sub(&g).unwrap().mass() == 0.0);
        // full wrap
        let (g, _) = translate(&f, 16.0);
        assert!(f.sub(&g).unwrap().mass().sqrt() < 1e-13);
        // composition, lattice steps
        let dx = f.grid().spacing();
        let (a, _) = translate(&f, 3.0 * dx);
        let (ab, _) = translate(&a, 5.0 * dx);
        let (direct, _) = translate(&f, 8.0 * dx);
        assert!(ab.sub(&direct).unwrap().mass().sqrt() < 1e-13);
        // off-lattice goes spectral and stays unitary
        let (s, kind) = translate(&f, 0.31);
        assert_eq!(kind, TranslationKind::Spectral);
        assert!((s.mass() - f.mass()).abs() < 1e-12 * f.mass());
    }

    #[test]
    fn symmetries_preserve_mass_and_weighted_mass() {
        let f = random_field(32, 8.0, 5, 41);
        let (m0, ms0) = resonant_mass(&f);
        let candidates = vec![
            phase_rotate(&f, 1.1),
            galilean(&f, f.grid().dxi(), 0.4).unwrap(),
            rescale(&f, 2.0).unwrap(),
            translate(&f, 0.77).0,
        ];
        for g in candidates {
            let (m, ms) = resonant_mass(&g);
            assert!((m - m0).abs() < 1e-12 * m0);
            assert!((ms - ms0).abs() < 1e-12 * ms0);
        }
    }
}
