//! Time integration: Strang splitting with exact unitary substeps for the
//! trapped quintic equation, and a Lawson (interaction-picture) RK4 for the
//! DCR system, plus trajectory-level diagnostics accumulation.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Result, SimError};
use crate::field::{boundary_mass, max_amplitude, norm_lp_l2, Field, Representation};
use crate::hermite::TAIL_PAD;
use crate::propagate::{free_flow_x1, phnls_linear_flow};
use crate::resonant::{dcr_nonlinearity, phnls_energy, resonant_energy, resonant_mass};

/// Integration scheme selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scheme {
    StrangPhnls,
    LawsonRk4Dcr,
}

/// One run's integrator parameters.
#[derive(Debug, Clone, Serialize)]
pub struct IntegratorSpec {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
    /// Steps between diagnostics samples.
    pub diag_stride: usize,
}

impl IntegratorSpec {
    pub fn validate(&self, n_modes: usize) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SimError::invalid("dt must be positive"));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(SimError::invalid("t_end must be positive"));
        }
        if self.dt > self.t_end {
            return Err(SimError::invalid("dt must not exceed t_end"));
        }
        if self.diag_stride == 0 {
            return Err(SimError::invalid("diag_stride must be positive"));
        }
        if self.scheme == Scheme::StrangPhnls {
            // resolve the fastest trap phase
            let guard = self.dt * (2.0 * n_modes as f64 + 1.0);
            if guard > std::f64::consts::FRAC_PI_4 + 1e-12 {
                return Err(SimError::invalid(format!(
                    "dt (2 N_h + 1) = {guard:.4} exceeds pi/4: trap phases under-resolved"
                )));
            }
        }
        Ok(())
    }
}

/// One sampled time of a run.
#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    pub m_s: f64,
    pub e_s: f64,
    /// Running int_0^t int ||u||^6_{L2_{x2}} dx1 ds (trapezoid in time).
    pub l6_accum: f64,
    pub max_amp: f64,
    pub boundary_mass: f64,
    /// Largest mode-truncation defect seen since the previous sample.
    pub mode_tail: f64,
}

/// Nonlinearity selector for the DCR stepper; `Off` turns the right-hand
/// side off entirely (linear-flow control runs).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcrRhs {
    Resonant,
    Off,
}

/// One Strang step of the trapped quintic equation:
/// half linear flow, exact nonlinear phase on the quadrature lattice,
/// half linear flow. Returns the stepped field and the L2 norm of the mode
/// content shed by the re-projection.
pub fn step_phnls(f: &Field, dt: f64) -> Result<(Field, f64)> {
    let half = phnls_linear_flow(f, dt / 2.0);
    let (kicked, tail) = nonlinear_phase_substep(&half, dt)?;
    let out = phnls_linear_flow(&kicked, dt / 2.0);
    if !out.is_finite() {
        return Err(SimError::BlowUp { t: f64::NAN });
    }
    Ok((out, tail))
}

/// Exact pointwise solution of i u_t = |u|^4 u over one step on the
/// nonlinear x2 nodes: u <- u e^{-i dt |u|^4}.
///
/// The update is projected in increment form, c + P[(e^{-i dt |u|^4} - 1) u]:
/// the leading O(dt) integrand is a quintic basis product, which the sextic
/// rule integrates exactly, and band-limited data passes through the
/// identity untouched. The out-of-band increment (computed exactly for
/// TAIL_PAD extra modes) is discarded and its norm returned.
fn nonlinear_phase_substep(f: &Field, dt: f64) -> Result<(Field, f64)> {
    let g = f.to_representation(Representation::PhysicalX1);
    let basis = g.basis().clone();
    let np = g.n_points();
    let q_nl = basis.q_nonlinear();
    let n_modes = g.n_modes();
    let n_ext = n_modes + TAIL_PAD;

    let mut samples = g.synthesize_nonlinear();
    // increment (e^{-i dt |u|^4} - 1) u, in place
    for v in samples.iter_mut() {
        let a = v.norm_sqr();
        let phase = -dt * a * a;
        let rot = Complex64::from_polar(1.0, phase) - 1.0;
        *v *= rot;
    }
    let mut out = g.clone();
    let mut tail_sqr = 0.0;
    let weights = basis.nonlinear_weights();
    for n in 0..n_ext {
        let e_row = basis.basis_row_nonlinear(n);
        let mut delta = vec![Complex64::new(0.0, 0.0); np];
        for q in 0..q_nl {
            let w = weights[q] * e_row[q];
            if w == 0.0 {
                continue;
            }
            let src = &samples[q * np..(q + 1) * np];
            for (d, s) in delta.iter_mut().zip(src) {
                *d += w * s;
            }
        }
        if n < n_modes {
            for (o, d) in out.mode_row_mut(n).iter_mut().zip(&delta) {
                *o += d;
            }
        } else {
            tail_sqr += delta.iter().map(|v| v.norm_sqr()).sum::<f64>();
        }
    }
    Ok((out, (tail_sqr * g.grid().spacing()).sqrt()))
}

/// One Lawson RK4 step of the DCR system: classical RK4 applied in the
/// interaction picture of the free x1 group, so the stiff linear part is
/// integrated exactly and only the resonant quintic enters the stages.
pub fn step_dcr(f: &Field, dt: f64) -> Result<(Field, f64)> {
    step_dcr_with(f, dt, DcrRhs::Resonant)
}

/// DCR step with a selectable right-hand side (diagnostic control).
pub fn step_dcr_with(f: &Field, dt: f64, rhs: DcrRhs) -> Result<(Field, f64)> {
    let eval = |v: &Field| -> Result<(Field, f64)> {
        match rhs {
            DcrRhs::Resonant => dcr_nonlinearity(v),
            DcrRhs::Off => Ok((Field::zero(v.grid().clone(), v.basis().clone()), 0.0)),
        }
    };
    let minus_i = Complex64::new(0.0, -1.0);
    let mut tail_max = 0.0f64;

    // stage derivatives in the w = free(-tau) v frame, tau relative to the step
    let (f1, t1) = eval(f)?;
    tail_max = tail_max.max(t1);
    let k1 = f1.scale(minus_i);

    let w2 = add_scaled(f, &k1, 0.5 * dt)?;
    let (f2, t2) = eval(&free_flow_x1(&w2, 0.5 * dt))?;
    tail_max = tail_max.max(t2);
    let k2 = free_flow_x1(&f2, -0.5 * dt).scale(minus_i);

    let w3 = add_scaled(f, &k2, 0.5 * dt)?;
    let (f3, t3) = eval(&free_flow_x1(&w3, 0.5 * dt))?;
    tail_max = tail_max.max(t3);
    let k3 = free_flow_x1(&f3, -0.5 * dt).scale(minus_i);

    let w4 = add_scaled(f, &k3, dt)?;
    let (f4, t4) = eval(&free_flow_x1(&w4, dt))?;
    tail_max = tail_max.max(t4);
    let k4 = free_flow_x1(&f4, -dt).scale(minus_i);

    let mut w = f.to_representation(Representation::PhysicalX1);
    {
        let out = w.data_mut();
        let (a, b, c, d) = (k1.data(), k2.data(), k3.data(), k4.data());
        let h = dt / 6.0;
        for i in 0..out.len() {
            out[i] += h * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i]);
        }
    }
    let out = free_flow_x1(&w, dt);
    if !out.is_finite() {
        return Err(SimError::BlowUp { t: f64::NAN });
    }
    Ok((out, tail_max))
}

fn add_scaled(base: &Field, delta: &Field, h: f64) -> Result<Field> {
    base.compatible_with(delta)?;
    let mut out = base.to_representation(Representation::PhysicalX1);
    let d = delta.to_representation(Representation::PhysicalX1);
    for (o, v) in out.data_mut().iter_mut().zip(d.data()) {
        *o += h * v;
    }
    Ok(out)
}

/// Run output: the final state and the sampled diagnostics.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub final_field: Field,
    pub rows: Vec<DiagnosticsRow>,
}

fn sample_row(f: &Field, t: f64, l6_accum: f64, mode_tail: f64) -> Result<DiagnosticsRow> {
    let (mass, m_s) = resonant_mass(f);
    Ok(DiagnosticsRow {
        t,
        mass,
        energy: phnls_energy(f),
        m_s,
        e_s: resonant_energy(f),
        l6_accum,
        max_amp: max_amplitude(f),
        boundary_mass: boundary_mass(f),
        mode_tail,
    })
}

/// Advance from t = 0 to t_end, sampling diagnostics every `diag_stride`
/// steps and at both endpoints. Deterministic for a given input.
///
/// On a step failure the partial diagnostics collected so far are returned
/// inside the error payload's place: the caller receives Err, and the last
/// consistent state is lost by construction (non-finite data).
pub fn run(f0: &Field, spec: &IntegratorSpec) -> Result<RunOutput> {
    run_with(f0, spec, DcrRhs::Resonant)
}

/// `run` with a selectable DCR right-hand side (ignored by the Strang path).
pub fn run_with(f0: &Field, spec: &IntegratorSpec, rhs: DcrRhs) -> Result<RunOutput> {
    spec.validate(f0.n_modes())?;
    let n_steps = ((spec.t_end / spec.dt) - 1e-9).ceil().max(1.0) as usize;
    let mut f = f0.clone();
    let mut rows = Vec::new();
    let mut l6_accum = 0.0;
    let mut last_l6_integrand = l6_integrand(&f)?;
    let mut last_sample_t = 0.0;
    let mut tail_since_sample = 0.0f64;
    rows.push(sample_row(&f, 0.0, 0.0, 0.0)?);

    let mut t = 0.0;
    for step in 1..=n_steps {
        let dt = if step == n_steps {
            spec.t_end - t
        } else {
            spec.dt
        };
        let (next, tail) = match spec.scheme {
            Scheme::StrangPhnls => step_phnls(&f, dt)?,
            Scheme::LawsonRk4Dcr => step_dcr_with(&f, dt, rhs)?,
        };
        f = next;
        t += dt;
        tail_since_sample = tail_since_sample.max(tail);
        if step % spec.diag_stride == 0 || step == n_steps {
            let integrand = l6_integrand(&f)?;
            l6_accum += 0.5 * (t - last_sample_t) * (last_l6_integrand + integrand);
            last_l6_integrand = integrand;
            last_sample_t = t;
            rows.push(sample_row(&f, t, l6_accum, tail_since_sample)?);
            tail_since_sample = 0.0;
        }
    }
    Ok(RunOutput {
        final_field: f,
        rows,
    })
}

/// int (sum_n |c_n|^2)^3 dx1 — the instantaneous scattering-norm integrand.
fn l6_integrand(f: &Field) -> Result<f64> {
    let v = norm_lp_l2(f, 6.0)?;
    Ok(v.powi(6))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{from_profile, random_field, Field, Grid1D};
    use crate::hermite::build_basis;
    use crate::propagate::harmonic_flow_x2;
    use std::sync::Arc;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn gaussian_low_mode_field(n_points: usize, half_length: f64, n_modes: usize) -> Field {
        let grid = Grid1D::new(n_points, half_length).unwrap();
        let basis = Arc::new(build_basis(n_modes).unwrap());
        let sigma = 3.0f64;
        let norm = 1.0 / (sigma * std::f64::consts::PI.sqrt()).sqrt();
        from_profile(grid, basis, move |n, x| {
            let env = norm * (-x * x / (2.0 * sigma * sigma)).exp();
            match n {
                0 => c(env, 0.0),
                1 => c(0.35 * env, 0.2 * env),
                2 => c(-0.15 * env, 0.1 * env),
                _ => c(0.0, 0.0),
            }
        })
    }

    #[test]
    fn spec_validation() {
        let ok = IntegratorSpec {
            scheme: Scheme::StrangPhnls,
            dt: 1e-3,
            t_end: 1.0,
            diag_stride: 10,
        };
        assert!(ok.validate(16).is_ok());
        let bad = IntegratorSpec {
            scheme: Scheme::StrangPhnls,
            dt: 0.1,
            t_end: 1.0,
            diag_stride: 10,
        };
        assert!(bad.validate(16).is_err());
        let dcr = IntegratorSpec {
            scheme: Scheme::LawsonRk4Dcr,
            dt: 0.1,
            t_end: 1.0,
            diag_stride: 10,
        };
        assert!(dcr.validate(16).is_ok());
    }

    #[test]
    fn zero_field_stays_zero() {
        let grid = Grid1D::new(32, 8.0).unwrap();
        let basis = Arc::new(build_basis(4).unwrap());
        let z = Field::zero(grid, basis);
        let (s, tail) = step_phnls(&z, 1e-3).unwrap();
        assert_eq!(s.mass(), 0.0);
        assert_eq!(tail, 0.0);
        let (s, _) = step_dcr(&z, 1e-3).unwrap();
        assert_eq!(s.mass(), 0.0);
    }

    #[test]
    fn tiny_data_matches_linear_flow() {
        let f = gaussian_low_mode_field(64, 16.0, 6).scale(c(1e-6, 0.0));
        let dt = 1e-3;
        let (stepped, _) = step_phnls(&f, dt).unwrap();
        let lin = phnls_linear_flow(&f, dt);
        let err = stepped.sub(&lin).unwrap().mass().sqrt();
        assert!(err < 1e-14, "tiny-data deviation {err}");
    }

    #[test]
    fn dcr_zero_rhs_is_free_flow() {
        let f = random_field(32, 8.0, 4, 61);
        let dt = 2e-3;
        let (stepped, _) = step_dcr_with(&f, dt, DcrRhs::Off).unwrap();
        let lin = free_flow_x1(&f, dt);
        assert!(stepped.sub(&lin).unwrap().mass().sqrt() < 1e-13);
    }

    #[test]
    fn strang_mass_conservation_many_steps() {
        let f = gaussian_low_mode_field(128, 24.0, 12);
        let m0 = f.mass();
        let mut g = f;
        for _ in 0..200 {
            g = step_phnls(&g, 1e-3).unwrap().0;
        }
        let drift = (g.mass() - m0).abs() / m0;
        assert!(drift < 1e-10, "mass drift {drift}");
    }

    #[test]
    fn strang_time_reversibility() {
        // step, conjugate, step, conjugate returns the initial field
        let f = gaussian_low_mode_field(64, 16.0, 12);
        let dt = 1e-4;
        let conj = |f: &Field| -> Field {
            let mut g = f.to_representation(Representation::PhysicalX1);
            for v in g.data_mut() {
                *v = v.conj();
            }
            g
        };
        let (a, _) = step_phnls(&f, dt).unwrap();
        let (b, _) = step_phnls(&conj(&a), dt).unwrap();
        let back = conj(&b);
        let err = back.sub(&f).unwrap().mass().sqrt() / f.mass().sqrt();
        assert!(err < 1e-11, "reversibility defect {err}");
    }

    #[test]
    fn single_mode_dcr_matches_1d_quintic_solver() {
        // mode-0 data reduces DCR to i c_t + c_xx = kappa |c|^4 c on the line;
        // independent oracle: scalar Strang split-step on the same grid
        let grid = Grid1D::new(128, 16.0).unwrap();
        let basis = Arc::new(build_basis(4).unwrap());
        let sigma = 2.0;
        let amp = 0.9;
        let f0 = from_profile(grid.clone(), basis, move |n, x| {
            if n == 0 {
                c(amp * (-x * x / (2.0 * sigma * sigma)).exp(), 0.0)
            } else {
                c(0.0, 0.0)
            }
        });
        let kappa = 0.18377629847393068;
        let t_end: f64 = 1.0;

        // DCR run
        let mut v = f0.clone();
        let dt = 2.5e-3;
        let n = (t_end / dt).round() as usize;
        for _ in 0..n {
            v = step_dcr(&v, dt).unwrap().0;
        }

        // scalar oracle, fine steps
        let np = grid.n_points();
        let mut cline: Vec<Complex64> = (0..np)
            .map(|j| {
                let x = grid.point(j);
                c(amp * (-x * x / (2.0 * sigma * sigma)).exp(), 0.0)
            })
            .collect();
        let dt_o = 2.5e-4;
        let n_o = (t_end / dt_o).round() as usize;
        let xi: Vec<f64> = grid.wavenumbers();
        let mut buf = cline.clone();
        for _ in 0..n_o {
            // half linear
            buf.copy_from_slice(&cline);
            crate::fft::forward(&mut buf);
            for (k, v) in buf.iter_mut().enumerate() {
                *v *= Complex64::from_polar(1.0, -0.5 * dt_o * xi[k] * xi[k]);
            }
            crate::fft::inverse(&mut buf);
            // full nonlinear phase
            for v in buf.iter_mut() {
                let a = v.norm_sqr();
                *v *= Complex64::from_polar(1.0, -dt_o * kappa * a * a);
            }
            // half linear
            crate::fft::forward(&mut buf);
            for (k, v) in buf.iter_mut().enumerate() {
                *v *= Complex64::from_polar(1.0, -0.5 * dt_o * xi[k] * xi[k]);
            }
            crate::fft::inverse(&mut buf);
            cline.copy_from_slice(&buf);
        }
        let dx = grid.spacing();
        let mut err = 0.0;
        for j in 0..np {
            err += (v.mode_row(0)[j] - cline[j]).norm_sqr();
        }
        let err = (err * dx).sqrt();
        assert!(err < 1e-6, "1d reduction mismatch {err}");
        // no leakage into other modes
        for n in 1..4 {
            let leak: f64 = v.mode_row(n).iter().map(|z| z.norm_sqr()).sum();
            assert!(leak.sqrt() * dx.sqrt() < 1e-12, "mode {n} leak");
        }
    }

    #[test]
    fn dcr_one_step_order_four() {
        // halving dt cuts the one-step-map error on a fixed horizon ~16x
        let f = gaussian_low_mode_field(64, 16.0, 5);
        let horizon = 0.04;
        let run_with_dt = |dt: f64| -> Field {
            let mut g = f.clone();
            let n = (horizon / dt).round() as usize;
            for _ in 0..n {
                g = step_dcr(&g, dt).unwrap().0;
            }
            g
        };
        let fine = run_with_dt(horizon / 64.0);
        let e1 = run_with_dt(horizon / 4.0).sub(&fine).unwrap().mass().sqrt();
        let e2 = run_with_dt(horizon / 8.0).sub(&fine).unwrap().mass().sqrt();
        let order = (e1 / e2).log2();
        assert!(order >= 3.7, "observed order {order} (e1 {e1}, e2 {e2})");
    }

    #[test]
    fn run_cadence_and_rows() {
        let f = gaussian_low_mode_field(32, 8.0, 4);
        let spec = IntegratorSpec {
            scheme: Scheme::LawsonRk4Dcr,
            dt: 0.05,
            t_end: 0.05,
            diag_stride: 1,
        };
        let out = run(&f, &spec).unwrap();
        assert_eq!(out.rows.len(), 2);
        assert_eq!(out.rows[0].t, 0.0);
        assert!((out.rows[1].t - 0.05).abs() < 1e-15);
        // nondecreasing t, nonnegative norms
        for w in out.rows.windows(2) {
            assert!(w[1].t >= w[0].t);
        }
        for r in &out.rows {
            assert!(r.mass >= 0.0 && r.m_s >= 0.0 && r.max_amp >= 0.0);
        }
    }

    #[test]
    fn strang_energy_drift_second_order() {
        let f = gaussian_low_mode_field(128, 24.0, 8);
        let drift = |dt: f64| -> f64 {
            let spec = IntegratorSpec {
                scheme: Scheme::StrangPhnls,
                dt,
                t_end: 0.4,
                diag_stride: 1000,
            };
            let out = run(&f, &spec).unwrap();
            let e0 = out.rows[0].energy;
            (out.rows.last().unwrap().energy - e0).abs() / e0
        };
        let d1 = drift(2e-3);
        let d2 = drift(1e-3);
        let order = (d1 / d2).log2();
        assert!(
            (1.8..=2.2).contains(&order),
            "strang energy order {order} (d1 {d1}, d2 {d2})"
        );
    }

    #[test]
    fn dcr_conserved_quantities_order_four() {
        let f = gaussian_low_mode_field(64, 16.0, 5);
        let drift = |dt: f64| -> (f64, f64, f64) {
            let spec = IntegratorSpec {
                scheme: Scheme::LawsonRk4Dcr,
                dt,
                t_end: 0.4,
                diag_stride: 10000,
            };
            let out = run(&f, &spec).unwrap();
            let first = &out.rows[0];
            let last = out.rows.last().unwrap();
            (
                (last.mass - first.mass).abs() / first.mass,
                (last.m_s - first.m_s).abs() / first.m_s,
                (last.e_s - first.e_s).abs() / first.e_s,
            )
        };
        let (m1, s1, e1) = drift(0.02);
        let (m2, s2, e2) = drift(0.01);
        for (a, b, name) in [(m1, m2, "mass"), (s1, s2, "m_s"), (e1, e2, "e_s")] {
            let order = (a / b).log2();
            assert!(
                (3.5..=4.5).contains(&order),
                "{name} drift order {order} (coarse {a}, fine {b})"
            );
        }
    }

    #[test]
    fn dcr_flow_commutes_with_mode_phases_check() {
        // sanity: harmonic dressing commutes with the DCR nonlinearity as
        // used when assembling dressed comparisons
        let f = random_field(32, 8.0, 4, 63);
        let (ff, _) = dcr_nonlinearity(&f).unwrap();
        let a = harmonic_flow_x2(&ff, 0.4);
        let (b, _) = dcr_nonlinearity(&harmonic_flow_x2(&f, 0.4)).unwrap();
        // e^{-i t H} F(v) vs F(e^{-i t H} v): the resonance constraint makes
        // the dressing slide through with net weight one
        assert!(a.sub(&b).unwrap().mass().sqrt() < 1e-11);
    }
}
