//! Built-in invariant suite behind `dcr-lab selftest`. One line per check;
//! returns the failure count. All randomness flows from one seeded
//! generator so failures replay exactly.

use std::sync::Arc;

use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::evolve::{step_dcr_with, step_phnls, DcrRhs};
use crate::field::{apply_x, from_profile, Field, Grid1D, Representation, XOperator};
use crate::hermite::{build_basis, NodeGrid};
use crate::propagate::{harmonic_flow_x2, mehler_apply, phnls_linear_flow};
use crate::resonant::{
    dcr_nonlinearity, dcr_nonlinearity_direct, dcr_nonlinearity_with_avg_points,
    max_even_frequency, sextic_positivity, SexticTensor,
};
use crate::symmetry::phase_rotate;

fn random_field(rng: &mut ChaCha8Rng, n_points: usize, half_length: f64, n_modes: usize) -> Field {
    let grid = Grid1D::new(n_points, half_length).unwrap();
    let basis = Arc::new(build_basis(n_modes).unwrap());
    let mut f = Field::zero(grid, basis);
    let np = f.n_points();
    for n in 0..f.n_modes() {
        for j in 0..np {
            let x = f.grid().point(j);
            let env = (-x * x / 8.0).exp();
            f.data_mut()[n * np + j] = Complex64::new(
                env * rng.gen_range(-1.0..1.0),
                env * rng.gen_range(-1.0..1.0),
            );
        }
    }
    f
}

struct Check {
    name: &'static str,
    run: Box<dyn Fn(&mut ChaCha8Rng) -> std::result::Result<(), String>>,
}

fn check(
    name: &'static str,
    run: impl Fn(&mut ChaCha8Rng) -> std::result::Result<(), String> + 'static,
) -> Check {
    Check {
        name,
        run: Box::new(run),
    }
}

/// Execute the suite; prints one line per check and returns the number of
/// failures.
pub fn run_selftest(seed: u64) -> usize {
    println!("selftest seed = {seed}");
    let checks: Vec<Check> = vec![
        check("basis gram orthonormality (32 modes)", |_rng| {
            let b = build_basis(32).map_err(|e| e.to_string())?;
            let mut worst = 0.0f64;
            for m in 0..32 {
                for n in 0..32 {
                    let g: f64 = (0..b.q_linear())
                        .map(|q| {
                            b.linear_weights()[q]
                                * b.basis_row_linear(m)[q]
                                * b.basis_row_linear(n)[q]
                        })
                        .sum();
                    worst = worst.max((g - if m == n { 1.0 } else { 0.0 }).abs());
                }
            }
            if worst < 1e-12 {
                Ok(())
            } else {
                Err(format!("gram defect {worst:.3e}"))
            }
        }),
        check("transform round trip", |rng| {
            let b = build_basis(24).map_err(|e| e.to_string())?;
            let coeffs: Vec<Complex64> = (0..24)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let samples = b
                .inverse_transform(&coeffs, NodeGrid::Linear)
                .map_err(|e| e.to_string())?;
            let back = b.forward_transform(&samples).map_err(|e| e.to_string())?;
            let worst = coeffs
                .iter()
                .zip(&back)
                .map(|(a, c)| (a - c).norm())
                .fold(0.0, f64::max);
            if worst < 1e-12 {
                Ok(())
            } else {
                Err(format!("round-trip error {worst:.3e}"))
            }
        }),
        check("oscillator eigenrelation via ladders", |rng| {
            let b = build_basis(30).map_err(|e| e.to_string())?;
            let coeffs: Vec<Complex64> = (0..30)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let xf = crate::hermite::ladder_apply_raw(crate::hermite::Ladder::Position, &coeffs);
            let xxf = crate::hermite::ladder_apply_raw(crate::hermite::Ladder::Position, &xf);
            let df = crate::hermite::ladder_apply_raw(crate::hermite::Ladder::Derivative, &coeffs);
            let ddf = crate::hermite::ladder_apply_raw(crate::hermite::Ladder::Derivative, &df);
            let mut worst = 0.0f64;
            for n in 0..30 {
                let got = xxf[n] - ddf[n];
                let want = (2.0 * n as f64 + 1.0) * coeffs[n];
                worst = worst.max((got - want).norm());
            }
            let _ = b;
            if worst < 1e-12 {
                Ok(())
            } else {
                Err(format!("eigenrelation residual {worst:.3e}"))
            }
        }),
        check("parseval mass agreement", |rng| {
            let f = random_field(rng, 64, 10.0, 6);
            let a = f.mass();
            let b = f.to_representation(Representation::FourierX1).mass();
            if (a - b).abs() < 1e-12 * a.max(1.0) {
                Ok(())
            } else {
                Err(format!("{a} vs {b}"))
            }
        }),
        check("trap-frame operator identity (20 draws)", |rng| {
            for _ in 0..20 {
                let f = random_field(rng, 32, 8.0, 6);
                let t = rng.gen_range(-5.0..5.0);
                let (a, ta) = apply_x(&f, XOperator::X1, t);
                let (b, tb) = apply_x(&f, XOperator::X2, t);
                let lhs = a.mass() + ta * ta + b.mass() + tb * tb;
                let (p, tp) = apply_x(&f, XOperator::X2, 0.0);
                let (d, td) = apply_x(&f, XOperator::X1, 0.0);
                let rhs = p.mass() + tp * tp + d.mass() + td * td;
                if (lhs - rhs).abs() > 1e-10 * rhs.max(1.0) {
                    return Err(format!("identity defect {lhs} vs {rhs}"));
                }
            }
            Ok(())
        }),
        check("linear flows unitary + group law", |rng| {
            let f = random_field(rng, 64, 10.0, 5);
            let s = rng.gen_range(-1.0..1.0);
            let t = rng.gen_range(-1.0..1.0);
            let a = phnls_linear_flow(&phnls_linear_flow(&f, t), s);
            let b = phnls_linear_flow(&f, s + t);
            let err = a.sub(&b).map_err(|e| e.to_string())?.mass().sqrt();
            let drift = (a.mass() - f.mass()).abs() / f.mass();
            if err < 1e-12 && drift < 1e-13 {
                Ok(())
            } else {
                Err(format!("group law {err:.3e}, unitarity {drift:.3e}"))
            }
        }),
        check("trap flow periodicity", |rng| {
            let f = random_field(rng, 32, 8.0, 5);
            let pi = std::f64::consts::PI;
            let minus = harmonic_flow_x2(&f, pi);
            let err1 = minus
                .sub(&f.scale(Complex64::new(-1.0, 0.0)))
                .map_err(|e| e.to_string())?
                .mass()
                .sqrt();
            let full = harmonic_flow_x2(&f, 2.0 * pi);
            let err2 = full.sub(&f).map_err(|e| e.to_string())?.mass().sqrt();
            if err1 < 1e-12 && err2 < 1e-12 {
                Ok(())
            } else {
                Err(format!("half {err1:.3e}, full {err2:.3e}"))
            }
        }),
        check("kernel propagator vs mode phases", |rng| {
            let basis = build_basis(8).map_err(|e| e.to_string())?;
            let coeffs: Vec<Complex64> = (0..8)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let samples = basis
                .inverse_transform(&coeffs, NodeGrid::Linear)
                .map_err(|e| e.to_string())?;
            let t = std::f64::consts::PI / 4.0;
            let by_kernel = mehler_apply(&basis, &samples, t).map_err(|e| e.to_string())?;
            let phased: Vec<Complex64> = coeffs
                .iter()
                .enumerate()
                .map(|(n, &v)| v * Complex64::from_polar(1.0, -t * (2.0 * n as f64 + 1.0)))
                .collect();
            let by_modes = basis
                .inverse_transform(&phased, NodeGrid::Linear)
                .map_err(|e| e.to_string())?;
            let worst = by_kernel
                .iter()
                .zip(&by_modes)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            if worst < 1e-8 {
                Ok(())
            } else {
                Err(format!("kernel mismatch {worst:.3e}"))
            }
        }),
        check("resonant quintic: average equals tensor sum", |rng| {
            let f = random_field(rng, 16, 6.0, 4);
            let tensor = SexticTensor::build(f.basis()).map_err(|e| e.to_string())?;
            let (fa, _) = dcr_nonlinearity(&f).map_err(|e| e.to_string())?;
            let fd = dcr_nonlinearity_direct(&f, &tensor).map_err(|e| e.to_string())?;
            let rel = fa.sub(&fd).map_err(|e| e.to_string())?.mass().sqrt() / fd.mass().sqrt();
            if rel < 1e-10 {
                Ok(())
            } else {
                Err(format!("oracle mismatch {rel:.3e}"))
            }
        }),
        check("undersized phase average aliases", |rng| {
            let grid = Grid1D::new(16, 6.0).unwrap();
            let basis = Arc::new(build_basis(4).unwrap());
            let seeds: Vec<Complex64> = (0..8)
                .map(|_| Complex64::new(rng.gen_range(0.4..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let f = from_profile(grid, basis.clone(), move |n, x| {
                let env = (-x * x / 4.0).exp();
                seeds[n % seeds.len()] * env
            });
            let tensor = SexticTensor::build(&basis).map_err(|e| e.to_string())?;
            let fd = dcr_nonlinearity_direct(&f, &tensor).map_err(|e| e.to_string())?;
            let (bad, _) = dcr_nonlinearity_with_avg_points(&f, max_even_frequency(4))
                .map_err(|e| e.to_string())?;
            let rel = bad.sub(&fd).map_err(|e| e.to_string())?.mass().sqrt() / fd.mass().sqrt();
            if rel > 1e-4 {
                Ok(())
            } else {
                Err(format!("negative control failed to alias: {rel:.3e}"))
            }
        }),
        check("gauge covariance of the quintic", |rng| {
            let f = random_field(rng, 16, 6.0, 5);
            let theta = rng.gen_range(0.0..std::f64::consts::TAU);
            let (ff, _) = dcr_nonlinearity(&f).map_err(|e| e.to_string())?;
            let (fg, _) = dcr_nonlinearity(&phase_rotate(&f, theta)).map_err(|e| e.to_string())?;
            let rel = fg
                .sub(&phase_rotate(&ff, theta))
                .map_err(|e| e.to_string())?
                .mass()
                .sqrt()
                / ff.mass().sqrt().max(1e-300);
            if rel < 1e-12 {
                Ok(())
            } else {
                Err(format!("gauge covariance defect {rel:.3e}"))
            }
        }),
        check("sextic density positivity (20 draws)", |rng| {
            for _ in 0..20 {
                let f = random_field(rng, 16, 6.0, 8);
                let min = sextic_positivity(&f);
                let scale = crate::field::max_amplitude(&f).powi(6).max(1e-300);
                if min < -1e-12 * scale {
                    return Err(format!("negative density {min:.3e}"));
                }
            }
            Ok(())
        }),
        check("static weighted-mass pairing", |rng| {
            let f = random_field(rng, 16, 6.0, 6);
            let (ff, _) = dcr_nonlinearity(&f).map_err(|e| e.to_string())?;
            let np = f.n_points();
            let dx = f.grid().spacing();
            let mut acc = 0.0;
            for n in 0..6 {
                let mut ip = Complex64::new(0.0, 0.0);
                for j in 0..np {
                    ip += f.data()[n * np + j].conj() * ff.data()[n * np + j];
                }
                acc += (2.0 * n as f64 + 1.0) * (dx * ip).im;
            }
            if acc.abs() < 1e-11 {
                Ok(())
            } else {
                Err(format!("pairing {acc:.3e}"))
            }
        }),
        check("strang step: mass conservation over 100 steps", |_rng| {
            let grid = Grid1D::new(64, 16.0).unwrap();
            let basis = Arc::new(build_basis(10).unwrap());
            let mut f = from_profile(grid, basis, |n, x| {
                let env = 0.4 * (-x * x / 18.0).exp();
                match n {
                    0 => Complex64::new(env, 0.0),
                    1 => Complex64::new(0.3 * env, 0.2 * env),
                    _ => Complex64::new(0.0, 0.0),
                }
            });
            let m0 = f.mass();
            for _ in 0..100 {
                f = step_phnls(&f, 1e-3).map_err(|e| e.to_string())?.0;
            }
            let drift = (f.mass() - m0).abs() / m0;
            if drift < 1e-11 {
                Ok(())
            } else {
                Err(format!("mass drift {drift:.3e}"))
            }
        }),
        check("strang step: time reversibility", |_rng| {
            let grid = Grid1D::new(64, 16.0).unwrap();
            let basis = Arc::new(build_basis(12).unwrap());
            let f = from_profile(grid, basis, |n, x| {
                let env = 0.5 * (-x * x / 18.0).exp();
                match n {
                    0 => Complex64::new(env, 0.1 * env),
                    2 => Complex64::new(0.25 * env, -0.1 * env),
                    _ => Complex64::new(0.0, 0.0),
                }
            });
            let conj = |f: &Field| {
                let mut g = f.to_representation(Representation::PhysicalX1);
                for v in g.data_mut() {
                    *v = v.conj();
                }
                g
            };
            let (a, _) = step_phnls(&f, 1e-4).map_err(|e| e.to_string())?;
            let (b, _) = step_phnls(&conj(&a), 1e-4).map_err(|e| e.to_string())?;
            let err = conj(&b).sub(&f).map_err(|e| e.to_string())?.mass().sqrt()
                / f.mass().sqrt();
            if err < 1e-11 {
                Ok(())
            } else {
                Err(format!("reversibility defect {err:.3e}"))
            }
        }),
        check("lawson step: zero right-hand side is free flow", |rng| {
            let f = random_field(rng, 32, 8.0, 4);
            let (s, _) = step_dcr_with(&f, 2e-3, DcrRhs::Off).map_err(|e| e.to_string())?;
            let lin = crate::propagate::free_flow_x1(&f, 2e-3);
            let err = s.sub(&lin).map_err(|e| e.to_string())?.mass().sqrt();
            if err < 1e-13 {
                Ok(())
            } else {
                Err(format!("control deviation {err:.3e}"))
            }
        }),
        check("checkpoint byte round trip", |rng| {
            let f = random_field(rng, 32, 8.0, 4);
            let dir = std::env::temp_dir().join(format!("dcrf-selftest-{}", std::process::id()));
            std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
            let p1 = dir.join("s1.dcrf");
            let p2 = dir.join("s2.dcrf");
            super::write_checkpoint(&p1, &f, 0.5).map_err(|e| e.to_string())?;
            let (g, t) = super::read_checkpoint(&p1).map_err(|e| e.to_string())?;
            super::write_checkpoint(&p2, &g, t).map_err(|e| e.to_string())?;
            let b1 = std::fs::read(&p1).map_err(|e| e.to_string())?;
            let b2 = std::fs::read(&p2).map_err(|e| e.to_string())?;
            std::fs::remove_dir_all(&dir).ok();
            if b1 == b2 {
                Ok(())
            } else {
                Err("round trip not byte-identical".into())
            }
        }),
    ];

    let mut failures = 0;
    for c in checks {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fxhash(c.name));
        match (c.run)(&mut rng) {
            Ok(()) => println!("ok      {}", c.name),
            Err(msg) => {
                failures += 1;
                println!("FAIL    {}: {msg}", c.name);
            }
        }
    }
    failures
}

/// Tiny stable string hash so each check gets an independent stream.
fn fxhash(s: &str) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}
