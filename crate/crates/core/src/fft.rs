//! Process-wide FFT plan cache. Plans are immutable once built and shared.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

type PlanPair = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn cache() -> &'static Mutex<HashMap<usize, PlanPair>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, PlanPair>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn plans(len: usize) -> PlanPair {
    let mut guard = cache().lock().unwrap();
    guard
        .entry(len)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (
                planner.plan_fft_forward(len),
                planner.plan_fft_inverse(len),
            )
        })
        .clone()
}

/// In-place forward DFT scaled by 1/len, so `inverse` is the plain
/// unnormalized inverse transform and forward∘inverse is the identity.
pub fn forward(buf: &mut [Complex64]) {
    let (fwd, _) = plans(buf.len());
    fwd.process(buf);
    let scale = 1.0 / buf.len() as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

/// In-place unnormalized inverse DFT (counterpart of `forward`).
pub fn inverse(buf: &mut [Complex64]) {
    let (_, inv) = plans(buf.len());
    inv.process(buf);
}
