//! Square 2D complex FFTs on row-major buffers.
//!
//! Plans are cached per thread. rustfft plans are deterministic for a given
//! length, so results do not depend on which worker runs a transform.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

type PlanCache = (FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>);

thread_local! {
    static PLANS: RefCell<PlanCache> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    let inverse = matches!(direction, FftDirection::Inverse);
    PLANS.with(|cell| {
        let mut guard = cell.borrow_mut();
        let (planner, cache) = &mut *guard;
        cache
            .entry((len, inverse))
            .or_insert_with(|| planner.plan_fft(len, direction))
            .clone()
    })
}

fn transpose_in_place(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

fn fft2(data: &mut [Complex64], n: usize, direction: FftDirection) {
    debug_assert_eq!(data.len(), n * n);
    let fft = plan(n, direction);
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    fft.process_with_scratch(data, &mut scratch);
    transpose_in_place(data, n);
    fft.process_with_scratch(data, &mut scratch);
    transpose_in_place(data, n);
}

/// Unnormalized forward transform: `X[k] = sum_j x[j] exp(-2 pi i j.k / n)`.
pub fn forward(data: &mut [Complex64], n: usize) {
    fft2(data, n, FftDirection::Forward);
}

/// Unnormalized inverse transform: `x[j] = sum_k X[k] exp(+2 pi i j.k / n)`.
pub fn inverse(data: &mut [Complex64], n: usize) {
    fft2(data, n, FftDirection::Inverse);
}

/// One-dimensional unnormalized inverse transform of a single line.
pub fn inverse_1d(data: &mut [Complex64]) {
    let fft = plan(data.len(), FftDirection::Inverse);
    fft.process(data);
}

/// Smallest integer `>= n` whose only prime factors are 2, 3 and 5.
pub fn next_smooth(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}
