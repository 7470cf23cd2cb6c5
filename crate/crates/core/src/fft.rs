//! Multi-dimensional complex FFT over row-major grids, backed by `rustfft`.

use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unnormalized in-place transform along every axis of `shape`.
pub(crate) fn transform(data: &mut [Complex64], shape: &[usize], direction: FftDirection) {
    debug_assert_eq!(data.len(), shape.iter().product::<usize>());
    let p = shape.len();
    for axis in 0..p {
        let len = shape[axis];
        let stride: usize = shape[axis + 1..].iter().product();
        let fft = PLANNER.with(|planner| planner.borrow_mut().plan_fft(len, direction));
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        if stride == 1 {
            fft.process_with_scratch(data, &mut scratch);
            continue;
        }
        let block = len * stride;
        let mut line = vec![Complex64::default(); len];
        for outer in (0..data.len()).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + j * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (j, value) in line.iter().enumerate() {
                    data[base + j * stride] = *value;
                }
            }
        }
    }
}

pub(crate) fn forward(data: &mut [Complex64], shape: &[usize]) {
    transform(data, shape, FftDirection::Forward);
}

pub(crate) fn inverse(data: &mut [Complex64], shape: &[usize]) {
    transform(data, shape, FftDirection::Inverse);
}

/// Unnormalized 1-D forward transform of a short line.
pub(crate) fn forward_line(line: &mut [Complex64]) {
    let len = line.len();
    transform(line, &[len], FftDirection::Forward);
}
