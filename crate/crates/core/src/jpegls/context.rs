//! Context modelling shared by the encoder and decoder: gradient
//! quantization, prediction, adaptive Golomb parameters, bias cancellation
//! and the run-mode state.

use super::{JpeglsParams, MAXVAL, RANGE};

pub(crate) const QBPP: u32 = 8;
pub(crate) const LIMIT: u32 = 32;
const MIN_C: i32 = -128;
const MAX_C: i32 = 127;
const CONTEXTS: usize = 9 * 9 * 9;

/// Run-length order table.
pub(crate) const J: [u32; 32] = [
    0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2, 3, 3, 3, 3, 4, 4, 5, 5, 6, 6, 7, 7, 8, 9, 10, 11, 12, 13, 14, 15,
];

/// Median edge detector.
#[inline]
pub fn predict_med(a: i32, b: i32, c: i32) -> i32 {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    if c >= hi {
        lo
    } else if c <= lo {
        hi
    } else {
        a + b - c
    }
}

/// Nine-region quantization of a local gradient (lossless coding).
#[inline]
pub fn quantize_gradient_with(d: i32, t1: i32, t2: i32, t3: i32) -> i32 {
    if d <= -t3 {
        -4
    } else if d <= -t2 {
        -3
    } else if d <= -t1 {
        -2
    } else if d < 0 {
        -1
    } else if d == 0 {
        0
    } else if d < t1 {
        1
    } else if d < t2 {
        2
    } else if d < t3 {
        3
    } else {
        4
    }
}

/// Reduces a prediction error into `[-RANGE/2, RANGE/2)`.
#[inline]
pub(crate) fn mod_range(mut err: i32) -> i32 {
    if err < 0 {
        err += RANGE;
    }
    if err >= (RANGE + 1) / 2 {
        err -= RANGE;
    }
    err
}

/// Wraps a reconstructed value back into the sample range.
#[inline]
pub(crate) fn wrap_sample(mut v: i32) -> i32 {
    if v < 0 {
        v += RANGE;
    } else if v > MAXVAL {
        v -= RANGE;
    }
    v
}

#[inline]
pub(crate) fn golomb_k(n: i32, a: i32) -> u32 {
    let mut k = 0;
    while (n << k) < a {
        k += 1;
    }
    k
}

/// Regular-mode context selected for a sample.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Context {
    pub index: usize,
    pub negative: bool,
}

#[derive(Debug, Clone)]
pub(crate) struct CodingState {
    t1: i32,
    t2: i32,
    t3: i32,
    reset: i32,
    a: Vec<i32>,
    b: Vec<i32>,
    c: Vec<i32>,
    n: Vec<i32>,
    run_a: [i32; 2],
    run_n: [i32; 2],
    run_nn: [i32; 2],
    pub run_index: usize,
}

impl CodingState {
    pub fn new(params: &JpeglsParams) -> Self {
        let a_init = ((RANGE + 32) / 64).max(2);
        Self {
            t1: i32::from(params.t1),
            t2: i32::from(params.t2),
            t3: i32::from(params.t3),
            reset: i32::from(params.reset),
            a: vec![a_init; CONTEXTS],
            b: vec![0; CONTEXTS],
            c: vec![0; CONTEXTS],
            n: vec![1; CONTEXTS],
            run_a: [a_init; 2],
            run_n: [1; 2],
            run_nn: [0; 2],
            run_index: 0,
        }
    }

    /// Context for the gradients (d1, d2, d3), or `None` when all are zero
    /// and the coder should enter run mode.
    #[inline]
    pub fn context(&self, d1: i32, d2: i32, d3: i32) -> Option<Context> {
        let mut q1 = quantize_gradient_with(d1, self.t1, self.t2, self.t3);
        let mut q2 = quantize_gradient_with(d2, self.t1, self.t2, self.t3);
        let mut q3 = quantize_gradient_with(d3, self.t1, self.t2, self.t3);
        if q1 == 0 && q2 == 0 && q3 == 0 {
            return None;
        }
        let negative = q1 < 0 || (q1 == 0 && (q2 < 0 || (q2 == 0 && q3 < 0)));
        if negative {
            q1 = -q1;
            q2 = -q2;
            q3 = -q3;
        }
        let index = ((q1 + 4) * 81 + (q2 + 4) * 9 + (q3 + 4)) as usize;
        Some(Context { index, negative })
    }

    /// Bias-corrected, clamped prediction.
    #[inline]
    pub fn predict(&self, ctx: Context, ra: i32, rb: i32, rc: i32) -> i32 {
        let correction = self.c[ctx.index];
        let px = predict_med(ra, rb, rc) + if ctx.negative { -correction } else { correction };
        px.clamp(0, MAXVAL)
    }

    #[inline]
    pub fn regular_k(&self, ctx: Context) -> u32 {
        golomb_k(self.n[ctx.index], self.a[ctx.index])
    }

    /// Whether the error mapping is inverted for this context (k == 0 only).
    #[inline]
    pub fn inverted_mapping(&self, ctx: Context, k: u32) -> bool {
        k == 0 && 2 * self.b[ctx.index] <= -self.n[ctx.index]
    }

    pub fn update_regular(&mut self, ctx: Context, err: i32) {
        let q = ctx.index;
        self.b[q] += err;
        self.a[q] += err.abs();
        if self.n[q] == self.reset {
            self.a[q] >>= 1;
            self.b[q] >>= 1;
            self.n[q] >>= 1;
        }
        self.n[q] += 1;

        if self.b[q] <= -self.n[q] {
            self.b[q] += self.n[q];
            if self.c[q] > MIN_C {
                self.c[q] -= 1;
            }
            if self.b[q] <= -self.n[q] {
                self.b[q] = -self.n[q] + 1;
            }
        } else if self.b[q] > 0 {
            self.b[q] -= self.n[q];
            if self.c[q] < MAX_C {
                self.c[q] += 1;
            }
            if self.b[q] > 0 {
                self.b[q] = 0;
            }
        }
    }

    /// Golomb parameter for a run-interruption sample of the given type.
    pub fn interruption_k(&self, ri_type: usize) -> u32 {
        let temp = if ri_type == 1 {
            self.run_a[1] + (self.run_n[1] >> 1)
        } else {
            self.run_a[0]
        };
        golomb_k(self.run_n[ri_type], temp)
    }

    /// True when a positive error maps to an odd code: `k == 0` and negative
    /// errors have been the minority so far.
    pub fn interruption_positive_odd(&self, ri_type: usize, k: u32) -> bool {
        k == 0 && 2 * self.run_nn[ri_type] < self.run_n[ri_type]
    }

    pub fn update_interruption(&mut self, ri_type: usize, err: i32, mapped: u32) {
        let q = ri_type;
        if err < 0 {
            self.run_nn[q] += 1;
        }
        self.run_a[q] += ((mapped as i32) + 1 - ri_type as i32) >> 1;
        if self.run_n[q] == self.reset {
            self.run_a[q] >>= 1;
            self.run_n[q] >>= 1;
            self.run_nn[q] >>= 1;
        }
        self.run_n[q] += 1;
    }

    #[inline]
    pub fn run_order(&self) -> u32 {
        J[self.run_index]
    }

    pub fn grow_run(&mut self) {
        if self.run_index < 31 {
            self.run_index += 1;
        }
    }

    pub fn shrink_run(&mut self) {
        self.run_index = self.run_index.saturating_sub(1);
    }
}
