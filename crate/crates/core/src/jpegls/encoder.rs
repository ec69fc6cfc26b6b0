use super::bitio::BitWriter;
use super::context::{mod_range, CodingState, Context, LIMIT, QBPP};
use super::JpeglsParams;
use crate::image_io::GrayImage;

fn put_golomb(w: &mut BitWriter, m: u32, k: u32, limit: u32) {
    let high = m >> k;
    let escape = limit - QBPP - 1;
    if high < escape {
        w.put_zeros(high);
        w.put(1, 1);
        if k > 0 {
            w.put(m & ((1 << k) - 1), k);
        }
    } else {
        w.put_zeros(escape);
        w.put(1, 1);
        w.put(m - 1, QBPP);
    }
}

struct Encoder {
    state: CodingState,
    out: BitWriter,
}

impl Encoder {
    fn regular(&mut self, ctx: Context, ix: i32, ra: i32, rb: i32, rc: i32) {
        let px = self.state.predict(ctx, ra, rb, rc);
        let mut err = ix - px;
        if ctx.negative {
            err = -err;
        }
        let err = mod_range(err);
        let k = self.state.regular_k(ctx);
        let mapped = if self.state.inverted_mapping(ctx, k) {
            if err >= 0 {
                2 * err + 1
            } else {
                -2 * (err + 1)
            }
        } else if err >= 0 {
            2 * err
        } else {
            -2 * err - 1
        };
        put_golomb(&mut self.out, mapped as u32, k, LIMIT);
        self.state.update_regular(ctx, err);
    }

    fn interruption(&mut self, ix: i32, ra: i32, rb: i32) {
        let ri_type = usize::from(ra == rb);
        let px = if ri_type == 1 { ra } else { rb };
        let mut err = ix - px;
        if ri_type == 0 && ra > rb {
            err = -err;
        }
        let err = mod_range(err);
        let k = self.state.interruption_k(ri_type);
        let positive_odd = self.state.interruption_positive_odd(ri_type, k);
        let map = (err > 0 && positive_odd) || (err < 0 && !positive_odd);
        let mapped = (2 * err.unsigned_abs()) - ri_type as u32 - u32::from(map);
        let limit = LIMIT - self.state.run_order() - 1;
        put_golomb(&mut self.out, mapped, k, limit);
        self.state.update_interruption(ri_type, err, mapped);
    }

    /// Codes a run starting at `x`; returns the column after everything coded.
    fn run(&mut self, line: &[i32], prev: &[i32], x: usize, ra: i32) -> usize {
        let w = line.len();
        let mut len = 0;
        while x + len < w && line[x + len] == ra {
            len += 1;
        }
        let mut remaining = len;
        while remaining >= 1 << self.state.run_order() {
            self.out.put(1, 1);
            remaining -= 1 << self.state.run_order();
            self.state.grow_run();
        }
        let end = x + len;
        if end == w {
            if remaining > 0 {
                self.out.put(1, 1);
            }
            return end;
        }
        self.out.put(0, 1);
        let order = self.state.run_order();
        if order > 0 {
            self.out.put(remaining as u32, order);
        }
        // Ra of the interruption sample is the run value (or the original Ra
        // for an empty run); Rb is directly above it.
        self.interruption(line[end], ra, prev[end + 1]);
        self.state.shrink_run();
        end + 1
    }
}

/// Entropy-codes the samples of `image` (the scan body, without markers).
pub(crate) fn encode_scan(image: &GrayImage, params: &JpeglsParams) -> Vec<u8> {
    let (w, h) = image.dimensions();
    let mut enc = Encoder {
        state: CodingState::new(params),
        out: BitWriter::new(),
    };
    // Reconstructed neighbours with one padding column on each side.
    let mut prev = vec![0i32; w + 2];
    let mut cur = vec![0i32; w + 2];
    let mut line = vec![0i32; w];
    for y in 0..h {
        for (dst, &s) in line.iter_mut().zip(&image.samples()[y * w..(y + 1) * w]) {
            *dst = i32::from(s);
        }
        prev[w + 1] = prev[w];
        cur[0] = prev[1];
        let mut x = 0;
        while x < w {
            let ra = cur[x];
            let rb = prev[x + 1];
            let rc = prev[x];
            let rd = prev[x + 2];
            match enc.state.context(rd - rb, rb - rc, rc - ra) {
                Some(ctx) => {
                    enc.regular(ctx, line[x], ra, rb, rc);
                    cur[x + 1] = line[x];
                    x += 1;
                }
                None => {
                    let next = enc.run(&line, &prev, x, ra);
                    cur[x + 1..next + 1].copy_from_slice(&line[x..next]);
                    x = next;
                }
            }
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    enc.out.finish()
}
