use super::bitio::BitReader;
use super::context::{wrap_sample, CodingState, Context, LIMIT, QBPP};
use super::{JpeglsError, JpeglsParams};

fn get_golomb(r: &mut BitReader<'_>, k: u32, limit: u32) -> Result<u32, JpeglsError> {
    let escape = limit - QBPP - 1;
    let high = r.unary(escape)?;
    if high < escape {
        Ok((high << k) | r.bits(k)?)
    } else {
        Ok(r.bits(QBPP)? + 1)
    }
}

struct Decoder<'a> {
    state: CodingState,
    input: BitReader<'a>,
}

impl Decoder<'_> {
    fn regular(&mut self, ctx: Context, ra: i32, rb: i32, rc: i32) -> Result<i32, JpeglsError> {
        let px = self.state.predict(ctx, ra, rb, rc);
        let k = self.state.regular_k(ctx);
        let m = get_golomb(&mut self.input, k, LIMIT)? as i32;
        let err = if self.state.inverted_mapping(ctx, k) {
            if m & 1 == 1 {
                (m - 1) / 2
            } else {
                -(m / 2) - 1
            }
        } else if m & 1 == 0 {
            m / 2
        } else {
            -(m + 1) / 2
        };
        if !(-128..128).contains(&err) {
            return Err(JpeglsError::CorruptData(format!("prediction error {err} out of range")));
        }
        self.state.update_regular(ctx, err);
        let signed = if ctx.negative { -err } else { err };
        Ok(wrap_sample(px + signed))
    }

    fn interruption(&mut self, ra: i32, rb: i32) -> Result<i32, JpeglsError> {
        let ri_type = usize::from(ra == rb);
        let k = self.state.interruption_k(ri_type);
        let limit = LIMIT - self.state.run_order() - 1;
        let mapped = get_golomb(&mut self.input, k, limit)?;
        let t = mapped + ri_type as u32;
        let map = t & 1 == 1;
        let magnitude = ((t + u32::from(map)) / 2) as i32;
        let positive_odd = self.state.interruption_positive_odd(ri_type, k);
        let err = if map == positive_odd { magnitude } else { -magnitude };
        if !(-128..128).contains(&err) {
            return Err(JpeglsError::CorruptData(format!("run interruption error {err} out of range")));
        }
        self.state.update_interruption(ri_type, err, mapped);
        let px = if ri_type == 1 { ra } else { rb };
        let signed = if ri_type == 0 && ra > rb { -err } else { err };
        Ok(wrap_sample(px + signed))
    }
}

/// Decodes a scan body; returns the samples and the number of bytes read.
pub(crate) fn decode_scan(
    data: &[u8],
    width: usize,
    height: usize,
    params: &JpeglsParams,
) -> Result<(Vec<u8>, usize), JpeglsError> {
    let w = width;
    let mut dec = Decoder {
        state: CodingState::new(params),
        input: BitReader::new(data),
    };
    let mut samples = Vec::with_capacity(w * height);
    let mut prev = vec![0i32; w + 2];
    let mut cur = vec![0i32; w + 2];
    for _ in 0..height {
        prev[w + 1] = prev[w];
        cur[0] = prev[1];
        let mut x = 0;
        while x < w {
            let ra = cur[x];
            let rb = prev[x + 1];
            let rc = prev[x];
            let rd = prev[x + 2];
            match dec.state.context(rd - rb, rb - rc, rc - ra) {
                Some(ctx) => {
                    cur[x + 1] = dec.regular(ctx, ra, rb, rc)?;
                    x += 1;
                }
                None => loop {
                    if dec.input.bit()? == 1 {
                        let full = 1usize << dec.state.run_order();
                        let count = full.min(w - x);
                        cur[x + 1..x + 1 + count].fill(ra);
                        x += count;
                        if count == full {
                            dec.state.grow_run();
                        }
                        if x == w {
                            break;
                        }
                    } else {
                        let order = dec.state.run_order();
                        let count = dec.input.bits(order)? as usize;
                        if x + count >= w {
                            return Err(JpeglsError::CorruptData("run extends past the end of the line".into()));
                        }
                        cur[x + 1..x + 1 + count].fill(ra);
                        x += count;
                        cur[x + 1] = dec.interruption(ra, prev[x + 1])?;
                        dec.state.shrink_run();
                        x += 1;
                        break;
                    }
                },
            }
        }
        samples.extend(cur[1..=w].iter().map(|&v| v as u8));
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok((samples, dec.input.position()))
}
