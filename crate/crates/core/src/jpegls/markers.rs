//! Marker segments framing a single lossless scan.

use super::{JpeglsError, JpeglsParams, MAX_DECODED_SAMPLES};

const SOI: u8 = 0xD8;
const EOI: u8 = 0xD9;
const SOS: u8 = 0xDA;
const DNL: u8 = 0xDC;
const DRI: u8 = 0xDD;
const COM: u8 = 0xFE;
const SOF55: u8 = 0xF7;
const LSE: u8 = 0xF8;

fn push_u16(out: &mut Vec<u8>, v: u16) {
    out.extend_from_slice(&v.to_be_bytes());
}

pub(crate) fn write_header(width: u16, height: u16, params: &JpeglsParams) -> Vec<u8> {
    let mut out = vec![0xFF, SOI];

    out.extend_from_slice(&[0xFF, SOF55]);
    push_u16(&mut out, 11);
    out.push(8);
    push_u16(&mut out, height);
    push_u16(&mut out, width);
    out.extend_from_slice(&[1, 1, 0x11, 0]);

    if !params.is_default() {
        out.extend_from_slice(&[0xFF, LSE]);
        push_u16(&mut out, 13);
        out.push(1);
        for v in [params.maxval, params.t1, params.t2, params.t3, params.reset] {
            push_u16(&mut out, v);
        }
    }

    out.extend_from_slice(&[0xFF, SOS]);
    push_u16(&mut out, 8);
    // One component (id 1, no mapping table), NEAR, ILV, point transform.
    out.extend_from_slice(&[1, 1, 0, 0, 0, 0]);
    out
}

pub(crate) fn write_trailer(out: &mut Vec<u8>) {
    out.extend_from_slice(&[0xFF, EOI]);
}

#[derive(Debug)]
pub(crate) struct FrameHeader {
    pub width: usize,
    pub height: usize,
    pub params: JpeglsParams,
    pub scan_offset: usize,
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn u8(&mut self) -> Result<u8, JpeglsError> {
        let b = *self
            .data
            .get(self.pos)
            .ok_or_else(|| JpeglsError::BadMarker("stream ended inside the header".into()))?;
        self.pos += 1;
        Ok(b)
    }

    fn u16(&mut self) -> Result<u16, JpeglsError> {
        Ok(u16::from_be_bytes([self.u8()?, self.u8()?]))
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], JpeglsError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.data.len());
        let end = end.ok_or_else(|| JpeglsError::BadMarker("segment runs past the end of the stream".into()))?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    /// Reads the next marker code, skipping fill bytes.
    fn marker(&mut self) -> Result<u8, JpeglsError> {
        if self.u8()? != 0xFF {
            return Err(JpeglsError::BadMarker(format!("expected a marker at offset {}", self.pos - 1)));
        }
        let mut code = self.u8()?;
        while code == 0xFF {
            code = self.u8()?;
        }
        Ok(code)
    }

    /// Payload of a length-prefixed segment.
    fn segment(&mut self) -> Result<&'a [u8], JpeglsError> {
        let len = self.u16()?;
        if len < 2 {
            return Err(JpeglsError::BadMarker(format!("segment length {len}")));
        }
        self.take(usize::from(len) - 2)
    }
}

pub(crate) fn parse_header(stream: &[u8]) -> Result<FrameHeader, JpeglsError> {
    let mut cur = Cursor { data: stream, pos: 0 };
    if stream.len() < 2 || stream[0] != 0xFF || stream[1] != SOI {
        return Err(JpeglsError::BadMarker("stream does not start with SOI".into()));
    }
    cur.pos = 2;

    let mut frame: Option<(usize, usize)> = None;
    let mut params = JpeglsParams::default();
    loop {
        let code = cur.marker()?;
        match code {
            // A SPIFF directory ends with an entry that repeats SOI.
            SOI if frame.is_none() => {}
            0xE0..=0xEF | COM => {
                cur.segment()?;
            }
            SOF55 => {
                if frame.is_some() {
                    return Err(JpeglsError::BadMarker("second SOF55 segment".into()));
                }
                frame = Some(parse_frame(cur.segment()?)?);
            }
            LSE => {
                let seg = cur.segment()?;
                params = parse_lse(seg, params)?;
            }
            DRI => {
                let seg = cur.segment()?;
                if seg.iter().any(|&b| b != 0) {
                    return Err(JpeglsError::Unsupported("restart intervals".into()));
                }
            }
            SOS => {
                let (width, height) =
                    frame.ok_or_else(|| JpeglsError::BadMarker("SOS before SOF55".into()))?;
                parse_scan(cur.segment()?)?;
                params.validate()?;
                return Ok(FrameHeader {
                    width,
                    height,
                    params,
                    scan_offset: cur.pos,
                });
            }
            0xC0..=0xCF => {
                return Err(JpeglsError::Unsupported(format!("frame type FF{code:02X}")));
            }
            EOI => return Err(JpeglsError::BadMarker("EOI before any scan".into())),
            other => {
                return Err(JpeglsError::BadMarker(format!("unexpected marker FF{other:02X}")));
            }
        }
    }
}

fn parse_frame(seg: &[u8]) -> Result<(usize, usize), JpeglsError> {
    if seg.len() < 6 {
        return Err(JpeglsError::BadMarker("short SOF55 segment".into()));
    }
    let precision = seg[0];
    let height = u16::from_be_bytes([seg[1], seg[2]]);
    let width = u16::from_be_bytes([seg[3], seg[4]]);
    let components = seg[5];
    if precision != 8 {
        return Err(JpeglsError::UnsupportedBitDepth(precision));
    }
    if components != 1 {
        return Err(JpeglsError::Unsupported(format!("{components} components")));
    }
    if seg.len() != 6 + 3 {
        return Err(JpeglsError::BadMarker("SOF55 length does not match one component".into()));
    }
    if seg[7] != 0x11 {
        return Err(JpeglsError::Unsupported("component subsampling".into()));
    }
    let samples = u64::from(width) * u64::from(height);
    if width == 0 || height == 0 || samples > MAX_DECODED_SAMPLES {
        return Err(JpeglsError::DimensionOverflow {
            width: u64::from(width),
            height: u64::from(height),
        });
    }
    Ok((usize::from(width), usize::from(height)))
}

fn parse_lse(seg: &[u8], current: JpeglsParams) -> Result<JpeglsParams, JpeglsError> {
    match seg.first() {
        Some(1) if seg.len() == 11 => {
            let field = |i: usize| u16::from_be_bytes([seg[1 + 2 * i], seg[2 + 2 * i]]);
            // Zero selects the default value for that field.
            let pick = |v: u16, d: u16| if v == 0 { d } else { v };
            let d = JpeglsParams::default();
            Ok(JpeglsParams {
                maxval: pick(field(0), d.maxval),
                t1: pick(field(1), d.t1),
                t2: pick(field(2), d.t2),
                t3: pick(field(3), d.t3),
                reset: pick(field(4), d.reset),
                ..current
            })
        }
        Some(id) => Err(JpeglsError::Unsupported(format!("LSE segment type {id}"))),
        None => Err(JpeglsError::BadMarker("empty LSE segment".into())),
    }
}

fn parse_scan(seg: &[u8]) -> Result<(), JpeglsError> {
    if seg.len() != 6 || seg[0] != 1 {
        return Err(JpeglsError::Unsupported("scan must contain exactly one component".into()));
    }
    if seg[2] != 0 {
        return Err(JpeglsError::Unsupported("mapping tables".into()));
    }
    if seg[3] != 0 {
        return Err(JpeglsError::Unsupported(format!("near-lossless coding (NEAR = {})", seg[3])));
    }
    if seg[5] != 0 {
        return Err(JpeglsError::Unsupported("point transform".into()));
    }
    Ok(())
}

/// Checks what follows the entropy-coded data: stuffing residue, then EOI.
pub(crate) fn expect_trailer(rest: &[u8]) -> Result<(), JpeglsError> {
    let mut i = 0;
    while i < rest.len() {
        if rest[i] == 0xFF {
            let mut j = i + 1;
            while j < rest.len() && rest[j] == 0xFF {
                j += 1;
            }
            match rest.get(j) {
                Some(&EOI) => return Ok(()),
                Some(&DNL) => return Err(JpeglsError::Unsupported("DNL marker".into())),
                Some(&(0xD0..=0xD7)) => return Err(JpeglsError::Unsupported("restart markers".into())),
                Some(&code) if code >= 0x80 => {
                    return Err(JpeglsError::BadMarker(format!("FF{code:02X} where EOI was expected")))
                }
                _ => i = j + 1,
            }
        } else {
            i += 1;
        }
    }
    Err(JpeglsError::BadMarker("missing EOI".into()))
}
