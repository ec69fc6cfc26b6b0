//! MSB-first bit packing with JPEG-LS marker stuffing: every byte that
//! follows an 0xFF byte carries only seven data bits behind a zero bit.

use super::JpeglsError;

#[derive(Debug, Default)]
pub(crate) struct BitWriter {
    out: Vec<u8>,
    acc: u32,
    filled: u32,
    after_ff: bool,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    fn capacity(&self) -> u32 {
        if self.after_ff {
            7
        } else {
            8
        }
    }

    #[inline]
    fn emit(&mut self) {
        let byte = self.acc as u8;
        self.out.push(byte);
        self.after_ff = byte == 0xFF;
        self.acc = 0;
        self.filled = 0;
    }

    /// Appends the low `count` bits of `value`, most significant first.
    pub fn put(&mut self, value: u32, count: u32) {
        debug_assert!(count <= 32);
        for i in (0..count).rev() {
            self.acc = (self.acc << 1) | ((value >> i) & 1);
            self.filled += 1;
            if self.filled == self.capacity() {
                self.emit();
            }
        }
    }

    pub fn put_zeros(&mut self, mut count: u32) {
        while count > 0 {
            let chunk = count.min(32);
            self.put(0, chunk);
            count -= chunk;
        }
    }

    /// Pads the final byte with zero bits. A trailing 0xFF is followed by a
    /// zero byte so that it cannot be mistaken for the start of a marker.
    pub fn finish(mut self) -> Vec<u8> {
        if self.filled > 0 {
            let pad = self.capacity() - self.filled;
            self.acc <<= pad;
            self.emit();
        }
        if self.after_ff {
            self.out.push(0);
        }
        self.out
    }
}

#[derive(Debug)]
pub(crate) struct BitReader<'a> {
    data: &'a [u8],
    pos: usize,
    current: u8,
    left: u32,
    prev_ff: bool,
}

impl<'a> BitReader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        Self {
            data,
            pos: 0,
            current: 0,
            left: 0,
            prev_ff: false,
        }
    }

    fn refill(&mut self) -> Result<(), JpeglsError> {
        let byte = *self
            .data
            .get(self.pos)
            .ok_or_else(|| JpeglsError::CorruptData("entropy-coded segment ended early".into()))?;
        self.pos += 1;
        if self.prev_ff {
            if byte & 0x80 != 0 {
                return Err(JpeglsError::CorruptData("marker inside entropy-coded data".into()));
            }
            self.left = 7;
        } else {
            self.left = 8;
        }
        self.current = byte;
        self.prev_ff = byte == 0xFF;
        Ok(())
    }

    #[inline]
    pub fn bit(&mut self) -> Result<u32, JpeglsError> {
        if self.left == 0 {
            self.refill()?;
        }
        self.left -= 1;
        Ok(u32::from((self.current >> self.left) & 1))
    }

    pub fn bits(&mut self, count: u32) -> Result<u32, JpeglsError> {
        let mut v = 0u32;
        for _ in 0..count {
            v = (v << 1) | self.bit()?;
        }
        Ok(v)
    }

    /// Bytes consumed so far, including a partially read one.
    pub fn position(&self) -> usize {
        self.pos
    }

    /// Counts zero bits up to and including the terminating one bit; fails
    /// once more than `max` zeros have been seen.
    pub fn unary(&mut self, max: u32) -> Result<u32, JpeglsError> {
        let mut zeros = 0;
        while self.bit()? == 0 {
            zeros += 1;
            if zeros > max {
                return Err(JpeglsError::CorruptData("unary prefix exceeds code limit".into()));
            }
        }
        Ok(zeros)
    }
}
