//! Little-endian bit packing for residues and small matrices.

/// Bits needed per coefficient for residues mod `q`: `ceil(log2 q)`.
pub fn bits_for_modulus(q: u32) -> u32 {
    assert!(q >= 2);
    32 - (q - 1).leading_zeros()
}

/// Bytes occupied by `count` coefficients of `bits` bits each.
pub fn packed_len(count: usize, bits: u32) -> usize {
    (count * bits as usize).div_ceil(8)
}

#[derive(Default)]
pub struct BitWriter {
    out: Vec<u8>,
    acc: u64,
    filled: u32,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends the low `bits` bits of `value`, least-significant bit first.
    pub fn write(&mut self, value: u64, bits: u32) {
        debug_assert!(bits <= 32);
        debug_assert!(bits == 64 || value >> bits == 0);
        self.acc |= value << self.filled;
        self.filled += bits;
        while self.filled >= 8 {
            self.out.push(self.acc as u8);
            self.acc >>= 8;
            self.filled -= 8;
        }
    }

    pub fn finish(mut self) -> Vec<u8> {
        if self.filled > 0 {
            self.out.push(self.acc as u8);
        }
        self.out
    }
}

pub struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
    acc: u64,
    filled: u32,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self {
            bytes,
            pos: 0,
            acc: 0,
            filled: 0,
        }
    }

    pub fn read(&mut self, bits: u32) -> Option<u64> {
        debug_assert!(bits <= 32);
        while self.filled < bits {
            let byte = *self.bytes.get(self.pos)?;
            self.acc |= u64::from(byte) << self.filled;
            self.pos += 1;
            self.filled += 8;
        }
        let value = self.acc & ((1u64 << bits) - 1);
        self.acc >>= bits;
        self.filled -= bits;
        Some(value)
    }

    /// True when every unread bit (including padding) is zero.
    pub fn rest_is_zero(&self) -> bool {
        self.acc == 0 && self.bytes[self.pos..].iter().all(|&b| b == 0)
    }
}

pub fn pack_coeffs(coeffs: &[u32], bits: u32) -> Vec<u8> {
    let mut w = BitWriter::new();
    for &c in coeffs {
        w.write(u64::from(c), bits);
    }
    w.finish()
}

/// Unpacks exactly `count` coefficients; `None` if the input length is wrong
/// or any value is `>= modulus`.
pub fn unpack_coeffs(bytes: &[u8], count: usize, bits: u32, modulus: u32) -> Option<Vec<u32>> {
    if bytes.len() != packed_len(count, bits) {
        return None;
    }
    let mut r = BitReader::new(bytes);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let v = r.read(bits)? as u32;
        if v >= modulus {
            return None;
        }
        out.push(v);
    }
    r.rest_is_zero().then_some(out)
}
