//! Cyclic redundancy check over bit vectors (one bit per `u8`, MSB first).
//!
//! Zero initial register and no final XOR, so the all-zero word is valid and
//! `check(append(b))` holds for every `b`.

use crate::codebook::CodeParams;
use crate::error::{Error, Result};

/// Generator polynomial of degree `length`; `poly` holds the coefficients
/// below the leading term (bit `i` = coefficient of `x^i`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrcSpec {
    pub length: usize,
    pub poly: u32,
}

impl CrcSpec {
    /// 3GPP NR CRC11, `x^11 + x^10 + x^9 + x^5 + 1`.
    pub const NR_CRC11: CrcSpec = CrcSpec {
        length: 11,
        poly: 0x621,
    };
    /// 3GPP NR CRC6, `x^6 + x^5 + 1`.
    pub const NR_CRC6: CrcSpec = CrcSpec {
        length: 6,
        poly: 0x21,
    };
    /// CCITT CRC16, `x^16 + x^12 + x^5 + 1`.
    pub const CRC16_CCITT: CrcSpec = CrcSpec {
        length: 16,
        poly: 0x1021,
    };
    /// 3GPP NR CRC24C.
    pub const NR_CRC24C: CrcSpec = CrcSpec {
        length: 24,
        poly: 0xB2_B117,
    };
    /// No parity bits; every word passes.
    pub const NONE: CrcSpec = CrcSpec { length: 0, poly: 0 };

    pub fn new(length: usize, poly: u32) -> Result<Self> {
        if length > 31 || (length > 0 && poly >> length != 0) {
            return Err(Error::InvalidConfig(format!(
                "CRC polynomial {poly:#x} does not fit degree {length}"
            )));
        }
        Ok(Self { length, poly })
    }

    /// Built-in generator for a CRC length.
    pub fn for_length(length: usize) -> Result<Self> {
        match length {
            0 => Ok(Self::NONE),
            6 => Ok(Self::NR_CRC6),
            11 => Ok(Self::NR_CRC11),
            16 => Ok(Self::CRC16_CCITT),
            24 => Ok(Self::NR_CRC24C),
            n => Err(Error::InvalidConfig(format!(
                "no built-in CRC of length {n} (available: 0, 6, 11, 16, 24)"
            ))),
        }
    }

    pub fn for_params(params: &CodeParams) -> Result<Self> {
        Self::for_length(params.crc_len)
    }

    /// Remainder of `bits(x)·x^length mod g(x)`.
    pub fn remainder(&self, bits: &[u8]) -> u32 {
        if self.length == 0 {
            return 0;
        }
        let top = 1u32 << (self.length - 1);
        let mask = (top << 1) - 1;
        let mut reg = 0u32;
        for &b in bits {
            let feedback = ((reg & top) != 0) ^ (b & 1 == 1);
            reg = (reg << 1) & mask;
            if feedback {
                reg ^= self.poly;
            }
        }
        reg
    }

    /// `info` followed by its `length` parity bits.
    pub fn append(&self, info: &[u8]) -> Vec<u8> {
        let r = self.remainder(info);
        let mut out = Vec::with_capacity(info.len() + self.length);
        out.extend_from_slice(info);
        out.extend((0..self.length).rev().map(|i| ((r >> i) & 1) as u8));
        out
    }

    /// True iff the whole word (payload and parity) is divisible by `g(x)`.
    pub fn check(&self, word: &[u8]) -> bool {
        if word.len() < self.length {
            return false;
        }
        let (info, parity) = word.split_at(word.len() - self.length);
        let r = self.remainder(info);
        parity
            .iter()
            .enumerate()
            .all(|(i, &b)| b & 1 == ((r >> (self.length - 1 - i)) & 1) as u8)
    }
}

/// Appends the CRC selected by `params.crc_len` to `info_bits` payload bits.
pub fn crc_append(info: &[u8], params: &CodeParams) -> Result<Vec<u8>> {
    if info.len() != params.info_bits() {
        return Err(Error::LengthMismatch {
            what: "information bits",
            expected: params.info_bits(),
            actual: info.len(),
        });
    }
    Ok(CrcSpec::for_params(params)?.append(info))
}

/// Checks a full `total_bits` word.
pub fn crc_check(word: &[u8], params: &CodeParams) -> Result<bool> {
    if word.len() != params.total_bits() {
        return Err(Error::LengthMismatch {
            what: "packet bits",
            expected: params.total_bits(),
            actual: word.len(),
        });
    }
    Ok(CrcSpec::for_params(params)?.check(word))
}
