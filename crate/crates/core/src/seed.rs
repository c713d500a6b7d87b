//! Seed derivation for reproducible experiments.
//!
//! Tags are serialized to bytes (a type byte, then the payload, then the
//! payload length) and absorbed eight bytes at a time into a 64-bit state
//! with the SplitMix64 finalizer. No global state is consulted.

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tag<'a> {
    Str(&'a str),
    Int(u64),
}

impl<'a> From<&'a str> for Tag<'a> {
    fn from(s: &'a str) -> Self {
        Tag::Str(s)
    }
}

impl From<u64> for Tag<'_> {
    fn from(v: u64) -> Self {
        Tag::Int(v)
    }
}

impl From<usize> for Tag<'_> {
    fn from(v: usize) -> Self {
        Tag::Int(v as u64)
    }
}

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(base: u64, tags: &[Tag<'_>]) -> u64 {
    let mut bytes = Vec::new();
    for tag in tags {
        let start = bytes.len();
        match tag {
            Tag::Str(s) => {
                bytes.push(b's');
                bytes.extend_from_slice(s.as_bytes());
            }
            Tag::Int(v) => {
                bytes.push(b'i');
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        let len = (bytes.len() - start) as u64;
        bytes.extend_from_slice(&len.to_le_bytes());
    }
    let mut state = splitmix64(base);
    for chunk in bytes.chunks(8) {
        let mut word = [0u8; 8];
        word[..chunk.len()].copy_from_slice(chunk);
        state = splitmix64(state ^ u64::from_le_bytes(word));
    }
    state
}
