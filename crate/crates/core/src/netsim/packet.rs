//! Wire format: big-endian two's-complement raw Q16.16 words, the
//! coordinates followed by the fitness.

use crate::bench::Solution;
use crate::fxp::Fx;

/// Radio payload limit in bytes.
pub const MAX_PAYLOAD: usize = 128;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PacketError {
    #[error("payload of {0} bytes exceeds the {MAX_PAYLOAD}-byte limit")]
    PayloadTooLarge(usize),
    #[error("payload of {got} bytes, expected {want}")]
    Length { got: usize, want: usize },
    #[error("cannot encode an unevaluated solution")]
    Unevaluated,
}

pub fn payload_len(n: usize) -> usize {
    4 * (n + 1)
}

pub fn encode(sol: &Solution) -> Result<Vec<u8>, PacketError> {
    let len = payload_len(sol.x.len());
    if len > MAX_PAYLOAD {
        return Err(PacketError::PayloadTooLarge(len));
    }
    let fitness = sol.fitness.ok_or(PacketError::Unevaluated)?;
    let mut out = Vec::with_capacity(len);
    for v in sol.x.iter().chain(std::iter::once(&fitness)) {
        out.extend_from_slice(&v.raw().to_be_bytes());
    }
    Ok(out)
}

pub fn decode(payload: &[u8], n: usize) -> Result<Solution, PacketError> {
    let want = payload_len(n);
    if want > MAX_PAYLOAD {
        return Err(PacketError::PayloadTooLarge(want));
    }
    if payload.len() != want {
        return Err(PacketError::Length { got: payload.len(), want });
    }
    let mut words = payload
        .chunks_exact(4)
        .map(|c| Fx::from_raw(i32::from_be_bytes(c.try_into().expect("4-byte chunk"))));
    let x = words.by_ref().take(n).collect();
    let fitness = words.next().expect("fitness word");
    Ok(Solution::evaluated(x, fitness))
}
