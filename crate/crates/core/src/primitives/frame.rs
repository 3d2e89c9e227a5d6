//! `type (1 byte) || length (u32 LE) || payload` wire frames.

use thiserror::Error;

pub const FRAME_HEADER_LEN: usize = 5;

/// Registered frame tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum MsgType {
    ClientHello = 1,
    ServerHello = 2,
    Finish = 3,
    Record = 4,
    /// Component frames inside a serialized dual signature.
    SignaturePart = 5,
    Checkpoint = 6,
    Abort = 255,
}

impl MsgType {
    pub fn from_u8(tag: u8) -> Option<MsgType> {
        Some(match tag {
            1 => MsgType::ClientHello,
            2 => MsgType::ServerHello,
            3 => MsgType::Finish,
            4 => MsgType::Record,
            5 => MsgType::SignaturePart,
            6 => MsgType::Checkpoint,
            255 => MsgType::Abort,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub msg_type: MsgType,
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("truncated frame: need {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },
    #[error("payload length exceeds u32::MAX")]
    LengthOverflow,
    #[error("unregistered frame type {0:#04x}")]
    UnknownType(u8),
}

pub fn frame_encode(msg_type: MsgType, payload: &[u8]) -> Result<Vec<u8>, FrameError> {
    let len = u32::try_from(payload.len()).map_err(|_| FrameError::LengthOverflow)?;
    let mut out = Vec::with_capacity(FRAME_HEADER_LEN + payload.len());
    out.push(msg_type as u8);
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(payload);
    Ok(out)
}

/// Parses one frame off the front of `bytes`, returning it with the unread remainder.
pub fn frame_decode(bytes: &[u8]) -> Result<(Frame, &[u8]), FrameError> {
    if bytes.len() < FRAME_HEADER_LEN {
        return Err(FrameError::Truncated {
            needed: FRAME_HEADER_LEN,
            available: bytes.len(),
        });
    }
    let msg_type = MsgType::from_u8(bytes[0]).ok_or(FrameError::UnknownType(bytes[0]))?;
    let len = u32::from_le_bytes(bytes[1..5].try_into().unwrap()) as usize;
    let end = FRAME_HEADER_LEN
        .checked_add(len)
        .ok_or(FrameError::LengthOverflow)?;
    if bytes.len() < end {
        return Err(FrameError::Truncated {
            needed: end,
            available: bytes.len(),
        });
    }
    let frame = Frame {
        msg_type,
        payload: bytes[FRAME_HEADER_LEN..end].to_vec(),
    };
    Ok((frame, &bytes[end..]))
}
