//! Probe packet codec.
//!
//! Big-endian, fixed offsets:
//!
//! | offset | size | field          |
//! |--------|------|----------------|
//! | 0      | 4    | magic `LLAB`   |
//! | 4      | 1    | version        |
//! | 5      | 1    | flags          |
//! | 6      | 2    | reserved       |
//! | 8      | 8    | seq            |
//! | 16     | 8    | t_client_send  |
//! | 24     | 8    | t_server_recv  |
//! | 32     | 8    | t_server_send  |
//!
//! Anything after byte 40 is zero padding up to the payload size.

use alloc::vec;
use alloc::vec::Vec;

pub const MAGIC: u32 = 0x4C4C_4142;
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 40;
/// Set by the server on the echoed copy.
pub const FLAG_ECHOED: u8 = 0x01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum WireError {
    #[error("bad magic {0:#010x}")]
    BadMagic(u32),
    #[error("unsupported version {0}")]
    UnsupportedVersion(u8),
    #[error("packet of {0} bytes is shorter than the header")]
    Truncated(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Packet {
    pub flags: u8,
    pub reserved: u16,
    pub seq: u64,
    pub t_client_send: u64,
    pub t_server_recv: u64,
    pub t_server_send: u64,
}

impl Packet {
    pub fn request(seq: u64, t_client_send: u64) -> Self {
        Self {
            seq,
            t_client_send,
            ..Self::default()
        }
    }

    pub fn is_echoed(&self) -> bool {
        self.flags & FLAG_ECHOED != 0
    }

    /// Writes the header into `buf[..HEADER_LEN]` and zeroes the rest.
    pub fn encode_into(&self, buf: &mut [u8]) -> Result<(), WireError> {
        if buf.len() < HEADER_LEN {
            return Err(WireError::Truncated(buf.len()));
        }
        buf[0..4].copy_from_slice(&MAGIC.to_be_bytes());
        buf[4] = VERSION;
        buf[5] = self.flags;
        buf[6..8].copy_from_slice(&self.reserved.to_be_bytes());
        buf[8..16].copy_from_slice(&self.seq.to_be_bytes());
        buf[16..24].copy_from_slice(&self.t_client_send.to_be_bytes());
        buf[24..32].copy_from_slice(&self.t_server_recv.to_be_bytes());
        buf[32..40].copy_from_slice(&self.t_server_send.to_be_bytes());
        buf[HEADER_LEN..].fill(0);
        Ok(())
    }

    /// Encodes into a fresh buffer of `max(payload_len, HEADER_LEN)` bytes.
    pub fn encode(&self, payload_len: usize) -> Vec<u8> {
        let mut buf = vec![0u8; payload_len.max(HEADER_LEN)];
        self.encode_into(&mut buf).expect("buffer holds the header");
        buf
    }

    pub fn decode(buf: &[u8]) -> Result<Self, WireError> {
        if buf.len() < HEADER_LEN {
            return Err(WireError::Truncated(buf.len()));
        }
        let magic = u32::from_be_bytes(buf[0..4].try_into().unwrap());
        if magic != MAGIC {
            return Err(WireError::BadMagic(magic));
        }
        if buf[4] != VERSION {
            return Err(WireError::UnsupportedVersion(buf[4]));
        }
        let u64_at = |o: usize| u64::from_be_bytes(buf[o..o + 8].try_into().unwrap());
        Ok(Self {
            flags: buf[5],
            reserved: u16::from_be_bytes([buf[6], buf[7]]),
            seq: u64_at(8),
            t_client_send: u64_at(16),
            t_server_recv: u64_at(24),
            t_server_send: u64_at(32),
        })
    }
}
