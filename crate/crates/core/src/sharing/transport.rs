//! Framed message transports.
//!
//! Frame layout, identical for both transports:
//!
//! ```text
//! u32 LE  payload length
//! u64 LE  session id
//! u16 LE  operation tag
//! u16     reserved (zero)
//! u64 LE  ring words ...
//! ```

use crate::error::{Error, Result};
use std::io::{Read, Write};
use std::net::TcpStream;
use std::sync::mpsc::{channel, Receiver, Sender};

/// Bytes of framing around the ring words.
pub const FRAME_OVERHEAD: u64 = 4 + 8 + 2 + 2;

pub fn frame_bytes(words: usize) -> u64 {
    FRAME_OVERHEAD + 8 * words as u64
}

pub fn encode_frame(session_id: u64, tag: u16, words: &[u64]) -> Vec<u8> {
    let payload_len = 12 + 8 * words.len();
    let mut buf = Vec::with_capacity(4 + payload_len);
    buf.extend_from_slice(&(payload_len as u32).to_le_bytes());
    buf.extend_from_slice(&session_id.to_le_bytes());
    buf.extend_from_slice(&tag.to_le_bytes());
    buf.extend_from_slice(&[0, 0]);
    for w in words {
        buf.extend_from_slice(&w.to_le_bytes());
    }
    buf
}

/// Parse a whole frame (length prefix included) into (session id, tag, words).
pub fn decode_frame(frame: &[u8]) -> Result<(u64, u16, Vec<u64>)> {
    if frame.len() < FRAME_OVERHEAD as usize {
        return Err(Error::Transport(format!("short frame of {} bytes", frame.len())));
    }
    let len = u32::from_le_bytes(frame[0..4].try_into().unwrap()) as usize;
    if len + 4 != frame.len() || !(len - 12).is_multiple_of(8) {
        return Err(Error::Transport(format!("bad frame length {len}")));
    }
    let sid = u64::from_le_bytes(frame[4..12].try_into().unwrap());
    let tag = u16::from_le_bytes(frame[12..14].try_into().unwrap());
    let words = frame[16..]
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((sid, tag, words))
}

pub trait Channel: Send {
    fn send(&mut self, frame: &[u8]) -> Result<()>;
    fn recv(&mut self) -> Result<Vec<u8>>;
}

pub struct InProcChannel {
    tx: Sender<Vec<u8>>,
    rx: Receiver<Vec<u8>>,
}

pub fn inproc_pair() -> (InProcChannel, InProcChannel) {
    let (t0, r1) = channel();
    let (t1, r0) = channel();
    (InProcChannel { tx: t0, rx: r0 }, InProcChannel { tx: t1, rx: r1 })
}

impl Channel for InProcChannel {
    fn send(&mut self, frame: &[u8]) -> Result<()> {
        self.tx
            .send(frame.to_vec())
            .map_err(|_| Error::Transport("peer hung up".into()))
    }

    fn recv(&mut self) -> Result<Vec<u8>> {
        self.rx.recv().map_err(|_| Error::Transport("peer hung up".into()))
    }
}

pub struct TcpChannel {
    stream: TcpStream,
}

impl TcpChannel {
    pub fn new(stream: TcpStream) -> Result<Self> {
        stream.set_nodelay(true)?;
        Ok(TcpChannel { stream })
    }

    /// Party 0 listens, party 1 connects (retrying while the listener starts).
    pub fn establish(first: bool, addr: &str) -> Result<Self> {
        if first {
            let listener = std::net::TcpListener::bind(addr)?;
            let (stream, _) = listener.accept()?;
            Self::new(stream)
        } else {
            let mut last = None;
            for _ in 0..200 {
                match TcpStream::connect(addr) {
                    Ok(s) => return Self::new(s),
                    Err(e) => {
                        last = Some(e);
                        std::thread::sleep(std::time::Duration::from_millis(25));
                    }
                }
            }
            Err(Error::Transport(format!("could not connect to {addr}: {}", last.unwrap())))
        }
    }
}

impl Channel for TcpChannel {
    fn send(&mut self, frame: &[u8]) -> Result<()> {
        self.stream
            .write_all(frame)
            .map_err(|e| Error::Transport(e.to_string()))
    }

    fn recv(&mut self) -> Result<Vec<u8>> {
        let mut len = [0u8; 4];
        self.stream
            .read_exact(&mut len)
            .map_err(|e| Error::Transport(e.to_string()))?;
        let n = u32::from_le_bytes(len) as usize;
        let mut buf = vec![0u8; 4 + n];
        buf[..4].copy_from_slice(&len);
        self.stream
            .read_exact(&mut buf[4..])
            .map_err(|e| Error::Transport(e.to_string()))?;
        Ok(buf)
    }
}
