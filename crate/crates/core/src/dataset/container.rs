//! `VNV1` raw video container: magic, little-endian `u16 T, u16 H, u16 W`,
//! `u8 channels (= 3)`, `u8 fps`, then `T*H*W*3` bytes, row-major and
//! frame by frame.

use std::path::Path;

use ndarray::Array4;

use crate::{Error, Result};

pub const VIDEO_MAGIC: &[u8; 4] = b"VNV1";
const HEADER_LEN: usize = 12;

pub fn encode_video(frames: &Array4<u8>, fps: u8) -> Result<Vec<u8>> {
    let (t, h, w, c) = frames.dim();
    if c != 3 {
        return Err(Error::Shape {
            axis: "channel",
            detail: format!("expected 3 channels, got {c}"),
        });
    }
    let dim = |axis: &'static str, n: usize| {
        u16::try_from(n).map_err(|_| Error::Shape {
            axis,
            detail: format!("{n} does not fit in u16"),
        })
    };
    let (t16, h16, w16) = (dim("time", t)?, dim("height", h)?, dim("width", w)?);
    let mut out = Vec::with_capacity(HEADER_LEN + frames.len());
    out.extend_from_slice(VIDEO_MAGIC);
    out.extend_from_slice(&t16.to_le_bytes());
    out.extend_from_slice(&h16.to_le_bytes());
    out.extend_from_slice(&w16.to_le_bytes());
    out.push(3);
    out.push(fps);
    out.extend(frames.iter().copied());
    Ok(out)
}

pub fn decode_video(bytes: &[u8], path: &Path) -> Result<(Array4<u8>, u8)> {
    let bad = |message: String| Error::Container {
        path: path.to_path_buf(),
        message,
    };
    if bytes.len() < HEADER_LEN {
        return Err(bad(format!("truncated header ({} bytes)", bytes.len())));
    }
    if &bytes[..4] != VIDEO_MAGIC {
        return Err(bad("bad magic".into()));
    }
    let rd = |o: usize| usize::from(u16::from_le_bytes([bytes[o], bytes[o + 1]]));
    let (t, h, w) = (rd(4), rd(6), rd(8));
    let channels = bytes[10];
    let fps = bytes[11];
    if channels != 3 {
        return Err(bad(format!("unsupported channel count {channels}")));
    }
    let n = t * h * w * 3;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != n {
        return Err(bad(format!("expected {n} payload bytes, found {}", payload.len())));
    }
    let frames = Array4::from_shape_vec((t, h, w, 3), payload.to_vec()).map_err(|e| bad(e.to_string()))?;
    Ok((frames, fps))
}

pub fn write_video(path: &Path, frames: &Array4<u8>, fps: u8) -> Result<()> {
    let bytes = encode_video(frames, fps)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_video(path: &Path) -> Result<(Array4<u8>, u8)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_video(&bytes, path)
}
