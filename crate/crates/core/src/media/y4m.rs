//! YUV4MPEG2 reader and writer (8-bit 4:2:0 only).

use std::path::Path;

use crate::error::{Error, Result};

use super::frame::{chroma_dims, ColorSpace, Frame, FrameRate, Plane, VideoSequence};

const MAGIC: &[u8] = b"YUV4MPEG2";
const FRAME_MARKER: &[u8] = b"FRAME";

#[derive(Debug)]
struct Header {
    width: usize,
    height: usize,
    rate: FrameRate,
}

fn parse_header(line: &[u8]) -> Result<Header> {
    let text = std::str::from_utf8(line).map_err(|e| Error::Parse {
        offset: e.valid_up_to(),
        message: "header is not valid UTF-8".into(),
    })?;
    let mut width = None;
    let mut height = None;
    let mut rate = FrameRate::default();
    let mut offset = 0;
    for (i, token) in text.split(' ').enumerate() {
        let token_offset = offset;
        offset += token.len() + 1;
        if i == 0 {
            if token.as_bytes() != MAGIC {
                return Err(Error::Parse {
                    offset: 0,
                    message: format!("bad magic `{token}`, expected YUV4MPEG2"),
                });
            }
            continue;
        }
        if token.is_empty() {
            continue;
        }
        let bad = || Error::Parse {
            offset: token_offset,
            message: format!("malformed header token `{token}`"),
        };
        let (tag, value) = token.split_at(1);
        match tag {
            "W" => width = Some(value.parse::<usize>().map_err(|_| bad())?),
            "H" => height = Some(value.parse::<usize>().map_err(|_| bad())?),
            "F" => {
                let (n, d) = value.split_once(':').ok_or_else(bad)?;
                let (n, d) = (n.parse().map_err(|_| bad())?, d.parse().map_err(|_| bad())?);
                if n == 0 || d == 0 {
                    return Err(bad());
                }
                rate = FrameRate::new(n, d);
            }
            "C" => match value {
                "420" | "420jpeg" | "420paldv" | "420mpeg2" => {}
                other => {
                    return Err(Error::Unsupported(format!(
                        "chroma tag `C{other}`; only 8-bit 4:2:0 is supported"
                    )))
                }
            },
            // Interlacing, aspect ratio and extensions do not affect decoding.
            "I" | "A" | "X" => {}
            _ => return Err(bad()),
        }
    }
    match (width, height) {
        (Some(w), Some(h)) if w > 0 && h > 0 => Ok(Header {
            width: w,
            height: h,
            rate,
        }),
        _ => Err(Error::Parse {
            offset: 0,
            message: "header lacks a positive W or H token".into(),
        }),
    }
}

fn find_newline(bytes: &[u8], from: usize) -> Option<usize> {
    bytes[from..].iter().position(|&b| b == b'\n').map(|p| from + p)
}

fn plane_from_bytes(width: usize, height: usize, bytes: &[u8]) -> Plane {
    Plane {
        width,
        height,
        data: bytes.iter().map(|&b| b as f32).collect(),
    }
}

/// Decodes a complete Y4M stream.
pub fn parse_y4m(bytes: &[u8]) -> Result<VideoSequence> {
    parse_y4m_named(bytes, "<memory>")
}

fn parse_y4m_named(bytes: &[u8], source: &str) -> Result<VideoSequence> {
    if !bytes.starts_with(MAGIC) {
        return Err(Error::Parse {
            offset: 0,
            message: "stream does not start with YUV4MPEG2".into(),
        });
    }
    let header_end = find_newline(bytes, 0).ok_or_else(|| Error::Parse {
        offset: bytes.len(),
        message: "unterminated header".into(),
    })?;
    let header = parse_header(&bytes[..header_end])?;
    let (w, h) = (header.width, header.height);
    let (cw, ch) = chroma_dims(w, h);
    let luma_len = w * h;
    let chroma_len = cw * ch;
    let frame_len = luma_len + 2 * chroma_len;

    let mut frames = Vec::new();
    let mut pos = header_end + 1;
    while pos < bytes.len() {
        if !bytes[pos..].starts_with(FRAME_MARKER) {
            return Err(Error::Parse {
                offset: pos,
                message: format!("expected FRAME marker for frame {}", frames.len()),
            });
        }
        let line_end = find_newline(bytes, pos).ok_or_else(|| Error::Parse {
            offset: pos,
            message: "unterminated FRAME line".into(),
        })?;
        let start = line_end + 1;
        let available = bytes.len() - start;
        if available < frame_len {
            return Err(Error::Truncated {
                frame: frames.len(),
                expected: frame_len,
                found: available,
            });
        }
        let payload = &bytes[start..start + frame_len];
        let y = plane_from_bytes(w, h, &payload[..luma_len]);
        let u = plane_from_bytes(cw, ch, &payload[luma_len..luma_len + chroma_len]);
        let v = plane_from_bytes(cw, ch, &payload[luma_len + chroma_len..]);
        frames.push(Frame::yuv420(w, h, y, u, v)?);
        pos = start + frame_len;
    }
    VideoSequence::new(frames, header.rate, source)
}

pub fn read_y4m(path: impl AsRef<Path>) -> Result<VideoSequence> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::file(path, e))?;
    parse_y4m_named(&bytes, &path.display().to_string())
}

/// Encodes a YUV420_8 sequence. Samples are rounded to the nearest code value.
pub fn serialize_y4m(seq: &VideoSequence) -> Result<Vec<u8>> {
    if seq.colorspace() != ColorSpace::Yuv420_8 {
        return Err(Error::Precondition(
            "Y4M output requires YUV420_8 frames".into(),
        ));
    }
    let mut out = format!(
        "YUV4MPEG2 W{} H{} F{} Ip A1:1 C420jpeg\n",
        seq.width(),
        seq.height(),
        seq.frame_rate()
    )
    .into_bytes();
    for frame in seq.frames() {
        out.extend_from_slice(b"FRAME\n");
        for plane in frame.planes() {
            out.extend(plane.data.iter().map(|&v| v.round().clamp(0.0, 255.0) as u8));
        }
    }
    Ok(out)
}

pub fn write_y4m(seq: &VideoSequence, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = serialize_y4m(seq)?;
    std::fs::write(path, bytes).map_err(|e| Error::file(path, e))
}
