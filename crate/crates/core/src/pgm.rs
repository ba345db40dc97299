//! Portable graymap I/O. Reads ASCII (P2) and binary (P5) files and writes
//! P5 with maxval 255.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PgmError {
    #[error("not a PGM file (magic `{0}`)")]
    Magic(String),
    #[error("truncated header")]
    Header,
    #[error("bad header field `{0}`")]
    Field(String),
    #[error("maxval {0} outside 1..=65535")]
    MaxVal(u32),
    #[error("expected {expected} samples, found {got}")]
    Samples { expected: usize, got: usize },
    #[error("sample {value} exceeds maxval {maxval}")]
    Range { value: u32, maxval: u32 },
}

/// 8-bit grayscale image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, fill: u8) -> Self {
        Self {
            width,
            height,
            pixels: vec![fill; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            pixels,
        }
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.pixels[y * self.width + x] = v;
    }

    /// Pixel at `(x, y)` with coordinates clamped into the image, which
    /// replicates the border.
    pub fn get_clamped(&self, x: isize, y: isize) -> u8 {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        self.get(cx, cy)
    }
}

/// Splits the header into whitespace-separated tokens, skipping `#`
/// comments, and returns the tokens and the offset just past the single
/// whitespace byte that ends the last one.
fn header_tokens(data: &[u8], count: usize) -> Result<(Vec<String>, usize), PgmError> {
    let mut tokens = Vec::new();
    let mut i = 0;
    while tokens.len() < count {
        while i < data.len() && (data[i].is_ascii_whitespace() || data[i] == b'#') {
            if data[i] == b'#' {
                while i < data.len() && data[i] != b'\n' {
                    i += 1;
                }
            } else {
                i += 1;
            }
        }
        let start = i;
        while i < data.len() && !data[i].is_ascii_whitespace() && data[i] != b'#' {
            i += 1;
        }
        if start == i {
            return Err(PgmError::Header);
        }
        tokens.push(String::from_utf8_lossy(&data[start..i]).into_owned());
    }
    if i >= data.len() && tokens[0] == "P5" {
        return Err(PgmError::Header);
    }
    Ok((tokens, i + 1))
}

fn field(s: &str) -> Result<u32, PgmError> {
    s.parse().map_err(|_| PgmError::Field(s.to_string()))
}

/// Parses a P2 or P5 image, rescaling samples to 0..=255.
pub fn read_pgm(data: &[u8]) -> Result<Image, PgmError> {
    let (tok, body) = header_tokens(data, 4)?;
    let magic = tok[0].as_str();
    if magic != "P2" && magic != "P5" {
        return Err(PgmError::Magic(magic.to_string()));
    }
    let width = field(&tok[1])? as usize;
    let height = field(&tok[2])? as usize;
    let maxval = field(&tok[3])?;
    if maxval == 0 || maxval > 65535 {
        return Err(PgmError::MaxVal(maxval));
    }
    let expected = width * height;
    let samples: Vec<u32> = if magic == "P5" {
        let bytes = &data[body.min(data.len())..];
        let wide = maxval > 255;
        let need = expected * if wide { 2 } else { 1 };
        if bytes.len() < need {
            return Err(PgmError::Samples {
                expected,
                got: bytes.len() / if wide { 2 } else { 1 },
            });
        }
        if wide {
            bytes[..need]
                .chunks(2)
                .map(|c| u32::from(c[0]) << 8 | u32::from(c[1]))
                .collect()
        } else {
            bytes[..need].iter().map(|&b| u32::from(b)).collect()
        }
    } else {
        let text = String::from_utf8_lossy(&data[body.min(data.len())..]);
        let vals = text
            .lines()
            .map(|l| l.split('#').next().unwrap())
            .flat_map(str::split_whitespace)
            .map(field)
            .collect::<Result<Vec<_>, _>>()?;
        if vals.len() != expected {
            return Err(PgmError::Samples {
                expected,
                got: vals.len(),
            });
        }
        vals
    };
    let pixels = samples
        .into_iter()
        .map(|v| {
            if v > maxval {
                Err(PgmError::Range { value: v, maxval })
            } else {
                Ok(((v * 255 + maxval / 2) / maxval) as u8)
            }
        })
        .collect::<Result<_, _>>()?;
    Ok(Image {
        width,
        height,
        pixels,
    })
}

/// Binary P5 with maxval 255.
pub fn write_pgm(img: &Image) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}
