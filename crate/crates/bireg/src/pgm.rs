//! Grayscale Netpbm images: P5 (binary) and P2 (ASCII) input, P5 output.

use bireg_core::Pixel;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PgmError {
    #[error("not a grayscale PGM (magic {0:?})")]
    BadMagic(String),
    #[error("malformed header: {0}")]
    Header(String),
    #[error("image has zero width or height")]
    ZeroDimension,
    #[error("expected {expected} samples, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("sample {value} exceeds maxval {maxval}")]
    SampleRange { value: u32, maxval: u32 },
    #[error("{0} values for a {1}x{2} image")]
    SizeMismatch(usize, usize, usize),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub maxval: u32,
    /// Row-major samples in `0..=maxval`.
    pub samples: Vec<u16>,
}

/// Samples below this (on a 0..=255 scale) are dark.
pub const DARK_THRESHOLD: u32 = 128;

struct Tokens<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.data.get(self.pos) {
            if b == b'#' {
                while self.data.get(self.pos).is_some_and(|&c| c != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32, PgmError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.data.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.data[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| PgmError::Header(format!("expected {what}")))
    }
}

pub fn parse_pgm(data: &[u8]) -> Result<GrayImage, PgmError> {
    let magic = data.get(..2).ok_or_else(|| PgmError::BadMagic(String::from_utf8_lossy(data).into_owned()))?;
    let binary = match magic {
        b"P5" => true,
        b"P2" => false,
        other => return Err(PgmError::BadMagic(String::from_utf8_lossy(other).into_owned())),
    };
    let mut tok = Tokens { data, pos: 2 };
    let width = tok.number("width")? as usize;
    let height = tok.number("height")? as usize;
    let maxval = tok.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(PgmError::ZeroDimension);
    }
    if maxval == 0 || maxval > 65535 {
        return Err(PgmError::Header(format!("maxval {maxval} outside 1..=65535")));
    }
    let n = width * height;
    let mut samples = Vec::with_capacity(n);
    if binary {
        // exactly one whitespace byte separates the header from the raster
        let start = tok.pos + 1;
        let wide = maxval > 255;
        let need = if wide { 2 * n } else { n };
        let raster = data.get(start..).unwrap_or(&[]);
        if raster.len() < need {
            return Err(PgmError::Truncated { expected: n, found: if wide { raster.len() / 2 } else { raster.len() } });
        }
        for k in 0..n {
            let v = if wide { u16::from_be_bytes([raster[2 * k], raster[2 * k + 1]]) } else { raster[k] as u16 };
            samples.push(v);
        }
    } else {
        for k in 0..n {
            tok.skip_space_and_comments();
            if tok.pos >= data.len() {
                return Err(PgmError::Truncated { expected: n, found: k });
            }
            samples.push(tok.number("sample")? as u16);
        }
    }
    if let Some(&v) = samples.iter().find(|&&v| v as u32 > maxval) {
        return Err(PgmError::SampleRange { value: v as u32, maxval });
    }
    Ok(GrayImage { width, height, maxval, samples })
}

impl GrayImage {
    /// Rows of pixels; a sample is dark when `255 * sample / maxval < 128`.
    pub fn threshold(&self) -> Vec<Vec<Pixel>> {
        self.samples
            .chunks(self.width)
            .map(|row| {
                row.iter()
                    .map(|&s| if (s as u32) * 255 < DARK_THRESHOLD * self.maxval { Pixel::Dark } else { Pixel::White })
                    .collect()
            })
            .collect()
    }
}

/// `-1 -> 0`, `+1 -> 255`, affine in between with round-half-up, clamped.
pub fn quantize(y: f64) -> u8 {
    let scaled = ((y + 1.0) / 2.0 * 255.0 + 0.5).floor();
    scaled.clamp(0.0, 255.0) as u8
}

/// Binary PGM bytes for row-major values in `[-1, 1]`.
pub fn render_pgm(width: usize, height: usize, values: &[f64]) -> Result<Vec<u8>, PgmError> {
    if width == 0 || height == 0 {
        return Err(PgmError::ZeroDimension);
    }
    if values.len() != width * height {
        return Err(PgmError::SizeMismatch(values.len(), width, height));
    }
    if let Some(k) = values.iter().position(|v| !v.is_finite()) {
        return Err(PgmError::NonFinite(k));
    }
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(values.iter().map(|&y| quantize(y)));
    Ok(out)
}

/// Binary PGM of a pixel pattern: dark `0`, white `255`.
pub fn render_pattern(rows: &[Vec<Pixel>]) -> Result<Vec<u8>, PgmError> {
    let height = rows.len();
    let width = rows.first().map_or(0, Vec::len);
    let values: Vec<f64> = rows.iter().flatten().map(|p| if *p == Pixel::Dark { -1.0 } else { 1.0 }).collect();
    render_pgm(width, height, &values)
}
