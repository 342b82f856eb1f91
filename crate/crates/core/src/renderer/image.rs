use std::fs::File;
use std::io::{BufReader, BufWriter, Cursor, Write};
use std::path::Path;

use png::{BitDepth, ColorType, Decoder, Encoder, Transformations};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: PNG decode failed: {message}")]
    Decode { path: String, message: String },
    #[error("PNG encode failed: {0}")]
    Encode(String),
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    Dimensions(usize, usize, usize, usize),
}

/// 8-bit RGB raster, row-major, row 0 at the top.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, pixels: vec![0; width * height * 3] }
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn set(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = 3 * (y * self.width + x);
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Image {
        let mut out = Image::new(w, h);
        for y in 0..h {
            let src = 3 * ((y0 + y) * self.width + x0);
            out.pixels[3 * y * w..3 * (y + 1) * w].copy_from_slice(&self.pixels[src..src + 3 * w]);
        }
        out
    }

    pub fn to_png(&self) -> Result<Vec<u8>, ImageError> {
        encode(&self.pixels, self.width, self.height, ColorType::Rgb)
    }

    pub fn write_png(&self, path: &Path) -> Result<(), ImageError> {
        write_file(path, &self.to_png()?)
    }

    /// Reads any 8-bit or 16-bit PNG, converting gray to RGB and dropping
    /// alpha.
    pub fn read_png(path: &Path) -> Result<Image, ImageError> {
        let (w, h, channels, data) = decode(path)?;
        let mut img = Image::new(w, h);
        for i in 0..w * h {
            let px = &data[i * channels..(i + 1) * channels];
            let rgb = if channels >= 3 { [px[0], px[1], px[2]] } else { [px[0]; 3] };
            img.pixels[3 * i..3 * i + 3].copy_from_slice(&rgb);
        }
        Ok(img)
    }
}

/// Binary raster packed 64 pixels per word, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ChangeMask {
    pub width: usize,
    pub height: usize,
    bits: Vec<u64>,
}

impl ChangeMask {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, bits: vec![0; (width * height).div_ceil(64)] }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut m = Self::new(width, height);
        for y in 0..height {
            for x in 0..width {
                if f(x, y) {
                    m.set(x, y, true);
                }
            }
        }
        m
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        let i = y * self.width + x;
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        let i = y * self.width + x;
        if value {
            self.bits[i / 64] |= 1 << (i % 64);
        } else {
            self.bits[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|w| *w == 0)
    }

    pub fn words(&self) -> &[u64] {
        &self.bits
    }

    fn check_dims(&self, other: &ChangeMask) -> Result<(), ImageError> {
        if (self.width, self.height) != (other.width, other.height) {
            return Err(ImageError::Dimensions(self.width, self.height, other.width, other.height));
        }
        Ok(())
    }

    /// `|self ∩ other|`.
    pub fn intersection_count(&self, other: &ChangeMask) -> Result<usize, ImageError> {
        self.check_dims(other)?;
        Ok(self.bits.iter().zip(&other.bits).map(|(a, b)| (a & b).count_ones() as usize).sum())
    }

    /// `|self ∪ other|`.
    pub fn union_count(&self, other: &ChangeMask) -> Result<usize, ImageError> {
        self.check_dims(other)?;
        Ok(self.bits.iter().zip(&other.bits).map(|(a, b)| (a | b).count_ones() as usize).sum())
    }

    /// Pixels set in `self` but not in `other`.
    pub fn difference_count(&self, other: &ChangeMask) -> Result<usize, ImageError> {
        self.check_dims(other)?;
        Ok(self.bits.iter().zip(&other.bits).map(|(a, b)| (a & !b).count_ones() as usize).sum())
    }

    /// Morphological dilation with the 3×3 square.
    pub fn dilate(&self) -> ChangeMask {
        ChangeMask::from_fn(self.width, self.height, |x, y| {
            let (x0, x1) = (x.saturating_sub(1), (x + 1).min(self.width - 1));
            let (y0, y1) = (y.saturating_sub(1), (y + 1).min(self.height - 1));
            (y0..=y1).any(|yy| (x0..=x1).any(|xx| self.get(xx, yy)))
        })
    }

    /// Pixels whose RGB values differ between two images.
    pub fn diff(a: &Image, b: &Image) -> Result<ChangeMask, ImageError> {
        if (a.width, a.height) != (b.width, b.height) {
            return Err(ImageError::Dimensions(a.width, a.height, b.width, b.height));
        }
        Ok(ChangeMask::from_fn(a.width, a.height, |x, y| a.get(x, y) != b.get(x, y)))
    }

    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> ChangeMask {
        ChangeMask::from_fn(w, h, |x, y| self.get(x0 + x, y0 + y))
    }

    /// Gray PNG with values {0, 255}.
    pub fn to_png(&self) -> Result<Vec<u8>, ImageError> {
        let mut gray = vec![0u8; self.width * self.height];
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    gray[y * self.width + x] = 255;
                }
            }
        }
        encode(&gray, self.width, self.height, ColorType::Grayscale)
    }

    pub fn write_png(&self, path: &Path) -> Result<(), ImageError> {
        write_file(path, &self.to_png()?)
    }

    /// Reads a PNG mask; a pixel is set when its first channel is ≥ 128.
    pub fn read_png(path: &Path) -> Result<ChangeMask, ImageError> {
        let gray = GrayImage::read_png(path)?;
        Ok(ChangeMask::from_fn(gray.width, gray.height, |x, y| gray.values[y * gray.width + x] >= 128))
    }
}

/// Single-channel 8-bit raster, used for confidence maps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub values: Vec<u8>,
}

impl GrayImage {
    /// Reads any PNG, keeping the first channel.
    pub fn read_png(path: &Path) -> Result<GrayImage, ImageError> {
        let (w, h, channels, data) = decode(path)?;
        Ok(GrayImage { width: w, height: h, values: (0..w * h).map(|i| data[i * channels]).collect() })
    }

    pub fn write_png(&self, path: &Path) -> Result<(), ImageError> {
        write_file(path, &encode(&self.values, self.width, self.height, ColorType::Grayscale)?)
    }
}

fn encode(data: &[u8], width: usize, height: usize, color: ColorType) -> Result<Vec<u8>, ImageError> {
    let mut out = Vec::new();
    {
        let mut enc = Encoder::new(Cursor::new(&mut out), width as u32, height as u32);
        enc.set_color(color);
        enc.set_depth(BitDepth::Eight);
        let mut w = enc.write_header().map_err(|e| ImageError::Encode(e.to_string()))?;
        w.write_image_data(data).map_err(|e| ImageError::Encode(e.to_string()))?;
        w.finish().map_err(|e| ImageError::Encode(e.to_string()))?;
    }
    Ok(out)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), ImageError> {
    let io = |source| ImageError::Io { path: path.display().to_string(), source };
    let mut f = BufWriter::new(File::create(path).map_err(io)?);
    f.write_all(bytes).map_err(io)?;
    f.flush().map_err(io)
}

fn decode(path: &Path) -> Result<(usize, usize, usize, Vec<u8>), ImageError> {
    let p = path.display().to_string();
    let file = File::open(path).map_err(|source| ImageError::Io { path: p.clone(), source })?;
    let mut dec = Decoder::new(BufReader::new(file));
    dec.set_transformations(Transformations::normalize_to_color8());
    let err = |e: png::DecodingError| ImageError::Decode { path: p.clone(), message: e.to_string() };
    let mut reader = dec.read_info().map_err(err)?;
    let size = reader.output_buffer_size().ok_or_else(|| ImageError::Decode {
        path: p.clone(),
        message: "image too large".into(),
    })?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(err)?;
    let channels = info.color_type.samples();
    let (w, h) = (info.width as usize, info.height as usize);
    // Rows may be padded to `line_size`; repack tightly.
    let mut data = Vec::with_capacity(w * h * channels);
    for row in buf.chunks(info.line_size).take(h) {
        data.extend_from_slice(&row[..w * channels]);
    }
    Ok((w, h, channels, data))
}
