//! 8-bit RGB frame type shared by renderers, storage, metrics, and models.
//!
//! Frames are stored losslessly at 8-bit depth; numeric consumers convert to
//! `[0,1]` floats. PNG round trips are bit-exact.

use ndarray::Array3;
use std::io::Cursor;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("frame dimensions {w}x{h} are invalid")]
    BadDimensions { w: usize, h: usize },
    #[error("pixel buffer length {got} does not match {w}x{h}x3")]
    BadBufferLength { got: usize, w: usize, h: usize },
    #[error("png decode: {0}")]
    PngDecode(String),
    #[error("png encode: {0}")]
    PngEncode(String),
    #[error("expected 8-bit RGB png, got {0}")]
    UnsupportedPng(String),
}

/// One rendered video frame: row-major 8-bit RGB.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl Frame {
    pub fn new(width: usize, height: usize) -> Self {
        Frame {
            width,
            height,
            data: vec![0; width * height * 3],
        }
    }

    pub fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Result<Self, FrameError> {
        if width == 0 || height == 0 {
            return Err(FrameError::BadDimensions { w: width, h: height });
        }
        if data.len() != width * height * 3 {
            return Err(FrameError::BadBufferLength {
                got: data.len(),
                w: width,
                h: height,
            });
        }
        Ok(Frame {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn raw(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// Convert to an (3, H, W) f64 array in [0, 1].
    pub fn to_chw_f64(&self) -> Array3<f64> {
        let (h, w) = (self.height, self.width);
        let mut out = Array3::zeros((3, h, w));
        for y in 0..h {
            for x in 0..w {
                let p = self.pixel(x, y);
                for c in 0..3 {
                    out[(c, y, x)] = f64::from(p[c]) / 255.0;
                }
            }
        }
        out
    }

    /// Quantize an (3, H, W) array in [0, 1] back to a frame.
    pub fn from_chw_f64(a: &Array3<f64>) -> Self {
        let (c, h, w) = a.dim();
        assert_eq!(c, 3, "expected 3 channels");
        let mut f = Frame::new(w, h);
        for y in 0..h {
            for x in 0..w {
                let rgb = [
                    quantize(a[(0, y, x)]),
                    quantize(a[(1, y, x)]),
                    quantize(a[(2, y, x)]),
                ];
                f.set_pixel(x, y, rgb);
            }
        }
        f
    }

    /// Box-average downsample by an integer factor (policy observations).
    pub fn downsample(&self, factor: usize) -> Frame {
        assert!(factor >= 1 && self.width % factor == 0 && self.height % factor == 0);
        let (w, h) = (self.width / factor, self.height / factor);
        let mut out = Frame::new(w, h);
        let n = (factor * factor) as u32;
        for y in 0..h {
            for x in 0..w {
                let mut acc = [0u32; 3];
                for dy in 0..factor {
                    for dx in 0..factor {
                        let p = self.pixel(x * factor + dx, y * factor + dy);
                        for c in 0..3 {
                            acc[c] += u32::from(p[c]);
                        }
                    }
                }
                out.set_pixel(x, y, [
                    ((acc[0] + n / 2) / n) as u8,
                    ((acc[1] + n / 2) / n) as u8,
                    ((acc[2] + n / 2) / n) as u8,
                ]);
            }
        }
        out
    }

    pub fn encode_png(&self) -> Result<Vec<u8>, FrameError> {
        let mut buf = Vec::new();
        let enc = image::codecs::png::PngEncoder::new(Cursor::new(&mut buf));
        image::ImageEncoder::write_image(
            enc,
            &self.data,
            self.width as u32,
            self.height as u32,
            image::ExtendedColorType::Rgb8,
        )
        .map_err(|e| FrameError::PngEncode(e.to_string()))?;
        Ok(buf)
    }

    pub fn decode_png(bytes: &[u8]) -> Result<Self, FrameError> {
        let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
            .map_err(|e| FrameError::PngDecode(e.to_string()))?;
        match img {
            image::DynamicImage::ImageRgb8(rgb) => {
                let (w, h) = (rgb.width() as usize, rgb.height() as usize);
                Frame::from_raw(w, h, rgb.into_raw())
            }
            other => Err(FrameError::UnsupportedPng(format!("{:?}", other.color()))),
        }
    }
}

#[inline]
fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// An episode's worth of frames for one channel.
pub type VideoClip = Vec<Frame>;
