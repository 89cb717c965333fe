use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ColorType, DynamicImage, ExtendedColorType, ImageEncoder, ImageFormat};

use super::{AugmentError, Result};

/// 8-bit image, row-major, channels interleaved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: u32,
    height: u32,
    channels: u8,
    samples: Vec<u8>,
}

impl RasterImage {
    /// `channels` is 1 (gray) or 3 (RGB).
    pub fn new(width: u32, height: u32, channels: u8, samples: Vec<u8>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(AugmentError::InvalidImage(format!("{channels} channels; expected 1 or 3")));
        }
        if width == 0 || height == 0 {
            return Err(AugmentError::InvalidImage(format!("empty frame {width}x{height}")));
        }
        let expected = width as usize * height as usize * channels as usize;
        if samples.len() != expected {
            return Err(AugmentError::InvalidImage(format!(
                "{} samples for a {width}x{height}x{channels} image (expected {expected})",
                samples.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            samples,
        })
    }

    pub fn filled(width: u32, height: u32, channels: u8, value: u8) -> Result<Self> {
        let n = width as usize * height as usize * channels as usize;
        Self::new(width, height, channels, vec![value; n])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<u8> {
        self.samples
    }

    pub fn get(&self, x: u32, y: u32, channel: u8) -> u8 {
        self.samples[self.offset(x, y) + channel as usize]
    }

    pub(crate) fn offset(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * self.channels as usize
    }

    /// Reads PNG, PGM or PPM. Alpha is dropped; 16-bit input is reduced to
    /// 8 bits; gray stays single-channel.
    pub fn read(path: &Path) -> Result<Self> {
        let img = image::open(path).map_err(|e| AugmentError::image(path, e))?;
        let gray = matches!(
            img.color(),
            ColorType::L8 | ColorType::La8 | ColorType::L16 | ColorType::La16
        );
        let (w, h) = (img.width(), img.height());
        if gray {
            Self::new(w, h, 1, img.into_luma8().into_raw())
        } else {
            Self::new(w, h, 3, img.into_rgb8().into_raw())
        }
    }

    /// Writes by extension: `.png`, or binary `.pgm` / `.ppm` (also `.pnm`).
    pub fn write(&self, path: &Path) -> Result<()> {
        let color = if self.channels == 1 {
            ExtendedColorType::L8
        } else {
            ExtendedColorType::Rgb8
        };
        let format = ImageFormat::from_path(path).map_err(|e| AugmentError::image(path, e))?;
        match format {
            ImageFormat::Png => self
                .to_dynamic()
                .save_with_format(path, ImageFormat::Png)
                .map_err(|e| AugmentError::image(path, e)),
            ImageFormat::Pnm => {
                let file = File::create(path).map_err(|e| AugmentError::Io {
                    path: path.display().to_string(),
                    source: e,
                })?;
                let subtype = if self.channels == 1 {
                    PnmSubtype::Graymap(SampleEncoding::Binary)
                } else {
                    PnmSubtype::Pixmap(SampleEncoding::Binary)
                };
                PnmEncoder::new(BufWriter::new(file))
                    .with_subtype(subtype)
                    .write_image(&self.samples, self.width, self.height, color)
                    .map_err(|e| AugmentError::image(path, e))
            }
            other => Err(AugmentError::InvalidImage(format!(
                "{}: unsupported output format {other:?}",
                path.display()
            ))),
        }
    }

    fn to_dynamic(&self) -> DynamicImage {
        let (w, h, s) = (self.width, self.height, self.samples.clone());
        if self.channels == 1 {
            DynamicImage::ImageLuma8(image::GrayImage::from_raw(w, h, s).expect("length checked at construction"))
        } else {
            DynamicImage::ImageRgb8(image::RgbImage::from_raw(w, h, s).expect("length checked at construction"))
        }
    }
}
