//! Frame sequences on disk: numbered grayscale frames plus a key-value manifest.
//!
//! ```text
//! fps=60
//! scale_mm_per_px=0.25
//! count=600
//! width=256
//! height=256
//! frame=frame_000000.pgm
//! frame=frame_000001.pgm
//! ...
//! ```
//!
//! `frame=` lines are optional; without them frames `frame_%06d.pgm` for
//! `0..count` are read from the manifest's directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use image::{DynamicImage, GrayImage, ImageBuffer, Rgb, RgbImage as ImgRgb};
use rayon::prelude::*;
use thiserror::Error;
use vidvib_core::{Frame, FrameSequence, RgbImage};

pub const MANIFEST_NAME: &str = "manifest.txt";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        source: image::ImageError,
    },
    #[error("{path}: unsupported pixel format {format}, expected 8- or 16-bit grayscale")]
    PixelFormat { path: PathBuf, format: String },
    #[error("{path}: line {line}: {reason}")]
    Manifest {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("{path}: missing `{key}`")]
    MissingKey { path: PathBuf, key: &'static str },
    #[error("{path}: frame is {width}x{height}, expected {expected_width}x{expected_height}")]
    Dimensions {
        path: PathBuf,
        width: usize,
        height: usize,
        expected_width: usize,
        expected_height: usize,
    },
    #[error(transparent)]
    Sequence(#[from] vidvib_core::Error),
}

pub type Result<T> = std::result::Result<T, IoError>;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Parsed manifest contents.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub fps: f64,
    pub scale_mm_per_px: Option<f64>,
    pub count: usize,
    pub width: Option<usize>,
    pub height: Option<usize>,
    /// Frame paths relative to the manifest's directory, in sequence order.
    pub frames: Vec<String>,
}

pub fn frame_name(index: usize) -> String {
    format!("frame_{index:06}.pgm")
}

impl Manifest {
    pub fn parse(text: &str, path: &Path) -> Result<Manifest> {
        let bad = |line: usize, reason: String| IoError::Manifest {
            path: path.to_path_buf(),
            line,
            reason,
        };
        let (mut fps, mut scale, mut count, mut width, mut height) = (None, None, None, None, None);
        let mut frames = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(i + 1, format!("expected key=value, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let num = |v: &str| -> Result<f64> {
                v.parse::<f64>()
                    .map_err(|_| bad(i + 1, format!("`{key}` is not a number: `{v}`")))
            };
            let int = |v: &str| -> Result<usize> {
                v.parse::<usize>()
                    .map_err(|_| bad(i + 1, format!("`{key}` is not a count: `{v}`")))
            };
            match key {
                "fps" => fps = Some(num(value)?),
                "scale_mm_per_px" => {
                    scale = match value {
                        "" | "none" => None,
                        v => Some(num(v)?),
                    }
                }
                "count" => count = Some(int(value)?),
                "width" => width = Some(int(value)?),
                "height" => height = Some(int(value)?),
                "frame" => frames.push(value.to_string()),
                other => return Err(bad(i + 1, format!("unknown key `{other}`"))),
            }
        }
        let fps = fps.ok_or(IoError::MissingKey {
            path: path.to_path_buf(),
            key: "fps",
        })?;
        if !(fps.is_finite() && fps > 0.0) {
            return Err(bad(0, format!("fps must be positive, got {fps}")));
        }
        let count = match (count, frames.len()) {
            (Some(c), 0) => c,
            (Some(c), n) if c != n => {
                return Err(bad(0, format!("count={c} but {n} frame lines")));
            }
            (_, n) if n > 0 => n,
            _ => {
                return Err(IoError::MissingKey {
                    path: path.to_path_buf(),
                    key: "count",
                })
            }
        };
        if frames.is_empty() {
            frames = (0..count).map(frame_name).collect();
        }
        Ok(Manifest {
            fps,
            scale_mm_per_px: scale,
            count,
            width,
            height,
            frames,
        })
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "fps={}", self.fps);
        match self.scale_mm_per_px {
            Some(v) => {
                let _ = writeln!(s, "scale_mm_per_px={v}");
            }
            None => s.push_str("scale_mm_per_px=none\n"),
        }
        let _ = writeln!(s, "count={}", self.count);
        if let (Some(w), Some(h)) = (self.width, self.height) {
            let _ = writeln!(s, "width={w}\nheight={h}");
        }
        for f in &self.frames {
            let _ = writeln!(s, "frame={f}");
        }
        s
    }
}

/// Reads an 8- or 16-bit grayscale image as luminance in `[0, 1]`.
pub fn load_frame(path: &Path) -> Result<Frame> {
    let img = image::open(path).map_err(|source| match source {
        image::ImageError::IoError(e) => IoError::Io {
            path: path.to_path_buf(),
            source: e,
        },
        other => IoError::Image {
            path: path.to_path_buf(),
            source: other,
        },
    })?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data: Vec<f32> = match img {
        DynamicImage::ImageLuma8(buf) => buf.into_raw().iter().map(|&v| v as f32 / 255.0).collect(),
        DynamicImage::ImageLuma16(buf) => {
            buf.into_raw().iter().map(|&v| v as f32 / 65535.0).collect()
        }
        other => {
            return Err(IoError::PixelFormat {
                path: path.to_path_buf(),
                format: format!("{:?}", other.color()),
            })
        }
    };
    Ok(Frame::new(w, h, data)?)
}

/// 8-bit quantisation used for every saved frame.
pub fn quantize(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn to_gray_image(frame: &Frame) -> GrayImage {
    let raw = frame.data().iter().map(|&v| quantize(v)).collect();
    ImageBuffer::from_raw(frame.width() as u32, frame.height() as u32, raw)
        .expect("buffer matches frame size")
}

pub fn save_gray(frame: &Frame, path: &Path) -> Result<()> {
    to_gray_image(frame)
        .save(path)
        .map_err(|source| IoError::Image {
            path: path.to_path_buf(),
            source,
        })
}

pub fn save_rgb(img: &RgbImage, path: &Path) -> Result<()> {
    let raw: Vec<u8> = img.data.iter().flatten().copied().collect();
    let buf: ImgRgb = ImageBuffer::<Rgb<u8>, _>::from_raw(img.width as u32, img.height as u32, raw)
        .expect("buffer matches image size");
    buf.save(path).map_err(|source| IoError::Image {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads the sequence described by a manifest, in manifest order.
pub fn load_sequence(manifest_path: &Path) -> Result<FrameSequence> {
    let text = fs::read_to_string(manifest_path).map_err(io_err(manifest_path))?;
    let manifest = Manifest::parse(&text, manifest_path)?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let frames: Vec<Frame> = manifest
        .frames
        .par_iter()
        .map(|name| load_frame(&dir.join(name)))
        .collect::<Result<_>>()?;
    let (ew, eh) = match (manifest.width, manifest.height) {
        (Some(w), Some(h)) => (w, h),
        _ => (frames[0].width(), frames[0].height()),
    };
    for (f, name) in frames.iter().zip(&manifest.frames) {
        if (f.width(), f.height()) != (ew, eh) {
            return Err(IoError::Dimensions {
                path: dir.join(name),
                width: f.width(),
                height: f.height(),
                expected_width: ew,
                expected_height: eh,
            });
        }
    }
    Ok(FrameSequence::new(frames, manifest.fps, manifest.scale_mm_per_px)?)
}

/// Writes `frame_%06d.pgm` files and `manifest.txt` into `dir`, returning the
/// manifest path.
pub fn save_sequence(seq: &FrameSequence, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let names: Vec<String> = (0..seq.len()).map(frame_name).collect();
    seq.frames()
        .par_iter()
        .zip(names.par_iter())
        .try_for_each(|(f, name)| save_gray(f, &dir.join(name)))?;
    let manifest = Manifest {
        fps: seq.fps(),
        scale_mm_per_px: seq.scale_mm_per_px(),
        count: seq.len(),
        width: Some(seq.width()),
        height: Some(seq.height()),
        frames: names,
    };
    let path = dir.join(MANIFEST_NAME);
    fs::write(&path, manifest.render()).map_err(io_err(&path))?;
    Ok(path)
}

/// Luma of an 8-bit RGB pixel, for converting colour footage before saving it as
/// grayscale frames.
pub fn rgb_to_luminance(px: Rgb<u8>) -> f32 {
    vidvib_core::frame::luminance(
        px[0] as f32 / 255.0,
        px[1] as f32 / 255.0,
        px[2] as f32 / 255.0,
    )
}

/// Grayscale frame from an 8-bit colour image.
pub fn frame_from_rgb(img: &ImgRgb) -> Frame {
    let data = img.pixels().map(|&p| rgb_to_luminance(p)).collect();
    Frame::new(img.width() as usize, img.height() as usize, data).expect("size matches")
}
