//! Frame sequences on disk and their quaternion matrix view.

use std::fs;
use std::path::{Path, PathBuf};

use image::imageops::{self, FilterType};
use image::{GrayImage, Luma, Rgb, RgbImage};
use ndarray::{Array2, Array3};
use serde_json::{json, Value};

use crate::error::{shape_err, Error, Result};
use crate::quaternion::QuaternionMatrix;

/// `t` RGB frames of `m×n` pixels with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoTensor {
    frames: Vec<Array3<f64>>,
}

impl VideoTensor {
    /// Frames are `m×n×3` arrays of equal shape.
    pub fn new(frames: Vec<Array3<f64>>) -> Result<Self> {
        let Some(first) = frames.first() else {
            return Err(Error::Config("a video needs at least one frame".into()));
        };
        let dim = first.dim();
        if dim.2 != 3 {
            return Err(Error::Shape {
                op: "VideoTensor",
                expected: "3 channels".into(),
                got: dim.2.to_string(),
            });
        }
        if let Some(bad) = frames.iter().find(|f| f.dim() != dim) {
            return Err(shape_err(
                "VideoTensor",
                (dim.0, dim.1),
                (bad.dim().0, bad.dim().1),
            ));
        }
        Ok(Self { frames })
    }

    pub fn m(&self) -> usize {
        self.frames[0].dim().0
    }

    pub fn n(&self) -> usize {
        self.frames[0].dim().1
    }

    pub fn t(&self) -> usize {
        self.frames.len()
    }

    pub fn frames(&self) -> &[Array3<f64>] {
        &self.frames
    }

    pub fn frame(&self, l: usize) -> &Array3<f64> {
        &self.frames[l]
    }
}

/// One boolean `m×n` mask per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskSequence {
    frames: Vec<Array2<bool>>,
}

impl MaskSequence {
    pub fn new(frames: Vec<Array2<bool>>) -> Result<Self> {
        if let Some(first) = frames.first() {
            if let Some(bad) = frames.iter().find(|f| f.dim() != first.dim()) {
                return Err(shape_err("MaskSequence", first.dim(), bad.dim()));
            }
        }
        Ok(Self { frames })
    }

    pub fn frames(&self) -> &[Array2<bool>] {
        &self.frames
    }

    pub fn t(&self) -> usize {
        self.frames.len()
    }

    pub fn count(&self) -> usize {
        self.frames
            .iter()
            .map(|f| f.iter().filter(|&&b| b).count())
            .sum()
    }
}

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg"))
        .unwrap_or(false)
}

/// PNG/JPG files of `dir` in lexicographic file-name order.
pub fn list_frames(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut paths = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let path = entry.path();
        if path.is_file() && is_image(&path) {
            paths.push(path);
        }
    }
    paths.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    if paths.is_empty() {
        return Err(Error::NoFrames(dir.to_path_buf()));
    }
    Ok(paths)
}

fn open_rgb(path: &Path, resize: Option<(u32, u32)>) -> Result<RgbImage> {
    let img = image::open(path).map_err(|source| Error::Decode {
        path: path.to_path_buf(),
        source,
    })?;
    let rgb = img.to_rgb8();
    Ok(match resize {
        Some((w, h)) if rgb.dimensions() != (w, h) => {
            imageops::resize(&rgb, w, h, FilterType::Triangle)
        }
        _ => rgb,
    })
}

fn open_gray(path: &Path) -> Result<GrayImage> {
    let img = image::open(path).map_err(|source| Error::Decode {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(img.to_luma8())
}

pub fn rgb_to_array(img: &RgbImage) -> Array3<f64> {
    let (w, h) = img.dimensions();
    Array3::from_shape_fn((h as usize, w as usize, 3), |(i, j, c)| {
        f64::from(img.get_pixel(j as u32, i as u32)[c]) / 255.0
    })
}

/// Decodes every frame of `dir`, optionally resized (bilinear) to
/// `(width, height)`.
pub fn load_frames(dir: &Path, resize: Option<(u32, u32)>) -> Result<VideoTensor> {
    let mut frames = Vec::new();
    for path in list_frames(dir)? {
        let img = open_rgb(&path, resize)?;
        let arr = rgb_to_array(&img);
        if let Some(first) = frames.first() {
            let first: &Array3<f64> = first;
            if first.dim() != arr.dim() {
                return Err(Error::Shape {
                    op: "load_frames",
                    expected: format!("{}x{}", first.dim().1, first.dim().0),
                    got: format!("{}x{} in {}", arr.dim().1, arr.dim().0, path.display()),
                });
            }
        }
        frames.push(arr);
    }
    VideoTensor::new(frames)
}

/// Loads a single RGB image as an `m×n×3` array in `[0, 1]`.
pub fn load_image(path: &Path) -> Result<Array3<f64>> {
    Ok(rgb_to_array(&open_rgb(path, None)?))
}

/// Raw 8-bit gray frames of `dir`, e.g. ground-truth label maps.
pub fn load_gray_frames(dir: &Path) -> Result<Vec<Array2<u8>>> {
    list_frames(dir)?
        .iter()
        .map(|p| {
            let img = open_gray(p)?;
            let (w, h) = img.dimensions();
            Ok(Array2::from_shape_fn((h as usize, w as usize), |(i, j)| {
                img.get_pixel(j as u32, i as u32)[0]
            }))
        })
        .collect()
}

/// Masks stored as gray images; values above 127 are foreground.
pub fn load_masks(dir: &Path) -> Result<MaskSequence> {
    MaskSequence::new(
        load_gray_frames(dir)?
            .into_iter()
            .map(|f| f.mapv(|v| v > 127))
            .collect(),
    )
}

/// Pure `mn×t` matrix: frame `l` vectorized column-major into column `l`,
/// R, G, B in the `i`, `j`, `k` planes.
pub fn to_quaternion(v: &VideoTensor) -> QuaternionMatrix {
    let (m, n, t) = (v.m(), v.n(), v.t());
    let mut q = QuaternionMatrix::zeros(m * n, t);
    for c in 0..3 {
        let mut plane = q.part_mut(c + 1);
        for (l, f) in v.frames.iter().enumerate() {
            for j in 0..n {
                for i in 0..m {
                    plane[[i + j * m, l]] = f[[i, j, c]];
                }
            }
        }
    }
    q
}

/// Inverse of [`to_quaternion`]; values are copied unchanged.
pub fn from_quaternion(q: &QuaternionMatrix, m: usize, n: usize) -> Result<VideoTensor> {
    if q.nrows() != m * n {
        return Err(Error::Shape {
            op: "from_quaternion",
            expected: format!("{} rows", m * n),
            got: q.nrows().to_string(),
        });
    }
    let frames = (0..q.ncols())
        .map(|l| Array3::from_shape_fn((m, n, 3), |(i, j, c)| q.part(c + 1)[[i + j * m, l]]))
        .collect();
    VideoTensor::new(frames)
}

/// Foreground pixels from `fg` where the mask is set, `bg` elsewhere.
pub fn composite(mask: &MaskSequence, fg: &VideoTensor, bg: &Array3<f64>) -> Result<VideoTensor> {
    let (m, n) = (fg.m(), fg.n());
    if mask.t() != fg.t() {
        return Err(Error::Shape {
            op: "composite",
            expected: format!("{} masks", fg.t()),
            got: mask.t().to_string(),
        });
    }
    if bg.dim() != (m, n, 3) {
        return Err(shape_err("composite", (m, n), (bg.dim().0, bg.dim().1)));
    }
    if let Some(bad) = mask.frames.iter().find(|f| f.dim() != (m, n)) {
        return Err(shape_err("composite", (m, n), bad.dim()));
    }
    let frames = fg
        .frames
        .iter()
        .zip(&mask.frames)
        .map(|(f, k)| {
            Array3::from_shape_fn((m, n, 3), |(i, j, c)| {
                if k[[i, j]] {
                    f[[i, j, c]]
                } else {
                    bg[[i, j, c]]
                }
            })
        })
        .collect();
    VideoTensor::new(frames)
}

fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn write_png<P: image::Pixel<Subpixel = u8> + image::PixelWithColorType>(
    img: &image::ImageBuffer<P, Vec<u8>>,
    path: &Path,
) -> Result<()> {
    img.save(path).map_err(|source| Error::Encode {
        path: path.to_path_buf(),
        source,
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

pub fn frame_name(l: usize) -> String {
    format!("{:04}.png", l + 1)
}

/// Writes `0001.png…` into `dir`, mapping each value through `encode` and
/// clamping to 8 bits.
pub fn save_video(v: &VideoTensor, dir: &Path, encode: impl Fn(f64) -> f64) -> Result<()> {
    create_dir(dir)?;
    for (l, f) in v.frames.iter().enumerate() {
        let (m, n, _) = f.dim();
        let img = RgbImage::from_fn(n as u32, m as u32, |x, y| {
            let (i, j) = (y as usize, x as usize);
            Rgb([0, 1, 2].map(|c| to_u8(encode(f[[i, j, c]]))))
        });
        write_png(&img, &dir.join(frame_name(l)))?;
    }
    Ok(())
}

/// Writes masks as 8-bit gray PNGs with values 0 or 255.
pub fn save_masks(mask: &MaskSequence, dir: &Path) -> Result<()> {
    create_dir(dir)?;
    for (l, f) in mask.frames.iter().enumerate() {
        let (m, n) = f.dim();
        let img = GrayImage::from_fn(n as u32, m as u32, |x, y| {
            Luma([if f[[y as usize, x as usize]] { 255 } else { 0 }])
        });
        write_png(&img, &dir.join(frame_name(l)))?;
    }
    Ok(())
}

/// Offset used for the signed components (`v·0.5 + 0.5`).
pub const SIGNED_OFFSET: f64 = 0.5;
pub const SIGNED_SCALE: f64 = 0.5;

/// Everything a decomposition run writes to disk.
#[derive(Debug, Clone)]
pub struct ComponentVideos {
    pub background: VideoTensor,
    pub sparse: VideoTensor,
    pub noise: VideoTensor,
    pub target: VideoTensor,
    pub mask: MaskSequence,
}

/// Writes `background/`, `mask/`, `sparse/`, `noise/`, `target/` and
/// `manifest.json`. Keys of `extra` (an object) are merged into the
/// manifest.
pub fn save_outputs(out: &ComponentVideos, dir: &Path, extra: &Value) -> Result<()> {
    create_dir(dir)?;
    let signed = |v: f64| v * SIGNED_SCALE + SIGNED_OFFSET;
    save_video(&out.background, &dir.join("background"), |v| v)?;
    save_video(&out.target, &dir.join("target"), |v| v)?;
    save_video(&out.sparse, &dir.join("sparse"), signed)?;
    save_video(&out.noise, &dir.join("noise"), signed)?;
    save_masks(&out.mask, &dir.join("mask"))?;

    let bg = &out.background;
    let mut manifest = json!({
        "encoding": {
            "background": "clamp",
            "target": "clamp",
            "sparse": "offset",
            "noise": "offset",
            "mask": "binary",
        },
        "offset": SIGNED_OFFSET,
        "scale": SIGNED_SCALE,
        "frame_count": bg.t(),
        "dims": { "height": bg.m(), "width": bg.n() },
    });
    if let (Some(obj), Some(more)) = (manifest.as_object_mut(), extra.as_object()) {
        for (k, v) in more {
            obj.insert(k.clone(), v.clone());
        }
    }
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("json value serializes");
    fs::write(&path, text).map_err(|source| Error::Io { path, source })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_video(seed: u64, m: usize, n: usize, t: usize) -> VideoTensor {
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        VideoTensor::new(
            (0..t)
                .map(|_| Array3::from_shape_fn((m, n, 3), |_| r.random::<f64>()))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn quaternion_round_trip() {
        let v = random_video(1, 5, 4, 3);
        let q = to_quaternion(&v);
        assert!(q.is_pure());
        assert_eq!(from_quaternion(&q, 5, 4).unwrap(), v);
    }

    #[test]
    fn single_pixel_layout() {
        let mut f = Array3::zeros((1, 1, 3));
        f[[0, 0, 0]] = 0.1;
        f[[0, 0, 1]] = 0.2;
        f[[0, 0, 2]] = 0.3;
        let q = to_quaternion(&VideoTensor::new(vec![f]).unwrap());
        assert_eq!(q.get(0, 0), crate::Quaternion::new(0.0, 0.1, 0.2, 0.3));
    }

    #[test]
    fn column_major_vectorization() {
        let mut f = Array3::zeros((2, 3, 3));
        f[[1, 0, 0]] = 1.0;
        f[[0, 1, 0]] = 2.0;
        let q = to_quaternion(&VideoTensor::new(vec![f]).unwrap());
        assert_eq!(q.im_i()[[1, 0]], 1.0);
        assert_eq!(q.im_i()[[2, 0]], 2.0);
    }

    #[test]
    fn rejects_mixed_frames() {
        let a = Array3::zeros((2, 2, 3));
        let b = Array3::zeros((2, 3, 3));
        assert!(VideoTensor::new(vec![a, b]).is_err());
        assert!(VideoTensor::new(vec![]).is_err());
    }

    #[test]
    fn composite_selection() {
        let fg = random_video(2, 4, 4, 2);
        let bg = Array3::from_elem((4, 4, 3), 0.25);
        let empty = MaskSequence::new(vec![Array2::from_elem((4, 4), false); 2]).unwrap();
        let out = composite(&empty, &fg, &bg).unwrap();
        assert!(out.frames().iter().all(|f| f == bg));
        let full = MaskSequence::new(vec![Array2::from_elem((4, 4), true); 2]).unwrap();
        assert_eq!(composite(&full, &fg, &bg).unwrap(), fg);
        let bad = MaskSequence::new(vec![Array2::from_elem((4, 4), true); 3]).unwrap();
        assert!(composite(&bad, &fg, &bg).is_err());
    }
}
