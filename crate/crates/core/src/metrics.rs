//! Background-estimation and detection scores on the 8-bit gray scale.

use std::io::Write;
use std::path::Path;

use ndarray::{Array2, Array3, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::LUMA;
use crate::video::MaskSequence;

/// Gray level above which a pixel counts as an error pixel.
pub const DEFAULT_TAU: f64 = 20.0;
/// Value reported for identical images.
pub const PSNR_CAP: f64 = 99.0;
pub const MS_SSIM_WEIGHTS: [f64; 5] = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
/// Luma and chroma weights of the color quality measure.
pub const CQM_WEIGHTS: (f64, f64) = (0.9449, 0.0551);

/// Ground-truth label values; anything else is left out of the counts.
pub const GT_NEGATIVE: u8 = 0;
pub const GT_POSITIVE: u8 = 255;

fn same_shape(op: &'static str, a: &[usize], b: &[usize]) -> Result<()> {
    if a != b {
        return Err(Error::Shape {
            op,
            expected: format!("{a:?}"),
            got: format!("{b:?}"),
        });
    }
    Ok(())
}

/// BT.601 luma of an RGB image in `[0, 1]`, scaled to `[0, 255]`.
pub fn gray255(img: &Array3<f64>) -> Array2<f64> {
    let (m, n, _) = img.dim();
    Array2::from_shape_fn((m, n), |(i, j)| {
        255.0 * (LUMA[0] * img[[i, j, 0]] + LUMA[1] * img[[i, j, 1]] + LUMA[2] * img[[i, j, 2]])
    })
}

fn check_images(op: &'static str, a: &Array3<f64>, b: &Array3<f64>) -> Result<()> {
    same_shape(op, a.shape(), b.shape())
}

/// Average gray-level error.
pub fn age(pred: &Array3<f64>, gt: &Array3<f64>) -> Result<f64> {
    check_images("age", pred, gt)?;
    let (a, b) = (gray255(pred), gray255(gt));
    Ok(Zip::from(&a)
        .and(&b)
        .fold(0.0, |acc, x, y| acc + (x - y).abs())
        / a.len() as f64)
}

/// Percentages of error pixels and of clustered error pixels, whose
/// in-bounds 4-neighbors are all error pixels too.
pub fn peps_pceps(pred: &Array3<f64>, gt: &Array3<f64>, tau: f64) -> Result<(f64, f64)> {
    check_images("peps_pceps", pred, gt)?;
    let (a, b) = (gray255(pred), gray255(gt));
    let err = Zip::from(&a)
        .and(&b)
        .map_collect(|x, y| (x - y).abs() > tau);
    let (m, n) = err.dim();
    let mut eps = 0usize;
    let mut ceps = 0usize;
    for i in 0..m {
        for j in 0..n {
            if !err[[i, j]] {
                continue;
            }
            eps += 1;
            let up = i == 0 || err[[i - 1, j]];
            let down = i + 1 == m || err[[i + 1, j]];
            let left = j == 0 || err[[i, j - 1]];
            let right = j + 1 == n || err[[i, j + 1]];
            if up && down && left && right {
                ceps += 1;
            }
        }
    }
    let total = (m * n) as f64;
    Ok((100.0 * eps as f64 / total, 100.0 * ceps as f64 / total))
}

fn psnr_from_mse(mse: f64) -> f64 {
    if mse <= 0.0 {
        return PSNR_CAP;
    }
    (10.0 * (255.0 * 255.0 / mse).log10()).min(PSNR_CAP)
}

fn mse(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    Zip::from(a)
        .and(b)
        .fold(0.0, |acc, x, y| acc + (x - y) * (x - y))
        / a.len() as f64
}

/// Gray-level PSNR in dB, capped at [`PSNR_CAP`].
pub fn psnr(pred: &Array3<f64>, gt: &Array3<f64>) -> Result<f64> {
    check_images("psnr", pred, gt)?;
    Ok(psnr_from_mse(mse(&gray255(pred), &gray255(gt))))
}

fn gaussian_window() -> Vec<f64> {
    let half = (SSIM_WINDOW / 2) as f64;
    let w: Vec<f64> = (0..SSIM_WINDOW)
        .map(|k| (-((k as f64 - half).powi(2)) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp())
        .collect();
    let sum: f64 = w.iter().sum();
    w.into_iter().map(|v| v / sum).collect()
}

/// Separable "valid" filtering with the SSIM window.
fn filter_valid(x: &Array2<f64>, w: &[f64]) -> Array2<f64> {
    let (m, n) = x.dim();
    let k = w.len();
    let (om, on) = (m + 1 - k, n + 1 - k);
    let mut rows = Array2::zeros((om, n));
    for i in 0..om {
        for j in 0..n {
            rows[[i, j]] = (0..k).map(|d| w[d] * x[[i + d, j]]).sum::<f64>();
        }
    }
    let mut out = Array2::zeros((om, on));
    for i in 0..om {
        for j in 0..on {
            out[[i, j]] = (0..k).map(|d| w[d] * rows[[i, j + d]]).sum::<f64>();
        }
    }
    out
}

/// Mean luminance and contrast-structure terms of single-scale SSIM.
fn ssim_terms(a: &Array2<f64>, b: &Array2<f64>, w: &[f64]) -> (f64, f64) {
    let c1 = (0.01f64 * 255.0).powi(2);
    let c2 = (0.03f64 * 255.0).powi(2);
    let mu_a = filter_valid(a, w);
    let mu_b = filter_valid(b, w);
    let aa = filter_valid(&(a * a), w);
    let bb = filter_valid(&(b * b), w);
    let ab = filter_valid(&(a * b), w);
    let mut lum = 0.0;
    let mut cs = 0.0;
    Zip::from(&mu_a)
        .and(&mu_b)
        .and(&aa)
        .and(&bb)
        .and(&ab)
        .for_each(|&ma, &mb, &saa, &sbb, &sab| {
            let va = saa - ma * ma;
            let vb = sbb - mb * mb;
            let cov = sab - ma * mb;
            lum += (2.0 * ma * mb + c1) / (ma * ma + mb * mb + c1);
            cs += (2.0 * cov + c2) / (va + vb + c2);
        });
    let count = mu_a.len() as f64;
    (lum / count, cs / count)
}

/// 2×2 average pooling; an odd trailing row or column is dropped.
fn downsample(x: &Array2<f64>) -> Array2<f64> {
    let (m, n) = (x.nrows() / 2, x.ncols() / 2);
    Array2::from_shape_fn((m, n), |(i, j)| {
        0.25 * (x[[2 * i, 2 * j]]
            + x[[2 * i + 1, 2 * j]]
            + x[[2 * i, 2 * j + 1]]
            + x[[2 * i + 1, 2 * j + 1]])
    })
}

/// Number of scales used for an image whose short side is `min_side`.
pub fn ms_ssim_scales(min_side: usize) -> usize {
    let mut scales = 0;
    let mut side = min_side;
    while scales < MS_SSIM_WEIGHTS.len() && side >= SSIM_WINDOW {
        scales += 1;
        side /= 2;
    }
    scales
}

/// Single-scale SSIM of two gray images on the 0–255 scale.
pub fn ssim_gray(a: &Array2<f64>, b: &Array2<f64>) -> Result<f64> {
    same_shape("ssim", a.shape(), b.shape())?;
    if a.nrows().min(a.ncols()) < SSIM_WINDOW {
        return Err(Error::Size(format!(
            "{}x{} is smaller than the SSIM window",
            a.nrows(),
            a.ncols()
        )));
    }
    let (l, cs) = ssim_terms(a, b, &gaussian_window());
    Ok(l * cs)
}

/// Multi-scale SSIM of two gray images on the 0–255 scale. Images too small
/// for five scales use as many as fit, with the leading exponents
/// renormalized to sum to one. Negative contrast terms count as zero.
pub fn ms_ssim_gray(a: &Array2<f64>, b: &Array2<f64>) -> Result<f64> {
    same_shape("ms_ssim", a.shape(), b.shape())?;
    let scales = ms_ssim_scales(a.nrows().min(a.ncols()));
    if scales == 0 {
        return Err(Error::Size(format!(
            "{}x{} is smaller than the SSIM window",
            a.nrows(),
            a.ncols()
        )));
    }
    let total: f64 = MS_SSIM_WEIGHTS[..scales].iter().sum();
    let w = gaussian_window();
    let (mut x, mut y) = (a.clone(), b.clone());
    let mut out = 1.0;
    for (s, &beta) in MS_SSIM_WEIGHTS[..scales].iter().enumerate() {
        let (l, cs) = ssim_terms(&x, &y, &w);
        let exp = beta / total;
        out *= cs.max(0.0).powf(exp);
        if s + 1 == scales {
            out *= l.max(0.0).powf(exp);
        } else {
            x = downsample(&x);
            y = downsample(&y);
        }
    }
    Ok(out.clamp(0.0, 1.0))
}

pub fn ms_ssim(pred: &Array3<f64>, gt: &Array3<f64>) -> Result<f64> {
    check_images("ms_ssim", pred, gt)?;
    ms_ssim_gray(&gray255(pred), &gray255(gt))
}

/// BT.601 YUV planes on the 0–255 scale.
pub fn yuv255(img: &Array3<f64>) -> [Array2<f64>; 3] {
    let (m, n, _) = img.dim();
    let plane = |c: [f64; 3]| {
        Array2::from_shape_fn((m, n), |(i, j)| {
            255.0 * (c[0] * img[[i, j, 0]] + c[1] * img[[i, j, 1]] + c[2] * img[[i, j, 2]])
        })
    };
    [
        plane(LUMA),
        plane([-0.14713, -0.28886, 0.436]),
        plane([0.615, -0.51499, -0.10001]),
    ]
}

/// Color quality measure: weighted luma and mean chroma PSNR.
pub fn cqm(pred: &Array3<f64>, gt: &Array3<f64>) -> Result<f64> {
    check_images("cqm", pred, gt)?;
    let (a, b) = (yuv255(pred), yuv255(gt));
    let p: Vec<f64> = a
        .iter()
        .zip(&b)
        .map(|(x, y)| psnr_from_mse(mse(x, y)))
        .collect();
    // w_y·Y + w_c·C with w_y = 1 − w_c.
    let chroma = (p[1] + p[2]) / 2.0;
    Ok(p[0] + CQM_WEIGHTS.1 * (chroma - p[0]))
}

/// The six background scores of one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackgroundScores {
    pub age: f64,
    pub peps: f64,
    pub pceps: f64,
    pub psnr: f64,
    pub ms_ssim: f64,
    pub cqm: f64,
}

pub fn background_scores(
    pred: &Array3<f64>,
    gt: &Array3<f64>,
    tau: f64,
) -> Result<BackgroundScores> {
    let (peps, pceps) = peps_pceps(pred, gt, tau)?;
    Ok(BackgroundScores {
        age: age(pred, gt)?,
        peps,
        pceps,
        psnr: psnr(pred, gt)?,
        ms_ssim: ms_ssim(pred, gt)?,
        cqm: cqm(pred, gt)?,
    })
}

/// Pixel counts of a detection result.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl Confusion {
    pub fn add(&mut self, other: Confusion) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.tn += other.tn;
    }

    pub fn prf(&self) -> Prf {
        let ratio = |a: u64, b: u64| {
            if a + b == 0 {
                0.0
            } else {
                a as f64 / (a + b) as f64
            }
        };
        let recall = ratio(self.tp, self.fn_);
        let precision = ratio(self.tp, self.fp);
        let f_measure = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Prf {
            recall,
            precision,
            f_measure,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub recall: f64,
    pub precision: f64,
    pub f_measure: f64,
}

/// Confusion counts of one frame; ground-truth pixels other than
/// [`GT_NEGATIVE`] and [`GT_POSITIVE`] are skipped.
pub fn frame_confusion(pred: &Array2<bool>, gt: &Array2<u8>) -> Result<Confusion> {
    same_shape("detection", gt.shape(), pred.shape())?;
    let mut c = Confusion::default();
    Zip::from(pred).and(gt).for_each(|&p, &g| match (g, p) {
        (GT_POSITIVE, true) => c.tp += 1,
        (GT_POSITIVE, false) => c.fn_ += 1,
        (GT_NEGATIVE, true) => c.fp += 1,
        (GT_NEGATIVE, false) => c.tn += 1,
        _ => {}
    });
    Ok(c)
}

fn frame_confusions(pred: &MaskSequence, gt: &[Array2<u8>]) -> Result<Vec<Confusion>> {
    if pred.t() != gt.len() {
        return Err(Error::Shape {
            op: "detection",
            expected: format!("{} ground-truth frames", pred.t()),
            got: gt.len().to_string(),
        });
    }
    pred.frames()
        .iter()
        .zip(gt)
        .map(|(p, g)| frame_confusion(p, g))
        .collect()
}

/// Recall, precision and F-measure from counts summed over all frames.
pub fn detection_prf(pred: &MaskSequence, gt: &[Array2<u8>]) -> Result<Prf> {
    let mut total = Confusion::default();
    for c in frame_confusions(pred, gt)? {
        total.add(c);
    }
    Ok(total.prf())
}

/// Recall, precision and F-measure averaged over frames.
pub fn detection_prf_frame_mean(pred: &MaskSequence, gt: &[Array2<u8>]) -> Result<Prf> {
    let per: Vec<Prf> = frame_confusions(pred, gt)?
        .iter()
        .map(Confusion::prf)
        .collect();
    let k = per.len().max(1) as f64;
    Ok(Prf {
        recall: per.iter().map(|p| p.recall).sum::<f64>() / k,
        precision: per.iter().map(|p| p.precision).sum::<f64>() / k,
        f_measure: per.iter().map(|p| p.f_measure).sum::<f64>() / k,
    })
}

/// Binary mask as ground-truth labels.
pub fn mask_labels(mask: &MaskSequence) -> Vec<Array2<u8>> {
    mask.frames()
        .iter()
        .map(|f| f.mapv(|b| if b { GT_POSITIVE } else { GT_NEGATIVE }))
        .collect()
}

/// Per-frame background scores and their frame mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackgroundReport {
    pub frames: Vec<BackgroundScores>,
    pub mean: BackgroundScores,
}

/// Scores every predicted frame against `gt`, which holds either one image
/// shared by all frames or one image per frame.
pub fn background_report(
    pred: &[Array3<f64>],
    gt: &[Array3<f64>],
    tau: f64,
) -> Result<BackgroundReport> {
    if gt.len() != 1 && gt.len() != pred.len() {
        return Err(Error::Shape {
            op: "background_report",
            expected: format!("1 or {} ground-truth frames", pred.len()),
            got: gt.len().to_string(),
        });
    }
    let frames = pred
        .iter()
        .enumerate()
        .map(|(l, p)| background_scores(p, &gt[if gt.len() == 1 { 0 } else { l }], tau))
        .collect::<Result<Vec<_>>>()?;
    let k = frames.len().max(1) as f64;
    let avg = |f: fn(&BackgroundScores) -> f64| frames.iter().map(f).sum::<f64>() / k;
    let mean = BackgroundScores {
        age: avg(|s| s.age),
        peps: avg(|s| s.peps),
        pceps: avg(|s| s.pceps),
        psnr: avg(|s| s.psnr),
        ms_ssim: avg(|s| s.ms_ssim),
        cqm: avg(|s| s.cqm),
    };
    Ok(BackgroundReport { frames, mean })
}

/// Per-frame counts and scores with the pixel-aggregated total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub frames: Vec<(Confusion, Prf)>,
    pub total: Prf,
    pub frame_mean: Prf,
}

pub fn detection_report(pred: &MaskSequence, gt: &[Array2<u8>]) -> Result<DetectionReport> {
    let counts = frame_confusions(pred, gt)?;
    Ok(DetectionReport {
        frames: counts.iter().map(|c| (*c, c.prf())).collect(),
        total: detection_prf(pred, gt)?,
        frame_mean: detection_prf_frame_mean(pred, gt)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "lowercase")]
pub enum MetricsReport {
    Background(BackgroundReport),
    Detection(DetectionReport),
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per frame followed by an aggregate row labelled `mean` (or
    /// `total` for detection).
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        match self {
            MetricsReport::Background(r) => {
                w.write_record(["frame", "age", "peps", "pceps", "psnr", "ms_ssim", "cqm"])?;
                let row = |label: String, s: &BackgroundScores| {
                    vec![
                        label,
                        s.age.to_string(),
                        s.peps.to_string(),
                        s.pceps.to_string(),
                        s.psnr.to_string(),
                        s.ms_ssim.to_string(),
                        s.cqm.to_string(),
                    ]
                };
                for (l, s) in r.frames.iter().enumerate() {
                    w.write_record(row(l.to_string(), s))?;
                }
                w.write_record(row("mean".into(), &r.mean))?;
            }
            MetricsReport::Detection(r) => {
                w.write_record([
                    "frame",
                    "tp",
                    "fp",
                    "fn",
                    "tn",
                    "recall",
                    "precision",
                    "f_measure",
                ])?;
                for (l, (c, p)) in r.frames.iter().enumerate() {
                    w.write_record([
                        l.to_string(),
                        c.tp.to_string(),
                        c.fp.to_string(),
                        c.fn_.to_string(),
                        c.tn.to_string(),
                        p.recall.to_string(),
                        p.precision.to_string(),
                        p.f_measure.to_string(),
                    ])?;
                }
                let p = r.total;
                w.write_record([
                    "total".to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    p.recall.to_string(),
                    p.precision.to_string(),
                    p.f_measure.to_string(),
                ])?;
            }
        }
        w.flush()
    }

    /// Writes JSON when `path` ends in `.json` and CSV otherwise.
    pub fn save(&self, path: &Path) -> Result<()> {
        let io = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let file = std::fs::File::create(path).map_err(io)?;
        if path.extension().is_some_and(|e| e == "json") {
            let mut file = file;
            file.write_all(self.to_json().as_bytes()).map_err(io)
        } else {
            self.write_csv(file).map_err(io)
        }
    }
}
