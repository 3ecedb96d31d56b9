use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use image::{DynamicImage, ImageBuffer, Luma, Rgb};

use super::synth::RenderedView;
use super::DatasetError;
use crate::features::{grayscale_from_rgb8, make_frame, FeatureProvider, Frame};
use crate::geometry::{CameraIntrinsics, Pose};
use crate::imagegrid::{DenseMap, Downsample};
use crate::scalar::Real;

/// Raw depth units per meter.
pub const DEPTH_SCALE: f64 = 5000.0;
pub const DEFAULT_MAX_DT: f64 = 0.02;
pub const TARGET_WIDTH: usize = 160;
pub const TARGET_HEIGHT: usize = 120;

#[derive(Debug, Clone, PartialEq)]
pub struct TimedPath {
    pub timestamp: f64,
    pub path: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedPose {
    pub timestamp: f64,
    /// World from camera.
    pub pose: Pose<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssociatedFrame {
    pub timestamp: f64,
    pub rgb: PathBuf,
    pub depth: PathBuf,
    pub depth_timestamp: f64,
    pub gt: Option<Pose<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceIndex {
    pub root: PathBuf,
    pub rgb: Vec<TimedPath>,
    pub depth: Vec<TimedPath>,
    pub gt: Vec<TimedPose>,
    pub associated: Vec<AssociatedFrame>,
}

/// Two associated frames `(a, a + interval)` and their ground-truth `T_AB`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FramePair {
    pub a: usize,
    pub b: usize,
    pub gt_relative: Pose<f64>,
}

fn read_text(path: &Path) -> Result<String, DatasetError> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => DatasetError::MissingFile(path.to_path_buf()),
        _ => DatasetError::Io {
            path: path.to_path_buf(),
            source: e,
        },
    })
}

/// Non-comment lines split into whitespace fields, with 1-based line numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            None
        } else {
            Some((i + 1, line.split_whitespace().collect()))
        }
    })
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> DatasetError {
    DatasetError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_timestamp(path: &Path, line: usize, field: &str, prev: Option<f64>) -> Result<f64, DatasetError> {
    let t: f64 = field
        .parse()
        .map_err(|_| parse_err(path, line, format!("bad timestamp {field:?}")))?;
    if !t.is_finite() {
        return Err(parse_err(path, line, format!("bad timestamp {field:?}")));
    }
    if let Some(p) = prev {
        if t <= p {
            return Err(parse_err(path, line, format!("timestamp {t} not after {p}")));
        }
    }
    Ok(t)
}

/// Parses `timestamp filename` lines; filenames are resolved against `root`.
pub fn parse_timed_list(text: &str, source: &Path, root: &Path) -> Result<Vec<TimedPath>, DatasetError> {
    let mut out: Vec<TimedPath> = Vec::new();
    for (line, fields) in data_lines(text) {
        if fields.len() < 2 {
            return Err(parse_err(source, line, "expected \"timestamp filename\""));
        }
        let timestamp = parse_timestamp(source, line, fields[0], out.last().map(|e| e.timestamp))?;
        out.push(TimedPath {
            timestamp,
            path: root.join(fields[1]),
        });
    }
    Ok(out)
}

/// Parses `timestamp tx ty tz qx qy qz qw` lines.
pub fn parse_groundtruth(text: &str, source: &Path) -> Result<Vec<TimedPose>, DatasetError> {
    let mut out: Vec<TimedPose> = Vec::new();
    for (line, fields) in data_lines(text) {
        if fields.len() != 8 {
            return Err(parse_err(source, line, format!("expected 8 fields, found {}", fields.len())));
        }
        let timestamp = parse_timestamp(source, line, fields[0], out.last().map(|e| e.timestamp))?;
        let pose = Pose::parse_tum_fields(&fields[1..]).map_err(|e| parse_err(source, line, e.to_string()))?;
        out.push(TimedPose { timestamp, pose });
    }
    Ok(out)
}

/// Greedy one-to-one matching of sorted timestamp lists, closest pairs first.
/// Returns index pairs ordered by the first list.
pub fn associate(a: &[f64], b: &[f64], max_dt: f64) -> Vec<(usize, usize)> {
    let mut candidates = Vec::new();
    for (i, &ta) in a.iter().enumerate() {
        let start = b.partition_point(|&tb| tb < ta - max_dt);
        for (j, &tb) in b.iter().enumerate().skip(start) {
            if tb > ta + max_dt {
                break;
            }
            let d = (ta - tb).abs();
            if d <= max_dt {
                candidates.push((d, i, j));
            }
        }
    }
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    let mut out = Vec::new();
    for (_, i, j) in candidates {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            out.push((i, j));
        }
    }
    out.sort_unstable();
    out
}

/// Ground truth at `t`: linear in translation, slerp in rotation. `None` outside the covered span.
pub fn interpolate_pose(gt: &[TimedPose], t: f64) -> Option<Pose<f64>> {
    let i = gt.partition_point(|e| e.timestamp < t);
    if i < gt.len() && gt[i].timestamp == t {
        return Some(gt[i].pose);
    }
    if i == 0 || i >= gt.len() {
        return None;
    }
    let (p0, p1) = (&gt[i - 1], &gt[i]);
    let s = (t - p0.timestamp) / (p1.timestamp - p0.timestamp);
    let q0 = p0.pose.quaternion();
    let q1 = p1.pose.quaternion();
    let q = q0.try_slerp(&q1, s, 1e-12).unwrap_or(q0);
    let tr = p0.pose.translation.lerp(&p1.pose.translation, s);
    Some(Pose::from_quaternion(&q, tr))
}

/// Reads `rgb.txt`, `depth.txt` and optionally `groundtruth.txt` under `dir`.
pub fn load_sequence(dir: &Path, max_dt: f64) -> Result<SequenceIndex, DatasetError> {
    let rgb_txt = dir.join("rgb.txt");
    let depth_txt = dir.join("depth.txt");
    let gt_txt = dir.join("groundtruth.txt");
    let rgb = parse_timed_list(&read_text(&rgb_txt)?, &rgb_txt, dir)?;
    let depth = parse_timed_list(&read_text(&depth_txt)?, &depth_txt, dir)?;
    let gt = if gt_txt.exists() {
        parse_groundtruth(&read_text(&gt_txt)?, &gt_txt)?
    } else {
        Vec::new()
    };
    let ta: Vec<f64> = rgb.iter().map(|e| e.timestamp).collect();
    let tb: Vec<f64> = depth.iter().map(|e| e.timestamp).collect();
    let pairs = associate(&ta, &tb, max_dt);
    if pairs.is_empty() {
        return Err(DatasetError::EmptyAssociation { max_dt });
    }
    let associated = pairs
        .into_iter()
        .map(|(i, j)| AssociatedFrame {
            timestamp: rgb[i].timestamp,
            rgb: rgb[i].path.clone(),
            depth: depth[j].path.clone(),
            depth_timestamp: depth[j].timestamp,
            gt: interpolate_pose(&gt, rgb[i].timestamp),
        })
        .collect();
    Ok(SequenceIndex {
        root: dir.to_path_buf(),
        rgb,
        depth,
        gt,
        associated,
    })
}

/// Pairs `(i, i + interval)` of associated frames that both have ground truth.
pub fn subsample_pairs(index: &SequenceIndex, interval: usize) -> Vec<FramePair> {
    if interval == 0 {
        return Vec::new();
    }
    let f = &index.associated;
    (0..f.len().saturating_sub(interval))
        .filter_map(|a| {
            let b = a + interval;
            let (ga, gb) = (f[a].gt?, f[b].gt?);
            Some(FramePair {
                a,
                b,
                gt_relative: ga.inverse() * gb,
            })
        })
        .collect()
}

fn open_image(path: &Path) -> Result<DynamicImage, DatasetError> {
    if !path.exists() {
        return Err(DatasetError::MissingFile(path.to_path_buf()));
    }
    image::open(path).map_err(|e| DatasetError::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn reduction_factor(w: usize, h: usize, target: (usize, usize)) -> Result<usize, DatasetError> {
    let (tw, th) = target;
    if tw == 0 || th == 0 || w % tw != 0 || h % th != 0 || w / tw != h / th {
        return Err(DatasetError::Format(format!(
            "cannot reduce {w}x{h} to {tw}x{th} by an integer factor"
        )));
    }
    Ok(w / tw)
}

/// Loads one RGB-D frame, converts depth to meters and reduces both images to
/// `target` by block averaging over valid pixels.
pub fn load_frame<T: Real>(
    entry: &AssociatedFrame,
    intrinsics: &CameraIntrinsics<f64>,
    target: (usize, usize),
    provider: &FeatureProvider,
    levels: usize,
) -> Result<Frame<T>, DatasetError> {
    let rgb = open_image(&entry.rgb)?.to_rgb8();
    let depth_img = open_image(&entry.depth)?;
    let DynamicImage::ImageLuma16(depth_raw) = depth_img else {
        return Err(DatasetError::Image {
            path: entry.depth.clone(),
            message: "depth must be a 16-bit grayscale image".into(),
        });
    };
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    if (depth_raw.width() as usize, depth_raw.height() as usize) != (w, h) {
        return Err(DatasetError::Format(format!(
            "{} is {}x{} but {} is {w}x{h}",
            entry.depth.display(),
            depth_raw.width(),
            depth_raw.height(),
            entry.rgb.display()
        )));
    }
    if (intrinsics.width, intrinsics.height) != (w, h) {
        return Err(DatasetError::Format(format!(
            "intrinsics are for {}x{} but images are {w}x{h}",
            intrinsics.width, intrinsics.height
        )));
    }
    let factor = reduction_factor(w, h, target)?;
    let gray: DenseMap<T> = grayscale_from_rgb8(w, h, rgb.as_raw())?;
    let raw = depth_raw.as_raw();
    let depth = DenseMap::from_fn(w, h, |x, y| match raw[y * w + x] {
        0 => None,
        d => Some(T::lit(d as f64 / DEPTH_SCALE)),
    });
    let k = intrinsics.downscaled(factor)?;
    let k = CameraIntrinsics::new(T::lit(k.fx), T::lit(k.fy), T::lit(k.cx), T::lit(k.cy), k.width, k.height)?;
    let (gray, depth) = if factor > 1 {
        (
            gray.downsample_by(factor, Downsample::Mean),
            depth.downsample_by(factor, Downsample::Mean),
        )
    } else {
        (gray, depth)
    };
    Ok(make_frame(entry.timestamp, gray, depth, k, provider, levels)?)
}

fn write_png<P: image::Pixel<Subpixel = S> + image::PixelWithColorType, S: image::Primitive>(
    path: &Path,
    img: &ImageBuffer<P, Vec<S>>,
) -> Result<(), DatasetError>
where
    [S]: image::EncodableLayout,
{
    img.save(path).map_err(|e| DatasetError::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn write_text(path: &Path, body: &str) -> Result<(), DatasetError> {
    let io = |e| DatasetError::Io {
        path: path.to_path_buf(),
        source: e,
    };
    let mut f = fs::File::create(path).map_err(io)?;
    f.write_all(body.as_bytes()).map_err(io)
}

/// Writes rendered views as a TUM-layout directory (`rgb/`, `depth/`, and the three index files).
pub fn write_tum_sequence(
    dir: &Path,
    views: &[RenderedView],
    cameras: &[Pose<f64>],
    timestamps: &[f64],
) -> Result<(), DatasetError> {
    if views.len() != cameras.len() || views.len() != timestamps.len() {
        return Err(DatasetError::Format("views, poses and timestamps differ in length".into()));
    }
    for sub in ["rgb", "depth"] {
        fs::create_dir_all(dir.join(sub)).map_err(|e| DatasetError::Io {
            path: dir.join(sub),
            source: e,
        })?;
    }
    let mut rgb_txt = String::from("# color images\n# timestamp filename\n");
    let mut depth_txt = String::from("# depth maps\n# timestamp filename\n");
    let mut gt_txt = String::from("# ground truth trajectory\n# timestamp tx ty tz qx qy qz qw\n");
    for ((view, cam), &t) in views.iter().zip(cameras).zip(timestamps) {
        let (w, h) = (view.intensity.width() as u32, view.intensity.height() as u32);
        let rgb = ImageBuffer::from_fn(w, h, |x, y| {
            let v = (view.intensity.get(x as usize, y as usize, 0).clamp(0.0, 1.0) * 255.0).round() as u8;
            Rgb([v, v, v])
        });
        let depth = ImageBuffer::from_fn(w, h, |x, y| {
            let d = view
                .depth
                .value(x as usize, y as usize)
                .map(|d| (d * DEPTH_SCALE).round().clamp(0.0, u16::MAX as f64) as u16)
                .unwrap_or(0);
            Luma([d])
        });
        let rgb_name = format!("rgb/{t:.6}.png");
        let depth_name = format!("depth/{t:.6}.png");
        write_png(&dir.join(&rgb_name), &rgb)?;
        write_png(&dir.join(&depth_name), &depth)?;
        rgb_txt += &format!("{t:.6} {rgb_name}\n");
        depth_txt += &format!("{t:.6} {depth_name}\n");
        gt_txt += &format!("{t:.6} {}\n", cam.to_tum());
    }
    write_text(&dir.join("rgb.txt"), &rgb_txt)?;
    write_text(&dir.join("depth.txt"), &depth_txt)?;
    write_text(&dir.join("groundtruth.txt"), &gt_txt)
}
