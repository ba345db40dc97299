//! Image demonstration: a 3x3 majority (binary median) filter run through a
//! plain or randomized design, and what a Trojan tapping the replicas can
//! reconstruct from it.
//!
//! Windows are fed in raster order, one per cycle, with the nine pixels of
//! a window in raster order as inputs `x0..x8`; `x4` is the center pixel.
//! The Trojan guesses three things per window from replica 0's inputs: the
//! center value (input echo), the horizontal difference `x4 ^ x5` and the
//! vertical difference `x4 ^ x7` (gradient). The structural score is the
//! mean accuracy of those three guesses.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::bits::BitStream;
use crate::netlist::fixtures;
use crate::pgm::Image;
use crate::recordize::{transform, Grouping, PartitionedDesign, RecordConfig, RecordError};
use crate::sim::{simulate, simulate_netlist, RngSpec, SimError, SimTrace, SplitMix64, Stimulus};
use crate::trojan::{
    accuracy, input_pairs, leak_report, reconstruct, tap, Isolation, LeakReport, Strategy,
    TrojanError,
};

/// Mixed into the seed for the circuit's random bits so they are drawn
/// from a different stream than the noise.
const RNG_SALT: u64 = 0x5DEE_CE66_D1CE_B00C;

const CENTER: usize = 4;
const RIGHT: usize = 5;
const DOWN: usize = 7;

#[derive(Debug, Error)]
pub enum DemoError {
    #[error("noise probability {0} outside [0, 1)")]
    Noise(f64),
    #[error("image is empty")]
    EmptyImage,
    #[error("unknown variant `{0}` (expected plain, record1 or record2)")]
    Variant(String),
    #[error(transparent)]
    Record(#[from] RecordError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Trojan(#[from] TrojanError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Plain,
    Record1,
    Record2,
}

impl FromStr for Variant {
    type Err = DemoError;

    fn from_str(s: &str) -> Result<Self, DemoError> {
        match s {
            "plain" => Ok(Variant::Plain),
            "record1" => Ok(Variant::Record1),
            "record2" => Ok(Variant::Record2),
            _ => Err(DemoError::Variant(s.to_string())),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Plain => "plain",
            Variant::Record1 => "record1",
            Variant::Record2 => "record2",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ImageDemoConfig {
    /// Clean input image; `None` uses [`synthetic_scene`].
    pub input: Option<Image>,
    pub threshold: u8,
    pub variant: Variant,
    /// Salt-and-pepper probability per pixel.
    pub noise: f64,
    pub seed: u64,
    pub with_report: bool,
}

impl Default for ImageDemoConfig {
    fn default() -> Self {
        Self {
            input: None,
            threshold: 128,
            variant: Variant::Record1,
            noise: 0.05,
            seed: 0,
            with_report: false,
        }
    }
}

/// 64x64 dark background with two bright, partly overlapping rectangles.
pub fn synthetic_scene() -> Image {
    Image::from_fn(64, 64, |x, y| {
        if (8..28).contains(&x) && (10..40).contains(&y) {
            220
        } else if (32..56).contains(&x) && (24..54).contains(&y) {
            180
        } else {
            30
        }
    })
}

/// Replaces each pixel with black or white with probability `p`.
pub fn salt_and_pepper(img: &Image, p: f64, seed: u64) -> Result<Image, DemoError> {
    if !(0.0..1.0).contains(&p) {
        return Err(DemoError::Noise(p));
    }
    let mut rng = SplitMix64::new(seed);
    let mut out = img.clone();
    for px in out.pixels.iter_mut() {
        let hit = rng.next_f64() < p;
        let white = rng.next_u64() & 1 == 1;
        if hit {
            *px = if white { 255 } else { 0 };
        }
    }
    Ok(out)
}

pub fn binarize(img: &Image, threshold: u8) -> Vec<bool> {
    img.pixels.iter().map(|&p| p >= threshold).collect()
}

/// The 3x3 window around `(x, y)` with the border replicated.
pub fn window(bits: &[bool], w: usize, h: usize, x: usize, y: usize) -> Vec<bool> {
    let at = |dx: isize, dy: isize| {
        let cx = (x as isize + dx).clamp(0, w as isize - 1) as usize;
        let cy = (y as isize + dy).clamp(0, h as isize - 1) as usize;
        bits[cy * w + cx]
    };
    let mut v = Vec::with_capacity(9);
    for dy in -1..=1 {
        for dx in -1..=1 {
            v.push(at(dx, dy));
        }
    }
    v
}

/// Direct 3x3 binary median filter.
pub fn median_filter(bits: &[bool], w: usize, h: usize) -> Vec<bool> {
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            out.push(window(bits, w, h, x, y).iter().filter(|&&b| b).count() >= 5);
        }
    }
    out
}

/// Pixels whose right or lower neighbour (border replicated) differs.
pub fn edge_map(bits: &[bool], w: usize, h: usize) -> Vec<bool> {
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let win = window(bits, w, h, x, y);
            out.push(win[CENTER] != win[RIGHT] || win[CENTER] != win[DOWN]);
        }
    }
    out
}

/// F1 of `predicted` against `truth`; 1 when both are empty.
pub fn f1_score(predicted: &[bool], truth: &[bool]) -> f64 {
    let tp = predicted.iter().zip(truth).filter(|(&p, &t)| p && t).count() as f64;
    let fp = predicted.iter().zip(truth).filter(|(&p, &t)| p && !t).count() as f64;
    let fneg = predicted.iter().zip(truth).filter(|(&p, &t)| !p && t).count() as f64;
    if tp + fp + fneg == 0.0 {
        1.0
    } else {
        2.0 * tp / (2.0 * tp + fp + fneg)
    }
}

fn to_image(bits: &[bool], w: usize, h: usize) -> Image {
    Image {
        width: w,
        height: h,
        pixels: bits.iter().map(|&b| if b { 255 } else { 0 }).collect(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DemoResult {
    pub variant: Variant,
    pub seed: u64,
    #[serde(skip)]
    pub original: Image,
    #[serde(skip)]
    pub enhanced: Image,
    #[serde(skip)]
    pub leaked: Image,
    /// Enhanced image equals the direct median filter.
    pub oracle_match: bool,
    pub echo_accuracy: f64,
    pub horizontal_accuracy: f64,
    pub vertical_accuracy: f64,
    pub structural_score: f64,
    /// Recovered edge map against the edge map of the binarized input.
    pub edge_f1: f64,
    /// Accuracy of XOR guesses over all cross-group pairs in each window;
    /// absent when every randomized input shares one random bit.
    pub cross_group_accuracy: Option<f64>,
    pub report: Option<LeakReport>,
}

fn design_for(variant: Variant) -> Result<Option<PartitionedDesign>, DemoError> {
    let f = fixtures::maj9();
    let groups = match variant {
        Variant::Plain => return Ok(None),
        Variant::Record1 => 1,
        Variant::Record2 => 2,
    };
    let cfg = RecordConfig::for_netlist(&f, None, groups, &Grouping::Checkerboard)?;
    Ok(Some(transform(&f, &cfg)?))
}

pub fn run_demo(cfg: &ImageDemoConfig) -> Result<DemoResult, DemoError> {
    let clean = cfg.input.clone().unwrap_or_else(synthetic_scene);
    if clean.pixels.is_empty() {
        return Err(DemoError::EmptyImage);
    }
    let (w, h) = (clean.width, clean.height);
    let original = salt_and_pepper(&clean, cfg.noise, cfg.seed)?;
    let bits = binarize(&original, cfg.threshold);
    let windows: Vec<Vec<bool>> = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .map(|(x, y)| window(&bits, w, h, x, y))
        .collect();
    let stim = Stimulus::Vectors(windows);
    let truth_edges = edge_map(&bits, w, h);
    let oracle = median_filter(&bits, w, h);

    let x_col = |t: &SimTrace, i: usize| t.column(&format!("x{i}")).expect("input").clone();

    let design = design_for(cfg.variant)?;
    let Some(d) = design else {
        // No protection: the whole filter is untrusted and the Trojan
        // reads the window and the result directly.
        let f = fixtures::maj9();
        let t = simulate_netlist(&f, &stim)?;
        let out: Vec<bool> = t.column("maj").expect("output").iter().collect();
        let enhanced = to_image(&out, w, h);
        return Ok(DemoResult {
            variant: cfg.variant,
            seed: cfg.seed,
            original,
            leaked: enhanced.clone(),
            oracle_match: out == oracle,
            enhanced,
            echo_accuracy: 1.0,
            horizontal_accuracy: 1.0,
            vertical_accuracy: 1.0,
            structural_score: 1.0,
            edge_f1: f1_score(&edge_map(&bits, w, h), &truth_edges),
            cross_group_accuracy: None,
            report: None,
        });
    };

    let t = simulate(&d, &stim, RngSpec::new(cfg.seed ^ RNG_SALT))?;
    let out: Vec<bool> = t.column(&d.decoded_outputs()[0]).expect("output").iter().collect();
    let enhanced = to_image(&out, w, h);

    let l = tap(&d, &t, Isolation::All)?;
    let port = |i: usize| d.replica(0).expect("replica 0").inputs[i].clone();
    let xs: Vec<BitStream> = (0..9).map(|i| x_col(&t, i)).collect();
    let echo = reconstruct(&l, &Strategy::InputEcho { wire: port(CENTER) })?;
    let grads = reconstruct(
        &l,
        &Strategy::Gradient {
            pairs: vec![(port(CENTER), port(RIGHT)), (port(CENTER), port(DOWN))],
        },
    )?;
    let echo_accuracy = accuracy(&echo[0], &xs[CENTER]);
    let horizontal_accuracy = accuracy(&grads[0], &xs[CENTER].xor(&xs[RIGHT]));
    let vertical_accuracy = accuracy(&grads[1], &xs[CENTER].xor(&xs[DOWN]));

    // A difference is only recoverable when both pixels share a random bit.
    let cfg_r = d.config();
    let same = |i: usize, j: usize| cfg_r.group_of(&format!("x{i}")) == cfg_r.group_of(&format!("x{j}"));
    let h_ok = same(CENTER, RIGHT);
    let v_ok = same(CENTER, DOWN);
    let leaked = if h_ok || v_ok {
        let mut edges = Vec::with_capacity(w * h);
        for c in 0..t.cycles() {
            edges.push((h_ok && grads[0].get(c)) || (v_ok && grads[1].get(c)));
        }
        edges
    } else {
        Vec::new()
    };
    let (leaked_img, edge_f1) = if leaked.is_empty() {
        (Image::new(w, h, 128), 0.0)
    } else {
        (to_image(&leaked, w, h), f1_score(&leaked, &truth_edges))
    };

    let cross = input_pairs(&d, false);
    let cross_group_accuracy = if cross.is_empty() {
        None
    } else {
        let guesses = reconstruct(&l, &Strategy::Gradient { pairs: cross.clone() })?;
        let mut agree = 0;
        let mut total = 0;
        for ((a, b), g) in cross.iter().zip(&guesses) {
            let i = source_index(&d, a);
            let j = source_index(&d, b);
            agree += g.agreements(&xs[i].xor(&xs[j]));
            total += g.len();
        }
        Some(agree as f64 / total as f64)
    };

    let report = if cfg.with_report {
        let mut pairs = input_pairs(&d, true);
        pairs.extend(cross);
        Some(leak_report(&d, &t, &pairs)?)
    } else {
        None
    };

    Ok(DemoResult {
        variant: cfg.variant,
        seed: cfg.seed,
        original,
        oracle_match: out == oracle,
        enhanced,
        leaked: leaked_img,
        echo_accuracy,
        horizontal_accuracy,
        vertical_accuracy,
        structural_score: (echo_accuracy + horizontal_accuracy + vertical_accuracy) / 3.0,
        edge_f1,
        cross_group_accuracy,
        report,
    })
}

fn source_index(d: &PartitionedDesign, port: &str) -> usize {
    d.replica(0)
        .expect("replica 0")
        .inputs
        .iter()
        .position(|w| w == port)
        .expect("replica-0 input")
}
