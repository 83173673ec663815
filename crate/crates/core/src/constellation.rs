//! Signal constellations and generalized constellation splitting.
//!
//! Constellations are normalized to unit average symbol energy. Splitting
//! partitions the point set into phase-disjoint regions (half-planes or
//! quadrants); regions are assigned to subcarriers by position so the receiver
//! knows the phase sector of every transmitted symbol without pilots.

use crate::{Cf64, Error, Result};
use serde::{Deserialize, Serialize};

/// Modulation family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModKind {
    Qam,
    Psk,
    Pam,
}

/// Supported modulation selections (config key `modulation`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modulation {
    Qam4,
    Qam16,
    Qam64,
    Psk2,
    Psk4,
    Psk8,
    Pam2,
    Pam4,
    Pam8,
}

impl Modulation {
    pub fn kind(self) -> ModKind {
        match self {
            Modulation::Qam4 | Modulation::Qam16 | Modulation::Qam64 => ModKind::Qam,
            Modulation::Psk2 | Modulation::Psk4 | Modulation::Psk8 => ModKind::Psk,
            Modulation::Pam2 | Modulation::Pam4 | Modulation::Pam8 => ModKind::Pam,
        }
    }

    pub fn order(self) -> usize {
        match self {
            Modulation::Psk2 | Modulation::Pam2 => 2,
            Modulation::Qam4 | Modulation::Psk4 | Modulation::Pam4 => 4,
            Modulation::Psk8 | Modulation::Pam8 => 8,
            Modulation::Qam16 => 16,
            Modulation::Qam64 => 64,
        }
    }
}

/// Region splitting mode (config key `splitting`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    None,
    /// Two half-planes by sign of the real part.
    HalfI,
    /// Two half-planes by sign of the imaginary part.
    HalfQ,
    /// Four quadrants, numbered counter-clockwise from (+,+).
    Quadrant,
}

impl SplitMode {
    pub fn region_count(self) -> usize {
        match self {
            SplitMode::None => 1,
            SplitMode::HalfI | SplitMode::HalfQ => 2,
            SplitMode::Quadrant => 4,
        }
    }
}

/// A finite symbol alphabet with unit average energy and Gray-coded labels.
#[derive(Debug, Clone)]
pub struct ConstellationSpec {
    pub kind: ModKind,
    pub order: usize,
    pub points: Vec<Cf64>,
    /// Gray-coded bit label of each point, used when splitting is off.
    pub labels: Vec<u32>,
}

impl ConstellationSpec {
    pub fn bits_per_symbol(&self) -> usize {
        self.order.trailing_zeros() as usize
    }
}

/// Partition of a constellation into phase regions plus per-region statistics.
#[derive(Debug, Clone)]
pub struct RegionPartition {
    pub mode: SplitMode,
    /// Point indices per region, sorted lexicographically by (re, im).
    pub regions: Vec<Vec<usize>>,
    /// Phase of each region centroid, in radians.
    pub centers: Vec<f64>,
    /// Complex mean of the points in each region.
    pub centroids: Vec<Cf64>,
    /// Within-region centered symbol variance, identical across regions for the
    /// symmetric constellations supported here.
    pub centered_variance: f64,
}

impl RegionPartition {
    pub fn region_count(&self) -> usize {
        self.regions.len()
    }

    pub fn points_per_region(&self) -> usize {
        self.regions[0].len()
    }

    /// Data bits carried per symbol under this partition.
    pub fn bits_per_symbol(&self) -> usize {
        self.points_per_region().trailing_zeros() as usize
    }
}

fn gray(i: u32) -> u32 {
    i ^ (i >> 1)
}

fn gray_inverse(mut g: u32) -> u32 {
    let mut i = 0;
    while g != 0 {
        i ^= g;
        g >>= 1;
    }
    i
}

/// Build a unit-average-energy constellation with Gray-coded labels.
///
/// PSK constellations are rotated so that no point falls on a coordinate axis
/// (odd multiples of pi/M, or pi/4 for BPSK), keeping every split mode that is
/// geometrically possible well defined.
pub fn build_constellation(kind: ModKind, order: usize) -> Result<ConstellationSpec> {
    let supported = match kind {
        ModKind::Qam => matches!(order, 4 | 16 | 64),
        ModKind::Psk | ModKind::Pam => matches!(order, 2 | 4 | 8),
    };
    if !supported {
        return Err(Error::Config(format!(
            "unsupported order {order} for {kind:?}"
        )));
    }

    let mut points = Vec::with_capacity(order);
    let mut labels = Vec::with_capacity(order);
    match kind {
        ModKind::Qam => {
            // Square QAM: odd-integer grid, Gray coding per axis.
            let levels = (order as f64).sqrt() as usize;
            let bits_axis = levels.trailing_zeros();
            for i in 0..levels {
                for q in 0..levels {
                    let re = (2 * i as i64 - (levels as i64 - 1)) as f64;
                    let im = (2 * q as i64 - (levels as i64 - 1)) as f64;
                    points.push(Cf64::new(re, im));
                    labels.push((gray(i as u32) << bits_axis) | gray(q as u32));
                }
            }
        }
        ModKind::Psk => {
            let offset = if order == 2 {
                std::f64::consts::FRAC_PI_4
            } else {
                std::f64::consts::PI / order as f64
            };
            for m in 0..order {
                let phi = offset + 2.0 * std::f64::consts::PI * m as f64 / order as f64;
                points.push(Cf64::new(phi.cos(), phi.sin()));
                labels.push(gray(m as u32));
            }
        }
        ModKind::Pam => {
            for i in 0..order {
                let re = (2 * i as i64 - (order as i64 - 1)) as f64;
                points.push(Cf64::new(re, 0.0));
                labels.push(gray(i as u32));
            }
        }
    }

    let energy: f64 = points.iter().map(|p| p.norm_sqr()).sum::<f64>() / order as f64;
    let scale = energy.sqrt();
    for p in &mut points {
        *p /= scale;
    }

    let spec = ConstellationSpec {
        kind,
        order,
        points,
        labels,
    };
    validate_spec(&spec)?;
    Ok(spec)
}

fn validate_spec(spec: &ConstellationSpec) -> Result<()> {
    let n = spec.points.len();
    let energy: f64 = spec.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / n as f64;
    if (energy - 1.0).abs() > 1e-12 {
        return Err(Error::Config(format!("average energy {energy} != 1")));
    }
    let sum: Cf64 = spec.points.iter().sum();
    if sum.norm() > 1e-12 {
        return Err(Error::Config("constellation not symmetric".into()));
    }
    for i in 0..n {
        for j in i + 1..n {
            if (spec.points[i] - spec.points[j]).norm() < 1e-12 {
                return Err(Error::Config("duplicate constellation points".into()));
            }
        }
    }
    Ok(())
}

const AXIS_TOL: f64 = 1e-9;

fn region_index_of_point(p: Cf64, mode: SplitMode) -> Result<usize> {
    let on_re_axis = p.im.abs() < AXIS_TOL;
    let on_im_axis = p.re.abs() < AXIS_TOL;
    match mode {
        SplitMode::None => Ok(0),
        SplitMode::HalfI => {
            if on_im_axis {
                Err(Error::Splitting(format!("point {p} lies on the split axis")))
            } else {
                Ok(if p.re > 0.0 { 0 } else { 1 })
            }
        }
        SplitMode::HalfQ => {
            if on_re_axis {
                Err(Error::Splitting(format!("point {p} lies on the split axis")))
            } else {
                Ok(if p.im > 0.0 { 0 } else { 1 })
            }
        }
        SplitMode::Quadrant => {
            if on_re_axis || on_im_axis {
                Err(Error::Splitting(format!("point {p} lies on a split axis")))
            } else {
                // Counter-clockwise from (+,+).
                Ok(match (p.re > 0.0, p.im > 0.0) {
                    (true, true) => 0,
                    (false, true) => 1,
                    (false, false) => 2,
                    (true, false) => 3,
                })
            }
        }
    }
}

/// Partition a constellation into phase regions.
pub fn split_constellation(c: &ConstellationSpec, mode: SplitMode) -> Result<RegionPartition> {
    let n_regions = mode.region_count();
    let mut regions: Vec<Vec<usize>> = vec![Vec::new(); n_regions];
    for (i, &p) in c.points.iter().enumerate() {
        regions[region_index_of_point(p, mode)?].push(i);
    }
    let per = c.order / n_regions;
    for r in &regions {
        if r.len() != per {
            return Err(Error::Splitting(format!(
                "regions not of equal cardinality under {mode:?}"
            )));
        }
    }
    for r in &mut regions {
        r.sort_by(|&a, &b| {
            let (pa, pb) = (c.points[a], c.points[b]);
            pa.re
                .partial_cmp(&pb.re)
                .unwrap()
                .then(pa.im.partial_cmp(&pb.im).unwrap())
        });
    }

    let centroids: Vec<Cf64> = regions
        .iter()
        .map(|r| r.iter().map(|&i| c.points[i]).sum::<Cf64>() / per as f64)
        .collect();
    let centers: Vec<f64> = centroids
        .iter()
        .map(|m| if m.norm() > AXIS_TOL { m.arg() } else { 0.0 })
        .collect();
    let centered_variance = regions
        .iter()
        .zip(&centroids)
        .flat_map(|(r, &mu)| r.iter().map(move |&i| (c.points[i] - mu).norm_sqr()))
        .sum::<f64>()
        / c.order as f64;

    Ok(RegionPartition {
        mode,
        regions,
        centers,
        centroids,
        centered_variance,
    })
}

/// Region assigned to subcarrier `k`: positional assignment with period equal
/// to the number of regions (quadrant q = (k mod 4) + 1, halves alternate).
pub fn region_of_subcarrier(k: usize, partition: &RegionPartition) -> usize {
    k % partition.region_count()
}

/// Map a bit pattern to the symbol transmitted on subcarrier `k`.
///
/// With splitting off the bits select a point by its Gray label; with splitting
/// active they Gray-select a point inside the region assigned to `k`.
pub fn map_bits(
    bits: &[u8],
    k: usize,
    c: &ConstellationSpec,
    partition: &RegionPartition,
) -> Result<Cf64> {
    let expected = if partition.mode == SplitMode::None {
        c.bits_per_symbol()
    } else {
        partition.bits_per_symbol()
    };
    if bits.len() != expected {
        return Err(Error::Mapping(format!(
            "expected {expected} bits, got {}",
            bits.len()
        )));
    }
    let mut value: u32 = 0;
    for &b in bits {
        if b > 1 {
            return Err(Error::Mapping("bits must be 0 or 1".into()));
        }
        value = (value << 1) | b as u32;
    }
    if partition.mode == SplitMode::None {
        let idx = c
            .labels
            .iter()
            .position(|&l| l == value)
            .ok_or_else(|| Error::Mapping(format!("no point with label {value}")))?;
        Ok(c.points[idx])
    } else {
        let region = &partition.regions[region_of_subcarrier(k, partition)];
        let idx = gray_inverse(value) as usize;
        Ok(c.points[region[idx]])
    }
}

/// Nearest constellation point to `z` among the points of the given region.
pub fn hard_decide_in_region(
    z: Cf64,
    region: usize,
    c: &ConstellationSpec,
    partition: &RegionPartition,
) -> Cf64 {
    let mut best = c.points[partition.regions[region][0]];
    let mut best_d = f64::INFINITY;
    for &i in &partition.regions[region] {
        let d = (z - c.points[i]).norm_sqr();
        if d < best_d {
            best_d = d;
            best = c.points[i];
        }
    }
    best
}
