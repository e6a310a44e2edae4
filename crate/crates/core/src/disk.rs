//! Coefficient disk, membership selection and the ensemble estimate.
//!
//! Points are scaled per axis by `A = max|a|` and `B = max|b|`. A channel is a member
//! when its scaled point lies on the side of the orientation vector `u` and its
//! elliptical radius exceeds the radius of exclusion `r_e`.

use alloc::vec;
use alloc::vec::Vec;

use crate::basis::{CoeffPoint, QuadraticBasis};
use crate::channel::ChannelMatrix;
use crate::error::{Error, Result};
use crate::signal::{period_norm, remove_mean, SampledSignal};
use crate::spectrum::magnitude_spectrum;

pub const DEFAULT_GOE_EPSILON: f64 = 0.05;

/// `0.00, 0.05, ..., 0.95`.
pub fn default_radius_grid() -> Vec<f64> {
    (0..20).map(|i| i as f64 / 20.0).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoeffDisk {
    ids: Vec<usize>,
    points: Vec<CoeffPoint>,
    a_max: f64,
    b_max: f64,
    orientation: [f64; 2],
}

impl CoeffDisk {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn points(&self) -> &[CoeffPoint] {
        &self.points
    }

    pub fn a_max(&self) -> f64 {
        self.a_max
    }

    pub fn b_max(&self) -> f64 {
        self.b_max
    }

    /// Unit vector `u` in scaled `(a/A, b/B)` coordinates.
    pub fn orientation(&self) -> [f64; 2] {
        self.orientation
    }

    /// Point `j` in scaled coordinates.
    pub fn normalized(&self, j: usize) -> [f64; 2] {
        let p = self.points[j];
        [p.a / self.a_max, p.b / self.b_max]
    }

    pub fn radius(&self, j: usize) -> f64 {
        let [x, y] = self.normalized(j);
        libm::sqrt(x * x + y * y)
    }

    pub fn in_half_plane(&self, j: usize) -> bool {
        let [x, y] = self.normalized(j);
        x * self.orientation[0] + y * self.orientation[1] >= 0.0
    }
}

/// Projects each one-period window and orients the disk toward `orientation_point`.
///
/// Windows are expected to be zero-mean with unit period norm.
pub fn build_disk<W: AsRef<[f64]>>(
    windows: &[W],
    basis: &QuadraticBasis,
    orientation_point: CoeffPoint,
) -> Result<CoeffDisk> {
    let points = windows
        .iter()
        .enumerate()
        .map(|(i, w)| Ok((i, basis.project(w.as_ref())?)))
        .collect::<Result<Vec<_>>>()?;
    disk_from_points(points, orientation_point)
}

pub fn disk_from_points(
    points: Vec<(usize, CoeffPoint)>,
    orientation_point: CoeffPoint,
) -> Result<CoeffDisk> {
    let a_max = points
        .iter()
        .fold(0.0f64, |m, (_, p)| m.max(libm::fabs(p.a)));
    let b_max = points
        .iter()
        .fold(0.0f64, |m, (_, p)| m.max(libm::fabs(p.b)));
    if !(a_max >= 1e-12) || !(b_max >= 1e-12) {
        return Err(Error::DegenerateDisk { a_max, b_max });
    }
    let ux = orientation_point.a / a_max;
    let uy = orientation_point.b / b_max;
    let n = libm::sqrt(ux * ux + uy * uy);
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::ZeroOrientation);
    }
    let (ids, points) = points.into_iter().unzip();
    Ok(CoeffDisk {
        ids,
        points,
        a_max,
        b_max,
        orientation: [ux / n, uy / n],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MembershipSet {
    /// Ascending channel ids.
    pub channel_ids: Vec<usize>,
    pub r_e: f64,
}

impl MembershipSet {
    pub fn cardinality(&self) -> usize {
        self.channel_ids.len()
    }
}

pub fn select_members(disk: &CoeffDisk, r_e: f64) -> Result<MembershipSet> {
    if !(0.0..1.0).contains(&r_e) {
        return Err(Error::InvalidParameter("r_e must lie in [0, 1)"));
    }
    let mut channel_ids: Vec<usize> = (0..disk.len())
        .filter(|&j| disk.in_half_plane(j) && disk.radius(j) > r_e)
        .map(|j| disk.ids[j])
        .collect();
    if channel_ids.is_empty() {
        return Err(Error::EmptyMembership { r_e });
    }
    channel_ids.sort_unstable();
    Ok(MembershipSet { channel_ids, r_e })
}

/// Copy of `streams` with every row zero-mean and unit period norm; all-constant rows become zero.
pub fn normalized_rows(streams: &ChannelMatrix) -> ChannelMatrix {
    let mut out = streams.clone();
    for i in 0..out.n_channels() {
        let row = out.row_mut(i);
        remove_mean(row);
        let n = period_norm(row);
        if n > 0.0 {
            row.iter_mut().for_each(|v| *v /= n);
        } else {
            row.iter_mut().for_each(|v| *v = 0.0);
        }
    }
    out
}

/// Mean over members of their zero-mean, unit-norm streams, re-centred.
pub fn estimate(streams: &ChannelMatrix, membership: &MembershipSet) -> Result<SampledSignal> {
    if membership.channel_ids.is_empty() {
        return Err(Error::EmptyMembership {
            r_e: membership.r_e,
        });
    }
    let mut acc = vec![0.0; streams.n_samples()];
    let mut row = vec![0.0; streams.n_samples()];
    for &id in &membership.channel_ids {
        if id >= streams.n_channels() {
            return Err(Error::InvalidCount("member id outside the stream matrix"));
        }
        row.copy_from_slice(streams.row(id));
        remove_mean(&mut row);
        let n = period_norm(&row);
        if !(n > 0.0) {
            return Err(Error::ZeroNorm);
        }
        for (a, v) in acc.iter_mut().zip(&row) {
            *a += v / n;
        }
    }
    finish_average(acc, membership.cardinality(), streams.sample_rate())
}

fn average_normalized(
    normalized: &ChannelMatrix,
    membership: &MembershipSet,
) -> Result<SampledSignal> {
    let mut acc = vec![0.0; normalized.n_samples()];
    for &id in &membership.channel_ids {
        for (a, v) in acc.iter_mut().zip(normalized.row(id)) {
            *a += v;
        }
    }
    finish_average(acc, membership.cardinality(), normalized.sample_rate())
}

fn finish_average(mut acc: Vec<f64>, count: usize, sample_rate: f64) -> Result<SampledSignal> {
    let n = count as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    remove_mean(&mut acc);
    SampledSignal::new(acc, sample_rate, 0.0)
}

/// `1 / #{k >= 1 : |X_k| > epsilon_rel * max_k |X_k|}` over the unpadded one-sided spectrum.
pub fn goe_score(signal: &[f64], epsilon_rel: f64) -> Result<f64> {
    if signal.is_empty() {
        return Err(Error::InvalidParameter("goe of an empty signal"));
    }
    if !(epsilon_rel > 0.0 && epsilon_rel < 1.0) {
        return Err(Error::InvalidParameter("epsilon_rel must lie in (0, 1)"));
    }
    let mag = magnitude_spectrum(signal, signal.len());
    let bins = &mag[1..];
    let max = bins.iter().fold(0.0f64, |m, v| m.max(*v));
    if !(max > 0.0) {
        return Err(Error::ZeroSignal);
    }
    let count = bins.iter().filter(|&&v| v > epsilon_rel * max).count();
    Ok(1.0 / count as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateResult {
    pub signal: SampledSignal,
    pub goe: f64,
    pub r_e: f64,
    pub membership: MembershipSet,
    /// Basis frequency in rad/s.
    pub w0_used: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub r_e: f64,
    pub goe: f64,
    pub cardinality: usize,
    pub estimate: SampledSignal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadiusSweep {
    pub best: EstimateResult,
    /// Non-empty grid points in grid order.
    pub curve: Vec<SweepPoint>,
}

/// Evaluates every `r_e` in `grid` and keeps the highest GoE.
///
/// Grid points with no members are skipped. Ties go to the smaller `r_e`.
pub fn sweep_radius(
    disk: &CoeffDisk,
    streams: &ChannelMatrix,
    grid: &[f64],
    epsilon_rel: f64,
    w0: f64,
) -> Result<RadiusSweep> {
    sweep_normalized(disk, &normalized_rows(streams), grid, epsilon_rel, w0)
}

pub(crate) fn sweep_normalized(
    disk: &CoeffDisk,
    normalized: &ChannelMatrix,
    grid: &[f64],
    epsilon_rel: f64,
    w0: f64,
) -> Result<RadiusSweep> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("radius grid is empty"));
    }
    let mut curve: Vec<SweepPoint> = Vec::with_capacity(grid.len());
    let mut best: Option<(usize, MembershipSet)> = None;
    for &r_e in grid {
        let membership = match select_members(disk, r_e) {
            Ok(m) => m,
            Err(Error::EmptyMembership { .. }) => continue,
            Err(e) => return Err(e),
        };
        let estimate = average_normalized(normalized, &membership)?;
        let goe = goe_score(estimate.samples(), epsilon_rel)?;
        let better = match &best {
            None => true,
            Some((j, b)) => goe > curve[*j].goe || (goe == curve[*j].goe && r_e < b.r_e),
        };
        curve.push(SweepPoint {
            r_e,
            goe,
            cardinality: membership.cardinality(),
            estimate,
        });
        if better {
            best = Some((curve.len() - 1, membership));
        }
    }
    let (j, membership) = best.ok_or(Error::AllEmpty)?;
    let p = &curve[j];
    let best = EstimateResult {
        signal: p.estimate.clone(),
        goe: p.goe,
        r_e: p.r_e,
        membership,
        w0_used: w0,
    };
    Ok(RadiusSweep { best, curve })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(n: usize) -> Vec<(usize, CoeffPoint)> {
        (0..n)
            .map(|i| {
                let ang = 2.0 * core::f64::consts::PI * (i as f64 + 0.5) / n as f64;
                (i, CoeffPoint::new(2.0 * libm::cos(ang), libm::sin(ang)))
            })
            .collect()
    }

    #[test]
    fn orientation_on_b_axis() {
        let d = disk_from_points(ring(16), CoeffPoint::new(0.0, 0.3)).unwrap();
        assert_eq!(d.orientation(), [0.0, 1.0]);
        assert!(matches!(
            disk_from_points(ring(16), CoeffPoint::new(0.0, 0.0)),
            Err(Error::ZeroOrientation)
        ));
        let flat = vec![(0, CoeffPoint::new(1.0, 0.0))];
        assert!(matches!(
            disk_from_points(flat, CoeffPoint::new(1.0, 0.0)),
            Err(Error::DegenerateDisk { .. })
        ));
    }

    #[test]
    fn zero_radius_selects_half_disk() {
        let d = disk_from_points(ring(40), CoeffPoint::new(1.0, 0.0)).unwrap();
        let m = select_members(&d, 0.0).unwrap();
        assert_eq!(m.cardinality(), 20);
        assert!(m.channel_ids.iter().all(|&i| d.points()[i].a > 0.0));
        // the ring sits at radius ~1, so even r_e close to 1 keeps the half ring
        assert_eq!(select_members(&d, 0.99).unwrap().cardinality(), 20);
        assert!(select_members(&d, 1.0).is_err());
    }

    #[test]
    fn goe_counts_bins() {
        let n = 200;
        let tone: Vec<f64> = (0..n)
            .map(|i| libm::sin(2.0 * core::f64::consts::PI * 10.0 * i as f64 / n as f64))
            .collect();
        assert_eq!(goe_score(&tone, 0.05).unwrap(), 1.0);
        let two: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / n as f64;
                libm::sin(2.0 * core::f64::consts::PI * 10.0 * t)
                    + 0.5 * libm::sin(2.0 * core::f64::consts::PI * 30.0 * t)
            })
            .collect();
        assert_eq!(goe_score(&two, 0.05).unwrap(), 0.5);
        assert_eq!(goe_score(&two, 0.6).unwrap(), 1.0);
        assert_eq!(goe_score(&[0.0; 10], 0.05), Err(Error::ZeroSignal));
    }

    #[test]
    fn single_member_estimate_is_normalized_stream() {
        let m =
            ChannelMatrix::from_rows(&[vec![1.0, 3.0, 2.0, 6.0], vec![0.0, 1.0, 0.0, 1.0]], 10.0)
                .unwrap();
        let set = MembershipSet {
            channel_ids: vec![0],
            r_e: 0.0,
        };
        let e = estimate(&m, &set).unwrap();
        let mut want = vec![1.0, 3.0, 2.0, 6.0];
        crate::signal::normalize_in_place(&mut want).unwrap();
        for (a, b) in e.samples().iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
        let empty = MembershipSet {
            channel_ids: vec![],
            r_e: 0.2,
        };
        assert_eq!(
            estimate(&m, &empty),
            Err(Error::EmptyMembership { r_e: 0.2 })
        );
    }
}
