//! Piecewise-constant belief densities on the unit circle.
//!
//! A posterior is a sorted list of breakpoints `b_0 < b_1 < … < b_{n-1}` in
//! `[0, 2π)` with one density per sector. Sector `k` is `[b_k, b_{k+1})` and
//! the last sector wraps around to `b_0`. Starting from the uniform density,
//! every sign observation cuts the circle along one line through the origin,
//! so the representation stays exact: an update inserts at most two
//! breakpoints and rescales the two half-circles.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::error::{HdcError, Result};
use crate::oracle::{check_rho, Sign};

/// Adjacent sectors whose densities agree to this relative tolerance are merged.
pub const MERGE_TOLERANCE: f64 = 1e-12;

/// Slack on the halving equation when searching for the median line.
const HALVING_TOLERANCE: f64 = 1e-12;

/// Radians in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Angle(f64);

impl Angle {
    pub fn new(radians: f64) -> Angle {
        let v = radians.rem_euclid(TAU);
        // rem_euclid can round up to exactly TAU for tiny negative inputs
        Angle(if v >= TAU { 0.0 } else { v })
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    /// Unit vector `(cos θ, sin θ)`.
    pub fn coords(self) -> (f64, f64) {
        (self.0.cos(), self.0.sin())
    }
}

impl From<Angle> for f64 {
    fn from(a: Angle) -> f64 {
        a.0
    }
}

/// One sector of a posterior, `[start, start + width)` (may wrap past 2π).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sector {
    pub start: f64,
    pub width: f64,
    pub density: f64,
}

impl Sector {
    pub fn midpoint(&self) -> Angle {
        Angle::new(self.start + 0.5 * self.width)
    }

    pub fn mass(&self) -> f64 {
        self.density * self.width
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CirclePosterior {
    breakpoints: Vec<f64>,
    densities: Vec<f64>,
}

impl CirclePosterior {
    pub fn uniform() -> Self {
        CirclePosterior {
            breakpoints: vec![0.0],
            densities: vec![1.0 / TAU],
        }
    }

    /// Builds a posterior from explicit sectors. Breakpoints must be strictly
    /// increasing in `[0, 2π)`, densities nonnegative and the total mass 1
    /// within `1e-9`. Equal neighbours are merged.
    pub fn from_sectors(breakpoints: Vec<f64>, densities: Vec<f64>) -> Result<Self> {
        if breakpoints.is_empty() || breakpoints.len() != densities.len() {
            return Err(HdcError::param(
                "breakpoints",
                "need one density per breakpoint and at least one sector",
            ));
        }
        if breakpoints.iter().any(|b| !(0.0..TAU).contains(b))
            || breakpoints.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(HdcError::param(
                "breakpoints",
                "must be strictly increasing within [0, 2π)",
            ));
        }
        if densities.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(HdcError::param("densities", "must be finite and nonnegative"));
        }
        let p = CirclePosterior {
            breakpoints,
            densities,
        };
        let total = p.total_mass();
        if (total - 1.0).abs() > 1e-9 {
            return Err(HdcError::param(
                "densities",
                format!("total mass is {total}, expected 1"),
            ));
        }
        let widths = p.widths();
        Ok(merge_sectors(p.breakpoints, p.densities, widths))
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn densities(&self) -> &[f64] {
        &self.densities
    }

    pub fn sector_count(&self) -> usize {
        self.breakpoints.len()
    }

    pub fn sectors(&self) -> impl Iterator<Item = Sector> + '_ {
        let widths = self.widths();
        self.breakpoints
            .iter()
            .zip(&self.densities)
            .zip(widths)
            .map(|((&start, &density), width)| Sector {
                start,
                width,
                density,
            })
    }

    fn widths(&self) -> Vec<f64> {
        sector_widths(&self.breakpoints)
    }

    pub fn total_mass(&self) -> f64 {
        self.sectors().map(|s| s.mass()).sum()
    }

    /// Total angular width of the sectors with nonzero density.
    pub fn support_width(&self) -> f64 {
        self.sectors()
            .filter(|s| s.density > 0.0)
            .map(|s| s.width)
            .sum()
    }

    /// Index of the sector containing `angle`.
    pub fn sector_index(&self, angle: Angle) -> usize {
        let k = self.breakpoints.partition_point(|&b| b <= angle.0);
        if k == 0 {
            self.breakpoints.len() - 1
        } else {
            k - 1
        }
    }

    pub fn density_at(&self, angle: Angle) -> f64 {
        self.densities[self.sector_index(angle)]
    }

    /// The density re-expressed as pieces starting at angle 0, so that
    /// `starts[0] == 0` and piece `i` covers `[starts[i], starts[i+1])`.
    fn pieces_from_zero(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.breakpoints.len();
        let mut starts = Vec::with_capacity(n + 1);
        let mut dens = Vec::with_capacity(n + 1);
        if self.breakpoints[0] > 0.0 {
            starts.push(0.0);
            dens.push(self.densities[n - 1]);
        }
        starts.extend_from_slice(&self.breakpoints);
        dens.extend_from_slice(&self.densities);
        (starts, dens)
    }

    /// `∫` of the density over the arc `[start, start + length)`, wrapping
    /// around 2π when needed.
    pub fn mass_of(&self, start: Angle, length: f64) -> Result<f64> {
        if length.is_nan() || length <= 0.0 {
            return Err(HdcError::Degenerate(format!(
                "arc length must be positive, got {length}"
            )));
        }
        if length > TAU * (1.0 + 1e-12) {
            return Err(HdcError::param(
                "length",
                format!("arc length {length} exceeds a full turn"),
            ));
        }
        let length = length.min(TAU);
        let cdf = Cdf::new(self);
        let a = start.0;
        let end = a + length;
        let mass = if end <= TAU {
            cdf.at(end) - cdf.at(a)
        } else {
            (cdf.total() - cdf.at(a)) + cdf.at(end - TAU)
        };
        Ok(mass.max(0.0))
    }

    /// Query direction whose orthogonal line splits the mass in half.
    ///
    /// `f(θ) = mass([θ, θ + π))` is continuous and piecewise linear with
    /// `f(θ + π) = 1 − f(θ)`, so a root of `f = 1/2` lies in `[0, π]`. The
    /// sweep walks the kinks of `f` in order and returns `θ* + π/2` for the
    /// smallest root `θ*`.
    pub fn find_halving_query(&self) -> Angle {
        let (starts, dens) = self.pieces_from_zero();
        let n = starts.len();
        let piece_end = |i: usize| if i + 1 < n { starts[i + 1] } else { TAU };

        let mut f = Cdf::from_pieces(&starts, &dens).at(PI);
        let mut t = 0.0;
        let mut i = 0;
        let mut j = starts.partition_point(|&s| s <= PI) - 1;
        let mut best = (f64::INFINITY, 0.0);

        loop {
            let g = f - 0.5;
            if g.abs() <= HALVING_TOLERANCE {
                return Angle::new(t + FRAC_PI_2);
            }
            if g.abs() < best.0 {
                best = (g.abs(), t);
            }
            let next_i = piece_end(i);
            let next_j = piece_end(j) - PI;
            let t_next = next_i.min(next_j).min(PI);
            let slope = dens[j] - dens[i];
            let f_next = f + slope * (t_next - t);
            let g_next = f_next - 0.5;
            if g_next.abs() <= HALVING_TOLERANCE || (g < 0.0) != (g_next < 0.0) {
                let root = if slope != 0.0 {
                    (t - g / slope).clamp(t, t_next)
                } else {
                    t_next
                };
                return Angle::new(root + FRAC_PI_2);
            }
            if t_next >= PI {
                break;
            }
            if next_i <= t_next {
                i += 1;
            }
            if next_j <= t_next {
                j += 1;
            }
            t = t_next;
            f = f_next;
        }
        // Unreachable in exact arithmetic; keep the closest kink.
        Angle::new(best.1 + FRAC_PI_2)
    }

    /// Bayesian update after observing `observed = sign⟨x, h⟩` for the query
    /// direction `query`, with flip probability `rho`.
    ///
    /// Hypotheses that agree with the observation are scaled by `2(1−ρ)`, the
    /// rest by `2ρ`; the result is renormalized. If no mass survives, which
    /// can only happen for `ρ = 0` once the support is narrower than the
    /// floating-point spacing of angles, the posterior is returned unchanged.
    pub fn bayes_update(&self, query: Angle, observed: Sign, rho: f64) -> Result<Self> {
        check_rho(rho)?;
        let lo = Angle::new(query.0 - FRAC_PI_2).0;
        let hi = Angle::new(query.0 + FRAC_PI_2).0;

        let mut breakpoints = self.breakpoints.clone();
        let mut densities = self.densities.clone();
        insert_cut(&mut breakpoints, &mut densities, lo);
        insert_cut(&mut breakpoints, &mut densities, hi);
        let i_lo = breakpoints.partition_point(|&b| b < lo);
        let i_hi = breakpoints.partition_point(|&b| b < hi);

        let agree = 2.0 * (1.0 - rho);
        let disagree = 2.0 * rho;
        let positive_wanted = observed == Sign::Positive;
        for (k, d) in densities.iter_mut().enumerate() {
            // [lo, hi) counter-clockwise is where ⟨x, h⟩ > 0
            let in_positive_half = if i_lo < i_hi {
                i_lo <= k && k < i_hi
            } else {
                k >= i_lo || k < i_hi
            };
            *d *= if in_positive_half == positive_wanted {
                agree
            } else {
                disagree
            };
        }

        let widths = sector_widths(&breakpoints);
        let mut merged = merge_sectors(breakpoints, densities, widths);
        let total = merged.total_mass();
        if !(total > 0.0 && total.is_finite()) {
            return Ok(self.clone());
        }
        merged.densities.iter_mut().for_each(|d| *d /= total);
        Ok(merged)
    }

    /// Midpoint of the first sector of maximal density.
    pub fn map_estimate(&self) -> Angle {
        let mut best: Option<Sector> = None;
        for s in self.sectors() {
            if best.is_none_or(|b| s.density > b.density) {
                best = Some(s);
            }
        }
        best.expect("posterior has at least one sector").midpoint()
    }
}

/// Inserts a breakpoint at `cut` unless one is already there.
fn insert_cut(breakpoints: &mut Vec<f64>, densities: &mut Vec<f64>, cut: f64) {
    match breakpoints.binary_search_by(|b| b.total_cmp(&cut)) {
        Ok(_) => {}
        Err(k) => {
            let density = if k == 0 {
                densities[densities.len() - 1]
            } else {
                densities[k - 1]
            };
            breakpoints.insert(k, cut);
            densities.insert(k, density);
        }
    }
}

fn sector_widths(breakpoints: &[f64]) -> Vec<f64> {
    let n = breakpoints.len();
    (0..n)
        .map(|k| {
            if k + 1 < n {
                breakpoints[k + 1] - breakpoints[k]
            } else {
                (TAU - breakpoints[k]) + breakpoints[0]
            }
        })
        .collect()
}

fn nearly_equal(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= MERGE_TOLERANCE * a.abs().max(b.abs())
}

/// Merges neighbouring sectors with equal densities, including across the
/// seam between the last and first sector. Merged densities are
/// width-weighted so that mass is preserved.
fn merge_sectors(breakpoints: Vec<f64>, densities: Vec<f64>, widths: Vec<f64>) -> CirclePosterior {
    let mut bs: Vec<f64> = Vec::with_capacity(breakpoints.len());
    let mut ds: Vec<f64> = Vec::with_capacity(breakpoints.len());
    let mut ws: Vec<f64> = Vec::with_capacity(breakpoints.len());
    for ((b, d), w) in breakpoints.into_iter().zip(densities).zip(widths) {
        match (ds.last_mut(), ws.last_mut()) {
            (Some(ld), Some(lw)) if nearly_equal(*ld, d) => {
                if *ld != d {
                    *ld = (*ld * *lw + d * w) / (*lw + w);
                }
                *lw += w;
            }
            _ => {
                bs.push(b);
                ds.push(d);
                ws.push(w);
            }
        }
    }
    let n = bs.len();
    if n > 1 && nearly_equal(ds[n - 1], ds[0]) {
        if ds[n - 1] != ds[0] {
            ds[n - 1] = (ds[n - 1] * ws[n - 1] + ds[0] * ws[0]) / (ws[n - 1] + ws[0]);
        }
        bs.remove(0);
        ds.remove(0);
    }
    CirclePosterior {
        breakpoints: bs,
        densities: ds,
    }
}

/// Cumulative mass from angle 0.
struct Cdf {
    starts: Vec<f64>,
    dens: Vec<f64>,
    prefix: Vec<f64>,
}

impl Cdf {
    fn new(p: &CirclePosterior) -> Self {
        let (starts, dens) = p.pieces_from_zero();
        Self::from_pieces(&starts, &dens)
    }

    fn from_pieces(starts: &[f64], dens: &[f64]) -> Self {
        let n = starts.len();
        let mut prefix = Vec::with_capacity(n + 1);
        prefix.push(0.0);
        for i in 0..n {
            let end = if i + 1 < n { starts[i + 1] } else { TAU };
            prefix.push(prefix[i] + dens[i] * (end - starts[i]));
        }
        Cdf {
            starts: starts.to_vec(),
            dens: dens.to_vec(),
            prefix,
        }
    }

    fn at(&self, t: f64) -> f64 {
        let k = self.starts.partition_point(|&s| s <= t).max(1) - 1;
        self.prefix[k] + self.dens[k] * (t - self.starts[k])
    }

    fn total(&self) -> f64 {
        self.prefix[self.prefix.len() - 1]
    }
}
