//! Deterministic part of a simulation drop: AP layout along the stripe, UE
//! placement, pathloss, spatial correlation and pilot assignment.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::config::{CorrelationModel, SimulationConfig};
use crate::linalg::{clip_to_psd, CMatrix, C64};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2) + (self.z - other.z).powi(2))
            .sqrt()
    }
}

/// K x L table indexed by `(ue, ap)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkGrid<T> {
    num_ues: usize,
    num_aps: usize,
    data: Vec<T>,
}

impl<T> LinkGrid<T> {
    pub fn from_fn(num_ues: usize, num_aps: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(num_ues * num_aps);
        for k in 0..num_ues {
            for l in 0..num_aps {
                data.push(f(k, l));
            }
        }
        Self {
            num_ues,
            num_aps,
            data,
        }
    }

    pub fn try_from_fn(
        num_ues: usize,
        num_aps: usize,
        mut f: impl FnMut(usize, usize) -> Result<T>,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(num_ues * num_aps);
        for k in 0..num_ues {
            for l in 0..num_aps {
                data.push(f(k, l)?);
            }
        }
        Ok(Self {
            num_ues,
            num_aps,
            data,
        })
    }

    pub fn num_ues(&self) -> usize {
        self.num_ues
    }

    pub fn num_aps(&self) -> usize {
        self.num_aps
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), &T)> {
        let l_count = self.num_aps;
        self.data
            .iter()
            .enumerate()
            .map(move |(idx, v)| ((idx / l_count, idx % l_count), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.data.iter_mut()
    }

    /// All UEs' entries at one AP, in UE order.
    pub fn at_ap(&self, ap: usize) -> impl Iterator<Item = &T> {
        (0..self.num_ues).map(move |k| &self[(k, ap)])
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> LinkGrid<U> {
        LinkGrid {
            num_ues: self.num_ues,
            num_aps: self.num_aps,
            data: self.data.iter().map(&mut f).collect(),
        }
    }
}

impl<T> std::ops::Index<(usize, usize)> for LinkGrid<T> {
    type Output = T;

    fn index(&self, (k, l): (usize, usize)) -> &T {
        assert!(k < self.num_ues && l < self.num_aps);
        &self.data[k * self.num_aps + l]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for LinkGrid<T> {
    fn index_mut(&mut self, (k, l): (usize, usize)) -> &mut T {
        assert!(k < self.num_ues && l < self.num_aps);
        &mut self.data[k * self.num_aps + l]
    }
}

/// Pilot index per UE (0-based) and the sets of UEs sharing each UE's pilot.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PilotAssignment {
    pub pilot_length: usize,
    pub pilot_index: Vec<usize>,
    pub copilots: Vec<Vec<usize>>,
}

impl PilotAssignment {
    /// Builds the co-pilot sets from an explicit pilot vector.
    pub fn from_indices(pilot_length: usize, pilot_index: Vec<usize>) -> Self {
        let copilots = pilot_index
            .iter()
            .map(|&t| {
                pilot_index
                    .iter()
                    .enumerate()
                    .filter(|(_, &ti)| ti == t)
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect();
        Self {
            pilot_length,
            pilot_index,
            copilots,
        }
    }

    pub fn num_ues(&self) -> usize {
        self.pilot_index.len()
    }

    pub fn shares_pilot(&self, i: usize, k: usize) -> bool {
        self.pilot_index[i] == self.pilot_index[k]
    }

    /// Distinct pilots actually in use, ascending.
    pub fn used_pilots(&self) -> Vec<usize> {
        let mut v = self.pilot_index.clone();
        v.sort_unstable();
        v.dedup();
        v
    }
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub num_aps: usize,
    pub antennas_per_ap: usize,
    pub ap_positions: Vec<Position>,
    /// Azimuth (radians) of each AP's array broadside, pointing into the room.
    pub ap_boresight: Vec<f64>,
    pub ue_positions: Vec<Position>,
    pub distances: LinkGrid<f64>,
    /// Linear large-scale gain, equal to tr(R_kl) / N.
    pub large_scale: LinkGrid<f64>,
    pub covariances: LinkGrid<CMatrix>,
    pub pilots: PilotAssignment,
}

impl Scenario {
    pub fn num_ues(&self) -> usize {
        self.ue_positions.len()
    }

    /// Builds a scenario around given UE positions (meters, on the floor).
    pub fn with_ue_positions(
        config: &SimulationConfig,
        ue_xy: &[(f64, f64)],
        pilots: PilotAssignment,
    ) -> Result<Self> {
        check_geometry(config)?;
        let n = config.antennas_per_ap;
        let layout = ap_layout(config.num_aps, config.stripe_length_m);
        let ap_positions: Vec<Position> = layout
            .iter()
            .map(|s| Position::new(s.x, s.y, config.ap_ue_height_gap_m))
            .collect();
        let ap_boresight: Vec<f64> = layout.iter().map(|s| s.boresight).collect();
        let ue_positions: Vec<Position> = ue_xy
            .iter()
            .map(|&(x, y)| Position::new(x, y, 0.0))
            .collect();
        let k_count = ue_positions.len();
        let l_count = ap_positions.len();

        let distances = LinkGrid::from_fn(k_count, l_count, |k, l| {
            ue_positions[k].distance(&ap_positions[l])
        });
        let large_scale = distances.map(|&d| db_to_linear(pathloss_db(d)));
        let angular_std = config.angular_std_dev_rad();
        let covariances = LinkGrid::try_from_fn(k_count, l_count, |k, l| {
            let beta = large_scale[(k, l)];
            match config.correlation_model {
                CorrelationModel::Uncorrelated => Ok(CMatrix::identity(n, n).scale(beta)),
                CorrelationModel::GaussianLocalScattering => {
                    let phi = nominal_angle(&ap_positions[l], ap_boresight[l], &ue_positions[k]);
                    local_scattering_covariance(beta, phi, angular_std, n)
                }
            }
        })?;

        Ok(Self {
            num_aps: l_count,
            antennas_per_ap: n,
            ap_positions,
            ap_boresight,
            ue_positions,
            distances,
            large_scale,
            covariances,
            pilots,
        })
    }
}

fn check_geometry(config: &SimulationConfig) -> Result<()> {
    for (name, v) in [
        ("stripe_length_m", config.stripe_length_m),
        ("square_side", config.square_side()),
        ("ap_ue_height_gap_m", config.ap_ue_height_gap_m),
        ("angular_std_dev_deg", config.angular_std_dev_deg),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "{name} must be positive, got {v}"
            )));
        }
    }
    if config.num_aps == 0 || config.antennas_per_ap == 0 {
        return Err(Error::InvalidConfig(
            "need at least one AP and one antenna".into(),
        ));
    }
    Ok(())
}

/// Random drop: UEs uniform over the square, pilots assigned, everything else
/// derived deterministically.
pub fn build_scenario<R: Rng + ?Sized>(config: &SimulationConfig, rng: &mut R) -> Result<Scenario> {
    config.validate()?;
    let side = config.square_side();
    let ue_xy: Vec<(f64, f64)> = (0..config.num_ues)
        .map(|_| (rng.random::<f64>() * side, rng.random::<f64>() * side))
        .collect();
    let pilots = assign_pilots(config.num_ues, config.pilot_length, rng);
    Scenario::with_ue_positions(config, &ue_xy, pilots)
}

/// Point on the stripe with the inward-facing broadside of its array.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StripeSlot {
    pub x: f64,
    pub y: f64,
    pub boresight: f64,
}

/// Equally spaced AP slots along a square perimeter of length
/// `stripe_length`, walked counter-clockwise from the corner at the origin.
/// AP `l` sits at arc length `(l + 1/2) * stripe_length / L`, which keeps
/// every AP off the corners.
pub fn ap_layout(num_aps: usize, stripe_length: f64) -> Vec<StripeSlot> {
    let side = stripe_length / 4.0;
    let spacing = stripe_length / num_aps as f64;
    (0..num_aps)
        .map(|l| {
            let s = (l as f64 + 0.5) * spacing;
            let wall = ((s / side).floor() as usize).min(3);
            let t = s - wall as f64 * side;
            match wall {
                0 => StripeSlot {
                    x: t,
                    y: 0.0,
                    boresight: PI / 2.0,
                },
                1 => StripeSlot {
                    x: side,
                    y: t,
                    boresight: PI,
                },
                2 => StripeSlot {
                    x: side - t,
                    y: side,
                    boresight: -PI / 2.0,
                },
                _ => StripeSlot {
                    x: 0.0,
                    y: side - t,
                    boresight: 0.0,
                },
            }
        })
        .collect()
}

/// Azimuth of the UE seen from the AP, relative to the array broadside,
/// wrapped to (-pi, pi].
pub fn nominal_angle(ap: &Position, boresight: f64, ue: &Position) -> f64 {
    let azimuth = (ue.y - ap.y).atan2(ue.x - ap.x);
    let mut phi = azimuth - boresight;
    while phi <= -PI {
        phi += 2.0 * PI;
    }
    while phi > PI {
        phi -= 2.0 * PI;
    }
    phi
}

/// Urban-microcell pathloss in dB at distance `d` meters (clamped to 1 m).
pub fn pathloss_db(d: f64) -> f64 {
    -30.5 - 36.7 * d.max(1.0).log10()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Gaussian local scattering covariance for a half-wavelength ULA.
///
/// Element `(m, n)` is
/// `beta * exp(j*pi*(m-n)*sin(phi)) * exp(-(sigma^2/2) * (pi*(m-n)*cos(phi))^2)`,
/// the small-angular-spread closed form of the local scattering model.
pub fn local_scattering_covariance(
    beta: f64,
    nominal_angle: f64,
    angular_std: f64,
    antennas: usize,
) -> Result<CMatrix> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "large-scale gain must be positive, got {beta}"
        )));
    }
    if !(angular_std > 0.0 && angular_std.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "angular standard deviation must be positive, got {angular_std}"
        )));
    }
    let (sin_phi, cos_phi) = nominal_angle.sin_cos();
    let mut r = CMatrix::zeros(antennas, antennas);
    for m in 0..antennas {
        r[(m, m)] = C64::new(beta, 0.0);
        for n in 0..m {
            let delta = (m - n) as f64;
            let spread =
                (-(angular_std * angular_std) / 2.0 * (PI * delta * cos_phi).powi(2)).exp();
            let value = C64::from_polar(beta * spread, PI * delta * sin_phi);
            r[(m, n)] = value;
            r[(n, m)] = value.conj();
        }
    }
    clip_to_psd(r, beta)
}

/// Pilot assignment: orthogonal pilots `t_k = k` when `K <= tau_p`, otherwise
/// round-robin over a random permutation of the UEs.
pub fn assign_pilots<R: Rng + ?Sized>(
    num_ues: usize,
    pilot_length: usize,
    rng: &mut R,
) -> PilotAssignment {
    let pilot_length = pilot_length.max(1);
    let mut pilot_index = vec![0; num_ues];
    if num_ues <= pilot_length {
        for (k, t) in pilot_index.iter_mut().enumerate() {
            *t = k;
        }
    } else {
        let mut order: Vec<usize> = (0..num_ues).collect();
        order.shuffle(rng);
        for (slot, &k) in order.iter().enumerate() {
            pilot_index[k] = slot % pilot_length;
        }
    }
    PilotAssignment::from_indices(pilot_length, pilot_index)
}
