//! Test-side reference implementations, written against plain `Vec`s and
//! scalar loops so they share no code path with the library's matrix code.
#![allow(dead_code)]

use num_complex::Complex64 as C;
use radio_stripe::channel::ChannelEstimateSet;

pub type Vector = Vec<C>;
pub type Matrix = Vec<Vec<C>>;

/// Plain copies of one block's estimates: `hhat[k][l]`, `rtilde[k][l]`.
pub struct PlainEstimates {
    pub hhat: Vec<Vec<Vector>>,
    pub rtilde: Vec<Vec<Matrix>>,
}

impl PlainEstimates {
    pub fn from_set(est: &ChannelEstimateSet) -> Self {
        let (k_count, l_count, n) = (est.num_ues(), est.num_aps(), est.antennas());
        let hhat = (0..k_count)
            .map(|k| {
                (0..l_count)
                    .map(|l| est.hhat(k, l).iter().copied().collect())
                    .collect()
            })
            .collect();
        let rtilde = (0..k_count)
            .map(|k| {
                (0..l_count)
                    .map(|l| {
                        let r = est.rtilde(k, l);
                        (0..n)
                            .map(|a| (0..n).map(|b| r[(a, b)]).collect())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Self { hhat, rtilde }
    }

    pub fn num_ues(&self) -> usize {
        self.hhat.len()
    }

    pub fn num_aps(&self) -> usize {
        self.hhat[0].len()
    }
}

/// `a^H b`
pub fn inner(a: &[C], b: &[C]) -> C {
    let mut s = C::new(0.0, 0.0);
    for i in 0..a.len() {
        s += a[i].conj() * b[i];
    }
    s
}

/// `u^H M u` (real part)
pub fn quad(u: &[C], m: &Matrix) -> f64 {
    let mut s = C::new(0.0, 0.0);
    for a in 0..u.len() {
        for b in 0..u.len() {
            s += u[a].conj() * m[a][b] * u[b];
        }
    }
    s.re
}

pub fn norm(u: &[C]) -> f64 {
    u.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Angle between the complex lines spanned by `a` and `b`, in radians,
/// computed from the residual so it stays accurate for tiny angles.
pub fn line_angle(a: &[C], b: &[C]) -> f64 {
    let na = norm(a);
    let nb = norm(b);
    let ua: Vec<C> = a.iter().map(|z| z / na).collect();
    let ub: Vec<C> = b.iter().map(|z| z / nb).collect();
    let proj = inner(&ua, &ub);
    let residual: f64 = (0..ub.len())
        .map(|i| (ub[i] - ua[i] * proj).norm_sqr())
        .sum::<f64>()
        .sqrt();
    residual.min(1.0).asin()
}

/// Conditional linear model seen by one combiner: mean channels `chat[i]`
/// and error covariances `cov[i]` of every UE, plus the served UE.
pub struct LinearModel<'a> {
    pub chat: &'a [Vector],
    pub cov: &'a [Matrix],
    pub powers: &'a [f64],
    pub noise_power: f64,
    pub served: usize,
}

impl LinearModel<'_> {
    /// Conditional MSE of the estimate `a u^H y` of the served symbol with
    /// the complex scale `a` chosen optimally:
    /// `mse(u) = p_k (u^H B u - p_k |u^H chat_k|^2) / (u^H B u)`,
    /// with the numerator summed term by term so nothing cancels.
    pub fn profiled_mse(&self, u: &[C]) -> f64 {
        let k = self.served;
        let mut rest = self.noise_power * norm(u).powi(2);
        let mut signal = 0.0;
        for i in 0..self.chat.len() {
            let g = inner(u, &self.chat[i]).norm_sqr();
            if i == k {
                signal = self.powers[i] * g;
            } else {
                rest += self.powers[i] * g;
            }
            rest += self.powers[i] * quad(u, &self.cov[i]);
        }
        self.powers[k] * rest / (rest + signal)
    }
}

/// Unit vector from hyperspherical magnitude angles and relative phases:
/// `theta = [a_1 .. a_{d-1}, phi_1 .. phi_{d-1}]`.
pub fn unit_from_angles(theta: &[f64], dim: usize) -> Vector {
    let (mags, phases) = theta.split_at(dim - 1);
    let mut u = Vec::with_capacity(dim);
    let mut tail = 1.0;
    for j in 0..dim {
        let r = if j + 1 < dim {
            tail * mags[j].cos()
        } else {
            tail
        };
        if j + 1 < dim {
            tail *= mags[j].sin();
        }
        let phase = if j == 0 { 0.0 } else { phases[j - 1] };
        u.push(C::from_polar(r, phase));
    }
    u
}

/// Brute-force minimizer of the profiled MSE over directions: a coarse grid
/// over the angles, then compass search from the best few grid points down
/// to a step of `1e-13`.
pub fn brute_force_direction(model: &LinearModel<'_>) -> Vector {
    let dim = model.chat[0].len();
    if dim == 1 {
        return vec![C::new(1.0, 0.0)];
    }
    let params = 2 * (dim - 1);
    let grid = 10usize;
    let mut candidates: Vec<(f64, Vec<f64>)> = Vec::new();
    let total = grid.pow(params as u32);
    for idx in 0..total {
        let mut rem = idx;
        let theta: Vec<f64> = (0..params)
            .map(|p| {
                let g = rem % grid;
                rem /= grid;
                let frac = (g as f64 + 0.5) / grid as f64;
                if p < dim - 1 {
                    frac * std::f64::consts::FRAC_PI_2
                } else {
                    (frac * 2.0 - 1.0) * std::f64::consts::PI
                }
            })
            .collect();
        let f = model.profiled_mse(&unit_from_angles(&theta, dim));
        candidates.push((f, theta));
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut best: Option<(f64, Vec<f64>)> = None;
    for (f0, theta0) in candidates.into_iter().take(3) {
        let (f, theta) = compass(model, dim, f0, theta0, std::f64::consts::PI / grid as f64);
        if best.as_ref().is_none_or(|b| f < b.0) {
            best = Some((f, theta));
        }
    }
    unit_from_angles(&best.unwrap().1, dim)
}

fn compass(
    model: &LinearModel<'_>,
    dim: usize,
    mut f: f64,
    mut theta: Vec<f64>,
    mut step: f64,
) -> (f64, Vec<f64>) {
    while step > 1e-13 {
        let mut improved = false;
        for p in 0..theta.len() {
            for sign in [1.0, -1.0] {
                let mut trial = theta.clone();
                trial[p] += sign * step;
                let ft = model.profiled_mse(&unit_from_angles(&trial, dim));
                if ft < f {
                    f = ft;
                    theta = trial;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (f, theta)
}

/// Oracle stripe: brute-force combiners at every AP, with the forwarded
/// statistics propagated by scalar loops.
///
/// Each stage's combiner is only defined up to a complex phase, and that
/// phase rotates the forwarded gains seen by the next AP. What is
/// comparable across implementations is the end-to-end combiner acting on
/// `[y_1; ...; y_l]`, so that is what this returns, as `[l][k]`.
pub fn oracle_stripe(est: &PlainEstimates, powers: &[f64], noise_power: f64) -> Vec<Vec<Vector>> {
    let k_count = est.num_ues();
    let l_count = est.num_aps();
    let n = est.hhat[0][0].len();
    let mut stacked: Vec<Vector> = vec![Vec::new(); k_count];
    let mut out = Vec::with_capacity(l_count);
    // forwarded (ghat, psitilde) for (served k, contributor i)
    let mut ghat = vec![vec![C::new(0.0, 0.0); k_count]; k_count];
    let mut psi = vec![vec![0.0; k_count]; k_count];

    for l in 0..l_count {
        let mut stage = Vec::with_capacity(k_count);
        for k in 0..k_count {
            let (chat, cov): (Vec<Vector>, Vec<Matrix>) = (0..k_count)
                .map(|i| {
                    if l == 0 {
                        (est.hhat[i][0].clone(), est.rtilde[i][0].clone())
                    } else {
                        let mut c = est.hhat[i][l].clone();
                        c.push(ghat[k][i]);
                        let mut m = vec![vec![C::new(0.0, 0.0); n + 1]; n + 1];
                        for a in 0..n {
                            for b in 0..n {
                                m[a][b] = est.rtilde[i][l][a][b];
                            }
                        }
                        m[n][n] = C::new(psi[k][i], 0.0);
                        (c, m)
                    }
                })
                .unzip();
            let model = LinearModel {
                chat: &chat,
                cov: &cov,
                powers,
                noise_power,
                served: k,
            };
            stage.push(brute_force_direction(&model));
        }
        // propagate with the oracle's own combiners
        for k in 0..k_count {
            let u = &stage[k];
            for i in 0..k_count {
                let top = &u[..n];
                let local_g = inner(top, &est.hhat[i][l]);
                let local_psi = quad(top, &est.rtilde[i][l]);
                if l == 0 {
                    ghat[k][i] = local_g;
                    psi[k][i] = local_psi;
                } else {
                    ghat[k][i] = local_g + u[n].conj() * ghat[k][i];
                    psi[k][i] = local_psi + u[n].norm_sqr() * psi[k][i];
                }
            }
        }
        for k in 0..k_count {
            let u = &stage[k];
            let mut w: Vector = if l == 0 {
                Vec::new()
            } else {
                stacked[k].iter().map(|z| z * u[n]).collect()
            };
            w.extend_from_slice(&u[..n]);
            stacked[k] = w;
        }
        out.push(stacked.clone());
    }
    out
}

/// Effective SINR from plain per-contributor gains and error variances.
pub fn sinr_from_stats(k: usize, ghat: &[C], psi: &[f64], powers: &[f64], noise_power: f64) -> f64 {
    let mut denom = noise_power;
    for i in 0..ghat.len() {
        if i != k {
            denom += powers[i] * ghat[i].norm_sqr();
        }
        denom += powers[i] * psi[i];
    }
    powers[k] * ghat[k].norm_sqr() / denom
}
