//! Distance from a memory-one behaviour vector to the nearest extortionate
//! zero-determinant strategy.
//!
//! Extortionate play enforces s_self - P = chi (s_opp - P). In the
//! Press-Dyson parameterization with p_DD = 0 the cooperation vector over
//! states (CC, CD, DC, DD) is
//!   p1 = 1 - phi (chi - 1)(R - P)
//!   p2 = 1 - phi ((P - S) + chi (T - P))
//!   p3 = phi ((T - P) + chi (P - S))
//!   p4 = 0
//! feasible whenever all components land in [0, 1].

use serde::{Deserialize, Serialize};

use crate::engine::PayoffMatrix;

/// Best-fit extortionate parameters and the residual they leave.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZdFit {
    pub chi: f64,
    pub phi: f64,
    /// Raw sum of squared componentwise differences, not yet clamped.
    pub residual: f64,
}

/// The extortionate cooperation vector for (chi, phi), or None when any
/// component leaves [0, 1].
pub fn extort_vector(chi: f64, phi: f64, m: &PayoffMatrix) -> Option<[f64; 4]> {
    if chi < 1.0 || phi <= 0.0 {
        return None;
    }
    let (r, s, t, p) = (m.r, m.s, m.t, m.p);
    let v = [
        1.0 - phi * (chi - 1.0) * (r - p),
        1.0 - phi * ((p - s) + chi * (t - p)),
        phi * ((t - p) + chi * (p - s)),
        0.0,
    ];
    let eps = 1e-12;
    if v.iter().all(|&x| (-eps..=1.0 + eps).contains(&x)) {
        Some(v.map(|x| x.clamp(0.0, 1.0)))
    } else {
        None
    }
}

/// Largest feasible phi for a given chi.
pub fn phi_max(chi: f64, m: &PayoffMatrix) -> f64 {
    let (r, s, t, p) = (m.r, m.s, m.t, m.p);
    let mut bound = 1.0 / ((p - s) + chi * (t - p));
    bound = bound.min(1.0 / ((t - p) + chi * (p - s)));
    if chi > 1.0 {
        bound = bound.min(1.0 / ((chi - 1.0) * (r - p)));
    }
    bound
}

fn residual(target: &[f64; 4], v: &[f64; 4]) -> f64 {
    target
        .iter()
        .zip(v)
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

const CHI_RANGE: (f64, f64) = (1.0, 20.0);
const GRID: usize = 64;

fn eval(target: &[f64; 4], chi: f64, phi: f64, m: &PayoffMatrix) -> Option<f64> {
    extort_vector(chi, phi, m).map(|v| residual(target, &v))
}

/// Coarse grid over (chi, phi): chi log-spaced on [1, 20], phi linear on its
/// feasibility interval per chi.
fn grid_best(target: &[f64; 4], m: &PayoffMatrix) -> ZdFit {
    let mut best = ZdFit {
        chi: 1.0,
        phi: phi_max(1.0, m),
        residual: f64::INFINITY,
    };
    let (lo, hi) = CHI_RANGE;
    for i in 0..GRID {
        let frac = i as f64 / (GRID - 1) as f64;
        let chi = lo * (hi / lo).powf(frac);
        let pm = phi_max(chi, m);
        for j in 1..=GRID {
            let phi = pm * j as f64 / GRID as f64;
            if let Some(res) = eval(target, chi, phi, m) {
                if res < best.residual {
                    best = ZdFit { chi, phi, residual: res };
                }
            }
        }
    }
    best
}

/// Local pattern search around the coarse optimum. The step only shrinks
/// when the neighborhood stops improving, so the search can track the curved
/// valley along the feasibility boundary.
fn refine(target: &[f64; 4], mut best: ZdFit, m: &PayoffMatrix) -> ZdFit {
    let mut chi_span = (CHI_RANGE.1 - CHI_RANGE.0) / GRID as f64;
    let mut phi_span = phi_max(best.chi, m) / GRID as f64;
    for _ in 0..400 {
        let mut improved = best;
        for di in -2i32..=2 {
            for dj in -2i32..=2 {
                let chi = (best.chi + f64::from(di) * chi_span / 2.0).max(1.0);
                let phi = best.phi + f64::from(dj) * phi_span / 2.0;
                if phi <= 0.0 {
                    continue;
                }
                if let Some(res) = eval(target, chi, phi, m) {
                    if res < improved.residual {
                        improved = ZdFit { chi, phi, residual: res };
                    }
                }
            }
        }
        if improved.residual >= best.residual * (1.0 - 1e-15) {
            chi_span /= 2.0;
            phi_span /= 2.0;
            if chi_span < 1e-13 && phi_span < 1e-15 {
                best = improved;
                break;
            }
        }
        best = improved;
    }
    best
}

/// Fit the nearest extortionate vector to `p` (conditional cooperation rates
/// over CC, CD, DC, DD).
pub fn fit_zd(p: &[f64; 4], m: &PayoffMatrix) -> ZdFit {
    refine(p, grid_best(p, m), m)
}

/// Residual of the best extortionate fit, clamped to [0, 1].
pub fn sse_to_zd(p: &[f64; 4], m: &PayoffMatrix) -> f64 {
    fit_zd(p, m).residual.clamp(0.0, 1.0)
}
