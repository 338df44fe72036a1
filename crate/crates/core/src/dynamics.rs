//! Free time evolution, convergence of lattice dynamics to the continuum, and
//! Lieb-Robinson bounds for Weyl commutators.
//!
//! All evolutions act mode by mode on `(q^, p^)`:
//! `q^ -> cos(t g) q^ - g sin(t g) p^`, `p^ -> cos(t g) p^ + g^{-1} sin(t g) q^`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::continuum::{embed_continuum, ContinuumField};
use crate::error::{Error, Result};
use crate::filters::TailWeights;
use crate::lattice::{symplectic_form, Lattice, PhaseField};
use crate::numerics::{bisect, CompensatedSum};
use crate::scalemaps::{ScalingMap, Scheme};
use crate::states::{channel_maxima, default_cutoff, Dispersion, MassSchedule};

/// Which dispersion drives a lattice evolution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evolution {
    /// `gamma_{mu_N}` of the field's own level.
    Lattice { m: f64 },
    /// `gamma_{mu_N}` of a coarser level, extended periodically to the
    /// field's level.
    Extended { m: f64, base_level: u32 },
}

/// One mode of the harmonic rotation.
pub fn rotate(q: Complex64, p: Complex64, g: f64, t: f64) -> (Complex64, Complex64) {
    let (s, c) = (g * t).sin_cos();
    (c * q - g * s * p, c * p + s / g * q)
}

/// Evolve a lattice field for time `t`; the output keeps the input's
/// representation.
pub fn evolve(ev: &Evolution, field: &PhaseField, t: f64) -> Result<PhaseField> {
    let lat = *field.lattice();
    let disp = match *ev {
        Evolution::Lattice { m } => MassSchedule::new(m)?.dispersion(&lat),
        Evolution::Extended { m, base_level } => {
            if base_level > lat.level {
                return Err(Error::Level(format!(
                    "extended dynamics of level {base_level} cannot act on level {}",
                    lat.level
                )));
            }
            MassSchedule::new(m)?.dispersion(&Lattice::new(lat.geometry, base_level)?)
        }
    };
    let (q, p) = field.to_momentum().momentum_parts();
    let (mut q2, mut p2) = (q.clone(), p.clone());
    for f in 0..q.len() {
        let g = disp.gamma(&lat.momentum(f));
        let (a, b) = rotate(q[f], p[f], g, t);
        q2[f] = a;
        p2[f] = b;
    }
    let out = PhaseField::momentum(lat, q2, p2)?;
    if field.is_real_space() {
        out.to_real()
    } else {
        Ok(out)
    }
}

/// Continuum evolution with `gamma_m`.
pub fn evolve_continuum(field: &ContinuumField, t: f64, m: f64) -> Result<ContinuumField> {
    if !(m > 0.0) {
        return Err(Error::Invalid("continuum dynamics needs a positive mass".into()));
    }
    let disp = Dispersion::continuum(m);
    let mut out = field.clone();
    let ks: Vec<Vec<f64>> = (0..field.len()).map(|f| field.momentum(f)).collect();
    let (q, p) = out.parts_mut();
    for (f, k) in ks.iter().enumerate() {
        let (a, b) = rotate(q[f], p[f], disp.gamma(k), t);
        q[f] = a;
        p[f] = b;
    }
    // the gamma-weighted norm is conserved mode by mode, so the tail model stays valid
    Ok(out)
}

/// A defect with a bound on the part neglected by the cutoff.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Defect {
    pub value: f64,
    pub tail_bound: f64,
}

/// `|| R^{N'}_inf tau^{(N')}_t R^N_{N'} xi - tau_t R^N_inf xi ||_L`.
pub fn dynamics_defect(
    scheme: &Scheme,
    field: &PhaseField,
    n_prime: u32,
    t: f64,
    schedule: &MassSchedule,
    j_cut: Option<u64>,
) -> Result<Defect> {
    let Scheme::Wavelet(filter) = scheme else {
        return Err(Error::Invalid(
            "dynamics convergence is studied for wavelet schemes".into(),
        ));
    };
    let lat = *field.lattice();
    if n_prime <= lat.level {
        return Err(Error::Level(format!("N' = {n_prime} must exceed N = {}", lat.level)));
    }
    let fine = lat.finer(n_prime - lat.level)?;
    let j_cut = j_cut.unwrap_or_else(|| default_cutoff(&lat).max(fine.r() as u64));
    let m = schedule.m;
    let mapped = ScalingMap::new(scheme.clone(), lat, n_prime)?.apply(&field.to_momentum())?;
    let evolved = evolve(&Evolution::Lattice { m }, &mapped, t)?;
    let lhs = embed_continuum(scheme, &evolved, Some(j_cut))?;
    let rhs = evolve_continuum(&embed_continuum(scheme, field, Some(j_cut))?, t, m)?;
    let diff = lhs.sub(&rhs)?;
    let sq = crate::continuum::norm_continuum(&diff, m)?.value;
    // both sides are eps^{d/2} phi^(eps k) times a rotation of the same data
    let (qm, pm) = channel_maxima(field);
    let d = lat.d();
    let vol = lat.eps().powi(d as i32) * (2.0 * lat.half_length()).powi(-(d as i32));
    let tail = vol
        * filter.decay()?.lattice_tail(
            lat.eps(),
            lat.dk(),
            d,
            j_cut,
            m,
            TailWeights {
                c0: 6.0 * qm * qm / m,
                c_inv: 0.0,
                c1: 4.0 * qm * qm / (m * m) + 10.0 * pm * pm,
            },
        );
    let value = sq.max(0.0).sqrt();
    Ok(Defect {
        value,
        tail_bound: (sq.max(0.0) + tail).sqrt() - value,
    })
}

/// The time-independent majorant of the squared dynamics defect,
/// `4 eps^d (2L)^{-d} sum gamma_m |phi^|^2 [(|q^|/gamma_m + (1+c')^{1/2} |p^|)^2
///  + (|p^| + ((1-c'')^{-1/2} + 1)/2 |q^|/m)^2]`, truncated like the defect.
/// Valid whenever `(1-c'')^{1/2} m <= gamma_{mu_{N'}} <= (1+c')^{1/2} gamma_m`.
pub fn dynamics_envelope(
    scheme: &Scheme,
    field: &PhaseField,
    m: f64,
    c_prime: f64,
    c_second: f64,
    j_cut: Option<u64>,
) -> Result<f64> {
    if !(c_prime > 0.0 && c_prime < 1.0 && c_second > 0.0 && c_second < 1.0) {
        return Err(Error::Invalid("the envelope constants must lie in (0, 1)".into()));
    }
    let lat = *field.lattice();
    let j_cut = j_cut.unwrap_or_else(|| default_cutoff(&lat));
    let emb = embed_continuum(scheme, field, Some(j_cut))?;
    let disp = Dispersion::continuum(m);
    let (q, p) = emb.parts();
    let a = (1.0 + c_prime).sqrt();
    let b = ((1.0 - c_second).powf(-0.5) + 1.0) / 2.0 / m;
    let mut s = CompensatedSum::new();
    for f in 0..emb.len() {
        let g = disp.gamma(&emb.momentum(f));
        // |phi^|^2 eps^d is already inside |q|^2, |p|^2 of the embedding
        let (qa, pa) = (q[f].norm(), p[f].norm());
        s.add(g * ((qa / g + a * pa).powi(2) + (pa + b * qa).powi(2)));
    }
    Ok(4.0 * (2.0 * lat.half_length()).powi(-(lat.d() as i32)) * s.value())
}

/// `||[W(xi), W(eta)]|| = |e^{-i sigma} - 1| = 2 |sin(sigma / 2)|`.
pub fn weyl_commutator_norm(sigma: f64) -> f64 {
    2.0 * (sigma / 2.0).sin().abs()
}

/// The decay parameter minimising the scaling-limit velocity:
/// `(delta/2) e^{delta/2} = e^{-1}`.
pub fn delta0() -> f64 {
    bisect(|x| 0.5 * x * (0.5 * x).exp() - (-1.0f64).exp(), 0.0, 2.0, 1e-15).expect("sign change on [0, 2]")
}

/// `c_mu = (mu_N^2 + 2d)^{1/2}`.
pub fn c_mu(schedule: &MassSchedule, lattice: &Lattice) -> f64 {
    (schedule.mu_sq(lattice) + 2.0 * lattice.d() as f64).sqrt()
}

/// `1/2 c_mu max{2/delta, e^{delta/2 + 1}}`.
pub fn lr_velocity(delta: f64, c_mu: f64) -> f64 {
    0.5 * c_mu * (2.0 / delta).max((delta / 2.0 + 1.0).exp())
}

/// Velocity in the scaling limit, where `c_mu -> 2 sqrt(d)`.
pub fn lr_velocity_limit(delta: f64, d: usize) -> f64 {
    lr_velocity(delta, 2.0 * (d as f64).sqrt())
}

/// Right side of the Lieb-Robinson bound for fields supported in `X`, `Y`:
/// `C_N ||xi||_inf ||eta||_inf sum_{x, y} exp[-(delta/eps_N)(d_N(x, y) - v |t|)]`
/// with `C_N = 2 + c_mu e^{delta/2} + 1/c_mu` and `d_N` the periodic
/// 1-distance.
pub fn lr_bound_rhs(xi: &PhaseField, eta: &PhaseField, t: f64, delta: f64, schedule: &MassSchedule) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::Invalid("delta must be positive".into()));
    }
    let lat = *xi.lattice();
    lat.same_level(eta.lattice())?;
    let c = c_mu(schedule, &lat);
    let big_c = 2.0 + c * (delta / 2.0).exp() + 1.0 / c;
    let v = lr_velocity(delta, c);
    let xs: Vec<Vec<i64>> = xi.support()?.into_iter().map(|f| lat.index(f)).collect();
    let ys: Vec<Vec<i64>> = eta.support()?.into_iter().map(|f| lat.index(f)).collect();
    let side = lat.side() as i64;
    let eps = lat.eps();
    let mut s = CompensatedSum::new();
    for x in &xs {
        for y in &ys {
            let steps: i64 = x
                .iter()
                .zip(y)
                .map(|(a, b)| {
                    let d = (a - b).rem_euclid(side);
                    d.min(side - d)
                })
                .sum();
            s.add((-(delta / eps) * (steps as f64 * eps - v * t.abs())).exp());
        }
    }
    Ok(big_c * xi.sup_norm()? * eta.sup_norm()? * s.value())
}

/// One grid point of a causality scan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CausalityRow {
    pub t: f64,
    #[serde(rename = "M")]
    pub m: u32,
    pub sigma: f64,
    pub exact_norm: f64,
    pub lr_bound: f64,
    /// Floating-point allowance on `exact_norm` from the spectral evolution.
    pub roundoff: f64,
}

impl CausalityRow {
    pub fn bound_holds(&self) -> bool {
        self.exact_norm <= self.lr_bound + self.roundoff
    }
}

/// Exact commutator norms `2|sin(sigma_M(tau_t R xi, R eta)/2)|` and the
/// Lieb-Robinson bound at every level in `levels` and time in `times`.
/// Both fields are mapped to level `M` by the scheme, evolved with the level-M
/// dynamics, and compared there.
pub fn causality_scan(
    scheme: &Scheme,
    xi: &PhaseField,
    eta: &PhaseField,
    levels: &[u32],
    times: &[f64],
    delta: f64,
    schedule: &MassSchedule,
) -> Result<Vec<CausalityRow>> {
    if xi.lattice().geometry != eta.lattice().geometry {
        return Err(Error::Invalid("fields live on different tori".into()));
    }
    let start = xi.lattice().level.max(eta.lattice().level);
    {
        let lat = Lattice::new(xi.lattice().geometry, start)?;
        let a = map_exact(scheme, xi, start)?;
        let b = map_exact(scheme, eta, start)?;
        let sa = a.support()?;
        if b.support()?.iter().any(|f| sa.contains(f)) {
            return Err(Error::Invalid(format!("supports overlap on level {}", lat.level)));
        }
    }
    let grid: Vec<(u32, f64)> = levels
        .iter()
        .flat_map(|&m| times.iter().map(move |&t| (m, t)))
        .collect();
    grid.par_iter()
        .map(|&(m, t)| {
            if m < start {
                return Err(Error::Level(format!("level {m} is coarser than the fields")));
            }
            let a = map_exact(scheme, xi, m)?;
            let b = map_exact(scheme, eta, m)?;
            let at = evolve(&Evolution::Lattice { m: schedule.m }, &a.to_momentum(), t)?;
            let sigma = symplectic_form(&at, &b.to_momentum())?;
            let lat = *a.lattice();
            let n = lat.n_sites()? as f64;
            let (qa, pa) = a.real_parts()?;
            let (qb, pb) = b.real_parts()?;
            let l2 = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
            // Cauchy-Schwarz size of sigma times an FFT round-off factor
            let size = lat.eps().powi(lat.d() as i32) * (l2(&qa) + l2(&pa)) * (l2(&qb) + l2(&pb));
            let roundoff = 16.0 * f64::EPSILON * n.log2().max(1.0) * size;
            Ok(CausalityRow {
                t,
                m,
                sigma,
                exact_norm: weyl_commutator_norm(sigma),
                lr_bound: lr_bound_rhs(&a, &b, t, delta, schedule)?,
                roundoff,
            })
        })
        .collect()
}

// Real-space steps keep exact zeros outside the support; the FFT route would
// smear round-off over the whole torus and void the distance in the bound.
fn map_exact(scheme: &Scheme, field: &PhaseField, level: u32) -> Result<PhaseField> {
    let map = ScalingMap::new(scheme.clone(), *field.lattice(), level)?;
    if scheme.real_filter(field.lattice().d())?.is_some() {
        map.apply_sequential(field)
    } else {
        map.apply(&field.to_real()?)
    }
}

/// `sup_{k in Gamma_N} |gamma_{mu_{N+M}}(k) - gamma_m(k)|`.
pub fn hamiltonian_sup_defect(lattice: &Lattice, m_steps: u32, schedule: &MassSchedule) -> Result<f64> {
    let fine = lattice.finer(m_steps)?;
    let lat_disp = schedule.dispersion(&fine);
    let cont = Dispersion::continuum(schedule.m);
    let mut sup = 0.0f64;
    for f in 0..lattice.n_sites()? {
        let k = lattice.momentum(f);
        sup = sup.max((lat_disp.gamma(&k) - cont.gamma(&k)).abs());
    }
    Ok(sup)
}
