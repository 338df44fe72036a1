//! Dispersion relations, Gaussian ground states and their renormalization
//! flows.
//!
//! A quasi-free state is stored through its exponent `E`, with
//! `omega(W(xi)) = exp(-E(xi))` and
//! `E = 1/4 (2 r_N)^{-d} sum_k [gamma^{-1} |q^|^2 + gamma |p^|^2]`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::continuum::{embed_continuum, norm_continuum};
use crate::error::{Error, Result};
use crate::filters::TailWeights;
use crate::lattice::{Lattice, PhaseField};
use crate::numerics::CompensatedSum;
use crate::report::{FlowReport, FlowRow, FlowStatus};
use crate::scalemaps::{step_momentum, ScalingMap, Scheme};

/// Physical mass and the lattice masses `mu_N^2 = eps_N^2 m^2 + 2d` tied to it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassSchedule {
    pub m: f64,
}

impl MassSchedule {
    pub fn new(m: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::Invalid(format!("mass must be positive, got {m}")));
        }
        Ok(Self { m })
    }

    pub fn mu_sq(&self, lattice: &Lattice) -> f64 {
        let e = lattice.eps();
        e * e * self.m * self.m + 2.0 * lattice.d() as f64
    }

    pub fn mu(&self, lattice: &Lattice) -> f64 {
        self.mu_sq(lattice).sqrt()
    }

    pub fn dispersion(&self, lattice: &Lattice) -> Dispersion {
        Dispersion::Lattice {
            mass_sq: self.m * self.m,
            eps: lattice.eps(),
        }
    }
}

/// Mode energies `gamma(k)`.
///
/// The lattice form `eps^{-2}(mu^2 - 2d) + 2 eps^{-2} sum (1 - cos eps k_j)`
/// is evaluated as `mass_sq + sum (2/eps sin(eps k_j / 2))^2`, which avoids
/// the cancellation in `1 - cos`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Dispersion {
    Lattice { mass_sq: f64, eps: f64 },
    Continuum { m: f64 },
}

impl Dispersion {
    /// Lattice dispersion for a bare lattice mass `mu`.
    pub fn from_mu(mu: f64, lattice: &Lattice) -> Result<Self> {
        let d2 = 2.0 * lattice.d() as f64;
        if mu * mu < d2 {
            return Err(Error::Invalid(format!("mu^2 = {} is below 2d", mu * mu)));
        }
        let e = lattice.eps();
        Ok(Dispersion::Lattice {
            mass_sq: (mu * mu - d2) / (e * e),
            eps: e,
        })
    }

    pub fn continuum(m: f64) -> Self {
        Dispersion::Continuum { m }
    }

    pub fn gamma(&self, k: &[f64]) -> f64 {
        match *self {
            Dispersion::Lattice { mass_sq, eps } => {
                let s: f64 = k.iter().map(|&kj| (2.0 / eps * (eps * kj / 2.0).sin()).powi(2)).sum();
                (mass_sq + s).sqrt()
            }
            Dispersion::Continuum { m } => (m * m + k.iter().map(|x| x * x).sum::<f64>()).sqrt(),
        }
    }
}

/// An exponent value together with a bound on the neglected tail.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exponent {
    pub value: f64,
    pub tail_bound: f64,
}

/// Ground-state exponent of a lattice field for the given dispersion.
pub fn ground_exponent(field: &PhaseField, dispersion: &Dispersion) -> Result<f64> {
    let lat = *field.lattice();
    let mom = field.to_momentum();
    let (q, p) = mom.momentum_parts();
    let mut s = CompensatedSum::new();
    for f in lat.ascending_order()? {
        let g = dispersion.gamma(&lat.momentum(f));
        if !(g > 0.0) {
            return Err(Error::Invalid(format!(
                "dispersion vanishes at k = {:?}",
                lat.momentum(f)
            )));
        }
        s.add(q[f].norm_sqr() / g);
        s.add(g * p[f].norm_sqr());
    }
    Ok(0.25 * (lat.side() as f64).powi(-(lat.d() as i32)) * s.value())
}

/// Exponent of the state `omega^{(N)}_M`, the ground state of level `N + M`
/// pulled back along `R^N_{N+M}`.
pub fn flow_exponent(scheme: &Scheme, field: &PhaseField, m_steps: u32, schedule: &MassSchedule) -> Result<f64> {
    let lat = *field.lattice();
    let map = ScalingMap::new(scheme.clone(), lat, lat.level + m_steps)?;
    let image = map.apply(&field.to_momentum())?;
    ground_exponent(&image, &schedule.dispersion(&map.target()))
}

/// Mass-`2^{-M} m` ground exponent at level `N`; the momentum-transfer flow
/// must reproduce it.
pub fn transfer_reference(field: &PhaseField, m_steps: u32, schedule: &MassSchedule) -> Result<f64> {
    let m = schedule.m * (-f64::from(m_steps)).exp2();
    let disp = MassSchedule::new(m)?.dispersion(field.lattice());
    ground_exponent(field, &disp)
}

/// Default continuum cutoff: `|j_i| <= 64 r_N` on `(pi/L) Z^d`.
pub fn default_cutoff(lattice: &Lattice) -> u64 {
    64 * lattice.r() as u64
}

/// Exponent of the limit state `lim_M omega^{(N)}_M`.
pub fn limit_exponent(scheme: &Scheme, field: &PhaseField, m: f64, j_cut: Option<u64>) -> Result<Exponent> {
    let lat = *field.lattice();
    let schedule = MassSchedule::new(m)?;
    match scheme {
        Scheme::Wavelet(f) => {
            let j_cut = j_cut.unwrap_or_else(|| default_cutoff(&lat));
            check_cutoff(&lat, j_cut)?;
            let d = lat.d();
            let (q, p) = field.to_momentum().momentum_parts();
            let j = j_cut as i64;
            let eps = lat.eps();
            let dk = lat.dk();
            let phi_sq: Vec<f64> = (-j..=j)
                .map(|i| f.phi_hat_sq_1d(eps * dk * i as f64))
                .collect::<Result<_>>()?;
            let disp = Dispersion::continuum(m);
            let mut sum = CompensatedSum::new();
            for idx in ascending_box(d, j)? {
                let mut w = 1.0;
                let mut k = Vec::with_capacity(d);
                for &i in &idx {
                    w *= phi_sq[(i + j) as usize];
                    k.push(i as f64 * dk);
                }
                if w == 0.0 {
                    continue;
                }
                let src = lat.flat(&idx);
                let g = disp.gamma(&k);
                sum.add(w * (q[src].norm_sqr() / g + g * p[src].norm_sqr()));
            }
            let pref = 0.25 * eps.powi(d as i32) * (2.0 * lat.half_length()).powi(-(d as i32));
            let (qm, pm) = channel_maxima(field);
            let tail = f.decay()?.lattice_tail(
                eps,
                dk,
                d,
                j_cut,
                m,
                TailWeights {
                    c_inv: qm * qm,
                    c1: pm * pm,
                    ..Default::default()
                },
            );
            Ok(Exponent {
                value: pref * sum.value(),
                tail_bound: pref * tail,
            })
        }
        Scheme::MomentumCutoff => Ok(Exponent {
            value: ground_exponent(field, &Dispersion::continuum(schedule.m))?,
            tail_bound: 0.0,
        }),
        Scheme::MomentumTransfer => Err(Error::Invalid(
            "the momentum-transfer flow tends to the massless ground state, which is not defined".into(),
        )),
        Scheme::BlockSpin | Scheme::Point => Err(Error::Invalid(format!(
            "the {} scheme does not define a limit state on the lattice algebra; use two-point flows",
            scheme.tag()
        ))),
    }
}

/// `1/4 ||R^N_inf xi||^2` computed through the continuum embedding.
pub fn continuum_exponent_via_embedding(
    scheme: &Scheme,
    field: &PhaseField,
    m: f64,
    j_cut: Option<u64>,
) -> Result<Exponent> {
    if !matches!(scheme, Scheme::Wavelet(_)) {
        return Err(Error::Invalid("the embedding comparison needs a wavelet scheme".into()));
    }
    let emb = embed_continuum(scheme, field, j_cut)?;
    let n = norm_continuum(&emb, m)?;
    Ok(Exponent {
        value: 0.25 * n.value,
        tail_bound: 0.25 * n.tail_bound,
    })
}

pub(crate) fn check_cutoff(lat: &Lattice, j_cut: u64) -> Result<()> {
    if j_cut < lat.r() as u64 {
        return Err(Error::Invalid(format!(
            "cutoff {j_cut} lies below the Nyquist index {} of level {}",
            lat.r(),
            lat.level
        )));
    }
    Ok(())
}

pub(crate) fn channel_maxima(field: &PhaseField) -> (f64, f64) {
    let (q, p) = field.to_momentum().momentum_parts();
    let mx = |v: &[Complex64]| v.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    (mx(&q), mx(&p))
}

/// All multi-indices in `[-j, j]^d`, ordered by ascending `|j|`.
pub(crate) fn ascending_box(d: usize, j: i64) -> Result<Vec<Vec<i64>>> {
    let width = (2 * j + 1) as usize;
    let total = (0..d).try_fold(1usize, |acc, _| acc.checked_mul(width).filter(|&n| n <= 1 << 26));
    let total = total.ok_or_else(|| Error::Invalid("continuum cutoff box is too large".into()))?;
    let mut out: Vec<(i64, Vec<i64>)> = (0..total)
        .map(|mut f| {
            let mut idx = vec![0i64; d];
            for slot in idx.iter_mut().rev() {
                *slot = (f % width) as i64 - j;
                f /= width;
            }
            (idx.iter().map(|x| x * x).sum(), idx)
        })
        .collect();
    out.sort();
    Ok(out.into_iter().map(|(_, i)| i).collect())
}

/// Flow of exponents `M = 0..=m_max` compared with the scheme's limit.
///
/// Schemes without a limit state (block-spin, point) report the increment
/// from the previous step in the `defect` column and are flagged divergent
/// when the increments stop decaying.
pub fn convergence_report(
    scheme: &Scheme,
    field: &PhaseField,
    m_max: u32,
    schedule: &MassSchedule,
    tolerance: f64,
) -> Result<FlowReport> {
    let lat = *field.lattice();
    let limit = match scheme {
        Scheme::Wavelet(_) | Scheme::MomentumCutoff => Some(limit_exponent(scheme, field, schedule.m, None)?),
        _ => None,
    };
    let values: Vec<f64> = (0..=m_max)
        .map(|m| flow_exponent(scheme, field, m, schedule))
        .collect::<Result<_>>()?;
    // omega^{(N)}_{M+1} = omega^{(N+1)}_M o alpha^N_{N+1}
    let stepped = step_momentum(scheme, &field.to_momentum())?;
    let mut consistency = 0.0f64;
    for m in 1..=m_max {
        let other = flow_exponent(scheme, &stepped, m - 1, schedule)?;
        let scale = values[m as usize].abs().max(1.0);
        consistency = consistency.max((values[m as usize] - other).abs() / scale);
    }
    let mut rows = Vec::with_capacity(values.len());
    for (m, &value) in values.iter().enumerate() {
        let (defect, tail) = match (scheme, &limit) {
            (_, Some(l)) => ((value - l.value).abs(), l.tail_bound),
            (Scheme::MomentumTransfer, None) => ((value - transfer_reference(field, m as u32, schedule)?).abs(), 0.0),
            _ => (
                if m == 0 {
                    f64::NAN
                } else {
                    (value - values[m - 1]).abs()
                },
                f64::NAN,
            ),
        };
        rows.push(FlowRow {
            scheme: scheme.tag(),
            d: lat.d(),
            n: lat.level,
            m: m as u32,
            value,
            defect,
            tail_bound: tail,
        });
    }
    let last = rows.last().map(|r| r.defect).unwrap_or(f64::NAN);
    let status = match scheme {
        Scheme::BlockSpin | Scheme::Point => {
            if increments_stall(&values) {
                FlowStatus::Divergent
            } else {
                FlowStatus::Inconclusive
            }
        }
        _ => {
            let tail = limit.map(|l| l.tail_bound).unwrap_or(0.0);
            if last + tail <= tolerance {
                FlowStatus::Converged
            } else {
                FlowStatus::Inconclusive
            }
        }
    };
    Ok(FlowReport {
        rows,
        limit: limit.map(|l| l.value),
        limit_tail: limit.map(|l| l.tail_bound),
        consistency_defect: consistency,
        status,
    })
}

// Increments that shrink by less than 10% per step: logarithmic or faster
// growth of the exponent.
fn increments_stall(values: &[f64]) -> bool {
    if values.len() < 4 {
        return false;
    }
    let n = values.len();
    let inc: Vec<f64> = (n - 3..n).map(|i| values[i] - values[i - 1]).collect();
    inc.iter().all(|&x| x > 1e-12 * values[n - 1].abs()) && inc[2] >= 0.9 * inc[1] && inc[1] >= 0.9 * inc[0]
}

/// A real trigonometric polynomial on the torus,
/// `f(x) = (2L)^{-d} sum_k f^(k) e^{i k x}`, `k = (pi/L) j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    d: usize,
    half_length: f64,
    modes: BTreeMap<Vec<i64>, Complex64>,
}

impl TestFunction {
    /// From Fourier coefficients; they must satisfy `f^(-k) = conj f^(k)`.
    pub fn new(d: usize, half_length: f64, modes: Vec<(Vec<i64>, Complex64)>) -> Result<Self> {
        let mut map: BTreeMap<Vec<i64>, Complex64> = BTreeMap::new();
        for (j, c) in modes {
            if j.len() != d {
                return Err(Error::Invalid(format!("mode {j:?} has the wrong dimension")));
            }
            *map.entry(j).or_default() += c;
        }
        let scale = map.values().fold(0.0f64, |a, c| a.max(c.norm()));
        for (j, c) in &map {
            let neg: Vec<i64> = j.iter().map(|x| -x).collect();
            let partner = map.get(&neg).copied().unwrap_or_default();
            if (partner - c.conj()).norm() > 1e-13 * scale {
                return Err(Error::Invalid(format!(
                    "coefficients at {j:?} do not describe a real function"
                )));
            }
        }
        Ok(Self {
            d,
            half_length,
            modes: map,
        })
    }

    /// `f(x) = sum a cos(k x) + b sin(k x)` over `(j, a, b)`.
    pub fn trig(d: usize, half_length: f64, terms: &[(Vec<i64>, f64, f64)]) -> Result<Self> {
        let vol = (2.0 * half_length).powi(d as i32);
        let mut modes = Vec::new();
        for (j, a, b) in terms {
            if j.iter().all(|&x| x == 0) {
                modes.push((j.clone(), Complex64::new(vol * a, 0.0)));
                continue;
            }
            let neg: Vec<i64> = j.iter().map(|x| -x).collect();
            modes.push((j.clone(), Complex64::new(vol * a / 2.0, -vol * b / 2.0)));
            modes.push((neg, Complex64::new(vol * a / 2.0, vol * b / 2.0)));
        }
        Self::new(d, half_length, modes)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn modes(&self) -> impl Iterator<Item = (&Vec<i64>, &Complex64)> {
        self.modes.iter()
    }

    pub fn fourier(&self, j: &[i64]) -> Complex64 {
        self.modes.get(j).copied().unwrap_or_default()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let dk = std::f64::consts::PI / self.half_length;
        let s: f64 = self
            .modes
            .iter()
            .map(|(j, c)| {
                let phase: f64 = j.iter().zip(x).map(|(&ji, &xi)| ji as f64 * dk * xi).sum();
                (c * Complex64::from_polar(1.0, phase)).re
            })
            .sum();
        s * (2.0 * self.half_length).powi(-(self.d as i32))
    }
}

/// The three smeared two-point functions. `phi_pi` is the imaginary part;
/// the real part vanishes for real test functions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoPoint {
    pub phi_phi: f64,
    pub pi_pi: f64,
    pub phi_pi: f64,
}

impl TwoPoint {
    /// Multiply by `eps_N^{1-d}`, `eps_N^{-(1+d)}`, `eps_N^{-d}` per channel.
    pub fn rescaled(&self, lattice: &Lattice) -> TwoPoint {
        let e = lattice.eps();
        let d = lattice.d() as f64;
        TwoPoint {
            phi_phi: self.phi_phi * e.powf(1.0 - d),
            pi_pi: self.pi_pi * e.powf(-(1.0 + d)),
            phi_pi: self.phi_pi * e.powf(-d),
        }
    }

    pub fn max_abs_diff(&self, other: &TwoPoint) -> f64 {
        (self.phi_phi - other.phi_phi)
            .abs()
            .max((self.pi_pi - other.pi_pi).abs())
            .max((self.phi_pi - other.phi_pi).abs())
    }
}

/// Two-point functions of `omega^{(N)}_M` smeared against `f`, `g`.
///
/// Block-spin smears with `eps_N^{-d} chi_{[0, eps_N)^d} * f`, the point
/// scheme samples `f` itself; the smeared function is sampled on level
/// `N + M` and its lattice transform is the aliased sum
/// `A_f(q) = sum_{k = q mod Gamma_{N+M}} f^(k) H(k)`.
pub fn two_point_flow(
    scheme: &Scheme,
    lattice: &Lattice,
    m_steps: u32,
    f: &TestFunction,
    g: &TestFunction,
    schedule: &MassSchedule,
) -> Result<TwoPoint> {
    let d = lattice.d();
    let l = lattice.half_length();
    for t in [f, g] {
        if t.d != d || (t.half_length - l).abs() > 1e-12 * l {
            return Err(Error::Invalid("test function lives on a different torus".into()));
        }
    }
    let eps_n = lattice.eps();
    let smear = |k: &[f64]| -> Complex64 {
        match scheme {
            Scheme::BlockSpin => k
                .iter()
                .map(|&kj| {
                    let x = kj * eps_n / 2.0;
                    let sinc = if x == 0.0 { 1.0 } else { x.sin() / x };
                    Complex64::from_polar(sinc, -x)
                })
                .product(),
            _ => Complex64::new(1.0, 0.0),
        }
    };
    if !matches!(scheme, Scheme::BlockSpin | Scheme::Point) {
        return Err(Error::Invalid(format!(
            "two-point flows are provided for block-spin and point schemes, not {}",
            scheme.tag()
        )));
    }
    let target = lattice.finer(m_steps)?;
    let dk = lattice.dk();
    let alias = |t: &TestFunction| -> BTreeMap<Vec<i64>, Complex64> {
        let mut a: BTreeMap<Vec<i64>, Complex64> = BTreeMap::new();
        for (j, c) in t.modes() {
            let k: Vec<f64> = j.iter().map(|&x| x as f64 * dk).collect();
            let wrapped: Vec<i64> = j.iter().map(|&x| target.wrap(x)).collect();
            *a.entry(wrapped).or_default() += c * smear(&k);
        }
        a
    };
    let (af, ag) = (alias(f), alias(g));
    let disp = schedule.dispersion(&target);
    let mut keys: Vec<&Vec<i64>> = af.keys().filter(|k| ag.contains_key(*k)).collect();
    keys.sort_by_key(|j| j.iter().map(|x| x * x).sum::<i64>());
    let (mut ff, mut mm, mut fm) = (CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new());
    for j in keys {
        let k: Vec<f64> = j.iter().map(|&x| x as f64 * dk).collect();
        let gam = disp.gamma(&k);
        let prod = af[j].conj() * ag[j];
        ff.add(prod.re / gam);
        mm.add(prod.re * gam);
        fm.add(prod.re);
    }
    let vol = (2.0 * l).powi(-(d as i32));
    let e = |p: f64| eps_n.powf(p);
    let dd = d as f64;
    Ok(TwoPoint {
        phi_phi: 0.5 * vol * e(dd - 1.0) * ff.value(),
        pi_pi: 0.5 * vol * e(dd + 1.0) * mm.value(),
        phi_pi: 0.5 * vol * e(dd) * fm.value(),
    })
}

/// Continuum two-point functions of mass `m` on the torus.
pub fn two_point_limit(f: &TestFunction, g: &TestFunction, m: f64) -> Result<TwoPoint> {
    if f.d != g.d || (f.half_length - g.half_length).abs() > 1e-12 * f.half_length {
        return Err(Error::Invalid("test functions live on different tori".into()));
    }
    let disp = Dispersion::continuum(m);
    let dk = std::f64::consts::PI / f.half_length;
    let mut keys: Vec<&Vec<i64>> = f.modes.keys().filter(|k| g.modes.contains_key(*k)).collect();
    keys.sort_by_key(|j| j.iter().map(|x| x * x).sum::<i64>());
    let (mut ff, mut mm, mut fm) = (CompensatedSum::new(), CompensatedSum::new(), CompensatedSum::new());
    for j in keys {
        let k: Vec<f64> = j.iter().map(|&x| x as f64 * dk).collect();
        let gam = disp.gamma(&k);
        let prod = (f.modes[j].conj() * g.modes[j]).re;
        ff.add(prod / gam);
        mm.add(prod * gam);
        fm.add(prod);
    }
    let vol = (2.0 * f.half_length).powi(-(f.d as i32));
    Ok(TwoPoint {
        phi_phi: 0.5 * vol * ff.value(),
        pi_pi: 0.5 * vol * mm.value(),
        phi_pi: 0.5 * vol * fm.value(),
    })
}
