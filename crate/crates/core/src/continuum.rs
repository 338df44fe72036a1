//! Continuum one-particle spaces on the torus and on the line.
//!
//! Continuum fields are momentum-space pairs `(q^, p^)` on `(pi/L) Z^d`,
//! truncated to a box `|j_i| <= J`, with norm
//! `||xi||_L^2 = (2L)^{-d} sum_k |gamma^{-1/2} q^ + i gamma^{1/2} p^|^2`.
//! On the line the sum becomes `(2 pi)^{-d} int dk`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::filters::{DecayCertificate, FilterBank, TailWeights};
use crate::lattice::PhaseField;
use crate::numerics::{csum, gauss_legendre, integrate_split, CompensatedSum};
use crate::scalemaps::Scheme;
use crate::states::{ascending_box, channel_maxima, check_cutoff, default_cutoff, Dispersion};

/// How the part of a field beyond its cutoff box is controlled.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Tail {
    /// Nothing outside the box.
    Exact,
    /// `|q^(k)| <= q_amp prod_i env(eps k_i)`, likewise for `p^`.
    Envelope {
        cert: DecayCertificate,
        eps: f64,
        q_amp: f64,
        p_amp: f64,
    },
    Unbounded,
}

/// A truncated continuum field on the torus.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuumField {
    d: usize,
    half_length: f64,
    j_cut: u64,
    q: Vec<Complex64>,
    p: Vec<Complex64>,
    tail: Tail,
    note: Option<String>,
}

impl ContinuumField {
    pub fn zeros(d: usize, half_length: f64, j_cut: u64) -> Result<Self> {
        let width = 2 * j_cut as usize + 1;
        let n = (0..d)
            .try_fold(1usize, |a, _| a.checked_mul(width).filter(|&n| n <= 1 << 26))
            .ok_or_else(|| Error::Invalid("continuum cutoff box is too large".into()))?;
        Ok(Self {
            d,
            half_length,
            j_cut,
            q: vec![Complex64::new(0.0, 0.0); n],
            p: vec![Complex64::new(0.0, 0.0); n],
            tail: Tail::Exact,
            note: None,
        })
    }

    /// Build from explicit coefficients; entries outside the box are an error.
    pub fn from_modes(
        d: usize,
        half_length: f64,
        j_cut: u64,
        modes: &[(Vec<i64>, Complex64, Complex64)],
    ) -> Result<Self> {
        let mut out = Self::zeros(d, half_length, j_cut)?;
        for (j, a, b) in modes {
            let f = out
                .flat(j)
                .ok_or_else(|| Error::Invalid(format!("mode {j:?} lies outside the cutoff box")))?;
            out.q[f] += a;
            out.p[f] += b;
        }
        Ok(out)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn j_cut(&self) -> u64 {
        self.j_cut
    }

    pub fn tail(&self) -> Tail {
        self.tail
    }

    /// Set when the embedding is legal but its norm is not expected to be finite.
    pub fn note(&self) -> Option<&str> {
        self.note.as_deref()
    }

    pub fn parts(&self) -> (&[Complex64], &[Complex64]) {
        (&self.q, &self.p)
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut [Complex64], &mut [Complex64]) {
        (&mut self.q, &mut self.p)
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    /// Multi-index of a flat position (last axis fastest).
    pub fn index(&self, mut flat: usize) -> Vec<i64> {
        let width = 2 * self.j_cut as usize + 1;
        let mut idx = vec![0i64; self.d];
        for slot in idx.iter_mut().rev() {
            *slot = (flat % width) as i64 - self.j_cut as i64;
            flat /= width;
        }
        idx
    }

    pub fn flat(&self, idx: &[i64]) -> Option<usize> {
        let j = self.j_cut as i64;
        let width = (2 * j + 1) as usize;
        if idx.len() != self.d || idx.iter().any(|x| x.abs() > j) {
            return None;
        }
        Some(idx.iter().fold(0usize, |acc, &x| acc * width + (x + j) as usize))
    }

    pub fn momentum(&self, flat: usize) -> Vec<f64> {
        let dk = PI / self.half_length;
        self.index(flat).iter().map(|&j| j as f64 * dk).collect()
    }

    fn same_box(&self, other: &ContinuumField) -> Result<()> {
        if self.d != other.d || self.j_cut != other.j_cut || self.half_length != other.half_length {
            return Err(Error::Invalid("continuum fields live on different boxes".into()));
        }
        Ok(())
    }

    /// Difference of two fields. The tail of the result is unknown; callers
    /// that can bound it do so separately.
    pub fn sub(&self, other: &ContinuumField) -> Result<ContinuumField> {
        self.same_box(other)?;
        let tail = match (self.tail, other.tail) {
            (Tail::Exact, Tail::Exact) => Tail::Exact,
            _ => Tail::Unbounded,
        };
        Ok(ContinuumField {
            d: self.d,
            half_length: self.half_length,
            j_cut: self.j_cut,
            q: self.q.iter().zip(&other.q).map(|(a, b)| a - b).collect(),
            p: self.p.iter().zip(&other.p).map(|(a, b)| a - b).collect(),
            tail,
            note: None,
        })
    }

    pub fn max_abs_diff(&self, other: &ContinuumField) -> Result<f64> {
        self.same_box(other)?;
        Ok(self
            .q
            .iter()
            .zip(&other.q)
            .chain(self.p.iter().zip(&other.p))
            .fold(0.0f64, |m, (a, b)| m.max((a - b).norm())))
    }

    pub(crate) fn with_tail(mut self, tail: Tail) -> Self {
        self.tail = tail;
        self
    }
}

/// `R^N_inf(q^, p^) = eps_N^{d/2} phi^(eps_N k) (q^, p^)` on `(pi/L) Z^d`,
/// with `q^, p^` extended periodically. Point scheme: `phi^ = 1`; block-spin
/// is accepted but noted, since its momentum norm diverges.
pub fn embed_continuum(scheme: &Scheme, field: &PhaseField, j_cut: Option<u64>) -> Result<ContinuumField> {
    let lat = *field.lattice();
    let d = lat.d();
    let filter = scheme
        .real_filter(d)?
        .ok_or_else(|| Error::Invalid(format!("the {} scheme has no continuum embedding", scheme.tag())))?;
    let j_cut = j_cut.unwrap_or_else(|| default_cutoff(&lat));
    check_cutoff(&lat, j_cut)?;
    let mut out = ContinuumField::zeros(d, lat.half_length(), j_cut)?;
    let eps = lat.eps();
    let dk = lat.dk();
    let j = j_cut as i64;
    let phi: Vec<Complex64> = (-j..=j)
        .map(|i| {
            filter
                .cascade_phi_hat(&[eps * dk * i as f64], crate::filters::CASCADE_DEPTH)
                .map(|c| c.value)
        })
        .collect::<Result<_>>()?;
    let scale = eps.powf(d as f64 / 2.0);
    let (q, p) = field.to_momentum().momentum_parts();
    let src_of: Vec<usize> = (0..out.len()).map(|f| lat.flat(&out.index(f))).collect();
    for (f, &src) in src_of.iter().enumerate() {
        let w: Complex64 = out
            .index(f)
            .iter()
            .map(|&i| phi[(i + j) as usize])
            .product::<Complex64>()
            * scale;
        out.q[f] = w * q[src];
        out.p[f] = w * p[src];
    }
    let (qm, pm) = channel_maxima(field);
    let tail = match scheme {
        Scheme::Point => Tail::Unbounded,
        _ => Tail::Envelope {
            cert: filter.decay()?,
            eps,
            q_amp: scale * qm,
            p_amp: scale * pm,
        },
    };
    if matches!(scheme, Scheme::BlockSpin) {
        out.note = Some("block-spin embedding: the momentum norm of the limit diverges".into());
    }
    Ok(out.with_tail(tail))
}

/// A value with a bound on the neglected tail.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormValue {
    pub value: f64,
    pub tail_bound: f64,
}

/// Squared torus norm `||xi||_L^2` of a truncated field.
pub fn norm_continuum(field: &ContinuumField, m: f64) -> Result<NormValue> {
    if !(m > 0.0) {
        return Err(Error::Invalid("the continuum norm needs a positive mass".into()));
    }
    let disp = Dispersion::continuum(m);
    let mut s = CompensatedSum::new();
    for idx in ascending_box(field.d, field.j_cut as i64)? {
        let f = field.flat(&idx).expect("index inside the box");
        let g = disp.gamma(&field.momentum(f));
        let v = field.q[f] / g.sqrt() + Complex64::i() * g.sqrt() * field.p[f];
        s.add(v.norm_sqr());
    }
    let vol = (2.0 * field.half_length).powi(-(field.d as i32));
    // outside a symmetric box the cross terms of conjugate pairs cancel
    let tail = match field.tail {
        Tail::Exact => 0.0,
        Tail::Unbounded => f64::INFINITY,
        Tail::Envelope {
            cert,
            eps,
            q_amp,
            p_amp,
        } => cert.lattice_tail(
            eps,
            PI / field.half_length,
            field.d,
            field.j_cut,
            m,
            TailWeights {
                c_inv: q_amp * q_amp,
                c1: p_amp * p_amp,
                ..Default::default()
            },
        ),
    };
    Ok(NormValue {
        value: vol * s.value(),
        tail_bound: vol * tail,
    })
}

/// Order of a modified Bessel function of the second kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BesselOrder {
    Zero,
    One,
}

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `K_0(z)` or `K_1(z)` for `z > 0`: power series for `z <= 2`, Steed's
/// continued fraction up to `z = 25`, asymptotic series beyond.
pub fn bessel_k(order: BesselOrder, z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Invalid(format!("Bessel K needs a positive argument, got {z}")));
    }
    let (k0, k1) = bessel_k01(z);
    Ok(match order {
        BesselOrder::Zero => k0,
        BesselOrder::One => k1,
    })
}

pub(crate) fn bessel_k01(z: f64) -> (f64, f64) {
    if z <= 2.0 {
        k01_series(z)
    } else if z <= 25.0 {
        k01_steed(z)
    } else {
        (k_asymptotic(0.0, z), k_asymptotic(1.0, z))
    }
}

fn k01_series(z: f64) -> (f64, f64) {
    let y = z * z / 4.0;
    let lg = (z / 2.0).ln();
    // K0 = -(ln(z/2) + gamma) I0 + sum y^k/(k!)^2 H_k
    let (mut i0, mut s0) = (0.0, 0.0);
    let (mut i1, mut s1) = (0.0, 0.0);
    let mut t = 1.0; // y^k / (k!)^2
    let mut h = 0.0; // H_k
    for k in 0..60 {
        let kf = k as f64;
        if k > 0 {
            t *= y / (kf * kf);
            h += 1.0 / kf;
        }
        i0 += t;
        s0 += t * h;
        // y^k / (k! (k+1)!) = t / (k + 1)
        let u = t / (kf + 1.0);
        i1 += u;
        // psi(k+1) + psi(k+2) = 2 H_k + 1/(k+1) - 2 gamma
        s1 += u * (2.0 * h + 1.0 / (kf + 1.0) - 2.0 * EULER_GAMMA);
        if t < 1e-18 * i0 {
            break;
        }
    }
    let k0 = -(lg + EULER_GAMMA) * i0 + s0;
    let k1 = 1.0 / z + lg * (z / 2.0) * i1 - z / 4.0 * s1;
    (k0, k1)
}

fn k01_steed(x: f64) -> (f64, f64) {
    // Temme's form of Steed's CF2 for nu = 0
    let a1 = 0.25;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let (mut q1, mut q2) = (0.0, 1.0);
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..10_000 {
        a -= 2.0 * (i as f64 - 1.0);
        c = -a * c / i as f64;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    let h = a1 * h;
    let k0 = (PI / (2.0 * x)).sqrt() * (-x).exp() / s;
    let k1 = k0 * (x + 0.5 - h) / x;
    (k0, k1)
}

fn k_asymptotic(nu: f64, z: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        let kf = k as f64;
        let next = term * (mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * z);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    (PI / (2.0 * z)).sqrt() * (-z).exp() * sum
}

/// `int_0^inf exp(-z cosh t) cosh(nu t) dt` by the trapezoidal rule, which
/// converges geometrically for this integrand. Independent reference for
/// [`bessel_k`].
pub fn bessel_k_integral(order: BesselOrder, z: f64) -> f64 {
    let nu = match order {
        BesselOrder::Zero => 0.0,
        BesselOrder::One => 1.0,
    };
    let h = 0.02;
    let f = |t: f64| (-z * t.cosh()).exp() * (nu * t).cosh();
    let mut s = CompensatedSum::new();
    s.add(0.5 * f(0.0));
    let mut i = 1;
    loop {
        let v = f(i as f64 * h);
        s.add(v);
        if v < 1e-300 || (i > 50 && v < 1e-22 * s.value()) {
            break;
        }
        i += 1;
    }
    h * s.value()
}

/// A smooth bump `a exp(-1 / (1 - ((x - c)/w)^2))` supported in `(c - w, c + w)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: f64,
    pub width: f64,
    pub amplitude: f64,
}

impl Bump {
    pub fn eval(&self, x: f64) -> f64 {
        let y = (x - self.center) / self.width;
        if y.abs() >= 1.0 {
            0.0
        } else {
            self.amplitude * (-1.0 / (1.0 - y * y)).exp()
        }
    }

    // weighted nodes of a panelled Gauss-Legendre rule over the support
    fn nodes(&self, panels: usize, order: usize) -> Vec<(f64, f64)> {
        let (x, w) = gauss_legendre(order);
        let lo = self.center - self.width;
        let h = 2.0 * self.width / panels as f64;
        let mut out = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let c = lo + (p as f64 + 0.5) * h;
            for (xi, wi) in x.iter().zip(&w) {
                let t = c + 0.5 * h * xi;
                out.push((t, 0.5 * h * wi * self.eval(t)));
            }
        }
        out
    }
}

/// A real function given as a sum of bumps.
fn sum_nodes(f: &[Bump], panels: usize, order: usize) -> Vec<(f64, f64)> {
    f.iter().flat_map(|b| b.nodes(panels, order)).collect()
}

fn fourier(nodes: &[(f64, f64)], k: f64) -> Complex64 {
    let mut re = CompensatedSum::new();
    let mut im = CompensatedSum::new();
    for &(x, w) in nodes {
        let (s, c) = (k * x).sin_cos();
        re.add(w * c);
        im.add(-w * s);
    }
    Complex64::new(re.value(), im.value())
}

/// Both sides of the finite-volume correction identities for the
/// `gamma^{-1}` (minus) and `gamma` (plus) channels, at `d = 1`.
///
/// The left sides are `int dk - (pi/L) sum_k` of `gamma^{-/+1} conj(xi^) eta^`;
/// the right sides are the double integrals against the kernels
/// `Q_-(z) = sum_{n != 0} 2 K0(m|z - 2Ln|)` and
/// `Q_+(z) = -sum_{n != 0} m K1(m|z - 2Ln|) / |z - 2Ln|`.
/// The Fourier conventions used here give `lhs = -rhs` in the minus channel
/// and `lhs = -2 rhs` in the plus channel; `factor_*` record these.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoissonCheck {
    pub lhs_minus: f64,
    pub rhs_minus: f64,
    pub lhs_plus: f64,
    pub rhs_plus: f64,
    pub lhs_error: f64,
    pub rhs_error: f64,
    pub factor_minus: f64,
    pub factor_plus: f64,
}

impl PoissonCheck {
    pub fn residual_minus(&self) -> f64 {
        (self.lhs_minus - self.factor_minus * self.rhs_minus).abs()
    }

    pub fn residual_plus(&self) -> f64 {
        (self.lhs_plus - self.factor_plus * self.rhs_plus).abs()
    }
}

pub fn poisson_defect_check(xi: &[Bump], eta: &[Bump], half_length: f64, m: f64) -> Result<PoissonCheck> {
    if !(m > 0.0 && half_length > 0.0) {
        return Err(Error::Invalid("mass and volume must be positive".into()));
    }
    for b in xi.iter().chain(eta) {
        if !(b.width > 0.0) || b.center - b.width <= -half_length || b.center + b.width >= half_length {
            return Err(Error::Invalid(format!("bump {b:?} is not supported inside (-L, L)")));
        }
    }
    let nx = sum_nodes(xi, 16, 32);
    let ny = sum_nodes(eta, 16, 32);
    let product = |k: f64| (fourier(&nx, k).conj() * fourier(&ny, k)).re;
    // Cutoff where the transforms have died out, capped at the band the
    // node rule resolves (32-point panels of width w/8) and at the first
    // sign of the quadrature noise floor. Integral and sum are cut at the
    // same node with a half end weight, so their tails cancel to trapezoid
    // order and only the end term enters the error.
    let scale = (0..64).map(|i| product(i as f64).abs()).fold(0.0, f64::max).max(1e-300);
    let widest = xi.iter().chain(eta).map(|b| b.width).fold(0.0, f64::max);
    let cap = 256.0 / widest;
    let mut kc = 32.0f64.min(cap);
    let mut last = f64::INFINITY;
    while kc < cap {
        let probe = (0..16)
            .map(|i| product(kc * (1.0 + i as f64 / 16.0)).abs())
            .fold(0.0, f64::max);
        if probe > last {
            kc *= 0.5;
            break;
        }
        if probe * (kc + m) < 1e-14 * scale {
            break;
        }
        last = probe;
        kc = (2.0 * kc).min(cap);
    }
    let dk = PI / half_length;
    let jmax = (kc / dk).ceil() as i64;
    let kc = jmax as f64 * dk;
    let disp = Dispersion::continuum(m);
    let g = |k: f64| disp.gamma(&[k]);
    let breaks: Vec<f64> = {
        let mut b = vec![0.0, m.min(kc)];
        let mut x = b[1];
        while x < kc {
            x = (x + 0.5).min(kc);
            b.push(x);
        }
        b
    };
    // The integrand is analytic in a strip, so fixed Gauss-Legendre panels
    // converge geometrically; a lower order gives the error estimate.
    let panel_rule = |order: usize| -> (f64, f64) {
        let (x, w) = gauss_legendre(order);
        let parts: Vec<(f64, f64)> = breaks
            .par_windows(2)
            .map(|b| {
                let (c, h) = (0.5 * (b[0] + b[1]), 0.5 * (b[1] - b[0]));
                let mut a = CompensatedSum::new();
                let mut p = CompensatedSum::new();
                for (xi, wi) in x.iter().zip(&w) {
                    let k = c + h * xi;
                    let v = h * wi * product(k);
                    a.add(v / g(k));
                    p.add(v * g(k));
                }
                (a.value(), p.value())
            })
            .collect();
        (csum(parts.iter().map(|v| v.0)), csum(parts.iter().map(|v| v.1)))
    };
    let (im, ip) = panel_rule(24);
    let (im_lo, ip_lo) = panel_rule(16);
    let quad_error = (im - im_lo).abs() + (ip - ip_lo).abs();
    let values: Vec<(f64, f64)> = (0..=jmax)
        .into_par_iter()
        .map(|j| {
            let k = j as f64 * dk;
            let v = product(k) * if j == 0 || j == jmax { 1.0 } else { 2.0 };
            (v / g(k), v * g(k))
        })
        .collect();
    let sm = dk * csum(values.iter().map(|v| v.0));
    let sp = dk * csum(values.iter().map(|v| v.1));
    let lhs_minus = 2.0 * im - sm;
    let lhs_plus = 2.0 * ip - sp;
    let rhs = |panels: usize| -> (f64, f64) {
        let ax = sum_nodes(xi, panels, 32);
        let ay = sum_nodes(eta, panels, 32);
        let rows: Vec<(f64, f64)> = ax
            .par_iter()
            .map(|&(x, wx)| {
                let mut a = CompensatedSum::new();
                let mut b = CompensatedSum::new();
                for &(y, wy) in &ay {
                    let (qm, qp) = q_kernels(x - y, half_length, m);
                    a.add(wy * qm);
                    b.add(wy * qp);
                }
                (wx * a.value(), wx * b.value())
            })
            .collect();
        (csum(rows.iter().map(|r| r.0)), csum(rows.iter().map(|r| r.1)))
    };
    let (rm, rp) = rhs(8);
    let (rm2, rp2) = rhs(4);
    Ok(PoissonCheck {
        lhs_minus,
        rhs_minus: rm,
        lhs_plus,
        rhs_plus: rp,
        lhs_error: 2.0 * quad_error + dk * product(kc).abs() * (g(kc) + 1.0 / g(kc)),
        rhs_error: (rm - rm2).abs().max((rp - rp2).abs()),
        factor_minus: -1.0,
        factor_plus: -2.0,
    })
}

/// Kernels `(Q_-(z), Q_+(z))` as printed, with the image sum truncated once
/// the `e^{-z}` envelope drops below `1e-18`.
pub fn q_kernels(z: f64, half_length: f64, m: f64) -> (f64, f64) {
    let mut qm = CompensatedSum::new();
    let mut qp = CompensatedSum::new();
    let mut n = 1i64;
    loop {
        let mut live = false;
        for s in [n, -n] {
            let u = (z - 2.0 * half_length * s as f64).abs();
            if m * u > 42.0 {
                continue;
            }
            live = true;
            let (k0, k1) = bessel_k01(m * u);
            qm.add(2.0 * k0);
            qp.add(-m * k1 / u);
        }
        if !live {
            break;
        }
        n += 1;
    }
    (qm.value(), qp.value())
}

/// A compactly supported field on the line at `d = 1`: wavelet-smeared site
/// values `sum_s (q_s, p_s) phi((x - s eps) / eps)`, with transform
/// `q^(k) = eps phi^(eps k) sum_s q_s e^{-i k s eps}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SmearedField {
    filter: FilterBank,
    eps: f64,
    sites: Vec<(i64, f64, f64)>,
}

impl SmearedField {
    pub fn new(filter: FilterBank, eps: f64, sites: Vec<(i64, f64, f64)>) -> Result<Self> {
        if filter.d() != 1 {
            return Err(Error::Invalid("smeared line fields are one-dimensional".into()));
        }
        filter.taps_1d()?;
        if !(eps > 0.0) {
            return Err(Error::Invalid("spacing must be positive".into()));
        }
        Ok(Self { filter, eps, sites })
    }

    /// Closed interval containing the support.
    pub fn support(&self) -> Result<(f64, f64)> {
        let (offset, h) = self.filter.taps_1d()?;
        let lo = self.sites.iter().map(|s| s.0).min().unwrap_or(0);
        let hi = self.sites.iter().map(|s| s.0).max().unwrap_or(0);
        Ok((
            (lo + offset) as f64 * self.eps,
            (hi + offset + h.len() as i64 - 1) as f64 * self.eps,
        ))
    }

    pub fn profile(&self, k: f64) -> Result<(Complex64, Complex64)> {
        let phi = self
            .filter
            .cascade_1d(self.eps * k, crate::filters::CASCADE_DEPTH)?
            .value
            * self.eps;
        let (mut q, mut p) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for &(s, a, b) in &self.sites {
            let e = Complex64::from_polar(1.0, -k * s as f64 * self.eps);
            q += a * e;
            p += b * e;
        }
        Ok((phi * q, phi * p))
    }

    fn amplitudes(&self) -> (f64, f64) {
        let q: f64 = self.sites.iter().map(|s| s.1.abs()).sum();
        let p: f64 = self.sites.iter().map(|s| s.2.abs()).sum();
        (self.eps * q, self.eps * p)
    }

    fn density(&self, k: f64, m: f64) -> Result<f64> {
        let g = (k * k + m * m).sqrt();
        let (q, p) = self.profile(k)?;
        Ok(q.norm_sqr() / g + g * p.norm_sqr())
    }
}

/// Exponent `1/4 (2L)^{-1} sum_{|k| <= kc}` of a smeared field on the torus of
/// half-length `L`.
pub fn torus_exponent(field: &SmearedField, half_length: f64, m: f64, kappa_max: f64) -> Result<NormValue> {
    let (lo, hi) = field.support()?;
    if lo <= -half_length || hi >= half_length {
        return Err(Error::Invalid(format!(
            "support [{lo}, {hi}] does not fit inside (-{half_length}, {half_length})"
        )));
    }
    let dk = PI / half_length;
    let j_cut = (kappa_max / field.eps / dk).floor() as u64;
    let vals: Vec<f64> = (0..=j_cut as i64)
        .into_par_iter()
        .map(|j| {
            field
                .density(j as f64 * dk, m)
                .map(|v| if j == 0 { v } else { 2.0 * v })
        })
        .collect::<Result<_>>()?;
    let (qa, pa) = field.amplitudes();
    let tail = field.filter.decay()?.lattice_tail(
        field.eps,
        dk,
        1,
        j_cut,
        m,
        TailWeights {
            c_inv: qa * qa,
            c1: pa * pa,
            ..Default::default()
        },
    );
    let pref = 0.25 / (2.0 * half_length);
    Ok(NormValue {
        value: pref * csum(vals),
        tail_bound: pref * tail,
    })
}

/// Exponent `1/4 (2 pi)^{-1} int_{|k| <= kc} dk` of a smeared field on the line.
pub fn line_exponent(field: &SmearedField, m: f64, kappa_max: f64, tol: f64) -> Result<NormValue> {
    let kc = kappa_max / field.eps;
    let (lo, hi) = field.support()?;
    // panels short against the oscillation period of the profile
    let step = (PI / (hi - lo).max(field.eps)).min(1.0);
    let mut breaks = vec![0.0, m.min(kc)];
    let mut x = breaks[1];
    while x < kc {
        x = (x + step).min(kc);
        breaks.push(x);
    }
    let f = |k: f64| field.density(k, m).unwrap_or(f64::NAN);
    let panels: Vec<_> = breaks.windows(2).map(|w| [w[0], w[1]]).collect();
    let parts: Vec<_> = panels
        .par_iter()
        .map(|w| integrate_split(&f, w, tol * (w[1] - w[0]) / kc))
        .collect();
    let value = csum(parts.iter().map(|q| q.value));
    if !value.is_finite() {
        return Err(Error::Invalid("line integrand could not be evaluated".into()));
    }
    let quad_err: f64 = parts.iter().map(|q| q.error).sum();
    let (qa, pa) = field.amplitudes();
    let cert = field.filter.decay()?;
    let tail = 2.0 * envelope_integral_tail(&cert, field.eps, kc, m, qa * qa, pa * pa);
    let pref = 0.25 / (2.0 * PI);
    Ok(NormValue {
        value: 2.0 * pref * value,
        tail_bound: 2.0 * pref * quad_err + pref * tail,
    })
}

// int_{kc}^inf env(eps k)^2 (c_inv / k + c1 (m + k)) dk
fn envelope_integral_tail(cert: &DecayCertificate, eps: f64, kc: f64, m: f64, c_inv: f64, c1: f64) -> f64 {
    let s = 2.0 * cert.rho;
    let c2 = cert.c * cert.c;
    let x = eps * kc;
    let i0 = if s > 1.0 {
        c2 * (1.0 + x).powf(1.0 - s) / (eps * (s - 1.0))
    } else {
        f64::INFINITY
    };
    let i1 = if s > 2.0 {
        c2 * (1.0 + x).powf(2.0 - s) / (eps * eps * (s - 2.0))
    } else {
        f64::INFINITY
    };
    let mut t = 0.0;
    if c_inv != 0.0 {
        t += c_inv * i0 / kc;
    }
    if c1 != 0.0 {
        t += c1 * (m * i0 + i1);
    }
    t
}

/// One entry of an infinite-volume study.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeRow {
    #[serde(rename = "L")]
    pub half_length: f64,
    pub torus: f64,
    pub line: f64,
    pub defect: f64,
    pub tail_bound: f64,
}

/// `|torus exponent - line exponent|` along a list of volumes.
pub fn infinite_volume_defect(field: &SmearedField, lengths: &[f64], m: f64, kappa_max: f64) -> Result<Vec<VolumeRow>> {
    let line = line_exponent(field, m, kappa_max, 1e-13)?;
    lengths
        .iter()
        .map(|&l| {
            let t = torus_exponent(field, l, m, kappa_max)?;
            Ok(VolumeRow {
                half_length: l,
                torus: t.value,
                line: line.value,
                defect: (t.value - line.value).abs(),
                tail_bound: t.tail_bound + line.tail_bound,
            })
        })
        .collect()
}

/// Extreme ratios `||xi||_L / ||xi||_inf` over a family of local fields.
pub fn norm_equivalence(fields: &[SmearedField], half_length: f64, m: f64, kappa_max: f64) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for f in fields {
        let t = torus_exponent(f, half_length, m, kappa_max)?.value;
        let l = line_exponent(f, m, kappa_max, 1e-12)?.value;
        if l <= 0.0 {
            continue;
        }
        let r = (t / l).sqrt();
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_small_argument() {
        let z = 1e-4;
        let k0 = bessel_k(BesselOrder::Zero, z).unwrap();
        assert!((k0 - (-(z / 2.0).ln() - EULER_GAMMA)).abs() < 1e-6);
        assert!(bessel_k(BesselOrder::One, 0.0).is_err());
    }

    #[test]
    fn bessel_branches_agree_at_switchovers() {
        for z in [2.0, 25.0] {
            let below = bessel_k01(z * (1.0 - 1e-12));
            let above = bessel_k01(z * (1.0 + 1e-12));
            assert!(((below.0 - above.0) / below.0).abs() < 1e-10, "K0 at {z}");
            assert!(((below.1 - above.1) / below.1).abs() < 1e-10, "K1 at {z}");
        }
    }

    #[test]
    fn box_indexing_round_trips() {
        let f = ContinuumField::zeros(2, 1.5, 3).unwrap();
        for i in 0..f.len() {
            assert_eq!(f.flat(&f.index(i)), Some(i));
        }
        assert_eq!(f.flat(&[4, 0]), None);
    }

    #[test]
    fn single_mode_norm() {
        let l = 2.0;
        let c = Complex64::new(1.5, 0.5);
        let f =
            ContinuumField::from_modes(1, l, 4, &[(vec![1], c, 0.0.into()), (vec![-1], c.conj(), 0.0.into())]).unwrap();
        let n = norm_continuum(&f, 1.0).unwrap();
        let k = PI / l;
        let expect = 2.0 * c.norm_sqr() / (k * k + 1.0).sqrt() / (2.0 * l);
        assert!((n.value - expect).abs() < 1e-14);
        assert_eq!(n.tail_bound, 0.0);
    }
}
