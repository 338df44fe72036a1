//! Low-pass filters, their symbols `m0` and the cascade `phi^`.
//!
//! Real filters are stored as one-dimensional taps and tensorised over the
//! lattice dimension on demand. Daubechies taps come from spectral
//! factorisation of the half-band polynomial and are cached.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::numerics::csum;

/// Default cascade depth.
pub const CASCADE_DEPTH: usize = 40;

/// Filter families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum FilterKind {
    Haar,
    Daubechies {
        k: usize,
    },
    Point,
    /// Sharp momentum cutoff towards a finer level with half-width `r_fine`.
    MomentumShell {
        r_fine: usize,
    },
    MomentumTransfer,
}

impl FilterKind {
    pub fn name(&self) -> &'static str {
        match self {
            FilterKind::Haar => "haar",
            FilterKind::Daubechies { .. } => "daubechies",
            FilterKind::Point => "point",
            FilterKind::MomentumShell { .. } => "momentum_shell",
            FilterKind::MomentumTransfer => "momentum_transfer",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Taps {
    Real { offset: i64, h: Vec<f64> },
    Complex { offset: i64, h: Vec<Complex64> },
    None,
}

/// Bound `|phi^(kappa)| <= c (1 + |kappa|)^{-rho}` per axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayCertificate {
    pub rho: f64,
    pub c: f64,
}

impl DecayCertificate {
    pub fn envelope(&self, kappa: f64) -> f64 {
        self.c * (1.0 + kappa.abs()).powf(-self.rho)
    }

    /// Upper bound on the sum over `k = dk * j`, `j` in `Z^d` outside the box
    /// `|j_i| <= j_cut`, of `prod_i env(eps k_i)^2 (c0 + c_inv / g + c1 g)`
    /// for any `g` with `|k_i| <= g <= m + sum_i |k_i|`. Infinite when the
    /// envelope decays too slowly for the requested weights.
    pub fn lattice_tail(&self, eps: f64, dk: f64, d: usize, j_cut: u64, m: f64, w: TailWeights) -> f64 {
        if w.c0 == 0.0 && w.c_inv == 0.0 && w.c1 == 0.0 {
            return 0.0;
        }
        let s = AxisSums::new(self, eps, dk, j_cut);
        let rest = |k: usize| s.full0.powi(k as i32);
        // 0 * inf counts as 0: absent weights never spoil the bound
        let mul = |a: f64, b: f64| if a == 0.0 { 0.0 } else { a * b };
        let per_axis = mul(w.c0, s.tail0) + mul(w.c_inv, s.tail_inv) + mul(w.c1, m * s.tail0 + s.tail1);
        let mut total = per_axis * rest(d - 1);
        if d > 1 {
            total += mul(w.c1, s.tail0 * (d - 1) as f64 * s.full1 * rest(d - 2));
        }
        d as f64 * total
    }
}

/// Weights `c0 + c_inv / gamma + c1 gamma` of a tail sum.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TailWeights {
    pub c0: f64,
    pub c_inv: f64,
    pub c1: f64,
}

// two-sided sums of g(j) = env(eps dk j)^2 on one axis
struct AxisSums {
    full0: f64,
    full1: f64,
    tail0: f64,
    tail1: f64,
    tail_inv: f64,
}

impl AxisSums {
    fn new(cert: &DecayCertificate, eps: f64, dk: f64, j_cut: u64) -> Self {
        let s = 2.0 * cert.rho;
        let c2 = cert.c * cert.c;
        let g = |j: u64| c2 * (1.0 + eps * dk * j as f64).powf(-s);
        // k (1 + eps k)^{-s} decreases beyond this index
        let j_dec = if s > 1.0 {
            (1.0 / (eps * dk * (s - 1.0))).ceil().min(1e7) as u64
        } else {
            u64::MAX
        };
        let int0 = |a: f64| {
            if s > 1.0 {
                c2 * (1.0 + eps * a).powf(1.0 - s) / (eps * (s - 1.0))
            } else {
                f64::INFINITY
            }
        };
        let int1 = |a: f64| {
            if s > 2.0 {
                c2 * (1.0 + eps * a).powf(2.0 - s) / (eps * eps * (s - 2.0))
            } else {
                f64::INFINITY
            }
        };
        let j0 = j_cut.max(1);
        let tail_from = |j: u64| -> (f64, f64, f64) {
            // sums over indices > j, decreasing summands bounded by integrals
            let a = j as f64 * dk;
            (int0(a) / dk, int0(a) / (a * dk), int1(a) / dk)
        };
        let (mut t0, mut tinv, mut t1) = tail_from(j0);
        if s > 2.0 && j0 < j_dec {
            let explicit = csum((j0 + 1..=j_dec).map(|j| g(j) * j as f64 * dk));
            t1 = explicit + tail_from(j_dec).2;
        }
        if j_cut == 0 {
            // the j = 1 term is below the integral from 0 only for g itself
            t0 += g(1);
            tinv += g(1) / dk;
            t1 += g(1) * dk;
        }
        let head0 = csum((1..=j_cut).map(g));
        let head1 = csum((1..=j_cut).map(|j| g(j) * j as f64 * dk));
        AxisSums {
            full0: g(0) + 2.0 * (head0 + t0),
            full1: 2.0 * (head1 + t1),
            tail0: 2.0 * t0,
            tail1: 2.0 * t1,
            tail_inv: 2.0 * tinv,
        }
    }
}

/// Cascade value with the change produced by one more factor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CascadeValue {
    pub value: Complex64,
    pub truncation_error: f64,
}

/// Residuals of the defining filter identities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub sum_rule: f64,
    pub orthonormality: f64,
    pub high_pass_orthogonality: f64,
    pub power_complementarity: f64,
    pub vanishing_moments: f64,
    pub sup_l: f64,
    pub sup_l_bound: f64,
}

impl IdentityReport {
    pub fn max_residual(&self) -> f64 {
        self.sum_rule
            .max(self.orthonormality)
            .max(self.high_pass_orthogonality)
            .max(self.power_complementarity)
            .max(self.vanishing_moments)
    }

    /// Identities within `tol` and `sup|L| < 2^{K-1}`. Haar has `L = 1`,
    /// which meets its bound `2^0` with equality.
    pub fn passes(&self, tol: f64) -> bool {
        let l_ok = if self.sup_l_bound == 1.0 {
            self.sup_l <= 1.0 + tol
        } else {
            self.sup_l < self.sup_l_bound
        };
        self.max_residual() < tol && l_ok
    }
}

/// Tap index, scalar in one dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TapIndex {
    Scalar(i64),
    Multi(Vec<i64>),
}

/// Tap value, `[re, im]` for complex filters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TapValue {
    Real(f64),
    Complex([f64; 2]),
}

/// Serialisable description `{scheme, K, d, taps}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterDescription {
    pub scheme: String,
    #[serde(rename = "K")]
    pub k: Option<usize>,
    pub d: usize,
    pub taps: Vec<(TapIndex, TapValue)>,
}

/// A low-pass filter tensorised over `d` axes.
#[derive(Clone, Debug)]
pub struct FilterBank {
    kind: FilterKind,
    d: usize,
    taps: Taps,
    decay: OnceLock<DecayCertificate>,
}

impl PartialEq for FilterBank {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.d == other.d
    }
}

/// Build a filter of the given family for dimension `d`.
pub fn make_filter(kind: FilterKind, d: usize) -> Result<FilterBank> {
    if d == 0 {
        return Err(Error::Invalid("dimension must be at least 1".into()));
    }
    let taps = match kind {
        FilterKind::Haar => Taps::Real {
            offset: 0,
            h: vec![FRAC_1_SQRT_2, FRAC_1_SQRT_2],
        },
        FilterKind::Daubechies { k } => {
            if !(2..=10).contains(&k) {
                return Err(Error::Invalid(format!("Daubechies order K = {k} outside 2..=10")));
            }
            Taps::Real {
                offset: 0,
                h: daubechies_taps(k).to_vec(),
            }
        }
        FilterKind::Point => Taps::Real {
            offset: 0,
            h: vec![SQRT_2],
        },
        FilterKind::MomentumShell { r_fine } => {
            if r_fine < 2 || !r_fine.is_power_of_two() {
                return Err(Error::Invalid(format!(
                    "momentum shell needs r_fine >= 2, got {r_fine}"
                )));
            }
            Taps::Complex {
                offset: -(r_fine as i64),
                h: momentum_shell_taps(r_fine),
            }
        }
        FilterKind::MomentumTransfer => Taps::None,
    };
    Ok(FilterBank {
        kind,
        d,
        taps,
        decay: OnceLock::new(),
    })
}

impl FilterBank {
    pub fn kind(&self) -> FilterKind {
        self.kind
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Number of vanishing moments of the associated wavelet.
    pub fn vanishing_moments(&self) -> usize {
        match self.kind {
            FilterKind::Haar => 1,
            FilterKind::Daubechies { k } => k,
            _ => 0,
        }
    }

    /// One-dimensional real taps `(first index, values)`.
    pub fn taps_1d(&self) -> Result<(i64, &[f64])> {
        match &self.taps {
            Taps::Real { offset, h } => Ok((*offset, h)),
            Taps::Complex { .. } => Err(Error::Filter(
                "momentum shell taps are complex; use taps_1d_complex".into(),
            )),
            Taps::None => Err(Error::Filter("momentum transfer has no real-space taps".into())),
        }
    }

    /// One-dimensional taps as complex numbers.
    pub fn taps_1d_complex(&self) -> Result<(i64, Vec<Complex64>)> {
        match &self.taps {
            Taps::Real { offset, h } => Ok((*offset, h.iter().map(|&x| Complex64::new(x, 0.0)).collect())),
            Taps::Complex { offset, h } => Ok((*offset, h.clone())),
            Taps::None => Err(Error::Filter("momentum transfer has no real-space taps".into())),
        }
    }

    /// Tensorised taps `h_n = prod_j h_{n_j}` over all multi-indices.
    pub fn taps(&self) -> Result<Vec<(Vec<i64>, Complex64)>> {
        let (offset, h) = self.taps_1d_complex()?;
        let mut out = vec![(Vec::new(), Complex64::new(1.0, 0.0))];
        for _ in 0..self.d {
            let mut next = Vec::with_capacity(out.len() * h.len());
            for (idx, v) in &out {
                for (i, w) in h.iter().enumerate() {
                    let mut n = idx.clone();
                    n.push(offset + i as i64);
                    next.push((n, v * w));
                }
            }
            out = next;
        }
        Ok(out)
    }

    /// Serialisable description of the tensorised taps.
    pub fn describe(&self) -> Result<FilterDescription> {
        let complex = matches!(self.taps, Taps::Complex { .. });
        let taps = self
            .taps()?
            .into_iter()
            .map(|(n, v)| {
                let idx = if self.d == 1 {
                    TapIndex::Scalar(n[0])
                } else {
                    TapIndex::Multi(n)
                };
                let val = if complex {
                    TapValue::Complex([v.re, v.im])
                } else {
                    TapValue::Real(v.re)
                };
                (idx, val)
            })
            .collect();
        Ok(FilterDescription {
            scheme: self.kind.name().into(),
            k: match self.kind {
                FilterKind::Daubechies { k } => Some(k),
                _ => None,
            },
            d: self.d,
            taps,
        })
    }

    /// `m0(kappa) = 2^{-1/2} sum_n h_n exp(-i n kappa)` for one axis.
    pub fn m0_1d(&self, kappa: f64) -> Result<Complex64> {
        match &self.taps {
            Taps::Real { offset, h } => Ok(real_symbol(*offset, h, kappa) * FRAC_1_SQRT_2),
            Taps::Complex { offset, h } => {
                let s: Complex64 = h
                    .iter()
                    .enumerate()
                    .map(|(i, w)| w * Complex64::from_polar(1.0, -((offset + i as i64) as f64) * kappa))
                    .sum();
                Ok(s * FRAC_1_SQRT_2)
            }
            Taps::None => Err(Error::Filter("momentum transfer has no symbol m0".into())),
        }
    }

    /// Tensorised symbol `m0(kappa) = prod_j m0(kappa_j)`.
    pub fn m0(&self, kappa: &[f64]) -> Result<Complex64> {
        kappa
            .iter()
            .try_fold(Complex64::new(1.0, 0.0), |acc, &k| Ok(acc * self.m0_1d(k)?))
    }

    /// High-pass taps `g_n = (-1)^n h_{1 - n + 2 shift}`.
    pub fn high_pass(&self, shift: i64) -> Result<(i64, Vec<f64>)> {
        let (offset, h) = self.taps_1d()?;
        let last = offset + h.len() as i64 - 1;
        let first_g = 1 + 2 * shift - last;
        let g = (0..h.len() as i64)
            .map(|i| {
                let n = first_g + i;
                let sign = if n.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                sign * h[(1 - n + 2 * shift - offset) as usize]
            })
            .collect();
        Ok((first_g, g))
    }

    /// Coefficients (ascending in `u = e^{-i kappa}`) of `L` with
    /// `m0 = ((1 + u) / 2)^K L(u)`.
    pub fn l_polynomial(&self) -> Result<Vec<f64>> {
        let (_, h) = self.taps_1d()?;
        let k = self.vanishing_moments();
        let mut c = h.to_vec();
        for _ in 0..k {
            // synthetic division by (1 + u)
            let n = c.len();
            let mut q = vec![0.0; n - 1];
            let mut carry = 0.0;
            for i in (1..n).rev() {
                carry = c[i] - carry;
                q[i - 1] = carry;
            }
            let _ = carry;
            c = q;
        }
        let scale = (k as f64 - 0.5).exp2();
        Ok(c.into_iter().map(|x| x * scale).collect())
    }

    /// The factor `L(kappa)` on one axis.
    pub fn l_factor(&self, kappa: f64) -> Result<Complex64> {
        Ok(real_symbol(0, &self.l_polynomial()?, kappa))
    }

    /// Residuals of the filter identities; high-pass shift `K - 1`.
    pub fn identities(&self) -> Result<IdentityReport> {
        let (offset, h) = self.taps_1d()?;
        let k = self.vanishing_moments();
        let n = h.len() as i64;
        let get = |i: i64| -> f64 {
            let j = i - offset;
            if (0..n).contains(&j) {
                h[j as usize]
            } else {
                0.0
            }
        };
        let sum_rule = (h.iter().sum::<f64>() - SQRT_2).abs();
        let mut orthonormality = 0.0f64;
        for m in -n..=n {
            let s: f64 = (offset..offset + n).map(|i| get(i) * get(i + 2 * m)).sum();
            orthonormality = orthonormality.max((s - if m == 0 { 1.0 } else { 0.0 }).abs());
        }
        let (goff, g) = self.high_pass(k.max(1) as i64 - 1)?;
        let gget = |i: i64| -> f64 {
            let j = i - goff;
            if (0..g.len() as i64).contains(&j) {
                g[j as usize]
            } else {
                0.0
            }
        };
        let mut hp = 0.0f64;
        for m in -2 * n..=2 * n {
            let s: f64 = (offset..offset + n).map(|i| get(i) * gget(i + 2 * m)).sum();
            hp = hp.max(s.abs());
        }
        let mut power = 0.0f64;
        let mut sup_l = 0.0f64;
        let grid = 10_000;
        let lpoly = self.l_polynomial()?;
        for i in 0..grid {
            let kappa = -PI + 2.0 * PI * i as f64 / grid as f64;
            let a = self.m0_1d(kappa)?.norm_sqr() + self.m0_1d(kappa + PI)?.norm_sqr();
            power = power.max((a - 1.0).abs());
            sup_l = sup_l.max(real_symbol(0, &lpoly, kappa).norm());
        }
        // moments relative to sum |n^j h_n|; raw sums lose digits to n^j
        let mut moments = 0.0f64;
        for j in 0..k {
            let terms: Vec<f64> = (offset..offset + n)
                .map(|i| {
                    let sign = if i.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                    sign * (i as f64).powi(j as i32) * get(i)
                })
                .collect();
            let scale: f64 = terms.iter().map(|t| t.abs()).sum();
            moments = moments.max(crate::numerics::csum(terms.iter().copied()).abs() / scale);
        }
        Ok(IdentityReport {
            sum_rule,
            orthonormality,
            high_pass_orthogonality: hp,
            power_complementarity: power,
            vanishing_moments: moments,
            sup_l,
            sup_l_bound: (k as f64 - 1.0).exp2(),
        })
    }

    fn cascade_partial(&self, kappa: f64, depth: usize) -> Result<Complex64> {
        let mut acc = Complex64::new(1.0, 0.0);
        let mut x = kappa;
        for _ in 0..depth {
            x *= 0.5;
            let f = self.m0_1d(x)?;
            acc *= f;
            // m0 is 2pi-periodic, so a unit factor only ends the product near 0
            if x.abs() < 1e-6 && (f - 1.0).norm() < 1e-16 {
                break;
            }
        }
        Ok(acc)
    }

    /// Cascade `phi^(kappa) = prod_{n>=1} m0(2^{-n} kappa)` on one axis.
    pub fn cascade_1d(&self, kappa: f64, depth: usize) -> Result<CascadeValue> {
        let value = self.cascade_partial(kappa, depth)?;
        let next = self.cascade_partial(kappa, depth + 1)?;
        Ok(CascadeValue {
            value,
            truncation_error: (next - value).norm(),
        })
    }

    /// Tensorised cascade.
    pub fn cascade_phi_hat(&self, kappa: &[f64], depth: usize) -> Result<CascadeValue> {
        let mut value = Complex64::new(1.0, 0.0);
        let mut next = Complex64::new(1.0, 0.0);
        for &k in kappa {
            value *= self.cascade_partial(k, depth)?;
            next *= self.cascade_partial(k, depth + 1)?;
        }
        Ok(CascadeValue {
            value,
            truncation_error: (next - value).norm(),
        })
    }

    /// `|phi^(kappa)|^2` on one axis at the default depth.
    pub fn phi_hat_sq_1d(&self, kappa: f64) -> Result<f64> {
        Ok(self.cascade_partial(kappa, CASCADE_DEPTH)?.norm_sqr())
    }

    /// Decay exponent and constant of `|phi^|`. The exponent is the best of
    /// `K - log2(sup prod_{i<j} |L(2^i kappa)|) / j` over `j <= 12`; the
    /// constant is fitted on samples and doubled.
    pub fn decay(&self) -> Result<DecayCertificate> {
        if let Some(c) = self.decay.get() {
            return Ok(*c);
        }
        let cert = self.compute_decay()?;
        Ok(*self.decay.get_or_init(|| cert))
    }

    fn compute_decay(&self) -> Result<DecayCertificate> {
        let lpoly = self.l_polynomial()?;
        let k = self.vanishing_moments() as f64;
        let grid = 1 << 14;
        let mut prod = vec![1.0f64; grid + 1];
        let mut best = f64::NEG_INFINITY;
        for j in 1..=12u32 {
            let mut sup = 0.0f64;
            for (i, p) in prod.iter_mut().enumerate() {
                let kappa = PI * i as f64 / grid as f64 * (j as f64 - 1.0).exp2();
                *p *= real_symbol(0, &lpoly, kappa).norm();
                sup = sup.max(*p);
            }
            best = best.max(k - sup.log2() / j as f64);
        }
        let rho = if lpoly.len() == 1 { k } else { best - 1e-3 };
        let mut c = 0.0f64;
        let mut sample = |kappa: f64| -> Result<()> {
            let v = self.cascade_partial(kappa, CASCADE_DEPTH)?.norm();
            c = c.max(v * (1.0 + kappa).powf(rho));
            Ok(())
        };
        for i in 0..=4096 {
            sample(i as f64 / 64.0)?;
        }
        for i in 0..=4000 {
            sample(64.0 * (i as f64 / 4000.0 * (1e4f64 / 64.0).ln()).exp())?;
        }
        for n in 0..14 {
            sample(2.0 * PI / 3.0 * f64::from(n).exp2())?;
            sample(4.0 * PI / 3.0 * f64::from(n).exp2())?;
        }
        Ok(DecayCertificate { rho, c: 2.0 * c })
    }

    /// Least-squares slope of `log max |phi^|` over dyadic shells in
    /// `[kmin, kmax]`; the observed decay exponent.
    pub fn observed_decay_exponent(&self, kmin: f64, kmax: f64) -> Result<f64> {
        let mut pts = Vec::new();
        let mut lo = kmin;
        while lo * 2.0 <= kmax * (1.0 + 1e-12) {
            let hi = lo * 2.0;
            let mut m = 0.0f64;
            for i in 0..=2000 {
                let kappa = lo + (hi - lo) * i as f64 / 2000.0;
                m = m.max(self.cascade_partial(kappa, CASCADE_DEPTH)?.norm());
            }
            pts.push(((lo * hi).sqrt().ln(), m.ln()));
            lo = hi;
        }
        if pts.len() < 2 {
            return Err(Error::Invalid("decay fit needs at least two dyadic shells".into()));
        }
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Ok(-sxy / sxx)
    }
}

fn real_symbol(offset: i64, h: &[f64], kappa: f64) -> Complex64 {
    // Horner in u = exp(-i kappa), then shift by the first index
    let u = Complex64::from_polar(1.0, -kappa);
    let mut acc = Complex64::new(0.0, 0.0);
    for &c in h.iter().rev() {
        acc = acc * u + c;
    }
    acc * Complex64::from_polar(1.0, -(offset as f64) * kappa)
}

fn momentum_shell_taps(r_fine: usize) -> Vec<Complex64> {
    let rf = r_fine as f64;
    let pref = 1.0 / (SQRT_2 * rf);
    (-(r_fine as i64)..r_fine as i64)
        .map(|n| {
            let nf = n as f64;
            let ratio = if n == 0 {
                rf
            } else {
                (PI * nf / 2.0).sin() / (PI * nf / (2.0 * rf)).sin()
            };
            Complex64::from_polar(pref * ratio, PI * nf / (2.0 * rf))
        })
        .collect()
}

/// Cached Daubechies taps for `K` in `2..=10`.
pub fn daubechies_taps(k: usize) -> &'static [f64] {
    static CACHE: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    let all = CACHE.get_or_init(|| (2..=10).map(spectral_factor).collect());
    &all[k - 2]
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Minimum-phase factor of the half-band polynomial
/// `P(y) = sum_{j<K} C(K-1+j, j) y^j`, `y = sin^2(kappa/2)`.
fn spectral_factor(k: usize) -> Vec<f64> {
    let p: Vec<f64> = (0..k).map(|j| binomial(k - 1 + j, j)).collect();
    let mut poly = vec![Complex64::new(1.0, 0.0)];
    let mut mul = |a: Complex64, b: Complex64| {
        // poly *= (a + b u)
        let mut next = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
        for (i, c) in poly.iter().enumerate() {
            next[i] += c * a;
            next[i + 1] += c * b;
        }
        poly = next;
    };
    for _ in 0..k {
        mul(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));
    }
    for y in poly_roots(&p) {
        // u^2 - (2 - 4y) u + 1 = 0 has roots w and 1/w
        let c = Complex64::new(1.0, 0.0) - 2.0 * y;
        let disc = (c * c - 1.0).sqrt();
        let (u1, u2) = (c + disc, c - disc);
        let w = if u1.norm() < 1.0 { u1 } else { u2 };
        mul(Complex64::new(1.0, 0.0), -w);
    }
    let h: Vec<f64> = poly.iter().map(|c| c.re).collect();
    let s: f64 = h.iter().sum();
    h.into_iter().map(|x| x * SQRT_2 / s).collect()
}

fn eval_poly(c: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &a in c.iter().rev() {
        dp = dp * z + p;
        p = p * z + a;
    }
    (p, dp)
}

/// Roots of `sum_i c_i x^i` by the Aberth-Ehrlich iteration.
pub(crate) fn poly_roots(c: &[f64]) -> Vec<Complex64> {
    let n = c.len() - 1;
    if n == 0 {
        return Vec::new();
    }
    let radius = (c[0].abs() / c[n].abs()).powf(1.0 / n as f64).max(1e-3);
    let mut z: Vec<Complex64> = (0..n)
        .map(|i| Complex64::from_polar(radius, 2.0 * PI * i as f64 / n as f64 + 0.4))
        .collect();
    for _ in 0..500 {
        let mut worst = 0.0f64;
        for i in 0..n {
            let (p, dp) = eval_poly(c, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let s: Complex64 = (0..n).filter(|&j| j != i).map(|j| 1.0 / (z[i] - z[j])).sum();
            let w = ratio / (1.0 - ratio * s);
            z[i] -= w;
            worst = worst.max(w.norm() / z[i].norm().max(1e-300));
        }
        if worst < 1e-16 {
            break;
        }
    }
    for zi in z.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = eval_poly(c, *zi);
            if dp.norm() > 0.0 {
                *zi -= p / dp;
            }
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn daubechies_two_matches_closed_form() {
        let s3 = 3f64.sqrt();
        let denom = 4.0 * SQRT_2;
        let expected = [
            (1.0 + s3) / denom,
            (3.0 + s3) / denom,
            (3.0 - s3) / denom,
            (1.0 - s3) / denom,
        ];
        for (a, b) in daubechies_taps(2).iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn roots_of_cubic() {
        let r = poly_roots(&[-6.0, 11.0, -6.0, 1.0]);
        let mut re: Vec<f64> = r.iter().map(|z| z.re).collect();
        re.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in re.iter().zip([1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn high_pass_of_haar() {
        let f = make_filter(FilterKind::Haar, 1).unwrap();
        let (off, g) = f.high_pass(0).unwrap();
        assert_eq!(off, 0);
        assert!((g[0] - FRAC_1_SQRT_2).abs() < 1e-15 && (g[1] + FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn l_polynomial_of_d4_has_sup_sqrt3() {
        let f = make_filter(FilterKind::Daubechies { k: 2 }, 1).unwrap();
        let l = f.l_factor(PI).unwrap().norm();
        assert!((l - 3f64.sqrt()).abs() < 1e-12);
        assert!((f.l_factor(0.0).unwrap().re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn point_filter_has_unit_symbol() {
        let f = make_filter(FilterKind::Point, 2).unwrap();
        assert!((f.m0(&[0.3, -1.7]).unwrap() - 1.0).norm() < 1e-15);
        let t = f.taps().unwrap();
        assert_eq!(t.len(), 1);
        assert!((t[0].1.re - 2.0).abs() < 1e-15);
    }

    #[test]
    fn momentum_transfer_has_no_taps() {
        let f = make_filter(FilterKind::MomentumTransfer, 1).unwrap();
        assert!(f.taps().is_err());
        assert!(f.m0_1d(0.1).is_err());
    }

    #[test]
    fn rejects_out_of_range_order() {
        assert!(make_filter(FilterKind::Daubechies { k: 11 }, 1).is_err());
        assert!(make_filter(FilterKind::Daubechies { k: 1 }, 1).is_err());
    }
}
