//! Periodic lattices, their momentum duals and phase-space fields.
//!
//! Sites of the level-N lattice are integer offsets `s` in `[-r_N, r_N)^d`
//! (position `eps_N * s`), stored lexicographically with the first axis most
//! significant. Momenta use the same layout with `k = (pi / L) * j`.

use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numerics::CompensatedSum;

/// Largest number of sites a single field may allocate.
pub const MAX_SITES: usize = 1 << 26;

/// Base geometry at scale zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeGeometry {
    pub d: usize,
    pub eps: f64,
    pub r: usize,
}

impl LatticeGeometry {
    pub fn new(d: usize, eps: f64, r: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::Geometry("dimension must be at least 1".into()));
        }
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::Geometry(format!("lattice spacing {eps} must be positive")));
        }
        if r == 0 || !r.is_power_of_two() {
            return Err(Error::Geometry(format!("half-width r = {r} must be a power of two")));
        }
        Ok(Self { d, eps, r })
    }

    /// Half side length L of the torus.
    pub fn half_length(&self) -> f64 {
        self.eps * self.r as f64
    }

    pub fn level(&self, n: u32) -> Result<Lattice> {
        Lattice::new(*self, n)
    }
}

/// The geometry at a fixed scale N.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub geometry: LatticeGeometry,
    pub level: u32,
}

impl Lattice {
    pub fn new(geometry: LatticeGeometry, level: u32) -> Result<Self> {
        let g = LatticeGeometry::new(geometry.d, geometry.eps, geometry.r)?;
        if level > 40 {
            return Err(Error::Geometry(format!("level {level} is too fine")));
        }
        if g.r << level == 1 {
            return Err(Error::Geometry("r_N = 1 is degenerate".into()));
        }
        Ok(Self { geometry: g, level })
    }

    pub fn d(&self) -> usize {
        self.geometry.d
    }

    pub fn eps(&self) -> f64 {
        self.geometry.eps * (-(self.level as f64)).exp2()
    }

    pub fn r(&self) -> usize {
        self.geometry.r << self.level
    }

    /// Sites per axis, `2 r_N`.
    pub fn side(&self) -> usize {
        2 * self.r()
    }

    pub fn half_length(&self) -> f64 {
        self.geometry.half_length()
    }

    /// Momentum spacing `pi / L`.
    pub fn dk(&self) -> f64 {
        PI / self.half_length()
    }

    /// Total number of sites, or an error above [`MAX_SITES`].
    pub fn n_sites(&self) -> Result<usize> {
        let mut n: usize = 1;
        for _ in 0..self.d() {
            n = n
                .checked_mul(self.side())
                .filter(|&n| n <= MAX_SITES)
                .ok_or_else(|| Error::Geometry(format!("level {} has too many sites", self.level)))?;
        }
        Ok(n)
    }

    pub fn finer(&self, m: u32) -> Result<Lattice> {
        Lattice::new(self.geometry, self.level + m)
    }

    pub fn same_level(&self, other: &Lattice) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::Level(format!(
                "fields live on levels {} and {} (or different geometries)",
                self.level, other.level
            )))
        }
    }

    /// Wrap an integer offset into `[-r_N, r_N)`.
    pub fn wrap(&self, i: i64) -> i64 {
        wrap_index(i, self.r() as i64)
    }

    /// Multi-index (offsets in `[-r_N, r_N)`) of a flat position.
    pub fn index(&self, flat: usize) -> Vec<i64> {
        let mut out = vec![0; self.d()];
        unflatten(flat, self.side(), self.r() as i64, &mut out);
        out
    }

    /// Flat position of a multi-index, wrapping periodically.
    pub fn flat(&self, idx: &[i64]) -> usize {
        flatten(idx, self.side(), self.r() as i64)
    }

    pub fn position(&self, flat: usize) -> Vec<f64> {
        self.index(flat).iter().map(|&s| s as f64 * self.eps()).collect()
    }

    pub fn momentum(&self, flat: usize) -> Vec<f64> {
        self.index(flat).iter().map(|&j| j as f64 * self.dk()).collect()
    }

    /// Flat positions ordered by ascending |k| (ties by position).
    pub fn ascending_order(&self) -> Result<Vec<usize>> {
        let n = self.n_sites()?;
        let mut keyed: Vec<(i64, usize)> = (0..n).map(|f| (self.index(f).iter().map(|j| j * j).sum(), f)).collect();
        keyed.sort_unstable();
        Ok(keyed.into_iter().map(|(_, f)| f).collect())
    }
}

pub(crate) fn wrap_index(i: i64, r: i64) -> i64 {
    (i + r).rem_euclid(2 * r) - r
}

pub(crate) fn unflatten(mut flat: usize, side: usize, r: i64, out: &mut [i64]) {
    for slot in out.iter_mut().rev() {
        *slot = (flat % side) as i64 - r;
        flat /= side;
    }
}

pub(crate) fn flatten(idx: &[i64], side: usize, r: i64) -> usize {
    idx.iter()
        .fold(0usize, |acc, &i| acc * side + (i + r).rem_euclid(side as i64) as usize)
}

/// Apply a line operation along one axis of a row-major array with extents
/// `dims`, replacing that axis by one of length `new_len`.
pub(crate) fn map_axis<T, F>(data: &[T], dims: &[usize], axis: usize, new_len: usize, mut f: F) -> Vec<T>
where
    T: Copy + Default,
    F: FnMut(&[T], &mut [T]),
{
    let len = dims[axis];
    let outer: usize = dims[..axis].iter().product();
    let inner: usize = dims[axis + 1..].iter().product();
    let mut out = vec![T::default(); outer * new_len * inner];
    let mut line = vec![T::default(); len];
    let mut res = vec![T::default(); new_len];
    for o in 0..outer {
        for i in 0..inner {
            for (t, v) in line.iter_mut().enumerate() {
                *v = data[(o * len + t) * inner + i];
            }
            res.iter_mut().for_each(|v| *v = T::default());
            f(&line, &mut res);
            for (t, v) in res.iter().enumerate() {
                out[(o * new_len + t) * inner + i] = *v;
            }
        }
    }
    out
}

/// Line length from which the FFT path replaces the direct sum.
const FFT_THRESHOLD: usize = 32;

fn twiddles(n: usize, sign: f64) -> Vec<Complex64> {
    (0..n)
        .map(|p| Complex64::from_polar(1.0, sign * 2.0 * PI * p as f64 / n as f64))
        .collect()
}

fn line_direct(input: &[Complex64], out: &mut [Complex64], tw: &[Complex64]) {
    let n = input.len() as i64;
    let r = n / 2;
    for (j, o) in out.iter_mut().enumerate() {
        let kj = j as i64 - r;
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, a) in input.iter().enumerate() {
            let p = ((i as i64 - r) * kj).rem_euclid(n) as usize;
            acc += a * tw[p];
        }
        *o = acc;
    }
}

fn alternating(i: usize) -> f64 {
    if i.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Unnormalised lattice transform along every axis. `inverse` flips the sign
/// of the phase; normalisation is left to the caller.
fn transform(lattice: &Lattice, data: &[Complex64], inverse: bool, force_direct: bool) -> Vec<Complex64> {
    let side = lattice.side();
    let d = lattice.d();
    let dims = vec![side; d];
    let sign = if inverse { 1.0 } else { -1.0 };
    let r = lattice.r();
    let mut cur = data.to_vec();
    if side < FFT_THRESHOLD || force_direct {
        let tw = twiddles(side, sign);
        for axis in 0..d {
            cur = map_axis(&cur, &dims, axis, side, |line, out| line_direct(line, out, &tw));
        }
    } else {
        let mut planner = FftPlanner::new();
        let fft = if inverse {
            planner.plan_fft_inverse(side)
        } else {
            planner.plan_fft_forward(side)
        };
        let global = alternating(r);
        for axis in 0..d {
            cur = map_axis(&cur, &dims, axis, side, |line, out| {
                for (i, (o, v)) in out.iter_mut().zip(line).enumerate() {
                    *o = v * alternating(i);
                }
                fft.process(out);
                for (j, o) in out.iter_mut().enumerate() {
                    *o *= alternating(j) * global;
                }
            });
        }
    }
    cur
}

/// Lattice Fourier transform `F[q](k) = sum_x q(x) exp(-i k x)`.
pub fn dft(lattice: &Lattice, data: &[Complex64]) -> Vec<Complex64> {
    transform(lattice, data, false, false)
}

/// Inverse of [`dft`], carrying the `(2 r_N)^{-d}` normalisation.
pub fn idft(lattice: &Lattice, data: &[Complex64]) -> Vec<Complex64> {
    let norm = (lattice.side() as f64).powi(lattice.d() as i32).recip();
    let mut out = transform(lattice, data, true, false);
    out.iter_mut().for_each(|v| *v *= norm);
    out
}

/// Direct O(n^2) transform, kept as the reference for the FFT path.
pub fn dft_direct(lattice: &Lattice, data: &[Complex64]) -> Vec<Complex64> {
    transform(lattice, data, false, true)
}

/// Field values in real or momentum representation.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldData {
    Real { q: Vec<f64>, p: Vec<f64> },
    Momentum { q: Vec<Complex64>, p: Vec<Complex64> },
}

/// A phase-space vector `(q, p)` on a lattice. In momentum representation the
/// stored values are `q^ = eps_N^{d/2} F[q]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseField {
    lattice: Lattice,
    data: FieldData,
}

fn to_complex(v: &[f64]) -> Vec<Complex64> {
    v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

impl PhaseField {
    pub fn real(lattice: Lattice, q: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        let n = lattice.n_sites()?;
        if q.len() != n || p.len() != n {
            return Err(Error::Invalid(format!(
                "expected {n} sites, got q: {}, p: {}",
                q.len(),
                p.len()
            )));
        }
        Ok(Self {
            lattice,
            data: FieldData::Real { q, p },
        })
    }

    pub fn momentum(lattice: Lattice, q: Vec<Complex64>, p: Vec<Complex64>) -> Result<Self> {
        let n = lattice.n_sites()?;
        if q.len() != n || p.len() != n {
            return Err(Error::Invalid(format!(
                "expected {n} momenta, got q: {}, p: {}",
                q.len(),
                p.len()
            )));
        }
        Ok(Self {
            lattice,
            data: FieldData::Momentum { q, p },
        })
    }

    pub fn zero(lattice: Lattice) -> Result<Self> {
        let n = lattice.n_sites()?;
        Self::real(lattice, vec![0.0; n], vec![0.0; n])
    }

    /// Field with `(q, p) = (a, b)` at one site and zero elsewhere.
    pub fn delta(lattice: Lattice, site: &[i64], a: f64, b: f64) -> Result<Self> {
        if site.len() != lattice.d() {
            return Err(Error::Invalid("site index has wrong dimension".into()));
        }
        let mut f = Self::zero(lattice)?;
        let i = lattice.flat(site);
        if let FieldData::Real { q, p } = &mut f.data {
            q[i] = a;
            p[i] = b;
        }
        Ok(f)
    }

    /// Independent uniform values in [-1, 1] for both components.
    pub fn random<R: Rng>(lattice: Lattice, rng: &mut R) -> Result<Self> {
        let n = lattice.n_sites()?;
        let q = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let p = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
        Self::real(lattice, q, p)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn data(&self) -> &FieldData {
        &self.data
    }

    pub fn is_real_space(&self) -> bool {
        matches!(self.data, FieldData::Real { .. })
    }

    pub fn to_momentum(&self) -> PhaseField {
        match &self.data {
            FieldData::Momentum { .. } => self.clone(),
            FieldData::Real { q, p } => {
                let s = self.lattice.eps().powf(self.lattice.d() as f64 / 2.0);
                let f = |v: &[f64]| -> Vec<Complex64> {
                    dft(&self.lattice, &to_complex(v)).into_iter().map(|z| z * s).collect()
                };
                PhaseField {
                    lattice: self.lattice,
                    data: FieldData::Momentum { q: f(q), p: f(p) },
                }
            }
        }
    }

    /// Real-space representation; fails if the momentum data is not the
    /// transform of a real field.
    pub fn to_real(&self) -> Result<PhaseField> {
        match &self.data {
            FieldData::Real { .. } => Ok(self.clone()),
            FieldData::Momentum { q, p } => {
                let s = self.lattice.eps().powf(-(self.lattice.d() as f64) / 2.0);
                let back = |v: &[Complex64]| -> Result<Vec<f64>> {
                    let z = idft(&self.lattice, v);
                    let scale = z.iter().fold(1.0f64, |m, c| m.max(c.re.abs()));
                    let im = z.iter().fold(0.0f64, |m, c| m.max(c.im.abs()));
                    if im > 1e-8 * scale {
                        return Err(Error::NotReal(im * s));
                    }
                    Ok(z.into_iter().map(|c| c.re * s).collect())
                };
                PhaseField::real(self.lattice, back(q)?, back(p)?)
            }
        }
    }

    /// Real-space components, converting if necessary.
    pub fn real_parts(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        match self.to_real()?.data {
            FieldData::Real { q, p } => Ok((q, p)),
            FieldData::Momentum { .. } => unreachable!(),
        }
    }

    /// Momentum components, converting if necessary.
    pub fn momentum_parts(&self) -> (Vec<Complex64>, Vec<Complex64>) {
        match self.to_momentum().data {
            FieldData::Momentum { q, p } => (q, p),
            FieldData::Real { .. } => unreachable!(),
        }
    }

    /// Largest violation of `q^(-k) = conj(q^(k))` (zero in real space).
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let FieldData::Momentum { q, p } = &self.data else {
            return 0.0;
        };
        let mut worst = 0.0f64;
        for f in 0..q.len() {
            let neg: Vec<i64> = self.lattice.index(f).iter().map(|j| -j).collect();
            let g = self.lattice.flat(&neg);
            worst = worst.max((q[g] - q[f].conj()).norm()).max((p[g] - p[f].conj()).norm());
        }
        worst
    }

    /// Translation `(tau_a xi)(x) = xi(x - a)` by an integer site vector.
    pub fn translate(&self, shift: &[i64]) -> Result<PhaseField> {
        if shift.len() != self.lattice.d() {
            return Err(Error::Invalid("shift has wrong dimension".into()));
        }
        let (q, p) = self.real_parts()?;
        let n = q.len();
        let mut q2 = vec![0.0; n];
        let mut p2 = vec![0.0; n];
        for f in 0..n {
            let idx: Vec<i64> = self.lattice.index(f).iter().zip(shift).map(|(s, a)| s + a).collect();
            let g = self.lattice.flat(&idx);
            q2[g] = q[f];
            p2[g] = p[f];
        }
        PhaseField::real(self.lattice, q2, p2)
    }

    /// Largest componentwise difference, compared in momentum space.
    pub fn max_abs_diff(&self, other: &PhaseField) -> Result<f64> {
        self.lattice.same_level(&other.lattice)?;
        let (a, b) = self.momentum_parts();
        let (c, e) = other.momentum_parts();
        Ok(a.iter()
            .zip(&c)
            .chain(b.iter().zip(&e))
            .fold(0.0f64, |m, (x, y)| m.max((x - y).norm())))
    }

    /// Largest componentwise modulus in momentum space.
    pub fn max_abs_momentum(&self) -> f64 {
        let (a, b) = self.momentum_parts();
        a.iter().chain(&b).fold(0.0f64, |m, z| m.max(z.norm()))
    }

    /// Sup norm of `eps^{(d+1)/2} q + i eps^{(d-1)/2} p`.
    pub fn sup_norm(&self) -> Result<f64> {
        let (q, p) = self.real_parts()?;
        let e = self.lattice.eps();
        let d = self.lattice.d() as f64;
        let (a, b) = (e.powf((d + 1.0) / 2.0), e.powf((d - 1.0) / 2.0));
        Ok(q.iter().zip(&p).fold(0.0f64, |m, (x, y)| m.max((a * x).hypot(b * y))))
    }

    /// Flat positions where q or p is nonzero.
    pub fn support(&self) -> Result<Vec<usize>> {
        let (q, p) = self.real_parts()?;
        Ok((0..q.len()).filter(|&i| q[i] != 0.0 || p[i] != 0.0).collect())
    }
}

/// Symplectic form `sigma_N = eps_N^d sum_x (q_xi p_eta - p_xi q_eta)`,
/// evaluated in whichever representation both fields share.
pub fn symplectic_form(xi: &PhaseField, eta: &PhaseField) -> Result<f64> {
    xi.lattice.same_level(&eta.lattice)?;
    let lat = xi.lattice;
    match (&xi.data, &eta.data) {
        (FieldData::Real { q: q1, p: p1 }, FieldData::Real { q: q2, p: p2 }) => {
            let mut s = CompensatedSum::new();
            for i in 0..q1.len() {
                s.add(q1[i] * p2[i]);
                s.add(-p1[i] * q2[i]);
            }
            Ok(lat.eps().powi(lat.d() as i32) * s.value())
        }
        _ => {
            let (q1, p1) = xi.momentum_parts();
            let (q2, p2) = eta.momentum_parts();
            let mut s = CompensatedSum::new();
            for i in 0..q1.len() {
                s.add((q1[i].conj() * p2[i]).re);
                s.add(-(p1[i].conj() * q2[i]).re);
            }
            Ok(s.value() / (lat.side() as f64).powi(lat.d() as i32))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lat(d: usize, r: usize, n: u32) -> Lattice {
        LatticeGeometry::new(d, 1.0, r).unwrap().level(n).unwrap()
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(LatticeGeometry::new(0, 1.0, 2).is_err());
        assert!(LatticeGeometry::new(1, 1.0, 3).is_err());
        assert!(LatticeGeometry::new(1, -1.0, 2).is_err());
        assert!(LatticeGeometry::new(1, 1.0, 1).unwrap().level(0).is_err());
        assert!(LatticeGeometry::new(1, 1.0, 1).unwrap().level(1).is_ok());
    }

    #[test]
    fn index_roundtrip() {
        let l = lat(3, 2, 1);
        for f in 0..l.n_sites().unwrap() {
            assert_eq!(l.flat(&l.index(f)), f);
        }
        assert_eq!(l.index(0), vec![-4, -4, -4]);
    }

    #[test]
    fn delta_transforms_to_plane_wave() {
        let l = lat(1, 2, 0);
        let xi = PhaseField::delta(l, &[1], 1.0, 0.0).unwrap();
        let (q, _) = xi.momentum_parts();
        for (f, v) in q.iter().enumerate() {
            let k = l.momentum(f)[0];
            assert!((v - Complex64::from_polar(1.0, -k)).norm() < 1e-14);
        }
    }

    #[test]
    fn fft_path_matches_direct_sum() {
        let l = lat(1, 64, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v: Vec<Complex64> = (0..128)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let a = dft(&l, &v);
        let b = dft_direct(&l, &v);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn nyquist_mode_is_self_conjugate() {
        let l = lat(1, 2, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xi = PhaseField::random(l, &mut rng).unwrap().to_momentum();
        let (q, _) = xi.momentum_parts();
        assert!(q[0].im.abs() < 1e-14);
        assert!(xi.conjugate_symmetry_defect() < 1e-13);
    }

    #[test]
    fn symplectic_form_agrees_across_representations() {
        let l = lat(2, 2, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = PhaseField::random(l, &mut rng).unwrap();
        let b = PhaseField::random(l, &mut rng).unwrap();
        let s1 = symplectic_form(&a, &b).unwrap();
        let s2 = symplectic_form(&a.to_momentum(), &b.to_momentum()).unwrap();
        assert!((s1 - s2).abs() < 1e-12 * s1.abs().max(1.0));
        assert!((s1 + symplectic_form(&b, &a).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn translation_wraps_periodically() {
        let l = lat(1, 2, 0);
        let xi = PhaseField::delta(l, &[1], 1.0, 2.0).unwrap();
        let t = xi.translate(&[3]).unwrap();
        let (q, p) = t.real_parts().unwrap();
        assert_eq!(q[l.flat(&[0])], 1.0);
        assert_eq!(p[l.flat(&[0])], 2.0);
    }
}
