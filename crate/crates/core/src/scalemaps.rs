//! Scaling maps between lattices of neighbouring scales.
//!
//! Filter-based schemes (wavelet, block-spin, point) act in real space by
//! `R(q, p)(x) = 2^{d/2} sum_y (q, p)(y) h_{(x - y) / eps_{N+1}}` and in
//! momentum space by the multiplier `2^{d/2} m0(eps_{N+1} k)` applied to the
//! periodic extension. The momentum cutoff keeps `Gamma_N` inside
//! `Gamma_{N+1}`; its Nyquist modes are split evenly between `+-pi/eps_N` so
//! that real fields stay real. Momentum transfer rescales
//! `(q, p)(x) -> (sqrt2 q, p / sqrt2)(2x)`.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use crate::error::{Error, Result};
use crate::filters::{make_filter, FilterBank, FilterKind};
use crate::lattice::{map_axis, symplectic_form, wrap_index, FieldData, Lattice, PhaseField};

/// Renormalization scheme.
#[derive(Clone, Debug, PartialEq)]
pub enum Scheme {
    Wavelet(FilterBank),
    BlockSpin,
    Point,
    MomentumCutoff,
    MomentumTransfer,
}

impl Scheme {
    /// Daubechies wavelet scheme of order `k` in dimension `d`.
    pub fn daubechies(k: usize, d: usize) -> Result<Self> {
        Ok(Scheme::Wavelet(make_filter(FilterKind::Daubechies { k }, d)?))
    }

    /// Short tag used in reports.
    pub fn tag(&self) -> String {
        match self {
            Scheme::Wavelet(f) => match f.kind() {
                FilterKind::Daubechies { k } => format!("wavelet-db{k}"),
                other => format!("wavelet-{}", other.name()),
            },
            Scheme::BlockSpin => "blockspin".into(),
            Scheme::Point => "point".into(),
            Scheme::MomentumCutoff => "momentum_cutoff".into(),
            Scheme::MomentumTransfer => "momentum_transfer".into(),
        }
    }

    /// The real low-pass filter of a filter-based scheme.
    pub fn real_filter(&self, d: usize) -> Result<Option<FilterBank>> {
        let f = match self {
            Scheme::Wavelet(f) => {
                if f.d() != d {
                    return Err(Error::Invalid(format!(
                        "filter built for d = {} used on a d = {d} lattice",
                        f.d()
                    )));
                }
                f.taps_1d()?;
                f.clone()
            }
            Scheme::BlockSpin => make_filter(FilterKind::Haar, d)?,
            Scheme::Point => make_filter(FilterKind::Point, d)?,
            _ => return Ok(None),
        };
        Ok(Some(f))
    }
}

/// One real-space step `N -> N + 1`.
pub fn step_real(scheme: &Scheme, field: &PhaseField) -> Result<PhaseField> {
    let lat = *field.lattice();
    let fine = lat.finer(1)?;
    fine.n_sites()?;
    let (q, p) = field.real_parts()?;
    let d = lat.d();
    if let Some(f) = scheme.real_filter(d)? {
        let (offset, h) = f.taps_1d()?;
        let step = |v: &[f64]| -> Vec<f64> {
            let mut cur = v.to_vec();
            let mut dims = vec![lat.side(); d];
            for axis in 0..d {
                let out_len = fine.side();
                cur = map_axis(&cur, &dims, axis, out_len, |line, out| {
                    for (u, &a) in line.iter().enumerate() {
                        if a == 0.0 {
                            continue;
                        }
                        for (i, &w) in h.iter().enumerate() {
                            let t = (2 * u as i64 + offset + i as i64).rem_euclid(out_len as i64);
                            out[t as usize] += SQRT_2 * w * a;
                        }
                    }
                });
                dims[axis] = out_len;
            }
            cur
        };
        return PhaseField::real(fine, step(&q), step(&p));
    }
    match scheme {
        Scheme::MomentumCutoff => step_momentum(scheme, &field.to_momentum())?.to_real(),
        Scheme::MomentumTransfer => {
            let rn = lat.r();
            let gather = |v: &[f64], c: f64| -> Vec<f64> {
                let mut cur = v.to_vec();
                let mut dims = vec![lat.side(); d];
                for axis in 0..d {
                    cur = map_axis(&cur, &dims, axis, fine.side(), |line, out| {
                        for (u, o) in out.iter_mut().enumerate() {
                            *o = line[(u + rn) % (2 * rn)];
                        }
                    });
                    dims[axis] = fine.side();
                }
                cur.into_iter().map(|x| c * x).collect()
            };
            PhaseField::real(fine, gather(&q, SQRT_2), gather(&p, FRAC_1_SQRT_2))
        }
        _ => unreachable!(),
    }
}

/// One momentum-space step `N -> N + 1`.
pub fn step_momentum(scheme: &Scheme, field: &PhaseField) -> Result<PhaseField> {
    apply_multiplier(scheme, &field.to_momentum(), 1)
}

fn cutoff_weight(j: i64, rn: i64) -> f64 {
    if j.abs() < rn {
        1.0
    } else if j.abs() == rn {
        FRAC_1_SQRT_2
    } else {
        0.0
    }
}

/// Composite momentum-space map `N -> N + m` applied directly.
fn apply_multiplier(scheme: &Scheme, field: &PhaseField, m: u32) -> Result<PhaseField> {
    if m == 0 {
        return Ok(field.clone());
    }
    let lat = *field.lattice();
    let target = lat.finer(m)?;
    target.n_sites()?;
    let d = lat.d();
    let (q, p) = field.momentum_parts();
    let rn = lat.r() as i64;
    let rt = target.r() as i64;
    let side_n = lat.side();
    let side_t = target.side();
    let filter = scheme.real_filter(d)?;
    // per-axis factor and source offset for every target offset
    let mut factor = vec![Complex64::new(0.0, 0.0); side_t];
    let mut source = vec![0usize; side_t];
    let (cq, cp) = match scheme {
        Scheme::MomentumTransfer => {
            let s = f64::from(m);
            (((d as f64 + 1.0) * s / 2.0).exp2(), ((d as f64 - 1.0) * s / 2.0).exp2())
        }
        _ => (1.0, 1.0),
    };
    let base = (f64::from(m) / 2.0).exp2();
    for u in 0..side_t {
        let j = u as i64 - rt;
        let (src, w) = match (scheme, &filter) {
            (_, Some(f)) => {
                let mut prod = Complex64::new(base, 0.0);
                for n in 1..=m {
                    let r_level = (lat.r() as f64) * f64::from(n).exp2();
                    prod *= f.m0_1d(PI * j as f64 / r_level)?;
                }
                (wrap_index(j, rn), prod)
            }
            (Scheme::MomentumCutoff, None) => (wrap_index(j, rn), Complex64::new(base * cutoff_weight(j, rn), 0.0)),
            (Scheme::MomentumTransfer, None) => {
                let div = 1i64 << m;
                if j.rem_euclid(div) == 0 {
                    (j / div, Complex64::new(1.0, 0.0))
                } else {
                    (0, Complex64::new(0.0, 0.0))
                }
            }
            _ => unreachable!(),
        };
        factor[u] = w;
        source[u] = (src + rn) as usize;
    }
    let apply = |v: &[Complex64], c: f64| -> Vec<Complex64> {
        let mut cur = v.to_vec();
        let mut dims = vec![side_n; d];
        for axis in 0..d {
            cur = map_axis(&cur, &dims, axis, side_t, |line, out| {
                for (u, o) in out.iter_mut().enumerate() {
                    *o = factor[u] * line[source[u]];
                }
            });
            dims[axis] = side_t;
        }
        cur.into_iter().map(|z| z * c).collect()
    };
    PhaseField::momentum(target, apply(&q, cq), apply(&p, cp))
}

/// The map `R^N_{N'}` of a scheme between two levels.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingMap {
    scheme: Scheme,
    source: Lattice,
    target: Lattice,
}

impl ScalingMap {
    pub fn new(scheme: Scheme, source: Lattice, target_level: u32) -> Result<Self> {
        if target_level < source.level {
            return Err(Error::Level(format!(
                "target level {target_level} is coarser than source level {}",
                source.level
            )));
        }
        let target = source.finer(target_level - source.level)?;
        scheme.real_filter(source.d())?;
        Ok(Self { scheme, source, target })
    }

    pub fn scheme(&self) -> &Scheme {
        &self.scheme
    }

    pub fn source(&self) -> Lattice {
        self.source
    }

    pub fn target(&self) -> Lattice {
        self.target
    }

    pub fn steps(&self) -> u32 {
        self.target.level - self.source.level
    }

    /// Apply through the composite momentum multiplier. The output keeps the
    /// representation of the input.
    pub fn apply(&self, field: &PhaseField) -> Result<PhaseField> {
        self.source.same_level(field.lattice())?;
        let out = apply_multiplier(&self.scheme, &field.to_momentum(), self.steps())?;
        if field.is_real_space() {
            out.to_real()
        } else {
            Ok(out)
        }
    }

    /// Apply one real-space step at a time.
    pub fn apply_sequential(&self, field: &PhaseField) -> Result<PhaseField> {
        self.source.same_level(field.lattice())?;
        let mut cur = field.to_real()?;
        for _ in 0..self.steps() {
            cur = step_real(&self.scheme, &cur)?;
        }
        Ok(cur)
    }
}

/// Compose maps `N -> N' -> N'' -> ...` of one scheme into `N -> N_last`.
pub fn compose(maps: &[ScalingMap]) -> Result<ScalingMap> {
    let first = maps
        .first()
        .ok_or_else(|| Error::Invalid("nothing to compose".into()))?;
    let mut level = first.target.level;
    for m in &maps[1..] {
        if m.scheme != first.scheme {
            return Err(Error::Invalid("cannot compose maps of different schemes".into()));
        }
        if m.source.level != level || m.source.geometry != first.source.geometry {
            return Err(Error::Level(format!(
                "map starts at level {} but the previous one ends at {level}",
                m.source.level
            )));
        }
        level = m.target.level;
    }
    ScalingMap::new(first.scheme.clone(), first.source, level)
}

/// Largest deviation of `R tau_a xi` from `tau_{a'} R xi`, where `a'` is the
/// image of the shift on the target lattice.
pub fn translation_covariance_check(map: &ScalingMap, field: &PhaseField, shift: &[i64]) -> Result<f64> {
    let factor = match map.scheme {
        Scheme::MomentumTransfer => 1,
        _ => 1i64 << map.steps(),
    };
    let image_shift: Vec<i64> = shift.iter().map(|a| a * factor).collect();
    let lhs = map.apply(&field.translate(shift)?)?;
    let rhs = map.apply(field)?.translate(&image_shift)?;
    lhs.max_abs_diff(&rhs)
}

/// Orthogonal kernel `S` on the finer lattice with `R = 2^{d/2} S iota`,
/// `iota` the zero-padding inclusion onto even sites. Columns at even sites
/// carry the low-pass taps `h_{x - y}`; odd columns carry the high-pass taps
/// `g_{x - y + 1}`, `g_n = (-1)^n h_{1-n}`, which makes `S` orthogonal.
#[derive(Clone, Debug)]
pub struct MeraKernel {
    fine: Lattice,
    filter: FilterBank,
    h: (i64, Vec<f64>),
    g: (i64, Vec<f64>),
}

/// Defects certifying a [`MeraKernel`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeraCertificate {
    pub symplectic_defect: f64,
    pub factorization_defect: f64,
    pub adjoint_inverse_defect: f64,
}

pub fn mera_decompose(filter: &FilterBank, fine: Lattice) -> Result<MeraKernel> {
    if fine.level == 0 {
        return Err(Error::Level("the MERA kernel lives on a level N + 1 >= 1".into()));
    }
    if filter.d() != fine.d() {
        return Err(Error::Invalid("filter and lattice dimensions differ".into()));
    }
    if !matches!(filter.kind(), FilterKind::Haar | FilterKind::Daubechies { .. }) {
        return Err(Error::Filter(
            "the MERA factorisation needs an orthonormal filter".into(),
        ));
    }
    let (off, h) = filter.taps_1d()?;
    Ok(MeraKernel {
        fine,
        filter: filter.clone(),
        h: (off, h.to_vec()),
        g: filter.high_pass(0)?,
    })
}

impl MeraKernel {
    pub fn lattice(&self) -> Lattice {
        self.fine
    }

    fn column_taps(&self, y: i64) -> (i64, &[f64]) {
        if y.rem_euclid(2) == 0 {
            (self.h.0, &self.h.1)
        } else {
            (self.g.0 - 1, &self.g.1)
        }
    }

    fn entry_1d(&self, x: i64, y: i64) -> f64 {
        let side = self.fine.side() as i64;
        let (off, taps) = self.column_taps(y);
        taps.iter()
            .enumerate()
            .filter(|(i, _)| (y + off + *i as i64 - x).rem_euclid(side) == 0)
            .map(|(_, w)| w)
            .sum()
    }

    /// Kernel entry `S(x, y)` for site offsets on the fine lattice.
    pub fn entry(&self, x: &[i64], y: &[i64]) -> f64 {
        x.iter().zip(y).map(|(&a, &b)| self.entry_1d(a, b)).product()
    }

    fn apply_lines(&self, v: &[f64], adjoint: bool) -> Vec<f64> {
        let side = self.fine.side();
        let r = self.fine.r() as i64;
        let d = self.fine.d();
        let dims = vec![side; d];
        let mut cur = v.to_vec();
        for axis in 0..d {
            cur = map_axis(&cur, &dims, axis, side, |line, out| {
                for u in 0..side {
                    let y = u as i64 - r;
                    let (off, taps) = self.column_taps(y);
                    for (i, &w) in taps.iter().enumerate() {
                        let t = (u as i64 + off + i as i64).rem_euclid(side as i64) as usize;
                        if adjoint {
                            out[u] += w * line[t];
                        } else {
                            out[t] += w * line[u];
                        }
                    }
                }
            });
        }
        cur
    }

    fn apply_impl(&self, field: &PhaseField, adjoint: bool) -> Result<PhaseField> {
        self.fine.same_level(field.lattice())?;
        let (q, p) = field.real_parts()?;
        PhaseField::real(self.fine, self.apply_lines(&q, adjoint), self.apply_lines(&p, adjoint))
    }

    pub fn apply(&self, field: &PhaseField) -> Result<PhaseField> {
        self.apply_impl(field, false)
    }

    pub fn apply_adjoint(&self, field: &PhaseField) -> Result<PhaseField> {
        self.apply_impl(field, true)
    }

    /// Zero-padding inclusion of the coarse lattice onto the even sites.
    pub fn include(&self, field: &PhaseField) -> Result<PhaseField> {
        let coarse = *field.lattice();
        if coarse.level + 1 != self.fine.level || coarse.geometry != self.fine.geometry {
            return Err(Error::Level("inclusion expects a field one level coarser".into()));
        }
        let (q, p) = field.real_parts()?;
        let n = self.fine.n_sites()?;
        let (mut q2, mut p2) = (vec![0.0; n], vec![0.0; n]);
        for f in 0..q.len() {
            let idx: Vec<i64> = coarse.index(f).iter().map(|s| 2 * s).collect();
            let g = self.fine.flat(&idx);
            q2[g] = q[f];
            p2[g] = p[f];
        }
        PhaseField::real(self.fine, q2, p2)
    }

    /// Check symplecticity, the factorisation of the wavelet step and
    /// `S^T S = 1` on `samples` seeded random fields.
    pub fn certify(&self, samples: usize, seed: u64) -> Result<MeraCertificate> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coarse = Lattice::new(self.fine.geometry, self.fine.level - 1)?;
        let scheme = Scheme::Wavelet(self.filter.clone());
        let scale = (self.fine.d() as f64 / 2.0).exp2();
        let mut cert = MeraCertificate {
            symplectic_defect: 0.0,
            factorization_defect: 0.0,
            adjoint_inverse_defect: 0.0,
        };
        for _ in 0..samples {
            let a = PhaseField::random(self.fine, &mut rng)?;
            let b = PhaseField::random(self.fine, &mut rng)?;
            let s0 = symplectic_form(&a, &b)?;
            let s1 = symplectic_form(&self.apply(&a)?, &self.apply(&b)?)?;
            cert.symplectic_defect = cert.symplectic_defect.max((s1 - s0).abs());
            let back = self.apply_adjoint(&self.apply(&a)?)?;
            cert.adjoint_inverse_defect = cert.adjoint_inverse_defect.max(back.max_abs_diff(&a)?);
            let c = PhaseField::random(coarse, &mut rng)?;
            let via_s = self.apply(&self.include(&c)?)?;
            let (q, p) = via_s.real_parts()?;
            let via_s = PhaseField::real(
                self.fine,
                q.iter().map(|x| x * scale).collect(),
                p.iter().map(|x| x * scale).collect(),
            )?;
            let direct = step_real(&scheme, &c)?;
            cert.factorization_defect = cert.factorization_defect.max(via_s.max_abs_diff(&direct)?);
        }
        Ok(cert)
    }
}

/// Union of axis-aligned sets on a lattice; each member is a product of
/// per-axis index sets (offsets `s + r_N` in `[0, 2 r_N)`).
#[derive(Clone, Debug, PartialEq)]
pub struct SupportRegion {
    lattice: Lattice,
    boxes: Vec<Vec<Vec<bool>>>,
}

impl SupportRegion {
    /// Box of site offsets `lo..=hi` per axis (wrapping allowed).
    pub fn from_box(lattice: Lattice, lo: &[i64], hi: &[i64]) -> Result<Self> {
        if lo.len() != lattice.d() || hi.len() != lattice.d() {
            return Err(Error::Invalid("box corners have the wrong dimension".into()));
        }
        let side = lattice.side();
        let r = lattice.r() as i64;
        let axes = lo
            .iter()
            .zip(hi)
            .map(|(&a, &b)| {
                let mut set = vec![false; side];
                if b < a {
                    return set;
                }
                for s in a..=b.min(a + side as i64 - 1) {
                    set[(s + r).rem_euclid(side as i64) as usize] = true;
                }
                set
            })
            .collect();
        Ok(Self {
            lattice,
            boxes: vec![axes],
        })
    }

    /// Support of a field.
    pub fn of_field(field: &PhaseField) -> Result<Self> {
        let lat = *field.lattice();
        let boxes = field
            .support()?
            .into_iter()
            .map(|f| {
                lat.index(f)
                    .iter()
                    .map(|&s| {
                        let mut set = vec![false; lat.side()];
                        set[(s + lat.r() as i64) as usize] = true;
                        set
                    })
                    .collect()
            })
            .collect();
        Ok(Self { lattice: lat, boxes })
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn contains(&self, site: &[i64]) -> bool {
        let r = self.lattice.r() as i64;
        let side = self.lattice.side() as i64;
        self.boxes.iter().any(|b| {
            b.iter()
                .zip(site)
                .all(|(set, &s)| set[(s + r).rem_euclid(side) as usize])
        })
    }

    /// Length of the shortest arc covering the support on each axis,
    /// measured between extreme sites in physical units.
    pub fn extent(&self) -> Vec<f64> {
        let d = self.lattice.d();
        let side = self.lattice.side();
        (0..d)
            .map(|axis| {
                let mut occupied = vec![false; side];
                for b in &self.boxes {
                    for (u, &o) in b[axis].iter().enumerate() {
                        occupied[u] |= o;
                    }
                }
                let count = occupied.iter().filter(|&&o| o).count();
                if count == 0 {
                    return 0.0;
                }
                // largest circular gap of unoccupied sites
                let start = occupied.iter().position(|&o| o).unwrap();
                let (mut best, mut run) = (0usize, 0usize);
                for i in 1..=side {
                    if occupied[(start + i) % side] {
                        best = best.max(run);
                        run = 0;
                    } else {
                        run += 1;
                    }
                }
                (side - best - 1) as f64 * self.lattice.eps()
            })
            .collect()
    }

    fn step(&self, scheme: &Scheme) -> Result<Self> {
        let lat = self.lattice;
        let fine = lat.finer(1)?;
        let side = lat.side();
        let fs = fine.side();
        let taps: Option<(i64, Vec<f64>)> = scheme
            .real_filter(lat.d())?
            .map(|f| f.taps_1d().map(|(o, h)| (o, h.to_vec())))
            .transpose()?;
        let boxes = self
            .boxes
            .iter()
            .map(|b| {
                b.iter()
                    .map(|set| {
                        let mut out = vec![false; fs];
                        match (&taps, scheme) {
                            (Some((off, h)), _) => {
                                for (u, &o) in set.iter().enumerate() {
                                    if !o {
                                        continue;
                                    }
                                    for (i, &w) in h.iter().enumerate() {
                                        if w != 0.0 {
                                            let t = (2 * u as i64 + off + i as i64).rem_euclid(fs as i64);
                                            out[t as usize] = true;
                                        }
                                    }
                                }
                            }
                            (None, Scheme::MomentumTransfer) => {
                                for (u, o) in out.iter_mut().enumerate() {
                                    *o = set[(u + side / 2) % side];
                                }
                            }
                            _ => out.iter_mut().for_each(|o| *o = true),
                        }
                        out
                    })
                    .collect()
            })
            .collect();
        Ok(Self { lattice: fine, boxes })
    }
}

/// Exact support of `R^N_{N'}` applied to any field supported in `region`.
pub fn support_growth(region: &SupportRegion, scheme: &Scheme, target_level: u32) -> Result<SupportRegion> {
    if target_level < region.lattice.level {
        return Err(Error::Level("target level is coarser than the region".into()));
    }
    let mut cur = region.clone();
    while cur.lattice.level < target_level {
        cur = cur.step(scheme)?;
    }
    Ok(cur)
}

/// Largest deviation between the real-space step followed by the transform
/// and the momentum-space step applied to the transform.
pub fn dft_conjugacy_defect(scheme: &Scheme, field: &PhaseField) -> Result<f64> {
    let a = step_real(scheme, field)?.to_momentum();
    let b = step_momentum(scheme, &field.to_momentum())?;
    a.max_abs_diff(&b)
}

/// Whether a field is the transform of a real field.
pub fn is_real_field(field: &PhaseField) -> bool {
    match field.data() {
        FieldData::Real { .. } => true,
        FieldData::Momentum { .. } => field.conjugate_symmetry_defect() < 1e-10 * field.max_abs_momentum().max(1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeGeometry;

    fn lat(d: usize, r: usize, n: u32) -> Lattice {
        LatticeGeometry::new(d, 1.0, r).unwrap().level(n).unwrap()
    }

    #[test]
    fn haar_step_copies_delta() {
        let l = lat(1, 2, 0);
        let xi = PhaseField::delta(l, &[0], 1.0, 0.0).unwrap();
        let out = step_real(&Scheme::BlockSpin, &xi).unwrap();
        let (q, _) = out.real_parts().unwrap();
        let fine = out.lattice();
        assert!((q[fine.flat(&[0])] - 1.0).abs() < 1e-15);
        assert!((q[fine.flat(&[1])] - 1.0).abs() < 1e-15);
        assert!((q.iter().sum::<f64>() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn point_step_doubles_on_even_sites() {
        let l = lat(2, 2, 0);
        let xi = PhaseField::delta(l, &[1, -1], 1.0, 0.5).unwrap();
        let (q, p) = step_real(&Scheme::Point, &xi).unwrap().real_parts().unwrap();
        let fine = lat(2, 2, 1);
        assert!((q[fine.flat(&[2, -2])] - 4.0).abs() < 1e-14);
        assert!((p[fine.flat(&[2, -2])] - 2.0).abs() < 1e-14);
        assert_eq!(q.iter().filter(|x| **x != 0.0).count(), 1);
    }

    #[test]
    fn momentum_transfer_real_space_form() {
        // x' on the finer lattice reads the coarse field at 2x', i.e. at the
        // same site offset; the finer torus holds two periods
        let l = lat(1, 2, 0);
        let fine = lat(1, 2, 1);
        for site in [0i64, 1] {
            let xi = PhaseField::delta(l, &[site], 1.0, 1.0).unwrap();
            let (q, p) = step_real(&Scheme::MomentumTransfer, &xi).unwrap().real_parts().unwrap();
            for s in [site, site - 4] {
                assert!((q[fine.flat(&[s])] - SQRT_2).abs() < 1e-15);
                assert!((p[fine.flat(&[s])] - FRAC_1_SQRT_2).abs() < 1e-15);
            }
            assert_eq!(q.iter().filter(|x| **x != 0.0).count(), 2);
        }
    }

    #[test]
    fn map_rejects_coarser_target() {
        assert!(ScalingMap::new(Scheme::Point, lat(1, 2, 2), 1).is_err());
    }

    #[test]
    fn haar_mera_is_banded() {
        let f = make_filter(FilterKind::Haar, 1).unwrap();
        let s = mera_decompose(&f, lat(1, 2, 1)).unwrap();
        for x in -4..4 {
            for y in -4..4 {
                let e = s.entry(&[x], &[y]).abs();
                assert!(e == 0.0 || (e - FRAC_1_SQRT_2).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn blockspin_support_grows_by_block() {
        let l = lat(1, 4, 0);
        let reg = SupportRegion::from_box(l, &[0], &[0]).unwrap();
        let out = support_growth(&reg, &Scheme::BlockSpin, 2).unwrap();
        assert_eq!(out.extent(), vec![0.75]);
        assert!(out.contains(&[3]) && !out.contains(&[4]));
    }
}
