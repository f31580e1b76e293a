//! Truncated p-adic arithmetic: Hilbert symbols, unit norm images of local
//! quadratic extensions, and the finite enumerations behind the unramified
//! tower and counting lemmas.
//!
//! Rings are `O = Z[x]/(f)` taken modulo `pi^k O` for a uniformizer `pi`.
//! Residues are canonical coordinate vectors reduced against a Hermite basis
//! of `pi^k O`, so equal residues compare equal as arrays.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use num_integer::Integer;
use num_rational::Rational64;

use crate::arith::{is_prime, mod_pow, valuation};
use crate::error::{Error, Result};

/// Coordinates in the power basis `1, x, x^2, x^3`; unused tail entries are 0.
pub type Coords = [i64; 4];

const MAX_DEGREE: usize = 4;

fn scalar(a: i64) -> Coords {
    [a, 0, 0, 0]
}

/// Product in `Z[x]/(f)` without any reduction of coefficients.
/// `poly` holds the low coefficients of the monic `f`.
fn poly_mul(poly: &[i64], x: &Coords, y: &Coords) -> Coords {
    let n = poly.len();
    let mut prod = [0i64; 2 * MAX_DEGREE];
    for i in 0..n {
        if x[i] == 0 {
            continue;
        }
        for j in 0..n {
            prod[i + j] += x[i] * y[j];
        }
    }
    // x^n = -sum poly[i] x^i
    for deg in (n..2 * n).rev() {
        let c = prod[deg];
        if c == 0 {
            continue;
        }
        prod[deg] = 0;
        for (i, &a) in poly.iter().enumerate() {
            prod[deg - n + i] -= c * a;
        }
    }
    let mut out = [0; MAX_DEGREE];
    out[..n].copy_from_slice(&prod[..n]);
    out
}

/// Upper triangular basis of the lattice spanned by `rows`, positive diagonal.
fn hermite(mut rows: Vec<Coords>, n: usize) -> [Coords; MAX_DEGREE] {
    for col in 0..n {
        loop {
            let pivot = (col..n)
                .filter(|&r| rows[r][col] != 0)
                .min_by_key(|&r| rows[r][col].abs())
                .expect("ideal lattice has full rank");
            rows.swap(col, pivot);
            let mut clean = true;
            for r in col + 1..n {
                if rows[r][col] != 0 {
                    let q = rows[r][col].div_euclid(rows[col][col]);
                    for c in col..n {
                        rows[r][c] -= q * rows[col][c];
                    }
                    clean &= rows[r][col] == 0;
                }
            }
            if clean {
                break;
            }
        }
        if rows[col][col] < 0 {
            for c in col..n {
                rows[col][c] = -rows[col][c];
            }
        }
    }
    let mut out = [[0; MAX_DEGREE]; MAX_DEGREE];
    out[..n].copy_from_slice(&rows[..n]);
    out
}

fn reduce_against(h: &[Coords; MAX_DEGREE], n: usize, mut x: Coords) -> Coords {
    for i in 0..n {
        let q = x[i].div_euclid(h[i][i]);
        if q != 0 {
            for c in i..n {
                x[c] -= q * h[i][c];
            }
        }
    }
    x
}

/// Smallest non-residue modulo an odd prime.
fn least_nonresidue(p: i64) -> i64 {
    (2..p)
        .find(|&r| mod_pow(r, ((p - 1) / 2) as u64, p) == p - 1)
        .expect("odd prime has a non-residue")
}

/// The quadratic subfields of `Q(zeta_8) (x) Q_2 = Q_2[t]/(t^4 + 1)`, each
/// presented as `Z_2[g]` with `g^2 = c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Zeta8Subfield {
    /// `Q_2(sqrt 2)`, `g = t - t^3`.
    Sqrt2,
    /// `Q_2(sqrt -2)`, `g = t + t^3`.
    SqrtMinus2,
    /// `Q_2(sqrt -1)`, `g = t^2`.
    SqrtMinus1,
}

impl Zeta8Subfield {
    pub const ALL: [Zeta8Subfield; 3] = [
        Zeta8Subfield::Sqrt2,
        Zeta8Subfield::SqrtMinus2,
        Zeta8Subfield::SqrtMinus1,
    ];

    pub fn radicand(self) -> i64 {
        match self {
            Zeta8Subfield::Sqrt2 => 2,
            Zeta8Subfield::SqrtMinus2 => -2,
            Zeta8Subfield::SqrtMinus1 => -1,
        }
    }

    fn uniformizer(self) -> Coords {
        match self {
            Zeta8Subfield::SqrtMinus1 => [-1, 1, 0, 0],
            _ => [0, 1, 0, 0],
        }
    }

    /// `t + sigma(t)` and `t * sigma(t)` for the generator of the subfield's
    /// Galois group, as elements of `Z_2[g]`.
    fn zeta8_relation(self) -> (Coords, Coords) {
        match self {
            Zeta8Subfield::Sqrt2 => ([0, 1, 0, 0], scalar(1)),
            Zeta8Subfield::SqrtMinus2 => ([0, 1, 0, 0], scalar(-1)),
            Zeta8Subfield::SqrtMinus1 => (scalar(0), [0, -1, 0, 0]),
        }
    }
}

/// A finite extension of `Q_p` used as the base of a quadratic extension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LocalBase {
    /// The unramified extension of degree `f`.
    Unramified { p: i64, f: u32 },
    /// A ramified quadratic subfield of `Q(zeta_8) (x) Q_2`.
    Zeta8Subfield(Zeta8Subfield),
}

impl LocalBase {
    pub fn unramified(p: i64, f: u32) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        let max_f = if p == 2 { 4 } else { 2 };
        if f == 0 || f > max_f {
            return Err(Error::OutOfRange(format!(
                "unramified degree f={f} over Q_{p} (supported 1..={max_f})"
            )));
        }
        Ok(LocalBase::Unramified { p, f })
    }

    pub fn p(&self) -> i64 {
        match *self {
            LocalBase::Unramified { p, .. } => p,
            LocalBase::Zeta8Subfield(_) => 2,
        }
    }

    pub fn ramification_index(&self) -> u32 {
        match self {
            LocalBase::Unramified { .. } => 1,
            LocalBase::Zeta8Subfield(_) => 2,
        }
    }

    pub fn inertia_degree(&self) -> u32 {
        match *self {
            LocalBase::Unramified { f, .. } => f,
            LocalBase::Zeta8Subfield(_) => 1,
        }
    }

    fn polynomial(&self) -> Vec<i64> {
        match *self {
            LocalBase::Unramified { p: 2, f } => match f {
                1 => vec![0],
                2 => vec![1, 1],
                3 => vec![1, 1, 0],
                _ => vec![1, 1, 0, 0],
            },
            LocalBase::Unramified { p, f } => match f {
                1 => vec![0],
                _ => vec![-least_nonresidue(p), 0],
            },
            LocalBase::Zeta8Subfield(e) => vec![-e.radicand(), 0],
        }
    }

    fn uniformizer(&self) -> Coords {
        match *self {
            LocalBase::Unramified { p, .. } => scalar(p),
            LocalBase::Zeta8Subfield(e) => e.uniformizer(),
        }
    }

    /// `v_pi(4 pi)` for `p = 2`, else 1: below this precision unit norm
    /// images are not determined by the truncation.
    pub fn stability_threshold(&self) -> u32 {
        if self.p() == 2 {
            2 * self.ramification_index() + 1
        } else {
            1
        }
    }

    pub fn ring(&self, precision: u32) -> TruncatedRing {
        TruncatedRing::new(self.p(), self.polynomial(), self.uniformizer(), precision)
    }

    /// `v_pi` of a nonzero exact element, searched up to `cap`.
    pub fn valuation(&self, x: &Coords, cap: u32) -> u32 {
        let poly = self.polynomial();
        let pi = self.uniformizer();
        let n = poly.len();
        let mut v = 0;
        while v < cap {
            let h = ideal_basis(&poly, &pi, v + 1);
            if reduce_against(&h, n, *x) != [0; MAX_DEGREE] {
                return v;
            }
            v += 1;
        }
        cap
    }

    /// Norm down to `Q` of an exact element, as the determinant of its
    /// multiplication matrix.
    pub fn norm_to_rationals(&self, x: &Coords) -> i128 {
        let poly = self.polynomial();
        let n = poly.len();
        let mut m = [[0i128; MAX_DEGREE]; MAX_DEGREE];
        let mut basis = scalar(1);
        for col in 0..n {
            let image = poly_mul(&poly, x, &basis);
            for row in 0..n {
                m[row][col] = image[row] as i128;
            }
            let mut shifted = [0; MAX_DEGREE];
            shifted[1] = 1;
            basis = poly_mul(&poly, &basis, &shifted);
        }
        bareiss_det(m, n)
    }

    /// Whether an exact nonzero element is a square in the base field.
    pub fn is_square(&self, x: &Coords) -> bool {
        let v = self.valuation(x, 64);
        let c = if self.p() == 2 {
            2 * self.ramification_index() + 1
        } else {
            1
        };
        let ring = self.ring(v + c);
        let target = ring.reduce(*x);
        let found = ring.elements().any(|y| ring.mul(&y, &y) == target);
        found
    }
}

impl fmt::Display for LocalBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LocalBase::Unramified { p, f: 1 } => write!(f, "Q_{p}"),
            LocalBase::Unramified { p, f: deg } => write!(f, "Q_{}", p.pow(*deg)),
            LocalBase::Zeta8Subfield(e) => write!(f, "Q_2(sqrt({}))", e.radicand()),
        }
    }
}

fn bareiss_det(mut m: [[i128; MAX_DEGREE]; MAX_DEGREE], n: usize) -> i128 {
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n {
        if m[k][k] == 0 {
            match (k + 1..n).find(|&r| m[r][k] != 0) {
                Some(r) => {
                    m.swap(k, r);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
            }
        }
        prev = m[k][k];
    }
    sign * m[n - 1][n - 1]
}

fn ideal_basis(poly: &[i64], pi: &Coords, exponent: u32) -> [Coords; MAX_DEGREE] {
    let n = poly.len();
    let mut pik = scalar(1);
    for _ in 0..exponent {
        pik = poly_mul(poly, &pik, pi);
    }
    let mut rows = Vec::with_capacity(n);
    let mut xi = scalar(1);
    for _ in 0..n {
        rows.push(poly_mul(poly, &pik, &xi));
        let mut shifted = [0; MAX_DEGREE];
        shifted[1] = 1;
        xi = poly_mul(poly, &xi, &shifted);
    }
    hermite(rows, n)
}

/// `Z[x]/(f)` modulo `pi^k`, for `f` irreducible over `Q_p` with a single
/// prime above `p` generated by `pi`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncatedRing {
    p: i64,
    poly: Vec<i64>,
    pi: Coords,
    precision: u32,
    hnf: [Coords; MAX_DEGREE],
    residue_hnf: [Coords; MAX_DEGREE],
}

impl TruncatedRing {
    pub fn new(p: i64, poly: Vec<i64>, pi: Coords, precision: u32) -> Self {
        assert!((1..=MAX_DEGREE).contains(&poly.len()));
        let hnf = ideal_basis(&poly, &pi, precision);
        let residue_hnf = ideal_basis(&poly, &pi, 1);
        TruncatedRing {
            p,
            poly,
            pi,
            precision,
            hnf,
            residue_hnf,
        }
    }

    pub fn p(&self) -> i64 {
        self.p
    }

    pub fn degree(&self) -> usize {
        self.poly.len()
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn defining_polynomial(&self) -> &[i64] {
        &self.poly
    }

    pub fn uniformizer(&self) -> Coords {
        self.reduce(self.pi)
    }

    pub fn reduce(&self, x: Coords) -> Coords {
        reduce_against(&self.hnf, self.degree(), x)
    }

    pub fn from_int(&self, a: i64) -> Coords {
        self.reduce(scalar(a))
    }

    pub fn add(&self, x: &Coords, y: &Coords) -> Coords {
        let mut s = [0; MAX_DEGREE];
        for i in 0..self.degree() {
            s[i] = x[i] + y[i];
        }
        self.reduce(s)
    }

    pub fn sub(&self, x: &Coords, y: &Coords) -> Coords {
        let mut s = [0; MAX_DEGREE];
        for i in 0..self.degree() {
            s[i] = x[i] - y[i];
        }
        self.reduce(s)
    }

    pub fn mul(&self, x: &Coords, y: &Coords) -> Coords {
        self.reduce(poly_mul(&self.poly, x, y))
    }

    pub fn pow(&self, x: &Coords, mut e: u64) -> Coords {
        let mut acc = self.from_int(1);
        let mut b = *x;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &b);
            }
            b = self.mul(&b, &b);
            e >>= 1;
        }
        acc
    }

    pub fn is_unit(&self, x: &Coords) -> bool {
        reduce_against(&self.residue_hnf, self.degree(), *x) != [0; MAX_DEGREE]
    }

    /// Number of residues, `q^k`.
    pub fn size(&self) -> u64 {
        (0..self.degree()).map(|i| self.hnf[i][i] as u64).product()
    }

    /// Size of the residue field.
    pub fn residue_size(&self) -> u64 {
        (0..self.degree())
            .map(|i| self.residue_hnf[i][i] as u64)
            .product()
    }

    pub fn unit_count(&self) -> u64 {
        let q = self.residue_size();
        self.size() / q * (q - 1)
    }

    pub fn inverse(&self, x: &Coords) -> Option<Coords> {
        if !self.is_unit(x) {
            return None;
        }
        Some(self.pow(x, self.unit_count() - 1))
    }

    /// All canonical residues.
    pub fn elements(&self) -> impl Iterator<Item = Coords> + '_ {
        let n = self.degree();
        let bounds: Vec<i64> = (0..n).map(|i| self.hnf[i][i]).collect();
        let total = self.size();
        (0..total).map(move |mut idx| {
            let mut x = [0; MAX_DEGREE];
            for i in 0..n {
                let b = bounds[i] as u64;
                x[i] = (idx % b) as i64;
                idx /= b;
            }
            x
        })
    }

    pub fn units(&self) -> impl Iterator<Item = Coords> + '_ {
        self.elements().filter(move |x| self.is_unit(x))
    }

    pub fn element(&self, coefficients: Coords) -> TruncatedLocalElement<'_> {
        TruncatedLocalElement {
            ring: self,
            coefficients: self.reduce(coefficients),
        }
    }

    /// Map a residue of a finer ring of the same base into this one.
    pub fn project(&self, x: &Coords) -> Coords {
        self.reduce(*x)
    }
}

/// An element of a truncated ring.
#[derive(Debug, Clone, Copy)]
pub struct TruncatedLocalElement<'r> {
    ring: &'r TruncatedRing,
    coefficients: Coords,
}

impl<'r> TruncatedLocalElement<'r> {
    pub fn coefficients(&self) -> &[i64] {
        &self.coefficients[..self.ring.degree()]
    }

    pub fn modulus_exponent(&self) -> u32 {
        self.ring.precision
    }

    pub fn is_unit(&self) -> bool {
        self.ring.is_unit(&self.coefficients)
    }

    pub fn inverse(&self) -> Option<Self> {
        self.ring.inverse(&self.coefficients).map(|c| TruncatedLocalElement {
            ring: self.ring,
            coefficients: c,
        })
    }
}

impl PartialEq for TruncatedLocalElement<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.ring == other.ring && self.coefficients == other.coefficients
    }
}

impl<'r> std::ops::Mul for TruncatedLocalElement<'r> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        TruncatedLocalElement {
            ring: self.ring,
            coefficients: self.ring.mul(&self.coefficients, &rhs.coefficients),
        }
    }
}

impl<'r> std::ops::Add for TruncatedLocalElement<'r> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        TruncatedLocalElement {
            ring: self.ring,
            coefficients: self.ring.add(&self.coefficients, &rhs.coefficients),
        }
    }
}

/// `L = F[y]/(y^2 - s y + n)` with `O_L = O_F[y]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LocalQuadExtension {
    base: LocalBase,
    trace: Coords,
    norm: Coords,
    radicand: Coords,
    integral_basis_flag: bool,
}

impl LocalQuadExtension {
    /// `F(sqrt(delta))` for a rational integer `delta`. For `p = 2` and
    /// `delta = 1 (mod 4)` the generator is `(1 + sqrt(delta))/2`.
    pub fn sqrt(base: LocalBase, delta: i64) -> Result<Self> {
        if delta == 0 {
            return Err(Error::ZeroArgument);
        }
        let p = base.p();
        if delta % (p * p) == 0 || (p == 2 && delta % 4 == 0) {
            return Err(Error::Unsupported(format!(
                "O_F[sqrt({delta})] is not maximal over {base}"
            )));
        }
        if base.ramification_index() != 1 {
            return Err(Error::Unsupported(format!(
                "rational radicands are only admitted over unramified bases, not {base}"
            )));
        }
        let (trace, norm) = if p == 2 && delta.rem_euclid(4) == 1 {
            (scalar(1), scalar((1 - delta) / 4))
        } else {
            (scalar(0), scalar(-delta))
        };
        let ext = LocalQuadExtension {
            base,
            trace,
            norm,
            radicand: scalar(delta),
            integral_basis_flag: true,
        };
        if base.is_square(&ext.radicand) {
            return Err(Error::Unsupported(format!(
                "{delta} is a square in {base}, no quadratic extension"
            )));
        }
        Ok(ext)
    }

    /// `Q(zeta_8) (x) Q_2` over one of its quadratic subfields, generated by
    /// `t` with `t^4 = -1`.
    pub fn zeta8_over(sub: Zeta8Subfield) -> Self {
        let base = LocalBase::Zeta8Subfield(sub);
        let (trace, norm) = sub.zeta8_relation();
        let poly = base.polynomial();
        let t2 = poly_mul(&poly, &trace, &trace);
        let mut radicand = [0; MAX_DEGREE];
        for i in 0..MAX_DEGREE {
            radicand[i] = t2[i] - 4 * norm[i];
        }
        LocalQuadExtension {
            base,
            trace,
            norm,
            radicand,
            integral_basis_flag: true,
        }
    }

    pub fn base(&self) -> LocalBase {
        self.base
    }

    /// `s^2 - 4n`; the extension is `F(sqrt(radicand))`.
    pub fn radicand(&self) -> Coords {
        self.radicand
    }

    pub fn integral_basis_flag(&self) -> bool {
        self.integral_basis_flag
    }

    /// Whether `L/F` is ramified, read off the norm image index.
    pub fn is_ramified(&self) -> Result<bool> {
        let img = norm_unit_image(self, self.base.stability_threshold())?;
        Ok(img.index() == 2)
    }

    fn norm_in(&self, ring: &TruncatedRing, a: &Coords, b: &Coords) -> Coords {
        let aa = ring.mul(a, a);
        let sab = ring.mul(&ring.mul(&self.trace, a), b);
        let nbb = ring.mul(&self.norm, &ring.mul(b, b));
        ring.add(&ring.add(&aa, &sab), &nbb)
    }

    fn mul_in(&self, ring: &TruncatedRing, x: &(Coords, Coords), y: &(Coords, Coords)) -> (Coords, Coords) {
        let (a, b) = x;
        let (c, d) = y;
        let bd = ring.mul(b, d);
        let first = ring.sub(&ring.mul(a, c), &ring.mul(&self.norm, &bd));
        let second = ring.add(
            &ring.add(&ring.mul(a, d), &ring.mul(b, c)),
            &ring.mul(&self.trace, &bd),
        );
        (first, second)
    }
}

impl fmt::Display for LocalQuadExtension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.base {
            LocalBase::Zeta8Subfield(_) => write!(f, "Q_2(zeta_8)/{}", self.base),
            _ => write!(f, "{}(sqrt({}))/{}", self.base, self.radicand[0], self.base),
        }
    }
}

/// The image of `N: O_L^x -> O_F^x` in `(O_F / pi^k)^x`.
#[derive(Debug, Clone)]
pub struct NormImage {
    ring: TruncatedRing,
    image: BTreeSet<Coords>,
    unit_count: u64,
}

impl NormImage {
    pub fn ring(&self) -> &TruncatedRing {
        &self.ring
    }

    pub fn residues(&self) -> &BTreeSet<Coords> {
        &self.image
    }

    pub fn contains(&self, x: &Coords) -> bool {
        self.image.contains(&self.ring.reduce(*x))
    }

    pub fn contains_int(&self, a: i64) -> bool {
        self.image.contains(&self.ring.from_int(a))
    }

    pub fn len(&self) -> usize {
        self.image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image.is_empty()
    }

    /// `[(O_F/pi^k)^x : image]`.
    pub fn index(&self) -> u64 {
        self.unit_count / self.image.len() as u64
    }
}

fn norm_image_at(ext: &LocalQuadExtension, k: u32) -> NormImage {
    let ring = ext.base.ring(k);
    let elements: Vec<Coords> = ring.elements().collect();
    let mut image = BTreeSet::new();
    for a in &elements {
        for b in &elements {
            let n = ext.norm_in(&ring, a, b);
            if ring.is_unit(&n) {
                image.insert(n);
            }
        }
    }
    let unit_count = ring.unit_count();
    NormImage {
        ring,
        image,
        unit_count,
    }
}

fn check_precision(given: u32, required: u32) -> Result<()> {
    if given < required {
        Err(Error::PrecisionTooLow { given, required })
    } else {
        Ok(())
    }
}

/// Unit norm image modulo `pi^k`, confirmed against the image at `k + 1`.
pub fn norm_unit_image(ext: &LocalQuadExtension, k: u32) -> Result<NormImage> {
    check_precision(k, ext.base.stability_threshold())?;
    let low = norm_image_at(ext, k);
    let high = norm_image_at(ext, k + 1);
    let projected: BTreeSet<Coords> = high.image.iter().map(|x| low.ring.project(x)).collect();
    if projected != low.image {
        return Err(Error::PrecisionUnstable {
            low: k,
            high: k + 1,
            what: format!("unit norm image of {ext}"),
        });
    }
    Ok(low)
}

/// The norm of `a + b t + c t^2 + d t^3` from `Q_2(zeta_8)` to a quadratic
/// subfield, by the explicit quadratic forms, in the basis `1, g`.
pub fn zeta8_norm_form(sub: Zeta8Subfield, x: [i64; 4]) -> Coords {
    let [a, b, c, d] = x;
    match sub {
        Zeta8Subfield::Sqrt2 => [a * a + b * b + c * c + d * d, a * b - a * d + b * c + c * d, 0, 0],
        Zeta8Subfield::SqrtMinus2 => [a * a - b * b + c * c - d * d, a * b + a * d - b * c + c * d, 0, 0],
        Zeta8Subfield::SqrtMinus1 => {
            // written in the basis 1, t^2 - 1
            let u = a * a - b * b - c * c + d * d + 2 * b * d + 2 * a * c;
            let v = 2 * a * c - b * b + d * d;
            [u - v, v, 0, 0]
        }
    }
}

/// Unit norm image for `Q(zeta_8) (x) Q_2` over a quadratic subfield, from the
/// explicit norm forms.
pub fn zeta8_norm_image(sub: Zeta8Subfield, k: u32) -> Result<NormImage> {
    let base = LocalBase::Zeta8Subfield(sub);
    check_precision(k, base.stability_threshold())?;
    let ring = base.ring(k);
    // x mod 2^m O_L fixes N(x) mod 2^m O_F, and 2^m O_F lies in pi^k O_F
    let m = (k + 1) / 2;
    let bound = 1i64 << m;
    let mut image = BTreeSet::new();
    for a in 0..bound {
        for b in 0..bound {
            for c in 0..bound {
                for d in 0..bound {
                    let n = ring.reduce(zeta8_norm_form(sub, [a, b, c, d]));
                    if ring.is_unit(&n) {
                        image.insert(n);
                    }
                }
            }
        }
    }
    let unit_count = ring.unit_count();
    Ok(NormImage {
        ring,
        image,
        unit_count,
    })
}

/// `N_{F/Q_2}` of the radicand of `L = F(sqrt(delta))`, so that
/// `(a, L/F) = (a, N(delta))_2` for `a` in `Q_2`.
fn projected_radicand(ext: &LocalQuadExtension) -> Result<i64> {
    let n = ext.base.norm_to_rationals(&ext.radicand);
    i64::try_from(n).map_err(|_| Error::OutOfRange(format!("norm {n} of the radicand")))
}

/// The norm residue symbol `(a, L/F)` for rational `a`.
pub fn norm_residue_symbol(a: i64, ext: &LocalQuadExtension) -> Result<i8> {
    hilbert_symbol_int(a, projected_radicand(ext)?, ext.base.p())
}

/// Whether `Z_2^x` lies in `N_{L/F}(O_L^x)`: both `(-1, L/F)` and `(5, L/F)`
/// are trivial.
pub fn z2_in_norm_group(ext: &LocalQuadExtension) -> Result<bool> {
    if ext.base.p() != 2 {
        return Err(Error::Unsupported(format!(
            "Z_2^x membership is a 2-adic criterion; base is {}",
            ext.base
        )));
    }
    Ok(norm_residue_symbol(-1, ext)? == 1 && norm_residue_symbol(5, ext)? == 1)
}

/// The same decision read off the enumerated unit norm image.
pub fn z2_in_norm_group_by_image(ext: &LocalQuadExtension) -> Result<bool> {
    if ext.base.p() != 2 {
        return Err(Error::Unsupported(format!(
            "Z_2^x membership is a 2-adic criterion; base is {}",
            ext.base
        )));
    }
    let img = norm_unit_image(ext, ext.base.stability_threshold())?;
    Ok(img.contains_int(-1) && img.contains_int(5))
}

fn rational_to_integer_class(a: Rational64) -> Result<i64> {
    if *a.numer() == 0 {
        return Err(Error::ZeroArgument);
    }
    // a * denom^2 has the same square class
    a.numer()
        .checked_mul(*a.denom())
        .ok_or_else(|| Error::OutOfRange(format!("{a} overflows")))
}

fn split_valuation(a: i64, p: i64) -> (u32, i64) {
    let v = valuation(a, p);
    (v, a / p.pow(v))
}

fn legendre(u: i64, p: i64) -> i8 {
    if mod_pow(u, ((p - 1) / 2) as u64, p) == 1 {
        1
    } else {
        -1
    }
}

/// The Hilbert symbol on nonzero integers.
pub fn hilbert_symbol_int(a: i64, b: i64, p: i64) -> Result<i8> {
    if a == 0 || b == 0 {
        return Err(Error::ZeroArgument);
    }
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    let (alpha, u) = split_valuation(a, p);
    let (beta, v) = split_valuation(b, p);
    let odd = |e: i64| e.rem_euclid(2) == 1;
    if p == 2 {
        let eps = |x: i64| (x - 1).div_euclid(2).rem_euclid(2);
        let omega = |x: i64| {
            let r = x.rem_euclid(16);
            ((r * r - 1) / 8).rem_euclid(2)
        };
        let e = eps(u) * eps(v) + alpha as i64 * omega(v) + beta as i64 * omega(u);
        return Ok(if odd(e) { -1 } else { 1 });
    }
    let mut s: i8 = if odd(alpha as i64 * beta as i64 * ((p - 1) / 2)) { -1 } else { 1 };
    if beta % 2 == 1 {
        s *= legendre(u, p);
    }
    if alpha % 2 == 1 {
        s *= legendre(v, p);
    }
    Ok(s)
}

/// `(a, b)_p = +1` iff `z^2 = a x^2 + b y^2` has a nonzero solution in `Q_p`.
pub fn hilbert_symbol(a: Rational64, b: Rational64, p: i64) -> Result<i8> {
    hilbert_symbol_int(rational_to_integer_class(a)?, rational_to_integer_class(b)?, p)
}

fn strip_squares(mut a: i64, p: i64) -> i64 {
    while a % (p * p) == 0 {
        a /= p * p;
    }
    a
}

/// Hilbert symbol by searching for a primitive solution of
/// `z^2 = a x^2 + b y^2` modulo `p^N` that lifts by Hensel's lemma.
///
/// After making at most one of `a, b` divisible by `p`, a `Q_p` solution
/// exists iff such a residue solution exists with `N = 1` for odd `p` and
/// `N = 5` for `p = 2`.
pub fn hilbert_symbol_bruteforce(a: Rational64, b: Rational64, p: i64) -> Result<i8> {
    let a = rational_to_integer_class(a)?;
    let b = rational_to_integer_class(b)?;
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    let mut a = strip_squares(a, p);
    let mut b = strip_squares(b, p);
    if a % p == 0 && b % p == 0 {
        // (a, b) = (a, -ab)
        b = strip_squares(-(a / p) * (b / p), p);
    }
    if a % p == 0 {
        std::mem::swap(&mut a, &mut b);
    }
    let n: u32 = if p == 2 { 5 } else { 1 };
    let modulus = p.pow(n);
    let a = a.rem_euclid(modulus) as i128;
    let b = b.rem_euclid(modulus) as i128;
    let m = modulus as i128;
    let val = |x: i128| -> u32 {
        if x.rem_euclid(m) == 0 {
            n
        } else {
            valuation(x.rem_euclid(m) as i64, p)
        }
    };
    let lifts = |x: i128, y: i128, z: i128| -> bool {
        if (a * x * x + b * y * y - z * z).rem_euclid(m) != 0 {
            return false;
        }
        [2 * z, 2 * a * x, 2 * b * y]
            .iter()
            .any(|&d| n > 2 * val(d))
    };
    // z = 1
    for x in 0..m {
        for y in 0..m {
            if lifts(x, y, 1) {
                return Ok(1);
            }
        }
    }
    // z = 0 mod p, x = 1
    for z in (0..m).step_by(p as usize) {
        for y in 0..m {
            if lifts(1, y, z) {
                return Ok(1);
            }
        }
    }
    // z, x = 0 mod p, y = 1
    for z in (0..m).step_by(p as usize) {
        for x in (0..m).step_by(p as usize) {
            if lifts(x, 1, z) {
                return Ok(1);
            }
        }
    }
    Ok(-1)
}

/// Result of the unramified square-structure enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SquareStructure {
    /// `[Z_q^x : (Z_q^x)^2]`.
    pub square_index: u64,
    /// 4 if `Z_2^x` meets `(1 + 2 Z_q)^2` in `1 + 4 Z_2`, 8 if in `1 + 8 Z_2`.
    pub q2_intersection_level: u32,
}

/// Squares in `Z_q^x` for `q = 2^f`, by enumeration modulo 32.
pub fn unramified_square_structure(f: u32) -> Result<SquareStructure> {
    let base = LocalBase::unramified(2, f)?;
    let ring = base.ring(5);
    let one = ring.from_int(1);
    let mut squares = HashSet::new();
    let mut principal_squares = HashSet::new();
    let mut units = 0u64;
    for u in ring.units() {
        units += 1;
        let sq = ring.mul(&u, &u);
        squares.insert(sq);
        let residue = reduce_against(&ring.residue_hnf, ring.degree(), ring.sub(&u, &one));
        if residue == [0; MAX_DEGREE] {
            principal_squares.insert(sq);
        }
    }
    let square_index = units / squares.len() as u64;
    // 1 + 8 Z_q lies in (1 + 2 Z_q)^2
    let eight = ring.from_int(8);
    for y in ring.elements() {
        let x = ring.add(&one, &ring.mul(&eight, &y));
        if !principal_squares.contains(&x) {
            return Err(Error::RouteDisagreement(format!(
                "1 + 8y not a square for y = {y:?} in f = {f}"
            )));
        }
    }
    let five_is_square = principal_squares.contains(&ring.from_int(5));
    let residue = base.ring(1);
    let artin_schreier_root = residue.elements().any(|t| {
        let v = ring.add(&ring.add(&ring.mul(&t, &t), &t), &one);
        residue.reduce(v) == [0; MAX_DEGREE]
    });
    if five_is_square != artin_schreier_root {
        return Err(Error::RouteDisagreement(format!(
            "5 square = {five_is_square} but t^2 + t + 1 root in F_q = {artin_schreier_root} for f = {f}"
        )));
    }
    Ok(SquareStructure {
        square_index,
        q2_intersection_level: if five_is_square { 4 } else { 8 },
    })
}

/// `(2 * #containing, 2 * #not_containing)` over index-2 subgroups of the
/// square classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RamifiedCount {
    pub containing: u64,
    pub not_containing: u64,
}

struct SquareClasses {
    ring: TruncatedRing,
    squares: HashSet<Coords>,
    basis: Vec<Coords>,
    reps: Vec<Coords>,
}

impl SquareClasses {
    fn new(ring: TruncatedRing) -> Self {
        let units: Vec<Coords> = ring.units().collect();
        let squares: HashSet<Coords> = units.iter().map(|u| ring.mul(u, u)).collect();
        let dim_total = units.len() / squares.len();
        let mut basis = Vec::new();
        let mut reps = vec![ring.from_int(1)];
        for u in &units {
            if reps.len() == dim_total {
                break;
            }
            let covered = reps.iter().any(|r| squares.contains(&ring.mul(u, r)));
            if !covered {
                basis.push(*u);
                let extra: Vec<Coords> = reps.iter().map(|r| ring.mul(r, u)).collect();
                reps.extend(extra);
            }
        }
        SquareClasses {
            ring,
            squares,
            basis,
            reps,
        }
    }

    fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Coordinates of `u` as a bit mask over `basis`.
    fn coordinates(&self, u: &Coords) -> u32 {
        let u = self.ring.reduce(*u);
        self.reps
            .iter()
            .position(|r| self.squares.contains(&self.ring.mul(&u, r)))
            .expect("every unit lies in some square class") as u32
    }
}

fn count_at(f: u32, k: u32) -> Result<(RamifiedCount, usize)> {
    let ring = LocalBase::unramified(2, f)?.ring(k);
    let classes = SquareClasses::new(ring);
    let minus_one = classes.coordinates(&classes.ring.from_int(-1));
    let five = classes.coordinates(&classes.ring.from_int(5));
    let dim = classes.dim();
    let parity = |x: u32| x.count_ones() % 2;
    let mut containing = 0;
    let mut not_containing = 0;
    for phi in 1u32..(1 << dim) {
        if parity(phi & minus_one) == 0 && parity(phi & five) == 0 {
            containing += 1;
        } else {
            not_containing += 1;
        }
    }
    Ok((
        RamifiedCount {
            containing: 2 * containing,
            not_containing: 2 * not_containing,
        },
        dim,
    ))
}

/// Ramified quadratic extensions of `Q_q`, `q = 2^f`, split by whether their
/// unit norm group contains `Z_2^x`.
pub fn count_ramified_quadratic_by_norm(f: u32) -> Result<RamifiedCount> {
    if f == 0 || f > 3 {
        return Err(Error::OutOfRange(format!(
            "counting lemma enumerates f in 1..=3, got {f}"
        )));
    }
    let (low, dim) = count_at(f, 3)?;
    let (high, _) = count_at(f, 4)?;
    if low != high {
        return Err(Error::PrecisionUnstable {
            low: 3,
            high: 4,
            what: format!("ramified quadratic count for f = {f}"),
        });
    }
    debug_assert_eq!(dim as u32, f + 1);
    Ok(low)
}

fn norm_one_index_at(ext: &LocalQuadExtension, k: u32) -> u64 {
    let ring = ext.base.ring(k);
    let fine = ext.base.ring(k + 1);
    let p = ext.base.p();
    let inverses: HashMap<Coords, Coords> = ring
        .units()
        .map(|u| (u, ring.inverse(&u).expect("unit")))
        .collect();
    let elements: Vec<Coords> = ring.elements().collect();
    // u / sigma(u) = u^2 / N(u)
    let mut group = HashSet::new();
    for a in &elements {
        for b in &elements {
            let n = ext.norm_in(&ring, a, b);
            if let Some(inv) = inverses.get(&n) {
                let (x, y) = ext.mul_in(&ring, &(*a, *b), &(*a, *b));
                group.insert((ring.mul(&x, inv), ring.mul(&y, inv)));
            }
        }
    }
    // z / sigma(z) for a uniformizer z, when L/F is ramified
    let divide_p = |x: &Coords| -> Coords {
        let mut out = [0; MAX_DEGREE];
        for i in 0..ring.degree() {
            debug_assert_eq!(x[i] % p, 0);
            out[i] = x[i] / p;
        }
        ring.reduce(out)
    };
    // for a ramified L/F with O_L = O_F[y], y - r is a uniformizer for any
    // lift r of the double root of its minimal polynomial
    let y = scalar(1);
    let twist = fine.elements().find_map(|a| {
        let n = ext.norm_in(&fine, &a, &y);
        if fine.is_unit(&n) || n.iter().all(|&c| c % (p * p) == 0) {
            return None;
        }
        let inv = inverses.get(&divide_p(&n))?;
        let (x, w) = ext.mul_in(&fine, &(a, y), &(a, y));
        Some((ring.mul(&divide_p(&x), inv), ring.mul(&divide_p(&w), inv)))
    });
    if let Some(c) = twist {
        let shifted: Vec<_> = group.iter().map(|g| ext.mul_in(&ring, g, &c)).collect();
        group.extend(shifted);
    }
    let squares: HashSet<_> = group.iter().map(|g| ext.mul_in(&ring, g, g)).collect();
    group.len() as u64 / squares.len() as u64
}

/// `[O_L^(1) : (O_L^(1))^2]` for the norm-one units of `L/F`, over an
/// unramified base of degree at most 2.
pub fn norm_one_square_index(ext: &LocalQuadExtension) -> Result<u64> {
    match ext.base {
        LocalBase::Unramified { f, .. } if f <= 2 => {}
        _ => {
            return Err(Error::Unsupported(format!(
                "norm-one square index over {} (unramified bases of degree <= 2 only)",
                ext.base
            )))
        }
    }
    let k = if ext.base.p() == 2 { 4 } else { 1 };
    let low = norm_one_index_at(ext, k);
    let high = norm_one_index_at(ext, k + 1);
    if low != high {
        return Err(Error::PrecisionUnstable {
            low: k,
            high: k + 1,
            what: format!("norm-one square index of {ext}: {low} vs {high}"),
        });
    }
    Ok(low)
}

/// Residue of a rational integer `a` modulo `p^k`, for callers that only need
/// the rational part of an image.
pub fn rational_residues(image: &NormImage, modulus: i64) -> BTreeSet<i64> {
    (0..modulus)
        .filter(|&a| a.gcd(&modulus) == 1 && image.contains_int(a))
        .collect()
}
