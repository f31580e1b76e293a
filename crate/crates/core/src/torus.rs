//! Class numbers and Tamagawa numbers of the CM tori `T^{K,Q}` and `T^K_1`
//! for CM algebras built from imaginary quadratic and biquadratic fields.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_rational::Rational64;

use crate::arith::{is_prime, prime_divisors};
use crate::error::{Error, Result};
use crate::padic::hilbert_symbol_int;
use crate::quadratic::{
    class_number_imaginary, class_number_real, roots_of_unity_order, BiquadraticCM, CmField,
    QuadraticField, SplittingType,
};

pub type Rational = Rational64;

fn pow2(e: i64) -> Rational {
    if e >= 0 {
        Rational::from_integer(1 << e)
    } else {
        Rational::new(1, 1 << -e)
    }
}

fn int(n: u64) -> Rational {
    Rational::from_integer(n as i64)
}

/// A CM algebra `K = K_1 x ... x K_r`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CMAlgebraSpec {
    components: Vec<CmField>,
}

impl CMAlgebraSpec {
    pub fn new(components: Vec<CmField>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::OutOfRange("a CM algebra needs at least one component".into()));
        }
        Ok(CMAlgebraSpec { components })
    }

    pub fn single(component: CmField) -> Self {
        CMAlgebraSpec {
            components: vec![component],
        }
    }

    pub fn imaginary(m: i64) -> Result<Self> {
        CmField::imaginary(m).map(Self::single)
    }

    pub fn biquadratic(d: i64, j: i64) -> Result<Self> {
        CmField::biquadratic(d, j).map(Self::single)
    }

    pub fn components(&self) -> &[CmField] {
        &self.components
    }

    pub fn r(&self) -> usize {
        self.components.len()
    }

    /// `d = [K+ : Q]`.
    pub fn kplus_degree(&self) -> u32 {
        self.components.iter().map(CmField::real_degree).sum()
    }

    pub fn as_single(&self) -> Option<&CmField> {
        match self.components.as_slice() {
            [c] => Some(c),
            _ => None,
        }
    }
}

fn render_component(c: &CmField) -> String {
    match c {
        CmField::Imaginary(k) => format!("iq:{}", k.radicand()),
        CmField::Biquadratic(k) => format!("biq:{},{}", k.d(), k.j()),
    }
}

impl fmt::Display for CMAlgebraSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.as_single() {
            Some(c) => f.write_str(&render_component(c)),
            None => {
                let parts: Vec<String> = self.components.iter().map(render_component).collect();
                write!(f, "prod:{}", parts.join(";"))
            }
        }
    }
}

/// The places of `K_i+` above `p` that ramify in `K_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RamifiedPlaces {
    pub prime: i64,
    pub component: usize,
    /// Splitting of `p` in `K_i+`; `None` when `K_i+ = Q`.
    pub splitting_in_kplus: Option<SplittingType>,
    pub count: usize,
    pub inertia_degree: u32,
    pub totally_ramified: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentProfile {
    pub t: usize,
    /// Primes ramified in `E` and split in `F` (biquadratic only).
    pub s: Option<usize>,
    pub ramified_primes: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RamificationProfile {
    pub components: Vec<ComponentProfile>,
    pub t: usize,
    pub r: usize,
    pub s: usize,
    /// `S_{K/K+}`.
    pub primes: BTreeSet<i64>,
    pub places: Vec<RamifiedPlaces>,
    pub totally_ramified_2: bool,
}

impl RamificationProfile {
    pub fn places_above(&self, p: i64) -> impl Iterator<Item = &RamifiedPlaces> {
        self.places.iter().filter(move |v| v.prime == p)
    }
}

fn biquadratic_places(k: &BiquadraticCM, component: usize) -> Vec<RamifiedPlaces> {
    let f = k.real_subfield();
    let e = k.imaginary_subfield();
    let e2 = k.other_imaginary_subfield();
    let mut out = Vec::new();
    for p in prime_divisors(e.discriminant() * f.discriminant()) {
        // K/F ramifies above p iff p ramifies in both imaginary subfields
        if !(e.is_ramified_at(p) && e2.is_ramified_at(p)) {
            continue;
        }
        let split = f.splitting_type(p).expect("prime");
        out.push(RamifiedPlaces {
            prime: p,
            component,
            splitting_in_kplus: Some(split),
            count: split.place_count(),
            inertia_degree: split.inertia_degree(),
            totally_ramified: split == SplittingType::Ramified,
        });
    }
    out
}

pub fn ramification_profile(spec: &CMAlgebraSpec) -> RamificationProfile {
    let mut components = Vec::new();
    let mut places = Vec::new();
    for (i, c) in spec.components().iter().enumerate() {
        let here = match c {
            CmField::Imaginary(k) => prime_divisors(k.discriminant())
                .into_iter()
                .map(|p| RamifiedPlaces {
                    prime: p,
                    component: i,
                    splitting_in_kplus: None,
                    count: 1,
                    inertia_degree: 1,
                    totally_ramified: false,
                })
                .collect(),
            CmField::Biquadratic(k) => biquadratic_places(k, i),
        };
        let t = here.iter().map(|v| v.count).sum();
        let s = match c {
            CmField::Imaginary(_) => None,
            CmField::Biquadratic(_) => Some(
                here.iter()
                    .filter(|v| v.splitting_in_kplus == Some(SplittingType::Split))
                    .count(),
            ),
        };
        components.push(ComponentProfile {
            t,
            s,
            ramified_primes: here.iter().map(|v| v.prime).collect(),
        });
        places.extend(here);
    }
    RamificationProfile {
        t: components.iter().map(|c| c.t).sum(),
        r: spec.r(),
        s: components.iter().filter_map(|c| c.s).sum(),
        primes: places.iter().map(|v| v.prime).collect(),
        totally_ramified_2: places.iter().any(|v| v.totally_ramified),
        components,
        places,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IndexReason {
    /// Odd `p` with a ramified place of odd inertia degree.
    OddInertia,
    /// Odd `p`, every ramified place has even inertia degree.
    EvenInertia,
    /// `p = 2` ramified in `E` and split in `F`.
    SplitInF,
    /// `p = 2` ramified in `E` and inert in `F`.
    InertInF,
    /// `p = 2` totally ramified in a biquadratic component.
    TotallyRamified,
    /// `p = 2` across an imaginary quadratic or several components: the
    /// symbol pairs `((-1, .), (5, .))` span a space of the given rank.
    SymbolRank(u32),
}

impl fmt::Display for IndexReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexReason::OddInertia => f.write_str("odd-p:ramified-place-with-odd-f"),
            IndexReason::EvenInertia => f.write_str("odd-p:all-ramified-places-even-f"),
            IndexReason::SplitInF => f.write_str("2-adic:ramified-in-E-split-in-F"),
            IndexReason::InertInF => f.write_str("2-adic:ramified-in-E-inert-in-F"),
            IndexReason::TotallyRamified => f.write_str("2-adic:totally-ramified"),
            IndexReason::SymbolRank(r) => write!(f, "2-adic:symbol-rank-{r}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalIndexEntry {
    pub prime: i64,
    /// `e_{T,p} = [Z_p^x : N(T(Z_p))]`.
    pub e_value: u64,
    /// `e(K/K+, Q, p)`.
    pub exponent: u32,
    pub reason: IndexReason,
    /// Distinct nontrivial `((-1, .)_2, (5, .)_2)` pairs, for `p = 2`.
    pub symbol_pairs: Vec<(i8, i8)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LocalIndexReport {
    pub entries: BTreeMap<i64, LocalIndexEntry>,
    /// `e(K/K+, Q)`.
    pub total_exponent: u32,
}

impl LocalIndexReport {
    /// `prod_p e_{T,p}`.
    pub fn product(&self) -> u64 {
        self.entries.values().map(|e| e.e_value).product()
    }
}

/// The character `a -> (a, K_w/F_v)` on `Z_2^x`, evaluated at `-1` and `5`.
fn two_adic_pair(spec: &CMAlgebraSpec, place: &RamifiedPlaces) -> Result<(i8, i8)> {
    // (a, F_v(sqrt delta)/F_v) = (a, N_{F_v/Q_2}(delta))_2
    let projected = match &spec.components()[place.component] {
        CmField::Imaginary(k) => k.radicand(),
        CmField::Biquadratic(k) => match place.splitting_in_kplus {
            Some(SplittingType::Split) => -k.j(),
            _ => k.j() * k.j(),
        },
    };
    Ok((
        hilbert_symbol_int(-1, projected, 2)?,
        hilbert_symbol_int(5, projected, 2)?,
    ))
}

fn f2_rank(vectors: &[u8]) -> u32 {
    let mut basis: Vec<u8> = Vec::new();
    for &v in vectors {
        let mut x = v;
        for &b in &basis {
            x = x.min(x ^ b);
        }
        if x != 0 {
            basis.push(x);
        }
    }
    basis.len() as u32
}

fn local_entry(spec: &CMAlgebraSpec, profile: &RamificationProfile, p: i64) -> Result<LocalIndexEntry> {
    let places: Vec<&RamifiedPlaces> = profile.places_above(p).collect();
    if p != 2 {
        let odd = places.iter().any(|v| v.inertia_degree % 2 == 1);
        return Ok(LocalIndexEntry {
            prime: p,
            e_value: if odd { 2 } else { 1 },
            exponent: odd as u32,
            reason: if odd { IndexReason::OddInertia } else { IndexReason::EvenInertia },
            symbol_pairs: Vec::new(),
        });
    }
    let mut pairs = BTreeSet::new();
    for v in &places {
        let pair = two_adic_pair(spec, v)?;
        if pair != (1, 1) {
            pairs.insert(pair);
        }
    }
    let bits: Vec<u8> = pairs
        .iter()
        .map(|&(a, b)| ((a == -1) as u8) | (((b == -1) as u8) << 1))
        .collect();
    let rank = f2_rank(&bits);
    let reason = match (spec.as_single(), places.first()) {
        (Some(CmField::Biquadratic(_)), Some(v)) => match v.splitting_in_kplus {
            Some(SplittingType::Split) => IndexReason::SplitInF,
            Some(SplittingType::Inert) => IndexReason::InertInF,
            _ => IndexReason::TotallyRamified,
        },
        _ => IndexReason::SymbolRank(rank),
    };
    Ok(LocalIndexEntry {
        prime: 2,
        e_value: 1 << rank,
        exponent: rank,
        reason,
        symbol_pairs: pairs.into_iter().collect(),
    })
}

/// `e_{T,p}` for one prime; primes outside `S_{K/K+}` give the trivial entry.
pub fn local_index(spec: &CMAlgebraSpec, p: i64) -> Result<LocalIndexEntry> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    let profile = ramification_profile(spec);
    local_entry(spec, &profile, p)
}

/// `e_{T,p}` for every `p` in `S_{K/K+}`.
pub fn local_indices(spec: &CMAlgebraSpec) -> Result<LocalIndexReport> {
    let profile = ramification_profile(spec);
    local_indices_for(spec, &profile)
}

fn local_indices_for(spec: &CMAlgebraSpec, profile: &RamificationProfile) -> Result<LocalIndexReport> {
    let mut report = LocalIndexReport::default();
    for &p in &profile.primes {
        let entry = local_entry(spec, profile, p)?;
        report.total_exponent += entry.exponent;
        report.entries.insert(p, entry);
    }
    Ok(report)
}

/// `[A^x : N(T(A)) Q^x]`, exact or known only to divide a bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlobalIndex {
    Exact(u64),
    Divides(u64),
}

impl GlobalIndex {
    pub fn exact(&self) -> Option<u64> {
        match *self {
            GlobalIndex::Exact(n) => Some(n),
            GlobalIndex::Divides(_) => None,
        }
    }

    pub fn bound(&self) -> u64 {
        match *self {
            GlobalIndex::Exact(n) | GlobalIndex::Divides(n) => n,
        }
    }
}

pub fn global_norm_index(spec: &CMAlgebraSpec) -> Result<GlobalIndex> {
    Ok(match spec.as_single() {
        Some(CmField::Imaginary(_)) => GlobalIndex::Exact(2),
        // contains two distinct imaginary quadratic fields
        Some(CmField::Biquadratic(_)) => GlobalIndex::Exact(1),
        None => GlobalIndex::Divides(local_indices(spec)?.product()),
    })
}

/// Hasse unit index `Q`, when determined: imaginary quadratic fields,
/// `Q(zeta_8)`, and biquadratic fields with `F = Q(sqrt p)` for a prime `p`.
pub fn hasse_unit_index(component: &CmField) -> Option<u8> {
    match component {
        CmField::Imaginary(_) => Some(1),
        CmField::Biquadratic(k) if k.is_zeta8() => Some(1),
        CmField::Biquadratic(k) if is_prime(k.d()) => {
            let radicands = k.subfield_radicands();
            let has_small = radicands.contains(&-1) || radicands.contains(&-2);
            Some(if k.d() % 4 == 3 && has_small { 2 } else { 1 })
        }
        CmField::Biquadratic(_) => None,
    }
}

/// A value that is either exact or only bracketed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimate {
    Exact(Rational),
    Interval(Rational, Rational),
}

impl Estimate {
    pub fn exact(&self) -> Option<Rational> {
        match *self {
            Estimate::Exact(x) => Some(x),
            Estimate::Interval(..) => None,
        }
    }

    pub fn lo(&self) -> Rational {
        match *self {
            Estimate::Exact(x) | Estimate::Interval(x, _) => x,
        }
    }

    pub fn hi(&self) -> Rational {
        match *self {
            Estimate::Exact(x) | Estimate::Interval(_, x) => x,
        }
    }

    pub fn contains(&self, x: Rational) -> bool {
        self.lo() <= x && x <= self.hi()
    }

    fn scale(&self, c: Rational) -> Estimate {
        match *self {
            Estimate::Exact(x) => Estimate::Exact(x * c),
            Estimate::Interval(a, b) => Estimate::Interval(a * c, b * c),
        }
    }
}

impl fmt::Display for Estimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Estimate::Exact(x) => write!(f, "{x}"),
            Estimate::Interval(a, b) => write!(f, "[{a}, {b}]"),
        }
    }
}

/// Caller-supplied invariants for the whole algebra.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Overrides {
    pub h_k: Option<u64>,
    pub h_kplus: Option<u64>,
    pub q: Option<u8>,
}

/// Field invariants of the algebra, with `ratio = h_K / (h_{K+} Q)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldInvariants {
    pub h_k: Option<u64>,
    pub h_kplus: Option<u64>,
    pub q: Option<u8>,
    pub ratio: Rational,
}

struct ComponentInvariants {
    h_k: Option<u64>,
    h_kplus: u64,
    q: Option<u8>,
    ratio: Rational,
}

fn component_invariants(c: &CmField) -> Result<ComponentInvariants> {
    match c {
        CmField::Imaginary(k) => {
            let h = class_number_imaginary(k.discriminant())?;
            Ok(ComponentInvariants {
                h_k: Some(h),
                h_kplus: 1,
                q: Some(1),
                ratio: int(h),
            })
        }
        CmField::Biquadratic(k) if k.is_zeta8() => Ok(ComponentInvariants {
            h_k: Some(1),
            h_kplus: 1,
            q: Some(1),
            ratio: int(1),
        }),
        CmField::Biquadratic(k) => {
            let h_f = class_number_real(k.real_subfield().discriminant())?;
            let h_e = class_number_imaginary(k.imaginary_subfield().discriminant())?;
            let h_e2 = class_number_imaginary(k.other_imaginary_subfield().discriminant())?;
            let q = hasse_unit_index(c);
            // h_K = Q h_F h_E h_E' / 2
            let h_k = match q {
                Some(q) => {
                    let twice = q as u64 * h_f * h_e * h_e2;
                    if twice % 2 != 0 {
                        return Err(Error::RouteDisagreement(format!(
                            "Q h_F h_E h_E' = {twice} is odd for {}",
                            render_component(c)
                        )));
                    }
                    Some(twice / 2)
                }
                None => None,
            };
            Ok(ComponentInvariants {
                h_k,
                h_kplus: h_f,
                q,
                ratio: Rational::new((h_e * h_e2) as i64, 2),
            })
        }
    }
}

fn merge_override<T: PartialEq + Copy + fmt::Display>(
    name: &str,
    computed: Option<T>,
    supplied: Option<T>,
) -> Result<Option<T>> {
    match (computed, supplied) {
        (Some(c), Some(s)) if c != s => Err(Error::InconsistentOverride(format!(
            "{name} supplied as {s} but computed as {c}"
        ))),
        (c, s) => Ok(s.or(c)),
    }
}

pub fn field_invariants(spec: &CMAlgebraSpec, overrides: &Overrides) -> Result<FieldInvariants> {
    if overrides.h_k == Some(0) || overrides.h_kplus == Some(0) {
        return Err(Error::OutOfRange("class numbers must be positive".into()));
    }
    if let Some(q) = overrides.q {
        if q != 1 && q != 2 {
            return Err(Error::OutOfRange(format!("Q must be 1 or 2, got {q}")));
        }
    }
    let parts = spec
        .components()
        .iter()
        .map(component_invariants)
        .collect::<Result<Vec<_>>>()?;
    let h_k: Option<u64> = parts.iter().map(|c| c.h_k).product();
    let h_kplus: u64 = parts.iter().map(|c| c.h_kplus).product();
    let q: Option<u64> = parts.iter().map(|c| c.q.map(u64::from)).product();
    let q = q.map(|q| u8::try_from(q).unwrap_or(u8::MAX));
    let herglotz_ratio: Rational = parts.iter().map(|c| c.ratio).product();

    let h_k = merge_override("h_K", h_k, overrides.h_k)?;
    let h_kplus = merge_override("h_K+", Some(h_kplus), overrides.h_kplus)?;
    let q = if spec.r() == 1 {
        merge_override("Q", q, overrides.q)?
    } else {
        // Q of an algebra is the product over components; a supplied value
        // is checked only when every factor is known
        merge_override("Q", q.filter(|&q| q <= 2), overrides.q)?.or(q)
    };
    let ratio = match (h_k, h_kplus, q) {
        (Some(hk), Some(hp), Some(q)) => {
            let supplied = Rational::new(hk as i64, hp as i64 * q as i64);
            if supplied != herglotz_ratio {
                return Err(Error::InconsistentOverride(format!(
                    "h_K/(h_K+ Q) = {supplied}, but the quadratic subfields give {herglotz_ratio}"
                )));
            }
            supplied
        }
        _ => herglotz_ratio,
    };
    // with Q supplied, h_K follows from h_K = ratio h_K+ Q
    let h_k = match (h_k, h_kplus, q) {
        (None, Some(hp), Some(q)) => {
            let derived = ratio * Rational::from_integer(hp as i64 * q as i64);
            if !derived.is_integer() {
                return Err(Error::InconsistentOverride(format!(
                    "Q = {q} makes h_K = {derived}, not an integer"
                )));
            }
            Some(derived.to_integer() as u64)
        }
        (h_k, ..) => h_k,
    };
    Ok(FieldInvariants {
        h_k,
        h_kplus,
        q,
        ratio,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassNumberReport {
    pub spec: CMAlgebraSpec,
    pub h_t: Estimate,
    pub h_t1: Rational,
    pub tamagawa: Estimate,
    pub h_k: Option<u64>,
    pub h_kplus: Option<u64>,
    pub q: Option<u8>,
    pub global_index: GlobalIndex,
    pub profile: RamificationProfile,
    pub local: LocalIndexReport,
    /// `h_T` from the general class number formula.
    pub general_route: Estimate,
    /// `h_T` from the closed forms for a single quadratic or biquadratic field.
    pub closed_form_route: Option<Rational>,
    /// No computed route contradicts another.
    pub route_agreement: bool,
    /// `|mu_K|`.
    pub mu_order: u64,
}

impl ClassNumberReport {
    /// `h_T` as an integer when exact.
    pub fn h_t_exact(&self) -> Option<u64> {
        self.h_t.exact().map(|x| x.to_integer() as u64)
    }

    pub fn h_t1_integer(&self) -> u64 {
        self.h_t1.to_integer() as u64
    }
}

fn closed_form(spec: &CMAlgebraSpec, profile: &RamificationProfile) -> Result<Option<Rational>> {
    Ok(match spec.as_single() {
        Some(CmField::Imaginary(k)) => Some(int(class_number_imaginary(k.discriminant())?)),
        Some(CmField::Biquadratic(k)) if k.is_zeta8() => Some(int(1)),
        Some(CmField::Biquadratic(k)) => {
            let h_e = class_number_imaginary(k.imaginary_subfield().discriminant())?;
            let h_e2 = class_number_imaginary(k.other_imaginary_subfield().discriminant())?;
            Some(int(h_e * h_e2) * pow2(-(profile.primes.len() as i64)))
        }
        None => None,
    })
}

fn is_positive_integer(x: Rational) -> bool {
    x.is_integer() && x > Rational::from_integer(0)
}

/// `h(T^{K,Q})`, `h(T^K_1)` and the Tamagawa number, with the constituents.
pub fn class_number(spec: &CMAlgebraSpec, overrides: &Overrides) -> Result<ClassNumberReport> {
    let profile = ramification_profile(spec);
    let local = local_indices_for(spec, &profile)?;
    let global_index = global_norm_index(spec)?;
    let inv = field_invariants(spec, overrides)?;
    let r = spec.r() as i64;
    let t = profile.t as i64;

    // h(T^K_1) = h_K / (h_{K+} Q 2^{t-r})
    let h_t1 = inv.ratio * pow2(r - t);
    if !is_positive_integer(h_t1) {
        return Err(Error::RouteDisagreement(format!(
            "h(T_1) = {h_t1} is not a positive integer for {spec}"
        )));
    }
    let prod_e = int(local.product());
    let general_route = match global_index {
        GlobalIndex::Exact(i) => Estimate::Exact(h_t1 * prod_e / int(i)),
        GlobalIndex::Divides(_) => Estimate::Interval(h_t1, h_t1 * pow2(local.total_exponent as i64)),
    };
    let closed_form_route = closed_form(spec, &profile)?;
    let route_agreement = match (general_route, closed_form_route) {
        (Estimate::Exact(a), Some(b)) => a == b,
        (range, Some(b)) => range.contains(b),
        (_, None) => true,
    };
    if !route_agreement {
        return Err(Error::RouteDisagreement(format!(
            "general formula gives {general_route}, closed form gives {} for {spec}",
            closed_form_route.expect("compared")
        )));
    }
    let h_t = match closed_form_route {
        Some(b) => Estimate::Exact(b),
        None => general_route,
    };
    if let Some(x) = h_t.exact() {
        if !is_positive_integer(x) {
            return Err(Error::RouteDisagreement(format!(
                "h(T) = {x} is not a positive integer for {spec}"
            )));
        }
    }
    let tamagawa = tamagawa_from(spec, global_index, &local);
    let mu_order = spec.components().iter().map(roots_of_unity_order).product();
    Ok(ClassNumberReport {
        spec: spec.clone(),
        h_t,
        h_t1,
        tamagawa,
        h_k: inv.h_k,
        h_kplus: inv.h_kplus,
        q: inv.q,
        global_index,
        profile,
        local,
        general_route,
        closed_form_route,
        route_agreement,
        mu_order,
    })
}

/// `h(T^{Q(sqrt p, sqrt -j), Q})` by the family closed form.
pub fn class_number_family_sqrt_p_j(p: i64, j: i64) -> Result<u64> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if !(1..=3).contains(&j) {
        return Err(Error::OutOfRange(format!("family needs j in {{1, 2, 3}}, got {j}")));
    }
    if p == 2 && j == 2 {
        return Err(Error::Unsupported(
            "Q(sqrt 2, sqrt -2) = Q(zeta_8); use p = 2, j = 1".into(),
        ));
    }
    if p == 3 && j == 3 {
        return Err(Error::Unsupported(
            "Q(sqrt 3, sqrt -3) = Q(zeta_12); use p = 3, j = 1".into(),
        ));
    }
    if p == 2 && j == 1 {
        return Ok(1);
    }
    let h = class_number_imaginary(QuadraticField::new(-j * p)?.discriminant())?;
    // S_{K/F} is empty only for j = 1, p = 3 mod 4; for j = 2 the prime 2
    // ramifies in all three quadratic subfields, hence in K/F
    Ok(if j == 1 && p % 4 == 3 { h } else { h / 2 })
}

/// `h(T^K_1)`, the product of the per-component norm-one class numbers.
pub fn class_number_norm_one(spec: &CMAlgebraSpec, overrides: &Overrides) -> Result<Rational> {
    let profile = ramification_profile(spec);
    let inv = field_invariants(spec, overrides)?;
    let h = inv.ratio * pow2(spec.r() as i64 - profile.t as i64);
    if !is_positive_integer(h) {
        return Err(Error::RouteDisagreement(format!(
            "h(T_1) = {h} is not a positive integer for {spec}"
        )));
    }
    Ok(h)
}

fn tamagawa_from(spec: &CMAlgebraSpec, index: GlobalIndex, local: &LocalIndexReport) -> Estimate {
    let top = pow2(spec.r() as i64);
    match index {
        GlobalIndex::Exact(i) => Estimate::Exact(top / int(i)),
        GlobalIndex::Divides(_) => Estimate::Interval(top / int(local.product()), top),
    }
}

/// `tau(T^{K,Q}) = 2^r / [A^x : N(T(A)) Q^x]`.
pub fn tamagawa(spec: &CMAlgebraSpec) -> Result<Estimate> {
    let local = local_indices(spec)?;
    Ok(tamagawa_from(spec, global_norm_index(spec)?, &local))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QSymbols {
    pub q_infty: Rational,
    pub q_z: Rational,
    pub q_gamma: Rational,
    /// `q_p = e_{T,p}` for odd `p`, `e_{T,2} 2^d` at 2; always has an entry at 2.
    pub q_p: BTreeMap<i64, u64>,
    /// `h(T) / h(T_1 x G_m)` assembled from the symbols and the Tamagawa
    /// numbers `tau(T)` and `tau(T_1 x G_m) = 2^r`.
    pub assembled_ratio: Estimate,
}

pub fn q_symbols(spec: &CMAlgebraSpec) -> Result<QSymbols> {
    let local = local_indices(spec)?;
    let d = spec.kplus_degree() as i64;
    let mut q_p: BTreeMap<i64, u64> = local.entries.iter().map(|(&p, e)| (p, e.e_value)).collect();
    let e2 = q_p.get(&2).copied().unwrap_or(1);
    q_p.insert(2, e2 << d);
    let q_infty = pow2(1 - d);
    let q_z = int(2);
    let q_gamma = int(1);
    let local_part: Rational = q_p.values().map(|&q| int(q)).product::<Rational>() * q_infty * q_gamma / q_z;
    let tau = tamagawa_from(spec, global_norm_index(spec)?, &local);
    let tau_prime = pow2(spec.r() as i64);
    let assembled_ratio = match tau {
        Estimate::Exact(x) => Estimate::Exact(x / tau_prime * local_part),
        // tau ranges over [2^r / prod e, 2^r]
        Estimate::Interval(lo, hi) => Estimate::Interval(lo / tau_prime * local_part, hi / tau_prime * local_part),
    };
    Ok(QSymbols {
        q_infty,
        q_z,
        q_gamma,
        q_p,
        assembled_ratio,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsistencyReport {
    pub spec: CMAlgebraSpec,
    pub checks: Vec<Check>,
}

impl ConsistencyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: &'static str, passed: bool, detail: String) {
        self.checks.push(Check { name, passed, detail });
    }
}

/// Independent checks of the profile, the Herglotz relation, the two class
/// number routes, the q-symbol ratio and the refined power-of-2 bound.
pub fn verify_consistency(spec: &CMAlgebraSpec) -> ConsistencyReport {
    let mut out = ConsistencyReport {
        spec: spec.clone(),
        checks: Vec::new(),
    };
    let profile = ramification_profile(spec);
    for (i, c) in spec.components().iter().enumerate() {
        let CmField::Biquadratic(k) = c else { continue };
        let cp = &profile.components[i];
        let s = cp.s.unwrap_or(0);
        let n_s = cp.ramified_primes.len();
        out.push(
            "t-s=|S|",
            cp.t == s + n_s,
            format!("t={} s={} |S|={}", cp.t, s, n_s),
        );
        if k.is_zeta8() {
            continue;
        }
        let h_f = class_number_real(k.real_subfield().discriminant());
        let h_e = class_number_imaginary(k.imaginary_subfield().discriminant());
        let h_e2 = class_number_imaginary(k.other_imaginary_subfield().discriminant());
        match (h_f, h_e, h_e2, hasse_unit_index(c)) {
            (Ok(h_f), Ok(h_e), Ok(h_e2), Some(q)) => {
                let twice = q as u64 * h_f * h_e * h_e2;
                out.push(
                    "herglotz",
                    twice % 2 == 0 && twice > 0,
                    format!("h_K = {q}*{h_f}*{h_e}*{h_e2}/2 = {}", Rational::new(twice as i64, 2)),
                );
            }
            (Ok(_), Ok(_), Ok(_), None) => {}
            _ => out.push("herglotz", false, "class number oracle failed".into()),
        }
    }
    match class_number(spec, &Overrides::default()) {
        Ok(rep) => {
            out.push(
                "routes",
                rep.route_agreement,
                format!(
                    "general {} closed form {}",
                    rep.general_route,
                    rep.closed_form_route.map_or("n/a".into(), |x| x.to_string())
                ),
            );
            if let Ok(qs) = q_symbols(spec) {
                let ratio = rep.h_t.exact().map(|h| h / rep.h_t1);
                let agrees = match (ratio, qs.assembled_ratio) {
                    (Some(x), Estimate::Exact(y)) => x == y,
                    (None, Estimate::Interval(lo, hi)) => {
                        lo == rep.h_t.lo() / rep.h_t1 && hi == rep.h_t.hi() / rep.h_t1
                    }
                    _ => false,
                };
                out.push(
                    "q-symbols",
                    agrees,
                    format!("assembled {} vs h_T/h_T1 {}", qs.assembled_ratio, rep.h_t.scale(rep.h_t1.recip())),
                );
            }
            if let (Some(h), Some(h_k), Some(h_kp), Some(q)) = (rep.h_t.exact(), rep.h_k, rep.h_kplus, rep.q) {
                let scaled = h * pow2(profile.t as i64 - profile.r as i64) * int(q as u64 * h_kp) / int(h_k);
                let ok = scaled.is_integer()
                    && (0..=rep.local.total_exponent).any(|e| scaled == pow2(e as i64));
                out.push(
                    "refined-bound",
                    ok,
                    format!("h_T 2^(t-r) Q h_K+ / h_K = {scaled}, e(K/K+,Q) = {}", rep.local.total_exponent),
                );
            }
        }
        Err(e) => out.push("routes", false, e.to_string()),
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::is_squarefree;

    fn biq(d: i64, j: i64) -> CMAlgebraSpec {
        CMAlgebraSpec::biquadratic(d, j).unwrap()
    }

    fn iq(m: i64) -> CMAlgebraSpec {
        CMAlgebraSpec::imaginary(m).unwrap()
    }

    fn prod(parts: &[CMAlgebraSpec]) -> CMAlgebraSpec {
        CMAlgebraSpec::new(parts.iter().flat_map(|p| p.components().to_vec()).collect()).unwrap()
    }

    fn q(n: i64) -> Rational {
        Rational::from_integer(n)
    }

    fn squarefree(range: std::ops::Range<i64>) -> impl Iterator<Item = i64> {
        range.filter(|&n| is_squarefree(n))
    }

    #[test]
    fn profiles() {
        let p = ramification_profile(&iq(-1));
        assert_eq!((p.t, p.primes.iter().copied().collect::<Vec<_>>()), (1, vec![2]));
        let p = ramification_profile(&biq(17, 1));
        assert_eq!((p.t, p.s, p.primes.len()), (2, 1, 1));
        let p = ramification_profile(&biq(5, 1));
        assert_eq!((p.t, p.s, p.primes.iter().copied().collect::<Vec<_>>()), (1, 0, vec![2]));
        let p = ramification_profile(&biq(2, 1));
        assert!(p.totally_ramified_2);
        assert_eq!((p.t, p.s), (1, 0));
        // Q(zeta_12)/Q(sqrt 3) is unramified at every finite place
        let p = ramification_profile(&biq(3, 1));
        assert_eq!((p.t, p.primes.len()), (0, 0));
    }

    #[test]
    fn t_minus_s_is_size_of_s() {
        for d in squarefree(2..60) {
            for j in squarefree(1..60) {
                let p = ramification_profile(&biq(d, j));
                assert_eq!(p.t - p.s, p.primes.len(), "({d},{j})");
                let k = BiquadraticCM::new(d, j).unwrap();
                let disc = k.imaginary_subfield().discriminant() * k.real_subfield().discriminant();
                assert!(p.primes.iter().all(|&q| disc % q == 0));
            }
        }
    }

    #[test]
    fn local_indices_examples() {
        let e = local_index(&biq(17, 1), 2).unwrap();
        assert_eq!((e.e_value, e.reason), (2, IndexReason::SplitInF));
        let e = local_index(&biq(5, 1), 2).unwrap();
        assert_eq!((e.e_value, e.reason), (1, IndexReason::InertInF));
        let e = local_index(&biq(2, 1), 2).unwrap();
        assert_eq!((e.e_value, e.reason), (1, IndexReason::TotallyRamified));
        let pair = prod(&[iq(-1), iq(-2)]);
        let e = local_index(&pair, 2).unwrap();
        assert_eq!(e.e_value, 4);
        assert_eq!(e.symbol_pairs, vec![(-1, -1), (-1, 1)]);
        assert!(local_index(&pair, 4).is_err());
        assert_eq!(local_index(&iq(-1), 3).unwrap().e_value, 1);
    }

    #[test]
    fn biquadratic_local_index_follows_splitting_rule() {
        for d in squarefree(2..60) {
            for j in squarefree(1..30) {
                let spec = biq(d, j);
                let profile = ramification_profile(&spec);
                let report = local_indices(&spec).unwrap();
                for v in &profile.places {
                    let want = match v.splitting_in_kplus.unwrap() {
                        SplittingType::Split => 2,
                        _ => 1,
                    };
                    assert_eq!(report.entries[&v.prime].e_value, want, "({d},{j}) p={}", v.prime);
                }
                for e in report.entries.values() {
                    assert_eq!(e.e_value, 1 << e.exponent);
                    assert!(e.exponent <= if e.prime == 2 { 2 } else { 1 });
                }
            }
        }
    }

    #[test]
    fn global_indices() {
        assert_eq!(global_norm_index(&iq(-5)), Ok(GlobalIndex::Exact(2)));
        assert_eq!(global_norm_index(&biq(17, 1)), Ok(GlobalIndex::Exact(1)));
        assert_eq!(global_norm_index(&prod(&[iq(-1), iq(-2)])), Ok(GlobalIndex::Divides(4)));
    }

    #[test]
    fn hasse_indices() {
        let c = |d, j| CmField::biquadratic(d, j).unwrap();
        assert_eq!(hasse_unit_index(&CmField::imaginary(-7).unwrap()), Some(1));
        assert_eq!(hasse_unit_index(&c(7, 1)), Some(2));
        assert_eq!(hasse_unit_index(&c(7, 2)), Some(2));
        assert_eq!(hasse_unit_index(&c(7, 14)), Some(2));
        assert_eq!(hasse_unit_index(&c(7, 3)), Some(1));
        assert_eq!(hasse_unit_index(&c(5, 1)), Some(1));
        assert_eq!(hasse_unit_index(&c(2, 1)), Some(1));
        assert_eq!(hasse_unit_index(&c(3, 3)), Some(2));
        assert_eq!(hasse_unit_index(&c(15, 7)), None);
    }

    #[test]
    fn class_number_examples() {
        let none = Overrides::default();
        assert_eq!(class_number(&biq(2, 1), &none).unwrap().h_t, Estimate::Exact(q(1)));
        assert_eq!(class_number(&biq(2, 2), &none).unwrap().h_t, Estimate::Exact(q(1)));
        let r = class_number(&biq(17, 1), &none).unwrap();
        assert_eq!(r.h_t, Estimate::Exact(q(2)));
        assert_eq!(r.h_t1, q(1));
        assert_eq!(r.tamagawa, Estimate::Exact(q(2)));
        assert!(r.route_agreement);
        let r = class_number(&iq(-5), &none).unwrap();
        assert_eq!((r.h_t, r.h_t1), (Estimate::Exact(q(2)), q(1)));
        let r = class_number(&biq(3, 1), &none).unwrap();
        assert_eq!(r.h_t, Estimate::Exact(q(1)));
        assert_eq!(r.h_k, Some(1));
        let r = class_number(&prod(&[iq(-1), iq(-2)]), &none).unwrap();
        assert_eq!(r.h_t, Estimate::Interval(q(1), q(4)));
        assert_eq!(r.tamagawa, Estimate::Interval(q(1), q(4)));
    }

    #[test]
    fn overrides_are_checked() {
        let spec = biq(15, 7);
        let rep = class_number(&spec, &Overrides::default()).unwrap();
        assert_eq!(rep.q, None);
        assert_eq!(rep.h_k, None);
        let with_q = Overrides { q: Some(1), ..Default::default() };
        let rep = class_number(&spec, &with_q).unwrap();
        assert_eq!(rep.q, Some(1));
        // h(Q(sqrt 15)) = 2, h(-7) = 1, h(-420) = 8
        assert_eq!(rep.h_k, Some(8));
        let bad = Overrides { h_k: Some(5), ..Default::default() };
        assert!(matches!(class_number(&iq(-5), &bad), Err(Error::InconsistentOverride(_))));
        let bad_q = Overrides { q: Some(3), ..Default::default() };
        assert!(matches!(class_number(&iq(-5), &bad_q), Err(Error::OutOfRange(_))));
    }

    #[test]
    fn family_closed_forms() {
        assert_eq!(class_number_family_sqrt_p_j(2, 1), Ok(1));
        assert_eq!(class_number_family_sqrt_p_j(7, 1), Ok(1));
        assert_eq!(class_number_family_sqrt_p_j(5, 1), Ok(1));
        assert_eq!(class_number_family_sqrt_p_j(17, 1), Ok(2));
        // h(-24) = 2 and 2 is totally ramified in Q(sqrt 3, sqrt -2)
        assert_eq!(class_number_family_sqrt_p_j(3, 2), Ok(1));
        assert_eq!(ramification_profile(&biq(3, 2)).primes.len(), 1);
        assert!(class_number_family_sqrt_p_j(2, 2).is_err());
        assert!(class_number_family_sqrt_p_j(3, 3).is_err());
        assert!(class_number_family_sqrt_p_j(9, 1).is_err());
        for p in crate::arith::primes_below(400) {
            for j in 1..=3 {
                let Ok(closed) = class_number_family_sqrt_p_j(p, j) else { continue };
                let rep = class_number(&biq(p, j), &Overrides::default()).unwrap();
                assert_eq!(rep.h_t, Estimate::Exact(q(closed as i64)), "p={p} j={j}");
            }
        }
    }

    #[test]
    fn norm_one_class_numbers() {
        let none = Overrides::default();
        assert_eq!(class_number_norm_one(&iq(-5), &none), Ok(q(1)));
        assert_eq!(class_number_norm_one(&biq(17, 1), &none), Ok(q(1)));
        assert_eq!(class_number_norm_one(&biq(2, 1), &none), Ok(q(1)));
    }

    #[test]
    fn tamagawa_values() {
        assert_eq!(tamagawa(&iq(-1)), Ok(Estimate::Exact(q(1))));
        assert_eq!(tamagawa(&biq(17, 1)), Ok(Estimate::Exact(q(2))));
        assert_eq!(tamagawa(&prod(&[iq(-1), iq(-2)])), Ok(Estimate::Interval(q(1), q(4))));
    }

    #[test]
    fn q_symbol_values() {
        let s = q_symbols(&biq(2, 1)).unwrap();
        assert_eq!((s.q_infty, s.q_z, s.q_gamma), (Rational::new(1, 2), q(2), q(1)));
        let s = q_symbols(&iq(-5)).unwrap();
        assert_eq!(s.q_p[&2], 4);
        assert_eq!(s.q_p[&5], 2);
        assert_eq!(s.assembled_ratio, Estimate::Exact(q(2)));
    }

    #[test]
    fn imaginary_quadratic_identities() {
        for d in -400..0 {
            if !crate::quadratic::is_fundamental_discriminant(d) {
                continue;
            }
            let k = QuadraticField::from_discriminant(d).unwrap();
            let spec = iq(k.radicand());
            let rep = class_number(&spec, &Overrides::default()).unwrap();
            let h = class_number_imaginary(d).unwrap();
            assert_eq!(rep.h_t, Estimate::Exact(q(h as i64)));
            assert_eq!(rep.tamagawa, Estimate::Exact(q(1)));
            assert_eq!(rep.h_t.lo() / rep.h_t1, pow2(rep.profile.t as i64 - 1), "D={d}");
        }
    }

    #[test]
    fn biquadratic_consistency_sweep() {
        for d in squarefree(2..60) {
            for j in squarefree(1..30) {
                let spec = biq(d, j);
                let report = verify_consistency(&spec);
                assert!(report.passed(), "{spec}: {:?}", report.checks);
                let rep = class_number(&spec, &Overrides::default()).unwrap();
                let h = rep.h_t.exact().unwrap();
                assert!(h.is_integer() && (h / rep.h_t1).is_integer());
                let ratio = (h / rep.h_t1).to_integer();
                assert_eq!(ratio & (ratio - 1), 0, "{spec}");
            }
        }
    }

    #[test]
    fn products_are_bracketed() {
        let specs = [
            prod(&[iq(-1), iq(-2)]),
            prod(&[iq(-5), biq(17, 1)]),
            prod(&[iq(-3), iq(-7), iq(-15)]),
        ];
        for spec in &specs {
            let rep = class_number(spec, &Overrides::default()).unwrap();
            assert!(rep.h_t.exact().is_none());
            assert_eq!(rep.h_t.lo(), rep.h_t1);
            assert!(verify_consistency(spec).passed(), "{spec}");
        }
        assert_eq!(specs[0].to_string(), "prod:iq:-1;iq:-2");
    }
}
