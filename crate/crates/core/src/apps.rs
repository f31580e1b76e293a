//! Counting applications: CM points, connected components of unitary
//! Shimura varieties and polarized abelian varieties in an isogeny class.

use crate::error::{Error, Result};
use crate::quadratic::roots_of_unity_order;
use crate::torus::{class_number, CMAlgebraSpec, Estimate, Overrides, Rational};

/// Level structure `U`, through `[T(Z^) : U]` and `[mu_K : mu_K cap U]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelData {
    pub index_u: u64,
    pub mu_index: u64,
}

impl Default for LevelData {
    fn default() -> Self {
        LevelData::MAXIMAL
    }
}

impl LevelData {
    pub const MAXIMAL: LevelData = LevelData {
        index_u: 1,
        mu_index: 1,
    };

    pub fn new(index_u: u64, mu_index: u64) -> Result<Self> {
        if index_u == 0 || mu_index == 0 {
            return Err(Error::InconsistentLevel("level indices must be positive".into()));
        }
        Ok(LevelData { index_u, mu_index })
    }

    /// Check that `mu_index` divides `|mu_K|`.
    pub fn check_against(&self, spec: &CMAlgebraSpec) -> Result<()> {
        let w: u64 = spec.components().iter().map(roots_of_unity_order).product();
        if w % self.mu_index != 0 {
            return Err(Error::InconsistentLevel(format!(
                "mu_index {} does not divide |mu_K| = {w}",
                self.mu_index
            )));
        }
        Ok(())
    }

    fn factor(&self) -> Rational {
        Rational::new(self.index_u as i64, self.mu_index as i64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShimuraInput {
    pub field: CMAlgebraSpec,
    /// Rank of the Hermitian space.
    pub n: u32,
    pub level: LevelData,
    /// Caller asserts that `G^der(R)` is not compact.
    pub noncompact_assertion: bool,
    pub overrides: Overrides,
}

/// `h * [T(Z^):U] / [mu_K : mu_K cap U]`, which must be an integer.
pub fn double_coset_cardinality(h: u64, level: &LevelData) -> Result<u64> {
    if h == 0 {
        return Err(Error::OutOfRange("class number must be positive".into()));
    }
    let n = level.factor() * Rational::from_integer(h as i64);
    if !n.is_integer() {
        return Err(Error::InconsistentLevel(format!(
            "{h} * {} / {} = {n} is not an integer",
            level.index_u, level.mu_index
        )));
    }
    Ok(n.to_integer() as u64)
}

fn level_adjusted(h: Estimate, level: &LevelData) -> Result<Estimate> {
    match h {
        Estimate::Exact(x) => {
            double_coset_cardinality(x.to_integer() as u64, level)
                .map(|n| Estimate::Exact(Rational::from_integer(n as i64)))
        }
        Estimate::Interval(lo, hi) => Ok(Estimate::Interval(lo * level.factor(), hi * level.factor())),
    }
}

/// `|M_{(Lambda, psi), U}|`: level-adjusted `h(T^{K,Q})`.
pub fn cm_point_count(spec: &CMAlgebraSpec, level: &LevelData) -> Result<Estimate> {
    cm_point_count_with(spec, level, &Overrides::default())
}

pub fn cm_point_count_with(spec: &CMAlgebraSpec, level: &LevelData, overrides: &Overrides) -> Result<Estimate> {
    level.check_against(spec)?;
    level_adjusted(class_number(spec, overrides)?.h_t, level)
}

/// Connected components of the unitary Shimura variety: `h(T^{K,Q})` for odd
/// `n`, `h(T^K_1)` for even `n`, both level-adjusted.
pub fn shimura_components(input: &ShimuraInput) -> Result<Estimate> {
    if !input.noncompact_assertion {
        return Err(Error::HypothesisNotAsserted("G^der(R) is not compact".into()));
    }
    if input.n < 2 {
        return Err(Error::OutOfRange(format!("rank n must be at least 2, got {}", input.n)));
    }
    if input.field.r() != 1 {
        return Err(Error::Unsupported("Shimura components need a single CM field".into()));
    }
    input.level.check_against(&input.field)?;
    let report = class_number(&input.field, &input.overrides)?;
    let h = if input.n % 2 == 1 {
        report.h_t
    } else {
        Estimate::Exact(report.h_t1)
    };
    level_adjusted(h, &input.level)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IsogenyCounts {
    /// `|Lambda(A_0, lambda_0)|`.
    pub lambda_count: Estimate,
    /// `|I(A_0, lambda_0)|`.
    pub similitude_count: Estimate,
}

pub fn isogeny_class_counts(
    spec: &CMAlgebraSpec,
    level_lambda: &LevelData,
    level_i: &LevelData,
) -> Result<IsogenyCounts> {
    isogeny_class_counts_with(spec, level_lambda, level_i, &Overrides::default())
}

pub fn isogeny_class_counts_with(
    spec: &CMAlgebraSpec,
    level_lambda: &LevelData,
    level_i: &LevelData,
    overrides: &Overrides,
) -> Result<IsogenyCounts> {
    level_lambda.check_against(spec)?;
    level_i.check_against(spec)?;
    let report = class_number(spec, overrides)?;
    Ok(IsogenyCounts {
        lambda_count: level_adjusted(Estimate::Exact(report.h_t1), level_lambda)?,
        similitude_count: level_adjusted(report.h_t, level_i)?,
    })
}
