//! Interval type-2 fuzzy representation of valence, arousal and dominance.
//!
//! Each dimension is split into three linguistic terms (low, medium, high).
//! Every term has two Gaussian membership functions: a generic upper function
//! (UMF) and a population-derived lower function (LMF). The exponent divides
//! by `sigma^2`, not `2 sigma^2`. Outside a term's support interval the degree
//! is exactly zero.
//!
//! Before use in the network the two functions are brought together so that
//! they peak at a common mean; the lower/upper degrees reported for a value
//! are then the pointwise minimum/maximum of the two curves, which makes
//! `lower <= upper` hold everywhere on the scale.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCALE_MIN: f64 = 1.0;
pub const SCALE_MAX: f64 = 9.0;

const DEFAULTS_JSON: &str = include_str!("../assets/membership_defaults.json");

fn check_scale(x: f64) -> Result<f64> {
    if x.is_finite() && (SCALE_MIN..=SCALE_MAX).contains(&x) {
        Ok(x)
    } else {
        Err(Error::OutOfScale { value: x })
    }
}

/// A crisp self-reported rating on the 1-9 scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VadRating {
    pub valence: f64,
    pub arousal: f64,
    pub dominance: f64,
}

impl VadRating {
    pub fn new(valence: f64, arousal: f64, dominance: f64) -> Result<Self> {
        Ok(Self {
            valence: check_scale(valence)?,
            arousal: check_scale(arousal)?,
            dominance: check_scale(dominance)?,
        })
    }

    pub fn get(&self, dimension: Dimension) -> f64 {
        match dimension {
            Dimension::Valence => self.valence,
            Dimension::Arousal => self.arousal,
            Dimension::Dominance => self.dominance,
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.valence, self.arousal, self.dominance]
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(self.valence, self.arousal, self.dominance).map(|_| ())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Valence,
    Arousal,
    Dominance,
}

impl Dimension {
    pub const ALL: [Dimension; 3] = [Dimension::Valence, Dimension::Arousal, Dimension::Dominance];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Dimension::Valence => "v",
            Dimension::Arousal => "a",
            Dimension::Dominance => "d",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dimension::Valence => "valence",
            Dimension::Arousal => "arousal",
            Dimension::Dominance => "dominance",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Term {
    Low,
    Med,
    High,
}

impl Term {
    pub const ALL: [Term; 3] = [Term::Low, Term::Med, Term::High];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Term::Low => "low",
            Term::Med => "med",
            Term::High => "high",
        }
    }
}

/// Which membership family to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Umf,
    Lmf,
}

/// Which family keeps its mean when the two are brought to a common peak.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FouAnchor {
    /// UMF means move onto the LMF means.
    #[default]
    Lmf,
    /// LMF means move onto the UMF means.
    Umf,
}

/// Gaussian mean/width plus the support interval outside which the degree is 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermParams {
    pub mean: f64,
    pub sigma: f64,
    pub range_lo: f64,
    pub range_hi: f64,
}

impl TermParams {
    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.mean, self.sigma, self.range_lo, self.range_hi]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::InvalidConfig("term parameters must be finite".into()));
        }
        if self.sigma <= 0.0 {
            return Err(Error::InvalidConfig(format!("sigma must be > 0, got {}", self.sigma)));
        }
        if self.range_lo > self.range_hi {
            return Err(Error::InvalidConfig(format!(
                "range_lo {} exceeds range_hi {}",
                self.range_lo, self.range_hi
            )));
        }
        if self.range_lo < SCALE_MIN || self.range_hi > SCALE_MAX {
            return Err(Error::InvalidConfig(format!(
                "support [{}, {}] leaves the rating scale",
                self.range_lo, self.range_hi
            )));
        }
        Ok(())
    }

    fn gaussian(&self, x: f64) -> f64 {
        let d = x - self.mean;
        (-(d * d) / (self.sigma * self.sigma)).exp()
    }

    fn in_support(&self, x: f64) -> bool {
        x >= self.range_lo && x <= self.range_hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSet {
    pub low: TermParams,
    pub med: TermParams,
    pub high: TermParams,
}

impl TermSet {
    pub fn get(&self, term: Term) -> &TermParams {
        match term {
            Term::Low => &self.low,
            Term::Med => &self.med,
            Term::High => &self.high,
        }
    }

    fn get_mut(&mut self, term: Term) -> &mut TermParams {
        match term {
            Term::Low => &mut self.low,
            Term::Med => &mut self.med,
            Term::High => &mut self.high,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyPair {
    pub umf: TermSet,
    pub lmf: TermSet,
}

/// UMF and LMF parameters for one dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionMembershipSpec {
    pub dimension: Dimension,
    pub umf: TermSet,
    pub lmf: TermSet,
}

impl DimensionMembershipSpec {
    pub fn validate(&self) -> Result<()> {
        for term in Term::ALL {
            self.umf.get(term).validate()?;
            self.lmf.get(term).validate()?;
        }
        Ok(())
    }
}

/// The full membership parameter file: three dimensions plus the anchor rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MembershipParams {
    pub valence: FamilyPair,
    pub arousal: FamilyPair,
    pub dominance: FamilyPair,
    #[serde(default)]
    pub fou_anchor: FouAnchor,
}

impl Default for MembershipParams {
    fn default() -> Self {
        serde_json::from_str(DEFAULTS_JSON).expect("embedded membership defaults parse")
    }
}

impl MembershipParams {
    /// The embedded defaults as pretty JSON.
    pub fn defaults_json() -> &'static str {
        DEFAULTS_JSON
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let params: Self = serde_json::from_str(text)?;
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        for dim in Dimension::ALL {
            self.spec(dim).validate()?;
        }
        Ok(())
    }

    pub fn pair(&self, dimension: Dimension) -> &FamilyPair {
        match dimension {
            Dimension::Valence => &self.valence,
            Dimension::Arousal => &self.arousal,
            Dimension::Dominance => &self.dominance,
        }
    }

    pub fn spec(&self, dimension: Dimension) -> DimensionMembershipSpec {
        let pair = self.pair(dimension);
        DimensionMembershipSpec {
            dimension,
            umf: pair.umf,
            lmf: pair.lmf,
        }
    }
}

/// Upper membership degree: truncated Gaussian, zero outside the support.
pub fn eval_umf(x: f64, params: &TermParams, _term: Term) -> Result<f64> {
    let x = check_scale(x)?;
    Ok(if params.in_support(x) {
        params.gaussian(x)
    } else {
        0.0
    })
}

/// Lower membership degree. Low and High are shoulders that stay at 1 beyond
/// the mean towards the scale edge; Med is a plain truncated Gaussian.
pub fn eval_lmf(x: f64, params: &TermParams, term: Term) -> Result<f64> {
    let x = check_scale(x)?;
    Ok(shoulder_degree(x, params, term))
}

fn shoulder_degree(x: f64, params: &TermParams, term: Term) -> f64 {
    if !params.in_support(x) {
        return 0.0;
    }
    match term {
        Term::Low if x <= params.mean => 1.0,
        Term::High if x >= params.mean => 1.0,
        _ => params.gaussian(x),
    }
}

/// One term after the FoU adjustment: both curves share a mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjustedTerm {
    pub term: Term,
    pub umf: TermParams,
    pub lmf: TermParams,
}

impl AdjustedTerm {
    /// Degree of the relocated upper function alone.
    pub fn upper_curve(&self, x: f64) -> f64 {
        shoulder_degree(x, &self.umf, self.term)
    }

    pub fn lower_curve(&self, x: f64) -> f64 {
        shoulder_degree(x, &self.lmf, self.term)
    }

    /// `(lower, upper)` envelope at `x`. Assumes `x` is on the scale.
    pub fn envelope(&self, x: f64) -> (f64, f64) {
        let a = self.upper_curve(x);
        let b = self.lower_curve(x);
        (a.min(b), a.max(b))
    }

    pub fn mean(&self) -> f64 {
        self.lmf.mean
    }
}

/// Adjusted terms for one dimension, ordered Low, Med, High.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjustedDimension {
    pub dimension: Dimension,
    pub terms: [AdjustedTerm; 3],
}

impl AdjustedDimension {
    pub fn term(&self, term: Term) -> &AdjustedTerm {
        &self.terms[term.index()]
    }

    pub fn envelope(&self, term: Term, x: f64) -> Result<(f64, f64)> {
        let x = check_scale(x)?;
        Ok(self.term(term).envelope(x))
    }

    /// Degrees of the relocated upper functions for all three terms.
    pub fn upper_degrees(&self, x: f64) -> Result<[f64; 3]> {
        let x = check_scale(x)?;
        Ok(self.terms.map(|t| t.upper_curve(x)))
    }
}

/// Bring UMF and LMF of every term to a common mean.
///
/// Both curves keep their own width and support. Shoulder terms keep their
/// plateau beyond the common mean, so a shoulder peaks at 1 on the whole
/// outer side for both families.
pub fn adjust_fou(spec: &DimensionMembershipSpec, anchor: FouAnchor) -> Result<AdjustedDimension> {
    spec.validate()?;
    let mut umf = spec.umf;
    let mut lmf = spec.lmf;
    for term in Term::ALL {
        match anchor {
            FouAnchor::Lmf => umf.get_mut(term).mean = lmf.get(term).mean,
            FouAnchor::Umf => lmf.get_mut(term).mean = umf.get(term).mean,
        }
    }
    let terms = Term::ALL.map(|term| AdjustedTerm {
        term,
        umf: *umf.get(term),
        lmf: *lmf.get(term),
    });
    Ok(AdjustedDimension {
        dimension: spec.dimension,
        terms,
    })
}

/// Lower/upper degrees for all nine (dimension, term) pairs.
///
/// Layout: index = 6 * dimension + 2 * term + bound, with dimension order
/// V, A, D, term order Low, Med, High and bound 0 = lower, 1 = upper.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Type2FuzzyVector(pub [f64; 18]);

impl Type2FuzzyVector {
    pub const LEN: usize = 18;

    pub fn index(dimension: Dimension, term: Term, upper: bool) -> usize {
        6 * dimension.index() + 2 * term.index() + usize::from(upper)
    }

    pub fn lower(&self, dimension: Dimension, term: Term) -> f64 {
        self.0[Self::index(dimension, term, false)]
    }

    pub fn upper(&self, dimension: Dimension, term: Term) -> f64 {
        self.0[Self::index(dimension, term, true)]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Column names in vector order, e.g. `v_low_lower`.
    pub fn column_names() -> Vec<String> {
        let mut names = Vec::with_capacity(Self::LEN);
        for dim in Dimension::ALL {
            for term in Term::ALL {
                for bound in ["lower", "upper"] {
                    names.push(format!("{}_{}_{}", dim.short_name(), term.name(), bound));
                }
            }
        }
        names
    }
}

/// Column names for a type-1 vector, e.g. `v_med_umf`.
pub fn type1_column_names(family: Family) -> Vec<String> {
    let suffix = match family {
        Family::Umf => "umf",
        Family::Lmf => "lmf",
    };
    let mut names = Vec::with_capacity(9);
    for dim in Dimension::ALL {
        for term in Term::ALL {
            names.push(format!("{}_{}_{}", dim.short_name(), term.name(), suffix));
        }
    }
    names
}

/// Converts crisp ratings into membership features. Cheap to clone and
/// immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Fuzzifier {
    params: MembershipParams,
    adjusted: [AdjustedDimension; 3],
}

impl Default for Fuzzifier {
    fn default() -> Self {
        Self::new(MembershipParams::default()).expect("default membership parameters are valid")
    }
}

impl Fuzzifier {
    pub fn new(params: MembershipParams) -> Result<Self> {
        params.validate()?;
        let mut adjusted = Vec::with_capacity(3);
        for dim in Dimension::ALL {
            adjusted.push(adjust_fou(&params.spec(dim), params.fou_anchor)?);
        }
        let adjusted = [adjusted[0], adjusted[1], adjusted[2]];
        Ok(Self { params, adjusted })
    }

    pub fn params(&self) -> &MembershipParams {
        &self.params
    }

    pub fn adjusted(&self, dimension: Dimension) -> &AdjustedDimension {
        &self.adjusted[dimension.index()]
    }

    pub fn fuzzify_type2(&self, rating: &VadRating) -> Result<Type2FuzzyVector> {
        let mut out = [0.0; 18];
        for dim in Dimension::ALL {
            let x = rating.get(dim);
            for term in Term::ALL {
                let (lo, hi) = self.adjusted(dim).envelope(term, x)?;
                out[Type2FuzzyVector::index(dim, term, false)] = lo;
                out[Type2FuzzyVector::index(dim, term, true)] = hi;
            }
        }
        Ok(Type2FuzzyVector(out))
    }

    /// Unadjusted degrees of a single family, ordered (dimension, term).
    pub fn fuzzify_type1(&self, rating: &VadRating, family: Family) -> Result<[f64; 9]> {
        let mut out = [0.0; 9];
        for dim in Dimension::ALL {
            let pair = self.params.pair(dim);
            let x = rating.get(dim);
            for term in Term::ALL {
                out[3 * dim.index() + term.index()] = match family {
                    Family::Umf => eval_umf(x, pair.umf.get(term), term)?,
                    Family::Lmf => eval_lmf(x, pair.lmf.get(term), term)?,
                };
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defaults() -> MembershipParams {
        MembershipParams::default()
    }

    #[test]
    fn umf_fixtures() {
        let p = defaults();
        let low = p.valence.umf.low;
        assert_eq!(eval_umf(1.0, &low, Term::Low).unwrap(), 1.0);
        assert_eq!(eval_umf(5.0, &low, Term::Low).unwrap(), 0.0);
        let v = eval_umf(2.2, &low, Term::Low).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn lmf_fixtures() {
        let p = defaults();
        assert_eq!(eval_lmf(1.5, &p.valence.lmf.low, Term::Low).unwrap(), 1.0);
        assert_eq!(eval_lmf(8.0, &p.arousal.lmf.high, Term::High).unwrap(), 1.0);
        let v = eval_lmf(2.88, &p.valence.lmf.low, Term::Low).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn out_of_scale_is_a_domain_error() {
        let p = defaults();
        assert!(matches!(
            eval_umf(0.5, &p.valence.umf.low, Term::Low),
            Err(Error::OutOfScale { .. })
        ));
        assert!(eval_lmf(9.5, &p.valence.lmf.high, Term::High).is_err());
        assert!(eval_lmf(f64::NAN, &p.valence.lmf.high, Term::High).is_err());
        assert!(VadRating::new(10.0, 5.0, 5.0).is_err());
    }

    #[test]
    fn fou_envelope_fixtures() {
        let f = Fuzzifier::default();
        let val = f.adjusted(Dimension::Valence);
        assert_eq!(val.envelope(Term::Low, 1.96).unwrap(), (1.0, 1.0));
        assert_eq!(val.envelope(Term::Med, 4.30).unwrap(), (1.0, 1.0));
        let (lo, hi) = val.envelope(Term::Med, 6.5).unwrap();
        // direct evaluation of both Gaussians around the shared mean 4.30
        let wide = (-(2.2f64 * 2.2) / (1.97 * 1.97)).exp();
        let narrow = (-(2.2f64 * 2.2) / (1.2 * 1.2)).exp();
        assert!((hi - wide).abs() < 1e-12);
        assert!((lo - narrow).abs() < 1e-12);
        assert!((hi - 0.287_327).abs() < 1e-6);
        assert!((lo - 0.034_697).abs() < 1e-6);
    }

    #[test]
    fn anchor_umf_moves_lmf_means() {
        let mut params = defaults();
        params.fou_anchor = FouAnchor::Umf;
        let f = Fuzzifier::new(params).unwrap();
        let val = f.adjusted(Dimension::Valence);
        assert_eq!(val.term(Term::Med).mean(), 5.0);
        assert_eq!(val.envelope(Term::Med, 5.0).unwrap(), (1.0, 1.0));
    }

    #[test]
    fn type2_fixtures() {
        let f = Fuzzifier::default();
        let lowest = f.fuzzify_type2(&VadRating::new(1.0, 1.0, 1.0).unwrap()).unwrap();
        let highest = f.fuzzify_type2(&VadRating::new(9.0, 9.0, 9.0).unwrap()).unwrap();
        let centre = f.fuzzify_type2(&VadRating::new(4.30, 6.04, 5.02).unwrap()).unwrap();
        for dim in Dimension::ALL {
            assert_eq!(lowest.upper(dim, Term::Med), 0.0);
            assert_eq!(lowest.upper(dim, Term::High), 0.0);
            assert_eq!(lowest.upper(dim, Term::Low), 1.0);
            assert_eq!(highest.lower(dim, Term::High), 1.0);
            assert_eq!(highest.upper(dim, Term::High), 1.0);
            assert_eq!(centre.lower(dim, Term::Med), 1.0);
            assert_eq!(centre.upper(dim, Term::Med), 1.0);
        }
    }

    #[test]
    fn type1_fixtures() {
        let f = Fuzzifier::default();
        let mid = f.fuzzify_type1(&VadRating::new(5.0, 5.0, 5.0).unwrap(), Family::Umf).unwrap();
        let low = f.fuzzify_type1(&VadRating::new(1.0, 1.0, 1.0).unwrap(), Family::Umf).unwrap();
        let high = f
            .fuzzify_type1(&VadRating::new(7.63, 7.26, 7.27).unwrap(), Family::Lmf)
            .unwrap();
        for d in 0..3 {
            assert_eq!(mid[3 * d + 1], 1.0);
            assert_eq!(low[3 * d], 1.0);
            assert_eq!(high[3 * d + 2], 1.0);
        }
    }

    #[test]
    fn column_names_follow_vector_order() {
        let names = Type2FuzzyVector::column_names();
        assert_eq!(names.len(), 18);
        assert_eq!(names[0], "v_low_lower");
        assert_eq!(names[Type2FuzzyVector::index(Dimension::Arousal, Term::High, true)], "a_high_upper");
        assert_eq!(type1_column_names(Family::Lmf)[4], "a_med_lmf");
    }

    #[test]
    fn params_json_rejects_unknown_keys_and_bad_sigma() {
        let mut value: serde_json::Value = serde_json::from_str(MembershipParams::defaults_json()).unwrap();
        value["valence"]["umf"]["low"]["sigma"] = serde_json::json!(0.0);
        assert!(MembershipParams::from_json(&value.to_string()).is_err());
        let mut value: serde_json::Value = serde_json::from_str(MembershipParams::defaults_json()).unwrap();
        value["valence"]["extra"] = serde_json::json!(1);
        assert!(MembershipParams::from_json(&value.to_string()).is_err());
        assert_eq!(MembershipParams::from_json(MembershipParams::defaults_json()).unwrap(), defaults());
    }
}
