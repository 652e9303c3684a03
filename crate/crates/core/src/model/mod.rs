//! Domain types and probability kernels.

pub mod design;
pub mod kernels;
pub mod params;
pub mod pattern;
pub mod responses;

pub use design::{
    build_longitudinal_q, recode_item_index, Administration, AnchorGroup, ItemRef,
    LongitudinalDesign, QMatrix,
};
pub use kernels::{
    attribute_mastery_probability, guess_slip_from_loglinear, logistic, logit,
    loglinear_from_guess_slip, profile_prior_given_theta, response_probability,
};
pub use params::{ItemParameters, ModelParameters, ModelVariant, SlopeConstraint, StructuralParameters};
pub use pattern::{enumerate_patterns, AttributePattern, PatternSpace};
pub use responses::{ResponseMatrix, MISSING};

/// Number of free parameters.
///
/// Each unique item (an anchor group counts once) has an intercept and an
/// interaction; each anchor group adds a slope when `include_specific_slopes`;
/// the structural part adds K attribute slopes, K intercepts, `T−1` means,
/// `T−1` variances and `T(T−1)/2` covariances.
pub fn count_parameters(design: &LongitudinalDesign, include_specific_slopes: bool) -> usize {
    count_parameters_with(
        design,
        if include_specific_slopes { ModelVariant::Complete } else { ModelVariant::Simple },
        SlopeConstraint::Free,
    )
}

pub fn count_parameters_with(
    design: &LongitudinalDesign,
    variant: ModelVariant,
    slopes: SlopeConstraint,
) -> usize {
    let t = design.occasions();
    let k = design.attributes();
    let item = 2 * design.unique_item_count()
        + if variant.has_specific_dimensions() { design.group_count() } else { 0 };
    let attribute = k + match slopes {
        SlopeConstraint::Free => k,
        SlopeConstraint::Common => 1,
        SlopeConstraint::Unit => 0,
    };
    item + attribute + 2 * (t - 1) + t * (t - 1) / 2
}
