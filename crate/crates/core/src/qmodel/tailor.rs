use super::{Evaluability, GroundTruth, InputKind, QualityModel, TailoringProfile};
use crate::error::{Error, Result};

/// Restricts `model` to the views and objects selected by `profile`.
///
/// Attributes that need labels are kept but marked
/// [`Evaluability::Conditional`] when ground truth is partial or absent.
pub fn tailor(model: &QualityModel, profile: &TailoringProfile) -> Result<QualityModel> {
    profile.validate()?;
    let label_gated = profile.ground_truth != GroundTruth::Full;
    let attributes: Vec<_> = model
        .attributes
        .iter()
        .filter(|a| {
            profile.selected_views.contains(&a.view) && profile.selected_objects.contains(&a.object)
        })
        .cloned()
        .map(|mut a| {
            a.evaluability = if label_gated && a.required_inputs().contains(&InputKind::Labels) {
                Evaluability::Conditional
            } else {
                Evaluability::Unconditional
            };
            a
        })
        .collect();
    if attributes.is_empty() {
        return Err(Error::EmptyModel);
    }
    Ok(QualityModel {
        name: model.name.clone(),
        version: model.version.clone(),
        profile: profile.clone(),
        attributes,
    })
}
