//! Two-step multilevel VAR: per-person gVAR models on within-person centered
//! data, then fixed effects by averaging and a between-person network over
//! the person means.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_gvar, GvarModel, VarError, VarOptions};
use crate::dataset::IldDataset;
use crate::ggm::{partial_corr_network, GgmNetwork};
use crate::linalg::{self, SPD_REL_FLOOR};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MlVarOptions {
    pub var: VarOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonFit {
    pub person_id: String,
    pub model: GvarModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonFailure {
    pub person_id: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlVarResult {
    pub persons: Vec<PersonFit>,
    /// Persons excluded from the aggregates.
    pub failures: Vec<PersonFailure>,
    /// Elementwise mean of the person temporal matrices.
    #[serde(with = "crate::serde_matrix")]
    pub fixed_temporal: DMatrix<f64>,
    /// Standardized mean of the person residual precisions.
    pub fixed_contemporaneous: GgmNetwork,
    /// Partial correlations of the person means (persons with a fit only).
    pub between_person: GgmNetwork,
    /// Person means of every person in the dataset, in dataset order.
    pub person_means: Vec<Vec<f64>>,
}

fn center_person(series: &mut super::Series, means: &[f64]) {
    for (j, m) in means.iter().enumerate() {
        for v in series.values.column_mut(j).iter_mut() {
            *v -= m;
        }
    }
}

/// Fits the two-step multilevel VAR.
///
/// Person means are taken over observed cells of `data` as given, so pass
/// uncentered data. Persons whose gVAR fails are listed in `failures` and
/// left out of every aggregate.
pub fn fit_mlvar(data: &IldDataset, opts: &MlVarOptions) -> Result<MlVarResult, VarError> {
    data.validate().map_err(|e| VarError::Invalid(e.to_string()))?;
    let n_persons = data.n_persons();
    if n_persons < 2 {
        return Err(VarError::TooFewPersons { need: 2, got: n_persons });
    }
    let p = data.n_items();
    let means: Vec<Vec<f64>> = data.persons.iter().map(|ps| ps.item_means()).collect();

    let fits: Vec<Result<GvarModel, VarError>> = data
        .persons
        .par_iter()
        .zip(means.par_iter())
        .map(|(person, m)| {
            let mut series = person.to_series(data.night_break);
            center_person(&mut series, m);
            fit_gvar(&series, &opts.var)
        })
        .collect();

    let mut persons = Vec::new();
    let mut failures = Vec::new();
    let mut kept_means = Vec::new();
    for ((person, fit), m) in data.persons.iter().zip(fits).zip(&means) {
        match fit {
            Ok(model) => {
                persons.push(PersonFit { person_id: person.person_id.clone(), model });
                kept_means.push(m.clone());
            }
            Err(e) => failures.push(PersonFailure { person_id: person.person_id.clone(), error: e.to_string() }),
        }
    }
    if persons.len() < 2 {
        return Err(VarError::TooFewPersons { need: 2, got: persons.len() });
    }

    let k = persons.len() as f64;
    let mut fixed_temporal = DMatrix::zeros(p, p);
    let mut mean_precision = DMatrix::zeros(p, p);
    for fit in &persons {
        fixed_temporal += &fit.model.var.b;
        mean_precision += fit.model.contemporaneous.precision();
    }
    fixed_temporal /= k;
    mean_precision /= k;
    let fixed_contemporaneous = GgmNetwork::from_precision(&linalg::symmetrize(&mean_precision))?;

    let mean_matrix = DMatrix::from_fn(kept_means.len(), p, |i, j| kept_means[i][j]);
    let between_cov = linalg::covariance(&mean_matrix, k - 1.0);
    if !linalg::is_positive_definite(&between_cov, SPD_REL_FLOOR) {
        return Err(VarError::BetweenPerson {
            persons: kept_means.len(),
            source: crate::ggm::GgmError::NotPositiveDefinite,
        });
    }
    let between_person = partial_corr_network(&between_cov)
        .map_err(|source| VarError::BetweenPerson { persons: kept_means.len(), source })?;

    Ok(MlVarResult { persons, failures, fixed_temporal, fixed_contemporaneous, between_person, person_means: means })
}

/// Fits one multilevel VAR per group label, in order of first appearance.
/// Without group labels the whole dataset forms a single group `"all"`.
pub fn fit_mlvar_by_group(data: &IldDataset, opts: &MlVarOptions) -> Result<Vec<(String, MlVarResult)>, VarError> {
    if data.group_labels.is_none() {
        return Ok(vec![("all".to_string(), fit_mlvar(data, opts)?)]);
    }
    data.groups()
        .into_iter()
        .map(|g| {
            let sub = data.subset_group(&g);
            fit_mlvar(&sub, opts).map(|r| (g, r))
        })
        .collect()
}
