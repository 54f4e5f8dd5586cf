//! `gvar`: one graphical VAR per person with temporal and contemporaneous
//! networks.

use psynet::export::{matrix_csv, to_graphml, Network};
use psynet::var::{fit_gvar, network_density, Density, GvarModel, VarError, VarOptions};
use rayon::prelude::*;
use serde::Serialize;

use super::{load_preprocessed, person_dir};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{InputRecord, OutputWriter};

#[derive(Serialize)]
struct PersonEntry {
    person_id: String,
    dir: String,
    n_pairs: Option<usize>,
    stable: Option<bool>,
    temporal_density: Option<Density>,
    contemporaneous_density: Option<Density>,
    error: Option<String>,
}

pub fn run(cfg: &RunConfig, out: &mut OutputWriter) -> Result<Option<InputRecord>, CliError> {
    let (data, record) = load_preprocessed(cfg, &cfg.preprocess)?;
    let opts = VarOptions { min_obs_per_variable: cfg.gvar.min_obs_per_variable, force_zero_b: cfg.gvar.force_zero_b };
    let fits: Vec<Result<GvarModel, VarError>> =
        data.persons.par_iter().map(|p| fit_gvar(&p.to_series(data.night_break), &opts)).collect();

    let labels = &data.item_names;
    let tol = cfg.gvar.edge_threshold;
    let mut entries = Vec::new();
    for (k, (person, fit)) in data.persons.iter().zip(&fits).enumerate() {
        let dir = person_dir(k, &person.person_id);
        let entry = match fit {
            Ok(model) => {
                let pcc = &model.contemporaneous.omega;
                out.write(&format!("{dir}/temporal.csv"), matrix_csv(&model.var.b, Some(labels)))?;
                out.write(&format!("{dir}/contemporaneous.csv"), matrix_csv(pcc, Some(labels)))?;
                out.write(
                    &format!("{dir}/temporal.graphml"),
                    to_graphml(&Network::directed(labels, &model.var.b, tol)),
                )?;
                out.write(
                    &format!("{dir}/contemporaneous.graphml"),
                    to_graphml(&Network::undirected(labels, pcc, tol)),
                )?;
                out.write_json(&format!("{dir}/model.json"), model)?;
                PersonEntry {
                    person_id: person.person_id.clone(),
                    dir,
                    n_pairs: Some(model.var.n_pairs),
                    stable: Some(model.var.stable),
                    temporal_density: network_density(&model.var.b).ok(),
                    contemporaneous_density: network_density(pcc).ok(),
                    error: None,
                }
            }
            Err(e) => PersonEntry {
                person_id: person.person_id.clone(),
                dir,
                n_pairs: None,
                stable: None,
                temporal_density: None,
                contemporaneous_density: None,
                error: Some(e.to_string()),
            },
        };
        entries.push(entry);
    }
    out.write_json("summary.json", &serde_json::json!({ "items": labels, "persons": entries }))?;
    if fits.iter().all(Result::is_err) {
        let first = fits.into_iter().find_map(Result::err).expect("at least one person");
        return Err(CliError::from(first));
    }
    Ok(Some(record))
}
