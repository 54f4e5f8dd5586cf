//! `gimme`: group, subgroup and individual uSEM structures.

use psynet::export::{matrix_csv, to_graphml, Network};
use psynet::var::{adjusted_rand_index, fit_gimme, GimmeResult, PathKind};
use serde::Serialize;

use super::{load_preprocessed, person_dir};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{InputRecord, OutputWriter};

#[derive(Serialize)]
struct GimmeSummary {
    n_persons: usize,
    n_group_paths: usize,
    no_group_path: bool,
    n_subgroups: Option<usize>,
    silhouette: Option<f64>,
    /// Agreement between recovered subgroups and the input group labels.
    adjusted_rand_index: Option<f64>,
    persons: Vec<PersonEntry>,
}

#[derive(Serialize)]
struct PersonEntry {
    person_id: String,
    dir: String,
    subgroup: Option<usize>,
    n_paths: usize,
}

/// Label indices in order of first appearance.
fn label_indices(labels: &[String]) -> Vec<usize> {
    let mut seen: Vec<&String> = Vec::new();
    labels
        .iter()
        .map(|l| match seen.iter().position(|s| *s == l) {
            Some(k) => k,
            None => {
                seen.push(l);
                seen.len() - 1
            }
        })
        .collect()
}

fn write_structure(
    out: &mut OutputWriter,
    dir: &str,
    labels: &[String],
    res: &GimmeResult,
    paths: &[psynet::var::Path],
) -> Result<(), CliError> {
    let lagged = GimmeResult::structure(res.p, paths, PathKind::Lagged);
    let contemporaneous = GimmeResult::structure(res.p, paths, PathKind::Contemporaneous);
    out.write(&format!("{dir}/lagged_structure.csv"), matrix_csv(&lagged, Some(labels)))?;
    out.write(&format!("{dir}/contemporaneous_structure.csv"), matrix_csv(&contemporaneous, Some(labels)))?;
    Ok(())
}

pub fn run(cfg: &RunConfig, out: &mut OutputWriter) -> Result<Option<InputRecord>, CliError> {
    let (data, record) = load_preprocessed(cfg, &cfg.preprocess)?;
    let res = fit_gimme(&data, &cfg.gimme)?;
    let labels = &data.item_names;

    out.write_json("result.json", &res)?;
    write_structure(out, "group", labels, &res, &res.group_paths)?;
    out.write("group/temporal.csv", matrix_csv(&res.group_temporal, Some(labels)))?;
    out.write("group/contemporaneous.csv", matrix_csv(&res.group_contemporaneous, Some(labels)))?;
    if let Some(info) = &res.subgroups {
        for (k, paths) in info.paths.iter().enumerate() {
            let dir = format!("subgroups/{k:02}");
            write_structure(out, &dir, labels, &res, paths)?;
            out.write(&format!("{dir}/temporal.csv"), matrix_csv(&info.temporal[k], Some(labels)))?;
            out.write(&format!("{dir}/contemporaneous.csv"), matrix_csv(&info.contemporaneous[k], Some(labels)))?;
        }
    }
    let mut persons = Vec::new();
    for (k, person) in res.persons.iter().enumerate() {
        let dir = person_dir(k, &person.person_id);
        out.write(&format!("{dir}/temporal.csv"), matrix_csv(&person.temporal, Some(labels)))?;
        out.write(&format!("{dir}/contemporaneous.csv"), matrix_csv(&person.contemporaneous, Some(labels)))?;
        out.write(&format!("{dir}/paths.graphml"), to_graphml(&Network::gimme(labels, person)))?;
        persons.push(PersonEntry {
            person_id: person.person_id.clone(),
            dir,
            subgroup: person.subgroup,
            n_paths: person.paths.len(),
        });
    }

    let adjusted_rand_index = match (&res.subgroups, &data.group_labels) {
        (Some(info), Some(groups)) => Some(adjusted_rand_index(&info.assignment, &label_indices(groups))),
        _ => None,
    };
    out.write_json(
        "summary.json",
        &GimmeSummary {
            n_persons: res.persons.len(),
            n_group_paths: res.group_paths.len(),
            no_group_path: res.has_no_group_path(),
            n_subgroups: res.subgroups.as_ref().map(|s| s.paths.len()),
            silhouette: res.subgroups.as_ref().map(|s| s.silhouette),
            adjusted_rand_index,
            persons,
        },
    )?;
    Ok(Some(record))
}
