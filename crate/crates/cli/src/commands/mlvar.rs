//! `mlvar`: multilevel VAR per group with the temporal, contemporaneous and
//! between-person networks and a density report.

use nalgebra::DMatrix;
use psynet::dataset::{Centering, PreprocessOptions};
use psynet::export::{matrix_csv, to_graphml, Network};
use psynet::var::{fit_mlvar_by_group, network_density, Density, MlVarOptions, PersonFailure, VarOptions};
use serde::Serialize;

use super::{group_dir, load_preprocessed};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{InputRecord, OutputWriter};

#[derive(Serialize)]
struct GroupDensity {
    group: String,
    dir: String,
    n_persons: usize,
    temporal: Density,
    contemporaneous: Density,
    between_person: Density,
    failures: Vec<PersonFailure>,
}

pub fn run(cfg: &RunConfig, out: &mut OutputWriter) -> Result<Option<InputRecord>, CliError> {
    // person means feed the between-person network, so centering is left to
    // the model
    let pre = PreprocessOptions { center: Centering::None, ..cfg.preprocess };
    let (data, record) = load_preprocessed(cfg, &pre)?;
    let opts =
        MlVarOptions { var: VarOptions { min_obs_per_variable: cfg.mlvar.min_obs_per_variable, force_zero_b: false } };
    let groups = fit_mlvar_by_group(&data, &opts)?;

    let labels = &data.item_names;
    let tol = cfg.mlvar.edge_threshold;
    let mut report = Vec::new();
    for (k, (group, res)) in groups.iter().enumerate() {
        let dir = group_dir(k, group);
        let networks: [(&str, &DMatrix<f64>, bool); 3] = [
            ("temporal", &res.fixed_temporal, true),
            ("contemporaneous", &res.fixed_contemporaneous.omega, false),
            ("between", &res.between_person.omega, false),
        ];
        for (name, m, directed) in networks {
            let net = if directed { Network::directed(labels, m, tol) } else { Network::undirected(labels, m, tol) };
            out.write(&format!("{dir}/{name}.csv"), matrix_csv(m, Some(labels)))?;
            out.write(&format!("{dir}/{name}.graphml"), to_graphml(&net))?;
        }
        out.write_json(&format!("{dir}/result.json"), res)?;
        report.push(GroupDensity {
            group: group.clone(),
            dir,
            n_persons: res.persons.len(),
            temporal: network_density(&res.fixed_temporal)?,
            contemporaneous: network_density(&res.fixed_contemporaneous.omega)?,
            between_person: network_density(&res.between_person.omega)?,
            failures: res.failures.clone(),
        });
    }
    out.write_json("density.json", &report)?;
    Ok(Some(record))
}
