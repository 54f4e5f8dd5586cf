//! `simulate`: synthetic multi-person data from a known gVAR or uSEM, written
//! as an input CSV together with the generating parameters.

use nalgebra::DMatrix;
use psynet::dataset::{ColumnSchema, IldDataset, Observation, PersonSeries, SamplingMeta};
use psynet::rng::{derive_seed, seeded};
use psynet::var::{gvar_from_parts, simulate_gvar, simulate_usem};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::{matrix_from_rows, node_labels};
use crate::config::{RunConfig, SimModel};
use crate::error::CliError;
use crate::output::{InputRecord, OutputWriter};

#[derive(Serialize)]
struct Truth {
    model: SimModel,
    temporal: Vec<Vec<f64>>,
    contemporaneous: Vec<Vec<f64>>,
    persons: Vec<PersonTruth>,
}

#[derive(Serialize)]
struct PersonTruth {
    person_id: String,
    seed: u64,
    /// Process means (gVAR only).
    means: Option<Vec<f64>>,
}

pub fn person_ids(n: usize) -> Vec<String> {
    let width = n.to_string().len().max(2);
    (1..=n).map(|i| format!("p{i:0width$}")).collect()
}

fn simulate_person(
    cfg: &RunConfig,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    id: &str,
) -> Result<(DMatrix<f64>, PersonTruth), CliError> {
    let s = &cfg.simulate;
    let seed = derive_seed(cfg.seed, id);
    let p = b.nrows();
    match s.model {
        SimModel::Gvar => {
            let mut rng = seeded(derive_seed(seed, "means"));
            let means: Vec<f64> = (0..p)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    s.mean_sd * z
                })
                .collect();
            let model = gvar_from_parts(b.clone(), c.clone(), means.clone())?;
            let x = simulate_gvar(&model, s.t, seed)?;
            Ok((x, PersonTruth { person_id: id.to_string(), seed, means: Some(means) }))
        }
        SimModel::Usem => {
            let x = simulate_usem(c, b, &vec![1.0; p], s.t, seed)?;
            Ok((x, PersonTruth { person_id: id.to_string(), seed, means: None }))
        }
    }
}

pub fn run(cfg: &RunConfig, out: &mut OutputWriter) -> Result<Option<InputRecord>, CliError> {
    let s = &cfg.simulate;
    if s.persons == 0 || s.t < 2 || s.beeps_per_day == 0 {
        return Err(CliError::validation("simulate", "persons, t and beeps_per_day must be positive (t at least 2)"));
    }
    let b = matrix_from_rows(&s.temporal, "simulate.temporal")?;
    let c = matrix_from_rows(&s.contemporaneous, "simulate.contemporaneous")?;
    let p = b.nrows();
    if b.shape() != (p, p) || c.shape() != (p, p) || p == 0 {
        return Err(CliError::validation(
            "simulate",
            "temporal and contemporaneous must be square matrices of one size",
        ));
    }
    let ids = person_ids(s.persons);
    let sims: Vec<(DMatrix<f64>, PersonTruth)> =
        ids.par_iter().map(|id| simulate_person(cfg, &b, &c, id)).collect::<Result<_, _>>()?;

    let bpd = s.beeps_per_day as i64;
    let persons: Vec<PersonSeries> = sims
        .iter()
        .zip(&ids)
        .map(|((x, _), id)| PersonSeries {
            person_id: id.clone(),
            rows: (0..x.nrows())
                .map(|t| Observation {
                    day: 1 + t as i64 / bpd,
                    beep: 1 + t as i64 % bpd,
                    values: x.row(t).iter().map(|v| Some(*v)).collect(),
                })
                .collect(),
        })
        .collect();
    let items = node_labels(p);
    let data = IldDataset {
        persons,
        item_names: items.clone(),
        group_labels: None,
        sampling_meta: SamplingMeta { beeps_per_day: s.beeps_per_day, has_day_index: true },
        night_break: true,
    };
    let item_refs: Vec<&str> = items.iter().map(String::as_str).collect();
    let mut csv = Vec::new();
    data.write_csv(&ColumnSchema::new("id", "day", "beep", &item_refs), &mut csv)?;
    out.write("data.csv", csv)?;
    out.write_json(
        "truth.json",
        &Truth {
            model: s.model,
            temporal: s.temporal.clone(),
            contemporaneous: s.contemporaneous.clone(),
            persons: sims.into_iter().map(|(_, t)| t).collect(),
        },
    )?;
    Ok(None)
}
