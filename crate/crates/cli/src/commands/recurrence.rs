//! `rqa` and `rn`: per-person recurrence plots, line-structure summaries and
//! recurrence networks.

use nalgebra::DMatrix;
use psynet::dataset::IldDataset;
use psynet::export::{recurrence_pbm, to_graphml, Network};
use psynet::recurrence::{
    choose_epsilon, delay_embed, recurrence_matrix, recurrence_network, rn_metrics, rqa, EpsilonChoice, Norm,
    RecurrenceError, RecurrenceMatrix, RnSummary, RqaOptions, RqaSummary,
};
use rayon::prelude::*;
use serde::Serialize;

use super::{load_preprocessed, person_dir};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{InputRecord, OutputWriter};

/// How the recurrence matrix of every person is built.
#[derive(Debug, Clone, Copy)]
struct Threshold {
    epsilon: Option<f64>,
    target_rr: f64,
    norm: Norm,
    embed_dimension: usize,
    embed_delay: usize,
}

#[derive(Serialize)]
struct Plot {
    epsilon: f64,
    /// Present when `epsilon` was tuned to the target recurrence rate.
    epsilon_search: Option<EpsilonChoice>,
    n_states: usize,
}

/// Complete rows of one person, delay-embedded when configured.
fn state_matrix(data: &IldDataset, k: usize, th: &Threshold) -> Result<DMatrix<f64>, CliError> {
    let (m, _) = data.persons[k].complete_matrix();
    if th.embed_dimension <= 1 {
        return Ok(m);
    }
    if m.ncols() != 1 {
        return Err(CliError::validation("recurrence", "delay embedding needs exactly one item"));
    }
    let values: Vec<f64> = m.column(0).iter().copied().collect();
    Ok(delay_embed(&values, th.embed_dimension, th.embed_delay)?)
}

fn plot(states: &DMatrix<f64>, th: &Threshold) -> Result<(RecurrenceMatrix, Plot), RecurrenceError> {
    let (epsilon, search) = match th.epsilon {
        Some(e) => (e, None),
        None => {
            let choice = choose_epsilon(states, th.target_rr, th.norm)?;
            (choice.epsilon, Some(choice))
        }
    };
    let rm = recurrence_matrix(states, epsilon, th.norm)?;
    Ok((rm, Plot { epsilon, epsilon_search: search, n_states: states.nrows() }))
}

/// Recurrence matrices of every person, computed in parallel and returned in
/// dataset order.
fn person_plots(data: &IldDataset, th: &Threshold) -> Result<Vec<(RecurrenceMatrix, Plot)>, CliError> {
    let states: Vec<DMatrix<f64>> =
        (0..data.n_persons()).map(|k| state_matrix(data, k, th)).collect::<Result<_, _>>()?;
    let plots: Vec<Result<(RecurrenceMatrix, Plot), RecurrenceError>> =
        states.par_iter().map(|s| plot(s, th)).collect();
    plots
        .into_iter()
        .zip(&data.persons)
        .map(|(r, p)| r.map_err(|e| CliError::from(e).with_person(&p.person_id)))
        .collect()
}

fn bits_csv(rm: &RecurrenceMatrix) -> String {
    let mut s = String::with_capacity(rm.t() * rm.t() * 2);
    for i in 0..rm.t() {
        let row: Vec<&str> = (0..rm.t()).map(|j| if rm.get(i, j) { "1" } else { "0" }).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

#[derive(Serialize)]
struct RqaEntry {
    person_id: String,
    dir: String,
    #[serde(flatten)]
    plot: Plot,
    rqa: RqaSummary,
}

pub fn run_rqa(cfg: &RunConfig, out: &mut OutputWriter) -> Result<Option<InputRecord>, CliError> {
    let c = &cfg.rqa;
    let th = Threshold {
        epsilon: c.epsilon,
        target_rr: c.target_rr,
        norm: c.norm,
        embed_dimension: c.embed_dimension,
        embed_delay: c.embed_delay,
    };
    let opts = RqaOptions { l_min: c.l_min, v_min: c.v_min, theiler: c.theiler };
    let (data, record) = load_preprocessed(cfg, &cfg.preprocess)?;
    let plots = person_plots(&data, &th)?;
    let summaries: Vec<RqaSummary> = plots.par_iter().map(|(rm, _)| rqa(rm, &opts)).collect();

    let mut entries = Vec::new();
    for (k, ((rm, plot), summary)) in plots.into_iter().zip(summaries).enumerate() {
        let dir = person_dir(k, &data.persons[k].person_id);
        out.write(&format!("{dir}/recurrence.pbm"), recurrence_pbm(&rm))?;
        out.write(&format!("{dir}/recurrence.csv"), bits_csv(&rm))?;
        let entry = RqaEntry { person_id: data.persons[k].person_id.clone(), dir: dir.clone(), plot, rqa: summary };
        out.write_json(&format!("{dir}/summary.json"), &entry)?;
        entries.push(entry);
    }
    out.write_json("summary.json", &entries)?;
    Ok(Some(record))
}

#[derive(Serialize)]
struct RnEntry {
    person_id: String,
    dir: String,
    #[serde(flatten)]
    plot: Plot,
    network: RnSummary,
}

pub fn run_rn(cfg: &RunConfig, out: &mut OutputWriter) -> Result<Option<InputRecord>, CliError> {
    let c = &cfg.rn;
    let th = Threshold {
        epsilon: c.epsilon,
        target_rr: c.target_rr,
        norm: c.norm,
        embed_dimension: c.embed_dimension,
        embed_delay: c.embed_delay,
    };
    let (data, record) = load_preprocessed(cfg, &cfg.preprocess)?;
    let plots = person_plots(&data, &th)?;
    let graphs: Vec<_> = plots.par_iter().map(|(rm, _)| recurrence_network(rm)).collect();
    let metrics: Vec<RnSummary> = graphs.par_iter().map(rn_metrics).collect();

    let mut entries = Vec::new();
    for (k, (((_, plot), g), network)) in plots.into_iter().zip(&graphs).zip(metrics).enumerate() {
        let dir = person_dir(k, &data.persons[k].person_id);
        let labels: Vec<String> = (0..g.n()).map(|t| format!("t{t}")).collect();
        out.write(&format!("{dir}/network.graphml"), to_graphml(&Network::from_graph(&labels, g)))?;
        let entry = RnEntry { person_id: data.persons[k].person_id.clone(), dir: dir.clone(), plot, network };
        out.write_json(&format!("{dir}/summary.json"), &entry)?;
        entries.push(entry);
    }
    out.write_json("summary.json", &entries)?;
    Ok(Some(record))
}
