//! `idio`: marginal distribution of the encompassing idiographic model and
//! its agreement with the equivalent Ising model.

use psynet::export::{matrix_csv, to_graphml, Network};
use psynet::idiographic::{
    marginal_pmf_exact, marginal_pmf_monte_carlo, topology_to_ising, LatentTopology, Weighting, MAX_EXACT_VARIABLES,
};
use psynet::ising::ising_pmf_exact;
use psynet::rng::derive_seed;
use serde::Serialize;

use super::{node_labels, read_json};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{InputRecord, OutputWriter};

#[derive(Serialize)]
struct IdioSummary {
    p: usize,
    weighting: Weighting,
    /// Total variation between the exact marginal and the Ising pmf.
    tv_exact_ising: Option<f64>,
    /// Total variation between the Monte-Carlo marginal and the Ising pmf.
    tv_monte_carlo_ising: Option<f64>,
    draws: usize,
}

pub fn run(cfg: &RunConfig, out: &mut OutputWriter) -> Result<Option<InputRecord>, CliError> {
    let opts = &cfg.idio;
    let (topology, record) = match &opts.topology {
        Some(path) => {
            let (t, record): (LatentTopology, _) = read_json(path, "idio")?;
            (t, Some(record))
        }
        None => (LatentTopology::uniform(opts.p, opts.theta)?, None),
    };
    topology.validate()?;
    let p = topology.p;
    let mu = if opts.mu.is_empty() { vec![0.0; p] } else { opts.mu.clone() };
    let labels = node_labels(p);

    let ising = topology_to_ising(&topology, &mu)?;
    let ising_pmf = ising_pmf_exact(&ising)?;
    let exact = (p <= MAX_EXACT_VARIABLES).then(|| marginal_pmf_exact(&topology, &mu, opts.weighting)).transpose()?;
    let mc = (opts.draws > 0)
        .then(|| {
            marginal_pmf_monte_carlo(
                &topology,
                &mu,
                opts.weighting,
                opts.draws,
                derive_seed(cfg.seed, "idio-monte-carlo"),
            )
        })
        .transpose()?;

    out.write_json("topology.json", &topology)?;
    out.write("edge_prob.csv", matrix_csv(&topology.edge_prob, Some(&labels)))?;
    out.write_json("ising_params.json", &ising)?;
    out.write("ising_network.graphml", to_graphml(&Network::undirected(&labels, &ising.sigma, 0.0)))?;
    out.write("pmf_ising.csv", ising_pmf.to_csv())?;
    if let Some(pmf) = &exact {
        out.write("pmf_exact.csv", pmf.to_csv())?;
    }
    if let Some(pmf) = &mc {
        out.write("pmf_monte_carlo.csv", pmf.to_csv())?;
    }
    out.write_json(
        "summary.json",
        &IdioSummary {
            p,
            weighting: opts.weighting,
            tv_exact_ising: exact.as_ref().map(|e| e.tv(&ising_pmf)),
            tv_monte_carlo_ising: mc.as_ref().map(|m| m.tv(&ising_pmf)),
            draws: opts.draws,
        },
    )?;
    Ok(record)
}
