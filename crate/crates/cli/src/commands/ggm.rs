//! `ggm`: partial-correlation network of the pooled input covariance or of a
//! one-factor implied covariance, with a saturation report.

use nalgebra::DMatrix;
use psynet::export::{matrix_csv, to_dot, to_graphml, Network};
use psynet::ggm::{
    cfa_implied_cov, partial_corr_network_ridge, reconstruct_cov, saturation_check, FactorModel, Saturation,
};
use psynet::linalg;
use serde::Serialize;

use super::{load_preprocessed, node_labels};
use crate::config::{GgmSource, RunConfig};
use crate::error::CliError;
use crate::output::{InputRecord, OutputWriter};

#[derive(Serialize)]
struct GgmSummary {
    p: usize,
    source: GgmSource,
    n_obs: Option<usize>,
    delta: Vec<f64>,
    saturation_tol: f64,
    saturation: Saturation,
    /// Largest difference between the covariance rebuilt from the network
    /// and the covariance it was computed from.
    round_trip_error: f64,
}

fn one_factor_cov(loadings: &[f64]) -> Result<DMatrix<f64>, CliError> {
    if loadings.is_empty() || loadings.iter().any(|l| !(l.abs() < 1.0)) {
        return Err(CliError::validation("ggm", "one-factor loadings must be non-empty and inside (-1, 1)"));
    }
    let p = loadings.len();
    let lambda = DMatrix::from_column_slice(p, 1, loadings);
    let theta = DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 - loadings[i] * loadings[i] } else { 0.0 });
    Ok(cfa_implied_cov(&FactorModel::cfa(lambda, DMatrix::identity(1, 1), theta))?)
}

pub fn run(cfg: &RunConfig, out: &mut OutputWriter) -> Result<Option<InputRecord>, CliError> {
    let opts = &cfg.ggm;
    let (cov, labels, record, n_obs) = match opts.source {
        GgmSource::OneFactor => {
            let cov = one_factor_cov(&opts.loadings)?;
            (cov, node_labels(opts.loadings.len()), None, None)
        }
        GgmSource::Input => {
            let (data, record) = load_preprocessed(cfg, &cfg.preprocess)?;
            let blocks: Vec<DMatrix<f64>> = data.persons.iter().map(|p| p.complete_matrix().0).collect();
            let n: usize = blocks.iter().map(|b| b.nrows()).sum();
            if n < 2 {
                return Err(CliError::validation("ggm", "need at least two complete rows"));
            }
            let p = data.n_items();
            let mut pooled = DMatrix::zeros(n, p);
            let mut r = 0;
            for b in &blocks {
                pooled.rows_mut(r, b.nrows()).copy_from(b);
                r += b.nrows();
            }
            (linalg::covariance(&pooled, (n - 1) as f64), data.item_names.clone(), Some(record), Some(n))
        }
    };
    let net = partial_corr_network_ridge(&cov, opts.ridge)?;
    let ridged = &cov + DMatrix::identity(cov.nrows(), cov.nrows()) * opts.ridge;
    let round_trip_error = linalg::max_abs_diff(&reconstruct_cov(&net)?, &ridged);

    out.write("covariance.csv", matrix_csv(&cov, Some(&labels)))?;
    out.write("omega.csv", matrix_csv(&net.omega, Some(&labels)))?;
    let graph = Network::undirected(&labels, &net.omega, opts.edge_threshold);
    out.write("network.graphml", to_graphml(&graph))?;
    out.write("network.dot", to_dot(&graph))?;
    out.write_json(
        "summary.json",
        &GgmSummary {
            p: net.p(),
            source: opts.source,
            n_obs,
            delta: net.delta.clone(),
            saturation_tol: opts.saturation_tol,
            saturation: saturation_check(&net, opts.saturation_tol),
            round_trip_error,
        },
    )?;
    Ok(record)
}
