//! `ising`: load or fit an Ising model, map it to MIRT and compare the
//! exact, quadrature and (optionally) Gibbs distributions.

use nalgebra::DMatrix;
use psynet::export::{matrix_csv, to_graphml, Network};
use psynet::ising::{
    empirical_pmf, ising_fit_pl, ising_gibbs, ising_pmf_exact, ising_to_mirt, mirt_marginal_pmf, IsingParams,
    PlWarning, Shift, MAX_EXACT_VARIABLES,
};
use psynet::rng::derive_seed;
use serde::Serialize;

use super::{load_input, node_labels, read_json};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{InputRecord, OutputWriter};

/// Largest factor count evaluated by tensor quadrature.
const MAX_QUADRATURE_FACTORS: usize = 4;

#[derive(Serialize)]
struct IsingSummary {
    p: usize,
    source: &'static str,
    n_obs: Option<usize>,
    warnings: Vec<PlWarning>,
    shift: f64,
    n_factors: usize,
    /// Total variation between the exact pmf and the MIRT marginal.
    tv_mirt: Option<f64>,
    /// Total variation between the exact pmf and the Gibbs sample.
    tv_gibbs: Option<f64>,
}

pub fn run(cfg: &RunConfig, out: &mut OutputWriter) -> Result<Option<InputRecord>, CliError> {
    let opts = &cfg.ising;
    let (params, labels, record, n_obs, warnings, source) = match &opts.params {
        Some(path) => {
            let (params, record): (IsingParams, _) = read_json(path, "ising")?;
            params.validate()?;
            let labels = node_labels(params.p());
            (params, labels, record, None, Vec::new(), "params")
        }
        None => {
            let (data, record) = load_input(cfg)?;
            let rows: Vec<Vec<f64>> = data
                .persons
                .iter()
                .flat_map(|p| {
                    p.rows.iter().filter(|r| r.is_complete()).map(|r| r.values.iter().map(|v| v.unwrap()).collect())
                })
                .collect();
            let p = data.n_items();
            let m = DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]);
            let fit = ising_fit_pl(&m, opts.penalty)?;
            (fit.params, data.item_names.clone(), record, Some(rows.len()), fit.warnings, "pseudo-likelihood")
        }
    };
    let p = params.p();

    let shift = match opts.shift {
        Some(c) => Shift::Value(c),
        None => Shift::Auto,
    };
    let mirt = ising_to_mirt(&params, shift)?;
    let exact = (p <= MAX_EXACT_VARIABLES).then(|| ising_pmf_exact(&params)).transpose()?;
    let quadrature = match &exact {
        Some(_) if mirt.n_factors() <= MAX_QUADRATURE_FACTORS => Some(mirt_marginal_pmf(&mirt, opts.quad_points)?),
        _ => None,
    };
    let gibbs = if opts.gibbs_samples > 0 {
        let samples =
            ising_gibbs(&params, opts.gibbs_samples, opts.gibbs_burn_in, derive_seed(cfg.seed, "ising-gibbs"))?;
        Some(empirical_pmf(&samples, params.coding))
    } else {
        None
    };

    out.write_json("ising_params.json", &params)?;
    out.write("sigma.csv", matrix_csv(&params.sigma, Some(&labels)))?;
    out.write("network.graphml", to_graphml(&Network::undirected(&labels, &params.sigma, 0.0)))?;
    out.write_json("mirt.json", &mirt)?;
    if let Some(pmf) = &exact {
        out.write("pmf_exact.csv", pmf.to_csv())?;
    }
    if let Some(pmf) = &quadrature {
        out.write("pmf_mirt.csv", pmf.to_csv())?;
    }
    if let Some(pmf) = &gibbs {
        out.write("pmf_gibbs.csv", pmf.to_csv())?;
    }
    let tv = |other: &Option<psynet::pmf::Pmf>| match (&exact, other) {
        (Some(a), Some(b)) => Some(a.tv(b)),
        _ => None,
    };
    out.write_json(
        "summary.json",
        &IsingSummary {
            p,
            source,
            n_obs,
            warnings,
            shift: mirt.shift_c,
            n_factors: mirt.n_factors(),
            tv_mirt: tv(&quadrature),
            tv_gibbs: tv(&gibbs),
        },
    )?;
    Ok(Some(record))
}
