//! Fixed inputs checked against values computed independently (direct
//! enumeration, matrix inversion and reference graph metrics) and frozen
//! here.

use nalgebra::DMatrix;
use psynet::graph::Graph;
use psynet::idiographic::{marginal_pmf_exact, LatentTopology, Weighting};
use psynet::ising::{ising_pmf_exact, ising_recode, ising_to_mirt, mirt_marginal_pmf, IsingParams, Shift};
use psynet::pmf::Coding;
use psynet::recurrence::rn_metrics;
use psynet::var::{fit_var, Series, VarOptions};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn params(coding: Coding) -> IsingParams {
    let sigma = DMatrix::from_row_slice(3, 3, &[0.0, 0.75, -0.3, 0.75, 0.0, 0.2, -0.3, 0.2, 0.0]);
    IsingParams::new(vec![0.25, -0.5, 0.1], sigma, coding).unwrap()
}

#[test]
fn ising_pmf_plus_minus() {
    let want = [
        0.1929502857366334,
        0.12933844441756986,
        0.010616746032033431,
        0.14294108735944183,
        0.2878480016788499,
        0.05811550925067951,
        0.035248838165350294,
        0.14294108735944178,
    ];
    let pmf = ising_pmf_exact(&params(Coding::PlusMinus)).unwrap();
    for (got, want) in pmf.probs.iter().zip(want) {
        assert!(close(*got, want, 1e-14), "{got} vs {want}");
    }
}

#[test]
fn ising_pmf_zero_one() {
    let want = [
        0.1091325216945023,
        0.14012893164296727,
        0.06619222037946976,
        0.17992910984286914,
        0.12061008919302364,
        0.11472786573205966,
        0.08935015167223906,
        0.1799291098428691,
    ];
    let pmf = ising_pmf_exact(&params(Coding::ZeroOne)).unwrap();
    for (got, want) in pmf.probs.iter().zip(want) {
        assert!(close(*got, want, 1e-14), "{got} vs {want}");
    }
    let recoded = ising_pmf_exact(&ising_recode(&params(Coding::ZeroOne), Coding::PlusMinus)).unwrap();
    assert!(recoded.tv(&pmf) < 1e-14);
}

#[test]
fn mirt_bridge_on_frozen_params() {
    for coding in [Coding::PlusMinus, Coding::ZeroOne] {
        let p = params(coding);
        let mirt = ising_to_mirt(&p, Shift::Auto).unwrap();
        let tv = mirt_marginal_pmf(&mirt, 40).unwrap().tv(&ising_pmf_exact(&p).unwrap());
        assert!(tv < 1e-6, "{coding:?}: {tv}");
    }
}

#[test]
fn divide_and_color_pmf() {
    let theta = DMatrix::from_row_slice(3, 3, &[0.0, 0.5, 0.2, 0.5, 0.0, 0.7, 0.2, 0.7, 0.0]);
    let topology = LatentTopology::new(theta).unwrap();
    let pmf = marginal_pmf_exact(&topology, &[0.3, 0.0, -0.2], Weighting::Er).unwrap();
    let want = [
        0.3069121418242874,
        0.1314257974917979,
        0.01948096185438974,
        0.06957836337801067,
        0.025596449437126103,
        0.023794100540564682,
        0.04834884893679374,
        0.37486333653702986,
    ];
    for (got, want) in pmf.probs.iter().zip(want) {
        assert!(close(*got, want, 1e-14), "{got} vs {want}");
    }
}

#[test]
fn karate_club_metrics() {
    let edges = [
        (0, 1),
        (0, 2),
        (0, 3),
        (0, 4),
        (0, 5),
        (0, 6),
        (0, 7),
        (0, 8),
        (0, 10),
        (0, 11),
        (0, 12),
        (0, 13),
        (0, 17),
        (0, 19),
        (0, 21),
        (0, 31),
        (1, 2),
        (1, 3),
        (1, 7),
        (1, 13),
        (1, 17),
        (1, 19),
        (1, 21),
        (1, 30),
        (2, 3),
        (2, 7),
        (2, 8),
        (2, 9),
        (2, 13),
        (2, 27),
        (2, 28),
        (2, 32),
        (3, 7),
        (3, 12),
        (3, 13),
        (4, 6),
        (4, 10),
        (5, 6),
        (5, 10),
        (5, 16),
        (6, 16),
        (8, 30),
        (8, 32),
        (8, 33),
        (9, 33),
        (13, 33),
        (14, 32),
        (14, 33),
        (15, 32),
        (15, 33),
        (18, 32),
        (18, 33),
        (19, 33),
        (20, 32),
        (20, 33),
        (22, 32),
        (22, 33),
        (23, 25),
        (23, 27),
        (23, 29),
        (23, 32),
        (23, 33),
        (24, 25),
        (24, 27),
        (24, 31),
        (25, 31),
        (26, 29),
        (26, 33),
        (27, 33),
        (28, 31),
        (28, 33),
        (29, 32),
        (29, 33),
        (30, 32),
        (30, 33),
        (31, 32),
        (31, 33),
        (32, 33),
    ];
    let s = rn_metrics(&Graph::from_edges(34, &edges));
    assert_eq!(s.n_edges, 78);
    assert!(close(s.transitivity.unwrap(), 0.2556818181818182, 1e-14));
    assert!(close(s.global_clustering, 0.5706384782076823, 1e-14));
    assert!(close(s.average_path_length.unwrap(), 2.408199643493761, 1e-14));
    assert!(close(s.assortativity.unwrap(), -0.47561309768461413, 1e-12));
}

#[test]
fn partial_correlations_of_fixed_covariance() {
    let c = DMatrix::from_row_slice(
        4,
        4,
        &[2.0, 0.6, 0.3, 0.1, 0.6, 1.5, -0.4, 0.2, 0.3, -0.4, 1.0, 0.25, 0.1, 0.2, 0.25, 0.8],
    );
    let net = psynet::ggm::partial_corr_network(&c).unwrap();
    let want = [
        [0.0, 0.4654968491434801, 0.3873694591472643, -0.1347853694840338],
        [0.4654968491434801, 0.0, -0.5067226696168351, 0.3273935758292707],
        [0.3873694591472643, -0.5067226696168351, 0.0, 0.3855952964233219],
        [-0.1347853694840338, 0.3273935758292707, 0.3855952964233219, 0.0],
    ];
    for i in 0..4 {
        for j in 0..4 {
            assert!(close(net.omega[(i, j)], want[i][j], 1e-13));
        }
    }
    let delta = [1.2228914101659278, 0.9767539585046715, 0.8112692313905895, 0.8112692313905896];
    for (got, want) in net.delta.iter().zip(delta) {
        assert!(close(*got, want, 1e-13));
    }
}

#[test]
fn var_ols_on_fixed_data() {
    let x = DMatrix::from_row_slice(
        10,
        2,
        &[0.1, 1.2, 0.5, 0.7, -0.3, 1.1, 0.8, 0.2, 0.05, -0.4, 1.3, 0.9, -0.7, 0.3, 0.2, 0.25, 0.9, -1.0, -0.1, 0.6],
    );
    let fit = fit_var(&Series::contiguous(x), &VarOptions { min_obs_per_variable: 1, ..Default::default() }).unwrap();
    let b = [[-0.6959758841771534, -0.21477667582693957], [-0.0034107035954773213, -0.017952639193567908]];
    let theta = [[0.24736741702103351, -0.08359282664232724], [-0.08359282664232724, 0.491561924546018]];
    for i in 0..2 {
        for j in 0..2 {
            assert!(close(fit.b[(i, j)], b[i][j], 1e-13));
            assert!(close(fit.theta[(i, j)], theta[i][j], 1e-13));
        }
    }
}
