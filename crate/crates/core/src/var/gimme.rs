//! Group iterative multiple model estimation for unified structural VARs.
//!
//! Each person follows `x_t = A x_t + Φ x_{t−1} + ε_t` with a person-specific
//! path set. Paths shared by at least a fraction `γ` of persons enter the
//! group model first, optional subgroups add their own shared paths, and a
//! per-person forward search completes every model. Candidate paths are
//! scored by the change in the person's BIC. Contemporaneous structure is
//! kept acyclic, so each equation is estimated by ordinary least squares on
//! its selected contemporaneous and lagged predictors.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Series, VarError, SIMULATION_BURN_IN};
use crate::dataset::IldDataset;
use crate::linalg;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathKind {
    /// `x_{from,t−1} → x_{to,t}`.
    Lagged,
    /// `x_{from,t} → x_{to,t}`.
    Contemporaneous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Path {
    pub kind: PathKind,
    pub from: usize,
    pub to: usize,
}

impl Path {
    pub fn lagged(from: usize, to: usize) -> Self {
        Path { kind: PathKind::Lagged, from, to }
    }

    pub fn contemporaneous(from: usize, to: usize) -> Self {
        Path { kind: PathKind::Contemporaneous, from, to }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Level {
    Group,
    Subgroup,
    Individual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Group,
    Subgroup,
    Final,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InformationCriterion {
    #[default]
    Bic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GimmeOptions {
    /// Minimum fraction of persons whose BIC must improve for a path to
    /// enter a shared (group or subgroup) model.
    pub group_threshold: f64,
    pub subgroup: bool,
    /// Upper bound on the number of paths in any person's model.
    pub max_paths: Option<usize>,
    pub information_criterion: InformationCriterion,
    /// Minimum lag pairs per candidate predictor (`2P` predictors).
    pub min_obs_per_predictor: usize,
}

impl Default for GimmeOptions {
    fn default() -> Self {
        GimmeOptions {
            group_threshold: 0.75,
            subgroup: false,
            max_paths: None,
            information_criterion: InformationCriterion::Bic,
            min_obs_per_predictor: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum GimmeNote {
    /// No candidate reached the group threshold; the group model is empty.
    NoGroupPath,
    /// A contemporaneous candidate was skipped because it would close a
    /// directed cycle.
    CycleRejected { level: Level, person: Option<String>, subgroup: Option<usize>, path: Path },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub stage: Stage,
    pub log_likelihood: f64,
    pub bic: f64,
    pub n_paths: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonGimme {
    pub person_id: String,
    pub subgroup: Option<usize>,
    pub paths: Vec<(Path, Level)>,
    /// `A[to][from]` contemporaneous coefficients.
    #[serde(with = "crate::serde_matrix")]
    pub contemporaneous: DMatrix<f64>,
    /// `Φ[to][from]` lag-1 coefficients.
    #[serde(with = "crate::serde_matrix")]
    pub temporal: DMatrix<f64>,
    pub residual_variances: Vec<f64>,
    pub fits: Vec<FitRecord>,
}

impl PersonGimme {
    pub fn path_set(&self) -> BTreeSet<Path> {
        self.paths.iter().map(|(p, _)| *p).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgroupInfo {
    /// Subgroup index per person.
    pub assignment: Vec<usize>,
    /// Mean silhouette of the chosen partition.
    pub silhouette: f64,
    /// Paths added at subgroup level, per subgroup.
    pub paths: Vec<Vec<Path>>,
    #[serde(with = "crate::serde_matrix::list")]
    pub contemporaneous: Vec<DMatrix<f64>>,
    #[serde(with = "crate::serde_matrix::list")]
    pub temporal: Vec<DMatrix<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GimmeResult {
    pub p: usize,
    pub group_paths: Vec<Path>,
    /// Mean person coefficients on group contemporaneous paths.
    #[serde(with = "crate::serde_matrix")]
    pub group_contemporaneous: DMatrix<f64>,
    /// Mean person coefficients on group lagged paths.
    #[serde(with = "crate::serde_matrix")]
    pub group_temporal: DMatrix<f64>,
    pub subgroups: Option<SubgroupInfo>,
    pub persons: Vec<PersonGimme>,
    pub notes: Vec<GimmeNote>,
}

impl GimmeResult {
    pub fn has_no_group_path(&self) -> bool {
        self.notes.contains(&GimmeNote::NoGroupPath)
    }

    /// 0/1 structure matrix (`[to][from]`) of the given paths.
    pub fn structure(p: usize, paths: &[Path], kind: PathKind) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(p, p);
        for path in paths.iter().filter(|q| q.kind == kind) {
            m[(path.to, path.from)] = 1.0;
        }
        m
    }
}

/// Centered cross-products of `[x_t, x_{t−1}]` over the lag pairs of one
/// person; every regression the search needs is solved from these.
#[derive(Debug, Clone)]
struct Moments {
    g: DMatrix<f64>,
    n: usize,
    p: usize,
}

struct NodeFit {
    coefs: Vec<f64>,
    rss: f64,
}

impl Moments {
    fn new(series: &Series) -> Self {
        let (cur, prev) = series.lagged();
        let (n, p) = cur.shape();
        let mut z = DMatrix::zeros(n, 2 * p);
        z.view_mut((0, 0), (n, p)).copy_from(&cur);
        z.view_mut((0, p), (n, p)).copy_from(&prev);
        Moments { g: linalg::covariance(&z, 1.0), n, p }
    }

    fn column(&self, path: &Path) -> usize {
        match path.kind {
            PathKind::Contemporaneous => path.from,
            PathKind::Lagged => self.p + path.from,
        }
    }

    fn fit(&self, node: usize, cols: &[usize]) -> Option<NodeFit> {
        let yy = self.g[(node, node)];
        if cols.is_empty() {
            return Some(NodeFit { coefs: vec![], rss: yy });
        }
        let k = cols.len();
        let gss = DMatrix::from_fn(k, k, |a, b| self.g[(cols[a], cols[b])]);
        let gsy = DVector::from_fn(k, |a, _| self.g[(cols[a], node)]);
        let chol = gss.clone().cholesky()?;
        let l = chol.l();
        if (0..k).any(|a| l[(a, a)].powi(2) <= 1e-10 * gss[(a, a)]) {
            return None;
        }
        let beta = chol.solve(&gsy);
        let rss = (yy - beta.dot(&gsy)).max(0.0);
        Some(NodeFit { coefs: beta.iter().copied().collect(), rss })
    }

    fn log_likelihood(&self, rss: f64) -> f64 {
        let n = self.n as f64;
        let var = (rss / n).max(1e-300);
        -0.5 * n * ((2.0 * std::f64::consts::PI * var).ln() + 1.0)
    }

    /// BIC of one equation with `k` slopes (plus intercept and variance).
    fn node_bic(&self, rss: f64, k: usize) -> f64 {
        -2.0 * self.log_likelihood(rss) + (k + 2) as f64 * (self.n as f64).ln()
    }
}

fn node_columns(m: &Moments, paths: &BTreeSet<Path>, node: usize) -> Vec<usize> {
    paths.iter().filter(|q| q.to == node).map(|q| m.column(q)).collect()
}

/// BIC of one equation under `paths`, `+∞` when the design is singular.
fn node_bic(m: &Moments, paths: &BTreeSet<Path>, node: usize) -> f64 {
    let cols = node_columns(m, paths, node);
    m.fit(node, &cols).map_or(f64::INFINITY, |f| m.node_bic(f.rss, cols.len()))
}

/// Change in the person's BIC when `path` is added to (or removed from)
/// `paths`; only the dependent node's equation changes.
fn bic_change(m: &Moments, paths: &BTreeSet<Path>, path: Path, add: bool) -> f64 {
    let before = node_bic(m, paths, path.to);
    let mut next = paths.clone();
    if add {
        next.insert(path);
    } else {
        next.remove(&path);
    }
    let after = node_bic(m, &next, path.to);
    if before.is_infinite() && after.is_infinite() {
        return f64::INFINITY;
    }
    after - before
}

fn person_fit(m: &Moments, paths: &BTreeSet<Path>) -> (f64, f64) {
    let mut ll = 0.0;
    let mut bic = 0.0;
    for node in 0..m.p {
        let cols = node_columns(m, paths, node);
        match m.fit(node, &cols) {
            Some(f) => {
                ll += m.log_likelihood(f.rss);
                bic += m.node_bic(f.rss, cols.len());
            }
            None => return (f64::NEG_INFINITY, f64::INFINITY),
        }
    }
    (ll, bic)
}

/// True when adding contemporaneous `from → to` closes a directed cycle,
/// i.e. `to` already reaches `from`.
fn creates_cycle(paths: &BTreeSet<Path>, path: Path) -> bool {
    if path.kind != PathKind::Contemporaneous {
        return false;
    }
    if path.from == path.to {
        return true;
    }
    let mut stack = vec![path.to];
    let mut seen = BTreeSet::new();
    while let Some(v) = stack.pop() {
        if v == path.from {
            return true;
        }
        if seen.insert(v) {
            stack.extend(paths.iter().filter(|q| q.kind == PathKind::Contemporaneous && q.from == v).map(|q| q.to));
        }
    }
    false
}

fn candidates(p: usize) -> Vec<Path> {
    let mut out = Vec::with_capacity(2 * p * p);
    for to in 0..p {
        for from in 0..p {
            out.push(Path::lagged(from, to));
        }
    }
    for to in 0..p {
        for from in 0..p {
            if from != to {
                out.push(Path::contemporaneous(from, to));
            }
        }
    }
    out
}

struct SharedSearch<'a> {
    moments: &'a [Moments],
    candidates: &'a [Path],
    gamma: f64,
    max_paths: usize,
}

impl SharedSearch<'_> {
    /// Greedy shared forward search over the persons in `members`, starting
    /// from `base`. Returns the paths added (after pruning), in order.
    fn run(
        &self,
        members: &[usize],
        base: &BTreeSet<Path>,
        level: Level,
        subgroup: Option<usize>,
        notes: &mut Vec<GimmeNote>,
    ) -> Vec<Path> {
        let mut model = base.clone();
        let mut added: Vec<Path> = Vec::new();
        let mut rejected = BTreeSet::new();
        while model.len() < self.max_paths {
            let open: Vec<Path> = self
                .candidates
                .iter()
                .copied()
                .filter(|c| !model.contains(c))
                .filter(|&c| {
                    let cyc = creates_cycle(&model, c);
                    if cyc && rejected.insert(c) {
                        notes.push(GimmeNote::CycleRejected { level, person: None, subgroup, path: c });
                    }
                    !cyc
                })
                .collect();
            if open.is_empty() {
                break;
            }
            let deltas: Vec<Vec<f64>> = members
                .par_iter()
                .map(|&i| open.iter().map(|&c| bic_change(&self.moments[i], &model, c, true)).collect())
                .collect();
            let mut best: Option<(usize, usize, f64)> = None;
            for (k, _) in open.iter().enumerate() {
                let count = deltas.iter().filter(|d| d[k] < 0.0).count();
                let total: f64 = deltas.iter().map(|d| d[k].min(0.0)).sum();
                let better = match best {
                    None => true,
                    Some((_, bc, bt)) => count > bc || (count == bc && total < bt),
                };
                if better {
                    best = Some((k, count, total));
                }
            }
            let (k, count, _) = best.unwrap();
            if (count as f64) < self.gamma * members.len() as f64 || count == 0 {
                break;
            }
            model.insert(open[k]);
            added.push(open[k]);
        }

        // drop shared paths that lost majority support once later paths entered
        loop {
            let support: Vec<(usize, usize)> = added
                .iter()
                .enumerate()
                .map(|(idx, &path)| {
                    let count =
                        members.iter().filter(|&&i| bic_change(&self.moments[i], &model, path, false) > 0.0).count();
                    (idx, count)
                })
                .collect();
            let weakest = support.iter().min_by_key(|&&(idx, c)| (c, std::cmp::Reverse(idx))).copied();
            match weakest {
                Some((idx, c)) if (c as f64) < self.gamma * members.len() as f64 => {
                    let path = added.remove(idx);
                    model.remove(&path);
                }
                _ => break,
            }
        }
        added
    }
}

/// Jaccard similarity of two index sets; two empty sets are identical.
fn jaccard(a: &BTreeSet<usize>, b: &BTreeSet<usize>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        1.0
    } else {
        a.intersection(b).count() as f64 / union as f64
    }
}

/// Average-linkage agglomerative clustering on a distance matrix. Returns the
/// labels for every cut `k = n, n−1, …, 1` keyed by `k`.
fn average_linkage(dist: &DMatrix<f64>) -> BTreeMap<usize, Vec<usize>> {
    let n = dist.nrows();
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut cuts = BTreeMap::new();
    let labels = |clusters: &Vec<Vec<usize>>| {
        let mut lab = vec![0; n];
        let mut ordered: Vec<&Vec<usize>> = clusters.iter().collect();
        ordered.sort_by_key(|c| c.iter().min().copied());
        for (k, c) in ordered.into_iter().enumerate() {
            for &i in c {
                lab[i] = k;
            }
        }
        lab
    };
    cuts.insert(n, labels(&clusters));
    while clusters.len() > 1 {
        let mut best = (0, 1, f64::INFINITY);
        for a in 0..clusters.len() {
            for b in (a + 1)..clusters.len() {
                let mut s = 0.0;
                for &i in &clusters[a] {
                    for &j in &clusters[b] {
                        s += dist[(i, j)];
                    }
                }
                let d = s / (clusters[a].len() * clusters[b].len()) as f64;
                if d < best.2 - 1e-15 {
                    best = (a, b, d);
                }
            }
        }
        let merged = clusters.remove(best.1);
        clusters[best.0].extend(merged);
        cuts.insert(clusters.len(), labels(&clusters));
    }
    cuts
}

/// Mean silhouette width; singletons contribute 0.
fn silhouette(dist: &DMatrix<f64>, labels: &[usize]) -> f64 {
    let n = labels.len();
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut total = 0.0;
    for i in 0..n {
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for j in 0..n {
            if j != i {
                sums[labels[j]] += dist[(i, j)];
                counts[labels[j]] += 1;
            }
        }
        let own = labels[i];
        if counts[own] == 0 {
            continue;
        }
        let a = sums[own] / counts[own] as f64;
        let b = (0..k)
            .filter(|&c| c != own && counts[c] > 0)
            .map(|c| sums[c] / counts[c] as f64)
            .fold(f64::INFINITY, f64::min);
        if b.is_finite() {
            let m = a.max(b);
            if m > 0.0 {
                total += (b - a) / m;
            }
        }
    }
    total / n as f64
}

/// Adjusted Rand index between two partitions of the same items.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    let choose2 = |x: usize| (x * x.saturating_sub(1)) as f64 / 2.0;
    let mut table: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut ra: BTreeMap<usize, usize> = BTreeMap::new();
    let mut rb: BTreeMap<usize, usize> = BTreeMap::new();
    for i in 0..n {
        *table.entry((a[i], b[i])).or_default() += 1;
        *ra.entry(a[i]).or_default() += 1;
        *rb.entry(b[i]).or_default() += 1;
    }
    let index: f64 = table.values().map(|&c| choose2(c)).sum();
    let sa: f64 = ra.values().map(|&c| choose2(c)).sum();
    let sb: f64 = rb.values().map(|&c| choose2(c)).sum();
    let expected = sa * sb / choose2(n);
    let max = 0.5 * (sa + sb);
    if (max - expected).abs() < 1e-15 {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

fn estimate(m: &Moments, paths: &BTreeSet<Path>) -> (DMatrix<f64>, DMatrix<f64>, Vec<f64>) {
    let p = m.p;
    let mut a = DMatrix::zeros(p, p);
    let mut phi = DMatrix::zeros(p, p);
    let mut var = vec![0.0; p];
    for node in 0..p {
        let node_paths: Vec<Path> = paths.iter().copied().filter(|q| q.to == node).collect();
        let cols: Vec<usize> = node_paths.iter().map(|q| m.column(q)).collect();
        if let Some(f) = m.fit(node, &cols) {
            for (q, c) in node_paths.iter().zip(&f.coefs) {
                match q.kind {
                    PathKind::Contemporaneous => a[(node, q.from)] = *c,
                    PathKind::Lagged => phi[(node, q.from)] = *c,
                }
            }
            var[node] = f.rss / m.n as f64;
        }
    }
    (a, phi, var)
}

fn mean_coefficients(persons: &[&PersonGimme], paths: &[Path], p: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut a = DMatrix::zeros(p, p);
    let mut phi = DMatrix::zeros(p, p);
    if persons.is_empty() {
        return (a, phi);
    }
    let k = persons.len() as f64;
    for q in paths {
        let s: f64 = persons
            .iter()
            .map(|r| match q.kind {
                PathKind::Contemporaneous => r.contemporaneous[(q.to, q.from)],
                PathKind::Lagged => r.temporal[(q.to, q.from)],
            })
            .sum();
        match q.kind {
            PathKind::Contemporaneous => a[(q.to, q.from)] = s / k,
            PathKind::Lagged => phi[(q.to, q.from)] = s / k,
        }
    }
    (a, phi)
}

/// GIMME on an ILD dataset; each person's lag pairs come from complete rows
/// under the dataset's night-break policy.
pub fn fit_gimme(data: &IldDataset, opts: &GimmeOptions) -> Result<GimmeResult, VarError> {
    data.validate().map_err(|e| VarError::Invalid(e.to_string()))?;
    let ids: Vec<String> = data.persons.iter().map(|p| p.person_id.clone()).collect();
    let series: Vec<Series> = data.persons.iter().map(|p| p.to_series(data.night_break)).collect();
    fit_gimme_series(&ids, &series, opts)
}

pub fn fit_gimme_series(ids: &[String], series: &[Series], opts: &GimmeOptions) -> Result<GimmeResult, VarError> {
    if ids.len() != series.len() {
        return Err(VarError::Invalid("one id per series required".into()));
    }
    if series.len() < 3 {
        return Err(VarError::TooFewPersons { need: 3, got: series.len() });
    }
    if !(opts.group_threshold > 0.0 && opts.group_threshold <= 1.0) {
        return Err(VarError::Invalid("group_threshold must lie in (0, 1]".into()));
    }
    let p = series[0].p();
    if p == 0 || series.iter().any(|s| s.p() != p) {
        return Err(VarError::Invalid("all persons need the same positive number of variables".into()));
    }
    let need = (opts.min_obs_per_predictor * 2 * p).max(2 * p + 3);
    let mut moments = Vec::with_capacity(series.len());
    for (id, s) in ids.iter().zip(series) {
        let person_err = |e: VarError| VarError::Person { person: id.clone(), source: Box::new(e) };
        if s.values.iter().any(|v| !v.is_finite()) {
            return Err(person_err(VarError::Invalid("missing values".into())));
        }
        if s.pairs.len() < need {
            return Err(person_err(VarError::InsufficientObservations { need, got: s.pairs.len() }));
        }
        let m = Moments::new(s);
        if (0..2 * p).any(|c| !(m.g[(c, c)] > 1e-12 * m.n as f64)) {
            return Err(person_err(VarError::CollinearPredictors));
        }
        moments.push(m);
    }

    let n = series.len();
    let cands = candidates(p);
    let max_paths = opts.max_paths.unwrap_or(usize::MAX);
    let search = SharedSearch { moments: &moments, candidates: &cands, gamma: opts.group_threshold, max_paths };
    let mut notes = Vec::new();

    let everyone: Vec<usize> = (0..n).collect();
    let group_paths = search.run(&everyone, &BTreeSet::new(), Level::Group, None, &mut notes);
    if group_paths.is_empty() {
        notes.insert(0, GimmeNote::NoGroupPath);
    }
    let group_set: BTreeSet<Path> = group_paths.iter().copied().collect();

    let mut assignment: Option<(Vec<usize>, f64)> = None;
    let mut subgroup_paths: Vec<Vec<Path>> = Vec::new();
    if opts.subgroup {
        // paths each person supports on top of the group model
        let support: Vec<BTreeSet<usize>> = moments
            .par_iter()
            .map(|m| {
                cands
                    .iter()
                    .enumerate()
                    .filter(|&(_, &c)| {
                        if group_set.contains(&c) {
                            bic_change(m, &group_set, c, false) > 0.0
                        } else {
                            !creates_cycle(&group_set, c) && bic_change(m, &group_set, c, true) < 0.0
                        }
                    })
                    .map(|(k, _)| k)
                    .collect()
            })
            .collect();
        let dist = DMatrix::from_fn(n, n, |i, j| 1.0 - jaccard(&support[i], &support[j]));
        let cuts = average_linkage(&dist);
        let mut best = (vec![0; n], 0.0);
        for k in 2..n {
            let s = silhouette(&dist, &cuts[&k]);
            if s > best.1 + 1e-12 {
                best = (cuts[&k].clone(), s);
            }
        }
        let n_sub = best.0.iter().max().map_or(1, |m| m + 1);
        for g in 0..n_sub {
            let members: Vec<usize> = (0..n).filter(|&i| best.0[i] == g).collect();
            let paths = if members.len() >= 2 {
                search.run(&members, &group_set, Level::Subgroup, Some(g), &mut notes)
            } else {
                Vec::new()
            };
            subgroup_paths.push(paths);
        }
        assignment = Some(best);
    }

    let persons: Vec<(PersonGimme, Vec<GimmeNote>)> = moments
        .par_iter()
        .enumerate()
        .map(|(i, m)| {
            let mut person_notes = Vec::new();
            let sub = assignment.as_ref().map(|(a, _)| a[i]);
            let mut levels: BTreeMap<Path, Level> = group_paths.iter().map(|&q| (q, Level::Group)).collect();
            let mut fits = Vec::new();
            let mut model = group_set.clone();
            let (ll, bic) = person_fit(m, &model);
            fits.push(FitRecord { stage: Stage::Group, log_likelihood: ll, bic, n_paths: model.len() });
            if let Some(g) = sub {
                for &q in &subgroup_paths[g] {
                    model.insert(q);
                    levels.insert(q, Level::Subgroup);
                }
                let (ll, bic) = person_fit(m, &model);
                fits.push(FitRecord { stage: Stage::Subgroup, log_likelihood: ll, bic, n_paths: model.len() });
            }
            let mut rejected = BTreeSet::new();
            while model.len() < max_paths {
                let mut best: Option<(Path, f64)> = None;
                for &c in &cands {
                    if model.contains(&c) {
                        continue;
                    }
                    if creates_cycle(&model, c) {
                        if rejected.insert(c) {
                            person_notes.push(GimmeNote::CycleRejected {
                                level: Level::Individual,
                                person: Some(ids[i].clone()),
                                subgroup: sub,
                                path: c,
                            });
                        }
                        continue;
                    }
                    let d = bic_change(m, &model, c, true);
                    if d < 0.0 && best.is_none_or(|(_, bd)| d < bd) {
                        best = Some((c, d));
                    }
                }
                match best {
                    Some((c, _)) => {
                        model.insert(c);
                        levels.insert(c, Level::Individual);
                    }
                    None => break,
                }
            }
            let (ll, bic) = person_fit(m, &model);
            fits.push(FitRecord { stage: Stage::Final, log_likelihood: ll, bic, n_paths: model.len() });
            let (a, phi, var) = estimate(m, &model);
            let person = PersonGimme {
                person_id: ids[i].clone(),
                subgroup: sub,
                paths: levels.into_iter().collect(),
                contemporaneous: a,
                temporal: phi,
                residual_variances: var,
                fits,
            };
            (person, person_notes)
        })
        .collect();
    let mut people = Vec::with_capacity(n);
    for (person, person_notes) in persons {
        notes.extend(person_notes);
        people.push(person);
    }

    let all: Vec<&PersonGimme> = people.iter().collect();
    let (group_contemporaneous, group_temporal) = mean_coefficients(&all, &group_paths, p);
    let subgroups = assignment.map(|(assignment, silhouette)| {
        let (mut ca, mut ta) = (Vec::new(), Vec::new());
        for (g, paths) in subgroup_paths.iter().enumerate() {
            let members: Vec<&PersonGimme> = people.iter().filter(|r| r.subgroup == Some(g)).collect();
            let (a, phi) = mean_coefficients(&members, paths, p);
            ca.push(a);
            ta.push(phi);
        }
        SubgroupInfo { assignment, silhouette, paths: subgroup_paths, contemporaneous: ca, temporal: ta }
    });
    Ok(GimmeResult { p, group_paths, group_contemporaneous, group_temporal, subgroups, persons: people, notes })
}

/// Simulates `x_t = A x_t + Φ x_{t−1} + ε_t` with independent
/// `ε_{i,t} ~ N(0, noise_sd_i²)`, discarding a burn-in.
pub fn simulate_usem(
    a: &DMatrix<f64>,
    phi: &DMatrix<f64>,
    noise_sd: &[f64],
    t: usize,
    seed: u64,
) -> Result<DMatrix<f64>, VarError> {
    let p = a.nrows();
    if a.shape() != (p, p) || phi.shape() != (p, p) || noise_sd.len() != p {
        return Err(VarError::Invalid("inconsistent uSEM dimensions".into()));
    }
    let inv = (DMatrix::identity(p, p) - a).try_inverse().ok_or(VarError::Invalid("I - A is singular".into()))?;
    let transition = &inv * phi;
    let radius = linalg::spectral_radius(&transition);
    if radius >= 1.0 {
        return Err(VarError::UnstableModel(radius));
    }
    let mut rng = rng::seeded(seed);
    let mut x = DVector::zeros(p);
    let mut out = DMatrix::zeros(t, p);
    for step in 0..(SIMULATION_BURN_IN + t) {
        let e = DVector::from_fn(p, |i, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            noise_sd[i] * z
        });
        x = &inv * (phi * &x + e);
        if step >= SIMULATION_BURN_IN {
            out.set_row(step - SIMULATION_BURN_IN, &x.transpose());
        }
    }
    Ok(out)
}
