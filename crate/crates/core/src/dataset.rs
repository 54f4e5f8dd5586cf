//! Intensive longitudinal data: CSV ingestion, validation and preprocessing.
//!
//! A dataset is a list of persons, each with rows ordered by `(day, beep)` and
//! one value per item. Missing cells are kept as `None` until preprocessing
//! decides what to do with them.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("non-numeric cell at row {row}, column `{column}`: {value:?}")]
    NonNumericCell { row: usize, column: String, value: String },
    #[error("duplicate time index (day {day}, beep {beep}) for person `{person}`")]
    DuplicateTimeIndex { person: String, day: i64, beep: i64 },
    #[error("person `{person}` has no observed values for item `{item}`")]
    AllMissingItem { person: String, item: String },
    #[error("person `{person}` has no complete rows after row drop")]
    AllRowsDropped { person: String },
    #[error("invalid dataset: {0}")]
    Invalid(String),
}

/// Maps the CSV header onto the dataset roles.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnSchema {
    pub id: String,
    pub day: String,
    pub beep: String,
    pub items: Vec<String>,
    #[serde(default)]
    pub group: Option<String>,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
}

fn default_delimiter() -> char {
    ','
}

impl ColumnSchema {
    pub fn new(id: &str, day: &str, beep: &str, items: &[&str]) -> Self {
        ColumnSchema {
            id: id.to_string(),
            day: day.to_string(),
            beep: beep.to_string(),
            items: items.iter().map(|s| s.to_string()).collect(),
            group: None,
            delimiter: ',',
        }
    }

    pub fn with_group(mut self, group: &str) -> Self {
        self.group = Some(group.to_string());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub day: i64,
    pub beep: i64,
    pub values: Vec<Option<f64>>,
}

impl Observation {
    pub fn is_complete(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonSeries {
    pub person_id: String,
    pub rows: Vec<Observation>,
}

impl PersonSeries {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Complete rows only, as a `T x P` matrix, together with the kept rows'
    /// original indices.
    pub fn complete_matrix(&self) -> (DMatrix<f64>, Vec<usize>) {
        let kept: Vec<usize> = (0..self.rows.len()).filter(|&t| self.rows[t].is_complete()).collect();
        let p = self.rows.first().map_or(0, |r| r.values.len());
        let m = DMatrix::from_fn(kept.len(), p, |i, j| self.rows[kept[i]].values[j].unwrap());
        (m, kept)
    }

    /// Per-item means over observed cells.
    pub fn item_means(&self) -> Vec<f64> {
        let p = self.rows.first().map_or(0, |r| r.values.len());
        (0..p)
            .map(|j| {
                let (s, n) =
                    self.rows.iter().filter_map(|r| r.values[j]).fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
                if n == 0 {
                    f64::NAN
                } else {
                    s / n as f64
                }
            })
            .collect()
    }

    /// Builds the lag-1 design for this person from complete rows.
    ///
    /// A pair of consecutive complete rows is a valid lag pair when both sit on
    /// the same day with consecutive beep numbers, or, with `night_break`
    /// disabled, when they sit on different days.
    pub fn to_series(&self, night_break: bool) -> crate::var::Series {
        let (values, kept) = self.complete_matrix();
        let mut pairs = Vec::new();
        for k in 1..kept.len() {
            let prev = &self.rows[kept[k - 1]];
            let cur = &self.rows[kept[k]];
            let ok = if prev.day == cur.day { cur.beep == prev.beep + 1 } else { !night_break };
            if ok {
                pairs.push((k - 1, k));
            }
        }
        crate::var::Series::with_pairs(values, pairs)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingMeta {
    /// Largest number of beeps observed on any single person-day.
    pub beeps_per_day: usize,
    pub has_day_index: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IldDataset {
    pub persons: Vec<PersonSeries>,
    pub item_names: Vec<String>,
    pub group_labels: Option<Vec<String>>,
    pub sampling_meta: SamplingMeta,
    /// Whether lag-1 pairs may span two days.
    #[serde(default = "default_true")]
    pub night_break: bool,
}

fn default_true() -> bool {
    true
}

impl IldDataset {
    pub fn n_items(&self) -> usize {
        self.item_names.len()
    }

    pub fn n_persons(&self) -> usize {
        self.persons.len()
    }

    /// Checks every structural invariant of the dataset.
    pub fn validate(&self) -> Result<(), DatasetError> {
        let p = self.item_names.len();
        if p == 0 {
            return Err(DatasetError::Invalid("no items".into()));
        }
        if let Some(g) = &self.group_labels {
            if g.len() != self.persons.len() {
                return Err(DatasetError::Invalid("group label count differs from person count".into()));
            }
        }
        for person in &self.persons {
            if person.rows.is_empty() {
                return Err(DatasetError::Invalid(format!("person `{}` has no rows", person.person_id)));
            }
            for w in person.rows.windows(2) {
                let (a, b) = ((w[0].day, w[0].beep), (w[1].day, w[1].beep));
                if a == b {
                    return Err(DatasetError::DuplicateTimeIndex {
                        person: person.person_id.clone(),
                        day: a.0,
                        beep: a.1,
                    });
                }
                if a > b {
                    return Err(DatasetError::Invalid(format!(
                        "rows of person `{}` are not sorted by (day, beep)",
                        person.person_id
                    )));
                }
            }
            for row in &person.rows {
                if row.values.len() != p {
                    return Err(DatasetError::Invalid("row width differs from item count".into()));
                }
                if row.values.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(DatasetError::Invalid("non-finite cell".into()));
                }
            }
        }
        Ok(())
    }

    /// Persons carrying the given group label, in dataset order.
    pub fn subset_group(&self, label: &str) -> IldDataset {
        let labels = self.group_labels.as_ref();
        let idx: Vec<usize> = (0..self.persons.len()).filter(|&i| labels.is_some_and(|g| g[i] == label)).collect();
        IldDataset {
            persons: idx.iter().map(|&i| self.persons[i].clone()).collect(),
            item_names: self.item_names.clone(),
            group_labels: labels.map(|g| idx.iter().map(|&i| g[i].clone()).collect()),
            sampling_meta: self.sampling_meta.clone(),
            night_break: self.night_break,
        }
    }

    /// Distinct group labels in order of first appearance.
    pub fn groups(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for g in self.group_labels.iter().flatten() {
            if !out.contains(g) {
                out.push(g.clone());
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String, DatasetError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, DatasetError> {
        let data: IldDataset = serde_json::from_str(text)?;
        data.validate()?;
        Ok(data)
    }

    /// Writes the dataset back out as CSV in the layout described by `schema`.
    pub fn write_csv<W: std::io::Write>(&self, schema: &ColumnSchema, out: W) -> Result<(), DatasetError> {
        let mut w = csv::WriterBuilder::new().delimiter(schema.delimiter as u8).from_writer(out);
        let mut header = vec![schema.id.clone()];
        if let Some(g) = &schema.group {
            header.push(g.clone());
        }
        header.push(schema.day.clone());
        header.push(schema.beep.clone());
        header.extend(self.item_names.iter().cloned());
        w.write_record(&header)?;
        for (i, person) in self.persons.iter().enumerate() {
            for row in &person.rows {
                let mut rec = vec![person.person_id.clone()];
                if schema.group.is_some() {
                    rec.push(self.group_labels.as_ref().map_or(String::new(), |g| g[i].clone()));
                }
                rec.push(row.day.to_string());
                rec.push(row.beep.to_string());
                rec.extend(row.values.iter().map(|v| v.map_or_else(|| "NA".to_string(), |x| format!("{x:?}"))));
                w.write_record(&rec)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn is_missing(cell: &str) -> bool {
    let c = cell.trim();
    c.is_empty() || c == "NA"
}

fn parse_index(cell: &str, row: usize, column: &str) -> Result<i64, DatasetError> {
    let bad = || DatasetError::NonNumericCell { row, column: column.to_string(), value: cell.to_string() };
    let c = cell.trim();
    if let Ok(v) = c.parse::<i64>() {
        return Ok(v);
    }
    match c.parse::<f64>() {
        Ok(v) if v.is_finite() && v.fract() == 0.0 => Ok(v as i64),
        _ => Err(bad()),
    }
}

/// Loads an ILD CSV file.
pub fn load_ild(path: impl AsRef<Path>, schema: &ColumnSchema) -> Result<IldDataset, DatasetError> {
    let file = std::fs::File::open(path)?;
    read_ild(file, schema)
}

/// Parses ILD CSV from any reader. Rows are grouped by person in order of
/// first appearance and sorted by `(day, beep)` within each person.
pub fn read_ild<R: Read>(reader: R, schema: &ColumnSchema) -> Result<IldDataset, DatasetError> {
    if schema.items.is_empty() {
        return Err(DatasetError::Invalid("schema names no item columns".into()));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter as u8)
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers.iter().position(|h| h.trim() == name).ok_or_else(|| DatasetError::MissingColumn(name.to_string()))
    };
    let id_col = find(&schema.id)?;
    let day_col = find(&schema.day)?;
    let beep_col = find(&schema.beep)?;
    let group_col = schema.group.as_deref().map(find).transpose()?;
    let item_cols: Vec<usize> = schema.items.iter().map(|s| find(s)).collect::<Result<_, _>>()?;

    let mut order: Vec<String> = Vec::new();
    let mut by_person: HashMap<String, (Vec<Observation>, Option<String>)> = HashMap::new();
    for (k, record) in rdr.records().enumerate() {
        let record = record?;
        // 1-based data row number, header excluded
        let row = k + 1;
        let id = record[id_col].trim().to_string();
        let day = parse_index(&record[day_col], row, &schema.day)?;
        let beep = parse_index(&record[beep_col], row, &schema.beep)?;
        let mut values = Vec::with_capacity(item_cols.len());
        for (&c, name) in item_cols.iter().zip(&schema.items) {
            let cell = &record[c];
            if is_missing(cell) {
                values.push(None);
            } else {
                match cell.trim().parse::<f64>() {
                    Ok(v) if v.is_finite() => values.push(Some(v)),
                    _ => {
                        return Err(DatasetError::NonNumericCell { row, column: name.clone(), value: cell.to_string() })
                    }
                }
            }
        }
        let group = group_col.map(|c| record[c].trim().to_string());
        let entry = by_person.entry(id.clone()).or_insert_with(|| {
            order.push(id.clone());
            (Vec::new(), group.clone())
        });
        if entry.1 != group {
            return Err(DatasetError::Invalid(format!("person `{id}` has more than one group label")));
        }
        entry.0.push(Observation { day, beep, values });
    }
    if order.is_empty() {
        return Err(DatasetError::Invalid("no data rows".into()));
    }

    let mut persons = Vec::with_capacity(order.len());
    let mut labels = Vec::with_capacity(order.len());
    let mut beeps_per_day = 0usize;
    for id in order {
        let (mut rows, group) = by_person.remove(&id).unwrap();
        rows.sort_by_key(|r| (r.day, r.beep));
        for w in rows.windows(2) {
            if (w[0].day, w[0].beep) == (w[1].day, w[1].beep) {
                return Err(DatasetError::DuplicateTimeIndex { person: id, day: w[0].day, beep: w[0].beep });
            }
        }
        let mut run = 0usize;
        for (i, r) in rows.iter().enumerate() {
            run = if i > 0 && rows[i - 1].day == r.day { run + 1 } else { 1 };
            beeps_per_day = beeps_per_day.max(run);
        }
        labels.push(group.unwrap_or_default());
        persons.push(PersonSeries { person_id: id, rows });
    }
    let data = IldDataset {
        persons,
        item_names: schema.items.clone(),
        group_labels: group_col.map(|_| labels),
        sampling_meta: SamplingMeta { beeps_per_day, has_day_index: true },
        night_break: true,
    };
    data.validate()?;
    Ok(data)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Centering {
    #[default]
    WithinPerson,
    Global,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Detrend {
    LinearPerPerson,
    #[default]
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MissingPolicy {
    #[default]
    ListwiseRowDrop,
    Pairwise,
}

/// Defaults: within-person centering, no detrending, listwise row drop and
/// no lag pairs across nights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreprocessOptions {
    pub center: Centering,
    pub detrend: Detrend,
    pub missing: MissingPolicy,
    pub night_break: bool,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        PreprocessOptions {
            center: Centering::WithinPerson,
            detrend: Detrend::None,
            missing: MissingPolicy::ListwiseRowDrop,
            night_break: true,
        }
    }
}

/// Applies row drop, detrending and centering, in that order.
pub fn preprocess(data: &IldDataset, opts: &PreprocessOptions) -> Result<IldDataset, DatasetError> {
    data.validate()?;
    let p = data.n_items();
    for person in &data.persons {
        for j in 0..p {
            if person.rows.iter().all(|r| r.values[j].is_none()) {
                return Err(DatasetError::AllMissingItem {
                    person: person.person_id.clone(),
                    item: data.item_names[j].clone(),
                });
            }
        }
    }

    let mut out = data.clone();
    out.night_break = opts.night_break;

    if opts.missing == MissingPolicy::ListwiseRowDrop {
        for person in &mut out.persons {
            person.rows.retain(Observation::is_complete);
            if person.rows.is_empty() {
                return Err(DatasetError::AllRowsDropped { person: person.person_id.clone() });
            }
        }
    }

    if opts.detrend == Detrend::LinearPerPerson {
        for person in &mut out.persons {
            for j in 0..p {
                detrend_item(person, j);
            }
        }
    }

    match opts.center {
        Centering::None => {}
        Centering::WithinPerson => {
            for person in &mut out.persons {
                let means = person.item_means();
                for row in &mut person.rows {
                    for (v, m) in row.values.iter_mut().zip(&means) {
                        if let Some(x) = v {
                            *x -= m;
                        }
                    }
                }
            }
        }
        Centering::Global => {
            let mut sums = vec![0.0; p];
            let mut counts = vec![0usize; p];
            for row in out.persons.iter().flat_map(|ps| &ps.rows) {
                for j in 0..p {
                    if let Some(x) = row.values[j] {
                        sums[j] += x;
                        counts[j] += 1;
                    }
                }
            }
            let means: Vec<f64> = sums.iter().zip(&counts).map(|(s, &n)| s / n as f64).collect();
            for row in out.persons.iter_mut().flat_map(|ps| ps.rows.iter_mut()) {
                for (v, m) in row.values.iter_mut().zip(&means) {
                    if let Some(x) = v {
                        *x -= m;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Removes the least-squares line in row index from one item, using observed
/// cells only.
fn detrend_item(person: &mut PersonSeries, item: usize) {
    let pts: Vec<(f64, f64)> =
        person.rows.iter().enumerate().filter_map(|(t, r)| r.values[item].map(|v| (t as f64, v))).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    for (t, row) in person.rows.iter_mut().enumerate() {
        if let Some(v) = &mut row.values[item] {
            *v -= my + slope * (t as f64 - mx);
        }
    }
}
