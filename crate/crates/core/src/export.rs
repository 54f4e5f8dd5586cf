//! Text exports: GraphML and DOT networks, CSV matrices and PBM bitmaps.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::graph::Graph;
use crate::recurrence::RecurrenceMatrix;
use crate::var::{Level, PathKind, PersonGimme};

#[derive(Debug, Clone, PartialEq)]
pub struct ExportEdge {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
    /// Extra string attributes such as `level` or `kind`.
    pub attrs: Vec<(&'static str, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub labels: Vec<String>,
    pub directed: bool,
    pub edges: Vec<ExportEdge>,
}

fn edge(source: usize, target: usize, weight: f64) -> ExportEdge {
    ExportEdge { source, target, weight, attrs: Vec::new() }
}

impl Network {
    /// Upper-triangle entries with `|w| > tol` of a symmetric weight matrix.
    pub fn undirected(labels: &[String], weights: &DMatrix<f64>, tol: f64) -> Self {
        let p = weights.nrows();
        let mut edges = Vec::new();
        for i in 0..p {
            for j in (i + 1)..p {
                if weights[(i, j)].abs() > tol {
                    edges.push(edge(i, j, weights[(i, j)]));
                }
            }
        }
        Network { labels: labels.to_vec(), directed: false, edges }
    }

    /// Entries of a `[to][from]` coefficient matrix with `|w| > tol`, as
    /// edges `from → to`. Self-loops are kept.
    pub fn directed(labels: &[String], coefficients: &DMatrix<f64>, tol: f64) -> Self {
        let p = coefficients.nrows();
        let mut edges = Vec::new();
        for from in 0..p {
            for to in 0..p {
                if coefficients[(to, from)].abs() > tol {
                    edges.push(edge(from, to, coefficients[(to, from)]));
                }
            }
        }
        Network { labels: labels.to_vec(), directed: true, edges }
    }

    /// Unweighted graph; every edge has weight 1.
    pub fn from_graph(labels: &[String], g: &Graph) -> Self {
        Network {
            labels: labels.to_vec(),
            directed: false,
            edges: g.edges().into_iter().map(|(i, j)| edge(i, j, 1.0)).collect(),
        }
    }

    /// A person's GIMME paths with `kind` and `level` attributes.
    pub fn gimme(labels: &[String], person: &PersonGimme) -> Self {
        let edges = person
            .paths
            .iter()
            .map(|(path, level)| {
                let weight = match path.kind {
                    PathKind::Contemporaneous => person.contemporaneous[(path.to, path.from)],
                    PathKind::Lagged => person.temporal[(path.to, path.from)],
                };
                let kind = match path.kind {
                    PathKind::Contemporaneous => "contemporaneous",
                    PathKind::Lagged => "lagged",
                };
                let level = match level {
                    Level::Group => "group",
                    Level::Subgroup => "subgroup",
                    Level::Individual => "individual",
                };
                ExportEdge {
                    source: path.from,
                    target: path.to,
                    weight,
                    attrs: vec![("kind", kind.to_string()), ("level", level.to_string())],
                }
            })
            .collect();
        Network { labels: labels.to_vec(), directed: true, edges }
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;").replace('\'', "&apos;")
}

fn attr_keys(net: &Network) -> Vec<&'static str> {
    let mut keys: Vec<&'static str> = net.edges.iter().flat_map(|e| e.attrs.iter().map(|a| a.0)).collect();
    keys.sort_unstable();
    keys.dedup();
    keys
}

pub fn to_graphml(net: &Network) -> String {
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str("<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n");
    s.push_str("  <key id=\"label\" for=\"node\" attr.name=\"label\" attr.type=\"string\"/>\n");
    s.push_str("  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"double\"/>\n");
    for k in attr_keys(net) {
        let _ = writeln!(s, "  <key id=\"{k}\" for=\"edge\" attr.name=\"{k}\" attr.type=\"string\"/>");
    }
    let kind = if net.directed { "directed" } else { "undirected" };
    let _ = writeln!(s, "  <graph id=\"G\" edgedefault=\"{kind}\">");
    for (i, label) in net.labels.iter().enumerate() {
        let _ = writeln!(s, "    <node id=\"n{i}\"><data key=\"label\">{}</data></node>", xml_escape(label));
    }
    for (k, e) in net.edges.iter().enumerate() {
        let _ = write!(
            s,
            "    <edge id=\"e{k}\" source=\"n{}\" target=\"n{}\"><data key=\"weight\">{:?}</data>",
            e.source, e.target, e.weight
        );
        for (key, value) in &e.attrs {
            let _ = write!(s, "<data key=\"{key}\">{}</data>", xml_escape(value));
        }
        s.push_str("</edge>\n");
    }
    s.push_str("  </graph>\n</graphml>\n");
    s
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

pub fn to_dot(net: &Network) -> String {
    let (head, arrow) = if net.directed { ("digraph", "->") } else { ("graph", "--") };
    let mut s = format!("{head} G {{\n");
    for (i, label) in net.labels.iter().enumerate() {
        let _ = writeln!(s, "  n{i} [label=\"{}\"];", dot_escape(label));
    }
    for e in &net.edges {
        let _ = write!(s, "  n{} {arrow} n{} [weight={:?}", e.source, e.target, e.weight);
        for (key, value) in &e.attrs {
            let _ = write!(s, ", {key}=\"{}\"", dot_escape(value));
        }
        s.push_str("];\n");
    }
    s.push_str("}\n");
    s
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Matrix as CSV. With labels, a header row and a leading label column are
/// added; values use the shortest round-trip float form.
pub fn matrix_csv(m: &DMatrix<f64>, labels: Option<&[String]>) -> String {
    let mut s = String::new();
    if let Some(l) = labels {
        let header: Vec<String> = std::iter::once(String::new()).chain(l.iter().map(|x| csv_field(x))).collect();
        s.push_str(&header.join(","));
        s.push('\n');
    }
    for i in 0..m.nrows() {
        let mut row: Vec<String> = m.row(i).iter().map(|v| format!("{v:?}")).collect();
        if let Some(l) = labels {
            row.insert(0, csv_field(&l[i]));
        }
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// Plain PBM (`P1`): `1` marks a recurrent cell. Raster lines are wrapped at
/// 70 characters, each matrix row starting on a new line.
pub fn recurrence_pbm(rm: &RecurrenceMatrix) -> String {
    let t = rm.t();
    let mut s = format!("P1\n{t} {t}\n");
    for i in 0..t {
        let row: Vec<u8> = (0..t).map(|j| if rm.get(i, j) { b'1' } else { b'0' }).collect();
        for chunk in row.chunks(70) {
            s.push_str(std::str::from_utf8(chunk).unwrap());
            s.push('\n');
        }
    }
    s
}

/// Parses a plain PBM into rows of bits.
pub fn parse_pbm(text: &str) -> Result<Vec<Vec<bool>>, String> {
    let body: String = text.lines().map(|l| l.split('#').next().unwrap_or("")).collect::<Vec<_>>().join("\n");
    let mut tokens = body.split_whitespace();
    if tokens.next() != Some("P1") {
        return Err("not a plain PBM".into());
    }
    let mut dim = || tokens.next().and_then(|v| v.parse::<usize>().ok()).ok_or("missing dimensions");
    let (w, h) = (dim()?, dim()?);
    let bits: Vec<bool> = body
        .split_whitespace()
        .skip(3)
        .flat_map(|tok| tok.chars())
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(format!("invalid raster character {c:?}")),
        })
        .collect::<Result<_, _>>()?;
    if bits.len() != w * h {
        return Err(format!("expected {} pixels, found {}", w * h, bits.len()));
    }
    Ok(bits.chunks(w.max(1)).map(<[bool]>::to_vec).take(h).collect())
}
