//! Recurrence quantification: recurrence rate, determinism and laminarity.
//!
//! Cells with `|i − j| < theiler` are excluded from every count. Diagonal
//! lines are scanned on the remaining diagonals. Vertical lines are scanned
//! on whole columns so that a run passing through the main diagonal stays a
//! single line; only its cells outside the Theiler window are counted.

use serde::{Deserialize, Serialize};

use super::RecurrenceMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RqaOptions {
    pub l_min: usize,
    pub v_min: usize,
    /// Diagonals `|i − j| < theiler` are excluded; 1 removes the main
    /// diagonal only.
    pub theiler: usize,
}

impl Default for RqaOptions {
    fn default() -> Self {
        RqaOptions { l_min: 2, v_min: 2, theiler: 1 }
    }
}

/// `None` marks a statistic whose denominator is empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RqaSummary {
    pub rr: f64,
    pub det: Option<f64>,
    pub l_mean: Option<f64>,
    pub l_max: Option<usize>,
    pub lam: Option<f64>,
    /// Mean length of vertical lines of length at least `v_min`.
    pub trapping_time: Option<f64>,
    pub l_min: usize,
    pub v_min: usize,
    pub theiler: usize,
}

fn counted(i: usize, j: usize, theiler: usize) -> bool {
    i.abs_diff(j) >= theiler
}

pub(crate) fn recurrence_rate(rm: &RecurrenceMatrix, theiler: usize) -> f64 {
    let t = rm.t();
    let mut cells = 0usize;
    let mut hits = 0usize;
    for i in 0..t {
        for j in 0..t {
            if counted(i, j, theiler) {
                cells += 1;
                hits += rm.get(i, j) as usize;
            }
        }
    }
    if cells == 0 {
        0.0
    } else {
        hits as f64 / cells as f64
    }
}

/// Lengths of maximal runs of `true` in `cells`.
fn runs(cells: impl Iterator<Item = bool>) -> Vec<usize> {
    let mut out = Vec::new();
    let mut len = 0;
    for c in cells {
        if c {
            len += 1;
        } else if len > 0 {
            out.push(len);
            len = 0;
        }
    }
    if len > 0 {
        out.push(len);
    }
    out
}

pub fn rqa(rm: &RecurrenceMatrix, opts: &RqaOptions) -> RqaSummary {
    let t = rm.t();
    let w = opts.theiler;
    let l_min = opts.l_min.max(1);
    let v_min = opts.v_min.max(1);
    let rr = recurrence_rate(rm, w);

    let mut points = 0usize;
    for i in 0..t {
        for j in 0..t {
            if counted(i, j, w) && rm.get(i, j) {
                points += 1;
            }
        }
    }

    let mut diag_points = 0usize;
    let mut diag_lines = Vec::new();
    for k in 1..t {
        if k < w {
            continue;
        }
        // upper and lower diagonals are mirror images
        for len in runs((0..t - k).map(|i| rm.get(i, i + k))) {
            if len >= l_min {
                diag_points += 2 * len;
                diag_lines.push(len);
                diag_lines.push(len);
            }
        }
    }
    if w == 0 {
        for len in runs((0..t).map(|i| rm.get(i, i))) {
            if len >= l_min {
                diag_points += len;
                diag_lines.push(len);
            }
        }
    }

    let mut vert_points = 0usize;
    let mut vert_lines = Vec::new();
    for j in 0..t {
        let mut i = 0;
        while i < t {
            if !rm.get(i, j) {
                i += 1;
                continue;
            }
            let start = i;
            while i < t && rm.get(i, j) {
                i += 1;
            }
            if i - start >= v_min {
                vert_points += (start..i).filter(|&r| counted(r, j, w)).count();
                vert_lines.push(i - start);
            }
        }
    }

    let ratio = |num: usize| (points > 0).then(|| num as f64 / points as f64);
    let mean = |lines: &[usize]| (!lines.is_empty()).then(|| lines.iter().sum::<usize>() as f64 / lines.len() as f64);
    RqaSummary {
        rr,
        det: ratio(diag_points),
        l_mean: mean(&diag_lines),
        l_max: diag_lines.iter().copied().max(),
        lam: ratio(vert_points),
        trapping_time: mean(&vert_lines),
        l_min,
        v_min,
        theiler: w,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recurrence::Norm;

    fn from_fn(t: usize, f: impl Fn(usize, usize) -> bool) -> RecurrenceMatrix {
        let rows: Vec<Vec<bool>> = (0..t).map(|i| (0..t).map(|j| i == j || f(i, j)).collect()).collect();
        RecurrenceMatrix::from_rows(&rows, 1.0, Norm::Euclidean).unwrap()
    }

    #[test]
    fn all_ones() {
        for t in [4usize, 10] {
            let s = rqa(&from_fn(t, |_, _| true), &RqaOptions::default());
            assert_eq!(s.rr, 1.0);
            assert_eq!(s.lam, Some(1.0));
            // the two corner cells are isolated length-1 diagonals
            let n = (t * (t - 1)) as f64;
            assert!((s.det.unwrap() - (n - 2.0) / n).abs() < 1e-15);
            assert_eq!(s.l_max, Some(t - 1));
        }
        let corner_free = rqa(&from_fn(4, |_, _| true), &RqaOptions { l_min: 1, ..Default::default() });
        assert_eq!(corner_free.det, Some(1.0));
    }

    #[test]
    fn identity_is_undefined() {
        let s = rqa(&from_fn(6, |_, _| false), &RqaOptions::default());
        assert_eq!(s.rr, 0.0);
        assert_eq!((s.det, s.l_mean, s.lam, s.l_max), (None, None, None, None));
    }

    #[test]
    fn checkerboard_hand_counts() {
        let s = rqa(&from_fn(6, |i, j| (i + j) % 2 == 0), &RqaOptions::default());
        assert!((s.rr - 0.4).abs() < 1e-15);
        assert_eq!(s.det, Some(1.0));
        assert_eq!(s.l_mean, Some(3.0));
        assert_eq!(s.l_max, Some(4));
        assert_eq!(s.lam, Some(0.0));
        assert_eq!(s.trapping_time, None);
    }

    #[test]
    fn vertical_run_through_diagonal_is_one_line() {
        let pairs = [(0, 1), (1, 2), (0, 3)];
        let rm = from_fn(4, |i, j| pairs.contains(&(i.min(j), i.max(j))));
        let s = rqa(&rm, &RqaOptions::default());
        // columns 0, 1, 2 hold runs of length 2, 3, 2 through the diagonal;
        // column 3 holds two isolated cells
        assert_eq!(s.lam, Some(4.0 / 6.0));
        assert_eq!(s.trapping_time, Some(7.0 / 3.0));
    }
}
