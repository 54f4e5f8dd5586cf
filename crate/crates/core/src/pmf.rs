//! Probability mass functions over binary configurations.
//!
//! Configurations are enumerated canonically: variable `i` takes its "high"
//! state (+1 or 1) exactly when bit `i` of the configuration index is set.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coding {
    /// States in {-1, +1}.
    PlusMinus,
    /// States in {0, 1}.
    ZeroOne,
}

impl Coding {
    pub fn low(self) -> f64 {
        match self {
            Coding::PlusMinus => -1.0,
            Coding::ZeroOne => 0.0,
        }
    }

    pub fn state(self, high: bool) -> f64 {
        if high {
            1.0
        } else {
            self.low()
        }
    }

    pub fn other(self) -> Coding {
        match self {
            Coding::PlusMinus => Coding::ZeroOne,
            Coding::ZeroOne => Coding::PlusMinus,
        }
    }
}

/// State vector of configuration `index` on `p` variables.
pub fn config_states(index: usize, p: usize, coding: Coding) -> Vec<f64> {
    (0..p).map(|i| coding.state(index >> i & 1 == 1)).collect()
}

/// Configuration index of a state vector; `None` when a value is not a valid
/// state of `coding`.
pub fn config_index(states: &[f64], coding: Coding) -> Option<usize> {
    let mut k = 0usize;
    for (i, &v) in states.iter().enumerate() {
        if v == 1.0 {
            k |= 1 << i;
        } else if v != coding.low() {
            return None;
        }
    }
    Some(k)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pmf {
    pub p: usize,
    pub coding: Coding,
    pub probs: Vec<f64>,
}

impl Pmf {
    /// Normalizes unnormalized log-weights with a max shift.
    pub fn from_log_weights(p: usize, coding: Coding, logw: &[f64]) -> Pmf {
        let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = logw.iter().map(|l| (l - max).exp()).collect();
        Pmf::from_weights(p, coding, &w)
    }

    pub fn from_weights(p: usize, coding: Coding, w: &[f64]) -> Pmf {
        assert_eq!(w.len(), 1 << p);
        let z: f64 = w.iter().sum();
        Pmf { p, coding, probs: w.iter().map(|x| x / z).collect() }
    }

    pub fn uniform(p: usize, coding: Coding) -> Pmf {
        Pmf::from_weights(p, coding, &vec![1.0; 1 << p])
    }

    /// Relative frequencies of sampled rows.
    pub fn empirical<'a, I>(p: usize, coding: Coding, rows: I) -> Pmf
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut counts = vec![0.0; 1 << p];
        for row in rows {
            let k = config_index(row, coding).expect("sample row not in coding");
            counts[k] += 1.0;
        }
        Pmf::from_weights(p, coding, &counts)
    }

    pub fn prob(&self, states: &[f64]) -> f64 {
        config_index(states, self.coding).map_or(0.0, |k| self.probs[k])
    }

    /// Total-variation distance, matching configurations by index so that a
    /// pmf and its recoded counterpart compare state-for-state.
    pub fn tv(&self, other: &Pmf) -> f64 {
        assert_eq!(self.p, other.p, "pmfs over different variable counts");
        0.5 * self.probs.iter().zip(&other.probs).map(|(a, b)| (a - b).abs()).sum::<f64>()
    }

    /// CSV with one column per variable (state in the pmf's coding) followed
    /// by the probability.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let header: Vec<String> = (1..=self.p).map(|i| format!("x{i}")).collect();
        s.push_str(&header.join(","));
        if self.p > 0 {
            s.push(',');
        }
        s.push_str("prob\n");
        for (k, pr) in self.probs.iter().enumerate() {
            for v in config_states(k, self.p, self.coding) {
                s.push_str(&format!("{},", v as i64));
            }
            s.push_str(&format!("{pr:?}\n"));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip() {
        for k in 0..16 {
            for c in [Coding::PlusMinus, Coding::ZeroOne] {
                assert_eq!(config_index(&config_states(k, 4, c), c), Some(k));
            }
        }
        assert_eq!(config_index(&[0.5], Coding::ZeroOne), None);
    }

    #[test]
    fn csv_layout() {
        let pmf = Pmf::from_weights(1, Coding::PlusMinus, &[1.0, 3.0]);
        assert_eq!(pmf.to_csv(), "x1,prob\n-1,0.25\n1,0.75\n");
    }
}
