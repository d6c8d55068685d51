use std::collections::HashMap;

use super::Point;

/// Append-only sample history; its prefix of length `n + 1` is the
/// empirical measure `θ_n`, uniform over the first `n + 1` entries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmpiricalMeasure {
    samples: Vec<Point>,
}

impl EmpiricalMeasure {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_initial(x0: Point) -> Self {
        Self { samples: vec![x0] }
    }

    pub fn push(&mut self, x: Point) {
        self.samples.push(x);
    }

    pub fn count(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Point] {
        &self.samples
    }

    /// The first `len` entries.
    pub fn prefix(&self, len: usize) -> &[Point] {
        &self.samples[..len.min(self.samples.len())]
    }

    /// `θ(f)` over the first `len` entries.
    pub fn expectation<F: Fn(&Point) -> f64>(&self, len: usize, f: F) -> f64 {
        let p = self.prefix(len);
        p.iter().map(f).sum::<f64>() / p.len() as f64
    }

    /// Groups bitwise-equal samples into atoms.
    pub fn atoms(&self) -> AtomIndex {
        let mut ids = Vec::with_capacity(self.samples.len());
        let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
        for s in &self.samples {
            let key: Vec<u64> = s.iter().map(|v| v.to_bits()).collect();
            let next = seen.len();
            ids.push(*seen.entry(key).or_insert(next));
        }
        AtomIndex { ids, n_atoms: seen.len() }
    }
}

/// Atom labels of a history, for exact distances between prefixes.
#[derive(Debug, Clone)]
pub struct AtomIndex {
    ids: Vec<usize>,
    n_atoms: usize,
}

impl AtomIndex {
    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    /// Exact `Σ_atoms |θ_a(atom) − θ_b(atom)|` between the uniform measures
    /// on the first `len_a` and the first `len_b` samples.
    pub fn prefix_tv(&self, len_a: usize, len_b: usize) -> f64 {
        assert!(len_a >= 1 && len_b >= 1 && len_a <= self.ids.len() && len_b <= self.ids.len());
        let (short, long) = if len_a <= len_b { (len_a, len_b) } else { (len_b, len_a) };
        let mut count_short = vec![0u64; self.n_atoms];
        let mut count_long = vec![0u64; self.n_atoms];
        for (k, &id) in self.ids[..long].iter().enumerate() {
            count_long[id] += 1;
            if k < short {
                count_short[id] += 1;
            }
        }
        let (ws, wl) = (short as f64, long as f64);
        count_short
            .iter()
            .zip(&count_long)
            .filter(|(s, l)| **s > 0 || **l > 0)
            .map(|(&s, &l)| (s as f64 / ws - l as f64 / wl).abs())
            .sum()
    }
}
