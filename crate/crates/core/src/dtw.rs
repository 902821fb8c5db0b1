//! Banded, slope-constrained dynamic time warping with open ends.
//!
//! The query (indicator) runs along `i`, the reference (admissions) along `j`.
//! Paths are chains of whole step-pattern moves; every query index is matched
//! at least once, every visited cell satisfies `|j - i| <= window`, and with
//! open begin/end the path may start and stop at any reference index.
//!
//! Costs use the asymmetric weighting: each move's sub-step weights sum to its
//! query advance, so the accumulated cost of a complete path carries total
//! weight equal to the query length and dividing by it gives the normalized
//! distance.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_DTW_WINDOW: usize = 35;
/// Largest sequence the exhaustive oracle accepts.
pub const BRUTE_FORCE_MAX_LEN: usize = 12;

/// One sub-step of a move: offset back from the move's end cell and weight.
#[derive(Debug, Clone, Copy)]
struct SubStep {
    di: usize,
    dj: usize,
    weight: f64,
}

/// A move from its anchor `(i - di, j - dj)` to `(i, j)` through the listed
/// cells, nearest-to-anchor first.
#[derive(Debug, Clone, Copy)]
struct Move {
    di: usize,
    dj: usize,
    cells: &'static [SubStep],
}

const TWO_THIRDS: f64 = 2.0 / 3.0;

// Listed in tie-break order: on equal cost the diagonal wins.
const ASYMMETRIC_P2: [Move; 3] = [
    Move {
        di: 1,
        dj: 1,
        cells: &[SubStep { di: 0, dj: 0, weight: 1.0 }],
    },
    // two diagonals then a reference-only step; query advance 2 over 3 cells
    Move {
        di: 2,
        dj: 3,
        cells: &[
            SubStep { di: 1, dj: 2, weight: TWO_THIRDS },
            SubStep { di: 0, dj: 1, weight: TWO_THIRDS },
            SubStep { di: 0, dj: 0, weight: TWO_THIRDS },
        ],
    },
    // two diagonals then a query-only step
    Move {
        di: 3,
        dj: 2,
        cells: &[
            SubStep { di: 2, dj: 1, weight: 1.0 },
            SubStep { di: 1, dj: 0, weight: 1.0 },
            SubStep { di: 0, dj: 0, weight: 1.0 },
        ],
    },
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepPattern {
    /// Sakoe-Chiba asymmetric pattern with slope constraint P = 2.
    #[default]
    #[serde(rename = "asymmetricP2")]
    AsymmetricP2,
}

impl StepPattern {
    fn moves(self) -> &'static [Move] {
        match self {
            StepPattern::AsymmetricP2 => &ASYMMETRIC_P2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StepPattern::AsymmetricP2 => "asymmetricP2",
        }
    }
}

impl fmt::Display for StepPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StepPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "asymmetricP2" | "asymmetric-p2" => Ok(StepPattern::AsymmetricP2),
            other => Err(Error::InvalidParameter(format!("unknown step pattern {other:?}"))),
        }
    }
}

/// Row-major multivariate sequence: `len` time points of `dim` columns each.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequence {
    dim: usize,
    data: Vec<f64>,
}

impl Sequence {
    pub fn univariate(values: &[f64]) -> Self {
        Self {
            dim: 1,
            data: values.to_vec(),
        }
    }

    /// One column per series; all columns must share a length.
    pub fn from_columns<C: AsRef<[f64]>>(columns: &[C]) -> Result<Self> {
        let dim = columns.len();
        if dim == 0 {
            return Err(Error::InvalidParameter("sequence needs at least one column".into()));
        }
        let len = columns[0].as_ref().len();
        if let Some(c) = columns.iter().find(|c| c.as_ref().len() != len) {
            return Err(Error::LengthMismatch(c.as_ref().len(), len));
        }
        let mut data = Vec::with_capacity(len * dim);
        for t in 0..len {
            data.extend(columns.iter().map(|c| c.as_ref()[t]));
        }
        Ok(Self { dim, data })
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }
}

/// Euclidean distance between two observation vectors.
pub fn local_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(a.len(), b.len()));
    }
    Ok(euclid(a, b))
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    if a.len() == 1 {
        return (a[0] - b[0]).abs();
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, Copy)]
pub struct AlignmentQuery<'a> {
    pub query: &'a Sequence,
    pub reference: &'a Sequence,
    pub window: usize,
    pub step: StepPattern,
    pub open_begin: bool,
    pub open_end: bool,
}

impl<'a> AlignmentQuery<'a> {
    /// Default configuration: 35-day band, asymmetric P2, open at both ends.
    pub fn new(query: &'a Sequence, reference: &'a Sequence) -> Self {
        Self {
            query,
            reference,
            window: DEFAULT_DTW_WINDOW,
            step: StepPattern::AsymmetricP2,
            open_begin: true,
            open_end: true,
        }
    }

    pub fn window(mut self, window: usize) -> Self {
        self.window = window;
        self
    }

    pub fn open_ends(mut self, open_begin: bool, open_end: bool) -> Self {
        self.open_begin = open_begin;
        self.open_end = open_end;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.query.dim() != self.reference.dim() {
            return Err(Error::DimensionMismatch(self.query.dim(), self.reference.dim()));
        }
        for s in [self.query, self.reference] {
            if s.len() < 4 {
                return Err(Error::TooShort {
                    needed: 4,
                    got: s.len(),
                });
            }
            if s.data.iter().any(|v| v.is_nan()) {
                return Err(Error::NanInput);
            }
        }
        Ok(())
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        i.abs_diff(j) <= self.window
    }

    fn start_allowed(&self, j: usize) -> bool {
        self.open_begin || j == 0
    }

    fn end_allowed(&self, j: usize) -> bool {
        self.open_end || j + 1 == self.reference.len()
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        euclid(self.query.point(i), self.reference.point(j))
    }

    /// Weighted cost of `mv` ending at `(i, j)`, summed anchor-side first.
    fn move_cost(&self, mv: &Move, i: usize, j: usize) -> f64 {
        let mut s = 0.0;
        for c in mv.cells {
            s += c.weight * self.dist(i - c.di, j - c.dj);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Alignment {
    /// Matched `(query, reference)` index pairs in path order.
    pub pairs: Vec<(usize, usize)>,
    pub cost: f64,
    pub query_len: usize,
}

/// Lead of one query index: matched reference index minus query index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeadTime {
    pub query_index: usize,
    pub lead: f64,
}

impl Alignment {
    pub fn normalized_distance(&self) -> f64 {
        normalized_distance(self)
    }

    pub fn lead_times(&self) -> Vec<LeadTime> {
        lead_times_from_path(self)
    }

    /// Median per-index lead, ignoring the first `skip` query indices.
    pub fn median_lead(&self, skip: usize) -> Option<f64> {
        let leads: Vec<f64> = self
            .lead_times()
            .into_iter()
            .filter(|l| l.query_index >= skip)
            .map(|l| l.lead)
            .collect();
        median(leads)
    }
}

pub fn normalized_distance(a: &Alignment) -> f64 {
    a.cost / a.query_len as f64
}

/// Per query index, `median(j) - i` over the reference indices it matched.
pub fn lead_times_from_path(a: &Alignment) -> Vec<LeadTime> {
    let mut out = Vec::new();
    let mut k = 0;
    let mut pairs = a.pairs.clone();
    pairs.sort_unstable();
    while k < pairs.len() {
        let i = pairs[k].0;
        let js: Vec<f64> = pairs[k..]
            .iter()
            .take_while(|p| p.0 == i)
            .map(|p| p.1 as f64)
            .collect();
        k += js.len();
        let m = median(js).expect("non-empty run");
        out.push(LeadTime {
            query_index: i,
            lead: m - i as f64,
        });
    }
    out
}

pub(crate) fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

const START: u8 = u8::MAX;

/// Dynamic-programming alignment.
pub fn dtw_align(q: &AlignmentQuery<'_>) -> Result<Alignment> {
    q.validate()?;
    let n = q.query.len();
    let m = q.reference.len();
    let moves = q.step.moves();
    let mut g = vec![f64::INFINITY; n * m];
    let mut choice = vec![START; n * m];

    for i in 0..n {
        let lo = i.saturating_sub(q.window);
        let hi = (i + q.window).min(m - 1);
        for j in lo..=hi {
            let idx = i * m + j;
            if i == 0 {
                if q.start_allowed(j) {
                    g[idx] = q.dist(0, j);
                }
                continue;
            }
            for (k, mv) in moves.iter().enumerate() {
                if mv.di > i || mv.dj > j {
                    continue;
                }
                let (ai, aj) = (i - mv.di, j - mv.dj);
                if !q.in_band(ai, aj) {
                    continue;
                }
                let prev = g[ai * m + aj];
                if prev == f64::INFINITY {
                    continue;
                }
                let cand = prev + q.move_cost(mv, i, j);
                if cand < g[idx] {
                    g[idx] = cand;
                    choice[idx] = k as u8;
                }
            }
        }
    }

    let (mut j, cost) = (0..m)
        .filter(|&j| q.end_allowed(j))
        .map(|j| (j, g[(n - 1) * m + j]))
        .fold((usize::MAX, f64::INFINITY), |best, c| {
            // equal cost: keep the end nearest the diagonal
            let off = |j: usize| j.abs_diff(n - 1);
            if c.1 < best.1 || (c.1 == best.1 && off(c.0) < off(best.0)) {
                c
            } else {
                best
            }
        });
    if cost == f64::INFINITY {
        return Err(Error::NoAdmissiblePath);
    }

    let mut i = n - 1;
    let mut rev = Vec::with_capacity(n + m);
    loop {
        let c = choice[i * m + j];
        if c == START {
            rev.push((i, j));
            break;
        }
        let mv = &moves[c as usize];
        for cell in mv.cells.iter().rev() {
            rev.push((i - cell.di, j - cell.dj));
        }
        i -= mv.di;
        j -= mv.dj;
    }
    rev.reverse();
    Ok(Alignment {
        pairs: rev,
        cost,
        query_len: n,
    })
}

/// Exhaustive search over every admissible path; exponential, so limited to
/// sequences of at most [`BRUTE_FORCE_MAX_LEN`] points. Used to check
/// [`dtw_align`].
pub fn brute_force_dtw(q: &AlignmentQuery<'_>) -> Result<Alignment> {
    q.validate()?;
    let (n, m) = (q.query.len(), q.reference.len());
    if n > BRUTE_FORCE_MAX_LEN || m > BRUTE_FORCE_MAX_LEN {
        return Err(Error::OracleScaleExceeded(n, m));
    }

    struct Search<'q, 'a> {
        q: &'q AlignmentQuery<'a>,
        n: usize,
        m: usize,
        path: Vec<(usize, usize)>,
        best: Option<(f64, Vec<(usize, usize)>)>,
    }

    impl Search<'_, '_> {
        fn visit(&mut self, i: usize, j: usize, acc: f64) {
            if i + 1 == self.n {
                if self.q.end_allowed(j) && self.best.as_ref().is_none_or(|b| acc < b.0) {
                    self.best = Some((acc, self.path.clone()));
                }
                return;
            }
            for mv in self.q.step.moves() {
                let (ei, ej) = (i + mv.di, j + mv.dj);
                if ei >= self.n || ej >= self.m {
                    continue;
                }
                let cells: Vec<(usize, usize)> =
                    mv.cells.iter().map(|c| (ei - c.di, ej - c.dj)).collect();
                if cells.iter().any(|&(a, b)| !self.q.in_band(a, b)) {
                    continue;
                }
                let step = self.q.move_cost(mv, ei, ej);
                let mark = self.path.len();
                self.path.extend(&cells);
                self.visit(ei, ej, acc + step);
                self.path.truncate(mark);
            }
        }
    }

    let mut s = Search {
        q,
        n,
        m,
        path: Vec::new(),
        best: None,
    };
    for j0 in 0..m {
        if !q.start_allowed(j0) || !q.in_band(0, j0) {
            continue;
        }
        s.path.clear();
        s.path.push((0, j0));
        s.visit(0, j0, q.dist(0, j0));
    }
    match s.best {
        Some((cost, pairs)) => Ok(Alignment {
            pairs,
            cost,
            query_len: n,
        }),
        None => Err(Error::NoAdmissiblePath),
    }
}
