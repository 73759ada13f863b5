//! Survey responses, target concern series and opinion initialization.
//!
//! A respondent either does not mention the topic (rank 0) or names it as the
//! k-th most important problem (k = 1, 2, 3). Given a concern threshold
//! `c`, rank 0 maps to a Gaussian on `[0, c)` and ranks 1..3 map to Gaussians
//! on the three equal thirds of `[c, 1]`, highest third for rank 1. Samples
//! outside the interval are redrawn.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::dynamics::OpinionProfile;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MentionRank {
    NotMentioned,
    First,
    Second,
    Third,
}

impl MentionRank {
    pub const ALL: [MentionRank; 4] =
        [MentionRank::NotMentioned, MentionRank::First, MentionRank::Second, MentionRank::Third];

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Self::NotMentioned),
            1 => Some(Self::First),
            2 => Some(Self::Second),
            3 => Some(Self::Third),
            _ => None,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Self::NotMentioned => 0,
            Self::First => 1,
            Self::Second => 2,
            Self::Third => 3,
        }
    }

    pub fn is_mentioned(self) -> bool {
        self != Self::NotMentioned
    }
}

impl fmt::Display for MentionRank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ConcernThreshold(f64);

impl ConcernThreshold {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value < 1.0 {
            Ok(Self(value))
        } else {
            Err(Error::InvalidParameter(format!("concern threshold must lie in (0, 1), got {value}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Interval `[lo, hi)` that initial opinions of `rank` are confined to.
    /// The rank-1 interval is closed at 1.
    pub fn interval(self, rank: MentionRank) -> RankInterval {
        let c = self.0;
        let third = |k: f64| c + k * (1.0 - c) / 3.0;
        let (lo, hi) = match rank {
            MentionRank::NotMentioned => (0.0, c),
            MentionRank::Third => (c, third(1.0)),
            MentionRank::Second => (third(1.0), third(2.0)),
            MentionRank::First => (third(2.0), 1.0),
        };
        RankInterval { lo, hi, closed_above: rank == MentionRank::First }
    }

    /// Mean and standard deviation of the initialization Gaussian for `rank`.
    pub fn gaussian(self, rank: MentionRank) -> (f64, f64) {
        let c = self.0;
        match rank {
            MentionRank::NotMentioned => (c / 2.0, c / 6.0),
            _ => {
                let k = f64::from(rank.code());
                (c + (7.0 - 2.0 * k) / 6.0 * (1.0 - c), (1.0 - c) / 18.0)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankInterval {
    pub lo: f64,
    pub hi: f64,
    pub closed_above: bool,
}

impl RankInterval {
    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && (x < self.hi || (self.closed_above && x <= self.hi))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurveyDataset {
    pub label: String,
    ranks: Vec<MentionRank>,
}

impl SurveyDataset {
    pub fn new(label: impl Into<String>, ranks: Vec<MentionRank>) -> Result<Self> {
        if ranks.is_empty() {
            return Err(Error::InvalidParameter("no respondents".into()));
        }
        Ok(Self { label: label.into(), ranks })
    }

    pub fn ranks(&self) -> &[MentionRank] {
        &self.ranks
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    /// Fraction of respondents who mention the topic at all.
    pub fn mentioned_fraction(&self) -> f64 {
        let mentioned = self.ranks.iter().filter(|r| r.is_mentioned()).count();
        mentioned as f64 / self.ranks.len() as f64
    }

    pub fn count(&self, rank: MentionRank) -> usize {
        self.ranks.iter().filter(|&&r| r == rank).count()
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = csv::Writer::from_path(path)?;
        out.write_record(["respondent_id", "rank"])?;
        for (id, rank) in self.ranks.iter().enumerate() {
            out.write_record([(id + 1).to_string(), rank.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Observed concern per period; `None` marks a period without a survey.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSeries {
    periods: Vec<(String, Option<f64>)>,
}

impl TargetSeries {
    pub fn new(periods: Vec<(String, Option<f64>)>) -> Result<Self> {
        for (label, value) in &periods {
            if let Some(h) = value {
                if !(*h > 0.0 && *h <= 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "target for period {label} must lie in (0, 1], got {h}"
                    )));
                }
            }
        }
        if periods.iter().all(|(_, v)| v.is_none()) {
            return Err(Error::InvalidParameter("target series has no observed values".into()));
        }
        Ok(Self { periods })
    }

    pub fn len(&self) -> usize {
        self.periods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.periods.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.periods.iter().map(|(l, _)| l.as_str())
    }

    pub fn values(&self) -> impl Iterator<Item = Option<f64>> + '_ {
        self.periods.iter().map(|&(_, v)| v)
    }

    pub fn get(&self, period: usize) -> Option<f64> {
        self.periods[period].1
    }

    pub fn label(&self, period: usize) -> &str {
        &self.periods[period].0
    }

    pub fn present_count(&self) -> usize {
        self.periods.iter().filter(|(_, v)| v.is_some()).count()
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = fs::File::create(path)?;
        writeln!(out, "period,proportion")?;
        for (label, value) in &self.periods {
            match value {
                Some(h) => writeln!(out, "{label},{h}")?,
                None => writeln!(out, "{label},")?,
            }
        }
        Ok(())
    }
}

fn check_header(path: &Path, reader: &mut csv::Reader<fs::File>, expected: [&str; 2]) -> Result<()> {
    let headers = reader.headers()?;
    if headers.len() != 2 || headers.iter().map(str::trim).ne(expected) {
        return Err(Error::parse(path, 1, format!("expected header {:?}", expected.join(","))));
    }
    Ok(())
}

fn open_csv(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path)
        .map_err(|e| Error::Input { path: path.to_path_buf(), message: e.to_string() })?;
    Ok(csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(file))
}

/// Reads a `respondent_id,rank` CSV. The dataset label is the file stem.
pub fn parse_survey(path: impl AsRef<Path>) -> Result<SurveyDataset> {
    let path = path.as_ref();
    let mut reader = open_csv(path)?;
    check_header(path, &mut reader, ["respondent_id", "rank"])?;

    let mut ranks = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(Error::parse(path, line, format!("expected 2 fields, got {}", record.len())));
        }
        let code = record[1].trim();
        let rank =
            code.parse::<u8>().ok().and_then(MentionRank::from_code).ok_or_else(|| {
                Error::parse(path, line, format!("rank must be 0, 1, 2 or 3, got {code:?}"))
            })?;
        ranks.push(rank);
    }
    if ranks.is_empty() {
        return Err(Error::Input { path: path.to_path_buf(), message: "no respondents".into() });
    }
    let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    SurveyDataset::new(label, ranks)
}

/// Reads a `period,proportion` CSV; an empty proportion marks a missing month.
pub fn parse_targets(path: impl AsRef<Path>) -> Result<TargetSeries> {
    let path = path.as_ref();
    let mut reader = open_csv(path)?;
    check_header(path, &mut reader, ["period", "proportion"])?;

    let mut periods = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(Error::parse(path, line, format!("expected 2 fields, got {}", record.len())));
        }
        let label = record[0].trim().to_owned();
        let field = record[1].trim();
        let value = if field.is_empty() {
            None
        } else {
            let h: f64 =
                field.parse().map_err(|_| Error::parse(path, line, format!("not a number: {field:?}")))?;
            if !(h > 0.0 && h <= 1.0) {
                return Err(Error::parse(path, line, format!("proportion must lie in (0, 1], got {h}")));
            }
            Some(h)
        };
        periods.push((label, value));
    }
    if periods.iter().all(|(_, v)| v.is_none()) {
        return Err(Error::Input {
            path: path.to_path_buf(),
            message: "target series has no observed values".into(),
        });
    }
    TargetSeries::new(periods)
}

fn sample_in<R: Rng + ?Sized>(dist: &Normal<f64>, interval: RankInterval, rng: &mut R) -> f64 {
    loop {
        let x = dist.sample(rng);
        if interval.contains(x) {
            return x;
        }
    }
}

/// Maps respondents 1:1 onto agents and draws each agent's initial opinion
/// from the truncated Gaussian of its mention rank.
pub fn initialize_opinions<R: Rng + ?Sized>(
    dataset: &SurveyDataset,
    threshold: ConcernThreshold,
    rng: &mut R,
) -> OpinionProfile {
    let samplers = MentionRank::ALL.map(|rank| {
        let (mean, sd) = threshold.gaussian(rank);
        (
            Normal::new(mean, sd).expect("threshold in (0, 1) gives a positive deviation"),
            threshold.interval(rank),
        )
    });
    let sampler = |rank: MentionRank| &samplers[rank.code() as usize];

    let values = dataset
        .ranks()
        .iter()
        .map(|&rank| {
            let (dist, interval) = sampler(rank);
            sample_in(dist, *interval, rng)
        })
        .collect();
    OpinionProfile::new(values).expect("samples lie inside [0, 1]")
}

/// Synthetic survey: ranks i.i.d. with `P(rank = k) = proportions[k - 1]`.
pub fn synth_dataset(
    n: usize,
    proportions: [f64; 3],
    seed: u64,
    label: impl Into<String>,
) -> Result<SurveyDataset> {
    let total: f64 = proportions.iter().sum();
    if proportions.iter().any(|p| p.is_nan() || *p < 0.0) || total > 1.0 + 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "rank proportions {proportions:?} must be non-negative and sum to at most 1"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("no respondents".into()));
    }
    let mut rng = rng::stream(seed);
    let [p1, p2, p3] = proportions;
    let ranks = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            if u < p1 {
                MentionRank::First
            } else if u < p1 + p2 {
                MentionRank::Second
            } else if u < p1 + p2 + p3 {
                MentionRank::Third
            } else {
                MentionRank::NotMentioned
            }
        })
        .collect();
    SurveyDataset::new(label, ranks)
}
