//! Latin Hypercube designs over the model's parameter space and the paired,
//! parallel batch runner that executes them.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{run_simulation, SimRng};
use crate::error::{Error, Result};
use crate::model::{CensorshipMode, GroupMetricsRow, SimParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweptParam {
    Homophily,
    Tolerance,
    RadicalFraction,
}

impl SweptParam {
    pub fn name(self) -> &'static str {
        match self {
            SweptParam::Homophily => "homophily",
            SweptParam::Tolerance => "tolerance",
            SweptParam::RadicalFraction => "radical_fraction",
        }
    }

    fn apply(self, params: &mut SimParams, value: f64) {
        match self {
            SweptParam::Homophily => params.homophily = value,
            SweptParam::Tolerance => params.tolerance = value,
            SweptParam::RadicalFraction => params.radical_fraction = value,
        }
    }
}

impl fmt::Display for SweptParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweptParam {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "homophily" => Ok(SweptParam::Homophily),
            "tolerance" => Ok(SweptParam::Tolerance),
            "radical_fraction" => Ok(SweptParam::RadicalFraction),
            other => Err(format!("`{other}` cannot be swept")),
        }
    }
}

/// Half-open interval `[low, high)` for one swept parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamRange {
    pub param: SweptParam,
    pub low: f64,
    pub high: f64,
}

impl ParamRange {
    /// All swept parameters are probabilities, so the range must lie in `[0, 1]`.
    pub fn new(param: SweptParam, low: f64, high: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&low) || !(0.0..=1.0).contains(&high) || low >= high {
            return Err(Error::InvalidParam {
                name: "range",
                value: format!("{param} in [{low}, {high})"),
                expected: "0 <= low < high <= 1",
            });
        }
        Ok(Self { param, low, high })
    }

    /// Index of the equal-width stratum that contains `x`, out of `n`.
    pub fn stratum(&self, x: f64, n: usize) -> usize {
        (((x - self.low) / (self.high - self.low)) * n as f64).floor() as usize
    }

    /// Uniform point inside stratum `s` of `n`, given `u` in `[0, 1)`.
    fn point_in_stratum(&self, s: usize, n: usize, u: f64) -> f64 {
        let width = self.high - self.low;
        let mut x = self.low + (s as f64 + u) / n as f64 * width;
        // rounding can push a point across a stratum edge
        while self.stratum(x, n) > s || x >= self.high {
            x = x.next_down();
        }
        while self.stratum(x, n) < s {
            x = x.next_up();
        }
        x
    }
}

/// Default ranges: homophily and tolerance over `[0, 1)`.
pub fn default_ranges() -> Vec<ParamRange> {
    vec![
        ParamRange::new(SweptParam::Homophily, 0.0, 1.0).unwrap(),
        ParamRange::new(SweptParam::Tolerance, 0.0, 1.0).unwrap(),
    ]
}

/// Latin Hypercube sample: `samples[i][j]` is the value of `ranges[j]` for
/// sample `i`. Each parameter gets its own random permutation of the strata
/// and one uniform point per stratum.
pub fn lhs_sample<R: Rng + ?Sized>(
    ranges: &[ParamRange],
    n_samples: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    if n_samples == 0 {
        return Err(Error::InvalidParam {
            name: "n_samples",
            value: "0".into(),
            expected: "at least 1 sample",
        });
    }
    if ranges.is_empty() {
        return Err(Error::TooFew {
            what: "swept parameters",
            needed: 1,
            got: 0,
        });
    }
    for (i, r) in ranges.iter().enumerate() {
        ParamRange::new(r.param, r.low, r.high)?;
        if ranges[..i].iter().any(|o| o.param == r.param) {
            return Err(Error::InvalidParam {
                name: "range",
                value: r.param.to_string(),
                expected: "each parameter swept at most once",
            });
        }
    }

    let mut samples = vec![Vec::with_capacity(ranges.len()); n_samples];
    let mut strata: Vec<usize> = (0..n_samples).collect();
    for range in ranges {
        strata.shuffle(rng);
        for (sample, &s) in samples.iter_mut().zip(&strata) {
            sample.push(range.point_in_stratum(s, n_samples, rng.gen()));
        }
    }
    Ok(samples)
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed shared by every mode-run of one sample. Depends only on the base
/// seed and the sample index, so growing a design keeps earlier seeds.
pub fn derive_run_seed(base_seed: u64, sample: usize) -> u64 {
    splitmix64(base_seed ^ splitmix64(sample as u64))
}

const DESIGN_STREAM: u64 = 0x4C48_535F_4445_5349; // "LHS_DESI"

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepDesign {
    pub ranges: Vec<ParamRange>,
    pub samples: Vec<Vec<f64>>,
    pub n_samples: usize,
    pub base_seed: u64,
    /// Run every sample under all three modes with one shared seed.
    pub paired_modes: bool,
}

impl SweepDesign {
    /// Draws the design from a generator derived from `base_seed`.
    pub fn latin_hypercube(
        ranges: Vec<ParamRange>,
        n_samples: usize,
        base_seed: u64,
        paired_modes: bool,
    ) -> Result<Self> {
        let mut rng = SimRng::seed_from_u64(splitmix64(base_seed ^ DESIGN_STREAM));
        let samples = lhs_sample(&ranges, n_samples, &mut rng)?;
        Ok(Self {
            ranges,
            samples,
            n_samples,
            base_seed,
            paired_modes,
        })
    }

    /// `(sample, mode)` pairs in canonical order. Unpaired designs run the
    /// template's mode only.
    pub fn runs(&self, template_mode: CensorshipMode) -> Vec<(usize, CensorshipMode)> {
        (0..self.n_samples)
            .flat_map(|i| {
                let modes: &[CensorshipMode] = if self.paired_modes {
                    &CensorshipMode::ALL
                } else {
                    std::slice::from_ref(&template_mode)
                };
                modes.iter().map(move |&m| (i, m))
            })
            .collect()
    }

    pub fn params_for(
        &self,
        sample: usize,
        mode: CensorshipMode,
        template: &SimParams,
    ) -> SimParams {
        let mut p = template.clone();
        for (range, &value) in self.ranges.iter().zip(&self.samples[sample]) {
            range.param.apply(&mut p, value);
        }
        p.mode = mode;
        p.seed = derive_run_seed(self.base_seed, sample);
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub baseline: [GroupMetricsRow; 2],
    pub final_rows: [GroupMetricsRow; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub sample: usize,
    pub mode: CensorshipMode,
    pub params: SimParams,
    /// Initialization failures are kept per run.
    pub outcome: std::result::Result<RunSummary, Error>,
    pub duration: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub records: Vec<RunRecord>,
}

impl SweepResult {
    pub fn total_duration(&self) -> Duration {
        self.records.iter().map(|r| r.duration).sum()
    }

    pub fn successful(&self) -> impl Iterator<Item = (&RunRecord, &RunSummary)> {
        self.records
            .iter()
            .filter_map(|r| r.outcome.as_ref().ok().map(|s| (r, s)))
    }
}

pub fn run_one(params: &SimParams) -> std::result::Result<RunSummary, Error> {
    let result = run_simulation(params)?;
    let pair = |rows: &[GroupMetricsRow]| [rows[0].clone(), rows[1].clone()];
    Ok(RunSummary {
        baseline: pair(result.baseline_rows()),
        final_rows: pair(result.final_rows()),
    })
}

/// Executes every run of the design on `jobs` worker threads. Records come
/// back in `(sample, mode)` order whatever the scheduling.
pub fn run_sweep(design: &SweepDesign, template: &SimParams, jobs: usize) -> Result<SweepResult> {
    if jobs == 0 {
        return Err(Error::InvalidParam {
            name: "jobs",
            value: "0".into(),
            expected: "at least one worker",
        });
    }
    let runs = design.runs(template.mode);
    let execute = |&(sample, mode): &(usize, CensorshipMode)| {
        let params = design.params_for(sample, mode, template);
        let start = Instant::now();
        let outcome = run_one(&params);
        RunRecord {
            sample,
            mode,
            params,
            outcome,
            duration: start.elapsed(),
        }
    };

    let records = if jobs == 1 {
        runs.iter().map(execute).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .expect("failed to build worker pool");
        pool.install(|| runs.par_iter().map(execute).collect())
    };
    Ok(SweepResult { records })
}
