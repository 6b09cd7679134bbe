//! Monte Carlo oracle: samples block random matrices, pools their
//! eigenvalues into histograms, and quantifies the distance between an
//! analytic density curve and the empirical spectrum.
//!
//! Trials are independent. Each trial draws from its own ChaCha8 stream
//! derived from `(seed, trial index)`, so results are bit-identical no
//! matter how trials are scheduled across threads.

use std::io;

use serde::Serialize;
use thiserror::Error;

use crate::linalg::{sym_eigenvalues, LinalgError};
use crate::par;
use crate::rng::{normal_pair, stream_rng};
use crate::sweep::DensityCurve;

/// CSV header for histogram files.
pub const HISTOGRAM_CSV_HEADER: [&str; 3] = ["bin_left", "bin_right", "height"];

/// Empirical mass allowed outside the curve's range before a comparison is
/// rejected as a support mismatch.
const SUPPORT_MISMATCH_FRACTION: f64 = 0.01;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("{fraction:.3}% of the empirical mass lies outside the curve's t-range")]
    SupportMismatch { fraction: f64 },
    #[error("curve has fewer than two converged rows; cannot interpolate")]
    CurveTooSparse,
    #[error("bad histogram data: {0}")]
    BadHistogram(String),
    #[error("invalid block profile: {0}")]
    BadProfile(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Layout of a selfadjoint block random matrix: which independent symbol
/// occupies each block, and the overall normalization.
#[derive(Clone, Debug)]
pub struct BlockProfile {
    block_dim: usize,
    inner_dim: usize,
    /// Row-major `d x d` table of symbol ids; symmetric.
    assignment: Vec<usize>,
    normalization: f64,
}

impl BlockProfile {
    pub fn new(
        assignment: &[Vec<usize>],
        inner_dim: usize,
        normalization: f64,
    ) -> Result<BlockProfile, OracleError> {
        let d = assignment.len();
        if d == 0 {
            return Err(OracleError::BadProfile("empty assignment".into()));
        }
        if inner_dim == 0 {
            return Err(OracleError::BadProfile("inner dimension must be >= 1".into()));
        }
        if !(normalization > 0.0) {
            return Err(OracleError::BadProfile(format!(
                "normalization {normalization} must be positive"
            )));
        }
        let mut flat = Vec::with_capacity(d * d);
        for (i, row) in assignment.iter().enumerate() {
            if row.len() != d {
                return Err(OracleError::BadProfile(format!(
                    "assignment row {i} has length {}, expected {d}",
                    row.len()
                )));
            }
            flat.extend_from_slice(row);
        }
        for i in 0..d {
            for j in 0..d {
                if flat[i * d + j] != flat[j * d + i] {
                    return Err(OracleError::BadProfile(format!(
                        "assignment is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let max_id = *flat.iter().max().expect("nonempty");
        for id in 0..=max_id {
            if !flat.contains(&id) {
                return Err(OracleError::BadProfile(format!(
                    "symbol ids must be contiguous; {id} is missing"
                )));
            }
        }
        Ok(BlockProfile {
            block_dim: d,
            inner_dim,
            assignment: flat,
            normalization,
        })
    }

    /// The 3x3 block-Toeplitz ensemble `[[A,B,C],[B,A,B],[C,B,A]] / sqrt(3N)`
    /// with independent selfadjoint `N x N` symbols.
    pub fn toeplitz3(inner_dim: usize) -> BlockProfile {
        BlockProfile::new(
            &[vec![0, 1, 2], vec![1, 0, 1], vec![2, 1, 0]],
            inner_dim,
            1.0 / (3.0 * inner_dim as f64).sqrt(),
        )
        .expect("static profile")
    }

    /// Single-block Wigner ensemble `A / sqrt(N)`.
    pub fn wigner(inner_dim: usize) -> BlockProfile {
        BlockProfile::new(&[vec![0]], inner_dim, 1.0 / (inner_dim as f64).sqrt())
            .expect("static profile")
    }

    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    pub fn inner_dim(&self) -> usize {
        self.inner_dim
    }

    pub fn total_dim(&self) -> usize {
        self.block_dim * self.inner_dim
    }

    fn symbol_count(&self) -> usize {
        self.assignment.iter().max().expect("nonempty") + 1
    }
}

/// One realization of the block matrix as a flat row-major real symmetric
/// `(dN) x (dN)` array. Deterministic in `seed`; equals trial 0 of
/// [`empirical_spectrum`] at the same seed.
pub fn sample_block_matrix(profile: &BlockProfile, seed: u64) -> Vec<f64> {
    sample_with_stream(profile, seed, 0)
}

fn sample_with_stream(profile: &BlockProfile, seed: u64, stream: u64) -> Vec<f64> {
    let n = profile.inner_dim;
    let d = profile.block_dim;
    let total = d * n;
    let mut rng = stream_rng(seed, stream);

    // One symmetric N x N realization per symbol id, entries standard normal
    // with x[j][i] = x[i][j].
    let mut symbols: Vec<Vec<f64>> = Vec::with_capacity(profile.symbol_count());
    for _ in 0..profile.symbol_count() {
        let mut s = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let (x, _) = normal_pair(&mut rng);
                s[i * n + j] = x;
                s[j * n + i] = x;
            }
        }
        symbols.push(s);
    }

    let mut out = vec![0.0; total * total];
    for bi in 0..d {
        for bj in 0..d {
            let sym = &symbols[profile.assignment[bi * d + bj]];
            for r in 0..n {
                let src = &sym[r * n..(r + 1) * n];
                let dst_row = (bi * n + r) * total + bj * n;
                for (c, &v) in src.iter().enumerate() {
                    out[dst_row + c] = v * profile.normalization;
                }
            }
        }
    }
    out
}

/// Equal-width histogram normalized to unit area.
#[derive(Clone, Debug, Serialize)]
pub struct Histogram {
    /// `bins + 1` ascending edges.
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Heights such that `sum(height * width) = 1`.
    pub normalized_heights: Vec<f64>,
}

impl Histogram {
    pub fn from_values(values: &[f64], bins: usize) -> Histogram {
        assert!(bins >= 1, "at least one bin required");
        assert!(!values.is_empty(), "cannot bin an empty sample");
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let span = if hi > lo { hi - lo } else { 1.0 };
        let width = span / bins as f64;
        let mut counts = vec![0u64; bins];
        for &v in values {
            let idx = (((v - lo) / span) * bins as f64) as usize;
            counts[idx.min(bins - 1)] += 1;
        }
        let total = values.len() as f64;
        let normalized_heights = counts
            .iter()
            .map(|&c| c as f64 / (total * width))
            .collect();
        let bin_edges = (0..=bins).map(|i| lo + i as f64 * width).collect();
        Histogram {
            bin_edges,
            counts,
            normalized_heights,
        }
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    /// Probability mass per bin.
    pub fn masses(&self) -> Vec<f64> {
        let total: u64 = self.counts.iter().sum();
        self.counts
            .iter()
            .map(|&c| c as f64 / total as f64)
            .collect()
    }

    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<(), OracleError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(HISTOGRAM_CSV_HEADER)?;
        for i in 0..self.bins() {
            w.write_record(&[
                format!("{:.16e}", self.bin_edges[i]),
                format!("{:.16e}", self.bin_edges[i + 1]),
                format!("{:.16e}", self.normalized_heights[i]),
            ])?;
        }
        w.flush().map_err(io::Error::from)?;
        Ok(())
    }
}

/// Reads a histogram CSV back as `(edges, masses)`.
pub fn read_histogram_csv<R: io::Read>(input: R) -> Result<(Vec<f64>, Vec<f64>), OracleError> {
    let mut reader = csv::Reader::from_reader(input);
    {
        let headers = reader.headers()?;
        if headers != HISTOGRAM_CSV_HEADER.as_slice() {
            return Err(OracleError::BadHistogram(format!(
                "unexpected header {headers:?}"
            )));
        }
    }
    let mut edges: Vec<f64> = Vec::new();
    let mut masses: Vec<f64> = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() != 3 {
            return Err(OracleError::BadHistogram("row with wrong arity".into()));
        }
        let left: f64 = parse(&record[0])?;
        let right: f64 = parse(&record[1])?;
        let height: f64 = parse(&record[2])?;
        if !(right > left) {
            return Err(OracleError::BadHistogram(format!(
                "bin [{left}, {right}] is not increasing"
            )));
        }
        if let Some(&prev) = edges.last() {
            if (prev - left).abs() > 1e-9 * left.abs().max(1.0) {
                return Err(OracleError::BadHistogram(format!(
                    "bins are not contiguous at {left}"
                )));
            }
        } else {
            edges.push(left);
        }
        edges.push(right);
        masses.push(height * (right - left));
    }
    if masses.is_empty() {
        return Err(OracleError::BadHistogram("no bins".into()));
    }
    Ok((edges, masses))
}

fn parse(s: &str) -> Result<f64, OracleError> {
    s.parse()
        .map_err(|e| OracleError::BadHistogram(format!("{s:?}: {e}")))
}

/// Pooled eigenvalues from repeated trials of a block ensemble.
#[derive(Clone, Debug)]
pub struct SpectrumSample {
    /// All trials pooled, in trial order.
    pub eigenvalues: Vec<f64>,
    pub trials: usize,
    pub block_dim: usize,
    pub inner_dim: usize,
    pub seed: u64,
    pub histogram: Histogram,
}

impl SpectrumSample {
    pub fn from_eigenvalues(
        eigenvalues: Vec<f64>,
        trials: usize,
        block_dim: usize,
        inner_dim: usize,
        seed: u64,
        bins: usize,
    ) -> SpectrumSample {
        let histogram = Histogram::from_values(&eigenvalues, bins);
        SpectrumSample {
            eigenvalues,
            trials,
            block_dim,
            inner_dim,
            seed,
            histogram,
        }
    }

    pub fn mean(&self) -> f64 {
        self.eigenvalues.iter().sum::<f64>() / self.eigenvalues.len() as f64
    }

    pub fn second_moment(&self) -> f64 {
        self.eigenvalues.iter().map(|x| x * x).sum::<f64>() / self.eigenvalues.len() as f64
    }
}

/// Samples `trials` independent realizations and pools their spectra.
/// Trials may run in parallel; the result does not depend on scheduling.
pub fn empirical_spectrum(
    profile: &BlockProfile,
    trials: usize,
    seed: u64,
    bins: usize,
) -> SpectrumSample {
    assert!(trials >= 1, "at least one trial required");
    assert!(bins >= 10, "at least ten bins required");
    let total = profile.total_dim();
    let per_trial: Vec<Vec<f64>> = par::map_indexed(trials, |trial| {
        let m = sample_with_stream(profile, seed, trial as u64);
        sym_eigenvalues(&m, total).expect("eigensolver failed on a Gaussian sample")
    });
    let mut eigenvalues = Vec::with_capacity(trials * total);
    for mut evs in per_trial {
        eigenvalues.append(&mut evs);
    }
    SpectrumSample::from_eigenvalues(
        eigenvalues,
        trials,
        profile.block_dim(),
        profile.inner_dim(),
        seed,
        bins,
    )
}

/// L1 and Kolmogorov-Smirnov distances between an analytic curve and a
/// binned empirical spectrum.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Comparison {
    /// Sum over bins of |analytic mass - empirical mass|, the analytic mass
    /// being the trapezoid integral of the curve over the bin.
    pub l1: f64,
    /// Max over bin edges of |CDF difference|.
    pub ks: f64,
}

/// Comparison plus the sample's provenance, the JSON report shape.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CompareReport {
    pub l1: f64,
    pub ks: f64,
    pub trials: usize,
    #[serde(rename = "N")]
    pub inner_dim: usize,
    pub seed: u64,
}

pub fn compare_sample(
    curve: &DensityCurve,
    sample: &SpectrumSample,
) -> Result<CompareReport, OracleError> {
    let cmp = compare(
        curve,
        &sample.histogram.bin_edges,
        &sample.histogram.masses(),
    )?;
    Ok(CompareReport {
        l1: cmp.l1,
        ks: cmp.ks,
        trials: sample.trials,
        inner_dim: sample.inner_dim,
        seed: sample.seed,
    })
}

/// Core comparison on raw bin data. Fails with [`OracleError::SupportMismatch`]
/// when more than 1% of the empirical mass falls outside the curve's range.
pub fn compare(
    curve: &DensityCurve,
    bin_edges: &[f64],
    bin_masses: &[f64],
) -> Result<Comparison, OracleError> {
    if bin_edges.len() != bin_masses.len() + 1 || bin_masses.is_empty() {
        return Err(OracleError::BadHistogram(
            "edges must be one longer than masses".into(),
        ));
    }
    let interp = CurveInterp::new(curve)?;

    // Empirical mass outside the curve's range, bins assumed uniform inside.
    let (lo, hi) = interp.range();
    let mut outside = 0.0;
    for i in 0..bin_masses.len() {
        let (l, r) = (bin_edges[i], bin_edges[i + 1]);
        let width = r - l;
        let inside = ((r.min(hi) - l.max(lo)) / width).clamp(0.0, 1.0);
        outside += bin_masses[i] * (1.0 - inside);
    }
    if outside > SUPPORT_MISMATCH_FRACTION {
        return Err(OracleError::SupportMismatch {
            fraction: outside * 100.0,
        });
    }

    let mut l1 = 0.0;
    for i in 0..bin_masses.len() {
        let analytic = interp.cdf(bin_edges[i + 1]) - interp.cdf(bin_edges[i]);
        l1 += (analytic - bin_masses[i]).abs();
    }

    let mut ks: f64 = 0.0;
    let mut emp_cdf = 0.0;
    ks = ks.max((interp.cdf(bin_edges[0]) - emp_cdf).abs());
    for i in 0..bin_masses.len() {
        emp_cdf += bin_masses[i];
        ks = ks.max((interp.cdf(bin_edges[i + 1]) - emp_cdf).abs());
    }

    Ok(Comparison { l1, ks })
}

/// Piecewise-linear density interpolant over the converged rows of a curve,
/// with an exactly integrated CDF.
struct CurveInterp {
    ts: Vec<f64>,
    ds: Vec<f64>,
    cum: Vec<f64>,
}

impl CurveInterp {
    fn new(curve: &DensityCurve) -> Result<CurveInterp, OracleError> {
        let mut ts = Vec::new();
        let mut ds = Vec::new();
        for row in &curve.rows {
            if row.density.is_finite() {
                ts.push(row.t);
                ds.push(row.density.max(0.0));
            }
        }
        if ts.len() < 2 {
            return Err(OracleError::CurveTooSparse);
        }
        let mut cum = vec![0.0; ts.len()];
        for i in 1..ts.len() {
            cum[i] = cum[i - 1] + 0.5 * (ds[i] + ds[i - 1]) * (ts[i] - ts[i - 1]);
        }
        Ok(CurveInterp { ts, ds, cum })
    }

    fn range(&self) -> (f64, f64) {
        (self.ts[0], *self.ts.last().unwrap())
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= self.ts[0] {
            return 0.0;
        }
        if x >= *self.ts.last().unwrap() {
            return *self.cum.last().unwrap();
        }
        let i = match self.ts.binary_search_by(|t| t.partial_cmp(&x).unwrap()) {
            Ok(i) => return self.cum[i],
            Err(i) => i - 1,
        };
        let (t0, t1) = (self.ts[i], self.ts[i + 1]);
        let (d0, d1) = (self.ds[i], self.ds[i + 1]);
        let frac = (x - t0) / (t1 - t0);
        let dx = d0 + frac * (d1 - d0);
        self.cum[i] + 0.5 * (d0 + dx) * (x - t0)
    }
}
