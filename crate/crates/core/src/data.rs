//! Synthetic ground truths, noisy example sets, and their CSV files.
//!
//! A dataset file is plain text: the line `# truth`, the truth as one
//! comma-separated row, the line `# examples`, then one row per example.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TruthCase {
    /// `sparsity` nonzero entries at random positions.
    Sparse,
    /// `n_segments` contiguous constant blocks.
    PiecewiseConstant,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub case: TruthCase,
    pub d: usize,
    pub n_examples: usize,
    pub noise_std: f64,
    pub sparsity: usize,
    pub n_segments: usize,
    pub amplitude: (f64, f64),
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            case: TruthCase::Sparse,
            d: 100,
            n_examples: 500,
            // variance 0.04
            noise_std: 0.2,
            sparsity: 5,
            n_segments: 5,
            amplitude: (-2.0, 2.0),
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.n_examples == 0 {
            return Err(Error::Config("dimension and example count must be positive".into()));
        }
        if self.sparsity > self.d {
            return Err(Error::Config(format!(
                "sparsity {} exceeds dimension {}",
                self.sparsity, self.d
            )));
        }
        if self.n_segments == 0 || self.n_segments > self.d {
            return Err(Error::Config(format!(
                "segment count must lie in 1..={}, got {}",
                self.d, self.n_segments
            )));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::Config(format!("noise_std must be nonnegative, got {}", self.noise_std)));
        }
        let (lo, hi) = self.amplitude;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::Config(format!("bad amplitude range [{lo}, {hi}]")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub truth: Vec<f64>,
    pub examples: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn dim(&self) -> usize {
        self.truth.len()
    }
}

fn draw_truth(spec: &SyntheticSpec, rng: &mut Rng) -> Vec<f64> {
    let (lo, hi) = spec.amplitude;
    let mut z = vec![0.0; spec.d];
    match spec.case {
        TruthCase::Sparse => {
            for pos in rng.sample_without_replacement(spec.d, spec.sparsity) {
                z[pos] = rng.uniform_range(lo, hi);
            }
        }
        TruthCase::PiecewiseConstant => {
            let n = spec.n_segments;
            for s in 0..n {
                let start = s * spec.d / n;
                let end = (s + 1) * spec.d / n;
                let level = rng.uniform_range(lo, hi);
                z[start..end].iter_mut().for_each(|v| *v = level);
            }
        }
    }
    z
}

/// The noiseless signal; identical to `make_dataset(spec).truth`.
pub fn make_truth(spec: &SyntheticSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    Ok(draw_truth(spec, &mut Rng::new(spec.seed)))
}

/// `examples[i] = truth + noise_std * N(0, I)`.
pub fn make_dataset(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = Rng::new(spec.seed);
    let truth = draw_truth(spec, &mut rng);
    let examples = (0..spec.n_examples)
        .map(|_| truth.iter().map(|z| z + spec.noise_std * rng.normal()).collect())
        .collect();
    Ok(Dataset { truth, examples })
}

fn format_row(row: &[f64]) -> String {
    let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
    cells.join(",")
}

pub fn parse_row(line: &str, line_no: usize) -> Result<Vec<f64>> {
    line.split(',')
        .map(|cell| {
            let cell = cell.trim();
            cell.parse::<f64>().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("not a number: {cell:?}"),
            })
        })
        .collect()
}

/// One comma-separated vector per line; values print in shortest round-trip form.
pub fn write_rows<W: Write>(mut out: W, rows: &[Vec<f64>]) -> Result<()> {
    for row in rows {
        writeln!(out, "{}", format_row(row))?;
    }
    Ok(())
}

/// Inverse of [`write_rows`]; blank lines are skipped.
pub fn read_rows<R: BufRead>(input: R) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(parse_row(&line, i + 1)?);
    }
    Ok(rows)
}

pub fn write_dataset<W: Write>(mut out: W, data: &Dataset) -> Result<()> {
    writeln!(out, "# truth")?;
    writeln!(out, "{}", format_row(&data.truth))?;
    writeln!(out, "# examples")?;
    write_rows(&mut out, &data.examples)
}

pub fn read_dataset<R: BufRead>(input: R) -> Result<Dataset> {
    let mut truth: Option<Vec<f64>> = None;
    let mut examples = Vec::new();
    let mut section = None;
    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match line {
            "# truth" => section = Some("truth"),
            "# examples" => section = Some("examples"),
            _ if line.starts_with('#') => {}
            _ => {
                let row = parse_row(line, line_no)?;
                match section {
                    Some("truth") if truth.is_none() => truth = Some(row),
                    Some("truth") => {
                        return Err(Error::Parse { line: line_no, msg: "more than one truth row".into() })
                    }
                    Some(_) => {
                        let d = truth.as_ref().map_or(row.len(), |t| t.len());
                        if row.len() != d {
                            return Err(Error::Parse {
                                line: line_no,
                                msg: format!("expected {d} values, got {}", row.len()),
                            });
                        }
                        examples.push(row);
                    }
                    None => {
                        return Err(Error::Parse { line: line_no, msg: "data before '# truth' header".into() })
                    }
                }
            }
        }
    }
    let truth = truth.ok_or(Error::Parse { line: 0, msg: "missing truth row".into() })?;
    if examples.is_empty() {
        return Err(Error::Parse { line: 0, msg: "no examples".into() });
    }
    Ok(Dataset { truth, examples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prox::tv1d;

    #[test]
    fn sparse_truth_structure() {
        let spec = SyntheticSpec::default();
        let z = make_truth(&spec).unwrap();
        assert_eq!(z.iter().filter(|v| **v != 0.0).count(), 5);
        let zero = make_truth(&SyntheticSpec { sparsity: 0, ..spec }).unwrap();
        assert!(zero.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn piecewise_constant_structure() {
        let spec = SyntheticSpec {
            case: TruthCase::PiecewiseConstant,
            ..SyntheticSpec::default()
        };
        let z = make_truth(&spec).unwrap();
        let jumps = z.windows(2).filter(|w| w[0] != w[1]).count();
        assert!(jumps <= 4);
        assert!(tv1d(&z) > 0.0);
        let one = make_truth(&SyntheticSpec { n_segments: 1, ..spec }).unwrap();
        assert_eq!(tv1d(&one), 0.0);
    }

    #[test]
    fn noiseless_rows_equal_truth() {
        let spec = SyntheticSpec { noise_std: 0.0, n_examples: 7, ..SyntheticSpec::default() };
        let data = make_dataset(&spec).unwrap();
        assert_eq!(data.examples.len(), 7);
        assert!(data.examples.iter().all(|r| *r == data.truth));
        assert_eq!(data.truth, make_truth(&spec).unwrap());
    }

    #[test]
    fn invalid_specs() {
        let base = SyntheticSpec::default();
        assert!(make_dataset(&SyntheticSpec { sparsity: 101, ..base.clone() }).is_err());
        assert!(make_dataset(&SyntheticSpec { n_segments: 0, ..base.clone() }).is_err());
        assert!(make_dataset(&SyntheticSpec { noise_std: -1.0, ..base.clone() }).is_err());
        assert!(make_dataset(&SyntheticSpec { amplitude: (1.0, -1.0), ..base }).is_err());
    }

    #[test]
    fn file_round_trip_is_exact() {
        let data = make_dataset(&SyntheticSpec { n_examples: 20, d: 9, sparsity: 3, ..Default::default() }).unwrap();
        let mut buf = Vec::new();
        write_dataset(&mut buf, &data).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# truth\n"));
        assert_eq!(read_dataset(buf.as_slice()).unwrap(), data);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = "# truth\n1,2\n# examples\n1,2\n1,x\n";
        match read_dataset(bad.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("unexpected {other:?}"),
        }
        let ragged = "# truth\n1,2\n# examples\n1,2,3\n";
        assert!(matches!(read_dataset(ragged.as_bytes()), Err(Error::Parse { line: 4, .. })));
    }
}
