use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::prox::{self, RegKind, Regularizer};

pub const METRICS_HEADER: &str = "iter,mse,avg_l1,avg_tv,dual_obj,wall_ms";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricsRow {
    pub iteration: usize,
    pub mse: f64,
    pub avg_l1: f64,
    pub avg_tv: f64,
    pub dual_objective: f64,
    pub wall_ms: f64,
}

/// Sample statistics shared by every method.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleStats {
    /// Mean over samples of `|x - truth|^2 / d`.
    pub mse: f64,
    pub avg_l1: f64,
    pub avg_tv: f64,
}

/// `tv` selects the TV flavour used for `avg_tv`: 2-D for image regularizers,
/// 1-D otherwise.
pub fn evaluate_metrics(samples: &[Vec<f64>], truth: &[f64], tv: &Regularizer) -> Result<SampleStats> {
    if samples.is_empty() {
        return Err(Error::EmptyBatch("samples for metrics"));
    }
    let d = truth.len();
    let n = samples.len() as f64;
    let (mut mse, mut l1, mut tv_sum) = (0.0, 0.0, 0.0);
    for x in samples {
        if x.len() != d {
            return Err(Error::Shape(format!("sample has {} entries, truth has {d}", x.len())));
        }
        mse += x.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / d as f64;
        l1 += prox::l1_norm(x);
        tv_sum += match tv.kind {
            RegKind::Tv2d { height, width } => prox::tv2d(x, height, width)?,
            _ => prox::tv1d(x),
        };
    }
    Ok(SampleStats {
        mse: mse / n,
        avg_l1: l1 / n,
        avg_tv: tv_sum / n,
    })
}

/// Streams metrics rows as CSV (UTF-8, LF line endings).
///
/// With `record_time == false` the `wall_ms` column is written as `0`, which
/// makes files from identically seeded runs byte-identical.
pub struct MetricsWriter<W: Write> {
    out: W,
    record_time: bool,
}

impl<W: Write> MetricsWriter<W> {
    pub fn new(mut out: W, record_time: bool) -> Result<Self> {
        writeln!(out, "{METRICS_HEADER}")?;
        Ok(Self { out, record_time })
    }

    pub fn write(&mut self, row: &MetricsRow) -> Result<()> {
        let wall = if self.record_time { row.wall_ms } else { 0.0 };
        writeln!(
            self.out,
            "{},{},{},{},{},{}",
            row.iteration, row.mse, row.avg_l1, row.avg_tv, row.dual_objective, wall
        )?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

/// Parses a metrics CSV; errors report the 1-based line number.
pub fn read_metrics<R: BufRead>(input: R) -> Result<Vec<MetricsRow>> {
    let mut lines = input.lines();
    match lines.next() {
        Some(Ok(h)) if h.trim() == METRICS_HEADER => {}
        Some(Ok(h)) => {
            return Err(Error::Parse {
                line: 1,
                msg: format!("expected header {METRICS_HEADER:?}, found {h:?}"),
            })
        }
        Some(Err(e)) => return Err(e.into()),
        None => return Err(Error::Parse { line: 1, msg: "empty file".into() }),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != 6 {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected 6 columns, got {}", cells.len()),
            });
        }
        let num = |k: usize| -> Result<f64> {
            cells[k].parse::<f64>().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("not a number: {:?}", cells[k]),
            })
        };
        let iteration = cells[0].parse::<usize>().map_err(|_| Error::Parse {
            line: line_no,
            msg: format!("bad iteration {:?}", cells[0]),
        })?;
        rows.push(MetricsRow {
            iteration,
            mse: num(1)?,
            avg_l1: num(2)?,
            avg_tv: num(3)?,
            dual_objective: num(4)?,
            wall_ms: num(5)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_examples() {
        let truth = vec![0.5; 100];
        let tv = Regularizer::tv1d();
        let s = evaluate_metrics(&[truth.clone(), truth.clone()], &truth, &tv).unwrap();
        assert_eq!(s.mse, 0.0);
        let mut off = truth.clone();
        off[0] += 1.0;
        let s = evaluate_metrics(&[off], &truth, &tv).unwrap();
        assert!((s.mse - 0.01).abs() < 1e-15);
        let consts = vec![vec![1.0; 100], vec![-3.0; 100]];
        assert_eq!(evaluate_metrics(&consts, &truth, &tv).unwrap().avg_tv, 0.0);
        assert_eq!(evaluate_metrics(&consts, &truth, &tv).unwrap().avg_l1, 200.0);
        assert!(evaluate_metrics(&[], &truth, &tv).is_err());
        assert!(evaluate_metrics(&[vec![0.0; 3]], &truth, &tv).is_err());
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let row = MetricsRow {
            iteration: 3,
            mse: 0.125,
            avg_l1: 15.8,
            avg_tv: 1.0 / 3.0,
            dual_objective: -0.2,
            wall_ms: 4.5,
        };
        let mut w = MetricsWriter::new(Vec::new(), true).unwrap();
        w.write(&row).unwrap();
        let bytes = w.into_inner();
        assert_eq!(read_metrics(bytes.as_slice()).unwrap(), vec![row]);

        let mut w = MetricsWriter::new(Vec::new(), false).unwrap();
        w.write(&row).unwrap();
        let text = String::from_utf8(w.into_inner()).unwrap();
        assert!(text.ends_with(",0\n"));
        assert!(!text.contains('\r'));

        let bad = format!("{METRICS_HEADER}\n1,2,3,4,5,6\n2,2,x,4,5,6\n");
        assert!(matches!(read_metrics(bad.as_bytes()), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(read_metrics("a,b\n".as_bytes()), Err(Error::Parse { line: 1, .. })));
        assert!(read_metrics(format!("{METRICS_HEADER}\n").as_bytes()).unwrap().is_empty());
    }
}
