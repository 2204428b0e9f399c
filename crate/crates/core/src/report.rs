//! CSV writers for the tabular outputs. Every table has a header row; floats
//! use the shortest round-trip representation so reruns are byte-identical.

use std::io::Write;

use serde::Serialize;

use crate::dos_dixmier::{DosEstimate, IdsTable};
use crate::ergodic::{EquivarianceReport, ErgodicReport, FolnerReport};
use crate::error::Result;
use crate::metric_spaces::RadiiLadder;
use crate::percolation::GrowthTable;
use crate::reference_models::CounterexampleRow;
use crate::spectral_core::{CesaroSeries, EigenSequence};

fn write_rows<W: Write, R: Serialize>(out: W, header: &[&str], rows: impl IntoIterator<Item = R>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// `k,r_k,ball_count,shell_count,ratio`, from `k = 0`. The ratio column is
/// `N_k/N_{k−1}` and is empty on the first row.
pub fn write_ladder<W: Write>(out: W, ladder: &RadiiLadder) -> Result<()> {
    let rows = (0..=ladder.len()).map(|k| {
        let n = ladder.level_count(k);
        let prev = if k == 0 { 0 } else { ladder.level_count(k - 1) };
        let ratio = (k > 0).then(|| n as f64 / prev as f64);
        (k, ladder.level_radius(k), n, n - prev, ratio)
    });
    write_rows(out, &["k", "r_k", "ball_count", "shell_count", "ratio"], rows)
}

pub fn write_growth<W: Write>(out: W, table: &GrowthTable) -> Result<()> {
    let rows = table.rows.iter().map(|r| (r.t, r.ball_count, r.normalized));
    write_rows(out, &["t", "ball_count", "normalized"], rows)
}

/// `k,value` with `k` starting at 1.
pub fn write_eigen<W: Write>(out: W, eig: &EigenSequence) -> Result<()> {
    write_rows(out, &["k", "value"], eig.values.iter().enumerate().map(|(i, v)| (i + 1, v)))
}

pub fn write_cesaro<W: Write>(out: W, series: &CesaroSeries) -> Result<()> {
    write_rows(out, &["n", "S", "Lambda"], series.rows())
}

pub fn write_counterexample<W: Write>(out: W, rows: &[CounterexampleRow]) -> Result<()> {
    let rows = rows.iter().map(|r| (r.m, r.n, r.cesaro, r.log_cesaro));
    write_rows(out, &["m", "n", "cesaro", "log_cesaro"], rows)
}

pub fn write_dos<W: Write>(out: W, dos: &DosEstimate) -> Result<()> {
    let rows = dos.rows.iter().map(|r| (r.radius, r.ball_count, r.value));
    write_rows(out, &["radius", "ball_count", "value"], rows)
}

pub fn write_ids<W: Write>(out: W, ids: &IdsTable) -> Result<()> {
    write_rows(out, &["energy", "fraction"], ids.rows())
}

pub fn write_equivariance<W: Write>(out: W, rep: &EquivarianceReport) -> Result<()> {
    let rows = rep.rows.iter().map(|r| (r.radius, r.original, r.shifted, r.difference));
    write_rows(out, &["radius", "original", "shifted", "difference"], rows)
}

pub fn write_realizations<W: Write>(out: W, rep: &ErgodicReport) -> Result<()> {
    let rows = rep.realizations.iter().map(|r| (r.index, r.seed, r.average, r.sem, r.z));
    write_rows(out, &["index", "seed", "average", "sem", "z"], rows)
}

pub fn write_folner<W: Write>(out: W, rep: &FolnerReport) -> Result<()> {
    let rows = rep.rows.iter().map(|r| {
        let dev = r.deviations.iter().copied().fold(0.0, f64::max);
        (r.n, r.size, dev, r.temper_ratio)
    });
    write_rows(out, &["n", "size", "max_deviation", "temper_ratio"], rows)
}
