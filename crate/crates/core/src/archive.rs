//! Line-oriented text archive of a [`SampleSet`].
//!
//! ```text
//! # qfpu-snapshots v1
//! n_particles 8
//! beads 16
//! temperature 1.0
//! alpha 5.0
//! beta 5.0
//! seed 42
//! dt 0.003
//! respa_steps 1
//! chain_length 5
//! n_burn 12000
//! stride 40
//! n_samples 2
//! replica_lengths 2
//! data
//! <H'> <T_kin> <q[1][1]> <q[1][2]> ... <q[1][N]> <q[2][1]> ... <q[P][N]>
//! <H'> <T_kin> ...
//! ```
//!
//! The first line identifies the format and version. Header lines are
//! `key value` pairs in the order shown; unknown keys are rejected. After the
//! `data` line every line is one snapshot: the extended energy, the kinetic
//! temperature and the `P × N` primitive bead positions, bead-major with the particle index
//! running fastest. Numbers are written in the shortest form that parses
//! back to the identical `f64`, so a write/read cycle is lossless.

use std::io::{BufRead, Write};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::pimd_sampler::{SampleMeta, SampleSet};

pub const MAGIC: &str = "# qfpu-snapshots v1";

pub fn write_archive<W: Write>(set: &SampleSet, mut out: W) -> Result<()> {
    let m = &set.meta;
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "n_particles {}", m.n_particles)?;
    writeln!(out, "beads {}", m.beads)?;
    writeln!(out, "temperature {:?}", m.temperature)?;
    writeln!(out, "alpha {:?}", m.alpha)?;
    writeln!(out, "beta {:?}", m.beta)?;
    writeln!(out, "seed {}", m.seed)?;
    writeln!(out, "dt {:?}", m.dt)?;
    writeln!(out, "respa_steps {}", m.respa_steps)?;
    writeln!(out, "chain_length {}", m.chain_length)?;
    writeln!(out, "n_burn {}", m.n_burn)?;
    writeln!(out, "stride {}", m.stride)?;
    writeln!(out, "n_samples {}", set.len())?;
    let lengths: Vec<String> = set.replica_lengths.iter().map(|l| l.to_string()).collect();
    writeln!(out, "replica_lengths {}", lengths.join(" "))?;
    writeln!(out, "data")?;
    let mut line = String::new();
    for ((snap, e), k) in set
        .snapshots
        .iter()
        .zip(&set.energy)
        .zip(&set.kinetic_temperature)
    {
        line.clear();
        line.push_str(&format!("{e:?} {k:?}"));
        for x in snap.iter() {
            line.push(' ');
            line.push_str(&format!("{x:?}"));
        }
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Archive(msg.into())
}

struct Header<'a, I: Iterator<Item = std::io::Result<String>>> {
    lines: &'a mut I,
    line_no: usize,
}

impl<I: Iterator<Item = std::io::Result<String>>> Header<'_, I> {
    fn next_line(&mut self) -> Result<String> {
        self.line_no += 1;
        match self.lines.next() {
            Some(l) => Ok(l?),
            None => Err(bad(format!(
                "unexpected end of file at line {}",
                self.line_no
            ))),
        }
    }

    fn field(&mut self, key: &str) -> Result<String> {
        let line = self.next_line()?;
        let (k, v) = line
            .split_once(' ')
            .ok_or_else(|| bad(format!("line {}: expected `{key} <value>`", self.line_no)))?;
        if k != key {
            return Err(bad(format!(
                "line {}: expected key `{key}`, found `{k}`",
                self.line_no
            )));
        }
        Ok(v.trim().to_string())
    }

    fn parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.field(key)?;
        v.parse().map_err(|_| {
            bad(format!(
                "line {}: cannot parse `{v}` for `{key}`",
                self.line_no
            ))
        })
    }
}

pub fn read_archive<R: BufRead>(input: R) -> Result<SampleSet> {
    let mut lines = input.lines();
    let mut h = Header {
        lines: &mut lines,
        line_no: 0,
    };
    let magic = h.next_line()?;
    if magic.trim_end() != MAGIC {
        return Err(bad(format!(
            "not a snapshot archive (first line `{magic}`)"
        )));
    }
    let meta = SampleMeta {
        n_particles: h.parsed("n_particles")?,
        beads: h.parsed("beads")?,
        temperature: h.parsed("temperature")?,
        alpha: h.parsed("alpha")?,
        beta: h.parsed("beta")?,
        seed: h.parsed("seed")?,
        dt: h.parsed("dt")?,
        respa_steps: h.parsed("respa_steps")?,
        chain_length: h.parsed("chain_length")?,
        n_burn: h.parsed("n_burn")?,
        stride: h.parsed("stride")?,
    };
    let n_samples: usize = h.parsed("n_samples")?;
    let replica_lengths = h
        .field("replica_lengths")?
        .split_whitespace()
        .map(|v| v.parse::<usize>().map_err(|_| bad("bad replica length")))
        .collect::<Result<Vec<_>>>()?;
    if replica_lengths.iter().sum::<usize>() != n_samples {
        return Err(bad("replica lengths do not add up to n_samples"));
    }
    if h.next_line()? != "data" {
        return Err(bad(format!("line {}: expected `data`", h.line_no)));
    }
    let (p, n) = (meta.beads, meta.n_particles);
    let mut snapshots = Vec::with_capacity(n_samples);
    let mut energy = Vec::with_capacity(n_samples);
    let mut kinetic_temperature = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let line = h.next_line()?;
        let values = line
            .split_whitespace()
            .map(|v| v.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| bad(format!("line {}: {e}", h.line_no)))?;
        if values.len() != 2 + p * n {
            return Err(bad(format!(
                "line {}: expected {} values, found {}",
                h.line_no,
                2 + p * n,
                values.len()
            )));
        }
        energy.push(values[0]);
        kinetic_temperature.push(values[1]);
        snapshots
            .push(Array2::from_shape_vec((p, n), values[2..].to_vec()).expect("length checked"));
    }
    if let Some(extra) = lines.next() {
        if !extra?.trim().is_empty() {
            return Err(bad("trailing records after n_samples snapshots"));
        }
    }
    Ok(SampleSet {
        meta,
        snapshots,
        energy,
        kinetic_temperature,
        replica_lengths,
    })
}
