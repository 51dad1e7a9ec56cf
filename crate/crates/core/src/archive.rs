//! Posterior sample archive and its on-disk layout.
//!
//! A run directory holds three CSV files, all reals written with 17
//! significant digits so that reading them back is exact:
//!
//! * `sweeps.csv`: `iteration,k,u,n_na,total_mass,epsilon` then one column per
//!   global model parameter;
//! * `atoms.csv`: `iteration,atom,allocated,size,jump` then the location
//!   columns of the model, allocated atoms first;
//! * `allocations.csv`: `iteration,c1,…,cn` with atom indices into the
//!   allocated block.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::models::MixtureModel;
use crate::{Error, Result};

/// State of one kept sweep. Atoms `0..k` are the allocated ones.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord<L, G> {
    pub iteration: usize,
    pub u: f64,
    pub epsilon: f64,
    pub total_mass: f64,
    pub global: G,
    pub jumps: Vec<f64>,
    pub locations: Vec<L>,
    pub cluster_sizes: Vec<u32>,
    pub allocations: Vec<u32>,
}

impl<L, G> SweepRecord<L, G> {
    pub fn k(&self) -> usize {
        self.cluster_sizes.len()
    }

    pub fn n_na(&self) -> usize {
        self.jumps.len() - self.k()
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.jumps.iter().map(move |j| j / self.total_mass)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Archive<L, G> {
    pub sweeps: Vec<SweepRecord<L, G>>,
}

impl<L, G> Default for Archive<L, G> {
    fn default() -> Self {
        Archive { sweeps: Vec::new() }
    }
}

impl<L, G> Archive<L, G> {
    pub fn len(&self) -> usize {
        self.sweeps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sweeps.is_empty()
    }

    /// Number of observations, taken from the first sweep.
    pub fn n_obs(&self) -> usize {
        self.sweeps.first().map_or(0, |s| s.allocations.len())
    }
}

pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn writer(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Writes the archive into `dir`, which must exist.
pub fn write_archive<M: MixtureModel>(dir: &Path, model: &M, archive: &Archive<M::Location, M::Global>) -> Result<()> {
    let n_global = archive
        .sweeps
        .first()
        .map_or(0, |s| model.global_to_vec(&s.global).len());
    let mut sw = writer(&dir.join("sweeps.csv"))?;
    let mut header = "iteration,k,u,n_na,total_mass,epsilon".to_string();
    for g in 0..n_global {
        header.push_str(&format!(",global{g}"));
    }
    writeln!(sw, "{header}")?;
    let mut aw = writer(&dir.join("atoms.csv"))?;
    writeln!(
        aw,
        "iteration,atom,allocated,size,jump,{}",
        model.location_columns().join(",")
    )?;
    let mut cw = writer(&dir.join("allocations.csv"))?;
    let n = archive.n_obs();
    let cols: Vec<String> = (1..=n).map(|i| format!("c{i}")).collect();
    writeln!(cw, "iteration,{}", cols.join(","))?;

    for s in &archive.sweeps {
        let mut line = format!(
            "{},{},{},{},{},{}",
            s.iteration,
            s.k(),
            fmt_real(s.u),
            s.n_na(),
            fmt_real(s.total_mass),
            fmt_real(s.epsilon)
        );
        for g in model.global_to_vec(&s.global) {
            line.push(',');
            line.push_str(&fmt_real(g));
        }
        writeln!(sw, "{line}")?;
        for (j, (jump, loc)) in s.jumps.iter().zip(&s.locations).enumerate() {
            let allocated = j < s.k();
            let size = if allocated { s.cluster_sizes[j] } else { 0 };
            let locs: Vec<String> = model.location_to_vec(loc).into_iter().map(fmt_real).collect();
            writeln!(
                aw,
                "{},{j},{},{size},{},{}",
                s.iteration,
                allocated as u8,
                fmt_real(*jump),
                locs.join(",")
            )?;
        }
        let alloc: Vec<String> = s.allocations.iter().map(|c| c.to_string()).collect();
        writeln!(cw, "{},{}", s.iteration, alloc.join(","))?;
    }
    sw.flush()?;
    aw.flush()?;
    cw.flush()?;
    Ok(())
}

fn parse<T: std::str::FromStr>(path: &Path, line: usize, cell: Option<&str>, what: &str) -> Result<T> {
    let cell = cell.unwrap_or("");
    cell.parse().map_err(|_| Error::Parse {
        path: path.display().to_string(),
        line,
        msg: format!("bad {what} '{cell}'"),
    })
}

fn records(path: &Path) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    r.records().enumerate().map(|(i, rec)| Ok((i + 2, rec?))).collect()
}

/// Reads an archive written by [`write_archive`].
pub fn read_archive<M: MixtureModel>(dir: &Path, model: &M) -> Result<Archive<M::Location, M::Global>> {
    let sp = dir.join("sweeps.csv");
    let ap = dir.join("atoms.csv");
    let cp = dir.join("allocations.csv");
    let mut sweeps = Vec::new();
    for (line, rec) in records(&sp)? {
        let iteration: usize = parse(&sp, line, rec.get(0), "iteration")?;
        let k: usize = parse(&sp, line, rec.get(1), "k")?;
        let n_na: usize = parse(&sp, line, rec.get(3), "n_na")?;
        let g: Vec<f64> = (6..rec.len())
            .map(|c| parse(&sp, line, rec.get(c), "global"))
            .collect::<Result<_>>()?;
        sweeps.push((
            k + n_na,
            SweepRecord {
                iteration,
                u: parse(&sp, line, rec.get(2), "u")?,
                total_mass: parse(&sp, line, rec.get(4), "total_mass")?,
                epsilon: parse(&sp, line, rec.get(5), "epsilon")?,
                global: model.global_from_slice(&g)?,
                jumps: Vec::new(),
                locations: Vec::new(),
                cluster_sizes: vec![0; k],
                allocations: Vec::new(),
            },
        ));
    }
    let mut idx = 0;
    for (line, rec) in records(&ap)? {
        let iteration: usize = parse(&ap, line, rec.get(0), "iteration")?;
        while idx < sweeps.len() && sweeps[idx].1.jumps.len() == sweeps[idx].0 {
            idx += 1;
        }
        let s = match sweeps.get_mut(idx) {
            Some((_, s)) if s.iteration == iteration => s,
            _ => {
                return Err(Error::Parse {
                    path: ap.display().to_string(),
                    line,
                    msg: format!("atom row for unexpected iteration {iteration}"),
                })
            }
        };
        let j = s.jumps.len();
        if j < s.cluster_sizes.len() {
            s.cluster_sizes[j] = parse(&ap, line, rec.get(3), "size")?;
        }
        s.jumps.push(parse(&ap, line, rec.get(4), "jump")?);
        let loc: Vec<f64> = (5..rec.len())
            .map(|c| parse(&ap, line, rec.get(c), "location"))
            .collect::<Result<_>>()?;
        s.locations.push(model.location_from_slice(&loc)?);
    }
    let recs = records(&cp)?;
    if recs.len() != sweeps.len() {
        return Err(Error::Parse {
            path: cp.display().to_string(),
            line: 1,
            msg: format!("{} allocation rows for {} sweeps", recs.len(), sweeps.len()),
        });
    }
    for ((line, rec), (_, s)) in recs.into_iter().zip(sweeps.iter_mut()) {
        s.allocations = (1..rec.len())
            .map(|c| parse(&cp, line, rec.get(c), "allocation"))
            .collect::<Result<_>>()?;
    }
    if let Some((want, s)) = sweeps.iter().find(|(want, s)| s.jumps.len() != *want) {
        return Err(Error::Parse {
            path: ap.display().to_string(),
            line: 1,
            msg: format!("iteration {} has {} atoms, expected {want}", s.iteration, s.jumps.len()),
        });
    }
    let sweeps = sweeps.into_iter().map(|(_, s)| s).collect();
    Ok(Archive { sweeps })
}
