//! CSV catalogs (`x1,x2,v3[,sigma_v3]`) and chain files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::projection::{Observation, ObservationSet};
use crate::report::ChainRecord;

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { path: path.display().to_string(), line, msg: msg.into() }
}

/// Reads a tracer catalog. Column order is free; `sigma_v3` is optional and
/// may be left blank per row.
pub fn load_catalog(path: &Path) -> Result<ObservationSet<f64>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (ix1, ix2, iv3) = match (col("x1"), col("x2"), col("v3")) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => {
            return Err(parse_err(
                path,
                1,
                format!("header must contain x1,x2,v3 (found: {})", headers.iter().collect::<Vec<_>>().join(",")),
            ))
        }
    };
    let isig = col("sigma_v3");
    let mut obs = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize, name: &str| -> Result<f64> {
            let raw = rec.get(i).ok_or_else(|| parse_err(path, line, format!("missing field {name}")))?;
            let v: f64 = raw
                .parse()
                .map_err(|_| parse_err(path, line, format!("field {name} is not a number: '{raw}'")))?;
            if !v.is_finite() {
                return Err(parse_err(path, line, format!("field {name} is not finite")));
            }
            Ok(v)
        };
        let mut o = Observation::new(field(ix1, "x1")?, field(ix2, "x2")?, field(iv3, "v3")?);
        if let Some(i) = isig {
            if rec.get(i).is_some_and(|s| !s.is_empty()) {
                let s = field(i, "sigma_v3")?;
                if s < 0.0 {
                    return Err(parse_err(path, line, "sigma_v3 must be >= 0"));
                }
                o = o.with_error(s);
            }
        }
        obs.push(o);
    }
    if obs.is_empty() {
        return Err(Error::Usage(format!("{}: catalog has no data rows", path.display())));
    }
    ObservationSet::new(obs)
}

pub fn write_catalog(path: &Path, data: &ObservationSet<f64>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let with_err = data.has_errors();
    if with_err {
        writeln!(w, "x1,x2,v3,sigma_v3")?;
    } else {
        writeln!(w, "x1,x2,v3")?;
    }
    for o in data {
        if with_err {
            let s = o.sigma_v3.map(|s| s.to_string()).unwrap_or_default();
            writeln!(w, "{},{},{},{}", o.x1, o.x2, o.v3, s)?;
        } else {
            writeln!(w, "{},{},{}", o.x1, o.x2, o.v3)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Column names of a chain file.
pub fn chain_header(n_rho: usize, n_f: usize) -> Vec<String> {
    let mut h = vec!["iteration".to_string()];
    h.extend((1..=n_rho).map(|i| format!("rho_{i}")));
    h.extend((1..=n_f).map(|j| format!("f_{j}")));
    h.push("log_post".into());
    h
}

/// Writes stored states with shortest round-trip float formatting.
pub fn write_chain_csv(path: &Path, records: &[ChainRecord], n_rho: usize, n_f: usize) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", chain_header(n_rho, n_f).join(","))?;
    for r in records {
        write!(w, "{}", r.iteration)?;
        for v in r.rho.iter().chain(&r.f) {
            write!(w, ",{v}")?;
        }
        writeln!(w, ",{}", r.log_post)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_chain_csv(path: &Path) -> Result<Vec<ChainRecord>> {
    let mut rdr = csv::ReaderBuilder::new().from_path(path)?;
    let headers = rdr.headers()?.clone();
    let n_rho = headers.iter().filter(|h| h.starts_with("rho_")).count();
    let n_f = headers.iter().filter(|h| h.starts_with("f_")).count();
    let expected = chain_header(n_rho, n_f);
    if headers.iter().ne(expected.iter().map(String::as_str)) {
        return Err(parse_err(path, 1, "unexpected chain header"));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let num = |i: usize| -> Result<f64> {
            rec[i].parse::<f64>().map_err(|_| parse_err(path, line, format!("bad number '{}'", &rec[i])))
        };
        let iteration = rec[0].parse::<usize>().map_err(|_| parse_err(path, line, "bad iteration"))?;
        let rho = (1..=n_rho).map(num).collect::<Result<Vec<_>>>()?;
        let f = (n_rho + 1..=n_rho + n_f).map(num).collect::<Result<Vec<_>>>()?;
        out.push(ChainRecord { iteration, rho, f, log_post: num(n_rho + n_f + 1)? });
    }
    Ok(out)
}
