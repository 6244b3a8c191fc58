//! Thin wrappers around `csv` that attach file paths to errors and enforce
//! exact headers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub(crate) fn reader(path: &Path, expected: &[&str]) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = rdr.headers().map_err(|source| Error::Csv {
        path: path.display().to_string(),
        source,
    })?;
    let got: Vec<&str> = headers.iter().collect();
    if got.len() < expected.len() || got[..expected.len()] != *expected {
        return Err(Error::input(format!(
            "{}: expected header `{}`, found `{}`",
            path.display(),
            expected.join(","),
            got.join(",")
        )));
    }
    Ok(rdr)
}

pub(crate) fn records(
    path: &Path,
    expected: &[&str],
) -> Result<impl Iterator<Item = Result<csv::StringRecord>>> {
    let rdr = reader(path, expected)?;
    let p = path.display().to_string();
    Ok(rdr.into_records().map(move |r| {
        r.map_err(|source| Error::Csv {
            path: p.clone(),
            source,
        })
    }))
}

pub(crate) fn field<'a>(rec: &'a csv::StringRecord, i: usize, name: &str, path: &Path) -> Result<&'a str> {
    rec.get(i).ok_or_else(|| {
        Error::input(format!(
            "{}: line {}: missing column `{name}`",
            path.display(),
            rec.position().map(|p| p.line()).unwrap_or(0)
        ))
    })
}

pub(crate) fn parse<T: std::str::FromStr>(
    rec: &csv::StringRecord,
    i: usize,
    name: &str,
    path: &Path,
) -> Result<T> {
    let raw = field(rec, i, name, path)?;
    raw.trim().parse::<T>().map_err(|_| {
        Error::input(format!(
            "{}: line {}: cannot parse `{raw}` as {name}",
            path.display(),
            rec.position().map(|p| p.line()).unwrap_or(0)
        ))
    })
}

/// CSV writer with a fixed header row.
pub struct CsvOut {
    inner: csv::Writer<BufWriter<File>>,
    path: String,
}

impl CsvOut {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        let file = File::create(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut inner = csv::WriterBuilder::new().from_writer(BufWriter::new(file));
        let p = path.display().to_string();
        inner.write_record(header).map_err(|source| Error::Csv {
            path: p.clone(),
            source,
        })?;
        Ok(CsvOut { inner, path: p })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.inner.write_record(fields).map_err(|source| Error::Csv {
            path: self.path.clone(),
            source,
        })
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush().map_err(|source| Error::Io {
            path: self.path.clone(),
            source,
        })
    }
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = File::create(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    f.write_all(text.as_bytes()).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}
