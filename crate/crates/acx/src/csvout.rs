//! CSV output helpers.
//!
//! One dialect everywhere: comma separators, a header row, LF line
//! endings, `.` as the decimal mark. Floats print in Rust's shortest
//! round-trip form, so equal inputs produce byte-identical files and
//! parsing a written value recovers exactly the bits that were written.

use std::fs::{self, File};
use std::path::{Path, PathBuf};

use crate::CliResult;

/// Shortest round-trip decimal form of a float.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn flag(b: bool) -> String {
    String::from(if b { "true" } else { "false" })
}

/// CSV writer over a freshly created file.
pub struct Table {
    path: PathBuf,
    w: csv::Writer<File>,
}

impl Table {
    /// Creates `name` under `dir` (made on demand) and writes the header.
    pub fn create(dir: &Path, name: &str, header: &[&str]) -> CliResult<Table> {
        fs::create_dir_all(dir)?;
        let path = dir.join(name);
        let file = File::create(&path)?;
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(file);
        w.write_record(header)?;
        Ok(Table { path, w })
    }

    pub fn row<I, S>(&mut self, fields: I) -> CliResult<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.w.write_record(fields)?;
        Ok(())
    }

    /// Flushes and returns the file path for reporting.
    pub fn finish(mut self) -> CliResult<PathBuf> {
        self.w.flush()?;
        Ok(self.path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_roundtrip_through_their_printed_form() {
        let third = 1.0 / 3.0;
        for x in [0.1, third, std::f64::consts::PI, 1e-300, -0.0, 123456.789012345] {
            let s = num(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn tables_use_lf_and_a_header() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::create(dir.path(), "t.csv", &["a", "b"]).unwrap();
        t.row(["1", "2"]).unwrap();
        let path = t.finish().unwrap();
        let bytes = fs::read(path).unwrap();
        assert_eq!(bytes, b"a,b\n1,2\n");
    }
}
