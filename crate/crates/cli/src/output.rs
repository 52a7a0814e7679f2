//! CSV tables (RFC 4180) and the number formats used in them.

use std::io::Write;

use symdom::linalg::C64;
use symdom::Point;

/// Shortest round-trip decimal, switching to exponent form for very large
/// or very small magnitudes.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// `re+imj`, or just `re` for real values.
pub fn fmt_c64(c: C64) -> String {
    if c.im == 0.0 {
        fmt_f64(c.re)
    } else if c.im < 0.0 || c.im.is_nan() {
        format!("{}{}j", fmt_f64(c.re), fmt_f64(c.im))
    } else {
        format!("{}+{}j", fmt_f64(c.re), fmt_f64(c.im))
    }
}

/// Coordinates joined by spaces, for single-cell point columns.
pub fn fmt_point(z: &Point) -> String {
    z.coords().iter().map(|&c| fmt_c64(c)).collect::<Vec<_>>().join(" ")
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(w);
        out.write_record(&self.header)?;
        for r in &self.rows {
            out.write_record(r)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV fields are UTF-8")
    }
}
