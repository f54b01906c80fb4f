//! CSV emission.

use std::io::Write;

use crate::error::CliResult;
use crate::sweep::ResultRow;

/// `# aoa-pla-lab v<semver> seed=<seed>`
pub fn header_comment(seed: u64) -> String {
    format!("# aoa-pla-lab v{} seed={seed}", env!("CARGO_PKG_VERSION"))
}

/// Header comment, column names, then one record per row.
pub fn write_csv<W: Write>(mut out: W, rows: &[ResultRow], seed: u64) -> CliResult<()> {
    writeln!(out, "{}", header_comment(seed))?;
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(rows: &[ResultRow], seed: u64) -> CliResult<String> {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows, seed)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}
