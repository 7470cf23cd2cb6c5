//! Field files: the `PGF 1` text format and CSV export.
//!
//! ```text
//! PGF 1
//! p n
//! T: T1 … Tp
//! N: N1 … Np
//! <point_count lines of n values, grid-major>
//! ```

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::domain::{make_domain, Field};
use crate::error::{Error, Result};

const MAGIC: &str = "PGF 1";

fn parse_err(source: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        source_name: source.to_string(),
        line,
        message: message.into(),
    }
}

/// Serializes a field with 17 significant digits per value.
pub fn write_pgf<W: Write>(field: &Field, out: W) -> Result<()> {
    let d = field.domain();
    let mut w = BufWriter::new(out);
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "{} {}", d.p(), d.n())?;
    let periods: Vec<String> = d.periods().iter().map(|t| format!("{t:.16e}")).collect();
    writeln!(w, "T: {}", periods.join(" "))?;
    let sizes: Vec<String> = d.grid_sizes().iter().map(|n| n.to_string()).collect();
    writeln!(w, "N: {}", sizes.join(" "))?;
    for point in field.points() {
        let row: Vec<String> = point.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_pgf(field: &Field, path: &Path) -> Result<()> {
    let file = fs::File::create(path)?;
    write_pgf(field, file)
}

/// Parses a `PGF 1` document. `source` names it in error messages.
pub fn parse_pgf(text: &str, source: &str) -> Result<Field> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| parse_err(source, 0, format!("unexpected end of file, expected {what}")))
    };

    let (ln, magic) = next("header")?;
    if magic != MAGIC {
        return Err(parse_err(source, ln, format!("expected `{MAGIC}`, found `{magic}`")));
    }

    let (ln, dims) = next("`p n`")?;
    let dims: Vec<usize> = dims
        .split_whitespace()
        .map(|s| s.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| parse_err(source, ln, format!("bad `p n` line: {e}")))?;
    let [p, n] = dims[..] else {
        return Err(parse_err(source, ln, "expected two integers `p n`"));
    };

    let (ln, periods) = next("`T:` line")?;
    let periods: Vec<f64> = tagged(periods, "T:", p)
        .map_err(|m| parse_err(source, ln, m))?
        .iter()
        .map(|s| s.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| parse_err(source, ln, format!("bad period: {e}")))?;

    let (ln, sizes) = next("`N:` line")?;
    let sizes: Vec<usize> = tagged(sizes, "N:", p)
        .map_err(|m| parse_err(source, ln, m))?
        .iter()
        .map(|s| s.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| parse_err(source, ln, format!("bad grid size: {e}")))?;

    let domain = make_domain(p, n, &periods, &sizes).map_err(|e| parse_err(source, ln, e.to_string()))?;
    let count = domain.point_count();
    let mut values = Vec::with_capacity(count * n);
    for point in 0..count {
        let (ln, row) = next("field values")?;
        let mut cols = 0;
        for (i, tok) in row.split_whitespace().enumerate() {
            let v: f64 = tok
                .parse()
                .map_err(|e| parse_err(source, ln, format!("bad value `{tok}`: {e}")))?;
            if !v.is_finite() {
                return Err(parse_err(
                    source,
                    ln,
                    format!(
                        "non-finite value at grid index {:?}, component {}",
                        domain.multi_index(point),
                        i + 1
                    ),
                ));
            }
            values.push(v);
            cols += 1;
        }
        if cols != n {
            return Err(parse_err(source, ln, format!("expected {n} values, found {cols}")));
        }
    }
    if let Ok((ln, _)) = next("") {
        return Err(parse_err(source, ln, format!("trailing data after {count} points")));
    }
    Field::from_values(&domain, values)
}

fn tagged<'a>(line: &'a str, tag: &str, p: usize) -> std::result::Result<Vec<&'a str>, String> {
    let rest = line
        .strip_prefix(tag)
        .ok_or_else(|| format!("expected line starting with `{tag}`"))?;
    let toks: Vec<&str> = rest.split_whitespace().collect();
    if toks.len() != p {
        return Err(format!("`{tag}` needs {p} entries, found {}", toks.len()));
    }
    Ok(toks)
}

pub fn load_pgf(path: &Path) -> Result<Field> {
    let text = fs::read_to_string(path)?;
    parse_pgf(&text, &path.display().to_string())
}

/// CSV with header `t1,…,tp,u1,…,un` and one row per grid node.
pub fn write_csv<W: Write>(field: &Field, out: W) -> Result<()> {
    let d = field.domain();
    let mut w = BufWriter::new(out);
    let header: Vec<String> = (1..=d.p())
        .map(|a| format!("t{a}"))
        .chain((1..=d.n()).map(|i| format!("u{i}")))
        .collect();
    writeln!(w, "{}", header.join(","))?;
    let mut t = vec![0.0; d.p()];
    for (k, point) in field.points().enumerate() {
        d.node_into(k, &mut t);
        let row: Vec<String> = t.iter().chain(point).map(|v| format!("{v:.16e}")).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_csv(field: &Field, path: &Path) -> Result<()> {
    let file = fs::File::create(path)?;
    write_csv(field, file)
}
