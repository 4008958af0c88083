//! Text and binary file formats.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::degseq::{self, DegreeSequence};
use crate::error::{Error, Result};
use crate::loopforge::Looptree;
use crate::lukapath::LukaPath;
use crate::mapbij::BipartiteMap;
use crate::mmspace::FiniteMMSpace;

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn parse_int(tok: &str) -> Result<i64> {
    tok.parse().map_err(|_| Error::Parse(format!("not an integer: {tok:?}")))
}

/// Parses a degree file: an optional `rho=<int>` line (default 1), then
/// either `<k> <count>` lines with `k` strictly decreasing, or a raw
/// whitespace-separated list of parts. The layout is detected from the
/// shape of the data unless a `format=counts` or `format=parts` line says
/// otherwise. Lines starting with `#` are ignored.
pub fn parse_degrees(text: &str) -> Result<DegreeSequence> {
    let mut rho: i64 = 1;
    let mut rows: Vec<Vec<i64>> = Vec::new();
    let mut format = None;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(v) = line.strip_prefix("rho") {
            let v = v.trim_start().strip_prefix('=').ok_or_else(|| Error::Parse(format!("bad line {line:?}")))?;
            rho = parse_int(v.trim())?;
            continue;
        }
        if let Some(v) = line.strip_prefix("format=") {
            format = match v.trim() {
                "counts" => Some(true),
                "parts" => Some(false),
                other => return Err(Error::Parse(format!("unknown format {other:?}"))),
            };
            continue;
        }
        rows.push(line.split_whitespace().map(parse_int).collect::<Result<_>>()?);
    }
    let counts_format = format.unwrap_or_else(|| {
        !rows.is_empty() && rows.iter().all(|r| r.len() == 2) && rows.windows(2).all(|w| w[0][0] > w[1][0])
    });
    if counts_format && rows.iter().any(|r| r.len() != 2) {
        return Err(Error::Parse("counts lines must be `<k> <count>`".into()));
    }
    let parts: Vec<i64> = if counts_format {
        let mut parts = Vec::new();
        for r in &rows {
            if r[1] < 0 {
                return Err(Error::Parse(format!("negative count for k = {}", r[0])));
            }
            parts.extend(std::iter::repeat_n(r[0], r[1] as usize));
        }
        parts
    } else {
        rows.concat()
    };
    let has_zero = parts.contains(&0);
    if has_zero {
        degseq::validate(rho, &parts)?;
    } else {
        if rho <= 0 {
            return Err(Error::ZeroRho);
        }
        if let Some(i) = parts.iter().position(|&p| p < 0) {
            return Err(Error::NegativePart { index: i, value: parts[i] });
        }
        if let Some(i) = parts.windows(2).position(|w| w[1] > w[0]) {
            return Err(Error::NotSorted { index: i + 1 });
        }
    }
    DegreeSequence::new(rho as usize, parts.iter().map(|&p| p as usize).collect())
}

pub fn read_degrees(path: &Path) -> Result<DegreeSequence> {
    parse_degrees(&read_text(path)?)
}

/// Counts format, largest part first, leaves included.
pub fn format_degrees(seq: &DegreeSequence) -> String {
    let mut s = format!("rho={}\n", seq.rho());
    let mut counts: Vec<(usize, usize)> = seq.counts().collect();
    counts.sort_by(|a, b| b.0.cmp(&a.0));
    for (k, c) in counts {
        let _ = writeln!(s, "{k} {c}");
    }
    s
}

/// CSV `i,jump,x` for `i = 0..=E`, preceded by a `# rho=.. edges=.. seed=..`
/// metadata line.
pub fn write_path_csv<W: Write>(mut w: W, path: &LukaPath, seed: u64) -> std::io::Result<()> {
    writeln!(w, "# rho={} edges={} seed={}", path.start(), path.len(), seed)?;
    writeln!(w, "i,jump,x")?;
    for i in 0..=path.len() {
        writeln!(w, "{},{},{}", i, path.jump(i), path.value(i))?;
    }
    Ok(())
}

/// Reads the output of [`write_path_csv`].
pub fn parse_path_csv(text: &str) -> Result<LukaPath> {
    let mut jumps = Vec::new();
    for line in text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()).skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(Error::Parse(format!("expected 3 columns: {line:?}")));
        }
        let i = parse_int(cols[0])?;
        if i != jumps.len() as i64 {
            return Err(Error::Parse(format!("row {i} out of order")));
        }
        let j = parse_int(cols[1])?;
        if j < 0 {
            return Err(Error::Parse("negative jump".into()));
        }
        jumps.push(j as usize);
    }
    if jumps.len() < 2 {
        return Err(Error::Parse("path needs at least one edge".into()));
    }
    let start = jumps.remove(0);
    Ok(LukaPath::new(start, jumps))
}

/// CSV `src,dst,cycle` with one row per looptree edge in contour order.
pub fn write_looptree_csv<W: Write>(mut w: W, lt: &Looptree) -> std::io::Result<()> {
    writeln!(w, "src,dst,cycle")?;
    for i in 0..lt.edge_count() {
        let (a, b) = lt.edge(i);
        writeln!(w, "{a},{b},{}", lt.edge_cycle(i))?;
    }
    Ok(())
}

/// CSV `corner,vertex`: the planar embedding as the contour sequence.
pub fn write_contour_csv<W: Write>(mut w: W, lt: &Looptree) -> std::io::Result<()> {
    writeln!(w, "corner,vertex")?;
    for (i, v) in lt.corner_vertices().iter().enumerate() {
        writeln!(w, "{i},{v}")?;
    }
    Ok(())
}

/// CSV `corner,vertex,z`.
pub fn write_labels_csv<W: Write>(mut w: W, lt: &Looptree, z: &[i64]) -> std::io::Result<()> {
    writeln!(w, "corner,vertex,z")?;
    for (i, (v, x)) in lt.corner_vertices().iter().zip(z).enumerate() {
        writeln!(w, "{i},{v},{x}")?;
    }
    Ok(())
}

/// Reads the `z` column of [`write_labels_csv`] output, rows in corner order.
pub fn parse_labels_csv(text: &str) -> Result<Vec<i64>> {
    let mut z = Vec::new();
    for line in text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()).skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 || parse_int(cols[0])? != z.len() as i64 {
            return Err(Error::Parse(format!("bad label row {line:?}")));
        }
        z.push(parse_int(cols[2])?);
    }
    if z.is_empty() {
        return Err(Error::Parse("no label rows".into()));
    }
    Ok(z)
}

/// Map text format: `root <half-edge>`, `vstar <vertex>` (or `-`), then one
/// `<id> <twin> <next>` line per half-edge. Vertices are numbered by the
/// smallest half-edge around them.
pub fn write_map<W: Write>(mut w: W, m: &BipartiteMap) -> std::io::Result<()> {
    writeln!(w, "root {}", m.root())?;
    match m.vstar() {
        Some(v) => writeln!(w, "vstar {v}")?,
        None => writeln!(w, "vstar -")?,
    }
    for h in 0..m.half_edge_count() {
        writeln!(w, "{h} {} {}", m.twin(h), m.next(h))?;
    }
    Ok(())
}

/// Reads [`write_map`] output, validating the permutations.
pub fn parse_map(text: &str) -> Result<BipartiteMap> {
    let mut root = None;
    let mut vstar = None;
    let mut rows: Vec<(usize, usize, usize)> = Vec::new();
    for line in text.lines() {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            [] => {}
            ["#", ..] => {}
            ["root", h] => root = Some(parse_int(h)? as usize),
            ["vstar", "-"] => {}
            ["vstar", v] => vstar = Some(parse_int(v)? as usize),
            [a, b, c] => {
                let (a, b, c) = (parse_int(a)?, parse_int(b)?, parse_int(c)?);
                if a < 0 || b < 0 || c < 0 {
                    return Err(Error::Parse(format!("negative id in {line:?}")));
                }
                rows.push((a as usize, b as usize, c as usize));
            }
            _ => return Err(Error::Parse(format!("bad line {line:?}"))),
        }
    }
    let n = rows.len();
    let mut twin = vec![usize::MAX; n];
    let mut next = vec![usize::MAX; n];
    for (h, t, s) in rows {
        if h >= n || twin[h] != usize::MAX {
            return Err(Error::InvalidMap(format!("half-edge {h} missing or repeated")));
        }
        twin[h] = t;
        next[h] = s;
    }
    let root = root.ok_or_else(|| Error::Parse("missing root line".into()))?;
    BipartiteMap::new(twin, next, root, vstar)
}

pub fn write_mm(path: &Path, space: &FiniteMMSpace) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::Parse(e.to_string()))?;
    space.write_to(std::io::BufWriter::new(f)).map_err(|e| Error::Parse(e.to_string()))
}

pub fn read_mm(path: &Path) -> Result<FiniteMMSpace> {
    let f = std::fs::File::open(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    FiniteMMSpace::read_from(std::io::BufReader::new(f))
}
