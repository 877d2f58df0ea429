//! Versioned text container for connection and frame fields.
//!
//! ```text
//! REFLOW-FIELD 1
//! kind connection            (or: frame)
//! family space_form          (or: lagrangian)
//! n 2
//! k 1
//! loop real                  (or: circle)
//! signature 1 1 1 -1
//! counts 65 65
//! spacing <hex> <hex>
//! origin <hex> <hex>
//! lambda <hex>               (frame only)
//! data
//! <m·m hex words>            one matrix per line, row-major
//! ```
//!
//! Every float is the 16-digit hexadecimal image of its IEEE-754 binary64 bit
//! pattern, so a round trip is exact. Connection data lists, for each point in
//! storage order (last axis fastest) and each direction, the lines `a`, `b`,
//! `c`; frame data lists one matrix per point.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::liecore::{Family, SymmetricPairSpec};
use crate::linalg::Mat;
use crate::loops::{ConnectionField, GridChart, Spectral};
use crate::zerocurv::FrameField;

pub const MAGIC: &str = "REFLOW-FIELD 1";

fn hex(x: f64) -> String {
    format!("{:016x}", x.to_bits())
}

fn unhex(s: &str) -> Result<f64> {
    if s.len() != 16 {
        return Err(Error::Format(format!("bad float word {s:?}")));
    }
    u64::from_str_radix(s, 16).map(f64::from_bits).map_err(|_| Error::Format(format!("bad float word {s:?}")))
}

fn write_header<W: Write>(
    w: &mut W,
    kind: &str,
    spec: &SymmetricPairSpec,
    chart: &GridChart,
    spectral: Spectral,
    lambda: Option<f64>,
) -> Result<()> {
    let join = |v: Vec<String>| v.join(" ");
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "kind {kind}")?;
    writeln!(w, "family {}", spec.family.as_str())?;
    writeln!(w, "n {}", spec.n)?;
    writeln!(w, "k {}", spec.k)?;
    writeln!(w, "loop {}", spectral.as_str())?;
    writeln!(w, "signature {}", join(spec.signature.iter().map(|s| format!("{}", *s as i32)).collect()))?;
    writeln!(w, "counts {}", join(chart.counts.iter().map(|c| c.to_string()).collect()))?;
    writeln!(w, "spacing {}", join(chart.spacing.iter().map(|&x| hex(x)).collect()))?;
    writeln!(w, "origin {}", join(chart.origin.iter().map(|&x| hex(x)).collect()))?;
    if let Some(l) = lambda {
        writeln!(w, "lambda {}", hex(l))?;
    }
    writeln!(w, "data")?;
    Ok(())
}

fn write_matrix<W: Write>(w: &mut W, x: &Mat) -> Result<()> {
    let words: Vec<String> = (0..x.nrows()).flat_map(|r| (0..x.ncols()).map(move |c| (r, c))).map(|rc| hex(x[rc])).collect();
    writeln!(w, "{}", words.join(" "))?;
    Ok(())
}

pub fn write_connection<W: Write>(w: &mut W, spec: &SymmetricPairSpec, field: &ConnectionField) -> Result<()> {
    if field.m != spec.m || field.dim() != spec.n {
        return Err(Error::SizeMismatch { left: field.m, right: spec.m });
    }
    write_header(w, "connection", spec, &field.chart, field.spectral, None)?;
    for p in 0..field.chart.len() {
        for d in 0..field.dim() {
            write_matrix(w, field.a(p, d))?;
            write_matrix(w, field.b(p, d))?;
            write_matrix(w, field.c(p, d))?;
        }
    }
    Ok(())
}

pub fn write_frame<W: Write>(w: &mut W, spec: &SymmetricPairSpec, frame: &FrameField) -> Result<()> {
    write_header(w, "frame", spec, &frame.chart, frame.spectral, Some(frame.lambda))?;
    for f in &frame.frames {
        write_matrix(w, f)?;
    }
    Ok(())
}

struct Header {
    kind: String,
    spec: SymmetricPairSpec,
    chart: GridChart,
    spectral: Spectral,
    lambda: Option<f64>,
}

struct Lines<R: BufRead> {
    inner: std::io::Lines<R>,
    number: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self) -> Result<String> {
        self.number += 1;
        match self.inner.next() {
            Some(line) => Ok(line?),
            None => Err(Error::Format(format!("unexpected end of input at line {}", self.number))),
        }
    }

    fn field(&mut self, key: &str) -> Result<Vec<String>> {
        let line = self.next_line()?;
        let mut words = line.split_whitespace();
        if words.next() != Some(key) {
            return Err(Error::Format(format!("line {}: expected {key:?}, got {line:?}", self.number)));
        }
        Ok(words.map(str::to_string).collect())
    }

    fn single(&mut self, key: &str) -> Result<String> {
        let v = self.field(key)?;
        match v.as_slice() {
            [one] => Ok(one.clone()),
            _ => Err(Error::Format(format!("line {}: {key} takes one value", self.number))),
        }
    }

    fn matrix(&mut self, m: usize) -> Result<Mat> {
        let line = self.next_line()?;
        let words: Vec<&str> = line.split_whitespace().collect();
        if words.len() != m * m {
            return Err(Error::Format(format!("line {}: expected {} words, got {}", self.number, m * m, words.len())));
        }
        let vals = words.iter().map(|w| unhex(w)).collect::<Result<Vec<f64>>>()?;
        Ok(Mat::from_row_slice(m, m, &vals))
    }
}

fn parse_usize(s: &str) -> Result<usize> {
    s.parse().map_err(|_| Error::Format(format!("bad integer {s:?}")))
}

fn read_header<R: BufRead>(lines: &mut Lines<R>) -> Result<Header> {
    let magic = lines.next_line()?;
    if magic.trim_end() != MAGIC {
        return Err(Error::Format(format!("not a field container (header {magic:?})")));
    }
    let kind = lines.single("kind")?;
    let fam = lines.single("family")?;
    let family = Family::parse(&fam).ok_or_else(|| Error::Format(format!("unknown family {fam:?}")))?;
    let n = parse_usize(&lines.single("n")?)?;
    let k = parse_usize(&lines.single("k")?)?;
    let lp = lines.single("loop")?;
    let spectral = Spectral::parse(&lp).ok_or_else(|| Error::Format(format!("unknown loop kind {lp:?}")))?;
    let signature = lines
        .field("signature")?
        .iter()
        .map(|s| match s.as_str() {
            "1" => Ok(1.0),
            "-1" => Ok(-1.0),
            _ => Err(Error::Format(format!("bad signature entry {s:?}"))),
        })
        .collect::<Result<Vec<f64>>>()?;
    let counts = lines.field("counts")?.iter().map(|s| parse_usize(s)).collect::<Result<Vec<_>>>()?;
    let spacing = lines.field("spacing")?.iter().map(|s| unhex(s)).collect::<Result<Vec<_>>>()?;
    let origin = lines.field("origin")?.iter().map(|s| unhex(s)).collect::<Result<Vec<_>>>()?;
    let lambda = if kind == "frame" { Some(unhex(&lines.single("lambda")?)?) } else { None };
    if lines.next_line()?.trim_end() != "data" {
        return Err(Error::Format(format!("line {}: expected \"data\"", lines.number)));
    }
    let hyperbolic = signature.iter().any(|&s| s < 0.0);
    let spec = SymmetricPairSpec::from_parts(family, n, k, hyperbolic)?;
    if spec.signature != signature {
        return Err(Error::Format(format!("signature {signature:?} does not match the {} family", family.as_str())));
    }
    let chart = GridChart::new(counts, spacing, origin)?;
    if chart.dim() != n {
        return Err(Error::Format(format!("grid dimension {} differs from n = {n}", chart.dim())));
    }
    Ok(Header { kind, spec, chart, spectral, lambda })
}

fn expect_end<R: BufRead>(lines: &mut Lines<R>) -> Result<()> {
    match lines.inner.next() {
        None => Ok(()),
        Some(_) => Err(Error::Format("trailing data after the last matrix".into())),
    }
}

pub fn read_connection<R: BufRead>(r: R) -> Result<(SymmetricPairSpec, ConnectionField)> {
    let mut lines = Lines { inner: r.lines(), number: 0 };
    let h = read_header(&mut lines)?;
    if h.kind != "connection" {
        return Err(Error::Format(format!("expected a connection container, found {:?}", h.kind)));
    }
    let m = h.spec.m;
    let mut err = None;
    let spectral = h.spectral;
    let field = ConnectionField::from_fn(h.chart, m, |_| {
        let mut take = |lines: &mut Lines<R>| match lines.matrix(m) {
            Ok(x) => x,
            Err(e) => {
                err.get_or_insert(e);
                Mat::zeros(m, m)
            }
        };
        let (mut a, mut b, mut c) = (Vec::new(), Vec::new(), Vec::new());
        for _ in 0..h.spec.n {
            a.push(take(&mut lines));
            b.push(take(&mut lines));
            c.push(take(&mut lines));
        }
        (a, b, c)
    })?
    .with_spectral(spectral);
    if let Some(e) = err {
        return Err(e);
    }
    expect_end(&mut lines)?;
    Ok((h.spec, field))
}

pub fn read_frame<R: BufRead>(r: R) -> Result<(SymmetricPairSpec, FrameField)> {
    let mut lines = Lines { inner: r.lines(), number: 0 };
    let h = read_header(&mut lines)?;
    if h.kind != "frame" {
        return Err(Error::Format(format!("expected a frame container, found {:?}", h.kind)));
    }
    let frames = (0..h.chart.len()).map(|_| lines.matrix(h.spec.m)).collect::<Result<Vec<_>>>()?;
    expect_end(&mut lines)?;
    Ok((h.spec, FrameField { chart: h.chart, spectral: h.spectral, lambda: h.lambda.expect("frame header has lambda"), frames }))
}

pub fn save_connection(path: &Path, spec: &SymmetricPairSpec, field: &ConnectionField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_connection(&mut w, spec, field)?;
    w.flush()?;
    Ok(())
}

pub fn load_connection(path: &Path) -> Result<(SymmetricPairSpec, ConnectionField)> {
    read_connection(BufReader::new(File::open(path)?))
}

pub fn save_frame(path: &Path, spec: &SymmetricPairSpec, frame: &FrameField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_frame(&mut w, spec, frame)?;
    w.flush()?;
    Ok(())
}

pub fn load_frame(path: &Path) -> Result<(SymmetricPairSpec, FrameField)> {
    read_frame(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liecore::build_space_form_pair;
    use crate::solitons::{soliton_field, SolitonParams};
    use crate::zerocurv::{integrate_frame, IntegrationOptions};

    #[test]
    fn connection_round_trip_is_bit_exact() {
        let spec = build_space_form_pair(2, 1, true).unwrap();
        let chart = GridChart::new(vec![4, 3], vec![0.05, 0.1], vec![0.25, -1.0]).unwrap();
        let f = soliton_field(&spec, chart, &SolitonParams::for_spec(&spec)).unwrap();
        let mut buf = Vec::new();
        write_connection(&mut buf, &spec, &f).unwrap();
        let (spec2, g) = read_connection(buf.as_slice()).unwrap();
        assert_eq!(spec2.signature, spec.signature);
        assert_eq!(g, f);
        let mut again = Vec::new();
        write_connection(&mut again, &spec2, &g).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn frame_round_trip() {
        let spec = build_space_form_pair(2, 1, false).unwrap();
        let chart = GridChart::uniform(2, 5, 0.05).unwrap();
        let f = soliton_field(&spec, chart, &SolitonParams::for_spec(&spec)).unwrap();
        let opts = IntegrationOptions { mc_tol: 1e-2, ..Default::default() };
        let fr = integrate_frame(&f, 2.0, &[0, 1], &opts).unwrap();
        let mut buf = Vec::new();
        write_frame(&mut buf, &spec, &fr).unwrap();
        let (_, back) = read_frame(buf.as_slice()).unwrap();
        assert_eq!(back, fr);
    }

    #[test]
    fn rejects_corrupt_input() {
        assert!(matches!(read_connection("nonsense\n".as_bytes()), Err(Error::Format(_))));
        let spec = build_space_form_pair(2, 1, false).unwrap();
        let chart = GridChart::uniform(2, 3, 0.05).unwrap();
        let f = soliton_field(&spec, chart, &SolitonParams::for_spec(&spec)).unwrap();
        let mut buf = Vec::new();
        write_connection(&mut buf, &spec, &f).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let truncated: String = text.lines().take(20).map(|l| format!("{l}\n")).collect();
        assert!(read_connection(truncated.as_bytes()).is_err());
        let bad = text.replacen("signature 1 1 1 1", "signature 1 1 -1 1", 1);
        assert!(read_connection(bad.as_bytes()).is_err());
    }
}
