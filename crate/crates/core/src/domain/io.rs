//! Grid field files.
//!
//! Two layouts carry the same content: a header (p, q, lattice extents,
//! continuous ranges and spacings, matrix shape) followed by row-major
//! samples with real and imaginary parts interleaved.
//!
//! CSV layout:
//!
//! ```text
//! curvkit-field,1
//! p,<p>,q,<q>,rows,<rows>,cols,<cols>
//! lattice,<mu>,<lo>,<hi>,<rlo>,<rhi>  (p lines: extent, then region)
//! continuous,<i>,<a>,<b>,<h>          (q lines)
//! n0,..,x0,..,re00,im00,re01,...      (column header)
//! <one line per sample point>
//! ```
//!
//! Binary layout (little endian): magic `CVKF`, `u32` version, `u32` p, q,
//! rows, cols, `i64` extent lo/hi and region lo/hi per lattice direction,
//! `f64` a/b/h per continuous direction, then the `f64` sample stream.
//!
//! Only samples are stored; attached derivative channels are not.

use std::io::{BufRead, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use super::{make_domain, Domain, Field, LatticeBox};
use crate::error::{Error, Result};
use crate::value::{Shape, C64};

const MAGIC: &[u8; 4] = b"CVKF";
const VERSION: u32 = 1;

/// Header content shared by both layouts.
struct Header {
    lattice: Vec<(i64, i64)>,
    region: Vec<(i64, i64)>,
    continuous: Vec<(f64, f64, f64)>,
    shape: Shape,
}

fn header_of(field: &Field) -> Header {
    Header {
        lattice: field.domain().lattice_extents().to_vec(),
        region: field.region().bounds.clone(),
        continuous: field
            .domain()
            .continuous_axes()
            .iter()
            .map(|a| (a.a, a.b, a.h))
            .collect(),
        shape: field.shape(),
    }
}

fn field_from(header: Header, samples: Vec<C64>) -> Result<Field> {
    let ranges: Vec<(f64, f64)> = header.continuous.iter().map(|c| (c.0, c.1)).collect();
    let spacings: Vec<f64> = header.continuous.iter().map(|c| c.2).collect();
    let domain: Arc<Domain> = Arc::new(make_domain(
        header.lattice.len(),
        header.continuous.len(),
        &header.lattice,
        &ranges,
        &spacings,
    )?);
    let region = LatticeBox {
        bounds: header.region,
    };
    Field::grid(&domain, header.shape, region, samples)
}

fn samples_of(field: &Field) -> Result<Vec<C64>> {
    match field.grid_samples() {
        Some(s) => Ok(s.to_vec()),
        None => Ok(field.materialize()?.grid_samples().unwrap().to_vec()),
    }
}

pub fn write_csv(field: &Field, out: &mut impl Write) -> Result<()> {
    let h = header_of(field);
    let samples = samples_of(field)?;
    writeln!(out, "curvkit-field,{VERSION}")?;
    writeln!(
        out,
        "p,{},q,{},rows,{},cols,{}",
        h.lattice.len(),
        h.continuous.len(),
        h.shape.rows,
        h.shape.cols
    )?;
    for (mu, ((lo, hi), (rlo, rhi))) in h.lattice.iter().zip(&h.region).enumerate() {
        writeln!(out, "lattice,{mu},{lo},{hi},{rlo},{rhi}")?;
    }
    for (i, (a, b, step)) in h.continuous.iter().enumerate() {
        writeln!(out, "continuous,{i},{a:?},{b:?},{step:?}")?;
    }
    let mut cols: Vec<String> = (0..h.lattice.len()).map(|mu| format!("n{mu}")).collect();
    cols.extend((0..h.continuous.len()).map(|i| format!("x{i}")));
    for r in 0..h.shape.rows {
        for c in 0..h.shape.cols {
            cols.push(format!("re{r}{c}"));
            cols.push(format!("im{r}{c}"));
        }
    }
    writeln!(out, "{}", cols.join(","))?;
    let len = h.shape.len();
    for (k, p) in field.sample_points().iter().enumerate() {
        let mut line: Vec<String> = p.lattice.iter().map(|n| n.to_string()).collect();
        line.extend(p.continuous.iter().map(|x| format!("{x:?}")));
        for z in &samples[k * len..(k + 1) * len] {
            line.push(format!("{:?}", z.re));
            line.push(format!("{:?}", z.im));
        }
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

fn parse<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad {what}: {s:?}")))
}

pub fn read_csv(input: impl BufRead) -> Result<Field> {
    let mut lines = input.lines();
    let mut next = |what: &str| -> Result<Vec<String>> {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("missing {what}")))??;
        Ok(line.split(',').map(|s| s.to_string()).collect())
    };
    let magic = next("magic line")?;
    if magic.len() != 2 || magic[0] != "curvkit-field" {
        return Err(Error::Parse("not a curvkit field file".into()));
    }
    if parse::<u32>(&magic[1], "version")? != VERSION {
        return Err(Error::Parse(format!("unsupported version {}", magic[1])));
    }
    let dims = next("dimension line")?;
    if dims.len() != 8 {
        return Err(Error::Parse("dimension line".into()));
    }
    let p: usize = parse(&dims[1], "p")?;
    let q: usize = parse(&dims[3], "q")?;
    let shape = Shape::new(parse(&dims[5], "rows")?, parse(&dims[7], "cols")?);
    let mut lattice = Vec::with_capacity(p);
    let mut region = Vec::with_capacity(p);
    for _ in 0..p {
        let l = next("lattice line")?;
        if l.len() != 6 || l[0] != "lattice" {
            return Err(Error::Parse("lattice line".into()));
        }
        lattice.push((parse(&l[2], "lo")?, parse(&l[3], "hi")?));
        region.push((parse(&l[4], "region lo")?, parse(&l[5], "region hi")?));
    }
    let mut continuous = Vec::with_capacity(q);
    for _ in 0..q {
        let l = next("continuous line")?;
        if l.len() != 5 || l[0] != "continuous" {
            return Err(Error::Parse("continuous line".into()));
        }
        continuous.push((parse(&l[2], "a")?, parse(&l[3], "b")?, parse(&l[4], "h")?));
    }
    next("column header")?;
    let width = p + q + 2 * shape.len();
    let mut samples = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != width {
            return Err(Error::Parse(format!(
                "sample row has {} cells, expected {width}",
                cells.len()
            )));
        }
        for pair in cells[p + q..].chunks(2) {
            samples.push(C64::new(parse(pair[0], "re")?, parse(pair[1], "im")?));
        }
    }
    field_from(
        Header {
            lattice,
            region,
            continuous,
            shape,
        },
        samples,
    )
}

pub fn write_binary(field: &Field, out: &mut impl Write) -> Result<()> {
    let h = header_of(field);
    let samples = samples_of(field)?;
    out.write_all(MAGIC)?;
    for v in [
        VERSION,
        h.lattice.len() as u32,
        h.continuous.len() as u32,
        h.shape.rows as u32,
        h.shape.cols as u32,
    ] {
        out.write_all(&v.to_le_bytes())?;
    }
    for ((lo, hi), (rlo, rhi)) in h.lattice.iter().zip(&h.region) {
        for v in [lo, hi, rlo, rhi] {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    for (a, b, step) in &h.continuous {
        for v in [a, b, step] {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    for z in &samples {
        out.write_all(&z.re.to_le_bytes())?;
        out.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let bytes = self
            .buf
            .get(self.pos..self.pos + N)
            .ok_or_else(|| Error::Parse("truncated binary field".into()))?;
        self.pos += N;
        Ok(bytes.try_into().unwrap())
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }

    fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_le_bytes(self.take()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }
}

pub fn read_binary(mut input: impl Read) -> Result<Field> {
    let mut buf = Vec::new();
    input.read_to_end(&mut buf)?;
    let mut cur = Cursor { buf: &buf, pos: 0 };
    if &cur.take::<4>()? != MAGIC {
        return Err(Error::Parse("not a curvkit field file".into()));
    }
    let version = cur.u32()?;
    if version != VERSION {
        return Err(Error::Parse(format!("unsupported version {version}")));
    }
    let (p, q) = (cur.u32()? as usize, cur.u32()? as usize);
    let shape = Shape::new(cur.u32()? as usize, cur.u32()? as usize);
    let mut lattice = Vec::with_capacity(p);
    let mut region = Vec::with_capacity(p);
    for _ in 0..p {
        lattice.push((cur.i64()?, cur.i64()?));
        region.push((cur.i64()?, cur.i64()?));
    }
    let mut continuous = Vec::with_capacity(q);
    for _ in 0..q {
        continuous.push((cur.f64()?, cur.f64()?, cur.f64()?));
    }
    let rest = buf.len() - cur.pos;
    if !rest.is_multiple_of(16) {
        return Err(Error::Parse("binary sample stream is not whole".into()));
    }
    let mut samples = Vec::with_capacity(rest / 16);
    for _ in 0..rest / 16 {
        samples.push(C64::new(cur.f64()?, cur.f64()?));
    }
    field_from(
        Header {
            lattice,
            region,
            continuous,
            shape,
        },
        samples,
    )
}

/// Writes CSV when the path ends in `.csv`, binary otherwise.
pub fn save(field: &Field, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    if path.extension().is_some_and(|e| e == "csv") {
        write_csv(field, &mut out)?;
    } else {
        write_binary(field, &mut out)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads either layout, detected from the leading bytes.
pub fn load(path: &Path) -> Result<Field> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(MAGIC) {
        read_binary(&bytes[..])
    } else {
        read_csv(&bytes[..])
    }
}
