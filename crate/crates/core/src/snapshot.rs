//! Binary field snapshots for `--dump` / `--load`.
//!
//! Layout: the 8-byte magic `CSRFLD01`, a newline-terminated JSON header
//! (lattice extents, spacings, periodic flags, field kind, margins, twists)
//! and then every real component as a little-endian `f64`, points in
//! row-major order, complex values as `(re, im)` pairs.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{FieldKind, LatticeField, LatticeSpec};

const MAGIC: &[u8; 8] = b"CSRFLD01";

#[derive(Serialize, Deserialize)]
struct Header {
    spec: LatticeSpec,
    kind: FieldKind,
    margin: Vec<usize>,
    twisted: Vec<bool>,
}

pub fn write_field<W: Write>(mut w: W, field: &LatticeField) -> Result<()> {
    let header = Header { spec: field.spec.clone(), kind: field.kind, margin: field.margin.clone(), twisted: field.twisted.clone() };
    w.write_all(MAGIC)?;
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    let mut buf = Vec::with_capacity(field.data.len() * 8);
    for v in &field.data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_field<R: Read>(r: R) -> Result<LatticeField> {
    let mut r = BufReader::new(r);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let mut line = Vec::new();
    r.read_until(b'\n', &mut line)?;
    let header: Header = serde_json::from_slice(&line).map_err(|e| Error::Snapshot(format!("header: {e}")))?;
    let spec = LatticeSpec::new(header.spec.n, header.spec.h, header.spec.periodic)?;
    let dims = spec.dims();
    if header.margin.len() != dims || header.twisted.len() != dims {
        return Err(Error::Snapshot("margin or twist length differs from lattice dimension".into()));
    }
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let expected = spec.len() * header.kind.real_components();
    if bytes.len() != expected * 8 {
        return Err(Error::Snapshot(format!("expected {} data bytes, found {}", expected * 8, bytes.len())));
    }
    let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
    let mut field = LatticeField::from_data(&spec, header.kind, data)?;
    field.margin = header.margin;
    field.twisted = header.twisted;
    Ok(field)
}

pub fn dump(path: &Path, field: &LatticeField) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_field(&mut w, field)?;
    w.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<LatticeField> {
    read_field(std::fs::File::open(path)?)
}
