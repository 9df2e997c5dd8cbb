//! File formats.
//!
//! * Checkpoints: the magic `DSEACKPT`, a little-endian `u64` header length,
//!   a JSON header ([`CheckpointHeader`]) and a binary payload. States store
//!   `dim` pairs of `f64` (re, im); operators store `nnz` coordinate triples
//!   `(u64 row, u64 col, f64 re, f64 im)` in row-major order.
//! * Trajectory CSV: `#`-prefixed metadata lines, then `id,t,x0,x1,...`.
//! * Trajectory frames: the magic `DSEAFRM1`, then `u64` trajectories,
//!   `u64` coordinates per configuration, `u64` slices, one `u8` abort flag
//!   per trajectory and, per slice, `f64` time followed by all coordinates.
//! * Grid fields: CSV with `x*, rho, v*, g, vt*` columns.
//!
//! Every writer goes through [`write_atomic`].

use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dynamics::TrajectorySet;
use crate::error::{Error, Result};
use crate::fock::{BosonSpace, HilbertSpace, ModeBasis, OperatorMatrix, QuantumState};
use crate::modes::{build_mode_lattice, SpaceDim, SpeciesTable};
use crate::position::CorrectionField;
use crate::C64;

const CHECKPOINT_MAGIC: &[u8; 8] = b"DSEACKPT";
const FRAME_MAGIC: &[u8; 8] = b"DSEAFRM1";
pub const FORMAT_VERSION: u32 = 1;

fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Everything needed to rebuild a [`HilbertSpace`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisDescriptor {
    pub dim: usize,
    pub box_len: f64,
    pub cutoff: f64,
    pub species: SpeciesTable,
    pub fermions: usize,
    pub boson_dim: usize,
}

impl BasisDescriptor {
    pub fn of(space: &HilbertSpace) -> Self {
        let lat = space.basis.lattice();
        BasisDescriptor {
            dim: lat.dim().get(),
            box_len: lat.box_len(),
            cutoff: lat.cutoff(),
            species: space.basis.species().clone(),
            fermions: space.fermion_number(),
            boson_dim: space.boson.dim(),
        }
    }

    pub fn build(&self) -> Result<HilbertSpace> {
        let lat = build_mode_lattice(SpaceDim::from_usize(self.dim)?, self.box_len, self.cutoff)?;
        let basis = ModeBasis::build(lat, self.species.clone())?;
        HilbertSpace::new(basis, self.fermions, BosonSpace::new(self.boson_dim)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckpointKind {
    State,
    Operator,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointHeader {
    pub version: u32,
    pub kind: CheckpointKind,
    pub basis: BasisDescriptor,
    pub rows: usize,
    pub cols: usize,
    /// Amplitudes for a state, stored entries for an operator.
    pub entries: usize,
    pub time: f64,
    pub hermitian: bool,
    pub config_hash: Option<String>,
}

fn encode(header: &CheckpointHeader, payload: &[u8]) -> Result<Vec<u8>> {
    let json = serde_json::to_vec(header)?;
    let mut out = Vec::with_capacity(16 + json.len() + payload.len());
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(payload);
    Ok(out)
}

fn decode(bytes: &[u8]) -> Result<(CheckpointHeader, &[u8])> {
    if bytes.len() < 16 || &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(format_err("not a checkpoint file"));
    }
    let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let body = bytes.get(16..16 + n).ok_or_else(|| format_err("truncated checkpoint header"))?;
    let header: CheckpointHeader = serde_json::from_slice(body)?;
    if header.version != FORMAT_VERSION {
        return Err(format_err(format!("unsupported checkpoint version {}", header.version)));
    }
    Ok((header, &bytes[16 + n..]))
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        if self.buf.len() < N {
            return Err(format_err("unexpected end of data"));
        }
        let (head, rest) = self.buf.split_at(N);
        self.buf = rest;
        Ok(head.try_into().unwrap())
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take()?))
    }

    fn finish(&self) -> Result<()> {
        if self.buf.is_empty() {
            Ok(())
        } else {
            Err(format_err(format!("{} trailing bytes", self.buf.len())))
        }
    }
}

pub fn state_checkpoint_bytes(space: &HilbertSpace, state: &QuantumState, config_hash: Option<&str>) -> Result<Vec<u8>> {
    if state.dim() != space.dim() {
        return Err(Error::DimensionMismatch { expected: space.dim(), found: state.dim() });
    }
    let header = CheckpointHeader {
        version: FORMAT_VERSION,
        kind: CheckpointKind::State,
        basis: BasisDescriptor::of(space),
        rows: state.dim(),
        cols: 1,
        entries: state.dim(),
        time: state.time,
        hermitian: false,
        config_hash: config_hash.map(str::to_owned),
    };
    let mut payload = Vec::with_capacity(16 * state.dim());
    for z in state.amplitudes() {
        payload.extend_from_slice(&z.re.to_le_bytes());
        payload.extend_from_slice(&z.im.to_le_bytes());
    }
    encode(&header, &payload)
}

pub fn state_from_checkpoint_bytes(bytes: &[u8]) -> Result<(CheckpointHeader, QuantumState)> {
    let (header, payload) = decode(bytes)?;
    if header.kind != CheckpointKind::State {
        return Err(format_err("checkpoint holds an operator, not a state"));
    }
    let mut r = Reader { buf: payload };
    let amps = (0..header.entries).map(|_| Ok(C64::new(r.f64()?, r.f64()?))).collect::<Result<Vec<_>>>()?;
    r.finish()?;
    let state = QuantumState::new(amps, header.time)?;
    Ok((header, state))
}

pub fn operator_checkpoint_bytes(space: &HilbertSpace, op: &OperatorMatrix, config_hash: Option<&str>) -> Result<Vec<u8>> {
    let (row_ptr, cols, vals) = op.raw_parts();
    let header = CheckpointHeader {
        version: FORMAT_VERSION,
        kind: CheckpointKind::Operator,
        basis: BasisDescriptor::of(space),
        rows: op.nrows(),
        cols: op.ncols(),
        entries: op.nnz(),
        time: 0.0,
        hermitian: op.is_hermitian(),
        config_hash: config_hash.map(str::to_owned),
    };
    let mut payload = Vec::with_capacity(32 * op.nnz());
    for r in 0..op.nrows() {
        for k in row_ptr[r]..row_ptr[r + 1] {
            payload.extend_from_slice(&(r as u64).to_le_bytes());
            payload.extend_from_slice(&(cols[k] as u64).to_le_bytes());
            payload.extend_from_slice(&vals[k].re.to_le_bytes());
            payload.extend_from_slice(&vals[k].im.to_le_bytes());
        }
    }
    encode(&header, &payload)
}

/// The Hermitian flag is re-established by a numerical check at `1e-12`.
pub fn operator_from_checkpoint_bytes(bytes: &[u8]) -> Result<(CheckpointHeader, OperatorMatrix)> {
    let (header, payload) = decode(bytes)?;
    if header.kind != CheckpointKind::Operator {
        return Err(format_err("checkpoint holds a state, not an operator"));
    }
    let mut r = Reader { buf: payload };
    let mut triplets = Vec::with_capacity(header.entries);
    for _ in 0..header.entries {
        let row = r.u64()? as usize;
        let col = r.u64()? as usize;
        triplets.push((row, col, C64::new(r.f64()?, r.f64()?)));
    }
    r.finish()?;
    let mut op = OperatorMatrix::from_triplets(header.rows, header.cols, &triplets)?;
    if header.hermitian {
        op.mark_hermitian(1e-12)?;
    }
    Ok((header, op))
}

pub fn write_state_checkpoint(path: &Path, space: &HilbertSpace, state: &QuantumState, config_hash: Option<&str>) -> Result<()> {
    write_atomic(path, &state_checkpoint_bytes(space, state, config_hash)?)
}

pub fn read_state_checkpoint(path: &Path) -> Result<(CheckpointHeader, QuantumState)> {
    state_from_checkpoint_bytes(&fs::read(path)?)
}

pub fn write_operator_checkpoint(path: &Path, space: &HilbertSpace, op: &OperatorMatrix, config_hash: Option<&str>) -> Result<()> {
    write_atomic(path, &operator_checkpoint_bytes(space, op, config_hash)?)
}

pub fn read_operator_checkpoint(path: &Path) -> Result<(CheckpointHeader, OperatorMatrix)> {
    operator_from_checkpoint_bytes(&fs::read(path)?)
}

fn metadata_lines(out: &mut String, meta: &[(&str, String)]) {
    for (k, v) in meta {
        out.push_str(&format!("# {k}={v}\n"));
    }
}

/// Floats are written with Rust's shortest round-trip formatting.
pub fn trajectory_csv(set: &TrajectorySet, meta: &[(&str, String)]) -> String {
    let coords = set.configurations.first().and_then(|s| s.first()).map_or(0, Vec::len);
    let mut out = String::new();
    metadata_lines(&mut out, meta);
    out.push_str("id,t");
    for a in 0..coords {
        out.push_str(&format!(",x{a}"));
    }
    out.push('\n');
    for id in 0..set.len() {
        for (s, t) in set.times.iter().enumerate() {
            out.push_str(&format!("{id},{t}"));
            for x in &set.configurations[s][id] {
                out.push_str(&format!(",{x}"));
            }
            out.push('\n');
        }
    }
    out
}

/// Rows of a trajectory CSV: `(id, t, x)`.
pub fn parse_trajectory_csv(text: &str) -> Result<Vec<(usize, f64, Vec<f64>)>> {
    let mut rows = Vec::new();
    let mut header = false;
    for (n, line) in text.as_bytes().lines().enumerate() {
        let line = line?;
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        if !header {
            if !line.starts_with("id,t") {
                return Err(format_err(format!("line {}: missing column header", n + 1)));
            }
            header = true;
            continue;
        }
        let bad = |_| format_err(format!("line {}: malformed number", n + 1));
        let mut f = line.split(',');
        let id = f.next().unwrap_or("").parse::<usize>().map_err(|_| format_err(format!("line {}: bad id", n + 1)))?;
        let t = f.next().unwrap_or("").parse::<f64>().map_err(bad)?;
        let x = f.map(|v| v.parse::<f64>().map_err(bad)).collect::<Result<Vec<_>>>()?;
        rows.push((id, t, x));
    }
    Ok(rows)
}

pub fn trajectory_frames(set: &TrajectorySet) -> Vec<u8> {
    let coords = set.configurations.first().and_then(|s| s.first()).map_or(0, Vec::len);
    let mut out = Vec::new();
    out.extend_from_slice(FRAME_MAGIC);
    for v in [set.len(), coords, set.times.len()] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    out.extend(set.aborted.iter().map(|&a| a as u8));
    for (s, t) in set.times.iter().enumerate() {
        out.extend_from_slice(&t.to_le_bytes());
        for x in &set.configurations[s] {
            for v in x {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct Frames {
    pub times: Vec<f64>,
    pub aborted: Vec<bool>,
    /// `configurations[slice][trajectory]`.
    pub configurations: Vec<Vec<Vec<f64>>>,
}

pub fn parse_trajectory_frames(bytes: &[u8]) -> Result<Frames> {
    if bytes.len() < 8 || &bytes[..8] != FRAME_MAGIC {
        return Err(format_err("not a trajectory frame file"));
    }
    let mut r = Reader { buf: &bytes[8..] };
    let n = r.u64()? as usize;
    let coords = r.u64()? as usize;
    let slices = r.u64()? as usize;
    let aborted = (0..n).map(|_| Ok(r.take::<1>()?[0] != 0)).collect::<Result<Vec<_>>>()?;
    let mut times = Vec::with_capacity(slices);
    let mut configurations = Vec::with_capacity(slices);
    for _ in 0..slices {
        times.push(r.f64()?);
        let slice = (0..n).map(|_| (0..coords).map(|_| r.f64()).collect::<Result<Vec<_>>>()).collect::<Result<Vec<_>>>()?;
        configurations.push(slice);
    }
    r.finish()?;
    Ok(Frames { times, aborted, configurations })
}

/// CSV of the single-fermion grid fields; NaN velocities mark nodes.
/// Shortest round-trip text for `x`, switching to exponent notation outside
/// `[1e-4, 1e6)`.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e6).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

pub fn grid_field_csv(field: &CorrectionField, meta: &[(&str, String)]) -> String {
    let d = field.dim;
    let mut out = String::new();
    metadata_lines(&mut out, meta);
    let axes = ["x", "y", "z"];
    let mut cols: Vec<String> = axes[..d].iter().map(|a| a.to_string()).collect();
    cols.push("rho".into());
    cols.extend(axes[..d].iter().map(|a| format!("v{a}")));
    cols.push("g".into());
    cols.extend(axes[..d].iter().map(|a| format!("vt{a}")));
    out.push_str(&cols.join(","));
    out.push('\n');
    for idx in 0..field.rho.len() {
        let mut row: Vec<String> = field.coordinates(idx).iter().map(|&x| fmt_f64(x)).collect();
        row.push(fmt_f64(field.rho[idx]));
        row.extend((0..d).map(|a| fmt_f64(field.velocity[a][idx])));
        row.push(fmt_f64(field.g[idx]));
        row.extend((0..d).map(|a| fmt_f64(field.correction[a][idx])));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
