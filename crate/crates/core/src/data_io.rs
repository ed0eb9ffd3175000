//! Rating file parsers, synthetic low-rank data, and binary model snapshots.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::types::{Entry, FactorModel, SparseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormatKind {
    /// `user::item::rating::timestamp`, no header.
    MovielensDat,
    Csv,
    Tsv,
}

/// Field layout of a rating file: `user, item, rating[, ignored...]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetFormat {
    pub kind: FormatKind,
    pub has_header: bool,
}

impl DatasetFormat {
    pub fn new(kind: FormatKind, has_header: bool) -> Self {
        DatasetFormat { kind, has_header }
    }

    pub fn movielens_dat() -> Self {
        Self::new(FormatKind::MovielensDat, false)
    }

    fn separator(&self) -> &'static str {
        match self.kind {
            FormatKind::MovielensDat => "::",
            FormatKind::Csv => ",",
            FormatKind::Tsv => "\t",
        }
    }
}

impl fmt::Display for FormatKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FormatKind::MovielensDat => "movielens_dat",
            FormatKind::Csv => "csv",
            FormatKind::Tsv => "tsv",
        })
    }
}

impl FromStr for FormatKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "movielens_dat" | "dat" => Ok(FormatKind::MovielensDat),
            "csv" => Ok(FormatKind::Csv),
            "tsv" => Ok(FormatKind::Tsv),
            other => Err(Error::invalid(format!(
                "unknown dataset format '{other}' (expected movielens_dat, csv or tsv)"
            ))),
        }
    }
}

/// A parsed rating matrix plus the raw identifiers behind its dense indices.
#[derive(Debug, Clone)]
pub struct Dataset<T> {
    pub matrix: SparseMatrix<T>,
    /// `row_ids[i]` is the raw user identifier of row `i`.
    pub row_ids: Vec<String>,
    pub col_ids: Vec<String>,
}

#[derive(Default)]
struct Interner {
    ids: Vec<String>,
    index: HashMap<String, usize>,
}

impl Interner {
    fn intern(&mut self, raw: &str) -> usize {
        if let Some(&i) = self.index.get(raw) {
            return i;
        }
        let i = self.ids.len();
        self.ids.push(raw.to_owned());
        self.index.insert(raw.to_owned(), i);
        i
    }
}

/// Reads a rating file, mapping identifiers to dense indices in order of
/// first appearance. A repeated `(user, item)` pair keeps the last rating.
pub fn parse_dataset<T: Scalar>(path: impl AsRef<Path>, format: DatasetFormat) -> Result<Dataset<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_reader(BufReader::new(file), format, path)
}

/// [`parse_dataset`] over any buffered reader; `origin` labels errors.
pub fn parse_reader<T: Scalar>(reader: impl BufRead, format: DatasetFormat, origin: &Path) -> Result<Dataset<T>> {
    let sep = format.separator();
    let mut rows = Interner::default();
    let mut cols = Interner::default();
    let mut entries: Vec<Entry<T>> = Vec::new();
    let mut position: HashMap<(usize, usize), usize> = HashMap::new();
    let parse_err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };

    for (k, line) in reader.lines().enumerate() {
        let line_no = k + 1;
        let line = line.map_err(|e| Error::io(origin, e))?;
        if k == 0 && format.has_header {
            continue;
        }
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(sep).map(str::trim);
        let (Some(user), Some(item), Some(rating)) = (fields.next(), fields.next(), fields.next()) else {
            return Err(parse_err(line_no, format!("expected at least 3 '{}'-separated fields", sep.escape_default())));
        };
        if user.is_empty() || item.is_empty() {
            return Err(parse_err(line_no, "empty user or item identifier".into()));
        }
        let value: f64 = rating
            .parse()
            .map_err(|_| parse_err(line_no, format!("rating '{rating}' is not a number")))?;
        if !value.is_finite() {
            return Err(parse_err(line_no, format!("rating '{rating}' is not finite")));
        }
        let (r, c) = (rows.intern(user), cols.intern(item));
        let value = T::from_f64_lossy(value);
        match position.get(&(r, c)) {
            Some(&at) => entries[at].value = value,
            None => {
                position.insert((r, c), entries.len());
                entries.push(Entry::new(r, c, value));
            }
        }
    }

    if entries.is_empty() {
        return Err(Error::invalid(format!("{} contains no ratings", origin.display())));
    }
    let matrix = SparseMatrix::from_trusted(rows.ids.len(), cols.ids.len(), entries);
    Ok(Dataset {
        matrix,
        row_ids: rows.ids,
        col_ids: cols.ids,
    })
}

/// Writes `matrix` as `user,item,rating` CSV with a header line.
pub fn write_csv<T: Scalar>(matrix: &SparseMatrix<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        writeln!(out, "user,item,rating")?;
        for e in matrix.entries() {
            // `{:?}` prints the shortest representation that round-trips.
            writeln!(out, "{},{},{:?}", e.row, e.col, e.value.to_f64_exact())?;
        }
        out.flush()
    };
    write(&mut out).map_err(|e| Error::io(path, e))
}

/// Shape and statistics of a synthetic matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub num_rows: usize,
    pub num_cols: usize,
    pub rank: usize,
    pub density: f64,
    pub noise_std: f64,
    pub seed: u64,
}

/// Samples `round(density * rows * cols)` cells of `U V^T` plus Gaussian
/// noise, where `U`, `V` are uniform on `[0, 1)`. Returns the matrix and its
/// ground-truth rank.
pub fn generate_synthetic<T: Scalar>(spec: &SyntheticSpec) -> Result<(SparseMatrix<T>, usize)> {
    let SyntheticSpec {
        num_rows,
        num_cols,
        rank,
        density,
        noise_std,
        seed,
    } = *spec;
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::invalid(format!("density must lie in (0, 1], got {density}")));
    }
    if rank == 0 || rank > num_rows.min(num_cols) {
        return Err(Error::invalid(format!(
            "rank {rank} must lie in [1, min({num_rows}, {num_cols})]"
        )));
    }
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(Error::invalid(format!("noise_std must be non-negative, got {noise_std}")));
    }
    let cells = num_rows * num_cols;
    let count = (density * cells as f64).round() as usize;
    if count == 0 {
        return Err(Error::invalid(format!(
            "density {density} selects no cells of a {num_rows}x{num_cols} matrix"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u: Vec<f64> = (0..num_rows * rank).map(|_| rng.random::<f64>()).collect();
    let v: Vec<f64> = (0..num_cols * rank).map(|_| rng.random::<f64>()).collect();
    let mut picked = index::sample(&mut rng, cells, count).into_vec();
    picked.sort_unstable();
    let noise = Normal::new(0.0, noise_std).map_err(|e| Error::invalid(e.to_string()))?;

    let entries = picked
        .into_iter()
        .map(|cell| {
            let (r, c) = (cell / num_cols, cell % num_cols);
            let exact: f64 = (0..rank).map(|k| u[r * rank + k] * v[c * rank + k]).sum();
            let value = if noise_std > 0.0 { exact + noise.sample(&mut rng) } else { exact };
            Entry::new(r, c, T::from_f64_lossy(value))
        })
        .collect();
    Ok((SparseMatrix::from_trusted(num_rows, num_cols, entries), rank))
}

/// Published `(rows, columns, known entries)` of the public rating datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PublishedCounts {
    pub name: &'static str,
    pub rows: usize,
    pub cols: usize,
    pub entries: usize,
}

pub const PUBLISHED: [PublishedCounts; 4] = [
    PublishedCounts { name: "ml10m", rows: 71_567, cols: 10_681, entries: 10_000_054 },
    PublishedCounts { name: "ml20m", rows: 138_493, cols: 26_744, entries: 20_000_263 },
    PublishedCounts { name: "douban", rows: 129_490, cols: 58_541, entries: 16_830_839 },
    PublishedCounts { name: "jester", rows: 124_113, cols: 150, entries: 5_865_235 },
];

pub fn published_counts(name: &str) -> Option<PublishedCounts> {
    PUBLISHED.iter().copied().find(|p| p.name.eq_ignore_ascii_case(name))
}

/// Compares a parsed matrix with published counts; mismatches are returned
/// as human-readable warnings.
pub fn check_published<T: Scalar>(matrix: &SparseMatrix<T>, expected: &PublishedCounts) -> Vec<String> {
    let mut warnings = Vec::new();
    for (what, got, want) in [
        ("rows", matrix.num_rows(), expected.rows),
        ("columns", matrix.num_cols(), expected.cols),
        ("known entries", matrix.len(), expected.entries),
    ] {
        if got != want {
            warnings.push(format!("{}: {what} = {got}, published {want}", expected.name));
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    warnings
}

/// Tag and format version of model snapshots (`FPSLFA` + `01`).
pub const SNAPSHOT_MAGIC: &[u8; 8] = b"FPSLFA01";
const TAG_LEN: usize = 6;
const HEADER_LEN: usize = 8 + 3 * 8;

/// Writes `FPSLFA01`, `u64` rows/cols/f, then `X` and `Y` row-major as
/// little-endian `f64`.
pub fn save_model<T: Scalar>(model: &FactorModel<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    encode_model(model, &mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn encode_model<T: Scalar>(model: &FactorModel<T>, out: &mut impl Write) -> std::io::Result<()> {
    out.write_all(SNAPSHOT_MAGIC)?;
    for dim in [model.num_rows(), model.num_cols(), model.dim()] {
        out.write_all(&(dim as u64).to_le_bytes())?;
    }
    for v in model.x().iter().chain(model.y()) {
        out.write_all(&v.to_f64_exact().to_le_bytes())?;
    }
    Ok(())
}

pub fn load_model<T: Scalar>(path: impl AsRef<Path>) -> Result<FactorModel<T>> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode_model(&bytes)
}

pub fn decode_model<T: Scalar>(bytes: &[u8]) -> Result<FactorModel<T>> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!(
            "truncated header: {} bytes, need {HEADER_LEN}",
            bytes.len()
        )));
    }
    if bytes[..TAG_LEN] != SNAPSHOT_MAGIC[..TAG_LEN] {
        return Err(Error::Format("bad magic, not a model snapshot".into()));
    }
    if bytes[TAG_LEN..8] != SNAPSHOT_MAGIC[TAG_LEN..] {
        return Err(Error::Format(format!(
            "unsupported version: expected {:?}, found {:?}",
            String::from_utf8_lossy(&SNAPSHOT_MAGIC[TAG_LEN..]),
            String::from_utf8_lossy(&bytes[TAG_LEN..8])
        )));
    }
    let dim = |k: usize| {
        let raw = u64::from_le_bytes(bytes[8 + 8 * k..16 + 8 * k].try_into().expect("8 bytes"));
        usize::try_from(raw).map_err(|_| Error::Format(format!("dimension {raw} too large")))
    };
    let (rows, cols, f) = (dim(0)?, dim(1)?, dim(2)?);
    let payload = rows
        .checked_add(cols)
        .and_then(|n| n.checked_mul(f))
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| Error::Format("dimensions overflow".into()))?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != payload {
        return Err(Error::Format(format!(
            "payload is {} bytes, expected {payload} for {rows}x{cols} with f = {f}",
            body.len()
        )));
    }
    let mut values = body
        .chunks_exact(8)
        .map(|c| T::from_f64_lossy(f64::from_le_bytes(c.try_into().expect("8 bytes"))));
    let x: Vec<T> = values.by_ref().take(rows * f).collect();
    let y: Vec<T> = values.collect();
    FactorModel::from_parts(rows, cols, f, x, y).map_err(|e| Error::Format(e.to_string()))
}

/// Writes one raw identifier per line, line `i` naming index `i`.
pub fn save_index(ids: &[String], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::with_capacity(ids.len() * 8);
    for id in ids {
        text.push_str(id);
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_index(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text.lines().map(str::to_owned).collect())
}
