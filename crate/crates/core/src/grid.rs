//! Raster data model and the plain-text grid format.
//!
//! A grid file is
//!
//! ```text
//! ncols <int>
//! nrows <int>
//! nodata <value>
//! <nrows lines of ncols space-separated values, row 0 first>
//! ```
//!
//! Writing is canonical: single spaces, `\n` line ends, integers for land
//! cover and categorical layers, shortest round-trip decimal for reals.

use std::fmt::{self, Write as _};
use std::path::Path;

use thiserror::Error;

pub const DEFAULT_NODATA: i64 = -9999;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("header line {line}: {msg}")]
    Header { line: usize, msg: String },
    #[error("row {row}: expected {expected} values, found {found}")]
    RowLength { row: usize, expected: usize, found: usize },
    #[error("expected {expected} data rows, found {found}")]
    RowCount { expected: usize, found: usize },
    #[error("row {row}, col {col}: {token:?} is not an integer")]
    NotInteger { row: usize, col: usize, token: String },
    #[error("row {row}, col {col}: {token:?} is not a number")]
    NotNumber { row: usize, col: usize, token: String },
    #[error("row {row}, col {col}: value {value} outside 1..={max}")]
    OutOfRange { row: usize, col: usize, value: i64, max: usize },
    #[error("cell buffer has {found} entries, expected {rows}x{cols}")]
    CellCount { rows: usize, cols: usize, found: usize },
    #[error("grid dimensions must be positive")]
    EmptyGrid,
}

/// One land-cover class, 1-based (`1..=K`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassId(u16);

impl ClassId {
    /// Checked constructor against a class count `K`.
    pub fn new(value: u16, class_count: usize) -> Option<Self> {
        (value >= 1 && usize::from(value) <= class_count).then_some(Self(value))
    }

    /// Class from a 0-based index.
    pub fn from_index(index: usize) -> Self {
        Self(u16::try_from(index + 1).expect("class index fits in u16"))
    }

    pub fn get(self) -> u16 {
        self.0
    }

    /// 0-based index.
    pub fn index(self) -> usize {
        usize::from(self.0) - 1
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Row-major boolean raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub rows: usize,
    pub cols: usize,
    pub bits: Vec<bool>,
}

impl Mask {
    pub fn filled(rows: usize, cols: usize, value: bool) -> Self {
        Self { rows, cols, bits: vec![value; rows * cols] }
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.cols + j]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Land cover on one date.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LandCoverGrid {
    rows: usize,
    cols: usize,
    pub date_label: String,
    pub nodata: i64,
    cells: Vec<Option<ClassId>>,
}

impl LandCoverGrid {
    pub fn new(rows: usize, cols: usize, cells: Vec<Option<ClassId>>) -> Result<Self, GridError> {
        if rows == 0 || cols == 0 {
            return Err(GridError::EmptyGrid);
        }
        if cells.len() != rows * cols {
            return Err(GridError::CellCount { rows, cols, found: cells.len() });
        }
        Ok(Self { rows, cols, date_label: String::new(), nodata: DEFAULT_NODATA, cells })
    }

    pub fn filled(rows: usize, cols: usize, class: ClassId) -> Self {
        Self::new(rows, cols, vec![Some(class); rows * cols]).expect("positive dimensions")
    }

    /// Build from raw 1-based ids with 0 meaning NODATA.
    pub fn from_raw(rows: usize, cols: usize, raw: &[u16]) -> Result<Self, GridError> {
        let cells = raw.iter().map(|&v| (v > 0).then_some(ClassId(v))).collect();
        Self::new(rows, cols, cells)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.date_label = label.into();
        self
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Option<ClassId> {
        self.cells[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: Option<ClassId>) {
        self.cells[i * self.cols + j] = value;
    }

    pub fn cells(&self) -> &[Option<ClassId>] {
        &self.cells
    }

    /// Raw ids, 0 for NODATA.
    pub fn to_raw(&self) -> Vec<u16> {
        self.cells.iter().map(|c| c.map_or(0, ClassId::get)).collect()
    }

    pub fn nodata_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_none()).count()
    }

    pub fn valid_mask(&self) -> Mask {
        Mask { rows: self.rows, cols: self.cols, bits: self.cells.iter().map(Option::is_some).collect() }
    }

    pub fn max_class(&self) -> Option<ClassId> {
        self.cells.iter().flatten().copied().max()
    }

    pub fn to_ascii(&self) -> String {
        let mut out = header(self.cols, self.rows, &self.nodata.to_string());
        for row in self.cells.chunks(self.cols) {
            let mut first = true;
            for cell in row {
                if !first {
                    out.push(' ');
                }
                first = false;
                match cell {
                    Some(c) => write!(out, "{c}").unwrap(),
                    None => write!(out, "{}", self.nodata).unwrap(),
                }
            }
            out.push('\n');
        }
        out
    }

    /// Parse a land-cover grid, validating ids against `class_count`.
    pub fn parse(text: &str, class_count: usize) -> Result<Self, GridError> {
        let raw = RawGrid::parse(text)?;
        let nodata = parse_int_token(raw.nodata, 0, 0, 3)?;
        let mut cells = Vec::with_capacity(raw.rows * raw.cols);
        for (r, row) in raw.data.iter().enumerate() {
            for (c, tok) in row.iter().enumerate() {
                let v = parse_int_token(tok, r, c, 0)?;
                if v == nodata {
                    cells.push(None);
                } else if v >= 1 && (v as u64) <= class_count as u64 && v <= i64::from(u16::MAX) {
                    cells.push(Some(ClassId(v as u16)));
                } else {
                    return Err(GridError::OutOfRange { row: r, col: c, value: v, max: class_count });
                }
            }
        }
        let mut g = Self::new(raw.rows, raw.cols, cells)?;
        g.nodata = nodata;
        Ok(g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnvKind {
    Numeric,
    Categorical { category_count: u32 },
}

impl EnvKind {
    /// Width of the encoded feature block.
    pub fn encoded_width(self) -> usize {
        match self {
            EnvKind::Numeric => 1,
            EnvKind::Categorical { category_count } => category_count as usize,
        }
    }
}

/// Environmental layer; categorical values are stored as integral reals.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvLayer {
    pub name: String,
    pub kind: EnvKind,
    rows: usize,
    cols: usize,
    pub nodata: f64,
    cells: Vec<Option<f64>>,
}

impl EnvLayer {
    pub fn new(
        name: impl Into<String>,
        kind: EnvKind,
        rows: usize,
        cols: usize,
        cells: Vec<Option<f64>>,
    ) -> Result<Self, GridError> {
        if rows == 0 || cols == 0 {
            return Err(GridError::EmptyGrid);
        }
        if cells.len() != rows * cols {
            return Err(GridError::CellCount { rows, cols, found: cells.len() });
        }
        Ok(Self { name: name.into(), kind, rows, cols, nodata: DEFAULT_NODATA as f64, cells })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.cells[i * self.cols + j]
    }

    pub fn cells(&self) -> &[Option<f64>] {
        &self.cells
    }

    /// Category (1-based) for categorical layers.
    pub fn category(&self, i: usize, j: usize) -> Option<u32> {
        match self.kind {
            EnvKind::Categorical { .. } => self.get(i, j).map(|v| v as u32),
            EnvKind::Numeric => None,
        }
    }

    pub fn to_ascii(&self) -> String {
        let mut out = header(self.cols, self.rows, &format_real(self.nodata));
        for row in self.cells.chunks(self.cols) {
            let mut first = true;
            for cell in row {
                if !first {
                    out.push(' ');
                }
                first = false;
                let v = cell.unwrap_or(self.nodata);
                match self.kind {
                    EnvKind::Categorical { .. } => write!(out, "{}", v as i64).unwrap(),
                    EnvKind::Numeric => out.push_str(&format_real(v)),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str, name: impl Into<String>, kind: EnvKind) -> Result<Self, GridError> {
        let raw = RawGrid::parse(text)?;
        let mut cells = Vec::with_capacity(raw.rows * raw.cols);
        let nodata = match kind {
            EnvKind::Numeric => parse_real_token(raw.nodata, 0, 0, 3)?,
            EnvKind::Categorical { category_count } => {
                let nodata = parse_int_token(raw.nodata, 0, 0, 3)?;
                for (r, row) in raw.data.iter().enumerate() {
                    for (c, tok) in row.iter().enumerate() {
                        let v = parse_int_token(tok, r, c, 0)?;
                        if v == nodata {
                            cells.push(None);
                        } else if v >= 1 && v <= i64::from(category_count) {
                            cells.push(Some(v as f64));
                        } else {
                            return Err(GridError::OutOfRange {
                                row: r,
                                col: c,
                                value: v,
                                max: category_count as usize,
                            });
                        }
                    }
                }
                nodata as f64
            }
        };
        if kind == EnvKind::Numeric {
            for (r, row) in raw.data.iter().enumerate() {
                for (c, tok) in row.iter().enumerate() {
                    let v = parse_real_token(tok, r, c, 0)?;
                    cells.push((v != nodata).then_some(v));
                }
            }
        }
        let mut layer = Self::new(name, kind, raw.rows, raw.cols, cells)?;
        layer.nodata = nodata;
        Ok(layer)
    }
}

/// What a grid file holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridKind {
    LandCover { class_count: usize },
    Numeric,
    Categorical { category_count: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Raster {
    LandCover(LandCoverGrid),
    Env(EnvLayer),
}

impl Raster {
    pub fn to_ascii(&self) -> String {
        match self {
            Raster::LandCover(g) => g.to_ascii(),
            Raster::Env(l) => l.to_ascii(),
        }
    }
}

impl From<LandCoverGrid> for Raster {
    fn from(g: LandCoverGrid) -> Self {
        Raster::LandCover(g)
    }
}

impl From<EnvLayer> for Raster {
    fn from(l: EnvLayer) -> Self {
        Raster::Env(l)
    }
}

fn read_text(path: &Path) -> Result<String, GridError> {
    std::fs::read_to_string(path).map_err(|source| GridError::Io { path: path.display().to_string(), source })
}

pub fn read_grid(path: &Path, kind: GridKind) -> Result<Raster, GridError> {
    let text = read_text(path)?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(match kind {
        GridKind::LandCover { class_count } => Raster::LandCover(LandCoverGrid::parse(&text, class_count)?),
        GridKind::Numeric => Raster::Env(EnvLayer::parse(&text, name, EnvKind::Numeric)?),
        GridKind::Categorical { category_count } => {
            Raster::Env(EnvLayer::parse(&text, name, EnvKind::Categorical { category_count })?)
        }
    })
}

pub fn read_land_cover(path: &Path, class_count: usize) -> Result<LandCoverGrid, GridError> {
    LandCoverGrid::parse(&read_text(path)?, class_count)
}

pub fn read_env_layer(path: &Path, name: &str, kind: EnvKind) -> Result<EnvLayer, GridError> {
    EnvLayer::parse(&read_text(path)?, name, kind)
}

pub fn write_grid(grid: &Raster, path: &Path) -> Result<(), GridError> {
    write_text(path, &grid.to_ascii())
}

pub fn write_land_cover(grid: &LandCoverGrid, path: &Path) -> Result<(), GridError> {
    write_text(path, &grid.to_ascii())
}

pub fn write_env_layer(layer: &EnvLayer, path: &Path) -> Result<(), GridError> {
    write_text(path, &layer.to_ascii())
}

fn write_text(path: &Path, text: &str) -> Result<(), GridError> {
    std::fs::write(path, text).map_err(|source| GridError::Io { path: path.display().to_string(), source })
}

/// Shortest decimal that round-trips to the same `f64`.
pub fn format_real(v: f64) -> String {
    format!("{v}")
}

fn header(cols: usize, rows: usize, nodata: &str) -> String {
    format!("ncols {cols}\nnrows {rows}\nnodata {nodata}\n")
}

struct RawGrid<'a> {
    rows: usize,
    cols: usize,
    nodata: &'a str,
    data: Vec<Vec<&'a str>>,
}

impl<'a> RawGrid<'a> {
    fn parse(text: &'a str) -> Result<Self, GridError> {
        let mut lines = text.lines();
        let mut field = |line: usize, key: &str| -> Result<&'a str, GridError> {
            let l = lines.next().ok_or_else(|| GridError::Header { line, msg: format!("missing `{key}`") })?;
            let mut parts = l.split_whitespace();
            match (parts.next(), parts.next(), parts.next()) {
                (Some(k), Some(v), None) if k.eq_ignore_ascii_case(key) => Ok(v),
                _ => Err(GridError::Header { line, msg: format!("expected `{key} <value>`, found {l:?}") }),
            }
        };
        let cols_tok = field(1, "ncols")?;
        let rows_tok = field(2, "nrows")?;
        let nodata = field(3, "nodata")?;
        let dim = |tok: &str, line: usize| -> Result<usize, GridError> {
            match tok.parse::<usize>() {
                Ok(v) if v > 0 => Ok(v),
                _ => Err(GridError::Header { line, msg: format!("invalid dimension {tok:?}") }),
            }
        };
        let cols = dim(cols_tok, 1)?;
        let rows = dim(rows_tok, 2)?;
        let mut data = Vec::with_capacity(rows);
        for l in lines {
            if l.trim().is_empty() {
                continue;
            }
            let row: Vec<&str> = l.split_whitespace().collect();
            if row.len() != cols {
                return Err(GridError::RowLength { row: data.len(), expected: cols, found: row.len() });
            }
            data.push(row);
        }
        if data.len() != rows {
            return Err(GridError::RowCount { expected: rows, found: data.len() });
        }
        Ok(Self { rows, cols, nodata, data })
    }
}

fn parse_int_token(tok: &str, row: usize, col: usize, header_line: usize) -> Result<i64, GridError> {
    tok.parse::<i64>().map_err(|_| {
        if header_line > 0 {
            GridError::Header { line: header_line, msg: format!("nodata {tok:?} is not an integer") }
        } else {
            GridError::NotInteger { row, col, token: tok.to_string() }
        }
    })
}

fn parse_real_token(tok: &str, row: usize, col: usize, header_line: usize) -> Result<f64, GridError> {
    match tok.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ if header_line > 0 => {
            Err(GridError::Header { line: header_line, msg: format!("nodata {tok:?} is not a number") })
        }
        _ => Err(GridError::NotNumber { row, col, token: tok.to_string() }),
    }
}

/// Land-cover maps on successive (equidistant) dates plus environmental layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub class_names: Vec<String>,
    pub covers: Vec<LandCoverGrid>,
    pub env_layers: Vec<EnvLayer>,
}

impl Dataset {
    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.covers.first().map_or((0, 0), LandCoverGrid::dims)
    }

    pub fn dates(&self) -> usize {
        self.covers.len()
    }

    /// Width of the encoded environmental block.
    pub fn env_width(&self) -> usize {
        self.env_layers.iter().map(|l| l.kind.encoded_width()).sum()
    }
}

/// A broken [`Dataset`] invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    TooFewClasses { found: usize },
    TooFewCovers { found: usize },
    DimensionMismatch { what: String, expected: (usize, usize), found: (usize, usize) },
    ClassOutOfRange { cover: usize, row: usize, col: usize, value: u16 },
    CategoryOutOfRange { layer: String, row: usize, col: usize, value: f64 },
    NonIntegralCategory { layer: String, row: usize, col: usize, value: f64 },
    NodataInconsistent { row: usize, col: usize, cover: usize },
    DateOrder { index: usize, label: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TooFewClasses { found } => write!(f, "class count {found} < 2"),
            Violation::TooFewCovers { found } => write!(f, "{found} cover maps, need at least 2"),
            Violation::DimensionMismatch { what, expected, found } => write!(
                f,
                "{what}: dimensions {}x{} differ from {}x{}",
                found.0, found.1, expected.0, expected.1
            ),
            Violation::ClassOutOfRange { cover, row, col, value } => {
                write!(f, "cover {cover} cell ({row},{col}): class {value} out of range")
            }
            Violation::CategoryOutOfRange { layer, row, col, value } => {
                write!(f, "layer {layer} cell ({row},{col}): category {value} out of range")
            }
            Violation::NonIntegralCategory { layer, row, col, value } => {
                write!(f, "layer {layer} cell ({row},{col}): category {value} is not an integer")
            }
            Violation::NodataInconsistent { row, col, cover } => {
                write!(f, "cell ({row},{col}): NODATA pattern differs at cover {cover}")
            }
            Violation::DateOrder { index, label } => {
                write!(f, "cover {index} ({label}) is not after the previous date")
            }
        }
    }
}

/// Check every [`Dataset`] invariant; an empty list means the dataset is valid.
pub fn validate_dataset(d: &Dataset) -> Vec<Violation> {
    let mut out = Vec::new();
    let k = d.class_count();
    if k < 2 {
        out.push(Violation::TooFewClasses { found: k });
    }
    if d.covers.len() < 2 {
        out.push(Violation::TooFewCovers { found: d.covers.len() });
    }
    let Some(first) = d.covers.first() else {
        return out;
    };
    let dims = first.dims();
    for (t, g) in d.covers.iter().enumerate() {
        if g.dims() != dims {
            out.push(Violation::DimensionMismatch { what: format!("cover {t}"), expected: dims, found: g.dims() });
            continue;
        }
        for (idx, cell) in g.cells().iter().enumerate() {
            if let Some(c) = cell {
                if c.index() >= k {
                    out.push(Violation::ClassOutOfRange {
                        cover: t,
                        row: idx / dims.1,
                        col: idx % dims.1,
                        value: c.get(),
                    });
                }
            }
        }
    }
    for layer in &d.env_layers {
        if layer.dims() != dims {
            out.push(Violation::DimensionMismatch {
                what: format!("layer {}", layer.name),
                expected: dims,
                found: layer.dims(),
            });
            continue;
        }
        if let EnvKind::Categorical { category_count } = layer.kind {
            for (idx, v) in layer.cells().iter().enumerate() {
                let Some(v) = *v else { continue };
                let (row, col) = (idx / dims.1, idx % dims.1);
                if v.fract() != 0.0 {
                    out.push(Violation::NonIntegralCategory { layer: layer.name.clone(), row, col, value: v });
                } else if v < 1.0 || v > f64::from(category_count) {
                    out.push(Violation::CategoryOutOfRange { layer: layer.name.clone(), row, col, value: v });
                }
            }
        }
    }
    // NODATA must be identical across dates.
    for (t, g) in d.covers.iter().enumerate().skip(1) {
        if g.dims() != dims {
            continue;
        }
        for (idx, (a, b)) in first.cells().iter().zip(g.cells()).enumerate() {
            if a.is_some() != b.is_some() {
                out.push(Violation::NodataInconsistent { row: idx / dims.1, col: idx % dims.1, cover: t });
            }
        }
    }
    // Labels that all parse as numbers must increase strictly.
    let numeric: Option<Vec<f64>> = d.covers.iter().map(|g| g.date_label.trim().parse::<f64>().ok()).collect();
    if let Some(nums) = numeric {
        for (t, w) in nums.windows(2).enumerate() {
            if w[1] <= w[0] {
                out.push(Violation::DateOrder { index: t + 1, label: d.covers[t + 1].date_label.clone() });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_date() -> Dataset {
        let a = LandCoverGrid::from_raw(2, 2, &[1, 2, 2, 1]).unwrap().with_label("1");
        let b = LandCoverGrid::from_raw(2, 2, &[1, 1, 2, 2]).unwrap().with_label("2");
        Dataset { class_names: vec!["a".into(), "b".into()], covers: vec![a, b], env_layers: vec![] }
    }

    #[test]
    fn minimal_parse() {
        let g = LandCoverGrid::parse("ncols 1\nnrows 1\nnodata -9999\n3\n", 5).unwrap();
        assert_eq!(g.dims(), (1, 1));
        assert_eq!(g.get(0, 0), ClassId::new(3, 5));
    }

    #[test]
    fn nodata_fixture() {
        let text = "ncols 3\nnrows 3\nnodata -9999\n1 2 1\n2 -9999 2\n1 1 1\n";
        let g = LandCoverGrid::parse(text, 2).unwrap();
        // Independent line-by-line reading of the same fixture.
        let expected: Vec<(usize, usize)> = text
            .lines()
            .skip(3)
            .enumerate()
            .flat_map(|(r, l)| {
                l.split(' ').enumerate().filter(|(_, t)| *t == "-9999").map(move |(c, _)| (r, c)).collect::<Vec<_>>()
            })
            .collect();
        assert_eq!(expected, vec![(1, 1)]);
        assert_eq!(g.nodata_count(), 1);
        assert_eq!(g.get(1, 1), None);
    }

    #[test]
    fn canonical_reserialization() {
        let messy = "NCOLS   2\nnrows 2\nnodata  -1\n 1   2 \n\n2  -1\n";
        let g = LandCoverGrid::parse(messy, 2).unwrap();
        assert_eq!(g.to_ascii(), "ncols 2\nnrows 2\nnodata -1\n1 2\n2 -1\n");
        let again = LandCoverGrid::parse(&g.to_ascii(), 2).unwrap();
        assert_eq!(again.to_ascii(), g.to_ascii());
    }

    #[test]
    fn numeric_golden() {
        let cells = vec![Some(1.5), Some(2.0), Some(3.25), None];
        let l = EnvLayer::new("x", EnvKind::Numeric, 2, 2, cells).unwrap();
        assert_eq!(l.to_ascii(), "ncols 2\nnrows 2\nnodata -9999\n1.5 2\n3.25 -9999\n");
        assert_eq!(EnvLayer::parse(&l.to_ascii(), "x", EnvKind::Numeric).unwrap(), l);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            LandCoverGrid::parse("ncols 2\nnrows 1\nnodata -9999\n1\n", 3),
            Err(GridError::RowLength { row: 0, expected: 2, found: 1 })
        ));
        assert!(matches!(LandCoverGrid::parse("cols 2\nnrows 1\nnodata 0\n1 1\n", 3), Err(GridError::Header { .. })));
        assert!(matches!(
            LandCoverGrid::parse("ncols 1\nnrows 1\nnodata -9999\n4\n", 3),
            Err(GridError::OutOfRange { value: 4, .. })
        ));
        assert!(matches!(
            EnvLayer::parse("ncols 1\nnrows 1\nnodata -9999\n1.5\n", "g", EnvKind::Categorical { category_count: 3 }),
            Err(GridError::NotInteger { .. })
        ));
        assert!(matches!(
            LandCoverGrid::parse("ncols 1\nnrows 2\nnodata -9999\n1\n", 3),
            Err(GridError::RowCount { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn validate_consistent_dataset() {
        assert!(validate_dataset(&two_date()).is_empty());
    }

    #[test]
    fn validate_dimension_mismatch() {
        let mut d = two_date();
        d.env_layers.push(EnvLayer::new("e", EnvKind::Numeric, 2, 3, vec![Some(0.0); 6]).unwrap());
        let v = validate_dataset(&d);
        assert_eq!(v.len(), 1);
        assert!(matches!(v[0], Violation::DimensionMismatch { .. }));
    }

    #[test]
    fn validate_nodata_consistency() {
        let mut d = two_date();
        d.covers[0].set(0, 1, None);
        let v = validate_dataset(&d);
        assert_eq!(v, vec![Violation::NodataInconsistent { row: 0, col: 1, cover: 1 }]);
    }
}
