//! TSPLIB95 ingestion: `.tsp` instances, `.tour` files and the integer
//! distance functions the published optima are computed with.
//!
//! Cities are 0-based everywhere inside the crate. The 1-based TSPLIB
//! numbering only exists in the text formats read and written here.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

/// Instances at or below this many cities get a precomputed distance matrix.
pub const DEFAULT_MATRIX_CAP: usize = 5_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Metric {
    Euc2d,
    Ceil2d,
    Att,
    Geo,
    Explicit,
}

impl Metric {
    pub fn keyword(self) -> &'static str {
        match self {
            Metric::Euc2d => "EUC_2D",
            Metric::Ceil2d => "CEIL_2D",
            Metric::Att => "ATT",
            Metric::Geo => "GEO",
            Metric::Explicit => "EXPLICIT",
        }
    }

    fn from_keyword(s: &str) -> Option<Metric> {
        match s {
            "EUC_2D" => Some(Metric::Euc2d),
            "CEIL_2D" => Some(Metric::Ceil2d),
            "ATT" => Some(Metric::Att),
            "GEO" => Some(Metric::Geo),
            "EXPLICIT" => Some(Metric::Explicit),
            _ => None,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("line {line}: unsupported problem TYPE `{value}` (only symmetric TSP is supported)")]
    UnsupportedType { line: usize, value: String },
    #[error("line {line}: unsupported EDGE_WEIGHT_TYPE `{value}`")]
    UnsupportedMetric { line: usize, value: String },
    #[error("line {line}: unsupported EDGE_WEIGHT_FORMAT `{value}`")]
    UnsupportedFormat { line: usize, value: String },
    #[error("line {line}: malformed {keyword} entry `{text}`")]
    Malformed { line: usize, keyword: &'static str, text: String },
    #[error("DIMENSION is {expected} but {section} holds {found} entries")]
    DimensionMismatch { section: &'static str, expected: usize, found: usize },
    #[error("missing required keyword {0}")]
    MissingKeyword(&'static str),
    #[error("line {line}: city {city} listed more than once in {section}")]
    DuplicateCity { line: usize, section: &'static str, city: usize },
    #[error("instance has {0} cities; at least 3 are required")]
    TooFewCities(usize),
    #[error("explicit matrix is not symmetric at ({0}, {1})")]
    Asymmetric(usize, usize),
    #[error("negative edge weight at ({0}, {1})")]
    NegativeWeight(usize, usize),
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("city index {index} out of range for {n} cities")]
pub struct IndexError {
    pub index: usize,
    pub n: usize,
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("reading {path}")]
    Io { path: String, source: std::io::Error },
    #[error("parsing {path}")]
    Parse { path: String, source: ParseError },
}

#[derive(Debug, Clone)]
enum Geometry {
    Coords(Vec<(f64, f64)>),
    /// Latitude/longitude in radians, derived from the TSPLIB DDD.MM encoding.
    Geo { raw: Vec<(f64, f64)>, rad: Vec<(f64, f64)> },
    Matrix(Vec<i64>),
}

/// A parsed symmetric TSP. Immutable once built.
#[derive(Debug, Clone)]
pub struct Instance {
    pub name: String,
    pub comment: String,
    pub known_optimum: Option<i64>,
    n: usize,
    metric: Metric,
    geometry: Geometry,
    cache: Option<Vec<i32>>,
}

impl Instance {
    /// Builds a coordinate instance. `metric` must not be `Explicit`.
    pub fn from_coords(name: impl Into<String>, metric: Metric, coords: Vec<(f64, f64)>) -> Result<Self, ParseError> {
        Self::from_coords_with_cap(name, metric, coords, DEFAULT_MATRIX_CAP)
    }

    pub fn from_coords_with_cap(
        name: impl Into<String>,
        metric: Metric,
        coords: Vec<(f64, f64)>,
        matrix_cap: usize,
    ) -> Result<Self, ParseError> {
        assert!(metric != Metric::Explicit, "coordinate instance cannot use EXPLICIT weights");
        let n = coords.len();
        if n < 3 {
            return Err(ParseError::TooFewCities(n));
        }
        let geometry = if metric == Metric::Geo {
            let rad = coords.iter().map(|&(x, y)| (geo_radians(x), geo_radians(y))).collect();
            Geometry::Geo { raw: coords, rad }
        } else {
            Geometry::Coords(coords)
        };
        Ok(Self::finish(name.into(), n, metric, geometry, matrix_cap))
    }

    /// Builds an explicit instance from a full row-major `n x n` matrix.
    pub fn from_matrix(name: impl Into<String>, n: usize, matrix: Vec<i64>) -> Result<Self, ParseError> {
        if n < 3 {
            return Err(ParseError::TooFewCities(n));
        }
        if matrix.len() != n * n {
            return Err(ParseError::DimensionMismatch {
                section: "EDGE_WEIGHT_SECTION",
                expected: n * n,
                found: matrix.len(),
            });
        }
        for i in 0..n {
            for j in 0..n {
                let w = matrix[i * n + j];
                if w < 0 {
                    return Err(ParseError::NegativeWeight(i, j));
                }
                if w != matrix[j * n + i] {
                    return Err(ParseError::Asymmetric(i, j));
                }
            }
        }
        let mut matrix = matrix;
        for i in 0..n {
            matrix[i * n + i] = 0;
        }
        Ok(Self::finish(name.into(), n, Metric::Explicit, Geometry::Matrix(matrix), DEFAULT_MATRIX_CAP))
    }

    fn finish(name: String, n: usize, metric: Metric, geometry: Geometry, matrix_cap: usize) -> Self {
        let mut inst = Instance {
            name,
            comment: String::new(),
            known_optimum: None,
            n,
            metric,
            geometry,
            cache: None,
        };
        if n <= matrix_cap && metric != Metric::Explicit {
            let mut cache = vec![0i32; n * n];
            for i in 0..n {
                for j in (i + 1)..n {
                    let d = inst.compute(i, j) as i32;
                    cache[i * n + j] = d;
                    cache[j * n + i] = d;
                }
            }
            inst.cache = Some(cache);
        }
        inst
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    /// Raw node coordinates as they appeared in the file (absent for EXPLICIT).
    pub fn coords(&self) -> Option<&[(f64, f64)]> {
        match &self.geometry {
            Geometry::Coords(c) => Some(c),
            Geometry::Geo { raw, .. } => Some(raw),
            Geometry::Matrix(_) => None,
        }
    }

    pub fn has_matrix_cache(&self) -> bool {
        self.cache.is_some()
    }

    /// Integer TSPLIB distance between cities `i` and `j` (0-based).
    ///
    /// Panics when an index is out of range; see [`Instance::checked_distance`].
    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> i64 {
        assert!(i < self.n && j < self.n, "city index out of range");
        if let Some(cache) = &self.cache {
            return cache[i * self.n + j] as i64;
        }
        self.compute(i, j)
    }

    pub fn checked_distance(&self, i: usize, j: usize) -> Result<i64, IndexError> {
        for index in [i, j] {
            if index >= self.n {
                return Err(IndexError { index, n: self.n });
            }
        }
        Ok(self.distance(i, j))
    }

    fn compute(&self, i: usize, j: usize) -> i64 {
        if i == j {
            return 0;
        }
        match &self.geometry {
            Geometry::Matrix(m) => m[i * self.n + j],
            Geometry::Coords(c) => {
                let dx = c[i].0 - c[j].0;
                let dy = c[i].1 - c[j].1;
                match self.metric {
                    Metric::Euc2d => nint((dx * dx + dy * dy).sqrt()),
                    Metric::Ceil2d => (dx * dx + dy * dy).sqrt().ceil() as i64,
                    Metric::Att => {
                        let r = ((dx * dx + dy * dy) / 10.0).sqrt();
                        let t = nint(r);
                        if (t as f64) < r {
                            t + 1
                        } else {
                            t
                        }
                    }
                    Metric::Geo | Metric::Explicit => unreachable!(),
                }
            }
            Geometry::Geo { rad, .. } => {
                const RRR: f64 = 6378.388;
                let (lat_i, lon_i) = rad[i];
                let (lat_j, lon_j) = rad[j];
                let q1 = (lon_i - lon_j).cos();
                let q2 = (lat_i - lat_j).cos();
                let q3 = (lat_i + lat_j).cos();
                (RRR * (0.5 * ((1.0 + q1) * q2 - (1.0 - q1) * q3)).acos() + 1.0) as i64
            }
        }
    }

    /// Length of the closed tour visiting `order` (a permutation of the cities).
    pub fn tour_length(&self, order: &[usize]) -> i64 {
        if order.is_empty() {
            return 0;
        }
        let mut len = 0i64;
        for w in order.windows(2) {
            len += self.distance(w[0], w[1]);
        }
        len + self.distance(order[order.len() - 1], order[0])
    }

    /// Serializes to TSPLIB text. EXPLICIT instances are written as FULL_MATRIX.
    pub fn to_tsplib(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "NAME : {}", self.name);
        let _ = writeln!(s, "TYPE : TSP");
        if !self.comment.is_empty() {
            let _ = writeln!(s, "COMMENT : {}", self.comment);
        }
        let _ = writeln!(s, "DIMENSION : {}", self.n);
        let _ = writeln!(s, "EDGE_WEIGHT_TYPE : {}", self.metric.keyword());
        match &self.geometry {
            Geometry::Matrix(m) => {
                let _ = writeln!(s, "EDGE_WEIGHT_FORMAT : FULL_MATRIX");
                let _ = writeln!(s, "EDGE_WEIGHT_SECTION");
                for row in m.chunks(self.n) {
                    let line: Vec<String> = row.iter().map(|w| w.to_string()).collect();
                    let _ = writeln!(s, "{}", line.join(" "));
                }
            }
            Geometry::Coords(c) | Geometry::Geo { raw: c, .. } => {
                let _ = writeln!(s, "NODE_COORD_SECTION");
                for (i, (x, y)) in c.iter().enumerate() {
                    let _ = writeln!(s, "{} {:?} {:?}", i + 1, x, y);
                }
            }
        }
        s.push_str("EOF\n");
        s
    }
}

#[inline]
fn nint(x: f64) -> i64 {
    (x + 0.5) as i64
}

fn geo_radians(x: f64) -> f64 {
    // the TSPLIB definition truncates pi; using the exact constant changes GEO distances
    #[allow(clippy::approx_constant)]
    const PI: f64 = 3.141592;
    let deg = x.trunc();
    let min = x - deg;
    PI * (deg + 5.0 * min / 3.0) / 180.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum WeightFormat {
    FullMatrix,
    UpperRow,
    LowerRow,
    UpperDiagRow,
    LowerDiagRow,
}

impl WeightFormat {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "FULL_MATRIX" => Some(Self::FullMatrix),
            "UPPER_ROW" => Some(Self::UpperRow),
            "LOWER_ROW" => Some(Self::LowerRow),
            "UPPER_DIAG_ROW" => Some(Self::UpperDiagRow),
            "LOWER_DIAG_ROW" => Some(Self::LowerDiagRow),
            _ => None,
        }
    }

    fn entry_count(self, n: usize) -> usize {
        match self {
            Self::FullMatrix => n * n,
            Self::UpperRow | Self::LowerRow => n * (n - 1) / 2,
            Self::UpperDiagRow | Self::LowerDiagRow => n * (n + 1) / 2,
        }
    }

    fn expand(self, n: usize, w: &[i64]) -> Vec<i64> {
        let mut m = vec![0i64; n * n];
        let mut it = w.iter().copied();
        let mut put = |i: usize, j: usize, v: i64| {
            m[i * n + j] = v;
            m[j * n + i] = v;
        };
        match self {
            Self::FullMatrix => return w.to_vec(),
            Self::UpperRow => {
                for i in 0..n {
                    for j in (i + 1)..n {
                        put(i, j, it.next().unwrap());
                    }
                }
            }
            Self::UpperDiagRow => {
                for i in 0..n {
                    for j in i..n {
                        put(i, j, it.next().unwrap());
                    }
                }
            }
            Self::LowerRow => {
                for i in 0..n {
                    for j in 0..i {
                        put(i, j, it.next().unwrap());
                    }
                }
            }
            Self::LowerDiagRow => {
                for i in 0..n {
                    for j in 0..=i {
                        put(i, j, it.next().unwrap());
                    }
                }
            }
        }
        m
    }
}

fn split_keyword(line: &str) -> (&str, &str) {
    match line.find(':') {
        Some(idx) => (line[..idx].trim(), line[idx + 1..].trim()),
        None => (line.trim(), ""),
    }
}

fn is_section_end(line: &str) -> bool {
    let t = line.trim();
    t == "EOF" || t.starts_with(|c: char| c.is_ascii_alphabetic())
}

/// Parses a TSPLIB95 symmetric TSP document.
pub fn parse_instance(text: &str) -> Result<Instance, ParseError> {
    let lines: Vec<&str> = text.lines().collect();
    let mut name = String::new();
    let mut comment = String::new();
    let mut dimension: Option<usize> = None;
    let mut metric: Option<Metric> = None;
    let mut format: Option<WeightFormat> = None;
    let mut coords: Option<Vec<(f64, f64)>> = None;
    let mut weights: Option<(usize, Vec<i64>)> = None;

    let mut idx = 0;
    while idx < lines.len() {
        let line_no = idx + 1;
        let line = lines[idx].trim();
        idx += 1;
        if line.is_empty() {
            continue;
        }
        let (key, value) = split_keyword(line);
        match key {
            "EOF" => break,
            "NAME" => name = value.to_string(),
            "COMMENT" => {
                if !comment.is_empty() {
                    comment.push(' ');
                }
                comment.push_str(value);
            }
            "TYPE" => {
                if value != "TSP" {
                    return Err(ParseError::UnsupportedType { line: line_no, value: value.to_string() });
                }
            }
            "DIMENSION" => {
                let d = value.parse::<usize>().map_err(|_| ParseError::Malformed {
                    line: line_no,
                    keyword: "DIMENSION",
                    text: value.to_string(),
                })?;
                dimension = Some(d);
            }
            "EDGE_WEIGHT_TYPE" => {
                metric = Some(Metric::from_keyword(value).ok_or_else(|| ParseError::UnsupportedMetric {
                    line: line_no,
                    value: value.to_string(),
                })?);
            }
            "EDGE_WEIGHT_FORMAT" => {
                format = Some(WeightFormat::parse(value).ok_or_else(|| ParseError::UnsupportedFormat {
                    line: line_no,
                    value: value.to_string(),
                })?);
            }
            "NODE_COORD_TYPE" => {
                if value != "TWOD_COORDS" && value != "NO_COORDS" {
                    return Err(ParseError::UnsupportedMetric { line: line_no, value: value.to_string() });
                }
            }
            "NODE_COORD_SECTION" => {
                let n = dimension.ok_or(ParseError::MissingKeyword("DIMENSION"))?;
                let mut slots: Vec<Option<(f64, f64)>> = vec![None; n];
                let mut found = 0usize;
                while idx < lines.len() && !is_section_end(lines[idx]) {
                    let row_no = idx + 1;
                    let row = lines[idx].trim();
                    idx += 1;
                    if row.is_empty() {
                        continue;
                    }
                    let malformed = || ParseError::Malformed {
                        line: row_no,
                        keyword: "NODE_COORD_SECTION",
                        text: row.to_string(),
                    };
                    let mut parts = row.split_whitespace();
                    let id: usize = parts.next().and_then(|t| t.parse().ok()).ok_or_else(malformed)?;
                    let x: f64 = parts.next().and_then(|t| t.parse().ok()).ok_or_else(malformed)?;
                    let y: f64 = parts.next().and_then(|t| t.parse().ok()).ok_or_else(malformed)?;
                    if parts.next().is_some() || !x.is_finite() || !y.is_finite() {
                        return Err(malformed());
                    }
                    found += 1;
                    if id == 0 || id > n {
                        return Err(ParseError::DimensionMismatch {
                            section: "NODE_COORD_SECTION",
                            expected: n,
                            found: found.max(id),
                        });
                    }
                    if slots[id - 1].replace((x, y)).is_some() {
                        return Err(ParseError::DuplicateCity { line: row_no, section: "NODE_COORD_SECTION", city: id });
                    }
                }
                if found != n {
                    return Err(ParseError::DimensionMismatch { section: "NODE_COORD_SECTION", expected: n, found });
                }
                coords = Some(slots.into_iter().map(|s| s.unwrap()).collect());
            }
            "EDGE_WEIGHT_SECTION" => {
                let n = dimension.ok_or(ParseError::MissingKeyword("DIMENSION"))?;
                let fmt = format.ok_or(ParseError::MissingKeyword("EDGE_WEIGHT_FORMAT"))?;
                let want = fmt.entry_count(n);
                let mut w = Vec::with_capacity(want);
                while idx < lines.len() && !is_section_end(lines[idx]) {
                    let row_no = idx + 1;
                    for tok in lines[idx].split_whitespace() {
                        let v: f64 = tok.parse().map_err(|_| ParseError::Malformed {
                            line: row_no,
                            keyword: "EDGE_WEIGHT_SECTION",
                            text: tok.to_string(),
                        })?;
                        w.push(v.round() as i64);
                    }
                    idx += 1;
                }
                if w.len() != want {
                    return Err(ParseError::DimensionMismatch {
                        section: "EDGE_WEIGHT_SECTION",
                        expected: want,
                        found: w.len(),
                    });
                }
                weights = Some((n, fmt.expand(n, &w)));
            }
            "DISPLAY_DATA_SECTION" | "FIXED_EDGES_SECTION" => {
                while idx < lines.len() && !is_section_end(lines[idx]) {
                    idx += 1;
                }
            }
            // DISPLAY_DATA_TYPE, CAPACITY and friends carry nothing the solver needs.
            _ => {}
        }
    }

    let n = dimension.ok_or(ParseError::MissingKeyword("DIMENSION"))?;
    let metric = metric.ok_or(ParseError::MissingKeyword("EDGE_WEIGHT_TYPE"))?;
    let mut inst = match metric {
        Metric::Explicit => {
            let (_, m) = weights.ok_or(ParseError::MissingKeyword("EDGE_WEIGHT_SECTION"))?;
            Instance::from_matrix(name, n, m)?
        }
        _ => {
            let c = coords.ok_or(ParseError::MissingKeyword("NODE_COORD_SECTION"))?;
            Instance::from_coords(name, metric, c)?
        }
    };
    inst.comment = comment;
    Ok(inst)
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance, LoadError> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| LoadError::Io { path: display.clone(), source })?;
    parse_instance(&text).map_err(|source| LoadError::Parse { path: display, source })
}

/// A TSPLIB `.tour` document. `permutation` holds 0-based cities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TourFile {
    pub name: String,
    pub permutation: Vec<usize>,
}

impl TourFile {
    /// Checks that the permutation is a bijection on `0..n`.
    pub fn validate(&self, n: usize) -> bool {
        if self.permutation.len() != n {
            return false;
        }
        let mut seen = vec![false; n];
        for &c in &self.permutation {
            if c >= n || seen[c] {
                return false;
            }
            seen[c] = true;
        }
        true
    }

    pub fn to_tsplib(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "NAME : {}", self.name);
        let _ = writeln!(s, "TYPE : TOUR");
        let _ = writeln!(s, "DIMENSION : {}", self.permutation.len());
        let _ = writeln!(s, "TOUR_SECTION");
        for c in &self.permutation {
            let _ = writeln!(s, "{}", c + 1);
        }
        s.push_str("-1\nEOF\n");
        s
    }
}

pub fn parse_tour(text: &str) -> Result<TourFile, ParseError> {
    let mut name = String::new();
    let mut dimension = None;
    let mut perm = Vec::new();
    let mut in_section = false;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if in_section {
            for tok in line.split_whitespace() {
                let v: i64 = tok.parse().map_err(|_| ParseError::Malformed {
                    line: i + 1,
                    keyword: "TOUR_SECTION",
                    text: tok.to_string(),
                })?;
                if v == -1 {
                    in_section = false;
                    break;
                }
                if v <= 0 {
                    return Err(ParseError::Malformed { line: i + 1, keyword: "TOUR_SECTION", text: tok.to_string() });
                }
                perm.push(v as usize - 1);
            }
            continue;
        }
        let (key, value) = split_keyword(line);
        match key {
            "EOF" => break,
            "NAME" => name = value.to_string(),
            "TYPE" if value != "TOUR" => {
                return Err(ParseError::UnsupportedType { line: i + 1, value: value.to_string() });
            }
            "DIMENSION" => {
                dimension = Some(value.parse::<usize>().map_err(|_| ParseError::Malformed {
                    line: i + 1,
                    keyword: "DIMENSION",
                    text: value.to_string(),
                })?)
            }
            "TOUR_SECTION" => in_section = true,
            _ => {}
        }
    }
    let n = dimension.unwrap_or(perm.len());
    if perm.len() != n {
        return Err(ParseError::DimensionMismatch { section: "TOUR_SECTION", expected: n, found: perm.len() });
    }
    let tour = TourFile { name, permutation: perm };
    let mut seen = vec![false; n];
    for &c in &tour.permutation {
        if c >= n {
            return Err(ParseError::DimensionMismatch { section: "TOUR_SECTION", expected: n, found: c + 1 });
        }
        if std::mem::replace(&mut seen[c], true) {
            return Err(ParseError::DuplicateCity { line: 0, section: "TOUR_SECTION", city: c + 1 });
        }
    }
    Ok(tour)
}

/// Published optimal tour lengths keyed by instance name.
#[derive(Debug, Clone, Default)]
pub struct KnownOptima {
    table: BTreeMap<String, i64>,
}

const BUNDLED_OPTIMA: &str = include_str!("../data/optima.txt");

impl KnownOptima {
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_OPTIMA).expect("bundled optima table is well formed")
    }

    /// Reads `name optimum` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut table = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(name), Some(value), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(ParseError::Malformed { line: i + 1, keyword: "OPTIMA", text: line.to_string() });
            };
            let v = value.parse::<i64>().map_err(|_| ParseError::Malformed {
                line: i + 1,
                keyword: "OPTIMA",
                text: line.to_string(),
            })?;
            table.insert(name.to_string(), v);
        }
        Ok(KnownOptima { table })
    }

    pub fn get(&self, name: &str) -> Option<i64> {
        self.table.get(name).copied()
    }

    pub fn insert(&mut self, name: impl Into<String>, optimum: i64) {
        self.table.insert(name.into(), optimum);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, i64)> {
        self.table.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Sets `known_optimum` on the instance when the table knows its name.
    pub fn annotate(&self, inst: &mut Instance) {
        if let Some(v) = self.get(&inst.name) {
            inst.known_optimum = Some(v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRIANGLE: &str = "NAME : tri\nTYPE : TSP\nDIMENSION : 3\nEDGE_WEIGHT_TYPE : EUC_2D\nNODE_COORD_SECTION\n1 0 0\n2 3 0\n3 0 4\nEOF\n";

    #[test]
    fn parses_minimal_euc2d() {
        let inst = parse_instance(TRIANGLE).unwrap();
        assert_eq!(inst.dimension(), 3);
        assert_eq!(inst.metric(), Metric::Euc2d);
        assert_eq!(inst.name, "tri");
        assert_eq!(inst.distance(1, 2), 5);
        assert_eq!(inst.tour_length(&[0, 1, 2]), 12);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let doc = "NAME: x\nTYPE: TSP\nDIMENSION: 5\nEDGE_WEIGHT_TYPE: EUC_2D\nNODE_COORD_SECTION\n1 0 0\n2 1 0\n3 2 0\n4 3 0\nEOF\n";
        assert_eq!(
            parse_instance(doc).unwrap_err(),
            ParseError::DimensionMismatch { section: "NODE_COORD_SECTION", expected: 5, found: 4 }
        );
    }

    #[test]
    fn rejects_asymmetric_problems() {
        let doc = "NAME: br17\nTYPE: ATSP\nDIMENSION: 17\n";
        assert!(matches!(parse_instance(doc), Err(ParseError::UnsupportedType { line: 2, .. })));
        let doc = "NAME: x\nTYPE: TSP\nDIMENSION: 3\nEDGE_WEIGHT_TYPE: MAN_3D\n";
        assert!(matches!(parse_instance(doc), Err(ParseError::UnsupportedMetric { line: 4, .. })));
    }

    #[test]
    fn malformed_coordinates_name_the_line() {
        let doc = "NAME: x\nTYPE: TSP\nDIMENSION: 3\nEDGE_WEIGHT_TYPE: EUC_2D\nNODE_COORD_SECTION\n1 0 0\n2 zero 0\n3 1 1\nEOF\n";
        match parse_instance(doc) {
            Err(ParseError::Malformed { line, keyword, .. }) => {
                assert_eq!(line, 7);
                assert_eq!(keyword, "NODE_COORD_SECTION");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn euc2d_rounds_to_nearest() {
        let inst = Instance::from_coords("t", Metric::Euc2d, vec![(0.0, 0.0), (3.0, 4.0), (1.0, 1.0)]).unwrap();
        assert_eq!(inst.distance(0, 1), 5);
        // sqrt(2) = 1.414.. -> 1
        assert_eq!(inst.distance(0, 2), 1);
        assert_eq!(inst.distance(2, 2), 0);
        let ceil = Instance::from_coords("t", Metric::Ceil2d, vec![(0.0, 0.0), (3.0, 4.0), (1.0, 1.0)]).unwrap();
        assert_eq!(ceil.distance(0, 2), 2);
    }

    #[test]
    fn att_pseudo_euclidean() {
        // r = sqrt(100/10) = 3.162..; nint = 3 < r so the distance is 4
        let inst = Instance::from_coords("a", Metric::Att, vec![(0.0, 0.0), (10.0, 0.0), (0.0, 0.0)]).unwrap();
        assert_eq!(inst.distance(0, 1), 4);
        // r = sqrt(1000/10) = 10 exactly
        let inst = Instance::from_coords("a", Metric::Att, vec![(0.0, 0.0), (0.0, 0.0), (10.0, 30.0)]).unwrap();
        assert_eq!(inst.distance(0, 2), 10);
    }

    #[test]
    fn checked_distance_rejects_out_of_range() {
        let inst = parse_instance(TRIANGLE).unwrap();
        assert_eq!(inst.checked_distance(0, 3), Err(IndexError { index: 3, n: 3 }));
        assert_eq!(inst.checked_distance(2, 0), Ok(4));
    }

    #[test]
    fn explicit_layouts_expand_identically() {
        // d(0,1)=1 d(0,2)=2 d(0,3)=3 d(1,2)=4 d(1,3)=5 d(2,3)=6
        let layouts = [
            ("FULL_MATRIX", "0 1 2 3\n1 0 4 5\n2 4 0 6\n3 5 6 0"),
            ("UPPER_ROW", "1 2 3\n4 5\n6"),
            ("LOWER_ROW", "1\n2 4\n3 5 6"),
            ("UPPER_DIAG_ROW", "0 1 2 3\n0 4 5\n0 6\n0"),
            ("LOWER_DIAG_ROW", "0\n1 0\n2 4 0 3 5 6 0"),
        ];
        let expected = [[0, 1, 2, 3], [1, 0, 4, 5], [2, 4, 0, 6], [3, 5, 6, 0]];
        for (fmt, body) in layouts {
            let doc = format!(
                "NAME: m\nTYPE: TSP\nDIMENSION: 4\nEDGE_WEIGHT_TYPE: EXPLICIT\nEDGE_WEIGHT_FORMAT: {fmt}\nEDGE_WEIGHT_SECTION\n{body}\nEOF\n"
            );
            let inst = parse_instance(&doc).unwrap_or_else(|e| panic!("{fmt}: {e}"));
            for i in 0..4 {
                for j in 0..4 {
                    assert_eq!(inst.distance(i, j), expected[i][j], "{fmt} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn short_weight_section_is_a_mismatch() {
        let doc = "NAME: m\nTYPE: TSP\nDIMENSION: 4\nEDGE_WEIGHT_TYPE: EXPLICIT\nEDGE_WEIGHT_FORMAT: UPPER_ROW\nEDGE_WEIGHT_SECTION\n1 2 3\n4 5\nEOF\n";
        assert_eq!(
            parse_instance(doc).unwrap_err(),
            ParseError::DimensionMismatch { section: "EDGE_WEIGHT_SECTION", expected: 6, found: 5 }
        );
    }

    #[test]
    fn tour_file_round_trip() {
        let t = TourFile { name: "x.tour".into(), permutation: vec![2, 0, 1, 3] };
        let text = t.to_tsplib();
        assert!(text.contains("TOUR_SECTION\n3\n1\n2\n4\n-1\n"));
        assert_eq!(parse_tour(&text).unwrap(), t);
        assert!(t.validate(4));
        assert!(!t.validate(5));
    }

    #[test]
    fn tour_file_rejects_repeats() {
        let doc = "NAME: t\nTYPE: TOUR\nDIMENSION: 3\nTOUR_SECTION\n1 2 2\n-1\nEOF\n";
        assert!(matches!(parse_tour(doc), Err(ParseError::DuplicateCity { city: 2, .. })));
    }

    #[test]
    fn optima_table_lookup() {
        let t = KnownOptima::bundled();
        assert_eq!(t.get("berlin52"), Some(7542));
        assert_eq!(t.get("eil51"), Some(426));
        assert_eq!(t.get("d493"), Some(35002));
        assert_eq!(t.get("nope"), None);
        assert!(KnownOptima::parse("a 1 2\n").is_err());
    }
}
