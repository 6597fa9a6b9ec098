//! Dataset ingestion, below-detection-limit substitution and sample rank
//! correlations.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use serde::Serialize;

use crate::copula::{kendall_tau, spearman_rho, AssociationParameter};
use crate::error::{Error, Result};
use crate::ranks;

const NORTH_CSV: &str = include_str!("../data/north.csv");
const SOUTH_CSV: &str = include_str!("../data/south.csv");

/// One numeric column of a sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Column {
    pub name: String,
    pub unit: Option<String>,
    pub values: Vec<f64>,
    /// Number of below-detection-limit tokens replaced during loading.
    pub bdl_substitutions: usize,
}

/// Paired observations `(x_i, y_i)` with their provenance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BivariateSample {
    pub x: Column,
    pub y: Column,
    pub source: String,
}

impl BivariateSample {
    /// Build a sample from two equally long, finite columns.
    pub fn from_columns(x: Vec<f64>, y: Vec<f64>, source: impl Into<String>) -> Result<Self> {
        let sample = Self {
            x: Column {
                name: "x".into(),
                unit: None,
                values: x,
                bdl_substitutions: 0,
            },
            y: Column {
                name: "y".into(),
                unit: None,
                values: y,
                bdl_substitutions: 0,
            },
            source: source.into(),
        };
        sample.validate()?;
        Ok(sample)
    }

    fn validate(&self) -> Result<()> {
        if self.x.values.len() != self.y.values.len() {
            return Err(Error::Data(format!(
                "column lengths differ: {} vs {}",
                self.x.values.len(),
                self.y.values.len()
            )));
        }
        if self.n() < 2 {
            return Err(Error::TooFewObservations {
                needed: 2,
                got: self.n(),
            });
        }
        if let Some(v) = self
            .x
            .values
            .iter()
            .chain(&self.y.values)
            .find(|v| !v.is_finite())
        {
            return Err(Error::Data(format!("non-finite value {v}")));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.x.values.len()
    }

    pub fn xs(&self) -> &[f64] {
        &self.x.values
    }

    pub fn ys(&self) -> &[f64] {
        &self.y.values
    }

    /// The sample with `y` negated, which reverses the ranks of `y`.
    pub fn negate_y(&self) -> Self {
        let mut out = self.clone();
        out.y.values.iter_mut().for_each(|v| *v = -*v);
        out
    }

    /// A new sample made of the given rows.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut out = self.clone();
        out.x.values = rows.iter().map(|&i| self.x.values[i]).collect();
        out.y.values = rows.iter().map(|&i| self.y.values[i]).collect();
        out
    }
}

/// Replacement value for a below-detection-limit token in one column.
#[derive(Debug, Clone, PartialEq)]
pub struct BdlRule {
    pub column: String,
    pub value: f64,
}

/// Which columns to read and how to interpret censored cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Schema {
    pub x: String,
    pub y: String,
    pub bdl_token: String,
    pub bdl_rules: Vec<BdlRule>,
    pub units: HashMap<String, String>,
}

impl Schema {
    pub fn new(x: impl Into<String>, y: impl Into<String>) -> Self {
        Self {
            x: x.into(),
            y: y.into(),
            bdl_token: "bdl".into(),
            bdl_rules: Vec::new(),
            units: HashMap::new(),
        }
    }

    /// Schema for the groundwater columns: As below detection is set to
    /// 4 ppb and Cl below detection to 0.01 ppm.
    pub fn groundwater(x: impl Into<String>, y: impl Into<String>) -> Self {
        let mut s = Self::new(x, y);
        s.bdl_rules = vec![
            BdlRule {
                column: "As".into(),
                value: 4.0,
            },
            BdlRule {
                column: "Cl".into(),
                value: 0.01,
            },
        ];
        s.units = [("As", "ppb"), ("Cl", "ppm"), ("Eh", "mV"), ("pH", "pH")]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        s
    }

    fn bdl_value(&self, column: &str) -> Option<f64> {
        self.bdl_rules
            .iter()
            .find(|r| r.column == column)
            .map(|r| r.value)
    }
}

/// Read two columns from a headed CSV file.
pub fn load_dataset(path: impl AsRef<Path>, schema: &Schema) -> Result<BivariateSample> {
    let path = path.as_ref();
    let file =
        std::fs::File::open(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    load_from_reader(file, &path.display().to_string(), schema)
}

/// Read two columns from any CSV source.
pub fn load_from_reader<R: Read>(
    reader: R,
    source: &str,
    schema: &Schema,
) -> Result<BivariateSample> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Data(format!("{source}: {e}")))?
        .clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Data(format!("{source}: column '{name}' not found")))
    };
    let xi = find(&schema.x)?;
    let yi = find(&schema.y)?;
    let mut x = Column {
        name: schema.x.clone(),
        unit: schema.units.get(&schema.x).cloned(),
        values: Vec::new(),
        bdl_substitutions: 0,
    };
    let mut y = Column {
        name: schema.y.clone(),
        unit: schema.units.get(&schema.y).cloned(),
        values: Vec::new(),
        bdl_substitutions: 0,
    };
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Data(format!("{source}: {e}")))?;
        for (col, idx) in [(&mut x, xi), (&mut y, yi)] {
            let cell = record.get(idx).unwrap_or("");
            let value = parse_cell(cell, &col.name, schema)
                .map_err(|msg| Error::Data(format!("{source}, data row {}: {msg}", line + 1)))?;
            if value.1 {
                col.bdl_substitutions += 1;
            }
            col.values.push(value.0);
        }
    }
    let sample = BivariateSample {
        x,
        y,
        source: source.to_string(),
    };
    sample.validate()?;
    Ok(sample)
}

fn parse_cell(
    cell: &str,
    column: &str,
    schema: &Schema,
) -> std::result::Result<(f64, bool), String> {
    if cell.eq_ignore_ascii_case(&schema.bdl_token) {
        return schema
            .bdl_value(column)
            .map(|v| (v, true))
            .ok_or_else(|| format!("'{cell}' in column {column} has no substitution rule"));
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok((v, false)),
        _ => Err(format!("cannot parse '{cell}' in column {column}")),
    }
}

/// The two subregions of the bundled groundwater data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Region {
    North,
    South,
}

impl Region {
    pub fn name(self) -> &'static str {
        match self {
            Region::North => "north",
            Region::South => "south",
        }
    }

    pub fn csv(self) -> &'static str {
        match self {
            Region::North => NORTH_CSV,
            Region::South => SOUTH_CSV,
        }
    }
}

impl std::str::FromStr for Region {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "north" | "n" => Ok(Region::North),
            "south" | "s" => Ok(Region::South),
            _ => Err(Error::Data(format!("unknown region '{s}'"))),
        }
    }
}

/// Load a pair of variables from the bundled groundwater data.
pub fn bundled(region: Region, x: &str, y: &str) -> Result<BivariateSample> {
    load_from_reader(
        region.csv().as_bytes(),
        &format!("bundled:{}", region.name()),
        &Schema::groundwater(x, y),
    )
}

/// The four variable pairs analysed for each subregion.
pub const GROUNDWATER_PAIRS: [(&str, &str); 4] =
    [("As", "Cl"), ("As", "Eh"), ("As", "pH"), ("Eh", "pH")];

/// Tie convention for Kendall's tau.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TauVariant {
    /// Denominator `C(n, 2)`.
    A,
    /// Denominator corrected for ties in each margin.
    #[default]
    B,
}

/// Kendall's tau (tau-b).
pub fn kendall_hat(s: &BivariateSample) -> f64 {
    kendall_hat_with(s, TauVariant::B)
}

pub fn kendall_hat_with(s: &BivariateSample, variant: TauVariant) -> f64 {
    match variant {
        TauVariant::A => ranks::kendall_tau_a(s.xs(), s.ys()),
        TauVariant::B => ranks::kendall_tau_b(s.xs(), s.ys()),
    }
}

/// Spearman's rho from mid-ranks.
pub fn spearman_hat(s: &BivariateSample) -> f64 {
    ranks::spearman(s.xs(), s.ys())
}

/// Pearson's product-moment correlation of the raw values.
pub fn pearson_hat(s: &BivariateSample) -> f64 {
    ranks::pearson(s.xs(), s.ys())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationEstimates {
    pub kendall: f64,
    pub spearman: f64,
    pub pearson: Option<f64>,
}

/// Nonparametric estimates from the sample.
pub fn correlations(s: &BivariateSample) -> CorrelationEstimates {
    CorrelationEstimates {
        kendall: kendall_hat(s),
        spearman: spearman_hat(s),
        pearson: Some(pearson_hat(s)),
    }
}

/// Kendall's tau and Spearman's rho implied by a fitted θ.
pub fn parametric_correlations(theta: AssociationParameter) -> CorrelationEstimates {
    CorrelationEstimates {
        kendall: kendall_tau(theta),
        spearman: spearman_rho(theta),
        pearson: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bundled_sizes_and_substitutions() {
        let n = bundled(Region::North, "As", "Cl").unwrap();
        assert_eq!(n.n(), 23);
        assert_eq!(n.x.bdl_substitutions, 2);
        assert_eq!(n.y.bdl_substitutions, 1);
        assert_eq!(n.x.unit.as_deref(), Some("ppb"));
        let s = bundled(Region::South, "As", "Cl").unwrap();
        assert_eq!(s.n(), 44);
        assert_eq!(s.y.bdl_substitutions, 1);
        assert_eq!(s.x.bdl_substitutions, 0);
    }

    #[test]
    fn bdl_values_are_the_documented_midpoints() {
        let n = bundled(Region::North, "As", "pH").unwrap();
        let raw: Vec<&str> = NORTH_CSV.lines().skip(1).collect();
        for (i, line) in raw.iter().enumerate() {
            let well = line.split(',').next().unwrap();
            if well == "TH13" || well == "TH6" {
                assert_eq!(n.xs()[i], 4.0);
            }
        }
        let s = bundled(Region::South, "Cl", "Eh").unwrap();
        let tb5 = SOUTH_CSV
            .lines()
            .skip(1)
            .position(|l| l.starts_with("TB5,"))
            .unwrap();
        assert_eq!(s.xs()[tb5], 0.01);
    }

    #[test]
    fn missing_column_and_unparseable_cells() {
        let csv = "a,b\n1,2\n3,bdl\n";
        let err = load_from_reader(csv.as_bytes(), "t", &Schema::new("a", "c")).unwrap_err();
        assert!(matches!(err, Error::Data(m) if m.contains("'c'")));
        let err = load_from_reader(csv.as_bytes(), "t", &Schema::new("a", "b")).unwrap_err();
        assert!(matches!(err, Error::Data(m) if m.contains("no substitution rule")));
        let mut schema = Schema::new("a", "b");
        schema.bdl_rules.push(BdlRule {
            column: "b".into(),
            value: 0.5,
        });
        let s = load_from_reader(csv.as_bytes(), "t", &schema).unwrap();
        assert_eq!(s.ys(), &[2.0, 0.5]);
        let err = load_from_reader("a,b\n1,x\n2,3\n".as_bytes(), "t", &Schema::new("a", "b"))
            .unwrap_err();
        assert!(matches!(err, Error::Data(_)));
        let err =
            load_from_reader("a,b\n1,2\n".as_bytes(), "t", &Schema::new("a", "b")).unwrap_err();
        assert!(matches!(err, Error::TooFewObservations { .. }));
    }

    #[test]
    fn published_rank_correlations() {
        let cases = [
            (Region::North, "As", "Cl", -0.052, -0.104),
            (Region::North, "As", "Eh", -0.243, -0.326),
            (Region::North, "As", "pH", 0.269, 0.384),
            (Region::North, "Eh", "pH", -0.429, -0.545),
            (Region::South, "As", "Cl", -0.230, -0.320),
            (Region::South, "As", "Eh", -0.577, -0.753),
            (Region::South, "As", "pH", 0.101, 0.156),
            (Region::South, "Eh", "pH", 0.062, 0.050),
        ];
        for (region, x, y, tau, rho) in cases {
            let s = bundled(region, x, y).unwrap();
            assert_abs_diff_eq!(kendall_hat(&s), tau, epsilon = 0.0005);
            assert_abs_diff_eq!(spearman_hat(&s), rho, epsilon = 0.0005);
            // South (Eh, pH) is the one published pair where |rho| < |tau|.
            if !(region == Region::South && x == "Eh") {
                assert!(spearman_hat(&s).abs() >= kendall_hat(&s).abs());
            }
        }
    }

    #[test]
    fn tau_a_differs_only_with_ties() {
        let s =
            BivariateSample::from_columns(vec![1.0, 2.0, 3.0, 4.0], vec![1.0, 3.0, 2.0, 4.0], "t")
                .unwrap();
        assert_eq!(kendall_hat_with(&s, TauVariant::A), kendall_hat(&s));
        let n = bundled(Region::North, "As", "pH").unwrap();
        assert!(kendall_hat_with(&n, TauVariant::A).abs() < kendall_hat(&n).abs());
    }

    #[test]
    fn parametric_correlation_anchors() {
        let c = parametric_correlations(AssociationParameter::new(-4.006).unwrap());
        assert_abs_diff_eq!(c.kendall, -0.389, epsilon = 0.0005);
        assert_abs_diff_eq!(c.spearman, -0.558, epsilon = 0.0005);
        let c = parametric_correlations(AssociationParameter::new(-7.017).unwrap());
        assert_abs_diff_eq!(c.kendall, -0.563, epsilon = 0.0005);
        let c = parametric_correlations(AssociationParameter::INDEPENDENCE);
        assert_eq!((c.kendall, c.spearman), (0.0, 0.0));
    }
}
