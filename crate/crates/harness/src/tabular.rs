//! CSV datasets described by a sidecar TOML schema.
//!
//! ```toml
//! label = "class"                  # label column
//! classes = ["benign", "malignant"] # optional; default is sorted distinct labels
//! ignore = ["id"]                  # optional columns to skip
//!
//! [ranges]                         # optional declared feature ranges
//! radius = [5.0, 30.0]
//! ```
//!
//! Every other column is a numeric feature. Features without a declared range
//! use the minimum and maximum of the training rows.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::error::{io_err, HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schema {
    pub label: String,
    #[serde(default)]
    pub classes: Option<Vec<String>>,
    #[serde(default)]
    pub ignore: Vec<String>,
    #[serde(default)]
    pub ranges: BTreeMap<String, [f64; 2]>,
}

impl Schema {
    pub fn parse(text: &str) -> Result<Schema> {
        toml::from_str(text).map_err(|e| HarnessError::Schema(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Schema> {
        Schema::parse(&fs::read_to_string(path).map_err(io_err(path))?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub feature_names: Vec<String>,
    /// Declared range per feature, if any.
    pub ranges: Vec<Option<(f64, f64)>>,
    pub class_names: Vec<String>,
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl Table {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn from_reader<R: std::io::Read>(reader: R, schema: &Schema) -> Result<Table> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let label_col = headers
            .iter()
            .position(|h| h == schema.label)
            .ok_or_else(|| HarnessError::Schema(format!("label column `{}` not in header", schema.label)))?;
        for name in schema.ranges.keys().chain(&schema.ignore) {
            if !headers.iter().any(|h| h == name) {
                return Err(HarnessError::Schema(format!("column `{name}` not in header")));
            }
        }
        let feature_cols: Vec<usize> =
            (0..headers.len()).filter(|&i| i != label_col && !schema.ignore.iter().any(|n| n == &headers[i])).collect();
        let feature_names: Vec<String> = feature_cols.iter().map(|&i| headers[i].to_string()).collect();
        let ranges = feature_names.iter().map(|n| schema.ranges.get(n).map(|r| (r[0], r[1]))).collect();

        let mut features = Vec::new();
        let mut raw_labels = Vec::new();
        for (line, row) in rdr.records().enumerate() {
            let row = row?;
            let values = feature_cols
                .iter()
                .map(|&i| {
                    row[i].parse::<f64>().map_err(|_| {
                        HarnessError::Schema(format!(
                            "row {}: `{}` is not a number in `{}`",
                            line + 2,
                            &row[i],
                            &headers[i]
                        ))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            features.push(values);
            raw_labels.push(row[label_col].to_string());
        }

        let class_names = match &schema.classes {
            Some(c) => c.clone(),
            None => {
                let mut c = raw_labels.clone();
                c.sort();
                c.dedup();
                c
            }
        };
        let labels = raw_labels
            .iter()
            .map(|l| {
                class_names
                    .iter()
                    .position(|c| c == l)
                    .ok_or_else(|| HarnessError::Schema(format!("unknown class `{l}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        if class_names.len() < 2 {
            return Err(HarnessError::Schema("need at least two classes".into()));
        }
        Ok(Table { feature_names, ranges, class_names, features, labels })
    }

    pub fn load(csv_path: &Path, schema_path: &Path) -> Result<Table> {
        let schema = Schema::load(schema_path)?;
        let file = fs::File::open(csv_path).map_err(io_err(csv_path))?;
        Table::from_reader(file, &schema)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str = "id,a,b,class\n1,0.5,3,yes\n2,1.5,-1,no\n3,2.5,0,yes\n";

    #[test]
    fn reads_features_and_labels() {
        let schema = Schema::parse("label = \"class\"\nignore = [\"id\"]\n[ranges]\na = [0.0, 3.0]\n").unwrap();
        let t = Table::from_reader(CSV.as_bytes(), &schema).unwrap();
        assert_eq!(t.feature_names, vec!["a", "b"]);
        assert_eq!(t.ranges, vec![Some((0.0, 3.0)), None]);
        assert_eq!(t.class_names, vec!["no", "yes"]);
        assert_eq!(t.labels, vec![1, 0, 1]);
        assert_eq!(t.features[1], vec![1.5, -1.0]);
    }

    #[test]
    fn declared_class_order_wins() {
        let schema = Schema::parse("label = \"class\"\nclasses = [\"yes\", \"no\"]\n").unwrap();
        let t = Table::from_reader(CSV.as_bytes(), &schema).unwrap();
        assert_eq!(t.labels, vec![0, 1, 0]);
        assert_eq!(t.dim(), 3);
    }

    #[test]
    fn schema_errors() {
        let s = |t: &str| Schema::parse(t).unwrap();
        assert!(Table::from_reader(CSV.as_bytes(), &s("label = \"nope\"")).is_err());
        assert!(Table::from_reader(CSV.as_bytes(), &s("label = \"class\"\nclasses = [\"yes\"]")).is_err());
        assert!(Table::from_reader("a,class\nx,1\n".as_bytes(), &s("label = \"class\"")).is_err());
        assert!(Schema::parse("label = \"c\"\nextra = 1").is_err());
    }
}
