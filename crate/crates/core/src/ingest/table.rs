use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::data::{Dataset, LabeledPoint, ValueKind};
use crate::error::{Error, Result};

/// Which CSV columns hold the features, the label and the user signal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvSchema {
    pub feature_columns: Vec<String>,
    pub label_column: String,
    /// Without a signal column every point gets `u = 0`.
    pub signal_column: Option<String>,
    pub label_kind: ValueKind,
    pub signal_kind: ValueKind,
}

impl CsvSchema {
    pub fn numeric(features: &[&str], label: &str, signal: Option<&str>) -> Self {
        CsvSchema {
            feature_columns: features.iter().map(|s| s.to_string()).collect(),
            label_column: label.to_string(),
            signal_column: signal.map(str::to_string),
            label_kind: ValueKind::Numeric,
            signal_kind: ValueKind::Numeric,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.feature_columns.is_empty() {
            return Err(Error::invalid("ingest", "feature_columns", "at least one feature column is required"));
        }
        let mut names: Vec<&str> = self.feature_columns.iter().map(String::as_str).collect();
        names.push(&self.label_column);
        if let Some(s) = &self.signal_column {
            names.push(s);
        }
        let mut sorted = names.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::invalid("ingest", "schema", format!("column `{}` is used twice", w[0])));
        }
        Ok(())
    }
}

/// Reads a header-first, comma-separated file. Lines starting with `#` are
/// skipped, so provenance comments written by [`write_csv`] are harmless.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, path, schema)
}

/// [`load_csv`] over any reader; `origin` is only used in error messages.
pub fn read_csv<R: Read>(reader: R, origin: &Path, schema: &CsvSchema) -> Result<Dataset> {
    schema.validate()?;
    let csv_err = |source| Error::Csv {
        path: origin.to_path_buf(),
        source,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    if headers.is_empty() {
        return Err(Error::NoDataRows {
            path: origin.to_path_buf(),
        });
    }
    let column = |name: &str| -> Result<usize> {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::MissingColumn {
            path: origin.to_path_buf(),
            column: name.to_string(),
        })
    };
    let feature_idx = schema
        .feature_columns
        .iter()
        .map(|c| column(c))
        .collect::<Result<Vec<_>>>()?;
    let label_idx = column(&schema.label_column)?;
    let signal_idx = schema.signal_column.as_deref().map(column).transpose()?;

    let mut points = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let row = i + 1;
        let cell = |idx: usize| -> Result<f64> {
            let raw = record.get(idx).unwrap_or("");
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::BadCell {
                    path: origin.to_path_buf(),
                    row,
                    column: headers.get(idx).unwrap_or("?").to_string(),
                    cell: raw.to_string(),
                })
        };
        let features = feature_idx.iter().map(|&j| cell(j)).collect::<Result<Vec<_>>>()?;
        let label = cell(label_idx)?;
        let user_signal = signal_idx.map(cell).transpose()?.unwrap_or(0.0);
        points.push(LabeledPoint::new(features, label, user_signal));
    }
    if points.is_empty() {
        return Err(Error::NoDataRows {
            path: origin.to_path_buf(),
        });
    }
    Dataset::new(points, schema.label_kind, schema.signal_kind)
}

/// Column names used by [`write_csv`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvColumns {
    pub features: Vec<String>,
    pub label: String,
    pub signal: String,
}

impl CsvColumns {
    /// `x` (or `x0, x1, …`), `y`, `u`.
    pub fn default_for(feature_dim: usize) -> Self {
        let features = if feature_dim == 1 {
            vec!["x".to_string()]
        } else {
            (0..feature_dim).map(|i| format!("x{i}")).collect()
        };
        CsvColumns {
            features,
            label: "y".to_string(),
            signal: "u".to_string(),
        }
    }

    pub fn schema(&self, label_kind: ValueKind, signal_kind: ValueKind) -> CsvSchema {
        CsvSchema {
            feature_columns: self.features.clone(),
            label_column: self.label.clone(),
            signal_column: Some(self.signal.clone()),
            label_kind,
            signal_kind,
        }
    }
}

/// Writes `d` as CSV, preceded by `# `-prefixed comment lines. Values use the
/// shortest representation that parses back to the same `f64`.
pub fn write_csv<W: Write>(mut out: W, d: &Dataset, columns: &CsvColumns, comments: &[String]) -> std::io::Result<()> {
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    let mut header: Vec<&str> = columns.features.iter().map(String::as_str).collect();
    header.push(&columns.label);
    header.push(&columns.signal);
    writeln!(out, "{}", header.join(","))?;
    for p in d.points() {
        let mut fields: Vec<String> = p.features.iter().map(|v| v.to_string()).collect();
        fields.push(p.label.to_string());
        fields.push(p.user_signal.to_string());
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

pub(crate) fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: PathBuf::from(path),
        source,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn weather_schema() -> CsvSchema {
        CsvSchema::numeric(&["min_temp"], "max_temp", None)
    }

    fn read(text: &str, schema: &CsvSchema) -> Result<Dataset> {
        read_csv(text.as_bytes(), Path::new("mem.csv"), schema)
    }

    #[test]
    fn header_only_has_no_rows() {
        let err = read("date,min_temp,max_temp\n", &weather_schema()).unwrap_err();
        assert!(err.to_string().contains("no data rows"), "{err}");
        assert!(matches!(read("", &weather_schema()), Err(Error::NoDataRows { .. })));
    }

    #[test]
    fn two_rows_in_file_order() {
        let d = read(
            "date,min_temp,max_temp\n2021-01-01,-3.5,1.25\n2021-01-02,-7,-2\n",
            &weather_schema(),
        )
        .unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.points()[0], LabeledPoint::scalar(-3.5, 1.25, 0.0));
        assert_eq!(d.points()[1], LabeledPoint::scalar(-7.0, -2.0, 0.0));
    }

    #[test]
    fn missing_column_is_named() {
        let err = read("date,min_temp\n1,2\n", &weather_schema()).unwrap_err();
        match err {
            Error::MissingColumn { column, .. } => assert_eq!(column, "max_temp"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn bad_cell_reports_row() {
        let err = read("min_temp,max_temp\n1,2\n3,4\n5,6,7\n", &weather_schema());
        assert!(err.is_err());
        let err = read("min_temp,max_temp\n1,2\n3,4,5\n", &weather_schema()).unwrap_err();
        assert!(matches!(err, Error::Csv { .. }), "{err}");
        let err = read("min_temp,max_temp\n1,2\n3,abc\n", &weather_schema()).unwrap_err();
        match err {
            Error::BadCell { row, column, cell, .. } => {
                assert_eq!((row, column.as_str(), cell.as_str()), (2, "max_temp", "abc"));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn decimal_point_only() {
        assert!(read("min_temp,max_temp\n\"1,5\",2\n", &weather_schema()).is_err());
    }

    #[test]
    fn comments_are_skipped() {
        let d = read("# seed=3\nmin_temp,max_temp\n# mid\n1,2\n", &weather_schema()).unwrap();
        assert_eq!(d.len(), 1);
    }

    #[test]
    fn duplicate_columns_rejected() {
        let schema = CsvSchema::numeric(&["a"], "a", None);
        assert!(schema.validate().is_err());
    }
}
