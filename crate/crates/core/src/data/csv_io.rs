use super::TabularDataset;
use crate::{Error, Result};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

/// Loads a CSV file with a header row. See [`read_csv`].
pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<TabularDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, label_column)
}

fn is_missing_token(cell: &str) -> bool {
    cell.is_empty() || cell.eq_ignore_ascii_case("na") || cell.eq_ignore_ascii_case("nan")
}

/// Parses RFC-4180 CSV. Empty, `NA`, `nan` and non-numeric cells are marked
/// missing (value placeholder 0). The lexicographically larger label maps to 1.
pub fn read_csv<R: Read>(reader: R, label_column: &str) -> Result<TabularDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut seen = std::collections::HashSet::new();
    if let Some(dup) = headers.iter().find(|h| !seen.insert(h.as_str())) {
        return Err(Error::parse(1, format!("duplicate column `{dup}`")));
    }
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::MissingLabelColumn(label_column.to_string()))?;
    let names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != label_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut values = Vec::new();
    let mut missing = Vec::new();
    let mut raw_labels = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record?;
        for (j, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            if j == label_idx {
                if cell.is_empty() {
                    return Err(Error::parse(r + 2, "empty label cell"));
                }
                raw_labels.push(cell.to_string());
                continue;
            }
            match cell.parse::<f64>() {
                Ok(v) if !is_missing_token(cell) && v.is_finite() => {
                    values.push(v);
                    missing.push(false);
                }
                _ => {
                    values.push(0.0);
                    missing.push(true);
                }
            }
        }
    }

    let mut classes: Vec<&str> = raw_labels.iter().map(String::as_str).collect();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() != 2 {
        return Err(Error::ClassCount(classes.len()));
    }
    let positive = classes[1].to_string();
    let labels: Vec<u8> = raw_labels.iter().map(|l| u8::from(*l == positive)).collect();

    let d = names.len();
    for (j, name) in names.iter().enumerate() {
        if (0..labels.len()).all(|i| missing[i * d + j]) {
            return Err(Error::EmptyColumn(name.clone()));
        }
    }
    TabularDataset::new(values, missing, labels, names)
}

/// Writes the dataset as CSV with a trailing label column (missing cells empty).
pub fn write_csv<W: Write>(data: &TabularDataset, writer: W, label_column: &str) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = data.column_names().iter().map(String::as_str).collect();
    header.push(label_column);
    w.write_record(&header)?;
    for i in 0..data.n_rows() {
        let mut rec: Vec<String> = (0..data.n_cols())
            .map(|j| {
                if data.is_missing(i, j) {
                    String::new()
                } else {
                    data.value(i, j).to_string()
                }
            })
            .collect();
        rec.push(data.labels()[i].to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_rows_no_missing() {
        let csv = "a,b,y\n1,2,neg\n3,4,pos\n5,6,neg\n";
        let ds = read_csv(csv.as_bytes(), "y").unwrap();
        assert_eq!(ds.n_rows(), 3);
        assert_eq!(ds.n_cols(), 2);
        assert!(!ds.has_missing());
        assert_eq!(ds.labels(), &[0, 1, 0]);
    }

    #[test]
    fn empty_cell_is_missing() {
        let csv = "a,b,c,y\n1,2,3,0\n4,5,,1\n7,8,9,0\n";
        let ds = read_csv(csv.as_bytes(), "y").unwrap();
        assert!(ds.is_missing(1, 2));
        assert_eq!(ds.value(1, 2), 0.0);
        assert_eq!(ds.missing_mask().iter().filter(|&&m| m).count(), 1);
    }

    #[test]
    fn missing_tokens_and_garbage() {
        let csv = "a,y\nNA,0\nNaN,1\nabc,0\n2.5,1\ninf,0\n";
        let ds = read_csv(csv.as_bytes(), "y").unwrap();
        assert_eq!(ds.missing_mask(), &[true, true, true, false, true]);
    }

    #[test]
    fn label_mapping_is_lexicographic() {
        let csv = "a,y\n1,b\n2,a\n";
        let ds = read_csv(csv.as_bytes(), "y").unwrap();
        assert_eq!(ds.labels(), &[1, 0]);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            read_csv("a,y\n1,0\n".as_bytes(), "z"),
            Err(Error::MissingLabelColumn(_))
        ));
        assert!(matches!(
            read_csv("a,y\n1,0\n2,1\n3,2\n".as_bytes(), "y"),
            Err(Error::ClassCount(3))
        ));
        assert!(matches!(
            read_csv("a,y\n1,0\n2,0\n".as_bytes(), "y"),
            Err(Error::ClassCount(1))
        ));
        assert!(matches!(
            read_csv("a,b,y\n,1,0\nNA,2,1\n".as_bytes(), "y"),
            Err(Error::EmptyColumn(_))
        ));
        assert!(load_csv("/nonexistent/file.csv", "y").is_err());
    }

    #[test]
    fn wide_file_keeps_all_columns() {
        let d = 1203;
        let mut s: String = (0..d).map(|j| format!("f{j},")).collect();
        s.push_str("label\n");
        for r in 0..4 {
            for j in 0..d {
                s.push_str(&format!("{},", (r * j) as f64 * 0.5));
            }
            s.push_str(if r % 2 == 0 { "toxic\n" } else { "safe\n" });
        }
        let ds = read_csv(s.as_bytes(), "label").unwrap();
        assert_eq!(ds.n_cols(), 1203);
    }

    #[test]
    fn write_then_read() {
        let csv = "a,b,y\n1,,0\n3,4,1\n";
        let ds = read_csv(csv.as_bytes(), "y").unwrap();
        let mut out = Vec::new();
        write_csv(&ds, &mut out, "y").unwrap();
        let back = read_csv(out.as_slice(), "y").unwrap();
        assert_eq!(ds, back);
    }
}
