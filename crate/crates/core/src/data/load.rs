use std::fmt::Write as _;
use std::path::Path;

use super::encoding::{ColumnKind, EncodingPlan};
use super::{write_atomic, Dataset, DatasetBuilder};
use crate::error::{Error, Result};

/// Summary of what a load read, for cross-checking against published
/// frequency tables.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadReport {
    pub n_rows: usize,
    pub n_regions: usize,
    pub n_families: usize,
    /// Outcome label → count, in category order.
    pub outcome_counts: Vec<(String, usize)>,
    /// Categorical column → (level, count) in declared order.
    pub level_counts: Vec<(String, Vec<(String, usize)>)>,
    /// Design column → mean subtracted by centering.
    pub centered: Vec<(String, f64)>,
}

impl LoadReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "rows {}  regions {}  families {}",
            self.n_rows, self.n_regions, self.n_families
        );
        let pct = |c: usize| 100.0 * c as f64 / self.n_rows.max(1) as f64;
        let _ = writeln!(s, "outcome");
        for (label, c) in &self.outcome_counts {
            let _ = writeln!(s, "  {label:<20} {c:>8} {:>7.2}%", pct(*c));
        }
        for (col, levels) in &self.level_counts {
            let _ = writeln!(s, "{col}");
            for (level, c) in levels {
                let _ = writeln!(s, "  {level:<20} {c:>8} {:>7.2}%", pct(*c));
            }
        }
        for (col, m) in &self.centered {
            let _ = writeln!(s, "centered {col} by {m:?}");
        }
        s
    }
}

struct Row {
    region: String,
    family: String,
    outcome: usize,
    x: Vec<f64>,
    line: usize,
}

/// Reads a comma-delimited dataset with header `region,family,<outcome>,<covariates...>`
/// and encodes covariates according to `plan`. Errors carry the file line.
pub fn load(path: &Path, plan: &EncodingPlan) -> Result<(Dataset, LoadReport)> {
    let at = |line: usize, message: String| Error::Load {
        path: path.to_path_buf(),
        line,
        message,
    };
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if header.iter().all(String::is_empty) {
        return Err(at(1, "empty file".into()));
    }
    if header.len() < 3 {
        return Err(at(1, "header needs at least region, family and outcome columns".into()));
    }
    if let Some(dup) = header.iter().enumerate().find(|(i, h)| header[..*i].contains(h)) {
        return Err(at(1, format!("duplicate column `{}`", dup.1)));
    }
    if let Some((name, _)) = &plan.outcome {
        if *name != header[2] {
            return Err(at(1, format!("plan declares outcome `{name}` but column 3 is `{}`", header[2])));
        }
    }
    let cov_cols = &header[3..];
    for (name, _) in &plan.columns {
        if !cov_cols.contains(name) {
            return Err(at(1, format!("plan declares column `{name}` absent from the header")));
        }
    }
    let kinds: Vec<ColumnKind> = cov_cols
        .iter()
        .map(|c| plan.kind_of(c).cloned().unwrap_or(ColumnKind::Numeric { log: false, center: false }))
        .collect();
    let design_names: Vec<String> = cov_cols
        .iter()
        .zip(&kinds)
        .flat_map(|(c, k)| k.design_names(c))
        .collect();

    let mut rows = Vec::new();
    let mut level_counts: Vec<Vec<usize>> = kinds
        .iter()
        .map(|k| match k {
            ColumnKind::Categorical { levels, .. } => vec![0; levels.len()],
            ColumnKind::Numeric { .. } => Vec::new(),
        })
        .collect();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != header.len() {
            return Err(at(line, format!("{} fields, header has {}", record.len(), header.len())));
        }
        if let Some(i) = record.iter().position(str::is_empty) {
            return Err(at(line, format!("missing value in column `{}`", header[i])));
        }
        let y_raw = &record[2];
        let outcome = match &plan.outcome {
            Some((_, labels)) => 1 + labels
                .iter()
                .position(|l| l == y_raw)
                .ok_or_else(|| at(line, format!("unknown outcome label `{y_raw}`")))?,
            None => match y_raw.parse::<usize>() {
                Ok(y) if y >= 1 => y,
                _ => return Err(at(line, format!("outcome `{y_raw}` is not an integer >= 1"))),
            },
        };
        let mut x = Vec::with_capacity(design_names.len());
        for (k, (kind, raw)) in kinds.iter().zip(record.iter().skip(3)).enumerate() {
            let enc = kind
                .encode(raw)
                .map_err(|m| at(line, format!("column `{}`: {m}", cov_cols[k])))?;
            if let ColumnKind::Categorical { levels, .. } = kind {
                let pos = levels.iter().position(|l| l == raw).unwrap_or(0);
                level_counts[k][pos] += 1;
            }
            x.extend(enc);
        }
        rows.push(Row {
            region: record[0].to_owned(),
            family: record[1].to_owned(),
            outcome,
            x,
            line,
        });
    }
    if rows.is_empty() {
        return Err(at(2, "no data rows".into()));
    }

    for (k, kind) in kinds.iter().enumerate() {
        if let ColumnKind::Categorical { levels, reference } = kind {
            if level_counts[k][*reference] == 0 {
                return Err(Error::Encoding(format!(
                    "reference level `{}` of `{}` never occurs in the data",
                    levels[*reference], cov_cols[k]
                )));
            }
        }
    }

    let mut centered = Vec::new();
    let mut col = 0;
    for kind in &kinds {
        if let ColumnKind::Numeric { center: true, .. } = kind {
            let mean = rows.iter().map(|r| r.x[col]).sum::<f64>() / rows.len() as f64;
            rows.iter_mut().for_each(|r| r.x[col] -= mean);
            centered.push((design_names[col].clone(), mean));
        }
        col += kind.width();
    }

    let outcome_labels: Vec<String> = match &plan.outcome {
        Some((_, labels)) => labels.clone(),
        None => {
            let max = rows.iter().map(|r| r.outcome).max().unwrap_or(1);
            (1..=max).map(|a| a.to_string()).collect()
        }
    };
    let n_categories = outcome_labels.len();
    if n_categories < 2 {
        return Err(at(1, "outcome has fewer than two categories".into()));
    }
    let mut builder = DatasetBuilder::new(n_categories, design_names)?;
    for r in &rows {
        builder
            .push(&r.region, &r.family, r.outcome, &r.x)
            .map_err(|e| at(r.line, e.to_string()))?;
    }
    let data = builder.build();

    let mut outcome_counts: Vec<(String, usize)> = outcome_labels.into_iter().map(|l| (l, 0)).collect();
    for &y in data.outcomes() {
        outcome_counts[y - 1].1 += 1;
    }
    let report = LoadReport {
        n_rows: data.n_obs(),
        n_regions: data.n_regions(),
        n_families: data.n_families(),
        outcome_counts,
        level_counts: kinds
            .iter()
            .zip(cov_cols)
            .zip(level_counts)
            .filter_map(|((k, c), counts)| match k {
                ColumnKind::Categorical { levels, .. } => {
                    Some((c.clone(), levels.iter().cloned().zip(counts).collect()))
                }
                ColumnKind::Numeric { .. } => None,
            })
            .collect(),
        centered,
    };
    Ok((data, report))
}

/// Writes the dataset's encoded design as `region,family,y,<covariates>`.
/// Reloads exactly with [`EncodingPlan::numeric`].
pub fn write_dataset_csv(data: &Dataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["region".to_owned(), "family".to_owned(), "y".to_owned()];
    header.extend(data.covariate_names().iter().cloned());
    w.write_record(&header)?;
    for n in 0..data.n_obs() {
        let f = data.obs_family()[n];
        let mut rec = vec![
            data.region_names()[data.family_region()[f]].clone(),
            data.family_names()[f].clone(),
            data.outcomes()[n].to_string(),
        ];
        rec.extend(data.row(n).iter().map(|x| format!("{x:?}")));
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    write_atomic(path, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn hand_written_fixture() {
        let f = file(
            "region,family,y,gender,income\n\
             A,A1,good,Male,100\n\
             A,A1,poor,Female,250\r\n\
             A,A2,fair,Male,80\n\
             B,B1,good,Female,40\n\
             B,B2,fair,Male,1000\n\
             B,B2,good,Female,55\n",
        );
        let plan = EncodingPlan::parse(
            "y = outcome(good, fair, poor)\ngender = categorical(Male*, Female)\nincome = numeric(log)",
        )
        .unwrap();
        let (d, report) = load(f.path(), &plan).unwrap();
        assert_eq!(d.n_regions(), 2);
        assert_eq!(d.region_family_counts(), vec![2, 2]);
        assert_eq!(d.obs_family(), &[0, 0, 1, 2, 3, 3]);
        assert_eq!(d.outcomes(), &[1, 3, 2, 1, 2, 1]);
        assert_eq!(d.covariate_names(), &["gender[Female]".to_string(), "log(income)".to_string()]);
        assert_eq!(d.row(0)[0], 0.0);
        assert!((d.row(0)[1] - 4.605_170_185_988_092).abs() < 1e-15);
        assert_eq!(d.row(1)[0], 1.0);
        assert_eq!(report.outcome_counts[0], ("good".to_string(), 3));
        assert_eq!(report.level_counts[0].1, vec![("Male".to_string(), 3), ("Female".to_string(), 3)]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let plan = EncodingPlan::default();
        let cases = [
            ("region,family,y,x\nA,A1,1,0.5\nB,A1,2,0.1\n", "A1", 3),
            ("region,family,y,x\nA,A1,1,\n", "missing", 2),
            ("region,family,y,x\nA,A1,1,0.5\nA,A2,zero,0.5\n", "outcome", 3),
            ("region,family,y,x\nA,A1,1,0.5\nA,A2,2,abc\n", "number", 3),
        ];
        for (text, needle, line) in cases {
            let err = load(file(text).path(), &plan).unwrap_err();
            match &err {
                Error::Load { line: l, message, .. } => {
                    assert_eq!(*l, line, "{err}");
                    assert!(message.contains(needle), "{err}");
                }
                other => panic!("unexpected {other}"),
            }
        }
        assert!(load(file("").path(), &plan).is_err());
        assert!(load(file("region,family,y,x\n").path(), &plan).is_err());
    }

    #[test]
    fn unknown_level_and_unobserved_reference() {
        let plan = EncodingPlan::parse("g = categorical(a*, b)").unwrap();
        let err = load(file("region,family,y,g\nR,F,1,c\nR,F,2,a\n").path(), &plan).unwrap_err();
        assert!(err.to_string().contains("unknown level"));
        let err = load(file("region,family,y,g\nR,F,1,b\nR,F,2,b\n").path(), &plan).unwrap_err();
        assert!(err.to_string().contains("reference level"));
    }

    #[test]
    fn centering_is_optional() {
        let text = "region,family,y,x\nR,F1,1,1\nR,F2,2,3\n";
        let plain = load(file(text).path(), &EncodingPlan::default()).unwrap().0;
        assert_eq!(plain.row(1), &[3.0]);
        let plan = EncodingPlan::parse("x = numeric(center)").unwrap();
        let (c, report) = load(file(text).path(), &plan).unwrap();
        assert_eq!((c.row(0)[0], c.row(1)[0]), (-1.0, 1.0));
        assert_eq!(report.centered, vec![("x".to_string(), 2.0)]);
    }

    #[test]
    fn write_then_load_is_identity() {
        let mut b = DatasetBuilder::new(3, vec!["x1".into(), "x2".into()]).unwrap();
        b.push("R1", "R1-F1", 2, &[0.1, -1.0 / 3.0]).unwrap();
        b.push("R1", "R1-F2", 3, &[1e-12, 7.0]).unwrap();
        b.push("R2", "R2-F1", 1, &[-2.5, f64::MIN_POSITIVE]).unwrap();
        let d = b.build();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        write_dataset_csv(&d, &path).unwrap();
        let plan = EncodingPlan::numeric("y", 3, d.covariate_names());
        let (back, _) = load(&path, &plan).unwrap();
        assert_eq!(back, d);
        assert_eq!(back.content_hash(), d.content_hash());
    }
}
