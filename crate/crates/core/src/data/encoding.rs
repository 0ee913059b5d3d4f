//! Covariate encoding sidecar.
//!
//! One declaration per line, `#` starts a comment:
//!
//! ```text
//! y      = outcome(good, fair, poor)
//! gender = categorical(Male*, Female)
//! income = numeric(log)
//! age    = numeric(center)
//! hhsize = numeric
//! ```
//!
//! * `outcome(...)` lists the outcome labels from lowest to highest category.
//!   Without it the outcome column must hold integers `1..=A`, with `A` the
//!   largest value seen.
//! * `categorical(...)` lists the levels; `*` marks the reference level
//!   (default: the first). Encoded as one indicator per non-reference level.
//! * `numeric` takes optional flags `log` (natural log) and `center`
//!   (subtract the column mean after any log).
//!
//! Covariate columns not declared in the plan are read as plain numerics.

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnKind {
    Categorical { levels: Vec<String>, reference: usize },
    Numeric { log: bool, center: bool },
}

impl ColumnKind {
    /// Number of design columns produced.
    pub fn width(&self) -> usize {
        match self {
            ColumnKind::Categorical { levels, .. } => levels.len() - 1,
            ColumnKind::Numeric { .. } => 1,
        }
    }

    /// Design column names for a source column.
    pub fn design_names(&self, column: &str) -> Vec<String> {
        match self {
            ColumnKind::Categorical { levels, reference } => levels
                .iter()
                .enumerate()
                .filter(|(i, _)| i != reference)
                .map(|(_, l)| format!("{column}[{l}]"))
                .collect(),
            ColumnKind::Numeric { log: true, .. } => vec![format!("log({column})")],
            ColumnKind::Numeric { log: false, .. } => vec![column.to_owned()],
        }
    }

    /// Encodes one raw cell (centering is applied later, over the column).
    pub fn encode(&self, raw: &str) -> std::result::Result<Vec<f64>, String> {
        match self {
            ColumnKind::Categorical { levels, reference } => {
                let pos = levels
                    .iter()
                    .position(|l| l == raw)
                    .ok_or_else(|| format!("unknown level `{raw}` (declared: {})", levels.join(", ")))?;
                let mut out = vec![0.0; levels.len() - 1];
                if pos != *reference {
                    out[if pos < *reference { pos } else { pos - 1 }] = 1.0;
                }
                Ok(out)
            }
            ColumnKind::Numeric { log, .. } => {
                let x: f64 = raw.parse().map_err(|_| format!("`{raw}` is not a number"))?;
                if !x.is_finite() {
                    return Err(format!("`{raw}` is not finite"));
                }
                if *log {
                    if x <= 0.0 {
                        return Err(format!("cannot take the log of {raw}"));
                    }
                    Ok(vec![x.ln()])
                } else {
                    Ok(vec![x])
                }
            }
        }
    }
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnKind::Categorical { levels, reference } => {
                let parts: Vec<String> = levels
                    .iter()
                    .enumerate()
                    .map(|(i, l)| if i == *reference { format!("{l}*") } else { l.clone() })
                    .collect();
                write!(f, "categorical({})", parts.join(", "))
            }
            ColumnKind::Numeric { log, center } => {
                let flags: Vec<&str> = [(*log, "log"), (*center, "center")]
                    .iter()
                    .filter(|(on, _)| *on)
                    .map(|(_, s)| *s)
                    .collect();
                if flags.is_empty() {
                    f.write_str("numeric")
                } else {
                    write!(f, "numeric({})", flags.join(", "))
                }
            }
        }
    }
}

/// Outcome labels and per-column covariate encodings.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EncodingPlan {
    pub outcome: Option<(String, Vec<String>)>,
    pub columns: Vec<(String, ColumnKind)>,
}

fn valid_ident(s: &str) -> bool {
    !s.is_empty() && !s.contains([',', '(', ')', '=', '*', '#']) && !s.chars().any(char::is_whitespace)
}

impl EncodingPlan {
    pub fn parse(text: &str) -> Result<Self> {
        let mut plan = EncodingPlan::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: String| Error::Encoding(format!("line {}: {m}", i + 1));
            let (name, decl) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `column = type(...)`, got `{line}`")))?;
            let name = name.trim();
            if !valid_ident(name) {
                return Err(err(format!("invalid column name `{name}`")));
            }
            let decl = decl.trim();
            let (kind, args) = match decl.split_once('(') {
                Some((k, rest)) => {
                    let inner = rest
                        .strip_suffix(')')
                        .ok_or_else(|| err(format!("missing `)` in `{decl}`")))?;
                    let args: Vec<&str> = inner.split(',').map(str::trim).filter(|a| !a.is_empty()).collect();
                    (k.trim(), args)
                }
                None => (decl, Vec::new()),
            };
            if plan.columns.iter().any(|(n, _)| n == name) || plan.outcome.as_ref().is_some_and(|(n, _)| n == name) {
                return Err(err(format!("column `{name}` declared twice")));
            }
            match kind {
                "outcome" => {
                    if plan.outcome.is_some() {
                        return Err(err("more than one outcome declaration".into()));
                    }
                    if args.len() < 2 {
                        return Err(err("an outcome needs at least two labels".into()));
                    }
                    let labels: Vec<String> = args.iter().map(|s| s.to_string()).collect();
                    if has_duplicates(&labels) {
                        return Err(err("duplicate outcome label".into()));
                    }
                    plan.outcome = Some((name.to_owned(), labels));
                }
                "categorical" => {
                    if args.len() < 2 {
                        return Err(err(format!("`{name}` needs at least two levels")));
                    }
                    let starred: Vec<usize> = (0..args.len()).filter(|&k| args[k].ends_with('*')).collect();
                    if starred.len() > 1 {
                        return Err(err(format!("`{name}` marks more than one reference level")));
                    }
                    let levels: Vec<String> = args.iter().map(|a| a.trim_end_matches('*').trim().to_string()).collect();
                    if levels.iter().any(|l| !valid_ident(l)) || has_duplicates(&levels) {
                        return Err(err(format!("`{name}` has an empty, malformed or duplicate level")));
                    }
                    plan.columns.push((
                        name.to_owned(),
                        ColumnKind::Categorical {
                            levels,
                            reference: starred.first().copied().unwrap_or(0),
                        },
                    ));
                }
                "numeric" => {
                    let (mut log, mut center) = (false, false);
                    for a in args {
                        match a {
                            "log" => log = true,
                            "center" => center = true,
                            other => return Err(err(format!("unknown numeric flag `{other}`"))),
                        }
                    }
                    plan.columns.push((name.to_owned(), ColumnKind::Numeric { log, center }));
                }
                other => return Err(err(format!("unknown column type `{other}`"))),
            }
        }
        Ok(plan)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        EncodingPlan::parse(&text)
    }

    /// Plan for already-numeric covariates with integer outcomes `1..=A`.
    pub fn numeric(outcome_column: &str, n_categories: usize, covariates: &[String]) -> Self {
        EncodingPlan {
            outcome: Some((
                outcome_column.to_owned(),
                (1..=n_categories).map(|a| a.to_string()).collect(),
            )),
            columns: covariates
                .iter()
                .map(|c| (c.clone(), ColumnKind::Numeric { log: false, center: false }))
                .collect(),
        }
    }

    pub fn kind_of(&self, column: &str) -> Option<&ColumnKind> {
        self.columns.iter().find(|(n, _)| n == column).map(|(_, k)| k)
    }

    /// Design width for the given covariate header columns.
    pub fn width(&self, covariate_columns: &[String]) -> usize {
        covariate_columns
            .iter()
            .map(|c| self.kind_of(c).map_or(1, ColumnKind::width))
            .sum()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        if let Some((name, labels)) = &self.outcome {
            s.push_str(&format!("{name} = outcome({})\n", labels.join(", ")));
        }
        for (name, kind) in &self.columns {
            s.push_str(&format!("{name} = {kind}\n"));
        }
        s
    }
}

fn has_duplicates(xs: &[String]) -> bool {
    let mut seen = std::collections::HashSet::new();
    !xs.iter().all(|x| seen.insert(x))
}

/// Reference-cell indicator coding of one categorical value.
pub fn encode(value: &str, levels: &[String], reference: usize) -> Result<Vec<f64>> {
    ColumnKind::Categorical {
        levels: levels.to_vec(),
        reference,
    }
    .encode(value)
    .map_err(Error::Encoding)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn reference_cell_coding() {
        let gender = strings(&["Male", "Female"]);
        assert_eq!(encode("Male", &gender, 0).unwrap(), vec![0.0]);
        assert_eq!(encode("Female", &gender, 0).unwrap(), vec![1.0]);
        let work = strings(&["FullPart", "Unemployed", "Retired", "Student", "Housework", "Other"]);
        assert_eq!(encode("Student", &work, 0).unwrap(), vec![0.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(encode("FullPart", &work, 0).unwrap(), vec![0.0; 5]);
        assert!(encode("Astronaut", &work, 0).is_err());
        // Reference in the middle.
        assert_eq!(encode("Student", &work, 2).unwrap(), vec![0.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(encode("Retired", &work, 2).unwrap(), vec![0.0; 5]);
        assert_eq!(encode("Unemployed", &work, 2).unwrap(), vec![0.0, 1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn parses_and_prints_round_trip() {
        let text = "# health survey\n\
                    y = outcome(good, fair, poor)\n\
                    gender = categorical(Male, Female*)   # ref marked\n\
                    income = numeric(log)\n\
                    age = numeric(center)\n\
                    size = numeric\n";
        let plan = EncodingPlan::parse(text).unwrap();
        assert_eq!(plan.outcome.as_ref().unwrap().1, strings(&["good", "fair", "poor"]));
        assert_eq!(
            plan.kind_of("gender"),
            Some(&ColumnKind::Categorical {
                levels: strings(&["Male", "Female"]),
                reference: 1
            })
        );
        assert_eq!(plan.kind_of("income"), Some(&ColumnKind::Numeric { log: true, center: false }));
        assert_eq!(EncodingPlan::parse(&plan.to_text()).unwrap(), plan);
        assert_eq!(plan.width(&strings(&["gender", "income", "age", "size", "extra"])), 5);
    }

    #[test]
    fn log_flag_applies_natural_log() {
        let k = ColumnKind::Numeric { log: true, center: false };
        assert!((k.encode("100").unwrap()[0] - 4.605_170_185_988_092).abs() < 1e-15);
        assert!(k.encode("0").is_err());
        assert!(k.encode("abc").is_err());
    }

    #[test]
    fn rejects_malformed_plans() {
        for bad in [
            "y outcome(a, b)",
            "y = outcome(a)",
            "g = categorical(a*, b*)",
            "g = categorical(a, a)",
            "x = numeric(sqrt)",
            "x = vector(1)",
            "x = numeric\nx = numeric",
            "g = categorical(a, b",
        ] {
            assert!(EncodingPlan::parse(bad).is_err(), "{bad}");
        }
    }
}
