use std::path::Path;

use ordmed::{validate_dataset, Dataset, MediatorModel, ModelParameters, OutcomeModel, RawRecord};
use serde::Deserialize;

use crate::error::CliError;

/// Reads a dataset with header `x,m,y[,c1..cp]`. Lines starting with `#`
/// are ignored. With `levels` absent, `J` is the largest observed `y`.
pub fn read_dataset(path: &Path, levels: Option<usize>) -> Result<Dataset, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let dim = check_header(&header)?;

    let mut raw = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let field = |i: usize| -> Result<f64, CliError> {
            let text = record.get(i).unwrap_or("");
            text.parse::<f64>().map_err(|_| {
                CliError::validation(format!(
                    "row {row}, column `{}`: cannot parse {text:?} as a number",
                    header[i]
                ))
            })
        };
        raw.push(RawRecord {
            x: field(0)?,
            m: field(1)?,
            y: field(2)?,
            c: (3..3 + dim).map(field).collect::<Result<_, _>>()?,
        });
    }
    let levels = match levels {
        Some(j) => j,
        None => raw
            .iter()
            .map(|r| r.y)
            .filter(|y| y.is_finite() && *y >= 1.0)
            .fold(0.0f64, f64::max) as usize,
    };
    let data = validate_dataset(&raw, levels, dim)?;
    let missing = data.missing_levels();
    if !missing.is_empty() {
        let list: Vec<String> = missing.iter().map(usize::to_string).collect();
        return Err(CliError::validation(format!(
            "outcome level(s) {} declared (J = {levels}) but not observed",
            list.join(", ")
        )));
    }
    Ok(data)
}

fn check_header(header: &[String]) -> Result<usize, CliError> {
    if header.len() < 3 || header[0] != "x" || header[1] != "m" || header[2] != "y" {
        return Err(CliError::validation(format!(
            "header must start with x,m,y; found {}",
            header.join(",")
        )));
    }
    for (k, name) in header[3..].iter().enumerate() {
        if *name != format!("c{}", k + 1) {
            return Err(CliError::validation(format!(
                "covariate column {} must be named c{}, found `{name}`",
                k + 4,
                k + 1
            )));
        }
    }
    Ok(header.len() - 3)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ParameterFile {
    Plain(ModelParameters),
    Report { parameters: ModelParameters },
}

/// Reads a parameter JSON file: either a bare parameter object or any
/// report carrying one under `parameters` (as written by `fit`).
pub fn read_parameters(path: &Path) -> Result<(MediatorModel, OutcomeModel), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    let file: ParameterFile = serde_json::from_str(&text).map_err(|e| {
        CliError::validation(format!("{}: not a parameter file: {e}", path.display()))
    })?;
    let params = match file {
        ParameterFile::Plain(p) | ParameterFile::Report { parameters: p } => p,
    };
    Ok(params.into_models()?)
}
