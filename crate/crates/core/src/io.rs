//! File formats.
//!
//! * Datasets: one example per line, label first, delimiter-separated.
//! * Feature matrices: CSV with header `f0,...,f{k-1},label`.
//! * Transform parameters: little-endian binary, see [`write_params`].
//! * Models: versioned JSON.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bias::{BiasVariant, TransformParameters};
use crate::classifier::LinearModel;
use crate::dataset::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::kernels::plan_dilations;
use crate::transform::FeatureMatrix;

/// Reads a labelled dataset. Blank lines are skipped.
pub fn load_delimited(path: impl AsRef<Path>, delimiter: char) -> Result<TimeSeriesDataset> {
    read_dataset(path.as_ref(), delimiter, true)
}

/// Reads a dataset whose lines hold values only.
pub fn load_unlabelled(path: impl AsRef<Path>, delimiter: char) -> Result<TimeSeriesDataset> {
    read_dataset(path.as_ref(), delimiter, false)
}

fn read_dataset(path: &Path, delimiter: char, labelled: bool) -> Result<TimeSeriesDataset> {
    let reader = BufReader::new(File::open(path)?);
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut series: Vec<Vec<f64>> = Vec::new();
    let mut labels = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut fields = trimmed.split(delimiter).map(str::trim);
        if labelled {
            let label = fields.next().unwrap_or_default();
            if label.is_empty() {
                return Err(parse_err(line_no, "missing label".into()));
            }
            labels.push(label.to_string());
        }
        let values = fields
            .enumerate()
            .map(|(col, field)| match field.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                Ok(_) => Err(parse_err(
                    line_no,
                    format!("missing or non-finite value '{field}' in column {}", col + 1),
                )),
                Err(_) => Err(parse_err(
                    line_no,
                    format!("non-numeric value '{field}' in column {}", col + 1),
                )),
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = series.first() {
            if values.len() != first.len() {
                return Err(parse_err(
                    line_no,
                    format!("expected {} values, found {}", first.len(), values.len()),
                ));
            }
        }
        series.push(values);
    }
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("dataset")
        .to_string();
    if labelled {
        TimeSeriesDataset::new(name, series, labels)
    } else {
        TimeSeriesDataset::unlabelled(name, series)
    }
}

/// Writes a dataset in the loader's format. Values carry 17 significant
/// digits, so loading the file back reproduces them bit for bit.
pub fn save_delimited(dataset: &TimeSeriesDataset, path: impl AsRef<Path>, delimiter: char) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for (i, series) in dataset.iter().enumerate() {
        let mut first = true;
        if let Some(labels) = dataset.labels() {
            write!(w, "{}", labels[i])?;
            first = false;
        }
        for v in series {
            if !first {
                write!(w, "{delimiter}")?;
            }
            write!(w, "{v:.16e}")?;
            first = false;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Feature matrix as CSV. `labels`, when given, fills the last column.
pub fn write_features_csv(features: &FeatureMatrix, labels: Option<&[String]>, out: impl Write) -> Result<()> {
    let mut w = BufWriter::new(out);
    let header: Vec<String> = (0..features.cols()).map(|j| format!("f{j}")).collect();
    writeln!(w, "{},label", header.join(","))?;
    for i in 0..features.rows() {
        for v in features.row(i) {
            write!(w, "{v},")?;
        }
        writeln!(w, "{}", labels.map_or("", |l| l[i].as_str()))?;
    }
    w.flush()?;
    Ok(())
}

pub const PARAMS_MAGIC: &[u8; 8] = b"MINIRKT\0";
pub const PARAMS_VERSION: u32 = 1;

/// Binary parameter file, all integers and floats little-endian:
///
/// ```text
/// magic            8 bytes  "MINIRKT\0"
/// version          u32
/// input_length     u64
/// num_features     u64      requested, before rounding to a multiple of 84
/// max_dilations    u64
/// variant          u8       0 = default, 1 = deterministic
/// seed             u64      0 for the deterministic variant
/// num_dilations    u64
/// dilations        u64 x num_dilations
/// features/dil.    u64 x num_dilations
/// num_biases       u64
/// biases           f64 x num_biases
/// ```
///
/// Quantiles are not stored; they follow from the feature count.
pub fn write_params(params: &TransformParameters, out: impl Write) -> Result<()> {
    params.validate()?;
    let mut w = BufWriter::new(out);
    let plan = &params.plan;
    w.write_all(PARAMS_MAGIC)?;
    w.write_all(&PARAMS_VERSION.to_le_bytes())?;
    for v in [plan.input_length, plan.num_features, plan.max_dilations_per_kernel] {
        w.write_all(&(v as u64).to_le_bytes())?;
    }
    let (flag, seed) = match params.variant {
        BiasVariant::Default { seed } => (0u8, seed),
        BiasVariant::Deterministic => (1u8, 0),
    };
    w.write_all(&[flag])?;
    w.write_all(&seed.to_le_bytes())?;
    w.write_all(&(plan.dilations.len() as u64).to_le_bytes())?;
    for &d in plan.dilations.iter().chain(&plan.features_per_dilation) {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    w.write_all(&(params.biases.len() as u64).to_le_bytes())?;
    for b in &params.biases {
        w.write_all(&b.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_params(input: impl Read) -> Result<TransformParameters> {
    let mut r = BufReader::new(input);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Format("truncated parameter file".into()))?;
    if &magic != PARAMS_MAGIC {
        return Err(Error::Format("not a MiniRocket parameter file".into()));
    }
    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u32buf)?;
    let version = u32::from_le_bytes(u32buf);
    if version != PARAMS_VERSION {
        return Err(Error::Format(format!("unsupported parameter file version {version}")));
    }
    let read_u64 = |r: &mut BufReader<_>| -> Result<u64> {
        let mut b = [0u8; 8];
        r.read_exact(&mut b)
            .map_err(|_| Error::Format("truncated parameter file".into()))?;
        Ok(u64::from_le_bytes(b))
    };
    let input_length = read_u64(&mut r)? as usize;
    let num_features = read_u64(&mut r)? as usize;
    let max_dilations = read_u64(&mut r)? as usize;
    let mut flag = [0u8; 1];
    r.read_exact(&mut flag)?;
    let seed = read_u64(&mut r)?;
    let variant = match flag[0] {
        0 => BiasVariant::Default { seed },
        1 => BiasVariant::Deterministic,
        other => return Err(Error::Format(format!("unknown variant flag {other}"))),
    };
    let n_dil = read_u64(&mut r)? as usize;
    if n_dil > 1 << 20 {
        return Err(Error::Format("implausible dilation count".into()));
    }
    let dilations = (0..n_dil)
        .map(|_| read_u64(&mut r).map(|v| v as usize))
        .collect::<Result<Vec<_>>>()?;
    let features_per_dilation = (0..n_dil)
        .map(|_| read_u64(&mut r).map(|v| v as usize))
        .collect::<Result<Vec<_>>>()?;
    let n_bias = read_u64(&mut r)? as usize;
    if n_bias > 1 << 28 {
        return Err(Error::Format("implausible bias count".into()));
    }
    let mut biases = Vec::with_capacity(n_bias);
    for _ in 0..n_bias {
        let mut b = [0u8; 8];
        r.read_exact(&mut b)
            .map_err(|_| Error::Format("truncated parameter file".into()))?;
        biases.push(f64::from_le_bytes(b));
    }

    let plan = plan_dilations(input_length, num_features, max_dilations)?;
    if plan.dilations != dilations || plan.features_per_dilation != features_per_dilation {
        return Err(Error::LayoutMismatch(
            "stored dilation plan disagrees with the planner".into(),
        ));
    }
    let params = TransformParameters { plan, biases, variant };
    params.validate()?;
    Ok(params)
}

pub fn save_params(params: &TransformParameters, path: impl AsRef<Path>) -> Result<()> {
    write_params(params, File::create(path)?)
}

pub fn load_params(path: impl AsRef<Path>) -> Result<TransformParameters> {
    read_params(File::open(path)?)
}

pub const MODEL_FORMAT: &str = "minirocket-linear-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    #[serde(flatten)]
    model: LinearModel,
}

pub fn save_model(model: &LinearModel, path: impl AsRef<Path>) -> Result<()> {
    let file = ModelFile {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        model: model.clone(),
    };
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, &file)?;
    w.flush()?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<LinearModel> {
    let file: ModelFile = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    if file.format != MODEL_FORMAT {
        return Err(Error::Format(format!("unexpected model format '{}'", file.format)));
    }
    if file.version != MODEL_VERSION {
        return Err(Error::Format(format!("unsupported model version {}", file.version)));
    }
    file.model.validate()?;
    Ok(file.model)
}
