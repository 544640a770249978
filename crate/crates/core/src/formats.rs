//! On-disk formats: JSON documents with fixed 17-significant-digit floats,
//! headerless numeric CSV, the epoch directory and the model document.
//!
//! Every writer goes through [`write_atomic`] (temporary file + rename).

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::ser::Serialize;
use serde::Deserialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::linalg::{from_row_major, to_row_major, Mat};
use crate::models::{PlsrModel, Variant};
use crate::optimizer::{IterationRecord, TerminationReason, Trace};
use crate::pipeline::EpochDataset;

/// Pretty JSON whose floats are always written as `d.dddddddddddddddde±x`.
struct FixedDigits<'a> {
    inner: PrettyFormatter<'a>,
}

impl Formatter for FixedDigits<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

/// Serializes `value` as pretty JSON with 17 significant digits per float.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let fmt = FixedDigits {
        inner: PrettyFormatter::with_indent(b"  "),
    };
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, fmt);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::format(path, "not a file path"))?
        .to_string_lossy();
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, to_json_string(value)?.as_bytes())
}

/// Reads a whole file, attaching the path to any I/O error.
pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Reads a headerless comma-separated numeric matrix. An empty file yields a
/// 0×0 matrix.
pub fn read_matrix_csv(path: &Path) -> Result<Mat> {
    let text = read_to_string(path)?;
    parse_matrix_csv(&text).map_err(|m| Error::format(path, m))
}

fn parse_matrix_csv(text: &str) -> std::result::Result<Mat, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| e.to_string())?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        match cols {
            None => cols = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(format!(
                    "row {} has {} fields, expected {c}",
                    line + 1,
                    record.len()
                ))
            }
            _ => {}
        }
        for field in record.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| format!("row {}: cannot parse {field:?} as a number", line + 1))?;
            values.push(v);
        }
        rows += 1;
    }
    let cols = cols.unwrap_or(0);
    Ok(Mat::from_row_slice(rows, cols, &values))
}

/// Writes a matrix as headerless CSV using the shortest round-trip float form.
pub fn write_matrix_csv(path: &Path, m: &Mat) -> Result<()> {
    write_atomic(path, matrix_csv_string(m).as_bytes())
}

pub fn matrix_csv_string(m: &Mat) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        let fields: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Reads one integer label per line (or a single comma-separated row).
pub fn read_labels_csv(path: &Path) -> Result<Vec<usize>> {
    let text = read_to_string(path)?;
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|v| *v >= 0.0 && v.fract() == 0.0)
                .map(|v| v as usize)
                .ok_or_else(|| Error::format(path, format!("invalid label {s:?}")))
        })
        .collect()
}

/// `manifest.json` of an epoch directory.
#[derive(Debug, Clone, PartialEq, serde::Serialize, Deserialize)]
pub struct EpochManifest {
    pub n_trials: usize,
    pub n_channels: usize,
    pub n_samples: usize,
    pub fs: f64,
    pub class_count: usize,
    pub labels: Vec<usize>,
}

pub const EPOCH_MANIFEST: &str = "manifest.json";
pub const EPOCH_DATA: &str = "data.f64";

/// Writes `manifest.json` and `data.f64` (little-endian f64, trial-major,
/// then channel, then sample) into `dir`, creating it if needed.
pub fn write_epochs(dir: &Path, ds: &EpochDataset) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (n_trials, n_channels, n_samples) = ds.shape();
    let manifest = EpochManifest {
        n_trials,
        n_channels,
        n_samples,
        fs: ds.fs(),
        class_count: ds.class_count(),
        labels: ds.labels().to_vec(),
    };
    let mut bytes = Vec::with_capacity(8 * ds.data().len());
    for v in ds.data() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    write_atomic(&dir.join(EPOCH_DATA), &bytes)?;
    write_json(&dir.join(EPOCH_MANIFEST), &manifest)
}

/// Reads and validates an epoch directory.
pub fn read_epochs(dir: &Path) -> Result<EpochDataset> {
    let manifest_path = dir.join(EPOCH_MANIFEST);
    let manifest: EpochManifest = serde_json::from_str(&read_to_string(&manifest_path)?)
        .map_err(|e| Error::format(&manifest_path, e.to_string()))?;
    let data_path = dir.join(EPOCH_DATA);
    let bytes = fs::read(&data_path).map_err(|e| Error::io(&data_path, e))?;
    let expected = manifest.n_trials * manifest.n_channels * manifest.n_samples;
    if bytes.len() != 8 * expected {
        return Err(Error::format(
            &data_path,
            format!(
                "size {} bytes, manifest implies {} ({} values)",
                bytes.len(),
                8 * expected,
                expected
            ),
        ));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    EpochDataset::new(
        data,
        (manifest.n_trials, manifest.n_channels, manifest.n_samples),
        manifest.labels,
        manifest.fs,
        manifest.class_count,
    )
    .map_err(|e| Error::format(dir, e.to_string()))
}

pub const MODEL_FORMAT: &str = "plsr-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, serde::Serialize, Deserialize)]
pub struct ModelDims {
    pub n: usize,
    pub m: usize,
    pub rank: usize,
}

/// The JSON form of a [`PlsrModel`]; matrices are flattened row-major.
#[derive(Debug, Clone, PartialEq, serde::Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub format: String,
    pub version: u32,
    pub variant: Variant,
    pub dims: ModelDims,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub s: Vec<f64>,
    pub coeffs: Vec<f64>,
    pub mean_x: Vec<f64>,
    pub mean_y: Vec<f64>,
    pub termination: Option<TerminationReason>,
    pub trace: Vec<IterationRecord>,
}

impl ModelDocument {
    pub fn from_model(model: &PlsrModel) -> Self {
        Self {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            variant: model.variant,
            dims: ModelDims {
                n: model.n_features(),
                m: model.n_targets(),
                rank: model.rank(),
            },
            u: to_row_major(&model.u),
            v: to_row_major(&model.v),
            s: to_row_major(&model.s),
            coeffs: to_row_major(&model.coeffs),
            mean_x: model.mean_x.iter().copied().collect(),
            mean_y: model.mean_y.iter().copied().collect(),
            termination: model.trace.termination,
            trace: model.trace.records.clone(),
        }
    }

    /// Checks the document against the schema and rebuilds the model.
    pub fn into_model(self) -> std::result::Result<PlsrModel, String> {
        if self.format != MODEL_FORMAT {
            return Err(format!(
                "format is {:?}, expected {MODEL_FORMAT:?}",
                self.format
            ));
        }
        if self.version != MODEL_VERSION {
            return Err(format!("unsupported version {}", self.version));
        }
        let ModelDims { n, m, rank } = self.dims;
        if n == 0 || m == 0 || rank == 0 {
            return Err("dims must be positive".into());
        }
        let mat = |name: &str, rows: usize, cols: usize, data: &[f64]| {
            from_row_major(rows, cols, data)
                .ok_or_else(|| format!("{name} has {} values, expected {rows}x{cols}", data.len()))
        };
        let u = mat("u", n, rank, &self.u)?;
        let v = mat("v", m, rank, &self.v)?;
        let s = mat("s", rank, rank, &self.s)?;
        let coeffs = mat("coeffs", n, m, &self.coeffs)?;
        if self.mean_x.len() != n || self.mean_y.len() != m {
            return Err("mean vector lengths do not match dims".into());
        }
        let all = [
            &self.u,
            &self.v,
            &self.s,
            &self.coeffs,
            &self.mean_x,
            &self.mean_y,
        ];
        if all.iter().any(|a| a.iter().any(|x| !x.is_finite())) {
            return Err("non-finite model parameters".into());
        }
        Ok(PlsrModel {
            variant: self.variant,
            u,
            v,
            s,
            coeffs,
            mean_x: DVector::from_vec(self.mean_x),
            mean_y: DVector::from_vec(self.mean_y),
            trace: Trace {
                records: self.trace,
                termination: self.termination,
            },
        })
    }
}

pub fn model_to_json(model: &PlsrModel) -> Result<String> {
    to_json_string(&ModelDocument::from_model(model))
}

pub fn model_from_json(text: &str, origin: &Path) -> Result<PlsrModel> {
    let doc: ModelDocument =
        serde_json::from_str(text).map_err(|e| Error::format(origin, e.to_string()))?;
    doc.into_model().map_err(|m| Error::format(origin, m))
}

pub fn write_model(path: &Path, model: &PlsrModel) -> Result<()> {
    write_atomic(path, model_to_json(model)?.as_bytes())
}

pub fn read_model(path: &Path) -> Result<PlsrModel> {
    model_from_json(&read_to_string(path)?, path)
}

/// The trace as JSON: the per-iteration records and the termination reason.
pub fn trace_to_json(trace: &Trace) -> Result<String> {
    to_json_string(trace)
}

pub fn write_trace(path: &Path, trace: &Trace) -> Result<()> {
    write_atomic(path, trace_to_json(trace)?.as_bytes())
}

/// The trace as CSV with a header row; `elapsed_s` is empty when stripped.
pub fn trace_csv_string(trace: &Trace) -> String {
    let mut out = String::from("iter,cost,grad_norm,step,backtracks,elapsed_s\n");
    for r in &trace.records {
        let elapsed = r.elapsed_s.map(|e| format!("{e:?}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{:?},{:?},{:?},{},{elapsed}\n",
            r.iter, r.cost, r.grad_norm, r.step, r.backtracks
        ));
    }
    out
}

/// `path` with `suffix` appended to its file stem, keeping the extension.
pub fn sibling_path(path: &Path, suffix: &str, extension: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}.{extension}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::fit_simpls;
    use crate::models::DataMatrixPair;
    use crate::pipeline::{synth_epochs, SynthSpec};
    use proptest::prelude::*;

    #[test]
    fn floats_use_seventeen_significant_digits() {
        let s = to_json_string(&vec![0.1f64, 1.0, -2.5e-300]).unwrap();
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("1.0000000000000000e0"));
        assert!(s.contains("-2.5000000000000000e-300"));
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vec![0.1, 1.0, -2.5e-300]);
    }

    proptest! {
        #[test]
        fn fixed_digit_json_round_trips(v in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
            let s = to_json_string(&v).unwrap();
            let back: f64 = serde_json::from_str(&s).unwrap();
            prop_assert_eq!(back.to_bits(), v.to_bits());
        }

        #[test]
        fn csv_round_trips(rows in 1usize..5, cols in 1usize..4, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut g = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let m = Mat::from_fn(rows, cols, |_, _| g.random_range(-1e6..1e6));
            let back = parse_matrix_csv(&matrix_csv_string(&m)).unwrap();
            prop_assert_eq!(back, m);
        }
    }

    #[test]
    fn csv_edge_cases() {
        assert_eq!(parse_matrix_csv("").unwrap().shape(), (0, 0));
        assert!(parse_matrix_csv("1,2\n3\n").is_err());
        assert!(parse_matrix_csv("1,x\n").is_err());
        assert_eq!(parse_matrix_csv(" 1 , 2 \n3,4\n").unwrap()[(1, 0)], 3.0);
    }

    #[test]
    fn epoch_directory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ds = synth_epochs(&SynthSpec {
            trials: 5,
            channels: 2,
            samples: 7,
            ..SynthSpec::default()
        })
        .unwrap();
        write_epochs(dir.path(), &ds).unwrap();
        let size = fs::metadata(dir.path().join(EPOCH_DATA)).unwrap().len();
        assert_eq!(size, 8 * 5 * 2 * 7);
        assert_eq!(read_epochs(dir.path()).unwrap(), ds);

        fs::write(dir.path().join(EPOCH_DATA), [0u8; 16]).unwrap();
        assert!(matches!(read_epochs(dir.path()), Err(Error::Format { .. })));
    }

    #[test]
    fn model_document_round_trip_and_validation() {
        use rand::SeedableRng;
        let mut g = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let d = DataMatrixPair::new(
            crate::linalg::gaussian(&mut g, 12, 4),
            crate::linalg::gaussian(&mut g, 12, 2),
        )
        .unwrap();
        let model = fit_simpls(&d, 2).unwrap();
        let text = model_to_json(&model).unwrap();
        let back = model_from_json(&text, Path::new("m.json")).unwrap();
        assert_eq!(back, model);
        assert_eq!(model_to_json(&back).unwrap(), text);

        let mut doc = ModelDocument::from_model(&model);
        doc.coeffs.pop();
        assert!(doc.into_model().is_err());
        let mut doc = ModelDocument::from_model(&model);
        doc.format = "other".into();
        assert!(doc.into_model().is_err());
    }

    #[test]
    fn labels_parse() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("l.csv");
        fs::write(&p, "0\n1\n2\n").unwrap();
        assert_eq!(read_labels_csv(&p).unwrap(), vec![0, 1, 2]);
        fs::write(&p, "0,-1\n").unwrap();
        assert!(read_labels_csv(&p).is_err());
    }

    #[test]
    fn trace_csv_leaves_stripped_timing_empty() {
        let trace = Trace {
            records: vec![
                IterationRecord {
                    iter: 0,
                    cost: 2.5,
                    grad_norm: 1.0,
                    step: 0.0,
                    backtracks: 0,
                    elapsed_s: Some(0.125),
                },
                IterationRecord {
                    iter: 1,
                    cost: 0.5,
                    grad_norm: 0.25,
                    step: 1.0,
                    backtracks: 2,
                    elapsed_s: None,
                },
            ],
            termination: Some(TerminationReason::GradientTolerance),
        };
        assert_eq!(
            trace_csv_string(&trace),
            "iter,cost,grad_norm,step,backtracks,elapsed_s\n0,2.5,1.0,0.0,0,0.125\n1,0.5,0.25,1.0,2,\n"
        );
    }

    #[test]
    fn sibling_paths() {
        assert_eq!(
            sibling_path(Path::new("out/model.json"), ".trace", "json"),
            PathBuf::from("out/model.trace.json")
        );
    }
}
