use crate::data::{DataError, Fidelity, Result, TimeGrid, TimeParamDataset};
use crate::Scalar;
use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

/// Format tag embedded in dataset sidecar metadata.
pub const DATASET_FORMAT: &str = "mflstm.dataset/1";

#[derive(Serialize, Deserialize)]
struct Sidecar<T> {
    format: String,
    fidelity: Fidelity,
    t0: T,
    dt: T,
    n_times: usize,
    domain: Vec<(T, T)>,
    end_time: Option<T>,
}

fn io_err(path: &Path, source: std::io::Error) -> DataError {
    DataError::Io { path: path.display().to_string(), source }
}

fn meta_path(path: &Path) -> std::path::PathBuf {
    path.with_extension("meta.json")
}

/// Column names for the given dimensions: `mu_1..mu_p, t, y_1..y_q`.
fn header(p_mu: usize, p_out: usize) -> String {
    let mut cols = Vec::with_capacity(p_mu + 1 + p_out);
    cols.extend((1..=p_mu).map(|i| format!("mu_{i}")));
    cols.push("t".to_string());
    cols.extend((1..=p_out).map(|i| format!("y_{i}")));
    cols.join(",")
}

fn csv_text<T: Scalar>(dataset: &TimeParamDataset<T>) -> String {
    let mut text = String::new();
    text.push_str(&header(dataset.param_dim(), dataset.output_dim()));
    text.push('\n');
    for j in 0..dataset.n_params() {
        for n in 0..dataset.n_times() {
            for d in 0..dataset.param_dim() {
                let _ = write!(text, "{},", dataset.params()[[j, d]]);
            }
            let _ = write!(text, "{}", dataset.grid().time(n));
            for q in 0..dataset.output_dim() {
                let _ = write!(text, ",{}", dataset.outputs()[[j, n, q]]);
            }
            text.push('\n');
        }
    }
    text
}

/// Stable content hash of a dataset (SHA-256 of its canonical CSV text plus
/// the fidelity tag and grid), used for provenance records.
pub fn dataset_hash<T: Scalar>(dataset: &TimeParamDataset<T>) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(csv_text(dataset).as_bytes());
    hasher.update(format!("{}|{}|{}", dataset.fidelity(), dataset.grid().t0, dataset.grid().dt).as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Write the dataset as CSV plus a JSON metadata sidecar with the same
/// basename. One row per `(mu, t)` sample, sorted by parameter index then
/// time; values print in the shortest form that parses back bit-exactly.
pub fn save_csv<T: Scalar>(dataset: &TimeParamDataset<T>, path: &Path) -> Result<()> {
    std::fs::write(path, csv_text(dataset)).map_err(|e| io_err(path, e))?;

    let sidecar = Sidecar {
        format: DATASET_FORMAT.to_string(),
        fidelity: dataset.fidelity(),
        t0: dataset.grid().t0,
        dt: dataset.grid().dt,
        n_times: dataset.n_times(),
        domain: dataset.domain().to_vec(),
        end_time: Some(dataset.end_time()),
    };
    let meta = serde_json::to_string_pretty(&sidecar).expect("sidecar serialization");
    let mpath = meta_path(path);
    std::fs::write(&mpath, meta).map_err(|e| io_err(&mpath, e))
}

/// Load a dataset written by [`save_csv`].
pub fn load_csv<T: Scalar>(path: &Path) -> Result<TimeParamDataset<T>> {
    let mpath = meta_path(path);
    let meta_text = std::fs::read_to_string(&mpath).map_err(|e| io_err(&mpath, e))?;
    let meta: Sidecar<T> = serde_json::from_str(&meta_text).map_err(|e| DataError::Parse {
        path: mpath.display().to_string(),
        line: 0,
        message: format!("invalid metadata: {e}"),
    })?;
    if meta.format != DATASET_FORMAT {
        return Err(DataError::Parse {
            path: mpath.display().to_string(),
            line: 0,
            message: format!("unsupported format '{}' (expected '{DATASET_FORMAT}')", meta.format),
        });
    }

    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let parse_err = |line: usize, message: String| DataError::Parse {
        path: path.display().to_string(),
        line,
        message,
    };

    let mut lines = text.lines().enumerate();
    let (_, head) = lines.next().ok_or_else(|| parse_err(1, "empty file".into()))?;
    let p_mu = meta.domain.len();
    let cols: Vec<&str> = head.split(',').collect();
    if cols.len() <= p_mu + 1 {
        return Err(parse_err(1, format!("expected at least {} columns, found {}", p_mu + 2, cols.len())));
    }
    let p_out = cols.len() - p_mu - 1;
    let expected = header(p_mu, p_out);
    if head != expected {
        return Err(parse_err(1, format!("header mismatch: expected '{expected}', found '{head}'")));
    }

    let mut rows: Vec<Vec<T>> = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(parse_err(idx + 1, format!("expected {} fields, found {}", cols.len(), fields.len())));
        }
        let mut row = Vec::with_capacity(fields.len());
        for (c, field) in fields.iter().enumerate() {
            row.push(field.parse::<T>().map_err(|e| {
                parse_err(idx + 1, format!("column '{}': {e}", cols[c]))
            })?);
        }
        rows.push(row);
    }

    let n_t = meta.n_times;
    if n_t == 0 || rows.len() % n_t != 0 || rows.is_empty() {
        return Err(parse_err(
            rows.len() + 1,
            format!("{} data rows do not form whole blocks of {} instants", rows.len(), n_t),
        ));
    }
    let n_mu = rows.len() / n_t;
    let grid = TimeGrid::new(meta.t0, meta.dt, n_t)?;

    let mut params = Array2::zeros((n_mu, p_mu));
    let mut outputs = Array3::zeros((n_mu, n_t, p_out));
    let tol = T::of(1e-9) * grid.dt;
    for j in 0..n_mu {
        for n in 0..n_t {
            let row = &rows[j * n_t + n];
            let line = j * n_t + n + 2;
            if n == 0 {
                for d in 0..p_mu {
                    params[[j, d]] = row[d];
                }
            } else {
                for d in 0..p_mu {
                    if row[d] != params[[j, d]] {
                        return Err(parse_err(line, "parameter changes within a time block".into()));
                    }
                }
            }
            if (row[p_mu] - grid.time(n)).abs() > tol {
                return Err(parse_err(
                    line,
                    format!("time {} does not lie on the declared grid (expected {})", row[p_mu], grid.time(n)),
                ));
            }
            for q in 0..p_out {
                outputs[[j, n, q]] = row[p_mu + 1 + q];
            }
        }
    }

    let mut ds = TimeParamDataset::new(meta.fidelity, params, grid, outputs, meta.domain)?;
    if let Some(end) = meta.end_time {
        ds = ds.with_end_time(end);
    }
    Ok(ds)
}
