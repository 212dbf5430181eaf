use crate::nn::{Activation, DenseLayerParams, LstmCellParams, NetworkParams, NetworkSpec, NnError, Result};
use crate::Scalar;
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

/// Format tag embedded in serialized networks.
pub const NETWORK_FORMAT: &str = "mflstm.network/1";

#[derive(Serialize, Deserialize)]
pub(crate) struct NetworkDoc<T> {
    format: String,
    spec: NetworkSpec,
    layers: Vec<LayerDoc<T>>,
}

/// One layer with flat row-major weight data.
#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum LayerDoc<T> {
    Lstm {
        hidden: usize,
        input: usize,
        w_f: Vec<T>,
        w_u: Vec<T>,
        w_o: Vec<T>,
        w_c: Vec<T>,
        b_f: Vec<T>,
        b_u: Vec<T>,
        b_o: Vec<T>,
        b_c: Vec<T>,
    },
    Dense {
        out: usize,
        input: usize,
        activation: Activation,
        w: Vec<T>,
        b: Vec<T>,
    },
}

fn mat<T: Scalar>(rows: usize, cols: usize, data: Vec<T>) -> Result<Array2<T>> {
    Array2::from_shape_vec((rows, cols), data)
        .map_err(|_| NnError::Shape("serialized weight length does not match declared shape".into()))
}

/// Build the serializable document form of a network.
pub(crate) fn network_to_doc<T: Scalar>(
    spec: &NetworkSpec,
    params: &NetworkParams<T>,
) -> Result<NetworkDoc<T>> {
    params.matches(spec)?;
    let layers = params
        .lstm
        .iter()
        .map(|l| LayerDoc::Lstm {
            hidden: l.hidden_size(),
            input: l.input_size(),
            w_f: l.w_f.iter().copied().collect(),
            w_u: l.w_u.iter().copied().collect(),
            w_o: l.w_o.iter().copied().collect(),
            w_c: l.w_c.iter().copied().collect(),
            b_f: l.b_f.to_vec(),
            b_u: l.b_u.to_vec(),
            b_o: l.b_o.to_vec(),
            b_c: l.b_c.to_vec(),
        })
        .chain(params.dense.iter().map(|d| LayerDoc::Dense {
            out: d.output_size(),
            input: d.input_size(),
            activation: d.activation,
            w: d.w.iter().copied().collect(),
            b: d.b.to_vec(),
        }))
        .collect();
    Ok(NetworkDoc { format: NETWORK_FORMAT.to_string(), spec: spec.clone(), layers })
}

/// Serialize spec and parameters to a versioned JSON document.
pub fn network_to_json<T: Scalar>(spec: &NetworkSpec, params: &NetworkParams<T>) -> Result<String> {
    let doc = network_to_doc(spec, params)?;
    serde_json::to_string_pretty(&doc).map_err(|e| NnError::Config(format!("serialization failed: {e}")))
}

/// Reconstruct a network from its document form.
pub(crate) fn network_from_doc<T: Scalar>(doc: NetworkDoc<T>) -> Result<(NetworkSpec, NetworkParams<T>)> {
    if doc.format != NETWORK_FORMAT {
        return Err(NnError::Config(format!(
            "unsupported network format '{}' (expected '{NETWORK_FORMAT}')",
            doc.format
        )));
    }
    let mut lstm = Vec::new();
    let mut dense = Vec::new();
    for layer in doc.layers {
        match layer {
            LayerDoc::Lstm { hidden, input, w_f, w_u, w_o, w_c, b_f, b_u, b_o, b_c } => {
                let cols = hidden + input;
                lstm.push(LstmCellParams {
                    w_f: mat(hidden, cols, w_f)?,
                    w_u: mat(hidden, cols, w_u)?,
                    w_o: mat(hidden, cols, w_o)?,
                    w_c: mat(hidden, cols, w_c)?,
                    b_f: Array1::from_vec(b_f),
                    b_u: Array1::from_vec(b_u),
                    b_o: Array1::from_vec(b_o),
                    b_c: Array1::from_vec(b_c),
                });
            }
            LayerDoc::Dense { out, input, activation, w, b } => {
                dense.push(DenseLayerParams { w: mat(out, input, w)?, b: Array1::from_vec(b), activation });
            }
        }
    }
    let params = NetworkParams { lstm, dense };
    params.matches(&doc.spec)?;
    Ok((doc.spec, params))
}

/// Parse a network document produced by [`network_to_json`].
pub fn network_from_json<T: Scalar>(json: &str) -> Result<(NetworkSpec, NetworkParams<T>)> {
    let doc: NetworkDoc<T> =
        serde_json::from_str(json).map_err(|e| NnError::Config(format!("invalid network document: {e}")))?;
    network_from_doc(doc)
}
