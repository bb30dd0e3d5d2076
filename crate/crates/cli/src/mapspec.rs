//! Map input grammar: `name:params` shorthand for built-ins, or
//! `@file.json` for explicit forms.
//!
//! JSON schema (complex numbers are [re, im] pairs, matrices are arrays of
//! rows):
//!   {"kind": "kraus",   "d": 2, "ops": [matrix, ...]}
//!   {"kind": "superop", "d_in": 2, "d_out": 2, "matrix": matrix}
//!   {"kind": "affine",  "A": [[..3x3..]], "v": [..3..]}

use serde::Deserialize;

use pnormlab_core::channels::{
    affine_from_map, amplitude_damping, depolarizing, identity_map, map_from_affine,
    transpose_map, werner_holevo, AffineQubitMap, QuantumMap,
};
use pnormlab_core::matcore::ComplexMatrix;

/// A parsed map: either a general quantum map or a Bloch-form qubit map.
#[derive(Debug, Clone)]
pub enum MapInput {
    Quantum(QuantumMap),
    Affine(AffineQubitMap),
}

impl MapInput {
    pub fn to_quantum(&self) -> QuantumMap {
        match self {
            MapInput::Quantum(m) => m.clone(),
            MapInput::Affine(a) => map_from_affine(a),
        }
    }

    /// Bloch form, when the map is a trace-preserving qubit map.
    pub fn to_affine(&self) -> Result<AffineQubitMap, String> {
        match self {
            MapInput::Affine(a) => Ok(*a),
            MapInput::Quantum(m) => affine_from_map(m).map_err(|e| e.to_string()),
        }
    }

}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum MapJson {
    Kraus {
        d: usize,
        ops: Vec<ComplexMatrix>,
    },
    Superop {
        d_in: usize,
        d_out: usize,
        matrix: ComplexMatrix,
    },
    Affine {
        #[serde(rename = "A")]
        a: [[f64; 3]; 3],
        v: [f64; 3],
    },
}

/// Parse a map specification string.
pub fn parse_map(spec: &str) -> Result<MapInput, String> {
    if let Some(path) = spec.strip_prefix('@') {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read map file {path}: {e}"))?;
        let json: MapJson =
            serde_json::from_str(&text).map_err(|e| format!("malformed map JSON in {path}: {e}"))?;
        return match json {
            MapJson::Kraus { d, ops } => {
                for k in &ops {
                    if k.rows() != d || k.cols() != d {
                        return Err(format!(
                            "Kraus operator is {}x{}, expected {d}x{d}",
                            k.rows(),
                            k.cols()
                        ));
                    }
                }
                QuantumMap::from_kraus(ops)
                    .map(MapInput::Quantum)
                    .map_err(|e| e.to_string())
            }
            MapJson::Superop { d_in, d_out, matrix } => QuantumMap::from_superop(d_in, d_out, matrix)
                .map(MapInput::Quantum)
                .map_err(|e| e.to_string()),
            MapJson::Affine { a, v } => Ok(MapInput::Affine(AffineQubitMap::new(a, v))),
        };
    }

    let (name, arg) = match spec.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (spec, None),
    };
    let need_f64 = |what: &str| -> Result<f64, String> {
        arg.ok_or_else(|| format!("{name} needs a parameter, e.g. {name}:{what}"))?
            .parse::<f64>()
            .map_err(|e| format!("bad parameter for {name}: {e}"))
    };
    let need_usize = |what: &str| -> Result<usize, String> {
        arg.ok_or_else(|| format!("{name} needs a parameter, e.g. {name}:{what}"))?
            .parse::<usize>()
            .map_err(|e| format!("bad parameter for {name}: {e}"))
    };
    match name {
        "identity" | "id" => Ok(MapInput::Quantum(identity_map(need_usize("2")?))),
        "transpose" => Ok(MapInput::Quantum(transpose_map(need_usize("2")?))),
        "wh" | "werner-holevo" => werner_holevo(need_usize("3")?)
            .map(MapInput::Quantum)
            .map_err(|e| e.to_string()),
        "depolarizing" | "dep" => depolarizing(need_f64("0.5")?)
            .map(MapInput::Quantum)
            .map_err(|e| e.to_string()),
        "ad" | "amplitude-damping" => amplitude_damping(need_f64("0.3")?)
            .map(MapInput::Quantum)
            .map_err(|e| e.to_string()),
        other => Err(format!(
            "unknown map '{other}'; use identity:<d>, transpose:<d>, wh:<d>, depolarizing:<l>, ad:<g>, or @file.json"
        )),
    }
}
