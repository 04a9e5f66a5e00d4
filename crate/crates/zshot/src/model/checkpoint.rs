//! Self-describing JSON model checkpoints: config, segment table, values.
//!
//! Values round-trip bit-exactly (shortest-float serialization parses back
//! to the identical f64), so evaluation after reload matches training.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::autodiff::{Layout, ParamVector, Segment};

use super::{ModelConfig, ModelError};

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    config: ModelConfig,
    segments: Vec<Segment>,
    values: Vec<f64>,
}

pub fn save_checkpoint(
    path: impl AsRef<Path>,
    config: &ModelConfig,
    params: &ParamVector<f64>,
) -> Result<(), ModelError> {
    if !params.is_finite() {
        return Err(ModelError::Argument("refusing to checkpoint non-finite parameters".into()));
    }
    let ckpt = Checkpoint {
        config: config.clone(),
        segments: params.layout().segments().to_vec(),
        values: params.values().to_vec(),
    };
    let file = File::create(path.as_ref())
        .map_err(|e| ModelError::Argument(format!("cannot create checkpoint: {e}")))?;
    serde_json::to_writer(BufWriter::new(file), &ckpt)
        .map_err(|e| ModelError::Argument(format!("cannot write checkpoint: {e}")))
}

pub fn load_checkpoint(
    path: impl AsRef<Path>,
) -> Result<(ModelConfig, ParamVector<f64>), ModelError> {
    let file = File::open(path.as_ref())
        .map_err(|e| ModelError::Argument(format!("cannot open checkpoint: {e}")))?;
    let ckpt: Checkpoint = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| ModelError::Argument(format!("cannot parse checkpoint: {e}")))?;
    let layout = Layout::from_segments(ckpt.segments).map_err(ModelError::Autodiff)?;
    if layout.total_len() != ckpt.config.layout().total_len() {
        return Err(ModelError::Argument(
            "checkpoint segment table does not match its config".into(),
        ));
    }
    let params = ParamVector::new(layout, ckpt.values).map_err(ModelError::Autodiff)?;
    Ok((ckpt.config, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{build_vocab, Example, TaskId, EOS_TOKEN};
    use crate::model::init_params;

    fn tiny_config() -> ModelConfig {
        let examples = vec![Example {
            id: "a".into(),
            source: vec!["x".into(), "y".into()],
            target: vec!["z".into(), EOS_TOKEN.into()],
            domain: TaskId(0),
        }];
        let vocab = build_vocab(&examples, 1).unwrap();
        let mut cfg = ModelConfig::new(vocab, 2);
        cfg.hidden_dim = 3;
        cfg.embed_dim = 2;
        cfg
    }

    #[test]
    fn checkpoint_round_trips_bit_exactly() {
        let cfg = tiny_config();
        let params = init_params(&cfg, 17).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_checkpoint(&path, &cfg, &params).unwrap();
        let (cfg2, params2) = load_checkpoint(&path).unwrap();
        assert_eq!(cfg2.hidden_dim, cfg.hidden_dim);
        assert_eq!(cfg2.vocab, cfg.vocab);
        assert_eq!(params.len(), params2.len());
        for (a, b) in params.values().iter().zip(params2.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
