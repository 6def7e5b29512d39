//! SVC files (magic `CSVC`): JSON header with classes, gamma and config, then
//! per machine the bias, dual coefficients and row-major support vectors.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BinaryMachine, SvcConfig, SvcModel};
use crate::bundle::{read_bundle, write_bundle, Floats};
use crate::error::{Error, Result};
use crate::model::AreaId;

const MAGIC: &[u8; 4] = b"CSVC";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    classes: Vec<AreaId>,
    gamma: f64,
    dim: usize,
    config: SvcConfig,
    machines: Vec<MachineHeader>,
}

#[derive(Debug, Serialize, Deserialize)]
struct MachineHeader {
    pos: AreaId,
    neg: AreaId,
    support: usize,
    n_iter: usize,
    converged: bool,
}

pub fn save_svc(model: &SvcModel, path: &Path) -> Result<()> {
    let mut payload = Vec::new();
    let machines = model
        .machines
        .iter()
        .map(|m| {
            payload.push(m.bias);
            payload.extend_from_slice(&m.coef);
            m.support
                .iter()
                .for_each(|sv| payload.extend_from_slice(sv));
            MachineHeader {
                pos: m.pos,
                neg: m.neg,
                support: m.coef.len(),
                n_iter: m.n_iter,
                converged: m.converged,
            }
        })
        .collect();
    let header = Header {
        classes: model.classes.clone(),
        gamma: model.gamma,
        dim: model.dim,
        config: model.config.clone(),
        machines,
    };
    write_bundle(path, MAGIC, &header, &payload)
}

pub fn load_svc(path: &Path) -> Result<SvcModel> {
    let (h, payload): (Header, Vec<f64>) = read_bundle(path, MAGIC)?;
    let k = h.classes.len();
    if h.machines.len() != k * k.saturating_sub(1) / 2 || !(h.gamma > 0.0) {
        return Err(Error::format("SVC header is inconsistent"));
    }
    let mut f = Floats::new(&payload);
    let mut machines = Vec::with_capacity(h.machines.len());
    for m in &h.machines {
        let bias = f.take(1)?[0];
        let coef = f.take(m.support)?.to_vec();
        let support = (0..m.support)
            .map(|_| f.take(h.dim).map(<[f64]>::to_vec))
            .collect::<Result<_>>()?;
        if !h.classes.contains(&m.pos) || !h.classes.contains(&m.neg) {
            return Err(Error::format("machine refers to an unknown class"));
        }
        machines.push(BinaryMachine {
            pos: m.pos,
            neg: m.neg,
            support,
            coef,
            bias,
            n_iter: m.n_iter,
            converged: m.converged,
        });
    }
    f.finish()?;
    Ok(SvcModel {
        classes: h.classes,
        machines,
        gamma: h.gamma,
        dim: h.dim,
        config: h.config,
    })
}
