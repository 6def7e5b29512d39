//! Model-set files (magic `CGMM`): JSON header listing areas, bins, per-model
//! component counts and the fit configuration, followed by the packed
//! parameters. Per model and component: weight, mean, row-major covariance;
//! then the model's lower-bound trace.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{AreaModelSet1D, AreaModelSetMD};
use crate::bundle::{read_bundle, write_bundle, Floats};
use crate::error::{Error, Result};
use crate::gmm::{FitConfig, GaussianComponent, GmmModel};
use crate::model::AreaId;

const MAGIC: &[u8; 4] = b"CGMM";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    kind: String,
    areas: Vec<AreaId>,
    /// Models per area (bins for 1d, 1 for md).
    per_area: usize,
    covariance_type: String,
    models: Vec<ModelHeader>,
    config: FitConfig,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelHeader {
    dim: usize,
    components: usize,
    converged: bool,
    n_iter: usize,
    elbo_len: usize,
}

fn pack(models: &[&GmmModel], payload: &mut Vec<f64>) -> Vec<ModelHeader> {
    models
        .iter()
        .map(|m| {
            for c in m.components() {
                payload.push(c.weight());
                payload.extend(c.mean().iter());
                payload.extend(c.covariance().transpose().iter());
            }
            payload.extend_from_slice(m.elbo_trace());
            ModelHeader {
                dim: m.dim(),
                components: m.components().len(),
                converged: m.converged(),
                n_iter: m.n_iter(),
                elbo_len: m.elbo_trace().len(),
            }
        })
        .collect()
}

fn unpack(headers: &[ModelHeader], payload: &[f64], reg: f64) -> Result<Vec<GmmModel>> {
    let mut f = Floats::new(payload);
    let mut out = Vec::with_capacity(headers.len());
    for h in headers {
        let d = h.dim;
        let mut comps = Vec::with_capacity(h.components);
        for _ in 0..h.components {
            let w = f.take(1)?[0];
            let mean = DVector::from_column_slice(f.take(d)?);
            let cov = DMatrix::from_row_slice(d, d, f.take(d * d)?);
            comps.push(GaussianComponent::new(w, mean, cov, reg)?);
        }
        let elbo = f.take(h.elbo_len)?.to_vec();
        out.push(GmmModel::from_components(
            comps,
            elbo,
            h.converged,
            h.n_iter,
        )?);
    }
    f.finish()?;
    Ok(out)
}

pub fn save_models_1d(models: &AreaModelSet1D, path: &Path) -> Result<()> {
    let mut payload = Vec::new();
    let flat: Vec<&GmmModel> = models.models.iter().flatten().collect();
    let header = Header {
        kind: "1d".into(),
        areas: models.areas.clone(),
        per_area: models.bins(),
        covariance_type: "full".into(),
        models: pack(&flat, &mut payload),
        config: models.config.clone(),
    };
    write_bundle(path, MAGIC, &header, &payload)
}

pub fn save_models_md(models: &AreaModelSetMD, path: &Path) -> Result<()> {
    let mut payload = Vec::new();
    let flat: Vec<&GmmModel> = models.models.iter().collect();
    let header = Header {
        kind: "md".into(),
        areas: models.areas.clone(),
        per_area: 1,
        covariance_type: "full".into(),
        models: pack(&flat, &mut payload),
        config: models.config.clone(),
    };
    write_bundle(path, MAGIC, &header, &payload)
}

fn read(path: &Path, kind: &str) -> Result<(Header, Vec<GmmModel>)> {
    let (header, payload): (Header, Vec<f64>) = read_bundle(path, MAGIC)?;
    if header.kind != kind {
        return Err(Error::format(format!(
            "expected a {kind} model set, found {}",
            header.kind
        )));
    }
    if header.models.len() != header.areas.len() * header.per_area {
        return Err(Error::format("model count does not match areas"));
    }
    let models = unpack(&header.models, &payload, header.config.reg_covar)?;
    Ok((header, models))
}

pub fn load_models_1d(path: &Path) -> Result<AreaModelSet1D> {
    let (header, models) = read(path, "1d")?;
    let mut it = models.into_iter();
    let grouped = (0..header.areas.len())
        .map(|_| it.by_ref().take(header.per_area).collect())
        .collect();
    AreaModelSet1D::new(header.areas, grouped, header.config)
}

pub fn load_models_md(path: &Path) -> Result<AreaModelSetMD> {
    let (header, models) = read(path, "md")?;
    AreaModelSetMD::new(header.areas, models, header.config)
}
