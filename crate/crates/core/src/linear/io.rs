//! Linear models as named tensors in the checkpoint container.

use nalgebra::DMatrix;

use super::cca::{CcaConfig, CcaModel};
use super::lda::LdaClassifier;
use super::ridge::RidgeDecoder;
use crate::error::{Error, Result};
use crate::nn::{NamedTensors, Tensor};

fn vector(name: &str, v: &[f64]) -> (String, Tensor<f32>) {
    let data: Vec<f32> = v.iter().map(|&x| x as f32).collect();
    (
        name.to_string(),
        Tensor::new(vec![data.len()], data).expect("non-empty vector"),
    )
}

fn scalar(name: &str, v: f64) -> (String, Tensor<f32>) {
    vector(name, &[v])
}

fn matrix(name: &str, m: &DMatrix<f64>) -> (String, Tensor<f32>) {
    let data = (0..m.nrows())
        .flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)] as f32))
        .collect();
    (
        name.to_string(),
        Tensor::new(vec![m.nrows(), m.ncols()], data).expect("non-empty matrix"),
    )
}

fn find<'a>(tensors: &'a NamedTensors, name: &str) -> Result<&'a Tensor<f32>> {
    tensors
        .iter()
        .find(|(n, _)| n == name)
        .map(|(_, t)| t)
        .ok_or_else(|| Error::InvalidArgument(format!("checkpoint lacks tensor {name:?}")))
}

fn get_vec(tensors: &NamedTensors, name: &str) -> Result<Vec<f64>> {
    Ok(find(tensors, name)?.data().iter().map(|&v| f64::from(v)).collect())
}

fn get_scalar(tensors: &NamedTensors, name: &str) -> Result<f64> {
    get_vec(tensors, name)?
        .first()
        .copied()
        .ok_or_else(|| Error::InvalidArgument(format!("tensor {name:?} is empty")))
}

fn get_count(tensors: &NamedTensors, name: &str) -> Result<usize> {
    let v = get_scalar(tensors, name)?;
    if v < 0.0 || v.fract() != 0.0 {
        return Err(Error::InvalidArgument(format!("tensor {name:?} is not a count: {v}")));
    }
    Ok(v as usize)
}

fn get_matrix(tensors: &NamedTensors, name: &str) -> Result<DMatrix<f64>> {
    let t = find(tensors, name)?;
    let (r, c) = t.dims2("linear checkpoint")?;
    Ok(DMatrix::from_row_iterator(r, c, t.data().iter().map(|&v| f64::from(v))))
}

pub fn encode_ridge(d: &RidgeDecoder) -> NamedTensors {
    vec![
        vector("g", &d.g),
        scalar("lambda", d.lambda),
        scalar("n_channels", d.n_channels as f64),
        scalar("lags", d.lags as f64),
    ]
}

pub fn decode_ridge(t: &NamedTensors) -> Result<RidgeDecoder> {
    let d = RidgeDecoder {
        g: get_vec(t, "g")?,
        lambda: get_scalar(t, "lambda")?,
        n_channels: get_count(t, "n_channels")?,
        lags: get_count(t, "lags")?,
    };
    if d.g.len() != d.n_channels * d.lags {
        return Err(Error::shape("decode_ridge", &[d.n_channels * d.lags], &[d.g.len()]));
    }
    Ok(d)
}

pub fn encode_cca(model: &CcaModel, lda: &LdaClassifier) -> NamedTensors {
    vec![
        matrix("W_x", &model.wx),
        matrix("W_s", &model.ws),
        vector("rho", &model.rho),
        scalar("n_channels", model.n_channels as f64),
        scalar("lags", model.config.lags as f64),
        scalar("envelope_lags", model.config.envelope_lags as f64),
        scalar("shrinkage", model.config.shrinkage),
        scalar("J", lda.dim() as f64),
        vector("lda_w", &lda.w),
        scalar("lda_bias", lda.bias),
        vector("lda_priors", &lda.priors),
    ]
}

pub fn decode_cca(t: &NamedTensors) -> Result<(CcaModel, LdaClassifier)> {
    let config = CcaConfig {
        lags: get_count(t, "lags")?,
        envelope_lags: get_count(t, "envelope_lags")?,
        shrinkage: get_scalar(t, "shrinkage")?,
    };
    let model = CcaModel {
        wx: get_matrix(t, "W_x")?,
        ws: get_matrix(t, "W_s")?,
        rho: get_vec(t, "rho")?,
        n_channels: get_count(t, "n_channels")?,
        config,
    };
    let priors = get_vec(t, "lda_priors")?;
    if priors.len() != 2 {
        return Err(Error::shape("decode_cca", &[2], &[priors.len()]));
    }
    let lda = LdaClassifier {
        w: get_vec(t, "lda_w")?,
        bias: get_scalar(t, "lda_bias")?,
        priors: [priors[0], priors[1]],
    };
    if lda.dim() != get_count(t, "J")? || lda.dim() > model.components() {
        return Err(Error::InvalidArgument("LDA dimension disagrees with J".into()));
    }
    Ok((model, lda))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ridge_round_trip() {
        let d = RidgeDecoder {
            g: vec![0.5, -0.25, 1.0, 2.0],
            lambda: 100.0,
            n_channels: 2,
            lags: 2,
        };
        assert_eq!(decode_ridge(&encode_ridge(&d)).unwrap(), d);
    }

    #[test]
    fn cca_round_trip() {
        let model = CcaModel {
            wx: DMatrix::from_row_slice(2, 2, &[1.0, 0.5, -0.25, 2.0]),
            ws: DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.5, 0.5]),
            rho: vec![0.75, 0.25],
            n_channels: 1,
            config: CcaConfig {
                lags: 2,
                envelope_lags: 3,
                shrinkage: 0.0,
            },
        };
        let lda = LdaClassifier {
            w: vec![1.5],
            bias: -0.5,
            priors: [0.5, 0.5],
        };
        let (m, l) = decode_cca(&encode_cca(&model, &lda)).unwrap();
        assert_eq!(m, model);
        assert_eq!(l, lda);
    }
}
