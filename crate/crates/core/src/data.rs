use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::matrix::RowMatrix;

/// Latent quantities kept by simulated data for oracle fits and evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Latent {
    /// n × r latent factors.
    pub factors: RowMatrix,
    /// Idiosyncratic components at the coordinates in `important`, n × |J|.
    pub idio: RowMatrix,
    pub important: Vec<usize>,
    /// Noise-free regression function values.
    pub truth: Vec<f64>,
    pub noise: Vec<f64>,
}

/// Covariates, responses and (for simulated data) the latent truth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub x: RowMatrix,
    pub y: Vec<f64>,
    pub latent: Option<Latent>,
}

impl Dataset {
    pub fn new(x: RowMatrix, y: Vec<f64>) -> Result<Self> {
        check_len("response length", x.rows, y.len())?;
        Ok(Dataset { x, y, latent: None })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.cols
    }

    pub fn latent(&self) -> Result<&Latent> {
        self.latent.as_ref().ok_or(Error::MissingTruth)
    }

    pub fn truth(&self) -> Result<&[f64]> {
        Ok(&self.latent()?.truth)
    }

    /// Rows `idx`, latent truth included.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            latent: self.latent.as_ref().map(|l| Latent {
                factors: l.factors.select_rows(idx),
                idio: l.idio.select_rows(idx),
                important: l.important.clone(),
                truth: idx.iter().map(|&i| l.truth[i]).collect(),
                noise: idx.iter().map(|&i| l.noise[i]).collect(),
            }),
        }
    }

    /// Oracle inputs: the factors, or the factors followed by the important
    /// idiosyncratic components.
    pub fn oracle_inputs(&self, with_idio: bool) -> Result<RowMatrix> {
        let l = self.latent()?;
        if with_idio {
            l.factors.hcat(&l.idio)
        } else {
            Ok(l.factors.clone())
        }
    }
}
