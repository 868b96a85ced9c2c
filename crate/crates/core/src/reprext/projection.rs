//! Random orthonormal projections `theta = Q z`.
//!
//! `G` (D x k) is filled row-major with standard normals from the seeded ChaCha8
//! stream, factorized with Householder reflections, and the columns of `Q` are
//! sign-normalized so that the triangular factor has a non-negative diagonal. The
//! resulting `Q` is a deterministic function of `(D, k, seed)`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::ReprError;
use crate::policies::ParamVector;
use crate::seeding;

/// `D x k` matrix with orthonormal columns, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionMap {
    dim: usize,
    latent: usize,
    seed: u64,
    q: Vec<f64>,
}

impl ProjectionMap {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn latent(&self) -> usize {
        self.latent
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.q[row * self.latent + col]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.dim).map(|r| self.get(r, col)).collect()
    }

    /// Rows of `Q`.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.q.chunks(self.latent).map(<[f64]>::to_vec).collect()
    }

    /// `max |(QᵀQ - I)_ij|`.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for a in 0..self.latent {
            for b in 0..self.latent {
                let dot: f64 = (0..self.dim).map(|r| self.get(r, a) * self.get(r, b)).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

/// Householder QR of the seeded Gaussian matrix; returns the thin orthonormal factor.
pub fn make_projection(dim: usize, latent: usize, seed: u64) -> Result<ProjectionMap, ReprError> {
    if latent == 0 || latent > dim {
        return Err(ReprError::DimensionError(format!(
            "need 1 <= k <= D, got D = {dim}, k = {latent}"
        )));
    }
    let mut rng = seeding::rng(seed);
    // Column-major working copy of G.
    let mut a = vec![vec![0.0; dim]; latent];
    for r in 0..dim {
        for col in a.iter_mut() {
            col[r] = rng.sample(StandardNormal);
        }
    }

    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(latent);
    let mut diag = vec![0.0; latent];
    for j in 0..latent {
        let x = &a[j][j..];
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let alpha = if x[0] >= 0.0 { -norm } else { norm };
        let mut v = x.to_vec();
        v[0] -= alpha;
        let vnorm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        if vnorm > 0.0 {
            v.iter_mut().for_each(|t| *t /= vnorm);
            for col in a.iter_mut().skip(j) {
                let dot: f64 = v.iter().zip(&col[j..]).map(|(p, q)| p * q).sum();
                for (c, vi) in col[j..].iter_mut().zip(&v) {
                    *c -= 2.0 * dot * vi;
                }
            }
        }
        diag[j] = a[j][j];
        reflectors.push(v);
    }

    // Q = H_0 H_1 ... H_{k-1} [I_k; 0], built column by column.
    let mut q = vec![0.0; dim * latent];
    for col in 0..latent {
        let mut e = vec![0.0; dim];
        e[col] = 1.0;
        for j in (0..latent).rev() {
            let v = &reflectors[j];
            let dot: f64 = v.iter().zip(&e[j..]).map(|(p, q)| p * q).sum();
            for (t, vi) in e[j..].iter_mut().zip(v) {
                *t -= 2.0 * dot * vi;
            }
        }
        let sign = if diag[col] < 0.0 { -1.0 } else { 1.0 };
        for r in 0..dim {
            q[r * latent + col] = sign * e[r];
        }
    }
    Ok(ProjectionMap { dim, latent, seed, q })
}

/// `theta = Q z`.
pub fn lift(map: &ProjectionMap, z: &[f64]) -> Result<ParamVector, ReprError> {
    if z.len() != map.latent {
        return Err(ReprError::DimensionError(format!(
            "latent vector has length {}, projection expects {}",
            z.len(),
            map.latent
        )));
    }
    Ok(ParamVector(
        map.q
            .chunks(map.latent)
            .map(|row| row.iter().zip(z).map(|(a, b)| a * b).sum())
            .collect(),
    ))
}

/// Independent projections per parameter block (e.g. one per network layer), with the
/// lifted blocks concatenated in order.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockProjection {
    pub blocks: Vec<ProjectionMap>,
}

impl BlockProjection {
    /// `blocks[i] = (D_i, k_i)`; block `i` uses seed `derive(seed, i)`.
    pub fn new(blocks: &[(usize, usize)], seed: u64) -> Result<Self, ReprError> {
        let blocks = blocks
            .iter()
            .enumerate()
            .map(|(i, &(d, k))| make_projection(d, k, seeding::derive(seed, i as u64)))
            .collect::<Result<_, _>>()?;
        Ok(Self { blocks })
    }

    pub fn latent(&self) -> usize {
        self.blocks.iter().map(ProjectionMap::latent).sum()
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(ProjectionMap::dim).sum()
    }

    pub fn lift(&self, z: &[f64]) -> Result<ParamVector, ReprError> {
        if z.len() != self.latent() {
            return Err(ReprError::DimensionError(format!(
                "latent vector has length {}, blocks expect {}",
                z.len(),
                self.latent()
            )));
        }
        let mut out = Vec::with_capacity(self.dim());
        let mut offset = 0;
        for b in &self.blocks {
            out.extend(lift(b, &z[offset..offset + b.latent()])?.0);
            offset += b.latent();
        }
        Ok(ParamVector(out))
    }
}

/// Serializable description of a projection. Seed and dims regenerate it; the matrix is
/// only carried for audit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionSidecar {
    pub dim: usize,
    pub latent: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
}

impl ProjectionSidecar {
    pub fn from_map(map: &ProjectionMap, include_matrix: bool) -> Self {
        Self {
            dim: map.dim,
            latent: map.latent,
            seed: map.seed,
            matrix: include_matrix.then(|| map.rows()),
        }
    }

    /// Regenerates the map; a stored matrix must agree with the regenerated one.
    pub fn to_map(&self) -> Result<ProjectionMap, ReprError> {
        let map = make_projection(self.dim, self.latent, self.seed)?;
        if let Some(m) = &self.matrix {
            if *m != map.rows() {
                return Err(ReprError::DimensionError(
                    "stored matrix does not match the regenerated projection".into(),
                ));
            }
        }
        Ok(map)
    }
}
