//! File formats.
//!
//! Datasets are JSON Lines, one sequence per line:
//! `{"T": <real>, "events": [[t, u], ...]}` with `u` 1-based.
//! A model is a single JSON document
//! `{"U":, "M":, "mu": [...], "A": [[[...]]], "basis": {"omega0":, "sigma":,
//! "centers": [...]}}`.
//! Truth files store the generating process and its true adjacency;
//! cluster files store 1-based type clusters.

use crate::basis::BasisConfig;
use crate::error::{HawkesError, Result};
use crate::model::ModelParams;
use crate::simulate::{GroundTruth, KernelFamily, SinePairParams, TruthKernels};
use crate::types::{ClusterStructure, Dataset, EventSequence};
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

#[derive(Serialize, Deserialize)]
struct SequenceLine {
    #[serde(rename = "T")]
    horizon: f64,
    events: Vec<(f64, usize)>,
}

/// Reads a JSONL dataset. `num_types` fixes the type count; when `None` it
/// is inferred as the largest type index present.
pub fn read_dataset(path: &Path, num_types: Option<usize>) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    let mut sequences = Vec::new();
    let mut max_type = 0usize;
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: SequenceLine = serde_json::from_str(&line).map_err(|e| {
            HawkesError::InvalidSequence(format!(
                "{}:{}: {e}",
                path.display(),
                lineno + 1
            ))
        })?;
        let events = record
            .events
            .iter()
            .map(|&(t, u)| {
                if u == 0 {
                    Err(HawkesError::InvalidSequence(format!(
                        "{}:{}: type indices are 1-based",
                        path.display(),
                        lineno + 1
                    )))
                } else {
                    max_type = max_type.max(u);
                    Ok((t, u - 1))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        sequences.push(EventSequence::new(events, record.horizon)?);
    }
    let num_types = num_types.unwrap_or(max_type.max(1));
    Dataset::new(sequences, num_types)
}

pub fn write_dataset(path: &Path, data: &Dataset) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut out = BufWriter::new(file);
    for seq in &data.sequences {
        let record = SequenceLine {
            horizon: seq.horizon(),
            events: seq
                .events()
                .iter()
                .map(|e| (e.time, e.type_idx + 1))
                .collect(),
        };
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct BasisDto {
    omega0: f64,
    sigma: f64,
    centers: Vec<f64>,
}

impl BasisDto {
    fn from_config(basis: &BasisConfig) -> Self {
        Self {
            omega0: basis.omega0(),
            sigma: basis.sigma(),
            centers: basis.centers().to_vec(),
        }
    }

    /// The file format does not carry the support horizon; rebuild it from
    /// the regular center layout `t_m = (m-1) T / M` (see crate docs).
    fn into_config(self) -> Result<BasisConfig> {
        let m = self.centers.len();
        let support = if m >= 2 {
            let spacing = self.centers[1] - self.centers[0];
            (self.centers[0] + spacing * m as f64).max(self.centers[m - 1])
        } else {
            std::f64::consts::PI / self.omega0
        };
        BasisConfig::from_parts(self.omega0, self.sigma, self.centers, support)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelDto {
    #[serde(rename = "U")]
    num_types: usize,
    #[serde(rename = "M")]
    num_bases: usize,
    mu: Vec<f64>,
    #[serde(rename = "A")]
    coeffs: Vec<Vec<Vec<f64>>>,
    basis: BasisDto,
}

pub fn write_model(path: &Path, params: &ModelParams, basis: &BasisConfig) -> Result<()> {
    let u = params.num_types();
    let m = params.num_bases();
    let coeffs = (0..u)
        .map(|i| (0..u).map(|j| params.group(i, j).to_vec()).collect())
        .collect();
    let dto = ModelDto {
        num_types: u,
        num_bases: m,
        mu: params.mu().to_vec(),
        coeffs,
        basis: BasisDto::from_config(basis),
    };
    write_json(path, &dto)
}

pub fn read_model(path: &Path) -> Result<(ModelParams, BasisConfig)> {
    let dto: ModelDto = read_json(path)?;
    let u = dto.num_types;
    let m = dto.num_bases;
    if dto.mu.len() != u
        || dto.coeffs.len() != u
        || dto.coeffs.iter().any(|r| r.len() != u)
        || dto
            .coeffs
            .iter()
            .flatten()
            .any(|g| g.len() != m)
        || dto.basis.centers.len() != m
    {
        return Err(HawkesError::DimensionMismatch(format!(
            "model file {} has inconsistent dimensions",
            path.display()
        )));
    }
    let mut flat = Vec::with_capacity(u * u * m);
    for row in &dto.coeffs {
        for group in row {
            flat.extend_from_slice(group);
        }
    }
    let params = ModelParams::new(dto.mu, flat, u, m)?;
    let basis = dto.basis.into_config()?;
    Ok((params, basis))
}

#[derive(Serialize, Deserialize)]
struct SinePairDto {
    b: f64,
    omega: f64,
    s: u8,
}

#[derive(Serialize, Deserialize)]
struct TruthDto {
    mu: Vec<f64>,
    family: KernelFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pairs: Option<Vec<Vec<Option<SinePairDto>>>>,
    #[serde(default)]
    verbatim_window: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    model: Option<ModelDto>,
}

#[derive(Serialize, Deserialize)]
struct TruthFile {
    ground_truth: TruthDto,
    adjacency: Vec<Vec<bool>>,
}

pub fn write_truth(path: &Path, truth: &GroundTruth) -> Result<()> {
    let dto = match &truth.kernels {
        TruthKernels::Sine {
            pairs,
            piecewise,
            verbatim_window,
        } => TruthDto {
            mu: truth.mu.clone(),
            family: if *piecewise {
                KernelFamily::PiecewiseConstant
            } else {
                KernelFamily::SineLike
            },
            pairs: Some(
                pairs
                    .iter()
                    .map(|row| {
                        row.iter()
                            .map(|p| {
                                p.map(|p| SinePairDto {
                                    b: p.amplitude,
                                    omega: p.omega,
                                    s: p.shift,
                                })
                            })
                            .collect()
                    })
                    .collect(),
            ),
            verbatim_window: *verbatim_window,
            model: None,
        },
        TruthKernels::Basis { params, basis } => {
            let u = params.num_types();
            TruthDto {
                mu: truth.mu.clone(),
                family: KernelFamily::BasisExpansion,
                pairs: None,
                verbatim_window: false,
                model: Some(ModelDto {
                    num_types: u,
                    num_bases: params.num_bases(),
                    mu: params.mu().to_vec(),
                    coeffs: (0..u)
                        .map(|i| (0..u).map(|j| params.group(i, j).to_vec()).collect())
                        .collect(),
                    basis: BasisDto::from_config(basis),
                }),
            }
        }
    };
    let file = TruthFile {
        adjacency: truth.true_graph().adjacency().to_vec(),
        ground_truth: dto,
    };
    write_json(path, &file)
}

pub fn read_truth(path: &Path) -> Result<GroundTruth> {
    let file: TruthFile = read_json(path)?;
    let dto = file.ground_truth;
    match dto.family {
        KernelFamily::SineLike | KernelFamily::PiecewiseConstant => {
            let pairs = dto.pairs.ok_or_else(|| {
                HawkesError::InvalidConfig(format!(
                    "truth file {} lacks sine pair table",
                    path.display()
                ))
            })?;
            let pairs = pairs
                .into_iter()
                .map(|row| {
                    row.into_iter()
                        .map(|p| {
                            p.map(|p| SinePairParams {
                                amplitude: p.b,
                                omega: p.omega,
                                shift: p.s,
                            })
                        })
                        .collect()
                })
                .collect();
            GroundTruth::sine(
                dto.mu,
                pairs,
                dto.family == KernelFamily::PiecewiseConstant,
                dto.verbatim_window,
            )
        }
        KernelFamily::BasisExpansion => {
            let model = dto.model.ok_or_else(|| {
                HawkesError::InvalidConfig(format!(
                    "truth file {} lacks embedded model",
                    path.display()
                ))
            })?;
            let u = model.num_types;
            let m = model.num_bases;
            let mut flat = Vec::with_capacity(u * u * m);
            for row in &model.coeffs {
                for group in row {
                    flat.extend_from_slice(group);
                }
            }
            let params = ModelParams::new(model.mu, flat, u, m)?;
            let basis = model.basis.into_config()?;
            GroundTruth::from_model(dto.mu, params, basis)
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ClustersFile {
    clusters: Vec<Vec<usize>>,
}

/// Cluster files use 1-based type indices.
pub fn read_clusters(path: &Path, num_types: usize) -> Result<ClusterStructure> {
    let file: ClustersFile = read_json(path)?;
    let clusters = file
        .clusters
        .iter()
        .map(|c| {
            c.iter()
                .map(|&u| {
                    if u == 0 {
                        Err(HawkesError::InvalidConfig(
                            "cluster type indices are 1-based".into(),
                        ))
                    } else {
                        Ok(u - 1)
                    }
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    ClusterStructure::new(clusters, num_types)
}

pub fn write_clusters(path: &Path, clusters: &ClusterStructure) -> Result<()> {
    let file = ClustersFile {
        clusters: clusters
            .clusters()
            .iter()
            .map(|c| c.iter().map(|&u| u + 1).collect())
            .collect(),
    };
    write_json(path, &file)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = std::fs::File::open(path)?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{make_synthetic, SyntheticConfig};

    fn tmpdir(tag: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("hawkes_io_{tag}_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn dataset_round_trip() {
        let dir = tmpdir("dataset");
        let (data, _) = make_synthetic(&SyntheticConfig::new(3, KernelFamily::SineLike, 17)).unwrap();
        let path = dir.join("data.jsonl");
        write_dataset(&path, &data).unwrap();
        let back = read_dataset(&path, Some(5)).unwrap();
        assert_eq!(back.num_types, 5);
        assert_eq!(back.sequences, data.sequences);
        // 1-based types on disk
        let first_line = std::io::BufRead::lines(std::io::BufReader::new(
            std::fs::File::open(&path).unwrap(),
        ))
        .next()
        .unwrap()
        .unwrap();
        let v: serde_json::Value = serde_json::from_str(&first_line).unwrap();
        let u = v["events"][0][1].as_u64().unwrap();
        assert!((1..=5).contains(&u));
    }

    use crate::simulate::KernelFamily;

    #[test]
    fn model_round_trip_reconstructs_support() {
        let dir = tmpdir("model");
        let basis = BasisConfig::uniform(4, 20.0, 0.7).unwrap();
        let mut params = ModelParams::zeros(2, 4);
        params.mu_mut().copy_from_slice(&[0.3, 0.1]);
        params.set_coeff(0, 1, 2, 0.25);
        let path = dir.join("model.json");
        write_model(&path, &params, &basis).unwrap();
        let (p2, b2) = read_model(&path).unwrap();
        assert_eq!(p2, params);
        assert_eq!(b2.centers(), basis.centers());
        assert!((b2.support_horizon() - 20.0).abs() < 1e-9);

        let v: serde_json::Value = read_json(&path).unwrap();
        assert_eq!(v["U"], 2);
        assert_eq!(v["M"], 4);
        assert!(v["basis"]["omega0"].is_number());
        assert!(v["A"][0][1][2].as_f64().unwrap() > 0.0);
    }

    #[test]
    fn truth_round_trip_keeps_kernels_and_adjacency() {
        let dir = tmpdir("truth");
        let (_, gt) = make_synthetic(&SyntheticConfig::new(0, KernelFamily::SineLike, 3)).unwrap();
        let path = dir.join("truth.json");
        write_truth(&path, &gt).unwrap();
        let back = read_truth(&path).unwrap();
        assert_eq!(back.mu, gt.mu);
        for u in 0..5 {
            for v in 0..5 {
                for t in [0.0, 0.7, 2.3] {
                    assert_eq!(back.kernel_value(u, v, t), gt.kernel_value(u, v, t));
                }
            }
        }
        let v: serde_json::Value = read_json(&path).unwrap();
        assert_eq!(v["adjacency"].as_array().unwrap().len(), 5);
    }

    #[test]
    fn clusters_round_trip_one_based() {
        let dir = tmpdir("clusters");
        let cs = ClusterStructure::new(vec![vec![0, 1, 2], vec![3, 4]], 5).unwrap();
        let path = dir.join("clusters.json");
        write_clusters(&path, &cs).unwrap();
        let v: serde_json::Value = read_json(&path).unwrap();
        assert_eq!(v["clusters"][0][0], 1);
        let back = read_clusters(&path, 5).unwrap();
        assert_eq!(back.peers(0), cs.peers(0));
        assert_eq!(back.peers(4), cs.peers(4));
    }
}
