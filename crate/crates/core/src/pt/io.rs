use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::run::{PtSchedule, SampleSeries};
use crate::error::{Error, Result};
use crate::fsutil::{read_to_string, write_atomic};
use crate::TOOL_VERSION;

/// Run metadata stored next to a samples CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplesMeta {
    pub tool_version: String,
    pub config_hash: String,
    pub instance_hash: String,
    pub n_spins: usize,
    pub betas: Vec<f64>,
    pub schedule: PtSchedule,
    pub swap_accept: Vec<f64>,
    pub target_e: Option<f64>,
    pub ground_hits: Option<Vec<usize>>,
}

impl SamplesMeta {
    pub fn from_series(series: &SampleSeries, config_hash: &str) -> Self {
        SamplesMeta {
            tool_version: TOOL_VERSION.to_string(),
            config_hash: config_hash.to_string(),
            instance_hash: series.instance_hash.clone(),
            n_spins: series.n_spins,
            betas: series.betas.clone(),
            schedule: series.schedule,
            swap_accept: series.swap_accept.clone(),
            target_e: series.target_e,
            ground_hits: series.ground_hits.clone(),
        }
    }

    /// `samples.csv` -> `samples.meta.json`.
    pub fn sidecar_path(csv_path: &Path) -> PathBuf {
        csv_path.with_extension("meta.json")
    }
}

#[derive(Serialize, Deserialize)]
struct Row {
    rung_index: usize,
    beta: f64,
    sample_index: usize,
    energy: f64,
}

/// Writes one row per (rung, sample) plus the JSON sidecar.
pub fn write_samples_csv(path: &Path, series: &SampleSeries, config_hash: &str) -> Result<()> {
    let mut buf = format!(
        "# betascale {TOOL_VERSION} config_hash={config_hash} instance_hash={}\n",
        series.instance_hash
    )
    .into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for (rung, es) in series.energies.iter().enumerate() {
            for (k, &energy) in es.iter().enumerate() {
                w.serialize(Row {
                    rung_index: rung,
                    beta: series.betas[rung],
                    sample_index: k,
                    energy,
                })?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    write_atomic(path, &buf)?;
    let meta = SamplesMeta::from_series(series, config_hash);
    write_atomic(
        &SamplesMeta::sidecar_path(path),
        serde_json::to_string_pretty(&meta)?.as_bytes(),
    )
}

/// Reads a samples CSV and its sidecar back into a [`SampleSeries`].
pub fn read_samples_csv(path: &Path) -> Result<(SampleSeries, SamplesMeta)> {
    let meta_path = SamplesMeta::sidecar_path(path);
    let meta: SamplesMeta = serde_json::from_str(&read_to_string(&meta_path)?)?;
    let text = read_to_string(path)?;
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let n_rungs = meta.betas.len();
    let mut energies: Vec<Vec<f64>> = vec![Vec::new(); n_rungs];
    for row in r.deserialize::<Row>() {
        let row = row?;
        if row.rung_index >= n_rungs {
            return Err(Error::Config(format!(
                "rung index {} outside ladder of {n_rungs}",
                row.rung_index
            )));
        }
        if row.sample_index != energies[row.rung_index].len() {
            return Err(Error::Config(format!(
                "samples for rung {} are not contiguous",
                row.rung_index
            )));
        }
        energies[row.rung_index].push(row.energy);
    }
    if energies.iter().any(|e| e.len() != energies[0].len()) {
        return Err(Error::Config("rungs have unequal sample counts".into()));
    }
    let series = SampleSeries {
        n_spins: meta.n_spins,
        betas: meta.betas.clone(),
        energies,
        swap_accept: meta.swap_accept.clone(),
        target_e: meta.target_e,
        ground_hits: meta.ground_hits.clone(),
        schedule: meta.schedule,
        instance_hash: meta.instance_hash.clone(),
        final_configs: None,
    };
    Ok((series, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{build_chimera, generate_planted, PlantedParams};
    use crate::pt::{geometric_ladder, pt_run};

    #[test]
    fn round_trip() {
        let g = build_chimera(1, 2).unwrap();
        let inst = generate_planted(&g, &PlantedParams::default(), 4).unwrap();
        let ladder = geometric_ladder(0.2, 3.0, 4).unwrap();
        let sched = PtSchedule {
            warmup_swaps: 10,
            sweeps_per_swap: 1,
            sample_stride_swaps: 1,
            n_samples: 50,
            seed: 2,
        };
        let series = pt_run(&inst, &ladder, &sched).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("samples.csv");
        write_samples_csv(&path, &series, "abc").unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# betascale"));
        assert!(text.lines().nth(1).unwrap() == "rung_index,beta,sample_index,energy");
        let (back, meta) = read_samples_csv(&path).unwrap();
        assert_eq!(back, series);
        assert_eq!(meta.config_hash, "abc");
    }

    #[test]
    fn missing_sidecar_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        std::fs::write(&path, "rung_index,beta,sample_index,energy\n").unwrap();
        assert!(matches!(read_samples_csv(&path), Err(Error::Io { .. })));
    }
}
