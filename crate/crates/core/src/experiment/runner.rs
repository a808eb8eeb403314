use super::config::ExperimentConfig;
use super::ExperimentError;
use crate::analysis::{compute_cqm, RunResult};
use crate::intervention::{realize_scenario, Arm};
use crate::kernel::EventRecord;
use crate::population::ClusterSpec;
use rayon::prelude::*;

/// One (cluster, arm, training count, replicate) cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Cell {
    pub cluster_id: u8,
    pub arm: Arm,
    pub trainings_k: u8,
    pub run_index: u32,
}

pub struct RunOutput {
    pub result: RunResult,
    pub trace: Option<Vec<EventRecord>>,
}

pub fn cells(config: &ExperimentConfig, clusters: &[ClusterSpec]) -> Vec<Cell> {
    let mut out = Vec::new();
    for c in clusters {
        for (arm, k) in config.arms() {
            for j in 0..config.runs_per_cell {
                out.push(Cell { cluster_id: c.cluster_id, arm, trainings_k: k, run_index: j });
            }
        }
    }
    out
}

/// Simulate one measurement year and score it.
pub fn run_cell(
    config: &ExperimentConfig,
    cluster: &ClusterSpec,
    cell: Cell,
    keep_trace: bool,
) -> Result<RunOutput, ExperimentError> {
    let scenario = config.scenario(cell.arm, cell.trainings_k);
    let mut sim = realize_scenario(&scenario, cluster, cell.run_index)?;
    let trace = sim.run_year()?;
    let cqm = compute_cqm(&trace, &sim.state().patients)?;
    Ok(RunOutput {
        result: RunResult {
            cluster_id: cell.cluster_id,
            arm: cell.arm,
            trainings_k: cell.trainings_k,
            run_index: cell.run_index,
            seed: scenario.run_seed(cluster.cluster_id, cell.run_index),
            cqm,
        },
        trace: keep_trace.then_some(trace),
    })
}

/// Run every cell on a pool of `config.parallelism` workers. Results come back
/// sorted by cell whatever the scheduling order.
pub fn run_all(config: &ExperimentConfig, clusters: &[ClusterSpec]) -> Result<Vec<RunOutput>, ExperimentError> {
    let cells = cells(config, clusters);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .map_err(|e| ExperimentError::Pool(e.to_string()))?;
    let mut out = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let cluster = clusters
                    .iter()
                    .find(|c| c.cluster_id == cell.cluster_id)
                    .expect("cells come from these clusters");
                run_cell(config, cluster, *cell, cell.run_index < config.trace_samples)
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    out.sort_by_key(|o| Cell {
        cluster_id: o.result.cluster_id,
        arm: o.result.arm,
        trainings_k: o.result.trainings_k,
        run_index: o.result.run_index,
    });
    Ok(out)
}
