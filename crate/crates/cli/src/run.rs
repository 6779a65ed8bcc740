//! The `flow` command: runs a manifest and writes its outputs.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use mmdflow::{flow, FlowTrace, ParticleCloud, TraceRow};

use crate::manifest::RunManifest;
use crate::Failure;

/// Header of `trace.csv`.
pub const TRACE_HEADER: [&str; 5] = ["iter", "time", "mmd2", "w2", "wall_ms"];

/// Everything resolved from a manifest, ready to run.
pub struct Prepared {
    pub manifest: RunManifest,
    pub profile: mmdflow::RadialProfile,
    pub target: ParticleCloud,
    pub init: ParticleCloud,
    pub config: mmdflow::FlowConfig,
}

/// Resolves and validates a manifest without touching the output directory.
pub fn prepare(manifest: RunManifest) -> Result<Prepared, Failure> {
    let target = manifest.target_cloud().map_err(Failure::Usage)?;
    let init = manifest.init_cloud(&target).map_err(Failure::Usage)?;
    let profile = manifest.profile(target.dim()).map_err(Failure::Usage)?;
    let config = manifest.flow_config().map_err(Failure::Usage)?;
    if let mmdflow::Summation::Sliced(s) = config.summation {
        let d = target.dim();
        mmdflow::slicing::SliceKernel::for_profile(&profile, d).map_err(|e| Failure::Usage(e.to_string()))?;
        let per_block = (d + 1) * if s.antipodal { 2 } else { 1 };
        if s.directions % per_block != 0 {
            return Err(Failure::Usage(format!(
                "sliced summation in R^{d} needs a multiple of {per_block} directions, got {}",
                s.directions
            )));
        }
    }
    Ok(Prepared { manifest, profile, target, init, config })
}

/// Runs a prepared flow, writing `manifest.toml`, one `snapshot_{iter}.csv`
/// per checkpoint and finally `trace.csv` into the output directory.
pub fn execute(p: &Prepared) -> Result<FlowTrace, Failure> {
    let out = &p.manifest.out;
    let io = |what: &str, path: &Path, e: &dyn std::fmt::Display| {
        Failure::Runtime(format!("cannot {what} {}: {e}", path.display()))
    };
    fs::create_dir_all(out).map_err(|e| io("create", out, &e))?;
    let manifest_path = out.join("manifest.toml");
    fs::write(&manifest_path, p.manifest.to_toml()).map_err(|e| io("write", &manifest_path, &e))?;

    let mut snapshot_err = None;
    let trace = flow::run_flow_with(&p.profile, &p.init, &p.target, &p.config, |row, state| {
        if snapshot_err.is_none() {
            let path = snapshot_path(out, row.iter);
            if let Err(e) = state.write_csv(&path) {
                snapshot_err = Some(Failure::Runtime(e.to_string()));
            }
        }
    })
    .map_err(|e| Failure::Runtime(e.to_string()))?;
    if let Some(e) = snapshot_err {
        return Err(e);
    }
    write_trace(&out.join("trace.csv"), trace.rows())?;
    Ok(trace)
}

pub fn snapshot_path(out: &Path, iter: usize) -> PathBuf {
    out.join(format!("snapshot_{iter}.csv"))
}

/// Writes the trace to a temporary file and renames it into place, so a
/// reader never sees a partial trace.
pub fn write_trace(path: &Path, rows: &[TraceRow]) -> Result<(), Failure> {
    let tmp = path.with_extension("csv.tmp");
    let fail = |e: &dyn std::fmt::Display| Failure::Runtime(format!("cannot write {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(&tmp).map_err(|e| fail(&e))?;
    w.write_record(TRACE_HEADER).map_err(|e| fail(&e))?;
    for r in rows {
        w.write_record([r.iter.to_string(), r.time.to_string(), r.mmd2.to_string(), r.w2.to_string(), r.wall_ms.to_string()])
            .map_err(|e| fail(&e))?;
    }
    let mut file = w.into_inner().map_err(|e| fail(&e))?;
    file.flush().map_err(|e| fail(&e))?;
    fs::rename(&tmp, path).map_err(|e| fail(&e))
}
