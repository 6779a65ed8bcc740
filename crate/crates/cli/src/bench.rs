//! The `bench` command: wall time of the Annulus flow per kernel.

use std::io::Write;

use mmdflow::flow;

use crate::manifest::{KernelName, Preset, RunManifest};
use crate::run;

pub const KERNELS: [KernelName; 4] = [KernelName::Gauss, KernelName::Snd, KernelName::Nd, KernelName::Snd4];

pub const BENCH_HEADER: &str = "kernel,iters,wall_ms,us_per_iter,mmd2_final";

/// Runs the Annulus preset for `iters` steps with every kernel and writes
/// one CSV row per kernel. A kernel whose run fails is reported with NaN
/// values rather than aborting the benchmark.
pub fn run(iters: usize, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "{BENCH_HEADER}")?;
    for kernel in KERNELS {
        let mut m = RunManifest::preset(Preset::Annulus);
        m.kernel.kind = kernel;
        m.flow.iters = iters;
        m.flow.checkpoints = crate::manifest::Checkpoints::List(vec![iters]);
        m.flow.skip_w2 = true;
        let name = format!("{kernel:?}").to_lowercase();
        let result = run::prepare(m)
            .ok()
            .and_then(|p| flow::run_flow(&p.profile, &p.init, &p.target, &p.config).ok())
            .and_then(|t| t.last().copied());
        match result {
            Some(row) => {
                let per = if iters == 0 { 0.0 } else { 1e3 * row.wall_ms / iters as f64 };
                writeln!(out, "{name},{iters},{:.3},{per:.3},{:e}", row.wall_ms, row.mmd2)?
            }
            None => writeln!(out, "{name},{iters},NaN,NaN,NaN")?,
        }
        out.flush()?;
    }
    Ok(())
}
