//! ε-sweeps spread over worker threads.
//!
//! Workers pull ε values from a shared counter and keep their results in
//! memory. The report is assembled in descending ε, so it does not depend on
//! the thread count or on completion order.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use qwell_sp_core::lab::sweep::{assemble_report, limit_for, measure_epsilon};
use qwell_sp_core::lab::{ConvergenceReport, SweepConfig};

use crate::error::Result;

pub const THREADS_VAR: &str = "QWELL_SP_THREADS";

/// `QWELL_SP_THREADS` if set to a positive integer, else the core count.
pub fn thread_count() -> usize {
    std::env::var(THREADS_VAR)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| thread::available_parallelism().map_or(1, |n| n.get()))
}

pub fn run_sweep(config: &SweepConfig) -> Result<ConvergenceReport> {
    run_sweep_with_threads(config, thread_count())
}

pub fn run_sweep_with_threads(config: &SweepConfig, threads: usize) -> Result<ConvergenceReport> {
    config.validate()?;
    let limit = limit_for(&config.epsilons, config.h, config.tol, config.limit_truncation)?;
    log::info!(
        "limit problem: truncation {}, e10 = {:.10}",
        limit.truncation,
        limit.e10
    );
    let next = AtomicUsize::new(0);
    let outcomes = Mutex::new(Vec::with_capacity(config.epsilons.len()));
    let workers = threads.clamp(1, config.epsilons.len());
    thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&eps) = config.epsilons.get(i) else { break };
                let outcome = measure_epsilon(eps, config, &limit);
                match &outcome {
                    Ok(_) => log::info!("epsilon {eps}: done"),
                    Err(e) => log::warn!("epsilon {eps}: {e}"),
                }
                outcomes.lock().unwrap_or_else(|p| p.into_inner()).push((eps, outcome));
            });
        }
    });
    let outcomes = outcomes.into_inner().unwrap_or_else(|p| p.into_inner());
    Ok(assemble_report(config, &limit, outcomes)?)
}
