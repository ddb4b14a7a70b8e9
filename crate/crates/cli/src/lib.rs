//! Batch front end for `colltur-core`: experiment configs, parameter sweeps
//! and result files.

pub mod config;
pub mod output;
pub mod presets;
pub mod sweep;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "COLLTUR_THREADS";

/// Worker count from the config's request and the environment cap;
/// 0 means one per core.
pub fn thread_count(requested: usize, cap: Option<&str>) -> usize {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let want = if requested == 0 { cores } else { requested };
    match cap.and_then(|c| c.trim().parse::<usize>().ok()).filter(|&c| c > 0) {
        Some(c) => want.min(c),
        None => want,
    }
}
