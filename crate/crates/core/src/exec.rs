//! Index-ordered map over independent tasks, parallel when the `parallel`
//! feature is enabled.

/// How independent tasks (bootstrap fits, model sweeps) are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    Sequential,
    /// Uses the rayon pool; identical to `Sequential` without the
    /// `parallel` feature.
    #[default]
    Parallel,
}

/// Applies `f` to `0..n` and returns results in index order regardless of
/// scheduling.
pub fn map_indexed<T, F>(mode: ExecMode, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match mode {
        #[cfg(feature = "parallel")]
        ExecMode::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}
