//! Data-parallel map over independent work items, with a sequential
//! fallback when the `parallel` feature is disabled.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    #[default]
    Sequential,
    /// Rayon-backed; degrades to sequential without the `parallel` feature.
    Parallel,
}

#[cfg(feature = "parallel")]
pub fn map_items<T, U, F>(mode: ExecMode, items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    match mode {
        ExecMode::Sequential => items.into_iter().map(f).collect(),
        ExecMode::Parallel => items.into_par_iter().map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map_items<T, U, F>(_mode: ExecMode, items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    items.into_iter().map(f).collect()
}
