//! Fallible data-parallel map over slices.

use rayon::prelude::*;

pub fn map<T: Sync, U: Send, E: Send>(
    items: &[T],
    f: impl Fn(&T) -> Result<U, E> + Sync + Send,
) -> Result<Vec<U>, E> {
    items.par_iter().map(f).collect()
}
