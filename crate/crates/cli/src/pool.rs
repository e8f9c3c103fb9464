//! Fixed-size worker pool over a pre-sorted task list. Results are
//! returned in task order regardless of completion order, so every
//! downstream reduction is independent of the worker count.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

pub fn run_tasks<T, R, F>(tasks: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let n = tasks.len();
    if workers <= 1 || n <= 1 {
        return tasks.iter().map(&f).collect();
    }
    let mut results: Vec<Option<R>> = (0..n).map(|_| None).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        let (tx, rx) = mpsc::channel();
        for _ in 0..workers.min(n) {
            let tx = tx.clone();
            let f = &f;
            let next = &next;
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= n {
                    break;
                }
                if tx.send((i, f(&tasks[i]))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for (i, r) in rx {
            results[i] = Some(r);
        }
    });
    results
        .into_iter()
        .map(|r| r.expect("every task index produced a result"))
        .collect()
}
