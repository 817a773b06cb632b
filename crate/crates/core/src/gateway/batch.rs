use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

use super::{CompletionRequest, CompletionResult, Gateway, GatewayError};

type Slot = Result<CompletionResult, GatewayError>;

/// Runs `reqs` with at most `parallelism` in flight. Results come back in
/// input order with per-item errors in their slots. Once `cancel` is set no
/// new request starts; unstarted slots are filled with `Cancelled`.
/// `on_done` sees each slot as soon as it finishes.
pub fn complete_batch<G: Gateway + ?Sized>(
    gateway: &G,
    reqs: &[CompletionRequest],
    parallelism: usize,
    cancel: Option<&AtomicBool>,
    on_done: &(dyn Fn(usize, &Slot) + Sync),
) -> Vec<Slot> {
    let workers = parallelism.max(1).min(reqs.len().max(1));
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Slot>>> = Mutex::new(vec![None; reqs.len()]);
    let cancelled = || cancel.is_some_and(|c| c.load(Ordering::SeqCst));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                if cancelled() {
                    break;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(req) = reqs.get(i) else {
                    break;
                };
                let result = req.validate().and_then(|_| gateway.complete(req));
                on_done(i, &result);
                slots.lock().expect("slot lock")[i] = Some(result);
            });
        }
    });

    slots
        .into_inner()
        .expect("slot lock")
        .into_iter()
        .map(|s| s.unwrap_or(Err(GatewayError::Cancelled)))
        .collect()
}
