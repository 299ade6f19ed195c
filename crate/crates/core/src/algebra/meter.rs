//! Thread-local operation counters. Tests use these to pin the cost model:
//! encryption spends vector multi-exponentiations, decryption spends vector
//! pairing evaluations.

use std::cell::Cell;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counts {
    pub vector_multi_exps: u64,
    pub vector_pairings: u64,
}

thread_local! {
    static COUNTS: Cell<Counts> = Cell::new(Counts::default());
}

pub fn reset() {
    COUNTS.with(|c| c.set(Counts::default()));
}

pub fn snapshot() -> Counts {
    COUNTS.with(|c| c.get())
}

/// Runs `f` with fresh counters and returns its result plus the counts it
/// accumulated.
pub fn measure<T>(f: impl FnOnce() -> T) -> (T, Counts) {
    let before = snapshot();
    reset();
    let out = f();
    let used = snapshot();
    COUNTS.with(|c| {
        c.set(Counts {
            vector_multi_exps: before.vector_multi_exps + used.vector_multi_exps,
            vector_pairings: before.vector_pairings + used.vector_pairings,
        })
    });
    (out, used)
}

pub(crate) fn bump_vector_multi_exps() {
    COUNTS.with(|c| {
        let mut v = c.get();
        v.vector_multi_exps += 1;
        c.set(v);
    });
}

pub(crate) fn bump_vector_pairings() {
    COUNTS.with(|c| {
        let mut v = c.get();
        v.vector_pairings += 1;
        c.set(v);
    });
}
