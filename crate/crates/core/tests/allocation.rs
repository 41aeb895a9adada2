//! Memory use of the structured solvers grows linearly with the mesh size.

use std::alloc::{GlobalAlloc, Layout, System};
use std::sync::atomic::{AtomicUsize, Ordering};

use hbvm_core::linalg::{lstsq_bordered, solve_abd, solve_babd, BlockSystem, BoundaryRows, IntervalBlocks};
use hbvm_core::{Matrix, Vector};

struct Counting;

static BYTES: AtomicUsize = AtomicUsize::new(0);

unsafe impl GlobalAlloc for Counting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        BYTES.fetch_add(layout.size(), Ordering::Relaxed);
        System.alloc(layout)
    }
    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        System.dealloc(ptr, layout)
    }
}

#[global_allocator]
static ALLOC: Counting = Counting;

fn intervals(n: usize, d: usize, ds: usize, with_h: bool) -> Vec<IntervalBlocks> {
    (0..n)
        .map(|i| {
            let t = i as f64 * 0.01;
            IntervalBlocks {
                v: Matrix::from_fn(ds, d, |r, c| if r % d == c { -1.0 } else { 0.1 * (t + r as f64).sin() }),
                k: Matrix::from_fn(ds, ds, |r, c| if r == c { 1.0 } else { 0.05 * (t + (r * c) as f64).cos() }),
                l: Matrix::from_fn(d, d, |r, c| if r == c { -1.0 } else { 0.1 * (t - c as f64).sin() }),
                ut: Matrix::from_fn(d, ds, |r, c| 0.1 * (t + (r + c) as f64).cos()),
                stage_rhs: Vector::from_element(ds, 1.0),
                step_rhs: Vector::from_element(d, -1.0),
                h_column: with_h.then(|| (Vector::from_element(ds, 0.3), Vector::from_element(d, 0.2))),
            }
        })
        .collect()
}

/// Total bytes allocated while running `f`.
fn allocated<R>(f: impl FnOnce() -> R) -> usize {
    let before = BYTES.load(Ordering::Relaxed);
    std::hint::black_box(f());
    BYTES.load(Ordering::Relaxed) - before
}

// One test function: the counter is process-wide, so the measurements must not interleave.
#[test]
fn solver_allocations_grow_linearly() {
    let (d, ds) = (6, 12);
    let separated = |n| BlockSystem {
        intervals: intervals(n, d, ds, false),
        boundary: BoundaryRows::Separated {
            ba: Matrix::identity(3, d),
            rhs_a: Vector::zeros(3),
            bb: Matrix::from_fn(3, d, |r, c| if c == r + 3 { 1.0 } else { 0.0 }),
            rhs_b: Vector::zeros(3),
        },
    };
    let coupled = |n| BlockSystem {
        intervals: intervals(n, d, ds, false),
        boundary: BoundaryRows::Coupled { ba: Matrix::identity(d, d), bb: -Matrix::identity(d, d) * 0.5, rhs: Vector::zeros(d) },
    };
    let periodic = |n| BlockSystem {
        intervals: intervals(n, d, ds, true),
        boundary: BoundaryRows::Periodic {
            anchor: Matrix::from_fn(1, d, |_, c| if c == 1 { 1.0 } else { 0.0 }),
            anchor_rhs: Vector::zeros(1),
            energy: Some((Vector::from_element(d, 0.1), 0.5)),
        },
    };
    let cases: [(&str, Box<dyn Fn(usize) -> usize>); 3] = [
        ("ABD", Box::new(|n| {
            let sys = separated(n);
            allocated(|| solve_abd(&sys).unwrap())
        })),
        ("BABD", Box::new(|n| {
            let sys = coupled(n);
            allocated(|| solve_babd(&sys).unwrap())
        })),
        ("least squares", Box::new(|n| {
            let sys = periodic(n);
            allocated(|| lstsq_bordered(&sys).unwrap())
        })),
    ];
    for (name, bytes) in &cases {
        let (small, large) = (bytes(100), bytes(400));
        let ratio = large as f64 / small as f64;
        // Linear growth gives about 4; quadratic storage would give 16.
        assert!(ratio < 5.0, "{name}: {small} -> {large} bytes, ratio {ratio:.2}");
    }
}
