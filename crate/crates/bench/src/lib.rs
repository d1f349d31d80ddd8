//! Criterion benchmarks for the ΔE kernels.
