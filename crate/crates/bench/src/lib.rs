//! Criterion benchmarks for the localization and classifier hot paths; see `benches/`.
