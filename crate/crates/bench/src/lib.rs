//! Criterion benchmarks for the enumeration-heavy parts of `cmtori`; see `benches/`.
