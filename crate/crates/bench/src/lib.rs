//! Benchmark-only crate.  The measured pipelines live in `benches/`; this
//! library intentionally exports nothing.
