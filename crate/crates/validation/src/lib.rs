//! Acceptance checks for the splitpack crates. Everything lives in
//! `tests/acceptance.rs`; run it with `cargo test -p splitpack-validation`.
