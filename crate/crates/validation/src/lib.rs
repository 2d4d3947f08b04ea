//! Holds the `acceptance` test target; run it with
//! `cargo test -p msgame-validation --test acceptance`.
