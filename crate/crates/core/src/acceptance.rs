//! Acceptance suite (filled in below).
