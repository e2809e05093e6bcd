use std::fmt;

/// Marks an error as a broken internal invariant rather than bad input.
#[derive(Debug)]
pub struct Internal(pub String);

impl fmt::Display for Internal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "internal invariant violated: {}", self.0)
    }
}

impl std::error::Error for Internal {}

pub const EXIT_INPUT: u8 = 1;
pub const EXIT_INTERNAL: u8 = 2;

pub fn exit_code(err: &anyhow::Error) -> u8 {
    if err.chain().any(|e| e.is::<Internal>()) {
        EXIT_INTERNAL
    } else {
        EXIT_INPUT
    }
}
