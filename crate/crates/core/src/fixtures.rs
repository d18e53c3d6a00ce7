//! The machines shipped with the crate, with a standard input and tableau
//! shape for each.

use alloc::vec::Vec;

use alloc::string::String;

use crate::machine::{running_time, Dims, MachineSpec};
use crate::program;

pub const UNARY_INCREMENT: &str = include_str!("../programs/unary-increment.tm");
pub const PALINDROME_CHECK: &str = include_str!("../programs/palindrome-check.tm");
pub const BINARY_ADD: &str = include_str!("../programs/binary-add.tm");

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Fixture {
    name: &'static str,
    source: &'static str,
    input: &'static str,
    dims: Dims,
}

impl Fixture {
    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn source(&self) -> &'static str {
        self.source
    }

    pub fn input(&self) -> &'static str {
        self.input
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    /// Parses the shipped program; the sources are tested, so this cannot fail.
    pub fn spec(&self) -> MachineSpec {
        program::parse(self.source).expect("shipped program parses")
    }
}

pub fn unary_increment() -> Fixture {
    Fixture {
        name: "unary-increment",
        source: UNARY_INCREMENT,
        input: "111",
        dims: Dims {
            rows: 16,
            cols: 16,
            lambda: 8,
        },
    }
}

pub fn palindrome_check() -> Fixture {
    Fixture {
        name: "palindrome-check",
        source: PALINDROME_CHECK,
        input: "abba",
        dims: Dims {
            rows: 64,
            cols: 16,
            lambda: 8,
        },
    }
}

pub fn binary_add() -> Fixture {
    Fixture {
        name: "binary-add",
        source: BINARY_ADD,
        input: "0101+11",
        dims: Dims {
            rows: 256,
            cols: 16,
            lambda: 8,
        },
    }
}

pub fn all() -> Vec<Fixture> {
    alloc::vec![unary_increment(), palindrome_check(), binary_add()]
}

pub fn by_name(name: &str) -> Option<Fixture> {
    all().into_iter().find(|f| f.name == name)
}

/// Longest input `a…a` on which the palindrome checker fits in `dims` and
/// halts within `max_rows` rows, with its running time. Running time grows
/// quadratically in the length, so doubling `max_rows` roughly doubles `t`.
pub fn sized_palindrome(dims: Dims, max_rows: u32) -> Option<(String, u32)> {
    let spec = palindrome_check().spec();
    let mut best = None;
    for m in 1..=dims.cols {
        let input: String = core::iter::repeat_n('a', m as usize).collect();
        match running_time(&spec, &input, dims) {
            Ok(t) if t <= max_rows => best = Some((input, t)),
            _ => break,
        }
    }
    best
}
