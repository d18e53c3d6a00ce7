//! Deterministic single-tape machines and their computation tableaus.
//!
//! A tableau is a `T × S` grid: row 1 is the initial configuration, every
//! later row follows from its predecessor by one transition, and the row that
//! enters a halting state is normalized so the output sits in block 1 with the
//! head parked on cell 1. Rows after that are blank.
//!
//! Rows are cut into blocks of `λ` cells. A cell is encoded as two bytes:
//! the symbol id, then `0` for "no head" or `k + 1` for "head here in state k".

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Symbol = u8;
pub type State = u8;

/// Largest number of states a spec may declare; state byte 0 means "no head".
pub const MAX_STATES: usize = 254;
pub const MAX_SYMBOLS: usize = 255;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Move {
    Left,
    Right,
    Stay,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Transition {
    pub next: State,
    pub write: Symbol,
    pub movement: Move,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("alphabet must contain between 1 and {MAX_SYMBOLS} symbols")]
    AlphabetSize,
    #[error("duplicate symbol {0:?}")]
    DuplicateSymbol(char),
    #[error("blank symbol is not in the alphabet")]
    BlankNotInAlphabet,
    #[error("too many states (at most {MAX_STATES})")]
    TooManyStates,
    #[error("no halting state declared")]
    NoHaltingState,
    #[error("state {0} has no transition on symbol {1:?}")]
    MissingTransition(String, char),
    #[error("halting state {0} must not have transitions")]
    TransitionFromHalting(String),
    #[error("duplicate transition for state {0} on symbol {1:?}")]
    DuplicateTransition(String, char),
    #[error("state or symbol index out of range")]
    OutOfRange,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum MachineError {
    #[error("head would leave the tape at column {column}")]
    HeadOutOfBounds { column: i64 },
    #[error("row carries {heads} heads, expected exactly one")]
    MalformedRow { heads: usize },
    #[error("machine halted with the head at column {column}, outside the output block")]
    HaltOutsideOutputBlock { column: usize },
    #[error("output does not fit in the first block")]
    OutputTooLarge,
    #[error("machine did not halt within {limit} rows")]
    TimeExceeded { limit: u32 },
    #[error("machine needs more than {limit} cells")]
    SpaceExceeded { limit: u32 },
    #[error("input symbol {0:?} is not in the alphabet")]
    UnknownSymbol(char),
    #[error("row has no head")]
    NoHead,
    #[error("window carries more than one head")]
    MultipleHeads,
    #[error("block encoding is malformed")]
    MalformedBlock,
    #[error("invalid dimensions: {0}")]
    InvalidDims(&'static str),
}

/// A deterministic single-tape Turing machine with a total transition table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MachineSpec {
    name: String,
    symbols: Vec<char>,
    blank: Symbol,
    states: Vec<String>,
    start: State,
    halting: Vec<bool>,
    table: Vec<Option<Transition>>,
}

impl MachineSpec {
    /// Builds a spec and checks that every non-halting `(state, symbol)` pair
    /// has exactly one transition and halting states have none.
    pub fn new(
        name: impl Into<String>,
        symbols: Vec<char>,
        blank: char,
        states: Vec<String>,
        start: State,
        halting: &[State],
        transitions: impl IntoIterator<Item = (State, Symbol, Transition)>,
    ) -> Result<Self, SpecError> {
        if symbols.is_empty() || symbols.len() > MAX_SYMBOLS {
            return Err(SpecError::AlphabetSize);
        }
        for (k, c) in symbols.iter().enumerate() {
            if symbols[..k].contains(c) {
                return Err(SpecError::DuplicateSymbol(*c));
            }
        }
        let blank = symbols
            .iter()
            .position(|&c| c == blank)
            .ok_or(SpecError::BlankNotInAlphabet)? as Symbol;
        if states.is_empty() || states.len() > MAX_STATES {
            return Err(SpecError::TooManyStates);
        }
        if start as usize >= states.len() {
            return Err(SpecError::OutOfRange);
        }
        let mut halt_flags = vec![false; states.len()];
        for &h in halting {
            *halt_flags.get_mut(h as usize).ok_or(SpecError::OutOfRange)? = true;
        }
        if !halt_flags.iter().any(|&h| h) {
            return Err(SpecError::NoHaltingState);
        }

        let nsym = symbols.len();
        let mut table = vec![None; states.len() * nsym];
        for (q, s, tr) in transitions {
            let (qi, si) = (q as usize, s as usize);
            if qi >= states.len()
                || si >= nsym
                || tr.next as usize >= states.len()
                || tr.write as usize >= nsym
            {
                return Err(SpecError::OutOfRange);
            }
            if halt_flags[qi] {
                return Err(SpecError::TransitionFromHalting(states[qi].clone()));
            }
            let slot = &mut table[qi * nsym + si];
            if slot.is_some() {
                return Err(SpecError::DuplicateTransition(states[qi].clone(), symbols[si]));
            }
            *slot = Some(tr);
        }
        for (qi, halts) in halt_flags.iter().enumerate() {
            if *halts {
                continue;
            }
            for si in 0..nsym {
                if table[qi * nsym + si].is_none() {
                    return Err(SpecError::MissingTransition(states[qi].clone(), symbols[si]));
                }
            }
        }

        Ok(Self {
            name: name.into(),
            symbols,
            blank,
            states,
            start,
            halting: halt_flags,
            table,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn blank(&self) -> Symbol {
        self.blank
    }

    pub fn start(&self) -> State {
        self.start
    }

    pub fn is_halting(&self, state: State) -> bool {
        self.halting.get(state as usize).copied().unwrap_or(false)
    }

    pub fn halting_states(&self) -> impl Iterator<Item = State> + '_ {
        self.halting
            .iter()
            .enumerate()
            .filter(|(_, h)| **h)
            .map(|(k, _)| k as State)
    }

    pub fn symbol_id(&self, c: char) -> Option<Symbol> {
        self.symbols.iter().position(|&s| s == c).map(|k| k as Symbol)
    }

    pub fn symbol_char(&self, s: Symbol) -> char {
        self.symbols[s as usize]
    }

    /// `None` for halting states.
    pub fn transition(&self, state: State, symbol: Symbol) -> Option<Transition> {
        self.table
            .get(state as usize * self.symbols.len() + symbol as usize)
            .copied()
            .flatten()
    }

    /// Maps an input string to symbol ids.
    pub fn encode_input(&self, input: &str) -> Result<Vec<Symbol>, MachineError> {
        input
            .chars()
            .map(|c| self.symbol_id(c).ok_or(MachineError::UnknownSymbol(c)))
            .collect()
    }

    pub fn blank_cell(&self) -> Cell {
        Cell {
            symbol: self.blank,
            head: None,
        }
    }
}

/// Tableau shape: `rows` (T) is a power of two, `cols` (S) is a multiple of
/// `lambda` and `cols / lambda` (B) is a power of two.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub rows: u32,
    pub cols: u32,
    pub lambda: u32,
}

impl Dims {
    pub const DEFAULT_LAMBDA: u32 = 8;

    pub fn new(rows: u32, cols: u32, lambda: u32) -> Result<Self, MachineError> {
        if rows == 0 || !rows.is_power_of_two() {
            return Err(MachineError::InvalidDims("T must be a power of two"));
        }
        if lambda == 0 || cols == 0 || cols % lambda != 0 {
            return Err(MachineError::InvalidDims("S must be a positive multiple of lambda"));
        }
        if !(cols / lambda).is_power_of_two() {
            return Err(MachineError::InvalidDims("S / lambda must be a power of two"));
        }
        if lambda > 127 {
            return Err(MachineError::InvalidDims("lambda must be at most 127"));
        }
        Ok(Self { rows, cols, lambda })
    }

    /// Rounds `T` up to a power of two and `S` up to `λ` times a power of two.
    pub fn rounded(rows: u32, cols: u32, lambda: u32) -> Result<Self, MachineError> {
        if lambda == 0 {
            return Err(MachineError::InvalidDims("lambda must be positive"));
        }
        let rows = rows.max(1).checked_next_power_of_two();
        let blocks = cols.max(1).div_ceil(lambda).checked_next_power_of_two();
        match (rows, blocks) {
            (Some(r), Some(b)) => Self::new(r, b * lambda, lambda),
            _ => Err(MachineError::InvalidDims("dimensions overflow")),
        }
    }

    pub fn blocks(&self) -> u32 {
        self.cols / self.lambda
    }

    pub fn log_rows(&self) -> u32 {
        self.rows.trailing_zeros()
    }

    pub fn log_blocks(&self) -> u32 {
        self.blocks().trailing_zeros()
    }

    /// Bytes in one encoded block.
    pub fn block_bytes(&self) -> usize {
        2 * self.lambda as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Cell {
    pub symbol: Symbol,
    pub head: Option<State>,
}

impl Cell {
    pub fn encode(&self) -> [u8; 2] {
        [self.symbol, self.head.map_or(0, |q| q + 1)]
    }
}

/// Encodes cells as `symbol, state+1|0` byte pairs.
pub fn encode_cells(cells: &[Cell]) -> Vec<u8> {
    cells.iter().flat_map(|c| c.encode()).collect()
}

/// Decodes a block, rejecting odd lengths and out-of-range symbol or state bytes.
pub fn decode_cells(spec: &MachineSpec, bytes: &[u8]) -> Result<Vec<Cell>, MachineError> {
    if bytes.len() % 2 != 0 {
        return Err(MachineError::MalformedBlock);
    }
    bytes
        .chunks_exact(2)
        .map(|pair| {
            let (sym, st) = (pair[0], pair[1]);
            if sym as usize >= spec.symbols.len() || st as usize > spec.states.len() {
                return Err(MachineError::MalformedBlock);
            }
            Ok(Cell {
                symbol: sym,
                head: st.checked_sub(1),
            })
        })
        .collect()
}

/// One configuration: exactly `S` cells.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Row {
    cells: Vec<Cell>,
}

impl Row {
    pub fn new(cells: Vec<Cell>) -> Self {
        Self { cells }
    }

    pub fn blank(spec: &MachineSpec, cols: u32) -> Self {
        Self::new(vec![spec.blank_cell(); cols as usize])
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cells_mut(&mut self) -> &mut [Cell] {
        &mut self.cells
    }

    /// Zero-based column and state of the unique head, `None` for a blank row.
    pub fn head(&self) -> Result<Option<(usize, State)>, MachineError> {
        let mut found = None;
        let mut heads = 0;
        for (k, c) in self.cells.iter().enumerate() {
            if let Some(q) = c.head {
                heads += 1;
                found = Some((k, q));
            }
        }
        match heads {
            0 | 1 => Ok(found),
            _ => Err(MachineError::MalformedRow { heads }),
        }
    }

    /// Cells of 1-based block `j`.
    pub fn block(&self, j: u32, lambda: u32) -> &[Cell] {
        let lo = (j as usize - 1) * lambda as usize;
        &self.cells[lo..lo + lambda as usize]
    }

    pub fn block_bytes(&self, j: u32, lambda: u32) -> Vec<u8> {
        encode_cells(self.block(j, lambda))
    }
}

/// Block `b_{ij}` of a tableau.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub row: u32,
    pub col: u32,
    pub cells: Vec<Cell>,
}

impl Block {
    pub fn bytes(&self) -> Vec<u8> {
        encode_cells(&self.cells)
    }

    pub fn from_bytes(
        spec: &MachineSpec,
        row: u32,
        col: u32,
        bytes: &[u8],
    ) -> Result<Self, MachineError> {
        Ok(Self {
            row,
            col,
            cells: decode_cells(spec, bytes)?,
        })
    }
}

/// Splits row `i` into its `S / λ` blocks.
pub fn blocks_of_row(row: &Row, i: u32, lambda: u32) -> Vec<Block> {
    row.cells
        .chunks(lambda as usize)
        .enumerate()
        .map(|(k, cells)| Block {
            row: i,
            col: k as u32 + 1,
            cells: cells.to_vec(),
        })
        .collect()
}

/// Block holding the head, and whether the head sits on the first or last
/// cell of that block (so a move may cross into a neighbour).
pub fn active_block_window(row: &Row, lambda: u32) -> Result<(u32, bool), MachineError> {
    let (col, _) = row.head()?.ok_or(MachineError::NoHead)?;
    let lambda = lambda as usize;
    let j = col / lambda + 1;
    let offset = col % lambda;
    Ok((j as u32, offset == 0 || offset == lambda - 1))
}

/// Result of stepping a row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    Next(Row),
    Halted,
}

/// Applies one transition to a row.
///
/// The transition that enters a halting state produces the output row: the
/// head must have been in block 1, everything outside block 1 must be blank
/// afterwards, and the head is parked on cell 1 in the halting state.
pub fn step(spec: &MachineSpec, row: &Row, lambda: u32) -> Result<Step, MachineError> {
    let heads = row.cells.iter().filter(|c| c.head.is_some()).count();
    if heads != 1 {
        return Err(MachineError::MalformedRow { heads });
    }
    let (col, state) = row.head()?.expect("one head");
    if spec.is_halting(state) {
        return Ok(Step::Halted);
    }
    let cell = row.cells[col];
    let tr = spec
        .transition(state, cell.symbol)
        .expect("total transition table");
    let target = match tr.movement {
        Move::Left => col as i64 - 1,
        Move::Right => col as i64 + 1,
        Move::Stay => col as i64,
    };
    if target < 0 || target >= row.cells.len() as i64 {
        return Err(MachineError::HeadOutOfBounds { column: target + 1 });
    }

    let mut next = row.clone();
    next.cells[col] = Cell {
        symbol: tr.write,
        head: None,
    };
    if spec.is_halting(tr.next) {
        if col >= lambda as usize {
            return Err(MachineError::HaltOutsideOutputBlock { column: col + 1 });
        }
        if next.cells[lambda as usize..]
            .iter()
            .any(|c| c.symbol != spec.blank)
        {
            return Err(MachineError::OutputTooLarge);
        }
        next.cells[0].head = Some(tr.next);
    } else {
        next.cells[target as usize].head = Some(tr.next);
    }
    Ok(Step::Next(next))
}

/// Computes block `j` of row `i` from blocks `j-1, j, j+1` of row `i-1`.
///
/// `window[0]` and `window[2]` are the neighbours; `None` means the
/// neighbour lies outside the row and is read as blank. `blocks` is `B`.
pub fn local_transition(
    spec: &MachineSpec,
    window: [Option<&[Cell]>; 3],
    j: u32,
    blocks: u32,
) -> Result<Vec<Cell>, MachineError> {
    let mid = window[1].ok_or(MachineError::MalformedBlock)?;
    let lambda = mid.len();
    if window.iter().flatten().any(|b| b.len() != lambda) {
        return Err(MachineError::MalformedBlock);
    }
    let blank = vec![spec.blank_cell(); lambda];
    let mut cells: Vec<Cell> = Vec::with_capacity(3 * lambda);
    for part in window {
        cells.extend_from_slice(part.unwrap_or(&blank));
    }

    let mut head = None;
    for (k, c) in cells.iter().enumerate() {
        if let Some(q) = c.head {
            if head.is_some() {
                return Err(MachineError::MultipleHeads);
            }
            head = Some((k, q));
        }
    }
    let Some((k, state)) = head else {
        return Ok(mid.to_vec());
    };
    if spec.is_halting(state) {
        // The row after the output row is blank.
        return Ok(blank);
    }

    // Global zero-based column of window position k.
    let origin = (j as i64 - 2) * lambda as i64;
    let column = origin + k as i64;
    let width = blocks as i64 * lambda as i64;
    let tr = spec
        .transition(state, cells[k].symbol)
        .expect("total transition table");
    let target = match tr.movement {
        Move::Left => column - 1,
        Move::Right => column + 1,
        Move::Stay => column,
    };
    if target < 0 || target >= width {
        return Err(MachineError::HeadOutOfBounds { column: target + 1 });
    }

    cells[k] = Cell {
        symbol: tr.write,
        head: None,
    };
    let lo = lambda;
    let mut out = cells[lo..lo + lambda].to_vec();
    if spec.is_halting(tr.next) {
        if column >= lambda as i64 {
            return Err(MachineError::HaltOutsideOutputBlock {
                column: column as usize + 1,
            });
        }
        if j >= 2 && out.iter().any(|c| c.symbol != spec.blank) {
            return Err(MachineError::OutputTooLarge);
        }
        if j == 1 {
            out[0].head = Some(tr.next);
        }
    } else {
        let local = target - origin - lambda as i64;
        if (0..lambda as i64).contains(&local) {
            out[local as usize].head = Some(tr.next);
        }
    }
    Ok(out)
}

/// Row 1: the input left-justified, head on cell 1 in the start state.
pub fn initial_row(spec: &MachineSpec, input: &[Symbol], cols: u32) -> Result<Row, MachineError> {
    if input.len() > cols as usize {
        return Err(MachineError::SpaceExceeded { limit: cols });
    }
    let mut row = Row::blank(spec, cols);
    for (cell, &s) in row.cells.iter_mut().zip(input) {
        cell.symbol = s;
    }
    row.cells[0].head = Some(spec.start());
    Ok(row)
}

/// Non-blank rows of a (possibly forged) tableau; rows past the end are blank.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    dims: Dims,
    rows: Vec<Row>,
    blank: Row,
}

impl Trace {
    pub fn new(spec: &MachineSpec, dims: Dims, rows: Vec<Row>) -> Self {
        debug_assert!(rows.len() <= dims.rows as usize);
        debug_assert!(rows.iter().all(|r| r.cells.len() == dims.cols as usize));
        Self {
            dims,
            rows,
            blank: Row::blank(spec, dims.cols),
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    /// Number of stored (non-blank) rows.
    pub fn len(&self) -> u32 {
        self.rows.len() as u32
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Row `i`, 1-based.
    pub fn row(&self, i: u32) -> &Row {
        debug_assert!(i >= 1 && i <= self.dims.rows);
        self.rows.get(i as usize - 1).unwrap_or(&self.blank)
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn blank_row(&self) -> &Row {
        &self.blank
    }

    pub fn block_bytes(&self, i: u32, j: u32) -> Vec<u8> {
        self.row(i).block_bytes(j, self.dims.lambda)
    }

    /// Number of blocks of row `i` that differ from row `i - 1`.
    pub fn changed_blocks(&self, i: u32) -> u32 {
        let lambda = self.dims.lambda;
        let (prev, cur) = (self.row(i - 1), self.row(i));
        (1..=self.dims.blocks())
            .filter(|&j| prev.block(j, lambda) != cur.block(j, lambda))
            .count() as u32
    }
}

/// The honest computation table of a halting run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tableau {
    spec_name: String,
    input: String,
    output: String,
    trace: Trace,
}

impl Tableau {
    pub fn spec_name(&self) -> &str {
        &self.spec_name
    }

    pub fn input(&self) -> &str {
        &self.input
    }

    /// The output `a`.
    pub fn output(&self) -> &str {
        &self.output
    }

    /// Index `t` of the last non-blank row.
    pub fn time(&self) -> u32 {
        self.trace.len()
    }

    pub fn dims(&self) -> Dims {
        self.trace.dims
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn row(&self, i: u32) -> &Row {
        self.trace.row(i)
    }

    pub fn into_trace(self) -> Trace {
        self.trace
    }
}

/// Output string spelled by block 1 of an output row, trailing blanks dropped.
pub fn output_of_block(spec: &MachineSpec, cells: &[Cell]) -> String {
    let end = cells
        .iter()
        .rposition(|c| c.symbol != spec.blank)
        .map_or(0, |k| k + 1);
    cells[..end].iter().map(|c| spec.symbol_char(c.symbol)).collect()
}

/// Runs the machine to completion and materializes its tableau.
pub fn run_tableau(spec: &MachineSpec, input: &str, dims: Dims) -> Result<Tableau, MachineError> {
    run_with(spec, input, dims, |_, _| {})
}

/// [`run_tableau`], calling `observe(i, row)` as each row is produced.
pub fn run_with(
    spec: &MachineSpec,
    input: &str,
    dims: Dims,
    mut observe: impl FnMut(u32, &Row),
) -> Result<Tableau, MachineError> {
    let symbols = spec.encode_input(input)?;
    let first = initial_row(spec, &symbols, dims.cols)?;
    let lambda = dims.lambda;
    if spec.is_halting(spec.start())
        && first.cells[lambda as usize..]
            .iter()
            .any(|c| c.symbol != spec.blank)
    {
        return Err(MachineError::OutputTooLarge);
    }

    observe(1, &first);
    let mut rows = vec![first];
    loop {
        let last = rows.last().expect("non-empty");
        let next = match step(spec, last, lambda) {
            Ok(Step::Halted) => break,
            Ok(Step::Next(row)) => row,
            Err(MachineError::HeadOutOfBounds { column }) if column > dims.cols as i64 => {
                return Err(MachineError::SpaceExceeded { limit: dims.cols })
            }
            Err(e) => return Err(e),
        };
        if rows.len() as u32 >= dims.rows {
            return Err(MachineError::TimeExceeded { limit: dims.rows });
        }
        observe(rows.len() as u32 + 1, &next);
        rows.push(next);
    }

    let output = output_of_block(spec, rows.last().expect("non-empty").block(1, lambda));
    Ok(Tableau {
        spec_name: spec.name().into(),
        input: input.into(),
        output,
        trace: Trace::new(spec, dims, rows),
    })
}

/// The first `limit` rows of the run, fewer if it halts sooner.
pub fn run_prefix(spec: &MachineSpec, input: &str, dims: Dims, limit: u32) -> Result<Vec<Row>, MachineError> {
    let symbols = spec.encode_input(input)?;
    let mut rows = vec![initial_row(spec, &symbols, dims.cols)?];
    while (rows.len() as u32) < limit.min(dims.rows) {
        match step(spec, rows.last().expect("non-empty"), dims.lambda) {
            Ok(Step::Halted) => break,
            Ok(Step::Next(row)) => rows.push(row),
            Err(MachineError::HeadOutOfBounds { column }) if column > dims.cols as i64 => {
                return Err(MachineError::SpaceExceeded { limit: dims.cols })
            }
            Err(e) => return Err(e),
        }
    }
    Ok(rows)
}

/// Running time `t` without materializing the tableau.
pub fn running_time(spec: &MachineSpec, input: &str, dims: Dims) -> Result<u32, MachineError> {
    let symbols = spec.encode_input(input)?;
    let mut row = initial_row(spec, &symbols, dims.cols)?;
    let mut t = 1;
    loop {
        match step(spec, &row, dims.lambda) {
            Ok(Step::Halted) => return Ok(t),
            Ok(Step::Next(next)) => row = next,
            Err(MachineError::HeadOutOfBounds { column }) if column > dims.cols as i64 => {
                return Err(MachineError::SpaceExceeded { limit: dims.cols })
            }
            Err(e) => return Err(e),
        }
        if t >= dims.rows {
            return Err(MachineError::TimeExceeded { limit: dims.rows });
        }
        t += 1;
    }
}
