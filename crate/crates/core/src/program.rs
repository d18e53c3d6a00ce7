//! Line-oriented machine program text.
//!
//! ```text
//! # comment
//! name: unary-increment
//! alphabet: _ 1
//! blank: _
//! start: q0
//! halt: qh
//! q0 1 -> q0 1 R
//! q0 _ -> qh 1 S
//! ```
//!
//! A `*` in the read position matches every symbol the state does not list
//! explicitly; a `*` in the write position writes back the symbol read.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use thiserror::Error;

use crate::machine::{MachineSpec, Move, SpecError, State, Symbol, Transition};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("missing header `{0}`")]
    MissingHeader(&'static str),
    #[error(transparent)]
    Spec(#[from] SpecError),
}

fn at(line: usize, message: impl ToString) -> ParseError {
    ParseError::Line {
        line,
        message: message.to_string(),
    }
}

fn one_char(line: usize, token: &str) -> Result<char, ParseError> {
    let mut chars = token.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => Ok(c),
        _ => Err(at(line, alloc::format!("symbol `{token}` must be a single character"))),
    }
}

fn intern(states: &mut Vec<String>, s: &str) -> State {
    match states.iter().position(|x| x == s) {
        Some(k) => k as State,
        None => {
            states.push(s.to_string());
            (states.len() - 1) as State
        }
    }
}

struct Rule {
    line: usize,
    state: String,
    read: Option<char>,
    next: String,
    write: Option<char>,
    movement: Move,
}

/// Parses program text into a validated [`MachineSpec`].
pub fn parse(text: &str) -> Result<MachineSpec, ParseError> {
    let mut name = None;
    let mut alphabet: Option<Vec<char>> = None;
    let mut blank = None;
    let mut start = None;
    let mut halt: Option<Vec<String>> = None;
    let mut rules = Vec::new();

    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some((key, value)) = body.split_once(':') {
            let value = value.trim();
            match key.trim() {
                "name" => name = Some(value.to_string()),
                "alphabet" => {
                    let symbols = value
                        .split_whitespace()
                        .map(|t| one_char(line, t))
                        .collect::<Result<Vec<_>, _>>()?;
                    if symbols.contains(&'*') {
                        return Err(at(line, "`*` is reserved"));
                    }
                    alphabet = Some(symbols);
                }
                "blank" => blank = Some(one_char(line, value)?),
                "start" => start = Some(value.to_string()),
                "halt" => halt = Some(value.split_whitespace().map(String::from).collect()),
                other => return Err(at(line, alloc::format!("unknown header `{other}`"))),
            }
            continue;
        }

        let tokens: Vec<&str> = body.split_whitespace().collect();
        let [state, read, "->", next, write, mv] = tokens[..] else {
            return Err(at(line, "expected `<state> <symbol> -> <state> <symbol> <L|R|S>`"));
        };
        let movement = match mv {
            "L" => Move::Left,
            "R" => Move::Right,
            "S" => Move::Stay,
            _ => return Err(at(line, alloc::format!("unknown move `{mv}`"))),
        };
        let wild = |t: &str| -> Result<Option<char>, ParseError> {
            if t == "*" {
                Ok(None)
            } else {
                one_char(line, t).map(Some)
            }
        };
        rules.push(Rule {
            line,
            state: state.to_string(),
            read: wild(read)?,
            next: next.to_string(),
            write: wild(write)?,
            movement,
        });
    }

    let alphabet = alphabet.ok_or(ParseError::MissingHeader("alphabet"))?;
    let blank = blank.ok_or(ParseError::MissingHeader("blank"))?;
    let start = start.ok_or(ParseError::MissingHeader("start"))?;
    let halt = halt.ok_or(ParseError::MissingHeader("halt"))?;

    let mut states: Vec<String> = Vec::new();
    let start_id = intern(&mut states, &start);
    let halt_ids: Vec<State> = halt.iter().map(|h| intern(&mut states, h)).collect();
    let sym = |line: usize, c: char| -> Result<Symbol, ParseError> {
        alphabet
            .iter()
            .position(|&s| s == c)
            .map(|k| k as Symbol)
            .ok_or_else(|| at(line, alloc::format!("symbol `{c}` is not in the alphabet")))
    };

    // (state, symbol) -> (line, transition); explicit lines first, then wildcards.
    let mut table: BTreeMap<(State, Symbol), (usize, Transition)> = BTreeMap::new();
    let mut wildcards = Vec::new();
    for rule in &rules {
        let q = intern(&mut states, &rule.state);
        let next = intern(&mut states, &rule.next);
        if states.len() > crate::machine::MAX_STATES {
            return Err(at(rule.line, "too many states"));
        }
        let Some(read) = rule.read else {
            wildcards.push((q, next, rule));
            continue;
        };
        let read = sym(rule.line, read)?;
        let write = match rule.write {
            Some(c) => sym(rule.line, c)?,
            None => read,
        };
        let tr = Transition {
            next,
            write,
            movement: rule.movement,
        };
        if table.insert((q, read), (rule.line, tr)).is_some() {
            return Err(at(rule.line, "duplicate transition"));
        }
    }
    let mut wild_seen: Vec<State> = Vec::new();
    for (q, next, rule) in wildcards {
        if wild_seen.contains(&q) {
            return Err(at(rule.line, "duplicate wildcard transition"));
        }
        wild_seen.push(q);
        let write = rule.write.map(|c| sym(rule.line, c)).transpose()?;
        for s in 0..alphabet.len() as Symbol {
            table.entry((q, s)).or_insert((
                rule.line,
                Transition {
                    next,
                    write: write.unwrap_or(s),
                    movement: rule.movement,
                },
            ));
        }
    }

    for (&(q, _), &(line, _)) in &table {
        if halt_ids.contains(&q) {
            return Err(at(line, alloc::format!("halting state `{}` has a transition", states[q as usize])));
        }
    }

    let name = name.unwrap_or_else(|| String::from("unnamed"));
    Ok(MachineSpec::new(
        name,
        alphabet,
        blank,
        states,
        start_id,
        &halt_ids,
        table.into_iter().map(|((q, s), (_, tr))| (q, s, tr)),
    )?)
}
