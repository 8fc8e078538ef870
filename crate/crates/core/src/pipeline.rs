//! Cycle-accurate model of the pipelined multiplier and divider.
//!
//! The datapath is split into four phases. A plan groups consecutive phases
//! into `S` stages, each followed by a register bank. An operand pair
//! injected on cycle `t` leaves the last bank on cycle `t + S`.

use std::collections::VecDeque;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::logmap::{self, LogApprox, SegmentProbe};
use crate::mitchell::{self, DivUnit, MulUnit, OpKind};
use crate::wordcore::{Frac, Word};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Phase {
    /// Parallel 4-bit segment probes of both operands.
    Probe,
    /// Priority logic and log assembly.
    Priority,
    /// Characteristic add/subtract and three-operand fraction add/subtract.
    Combine,
    /// Antilog shift.
    Shift,
}

impl Phase {
    pub const ALL: [Phase; 4] = [Phase::Probe, Phase::Priority, Phase::Combine, Phase::Shift];

    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Probe => "probe",
            Phase::Priority => "priority",
            Phase::Combine => "combine",
            Phase::Shift => "shift",
        }
    }
}

/// Stage index of each phase, in dataflow order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PipelinePlan {
    assignment: [u8; 4],
}

impl PipelinePlan {
    /// Phases must start in stage 0 and each phase stays in the stage of its
    /// predecessor or moves to the next one.
    pub fn new(assignment: [u8; 4]) -> Result<Self> {
        if assignment[0] != 0 {
            return Err(Error::Plan("the first phase must sit in stage 0".into()));
        }
        for w in assignment.windows(2) {
            if w[1] != w[0] && w[1] != w[0] + 1 {
                return Err(Error::Plan(format!(
                    "stage assignment {assignment:?} is not contiguous in dataflow order"
                )));
            }
        }
        Ok(PipelinePlan { assignment })
    }

    /// Balanced default split for `S` stages.
    pub fn canonical(stages: usize) -> Result<Self> {
        let assignment = match stages {
            1 => [0, 0, 0, 0],
            2 => [0, 0, 1, 1],
            3 => [0, 0, 1, 2],
            4 => [0, 1, 2, 3],
            _ => return Err(Error::Plan(format!("{stages} stages (expected 1..=4)"))),
        };
        PipelinePlan::new(assignment)
    }

    pub fn stages(&self) -> usize {
        self.assignment[3] as usize + 1
    }

    pub fn stage_of(&self, phase: Phase) -> usize {
        self.assignment[phase as usize] as usize
    }

    pub fn phases_in(&self, stage: usize) -> Vec<Phase> {
        Phase::ALL
            .into_iter()
            .filter(|p| self.stage_of(*p) == stage)
            .collect()
    }
}

impl fmt::Display for PipelinePlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let stages: Vec<String> = (0..self.stages())
            .map(|s| {
                self.phases_in(s)
                    .iter()
                    .map(|p| p.as_str())
                    .collect::<Vec<_>>()
                    .join("+")
            })
            .collect();
        f.write_str(&stages.join("|"))
    }
}

/// Parses `probe+priority|combine|shift`: stages split by `|`, phases
/// within a stage joined by `+`.
impl FromStr for PipelinePlan {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut assignment = Vec::new();
        for (stage, group) in s.split('|').enumerate() {
            for name in group.split('+') {
                let name = name.trim();
                let phase = Phase::ALL
                    .into_iter()
                    .find(|p| p.as_str() == name)
                    .ok_or_else(|| Error::Plan(format!("unknown phase `{name}`")))?;
                if phase as usize != assignment.len() {
                    return Err(Error::Plan(format!(
                        "phase `{name}` out of dataflow order in `{s}`"
                    )));
                }
                assignment.push(stage as u8);
            }
        }
        let assignment: [u8; 4] = assignment
            .try_into()
            .map_err(|_| Error::Plan(format!("`{s}` does not assign all four phases")))?;
        PipelinePlan::new(assignment)
    }
}

/// The combinational unit wrapped by a pipeline.
#[derive(Clone, Debug)]
pub enum Datapath {
    Mul(MulUnit),
    Div(DivUnit),
}

impl Datapath {
    pub fn kind(&self) -> OpKind {
        match self {
            Datapath::Mul(_) => OpKind::Mul,
            Datapath::Div(_) => OpKind::Div,
        }
    }

    /// Operand widths `(a, b)`.
    pub fn operand_widths(&self) -> (u32, u32) {
        match self {
            Datapath::Mul(u) => (u.width(), u.width()),
            Datapath::Div(u) => (u.dividend_width(), u.n()),
        }
    }

    pub fn check(&self, a: u64, b: u64) -> Result<()> {
        let (wa, wb) = self.operand_widths();
        Word::new(wa, a)?;
        Word::new(wb, b)?;
        match self {
            Datapath::Mul(_) => Ok(()),
            Datapath::Div(u) => u.check(a, b),
        }
    }

    /// Combinational result.
    pub fn eval(&self, a: u64, b: u64) -> Result<u64> {
        self.check(a, b)?;
        match self {
            Datapath::Mul(u) => Ok(u.apply(a, b)),
            Datapath::Div(u) => u.apply(a, b),
        }
    }
}

/// Contents of one register bank.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Data {
    Operands,
    Probed(SegmentProbe, SegmentProbe),
    Logged(LogApprox, LogApprox),
    Combined(i32, Frac),
    Done(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Token {
    a: u64,
    b: u64,
    /// Zero-operand results bypass the log datapath.
    zero: bool,
    data: Data,
}

fn internal(e: Error) -> Error {
    Error::Pipeline(format!("datapath fault on a checked operand pair: {e}"))
}

impl Datapath {
    fn run(&self, phase: Phase, mut tok: Token) -> Result<Token> {
        if tok.zero {
            if phase == Phase::Shift {
                tok.data = Data::Done(0);
            }
            return Ok(tok);
        }
        let (wa, wb) = self.operand_widths();
        tok.data = match (phase, tok.data) {
            (Phase::Probe, Data::Operands) => Data::Probed(
                logmap::probe_segments(Word::new(wa, tok.a)?),
                logmap::probe_segments(Word::new(wb, tok.b)?),
            ),
            (Phase::Priority, Data::Probed(pa, pb)) => {
                let ka = logmap::resolve_priority(&pa).map_err(internal)?;
                let kb = logmap::resolve_priority(&pb).map_err(internal)?;
                Data::Logged(
                    logmap::assemble_log(Word::new(wa, tok.a)?, ka)?,
                    logmap::assemble_log(Word::new(wb, tok.b)?, kb)?,
                )
            }
            (Phase::Combine, Data::Logged(la, lb)) => {
                let (k, frac) = match self {
                    Datapath::Mul(u) => mitchell::combine_mul(u, &la, &lb),
                    Datapath::Div(u) => mitchell::combine_div(u, &la, &lb),
                }
                .map_err(internal)?;
                Data::Combined(k, frac)
            }
            (Phase::Shift, Data::Combined(k, frac)) => Data::Done(
                match self {
                    Datapath::Mul(u) => mitchell::finish_mul(u, k, frac),
                    Datapath::Div(u) => mitchell::finish_div(u, k, frac),
                }
                .map_err(internal)?,
            ),
            (p, d) => {
                return Err(Error::Pipeline(format!(
                    "phase {} received {d:?}",
                    p.as_str()
                )))
            }
        };
        Ok(tok)
    }
}

/// One row of a cycle trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TraceRow {
    pub cycle: u64,
    pub input: Option<(u64, u64)>,
    pub output: Option<u64>,
}

pub const TRACE_HEADER: &str = "cycle,in_a,in_b,out,valid";

pub fn trace_to_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in rows {
        let (a, b) = r
            .input
            .map_or((String::new(), String::new()), |(a, b)| (a.to_string(), b.to_string()));
        let o = r.output.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{a},{b},{o},{}", r.cycle, u8::from(r.output.is_some()));
    }
    out
}

/// A datapath with `S` register banks.
#[derive(Clone, Debug)]
pub struct PipelinedUnit {
    datapath: Datapath,
    plan: PipelinePlan,
    stage_phases: Vec<Vec<Phase>>,
    /// `banks[i]` holds the token that finished stage `i` last cycle.
    banks: VecDeque<Option<Token>>,
    cycle: u64,
    trace: Option<Vec<TraceRow>>,
}

pub fn make_pipeline(datapath: Datapath, plan: PipelinePlan) -> PipelinedUnit {
    let stage_phases = (0..plan.stages()).map(|s| plan.phases_in(s)).collect();
    PipelinedUnit {
        banks: std::iter::repeat_n(None, plan.stages()).collect(),
        datapath,
        plan,
        stage_phases,
        cycle: 0,
        trace: None,
    }
}

impl PipelinedUnit {
    pub fn plan(&self) -> PipelinePlan {
        self.plan
    }

    pub fn datapath(&self) -> &Datapath {
        &self.datapath
    }

    /// Index of the next cycle.
    pub fn cycle(&self) -> u64 {
        self.cycle
    }

    pub fn in_flight(&self) -> usize {
        self.banks.iter().flatten().count()
    }

    pub fn is_empty(&self) -> bool {
        self.in_flight() == 0
    }

    /// Starts recording one [`TraceRow`] per clock.
    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn take_trace(&mut self) -> Vec<TraceRow> {
        self.trace.as_mut().map(std::mem::take).unwrap_or_default()
    }

    fn run_stage(&self, stage: usize, mut tok: Token) -> Result<Token> {
        for &phase in &self.stage_phases[stage] {
            tok = self.datapath.run(phase, tok)?;
        }
        Ok(tok)
    }

    /// Advances one cycle, optionally injecting an operand pair, and returns
    /// the result leaving the pipeline on this cycle. A rejected input
    /// leaves the pipeline untouched.
    pub fn clock(&mut self, input: Option<(u64, u64)>) -> Result<Option<u64>> {
        let entering = match input {
            Some((a, b)) => {
                self.datapath.check(a, b)?;
                let zero = match self.datapath.kind() {
                    OpKind::Mul => a == 0 || b == 0,
                    OpKind::Div => a == 0,
                };
                Some(self.run_stage(
                    0,
                    Token {
                        a,
                        b,
                        zero,
                        data: Data::Operands,
                    },
                )?)
            }
            None => None,
        };
        let mut next: VecDeque<Option<Token>> = VecDeque::with_capacity(self.banks.len());
        next.push_back(entering);
        for stage in 1..self.banks.len() {
            next.push_back(match self.banks[stage - 1] {
                Some(tok) => Some(self.run_stage(stage, tok)?),
                None => None,
            });
        }
        let leaving = match self.banks.back().copied().flatten() {
            Some(Token {
                data: Data::Done(v),
                ..
            }) => Some(v),
            Some(tok) => {
                return Err(Error::Pipeline(format!(
                    "unfinished token {tok:?} reached the output"
                )))
            }
            None => None,
        };
        self.banks = next;
        if let Some(trace) = &mut self.trace {
            trace.push(TraceRow {
                cycle: self.cycle,
                input,
                output: leaving,
            });
        }
        self.cycle += 1;
        Ok(leaving)
    }

    /// Clocks bubbles until every in-flight result has left, returning them
    /// in injection order.
    pub fn flush(&mut self) -> Result<Vec<u64>> {
        let mut out = Vec::new();
        while !self.is_empty() {
            if let Some(v) = self.clock(None)? {
                out.push(v);
            }
        }
        Ok(out)
    }
}

/// Streams `inputs` back to back and compares each result with the
/// combinational unit. Returns the number of mismatches.
pub fn check_equivalence(pu: &mut PipelinedUnit, inputs: &[(u64, u64)]) -> Result<usize> {
    if !pu.is_empty() {
        return Err(Error::Pipeline("equivalence check needs an empty pipeline".into()));
    }
    let latency = pu.plan().stages();
    let mut outputs = Vec::with_capacity(inputs.len());
    for (i, &pair) in inputs.iter().enumerate() {
        let out = pu.clock(Some(pair))?;
        if i >= latency {
            outputs.push(out);
        } else if out.is_some() {
            return Err(Error::Pipeline("output before the pipeline filled".into()));
        }
    }
    for _ in 0..latency.min(inputs.len()) {
        outputs.push(pu.clock(None)?);
    }
    let mut mismatches = 0;
    for (pair, out) in inputs.iter().zip(&outputs) {
        if *out != Some(pu.datapath().eval(pair.0, pair.1)?) {
            mismatches += 1;
        }
    }
    Ok(mismatches + inputs.len().saturating_sub(outputs.len()))
}
