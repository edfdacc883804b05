//! Compact MILP formulations written as solver-agnostic model files, and
//! their LP relaxations through the LP adapter.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::lp::{LpError, LpSolver, LpStatus, INF};

mod formulations;

pub use formulations::{
    emit_assignment_polytope, emit_compact_mcf, emit_compact_mtz, emit_policy_mip, MipOptions,
};

#[derive(Debug, thiserror::Error)]
pub enum CompactError {
    #[error("{0}")]
    Unsupported(String),
    #[error("indicator `{0}` needs finite bounds on its row to be rewritten with big-M")]
    UnboundedIndicator(String),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("solver stopped with status {0:?}")]
    Status(LpStatus),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("solver already holds a model ({0} columns); compact models need an empty one")]
    SolverNotEmpty(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Binary,
    Integer,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Var {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
    /// Symbol of the formulation this variable stands for.
    pub symbol: String,
    pub indices: Vec<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    fn lp_text(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// `guard = active → row`.
#[derive(Debug, Clone, PartialEq)]
pub struct Indicator {
    pub guard: usize,
    pub active: bool,
    pub row: Row,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MipModel {
    pub name: String,
    pub vars: Vec<Var>,
    pub rows: Vec<Row>,
    pub indicators: Vec<Indicator>,
    /// Minimised.
    pub objective: Vec<(usize, f64)>,
    index: BTreeMap<String, usize>,
}

impl MipModel {
    pub fn new(name: &str) -> Self {
        MipModel { name: name.to_string(), ..Default::default() }
    }

    pub fn add_var(&mut self, name: String, kind: VarKind, lower: f64, upper: f64, symbol: &str, indices: &[i64]) -> usize {
        let (lower, upper) = if kind == VarKind::Binary { (lower.max(0.0), upper.min(1.0)) } else { (lower, upper) };
        let id = self.vars.len();
        assert!(self.index.insert(name.clone(), id).is_none(), "duplicate variable {name}");
        self.vars.push(Var { name, kind, lower, upper, symbol: symbol.to_string(), indices: indices.to_vec() });
        id
    }

    /// A variable fixed to 1 carrying the objective constant.
    pub fn add_constant(&mut self, value: f64) {
        if value != 0.0 {
            let v = self.add_var("obj_offset".into(), VarKind::Continuous, 1.0, 1.0, "const", &[]);
            self.objective.push((v, value));
        }
    }

    pub fn add_row(&mut self, name: String, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.rows.push(Row { name, terms: merge(terms), sense, rhs });
    }

    pub fn add_indicator(&mut self, guard: usize, active: bool, name: String, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.indicators.push(Indicator { guard, active, row: Row { name, terms: merge(terms), sense, rhs } });
    }

    pub fn var(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn rows_named(&self, prefix: &str) -> usize {
        self.rows.iter().filter(|r| r.name.starts_with(prefix)).count()
    }

    /// Variables grouped by symbol: name -> (symbol, indices).
    pub fn manifest(&self) -> BTreeMap<String, (String, Vec<i64>)> {
        self.vars.iter().map(|v| (v.name.clone(), (v.symbol.clone(), v.indices.clone()))).collect()
    }

    pub fn manifest_json(&self) -> String {
        #[derive(Serialize)]
        struct Entry<'a> {
            symbol: &'a str,
            indices: &'a [i64],
        }
        let map: BTreeMap<&str, Entry> = self
            .vars
            .iter()
            .map(|v| (v.name.as_str(), Entry { symbol: &v.symbol, indices: &v.indices }))
            .collect();
        serde_json::to_string_pretty(&map).expect("manifest serialises")
    }

    fn activity_range(&self, terms: &[(usize, f64)]) -> (f64, f64) {
        terms.iter().fold((0.0, 0.0), |(lo, hi), &(j, c)| {
            let v = &self.vars[j];
            if c >= 0.0 {
                (lo + c * v.lower, hi + c * v.upper)
            } else {
                (lo + c * v.upper, hi + c * v.lower)
            }
        })
    }

    /// Same model with every indicator replaced by big-M rows; each M comes
    /// from the bounds of the variables in its row.
    pub fn with_big_m(&self) -> Result<MipModel, CompactError> {
        let mut out = self.clone();
        out.indicators.clear();
        for ind in &self.indicators {
            let (lo, hi) = self.activity_range(&ind.row.terms);
            // a·x <= b + M(1 - g) becomes a·x + M g <= b + M; on a guard of 0,
            // a·x <= b + M g becomes a·x - M g <= b. `signed` is M, or -M for >= rows.
            let relax = |signed: f64| -> ((usize, f64), f64) {
                if ind.active {
                    ((ind.guard, signed), signed)
                } else {
                    ((ind.guard, -signed), 0.0)
                }
            };
            let mut emit = |suffix: &str, sense: Sense| -> Result<(), CompactError> {
                let r = &ind.row;
                let m = match sense {
                    Sense::Le => hi - r.rhs,
                    Sense::Ge => r.rhs - lo,
                    Sense::Eq => unreachable!(),
                };
                if !m.is_finite() {
                    return Err(CompactError::UnboundedIndicator(r.name.clone()));
                }
                if m <= 0.0 {
                    // Holds whatever the guard.
                    return Ok(());
                }
                let (extra, shift) = relax(if sense == Sense::Le { m } else { -m });
                let mut terms = r.terms.clone();
                terms.push(extra);
                out.add_row(format!("{}{suffix}", r.name), terms, sense, r.rhs + shift);
                Ok(())
            };
            match ind.row.sense {
                Sense::Eq => {
                    emit("_le", Sense::Le)?;
                    emit("_ge", Sense::Ge)?;
                }
                s => emit("", s)?,
            }
        }
        Ok(out)
    }

    fn load(&self, lp: &mut dyn LpSolver, integer: bool) {
        let obj: BTreeMap<usize, f64> = self.objective.iter().fold(BTreeMap::new(), |mut m, &(j, c)| {
            *m.entry(j).or_default() += c;
            m
        });
        for (j, v) in self.vars.iter().enumerate() {
            let col = lp.add_col(obj.get(&j).copied().unwrap_or(0.0), v.lower, v.upper, &[]);
            if integer && v.kind != VarKind::Continuous {
                lp.set_integer(col, true);
            }
        }
        for r in &self.rows {
            let (lo, hi) = match r.sense {
                Sense::Le => (-INF, r.rhs),
                Sense::Ge => (r.rhs, INF),
                Sense::Eq => (r.rhs, r.rhs),
            };
            lp.add_row(lo, hi, &r.terms);
        }
    }

    /// Loads the model (indicators rewritten with big-M) into an empty adapter and solves it.
    /// Loads the model into `lp`, which must be empty, and solves it.
    pub fn solve(&self, lp: &mut dyn LpSolver, integer: bool) -> Result<MipSolution, CompactError> {
        if lp.num_cols() > 0 || lp.num_rows() > 0 {
            return Err(CompactError::SolverNotEmpty(lp.num_cols()));
        }
        let m = if self.indicators.is_empty() { self.clone() } else { self.with_big_m()? };
        m.load(lp, integer);
        match lp.solve()? {
            LpStatus::Optimal => Ok(MipSolution { objective: lp.objective(), values: lp.col_values().to_vec() }),
            s => Err(CompactError::Status(s)),
        }
    }

    pub fn write(&self, path: &Path, format: ModelFormat) -> Result<(), CompactError> {
        let text = match format {
            ModelFormat::LpText => self.lp_text(),
            ModelFormat::MpsText => self.with_big_m()?.mps_text(),
        };
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn lp_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "\\ {}", self.name);
        s.push_str("Minimize\n obj:");
        if self.objective.is_empty() {
            s.push_str(" 0");
        }
        s.push_str(&self.expr(&merge(self.objective.clone())));
        s.push_str("\nSubject To\n");
        for r in &self.rows {
            let _ = writeln!(s, " {}:{} {} {}", r.name, self.expr_or_zero(&r.terms), r.sense.lp_text(), num(r.rhs));
        }
        for ind in &self.indicators {
            let r = &ind.row;
            let _ = writeln!(
                s,
                " {}: {} = {} ->{} {} {}",
                r.name,
                self.vars[ind.guard].name,
                u8::from(ind.active),
                self.expr_or_zero(&r.terms),
                r.sense.lp_text(),
                num(r.rhs)
            );
        }
        s.push_str("Bounds\n");
        for v in self.vars.iter().filter(|v| v.kind != VarKind::Binary) {
            let _ = match (v.lower.is_finite(), v.upper.is_finite()) {
                (true, true) if v.lower == v.upper => writeln!(s, " {} = {}", v.name, num(v.lower)),
                (true, true) => writeln!(s, " {} <= {} <= {}", num(v.lower), v.name, num(v.upper)),
                (true, false) => writeln!(s, " {} >= {}", v.name, num(v.lower)),
                (false, true) => writeln!(s, " -inf <= {} <= {}", v.name, num(v.upper)),
                (false, false) => writeln!(s, " {} free", v.name),
            };
        }
        for v in self.vars.iter().filter(|v| v.kind == VarKind::Binary && v.lower == v.upper) {
            let _ = writeln!(s, " {} = {}", v.name, num(v.lower));
        }
        for (title, kind) in [("Binaries", VarKind::Binary), ("Generals", VarKind::Integer)] {
            let names: Vec<&str> = self.vars.iter().filter(|v| v.kind == kind).map(|v| v.name.as_str()).collect();
            if !names.is_empty() {
                let _ = writeln!(s, "{title}");
                for chunk in names.chunks(8) {
                    let _ = writeln!(s, " {}", chunk.join(" "));
                }
            }
        }
        s.push_str("End\n");
        s
    }

    /// Free-format MPS. Indicators must have been rewritten already.
    pub fn mps_text(&self) -> String {
        assert!(self.indicators.is_empty(), "MPS output needs indicators rewritten");
        let mut s = String::new();
        let _ = writeln!(s, "NAME {}", if self.name.is_empty() { "model" } else { &self.name });
        s.push_str("ROWS\n N obj\n");
        for r in &self.rows {
            let t = match r.sense {
                Sense::Le => "L",
                Sense::Ge => "G",
                Sense::Eq => "E",
            };
            let _ = writeln!(s, " {t} {}", r.name);
        }
        let mut cols: Vec<Vec<(&str, f64)>> = vec![Vec::new(); self.vars.len()];
        for &(j, c) in &merge(self.objective.clone()) {
            cols[j].push(("obj", c));
        }
        for r in &self.rows {
            for &(j, c) in &r.terms {
                cols[j].push((&r.name, c));
            }
        }
        s.push_str("COLUMNS\n");
        let mut in_int = false;
        let mut marker = 0;
        for (j, v) in self.vars.iter().enumerate() {
            let int = v.kind != VarKind::Continuous;
            if int != in_int {
                let tag = if int { "INTORG" } else { "INTEND" };
                let _ = writeln!(s, " MARKER{marker} 'MARKER' '{tag}'");
                marker += 1;
                in_int = int;
            }
            if cols[j].is_empty() {
                // Keep the column declared.
                let _ = writeln!(s, " {} obj 0", v.name);
            }
            for &(row, c) in &cols[j] {
                let _ = writeln!(s, " {} {} {}", v.name, row, num(c));
            }
        }
        if in_int {
            let _ = writeln!(s, " MARKER{marker} 'MARKER' 'INTEND'");
        }
        s.push_str("RHS\n");
        for r in self.rows.iter().filter(|r| r.rhs != 0.0) {
            let _ = writeln!(s, " rhs {} {}", r.name, num(r.rhs));
        }
        s.push_str("BOUNDS\n");
        for v in &self.vars {
            if v.lower == v.upper {
                let _ = writeln!(s, " FX bnd {} {}", v.name, num(v.lower));
                continue;
            }
            if v.lower != 0.0 {
                if v.lower.is_finite() {
                    let _ = writeln!(s, " LO bnd {} {}", v.name, num(v.lower));
                } else {
                    let _ = writeln!(s, " MI bnd {}", v.name);
                }
            }
            if v.upper.is_finite() {
                let _ = writeln!(s, " UP bnd {} {}", v.name, num(v.upper));
            } else if v.kind != VarKind::Continuous {
                let _ = writeln!(s, " PL bnd {}", v.name);
            }
        }
        s.push_str("ENDATA\n");
        s
    }

    fn expr(&self, terms: &[(usize, f64)]) -> String {
        let mut s = String::new();
        for &(j, c) in terms {
            let sign = if c < 0.0 { '-' } else { '+' };
            if c.abs() == 1.0 {
                let _ = write!(s, " {sign} {}", self.vars[j].name);
            } else {
                let _ = write!(s, " {sign} {} {}", num(c.abs()), self.vars[j].name);
            }
        }
        match s.strip_prefix(" + ") {
            Some(rest) => format!(" {rest}"),
            None => s,
        }
    }

    fn expr_or_zero(&self, terms: &[(usize, f64)]) -> String {
        if terms.is_empty() {
            // LP text needs a variable on the left; any declared one with coefficient 0 will do.
            match self.vars.first() {
                Some(v) => format!(" 0 {}", v.name),
                None => " 0".into(),
            }
        } else {
            self.expr(terms)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelFormat {
    LpText,
    MpsText,
}

impl std::str::FromStr for ModelFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "lp" => Ok(ModelFormat::LpText),
            "mps" => Ok(ModelFormat::MpsText),
            _ => Err(format!("unknown model format `{s}` (lp or mps)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MipSolution {
    pub objective: f64,
    pub values: Vec<f64>,
}

/// Optimum of the continuous relaxation.
pub fn lp_relaxation_value(model: &MipModel, lp: &mut dyn LpSolver) -> Result<f64, CompactError> {
    Ok(model.solve(lp, false)?.objective)
}

fn merge(terms: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    let mut m: BTreeMap<usize, f64> = BTreeMap::new();
    for (j, c) in terms {
        *m.entry(j).or_default() += c;
    }
    m.into_iter().filter(|e| e.1 != 0.0).collect()
}

fn num(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

#[cfg(test)]
mod tests;
