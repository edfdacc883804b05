//! LP/MIP solver seam.
//!
//! The master problem and the compact formulations only talk to [`LpSolver`].
//! [`HighsLp`] implements it over the HiGHS C API; the backend is picked with
//! [`backend_from_env`] so a different solver can be plugged in later.

use std::ffi::{c_void, CString};
use std::os::raw::c_int;
use std::path::Path;

use highs_sys as hs;

/// Environment variable naming the LP backend. Only `highs` is built in.
pub const BACKEND_ENV: &str = "SLAPRP_LP_BACKEND";

pub const INF: f64 = f64::INFINITY;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    TimeLimit,
    /// Solver stopped for a reason we do not act on (iteration limit, numerical trouble, ...).
    Other,
}

#[derive(Debug, thiserror::Error)]
pub enum LpError {
    #[error("lp backend error: {0}")]
    Backend(String),
    #[error("unknown lp backend `{0}`")]
    UnknownBackend(String),
}

/// Incremental LP/MIP model with solution queries.
///
/// Rows and columns are addressed by dense indices in creation order.
/// Deleting rows shifts later indices down, keeping relative order.
/// Row duals follow the usual minimisation sign convention: `>=` rows at
/// their lower bound carry nonnegative duals.
pub trait LpSolver {
    fn num_rows(&self) -> usize;
    fn num_cols(&self) -> usize;
    fn add_col(&mut self, cost: f64, lower: f64, upper: f64, entries: &[(usize, f64)]) -> usize;
    fn add_row(&mut self, lower: f64, upper: f64, entries: &[(usize, f64)]) -> usize;
    fn delete_rows(&mut self, rows: &[usize]);
    fn set_col_bounds(&mut self, col: usize, lower: f64, upper: f64);
    fn set_row_bounds(&mut self, row: usize, lower: f64, upper: f64);
    fn set_col_cost(&mut self, col: usize, cost: f64);
    fn set_integer(&mut self, col: usize, integer: bool);
    fn set_time_limit(&mut self, seconds: f64);
    fn solve(&mut self) -> Result<LpStatus, LpError>;
    /// Drop any warm-start information so the next solve starts cold.
    fn reset_basis(&mut self);
    fn objective(&self) -> f64;
    fn col_values(&self) -> &[f64];
    fn row_values(&self) -> &[f64];
    fn row_duals(&self) -> &[f64];
    fn col_duals(&self) -> &[f64];
    /// Write the current model; the format follows the file extension (`.lp`, `.mps`).
    fn write_model(&mut self, path: &Path) -> Result<(), LpError>;
}

/// Builds the backend named by [`BACKEND_ENV`] (default `highs`).
pub fn backend_from_env() -> Result<Box<dyn LpSolver>, LpError> {
    match std::env::var(BACKEND_ENV) {
        Ok(name) if !name.is_empty() && name != "highs" => Err(LpError::UnknownBackend(name)),
        _ => Ok(Box::new(HighsLp::new())),
    }
}

pub struct HighsLp {
    ptr: *mut c_void,
    col_value: Vec<f64>,
    col_dual: Vec<f64>,
    row_value: Vec<f64>,
    row_dual: Vec<f64>,
    objective: f64,
    integer_cols: usize,
}

// The HiGHS object is owned exclusively by this handle.
unsafe impl Send for HighsLp {}

impl Default for HighsLp {
    fn default() -> Self {
        Self::new()
    }
}

impl HighsLp {
    pub fn new() -> Self {
        let ptr = unsafe { hs::Highs_create() };
        assert!(!ptr.is_null(), "Highs_create returned null");
        let mut lp = HighsLp {
            ptr,
            col_value: Vec::new(),
            col_dual: Vec::new(),
            row_value: Vec::new(),
            row_dual: Vec::new(),
            objective: 0.0,
            integer_cols: 0,
        };
        lp.set_bool("output_flag", false);
        lp.set_int("threads", 1);
        lp.set_string("solver", "simplex");
        // Let HiGHS pick primal or dual per solve: after a column batch the
        // basis stays primal feasible, after new bounds or rows it does not.
        lp.set_int("simplex_strategy", 0);
        lp.set_string("presolve", "off");
        lp.set_double("mip_rel_gap", 0.0);
        lp.set_double("mip_abs_gap", 1e-7);
        lp.set_int("random_seed", 0);
        lp
    }

    pub fn set_bool(&mut self, name: &str, value: bool) {
        let n = CString::new(name).unwrap();
        unsafe { hs::Highs_setBoolOptionValue(self.ptr, n.as_ptr(), value as c_int) };
    }

    pub fn set_int(&mut self, name: &str, value: i32) {
        let n = CString::new(name).unwrap();
        unsafe { hs::Highs_setIntOptionValue(self.ptr, n.as_ptr(), value) };
    }

    pub fn set_double(&mut self, name: &str, value: f64) {
        let n = CString::new(name).unwrap();
        unsafe { hs::Highs_setDoubleOptionValue(self.ptr, n.as_ptr(), value) };
    }

    pub fn set_string(&mut self, name: &str, value: &str) {
        let n = CString::new(name).unwrap();
        let v = CString::new(value).unwrap();
        unsafe { hs::Highs_setStringOptionValue(self.ptr, n.as_ptr(), v.as_ptr()) };
    }

    /// Replaces the model with one read from an `.lp` or `.mps` file.
    pub fn read_model(&mut self, path: &Path) -> Result<(), LpError> {
        let p = CString::new(path.to_string_lossy().as_bytes()).map_err(|e| LpError::Backend(e.to_string()))?;
        let st = unsafe { hs::Highs_readModel(self.ptr, p.as_ptr()) };
        if st == hs::kHighsStatusError {
            return Err(LpError::Backend(format!("could not read {}", path.display())));
        }
        self.integer_cols = (0..self.num_cols())
            .filter(|&j| {
                let mut t: c_int = 0;
                unsafe { hs::Highs_getColIntegrality(self.ptr, j as c_int, &mut t) };
                t != 0
            })
            .count();
        Ok(())
    }

    fn split(entries: &[(usize, f64)]) -> (Vec<c_int>, Vec<f64>) {
        entries.iter().filter(|e| e.1 != 0.0).map(|&(i, v)| (i as c_int, v)).unzip()
    }

}

impl Drop for HighsLp {
    fn drop(&mut self) {
        unsafe { hs::Highs_destroy(self.ptr) };
    }
}

impl LpSolver for HighsLp {
    fn num_rows(&self) -> usize {
        unsafe { hs::Highs_getNumRow(self.ptr) as usize }
    }

    fn num_cols(&self) -> usize {
        unsafe { hs::Highs_getNumCol(self.ptr) as usize }
    }

    fn add_col(&mut self, cost: f64, lower: f64, upper: f64, entries: &[(usize, f64)]) -> usize {
        let (idx, val) = Self::split(entries);
        let j = self.num_cols();
        let st = unsafe {
            hs::Highs_addCol(
                self.ptr,
                cost,
                lower,
                upper,
                idx.len() as c_int,
                idx.as_ptr(),
                val.as_ptr(),
            )
        };
        assert!(st != hs::kHighsStatusError, "Highs_addCol failed");
        j
    }

    fn add_row(&mut self, lower: f64, upper: f64, entries: &[(usize, f64)]) -> usize {
        let (idx, val) = Self::split(entries);
        let i = self.num_rows();
        let st = unsafe {
            hs::Highs_addRow(
                self.ptr,
                lower,
                upper,
                idx.len() as c_int,
                idx.as_ptr(),
                val.as_ptr(),
            )
        };
        assert!(st != hs::kHighsStatusError, "Highs_addRow failed");
        i
    }

    fn delete_rows(&mut self, rows: &[usize]) {
        if rows.is_empty() {
            return;
        }
        let mut set: Vec<c_int> = rows.iter().map(|&r| r as c_int).collect();
        set.sort_unstable();
        set.dedup();
        unsafe { hs::Highs_deleteRowsBySet(self.ptr, set.len() as c_int, set.as_ptr()) };
    }

    fn set_col_bounds(&mut self, col: usize, lower: f64, upper: f64) {
        unsafe { hs::Highs_changeColBounds(self.ptr, col as c_int, lower, upper) };
    }

    fn set_row_bounds(&mut self, row: usize, lower: f64, upper: f64) {
        unsafe { hs::Highs_changeRowBounds(self.ptr, row as c_int, lower, upper) };
    }

    fn set_col_cost(&mut self, col: usize, cost: f64) {
        unsafe { hs::Highs_changeColCost(self.ptr, col as c_int, cost) };
    }

    fn set_integer(&mut self, col: usize, integer: bool) {
        let mut old: c_int = 0;
        unsafe { hs::Highs_getColIntegrality(self.ptr, col as c_int, &mut old) };
        let t = if integer { hs::kHighsVarTypeInteger } else { hs::kHighsVarTypeContinuous };
        unsafe { hs::Highs_changeColIntegrality(self.ptr, col as c_int, t) };
        match (old != 0, integer) {
            (false, true) => self.integer_cols += 1,
            (true, false) => self.integer_cols -= 1,
            _ => {}
        }
    }

    fn set_time_limit(&mut self, seconds: f64) {
        self.set_double("time_limit", seconds.max(0.0));
    }

    fn solve(&mut self) -> Result<LpStatus, LpError> {
        let mip = self.integer_cols > 0;
        // Presolve only pays off for one-shot MIP solves; LP re-solves rely on warm starts.
        self.set_string("presolve", if mip { "on" } else { "off" });
        if mip {
            self.set_double("mip_feasibility_tolerance", 1e-9);
        }
        unsafe { hs::Highs_zeroAllClocks(self.ptr) };
        let st = unsafe { hs::Highs_run(self.ptr) };
        if st == hs::kHighsStatusError {
            return Err(LpError::Backend("Highs_run returned an error".into()));
        }
        let status = match unsafe { hs::Highs_getModelStatus(self.ptr) } {
            hs::MODEL_STATUS_OPTIMAL | hs::MODEL_STATUS_MODEL_EMPTY => LpStatus::Optimal,
            hs::MODEL_STATUS_INFEASIBLE => LpStatus::Infeasible,
            hs::MODEL_STATUS_UNBOUNDED | hs::MODEL_STATUS_UNBOUNDED_OR_INFEASIBLE => LpStatus::Unbounded,
            hs::MODEL_STATUS_REACHED_TIME_LIMIT => LpStatus::TimeLimit,
            _ => LpStatus::Other,
        };
        let (n, m) = (self.num_cols(), self.num_rows());
        self.col_value.resize(n, 0.0);
        self.col_dual.resize(n, 0.0);
        self.row_value.resize(m, 0.0);
        self.row_dual.resize(m, 0.0);
        unsafe {
            hs::Highs_getSolution(
                self.ptr,
                self.col_value.as_mut_ptr(),
                self.col_dual.as_mut_ptr(),
                self.row_value.as_mut_ptr(),
                self.row_dual.as_mut_ptr(),
            )
        };
        self.objective = unsafe { hs::Highs_getObjectiveValue(self.ptr) };
        Ok(status)
    }

    fn reset_basis(&mut self) {
        unsafe { hs::Highs_clearSolver(self.ptr) };
    }

    fn objective(&self) -> f64 {
        self.objective
    }

    fn col_values(&self) -> &[f64] {
        &self.col_value
    }

    fn row_values(&self) -> &[f64] {
        &self.row_value
    }

    fn row_duals(&self) -> &[f64] {
        &self.row_dual
    }

    fn col_duals(&self) -> &[f64] {
        &self.col_dual
    }

    fn write_model(&mut self, path: &Path) -> Result<(), LpError> {
        let p = CString::new(path.to_string_lossy().as_bytes())
            .map_err(|e| LpError::Backend(e.to_string()))?;
        let st = unsafe { hs::Highs_writeModel(self.ptr, p.as_ptr()) };
        if st == hs::kHighsStatusError {
            return Err(LpError::Backend(format!("could not write {}", path.display())));
        }
        Ok(())
    }
}
