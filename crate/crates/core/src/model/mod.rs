//! Generic representation of linear, mixed-integer and bilinear models.
//!
//! Problem builders name their variables (`x_i1_p1`, `y_h1_c2`, ...) and
//! emit labelled rows. Bilinear structure is kept as explicit products
//! attached to a labelled row, so the same model can be checked exactly,
//! relaxed with McCormick envelopes, or linearised by fixing one factor.

mod certificate;
mod expr;
mod feasibility;
mod lp_text;

use std::collections::HashMap;

use thiserror::Error;

pub use certificate::{make_certificate, ApproximationCertificate, CertificateFlag};
pub use expr::{evaluate_expression, Assignment, LinearExpression};
pub use feasibility::{check_feasibility, FeasibilityReport, RowModel, Violation, ViolationKind};
pub use lp_text::export_lp_text;

/// Feasibility and integrality tolerance used unless a caller overrides it.
pub const DEFAULT_TOL: f64 = 1e-7;

/// Pseudo-label under which bilinear objective terms are stored.
pub const OBJECTIVE_LABEL: &str = "obj";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("variable `{0}` is not assigned")]
    MissingVariable(String),
    #[error("variable `{0}` is not declared")]
    UndeclaredVariable(String),
    #[error("variable `{0}` declared twice")]
    DuplicateVariable(String),
    #[error("constraint label `{0}` used twice")]
    DuplicateLabel(String),
    #[error("unknown constraint label `{0}`")]
    UnknownLabel(String),
    #[error("variable `{id}` has lower bound {lower} above upper bound {upper}")]
    InvertedBounds { id: String, lower: f64, upper: f64 },
    #[error("binary variable `{0}` has bounds outside [0, 1]")]
    BinaryBounds(String),
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("model still contains bilinear terms")]
    NotLinear,
    #[error("bilinear factor `{0}` needs finite bounds")]
    UnboundedFactor(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Integrality {
    Continuous,
    Binary,
    Integer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RowSense {
    Le,
    Eq,
    Ge,
}

impl RowSense {
    pub fn symbol(self) -> &'static str {
        match self {
            RowSense::Le => "<=",
            RowSense::Eq => "=",
            RowSense::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObjectiveSense {
    Minimize,
    Maximize,
}

/// A decision variable. Infinite bounds are `f64::INFINITY` /
/// `f64::NEG_INFINITY`, never a large finite stand-in.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableDef {
    pub id: String,
    pub lower: f64,
    pub upper: f64,
    pub integrality: Integrality,
}

impl VariableDef {
    pub fn continuous(id: impl Into<String>, lower: f64, upper: f64) -> Self {
        Self { id: id.into(), lower, upper, integrality: Integrality::Continuous }
    }

    /// Continuous variable on `[0, +inf)`.
    pub fn nonnegative(id: impl Into<String>) -> Self {
        Self::continuous(id, 0.0, f64::INFINITY)
    }

    pub fn free(id: impl Into<String>) -> Self {
        Self::continuous(id, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn binary(id: impl Into<String>) -> Self {
        Self { id: id.into(), lower: 0.0, upper: 1.0, integrality: Integrality::Binary }
    }

    pub fn integer(id: impl Into<String>, lower: f64, upper: f64) -> Self {
        Self { id: id.into(), lower, upper, integrality: Integrality::Integer }
    }

    pub fn is_integer(&self) -> bool {
        self.integrality != Integrality::Continuous
    }

    fn validate(&self) -> Result<(), ModelError> {
        if self.lower.is_nan() || self.upper.is_nan() || self.lower > self.upper {
            return Err(ModelError::InvertedBounds {
                id: self.id.clone(),
                lower: self.lower,
                upper: self.upper,
            });
        }
        if self.integrality == Integrality::Binary && (self.lower < 0.0 || self.upper > 1.0) {
            return Err(ModelError::BinaryBounds(self.id.clone()));
        }
        Ok(())
    }
}

/// `expr sense rhs`. A constant inside `expr` counts on the left-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub label: String,
    pub expr: LinearExpression,
    pub sense: RowSense,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    variables: Vec<VariableDef>,
    index: HashMap<String, usize>,
    constraints: Vec<LinearConstraint>,
    labels: HashMap<String, usize>,
    sense: ObjectiveSense,
    objective: LinearExpression,
}

impl LinearModel {
    pub fn new(sense: ObjectiveSense) -> Self {
        Self {
            variables: Vec::new(),
            index: HashMap::new(),
            constraints: Vec::new(),
            labels: HashMap::new(),
            sense,
            objective: LinearExpression::default(),
        }
    }

    pub fn add_variable(&mut self, def: VariableDef) -> Result<(), ModelError> {
        def.validate()?;
        if self.index.contains_key(&def.id) {
            return Err(ModelError::DuplicateVariable(def.id));
        }
        self.index.insert(def.id.clone(), self.variables.len());
        self.variables.push(def);
        Ok(())
    }

    pub fn add_constraint(
        &mut self,
        label: impl Into<String>,
        expr: LinearExpression,
        sense: RowSense,
        rhs: f64,
    ) -> Result<(), ModelError> {
        let label = label.into();
        if self.labels.contains_key(&label) || label == OBJECTIVE_LABEL {
            return Err(ModelError::DuplicateLabel(label));
        }
        self.check_declared(&expr)?;
        self.labels.insert(label.clone(), self.constraints.len());
        self.constraints.push(LinearConstraint { label, expr, sense, rhs });
        Ok(())
    }

    pub fn set_objective(&mut self, expr: LinearExpression) -> Result<(), ModelError> {
        self.check_declared(&expr)?;
        self.objective = expr;
        Ok(())
    }

    pub fn set_bounds(&mut self, id: &str, lower: f64, upper: f64) -> Result<(), ModelError> {
        let idx = *self
            .index
            .get(id)
            .ok_or_else(|| ModelError::UndeclaredVariable(id.to_string()))?;
        let mut def = self.variables[idx].clone();
        def.lower = lower;
        def.upper = upper;
        def.validate()?;
        self.variables[idx] = def;
        Ok(())
    }

    /// Drops integrality from every variable, keeping bounds.
    pub fn relax_integrality(&self) -> LinearModel {
        let mut out = self.clone();
        for v in &mut out.variables {
            v.integrality = Integrality::Continuous;
        }
        out
    }

    fn check_declared(&self, expr: &LinearExpression) -> Result<(), ModelError> {
        for (id, _) in expr.terms() {
            if !self.index.contains_key(id) {
                return Err(ModelError::UndeclaredVariable(id.clone()));
            }
        }
        Ok(())
    }

    pub fn variables(&self) -> &[VariableDef] {
        &self.variables
    }

    pub fn variable(&self, id: &str) -> Option<&VariableDef> {
        self.index.get(id).map(|&i| &self.variables[i])
    }

    pub fn var_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.constraints
    }

    pub fn constraint(&self, label: &str) -> Option<&LinearConstraint> {
        self.labels.get(label).map(|&i| &self.constraints[i])
    }

    pub fn sense(&self) -> ObjectiveSense {
        self.sense
    }

    pub fn objective(&self) -> &LinearExpression {
        &self.objective
    }

    pub fn has_integers(&self) -> bool {
        self.variables.iter().any(VariableDef::is_integer)
    }

    pub fn objective_value(&self, a: &Assignment) -> Result<f64, ModelError> {
        evaluate_expression(&self.objective, a)
    }
}

/// Product `coefficient * a * b`; `a == b` encodes a square.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearTerm {
    pub a: String,
    pub b: String,
    pub coefficient: f64,
}

impl BilinearTerm {
    pub fn new(a: impl Into<String>, b: impl Into<String>, coefficient: f64) -> Self {
        Self { a: a.into(), b: b.into(), coefficient }
    }
}

/// A linear model whose rows (or objective) may carry extra products.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearModel {
    base: LinearModel,
    rows: Vec<(String, Vec<BilinearTerm>)>,
    row_index: HashMap<String, usize>,
}

impl BilinearModel {
    pub fn new(base: LinearModel) -> Self {
        Self { base, rows: Vec::new(), row_index: HashMap::new() }
    }

    pub fn base(&self) -> &LinearModel {
        &self.base
    }

    pub fn base_mut(&mut self) -> &mut LinearModel {
        &mut self.base
    }

    /// Attaches a product to an existing row label or to [`OBJECTIVE_LABEL`].
    pub fn add_product(&mut self, label: &str, term: BilinearTerm) -> Result<(), ModelError> {
        if label != OBJECTIVE_LABEL && self.base.constraint(label).is_none() {
            return Err(ModelError::UnknownLabel(label.to_string()));
        }
        for id in [&term.a, &term.b] {
            if self.base.variable(id).is_none() {
                return Err(ModelError::UndeclaredVariable(id.clone()));
            }
        }
        let idx = match self.row_index.get(label) {
            Some(&i) => i,
            None => {
                self.row_index.insert(label.to_string(), self.rows.len());
                self.rows.push((label.to_string(), Vec::new()));
                self.rows.len() - 1
            }
        };
        self.rows[idx].1.push(term);
        Ok(())
    }

    /// Adds a linear row together with its products in one call.
    pub fn add_row(
        &mut self,
        label: impl Into<String>,
        expr: LinearExpression,
        products: Vec<BilinearTerm>,
        sense: RowSense,
        rhs: f64,
    ) -> Result<(), ModelError> {
        let label = label.into();
        self.base.add_constraint(label.clone(), expr, sense, rhs)?;
        for t in products {
            self.add_product(&label, t)?;
        }
        Ok(())
    }

    pub fn bilinear_rows(&self) -> &[(String, Vec<BilinearTerm>)] {
        &self.rows
    }

    pub fn products(&self, label: &str) -> &[BilinearTerm] {
        self.row_index
            .get(label)
            .map(|&i| self.rows[i].1.as_slice())
            .unwrap_or(&[])
    }

    pub fn is_linear(&self) -> bool {
        self.rows.iter().all(|(_, terms)| terms.is_empty())
    }

    /// Number of rows (objective excluded) that carry at least one product.
    pub fn bilinear_row_count(&self) -> usize {
        self.rows
            .iter()
            .filter(|(l, t)| l != OBJECTIVE_LABEL && !t.is_empty())
            .count()
    }

    pub fn into_linear(self) -> Result<LinearModel, ModelError> {
        if self.is_linear() {
            Ok(self.base)
        } else {
            Err(ModelError::NotLinear)
        }
    }

    pub fn objective_value(&self, a: &Assignment) -> Result<f64, ModelError> {
        let mut v = evaluate_expression(self.base.objective(), a)?;
        for t in self.products(OBJECTIVE_LABEL) {
            v += t.coefficient * a.value(&t.a)? * a.value(&t.b)?;
        }
        Ok(v)
    }

    /// Fixes the given variables to their values: bounds collapse to the
    /// value and every product with a fixed factor turns into a linear term
    /// (or a constant when both factors are fixed).
    pub fn fix(&self, fixed: &Assignment) -> Result<BilinearModel, ModelError> {
        let mut base = self.base.clone();
        for (id, &val) in fixed.iter() {
            if base.variable(id).is_none() {
                return Err(ModelError::UndeclaredVariable(id.clone()));
            }
            base.set_bounds(id, val, val)?;
        }
        let mut rows = Vec::new();
        for (label, terms) in &self.rows {
            let mut keep = Vec::new();
            let mut extra = LinearExpression::default();
            for t in terms {
                match (fixed.get(&t.a), fixed.get(&t.b)) {
                    (Some(va), Some(vb)) => extra.add_constant(t.coefficient * va * vb),
                    (Some(va), None) => extra.add_term(&t.b, t.coefficient * va),
                    (None, Some(vb)) => extra.add_term(&t.a, t.coefficient * vb),
                    (None, None) => keep.push(t.clone()),
                }
            }
            if label == OBJECTIVE_LABEL {
                let mut obj = base.objective().clone();
                obj.add_expr(&extra, 1.0);
                base.set_objective(obj)?;
            } else {
                let idx = base.labels[label];
                base.constraints[idx].expr.add_expr(&extra, 1.0);
            }
            if !keep.is_empty() {
                rows.push((label.clone(), keep));
            }
        }
        let row_index = rows.iter().enumerate().map(|(i, (l, _))| (l.clone(), i)).collect();
        Ok(BilinearModel { base, rows, row_index })
    }
}

impl From<LinearModel> for BilinearModel {
    fn from(base: LinearModel) -> Self {
        BilinearModel::new(base)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicates_and_undeclared() {
        let mut m = LinearModel::new(ObjectiveSense::Minimize);
        m.add_variable(VariableDef::nonnegative("x")).unwrap();
        assert!(matches!(
            m.add_variable(VariableDef::nonnegative("x")),
            Err(ModelError::DuplicateVariable(_))
        ));
        let e = LinearExpression::from_terms([("y", 1.0)]);
        assert!(matches!(
            m.add_constraint("c", e, RowSense::Le, 1.0),
            Err(ModelError::UndeclaredVariable(_))
        ));
        let e = LinearExpression::from_terms([("x", 1.0)]);
        m.add_constraint("c", e.clone(), RowSense::Le, 1.0).unwrap();
        assert!(matches!(
            m.add_constraint("c", e, RowSense::Le, 1.0),
            Err(ModelError::DuplicateLabel(_))
        ));
    }

    #[test]
    fn binary_bounds_are_enforced() {
        let mut m = LinearModel::new(ObjectiveSense::Minimize);
        let mut b = VariableDef::binary("b");
        b.upper = 2.0;
        assert!(matches!(m.add_variable(b), Err(ModelError::BinaryBounds(_))));
        let v = VariableDef::continuous("v", 2.0, 1.0);
        assert!(matches!(m.add_variable(v), Err(ModelError::InvertedBounds { .. })));
    }

    #[test]
    fn fixing_a_factor_linearises_products() {
        let mut base = LinearModel::new(ObjectiveSense::Minimize);
        for id in ["v", "q", "y"] {
            base.add_variable(VariableDef::continuous(id, 0.0, 10.0)).unwrap();
        }
        let mut m = BilinearModel::new(base);
        m.add_row(
            "path",
            LinearExpression::from_terms([("v", 1.0)]),
            vec![BilinearTerm::new("q", "y", -1.0)],
            RowSense::Eq,
            0.0,
        )
        .unwrap();
        let mut fixed = Assignment::default();
        fixed.set("q", 0.25);
        let lin = m.fix(&fixed).unwrap().into_linear().unwrap();
        let row = lin.constraint("path").unwrap();
        assert_eq!(row.expr.coefficient("y"), -0.25);
        assert_eq!(lin.variable("q").unwrap().lower, 0.25);
    }
}
