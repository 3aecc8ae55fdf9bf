use super::{
    evaluate_expression, Assignment, BilinearModel, BilinearTerm, Integrality, LinearModel,
    ModelError, RowSense,
};

/// Anything that exposes labelled linear rows plus optional products per row.
pub trait RowModel {
    fn linear(&self) -> &LinearModel;
    fn products_for(&self, label: &str) -> &[BilinearTerm];
}

impl RowModel for LinearModel {
    fn linear(&self) -> &LinearModel {
        self
    }
    fn products_for(&self, _label: &str) -> &[BilinearTerm] {
        &[]
    }
}

impl RowModel for BilinearModel {
    fn linear(&self) -> &LinearModel {
        self.base()
    }
    fn products_for(&self, label: &str) -> &[BilinearTerm] {
        self.products(label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    Row,
    Bound,
    Integrality,
}

/// `amount` is positive for a shortfall on a `>=` row or an excess on a `<=`
/// row; for equality rows it is the signed residual `lhs - rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub label: String,
    pub kind: ViolationKind,
    pub amount: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn max_violation(&self) -> f64 {
        self.violations.iter().map(|v| v.amount.abs()).fold(0.0, f64::max)
    }

    pub fn find(&self, label: &str) -> Option<&Violation> {
        self.violations.iter().find(|v| v.label == label)
    }
}

fn row_activity<M: RowModel + ?Sized>(
    model: &M,
    label: &str,
    base: f64,
    a: &Assignment,
) -> Result<f64, ModelError> {
    let mut lhs = base;
    for t in model.products_for(label) {
        lhs += t.coefficient * a.value(&t.a)? * a.value(&t.b)?;
    }
    Ok(lhs)
}

/// Evaluates every row (with its products), every variable bound and every
/// integrality requirement against `a`.
pub fn check_feasibility<M: RowModel + ?Sized>(
    model: &M,
    a: &Assignment,
    tol: f64,
) -> Result<FeasibilityReport, ModelError> {
    if !(tol > 0.0) {
        return Err(ModelError::InvalidTolerance(tol));
    }
    let lin = model.linear();
    for v in lin.variables() {
        a.value(&v.id)?;
    }
    let mut report = FeasibilityReport::default();
    for c in lin.constraints() {
        let lhs = row_activity(model, &c.label, evaluate_expression(&c.expr, a)?, a)?;
        let amount = match c.sense {
            RowSense::Le => lhs - c.rhs,
            RowSense::Ge => c.rhs - lhs,
            RowSense::Eq => lhs - c.rhs,
        };
        let violated = match c.sense {
            RowSense::Eq => amount.abs() > tol,
            _ => amount > tol,
        };
        if violated || amount.is_nan() {
            report.violations.push(Violation {
                label: c.label.clone(),
                kind: ViolationKind::Row,
                amount,
            });
        }
    }
    for v in lin.variables() {
        let x = a.value(&v.id)?;
        if x < v.lower - tol {
            report.violations.push(Violation {
                label: format!("bound:{}", v.id),
                kind: ViolationKind::Bound,
                amount: v.lower - x,
            });
        } else if x > v.upper + tol {
            report.violations.push(Violation {
                label: format!("bound:{}", v.id),
                kind: ViolationKind::Bound,
                amount: x - v.upper,
            });
        }
        if v.integrality != Integrality::Continuous && (x - x.round()).abs() > tol {
            report.violations.push(Violation {
                label: format!("integrality:{}", v.id),
                kind: ViolationKind::Integrality,
                amount: x - x.round(),
            });
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LinearExpression, ObjectiveSense, VariableDef};

    fn single_row(rhs: f64) -> LinearModel {
        let mut m = LinearModel::new(ObjectiveSense::Minimize);
        m.add_variable(VariableDef::nonnegative("x")).unwrap();
        m.add_constraint("atleast", LinearExpression::from_terms([("x", 1.0)]), RowSense::Ge, rhs)
            .unwrap();
        m
    }

    #[test]
    fn boundary_point_is_feasible() {
        let m = single_row(3.0);
        let a: Assignment = [("x", 3.0)].into_iter().collect();
        assert!(check_feasibility(&m, &a, 1e-9).unwrap().is_feasible());
    }

    #[test]
    fn shortfall_is_reported_on_the_row() {
        let m = single_row(3.0);
        let a: Assignment = [("x", 2.9)].into_iter().collect();
        let r = check_feasibility(&m, &a, 1e-9).unwrap();
        let v = r.find("atleast").unwrap();
        assert!((v.amount - 0.1).abs() < 1e-12);
    }

    #[test]
    fn incomplete_assignment_and_bad_tol_are_errors() {
        let m = single_row(3.0);
        assert!(matches!(
            check_feasibility(&m, &Assignment::new(), 1e-9),
            Err(ModelError::MissingVariable(_))
        ));
        let a: Assignment = [("x", 3.0)].into_iter().collect();
        assert!(check_feasibility(&m, &a, 0.0).is_err());
    }

    #[test]
    fn blend_row_with_products_is_evaluated() {
        // two inputs with qualities 3 and 1 feed one pool; 2 + 2 units give
        // pool quality 2 over an outflow of 4: 3*2 + 1*2 = 2*4
        let mut base = LinearModel::new(ObjectiveSense::Minimize);
        for id in ["x1", "x2", "p", "y"] {
            base.add_variable(VariableDef::nonnegative(id)).unwrap();
        }
        let mut m = BilinearModel::new(base);
        m.add_row(
            "blend",
            LinearExpression::from_terms([("x1", 3.0), ("x2", 1.0)]),
            vec![BilinearTerm::new("p", "y", -1.0)],
            RowSense::Eq,
            0.0,
        )
        .unwrap();
        let good: Assignment = [("x1", 2.0), ("x2", 2.0), ("p", 2.0), ("y", 4.0)].into_iter().collect();
        assert!(check_feasibility(&m, &good, 1e-9).unwrap().is_feasible());
        let bad: Assignment = [("x1", 2.0), ("x2", 2.0), ("p", 2.5), ("y", 4.0)].into_iter().collect();
        let r = check_feasibility(&m, &bad, 1e-9).unwrap();
        assert!((r.find("blend").unwrap().amount + 2.0).abs() < 1e-12);
    }

    #[test]
    fn bounds_and_integrality_are_checked() {
        let mut m = LinearModel::new(ObjectiveSense::Minimize);
        m.add_variable(VariableDef::binary("b")).unwrap();
        let a: Assignment = [("b", 0.5)].into_iter().collect();
        let r = check_feasibility(&m, &a, 1e-7).unwrap();
        assert_eq!(r.violations[0].kind, ViolationKind::Integrality);
        let a: Assignment = [("b", 1.5)].into_iter().collect();
        let r = check_feasibility(&m, &a, 1e-7).unwrap();
        assert!(r.violations.iter().any(|v| v.kind == ViolationKind::Bound));
    }

    proptest::proptest! {
        #[test]
        fn feasibility_is_monotone_in_tolerance(x in 0.0f64..6.0, t1 in 1e-9f64..1.0, extra in 0.0f64..1.0) {
            let m = single_row(3.0);
            let a: Assignment = [("x", x)].into_iter().collect();
            let tight = check_feasibility(&m, &a, t1).unwrap().is_feasible();
            let loose = check_feasibility(&m, &a, t1 + extra).unwrap().is_feasible();
            proptest::prop_assert!(!tight || loose);
        }
    }
}
