use std::collections::BTreeMap;

use super::ModelError;

/// Sparse affine expression `sum(coef * var) + constant`.
///
/// Terms stay in first-insertion order and a variable appears at most once;
/// adding a term for a variable already present merges the coefficients.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearExpression {
    terms: Vec<(String, f64)>,
    constant: f64,
}

impl LinearExpression {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant_only(c: f64) -> Self {
        Self { terms: Vec::new(), constant: c }
    }

    pub fn from_terms<S, I>(terms: I) -> Self
    where
        S: AsRef<str>,
        I: IntoIterator<Item = (S, f64)>,
    {
        let mut e = Self::default();
        for (id, c) in terms {
            e.add_term(id.as_ref(), c);
        }
        e
    }

    pub fn with(mut self, id: &str, coef: f64) -> Self {
        self.add_term(id, coef);
        self
    }

    pub fn add_term(&mut self, id: &str, coef: f64) {
        if let Some(slot) = self.terms.iter_mut().find(|(v, _)| v == id) {
            slot.1 += coef;
        } else {
            self.terms.push((id.to_string(), coef));
        }
    }

    pub fn with_constant(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn add_constant(&mut self, c: f64) {
        self.constant += c;
    }

    /// `self += scale * other`
    pub fn add_expr(&mut self, other: &LinearExpression, scale: f64) {
        for (id, c) in &other.terms {
            self.add_term(id, scale * c);
        }
        self.constant += scale * other.constant;
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            terms: self.terms.iter().map(|(id, c)| (id.clone(), c * s)).collect(),
            constant: self.constant * s,
        }
    }

    pub fn terms(&self) -> &[(String, f64)] {
        &self.terms
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn coefficient(&self, id: &str) -> f64 {
        self.terms.iter().find(|(v, _)| v == id).map_or(0.0, |t| t.1)
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Values for named variables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assignment(BTreeMap<String, f64>);

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, id: impl Into<String>, value: f64) {
        self.0.insert(id.into(), value);
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.0.get(id).copied()
    }

    /// Like [`get`](Self::get) but reports the missing id as an error.
    pub fn value(&self, id: &str) -> Result<f64, ModelError> {
        self.get(id).ok_or_else(|| ModelError::MissingVariable(id.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &f64)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn extend(&mut self, other: &Assignment) {
        for (k, v) in other.iter() {
            self.0.insert(k.clone(), *v);
        }
    }
}

impl<S: Into<String>> FromIterator<(S, f64)> for Assignment {
    fn from_iter<I: IntoIterator<Item = (S, f64)>>(iter: I) -> Self {
        Assignment(iter.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }
}

pub fn evaluate_expression(expr: &LinearExpression, a: &Assignment) -> Result<f64, ModelError> {
    let mut total = expr.constant;
    for (id, c) in &expr.terms {
        total += c * a.value(id)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn evaluates_simple_expressions() {
        let a: Assignment = [("x", 3.0)].into_iter().collect();
        let e = LinearExpression::from_terms([("x", 2.0)]);
        let mut e1 = e.clone();
        e1.add_constant(1.0);
        assert_eq!(evaluate_expression(&e1, &a).unwrap(), 7.0);
        assert_eq!(evaluate_expression(&LinearExpression::new(), &a).unwrap(), 0.0);
        let b: Assignment = [("x", 5.0), ("y", 5.0)].into_iter().collect();
        let diff = LinearExpression::from_terms([("x", 1.0), ("y", -1.0)]);
        assert_eq!(evaluate_expression(&diff, &b).unwrap(), 0.0);
    }

    #[test]
    fn missing_variable_is_named() {
        let e = LinearExpression::from_terms([("ghost", 1.0)]);
        let err = evaluate_expression(&e, &Assignment::new()).unwrap_err();
        assert_eq!(err, ModelError::MissingVariable("ghost".into()));
    }

    #[test]
    fn duplicate_terms_merge() {
        let e = LinearExpression::from_terms([("x", 1.0), ("y", 2.0), ("x", 3.0)]);
        assert_eq!(e.terms().len(), 2);
        assert_eq!(e.coefficient("x"), 4.0);
    }

    fn expr_strategy() -> impl Strategy<Value = LinearExpression> {
        (proptest::collection::vec((0usize..5, -10.0f64..10.0), 0..8), -5.0f64..5.0).prop_map(
            |(terms, c)| {
                let mut e = LinearExpression::from_terms(
                    terms.into_iter().map(|(i, v)| (format!("v{i}"), v)),
                );
                e.add_constant(c);
                e
            },
        )
    }

    proptest! {
        #[test]
        fn evaluation_is_linear(
            e1 in expr_strategy(),
            e2 in expr_strategy(),
            alpha in -3.0f64..3.0,
            beta in -3.0f64..3.0,
            vals in proptest::collection::vec(-10.0f64..10.0, 5),
        ) {
            let a: Assignment = vals.iter().enumerate().map(|(i, v)| (format!("v{i}"), *v)).collect();
            let mut combo = e1.scaled(alpha);
            combo.add_expr(&e2, beta);
            let lhs = evaluate_expression(&combo, &a).unwrap();
            let rhs = alpha * evaluate_expression(&e1, &a).unwrap()
                + beta * evaluate_expression(&e2, &a).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
        }
    }
}
