use std::fmt::Write;

use super::{
    BilinearModel, BilinearTerm, Integrality, LinearExpression, ObjectiveSense, RowModel,
    OBJECTIVE_LABEL,
};

fn fmt_num(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else if v == 0.0 {
        "0".into()
    } else {
        format!("{v}")
    }
}

fn push_term(out: &mut String, first: &mut bool, coef: f64, token: &str) {
    let sign = if coef < 0.0 { '-' } else { '+' };
    let mag = coef.abs();
    if *first {
        if coef < 0.0 {
            out.push_str("- ");
        }
    } else {
        let _ = write!(out, " {sign} ");
    }
    if mag != 1.0 {
        let _ = write!(out, "{} ", fmt_num(mag));
    }
    out.push_str(token);
    *first = false;
}

fn render_lhs(expr: &LinearExpression, products: &[BilinearTerm]) -> String {
    let mut out = String::new();
    let mut first = true;
    for (id, c) in expr.terms() {
        if *c != 0.0 {
            push_term(&mut out, &mut first, *c, id);
        }
    }
    for t in products {
        if t.coefficient != 0.0 {
            push_term(&mut out, &mut first, t.coefficient, &format!("[{} * {}]", t.a, t.b));
        }
    }
    if first {
        out.push('0');
    }
    out
}

/// Renders a linear, mixed-integer or bilinear model in the LP-style text
/// format described in `docs/lp_format.md`. Output depends only on the model
/// contents and declaration order.
pub fn export_lp_text<M: RowModel + ?Sized>(model: &M) -> String {
    let lin = model.linear();
    let mut out = String::new();
    out.push_str(match lin.sense() {
        ObjectiveSense::Minimize => "minimize\n",
        ObjectiveSense::Maximize => "maximize\n",
    });
    let mut obj = render_lhs(lin.objective(), model.products_for(OBJECTIVE_LABEL));
    let c = lin.objective().constant();
    if c != 0.0 {
        let sign = if c < 0.0 { '-' } else { '+' };
        let _ = write!(obj, " {sign} {}", fmt_num(c.abs()));
    }
    let _ = writeln!(out, " obj: {obj}");
    out.push_str("subject to\n");
    for row in lin.constraints() {
        let lhs = render_lhs(&row.expr, model.products_for(&row.label));
        let rhs = row.rhs - row.expr.constant();
        let _ = writeln!(out, " {}: {} {} {}", row.label, lhs, row.sense.symbol(), fmt_num(rhs));
    }
    let mut bounds = Vec::new();
    let mut binaries = Vec::new();
    let mut generals = Vec::new();
    for v in lin.variables() {
        match v.integrality {
            Integrality::Binary => {
                binaries.push(v.id.as_str());
                if v.lower == 0.0 && v.upper == 1.0 {
                    continue;
                }
            }
            Integrality::Integer => generals.push(v.id.as_str()),
            Integrality::Continuous => {}
        }
        let (l, u) = (v.lower, v.upper);
        if v.integrality != Integrality::Binary && l == 0.0 && u == f64::INFINITY {
            continue;
        }
        let line = if l == u {
            format!(" {} = {}", v.id, fmt_num(l))
        } else if l == f64::NEG_INFINITY && u == f64::INFINITY {
            format!(" {} free", v.id)
        } else if u == f64::INFINITY {
            format!(" {} >= {}", v.id, fmt_num(l))
        } else {
            format!(" {} <= {} <= {}", fmt_num(l), v.id, fmt_num(u))
        };
        bounds.push(line);
    }
    if !bounds.is_empty() {
        out.push_str("bounds\n");
        for b in bounds {
            out.push_str(&b);
            out.push('\n');
        }
    }
    for (header, ids) in [("binary", binaries), ("general", generals)] {
        if !ids.is_empty() {
            out.push_str(header);
            out.push('\n');
            for id in ids {
                let _ = writeln!(out, " {id}");
            }
        }
    }
    out.push_str("end\n");
    out
}

impl BilinearModel {
    pub fn to_lp_text(&self) -> String {
        export_lp_text(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LinearModel, RowSense, VariableDef};

    #[test]
    fn trivial_model_is_five_lines() {
        let mut m = LinearModel::new(ObjectiveSense::Minimize);
        m.add_variable(VariableDef::nonnegative("x")).unwrap();
        m.set_objective(LinearExpression::from_terms([("x", 1.0)])).unwrap();
        m.add_constraint("c", LinearExpression::from_terms([("x", 1.0)]), RowSense::Ge, 1.0)
            .unwrap();
        let text = export_lp_text(&m);
        assert_eq!(text, "minimize\n obj: x\nsubject to\n c: x >= 1\nend\n");
        assert_eq!(text.lines().count(), 5);
    }

    #[test]
    fn products_bounds_and_integrality_sections() {
        let mut base = LinearModel::new(ObjectiveSense::Maximize);
        base.add_variable(VariableDef::continuous("p", 1.0, 3.0)).unwrap();
        base.add_variable(VariableDef::nonnegative("y")).unwrap();
        base.add_variable(VariableDef::free("f")).unwrap();
        base.add_variable(VariableDef::binary("b")).unwrap();
        base.add_variable(VariableDef::integer("n", 0.0, 4.0)).unwrap();
        base.set_objective(LinearExpression::from_terms([("y", 2.5), ("b", -1.0)])).unwrap();
        let mut m = BilinearModel::new(base);
        m.add_row(
            "blend",
            LinearExpression::from_terms([("y", 3.0)]).with("f", 1.0),
            vec![BilinearTerm::new("p", "y", -1.0)],
            RowSense::Eq,
            0.0,
        )
        .unwrap();
        let text = export_lp_text(&m);
        let expected = "maximize\n obj: 2.5 y - b\nsubject to\n blend: 3 y + f - [p * y] = 0\n\
bounds\n 1 <= p <= 3\n f free\n 0 <= n <= 4\nbinary\n b\ngeneral\n n\nend\n";
        assert_eq!(text, expected);
    }
}
