//! Concrete-syntax printing that the parser reads back unchanged.

use super::ast::*;

pub fn expr_to_string(spec: &SystemSpec, e: &Expr) -> String {
    match e {
        Expr::Const(b) => if *b { "1" } else { "0" }.to_string(),
        Expr::Var(v) => spec.vars[*v].clone(),
        Expr::Not(e) => format!("!{}", expr_to_string(spec, e)),
        Expr::Bin(op, a, b) => format!(
            "({} {} {})",
            expr_to_string(spec, a),
            op.symbol(),
            expr_to_string(spec, b)
        ),
    }
}

/// Prints `f` with `|`, `=>` and `<=>` restored where the tree has their
/// desugared shape.
pub fn formula_to_string(spec: &SystemSpec, f: &Formula) -> String {
    let p = |g: &Formula| formula_to_string(spec, g);
    match f {
        Formula::Atom(a) => spec.atom_name(*a),
        Formula::Not(g) => match &**g {
            Formula::And(a, b) => match (&**a, &**b) {
                (Formula::Not(x), Formula::Not(y)) => format!("({} | {})", p(x), p(y)),
                (x, Formula::Not(y)) => format!("({} => {})", p(x), p(y)),
                _ => format!("!{}", p(g)),
            },
            _ => format!("!{}", p(g)),
        },
        Formula::And(a, b) => match (&**a, &**b) {
            (Formula::Not(l), Formula::Not(r)) => match (&**l, &**r) {
                (Formula::And(x1, ny1), Formula::And(y2, nx2)) if matches!((&**ny1, &**nx2), (Formula::Not(y1), Formula::Not(x2)) if y1 == y2 && x1 == x2) =>
                {
                    format!("({} <=> {})", p(x1), p(y2))
                }
                _ => format!("({} & {})", p(a), p(b)),
            },
            _ => format!("({} & {})", p(a), p(b)),
        },
        Formula::Knows(i, g) => format!("Knows {} {}", spec.agents[*i].name, p(g)),
    }
}
