use super::expr::{Expr, Node};
use std::fmt;

// binding strength used to decide where parentheses are needed
const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const UNARY: u8 = 3;
const POWER: u8 = 4;
const ATOM: u8 = 5;

fn strength(e: &Expr) -> u8 {
    match e.node() {
        Node::Add(..) | Node::Sub(..) => SUM,
        Node::Mul(..) | Node::Div(..) => PRODUCT,
        Node::Neg(_) => UNARY,
        Node::Pow(..) => POWER,
        Node::Const(_) | Node::Var(_) | Node::Func(..) => ATOM,
    }
}

fn write_wrapped(f: &mut fmt::Formatter<'_>, e: &Expr, wrap: bool) -> fmt::Result {
    if wrap {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

fn write_binary(f: &mut fmt::Formatter<'_>, op: &str, level: u8, a: &Expr, b: &Expr) -> fmt::Result {
    write_wrapped(f, a, strength(a) < level)?;
    f.write_str(op)?;
    // all binary operators parse left-associatively, so an equal-strength
    // right operand keeps its parentheses; a negation is wrapped for legibility
    let sb = strength(b);
    write_wrapped(f, b, sb <= level || sb == UNARY)
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Const(c) => {
                if c.is_sign_negative() && *c != 0.0 {
                    write!(f, "(-{})", -c)
                } else {
                    write!(f, "{}", c.abs())
                }
            }
            Node::Var(v) => write!(f, "{v}"),
            Node::Add(a, b) => write_binary(f, "+", SUM, a, b),
            Node::Sub(a, b) => write_binary(f, "-", SUM, a, b),
            Node::Mul(a, b) => write_binary(f, "*", PRODUCT, a, b),
            Node::Div(a, b) => write_binary(f, "/", PRODUCT, a, b),
            Node::Neg(a) => {
                f.write_str("-")?;
                let bare = matches!(a.node(), Node::Var(_) | Node::Func(..) | Node::Pow(..));
                write_wrapped(f, a, !bare)
            }
            Node::Pow(a, b) => {
                let base_bare = match a.node() {
                    Node::Var(_) | Node::Func(..) => true,
                    Node::Const(c) => !c.is_sign_negative() || *c == 0.0,
                    _ => false,
                };
                write_wrapped(f, a, !base_bare)?;
                f.write_str("^")?;
                write_wrapped(f, b, strength(b) < POWER)
            }
            Node::Func(g, a) => write!(f, "{}({a})", g.name()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::expr::VarRef;
    use super::*;

    #[test]
    fn atoms() {
        assert_eq!(Expr::zero().to_string(), "0");
        assert_eq!(Expr::var(VarRef::State(0, 1)).to_string(), "q0d1");
        assert_eq!(Expr::var(VarRef::State(3, 0)).to_string(), "q3");
        assert_eq!(Expr::constant(-2.0).to_string(), "(-2)");
        assert_eq!(Expr::constant(0.5).to_string(), "0.5");
    }

    #[test]
    fn parenthesization() {
        let x = Expr::var(VarRef::state(0));
        let y = Expr::var(VarRef::Theta);
        let e = Expr::raw_mul(Expr::raw_add(x.clone(), y.clone()), y.clone());
        assert_eq!(e.to_string(), "(q0+theta)*theta");
        let e = Expr::raw_sub(x.clone(), Expr::raw_sub(y.clone(), x.clone()));
        assert_eq!(e.to_string(), "q0-(theta-q0)");
        let e = Expr::raw_neg(Expr::constant(2.0));
        assert_eq!(e.to_string(), "-(2)");
        let e = Expr::raw_pow(Expr::raw_neg(x.clone()), Expr::raw_pow(y.clone(), Expr::constant(2.0)));
        assert_eq!(e.to_string(), "(-q0)^theta^2");
    }
}
