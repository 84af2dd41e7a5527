use super::expr::{Expr, Func, Node, VarRef};

/// Exact symbolic partial derivative of `e` with respect to `v`, all other
/// slots held fixed.
pub fn partial(e: &Expr, v: VarRef) -> Expr {
    match e.node() {
        Node::Const(_) => Expr::zero(),
        Node::Var(w) => {
            if *w == v {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Node::Add(a, b) => Expr::add(partial(a, v), partial(b, v)),
        Node::Sub(a, b) => Expr::sub(partial(a, v), partial(b, v)),
        Node::Mul(a, b) => {
            let da = partial(a, v);
            let db = partial(b, v);
            Expr::add(Expr::mul(da, b.clone()), Expr::mul(a.clone(), db))
        }
        Node::Div(a, b) => {
            let da = partial(a, v);
            let db = partial(b, v);
            if db.is_zero() {
                Expr::div(da, b.clone())
            } else {
                let num = Expr::sub(Expr::mul(da, b.clone()), Expr::mul(a.clone(), db));
                Expr::div(num, Expr::powi(b.clone(), 2))
            }
        }
        Node::Neg(a) => Expr::neg(partial(a, v)),
        Node::Pow(a, b) => {
            let da = partial(a, v);
            let db = partial(b, v);
            if db.is_zero() {
                // power rule, exponent independent of v
                let reduced = match b.as_const() {
                    Some(c) => Expr::pow(a.clone(), Expr::constant(c - 1.0)),
                    None => Expr::pow(a.clone(), Expr::sub(b.clone(), Expr::one())),
                };
                Expr::mul(Expr::mul(b.clone(), reduced), da)
            } else {
                let log_a = Expr::func(Func::Log, a.clone());
                let inner = Expr::add(
                    Expr::mul(db, log_a),
                    Expr::div(Expr::mul(b.clone(), da), a.clone()),
                );
                Expr::mul(e.clone(), inner)
            }
        }
        Node::Func(f, a) => {
            let da = partial(a, v);
            if da.is_zero() {
                return Expr::zero();
            }
            let outer = match f {
                Func::Sin => Expr::func(Func::Cos, a.clone()),
                Func::Cos => Expr::neg(Expr::func(Func::Sin, a.clone())),
                Func::Exp => e.clone(),
                Func::Log => return Expr::div(da, a.clone()),
                Func::Sqrt => {
                    return Expr::div(da, Expr::mul(Expr::constant(2.0), e.clone()));
                }
            };
            Expr::mul(outer, da)
        }
    }
}

/// Total derivative with respect to θ along a state trajectory:
/// `∂e/∂θ + Σ ∂e/∂q_i^(d) · q_i^(d+1)`.
///
/// Control and costate slots are treated as θ-independent here; derivatives
/// along control paths are assembled numerically by the caller.
pub fn total_derivative(e: &Expr) -> Expr {
    let mut terms = Vec::new();
    for v in e.vars() {
        match v {
            VarRef::Theta => terms.push(partial(e, v)),
            VarRef::State(i, d) => {
                terms.push(Expr::mul(partial(e, v), Expr::var(VarRef::State(i, d + 1))));
            }
            VarRef::Control(_) | VarRef::Costate(_) => {}
        }
    }
    Expr::sum(terms)
}

/// `k`-fold total derivative.
pub fn total_derivative_n(e: &Expr, k: usize) -> Expr {
    (0..k).fold(e.clone(), |acc, _| total_derivative(&acc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symexpr::{eval, parse, Dims, Jet};

    fn jet() -> Jet {
        Jet::new(0.3, vec![vec![0.7, -1.1, 0.4, 2.0, -0.5], vec![1.3, 0.2, -0.9, 0.6, 1.5]])
    }

    fn num(text: &str) -> f64 {
        eval(&parse(text, &Dims::new(2, 0, 4)).unwrap(), &jet()).unwrap()
    }

    fn d(text: &str, v: VarRef) -> f64 {
        eval(&partial(&parse(text, &Dims::new(2, 0, 4)).unwrap(), v), &jet()).unwrap()
    }

    #[test]
    fn elementary_rules() {
        let q0 = VarRef::State(0, 0);
        assert!((d("q0^3", q0) - 3.0 * 0.49).abs() < 1e-14);
        assert!((d("sin(q0)", q0) - 0.7f64.cos()).abs() < 1e-14);
        assert!((d("exp(2*q0)", q0) - 2.0 * 1.4f64.exp()).abs() < 1e-13);
        assert!((d("log(q0)", q0) - 1.0 / 0.7).abs() < 1e-14);
        assert!((d("sqrt(q0)", q0) - 0.5 / 0.7f64.sqrt()).abs() < 1e-14);
        assert!((d("q1/q0", q0) + 1.3 / 0.49).abs() < 1e-13);
        assert!((d("q0^q1", q0) - 1.3 * 0.7f64.powf(0.3)).abs() < 1e-13);
        assert!((d("theta*q0", VarRef::Theta) - 0.7).abs() < 1e-15);
        assert!(partial(&parse("q1d1^2", &Dims::new(2, 0, 4)).unwrap(), q0).is_zero());
    }

    #[test]
    fn total_derivative_chains_through_states() {
        // D(θ q0 q1') = q0 q1' + θ q0' q1' + θ q0 q1''
        let expect = 0.7 * 0.2 + 0.3 * -1.1 * 0.2 + 0.3 * 0.7 * -0.9;
        let e = parse("theta*q0*q1d1", &Dims::new(2, 0, 4)).unwrap();
        assert!((eval(&total_derivative(&e), &jet()).unwrap() - expect).abs() < 1e-14);
        // D² q0 = q0''
        let e = parse("q0", &Dims::new(2, 0, 4)).unwrap();
        assert!((eval(&total_derivative_n(&e, 2), &jet()).unwrap() - 0.4).abs() < 1e-15);
        assert!((num("q0d2") - 0.4).abs() < 1e-15);
    }

    #[test]
    fn controls_and_costates_are_frozen() {
        let e = parse("u0*p0 + q0*u0", &Dims::new(1, 1, 1)).unwrap();
        let de = total_derivative(&e);
        assert_eq!(de.vars(), vec![VarRef::State(0, 1), VarRef::Control(0)].into_iter().collect());
    }
}
