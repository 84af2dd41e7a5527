use super::expr::{apply_func, Expr, Func, Node, VarRef};
use thiserror::Error;

/// Point evaluation record: θ together with q and its derivatives.
///
/// `q[i][d]` holds the `d`-th derivative of state component `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub theta: f64,
    pub q: Vec<Vec<f64>>,
    pub u: Option<Vec<f64>>,
    pub p: Option<Vec<f64>>,
}

impl Jet {
    pub fn new(theta: f64, q: Vec<Vec<f64>>) -> Self {
        Jet { theta, q, u: None, p: None }
    }

    pub fn with_control(mut self, u: Vec<f64>) -> Self {
        self.u = Some(u);
        self
    }

    pub fn with_costate(mut self, p: Vec<f64>) -> Self {
        self.p = Some(p);
        self
    }

    pub fn state_dim(&self) -> usize {
        self.q.len()
    }

    /// Highest derivative order available for every component.
    pub fn order(&self) -> usize {
        self.q.iter().map(|c| c.len()).min().unwrap_or(0).saturating_sub(1)
    }

    /// Value of `q_i^{(d)}`, if present.
    pub fn state(&self, i: usize, d: usize) -> Option<f64> {
        self.q.get(i).and_then(|c| c.get(d)).copied()
    }

    pub fn lookup(&self, v: VarRef) -> Result<f64, EvalError> {
        let found = match v {
            VarRef::Theta => Some(self.theta),
            VarRef::State(i, d) => self.state(i, d),
            VarRef::Control(j) => self.u.as_ref().and_then(|u| u.get(j)).copied(),
            VarRef::Costate(i) => self.p.as_ref().and_then(|p| p.get(i)).copied(),
        };
        found.ok_or(EvalError::MissingSlot(v))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("jet has no value for `{0}`")]
    MissingSlot(VarRef),
    #[error("log of non-positive argument {0}")]
    LogDomain(f64),
    #[error("sqrt of negative argument {0}")]
    SqrtDomain(f64),
    #[error("division by zero")]
    DivisionByZero,
}

/// Evaluates `e` on `jet`.
pub fn eval(e: &Expr, jet: &Jet) -> Result<f64, EvalError> {
    Ok(match e.node() {
        Node::Const(c) => *c,
        Node::Var(v) => jet.lookup(*v)?,
        Node::Add(a, b) => eval(a, jet)? + eval(b, jet)?,
        Node::Sub(a, b) => eval(a, jet)? - eval(b, jet)?,
        Node::Mul(a, b) => eval(a, jet)? * eval(b, jet)?,
        Node::Div(a, b) => {
            let num = eval(a, jet)?;
            let den = eval(b, jet)?;
            if den == 0.0 {
                return Err(EvalError::DivisionByZero);
            }
            num / den
        }
        Node::Neg(a) => -eval(a, jet)?,
        Node::Pow(a, b) => {
            let base = eval(a, jet)?;
            match b.as_const() {
                Some(n) if n.fract() == 0.0 && n.abs() <= 64.0 => base.powi(n as i32),
                _ => base.powf(eval(b, jet)?),
            }
        }
        Node::Func(f, a) => {
            let x = eval(a, jet)?;
            match f {
                Func::Log if x <= 0.0 => return Err(EvalError::LogDomain(x)),
                Func::Sqrt if x < 0.0 => return Err(EvalError::SqrtDomain(x)),
                _ => apply_func(*f, x),
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_slots_are_reported() {
        let jet = Jet::new(0.5, vec![vec![1.0, 2.0]]);
        let e = Expr::var(VarRef::State(0, 2));
        assert_eq!(eval(&e, &jet), Err(EvalError::MissingSlot(VarRef::State(0, 2))));
        let u = Expr::var(VarRef::Control(0));
        assert!(matches!(eval(&u, &jet), Err(EvalError::MissingSlot(_))));
    }

    #[test]
    fn domain_errors() {
        let jet = Jet::new(-1.0, vec![]);
        assert!(matches!(eval(&Expr::raw_func(Func::Log, Expr::theta()), &jet), Err(EvalError::LogDomain(_))));
        assert!(matches!(eval(&Expr::raw_func(Func::Sqrt, Expr::theta()), &jet), Err(EvalError::SqrtDomain(_))));
        let d = Expr::raw_div(Expr::one(), Expr::zero());
        assert_eq!(eval(&d, &jet), Err(EvalError::DivisionByZero));
    }
}
