use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

/// A variable slot an expression can reference.
///
/// `State(i, d)` is the `d`-th derivative of state component `i`; the
/// costate `Costate(i)` pairs with state component `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarRef {
    Theta,
    State(usize, usize),
    Control(usize),
    Costate(usize),
}

impl VarRef {
    pub fn state(component: usize) -> Self {
        VarRef::State(component, 0)
    }
}

impl fmt::Display for VarRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            VarRef::Theta => write!(f, "theta"),
            VarRef::State(i, 0) => write!(f, "q{i}"),
            VarRef::State(i, d) => write!(f, "q{i}d{d}"),
            VarRef::Control(j) => write!(f, "u{j}"),
            VarRef::Costate(i) => write!(f, "p{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(VarRef),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Neg(Expr),
    Pow(Expr, Expr),
    Func(Func, Expr),
}

/// Immutable, cheaply clonable expression tree.
///
/// The `raw_*` constructors build exactly the requested node. The plain
/// constructors (`add`, `mul`, ...) fold constants and drop 0/1 identities;
/// they never change the value of the expression.
#[derive(Clone, PartialEq)]
pub struct Expr(Arc<Node>);

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(&*self.0, f)
    }
}

impl Expr {
    pub fn from_node(node: Node) -> Self {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn constant(c: f64) -> Self {
        Self::from_node(Node::Const(c))
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn var(v: VarRef) -> Self {
        Self::from_node(Node::Var(v))
    }

    pub fn theta() -> Self {
        Self::var(VarRef::Theta)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    pub fn raw_add(a: Expr, b: Expr) -> Self {
        Self::from_node(Node::Add(a, b))
    }

    pub fn raw_sub(a: Expr, b: Expr) -> Self {
        Self::from_node(Node::Sub(a, b))
    }

    pub fn raw_mul(a: Expr, b: Expr) -> Self {
        Self::from_node(Node::Mul(a, b))
    }

    pub fn raw_div(a: Expr, b: Expr) -> Self {
        Self::from_node(Node::Div(a, b))
    }

    pub fn raw_neg(a: Expr) -> Self {
        Self::from_node(Node::Neg(a))
    }

    pub fn raw_pow(a: Expr, b: Expr) -> Self {
        Self::from_node(Node::Pow(a, b))
    }

    pub fn raw_func(f: Func, a: Expr) -> Self {
        Self::from_node(Node::Func(f, a))
    }

    pub fn add(a: Expr, b: Expr) -> Self {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Self::constant(x + y),
            (Some(x), _) if x == 0.0 => b,
            (_, Some(y)) if y == 0.0 => a,
            _ => match b.node() {
                Node::Neg(inner) => Self::raw_sub(a, inner.clone()),
                _ => Self::raw_add(a, b),
            },
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Self {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Self::constant(x - y),
            (Some(x), _) if x == 0.0 => Self::neg(b),
            (_, Some(y)) if y == 0.0 => a,
            _ => match b.node() {
                Node::Neg(inner) => Self::raw_add(a, inner.clone()),
                _ => Self::raw_sub(a, b),
            },
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Self {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Self::constant(x * y),
            (Some(x), _) | (_, Some(x)) if x == 0.0 => Self::zero(),
            (Some(x), _) if x == 1.0 => b,
            (_, Some(y)) if y == 1.0 => a,
            (Some(x), _) if x == -1.0 => Self::neg(b),
            (_, Some(y)) if y == -1.0 => Self::neg(a),
            (Some(x), None) => Self::scale(x, b),
            (None, Some(y)) => Self::scale(y, a),
            (None, None) => Self::raw_mul(a, b),
        }
    }

    /// `c * e`, merging `c` into a leading constant factor of `e`.
    fn scale(c: f64, e: Expr) -> Self {
        match e.node() {
            Node::Mul(l, r) => {
                if let Some(k) = l.as_const() {
                    return Self::mul(Self::constant(c * k), r.clone());
                }
                Self::raw_mul(Self::constant(c), e)
            }
            Node::Neg(inner) => Self::mul(Self::constant(-c), inner.clone()),
            _ => Self::raw_mul(Self::constant(c), e),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Self {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) if y != 0.0 => Self::constant(x / y),
            (Some(x), _) if x == 0.0 => Self::zero(),
            (_, Some(y)) if y == 1.0 => a,
            _ => Self::raw_div(a, b),
        }
    }

    pub fn neg(a: Expr) -> Self {
        match a.node() {
            Node::Const(c) => Self::constant(-c),
            Node::Neg(inner) => inner.clone(),
            _ => Self::raw_neg(a),
        }
    }

    pub fn pow(a: Expr, b: Expr) -> Self {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Self::constant(x.powf(y)),
            (_, Some(y)) if y == 0.0 => Self::one(),
            (_, Some(y)) if y == 1.0 => a,
            (Some(x), _) if x == 1.0 => Self::one(),
            _ => Self::raw_pow(a, b),
        }
    }

    pub fn powi(a: Expr, n: i32) -> Self {
        Self::pow(a, Self::constant(f64::from(n)))
    }

    pub fn func(f: Func, a: Expr) -> Self {
        match a.as_const() {
            Some(x) => Self::constant(apply_func(f, x)),
            None => Self::raw_func(f, a),
        }
    }

    /// Sum of a list of expressions (zero for an empty list).
    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Self {
        terms.into_iter().fold(Self::zero(), Self::add)
    }

    /// All variable slots referenced by the expression, in sorted order.
    pub fn vars(&self) -> BTreeSet<VarRef> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<VarRef>) {
        match self.node() {
            Node::Const(_) => {}
            Node::Var(v) => {
                out.insert(*v);
            }
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Node::Neg(a) | Node::Func(_, a) => a.collect_vars(out),
        }
    }

    pub fn depends_on(&self, v: VarRef) -> bool {
        match self.node() {
            Node::Const(_) => false,
            Node::Var(w) => *w == v,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
                a.depends_on(v) || b.depends_on(v)
            }
            Node::Neg(a) | Node::Func(_, a) => a.depends_on(v),
        }
    }

    /// Highest state derivative order referenced, if any state slot appears.
    pub fn max_state_order(&self) -> Option<usize> {
        self.vars()
            .into_iter()
            .filter_map(|v| match v {
                VarRef::State(_, d) => Some(d),
                _ => None,
            })
            .max()
    }

    /// Replaces variables for which `f` returns `Some`, rebuilding with the
    /// simplifying constructors.
    pub fn substitute(&self, f: &dyn Fn(VarRef) -> Option<Expr>) -> Expr {
        match self.node() {
            Node::Const(_) => self.clone(),
            Node::Var(v) => f(*v).unwrap_or_else(|| self.clone()),
            Node::Add(a, b) => Self::add(a.substitute(f), b.substitute(f)),
            Node::Sub(a, b) => Self::sub(a.substitute(f), b.substitute(f)),
            Node::Mul(a, b) => Self::mul(a.substitute(f), b.substitute(f)),
            Node::Div(a, b) => Self::div(a.substitute(f), b.substitute(f)),
            Node::Pow(a, b) => Self::pow(a.substitute(f), b.substitute(f)),
            Node::Neg(a) => Self::neg(a.substitute(f)),
            Node::Func(g, a) => Self::func(*g, a.substitute(f)),
        }
    }

    pub fn node_count(&self) -> usize {
        match self.node() {
            Node::Const(_) | Node::Var(_) => 1,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
                1 + a.node_count() + b.node_count()
            }
            Node::Neg(a) | Node::Func(_, a) => 1 + a.node_count(),
        }
    }
}

pub(crate) fn apply_func(f: Func, x: f64) -> f64 {
    match f {
        Func::Sin => x.sin(),
        Func::Cos => x.cos(),
        Func::Exp => x.exp(),
        Func::Log => x.ln(),
        Func::Sqrt => x.sqrt(),
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::add(self, rhs)
    }
}

impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::sub(self, rhs)
    }
}

impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::mul(self, rhs)
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::div(self, rhs)
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

impl From<f64> for Expr {
    fn from(c: f64) -> Self {
        Expr::constant(c)
    }
}

impl From<VarRef> for Expr {
    fn from(v: VarRef) -> Self {
        Expr::var(v)
    }
}
