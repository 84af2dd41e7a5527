//! Parse a Lagrangian, take partial and total derivatives, evaluate on a jet.

use falva::symexpr::{eval, parse, partial, total_derivative, Dims, Jet, VarRef};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let l = parse("0.5*q0d1^2 - 0.5*q0^2 + theta*sin(q0)", &Dims::new(1, 0, 1))?;
    let g1 = partial(&l, VarRef::State(0, 1));
    let dg1 = total_derivative(&g1);
    println!("L          = {l}");
    println!("dL/dq'     = {g1}");
    println!("d/dθ dL/dq' = {dg1}");

    let jet = Jet::new(0.3, vec![vec![0.2, 1.0, -0.5]]);
    println!("at θ = 0.3: L = {:.6}, d/dθ dL/dq' = {:.6}", eval(&l, &jet)?, eval(&dg1, &jet)?);
    Ok(())
}
