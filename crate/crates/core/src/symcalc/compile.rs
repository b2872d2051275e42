//! Flat evaluation tapes for hot loops (quadrature, sampling batteries).
//!
//! A compiled expression is a postorder instruction list over a register
//! file; evaluation is allocation-free given a scratch buffer. Semantics
//! match tree evaluation exactly, including the singular-denominator guard.

use super::expr::{EvalError, Expr, Node, SINGULAR_EPS};

#[derive(Debug, Clone, Copy)]
enum Inst {
    Const(f64),
    Var(u32),
    Add(u32, u32),
    Mul(u32, u32),
    Powi(u32, i32),
    Sqrt(u32),
    Exp(u32),
    Log(u32),
    Sin(u32),
    Cos(u32),
}

#[derive(Debug, Clone)]
pub struct Compiled {
    insts: Vec<Inst>,
    n_vars: usize,
}

impl Compiled {
    /// Compile against an ordered variable list; unknown symbols error.
    pub fn new(e: &Expr, vars: &[&str]) -> Result<Compiled, EvalError> {
        let mut insts = Vec::new();
        compile_node(e, vars, &mut insts)?;
        Ok(Compiled {
            insts,
            n_vars: vars.len(),
        })
    }

    pub fn scratch(&self) -> Vec<f64> {
        vec![0.0; self.insts.len()]
    }

    /// Evaluate at `point` (same order as the compile-time variable list).
    pub fn eval(&self, point: &[f64], scratch: &mut Vec<f64>) -> Result<f64, EvalError> {
        debug_assert_eq!(point.len(), self.n_vars);
        scratch.resize(self.insts.len(), 0.0);
        for (i, inst) in self.insts.iter().enumerate() {
            let v = match *inst {
                Inst::Const(c) => c,
                Inst::Var(j) => point[j as usize],
                Inst::Add(a, b) => scratch[a as usize] + scratch[b as usize],
                Inst::Mul(a, b) => scratch[a as usize] * scratch[b as usize],
                Inst::Powi(a, k) => {
                    let x = scratch[a as usize];
                    if k < 0 && x.abs() < SINGULAR_EPS {
                        return Err(EvalError::Singular("compiled denominator".into()));
                    }
                    x.powi(k)
                }
                Inst::Sqrt(a) => {
                    let x = scratch[a as usize];
                    if x < 0.0 {
                        return Err(EvalError::NegativeSqrt);
                    }
                    x.sqrt()
                }
                Inst::Exp(a) => scratch[a as usize].exp(),
                Inst::Log(a) => {
                    let x = scratch[a as usize];
                    if x <= 0.0 {
                        return Err(EvalError::LogDomain);
                    }
                    x.ln()
                }
                Inst::Sin(a) => scratch[a as usize].sin(),
                Inst::Cos(a) => scratch[a as usize].cos(),
            };
            scratch[i] = v;
        }
        let out = *scratch.last().unwrap_or(&0.0);
        if out.is_finite() {
            Ok(out)
        } else {
            Err(EvalError::NonFinite)
        }
    }
}

fn compile_node(e: &Expr, vars: &[&str], insts: &mut Vec<Inst>) -> Result<u32, EvalError> {
    let out = match e.node() {
        Node::Num(q) => {
            insts.push(Inst::Const(q.to_f64()));
            insts.len() - 1
        }
        Node::Sym(s) => {
            let j = vars
                .iter()
                .position(|v| *v == &**s)
                .ok_or_else(|| EvalError::Unbound(s.to_string()))?;
            insts.push(Inst::Var(j as u32));
            insts.len() - 1
        }
        Node::Add(xs) => {
            let mut acc = compile_node(&xs[0], vars, insts)?;
            for x in &xs[1..] {
                let r = compile_node(x, vars, insts)?;
                insts.push(Inst::Add(acc, r));
                acc = (insts.len() - 1) as u32;
            }
            acc as usize
        }
        Node::Mul(xs) => {
            let mut acc = compile_node(&xs[0], vars, insts)?;
            for x in &xs[1..] {
                let r = compile_node(x, vars, insts)?;
                insts.push(Inst::Mul(acc, r));
                acc = (insts.len() - 1) as u32;
            }
            acc as usize
        }
        Node::Pow(b, k) => {
            let r = compile_node(b, vars, insts)?;
            insts.push(Inst::Powi(r, *k as i32));
            insts.len() - 1
        }
        Node::Sqrt(u) => {
            let r = compile_node(u, vars, insts)?;
            insts.push(Inst::Sqrt(r));
            insts.len() - 1
        }
        Node::Exp(u) => {
            let r = compile_node(u, vars, insts)?;
            insts.push(Inst::Exp(r));
            insts.len() - 1
        }
        Node::Log(u) => {
            let r = compile_node(u, vars, insts)?;
            insts.push(Inst::Log(r));
            insts.len() - 1
        }
        Node::Sin(u) => {
            let r = compile_node(u, vars, insts)?;
            insts.push(Inst::Sin(r));
            insts.len() - 1
        }
        Node::Cos(u) => {
            let r = compile_node(u, vars, insts)?;
            insts.push(Inst::Cos(r));
            insts.len() - 1
        }
    };
    Ok(out as u32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcalc::parse::parse_with;

    #[test]
    fn compiled_matches_tree_eval() {
        let e = parse_with("(x + 2*y)^3 / (1 + x^2) - sqrt(4)*sin(y)", &|_| true).unwrap();
        let c = Compiled::new(&e, &["x", "y"]).unwrap();
        let mut scratch = c.scratch();
        for (x, y) in [(0.3, -0.7), (1.5, 2.0), (-0.2, 0.9)] {
            let tv = e
                .eval_with(&|s| match s {
                    "x" => Some(x),
                    "y" => Some(y),
                    _ => None,
                })
                .unwrap();
            let cv = c.eval(&[x, y], &mut scratch).unwrap();
            assert!((tv - cv).abs() <= 1e-12 * (1.0 + tv.abs()));
        }
    }
}
