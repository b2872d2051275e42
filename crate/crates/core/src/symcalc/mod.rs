//! Minimal symbolic engine: expression trees over chart coordinates, a text
//! parser, exact differentiation, best-effort simplification and numeric
//! evaluation. Everything downstream builds tensor components from these.

pub mod chart;
pub mod compile;
pub mod expr;
pub mod parse;
pub mod poly;

pub use chart::{is_identically_zero, Chart, ChartError, ZeroMethod, ZeroReport};
pub use compile::Compiled;
pub use expr::{add, cos, div, exp, log, mul, neg, pow, sin, sqrt, sub, EvalError, Expr, Node, Q};
pub use parse::{parse_with, ParseError};
pub use poly::{simplify, sqrt_assuming_positive, symbolic_zero, NormError, Normalizer};
