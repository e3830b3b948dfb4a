//! Chain-of-abstraction runtime: parse abstract reasoning traces, reify
//! them with domain tools, verify rewritten traces against gold data,
//! schedule decoding and tool calls, and score answers.

pub mod eval;
pub mod fixtures;
pub mod math;
pub mod pipeline;
pub mod reified;
pub mod trace;
pub mod value;
pub mod verify;
pub mod wiki;

pub use math::{reify_math, solve, EquationSystem, MathError};
pub use reified::{ReifiedTrace, StepRecord, ToolKind};
pub use trace::{parse_trace, Domain, ParseError, ParseErrorKind, Placeholder, Segment, Span, Trace};
pub use value::Value;
pub use wiki::{Article, EntityClass, Index, WikiBinding};
