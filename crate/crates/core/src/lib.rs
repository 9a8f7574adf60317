pub mod audit;
pub mod engine;
pub mod equivalence;
pub mod harness;
pub mod lint;
pub mod llm;
pub mod prompt;
pub mod render;
pub mod spec;
pub mod table;
pub mod value;
