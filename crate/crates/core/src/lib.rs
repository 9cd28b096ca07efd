pub mod bound;
pub mod cli;
pub mod error;
pub mod operators;
pub mod oracle;
pub mod search;
pub mod settings;
