pub mod ast;
pub mod gen;
pub mod oracles;
pub mod kprime;
pub mod parse;
pub mod eval;
pub mod structure;
pub mod pistar;
pub mod selftest;
pub mod translate;
pub mod trees;
