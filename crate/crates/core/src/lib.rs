pub mod cli;
pub mod fields;
pub mod oracle;
pub mod quadrature;
pub mod solver;
pub mod space;
