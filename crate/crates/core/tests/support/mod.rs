pub mod gradcheck;
pub mod metric_oracle;
pub mod quadrature;
