#![allow(dead_code)]

pub mod psd_oracle;

use heyde::operator::{jordan_cell, LinearOperator};

/// Operators whose default witnesses must pass the residual check.
pub fn witness_operators() -> Vec<(&'static str, LinearOperator)> {
    vec![
        ("-I (n=2)", LinearOperator::scalar(2, -1.0).unwrap()),
        ("-I (n=3)", LinearOperator::scalar(3, -1.0).unwrap()),
        ("jordan_cell(2)", jordan_cell(2).unwrap()),
        ("jordan_cell(3)", jordan_cell(3).unwrap()),
        ("diag(-1,2)", LinearOperator::diagonal(&[-1.0, 2.0]).unwrap()),
        ("diag(-1,-2)", LinearOperator::diagonal(&[-1.0, -2.0]).unwrap()),
        ("diag(-2,-3)", LinearOperator::diagonal(&[-2.0, -3.0]).unwrap()),
        ("[[-1,1],[0,2]]", LinearOperator::from_rows(&[vec![-1.0, 1.0], vec![0.0, 2.0]]).unwrap()),
    ]
}

pub fn to_operator(m: [[i64; 2]; 2]) -> LinearOperator {
    LinearOperator::from_rows(&m.iter().map(|r| r.iter().map(|&x| x as f64).collect()).collect::<Vec<_>>()).unwrap()
}
