#![allow(dead_code)]

//! Initial data of the worked examples, for the integration suites.

use num::bigint::BigInt;
use num::rational::BigRational;
use toric_mirror::lattice::IntMatrix;
use toric_mirror::stack::StackInitialData;
use toric_mirror::{Model, Options};

pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn p1() -> StackInitialData {
    StackInitialData::new(1, IntMatrix::from_rows(&[vec![1], vec![1]]), vec![int(1)])
}

pub fn p12() -> StackInitialData {
    StackInitialData::new(1, IntMatrix::from_rows(&[vec![1], vec![2]]), vec![int(1)])
}

pub fn p2() -> StackInitialData {
    StackInitialData::new(1, IntMatrix::from_rows(&[vec![1], vec![1], vec![1]]), vec![int(1)])
}

pub fn p112() -> StackInitialData {
    StackInitialData::new(1, IntMatrix::from_rows(&[vec![1], vec![1], vec![2]]), vec![int(1)])
}

pub fn p1xp1() -> StackInitialData {
    StackInitialData::new(
        2,
        IntMatrix::from_rows(&[vec![1, 0], vec![1, 0], vec![0, 1], vec![0, 1]]),
        vec![int(1), int(1)],
    )
}

/// P(1,1,2) with the age-one Box element adjoined as a fourth ray.
pub fn p112_extended() -> StackInitialData {
    StackInitialData::new(
        2,
        IntMatrix::from_rows(&[vec![1, 0], vec![0, 1], vec![1, 0], vec![-2, 1]]),
        vec![int(-1), int(1)],
    )
}

pub fn model(data: StackInitialData) -> Model {
    Model::build(data, None, Options::default()).expect("example data is valid")
}
