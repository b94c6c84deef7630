//! Initial data of the worked examples, shared by unit tests.

use crate::lattice::IntMatrix;
use crate::rational::int;
use crate::stack::StackInitialData;

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
