//! Randomized sample sort with test-and-set bucket scatter, and semisort.

mod buckets;
mod quadratic;
mod sample;
mod semisort;

pub use buckets::{concat, scatter, BucketTable, Scatter, ScatterTask};
pub use quadratic::quadratic_sort;
pub use semisort::{semisort, semisort_by_key};
pub use sample::{bucket_of, distribute, sample_sort, sample_sort_with, Distribution, SortParams, SortStats};
