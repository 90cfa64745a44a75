//! Randomized, seeded checks of the weak and strong maximum principles,
//! Hopf positivity, the equicontinuity bound and empirical Harnack
//! constants. Every instance is reproducible from `(seed, instance)`.

mod checks;
mod region;
mod report;
mod sampling;
mod suites;

pub use checks::{
    check_equicontinuity, check_hopf, check_strong_mp, check_weak_mp, estimate_harnack_constant,
    HarnackEstimate, Tag, EQUICONTINUITY_TOLERANCE, HOPF_PEAK_TOLERANCE, STRICT_DEFICIT_TOLERANCE,
    WEAK_MP_TOLERANCE,
};
pub use region::{Region, RegionVertices};
pub use report::{CheckReport, Verdict, Witness};
pub use sampling::{
    generate_instance, instance_rng, random_boundary, sample_solutions, BoundaryFamily, Instance,
    InstanceFamily, MeasureShape, Sample,
};
pub use suites::{
    equicontinuity_suite, harnack_suite, hopf_suite, maximum_principle_suite,
    standard_harnack_potentials, HarnackReport, HarnackSeries, HARNACK_SPREAD_TOLERANCE,
};
