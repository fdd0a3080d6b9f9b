//! The four MILP formulations (arc-based, fragment-flow, pickup-space
//! fragment-flow, path-based) and the lazy-cut separation shared by the
//! fragment formulations.

pub mod abf;
pub mod cuts;
pub mod fff;
pub mod pbf;
pub mod psff;

pub use abf::{build_abf, build_abf_mdarp, Abf};
pub use cuts::{extract_structures, Selection, Structure};
pub use fff::{build_fff, build_fff_mdarp, Fff};
pub use pbf::{build_pbf, build_pbf_mdarp, enumerate_paths, PathSet, Pbf, PATH_CAP};
pub use psff::{build_psff, build_psff_mdarp, Psff};

/// Which formulation a run uses; mostly for dispatch and reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    Abf,
    Fff,
    Psff,
    Pbf,
}

impl Formulation {
    pub fn label(self) -> &'static str {
        match self {
            Formulation::Abf => "abf",
            Formulation::Fff => "fff",
            Formulation::Psff => "psff",
            Formulation::Pbf => "pbf",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "abf" => Some(Formulation::Abf),
            "fff" => Some(Formulation::Fff),
            "psff" => Some(Formulation::Psff),
            "pbf" => Some(Formulation::Pbf),
            _ => None,
        }
    }
}
