//! The built-in experiment families.

mod clt;
mod dbm_local_factor;
mod field_scan;
mod free_energy;
mod gmc_sample;
mod kpoint;
mod mde_report;
mod thick_points;

use crate::registry::Experiment;

pub fn all() -> Vec<Box<dyn Experiment>> {
    vec![
        Box::new(kpoint::Kpoint),
        Box::new(kpoint::Onepoint),
        Box::new(field_scan::FieldScan),
        Box::new(clt::Clt),
        Box::new(thick_points::ThickPoints),
        Box::new(free_energy::FreeEnergy),
        Box::new(dbm_local_factor::DbmLocalFactor),
        Box::new(gmc_sample::GmcSample),
        Box::new(mde_report::MdeReport),
    ]
}
