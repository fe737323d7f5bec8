//! Shared inputs for the benchmarks.

use hpefie_core::global_space::HpDivSpace;
use hpefie_core::mesh::{builtin_fixture, refine_levels, Fixture};
use hpefie_core::DegreeMap;

/// Uniform-degree space on a refined built-in fixture.
pub fn space(fixture: Fixture, level: usize, p: usize) -> HpDivSpace {
    let mesh = refine_levels(&builtin_fixture(fixture), level);
    HpDivSpace::new(&mesh, &DegreeMap::uniform(&mesh, p)).expect("built-in fixtures are valid")
}
