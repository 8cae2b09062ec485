//! Brute-force enumeration of solutions and valid domains. Test-scale only.

use std::collections::BTreeSet;

use super::{Assignment, ConfigModel, DomainSets, ModelError};

pub const DEFAULT_ENUM_CAP: u128 = 10_000_000;
pub const ENUM_CAP_ENV: &str = "VDCONF_ENUM_CAP";

/// Enumeration cap, overridable through `VDCONF_ENUM_CAP`.
pub fn enum_cap() -> u128 {
    std::env::var(ENUM_CAP_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_ENUM_CAP)
}

fn check_cap(model: &ConfigModel, cap: u128) -> Result<(), ModelError> {
    let mut space: u128 = 1;
    for size in model.domain_sizes() {
        space = space.saturating_mul(size as u128);
    }
    if space > cap {
        return Err(ModelError::CapExceeded { space, cap });
    }
    Ok(())
}

/// Calls `visit` on every total assignment consistent with `fixed`, in
/// lexicographic order (variable 0 most significant).
fn for_each_extension(model: &ConfigModel, fixed: &Assignment, mut visit: impl FnMut(&[usize])) {
    let sizes = model.domain_sizes();
    let n = sizes.len();
    let mut values: Vec<usize> = (0..n).map(|i| fixed.get(i).unwrap_or(0)).collect();
    loop {
        visit(&values);
        // odometer increment over free variables, rightmost fastest
        let mut i = n;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if fixed.get(i).is_some() {
                continue;
            }
            values[i] += 1;
            if values[i] < sizes[i] {
                break;
            }
            values[i] = 0;
        }
    }
}

fn satisfies(model: &ConfigModel, values: &[usize]) -> bool {
    model.rules().iter().all(|r| r.eval_dense(values))
}

pub fn oracle_solutions(model: &ConfigModel) -> Result<Vec<Vec<usize>>, ModelError> {
    oracle_solutions_with_cap(model, enum_cap())
}

/// All satisfying total assignments as dense value vectors, lexicographically ordered.
pub fn oracle_solutions_with_cap(
    model: &ConfigModel,
    cap: u128,
) -> Result<Vec<Vec<usize>>, ModelError> {
    check_cap(model, cap)?;
    let mut out = Vec::new();
    for_each_extension(model, &Assignment::new(), |values| {
        if satisfies(model, values) {
            out.push(values.to_vec());
        }
    });
    Ok(out)
}

/// Number of satisfying total assignments extending `rho`.
pub fn oracle_count(model: &ConfigModel, rho: &Assignment) -> Result<u128, ModelError> {
    check_cap(model, enum_cap())?;
    let mut count = 0u128;
    for_each_extension(model, rho, |values| {
        if satisfies(model, values) {
            count += 1;
        }
    });
    Ok(count)
}

pub fn oracle_valid_domains(
    model: &ConfigModel,
    rho: &Assignment,
) -> Result<DomainSets, ModelError> {
    oracle_valid_domains_with_cap(model, rho, enum_cap())
}

/// For every variable, the values `v` such that `rho ∪ {(i, v)}` extends to a
/// solution. Assigned variables report their own value, or nothing if `rho`
/// is not valid.
pub fn oracle_valid_domains_with_cap(
    model: &ConfigModel,
    rho: &Assignment,
    cap: u128,
) -> Result<DomainSets, ModelError> {
    check_cap(model, cap)?;
    let mut domains: DomainSets = vec![BTreeSet::new(); model.len()];
    for_each_extension(model, rho, |values| {
        if satisfies(model, values) {
            for (set, &v) in domains.iter_mut().zip(values) {
                set.insert(v);
            }
        }
    });
    Ok(domains)
}
