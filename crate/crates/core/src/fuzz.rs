//! Differential testing of the compiled engine against brute-force
//! enumeration, on random small models.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bdd::{BddStore, NodeId};
use crate::cvd::{build_layers, cvd_classic, valid_domains_report, CvdOptions, MarkTable};
use crate::encode::{compile, restrict_value, CompiledSpace};
use crate::model::{
    oracle_count, oracle_solutions, oracle_valid_domains, parse_model, satisfies_all, Assignment,
    ConfigModel, Domain, Formula, ModelError,
};
use crate::session::Session;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FuzzBounds {
    pub max_vars: usize,
    pub max_domain: usize,
    pub max_rules: usize,
}

impl Default for FuzzBounds {
    fn default() -> Self {
        FuzzBounds {
            max_vars: 5,
            max_domain: 5,
            max_rules: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FuzzConfig {
    pub seed: u64,
    /// Satisfiable models to check. Unsatisfiable ones are checked too but
    /// not counted here.
    pub trials: usize,
    pub bounds: FuzzBounds,
    /// Random valid partial assignments per model, on top of the empty one.
    pub assignments_per_model: usize,
    /// Rule permutations compiled per model for the canonicity check.
    pub permutations: usize,
    pub cvd: CvdOptions,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            seed: 42,
            trials: 1000,
            bounds: FuzzBounds::default(),
            assignments_per_model: 3,
            permutations: 20,
            cvd: CvdOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureKind {
    SatCount,
    Domains,
    SkippedSoundness,
    VisitBound,
    Marking,
    Canonicity,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub kind: FailureKind,
    pub assignment: Assignment,
    pub detail: String,
}

/// Everything needed to re-run a failing check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reproducer {
    pub seed: u64,
    pub trial: u64,
    pub kind: FailureKind,
    pub detail: String,
    /// Model JSON.
    pub model: String,
    /// `name=value` literals of the partial assignment.
    pub assignment: Vec<String>,
    pub certify_segment_endpoints: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FuzzReport {
    pub trials: usize,
    pub unsatisfiable: usize,
    pub assignments_checked: usize,
    pub certified_checked: usize,
    pub sat_count_mismatches: usize,
    pub domain_mismatches: usize,
    pub skipped_violations: usize,
    pub bound_violations: usize,
    pub marking_mismatches: usize,
    pub canonicity_violations: usize,
    pub first_failure: Option<Reproducer>,
}

impl FuzzReport {
    pub fn failures(&self) -> usize {
        self.sat_count_mismatches
            + self.domain_mismatches
            + self.skipped_violations
            + self.bound_violations
            + self.marking_mismatches
            + self.canonicity_violations
    }

    fn record(&mut self, failure: &Failure) {
        match failure.kind {
            FailureKind::SatCount => self.sat_count_mismatches += 1,
            FailureKind::Domains => self.domain_mismatches += 1,
            FailureKind::SkippedSoundness => self.skipped_violations += 1,
            FailureKind::VisitBound => self.bound_violations += 1,
            FailureKind::Marking => self.marking_mismatches += 1,
            FailureKind::Canonicity => self.canonicity_violations += 1,
        }
    }
}

/// Deterministic per-trial generator.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn random_atom(rng: &mut impl Rng, sizes: &[usize]) -> Formula {
    let var = rng.gen_range(0..sizes.len());
    let value = rng.gen_range(0..sizes[var]);
    if rng.gen_bool(0.25) {
        Formula::not_equal(var, value)
    } else {
        Formula::atom(var, value)
    }
}

/// Random model: domain sizes uniform in `1..=max_domain`, each rule an
/// implication or a disjunction over at most three atoms.
pub fn random_model(rng: &mut impl Rng, bounds: FuzzBounds) -> ConfigModel {
    let n = rng.gen_range(1..=bounds.max_vars.max(1));
    let sizes: Vec<usize> = (0..n)
        .map(|_| rng.gen_range(1..=bounds.max_domain.max(1)))
        .collect();
    let rule_count = rng.gen_range(0..=bounds.max_rules);
    let rules = (0..rule_count)
        .map(|_| {
            let atoms = rng.gen_range(1..=3);
            if atoms >= 2 && rng.gen_bool(0.5) {
                let lhs = if atoms == 3 {
                    Formula::and(random_atom(rng, &sizes), random_atom(rng, &sizes))
                } else {
                    random_atom(rng, &sizes)
                };
                Formula::implies(lhs, random_atom(rng, &sizes))
            } else {
                let mut f = random_atom(rng, &sizes);
                for _ in 1..atoms {
                    f = Formula::or(f, random_atom(rng, &sizes));
                }
                f
            }
        })
        .collect();
    ConfigModel::new(
        sizes
            .iter()
            .enumerate()
            .map(|(i, &s)| (format!("v{i}"), Domain::sized(s))),
        rules,
    )
    .expect("generated rules respect the domains")
}

/// A valid partial assignment: a random subset of a random solution.
pub fn random_partial(
    rng: &mut impl Rng,
    model: &ConfigModel,
    solutions: &[Vec<usize>],
) -> Assignment {
    let solution = solutions.choose(rng).expect("at least one solution");
    let mut vars: Vec<usize> = (0..solution.len()).collect();
    vars.shuffle(rng);
    let keep = rng.gen_range(0..=vars.len());
    let mut rho = Assignment::new();
    for &var in &vars[..keep] {
        rho.bind(model, var, solution[var])
            .expect("solution values are in range");
    }
    rho
}

fn restrict_all(store: &mut BddStore, space: &CompiledSpace, rho: &Assignment) -> NodeId {
    let mut root = space.root;
    for (var, value) in rho.iter() {
        root = restrict_value(store, &space.layout, root, var, value).expect("in range");
    }
    root
}

fn full(space: &CompiledSpace, var: usize) -> BTreeSet<usize> {
    (0..space.layout.domain_size(var)).collect()
}

/// Runs every per-assignment check of the harness on one `(model, ρ)` pair.
pub fn check_assignment(
    space: &CompiledSpace,
    rho: &Assignment,
    options: CvdOptions,
) -> Result<Vec<Failure>, ModelError> {
    let model = &space.model;
    let mut failures = Vec::new();
    let mut fail = |kind, detail: String| {
        failures.push(Failure {
            kind,
            assignment: rho.clone(),
            detail,
        })
    };
    let mut store = BddStore::overlay(Arc::clone(&space.store));
    let root = restrict_all(&mut store, space, rho);

    let oracle = oracle_valid_domains(model, rho)?;
    let report = valid_domains_report(&store, &space.layout, root, options);
    if report.domains != oracle {
        fail(
            FailureKind::Domains,
            format!("engine {:?} vs oracle {:?}", report.domains, oracle),
        );
    }
    let count = oracle_count(model, rho)?;
    if store.sat_count(root) != BigUint::from(count) {
        fail(
            FailureKind::SatCount,
            format!("sat_count {} vs oracle {count}", store.sat_count(root)),
        );
    }

    if root != NodeId::TERM0 {
        let layers = build_layers(&store, &space.layout, root);
        let mut marks = MarkTable::new(store.len());
        for &var in &report.certified {
            let mut visits = 0;
            let classic = cvd_classic(&store, &space.layout, var, &layers, &mut marks, &mut visits);
            let expected = full(space, var);
            if classic != expected || oracle[var] != expected {
                fail(
                    FailureKind::SkippedSoundness,
                    format!(
                        "variable {var} certified full; classic {classic:?}, oracle {:?}",
                        oracle[var]
                    ),
                );
            }
        }
    }

    if options.marking {
        let violations = report.bound_violations(&space.layout);
        if !violations.is_empty() {
            fail(
                FailureKind::VisitBound,
                format!(
                    "visit bound exceeded on variables {violations:?}: {:?}",
                    report.visits
                ),
            );
        }
        let unmarked = valid_domains_report(
            &store,
            &space.layout,
            root,
            CvdOptions {
                marking: false,
                ..options
            },
        );
        if unmarked.domains != report.domains {
            fail(
                FailureKind::Marking,
                format!(
                    "marked {:?} vs unmarked {:?}",
                    report.domains, unmarked.domains
                ),
            );
        }
    }
    Ok(failures)
}

/// Compiles `count` random permutations of the rule list and compares root
/// ids and stores with the original compilation.
pub fn check_canonicity(space: &CompiledSpace, rng: &mut impl Rng, count: usize) -> Vec<Failure> {
    let reference = space.store.write_text(&[space.root]);
    let mut failures = Vec::new();
    for _ in 0..count {
        let mut rules = space.model.rules().to_vec();
        rules.shuffle(rng);
        let permuted = space
            .model
            .with_rules(rules)
            .expect("same rules, same variables");
        let other = compile(&permuted);
        if other.root != space.root || other.store.write_text(&[other.root]) != reference {
            failures.push(Failure {
                kind: FailureKind::Canonicity,
                assignment: Assignment::new(),
                detail: format!("root {} vs {}", other.root, space.root),
            });
        }
    }
    failures
}

fn reproducer(
    config: &FuzzConfig,
    trial: u64,
    model: &ConfigModel,
    failure: &Failure,
) -> Reproducer {
    Reproducer {
        seed: config.seed,
        trial,
        kind: failure.kind,
        detail: failure.detail.clone(),
        model: model.to_json(),
        assignment: failure
            .assignment
            .iter()
            .map(|(var, value)| {
                let v = &model.variables()[var];
                format!("{}={}", v.name, v.domain.label(value))
            })
            .collect(),
        certify_segment_endpoints: config.cvd.certify_segment_endpoints,
    }
}

/// Checks one generated model. Returns whether it was satisfiable.
fn run_trial(config: &FuzzConfig, trial: u64, report: &mut FuzzReport) -> Result<bool, ModelError> {
    let mut rng = trial_rng(config.seed, trial);
    let model = random_model(&mut rng, config.bounds);
    let space = compile(&model);
    let solutions = oracle_solutions(&model)?;

    let mut rhos = vec![Assignment::new()];
    if !solutions.is_empty() {
        for _ in 0..config.assignments_per_model {
            rhos.push(random_partial(&mut rng, &model, &solutions));
        }
    }
    let mut failures = Vec::new();
    for rho in &rhos {
        let found = check_assignment(&space, rho, config.cvd)?;
        report.assignments_checked += 1;
        failures.extend(found);
    }
    failures.extend(check_canonicity(&space, &mut rng, config.permutations));
    let layers = build_layers(&space.store, &space.layout, space.root);
    if space.root != NodeId::TERM0 {
        report.certified_checked += crate::cvd::cvd_skipped_with(
            &space.store,
            &space.layout,
            space.root,
            &layers,
            config.cvd,
        )
        .map(|c| c.len())
        .unwrap_or(0);
    }

    for failure in &failures {
        report.record(failure);
    }
    if report.first_failure.is_none() {
        if let Some(first) = failures.first() {
            report.first_failure = Some(reproducer(config, trial, &model, first));
        }
    }
    Ok(!solutions.is_empty())
}

/// Runs trials until `config.trials` satisfiable models have been checked.
pub fn run_fuzz(config: &FuzzConfig) -> Result<FuzzReport, ModelError> {
    let mut report = FuzzReport::default();
    let max_attempts = config.trials.saturating_mul(20).saturating_add(100);
    let mut trial = 0u64;
    while report.trials < config.trials && (trial as usize) < max_attempts {
        if run_trial(config, trial, &mut report)? {
            report.trials += 1;
        } else {
            report.unsatisfiable += 1;
        }
        trial += 1;
    }
    Ok(report)
}

/// Re-runs the checks recorded in a reproducer.
pub fn replay(reproducer: &Reproducer) -> Result<Vec<Failure>, ModelError> {
    let model = parse_model(&reproducer.model)?;
    let mut rho = Assignment::new();
    for literal in &reproducer.assignment {
        let (var, value) = model.parse_literal(literal)?;
        rho.bind(&model, var, value)?;
    }
    let options = CvdOptions {
        certify_segment_endpoints: reproducer.certify_segment_endpoints,
        ..CvdOptions::default()
    };
    let space = compile(&model);
    let mut failures = check_assignment(&space, &rho, options)?;
    let mut rng = trial_rng(reproducer.seed, reproducer.trial);
    failures.extend(check_canonicity(&space, &mut rng, 20));
    Ok(failures)
}

/// Outcome of one random interactive session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkOutcome {
    pub steps: usize,
    pub configuration: Vec<usize>,
}

/// Picks uniformly random variables and values from the reported domains
/// until every variable is assigned. Any rejected choice, empty domain or
/// increase of the solution count is a dead end and reported as `Err`.
pub fn random_walk(space: Arc<CompiledSpace>, rng: &mut impl Rng) -> Result<WalkOutcome, String> {
    let model = space.model.clone();
    let mut session = Session::start(space).map_err(|e| e.to_string())?;
    let mut previous = session.solution_count().clone();
    let mut steps = 0;
    loop {
        let unassigned: Vec<usize> = (0..model.len())
            .filter(|&v| !session.is_assigned(v))
            .collect();
        let Some(&var) = unassigned.choose(rng) else {
            break;
        };
        let domain: Vec<usize> = session.domains()[var].iter().copied().collect();
        let &value = domain
            .choose(rng)
            .ok_or_else(|| format!("empty domain for variable {var} after {steps} steps"))?;
        let status = session.assign(var, value).map_err(|e| e.to_string())?;
        steps += 1;
        if status.solution_count == BigUint::default() {
            return Err(format!("no solutions left after {steps} steps"));
        }
        if status.solution_count > previous {
            return Err("solution count increased".to_string());
        }
        previous = status.solution_count;
    }
    let status = session.status();
    if !status.complete {
        return Err("all variables assigned but session not complete".to_string());
    }
    let assignment = session.assignment();
    if !satisfies_all(&model, &assignment).map_err(|e| e.to_string())? {
        return Err(format!(
            "final configuration {} violates a rule",
            assignment.describe(&model)
        ));
    }
    Ok(WalkOutcome {
        steps,
        configuration: assignment.to_dense(&model).map_err(|e| e.to_string())?,
    })
}
