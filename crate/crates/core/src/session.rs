//! Interactive configuration loop: report valid domains, accept a choice,
//! restrict, repeat. Choices can be undone.

use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::One;
use thiserror::Error;

use crate::bdd::{BddStore, NodeId};
use crate::cvd::valid_domains;
use crate::encode::{restrict_value, CompiledSpace};
use crate::model::{Assignment, DomainSets, ModelError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SessionError {
    #[error("the model has no valid configuration")]
    Unsatisfiable,
    #[error("variable `{0}` is already assigned")]
    AlreadyAssigned(String),
    #[error("value `{value}` is not in the valid domain of `{variable}`")]
    NotInDomain { variable: String, value: String },
    #[error("nothing to undo")]
    NothingToUndo,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Snapshot {
    root: NodeId,
    domains: DomainSets,
    count: BigUint,
}

#[derive(Debug, Clone)]
struct Step {
    var: usize,
    value: usize,
    state: Snapshot,
}

/// Observable session state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Status {
    /// Bindings in the order they were made.
    pub assignments: Vec<(usize, usize)>,
    pub domains: DomainSets,
    pub solution_count: BigUint,
    pub complete: bool,
    /// Unassigned variables whose valid domain is a single value.
    pub forced: Vec<(usize, usize)>,
}

/// One user's walk through the solution space. The compiled store is shared;
/// nodes created by restriction go to a private overlay.
#[derive(Debug, Clone)]
pub struct Session {
    space: Arc<CompiledSpace>,
    store: BddStore,
    initial: Snapshot,
    steps: Vec<Step>,
}

impl Session {
    pub fn start(space: Arc<CompiledSpace>) -> Result<Self, SessionError> {
        if space.root == NodeId::TERM0 {
            return Err(SessionError::Unsatisfiable);
        }
        let store = BddStore::overlay(Arc::clone(&space.store));
        let initial = Snapshot {
            root: space.root,
            domains: valid_domains(&store, &space.layout, space.root),
            count: store.sat_count(space.root),
        };
        Ok(Session {
            space,
            store,
            initial,
            steps: Vec::new(),
        })
    }

    pub fn space(&self) -> &Arc<CompiledSpace> {
        &self.space
    }

    fn current(&self) -> &Snapshot {
        self.steps.last().map_or(&self.initial, |s| &s.state)
    }

    pub fn root(&self) -> NodeId {
        self.current().root
    }

    pub fn domains(&self) -> &DomainSets {
        &self.current().domains
    }

    pub fn solution_count(&self) -> &BigUint {
        &self.current().count
    }

    pub fn assignment(&self) -> Assignment {
        let mut a = Assignment::new();
        for step in &self.steps {
            a.bind(&self.space.model, step.var, step.value)
                .expect("session bindings are distinct and in range");
        }
        a
    }

    pub fn is_assigned(&self, var: usize) -> bool {
        self.steps.iter().any(|s| s.var == var)
    }

    pub fn history_len(&self) -> usize {
        self.steps.len()
    }

    /// Nodes created privately by this session.
    pub fn overlay_len(&self) -> usize {
        self.store.own_len()
    }

    /// Fixes `var = value`; the value must be in the current valid domain.
    /// On error nothing changes.
    pub fn assign(&mut self, var: usize, value: usize) -> Result<Status, SessionError> {
        let model = &self.space.model;
        let variable = model
            .variables()
            .get(var)
            .ok_or(ModelError::VariableOutOfRange(var))?;
        if value >= variable.domain.size() {
            return Err(ModelError::ValueOutOfDomain {
                variable: variable.name.clone(),
                value,
                size: variable.domain.size(),
            }
            .into());
        }
        if self.is_assigned(var) {
            return Err(SessionError::AlreadyAssigned(variable.name.clone()));
        }
        if !self.domains()[var].contains(&value) {
            return Err(SessionError::NotInDomain {
                variable: variable.name.clone(),
                value: variable.domain.label(value),
            });
        }
        let current = self.root();
        let root = restrict_value(&mut self.store, &self.space.layout, current, var, value)
            .expect("value range checked above");
        let state = Snapshot {
            root,
            domains: valid_domains(&self.store, &self.space.layout, root),
            count: self.store.sat_count(root),
        };
        debug_assert!(state.count >= BigUint::one());
        self.steps.push(Step { var, value, state });
        Ok(self.status())
    }

    /// [`Session::assign`] by variable name and value label.
    pub fn assign_named(&mut self, name: &str, value: &str) -> Result<Status, SessionError> {
        let (var, value) = self.space.model.resolve(name, value)?;
        self.assign(var, value)
    }

    pub fn undo(&mut self) -> Result<Status, SessionError> {
        self.steps.pop().ok_or(SessionError::NothingToUndo)?;
        Ok(self.status())
    }

    pub fn status(&self) -> Status {
        let snapshot = self.current();
        let forced = snapshot
            .domains
            .iter()
            .enumerate()
            .filter(|(var, d)| d.len() == 1 && !self.is_assigned(*var))
            .map(|(var, d)| (var, *d.first().unwrap()))
            .collect();
        Status {
            assignments: self.steps.iter().map(|s| (s.var, s.value)).collect(),
            domains: snapshot.domains.clone(),
            solution_count: snapshot.count.clone(),
            complete: snapshot.count == BigUint::one(),
            forced,
        }
    }

    /// The unique total configuration once the session is complete.
    pub fn resolved_configuration(&self) -> Option<Vec<usize>> {
        let status = self.status();
        if !status.complete {
            return None;
        }
        status
            .domains
            .iter()
            .map(|d| (d.len() == 1).then(|| *d.first().unwrap()))
            .collect()
    }
}
