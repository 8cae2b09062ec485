use serde::{Deserialize, Serialize};

use vdconf_core::{ConfigModel, Session};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssignRequest {
    pub variable: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableView {
    pub name: String,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelView {
    pub variables: Vec<VariableView>,
    pub rules: Vec<String>,
}

impl ModelView {
    pub fn new(model: &ConfigModel) -> Self {
        ModelView {
            variables: model
                .variables()
                .iter()
                .map(|v| VariableView {
                    name: v.name.clone(),
                    values: (0..v.domain.size()).map(|x| v.domain.label(x)).collect(),
                })
                .collect(),
            rules: model
                .rules()
                .iter()
                .map(|r| model.display_rule(r).to_string())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Binding {
    pub variable: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueView {
    pub value: String,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainView {
    pub variable: String,
    pub values: Vec<ValueView>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StateView {
    pub assignments: Vec<Binding>,
    pub domains: Vec<DomainView>,
    /// Decimal string; counts can exceed 64 bits.
    pub solution_count: String,
    pub complete: bool,
    pub forced: Vec<Binding>,
    /// Increases with every response about this session.
    pub sequence: u64,
}

impl StateView {
    pub fn new(session: &Session, sequence: u64) -> Self {
        let model = &session.space().model;
        let status = session.status();
        let binding = |(var, value): (usize, usize)| {
            let v = &model.variables()[var];
            Binding {
                variable: v.name.clone(),
                value: v.domain.label(value),
            }
        };
        StateView {
            assignments: status.assignments.iter().copied().map(binding).collect(),
            domains: model
                .variables()
                .iter()
                .zip(&status.domains)
                .map(|(v, valid)| DomainView {
                    variable: v.name.clone(),
                    values: (0..v.domain.size())
                        .map(|x| ValueView {
                            value: v.domain.label(x),
                            valid: valid.contains(&x),
                        })
                        .collect(),
                })
                .collect(),
            solution_count: status.solution_count.to_string(),
            complete: status.complete,
            forced: status.forced.iter().copied().map(binding).collect(),
            sequence,
        }
    }
}
