//! Mutable query state shared by the REPL and the HTTP service.

use std::sync::Arc;

use serde::Serialize;

use crate::describe::{describe_network, DescriptionOptions};
use crate::infer::{self, Evidence};
use crate::network::{BeliefNetwork, VarId};
use crate::phrase::{PhraseStyle, ScaleRegistry};
use crate::qual::{self, QualitativeResult};
use crate::scenario::{explain_why, ExplainParams, ExplanationDocument};
use crate::text::{capitalize, fixed2};
use crate::Error;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorReport {
    pub target: String,
    pub probability: f64,
    pub phrase: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImpactReport {
    pub result: QualitativeResult,
    pub text: String,
}

/// A network with evidence that is always jointly possible: every mutation
/// that would make it impossible is rolled back.
#[derive(Debug, Clone)]
pub struct Session {
    network: Arc<BeliefNetwork>,
    evidence: Evidence,
    pub params: ExplainParams,
    pub scales: ScaleRegistry,
}

impl Session {
    pub fn new(network: Arc<BeliefNetwork>) -> Self {
        Session {
            network,
            evidence: Evidence::new(),
            params: ExplainParams::default(),
            scales: ScaleRegistry::default(),
        }
    }

    pub fn network(&self) -> &BeliefNetwork {
        &self.network
    }

    pub fn network_arc(&self) -> Arc<BeliefNetwork> {
        Arc::clone(&self.network)
    }

    pub fn evidence(&self) -> &Evidence {
        &self.evidence
    }

    /// Replaces the network and clears the evidence.
    pub fn load(&mut self, network: Arc<BeliefNetwork>) {
        self.network = network;
        self.evidence = Evidence::new();
        self.params.phrase.overrides.retain(|name, _| self.network.id(name).is_ok());
    }

    pub fn resolve(&self, name: &str) -> Result<VarId, Error> {
        Ok(self.network.resolve(name)?)
    }

    /// Sets (`Some`) or clears (`None`) one observation.
    pub fn set_evidence(&mut self, name: &str, value: Option<bool>) -> Result<(), Error> {
        let v = self.resolve(name)?;
        let mut next = self.evidence.clone();
        match value {
            Some(x) => {
                next.insert(v, x);
            }
            None => {
                next.remove(v);
            }
        }
        infer::check_evidence(&self.network, &next)?;
        self.evidence = next;
        Ok(())
    }

    pub fn observe(&mut self, name: &str, value: bool) -> Result<(), Error> {
        self.set_evidence(name, Some(value))
    }

    pub fn retract(&mut self, name: &str) -> Result<(), Error> {
        self.set_evidence(name, None)
    }

    pub fn clear_evidence(&mut self) {
        self.evidence = Evidence::new();
    }

    /// Observations as (name, value) in topological order.
    pub fn readings(&self) -> Vec<(String, bool)> {
        self.network
            .topological_order()
            .iter()
            .filter_map(|&v| self.evidence.get(v).map(|x| (self.network.name(v).to_string(), x)))
            .collect()
    }

    pub fn posterior(&self, target: &str) -> Result<PosteriorReport, Error> {
        let net = &self.network;
        let v = self.resolve(target)?;
        let p = infer::posterior(net, &self.evidence, v)?.probability;
        let scale = self.params.phrase.absolute_for(&self.scales, net.name(v))?;
        let phrase = scale.phrase(p, PhraseStyle::Adjective).to_string();
        let number = if self.params.phrase.show_numbers {
            format!(" (p={})", fixed2(p))
        } else {
            String::new()
        };
        Ok(PosteriorReport {
            target: net.name(v).to_string(),
            probability: p,
            text: format!("{} is {phrase}{number}.", capitalize(net.label(v))),
            phrase,
        })
    }

    pub fn why(&self, target: &str) -> Result<ExplanationDocument, Error> {
        self.why_with(target, &self.params)
    }

    pub fn why_with(&self, target: &str, params: &ExplainParams) -> Result<ExplanationDocument, Error> {
        let v = self.resolve(target)?;
        Ok(explain_why(&self.network, &self.evidence, v, params, &self.scales)?)
    }

    /// Qualitative impact of observing `finding` true; the evidence is untouched.
    pub fn impact(&self, finding: &str, target: &str) -> Result<ImpactReport, Error> {
        let (f, t) = (self.resolve(finding)?, self.resolve(target)?);
        let result = qual::propagate_sign(&self.network, &self.evidence, f, t)?;
        let text = qual::render_trace(&result, &self.network);
        Ok(ImpactReport { result, text })
    }

    pub fn describe(&self, include_dependencies: bool, compare_priors: bool) -> Result<Vec<String>, Error> {
        let options = DescriptionOptions {
            include_dependencies,
            compare_priors,
            phrase: self.params.phrase.clone(),
        };
        Ok(describe_network(&self.network, &options, &self.scales)?)
    }

    /// Sets a numeric explanation parameter by name; dashes and underscores
    /// are interchangeable.
    pub fn set_param(&mut self, name: &str, value: f64) -> Result<(), Error> {
        let mut next = self.params.scenario;
        match name.replace('-', "_").to_ascii_lowercase().as_str() {
            "list_threshold" => next.list_threshold = value,
            "residual_cap" => next.residual_cap = value,
            "contrast_factor" => next.contrast_factor = value,
            "but_threshold" => next.but_threshold = value,
            _ => return Err(Error::UnknownParameter(name.to_string())),
        }
        next.validate()?;
        self.params.scenario = next;
        Ok(())
    }

    /// Selects an absolute or relative scale, globally or for one variable.
    pub fn set_scale(&mut self, scale: &str, variable: Option<&str>) -> Result<(), Error> {
        match variable {
            Some(var) => {
                self.scales.absolute(scale)?;
                let name = self.network.name(self.resolve(var)?).to_string();
                self.params.phrase.overrides.insert(name, scale.to_string());
            }
            None if self.scales.absolute(scale).is_ok() => self.params.phrase.scale = scale.to_string(),
            None => {
                self.scales.relative(scale)?;
                self.params.phrase.relative_scale = scale.to_string();
            }
        }
        Ok(())
    }

    pub fn set_numbers(&mut self, on: bool) {
        self.params.phrase.show_numbers = on;
    }
}
