//! Declarative run configuration: key-value sections in TOML.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::CliError;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Config {
    pub system: SystemSection,
    #[serde(default)]
    pub deadlines: DeadlineSection,
    #[serde(default)]
    pub demo: DemoSection,
    pub authorities: Vec<AuthoritySection>,
    #[serde(default)]
    pub trust: TrustSection,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SystemSection {
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_curve")]
    pub curve: String,
    /// Fee (simulated GWEI) the `register` command pays unless overridden;
    /// the contract threshold is fixed at 1_000_000.
    #[serde(default = "default_fee")]
    pub registration_fee_gwei: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeadlineSection {
    pub sys: (u64, u64, u64),
    pub auth: (u64, u64, u64),
}

impl Default for DeadlineSection {
    fn default() -> Self {
        DeadlineSection {
            sys: (100, 200, 300),
            auth: (400, 500, 600),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct DemoSection {
    /// Disables proof-of-knowledge checks on the simulated ledger. Never the
    /// default; exists for the rogue-key demonstration only.
    #[serde(default)]
    pub insecure_no_pok: bool,
    /// Uses the non-randomized policy encoding. Insecure; demo only.
    #[serde(default)]
    pub naive_policy: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AuthoritySection {
    pub name: String,
    pub attributes: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrustSection {
    pub name: String,
}

impl Default for TrustSection {
    fn default() -> Self {
        TrustSection {
            name: "trust".into(),
        }
    }
}

fn default_k() -> usize {
    2
}

fn default_curve() -> String {
    "bls12-381".into()
}

fn default_fee() -> u64 {
    1_000_001
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let config: Config = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("cannot parse {}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.system.k < 1 {
            return Err(CliError::Config("system.k must be at least 1".into()));
        }
        if self.system.curve != "bls12-381" {
            return Err(CliError::Config(format!(
                "unsupported curve {:?}; this build provides bls12-381",
                self.system.curve
            )));
        }
        if self.authorities.is_empty() {
            return Err(CliError::Config(
                "at least one attribute authority is required".into(),
            ));
        }
        let mut names = std::collections::BTreeSet::new();
        let mut attrs = std::collections::BTreeSet::new();
        for authority in &self.authorities {
            if !names.insert(authority.name.clone()) {
                return Err(CliError::Config(format!(
                    "duplicate authority name {:?}",
                    authority.name
                )));
            }
            if authority.attributes.is_empty() {
                return Err(CliError::Config(format!(
                    "authority {:?} declares no attributes",
                    authority.name
                )));
            }
            for attr in &authority.attributes {
                if !attrs.insert(attr.clone()) {
                    return Err(CliError::Config(format!("duplicate attribute {attr:?}")));
                }
            }
        }
        if names.contains(&self.trust.name) {
            return Err(CliError::Config(
                "trust authority name collides with an attribute authority".into(),
            ));
        }
        let (d1, d2, d3) = self.deadlines.sys;
        let (a1, a2, a3) = self.deadlines.auth;
        if !(d1 <= d2 && d2 <= d3 && d3 < a1 && a1 <= a2 && a2 <= a3) {
            return Err(CliError::Config(
                "deadlines must be ordered: sys before auth, each window nondecreasing".into(),
            ));
        }
        Ok(())
    }

    pub fn attribute_count(&self) -> usize {
        self.authorities.iter().map(|a| a.attributes.len()).sum()
    }

    pub fn slots(&self) -> usize {
        self.attribute_count() + 1
    }

    pub fn roster(&self) -> Vec<datagov::ceremony::AuthoritySpec> {
        let mut roster: Vec<datagov::ceremony::AuthoritySpec> = self
            .authorities
            .iter()
            .map(|a| datagov::ceremony::AuthoritySpec {
                address: datagov::ledger::Address::from_label(&a.name),
                name: a.name.clone(),
                attributes: a.attributes.clone(),
                is_trust: false,
            })
            .collect();
        roster.push(datagov::ceremony::AuthoritySpec {
            address: datagov::ledger::Address::from_label(&self.trust.name),
            name: self.trust.name.clone(),
            attributes: vec![],
            is_trust: true,
        });
        roster
    }

    pub fn policy_mode(&self) -> datagov::abe::PolicyMode {
        if self.demo.naive_policy {
            datagov::abe::PolicyMode::NaiveInsecureDemo
        } else {
            datagov::abe::PolicyMode::Randomized
        }
    }
}

/// A starter configuration matching the default three-authority layout.
pub const EXAMPLE_CONFIG: &str = r#"[system]
k = 2
curve = "bls12-381"
registration_fee_gwei = 1000001

[deadlines]
sys = [100, 200, 300]
auth = [400, 500, 600]

[demo]
insecure_no_pok = false
naive_policy = false

[[authorities]]
name = "aa-1"
attributes = ["entry", "mid", "senior"]

[[authorities]]
name = "aa-2"
attributes = ["agent", "manager"]

[trust]
name = "trust"
"#;
