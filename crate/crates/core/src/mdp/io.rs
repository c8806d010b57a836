//! JSON model files: `{"S", "A", "transitions"[s][a][s'], "rewards"[s][a]}`.
//!
//! Floats are written in shortest round-trip form, so save/load is bit-exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::TabularMdp;
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct MdpFile {
    #[serde(rename = "S")]
    states: usize,
    #[serde(rename = "A")]
    actions: usize,
    transitions: Vec<Vec<Vec<f64>>>,
    rewards: Vec<Vec<f64>>,
}

pub fn mdp_to_json(mdp: &TabularMdp) -> String {
    let file = MdpFile {
        states: mdp.num_states(),
        actions: mdp.num_actions(),
        transitions: mdp.kernel().to_nested(),
        rewards: mdp.rewards_nested(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("plain data serializes");
    text.push('\n');
    text
}

pub fn mdp_from_json(text: &str) -> Result<TabularMdp> {
    let file: MdpFile =
        serde_json::from_str(text).map_err(|e| Error::InvalidMdp(format!("bad model file: {e}")))?;
    let mdp = TabularMdp::from_nested(&file.transitions, &file.rewards)?;
    if mdp.num_states() != file.states || mdp.num_actions() != file.actions {
        return Err(Error::InvalidMdp("declared sizes disagree with the tables".into()));
    }
    Ok(mdp)
}

pub fn save_mdp(mdp: &TabularMdp, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, mdp_to_json(mdp))?;
    Ok(())
}

pub fn load_mdp(path: impl AsRef<Path>) -> Result<TabularMdp> {
    mdp_from_json(&fs::read_to_string(path)?)
}
