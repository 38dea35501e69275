//! Reference models and control instances shipped with the crate.

use crate::assembly::EukaryoticExtension;
use crate::model::{compile, compile_eukaryote, expand_duplications, load_model, MetabolicModel};
use crate::ocp::OcpInstance;

pub const TOY_PROKARYOTE: &str = include_str!("../golden/toy_prokaryote.toml");
pub const TOY_EUKARYOTE: &str = include_str!("../golden/toy_eukaryote.toml");

pub const OCP_SYMMETRIC: &str = include_str!("../golden/ocp_symmetric.toml");
pub const OCP_ASYMMETRIC: &str = include_str!("../golden/ocp_asymmetric.toml");
pub const OCP_MACHINERY_RICH: &str = include_str!("../golden/ocp_machinery_rich.toml");
pub const OCP_ENZYME_RICH: &str = include_str!("../golden/ocp_enzyme_rich.toml");
pub const OCP_HIGH_TURNOVER: &str = include_str!("../golden/ocp_high_turnover.toml");

pub const MODELS: [(&str, &str); 2] = [("toy_prokaryote", TOY_PROKARYOTE), ("toy_eukaryote", TOY_EUKARYOTE)];

pub const OCP_INSTANCES: [(&str, &str); 5] = [
    ("symmetric", OCP_SYMMETRIC),
    ("asymmetric", OCP_ASYMMETRIC),
    ("machinery_rich", OCP_MACHINERY_RICH),
    ("enzyme_rich", OCP_ENZYME_RICH),
    ("high_turnover", OCP_HIGH_TURNOVER),
];

pub fn model_text(name: &str) -> Option<&'static str> {
    MODELS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn ocp_text(name: &str) -> Option<&'static str> {
    OCP_INSTANCES.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn ocp_instance(name: &str) -> Option<OcpInstance> {
    ocp_text(name).map(|t| OcpInstance::from_toml(t).expect("golden instances parse"))
}

pub fn toy_prokaryote_model() -> MetabolicModel {
    let spec = expand_duplications(&load_model(TOY_PROKARYOTE).expect("golden model loads"));
    compile(&spec).expect("golden model compiles")
}

pub fn toy_eukaryote() -> (MetabolicModel, EukaryoticExtension) {
    let spec = expand_duplications(&load_model(TOY_EUKARYOTE).expect("golden model loads"));
    let model = compile(&spec).expect("golden model compiles");
    let ext = compile_eukaryote(&spec, &model)
        .expect("golden extension compiles")
        .expect("golden model has a eukaryote section");
    (model, ext)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_golden_parses() {
        for (name, _) in MODELS {
            assert!(model_text(name).is_some());
        }
        for (name, _) in OCP_INSTANCES {
            ocp_instance(name).unwrap().params.validate().unwrap();
        }
        assert!(model_text("nope").is_none());
    }
}
