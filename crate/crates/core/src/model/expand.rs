use indexmap::IndexMap;

use super::document::{Efficiency, MachineDecl, ReactionDecl};
use super::RawModelSpec;

fn suffixed(name: &str, k: usize) -> String {
    format!("{name}_{k}")
}

fn narrow(k: &Efficiency, catalyst: &str) -> Efficiency {
    match k {
        Efficiency::Shared(v) => Efficiency::Shared(*v),
        Efficiency::PerCatalyst(map) => {
            let mut one = IndexMap::new();
            one.insert(catalyst.to_string(), map[catalyst]);
            Efficiency::PerCatalyst(one)
        }
    }
}

fn rename_key(k: &mut Efficiency, from: &str, to: &str) {
    if let Efficiency::PerCatalyst(map) = k {
        if let Some(v) = map.shift_remove(from) {
            map.insert(to.to_string(), v);
        }
    }
}

/// Rewrites the model so that every reaction has exactly one catalyst and
/// every enzyme catalyses exactly one reaction.
///
/// A reaction with `k` catalysts becomes `r_1 .. r_k` with identical
/// stoichiometry; an enzyme used by `k` reactions becomes `E_1 .. E_k` with
/// identical composition. Suffixes follow input order. Already one-to-one
/// models are returned unchanged.
pub fn expand_duplications(spec: &RawModelSpec) -> RawModelSpec {
    let mut out = spec.clone();
    let doc = &mut out.document;

    let mut reactions: Vec<ReactionDecl> = Vec::with_capacity(doc.reactions.len());
    for r in &doc.reactions {
        if r.catalysts.len() <= 1 {
            reactions.push(r.clone());
            continue;
        }
        for (k, catalyst) in r.catalysts.iter().enumerate() {
            let name = suffixed(&r.name, k + 1);
            let origin = spec.origin_of(&r.name).to_string();
            out.origins.insert(name.clone(), origin);
            reactions.push(ReactionDecl {
                name,
                stoichiometry: r.stoichiometry.clone(),
                catalysts: vec![catalyst.clone()],
                k_forward: narrow(&r.k_forward, catalyst),
                k_backward: r.k_backward.as_ref().map(|kb| narrow(kb, catalyst)),
            });
        }
    }

    let mut users: IndexMap<String, Vec<usize>> = IndexMap::new();
    for (i, r) in reactions.iter().enumerate() {
        users.entry(r.catalysts[0].clone()).or_default().push(i);
    }

    let mut machines: Vec<MachineDecl> = Vec::with_capacity(doc.machines.len());
    for m in &doc.machines {
        let used_by = users.get(&m.name).map(Vec::as_slice).unwrap_or(&[]);
        if used_by.len() <= 1 {
            machines.push(m.clone());
            continue;
        }
        for (k, &ri) in used_by.iter().enumerate() {
            let name = suffixed(&m.name, k + 1);
            let origin = spec.origin_of(&m.name).to_string();
            out.origins.insert(name.clone(), origin);
            let r = &mut reactions[ri];
            r.catalysts[0] = name.clone();
            rename_key(&mut r.k_forward, &m.name, &name);
            if let Some(kb) = r.k_backward.as_mut() {
                rename_key(kb, &m.name, &name);
            }
            machines.push(MachineDecl {
                name,
                ..m.clone()
            });
        }
    }

    doc.reactions = reactions;
    doc.machines = machines;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::load_model;

    const ISO: &str = r#"
metabolites = [{ name = "a" }, { name = "b" }]
processes = [{ name = "translation", efficiency = 10.0 }]

[[reactions]]
name = "r"
stoichiometry = { a = -1.0, b = 1.0 }
catalysts = ["E1", "E2"]
k_forward = { E1 = 3.0, E2 = 7.0 }

[[machines]]
name = "E1"
kind = "enzyme"
synthesis_cost = { b = 200.0 }
process_demand = { translation = 200.0 }

[[machines]]
name = "E2"
kind = "enzyme"
synthesis_cost = { b = 300.0 }
process_demand = { translation = 300.0 }

[[machines]]
name = "R"
kind = "process-machine"
process_demand = { translation = 5000.0 }
"#;

    const PROMISCUOUS: &str = r#"
metabolites = [{ name = "a" }, { name = "b" }]
processes = [{ name = "translation", efficiency = 10.0 }]

[[reactions]]
name = "r1"
stoichiometry = { a = 1.0 }
catalysts = ["E"]
k_forward = 2.0

[[reactions]]
name = "r2"
stoichiometry = { a = -1.0, b = 1.0 }
catalysts = ["E"]
k_forward = 4.0

[[machines]]
name = "E"
kind = "enzyme"
synthesis_cost = { b = 250.0 }
process_demand = { translation = 250.0 }

[[machines]]
name = "R"
kind = "process-machine"
process_demand = { translation = 5000.0 }
"#;

    #[test]
    fn isoenzymes_split_reaction() {
        let spec = expand_duplications(&load_model(ISO).unwrap());
        let rs = &spec.document.reactions;
        assert_eq!(rs.len(), 2);
        assert_eq!(rs[0].name, "r_1");
        assert_eq!(rs[1].name, "r_2");
        assert_eq!(rs[0].catalysts, vec!["E1"]);
        assert_eq!(rs[1].catalysts, vec!["E2"]);
        assert_eq!(rs[0].stoichiometry, rs[1].stoichiometry);
        assert_eq!(rs[0].k_forward.for_catalyst("E1"), Some(3.0));
        assert_eq!(rs[1].k_forward.for_catalyst("E2"), Some(7.0));
        assert_eq!(spec.origin_of("r_2"), "r");
    }

    #[test]
    fn promiscuous_enzyme_duplicated() {
        let spec = expand_duplications(&load_model(PROMISCUOUS).unwrap());
        let ms = &spec.document.machines;
        assert_eq!(ms.len(), 3);
        assert_eq!(ms[0].name, "E_1");
        assert_eq!(ms[1].name, "E_2");
        assert_eq!(ms[0].synthesis_cost, ms[1].synthesis_cost);
        assert_eq!(ms[0].process_demand, ms[1].process_demand);
        assert_eq!(spec.document.reactions[0].catalysts, vec!["E_1"]);
        assert_eq!(spec.document.reactions[1].catalysts, vec!["E_2"]);
        assert_eq!(spec.origin_of("E_2"), "E");
    }

    #[test]
    fn expansion_is_idempotent() {
        for text in [ISO, PROMISCUOUS] {
            let once = expand_duplications(&load_model(text).unwrap());
            let twice = expand_duplications(&once);
            assert_eq!(once, twice);
        }
    }

    #[test]
    fn one_to_one_spec_unchanged() {
        let spec = load_model(crate::golden::TOY_PROKARYOTE).unwrap();
        assert_eq!(expand_duplications(&spec), spec);
    }
}
