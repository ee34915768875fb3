use legform::genome_json::{bezier_from_json, bezier_to_json, cppn_from_json, cppn_to_json, genome_from_json, Genome};
use legform_core::bezier::{mutate as mutate_bezier, random_genome};
use legform_core::neat::{mutate, random_minimal_genome};
use legform_core::{GaConfig, GridDims, InnovationRegistry, NeatConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn evolved_cppn_genomes_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut registry = InnovationRegistry::default();
    let config = NeatConfig { p_add_node: 0.4, p_add_connection: 0.5, p_mutate_weight: 0.9, p_mutate_activation: 0.3, ..NeatConfig::default() };
    let mut g = random_minimal_genome(&mut rng);
    for i in 0..100 {
        g = mutate(&g, &mut registry, &config, &mut rng);
        if i % 7 == 0 {
            registry.end_generation();
        }
        let text = cppn_to_json(&g);
        let back = cppn_from_json(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(cppn_to_json(&back), text);
        assert_eq!(genome_from_json(&text, GridDims::default()).unwrap(), Genome::Cppn(g.clone()));
    }
    assert!(g.nodes().len() > 4, "mutation should have grown the network");
}

#[test]
fn evolved_bezier_genomes_round_trip() {
    let dims = GridDims::default();
    let config = GaConfig::for_dims(dims);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut g = random_genome(&config, &mut rng);
    for _ in 0..100 {
        g = mutate_bezier(&g, &config, &mut rng);
        let text = bezier_to_json(&g);
        let back = bezier_from_json(&text, dims).unwrap();
        assert_eq!(back, g);
        assert_eq!(bezier_to_json(&back), text);
    }
}

#[test]
fn invalid_documents_are_rejected() {
    let dims = GridDims::default();
    assert!(genome_from_json("{}", dims).is_err());
    assert!(genome_from_json("[1, 2", dims).is_err());
    // grow a hidden chain, then add a back edge that closes a cycle
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut registry = InnovationRegistry::default();
    let config = NeatConfig { p_add_node: 1.0, p_add_connection: 0.0, ..NeatConfig::default() };
    let mut g = random_minimal_genome(&mut rng);
    for _ in 0..6 {
        g = mutate(&g, &mut registry, &config, &mut rng);
    }
    let (a, b) = g
        .connections()
        .iter()
        .map(|c| (c.source, c.target))
        .find(|&(s, t)| g.node(s).unwrap().role == legform_core::NodeRole::Hidden && g.node(t).unwrap().role == legform_core::NodeRole::Hidden)
        .expect("hidden-to-hidden edge");
    let mut doc: serde_json::Value = serde_json::from_str(&cppn_to_json(&g)).unwrap();
    let conns = doc["connections"].as_array_mut().unwrap();
    conns.push(serde_json::json!({"innovation": 9999, "source": b, "target": a, "weight": 1.0, "enabled": true}));
    let cyclic = doc.to_string();
    assert!(cppn_from_json(&cyclic).is_err());
}
