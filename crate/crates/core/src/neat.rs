//! NEAT over [`CppnGenome`]: historical markings, speciation with fitness
//! sharing, crossover, structural and weight mutation, and generation
//! turnover with single-member elitism.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::cppn::{ActivationKind, ConnGene, CppnGenome, NodeGene, NodeRole};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NeatError {
    #[error("expected {expected} fitness values, got {got}")]
    InconsistentInput { expected: usize, got: usize },
    #[error("invalid NEAT configuration: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct NeatConfig {
    pub population_size: usize,
    pub elitism: usize,
    pub p_no_crossover: f64,
    pub p_interspecies: f64,
    pub p_add_node: f64,
    pub p_add_connection: f64,
    pub p_mutate_weight: f64,
    pub p_mutate_activation: f64,
    /// Standard deviation of the additive Gaussian weight perturbation.
    pub weight_perturb_sigma: f64,
    /// Excess-gene coefficient.
    pub c1: f64,
    /// Disjoint-gene coefficient.
    pub c2: f64,
    /// Mean matching-weight-difference coefficient.
    pub c3: f64,
    pub compatibility_threshold: f64,
    /// Generations without improvement after which a species stops reproducing.
    pub stagnation_limit: u32,
    pub add_connection_attempts: u32,
}

impl Default for NeatConfig {
    fn default() -> Self {
        Self {
            population_size: 20,
            elitism: 1,
            p_no_crossover: 0.25,
            p_interspecies: 0.05,
            p_add_node: 0.1,
            p_add_connection: 0.25,
            p_mutate_weight: 0.25,
            p_mutate_activation: 0.1,
            weight_perturb_sigma: 0.5,
            c1: 1.0,
            c2: 1.0,
            c3: 0.4,
            compatibility_threshold: 3.0,
            stagnation_limit: 15,
            add_connection_attempts: 20,
        }
    }
}

impl NeatConfig {
    pub fn validate(&self) -> Result<(), NeatError> {
        let probabilities = [
            self.p_no_crossover,
            self.p_interspecies,
            self.p_add_node,
            self.p_add_connection,
            self.p_mutate_weight,
            self.p_mutate_activation,
        ];
        if probabilities.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(NeatError::InvalidConfig("probabilities must lie in [0, 1]"));
        }
        if self.population_size < 2 {
            return Err(NeatError::InvalidConfig("population size must be at least 2"));
        }
        if self.elitism > self.population_size {
            return Err(NeatError::InvalidConfig("elitism exceeds population size"));
        }
        if !(self.weight_perturb_sigma >= 0.0) || !self.weight_perturb_sigma.is_finite() {
            return Err(NeatError::InvalidConfig("weight sigma must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Ids handed out by one structural mutation that splits a connection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitIds {
    pub node: u32,
    pub incoming: u32,
    pub outgoing: u32,
}

/// Global counters plus a per-generation memo so that identical structural
/// mutations made in the same generation share their ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InnovationRegistry {
    next_node_id: u32,
    next_innovation_id: u32,
    connection_memo: BTreeMap<(u32, u32), u32>,
    split_memo: BTreeMap<u32, SplitIds>,
}

impl Default for InnovationRegistry {
    /// Counters positioned after the minimal genome (nodes 0..=3, innovations 0..=2).
    fn default() -> Self {
        Self::new(4, 3)
    }
}

impl InnovationRegistry {
    pub fn new(next_node_id: u32, next_innovation_id: u32) -> Self {
        Self {
            next_node_id,
            next_innovation_id,
            connection_memo: BTreeMap::new(),
            split_memo: BTreeMap::new(),
        }
    }

    pub fn next_node_id(&self) -> u32 {
        self.next_node_id
    }

    pub fn next_innovation_id(&self) -> u32 {
        self.next_innovation_id
    }

    fn fresh_innovation(&mut self) -> u32 {
        let id = self.next_innovation_id;
        self.next_innovation_id += 1;
        id
    }

    pub fn connection_innovation(&mut self, source: u32, target: u32) -> u32 {
        if let Some(&id) = self.connection_memo.get(&(source, target)) {
            return id;
        }
        let id = self.fresh_innovation();
        self.connection_memo.insert((source, target), id);
        id
    }

    pub fn split_connection(&mut self, innovation: u32) -> SplitIds {
        if let Some(&ids) = self.split_memo.get(&innovation) {
            return ids;
        }
        let node = self.next_node_id;
        self.next_node_id += 1;
        let ids = SplitIds { node, incoming: self.fresh_innovation(), outgoing: self.fresh_innovation() };
        self.split_memo.insert(innovation, ids);
        ids
    }

    /// Forgets this generation's memo; counters keep running.
    pub fn end_generation(&mut self) {
        self.connection_memo.clear();
        self.split_memo.clear();
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Species {
    pub id: u32,
    pub representative: CppnGenome,
    /// Population indices of the current members.
    pub members: Vec<usize>,
    pub best_fitness_ever: f64,
    pub stagnation: u32,
}

/// Minimal genome with uniform `[-1, 1]` weights and a random output activation.
pub fn random_minimal_genome<R: Rng + ?Sized>(rng: &mut R) -> CppnGenome {
    let weights = [
        rng.random_range(-1.0..=1.0),
        rng.random_range(-1.0..=1.0),
        rng.random_range(-1.0..=1.0),
    ];
    let activation = *ActivationKind::ALL.choose(rng).expect("non-empty");
    CppnGenome::minimal(activation, weights)
}

/// `c1·E/N + c2·D/N + c3·W̄` over innovation-aligned connection genes.
pub fn compatibility_distance(a: &CppnGenome, b: &CppnGenome, config: &NeatConfig) -> f64 {
    let (ga, gb) = (&a.connections, &b.connections);
    let (mut i, mut j) = (0, 0);
    let (mut disjoint, mut matching, mut weight_diff) = (0usize, 0usize, 0.0f64);
    while i < ga.len() && j < gb.len() {
        let (x, y) = (&ga[i], &gb[j]);
        match x.innovation.cmp(&y.innovation) {
            core::cmp::Ordering::Equal => {
                matching += 1;
                weight_diff += libm::fabs(x.weight - y.weight);
                i += 1;
                j += 1;
            }
            core::cmp::Ordering::Less => {
                disjoint += 1;
                i += 1;
            }
            core::cmp::Ordering::Greater => {
                disjoint += 1;
                j += 1;
            }
        }
    }
    let excess = (ga.len() - i) + (gb.len() - j);
    let larger = ga.len().max(gb.len());
    let n = if ga.len() < 20 && gb.len() < 20 { 1.0 } else { larger as f64 };
    let mean_weight = if matching > 0 { weight_diff / matching as f64 } else { 0.0 };
    config.c1 * excess as f64 / n + config.c2 * disjoint as f64 / n + config.c3 * mean_weight
}

/// NEAT crossover. Disjoint and excess genes come from `fitter` only, so the
/// child's topology is exactly the fitter parent's.
pub fn crossover<R: Rng + ?Sized>(fitter: &CppnGenome, other: &CppnGenome, rng: &mut R) -> CppnGenome {
    let other_genes: BTreeMap<u32, &ConnGene> = other.connections.iter().map(|c| (c.innovation, c)).collect();
    let connections = fitter
        .connections
        .iter()
        .map(|gene| match other_genes.get(&gene.innovation) {
            Some(&matched) => {
                let mut child = if rng.random_bool(0.5) { *gene } else { *matched };
                child.source = gene.source;
                child.target = gene.target;
                if gene.enabled != matched.enabled {
                    child.enabled = !rng.random_bool(0.75);
                } else {
                    child.enabled = gene.enabled;
                }
                child
            }
            None => *gene,
        })
        .collect();
    let nodes = fitter
        .nodes
        .iter()
        .map(|node| match other.node(node.id) {
            Some(o) if o.role == node.role && node.role != NodeRole::Input => {
                if rng.random_bool(0.5) {
                    *node
                } else {
                    NodeGene { activation: o.activation, ..*node }
                }
            }
            _ => *node,
        })
        .collect();
    CppnGenome { nodes, connections }
}

/// Applies each mutation operator independently with its configured probability.
pub fn mutate<R: Rng + ?Sized>(
    genome: &CppnGenome,
    registry: &mut InnovationRegistry,
    config: &NeatConfig,
    rng: &mut R,
) -> CppnGenome {
    let mut g = genome.clone();

    if rng.random_bool(config.p_mutate_weight) {
        let noise = Normal::new(0.0, config.weight_perturb_sigma).expect("validated sigma");
        for c in &mut g.connections {
            c.weight += noise.sample(rng);
        }
    }

    if rng.random_bool(config.p_mutate_activation) {
        let candidates: Vec<usize> = (0..g.nodes.len()).filter(|&i| g.nodes[i].role != NodeRole::Input).collect();
        if let Some(&i) = candidates.choose(rng) {
            g.nodes[i].activation = ActivationKind::ALL.choose(rng).copied();
        }
    }

    if rng.random_bool(config.p_add_connection) {
        add_connection(&mut g, registry, config.add_connection_attempts, rng);
    }

    if rng.random_bool(config.p_add_node) {
        add_node(&mut g, registry, rng);
    }

    g
}

fn add_connection<R: Rng + ?Sized>(g: &mut CppnGenome, registry: &mut InnovationRegistry, attempts: u32, rng: &mut R) {
    let sources: Vec<u32> = g.nodes.iter().filter(|n| n.role != NodeRole::Output).map(|n| n.id).collect();
    let targets: Vec<u32> = g.nodes.iter().filter(|n| n.role != NodeRole::Input).map(|n| n.id).collect();
    for _ in 0..attempts {
        let (Some(&s), Some(&t)) = (sources.choose(rng), targets.choose(rng)) else { return };
        if s == t || g.has_connection(s, t) || g.reaches(t, s) {
            continue;
        }
        let innovation = registry.connection_innovation(s, t);
        let weight = rng.random_range(-1.0..=1.0);
        g.connections.push(ConnGene::new(innovation, s, t, weight));
        g.connections.sort_by_key(|c| c.innovation);
        return;
    }
}

fn add_node<R: Rng + ?Sized>(g: &mut CppnGenome, registry: &mut InnovationRegistry, rng: &mut R) {
    let enabled: Vec<usize> = (0..g.connections.len()).filter(|&i| g.connections[i].enabled).collect();
    let Some(&i) = enabled.choose(rng) else { return };
    let split = g.connections[i];
    let ids = registry.split_connection(split.innovation);
    if g.node(ids.node).is_some() {
        return;
    }
    let activation = *ActivationKind::ALL.choose(rng).expect("non-empty");
    g.connections[i].enabled = false;
    g.nodes.push(NodeGene::hidden(ids.node, activation));
    g.connections.push(ConnGene::new(ids.incoming, split.source, ids.node, 1.0));
    g.connections.push(ConnGene::new(ids.outgoing, ids.node, split.target, split.weight));
    g.connections.sort_by_key(|c| c.innovation);
}

/// Largest-remainder apportionment of `total` slots proportional to `shares`.
/// Zero total share splits evenly. Remainder ties go to the lower index.
pub fn apportion(shares: &[f64], total: usize) -> Vec<usize> {
    if shares.is_empty() {
        return Vec::new();
    }
    let sum: f64 = shares.iter().sum();
    let exact: Vec<f64> = if sum > 0.0 {
        shares.iter().map(|s| s / sum * total as f64).collect()
    } else {
        vec![total as f64 / shares.len() as f64; shares.len()]
    };
    let mut quotas: Vec<usize> = exact.iter().map(|&e| libm::floor(e) as usize).collect();
    let assigned: usize = quotas.iter().sum();
    let mut order: Vec<usize> = (0..shares.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - quotas[a] as f64;
        let rb = exact[b] - quotas[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        quotas[i] += 1;
    }
    quotas
}

/// NEAT population state carried between generations.
#[derive(Debug, Clone)]
pub struct Neat {
    config: NeatConfig,
    registry: InnovationRegistry,
    species: Vec<Species>,
    next_species_id: u32,
    last_quotas: Vec<(u32, usize)>,
}

impl Neat {
    pub fn new(config: NeatConfig) -> Result<Self, NeatError> {
        config.validate()?;
        Ok(Self {
            config,
            registry: InnovationRegistry::default(),
            species: Vec::new(),
            next_species_id: 1,
            last_quotas: Vec::new(),
        })
    }

    pub fn config(&self) -> &NeatConfig {
        &self.config
    }

    pub fn registry(&self) -> &InnovationRegistry {
        &self.registry
    }

    /// Species as of the last turnover.
    pub fn species(&self) -> &[Species] {
        &self.species
    }

    /// `(species id, offspring slots)` assigned in the last turnover, elites included.
    pub fn last_quotas(&self) -> &[(u32, usize)] {
        &self.last_quotas
    }

    pub fn init_population<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Vec<CppnGenome> {
        (0..self.config.population_size).map(|_| random_minimal_genome(rng)).collect()
    }

    fn speciate<R: Rng + ?Sized>(&mut self, population: &[CppnGenome], rng: &mut R) {
        for s in &mut self.species {
            s.members.clear();
        }
        for (i, genome) in population.iter().enumerate() {
            let home = self.species.iter().position(|s| {
                compatibility_distance(genome, &s.representative, &self.config) < self.config.compatibility_threshold
            });
            match home {
                Some(k) => self.species[k].members.push(i),
                None => {
                    self.species.push(Species {
                        id: self.next_species_id,
                        representative: genome.clone(),
                        members: vec![i],
                        best_fitness_ever: f64::NEG_INFINITY,
                        stagnation: 0,
                    });
                    self.next_species_id += 1;
                }
            }
        }
        self.species.retain(|s| !s.members.is_empty());
        for s in &mut self.species {
            let pick = *s.members.choose(rng).expect("non-empty species");
            s.representative = population[pick].clone();
        }
    }

    /// Produces the next population from an evaluated one.
    pub fn next_generation<R: Rng + ?Sized>(
        &mut self,
        population: &[CppnGenome],
        fitnesses: &[f64],
        rng: &mut R,
    ) -> Result<Vec<CppnGenome>, NeatError> {
        if fitnesses.len() != population.len() || population.is_empty() {
            return Err(NeatError::InconsistentInput { expected: population.len(), got: fitnesses.len() });
        }
        let fitness: Vec<f64> = fitnesses.iter().map(|&f| if f.is_finite() && f > 0.0 { f } else { 0.0 }).collect();

        self.speciate(population, rng);

        for s in &mut self.species {
            let best = s.members.iter().map(|&i| fitness[i]).fold(f64::NEG_INFINITY, f64::max);
            if best > s.best_fitness_ever {
                s.best_fitness_ever = best;
                s.stagnation = 0;
            } else {
                s.stagnation += 1;
            }
        }

        let mut ranked: Vec<usize> = (0..population.len()).collect();
        ranked.sort_by(|&a, &b| fitness[b].total_cmp(&fitness[a]).then(a.cmp(&b)));
        let elites = &ranked[..self.config.elitism.min(ranked.len())];
        let champion = ranked[0];

        let species_of: BTreeMap<usize, usize> = self
            .species
            .iter()
            .enumerate()
            .flat_map(|(k, s)| s.members.iter().map(move |&i| (i, k)))
            .collect();
        let adjusted: Vec<f64> = (0..population.len())
            .map(|i| fitness[i] / self.species[species_of[&i]].members.len() as f64)
            .collect();

        let eligible: Vec<usize> = (0..self.species.len())
            .filter(|&k| {
                self.species[k].stagnation < self.config.stagnation_limit || self.species[k].members.contains(&champion)
            })
            .collect();
        let shares: Vec<f64> = eligible
            .iter()
            .map(|&k| self.species[k].members.iter().map(|&i| adjusted[i]).sum())
            .collect();
        let mut quotas = apportion(&shares, self.config.population_size);
        self.last_quotas = eligible.iter().zip(&quotas).map(|(&k, &q)| (self.species[k].id, q)).collect();

        let mut next = Vec::with_capacity(self.config.population_size);
        for &e in elites {
            next.push(population[e].clone());
            let home = eligible.iter().position(|&k| k == species_of[&e]);
            let slot = match home {
                Some(p) if quotas[p] > 0 => Some(p),
                _ => (0..quotas.len()).filter(|&p| quotas[p] > 0).max_by(|&a, &b| quotas[a].cmp(&quotas[b]).then(b.cmp(&a))),
            };
            if let Some(p) = slot {
                quotas[p] -= 1;
            }
        }

        for (p, &k) in eligible.iter().enumerate() {
            for _ in 0..quotas[p] {
                let child = self.offspring(k, &eligible, population, &fitness, &adjusted, rng);
                next.push(mutate(&child, &mut self.registry, &self.config, rng));
            }
        }
        next.truncate(self.config.population_size);

        self.registry.end_generation();
        Ok(next)
    }

    fn offspring<R: Rng + ?Sized>(
        &self,
        k: usize,
        eligible: &[usize],
        population: &[CppnGenome],
        fitness: &[f64],
        adjusted: &[f64],
        rng: &mut R,
    ) -> CppnGenome {
        let first = self.select_parent(k, adjusted, rng);
        if rng.random_bool(self.config.p_no_crossover) {
            return population[first].clone();
        }
        let others: Vec<usize> = eligible.iter().copied().filter(|&o| o != k).collect();
        let second_species = if rng.random_bool(self.config.p_interspecies) {
            others.choose(rng).copied().unwrap_or(k)
        } else {
            k
        };
        let second = self.select_parent(second_species, adjusted, rng);
        let (fitter, other) = if fitness[second] > fitness[first] { (second, first) } else { (first, second) };
        crossover(&population[fitter], &population[other], rng)
    }

    /// Fitness-proportionate pick over adjusted fitness; uniform if all zero.
    fn select_parent<R: Rng + ?Sized>(&self, k: usize, adjusted: &[f64], rng: &mut R) -> usize {
        let members = &self.species[k].members;
        match WeightedIndex::new(members.iter().map(|&i| adjusted[i])) {
            Ok(dist) => members[dist.sample(rng)],
            Err(_) => *members.choose(rng).expect("non-empty species"),
        }
    }
}
