use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::graph::Graph;
use super::model::{ClassTag, Instance, SpinConfig, Term};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, streams};

pub const DEFAULT_LOOPS_PER_SPIN: f64 = 0.25;
pub const DEFAULT_LOOP_LENGTH_CAP: usize = 100;
pub const DEFAULT_COUPLING_BOUND: f64 = 2.0;

const WALK_RESTARTS_PER_LOOP: usize = 10_000;
const REJECTED_LOOPS_PER_LOOP: usize = 1_000;
const XORSAT_PAIRING_RETRIES: usize = 100_000;

/// Parameters of the frustrated-loop planted-solution construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantedParams {
    pub loops_per_spin: f64,
    pub loop_length_cap: usize,
    /// Loops that would push any accumulated |J| above this are rejected.
    pub coupling_bound: f64,
}

impl Default for PlantedParams {
    fn default() -> Self {
        PlantedParams {
            loops_per_spin: DEFAULT_LOOPS_PER_SPIN,
            loop_length_cap: DEFAULT_LOOP_LENGTH_CAP,
            coupling_bound: DEFAULT_COUPLING_BOUND,
        }
    }
}

/// Frustrated-loop planted-solution instance.
///
/// Each loop is a simple cycle found by a non-backtracking random walk that
/// stops at the first revisited node. In the gauge where the planted state
/// is all +1, every loop edge gets -1 except one uniformly chosen edge with
/// +1, so each loop is minimized (at energy -(len - 2)) by the planted
/// state. Couplings on shared edges add up; the gauge is finally undone.
pub fn generate_planted(graph: &Graph, params: &PlantedParams, seed: u64) -> Result<Instance> {
    let n = graph.n_nodes();
    if !(params.loops_per_spin > 0.0) {
        return Err(Error::GenerationFailure(format!(
            "loops_per_spin must be positive, got {}",
            params.loops_per_spin
        )));
    }
    let n_loops = (params.loops_per_spin * n as f64).round() as usize;
    if n_loops == 0 {
        return Err(Error::GenerationFailure(format!(
            "loops_per_spin {} on {n} spins gives no loops",
            params.loops_per_spin
        )));
    }
    if !graph.has_cycle() {
        return Err(Error::GenerationFailure(
            "graph contains no cycle, cannot place frustrated loops".into(),
        ));
    }
    if params.loop_length_cap < 3 {
        return Err(Error::GenerationFailure(format!(
            "loop_length_cap {} is shorter than any cycle",
            params.loop_length_cap
        )));
    }

    let mut rng = stream_rng(seed, streams::GENERATOR);
    let planted = SpinConfig::random(n, &mut rng);
    let adj = graph.adjacency();
    let starts: Vec<usize> = (0..n).filter(|&v| adj[v].len() >= 2).collect();
    // Couplings in the gauge where the planted state is all +1.
    let mut gauge_j: BTreeMap<(usize, usize), i32> = BTreeMap::new();
    let bound = params.coupling_bound;
    let mut e0 = 0i64;
    let mut rejected = 0usize;
    let mut placed = 0usize;
    while placed < n_loops {
        let cycle = random_cycle(&adj, &starts, params.loop_length_cap, &mut rng)?;
        let len = cycle.len();
        let frustrated = rng.gen_range(0..len);
        let edges: Vec<((usize, usize), i32)> = (0..len)
            .map(|k| {
                let (a, b) = (cycle[k], cycle[(k + 1) % len]);
                ((a.min(b), a.max(b)), if k == frustrated { 1 } else { -1 })
            })
            .collect();
        let fits = edges.iter().all(|(e, j)| {
            let cur = gauge_j.get(e).copied().unwrap_or(0);
            ((cur + j).abs() as f64) <= bound
        });
        if !fits {
            rejected += 1;
            if rejected > REJECTED_LOOPS_PER_LOOP * n_loops {
                return Err(Error::GenerationFailure(format!(
                    "too many loops rejected by coupling bound {bound}"
                )));
            }
            continue;
        }
        for (e, j) in edges {
            *gauge_j.entry(e).or_insert(0) += j;
        }
        e0 -= len as i64 - 2;
        placed += 1;
    }

    let terms = gauge_j
        .into_iter()
        .filter(|&(_, j)| j != 0)
        .map(|((a, b), j)| {
            let sign = (planted.get(a) * planted.get(b)) as i32;
            Term::coupling(a, b, (j * sign) as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    Instance::new(n, terms, ClassTag::Planted, seed)?.with_planted(planted, e0 as f64)
}

fn random_cycle<R: Rng>(
    adj: &[Vec<usize>],
    starts: &[usize],
    cap: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let mut pos = vec![usize::MAX; adj.len()];
    let mut path: Vec<usize> = Vec::with_capacity(cap + 1);
    for _ in 0..WALK_RESTARTS_PER_LOOP {
        for &v in &path {
            pos[v] = usize::MAX;
        }
        path.clear();
        let start = *starts.choose(rng).expect("graph has a cycle");
        pos[start] = 0;
        path.push(start);
        let mut prev = usize::MAX;
        while path.len() <= cap {
            let cur = *path.last().unwrap();
            let choices: Vec<usize> = adj[cur].iter().copied().filter(|&w| w != prev).collect();
            let Some(&next) = choices.choose(rng) else {
                break; // dead end
            };
            if pos[next] != usize::MAX {
                let cycle = path[pos[next]..].to_vec();
                for &v in &path {
                    pos[v] = usize::MAX;
                }
                if cycle.len() <= cap {
                    return Ok(cycle);
                }
                path.clear();
                break;
            }
            pos[next] = path.len();
            path.push(next);
            prev = cur;
        }
    }
    Err(Error::GenerationFailure(format!(
        "no cycle of length <= {cap} found after {WALK_RESTARTS_PER_LOOP} walks"
    )))
}

/// Random +-1 coupling on every edge, no fields.
pub fn generate_bimodal(graph: &Graph, seed: u64) -> Result<Instance> {
    if graph.edges().is_empty() {
        return Err(Error::InvalidGraph("bimodal instance needs at least one edge".into()));
    }
    let mut rng = stream_rng(seed, streams::GENERATOR);
    let terms = graph
        .edges()
        .iter()
        .map(|&(a, b)| Term::coupling(a, b, if rng.gen::<bool>() { 1.0 } else { -1.0 }))
        .collect::<Result<Vec<_>>>()?;
    Instance::new(graph.n_nodes(), terms, ClassTag::Bimodal, seed)
}

/// 3-regular 3-XORSAT: N clauses `+s_i s_j s_k`, each variable in exactly
/// three clauses. Built with the configuration model: 3N variable stubs are
/// shuffled and cut into triples; pairings with a repeated variable inside
/// a clause, or a repeated clause, are redrawn.
pub fn generate_xorsat3(n_spins: usize, seed: u64) -> Result<Instance> {
    if n_spins < 4 {
        return Err(Error::GenerationFailure(format!(
            "3-regular 3-XORSAT needs at least 4 spins, got {n_spins}"
        )));
    }
    let mut rng = stream_rng(seed, streams::GENERATOR);
    let mut stubs: Vec<usize> = (0..n_spins).flat_map(|v| [v, v, v]).collect();
    for _ in 0..XORSAT_PAIRING_RETRIES {
        stubs.shuffle(&mut rng);
        let mut clauses: Vec<[usize; 3]> = stubs
            .chunks_exact(3)
            .map(|c| {
                let mut t = [c[0], c[1], c[2]];
                t.sort_unstable();
                t
            })
            .collect();
        if clauses.iter().any(|t| t[0] == t[1] || t[1] == t[2]) {
            continue;
        }
        let mut sorted = clauses.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            continue;
        }
        clauses.sort_unstable();
        let terms = clauses
            .into_iter()
            .map(|t| Term::new(t.to_vec(), 1.0))
            .collect::<Result<Vec<_>>>()?;
        return Instance::new(n_spins, terms, ClassTag::Xorsat3, seed)?
            .with_planted(SpinConfig::all_down(n_spins), -(n_spins as f64));
    }
    Err(Error::GenerationFailure(format!(
        "stub pairing failed {XORSAT_PAIRING_RETRIES} times for N={n_spins}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::build_chimera;

    fn brute_min(inst: &Instance) -> f64 {
        (0..1u64 << inst.n_spins())
            .map(|b| inst.energy(&SpinConfig::from_bits(inst.n_spins(), b)).unwrap())
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn planted_single_cell_single_loop() {
        let g = build_chimera(1, 1).unwrap();
        // K_{4,4} is bipartite, so every loop has even length >= 4.
        let params = PlantedParams {
            loops_per_spin: 1.0 / 8.0,
            ..Default::default()
        };
        for seed in 0..20 {
            let inst = generate_planted(&g, &params, seed).unwrap();
            let e0 = inst.known_e0().unwrap();
            assert!(e0 <= -2.0);
            assert_eq!(brute_min(&inst), e0);
            assert_eq!(inst.energy(inst.planted_config().unwrap()).unwrap(), e0);
        }
    }

    #[test]
    fn planted_length_four_loop_gives_minus_two() {
        let g = Graph::new(4, [(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        let params = PlantedParams {
            loops_per_spin: 0.25,
            ..Default::default()
        };
        let inst = generate_planted(&g, &params, 3).unwrap();
        assert_eq!(inst.known_e0(), Some(-2.0));
        assert_eq!(brute_min(&inst), -2.0);
    }

    #[test]
    fn planted_zero_loops_rejected() {
        let g = build_chimera(1, 1).unwrap();
        let params = PlantedParams {
            loops_per_spin: 0.01,
            ..Default::default()
        };
        assert!(matches!(
            generate_planted(&g, &params, 1),
            Err(Error::GenerationFailure(_))
        ));
    }

    #[test]
    fn planted_tree_rejected() {
        let g = Graph::new(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        assert!(matches!(
            generate_planted(&g, &PlantedParams::default(), 1),
            Err(Error::GenerationFailure(_))
        ));
    }

    #[test]
    fn planted_respects_coupling_bound() {
        let g = build_chimera(2, 2).unwrap();
        let params = PlantedParams {
            loops_per_spin: 1.0,
            ..Default::default()
        };
        let inst = generate_planted(&g, &params, 11).unwrap();
        assert!(inst.terms().iter().all(|t| t.coefficient().abs() <= 2.0));
        assert!(inst.terms().iter().all(|t| t.coefficient() != 0.0));
    }

    #[test]
    fn bimodal_single_edge() {
        let g = Graph::new(2, [(0, 1)]).unwrap();
        let inst = generate_bimodal(&g, 5).unwrap();
        assert_eq!(inst.terms().len(), 1);
        assert!(inst.terms()[0].coefficient().abs() == 1.0);
    }

    #[test]
    fn bimodal_full_chimera() {
        let g = build_chimera(12, 12).unwrap();
        let inst = generate_bimodal(&g, 1).unwrap();
        assert_eq!(inst.n_spins(), 1152);
        assert_eq!(inst.terms().len(), g.edges().len());
    }

    #[test]
    fn bimodal_is_deterministic() {
        let g = build_chimera(2, 2).unwrap();
        assert_eq!(generate_bimodal(&g, 42).unwrap(), generate_bimodal(&g, 42).unwrap());
        assert_ne!(generate_bimodal(&g, 42).unwrap(), generate_bimodal(&g, 43).unwrap());
    }

    #[test]
    fn bimodal_empty_graph_rejected() {
        let g = Graph::new(3, []).unwrap();
        assert!(generate_bimodal(&g, 0).is_err());
    }

    #[test]
    fn xorsat_four_spins() {
        let inst = generate_xorsat3(4, 0).unwrap();
        assert_eq!(inst.terms().len(), 4);
        let mut count = [0; 4];
        for t in inst.terms() {
            for &i in t.support() {
                count[i] += 1;
            }
        }
        assert_eq!(count, [3; 4]);
        assert_eq!(inst.energy(&SpinConfig::all_down(4)).unwrap(), -4.0);
    }

    #[test]
    fn xorsat_regularity_n100() {
        let inst = generate_xorsat3(100, 17).unwrap();
        assert_eq!(inst.terms().len(), 100);
        let mut count = vec![0; 100];
        for t in inst.terms() {
            assert_eq!(t.arity(), 3);
            assert_eq!(t.coefficient(), 1.0);
            for &i in t.support() {
                count[i] += 1;
            }
        }
        assert!(count.iter().all(|&c| c == 3));
        assert_eq!(inst.energy(&SpinConfig::all_down(100)).unwrap(), -100.0);
    }

    #[test]
    fn xorsat_too_small() {
        assert!(generate_xorsat3(3, 0).is_err());
    }
}
