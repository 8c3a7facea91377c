//! Shape traversal planning.
//!
//! The order in which shapes are evaluated decides how much verdict knowledge
//! is available for query rewriting when each shape's queries are built, so
//! the planner picks a seed shape by connectivity (a configurable in- or
//! out-degree preference over the dependency graph, with constraint count and
//! finally shape name as tie-breakers) and walks the graph from there.
//! Traversal ignores edge direction and sign: a dependency in either
//! direction means the two shapes share instance lists worth exploiting.
//!
//! All walks run in O(shapes + edges): neighbor lists are precomputed and
//! every edge is touched at most twice. Disconnected remainders are picked up
//! by restarting at the first unvisited shape in declaration order.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::schema::graph::DependencyGraph;
use crate::schema::ShapeSchema;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraversalStrategy {
    Bfs,
    Dfs,
    Random,
}

/// Which degree of the dependency graph makes a shape an attractive seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegreePreference {
    /// Most-depended-upon shape first: its verdicts feed the most filters.
    HighestIn,
    /// Most-depending shape first: it consumes the most neighbor lists.
    HighestOut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintPreference {
    Many,
    Few,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlannerConfig {
    pub strategy: TraversalStrategy,
    pub degree: DegreePreference,
    pub constraints: ConstraintPreference,
    pub rng_seed: u64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            strategy: TraversalStrategy::Dfs,
            degree: DegreePreference::HighestIn,
            constraints: ConstraintPreference::Many,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeRow {
    pub shape: String,
    pub in_degree: usize,
    pub out_degree: usize,
    pub constraint_count: usize,
    pub targeted: bool,
}

pub fn degree_table(schema: &ShapeSchema, graph: &DependencyGraph) -> Vec<DegreeRow> {
    schema
        .shapes()
        .iter()
        .enumerate()
        .map(|(i, s)| DegreeRow {
            shape: s.name.clone(),
            in_degree: graph.in_degree(i),
            out_degree: graph.out_degree(i),
            constraint_count: s.constraints.len(),
            targeted: s.is_targeted(),
        })
        .collect()
}

/// What finally separated the seed from the other candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedRationale {
    Degree,
    Constraints,
    Name,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedChoice {
    pub index: usize,
    pub rationale: SeedRationale,
    /// True when no shape is targeted and the seed was chosen over all
    /// shapes instead of the usual targeted candidates.
    pub untargeted_fallback: bool,
}

pub fn select_seed(
    schema: &ShapeSchema,
    graph: &DependencyGraph,
    config: &PlannerConfig,
) -> Option<SeedChoice> {
    if schema.is_empty() {
        return None;
    }
    let mut candidates: Vec<usize> = (0..schema.len())
        .filter(|&i| schema.shapes()[i].is_targeted())
        .collect();
    let untargeted_fallback = candidates.is_empty();
    if untargeted_fallback {
        candidates = (0..schema.len()).collect();
    }

    let degree_of = |i: usize| match config.degree {
        DegreePreference::HighestIn => graph.in_degree(i),
        DegreePreference::HighestOut => graph.out_degree(i),
    };
    let best_degree = candidates.iter().map(|&i| degree_of(i)).max()?;
    let mut tied: Vec<usize> = candidates
        .into_iter()
        .filter(|&i| degree_of(i) == best_degree)
        .collect();
    if tied.len() == 1 {
        return Some(SeedChoice {
            index: tied[0],
            rationale: SeedRationale::Degree,
            untargeted_fallback,
        });
    }

    let constraint_count = |i: usize| schema.shapes()[i].constraints.len();
    let target = match config.constraints {
        ConstraintPreference::Many => tied.iter().map(|&i| constraint_count(i)).max()?,
        ConstraintPreference::Few => tied.iter().map(|&i| constraint_count(i)).min()?,
    };
    tied.retain(|&i| constraint_count(i) == target);
    if tied.len() == 1 {
        return Some(SeedChoice {
            index: tied[0],
            rationale: SeedRationale::Constraints,
            untargeted_fallback,
        });
    }

    let index = tied
        .into_iter()
        .min_by(|&a, &b| schema.shapes()[a].name.cmp(&schema.shapes()[b].name))?;
    Some(SeedChoice {
        index,
        rationale: SeedRationale::Name,
        untargeted_fallback,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TraversalStats {
    pub nodes_expanded: usize,
    pub edges_followed: usize,
    pub restarts: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraversalPlan {
    /// Shape indices in evaluation order; always a permutation of the schema.
    pub order: Vec<usize>,
    pub seed: Option<SeedChoice>,
    pub stats: TraversalStats,
}

pub fn plan_traversal(
    schema: &ShapeSchema,
    graph: &DependencyGraph,
    config: &PlannerConfig,
) -> TraversalPlan {
    let n = schema.len();
    if n == 0 {
        return TraversalPlan {
            order: Vec::new(),
            seed: None,
            stats: TraversalStats::default(),
        };
    }
    if config.strategy == TraversalStrategy::Random {
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        order.shuffle(&mut rng);
        return TraversalPlan {
            order,
            seed: None,
            stats: TraversalStats::default(),
        };
    }

    let seed = select_seed(schema, graph, config).expect("non-empty schema has a seed");
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut stats = TraversalStats::default();

    let mut start = Some(seed.index);
    while let Some(root) = start.take() {
        match config.strategy {
            TraversalStrategy::Bfs => {
                let mut queue = std::collections::VecDeque::new();
                visited[root] = true;
                queue.push_back(root);
                while let Some(u) = queue.pop_front() {
                    order.push(u);
                    stats.nodes_expanded += 1;
                    for &v in graph.undirected_neighbors(u) {
                        stats.edges_followed += 1;
                        if !visited[v] {
                            visited[v] = true;
                            queue.push_back(v);
                        }
                    }
                }
            }
            TraversalStrategy::Dfs => {
                let mut stack = vec![root];
                while let Some(u) = stack.pop() {
                    if visited[u] {
                        continue;
                    }
                    visited[u] = true;
                    order.push(u);
                    stats.nodes_expanded += 1;
                    // First-declared neighbor should be expanded first, so
                    // push in reverse declaration order.
                    for &v in graph.undirected_neighbors(u).iter().rev() {
                        stats.edges_followed += 1;
                        if !visited[v] {
                            stack.push(v);
                        }
                    }
                }
            }
            TraversalStrategy::Random => unreachable!("handled above"),
        }
        if let Some(next) = (0..n).find(|&i| !visited[i]) {
            stats.restarts += 1;
            start = Some(next);
        }
    }

    TraversalPlan {
        order,
        seed: Some(seed),
        stats,
    }
}
