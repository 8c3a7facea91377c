//! Inter-shape dependency graph and stratification.
//!
//! Every shape-referencing constraint contributes a directed edge from the
//! constraining shape to the referenced shape, signed by the constraint's
//! monotonicity ([`RefSign`]). Stratification assigns each shape a level such
//! that positive dependencies never point to a higher level and negative
//! dependencies point strictly lower. Evaluation can then finish a stratum
//! completely — turning every remaining unknown into a refutation — before
//! any anti-monotone bound in a later stratum reads those verdicts.
//!
//! A negative edge inside a strongly connected component admits no such
//! assignment and is rejected as [`SchemaError::NegativeCycle`].

use indexmap::IndexSet;

use super::{RefSign, SchemaError, ShapeSchema};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DependencyEdge {
    pub from: usize,
    pub to: usize,
    pub sign: RefSign,
}

/// The shape dependency graph, with adjacency in declaration order.
#[derive(Debug, Clone)]
pub struct DependencyGraph {
    node_count: usize,
    /// Distinct `(from, to, sign)` edges in first-occurrence order.
    edges: Vec<DependencyEdge>,
    /// Distinct undirected neighbor lists (declaration-ordered), used by
    /// traversal planning.
    undirected: Vec<Vec<usize>>,
    in_degree: Vec<usize>,
    out_degree: Vec<usize>,
}

impl DependencyGraph {
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[DependencyEdge] {
        &self.edges
    }

    /// Number of distinct shapes with an edge into `node`, collapsing sign:
    /// parallel positive and negative edges from one dependent count once.
    pub fn in_degree(&self, node: usize) -> usize {
        self.in_degree[node]
    }

    /// Number of distinct shapes `node` has an edge to, collapsing sign.
    pub fn out_degree(&self, node: usize) -> usize {
        self.out_degree[node]
    }

    /// Neighbors of `node` ignoring direction and sign, each listed once, in
    /// shape declaration order.
    pub fn undirected_neighbors(&self, node: usize) -> &[usize] {
        &self.undirected[node]
    }
}

pub fn build_dependency_graph(schema: &ShapeSchema) -> DependencyGraph {
    let n = schema.len();
    let mut edges: IndexSet<(usize, usize, RefSign)> = IndexSet::new();
    for (from, shape) in schema.shapes().iter().enumerate() {
        for c in &shape.constraints {
            if let Some(r) = &c.shape_ref {
                let to = schema
                    .index_of(&r.shape)
                    .expect("schema validation guarantees reference targets exist");
                edges.insert((from, to, r.sign));
            }
        }
    }
    let edges: Vec<DependencyEdge> = edges
        .into_iter()
        .map(|(from, to, sign)| DependencyEdge { from, to, sign })
        .collect();

    let mut pairs: IndexSet<(usize, usize)> = IndexSet::new();
    for e in &edges {
        pairs.insert((e.from, e.to));
    }
    let mut in_degree = vec![0usize; n];
    let mut out_degree = vec![0usize; n];
    for &(from, to) in &pairs {
        out_degree[from] += 1;
        in_degree[to] += 1;
    }

    let mut undirected: Vec<IndexSet<usize>> = vec![IndexSet::new(); n];
    // Insert neighbor ids lowest-first so each list comes out in declaration
    // order regardless of which direction the edges were declared in.
    for (node, neighbors) in undirected.iter_mut().enumerate() {
        for &(from, to) in &pairs {
            if from == node && to != node {
                neighbors.insert(to);
            }
            if to == node && from != node {
                neighbors.insert(from);
            }
        }
    }
    let undirected = undirected
        .into_iter()
        .map(|set| {
            let mut v: Vec<usize> = set.into_iter().collect();
            v.sort_unstable();
            v
        })
        .collect();

    DependencyGraph {
        node_count: n,
        edges,
        undirected,
        in_degree,
        out_degree,
    }
}

/// Partition shapes into strata (lists of shape names, declaration-ordered
/// within a stratum) such that every positive dependency stays within or
/// below its shape's stratum and every negative dependency lands strictly
/// below. Fails if a negative edge closes a dependency cycle.
pub fn stratify(schema: &ShapeSchema, graph: &DependencyGraph) -> Result<Vec<Vec<String>>, SchemaError> {
    let n = graph.node_count();
    if n == 0 {
        return Ok(Vec::new());
    }

    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
    for e in graph.edges() {
        adjacency[e.from].push(e.to);
    }
    let components = strongly_connected_components(&adjacency);
    let mut component_of = vec![usize::MAX; n];
    for (ci, members) in components.iter().enumerate() {
        for &m in members {
            component_of[m] = ci;
        }
    }

    // `components` is in reverse topological order of the dependency
    // direction: for an edge from -> to, the component of `to` appears first.
    // Walking it front to back therefore sees every dependency's level before
    // the dependent's.
    let mut component_level = vec![0usize; components.len()];
    for (ci, members) in components.iter().enumerate() {
        let mut level = 0usize;
        for e in graph.edges() {
            if component_of[e.from] != ci {
                continue;
            }
            let dep = component_of[e.to];
            if dep == ci {
                if e.sign == RefSign::Negative {
                    let mut shapes: Vec<String> = members
                        .iter()
                        .map(|&m| schema.shapes()[m].name.clone())
                        .collect();
                    shapes.sort_by_key(|name| schema.index_of(name));
                    return Err(SchemaError::NegativeCycle { shapes });
                }
                continue;
            }
            let needed = match e.sign {
                RefSign::Positive => component_level[dep],
                RefSign::Negative => component_level[dep] + 1,
            };
            level = level.max(needed);
        }
        component_level[ci] = level;
    }

    let max_level = component_level.iter().copied().max().unwrap_or(0);
    let mut strata: Vec<Vec<String>> = vec![Vec::new(); max_level + 1];
    for (node, shape) in schema.shapes().iter().enumerate() {
        strata[component_level[component_of[node]]].push(shape.name.clone());
    }
    Ok(strata)
}

/// Map each shape name to its stratum index per [`stratify`].
pub fn stratum_levels(
    schema: &ShapeSchema,
    strata: &[Vec<String>],
) -> Vec<usize> {
    let mut levels = vec![0usize; schema.len()];
    for (level, stratum) in strata.iter().enumerate() {
        for name in stratum {
            let idx = schema
                .index_of(name)
                .expect("strata contain only schema shape names");
            levels[idx] = level;
        }
    }
    levels
}

/// Tarjan's algorithm, iterative. Components come out in reverse topological
/// order: every edge's head component is emitted before its tail component.
fn strongly_connected_components(adjacency: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adjacency.len();
    const UNVISITED: usize = usize::MAX;
    let mut index = vec![UNVISITED; n];
    let mut lowlink = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut next_index = 0usize;
    let mut components: Vec<Vec<usize>> = Vec::new();

    // Explicit call stack of (node, next child position) frames.
    let mut frames: Vec<(usize, usize)> = Vec::new();
    for start in 0..n {
        if index[start] != UNVISITED {
            continue;
        }
        frames.push((start, 0));
        index[start] = next_index;
        lowlink[start] = next_index;
        next_index += 1;
        stack.push(start);
        on_stack[start] = true;

        while let Some(&mut (node, ref mut child_pos)) = frames.last_mut() {
            if *child_pos < adjacency[node].len() {
                let child = adjacency[node][*child_pos];
                *child_pos += 1;
                if index[child] == UNVISITED {
                    index[child] = next_index;
                    lowlink[child] = next_index;
                    next_index += 1;
                    stack.push(child);
                    on_stack[child] = true;
                    frames.push((child, 0));
                } else if on_stack[child] {
                    lowlink[node] = lowlink[node].min(index[child]);
                }
            } else {
                frames.pop();
                if let Some(&(parent, _)) = frames.last() {
                    lowlink[parent] = lowlink[parent].min(lowlink[node]);
                }
                if lowlink[node] == index[node] {
                    let mut component = Vec::new();
                    loop {
                        let member = stack.pop().expect("tarjan stack underflow");
                        on_stack[member] = false;
                        component.push(member);
                        if member == node {
                            break;
                        }
                    }
                    component.sort_unstable();
                    components.push(component);
                }
            }
        }
    }
    components
}
