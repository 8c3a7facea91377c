//! The incremental grounding engine behind [`super::run_validation`].
//!
//! Per (shape, entity) pair the engine keeps one state with a cell per
//! constraint. Cells move monotonically: intra-shape cells wait for row
//! evidence (`PendingRows`) and are decided by absence only when their query
//! is exhausted; neighbor-dependent cells count confirmed conformers and park
//! undecided neighbors in a pending set, to be woken through a waiter
//! registry when the neighbor's verdict lands. A state's verdict is the
//! three-valued conjunction of its cells — any refuted cell refutes the
//! entity immediately, while confirmation needs every cell confirmed.
//!
//! Exhausting a shape's queries converts absence into refutation for that
//! shape; exhausting the last shape of a stratum closes the stratum, forcing
//! the still-undecided remainder (mutual support with no data backing) to
//! refuted, as the minimal fixpoint requires. Entities first referenced
//! after their shape was exhausted are materialized late and decided on the
//! spot from the already-complete evidence.

use std::collections::{HashMap, VecDeque};
use std::time::Instant;

use indexmap::{IndexMap, IndexSet};

use super::{
    DataSource, EngineConfig, EngineStats, ShapeReport, TraceEvent, ValidationError,
    ValidationReport,
};
use crate::planner::plan_traversal;
use crate::query::{
    self, partition_plan, push_instance_filter, selectivity_rank, MaxQueryKind, MinQuery,
    PatternObject, QueryPlan, SelectQuery, TriplePattern, Variable,
};
use crate::schema::graph::{build_dependency_graph, stratify, stratum_levels};
use crate::schema::{CardinalityKind, ShapeSchema, ValueFilter};
use crate::term::Term;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CellKind {
    IntraMin,
    IntraMax,
    /// `max n >= 1` over a constant value: at most one distinct value can
    /// match, so the cell is confirmed at creation.
    TrivialMax,
    InterMin { shape: usize, count: u32 },
    InterMax { shape: usize, count: u32 },
}

#[derive(Debug)]
enum Cell {
    True,
    False,
    /// An intra-shape check awaiting row evidence or exhaustion.
    PendingRows,
    /// A neighbor-counting check: `satisfied` confirmed conformers,
    /// `pending` undecided candidates, `seen` for candidate deduplication.
    Counting {
        satisfied: u32,
        pending: IndexSet<Term>,
        seen: IndexSet<Term>,
    },
}

impl Cell {
    fn decided(&self) -> Option<bool> {
        match self {
            Cell::True => Some(true),
            Cell::False => Some(false),
            _ => None,
        }
    }
}

#[derive(Debug)]
struct EntityState {
    is_target: bool,
    verdict: Option<bool>,
    cells: Vec<Cell>,
}

/// How rows of one executed query feed the state table.
enum Role {
    Target {
        /// When the specialized target part ran first, the min-constraint
        /// cell it covered: plain-target entities it did not return have no
        /// conforming neighbor on that path and fail the cell immediately.
        specialized_min: Option<usize>,
    },
    /// The filtered target part: targets with at least one conforming
    /// neighbor on the specialized path.
    TargetSpecialized,
    Min {
        /// Cells decided true by the entity's first row.
        intra_cells: Vec<usize>,
        /// `(cell, row column)` for each co-projected neighbor variable.
        columns: Vec<(usize, usize)>,
    },
    MaxViolator {
        cell: usize,
    },
    MaxPairs {
        cell: usize,
    },
}

pub(super) fn run(
    schema: &ShapeSchema,
    config: &EngineConfig,
    source: &DataSource,
    observer: &mut dyn FnMut(super::ShapeEvent),
) -> Result<ValidationReport, ValidationError> {
    let dependency_graph = build_dependency_graph(schema);
    let strata = stratify(schema, &dependency_graph)?;
    let levels = stratum_levels(schema, &strata);
    let mut strata_shapes: Vec<Vec<usize>> = vec![Vec::new(); strata.len().max(1)];
    for (i, &l) in levels.iter().enumerate() {
        strata_shapes[l].push(i);
    }

    let (order, seed) = if config.rewriting {
        let plan = plan_traversal(schema, &dependency_graph, &config.planner);
        let seed = plan
            .seed
            .as_ref()
            .map(|c| schema.shapes()[c.index].name.clone());
        (plan.order, seed)
    } else {
        ((0..schema.len()).collect(), None)
    };

    let cell_kinds: Vec<Vec<CellKind>> = schema
        .shapes()
        .iter()
        .map(|shape| {
            shape
                .constraints
                .iter()
                .map(|c| match (&c.shape_ref, c.kind) {
                    (Some(r), CardinalityKind::Min) => CellKind::InterMin {
                        shape: schema.index_of(&r.shape).expect("validated reference"),
                        count: c.count,
                    },
                    (Some(r), CardinalityKind::Max) => CellKind::InterMax {
                        shape: schema.index_of(&r.shape).expect("validated reference"),
                        count: c.count,
                    },
                    (None, CardinalityKind::Min) => CellKind::IntraMin,
                    (None, CardinalityKind::Max) => {
                        if matches!(c.value_filter, Some(ValueFilter::Constant(_))) && c.count >= 1
                        {
                            CellKind::TrivialMax
                        } else {
                            CellKind::IntraMax
                        }
                    }
                })
                .collect()
        })
        .collect();

    let mut engine = Engine {
        schema,
        config,
        source,
        strata_shapes,
        cell_kinds,
        states: (0..schema.len()).map(|_| IndexMap::new()).collect(),
        exhausted: vec![false; schema.len()],
        undecided: vec![0; schema.len()],
        closed_strata: 0,
        waiters: HashMap::new(),
        fire_queue: VecDeque::new(),
        spec_hits: IndexSet::new(),
        valid_lists: vec![Vec::new(); schema.len()],
        invalid_lists: vec![Vec::new(); schema.len()],
        trace: Vec::new(),
        start: Instant::now(),
        seq: 0,
        requests: 0,
        answers: 0,
        rules_grounded: 0,
        targets_total: 0,
        targets_decided: 0,
    };

    for &s in &order {
        engine.evaluate_shape(s)?;
        observer(super::ShapeEvent {
            shape: schema.shapes()[s].name.clone(),
            tracked: engine.states[s].len(),
            undecided: engine.undecided[s],
            elapsed: engine.start.elapsed(),
        });
    }
    engine.try_close();
    debug_assert_eq!(
        engine.closed_strata,
        engine.strata_shapes.len(),
        "all strata close once every shape is exhausted"
    );
    Ok(engine.into_report(&order, seed))
}

/// A cell parked on another shape's verdict: `(shape, entity, cell index)`.
type WaitingCell = (usize, Term, usize);

struct Engine<'a> {
    schema: &'a ShapeSchema,
    config: &'a EngineConfig,
    source: &'a DataSource,
    /// Shape indices grouped by stratum level, closed lowest first.
    strata_shapes: Vec<Vec<usize>>,
    cell_kinds: Vec<Vec<CellKind>>,
    states: Vec<IndexMap<Term, EntityState>>,
    exhausted: Vec<bool>,
    /// Per shape: materialized states whose verdict is still open.
    undecided: Vec<usize>,
    closed_strata: usize,
    /// `(shape, entity)` -> cells waiting on that verdict as `(shape, entity,
    /// cell)`.
    waiters: HashMap<(usize, Term), Vec<WaitingCell>>,
    fire_queue: VecDeque<(usize, Term, bool)>,
    /// Entities returned by the current shape's specialized target part;
    /// plain-target entities outside this set fail that min cell outright.
    spec_hits: IndexSet<Term>,
    /// Full conformance populations (targets and referenced neighbors), in
    /// decision order; these feed instance filters.
    valid_lists: Vec<Vec<Term>>,
    invalid_lists: Vec<Vec<Term>>,
    trace: Vec<TraceEvent>,
    start: Instant,
    seq: u64,
    requests: u64,
    answers: u64,
    /// Once per registered neighbor-support edge plus once per intra-shape
    /// check decided by a retrieved row; absence decisions count nothing.
    rules_grounded: u64,
    targets_total: u64,
    targets_decided: u64,
}

impl<'a> Engine<'a> {
    // --- state lifecycle ---------------------------------------------------

    fn new_cells(&self, s: usize) -> Vec<Cell> {
        self.cell_kinds[s]
            .iter()
            .map(|k| match k {
                CellKind::IntraMin | CellKind::IntraMax => Cell::PendingRows,
                CellKind::TrivialMax => Cell::True,
                CellKind::InterMin { .. } | CellKind::InterMax { .. } => Cell::Counting {
                    satisfied: 0,
                    pending: IndexSet::new(),
                    seen: IndexSet::new(),
                },
            })
            .collect()
    }

    fn ensure_state(&mut self, s: usize, x: &Term) {
        if self.states[s].contains_key(x) {
            return;
        }
        let cells = self.new_cells(s);
        self.states[s].insert(
            x.clone(),
            EntityState {
                is_target: false,
                verdict: None,
                cells,
            },
        );
        self.undecided[s] += 1;
        if self.exhausted[s] {
            // Late materialization: this shape's queries are complete and the
            // entity appeared in none of them, so absence evidence decides
            // every cell right now.
            self.resolve_absence(s, x);
        }
        self.check_verdict(s, x);
    }

    fn mark_target(&mut self, s: usize, x: &Term) {
        self.ensure_state(s, x);
        let st = self.states[s].get_mut(x).expect("just ensured");
        if st.is_target {
            return;
        }
        st.is_target = true;
        let verdict = st.verdict;
        self.targets_total += 1;
        if let Some(v) = verdict {
            self.record_trace(s, x, v);
        }
    }

    fn record_trace(&mut self, s: usize, x: &Term, valid: bool) {
        self.seq += 1;
        self.trace.push(TraceEvent {
            seq: self.seq,
            shape: self.schema.shapes()[s].name.clone(),
            entity: x.clone(),
            valid,
            elapsed: self.start.elapsed(),
        });
        self.targets_decided += 1;
    }

    // --- cell and verdict transitions ---------------------------------------

    fn set_cell(&mut self, s: usize, x: &Term, cidx: usize, value: bool) {
        {
            let st = self.states[s].get_mut(x).expect("state exists");
            if st.verdict.is_some() || st.cells[cidx].decided().is_some() {
                return;
            }
            st.cells[cidx] = if value { Cell::True } else { Cell::False };
        }
        self.check_verdict(s, x);
    }

    fn check_verdict(&mut self, s: usize, x: &Term) {
        let decision = {
            let st = self.states[s].get(x).expect("state exists");
            if st.verdict.is_some() {
                return;
            }
            if st.cells.iter().any(|c| matches!(c, Cell::False)) {
                Some(false)
            } else if st.cells.iter().all(|c| matches!(c, Cell::True)) {
                Some(true)
            } else {
                None
            }
        };
        if let Some(v) = decision {
            self.set_verdict(s, x, v);
        }
    }

    fn set_verdict(&mut self, s: usize, x: &Term, v: bool) {
        let is_target = {
            let st = self.states[s].get_mut(x).expect("state exists");
            debug_assert!(st.verdict.is_none(), "verdicts are final");
            st.verdict = Some(v);
            st.is_target
        };
        self.undecided[s] -= 1;
        if v {
            self.valid_lists[s].push(x.clone());
        } else {
            self.invalid_lists[s].push(x.clone());
        }
        if is_target {
            self.record_trace(s, x, v);
        }
        self.fire_queue.push_back((s, x.clone(), v));
    }

    /// The referenced shape's verdict for `p`, materializing `p` under it if
    /// needed. Returns `None` only while that shape still has queries or
    /// waiters that could decide `p` positively.
    fn conformance_of(&mut self, t: usize, p: &Term) -> Option<bool> {
        if !self.states[t].contains_key(p) {
            self.ensure_state(t, p);
        }
        self.states[t].get(p).expect("just ensured").verdict
    }

    fn add_candidate(&mut self, s: usize, x: &Term, cidx: usize, p: Term) {
        let (is_min, count, t) = match self.cell_kinds[s][cidx] {
            CellKind::InterMin { shape, count } => (true, count, shape),
            CellKind::InterMax { shape, count } => (false, count, shape),
            _ => unreachable!("candidates only arrive at neighbor-counting cells"),
        };
        {
            let st = self.states[s].get(x).expect("state exists");
            if st.verdict.is_some() {
                return;
            }
            match &st.cells[cidx] {
                Cell::Counting { seen, .. } => {
                    if seen.contains(&p) {
                        return;
                    }
                }
                _ => return,
            }
        }
        let verdict = self.conformance_of(t, &p);
        let decide;
        {
            let exhausted = self.exhausted[s];
            let st = self.states[s].get_mut(x).expect("state exists");
            if st.verdict.is_some() {
                return;
            }
            match &mut st.cells[cidx] {
                Cell::Counting {
                    satisfied,
                    pending,
                    seen,
                } => {
                    seen.insert(p.clone());
                    match verdict {
                        Some(true) => {
                            *satisfied += 1;
                        }
                        Some(false) => {}
                        None => {
                            pending.insert(p.clone());
                        }
                    }
                    decide = counting_decision(is_min, count, *satisfied, pending.len(), exhausted);
                }
                _ => return,
            }
        }
        // One grounding per registered support edge, at registration time;
        // the edge is counted whether its verdict is known, pending, or
        // negative, and never again when a pending verdict later fires.
        self.rules_grounded += 1;
        if verdict.is_none() {
            self.waiters
                .entry((t, p))
                .or_default()
                .push((s, x.clone(), cidx));
        }
        if let Some(v) = decide {
            self.set_cell(s, x, cidx, v);
        }
    }

    /// Deliver queued verdicts to the cells waiting on them, cascading until
    /// quiescent.
    fn process_fires(&mut self) {
        while let Some((t, p, v)) = self.fire_queue.pop_front() {
            let Some(watchers) = self.waiters.remove(&(t, p.clone())) else {
                continue;
            };
            for (s, x, cidx) in watchers {
                let (is_min, count) = match self.cell_kinds[s][cidx] {
                    CellKind::InterMin { count, .. } => (true, count),
                    CellKind::InterMax { count, .. } => (false, count),
                    _ => continue,
                };
                let decide;
                {
                    let exhausted = self.exhausted[s];
                    let Some(st) = self.states[s].get_mut(&x) else {
                        continue;
                    };
                    if st.verdict.is_some() {
                        continue;
                    }
                    match &mut st.cells[cidx] {
                        Cell::Counting {
                            satisfied, pending, ..
                        } => {
                            if !pending.swap_remove(&p) {
                                continue;
                            }
                            if v {
                                *satisfied += 1;
                            }
                            decide =
                                counting_decision(is_min, count, *satisfied, pending.len(), exhausted);
                        }
                        _ => continue,
                    }
                }
                if let Some(val) = decide {
                    self.set_cell(s, &x, cidx, val);
                }
            }
        }
    }

    /// Decide what absence decides, now that shape `s`'s queries are
    /// exhausted: intra-shape cells without row evidence resolve (no row is
    /// proof for `min`-failure and `max`-compliance), and neighbor-counting
    /// cells know their candidate sets are complete.
    fn resolve_absence(&mut self, s: usize, x: &Term) {
        for cidx in 0..self.cell_kinds[s].len() {
            let decide = {
                let st = self.states[s].get(x).expect("state exists");
                if st.verdict.is_some() {
                    return;
                }
                match (&st.cells[cidx], self.cell_kinds[s][cidx]) {
                    (Cell::PendingRows, CellKind::IntraMin) => Some(false),
                    (Cell::PendingRows, CellKind::IntraMax) => Some(true),
                    (
                        Cell::Counting {
                            satisfied, pending, ..
                        },
                        CellKind::InterMin { count, .. },
                    ) => counting_decision(true, count, *satisfied, pending.len(), true),
                    (
                        Cell::Counting {
                            satisfied, pending, ..
                        },
                        CellKind::InterMax { count, .. },
                    ) => counting_decision(false, count, *satisfied, pending.len(), true),
                    _ => None,
                }
            };
            if let Some(v) = decide {
                self.set_cell(s, x, cidx, v);
            }
        }
        self.check_verdict(s, x);
    }

    fn apply_absence(&mut self, s: usize) {
        let keys: Vec<Term> = self.states[s].keys().cloned().collect();
        for x in &keys {
            self.resolve_absence(s, x);
        }
    }

    /// Close every stratum whose shapes are all exhausted, lowest first.
    /// Whatever is still undecided in a closing stratum has only mutual
    /// support left, which the minimal fixpoint refutes: pending `min`
    /// support is treated as failed, pending `max` candidates as
    /// non-conforming.
    fn try_close(&mut self) {
        loop {
            let l = self.closed_strata;
            if l >= self.strata_shapes.len() {
                return;
            }
            if self.strata_shapes[l].iter().any(|&s| !self.exhausted[s]) {
                return;
            }
            let shapes = self.strata_shapes[l].clone();
            for s in shapes {
                let keys: Vec<Term> = self.states[s].keys().cloned().collect();
                for x in keys {
                    if self.states[s].get(&x).expect("keyed").verdict.is_some() {
                        continue;
                    }
                    for cidx in 0..self.cell_kinds[s].len() {
                        let decide = {
                            let st = self.states[s].get(&x).expect("keyed");
                            if st.verdict.is_some() {
                                break;
                            }
                            match (&st.cells[cidx], self.cell_kinds[s][cidx]) {
                                (Cell::PendingRows, CellKind::IntraMin) => Some(false),
                                (Cell::PendingRows, CellKind::IntraMax) => Some(true),
                                (Cell::Counting { .. }, CellKind::InterMin { .. }) => Some(false),
                                (
                                    Cell::Counting { satisfied, .. },
                                    CellKind::InterMax { count, .. },
                                ) => Some(*satisfied <= count),
                                _ => None,
                            }
                        };
                        if let Some(v) = decide {
                            self.set_cell(s, &x, cidx, v);
                        }
                    }
                    self.check_verdict(s, &x);
                }
            }
            self.process_fires();
            self.closed_strata = l + 1;
        }
    }

    /// Whether shape `t`'s valid list is its complete conformance population.
    /// True once `t`'s queries are exhausted and every materialized entity
    /// reached a verdict: if `t` also carries a min constraint, a conformer
    /// necessarily surfaced in the min query, so absence from the list proves
    /// non-conformance.
    fn settled(&self, t: usize) -> bool {
        self.exhausted[t] && self.undecided[t] == 0
    }

    // --- query planning per shape -------------------------------------------

    /// Complete valid list (only for settled, min-constrained shapes) and the
    /// always-sound invalid list, for filtering against shape `t`.
    fn usable_lists(&self, t: usize) -> (Vec<Term>, Vec<Term>) {
        let min_ful = self.schema.shapes()[t].min_constraints().next().is_some();
        let valid = if self.settled(t) && min_ful {
            self.valid_lists[t].clone()
        } else {
            Vec::new()
        };
        (valid, self.invalid_lists[t].clone())
    }

    fn ref_shape_of(&self, s: usize, cidx: usize) -> usize {
        match self.cell_kinds[s][cidx] {
            CellKind::InterMin { shape, .. } | CellKind::InterMax { shape, .. } => shape,
            _ => unreachable!("cell has no shape reference"),
        }
    }

    /// Choose the neighbor variable of the min query worth filtering: the one
    /// whose shape offers the shortest usable verdict list. Ties fall to
    /// constraint declaration order. When the specialized target part already
    /// pruned on one constraint, a filter on a different neighbor prunes an
    /// independent dimension, so prefer one and fall back only when no other
    /// list is usable.
    fn pick_min_filter(
        &self,
        s: usize,
        inter_vars: &[query::InterMinVar],
        avoid: Option<usize>,
    ) -> Option<(Variable, Vec<Term>, Vec<Term>)> {
        let score_of = |iv: &query::InterMinVar| {
            let t = self.ref_shape_of(s, iv.constraint);
            let (valid, invalid) = self.usable_lists(t);
            let mut score = usize::MAX;
            if !valid.is_empty() {
                score = valid.len();
            }
            if !invalid.is_empty() {
                score = score.min(invalid.len());
            }
            score
        };
        let best_in = |skip_avoided: bool| -> Option<usize> {
            let mut best: Option<(usize, usize)> = None;
            for (i, iv) in inter_vars.iter().enumerate() {
                if skip_avoided && avoid == Some(iv.constraint) {
                    continue;
                }
                let score = score_of(iv);
                if score < best.map_or(usize::MAX, |(_, len)| len) {
                    best = Some((i, score));
                }
            }
            best.map(|(i, _)| i)
        };
        let i = best_in(true).or_else(|| best_in(false))?;
        let iv = &inter_vars[i];
        let t = self.ref_shape_of(s, iv.constraint);
        let (valid, invalid) = self.usable_lists(t);
        Some((iv.variable.clone(), valid, invalid))
    }

    /// A target-query specialization: targets with a conforming neighbor on
    /// some min-referenced path, fetched first so likely-valid entities are
    /// decided early. The plain target query still follows for totality.
    fn pick_target_specialization(&self, s: usize) -> Option<(usize, String, Vec<Term>)> {
        let shape = &self.schema.shapes()[s];
        let mut best: Option<(usize, String, Vec<Term>)> = None;
        for (i, c) in shape.min_constraints() {
            let Some(r) = &c.shape_ref else { continue };
            let t = self.schema.index_of(&r.shape).expect("validated reference");
            let min_ful = self.schema.shapes()[t].min_constraints().next().is_some();
            if !(self.settled(t) && min_ful) || self.valid_lists[t].is_empty() {
                continue;
            }
            if best
                .as_ref()
                .is_none_or(|(_, _, v)| self.valid_lists[t].len() < v.len())
            {
                best = Some((i, c.path.clone(), self.valid_lists[t].clone()));
            }
        }
        best
    }

    fn partition(&self, q: SelectQuery) -> QueryPlan {
        partition_plan(q, self.config.max_query_len, self.config.max_parts)
    }

    fn build_plans(&self, s: usize) -> Vec<(Role, QueryPlan)> {
        let shape = &self.schema.shapes()[s];
        let mut plans: Vec<(Role, QueryPlan)> = Vec::new();

        let mut specialized_min = None;
        if let Some(tq) = query::target_query(shape) {
            if self.config.rewriting {
                if let Some((cidx, path, valid)) = self.pick_target_specialization(s) {
                    let mut spec = tq.clone();
                    let v = Variable::new("f0");
                    spec.patterns.push(TriplePattern {
                        subject: spec.projection[0].clone(),
                        predicate: path,
                        object: PatternObject::Var(v.clone()),
                    });
                    // Filters must land on projected variables; the extra
                    // column is ignored at dispatch.
                    spec.projection.push(v.clone());
                    let pushed = push_instance_filter(&mut spec, &v, &valid, &[]);
                    debug_assert!(pushed.is_some(), "specialization list is non-empty");
                    plans.push((Role::TargetSpecialized, self.partition(spec)));
                    specialized_min = Some(cidx);
                }
            }
            plans.push((Role::Target { specialized_min }, self.partition(tq)));
        }

        let mut constraint_plans: Vec<(Role, QueryPlan)> = Vec::new();
        if let Some(MinQuery {
            query: mut q,
            inter_vars,
        }) = query::min_query(shape)
        {
            if self.config.rewriting {
                if let Some((variable, valid, invalid)) =
                    self.pick_min_filter(s, &inter_vars, specialized_min)
                {
                    push_instance_filter(&mut q, &variable, &valid, &invalid);
                }
            }
            let columns = inter_vars
                .iter()
                .enumerate()
                .map(|(i, iv)| (iv.constraint, i + 1))
                .collect();
            let intra_cells = shape
                .min_constraints()
                .filter(|(_, c)| !c.is_inter_shape())
                .map(|(i, _)| i)
                .collect();
            constraint_plans.push((
                Role::Min {
                    intra_cells,
                    columns,
                },
                self.partition(q),
            ));
        }
        for mq in query::max_queries(shape) {
            match mq.kind {
                MaxQueryKind::Violator(q) => {
                    constraint_plans.push((Role::MaxViolator { cell: mq.constraint }, self.partition(q)));
                }
                MaxQueryKind::ConformingPairs {
                    query: mut q,
                    variable,
                } => {
                    if self.config.rewriting {
                        let t = self.ref_shape_of(s, mq.constraint);
                        let (valid, invalid) = self.usable_lists(t);
                        push_instance_filter(&mut q, &variable, &valid, &invalid);
                    }
                    constraint_plans.push((Role::MaxPairs { cell: mq.constraint }, self.partition(q)));
                }
                MaxQueryKind::TriviallySatisfied => {}
            }
        }
        // Most selective constraint queries first; targets always lead so
        // targethood is known before verdicts land.
        constraint_plans.sort_by_key(|(_, plan)| selectivity_rank(&plan.parts[0]));
        plans.extend(constraint_plans);
        plans
    }

    // --- execution -----------------------------------------------------------

    fn evaluate_shape(&mut self, s: usize) -> Result<(), ValidationError> {
        self.spec_hits.clear();
        let plans = self.build_plans(s);
        for (role, plan) in plans {
            for part in plan.parts {
                self.run_part(s, &role, part)?;
            }
        }
        self.exhausted[s] = true;
        self.apply_absence(s);
        self.process_fires();
        self.try_close();
        Ok(())
    }

    fn run_part(
        &mut self,
        s: usize,
        role: &Role,
        part: SelectQuery,
    ) -> Result<(), ValidationError> {
        if !self.config.paging {
            let rows = self.select(&part)?;
            self.dispatch(s, role, &rows);
            self.process_fires();
            return Ok(());
        }
        let page = self.config.page_size.min(self.source.page_cap()).max(1);
        let mut offset = 0u64;
        loop {
            let q = part.with_page(page, offset);
            let rows = self.select(&q)?;
            let n = rows.len() as u64;
            self.dispatch(s, role, &rows);
            self.process_fires();
            offset += n;
            if n < page {
                return Ok(());
            }
        }
    }

    fn select(&mut self, q: &SelectQuery) -> Result<Vec<Vec<Term>>, ValidationError> {
        self.requests += 1;
        let rows = self.source.select(q)?;
        // Hidden diagnostic: dump the full query stream when asked.
        if std::env::var_os("SHACLTRAV_DEBUG_QUERIES").is_some() {
            eprintln!("[{} rows] {}", rows.len(), q.serialize());
        }
        self.answers += rows.len() as u64;
        Ok(rows)
    }

    fn dispatch(&mut self, s: usize, role: &Role, rows: &[Vec<Term>]) {
        match role {
            Role::TargetSpecialized => {
                for row in rows {
                    self.mark_target(s, &row[0]);
                    self.spec_hits.insert(row[0].clone());
                }
            }
            Role::Target { specialized_min } => {
                for row in rows {
                    let x = &row[0];
                    self.mark_target(s, x);
                    // The specialized part ran to completion first and its
                    // reference shape's valid list is final, so a target it
                    // skipped has no conforming neighbor on that path: the
                    // min cell fails on retrieval and the entity grounds
                    // nothing further.
                    if let Some(cidx) = *specialized_min {
                        if !self.spec_hits.contains(x) {
                            self.set_cell(s, x, cidx, false);
                        }
                    }
                }
            }
            Role::Min {
                intra_cells,
                columns,
            } => {
                for row in rows {
                    let x = &row[0];
                    self.ensure_state(s, x);
                    if self.states[s].get(x).expect("ensured").verdict.is_some() {
                        continue;
                    }
                    for &cidx in intra_cells {
                        let pending = matches!(
                            self.states[s].get(x).expect("ensured").cells[cidx],
                            Cell::PendingRows
                        );
                        if pending {
                            self.rules_grounded += 1;
                            self.set_cell(s, x, cidx, true);
                        }
                    }
                    for &(cidx, col) in columns {
                        self.add_candidate(s, x, cidx, row[col].clone());
                    }
                }
            }
            Role::MaxViolator { cell } => {
                for row in rows {
                    let x = &row[0];
                    self.ensure_state(s, x);
                    let st = self.states[s].get(x).expect("ensured");
                    let pending =
                        st.verdict.is_none() && matches!(st.cells[*cell], Cell::PendingRows);
                    if pending {
                        self.rules_grounded += 1;
                        self.set_cell(s, x, *cell, false);
                    }
                }
            }
            Role::MaxPairs { cell } => {
                for row in rows {
                    let x = &row[0];
                    self.ensure_state(s, x);
                    self.add_candidate(s, x, *cell, row[1].clone());
                }
            }
        }
    }

    fn into_report(self, order: &[usize], seed: Option<String>) -> ValidationReport {
        let shapes = self
            .schema
            .shapes()
            .iter()
            .enumerate()
            .map(|(s, shape)| {
                let target_only = |list: &[Term]| {
                    list.iter()
                        .filter(|x| self.states[s].get(*x).is_some_and(|st| st.is_target))
                        .cloned()
                        .collect::<Vec<_>>()
                };
                ShapeReport {
                    shape: shape.name.clone(),
                    valid: target_only(&self.valid_lists[s]),
                    invalid: target_only(&self.invalid_lists[s]),
                }
            })
            .collect();
        let stats = EngineStats {
            requests: self.requests,
            answers: self.answers,
            rules_grounded: self.rules_grounded,
            targets_total: self.targets_total,
            targets_decided: self.targets_decided,
            traversal: order
                .iter()
                .map(|&i| self.schema.shapes()[i].name.clone())
                .collect(),
            seed,
        };
        ValidationReport {
            shapes,
            trace: self.trace,
            stats,
            validation_time: self.start.elapsed(),
        }
    }
}

/// Shared decision rule for neighbor-counting cells. `candidates_complete`
/// is true once the query feeding the cell is exhausted, making the
/// pending set an upper bound on what can still conform.
fn counting_decision(
    is_min: bool,
    count: u32,
    satisfied: u32,
    pending: usize,
    candidates_complete: bool,
) -> Option<bool> {
    if is_min {
        if satisfied >= count {
            Some(true)
        } else if candidates_complete && (satisfied as usize) + pending < count as usize {
            Some(false)
        } else {
            None
        }
    } else if satisfied > count {
        Some(false)
    } else if candidates_complete && pending == 0 {
        Some(true)
    } else {
        None
    }
}
