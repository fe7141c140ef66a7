//! Optimal planning: earliest finish times, minimum-(makespan, cost) plan
//! extraction, second-best plans for preference pairs, and a brute-force
//! oracle for cross-checking.
//!
//! Makespan is handled exactly everywhere: the earliest finish time of the
//! target is a hard floor, and extraction never schedules anything past it.
//! Cost is the subtle part. Picking the cheapest rule set among all
//! minimum-makespan plans is a Steiner-flavoured problem, so below
//! [`DEFAULT_EXACT_THRESHOLD`] rules we run branch-and-bound seeded by a
//! greedy solution, and above it we keep the greedy answer and document the
//! cost as heuristic.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::graph::{NodeId, Rule, TaskGraph};
use crate::plan::{compare_plans, Plan, PlanScore, SubPlan};
use crate::schedule::simulate;

/// Largest rule count for which `optimal_plan` guarantees exact minimal cost.
pub const DEFAULT_EXACT_THRESHOLD: usize = 24;

/// Hard cap on rules for the exhaustive oracle (2^n subsets).
pub const MAX_BRUTE_RULES: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("target {0} is not reachable from the initial sources")]
    UnreachableTarget(NodeId),
    #[error("graph has {0} rules, brute force handles at most {MAX_BRUTE_RULES}")]
    TooLarge(usize),
}

/// Earliest finish time per node: 0 for initial sources, and for every other
/// node the cheapest-to-finish rule's `max(eft(sources)) + time`, minimized
/// over its producing rules. Nodes absent from the table cannot be produced
/// from the initial sources at all.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EftTable {
    times: BTreeMap<NodeId, u64>,
}

impl EftTable {
    /// Earliest finish of `node`, or `None` if it is unreachable.
    pub fn finish(&self, node: NodeId) -> Option<u64> {
        self.times.get(&node).copied()
    }

    /// All reachable nodes with their finish times.
    pub fn reachable(&self) -> &BTreeMap<NodeId, u64> {
        &self.times
    }
}

/// Dynamic program over the precedence DAG in topological order.
pub fn earliest_finish_times(graph: &TaskGraph) -> EftTable {
    let order = graph
        .topo_order()
        .expect("solver requires an acyclic precedence relation");
    let producers = graph.rules_by_target();
    let initial = graph.initial_set();
    let mut times: BTreeMap<NodeId, u64> = initial.iter().map(|&s| (s, 0)).collect();
    for node in order {
        if initial.contains(&node) {
            continue;
        }
        let Some(rules) = producers.get(&node) else { continue };
        let mut best: Option<u64> = None;
        for &ri in rules {
            let rule = &graph.rules[ri];
            let ready = rule
                .source
                .iter()
                .try_fold(0u64, |acc, s| times.get(s).map(|&t| acc.max(t)));
            if let Some(ready) = ready {
                let end = ready + rule.time;
                best = Some(best.map_or(end, |b| b.min(end)));
            }
        }
        if let Some(b) = best {
            times.insert(node, b);
        }
    }
    EftTable { times }
}

/// A concrete plan together with its exact score and the rule ids it uses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub plan: Plan,
    pub score: PlanScore,
    pub rule_ids: BTreeSet<u32>,
}

/// Precomputed per-graph lookups shared by all solving passes.
struct Ctx<'g> {
    graph: &'g TaskGraph,
    order: Vec<NodeId>,
    pos: BTreeMap<NodeId, usize>,
    initial: BTreeSet<NodeId>,
    producers: BTreeMap<NodeId, Vec<usize>>,
    eft: EftTable,
}

impl<'g> Ctx<'g> {
    fn new(graph: &'g TaskGraph) -> Ctx<'g> {
        let order = graph
            .topo_order()
            .expect("solver requires an acyclic precedence relation");
        let pos = order.iter().enumerate().map(|(i, &n)| (n, i)).collect();
        Ctx {
            graph,
            pos,
            order,
            initial: graph.initial_set(),
            producers: graph.rules_by_target(),
            eft: earliest_finish_times(graph),
        }
    }

    fn producers_of(&self, node: NodeId) -> &[usize] {
        self.producers.get(&node).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Earliest possible finish of one rule, `None` if a source is unreachable.
    fn rule_end(&self, rule: &Rule) -> Option<u64> {
        let ready = rule
            .source
            .iter()
            .try_fold(0u64, |acc, s| self.eft.finish(*s).map(|t| acc.max(t)))?;
        Some(ready + rule.time)
    }
}

/// A scored rule set during search. Equal-score plans are ordered by their
/// sorted finish times (earlier-finishing schedules win) and finally by the
/// sorted rule-id set, making every solver answer deterministic.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Candidate {
    score: PlanScore,
    ends: Vec<u64>,
    ids: Vec<u32>,
}

/// Run the rule set forward in topological order of the produced node.
///
/// A node counts as available at the max finish time over all its producers
/// in the set, matching how the simulator treats a plan whose dependencies
/// name every producer. Returns `None` when some rule cannot execute or the
/// target is never produced.
fn evaluate_rule_set(ctx: &Ctx, sorted_indices: &[usize]) -> Option<Candidate> {
    let mut produced: BTreeMap<NodeId, u64> = BTreeMap::new();
    let mut ends = Vec::with_capacity(sorted_indices.len());
    let mut ids = Vec::with_capacity(sorted_indices.len());
    let mut cost = 0u64;
    for &ri in sorted_indices {
        let rule = &ctx.graph.rules[ri];
        let mut ready = 0u64;
        for s in &rule.source {
            if ctx.initial.contains(s) {
                continue;
            }
            ready = ready.max(*produced.get(s)?);
        }
        let end = ready + rule.time;
        ends.push(end);
        ids.push(rule.id);
        produced
            .entry(rule.target)
            .and_modify(|e| *e = (*e).max(end))
            .or_insert(end);
        cost += rule.cost;
    }
    if !produced.contains_key(&ctx.graph.target) {
        return None;
    }
    let makespan = ends.iter().copied().max().unwrap_or(0);
    ends.sort_unstable();
    ids.sort_unstable();
    Some(Candidate {
        score: PlanScore { makespan, cost },
        ends,
        ids,
    })
}

/// Sort rule indices so producers always precede consumers.
fn topo_sort_indices(ctx: &Ctx, indices: &mut [usize]) {
    indices.sort_by_key(|&ri| {
        let rule = &ctx.graph.rules[ri];
        (ctx.pos[&rule.target], rule.id)
    });
}

/// Static admissibility under a backward latest-finish bound.
///
/// With LFT(target) = eft(target), a rule (S, t, tau) can appear in some
/// minimum-makespan plan only if max(eft(S)) + tau <= LFT(t), and each source
/// then inherits LFT(s) >= LFT(t) - tau. Sweeping nodes in reverse topological
/// order makes every bound final before it is read.
fn admissible_rules(ctx: &Ctx, tstar: u64) -> Vec<bool> {
    let mut lft: BTreeMap<NodeId, u64> = BTreeMap::new();
    let mut admissible = vec![false; ctx.graph.rules.len()];
    for &node in ctx.order.iter().rev() {
        let bound = if node == ctx.graph.target {
            tstar
        } else {
            match lft.get(&node) {
                Some(&b) => b,
                None => continue,
            }
        };
        for &ri in ctx.producers_of(node) {
            let rule = &ctx.graph.rules[ri];
            let Some(end) = ctx.rule_end(rule) else { continue };
            if end > bound {
                continue;
            }
            admissible[ri] = true;
            let slack = bound - rule.time;
            for &s in &rule.source {
                lft.entry(s)
                    .and_modify(|v| *v = (*v).max(slack))
                    .or_insert(slack);
            }
        }
    }
    admissible
}

/// For every reachable node, the rule ids of one certificate chain that
/// achieves its earliest finish time (ties to the lowest rule id). Used as a
/// closure-size estimate by the greedy extraction.
fn certificate_closures(ctx: &Ctx) -> BTreeMap<NodeId, BTreeSet<u32>> {
    let mut closure: BTreeMap<NodeId, BTreeSet<u32>> =
        ctx.initial.iter().map(|&s| (s, BTreeSet::new())).collect();
    for &node in &ctx.order {
        if ctx.initial.contains(&node) {
            continue;
        }
        let mut best: Option<(u64, u32, usize)> = None;
        for &ri in ctx.producers_of(node) {
            let rule = &ctx.graph.rules[ri];
            if let Some(end) = ctx.rule_end(rule) {
                let key = (end, rule.id, ri);
                if best.map_or(true, |b| key < b) {
                    best = Some(key);
                }
            }
        }
        let Some((_, _, ri)) = best else { continue };
        let rule = &ctx.graph.rules[ri];
        let mut set: BTreeSet<u32> = [rule.id].into();
        for s in &rule.source {
            set.extend(closure[s].iter().copied());
        }
        closure.insert(node, set);
    }
    closure
}

/// Producing rules for `node` that are statically admissible and also finish
/// by the node's dynamic deadline, as (finish, index) pairs.
fn feasible_producers(
    ctx: &Ctx,
    admissible: &[bool],
    node: NodeId,
    deadline: u64,
) -> Vec<(u64, usize)> {
    let mut out = Vec::new();
    for &ri in ctx.producers_of(node) {
        if !admissible[ri] {
            continue;
        }
        let Some(end) = ctx.rule_end(&ctx.graph.rules[ri]) else { continue };
        if end <= deadline {
            out.push((end, ri));
        }
    }
    out
}

/// Open-node bookkeeping shared by the greedy pass and branch-and-bound.
///
/// Nodes are resolved highest topological position first, so when a node is
/// popped every consumer that could tighten its deadline has already been
/// handled and the deadline is final. Deadlines never drop below the node's
/// earliest finish time (each chosen rule satisfied its own filter), so the
/// certificate rule is always feasible and extraction cannot dead-end.
#[derive(Debug, Clone)]
struct Frontier {
    open: BTreeSet<(usize, NodeId)>,
    deadlines: BTreeMap<NodeId, u64>,
    closed: BTreeSet<NodeId>,
    chosen: Vec<usize>,
    cost: u64,
}

impl Frontier {
    fn start(ctx: &Ctx, tstar: u64) -> Frontier {
        let target = ctx.graph.target;
        Frontier {
            open: [(ctx.pos[&target], target)].into(),
            deadlines: [(target, tstar)].into(),
            closed: BTreeSet::new(),
            chosen: Vec::new(),
            cost: 0,
        }
    }

    /// Record `ri` as the producer of the node currently being resolved
    /// (whose deadline is `deadline`) and open its sources.
    fn apply(&mut self, ctx: &Ctx, ri: usize, deadline: u64) {
        let rule = &ctx.graph.rules[ri];
        self.chosen.push(ri);
        self.cost += rule.cost;
        let slack = deadline - rule.time;
        for &s in &rule.source {
            self.deadlines
                .entry(s)
                .and_modify(|v| *v = (*v).min(slack))
                .or_insert(slack);
            if !self.closed.contains(&s) {
                self.open.insert((ctx.pos[&s], s));
            }
        }
    }
}

/// One pass of deadline-driven extraction. For each needed node, prefer the
/// earliest-finishing feasible rule, then the one adding the fewest new rules
/// (estimated via certificate closures), then the lowest id.
fn greedy_extract(
    ctx: &Ctx,
    admissible: &[bool],
    certs: &BTreeMap<NodeId, BTreeSet<u32>>,
    tstar: u64,
) -> Vec<usize> {
    let mut frontier = Frontier::start(ctx, tstar);
    let mut chosen_ids: BTreeSet<u32> = BTreeSet::new();
    while let Some((_, node)) = frontier.open.pop_last() {
        frontier.closed.insert(node);
        if ctx.initial.contains(&node) {
            continue;
        }
        let deadline = frontier.deadlines[&node];
        let mut best: Option<((u64, usize, u32), usize)> = None;
        for (end, ri) in feasible_producers(ctx, admissible, node, deadline) {
            let rule = &ctx.graph.rules[ri];
            let mut added: BTreeSet<u32> = [rule.id].into();
            for s in &rule.source {
                if let Some(chain) = certs.get(s) {
                    added.extend(chain.iter().copied());
                }
            }
            let growth = added.difference(&chosen_ids).count();
            let key = (end, growth, rule.id);
            if best.map_or(true, |(k, _)| key < k) {
                best = Some((key, ri));
            }
        }
        let (_, ri) = best.expect("deadlines never exclude the certificate rule");
        chosen_ids.insert(ctx.graph.rules[ri].id);
        frontier.apply(ctx, ri, deadline);
    }
    frontier.chosen
}

/// Exhaustive branch-and-bound over producers per needed node, pruned by a
/// per-node minimum-cost lower bound. Every completed selection has makespan
/// exactly `tstar`, so only cost is bounded. Ties with the incumbent are kept
/// alive (strict pruning) so the candidate ordering can settle them.
fn branch_and_bound(
    ctx: &Ctx,
    admissible: &[bool],
    min_cost: &BTreeMap<NodeId, u64>,
    mut frontier: Frontier,
    best: &mut Candidate,
) {
    loop {
        let Some((_, node)) = frontier.open.pop_last() else {
            let mut indices = frontier.chosen;
            topo_sort_indices(ctx, &mut indices);
            let cand = evaluate_rule_set(ctx, &indices)
                .expect("completed selections always reach the target");
            debug_assert_eq!(cand.score.makespan, best.score.makespan);
            if cand < *best {
                *best = cand;
            }
            return;
        };
        frontier.closed.insert(node);
        if ctx.initial.contains(&node) {
            continue;
        }
        let deadline = frontier.deadlines[&node];
        let mut producers = feasible_producers(ctx, admissible, node, deadline);
        producers.sort_by_key(|&(_, ri)| ctx.graph.rules[ri].id);
        for (_, ri) in producers {
            let mut child = frontier.clone();
            child.apply(ctx, ri, deadline);
            let bound: u64 = child
                .open
                .iter()
                .filter(|(_, n)| !ctx.initial.contains(n))
                .map(|(_, n)| min_cost.get(n).copied().unwrap_or(0))
                .sum();
            if child.cost + bound > best.score.cost {
                continue;
            }
            branch_and_bound(ctx, admissible, min_cost, child, best);
        }
        return;
    }
}

/// Turn a chosen rule set into named sub-plans. Sub-plans appear in
/// dependency-respecting order (topological position of the produced node,
/// then rule id) and are named "Subtask1", "Subtask2", ... in that order. A
/// sub-plan depends on exactly the chosen sub-plans producing its sources.
fn emit_plan(ctx: &Ctx, sorted_indices: &[usize]) -> Plan {
    let names: Vec<String> = (1..=sorted_indices.len())
        .map(|i| format!("Subtask{i}"))
        .collect();
    let subtasks = sorted_indices
        .iter()
        .enumerate()
        .map(|(i, &ri)| {
            let rule = &ctx.graph.rules[ri];
            let sources = rule.source_set();
            let dependencies = sorted_indices
                .iter()
                .enumerate()
                .filter(|&(_, &rj)| sources.contains(&ctx.graph.rules[rj].target))
                .map(|(j, _)| names[j].clone())
                .collect();
            SubPlan {
                name: names[i].clone(),
                source: rule.source.clone(),
                target: rule.target,
                dependencies,
            }
        })
        .collect();
    Plan::new(subtasks)
}

fn emit_solution(ctx: &Ctx, cand: Candidate) -> Solution {
    let index_of: BTreeMap<u32, usize> = ctx
        .graph
        .rules
        .iter()
        .enumerate()
        .map(|(i, r)| (r.id, i))
        .collect();
    let mut indices: Vec<usize> = cand.ids.iter().map(|id| index_of[id]).collect();
    topo_sort_indices(ctx, &mut indices);
    let plan = emit_plan(ctx, &indices);
    let sched = simulate(ctx.graph, &plan).expect("solver plans are structurally sound");
    debug_assert_eq!(sched.score(), cand.score);
    Solution {
        plan,
        score: sched.score(),
        rule_ids: cand.ids.into_iter().collect(),
    }
}

/// Minimum-makespan plan with minimized total cost.
///
/// The makespan always equals the target's earliest finish time. Cost is
/// exactly minimal when the graph has at most [`DEFAULT_EXACT_THRESHOLD`]
/// rules, heuristically minimized above that.
pub fn optimal_plan(graph: &TaskGraph) -> Result<Solution, SolveError> {
    optimal_plan_with_threshold(graph, DEFAULT_EXACT_THRESHOLD)
}

/// [`optimal_plan`] with an explicit exact-search cutoff (rule count).
pub fn optimal_plan_with_threshold(
    graph: &TaskGraph,
    exact_threshold: usize,
) -> Result<Solution, SolveError> {
    let ctx = Ctx::new(graph);
    let Some(tstar) = ctx.eft.finish(graph.target) else {
        return Err(SolveError::UnreachableTarget(graph.target));
    };
    let admissible = admissible_rules(&ctx, tstar);
    let certs = certificate_closures(&ctx);
    let mut indices = greedy_extract(&ctx, &admissible, &certs, tstar);
    topo_sort_indices(&ctx, &mut indices);
    let mut best =
        evaluate_rule_set(&ctx, &indices).expect("greedy extraction always reaches the target");
    debug_assert_eq!(best.score.makespan, tstar);
    if graph.rules.len() <= exact_threshold {
        let mut min_cost: BTreeMap<NodeId, u64> = BTreeMap::new();
        for (ri, rule) in graph.rules.iter().enumerate() {
            if admissible[ri] {
                min_cost
                    .entry(rule.target)
                    .and_modify(|c| *c = (*c).min(rule.cost))
                    .or_insert(rule.cost);
            }
        }
        branch_and_bound(
            &ctx,
            &admissible,
            &min_cost,
            Frontier::start(&ctx, tstar),
            &mut best,
        );
    }
    Ok(emit_solution(&ctx, best))
}

/// Best alternative plan: re-solve with each rule of the optimal plan
/// individually forbidden and keep the best outcome under `compare_plans`
/// (ties by rule-id set). Candidates are minimal by construction. Returns
/// `None` when no deviation admits any valid plan.
pub fn second_best_plan(graph: &TaskGraph, opt: &Solution) -> Option<Solution> {
    second_best_plan_with_threshold(graph, opt, DEFAULT_EXACT_THRESHOLD)
}

/// [`second_best_plan`] with an explicit exact-search cutoff.
pub fn second_best_plan_with_threshold(
    graph: &TaskGraph,
    opt: &Solution,
    exact_threshold: usize,
) -> Option<Solution> {
    let mut best: Option<Solution> = None;
    for &forbidden in &opt.rule_ids {
        let filtered = TaskGraph {
            rules: graph
                .rules
                .iter()
                .filter(|r| r.id != forbidden)
                .cloned()
                .collect(),
            initial_source: graph.initial_source.clone(),
            target: graph.target,
        };
        let Ok(sol) = optimal_plan_with_threshold(&filtered, exact_threshold) else {
            continue;
        };
        if sol.rule_ids == opt.rule_ids {
            continue;
        }
        // In greedy mode a deviation could in principle come out cheaper than
        // the heuristic optimum; such candidates are not "second best".
        if compare_plans(sol.score, opt.score) == Ordering::Less {
            continue;
        }
        best = Some(match best {
            None => sol,
            Some(b) => match compare_plans(sol.score, b.score)
                .then_with(|| sol.rule_ids.cmp(&b.rule_ids))
            {
                Ordering::Less => sol,
                _ => b,
            },
        });
    }
    best
}

/// Enumerate every rule subset, keep those forming a valid plan that reaches
/// the target, and return the minimum under the same ordering the solver
/// uses. Exponential; guarded at [`MAX_BRUTE_RULES`] rules.
pub fn brute_force_solve(graph: &TaskGraph) -> Result<Solution, SolveError> {
    let count = graph.rules.len();
    if count > MAX_BRUTE_RULES {
        return Err(SolveError::TooLarge(count));
    }
    let ctx = Ctx::new(graph);
    let mut sorted: Vec<usize> = (0..count).collect();
    topo_sort_indices(&ctx, &mut sorted);

    // Flattened per-rule tables indexed by topological node position, so the
    // subset loop never touches a map.
    let node_count = ctx.order.len();
    let initial: Vec<bool> = ctx
        .order
        .iter()
        .map(|n| ctx.initial.contains(n))
        .collect();
    let src_pos: Vec<Vec<usize>> = sorted
        .iter()
        .map(|&ri| ctx.graph.rules[ri].source.iter().map(|s| ctx.pos[s]).collect())
        .collect();
    let tgt_pos: Vec<usize> = sorted
        .iter()
        .map(|&ri| ctx.pos[&ctx.graph.rules[ri].target])
        .collect();
    let times: Vec<u64> = sorted.iter().map(|&ri| ctx.graph.rules[ri].time).collect();
    let costs: Vec<u64> = sorted.iter().map(|&ri| ctx.graph.rules[ri].cost).collect();
    let target_pos = ctx.pos[&graph.target];

    const UNPRODUCED: u64 = u64::MAX;
    let mut produced = vec![UNPRODUCED; node_count];
    let mut ends: Vec<u64> = Vec::with_capacity(count);
    let mut best: Option<Candidate> = None;
    'mask: for mask in 1u64..(1u64 << count) {
        produced.fill(UNPRODUCED);
        ends.clear();
        let mut cost = 0u64;
        for k in 0..count {
            if mask & (1 << k) == 0 {
                continue;
            }
            let mut ready = 0u64;
            for &sp in &src_pos[k] {
                if initial[sp] {
                    continue;
                }
                if produced[sp] == UNPRODUCED {
                    continue 'mask;
                }
                ready = ready.max(produced[sp]);
            }
            let end = ready + times[k];
            ends.push(end);
            cost += costs[k];
            let t = tgt_pos[k];
            produced[t] = if produced[t] == UNPRODUCED { end } else { produced[t].max(end) };
        }
        if produced[target_pos] == UNPRODUCED {
            continue;
        }
        let makespan = ends.iter().copied().max().unwrap_or(0);
        let score = PlanScore { makespan, cost };
        // Cheap pre-check before building the full candidate.
        if let Some(b) = &best {
            if score > b.score {
                continue;
            }
        }
        let mut sorted_ends = ends.clone();
        sorted_ends.sort_unstable();
        let mut ids: Vec<u32> = (0..count)
            .filter(|k| mask & (1 << k) != 0)
            .map(|k| ctx.graph.rules[sorted[k]].id)
            .collect();
        ids.sort_unstable();
        let cand = Candidate { score, ends: sorted_ends, ids };
        if best.as_ref().map_or(true, |b| cand < *b) {
            best = Some(cand);
        }
    }
    match best {
        Some(cand) => Ok(emit_solution(&ctx, cand)),
        None => Err(SolveError::UnreachableTarget(graph.target)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{example_graph, example_optimal_plan, n, query_graph, rule};

    fn eft_map(graph: &TaskGraph) -> BTreeMap<u32, u64> {
        earliest_finish_times(graph)
            .reachable()
            .iter()
            .map(|(k, &v)| (k.number(), v))
            .collect()
    }

    #[test]
    fn eft_example_graph() {
        let expect: BTreeMap<u32, u64> =
            [(1, 0), (6, 0), (2, 3), (3, 4), (4, 6), (5, 7)].into();
        assert_eq!(eft_map(&example_graph()), expect);
    }

    #[test]
    fn eft_query_graph() {
        let expect: BTreeMap<u32, u64> = [
            (1, 0),
            (3, 0),
            (7, 0),
            (2, 3),
            (4, 3),
            (5, 7),
            (6, 9),
            (8, 4),
            (9, 11),
        ]
        .into();
        assert_eq!(eft_map(&query_graph()), expect);
    }

    #[test]
    fn eft_marks_unreachable_nodes() {
        // N3 has no producer and is not initial, so N3 and N4 are unreachable.
        let graph = TaskGraph {
            rules: vec![rule(0, &[1], 2, 1), rule(1, &[2, 3], 4, 1)],
            initial_source: vec![n(1)],
            target: n(4),
        };
        let eft = earliest_finish_times(&graph);
        assert_eq!(eft.finish(n(2)), Some(1));
        assert_eq!(eft.finish(n(3)), None);
        assert_eq!(eft.finish(n(4)), None);
        assert_eq!(
            optimal_plan(&graph),
            Err(SolveError::UnreachableTarget(n(4)))
        );
    }

    #[test]
    fn optimal_example_graph_matches_published_plan() {
        let sol = optimal_plan(&example_graph()).unwrap();
        assert_eq!(sol.score, PlanScore { makespan: 7, cost: 4 });
        assert_eq!(sol.rule_ids, [0, 1, 2, 3].into());
        assert_eq!(sol.plan, example_optimal_plan());
    }

    #[test]
    fn optimal_query_graph() {
        let sol = optimal_plan(&query_graph()).unwrap();
        assert_eq!(sol.score, PlanScore { makespan: 11, cost: 6 });
        // Among the two cost-6 optima the N4->N8 branch finishes earlier than
        // the N7->N8 one, so it wins the tie.
        assert_eq!(sol.rule_ids, [0, 1, 2, 3, 6, 7].into());
    }

    #[test]
    fn greedy_matches_exact_on_the_worked_examples() {
        for graph in [example_graph(), query_graph()] {
            let exact = optimal_plan(&graph).unwrap();
            let greedy = optimal_plan_with_threshold(&graph, 0).unwrap();
            assert_eq!(exact.plan, greedy.plan);
        }
    }

    #[test]
    fn optimal_single_rule_graph() {
        let graph = TaskGraph {
            rules: vec![rule(0, &[1], 2, 5)],
            initial_source: vec![n(1)],
            target: n(2),
        };
        let sol = optimal_plan(&graph).unwrap();
        assert_eq!(sol.score, PlanScore { makespan: 5, cost: 1 });
        assert_eq!(sol.plan.len(), 1);
        assert_eq!(sol.plan.subtask("Subtask1").unwrap().target, n(2));
    }

    #[test]
    fn second_best_example_graph() {
        let graph = example_graph();
        let opt = optimal_plan(&graph).unwrap();
        let second = second_best_plan(&graph, &opt).unwrap();
        assert_eq!(second.score, PlanScore { makespan: 8, cost: 2 });
        assert_eq!(second.rule_ids, [0, 4].into());
        let names: Vec<&str> = second.plan.iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names, ["Subtask1", "Subtask2"]);
    }

    #[test]
    fn second_best_query_graph_ties_on_score() {
        let graph = query_graph();
        let opt = optimal_plan(&graph).unwrap();
        let second = second_best_plan(&graph, &opt).unwrap();
        // Forbidding rule 6 swaps in the N7->N8 branch at the same score.
        assert_eq!(second.score, opt.score);
        assert_eq!(second.rule_ids, [0, 1, 2, 3, 5, 7].into());
    }

    #[test]
    fn second_best_none_without_alternatives() {
        let graph = TaskGraph {
            rules: vec![rule(0, &[1], 2, 5)],
            initial_source: vec![n(1)],
            target: n(2),
        };
        let opt = optimal_plan(&graph).unwrap();
        assert_eq!(second_best_plan(&graph, &opt), None);
    }

    #[test]
    fn brute_force_example_graph() {
        let sol = brute_force_solve(&example_graph()).unwrap();
        assert_eq!(sol.score, PlanScore { makespan: 7, cost: 4 });
        assert_eq!(sol.rule_ids, [0, 1, 2, 3].into());
    }

    #[test]
    fn brute_force_query_graph_agrees_with_solver() {
        let brute = brute_force_solve(&query_graph()).unwrap();
        let sol = optimal_plan(&query_graph()).unwrap();
        assert_eq!(brute.score, sol.score);
        assert_eq!(brute.rule_ids, sol.rule_ids);
    }

    #[test]
    fn brute_force_guards_rule_count() {
        let graph = TaskGraph {
            rules: (0..21).map(|i| rule(i, &[1], 2, 1)).collect(),
            initial_source: vec![n(1)],
            target: n(2),
        };
        assert_eq!(brute_force_solve(&graph), Err(SolveError::TooLarge(21)));
    }

    #[test]
    fn solver_agrees_with_brute_force_on_random_graphs() {
        use crate::generate::{build_task_graph, EdgeRelation, GenConfig, Structure};
        let mut checked = 0;
        for seed in 0..60u64 {
            for n in 4..=8u32 {
                for (structure, relation) in [
                    (Structure::Random, EdgeRelation::Uniform),
                    (Structure::TreeBased, EdgeRelation::Linear),
                ] {
                    let cfg = GenConfig::new(n, structure, relation, seed.wrapping_mul(31) + n as u64);
                    let graph = build_task_graph(&cfg).unwrap();
                    if graph.rules.len() > 14 {
                        continue;
                    }
                    let sol = optimal_plan(&graph).unwrap();
                    let brute = brute_force_solve(&graph).unwrap();
                    assert_eq!(sol.score, brute.score, "seed {seed} n {n}");
                    assert_eq!(sol.rule_ids, brute.rule_ids, "seed {seed} n {n}");
                    checked += 1;
                }
            }
        }
        assert!(checked >= 100, "only {checked} graphs were small enough");
    }

    #[test]
    fn solver_plans_simulate_to_their_score() {
        use crate::generate::{build_task_graph, EdgeRelation, GenConfig, Structure};
        for seed in 0..20u64 {
            let cfg = GenConfig::new(12, Structure::Random, EdgeRelation::Linear, seed);
            let graph = build_task_graph(&cfg).unwrap();
            let sol = optimal_plan(&graph).unwrap();
            let sched = simulate(&graph, &sol.plan).unwrap();
            assert_eq!(sched.score(), sol.score);
            assert_eq!(
                sched.makespan,
                earliest_finish_times(&graph).finish(graph.target).unwrap()
            );
        }
    }

    #[test]
    fn second_best_never_beats_optimal() {
        use crate::generate::{build_task_graph, EdgeRelation, GenConfig, Structure};
        let mut found = 0;
        for seed in 0..30u64 {
            let cfg = GenConfig::new(8, Structure::Random, EdgeRelation::Uniform, seed);
            let graph = build_task_graph(&cfg).unwrap();
            let opt = optimal_plan(&graph).unwrap();
            if let Some(second) = second_best_plan(&graph, &opt) {
                assert_ne!(second.rule_ids, opt.rule_ids);
                assert_ne!(
                    compare_plans(second.score, opt.score),
                    Ordering::Less,
                    "seed {seed}"
                );
                simulate(&graph, &second.plan).unwrap();
                found += 1;
            }
        }
        assert!(found > 0, "no second-best plans found at all");
    }

    #[test]
    fn eft_is_monotone_under_rule_addition() {
        let mut graph = example_graph();
        let before = earliest_finish_times(&graph);
        graph.rules.push(rule(5, &[1], 4, 1));
        let after = earliest_finish_times(&graph);
        for (&node, &t) in before.reachable() {
            assert!(after.finish(node).unwrap() <= t);
        }
        // The shortcut actually helps N4 and N5.
        assert_eq!(after.finish(n(4)), Some(1));
        assert_eq!(after.finish(n(5)), Some(2));
    }
}
