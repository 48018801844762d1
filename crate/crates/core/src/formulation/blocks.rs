//! Constraint blocks. Each adds its rows to a shared model; variable and
//! row names carry bus/line ids so that models built over different
//! scenario sets or line sets can exchange assignments by name.

use super::{DesignVars, FormulationError, SaaConfig, ScenarioVars};
use crate::milp::{mccormick_expr, ConsId, LinExpr, MilpModel, Sense};
use crate::network::{FeederNetwork, PartitionGraph};
use crate::scenario::Scenario;

/// Voltage magnitude window of an energized bus, per unit.
pub const V_MIN: f64 = 0.95;
pub const V_MAX: f64 = 1.05;

pub(crate) fn edge_tag(g: &PartitionGraph, e: usize) -> String {
    let (i, j) = g.edges[e];
    format!("{}-{}", g.vertices[i], g.vertices[j])
}

/// Reference vertex of each connected component of `g`: its smallest
/// vertex. Returns `(reference_of_vertex, component_sizes)`.
pub(crate) fn references(g: &PartitionGraph) -> (Vec<usize>, Vec<usize>) {
    let comps = g.components();
    let mut refs = vec![0; g.num_vertices()];
    let mut size = vec![0; g.num_vertices()];
    for c in &comps {
        for &v in c {
            refs[v] = c[0];
            size[v] = c.len();
        }
    }
    (refs, size)
}

impl DesignVars {
    /// Registers the topology variables. Commodity flows get the tightest
    /// bounds their balance rows allow.
    pub fn add(m: &mut MilpModel, g: &PartitionGraph) -> Result<Self, FormulationError> {
        let (_, comp_size) = references(g);
        let nv = g.num_vertices();
        let gf_cap = (nv - g.grid_formers.len()) as f64;
        let mut d = DesignVars {
            b_n: Vec::with_capacity(nv),
            b_e: Vec::new(),
            theta: Vec::new(),
            f: Vec::new(),
            f_prime: Vec::new(),
        };
        for v in &g.vertices {
            d.b_n.push(m.add_binary(format!("bn[{v}]"))?);
        }
        for e in 0..g.num_edges() {
            let t = edge_tag(g, e);
            let cap = (comp_size[g.edges[e].0] - 1) as f64;
            d.b_e.push(m.add_binary(format!("be[{t}]"))?);
            d.theta.push(m.add_binary(format!("theta[{t}]"))?);
            d.f.push(m.add_continuous(format!("f[{t}]"), -cap, cap)?);
            d.f_prime.push(m.add_continuous(format!("fp[{t}]"), -gf_cap, gf_cap)?);
        }
        Ok(d)
    }
}

/// Spanning-forest selection: every non-reference vertex absorbs one unit
/// of a commodity that can only travel along `theta` edges, exactly
/// `|V| - #components` edges are selected, and energized edges lie inside
/// the selected forest.
pub fn radiality_block(m: &mut MilpModel, g: &PartitionGraph, d: &DesignVars) -> Result<Vec<ConsId>, FormulationError> {
    if g.num_vertices() == 0 {
        return Err(FormulationError::EmptyGraph);
    }
    let (refs, comp_size) = references(g);
    let mut rows = Vec::new();
    let mut inflow: Vec<LinExpr> = vec![LinExpr::new(); g.num_vertices()];
    for (e, &(i, j)) in g.edges.iter().enumerate() {
        inflow[j].add(d.f[e], 1.0);
        inflow[i].add(d.f[e], -1.0);
    }
    for (v, expr) in inflow.into_iter().enumerate() {
        if refs[v] != v {
            rows.push(m.add_expr_constraint(format!("tree_flow[{}]", g.vertices[v]), expr, Sense::Eq, 1.0)?);
        }
    }
    for e in 0..g.num_edges() {
        let t = edge_tag(g, e);
        let cap = (comp_size[g.edges[e].0] - 1) as f64;
        rows.push(m.add_constraint(format!("tree_cap_hi[{t}]"), vec![(d.f[e], 1.0), (d.theta[e], -cap)], Sense::Le, 0.0)?);
        rows.push(m.add_constraint(format!("tree_cap_lo[{t}]"), vec![(d.f[e], 1.0), (d.theta[e], cap)], Sense::Ge, 0.0)?);
        rows.push(m.add_constraint(format!("in_tree[{t}]"), vec![(d.b_e[e], 1.0), (d.theta[e], -1.0)], Sense::Le, 0.0)?);
    }
    let components = refs.iter().enumerate().filter(|(v, r)| v == *r).count();
    let count = (g.num_vertices() - components) as f64;
    rows.push(m.add_constraint("tree_size", d.theta.iter().map(|&t| (t, 1.0)).collect(), Sense::Eq, count)?);
    Ok(rows)
}

/// Every energized non-grid-forming vertex absorbs one unit of a virtual
/// commodity that only grid-forming vertices can inject and only energized
/// edges can carry.
pub fn grid_forming_block(
    m: &mut MilpModel,
    g: &PartitionGraph,
    grid_formers: &[usize],
    d: &DesignVars,
) -> Result<Vec<ConsId>, FormulationError> {
    if grid_formers.is_empty() {
        return Err(FormulationError::NoGridFormer);
    }
    let is_gf = |v: usize| grid_formers.contains(&v);
    let cap = (g.num_vertices() - grid_formers.len()) as f64;
    let mut rows = Vec::new();
    let mut inflow: Vec<LinExpr> = vec![LinExpr::new(); g.num_vertices()];
    for (e, &(i, j)) in g.edges.iter().enumerate() {
        inflow[j].add(d.f_prime[e], 1.0);
        inflow[i].add(d.f_prime[e], -1.0);
    }
    for (v, mut expr) in inflow.into_iter().enumerate() {
        if !is_gf(v) {
            expr.add(d.b_n[v], -1.0);
            rows.push(m.add_expr_constraint(format!("gf_flow[{}]", g.vertices[v]), expr, Sense::Eq, 0.0)?);
        }
    }
    for e in 0..g.num_edges() {
        let t = edge_tag(g, e);
        rows.push(m.add_constraint(format!("gf_cap_hi[{t}]"), vec![(d.f_prime[e], 1.0), (d.b_e[e], -cap)], Sense::Le, 0.0)?);
        rows.push(m.add_constraint(format!("gf_cap_lo[{t}]"), vec![(d.f_prime[e], 1.0), (d.b_e[e], cap)], Sense::Ge, 0.0)?);
    }
    Ok(rows)
}

/// An energized line needs both of its ends energized.
pub fn topology_block(m: &mut MilpModel, g: &PartitionGraph, d: &DesignVars) -> Result<Vec<ConsId>, FormulationError> {
    let mut rows = Vec::new();
    for (e, &(i, j)) in g.edges.iter().enumerate() {
        rows.push(m.add_constraint(
            format!("topo[{}]", edge_tag(g, e)),
            vec![(d.b_n[i], 1.0), (d.b_n[j], 1.0), (d.b_e[e], -2.0)],
            Sense::Ge,
            0.0,
        )?);
    }
    Ok(rows)
}

/// Valid inequalities implied by the blocks above that tighten the LP
/// relaxation: each end of an energized line is energized on its own, and an
/// energized vertex without grid-forming capability needs an energized line.
pub fn strengthening_block(m: &mut MilpModel, g: &PartitionGraph, d: &DesignVars) -> Result<Vec<ConsId>, FormulationError> {
    let mut rows = Vec::new();
    for (e, &(i, j)) in g.edges.iter().enumerate() {
        let t = edge_tag(g, e);
        for (end, v) in [("from", i), ("to", j)] {
            rows.push(m.add_constraint(format!("end_{end}[{t}]"), vec![(d.b_e[e], 1.0), (d.b_n[v], -1.0)], Sense::Le, 0.0)?);
        }
    }
    let adj = g.adjacency();
    for v in 0..g.num_vertices() {
        if g.is_grid_former(v) {
            continue;
        }
        let mut terms = vec![(d.b_n[v], 1.0)];
        terms.extend(adj[v].iter().map(|&(_, e)| (d.b_e[e], -1.0)));
        rows.push(m.add_constraint(format!("fed[{}]", g.vertices[v]), terms, Sense::Le, 0.0)?);
    }
    Ok(rows)
}

/// Linearized lossless power flow for one scenario with fixed topology
/// variables: voltage window, line limits, generation limits, nodal
/// balance and the voltage-drop relation. Load rows are added separately.
pub fn power_flow_block(
    m: &mut MilpModel,
    g: &PartitionGraph,
    net: &FeederNetwork,
    xi: &Scenario,
    d: &DesignVars,
    tag: &str,
) -> Result<ScenarioVars, FormulationError> {
    let nv = g.num_vertices();
    if xi.len() != nv || xi.gp.len() != nv || xi.gq.len() != nv || xi.dq.len() != nv {
        return Err(FormulationError::Dimension {
            expected: nv,
            got: xi.len(),
        });
    }
    let mut sv = ScenarioVars::default();
    for (v, name) in g.vertices.iter().enumerate() {
        let bus = &net.buses[g.vertex_bus[v]];
        let vv = m.add_continuous(format!("v[{tag}][{name}]"), 0.0, V_MAX)?;
        m.add_constraint(format!("vmin[{tag}][{name}]"), vec![(vv, 1.0), (d.b_n[v], -V_MIN)], Sense::Ge, 0.0)?;
        m.add_constraint(format!("vmax[{tag}][{name}]"), vec![(vv, 1.0), (d.b_n[v], -V_MAX)], Sense::Le, 0.0)?;

        let pg = m.add_continuous(format!("pg[{tag}][{name}]"), 0.0, xi.gp[v])?;
        if xi.gp[v] > 0.0 {
            m.add_constraint(format!("pgmax[{tag}][{name}]"), vec![(pg, 1.0), (d.b_n[v], -xi.gp[v])], Sense::Le, 0.0)?;
        }
        let qg = m.add_continuous(format!("qg[{tag}][{name}]"), -bus.qmin, xi.gq[v])?;
        if xi.gq[v] > 0.0 {
            m.add_constraint(format!("qgmax[{tag}][{name}]"), vec![(qg, 1.0), (d.b_n[v], -xi.gq[v])], Sense::Le, 0.0)?;
        }
        if bus.qmin > 0.0 {
            m.add_constraint(format!("qgmin[{tag}][{name}]"), vec![(qg, 1.0), (d.b_n[v], bus.qmin)], Sense::Ge, 0.0)?;
        }
        let pd = m.add_continuous(format!("pd[{tag}][{name}]"), 0.0, xi.dp[v])?;
        let qd = m.add_continuous(format!("qd[{tag}][{name}]"), 0.0, xi.dq[v])?;
        sv.v.push(vv);
        sv.p_g.push(pg);
        sv.q_g.push(qg);
        sv.p_d.push(pd);
        sv.q_d.push(qd);
    }
    // Energized lines form a forest and the flow model is lossless, so a line
    // carries at most the smaller of what the scenario can generate and what
    // it can absorb.
    let p_cap = xi.gp.iter().sum::<f64>().min(xi.dp.iter().sum());
    let absorb_q: f64 = (0..nv).map(|v| xi.dq[v] + net.buses[g.vertex_bus[v]].qmin).sum();
    let q_cap = xi.gq.iter().sum::<f64>().min(absorb_q);
    for e in 0..g.num_edges() {
        let t = edge_tag(g, e);
        let line = &net.lines[g.edge_line[e]];
        let (pmax, qmax) = (line.pmax.min(p_cap), line.qmax.min(q_cap));
        let p = m.add_continuous(format!("P[{tag}][{t}]"), -pmax, pmax)?;
        let q = m.add_continuous(format!("Q[{tag}][{t}]"), -qmax, qmax)?;
        for (var, cap, what) in [(p, pmax, "P"), (q, qmax, "Q")] {
            if cap > 0.0 {
                m.add_constraint(format!("{what}cap_hi[{tag}][{t}]"), vec![(var, 1.0), (d.b_e[e], -cap)], Sense::Le, 0.0)?;
                m.add_constraint(format!("{what}cap_lo[{tag}][{t}]"), vec![(var, 1.0), (d.b_e[e], cap)], Sense::Ge, 0.0)?;
            }
        }
        sv.p.push(p);
        sv.q.push(q);
    }
    // flow into a bus plus its net injection equals flow out of it
    let mut pbal: Vec<LinExpr> = (0..nv).map(|v| LinExpr::term(sv.p_g[v], 1.0).with(sv.p_d[v], -1.0)).collect();
    let mut qbal: Vec<LinExpr> = (0..nv).map(|v| LinExpr::term(sv.q_g[v], 1.0).with(sv.q_d[v], -1.0)).collect();
    for (e, &(i, j)) in g.edges.iter().enumerate() {
        pbal[j].add(sv.p[e], 1.0);
        pbal[i].add(sv.p[e], -1.0);
        qbal[j].add(sv.q[e], 1.0);
        qbal[i].add(sv.q[e], -1.0);
    }
    for (v, (pe, qe)) in pbal.into_iter().zip(qbal).enumerate() {
        let name = &g.vertices[v];
        m.add_expr_constraint(format!("pbal[{tag}][{name}]"), pe, Sense::Eq, 0.0)?;
        m.add_expr_constraint(format!("qbal[{tag}][{name}]"), qe, Sense::Eq, 0.0)?;
    }
    for (e, &(i, j)) in g.edges.iter().enumerate() {
        let t = edge_tag(g, e);
        let line = &net.lines[g.edge_line[e]];
        let dv = LinExpr::term(sv.v[i], 1.0).with(sv.v[j], -1.0);
        let u = mccormick_expr(m, &format!("u[{tag}][{t}]"), d.b_e[e], &dv, -V_MAX, V_MAX)?;
        m.add_constraint(
            format!("vdrop[{tag}][{t}]"),
            vec![(u, 1.0), (sv.p[e], -line.r), (sv.q[e], -line.x)],
            Sense::Eq,
            0.0,
        )?;
        sv.u.push(u);
    }
    Ok(sv)
}

/// Inelastic loads: an energized bus consumes exactly its demand.
pub fn load_equality_block(
    m: &mut MilpModel,
    g: &PartitionGraph,
    xi: &Scenario,
    d: &DesignVars,
    sv: &ScenarioVars,
    tag: &str,
) -> Result<Vec<ConsId>, FormulationError> {
    let mut rows = Vec::new();
    for (v, name) in g.vertices.iter().enumerate() {
        for (var, dem, what) in [(sv.p_d[v], xi.dp[v], "pd"), (sv.q_d[v], xi.dq[v], "qd")] {
            if dem > 0.0 {
                rows.push(m.add_constraint(format!("{what}_eq[{tag}][{name}]"), vec![(var, 1.0), (d.b_n[v], -dem)], Sense::Eq, 0.0)?);
            }
        }
    }
    Ok(rows)
}

/// Sampled chance constraint. For each scenario `a` with retention flag
/// `z[a]`: consumption never exceeds demand at energized buses; a retained
/// scenario must serve at least `rho` of it; a dropped scenario serves
/// nothing; and at least `ceil((1 - gamma) N)` scenarios are retained.
pub fn chance_block(
    m: &mut MilpModel,
    g: &PartitionGraph,
    scenarios: &[Scenario],
    cfg: &SaaConfig,
    d: &DesignVars,
    sv: &mut [ScenarioVars],
) -> Result<Vec<ConsId>, FormulationError> {
    cfg.validate()?;
    let rho = cfg.rho;
    let mut rows = Vec::new();
    let mut zs = Vec::with_capacity(scenarios.len());
    for (a, (xi, s)) in scenarios.iter().zip(sv.iter_mut()).enumerate() {
        let z = m.add_binary(format!("z[{a}]"))?;
        s.z = Some(z);
        zs.push(z);
        for (v, name) in g.vertices.iter().enumerate() {
            for (var, dem, what) in [(s.p_d[v], xi.dp[v], "pd"), (s.q_d[v], xi.dq[v], "qd")] {
                if dem <= 0.0 {
                    continue;
                }
                rows.push(m.add_constraint(format!("{what}_max[{a}][{name}]"), vec![(var, 1.0), (d.b_n[v], -dem)], Sense::Le, 0.0)?);
                // -d + rho*xi*bn <= M (1 - z) with M = rho*xi
                rows.push(m.add_constraint(
                    format!("{what}_adequate[{a}][{name}]"),
                    vec![(var, -1.0), (d.b_n[v], rho * dem), (z, rho * dem)],
                    Sense::Le,
                    rho * dem,
                )?);
                rows.push(m.add_constraint(format!("{what}_drop[{a}][{name}]"), vec![(var, 1.0), (z, -dem)], Sense::Le, 0.0)?);
            }
        }
    }
    let need = cfg.required_retained(scenarios.len());
    if need > 0 {
        rows.push(m.add_constraint("retained", zs.iter().map(|&z| (z, 1.0)).collect(), Sense::Ge, need as f64)?);
    }
    Ok(rows)
}
