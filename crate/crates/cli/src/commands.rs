use serde_json::{json, Value};

use ovq_core::endogenous::{EmbeddedChain, InitialLaw};
use ovq_core::flow::{flow_moments, ld_variance, ld_variance_closed_form};
use ovq_core::heavy_traffic::{
    compare_tails, ht_mean_endogenous_spec, ht_mean_modulated, ht_mean_resampled, ht_rbm_params_general, Scaling,
};
use ovq_core::inversion::total_variation;
use ovq_core::model::rates::scale_law;
use ovq_core::numeric::linalg::to_rows;
use ovq_core::output::{self, Cell, CsvTable};
use ovq_core::qbd::solve_r_matrix;
use ovq_core::sim::{simulate, Horizon, SimConfig};
use ovq_core::transient::solve_two_point_stationary;
use ovq_core::{
    ClockLaw, EndogenousSpec, Error, GeneralResampledSpec, MMQueueSpec, ModelDescriptor, PositiveLaw, RateLawFinite,
    RateLawGeneral, ResampledSpec,
};

use crate::args::{CompareArgs, HtArgs, InvertArgs, LdArgs, MomentsArgs, ScalingArg, SimulateArgs, SolveArgs};

/// Output of one command on one model: a table and a JSON document.
pub struct Report {
    pub table: CsvTable,
    /// Scalars describing the run; written next to the CSV.
    pub meta: Value,
    /// The table's content for JSON output.
    pub data: Value,
}

type Res = ovq_core::Result<Report>;

fn kind_name(m: &ModelDescriptor) -> Value {
    serde_json::to_value(m.kind()).expect("kinds serialize")
}

/// A general resampled model with a finite law and an exponential clock is
/// the resampled model with `q` = clock rate.
fn as_resampled(g: &GeneralResampledSpec) -> Option<ResampledSpec> {
    let PositiveLaw::Exponential { rate } = g.clock.law() else { return None };
    let law = g.law.as_finite()?;
    ResampledSpec::new(law, *rate).ok()
}

fn modulated_of(m: &ModelDescriptor) -> Option<MMQueueSpec> {
    match m {
        ModelDescriptor::General(g) => as_resampled(g).map(|r| r.modulated().clone()),
        other => other.as_modulated().cloned(),
    }
}

fn distribution_data(p: &[f64]) -> Value {
    json!({ "distribution": p })
}

pub fn solve(model: &ModelDescriptor, a: &SolveArgs) -> Res {
    if let ModelDescriptor::Endogenous(e) = model {
        let chain = EmbeddedChain::new(e);
        let p = chain.stationary_distribution(a.n_max)?;
        let meta = json!({
            "kind": kind_name(model),
            "route": "embedded_chain",
            "rho": e.rho(),
            "nu_dd1": chain.nu_dd1,
            "mass": p.iter().sum::<f64>(),
        });
        return Ok(Report { table: output::distribution_table(&p), meta, data: distribution_data(&p) });
    }
    let spec = modulated_of(model).ok_or_else(|| {
        Error::Argument("no exact solver for a non-exponential resampling clock; use `simulate`".into())
    })?;
    let sol = solve_r_matrix(&spec)?;
    let p = sol.marginal(a.n_max);
    let mut meta = json!({
        "kind": kind_name(model),
        "route": "qbd",
        "rho": sol.rho,
        "r": to_rows(&sol.r),
        "zeta0": sol.zeta0,
        "iterations": sol.iterations,
        "residual": sol.residual,
        "spectral_radius": sol.spectral_radius,
        "mean": sol.mean(),
    });
    let resampled = match model {
        ModelDescriptor::Resampled(r) => Some(r.clone()),
        ModelDescriptor::General(g) => as_resampled(g),
        _ => None,
    };
    if let Some(r) = resampled.filter(|r| r.law().dim() == 2) {
        if let Ok(two) = solve_two_point_stationary(r.law(), r.q()) {
            let exact = two.distribution(a.n_max)?;
            meta["two_point_tv"] = json!(total_variation(&exact, &p));
        }
    }
    Ok(Report { table: output::distribution_table(&p), meta, data: distribution_data(&p) })
}

fn rescale(model: &ModelDescriptor, rho: f64) -> ovq_core::Result<ModelDescriptor> {
    let base = model.rho();
    if !(base > 0.0) {
        return Err(Error::Argument("model has no arrivals; heavy-traffic comparison is meaningless".into()));
    }
    let c = rho / base;
    Ok(match model {
        ModelDescriptor::Modulated(m) => ModelDescriptor::Modulated(m.scale_arrivals(c)),
        ModelDescriptor::Resampled(r) => ModelDescriptor::Resampled(ResampledSpec::new(r.law().scale_arrivals(c), r.q())?),
        ModelDescriptor::General(g) => {
            ModelDescriptor::General(GeneralResampledSpec::new(g.law.scale_arrivals(c), g.clock.clone())?)
        }
        ModelDescriptor::Endogenous(e) => {
            ModelDescriptor::Endogenous(EndogenousSpec::new(scale_law(&e.arrival, c), e.service.clone())?)
        }
    })
}

/// `P(Q >= n)` and the heavy-traffic mean for one model.
fn exact_tail(model: &ModelDescriptor, n_max: usize) -> ovq_core::Result<(Vec<f64>, f64)> {
    match model {
        ModelDescriptor::Endogenous(e) => {
            let p = EmbeddedChain::new(e).stationary_distribution(n_max)?;
            let mut tail = Vec::with_capacity(n_max + 1);
            let mut below = 0.0_f64;
            for x in &p {
                tail.push((1.0 - below).max(0.0));
                below += x;
            }
            Ok((tail, ht_mean_endogenous_spec(e, Scaling::AsGiven)?.mean))
        }
        other => {
            let spec = modulated_of(other).ok_or_else(|| {
                Error::Argument("no exact solver for a non-exponential resampling clock".into())
            })?;
            let tail = solve_r_matrix(&spec)?.at_least_probabilities(n_max);
            let resampled = match other {
                ModelDescriptor::Resampled(r) => Some(r.clone()),
                ModelDescriptor::General(g) => as_resampled(g),
                _ => None,
            };
            let m = match resampled {
                Some(r) => ht_mean_resampled(&r.law().moments(), r.q(), Scaling::AsGiven)?.mean,
                None => ht_mean_modulated(&spec)?.approx.mean,
            };
            Ok((tail, m))
        }
    }
}

pub fn compare(model: &ModelDescriptor, a: &CompareArgs) -> Res {
    let loads = if a.rho.is_empty() { vec![model.rho()] } else { a.rho.clone() };
    let mut curves = Vec::new();
    let mut summary = Vec::new();
    for &rho in &loads {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::Argument(format!("heavy-traffic comparison needs a load in (0, 1), got {rho}")));
        }
        let scaled = rescale(model, rho)?;
        let (tail, m) = exact_tail(&scaled, a.n_max)?;
        let cmp = compare_tails(&tail, m, rho)?;
        summary.push(json!({ "rho": rho, "mean": m, "sup_gap": cmp.sup_gap }));
        curves.push((rho, cmp.exact, cmp.approx));
    }
    let data = json!({
        "curves": curves.iter().map(|(rho, e, h)| json!({ "rho": rho, "p_exact": e, "p_ht": h })).collect::<Vec<_>>(),
    });
    let meta = json!({ "kind": kind_name(model), "tail": "P(Q >= n)", "summary": summary });
    Ok(Report { table: output::compare_table(&curves), meta, data })
}

pub fn simulate_cmd(model: &ModelDescriptor, a: &SimulateArgs) -> Res {
    let cfg = SimConfig {
        horizon: Horizon::Events(a.events),
        warmup_fraction: a.warmup,
        replications: a.replications,
        seed: a.seed,
        trajectory_grid: (!a.trajectory_grid.is_empty()).then(|| a.trajectory_grid.clone()),
    };
    let mut res = simulate(model, &cfg)?;
    let traj = res.trajectories.take();
    let mut hist = res.histogram.clone();
    if let Some(n) = a.n_max {
        hist.resize(n + 1, 0.0);
    }
    let mut meta = serde_json::to_value(&res).expect("results serialize");
    if let Some(obj) = meta.as_object_mut() {
        obj.remove("histogram");
        obj.insert("kind".into(), kind_name(model));
        obj.insert("config".into(), serde_json::to_value(&cfg).expect("config serializes"));
    }
    match traj {
        Some(t) => {
            let data = json!({ "trajectories": t });
            Ok(Report { table: output::trajectory_table(&t), meta, data })
        }
        None => Ok(Report { table: output::distribution_table(&hist), meta, data: json!({ "histogram": hist }) }),
    }
}

fn clocked(model: &ModelDescriptor) -> ovq_core::Result<(RateLawGeneral, ClockLaw)> {
    match model {
        ModelDescriptor::General(g) => Ok((g.law.clone(), g.clock.clone())),
        ModelDescriptor::Resampled(r) => Ok((RateLawGeneral::Finite(r.law().clone()), ClockLaw::exponential(r.q())?)),
        _ => Err(Error::Argument("flow moments need a resampled model (resampled_finite or resampled_general)".into())),
    }
}

pub fn moments(model: &ModelDescriptor, a: &MomentsArgs) -> Res {
    let (law, clock) = clocked(model)?;
    let f = flow_moments(&law.moments(), &clock)?;
    let grid: Vec<[f64; 4]> = a.t_grid.iter().map(|&t| f.at(t)).collect::<ovq_core::Result<_>>()?;
    let meta = json!({
        "kind": kind_name(model),
        "clock": clock.law(),
        "moments": f.moments,
        "v_a": f.v_a,
        "v_s": f.v_s,
        "c_as": f.c_as,
    });
    let data = json!({ "grid": grid.iter().map(|r| json!({ "t": r[0], "vA": r[1], "vS": r[2], "cAS": r[3] })).collect::<Vec<_>>() });
    Ok(Report { table: output::flow_table(&grid), meta, data })
}

pub fn ht(model: &ModelDescriptor, a: &HtArgs) -> Res {
    let scaling = match a.scaling {
        ScalingArg::AsGiven => Scaling::AsGiven,
        ScalingArg::Critical => Scaling::Critical,
    };
    let mut meta = json!({ "kind": kind_name(model), "rho": model.rho() });
    let approx = match model {
        ModelDescriptor::Endogenous(e) => ht_mean_endogenous_spec(e, scaling)?,
        ModelDescriptor::Resampled(r) => ht_mean_resampled(&r.law().moments(), r.q(), scaling)?,
        ModelDescriptor::General(g) => ht_rbm_params_general(&g.moments(), &g.clock, scaling)?,
        ModelDescriptor::Modulated(m) => {
            if scaling == Scaling::AsGiven {
                return Err(Error::Argument(
                    "the determinant route is defined at the critical model; pass --scaling critical".into(),
                ));
            }
            let h = ht_mean_modulated(m)?;
            meta["alpha_dd"] = json!(h.alpha_dd);
            meta["alpha_dd_fd"] = json!(h.alpha_dd_fd);
            meta["tau"] = json!(h.tau);
            if let Some(d) = &h.diagnostic {
                meta["diagnostic"] = json!(d);
            }
            h.approx
        }
    };
    meta["approx"] = serde_json::to_value(&approx).expect("approximations serialize");
    let rho = model.rho();
    let curve = if rho > 0.0 && rho < 1.0 { approx.tail_curve(rho, a.n_max)? } else { Vec::new() };
    let data = json!({ "p_approx": curve });
    Ok(Report { table: output::approx_table(&curve), meta, data })
}

fn finite_clocked(model: &ModelDescriptor) -> ovq_core::Result<(RateLawFinite, ClockLaw)> {
    let (law, clock) = clocked(model)?;
    let law = law
        .as_finite()
        .ok_or_else(|| Error::Argument("large-deviation constants need a finite-support rate law".into()))?;
    Ok((law, clock))
}

pub fn ld(model: &ModelDescriptor, a: &LdArgs) -> Res {
    let (law, clock) = finite_clocked(model)?;
    let mut table = CsvTable::new(&["alpha", "c0", "variance", "closed_form", "third_cumulant"]);
    let mut data = Vec::new();
    for &alpha in &a.alpha {
        let r = ld_variance(&law, &clock, alpha)?;
        let closed = ld_variance_closed_form(&law.moments(), &clock, alpha);
        table.push(vec![alpha.into(), r.c0.into(), r.variance.into(), closed.into(), r.third_cumulant.into()])?;
        data.push(json!({ "result": r, "closed_form": closed }));
    }
    // v(½) against ¼ v_A + ¼ v_S + ½ c_AS from the numerical routes
    let v = |alpha: f64| ld_variance(&law, &clock, alpha).map(|r| r.variance);
    let c_as = flow_moments(&law.moments(), &clock)?.c_as;
    let (half, va, vs) = (v(0.5)?, v(1.0)?, v(0.0)?);
    let combination = 0.25 * va + 0.25 * vs + 0.5 * c_as;
    let meta = json!({
        "kind": kind_name(model),
        "clock": clock.law(),
        "combination": { "v_half": half, "quarter_sum": combination, "difference": half - combination },
    });
    Ok(Report { table, meta, data: json!({ "alphas": data }) })
}

pub fn parse_initial(text: &str) -> ovq_core::Result<InitialLaw> {
    let bad = || Error::Argument(format!("unknown initial law `{text}`; use empty, stationary, point:N or geometric:P"));
    match text.split_once(':') {
        None if text == "empty" => Ok(InitialLaw::Empty),
        None if text == "stationary" => Ok(InitialLaw::Stationary),
        Some(("point", n)) => Ok(InitialLaw::PointMass { n: n.parse().map_err(|_| bad())? }),
        Some(("geometric", p)) => Ok(InitialLaw::Geometric { p: p.parse().map_err(|_| bad())? }),
        _ => Err(bad()),
    }
}

pub fn invert(model: &ModelDescriptor, a: &InvertArgs) -> Res {
    let initial = parse_initial(&a.initial)?;
    if a.r.is_empty() {
        let (p, route) = match model {
            ModelDescriptor::Endogenous(e) => (EmbeddedChain::new(e).stationary_distribution(a.n_max)?, "embedded_chain"),
            ModelDescriptor::Resampled(r) => (solve_two_point_stationary(r.law(), r.q())?.distribution(a.n_max)?, "two_point"),
            _ => return Err(Error::Argument("PGF inversion needs an endogenous_mg1 or two-atom resampled_finite model".into())),
        };
        let meta = json!({ "kind": kind_name(model), "route": route, "mass": p.iter().sum::<f64>() });
        return Ok(Report { table: output::distribution_table(&p), meta, data: distribution_data(&p) });
    }
    let ModelDescriptor::Endogenous(e) = model else {
        return Err(Error::Argument("geometric-time transforms need an endogenous_mg1 model".into()));
    };
    if a.z_points < 2 {
        return Err(Error::Argument("need at least two z points".into()));
    }
    let chain = EmbeddedChain::new(e);
    let mut rows = Vec::new();
    let mut roots = Vec::new();
    for &r in &a.r {
        let k = chain.geometric_time(r, initial)?;
        roots.push(json!({ "r": r, "z0": k.z0 }));
        for i in 0..a.z_points {
            let z = i as f64 / (a.z_points - 1) as f64;
            rows.push((r, z, k.eval(z)?));
        }
    }
    let meta = json!({ "kind": kind_name(model), "initial": initial, "roots": roots });
    let data = json!({ "grid": rows.iter().map(|&(r, z, k)| json!({ "r": r, "z": z, "K": k })).collect::<Vec<_>>() });
    Ok(Report { table: output::kernel_table(&rows), meta, data })
}

impl Report {
    /// `meta` with the `data` fields added.
    pub fn document(&self) -> Value {
        let mut doc = self.meta.clone();
        if let (Some(d), Some(m)) = (self.data.as_object(), doc.as_object_mut()) {
            for (k, v) in d {
                m.insert(k.clone(), v.clone());
            }
        }
        doc
    }
}

/// Everything a command writes.
pub struct Merged {
    pub table: CsvTable,
    /// Metadata written next to a CSV output file.
    pub sidecar: Value,
    /// Complete JSON output.
    pub document: Value,
}

/// Joins per-model reports; with several models the CSV gets a leading
/// `model` index column.
pub fn merge(named: Vec<(String, Report)>) -> Merged {
    if named.len() == 1 {
        let (name, mut r) = named.into_iter().next().unwrap();
        if let Some(obj) = r.meta.as_object_mut() {
            obj.insert("name".into(), json!(name));
        }
        let document = r.document();
        return Merged { table: r.table, sidecar: r.meta, document };
    }
    let mut header = vec!["model".to_string()];
    header.extend(named[0].1.table.header.iter().cloned());
    let mut table = CsvTable { header, rows: Vec::new() };
    let mut metas = Vec::new();
    let mut docs = Vec::new();
    for (k, (name, r)) in named.into_iter().enumerate() {
        metas.push(json!({ "model": k, "name": name, "meta": r.meta }));
        docs.push(json!({ "model": k, "name": name, "result": r.document() }));
        for row in r.table.rows {
            let mut full = vec![Cell::from(k)];
            full.extend(row);
            table.rows.push(full);
        }
    }
    Merged { table, sidecar: json!({ "models": metas }), document: json!({ "models": docs }) }
}
