//! Check suites. Each returns rows, a JSON detail record and curve files;
//! library errors become failed rows.

use std::f64::consts::PI;

use kreinwedge::borchers::Slot;
use kreinwedge::gns::{slot_basis, vacuum_tools, wedge_slots, GnsModel};
use kreinwedge::modular::{convergence_trend, run_modular, standard_kms, ModularSettings, WedgeCorrelator};
use kreinwedge::mollifier::mollify_with;
use kreinwedge::quadrature::HermiteRule;
use kreinwedge::states::axioms::calibrate_majorant;
use kreinwedge::states::sampling::{random_packet, rng};
use kreinwedge::states::{check_axioms, AxiomSettings, QuasiFreeState};
use kreinwedge::testfunctions::{schwartz_norm, Difference, PoincareElement, SpacetimePoint, WavePacket, C64};
use serde_json::{json, Value};

use crate::report::{Curve, Row, Rule, SuiteOutput};
use crate::scenario::{Scenario, Suite};

pub fn run(suite: Suite, sc: &Scenario, scale: f64) -> SuiteOutput {
    let name = suite.name();
    let result = match suite {
        Suite::Axioms => axioms(sc, scale),
        Suite::Mollifier => mollifier(sc, scale),
        Suite::Gns => gns(sc, scale),
        Suite::Modular => modular(sc, scale),
        Suite::Controls => controls(sc),
    };
    result.unwrap_or_else(|e| SuiteOutput {
        rows: vec![Row::failed(name, "error", e.to_string())],
        detail: json!({ "error": e.to_string() }),
        curves: vec![],
    })
}

fn axioms(sc: &Scenario, scale: f64) -> kreinwedge::Result<SuiteOutput> {
    let state = sc.state();
    let (majorant, k) = calibrate_majorant(&state, &[], sc.majorant.n_weight, sc.majorant.max_degree)?;
    let cfg = AxiomSettings { tolerance_scale: sc.axioms.tolerance_scale * scale, ..sc.axioms.clone() };
    let report = check_axioms(&state, &majorant, &cfg);
    let rows = report.entries.iter().map(|(n, e)| Row::with_pass("axioms", n, e.defect, e.tolerance, Rule::AtMost, e.pass)).collect();
    Ok(SuiteOutput { rows, detail: json!({ "one_particle_bound": k, "majorant": majorant, "report": report }), curves: vec![] })
}

fn mollifier(sc: &Scenario, scale: f64) -> kreinwedge::Result<SuiteOutput> {
    let block = &sc.mollifier;
    let tol = sc.tolerances.mollifier_ratio * scale;
    let mut rows = Vec::new();
    let mut lines = Vec::new();
    let mut curves_json = Vec::new();
    for (i, spec) in block.packets.iter().enumerate() {
        let f = spec.packet();
        for &[l, n] in &block.norms {
            let nf = schwartz_norm(&f, l, n)?;
            let mut ratios = Vec::new();
            for &eps in &block.epsilons {
                let m = mollify_with(&f, eps, HermiteRule::WEDGE)?;
                let d = schwartz_norm(&Difference(&m.expanded(), &f), l, n)?;
                ratios.push(d / nf);
                lines.push(format!("{i},{l},{n},{eps:e},{:e}", d / nf));
            }
            let increases = ratios.windows(2).filter(|w| !(w[1] < w[0])).count();
            let tag = format!("packet {i} (L={l},N={n})");
            rows.push(Row::new("mollifier", &format!("{tag} monotone"), increases as f64, 0.0, Rule::AtMost));
            rows.push(Row::new("mollifier", &format!("{tag} final ratio"), *ratios.last().expect("nonempty"), tol, Rule::Below));
            curves_json.push(json!({ "packet": i, "l": l, "n": n, "ratios": ratios }));
        }
    }
    let curve = Curve { file: "mollifier_curve.csv".into(), header: "packet,l,n,epsilon,relative_distance".into(), lines };
    Ok(SuiteOutput { rows, detail: json!({ "epsilons": block.epsilons, "curves": curves_json }), curves: vec![curve] })
}

fn gns_slots(sc: &Scenario) -> kreinwedge::Result<Vec<Slot>> {
    let g = &sc.gns;
    let mut slots = Vec::new();
    if let Some(eps) = g.wedge_epsilon {
        slots.extend(wedge_slots(eps)?);
    }
    for &k in &g.shell_momenta {
        let p = WavePacket::modulated(C64::new(1.0, 0.0), SpacetimePoint::ORIGIN, g.shell_width, g.shell_width, SpacetimePoint::new(k, 0.0));
        slots.push(Slot::Packet(p));
    }
    let mut r = rng(sc.seed);
    slots.extend((0..g.random_packets).map(|_| Slot::Packet(random_packet(&mut r))));
    Ok(slots)
}

fn model(state: &QuasiFreeState, slots: &[Slot], products: bool, sc: &Scenario) -> kreinwedge::Result<GnsModel> {
    let (majorant, _) = calibrate_majorant(state, slots, sc.gns.n_weight, sc.gns.max_degree)?;
    GnsModel::new(state.clone(), slot_basis(slots, products), majorant, sc.gns.tol_null)
}

fn gns(sc: &Scenario, scale: f64) -> kreinwedge::Result<SuiteOutput> {
    let tol = sc.tolerances.gns;
    let state = sc.state();
    let m = model(&state, &gns_slots(sc)?, sc.gns.products, sc)?;
    let d = m.real.defects();
    let (plus, minus) = m.real.signature();
    let mut rows = vec![
        Row::new("gns", "eta_squared", d.eta_squared, tol.eta * scale, Rule::Below),
        Row::new("gns", "eta_vacuum", d.eta_vacuum, tol.eta * scale, Rule::Below),
        Row::new("gns", "form", d.form, tol.form * scale, Rule::Below),
    ];
    match sc.gns.expect_indefinite {
        Some(true) => rows.push(Row::new("gns", "negative_directions", minus as f64, 1.0, Rule::AtLeast)),
        Some(false) => rows.push(Row::new("gns", "negative_directions", minus as f64, 0.0, Rule::AtMost)),
        None => {}
    }
    let dom = m.domination(sc.gns.domination_samples, sc.seed);
    rows.push(Row::new("gns", "domination_violations", dom.violations as f64, 0.0, Rule::AtMost));

    let k = sc.gns.vacuum_samples.min(m.basis.len() - 1);
    let vac = vacuum_tools(&m, &m.basis.elements[1..=k])?;
    rows.push(Row::new("gns", "vacuum_orthogonality", vac.orthogonality, tol.vacuum * scale, Rule::Below));
    rows.push(Row::new("gns", "vacuum_projection_identity", vac.projection_identity, tol.vacuum * scale, Rule::Below));

    let mut symmetry = Value::Null;
    if let Some(eps) = sc.gns.symmetry_epsilon {
        let w = model(&state, &wedge_slots(eps)?, false, sc)?;
        let j = w.symmetry_matrix(&PoincareElement::theta01())?;
        let (sq, comm) = (j.square_defect(), j.eta_commutator(&w.real));
        rows.push(Row::new("gns", "j_square", sq, tol.symmetry * scale, Rule::Below));
        rows.push(Row::new("gns", "j_eta_commutator", comm, tol.symmetry * scale, Rule::Below));
        symmetry = json!({ "epsilon": eps, "square_defect": sq, "eta_commutator": comm, "domain_defect": j.domain_defect, "signature": w.real.signature() });
    }
    let eta_lines = m.real.spectrum.iter().zip(&m.real.eta).enumerate().map(|(i, (s, e))| format!("{i},{s:e},{e}")).collect();
    Ok(SuiteOutput {
        rows,
        detail: json!({
            "basis_size": m.basis.len(),
            "signature": [plus, minus],
            "defects": d,
            "domination": dom,
            "vacuum": vac,
            "symmetry": symmetry,
            "realization": m.real.export(),
        }),
        curves: vec![Curve { file: "gns_spectrum.csv".into(), header: "index,auxiliary_eigenvalue,eta".into(), lines: eta_lines }],
    })
}

fn correlator(state: &QuasiFreeState, s: &ModularSettings, eps: f64) -> kreinwedge::Result<WedgeCorrelator> {
    let f = s.wedge_element(&s.f_packet(), eps)?;
    let g = s.wedge_element(&s.g_packet(), eps)?;
    WedgeCorrelator::new(s.state(state), f, g)
}

fn modular(sc: &Scenario, scale: f64) -> kreinwedge::Result<SuiteOutput> {
    let state = sc.state();
    let settings = &sc.modular.settings;
    let report = run_modular(&state, settings, &sc.tolerances.modular.scaled(scale))?;
    let mut rows: Vec<Row> = report
        .checks
        .iter()
        .map(|c| {
            let rule = if c.tolerance == 0.0 { Rule::AtMost } else { Rule::Below };
            Row::with_pass("modular", &c.check, c.defect, c.tolerance, rule, c.pass)
        })
        .collect();

    let fg = correlator(&state, settings, settings.kms_epsilon)?;
    let mut lines = Vec::new();
    for &phi in &sc.modular.trace_phis {
        for (t, v) in fg.trace(phi, &sc.modular.trace_ts)? {
            lines.push(format!("{phi:e},{t:e},{:e},{:e}", v.re, v.im));
        }
    }
    let density = report.structure.density_curve.iter().map(|p| format!("{:e},{:e}", p.epsilon, p.defect)).collect();
    let mut detail = json!({ "report": report, "trace_epsilon": settings.kms_epsilon });
    if sc.modular.trend {
        let t = convergence_trend(&state, settings)?;
        let factor = sc.tolerances.trend_factor;
        for (name, r) in ["trend_kms", "trend_bw", "trend_tomita"].iter().zip(t.ratios) {
            rows.push(Row::new("modular", name, r, factor, Rule::AtLeast));
        }
        detail["trend"] = json!(t);
    }
    Ok(SuiteOutput {
        rows,
        detail,
        curves: vec![
            Curve { file: "correlator_traces.csv".into(), header: "phi,t,re,im".into(), lines },
            Curve { file: "density_curve.csv".into(), header: "epsilon,relative_distance".into(), lines: density },
        ],
    })
}

/// Runs that must fail: g in the left wedge, and the BW relation read off
/// at −iπ in the lower strip. Their rows pass when the defect is large.
fn controls(sc: &Scenario) -> kreinwedge::Result<SuiteOutput> {
    let state = sc.state();
    let settings = &sc.modular.settings;
    let min = sc.tolerances.control_min;
    let wrong = ModularSettings { control: !settings.control, ..settings.clone() };
    let kms = standard_kms(&state, &wrong)?;

    let fg = correlator(&state, settings, settings.epsilon)?;
    let scale = fg.real_scale(&settings.t_samples)?;
    let lower = fg.value(C64::new(0.0, -PI))?;
    let reflected = fg.state().evaluate(&fg.f.tensor(&fg.g.involution().act(&PoincareElement::theta01()))?)?;
    let lower_defect = (lower - reflected).norm() / scale.max(1e-300);

    Ok(SuiteOutput {
        rows: vec![
            Row::new("controls", "wrong_wedge_kms", kms.defect, min, Rule::Above),
            Row::new("controls", "lower_strip_bw", lower_defect, min, Rule::Above),
        ],
        detail: json!({
            "wrong_wedge_kms": kms,
            "lower_strip_bw": { "defect": lower_defect, "scale": scale, "continued": [lower.re, lower.im], "reflected": [reflected.re, reflected.im] },
        }),
        curves: vec![],
    })
}
