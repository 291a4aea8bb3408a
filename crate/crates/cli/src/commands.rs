use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use blowup_core::critpoints::{census, find_minima, morse_audit};
use blowup_core::geometry::Domain;
use blowup_core::landscape::{
    hole_b1, hole_critical_point, optimal_d, predict_hole, predict_nodal, predict_subcritical, ModelConstants,
    RatePrediction,
};
use blowup_core::bubbles::{expansion_residual_hole, expansion_residual_sub, ResidualRow};
use blowup_core::quadrature::psi_value;
use blowup_core::{Error, Vector};
use serde::Serialize;

use crate::manifest::{Command, RegimeArg, RunManifest, Sweep};
use crate::CliError;

/// Marks grid cells outside the domain or inside the boundary guard;
/// `psi` is positive everywhere else.
pub const SENTINEL: f64 = -1.0;

pub struct Outcome {
    pub ok: bool,
    pub summary: String,
}

pub fn run(m: &RunManifest, domain: Option<&Domain>) -> Result<Outcome, CliError> {
    fs::create_dir_all(&m.output_dir)?;
    write_json(&m.output_dir.join("manifest.json"), m)?;
    let need = || domain.ok_or_else(|| Error::InvalidArgument("missing domain".into()));
    match m.command {
        Command::PsiGrid => psi_grid(m, need()?),
        Command::Crit => crit(m, need()?),
        Command::Predict => predict(m, need()?),
        Command::EnergyCheck => energy_check(m, need()?),
        Command::MorseAudit => audit(m, need()?),
        Command::Constants => constants(m),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Comma separated, LF terminated, `.` decimals.
struct Csv {
    text: String,
}

impl Csv {
    fn new(comments: &[&str], header: &[String]) -> Self {
        let mut text = String::new();
        for c in comments {
            let _ = writeln!(text, "# {c}");
        }
        text.push_str(&header.join(","));
        text.push('\n');
        Csv { text }
    }

    fn row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    fn save(&self, path: &Path) -> Result<(), CliError> {
        fs::write(path, &self.text)?;
        Ok(())
    }
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn psi_grid(m: &RunManifest, domain: &Domain) -> Result<Outcome, CliError> {
    let n = domain.dim();
    let g = &m.grid;
    let [a, b] = g.axes;
    if a == b || a >= n || b >= n {
        return Err(Error::InvalidArgument(format!("grid axes {:?} invalid for dimension {n}", g.axes)).into());
    }
    if g.steps[0] < 2 || g.steps[1] < 2 {
        return Err(Error::InvalidArgument("grid needs at least 2 steps per axis".into()).into());
    }
    let mut base = Vector::zeros(n);
    match g.fixed.len() {
        0 => {}
        k if k == n => base = Vector::from_slice(&g.fixed),
        k => return Err(Error::DimensionMismatch { expected: n, found: k }.into()),
    }
    let (blo, bhi) = domain.bounding_box();
    let lo = g.lo.unwrap_or([blo[a], blo[b]]);
    let hi = g.hi.unwrap_or([bhi[a], bhi[b]]);
    if !(lo[0] < hi[0] && lo[1] < hi[1]) {
        return Err(Error::InvalidArgument("grid range must satisfy lo < hi".into()).into());
    }
    let coord = |k: usize, i: usize| lo[k] + (hi[k] - lo[k]) * i as f64 / (g.steps[k] - 1) as f64;
    let mut csv = Csv::new(
        &["psi = -1 marks cells outside the domain or within the boundary guard"],
        &["i", "j", &format!("x{a}"), &format!("x{b}"), "psi", "std_error"].map(String::from),
    );
    let mut best: Option<(f64, usize, usize)> = None;
    let mut max = f64::NEG_INFINITY;
    let mut interior = 0usize;
    for i in 0..g.steps[0] {
        for j in 0..g.steps[1] {
            let mut x = base;
            x[a] = coord(0, i);
            x[b] = coord(1, j);
            let (v, e) = if domain.contains(&x) {
                match psi_value(domain, &x, &m.quadrature) {
                    Ok(r) => (r.value, r.std_error),
                    Err(Error::TooCloseToBoundary { .. } | Error::NotInDomain) => (SENTINEL, 0.0),
                    Err(err) => return Err(err.into()),
                }
            } else {
                (SENTINEL, 0.0)
            };
            if v != SENTINEL {
                interior += 1;
                max = max.max(v);
                if best.is_none_or(|(bv, _, _)| v < bv) {
                    best = Some((v, i, j));
                }
            }
            csv.row(&[i.to_string(), j.to_string(), num(x[a]), num(x[b]), num(v), num(e)]);
        }
    }
    let Some((min, bi, bj)) = best else {
        return Err(Error::InvalidArgument("slice does not meet the domain interior".into()).into());
    };
    csv.save(&m.output_dir.join("psi_grid.csv"))?;
    let mut s = Csv::new(&[], &["min", "max", "argmin_i", "argmin_j", &format!("argmin_x{a}"), &format!("argmin_x{b}"), "interior_cells"].map(String::from));
    s.row(&[num(min), num(max), bi.to_string(), bj.to_string(), num(coord(0, bi)), num(coord(1, bj)), interior.to_string()]);
    s.save(&m.output_dir.join("psi_grid_summary.csv"))?;
    Ok(Outcome {
        ok: true,
        summary: format!("psi min {min:e} at cell ({bi}, {bj}), max {max:e}, {interior} interior cells"),
    })
}

fn crit(m: &RunManifest, domain: &Domain) -> Result<Outcome, CliError> {
    let r = census(domain, &m.crit, &m.quadrature)?;
    write_json(&m.output_dir.join("census.json"), &r)?;
    Ok(Outcome {
        ok: r.satisfied,
        summary: format!(
            "{} critical points, Morse indices {:?}, component bound {}, {}",
            r.points.len(),
            r.morse_indices(),
            r.cat_lower_bound,
            if r.satisfied { "satisfied" } else { "not satisfied" }
        ),
    })
}

fn model_constants(m: &RunManifest) -> Result<ModelConstants, CliError> {
    Ok(ModelConstants::with_c2_nodal(m.dim(), m.c2_nodal)?)
}

fn vector_arg(v: &Option<Vec<f64>>, n: usize) -> Result<Option<Vector>, CliError> {
    match v {
        None => Ok(None),
        Some(s) if s.len() == n => Ok(Some(Vector::from_slice(s))),
        Some(s) => Err(Error::DimensionMismatch { expected: n, found: s.len() }.into()),
    }
}

/// The given `xi`, or the global minimum of `psi`.
fn concentration_point(m: &RunManifest, domain: &Domain) -> Result<Vector, CliError> {
    if let Some(x) = vector_arg(&m.xi, domain.dim())? {
        return Ok(x);
    }
    Ok(find_minima(domain, &m.crit, &m.quadrature)?[0].location)
}

fn log_sweep(s: &Sweep) -> Result<Vec<f64>, CliError> {
    if !(s.from > 0.0 && s.to > 0.0 && s.from < 1.0 && s.to < 1.0 && s.points >= 2) {
        return Err(Error::InvalidArgument("sweep needs 0 < from, to < 1 and at least 2 points".into()).into());
    }
    let ratio = s.to / s.from;
    Ok((0..s.points).map(|k| s.from * ratio.powf(k as f64 / (s.points - 1) as f64)).collect())
}

fn predict(m: &RunManifest, domain: &Domain) -> Result<Outcome, CliError> {
    let regime = m.regime.ok_or_else(|| Error::InvalidArgument("predict needs --regime".into()))?;
    let k = model_constants(m)?;
    let n = domain.dim();
    let sweep = m.sweep.unwrap_or(match regime {
        RegimeArg::Hole => Sweep { from: 1e-2, to: 1e-5, points: 7 },
        _ => Sweep { from: 1e-1, to: 1e-4, points: 7 },
    });
    let params = log_sweep(&sweep)?;
    let pred: RatePrediction = match regime {
        RegimeArg::Sub => {
            let xi = concentration_point(m, domain)?;
            predict_subcritical(domain, params[0], &xi, &k, &m.quadrature)?
        }
        RegimeArg::Nodal => predict_nodal(domain, params[0], &k, m.boundary_samples)?,
        RegimeArg::Hole => predict_hole(domain, params[0], &k, &m.quadrature)?,
    };
    let nodal = regime == RegimeArg::Nodal;
    let mut header: Vec<String> = vec![if regime == RegimeArg::Hole { "rho" } else { "epsilon" }.into()];
    header.extend(["bubble", "sign", "delta"].map(String::from));
    if nodal {
        header.push("tau".into());
    }
    header.extend(names("xi", n));
    let mut csv = Csv::new(&[], &header);
    for &s in &params {
        for (idx, pb) in pred.at(s).iter().enumerate() {
            let mut row = vec![num(s), idx.to_string(), pb.bubble.sign.to_string(), num(pb.bubble.delta)];
            if nodal {
                row.push(num(pb.tau.unwrap_or(f64::NAN)));
            }
            row.extend(pb.bubble.xi.as_slice().iter().map(|v| num(*v)));
            csv.row(&row);
        }
    }
    csv.save(&m.output_dir.join("rates.csv"))?;
    let mut lim = Csv::new(&[], &["name", "value"].map(String::from));
    for (key, v) in &pred.limits {
        lim.row(&[key.clone(), num(*v)]);
    }
    lim.save(&m.output_dir.join("limits.csv"))?;
    let limits: Vec<String> = pred.limits.iter().map(|(k, v)| format!("{k} = {v:e}")).collect();
    Ok(Outcome { ok: true, summary: limits.join(", ") })
}

fn energy_check(m: &RunManifest, domain: &Domain) -> Result<Outcome, CliError> {
    let k = model_constants(m)?;
    let n = domain.dim();
    let cfg = &m.quadrature;
    let rows: Vec<ResidualRow> = match m.regime.unwrap_or(RegimeArg::Sub) {
        RegimeArg::Sub => {
            let xi = concentration_point(m, domain)?;
            let d = match m.d {
                Some(d) => d,
                None => optimal_d(&k, psi_value(domain, &xi, cfg)?.value)?,
            };
            let list = if m.list.is_empty() { vec![0.1, 0.05, 0.025] } else { m.list.clone() };
            expansion_residual_sub(domain, d, &xi, &list, &k, cfg)?
        }
        RegimeArg::Hole => {
            let zeta = vector_arg(&m.zeta, n)?.unwrap_or_else(|| Vector::zeros(n));
            let d = match m.d {
                Some(d) => d,
                None => hole_critical_point(&k, hole_b1(&k, domain, cfg)?)?.0,
            };
            let list = if m.list.is_empty() { vec![1e-2, 5e-3, 2.5e-3] } else { m.list.clone() };
            expansion_residual_hole(domain, d, &zeta, &list, &k, cfg)?
        }
        RegimeArg::Nodal => {
            return Err(Error::InvalidArgument("energy-check supports the sub and hole regimes".into()).into());
        }
    };
    let mut csv = Csv::new(&[], &["epsilon_or_rho", "j_eps", "residual", "std_error"].map(String::from));
    let mut terms = Csv::new(&[], &["epsilon_or_rho", "model_term", "mass_ratio"].map(String::from));
    for r in &rows {
        csv.row(&[num(r.parameter), num(r.j_eps), num(r.residual), num(r.std_error)]);
        terms.row(&[num(r.parameter), num(r.model_term), num(r.mass_ratio)]);
    }
    csv.save(&m.output_dir.join("residuals.csv"))?;
    terms.save(&m.output_dir.join("residual_terms.csv"))?;
    let pass = rows.windows(2).all(|w| w[1].residual.abs() < w[0].residual.abs());
    let verdict = if pass { "PASS" } else { "FAIL" };
    fs::write(m.output_dir.join("verdict.txt"), format!("{verdict}\n"))?;
    let res: Vec<String> = rows.iter().map(|r| format!("{:e}", r.residual)).collect();
    Ok(Outcome { ok: pass, summary: format!("{verdict}: residuals [{}]", res.join(", ")) })
}

fn audit(m: &RunManifest, domain: &Domain) -> Result<Outcome, CliError> {
    let r = morse_audit(domain, m.rho, m.trials, m.seed, &m.crit, &m.quadrature)?;
    write_json(&m.output_dir.join("audit.json"), &r)?;
    let worst = r.trials.iter().map(|t| t.min_morse_metric).fold(f64::INFINITY, f64::min);
    Ok(Outcome {
        ok: r.all_nondegenerate,
        summary: format!(
            "{} trials at rho {}: nondegenerate {}, persisted {}, smallest Morse metric {worst:e}",
            r.trials.len(),
            r.rho,
            r.all_nondegenerate,
            r.all_persisted
        ),
    })
}

#[derive(Serialize)]
struct ConstantEntry {
    name: &'static str,
    value: f64,
    provenance: blowup_core::landscape::Provenance,
}

#[derive(Serialize)]
struct ConstantsReport {
    n: usize,
    p: f64,
    constants: Vec<ConstantEntry>,
}

fn constants(m: &RunManifest) -> Result<Outcome, CliError> {
    let k = model_constants(m)?;
    let report = ConstantsReport {
        n: k.n,
        p: k.p,
        constants: k.table().into_iter().map(|(name, value, provenance)| ConstantEntry { name, value, provenance }).collect(),
    };
    write_json(&m.output_dir.join("constants.json"), &report)?;
    Ok(Outcome { ok: true, summary: format!("n = {}: alpha_n = {:e}, c1 = {:e}, a = {:e}", k.n, k.alpha_n, k.c1, k.a) })
}
