use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use diracsea::checks::{self, CheckReport};
use diracsea::dynamics::{
    measurement_scenario, packet_state, run_ensemble, EnsembleSpec, Evolution, EvolutionPlan, Interaction,
    IntegratorSpec,
};
use diracsea::fluct::{
    distinguishability_radius, fluctuations, macro_statistics, total_coefficient, variance_asymptotic, CaseLabel,
    FluctRegion, FluctuationSpec, CASE1_THRESHOLD, CASE2_THRESHOLD,
};
use diracsea::fock::{
    build_hamiltonian, build_interaction, build_one_body_operator, dirac_sea_state, expectation, region_weights,
    single_particle_state, BosonSpace, HilbertSpace, ModeBasis, OperatorMatrix, QuantumState,
};
use diracsea::io;
use diracsea::modes::{build_mode_lattice, SpaceDim, SpeciesTable};
use diracsea::position::{correction_velocity, PilotField};
use diracsea::{Error, Exec, C64};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{Format, Preset, ScenarioConfig, ScenarioKind, StateConfig};

/// Exit status classes: 1 for numerical failures, 2 for usage and
/// configuration errors.
#[derive(Debug)]
pub enum Failure {
    Numeric(String),
    Usage(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Numeric(_) => 1,
            Failure::Usage(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Numeric(m) | Failure::Usage(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_)
            | Error::DimensionMismatch { .. }
            | Error::SectorTooLarge { .. }
            | Error::BranchOverlap(_) => Failure::Usage(e.to_string()),
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

type Outcome<T> = std::result::Result<T, Failure>;

pub struct Context {
    pub kind: ScenarioKind,
    pub config: ScenarioConfig,
    pub out: PathBuf,
    pub format: Format,
    pub seed: u64,
    pub hash: String,
    pub exec: Exec,
}

pub fn config_hash(config: &ScenarioConfig) -> String {
    let bytes = serde_json::to_vec(config).expect("config serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl Context {
    fn envelope(&self, result: Value) -> Value {
        json!({
            "software": "diracsea",
            "version": env!("CARGO_PKG_VERSION"),
            "scenario": self.kind.name(),
            "config_hash": self.hash,
            "seed": self.seed,
            "config": self.config,
            "result": result,
        })
    }

    fn meta(&self) -> Vec<(&'static str, String)> {
        vec![
            ("software", format!("diracsea {}", env!("CARGO_PKG_VERSION"))),
            ("scenario", self.kind.name().to_string()),
            ("config_hash", self.hash.clone()),
            ("seed", self.seed.to_string()),
        ]
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write_json(&self, name: &str, result: Value) -> Outcome<PathBuf> {
        let p = self.path(name);
        io::write_json(&p, &self.envelope(result))?;
        Ok(p)
    }

    fn write_text(&self, name: &str, text: &str) -> Outcome<PathBuf> {
        let p = self.path(name);
        io::write_atomic(&p, text.as_bytes())?;
        Ok(p)
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn csv_table(meta: &[(&str, String)], header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    for (k, v) in meta {
        let _ = writeln!(out, "# {k}={v}");
    }
    let _ = writeln!(out, "{}", header.join(","));
    for r in rows {
        let _ = writeln!(out, "{}", r.join(","));
    }
    out
}

pub fn run(ctx: &Context) -> Outcome<Vec<PathBuf>> {
    match ctx.kind {
        ScenarioKind::Fluct => fluct(ctx),
        ScenarioKind::FluctSweep => sweep(ctx),
        ScenarioKind::Evolve => evolve(ctx),
        ScenarioKind::Ensemble => ensemble(ctx),
        ScenarioKind::Measure => measure(ctx),
        ScenarioKind::Check => check(ctx),
    }
}

pub fn default_format(kind: ScenarioKind) -> Format {
    match kind {
        ScenarioKind::FluctSweep | ScenarioKind::Evolve | ScenarioKind::Ensemble => Format::Csv,
        _ => Format::Json,
    }
}

fn case_counts(cases: impl Iterator<Item = CaseLabel>) -> [usize; 3] {
    let mut c = [0; 3];
    for l in cases {
        c[match l {
            CaseLabel::Case1 => 0,
            CaseLabel::Case2 => 1,
            CaseLabel::Case3 => 2,
        }] += 1;
    }
    c
}

fn fluct(ctx: &Context) -> Outcome<Vec<PathBuf>> {
    let f = ctx.config.fluct.as_ref().ok_or_else(|| usage("scenario `fluct` needs a [fluct] table"))?;
    let (cutoff, density) = match f.preset {
        Some(Preset::Graphite) => (f.cutoff.unwrap_or(1e35), f.density.or(Some(4.2e30))),
        None => (f.cutoff.ok_or_else(|| usage("[fluct]: missing `cutoff`"))?, f.density),
    };
    let radius = density.map(|rho| distinguishability_radius(rho, cutoff)).transpose()?;
    let region = match (f.region, radius) {
        (Some(r), _) => r,
        (None, Some(b)) => FluctRegion::Ball { radius: b },
        (None, None) => return Err(usage("[fluct]: give a `region` or a `density`")),
    };
    let spec = FluctuationSpec {
        cutoff,
        region,
        species: SpeciesTable::standard_model(f.neutrino_mass_ev),
        tolerance: f.tolerance,
        case: f.case,
    };
    let asym = variance_asymptotic(&spec)?;
    let res = fluctuations(&spec, ctx.exec)?;
    let macro_state = match f.particles {
        Some(m) => {
            let (mean, sd) = macro_statistics(res.n0, res.stddev, m, f.inside)?;
            json!({ "particles": m, "inside": f.inside, "expectation": mean, "stddev": sd,
                    "provenance": "vacuum spread carried over unchanged" })
        }
        None => Value::Null,
    };
    let distinguishability = match (density, radius) {
        (Some(rho), Some(b)) => {
            let v = 4.0 * std::f64::consts::PI * b.powi(3) / 3.0;
            json!({ "density": rho, "cutoff": cutoff, "radius_m": b, "volume_m3": v,
                    "fermions_in_ball": rho * v,
                    "vacuum_stddev": total_coefficient() * cutoff.sqrt() * v.powf(1.0 / 6.0) })
        }
        _ => Value::Null,
    };
    let counts = case_counts(res.species.iter().map(|s| s.case));
    let mut result = json!({
        "cutoff": cutoff,
        "region": region,
        "radius_m": region.radius(),
        "n0": { "value": res.n0, "provenance": "formula" },
        "variance": { "value": res.variance, "error": res.error, "stddev": res.stddev, "provenance": "quadrature" },
        "asymptotic": { "variance": asym.total, "stddev": asym.stddev, "per_species": asym.per_species,
                        "provenance": "asymptotic formula" },
        "cases": { "case1": counts[0], "case2": counts[1], "case3": counts[2],
                   "thresholds": { "case1_bm_above": CASE1_THRESHOLD, "case2_bm_at_most": CASE2_THRESHOLD } },
        "all_converged": res.species.iter().all(|s| s.converged),
        "distinguishability": distinguishability,
        "macro": macro_state,
    });
    let mut written = Vec::new();
    if ctx.format == Format::Csv {
        let rows: Vec<Vec<String>> = res
            .species
            .iter()
            .map(|s| {
                vec![
                    s.id.clone(),
                    io::fmt_f64(s.mass),
                    to_value(&s.case).as_str().unwrap_or("").to_string(),
                    io::fmt_f64(s.variance),
                    io::fmt_f64(s.error),
                    io::fmt_f64(s.asymptotic),
                    s.converged.to_string(),
                ]
            })
            .collect();
        let text =
            csv_table(&ctx.meta(), &["id", "mass", "case", "variance", "error", "asymptotic", "converged"], &rows);
        written.push(ctx.write_text("fluct_species.csv", &text)?);
    } else {
        result["species"] = to_value(&res.species);
    }
    written.insert(0, ctx.write_json("fluct.json", result)?);
    Ok(written)
}

fn sweep(ctx: &Context) -> Outcome<Vec<PathBuf>> {
    let s = ctx.config.sweep.as_ref().ok_or_else(|| usage("scenario `fluct-sweep` needs a [sweep] table"))?;
    if s.radii.is_empty() || s.cutoffs.is_empty() {
        return Err(usage("[sweep]: `radii` and `cutoffs` must be non-empty"));
    }
    let species = SpeciesTable::standard_model(s.neutrino_mass_ev);
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for &b in &s.radii {
        for &cutoff in &s.cutoffs {
            let spec = FluctuationSpec {
                cutoff,
                region: FluctRegion::Ball { radius: b },
                species: species.clone(),
                tolerance: s.tolerance,
                case: s.case,
            };
            let r = fluctuations(&spec, ctx.exec)?;
            let c = case_counts(r.species.iter().map(|x| x.case));
            let rel = (r.stddev - r.asymptotic_stddev) / r.asymptotic_stddev;
            let converged = r.species.iter().all(|x| x.converged);
            rows.push(vec![
                io::fmt_f64(b),
                io::fmt_f64(cutoff),
                io::fmt_f64(r.n0),
                io::fmt_f64(r.stddev),
                io::fmt_f64(r.asymptotic_stddev),
                io::fmt_f64(rel),
                io::fmt_f64(r.error),
                converged.to_string(),
                c[0].to_string(),
                c[1].to_string(),
                c[2].to_string(),
            ]);
            records.push(json!({ "b": b, "cutoff": cutoff, "n0": r.n0, "delta0": r.stddev,
                "delta0_asymptotic": r.asymptotic_stddev, "relative_deviation": rel, "error": r.error,
                "converged": converged, "case1": c[0], "case2": c[1], "case3": c[2] }));
        }
    }
    let mut written = Vec::new();
    let mut result = json!({ "points": records.len() });
    if ctx.format == Format::Csv {
        let header = [
            "b", "cutoff", "n0", "delta0", "delta0_asymptotic", "relative_deviation", "error", "converged", "case1",
            "case2", "case3",
        ];
        written.push(ctx.write_text("sweep.csv", &csv_table(&ctx.meta(), &header, &rows))?);
    } else {
        result["rows"] = Value::Array(records);
    }
    written.insert(0, ctx.write_json("sweep.json", result)?);
    Ok(written)
}

struct System {
    space: HilbertSpace,
    state: QuantumState,
    omega: f64,
}

fn build_system(cfg: &ScenarioConfig) -> Outcome<System> {
    let lat = cfg.lattice.as_ref().ok_or_else(|| usage("missing [lattice] table"))?;
    let sector = cfg.sector.as_ref().ok_or_else(|| usage("missing [sector] table"))?;
    let dim = SpaceDim::from_usize(lat.dim)?;
    let cutoff = lat.resolved_cutoff().map_err(usage)?;
    let basis = ModeBasis::build(build_mode_lattice(dim, lat.box_len, cutoff)?, cfg.species_table().map_err(usage)?)?;
    let boson = BosonSpace::new(sector.boson_dim)?;
    let space = HilbertSpace::new(basis, sector.fermions, boson)?;
    let state = match &sector.state {
        StateConfig::Sea => dirac_sea_state(&space)?,
        StateConfig::Packet { center, width, momentum } => {
            if center.len() != lat.dim || momentum.len() != lat.dim {
                return Err(usage("[sector.state]: `center` and `momentum` need one entry per dimension"));
            }
            let one = packet_state(&space, center, *width, momentum)?;
            one
        }
        StateConfig::Modes { amplitudes } => {
            let mut c = vec![C64::from(0.0); space.basis.len()];
            for &(i, re, im) in amplitudes {
                if i >= c.len() {
                    return Err(usage(format!("[sector.state]: mode {i} out of range (0..{})", c.len())));
                }
                c[i] = C64::new(re, im);
            }
            single_particle_state(&space, &c)?
        }
        StateConfig::Occupation { modes } => {
            let mut mask = 0u128;
            for &i in modes {
                if i >= space.basis.len() {
                    return Err(usage(format!("[sector.state]: mode {i} out of range")));
                }
                mask |= 1u128 << i;
            }
            let k = space
                .sector
                .index_of(mask)
                .ok_or_else(|| usage("[sector.state]: occupation does not match the fermion number"))?;
            QuantumState::basis_state(space.dim(), k * space.boson.dim())?
        }
    };
    Ok(System { space, state, omega: sector.omega })
}

fn interaction_operator(ctx: &Context, space: &HilbertSpace) -> Outcome<Option<OperatorMatrix>> {
    match &ctx.config.kernel {
        Some(k) => Ok(Some(build_interaction(space, k, ctx.exec)?)),
        None => Ok(None),
    }
}

fn evolve(ctx: &Context) -> Outcome<Vec<PathBuf>> {
    let e = ctx.config.evolve.as_ref().ok_or_else(|| usage("scenario `evolve` needs an [evolve] table"))?;
    if e.slices == 0 {
        return Err(usage("[evolve]: `slices` must be positive"));
    }
    let sys = build_system(&ctx.config)?;
    let h = build_hamiltonian(&sys.space, ctx.config.kernel.as_ref(), sys.omega, ctx.exec)?;
    let h_int = interaction_operator(ctx, &sys.space)?;
    let region_op = match &e.region {
        Some(r) => Some(build_one_body_operator(&sys.space, &region_weights(&sys.space.basis, r)?, ctx.exec)?),
        None => None,
    };
    let plan = EvolutionPlan::new(h.clone(), ctx.exec)?;
    let mut written = Vec::new();
    let mut slices = Vec::new();
    let mut rows = Vec::new();
    let mut last = sys.state.clone();
    for k in 0..=e.slices {
        let t = e.t0 + (e.t1 - e.t0) * k as f64 / e.slices as f64;
        let st = plan.evolve(&sys.state, t)?;
        let energy = expectation(&h, &st, ctx.exec)?.re;
        let fb = match &region_op {
            Some(op) => Some(expectation(op, &st, ctx.exec)?.re),
            None => None,
        };
        rows.push(vec![
            io::fmt_f64(t),
            io::fmt_f64(st.norm()),
            io::fmt_f64(energy),
            fb.map_or(String::new(), io::fmt_f64),
        ]);
        slices.push(json!({ "t": t, "norm": st.norm(), "energy": energy, "region_fermions": fb }));
        if let Some(points) = e.grid_points {
            let field = PilotField::new(&sys.space, &st, h_int.as_ref(), ctx.exec)?;
            let grid = correction_velocity(&field, points, ctx.exec)?;
            let mut meta = ctx.meta();
            meta.push(("t", io::fmt_f64(t)));
            meta.push(("poisson_residual", io::fmt_f64(grid.residual)));
            written.push(ctx.write_text(&format!("fields_{k:04}.csv"), &io::grid_field_csv(&grid, &meta))?);
        }
        last = st;
    }
    let p = ctx.path("state_final.ckpt");
    io::write_state_checkpoint(&p, &sys.space, &last, Some(&ctx.hash))?;
    written.push(p);
    let p = ctx.path("hamiltonian.ckpt");
    io::write_operator_checkpoint(&p, &sys.space, &h, Some(&ctx.hash))?;
    written.push(p);
    let mut result = json!({ "dimension": sys.space.dim(), "fermions": sys.space.fermion_number() });
    if ctx.format == Format::Csv {
        let text = csv_table(&ctx.meta(), &["t", "norm", "energy", "region_fermions"], &rows);
        written.push(ctx.write_text("evolve.csv", &text)?);
    } else {
        result["slices"] = Value::Array(slices);
    }
    written.insert(0, ctx.write_json("evolve.json", result)?);
    Ok(written)
}

fn ensemble(ctx: &Context) -> Outcome<Vec<PathBuf>> {
    let e = ctx.config.ensemble.as_ref().ok_or_else(|| usage("scenario `ensemble` needs an [ensemble] table"))?;
    let sys = build_system(&ctx.config)?;
    let h = build_hamiltonian(&sys.space, ctx.config.kernel.as_ref(), sys.omega, ctx.exec)?;
    let h_int = interaction_operator(ctx, &sys.space)?;
    let plan = EvolutionPlan::new(h, ctx.exec)?;
    let schedule = Evolution::new(&plan, sys.state.clone())?;
    let spec = EnsembleSpec {
        trajectories: e.trajectories,
        seed: ctx.seed,
        t0: e.t0,
        t1: e.t1,
        slices: e.slices,
        bins: e.bins,
        integrator: ctx.config.integrator.clone().unwrap_or_else(|| IntegratorSpec::new(0.05)),
        mode: e.mode,
        jump_grid: e.jump_grid,
        initial: e.initial,
    };
    let interaction = match (&ctx.config.kernel, &h_int) {
        (Some(kernel), Some(operator)) => Some(Interaction { kernel, operator }),
        _ => None,
    };
    let (set, report) = run_ensemble(&sys.space, &schedule, interaction, &spec, ctx.exec)?;
    let mut written = Vec::new();
    let p = ctx.path("trajectories.frames");
    io::write_atomic(&p, &io::trajectory_frames(&set))?;
    written.push(p);
    let mut result = json!({
        "equilibrium": report,
        "trajectories": set.len(),
        "aborted": set.aborted_count(),
        "jumps": set.jumps.len(),
    });
    if ctx.format == Format::Csv {
        written.push(ctx.write_text("trajectories.csv", &io::trajectory_csv(&set, &ctx.meta()))?);
    } else {
        result["times"] = to_value(&set.times);
        result["configurations"] = to_value(&set.configurations);
    }
    written.insert(0, ctx.write_json("ensemble.json", result)?);
    Ok(written)
}

fn measure(ctx: &Context) -> Outcome<Vec<PathBuf>> {
    let mut spec = ctx.config.measure.clone().ok_or_else(|| usage("scenario `measure` needs a [measure] table"))?;
    spec.seed = ctx.seed;
    let r = measurement_scenario(&spec, ctx.exec)?;
    let p = ctx.write_json("measure.json", to_value(&r))?;
    if !r.within_three_sigma {
        return Err(Failure::Numeric(format!(
            "branch occupancy {:.4} is outside 3 sigma of {:.4}; result written to {}",
            r.fraction,
            r.weight,
            p.display()
        )));
    }
    Ok(vec![p])
}

fn check(ctx: &Context) -> Outcome<Vec<PathBuf>> {
    let cfg = ctx.config.check.clone().unwrap_or_default();
    let mut settings = cfg.settings;
    settings.seed = ctx.seed;
    let mut report: CheckReport = checks::algebraic_suite(&settings, ctx.exec)?;
    report.merge(checks::position_commutators(&settings, ctx.exec)?);
    report.merge(checks::macro_state_checks(&cfg.macro_state, ctx.exec)?);
    for suite in report.suites() {
        let n = report.outcomes.iter().filter(|o| o.suite == suite).count();
        let bad = report.outcomes.iter().filter(|o| o.suite == suite && !o.passed).count();
        println!("{:<20} {:>4} checks  {}", suite, n, if bad == 0 { "ok".to_string() } else { format!("{bad} FAILED") });
    }
    let p = ctx.write_json("check.json", json!({ "passed": report.passed(), "outcomes": report.outcomes }))?;
    if let Some(f) = report.failures().next() {
        return Err(Failure::Numeric(format!(
            "invariant `{}` failed on {}: {:e} against {:e}",
            f.suite, f.case, f.value, f.tolerance
        )));
    }
    Ok(vec![p])
}

pub fn display(paths: &[PathBuf]) -> String {
    paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join("\n")
}

pub fn out_dir(flag: Option<&Path>, config: Option<&Path>) -> PathBuf {
    flag.or(config).map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("diracsea-out"))
}
