//! Impact scenario configuration.
//!
//! Line-oriented `section.key = value` text; `#` starts a comment. Units are
//! part of the key names. Run `beamimpact --print-defaults` for the full key
//! list.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::warn;

use std::sync::Arc;

use crate::assembly::{
    assemble_beam, assemble_sphere, AssembledModel, BeamGeometry, ComplianceRule, HertzLaw,
    MassStyle, Material, SnappedPoint, SphereSpec, Support,
};
use crate::cms::{build_rom, select_retained, solve_modes, ModalBasis, ReducedModel, RetainedModes};
use crate::contact::{ContactOptions, ImpactSetup, OracleBeam, OracleSetup, Probe};
use crate::error::{Error, Result};

/// Treatment of keys that are not part of the schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strictness {
    #[default]
    Strict,
    Lenient,
}

struct KeySpec {
    key: &'static str,
    /// `None` marks a mandatory key.
    default: Option<&'static str>,
    help: &'static str,
}

const fn key(key: &'static str, default: &'static str, help: &'static str) -> KeySpec {
    KeySpec {
        key,
        default: Some(default),
        help,
    }
}

const fn required(key: &'static str, help: &'static str) -> KeySpec {
    KeySpec {
        key,
        default: None,
        help,
    }
}

const SCHEMA: &[KeySpec] = &[
    required("beam.support", "free-free | clamped-clamped"),
    key("beam.n_elem", "60", "number of beam elements"),
    key("beam.length_m", "0.210", "beam length"),
    key("beam.width_m", "0.015", "cross-section width"),
    key("beam.height_m", "0.010", "cross-section height (impact direction)"),
    key("beam.elastic_modulus_pa", "210e9", "Young's modulus"),
    key("beam.poisson_ratio", "0.3", "Poisson's ratio"),
    key("beam.density_kg_m3", "7800", "density"),
    key("beam.mass_style", "consistent", "consistent | lumped"),
    key("sphere.mass_kg", "5.58e-3", "sphere mass"),
    key("sphere.radius_m", "5.55e-3", "sphere radius"),
    key("sphere.elastic_modulus_pa", "210e9", "sphere Young's modulus"),
    key("sphere.poisson_ratio", "0.3", "sphere Poisson's ratio"),
    key(
        "sphere.compliance_rule",
        "duration_matched",
        "duration_matched | tangent_at_peak | secant_at_peak | fixed",
    ),
    key("sphere.compliance_m_per_n", "0", "contact compliance when the rule is `fixed`"),
    required("impact.point", "P1..P4 or an axial coordinate in m"),
    required("impact.velocity_m_s", "sphere speed at touch (downward)"),
    key("points.p1_frac", "0.125", "P1 as a fraction of the beam length (assumed)"),
    key("points.p2_frac", "0.25", "P2 as a fraction of the beam length (assumed)"),
    key("points.p3_frac", "0.375", "P3 as a fraction of the beam length (assumed)"),
    key("points.p4_frac", "0.5", "P4 as a fraction of the beam length (centre)"),
    key("rom.f_cut_hz", "70e3", "retain all beam modes up to this frequency"),
    key("integration.dt_s", "1e-7", "time step"),
    key("integration.t_end_s", "5e-4", "simulated time span"),
    key("integration.record_every", "1", "keep every n-th step in the output"),
    key("contact.penalty_scale", "1.0", "augmented-Lagrangian penalty factor"),
    key("contact.complementarity_tol", "1e-10", "scaled complementarity tolerance"),
    key("contact.max_iterations", "500", "contact iterations per step"),
    key("contact.gap_tol_m", "1e-12", "accepted interpenetration"),
    key("contact.coalescence_s", "5e-6", "pulses closer than this form one contact"),
    key("probes.points", "P1,P2,P3,P4", "velocity probes: labels or coordinates in m"),
    key("output.dir", "out", "output directory"),
    key("output.downsample", "false", "also write data resampled to 102.4 kHz"),
    key("post.fit_window_s", "5e-4", "free-decay window for the modal fit"),
    key("oracle.rtol", "1e-9", "relative tolerance of the Hertz reference solution"),
];

/// Axial location given by label or coordinate.
#[derive(Debug, Clone, PartialEq)]
pub enum PointSpec {
    Label(usize),
    Coordinate(f64),
}

impl PointSpec {
    fn parse(text: &str) -> Option<Self> {
        let t = text.trim();
        if let Some(n) = t.strip_prefix(['P', 'p']) {
            return match n.parse::<usize>() {
                Ok(k @ 1..=4) => Some(PointSpec::Label(k)),
                _ => None,
            };
        }
        t.parse::<f64>().ok().filter(|x| x.is_finite()).map(PointSpec::Coordinate)
    }

    pub fn name(&self) -> String {
        match self {
            PointSpec::Label(k) => format!("P{k}"),
            PointSpec::Coordinate(x) => format!("x={x}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamConfig {
    pub support: Support,
    pub n_elem: usize,
    pub geometry: BeamGeometry,
    pub material: Material,
    pub mass_style: MassStyle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphereConfig {
    pub mass: f64,
    pub radius: f64,
    pub material: Material,
    pub compliance_rule: ComplianceRule,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub beam: BeamConfig,
    pub sphere: SphereConfig,
    pub impact_point: PointSpec,
    pub impact_velocity: f64,
    pub point_fractions: [f64; 4],
    pub f_cut_hz: f64,
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
    pub contact: ContactOptions,
    pub coalescence: f64,
    pub probes: Vec<PointSpec>,
    pub output_dir: PathBuf,
    pub downsample: bool,
    pub fit_window: f64,
    pub oracle_rtol: f64,
    /// Resolved `key = value` lines in schema order.
    echo: String,
    lines: BTreeMap<&'static str, usize>,
}

impl Scenario {
    /// Canonical text of every resolved key; identical inputs give identical
    /// echoes regardless of comments, order or spacing.
    pub fn echo(&self) -> &str {
        &self.echo
    }

    /// Axial coordinate of a point, m.
    pub fn coordinate(&self, p: &PointSpec) -> f64 {
        match *p {
            PointSpec::Label(k) => self.point_fractions[k - 1] * self.beam.geometry.length,
            PointSpec::Coordinate(x) => x,
        }
    }

    /// Line of `key` in the source text, 0 when defaulted.
    pub fn line_of(&self, key: &str) -> usize {
        self.lines.get(key).copied().unwrap_or(0)
    }

    pub fn with_output_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.output_dir = dir.into();
        self
    }
}

/// Text listing every key with its default, usable as a config template.
pub fn defaults_text() -> String {
    let mut out = String::from("# beamimpact scenario keys (SI units)\n");
    for k in SCHEMA {
        match k.default {
            Some(d) => {
                let _ = writeln!(out, "{} = {}    # {}", k.key, d, k.help);
            }
            None => {
                let _ = writeln!(out, "# {} = <required>    # {}", k.key, k.help);
            }
        }
    }
    out
}

pub fn parse_scenario(path: &Path, strictness: Strictness) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scenario_str(&text, strictness)
}

pub fn parse_scenario_str(text: &str, strictness: Strictness) -> Result<Scenario> {
    let mut values: BTreeMap<&'static str, (usize, String)> = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (name, value) = line.split_once('=').ok_or_else(|| Error::Config {
            line: line_no,
            key: line.to_string(),
            message: "is not a `section.key = value` line".into(),
        })?;
        let (name, value) = (name.trim(), value.trim());
        let Some(spec) = SCHEMA.iter().find(|s| s.key == name) else {
            match strictness {
                Strictness::Strict => {
                    return Err(Error::Config {
                        line: line_no,
                        key: name.to_string(),
                        message: "is not a known key".into(),
                    })
                }
                Strictness::Lenient => {
                    warn!("config line {line_no}: ignoring unknown key {name}");
                    continue;
                }
            }
        };
        if values.insert(spec.key, (line_no, value.to_string())).is_some() {
            return Err(Error::Config {
                line: line_no,
                key: name.to_string(),
                message: "is given twice".into(),
            });
        }
    }
    let r = Reader { values };
    for spec in SCHEMA {
        if spec.default.is_none() && !r.values.contains_key(spec.key) {
            return Err(Error::Config {
                line: 0,
                key: spec.key.to_string(),
                message: "is required".into(),
            });
        }
    }

    let support = r.choice(
        "beam.support",
        &[("free-free", Support::FreeFree), ("clamped-clamped", Support::ClampedClamped)],
    )?;
    let n_elem: usize = r.parse("beam.n_elem")?;
    r.check("beam.n_elem", n_elem >= 2, "must be >= 2")?;
    let length = r.positive("beam.length_m")?;
    let width = r.positive("beam.width_m")?;
    let height = r.positive("beam.height_m")?;
    let beam_material = r.material("beam", None)?;
    let mass_style = r.choice(
        "beam.mass_style",
        &[("consistent", MassStyle::Consistent), ("lumped", MassStyle::Lumped)],
    )?;
    let geometry = BeamGeometry::new(length, width, height).map_err(|e| r.wrap("beam.length_m", e))?;

    let sphere_mass = r.positive("sphere.mass_kg")?;
    let radius = r.positive("sphere.radius_m")?;
    // Only the elastic constants of the sphere enter; its mass is given.
    let sphere_material = r.material("sphere", Some(1.0))?;
    let fixed: f64 = r.parse("sphere.compliance_m_per_n")?;
    let rule = match r.raw("sphere.compliance_rule").as_str() {
        "duration_matched" => ComplianceRule::DurationMatched,
        "tangent_at_peak" => ComplianceRule::TangentAtPeak,
        "secant_at_peak" => ComplianceRule::SecantAtPeak,
        "fixed" => {
            r.check("sphere.compliance_m_per_n", fixed > 0.0, "must be > 0 for the fixed rule")?;
            ComplianceRule::Fixed(fixed)
        }
        other => {
            return Err(r.error(
                "sphere.compliance_rule",
                &format!("has unknown value `{other}`"),
            ))
        }
    };

    let impact_point = r.point("impact.point")?;
    let impact_velocity: f64 = r.parse("impact.velocity_m_s")?;
    r.check("impact.velocity_m_s", impact_velocity > 0.0, "must be > 0")?;
    let mut point_fractions = [0.0; 4];
    for (i, f) in point_fractions.iter_mut().enumerate() {
        let k = ["points.p1_frac", "points.p2_frac", "points.p3_frac", "points.p4_frac"][i];
        *f = r.parse(k)?;
        r.check(k, (0.0..=1.0).contains(f), "must lie in [0, 1]")?;
    }
    let f_cut_hz = r.positive("rom.f_cut_hz")?;
    let dt = r.positive("integration.dt_s")?;
    let t_end: f64 = r.parse("integration.t_end_s")?;
    r.check("integration.t_end_s", t_end >= dt, "must be >= integration.dt_s")?;
    let record_every: usize = r.parse("integration.record_every")?;
    r.check("integration.record_every", record_every >= 1, "must be >= 1")?;
    let contact = ContactOptions {
        penalty_scale: r.positive("contact.penalty_scale")?,
        complementarity_tol: r.positive("contact.complementarity_tol")?,
        max_iterations: r.parse("contact.max_iterations")?,
        gap_tol: r.parse("contact.gap_tol_m")?,
    };
    contact.validate().map_err(|e| r.wrap("contact.penalty_scale", e))?;
    let coalescence: f64 = r.parse("contact.coalescence_s")?;
    r.check("contact.coalescence_s", coalescence >= 0.0, "must be >= 0")?;
    let probes = r
        .raw("probes.points")
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| PointSpec::parse(s).ok_or_else(|| r.error("probes.points", &format!("has invalid point `{}`", s.trim()))))
        .collect::<Result<Vec<_>>>()?;
    let output_dir = PathBuf::from(r.raw("output.dir"));
    let downsample = r.choice("output.downsample", &[("true", true), ("false", false)])?;
    let fit_window = r.positive("post.fit_window_s")?;
    let oracle_rtol = r.positive("oracle.rtol")?;
    r.check("oracle.rtol", oracle_rtol <= 1e-8, "must be <= 1e-8")?;

    let mut scenario = Scenario {
        beam: BeamConfig {
            support,
            n_elem,
            geometry,
            material: beam_material,
            mass_style,
        },
        sphere: SphereConfig {
            mass: sphere_mass,
            radius,
            material: sphere_material,
            compliance_rule: rule,
        },
        impact_point,
        impact_velocity,
        point_fractions,
        f_cut_hz,
        dt,
        t_end,
        record_every,
        contact,
        coalescence,
        probes,
        output_dir,
        downsample,
        fit_window,
        oracle_rtol,
        echo: String::new(),
        lines: r.values.iter().map(|(k, v)| (*k, v.0)).collect(),
    };
    let span = scenario.beam.geometry.length;
    for (key, p) in std::iter::once(("impact.point", &scenario.impact_point))
        .chain(scenario.probes.iter().map(|p| ("probes.points", p)))
    {
        let x = scenario.coordinate(p);
        r.check(key, (0.0..=span).contains(&x), "must lie within the beam span")?;
    }
    scenario.echo = SCHEMA
        .iter()
        .map(|s| format!("{} = {}\n", s.key, r.raw(s.key)))
        .collect();
    Ok(scenario)
}

/// Models and reduced models derived from a scenario.
#[derive(Debug, Clone)]
pub struct BuiltScenario {
    pub scenario: Scenario,
    /// Beam with its contact dof as the only boundary dof.
    pub beam_model: Arc<AssembledModel>,
    pub impact: SnappedPoint,
    pub beam_basis: ModalBasis,
    pub retained: RetainedModes,
    pub sphere_spec: SphereSpec,
    pub law: HertzLaw,
    pub setup: ImpactSetup,
}

impl Scenario {
    pub fn hertz_law(&self) -> Result<HertzLaw> {
        HertzLaw::new(&self.sphere.material, &self.beam.material, self.sphere.radius)
    }

    pub fn sphere_spec(&self) -> Result<SphereSpec> {
        let law = self.hertz_law()?;
        let c = self
            .sphere
            .compliance_rule
            .compliance(&law, self.sphere.mass, self.impact_velocity);
        SphereSpec::new(self.sphere.mass, self.sphere.radius, c)
    }

    /// Full beam model without a boundary.
    pub fn beam_model(&self) -> Result<AssembledModel> {
        assemble_beam(
            self.beam.n_elem,
            &self.beam.material,
            &self.beam.geometry,
            self.beam.support,
            self.beam.mass_style,
        )
    }

    pub fn sphere_rom(&self) -> Result<ReducedModel> {
        let model = Arc::new(assemble_sphere(&self.sphere_spec()?)?);
        let basis = solve_modes(&model)?;
        build_rom(model, &basis, &select_retained(&basis, 0.0)?)
    }

    pub fn build(&self) -> Result<BuiltScenario> {
        let full = self.beam_model()?;
        let (model, impact) = full.with_contact_at(self.coordinate(&self.impact_point))?;
        let probes = self
            .probes
            .iter()
            .map(|p| {
                let snapped = model.transverse_dof_near(self.coordinate(p))?;
                Ok(Probe {
                    label: p.name(),
                    dof: snapped.dof,
                    position: snapped.position,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let model = Arc::new(model);
        let basis = solve_modes(&model)?;
        let first_elastic = (basis.rigid_count() < basis.n_modes())
            .then(|| basis.frequency_hz(basis.rigid_count()))
            .unwrap_or(f64::INFINITY);
        if !(self.f_cut_hz > first_elastic) {
            return Err(Error::Config {
                line: self.line_of("rom.f_cut_hz"),
                key: "rom.f_cut_hz".into(),
                message: format!("must exceed the first elastic frequency {first_elastic:.1} Hz"),
            });
        }
        let retained = select_retained(&basis, self.f_cut_hz)?;
        let beam = build_rom(model.clone(), &basis, &retained)?;
        let setup = ImpactSetup {
            sphere: self.sphere_rom()?,
            beam,
            impact_speed: self.impact_velocity,
            initial_gap: 0.0,
            dt: self.dt,
            t_end: self.t_end,
            record_every: self.record_every,
            options: self.contact,
            probes,
            coalescence: self.coalescence,
        };
        Ok(BuiltScenario {
            scenario: self.clone(),
            beam_model: model,
            impact,
            beam_basis: basis,
            retained,
            sphere_spec: self.sphere_spec()?,
            law: self.hertz_law()?,
            setup,
        })
    }
}

impl BuiltScenario {
    /// φ_k at a beam dof for every retained mode.
    pub fn shape_at(&self, dof: usize) -> Vec<f64> {
        self.retained
            .indices()
            .iter()
            .map(|&k| self.beam_basis.value(k, dof))
            .collect()
    }

    /// Hertz reference problem on the same retained modes, sampled like the
    /// recorded simulation. `rigid_target` drops the beam.
    pub fn oracle_setup(&self, rigid_target: bool) -> OracleSetup {
        let s = &self.scenario;
        let beam = (!rigid_target).then(|| {
            OracleBeam::from_basis(
                &self.beam_model,
                &self.beam_basis,
                &self.retained,
                self.impact.dof,
                &self.setup.probes,
            )
        });
        OracleSetup {
            sphere_mass: s.sphere.mass,
            law: self.law,
            impact_speed: s.impact_velocity,
            beam,
            probes: if rigid_target { Vec::new() } else { self.setup.probes.clone() },
            sample_interval: s.dt * s.record_every as f64,
            t_end: s.t_end,
            coalescence: s.coalescence,
            rtol: s.oracle_rtol,
        }
    }
}

struct Reader {
    values: BTreeMap<&'static str, (usize, String)>,
}

impl Reader {
    fn line(&self, key: &str) -> usize {
        self.values.get(key).map_or(0, |v| v.0)
    }

    fn raw(&self, key: &str) -> String {
        match self.values.get(key) {
            Some((_, v)) => v.clone(),
            None => SCHEMA
                .iter()
                .find(|s| s.key == key)
                .and_then(|s| s.default)
                .unwrap_or_default()
                .to_string(),
        }
    }

    fn error(&self, key: &str, message: &str) -> Error {
        Error::Config {
            line: self.line(key),
            key: key.to_string(),
            message: message.to_string(),
        }
    }

    fn wrap(&self, key: &str, e: Error) -> Error {
        self.error(key, &format!("is invalid: {e}"))
    }

    fn check(&self, key: &str, ok: bool, message: &str) -> Result<()> {
        if ok {
            Ok(())
        } else {
            Err(self.error(key, message))
        }
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.raw(key);
        raw.parse()
            .map_err(|_| self.error(key, &format!("has unparseable value `{raw}`")))
    }

    fn positive(&self, key: &str) -> Result<f64> {
        let v: f64 = self.parse(key)?;
        self.check(key, v > 0.0 && v.is_finite(), "must be > 0")?;
        Ok(v)
    }

    fn choice<T: Copy>(&self, key: &str, options: &[(&str, T)]) -> Result<T> {
        let raw = self.raw(key);
        options
            .iter()
            .find(|(name, _)| *name == raw)
            .map(|(_, v)| *v)
            .ok_or_else(|| {
                let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                self.error(key, &format!("must be one of {}, got `{raw}`", names.join(" | ")))
            })
    }

    fn material(&self, section: &str, density: Option<f64>) -> Result<Material> {
        let e = self.positive(&format!("{section}.elastic_modulus_pa"))?;
        let nu: f64 = self.parse(&format!("{section}.poisson_ratio"))?;
        let rho = match density {
            Some(rho) => rho,
            None => self.positive(&format!("{section}.density_kg_m3"))?,
        };
        Material::new(e, nu, rho).map_err(|err| self.wrap(&format!("{section}.poisson_ratio"), err))
    }

    fn point(&self, key: &str) -> Result<PointSpec> {
        let raw = self.raw(key);
        PointSpec::parse(&raw).ok_or_else(|| self.error(key, &format!("has invalid point `{raw}`")))
    }
}
