//! Command implementations. Each builds a [`Report`]; nothing here prints.

use std::fs;
use std::path::Path;

use serde_json::Value;

use ebmod_core::linsys::Index;
use ebmod_core::{
    end_set_distance_over, end_set_member, face_collection, gauge, min_norm_point, modulus_formula,
    regularity_probe, sandwich_report, Body, Builtin, Details, FaceMode, LinearSystem,
    MinNormResult, PointSet, ProbeConfig, Provenance, SamplingConfig, Scenario, ScenarioKind,
    Tolerances, Vector, Verdict,
};

use crate::problem::{self, Problem, ProblemFile};
use crate::report::{index_sets, num, num_sets, nums, Quantity, Report};
use crate::{
    AnalyzeArgs, Cli, CliError, Command, EndsetArgs, LinsysArgs, MinnormArgs, ModeArg, Point,
    Source,
};

pub fn dispatch(cli: &Cli, echo: Vec<String>) -> Result<Report, CliError> {
    match &cli.command {
        Command::Endset(a) => endset(cli, a, echo),
        Command::Analyze(a) => analyze(cli, a, echo),
        Command::Linsys(a) => linsys(cli, a, echo),
        Command::Minnorm(a) => minnorm(cli, a, echo),
        Command::VerifyPaper(a) => crate::verify::verify_paper(&cli.global, a.perturb, echo),
    }
}

/// A parsed input: a problem file or a builtin name.
pub struct Input {
    pub name: String,
    pub bytes: Vec<u8>,
    pub file: Option<ProblemFile>,
    pub builtin: Option<Builtin>,
}

fn read_file(path: &Path) -> Result<(String, Vec<u8>, ProblemFile), CliError> {
    let bytes = fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|e| CliError::Input(format!("{}: not UTF-8: {e}", path.display())))?;
    let file = ProblemFile::parse(text)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok((path.display().to_string(), bytes, file))
}

fn parse_builtin(name: &str) -> Result<Builtin, CliError> {
    Ok(name.parse::<Builtin>()?)
}

pub fn load(src: &Source) -> Result<Input, CliError> {
    if let Some(name) = &src.builtin {
        let b = parse_builtin(name)?;
        return Ok(Input {
            name: format!("builtin:{}", b.name()),
            bytes: format!("builtin:{}", b.name()).into_bytes(),
            file: None,
            builtin: Some(b),
        });
    }
    let path = src
        .file
        .as_ref()
        .ok_or_else(|| CliError::Input("give a problem file or --builtin".into()))?;
    let (name, bytes, file) = read_file(path)?;
    let builtin = match &file.problem {
        Problem::Builtin { name } => Some(parse_builtin(name)?),
        _ => None,
    };
    Ok(Input {
        name,
        bytes,
        file: Some(file),
        builtin,
    })
}

fn point_set_input(path: &Path) -> Result<(String, Vec<u8>, ProblemFile, PointSet), CliError> {
    let (name, bytes, file) = read_file(path)?;
    let a = match &file.problem {
        Problem::PointSet { points, labels } => problem::point_set(points, labels)?,
        _ => {
            return Err(CliError::Input(format!(
                "{name}: field 'kind': expected point_set"
            )))
        }
    };
    Ok((name, bytes, file, a))
}

fn base_point(input: &Input, flag: Option<&Point>) -> Result<Option<Vector>, CliError> {
    if let Some(p) = flag {
        return Ok(Some(Vector::new(p.0.clone())?));
    }
    match &input.file {
        Some(f) => f.base_point(),
        None => Ok(None),
    }
}

fn require_base(input: &Input, flag: Option<&Point>) -> Result<Vector, CliError> {
    if let Some(b) = base_point(input, flag)? {
        return Ok(b);
    }
    match input.builtin {
        Some(b) => Ok(Vector::new(b.base_point())?),
        None => Err(CliError::Input(format!(
            "{}: field 'base_point': required (or pass --point)",
            input.name
        ))),
    }
}

pub fn scenario(
    input: &Input,
    point: Option<&Point>,
    tol: &Tolerances,
) -> Result<Scenario, CliError> {
    if let Some(b) = input.builtin {
        let s = Scenario::builtin(b)?;
        return Ok(match base_point(input, point)? {
            Some(p) => s.at(p, tol)?,
            None => s,
        });
    }
    let file = input.file.as_ref().expect("non-builtin input has a file");
    let base = require_base(input, point)?;
    Ok(match &file.problem {
        Problem::MaxFunction { pieces, level_set } => {
            let phi = problem::max_function(pieces)?;
            let level = level_set.as_deref().map(problem::level_set).transpose()?;
            Scenario::max_function(phi, level, base)?
        }
        Problem::LinearSystemFinite { rows } => {
            Scenario::linear_system(problem::finite_system(rows)?, base)?
        }
        Problem::LinearSystemCurve { curve } => {
            Scenario::linear_system(problem::curve_system(curve)?, base)?
        }
        Problem::PointSet { .. } => {
            return Err(CliError::Input(format!(
                "{}: point sets have no modulus to analyze; use the endset command",
                input.name
            )))
        }
        Problem::Builtin { .. } => unreachable!("handled above"),
    })
}

fn system(input: &Input) -> Result<LinearSystem, CliError> {
    if let Some(b) = input.builtin {
        return match b {
            Builtin::CircleWeighted => Ok(ebmod_core::builtins::circle_weighted()),
            Builtin::CircleUnit => Ok(ebmod_core::builtins::circle_unit()),
            other => Err(CliError::Input(format!(
                "builtin '{other}' is not a linear system"
            ))),
        };
    }
    match &input.file.as_ref().expect("file").problem {
        Problem::LinearSystemFinite { rows } => problem::finite_system(rows),
        Problem::LinearSystemCurve { curve } => problem::curve_system(curve),
        _ => Err(CliError::Input(format!(
            "{}: field 'kind': expected linear_system_finite or linear_system_curve",
            input.name
        ))),
    }
}

pub fn index_value(i: &Index) -> Value {
    match i {
        Index::Row(r) => Value::from(*r),
        Index::Param(t) => num(*t),
    }
}

pub fn index_list(s: &[Index]) -> Value {
    Value::Array(s.iter().map(index_value).collect())
}

fn index_lists(sets: &[Vec<Index>]) -> Value {
    Value::Array(sets.iter().map(|s| index_list(s)).collect())
}

fn fmt_point(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|c| num(*c).to_string()).collect();
    format!("({})", parts.join(", "))
}

fn record_tolerances(r: &mut Report, tol: &Tolerances) {
    r.config("eq_tol", format!("{:e}", tol.eq_tol));
    r.config("active_tol", format!("{:e}", tol.active_tol));
    r.config("lp_margin", format!("{:e}", tol.lp_margin));
    r.config("dist_tol", format!("{:e}", tol.dist_tol));
}

fn record_min_norm(r: &mut Report, prefix: &str, m: &MinNormResult, p: Provenance) {
    r.certificate(
        &format!("{prefix}_weights"),
        Quantity::new(nums(&m.weights), p).labeled("convex weights of the nearest point"),
    );
    r.certificate(
        &format!("{prefix}_point"),
        Quantity::new(nums(m.point.as_slice()), p),
    );
}

fn endset(cli: &Cli, a: &EndsetArgs, echo: Vec<String>) -> Result<Report, CliError> {
    let (name, bytes, file, points) = point_set_input(&a.file)?;
    let tol = cli.global.tolerances(Some(&file))?;
    let mut r = Report::new(echo, &name, &bytes);
    record_tolerances(&mut r, &tol);
    let (mode, prov) = match a.mode {
        ModeArg::Enumerate => (FaceMode::Enumerate, Provenance::Computed),
        ModeArg::Sample => (
            FaceMode::Sample {
                directions: a.directions,
                seed: cli.global.seed,
            },
            Provenance::Sampled,
        ),
    };
    r.config("mode", format!("{:?}", a.mode).to_lowercase());
    if a.mode == ModeArg::Sample {
        r.config("directions", a.directions.to_string());
        r.config("seed", cli.global.seed.to_string());
    }
    let collection = face_collection(&points, mode, &tol)?;
    if collection.under_approximation {
        r.warn(
            "sample mode: the face collection may miss faces, so the distance is an upper estimate",
        );
    }
    let sets = collection.index_sets();
    r.quantity(
        "faces",
        Quantity::new(index_sets(&sets), prov)
            .labeled("exposed faces with positive support value (point indices)"),
    );
    r.certificate(
        "face_witnesses",
        Quantity::new(
            Value::Array(
                collection
                    .faces
                    .iter()
                    .map(|f| nums(f.witness.as_slice()))
                    .collect(),
            ),
            prov,
        )
        .labeled("w with <a, w> = 1 on the face and < 1 off it"),
    );
    r.certificate(
        "face_margins",
        Quantity::new(
            Value::Array(collection.faces.iter().map(|f| num(f.margin)).collect()),
            prov,
        ),
    );
    let best = end_set_distance_over(&points, collection, &tol)?;
    r.scalar(
        "end_set_distance",
        best.distance,
        prov,
        "distance from the origin to the end set",
    );
    if let Some(face) = &best.face {
        r.quantity(
            "nearest_face",
            Quantity::new(index_sets(std::slice::from_ref(&face.indices)), prov),
        );
        let pts: Vec<Vec<f64>> = face
            .indices
            .iter()
            .map(|&i| points.get(i).as_slice().to_vec())
            .collect();
        r.quantity("nearest_face_points", Quantity::new(num_sets(&pts), prov));
    }
    if let Some(m) = &best.nearest {
        record_min_norm(&mut r, "nearest", m, prov);
    }
    for Point(x) in &a.point {
        let member = end_set_member(Body::Polytope(&points), x, &tol)?;
        r.fact(&format!("member{}", fmt_point(x)), member.to_string());
    }
    for Point(x) in &a.gauge {
        let g = gauge(Body::Polytope(&points), x, &tol)?;
        r.scalar(
            &format!("gauge{}", fmt_point(x)),
            g.value,
            Provenance::Computed,
            "gauge of co(C and the origin)",
        );
    }
    Ok(r)
}

fn minnorm(cli: &Cli, a: &MinnormArgs, echo: Vec<String>) -> Result<Report, CliError> {
    let (name, bytes, file, points) = point_set_input(&a.file)?;
    let tol = cli.global.tolerances(Some(&file))?;
    let mut r = Report::new(echo, &name, &bytes);
    record_tolerances(&mut r, &tol);
    let m = min_norm_point(&points, &tol)?;
    r.scalar(
        "distance",
        m.distance,
        Provenance::Computed,
        "distance from the origin to the convex hull",
    );
    r.scalar(
        "wolfe_gap",
        m.wolfe_gap(&points),
        Provenance::Computed,
        "largest violation of <x, a_i - x> >= 0",
    );
    record_min_norm(&mut r, "nearest", &m, Provenance::Computed);
    r.fact("certified", m.certify(&points, &tol).to_string());
    Ok(r)
}

fn sampling(cli: &Cli, a: &AnalyzeArgs) -> Result<SamplingConfig, CliError> {
    let mut cfg = cli.global.sampling();
    if let Some((r0, beta, m)) = a.shells {
        cfg.r0 = r0;
        cfg.beta = beta;
        cfg.shells = m;
    }
    if let Some(k) = a.dirs {
        cfg.directions = k;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn analyze(cli: &Cli, a: &AnalyzeArgs, echo: Vec<String>) -> Result<Report, CliError> {
    let input = load(&a.source)?;
    let tol = cli.global.tolerances(input.file.as_ref())?;
    let cfg = sampling(cli, a)?;
    let s = scenario(&input, a.source.point.as_ref(), &tol)?;
    let rep = sandwich_report(&s, &cfg, &tol)?;

    let mut r = Report::new(echo, &input.name, &input.bytes);
    record_tolerances(&mut r, &tol);
    r.config("base_point", fmt_point(s.base_point().as_slice()));
    r.config(
        "shells",
        format!("r0={:e} beta={} m={}", cfg.r0, cfg.beta, cfg.shells),
    );
    r.config(
        "directions",
        format!("{} + {} seeded", cfg.directions, cfg.random_extra),
    );
    r.config("seed", cfg.seed.to_string());
    if let Some(n) = s.name() {
        r.fact("scenario", n);
    }

    r.scalar(
        "lower",
        rep.lower.value,
        rep.lower.provenance,
        rep.lower.label,
    );
    r.scalar(
        "empirical_liminf",
        rep.empirical.liminf,
        Provenance::Sampled,
        "min of phi(x)/d(x, level set) over the innermost shells",
    );
    r.scalar(
        "upper",
        rep.upper.value,
        rep.upper.provenance,
        rep.upper.label,
    );
    let e = &rep.empirical;
    r.quantity(
        "shell_radii",
        Quantity::new(nums(&e.radii), Provenance::Sampled),
    );
    r.quantity(
        "shell_minima",
        Quantity::new(nums(&e.minima), Provenance::Sampled).labeled("min ratio per shell"),
    );
    r.quantity(
        "shell_counts",
        Quantity::new(
            Value::Array(e.counts.iter().map(|&c| Value::from(c)).collect()),
            Provenance::Sampled,
        ),
    );
    r.quantity(
        "positive_samples",
        Quantity::new(Value::from(e.positive_samples), Provenance::Sampled),
    );
    if e.extra_radii > 0 {
        r.quantity(
            "injected_radii",
            Quantity::new(Value::from(e.extra_radii), Provenance::Sampled),
        );
    }
    if e.skipped > 0 {
        r.warn(format!(
            "{} samples with phi > 0 but zero distance were skipped",
            e.skipped
        ));
    }
    if let Some(d) = &e.diagnostic {
        r.warn(d.clone());
    }
    r.fact("lower_vs_empirical", rep.lower_side.name());
    r.fact("empirical_vs_upper", rep.upper_side.name());
    r.fact("sandwich_holds", rep.holds().to_string());
    r.fact(
        "comparison_rule",
        "equal within max(2% of the larger, 1e-6)",
    );

    match &rep.details {
        Details::MaxFunction {
            lower,
            upper,
            exposed_covered,
        } => {
            r.quantity(
                "limiting_index_sets",
                Quantity::new(
                    index_sets(&lower.collection.index_sets),
                    Provenance::Sampled,
                )
                .labeled("piece sets seen persistently near the base point"),
            );
            if let Some((set, m)) = &lower.witness {
                r.quantity(
                    "lower_pieces",
                    Quantity::new(index_sets(std::slice::from_ref(set)), Provenance::Sampled),
                );
                record_min_norm(&mut r, "lower", m, Provenance::Sampled);
            }
            r.quantity(
                "exposed_piece_sets",
                Quantity::new(index_sets(&upper.exposed.piece_sets), Provenance::Computed)
                    .labeled("pieces whose gradients span an exposed face"),
            );
            if let Some(p) = &upper.pieces {
                r.quantity(
                    "upper_pieces",
                    Quantity::new(index_sets(std::slice::from_ref(p)), Provenance::Computed),
                );
            }
            if let Some(m) = &upper.end_set.nearest {
                record_min_norm(&mut r, "upper", m, Provenance::Computed);
            }
            if let Some(f) = &upper.end_set.face {
                r.certificate(
                    "upper_face_witness",
                    Quantity::new(nums(f.witness.as_slice()), Provenance::Computed),
                );
            }
            let covered: Vec<String> = exposed_covered.iter().map(bool::to_string).collect();
            r.fact("exposed_faces_sampled", covered.join(","));
            if let Some(d) = &lower.diagnostic {
                r.warn(d.clone());
            }
        }
        Details::LinearSystem { lower, formula } => {
            r.quantity(
                "limiting_index_sets",
                Quantity::new(index_lists(&lower.sets), Provenance::Sampled),
            );
            if let Some(set) = &lower.set {
                r.quantity(
                    "lower_indices",
                    Quantity::new(index_list(set), Provenance::Sampled),
                );
            }
            if let Some(m) = &lower.nearest {
                record_min_norm(&mut r, "lower", m, Provenance::Sampled);
            }
            record_formula(&mut r, formula);
            if let Some(d) = &lower.diagnostic {
                r.warn(d.clone());
            }
        }
        Details::StuWar { end_set } => {
            if let Some(f) = &end_set.face {
                r.quantity(
                    "upper_face",
                    Quantity::new(
                        index_sets(std::slice::from_ref(&f.indices)),
                        Provenance::Computed,
                    ),
                );
            }
            r.warn("the lower estimate is a reference value: no finite representation of this function is analyzed");
        }
    }
    if let ScenarioKind::LinearSystem {
        exact_distance: None,
        ..
    } = s.kind()
    {
        r.warn("distances to the solution set come from a polyhedral projection over the discretized index set");
    }
    Ok(r)
}

fn record_formula(r: &mut Report, f: &ebmod_core::ModulusFormula) {
    let c = &f.collection;
    r.quantity(
        "active_indices",
        Quantity::new(index_list(&c.active.indices), Provenance::Computed),
    );
    r.fact(
        "active_method",
        format!("{:?}", c.active.method).to_lowercase(),
    );
    if let Some(w) = &c.active.wide {
        r.quantity(
            "active_indices_wide",
            Quantity::new(index_list(w), Provenance::Computed)
                .labeled("active set at ten times the tolerance"),
        );
    }
    r.quantity(
        "index_collection",
        Quantity::new(index_lists(&c.sets), Provenance::Computed),
    );
    r.scalar(
        "modulus_formula",
        f.value,
        Provenance::Computed,
        "exact modulus under regularity, upper estimate otherwise",
    );
    if let Some(s) = &f.set {
        r.quantity(
            "formula_indices",
            Quantity::new(index_list(s), Provenance::Computed),
        );
    }
    if let Some(m) = &f.nearest {
        record_min_norm(r, "formula", m, Provenance::Computed);
    }
    r.certificate(
        "collection_witnesses",
        Quantity::new(
            Value::Array(
                c.faces
                    .faces
                    .iter()
                    .map(|f| nums(f.witness.as_slice()))
                    .collect(),
            ),
            Provenance::Computed,
        ),
    );
}

fn linsys(cli: &Cli, a: &LinsysArgs, echo: Vec<String>) -> Result<Report, CliError> {
    let input = load(&a.source)?;
    let tol = cli.global.tolerances(input.file.as_ref())?;
    let sys = system(&input)?;
    let x = require_base(&input, a.source.point.as_ref())?;
    let mut r = Report::new(echo, &input.name, &input.bytes);
    record_tolerances(&mut r, &tol);
    r.config("base_point", fmt_point(x.as_slice()));
    r.config("seed", cli.global.seed.to_string());
    let residual = sys.residual(x.as_slice())?;
    if residual > tol.active_tol * (1.0 + x.norm()) {
        return Err(CliError::Input(format!(
            "base point {} is infeasible (residual {residual:e})",
            fmt_point(x.as_slice())
        )));
    }
    let formula = modulus_formula(&sys, x.as_slice(), &tol)?;
    record_formula(&mut r, &formula);

    let cfg = ProbeConfig {
        samples: a.samples,
        seed: cli.global.seed,
        ..ProbeConfig::new(a.probe.into())
    };
    r.config("probe", cfg.kind.name());
    r.config("probe_samples", cfg.samples.to_string());
    r.config("probe_steps", format!("{:?}", cfg.epsilons));
    let probe = regularity_probe(&sys, x.as_slice(), &cfg, &tol)?;
    match &probe.verdict {
        Verdict::NoCounterexample { tested } => {
            r.fact(
                "probe_verdict",
                format!("no counterexample in {tested} directions (not a proof of regularity)"),
            );
        }
        Verdict::Counterexample(c) => {
            r.fact("probe_verdict", "counterexample");
            let verified = c.verify(&sys, probe.kind, &tol)?;
            r.fact("counterexample_verified", verified.to_string());
            r.certificate(
                "counterexample_direction",
                Quantity::new(nums(c.direction.as_slice()), Provenance::Sampled),
            );
            r.certificate(
                "counterexample_step",
                Quantity::new(num(c.epsilon), Provenance::Sampled),
            );
            r.certificate(
                "counterexample_point",
                Quantity::new(nums(c.point.as_slice()), Provenance::Sampled),
            );
            r.certificate(
                "counterexample_measure",
                Quantity::new(num(c.measure), Provenance::Sampled)
                    .labeled("residual, or distance ratio for the acq probe"),
            );
        }
    }
    Ok(r)
}
