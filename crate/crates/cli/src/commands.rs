use clap::{Args, Subcommand, ValueEnum};
use spongelab::connectivity::max_connectivity_probe;
use spongelab::constants::{
    doubling_after_filling, filling_parameters, isoperimetric_constants, tau_threshold, uniform_ahlfors_constant,
    verify_filling, FillingInputs, ANCHOR_EPS1,
};
use spongelab::graph::TileGraph;
use spongelab::isoperimetry::tiled_isoperimetric_scan;
use spongelab::measure::{ahlfors_scan, filling_density_check, sample_sponge_points};
use spongelab::rational::{parse_q, q, to_pq, Q};
use spongelab::report::{Check, Report};
use spongelab::suites::*;
use spongelab::uniformity::{
    bounded_turning, sponge_collection_separation, uniformity_threshold, Clearance, DomainGrid,
};
use spongelab::SpongeSpec;

use crate::{Cli, CliError, Verb};

type R<T> = Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> R<T> {
    Err(CliError::Usage(msg.into()))
}

fn rat(s: &str) -> R<Q> {
    parse_q(s).map_err(|e| CliError::Usage(format!("bad rational '{s}': {e}")))
}

fn rats(s: &str) -> R<Vec<Q>> {
    s.split(',').map(|t| rat(t.trim())).collect()
}

fn coords(s: &str) -> R<Vec<u64>> {
    s.split(',')
        .map(|t| t.trim().parse::<u64>().map_err(|e| CliError::Usage(format!("bad coordinate '{t}': {e}"))))
        .collect()
}

fn dims(s: &str) -> R<Vec<usize>> {
    s.split('x')
        .map(|t| t.trim().parse::<usize>().map_err(|e| CliError::Usage(format!("bad grid size '{s}': {e}"))))
        .collect()
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum MeasureCheck {
    Separation,
    Volume,
    HalfSlice,
    Ahlfors,
    Density,
    Filling,
}

#[derive(Args, Debug)]
pub struct MeasureArgs {
    #[arg(long, value_enum)]
    pub check: MeasureCheck,
    #[arg(long, default_value_t = 50)]
    pub samples: usize,
    /// Comma-separated rational radii (ahlfors, density).
    #[arg(long)]
    pub radii: Option<String>,
    /// Obstacles excluded from the density sum.
    #[arg(long, default_value_t = 1)]
    pub exclude: usize,
    /// Filling radius.
    #[arg(long, default_value = "1/2")]
    pub r: String,
    /// Filling parameter delta (default: the largest power of 1/2 meeting the annulus bound).
    #[arg(long)]
    pub delta: Option<String>,
    #[arg(long, default_value = "1/5")]
    pub eps: String,
    /// Lower bound for the density deficit beyond the sequence.
    #[arg(long, default_value = "0")]
    pub tail: String,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum ConnectCheck {
    Quasiconvexity,
    Probe,
    Upgrade,
}

#[derive(Args, Debug)]
pub struct ConnectArgs {
    #[arg(long, value_enum)]
    pub check: ConnectCheck,
    /// Graph level (defaults to the verification depth).
    #[arg(long)]
    pub level: Option<usize>,
    /// Required bound on the quasiconvexity constant.
    #[arg(long)]
    pub bound: Option<f64>,
    /// Probe endpoints as comma-separated tile coordinates.
    #[arg(long)]
    pub x: Option<String>,
    #[arg(long)]
    pub y: Option<String>,
    /// Obstacle tiles, ';'-separated coordinate lists.
    #[arg(long)]
    pub obstacle: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    /// Length constant C (probe); the upgrade uses 2 Lambda unless given.
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long, default_value = "1/4")]
    pub delta: String,
    #[arg(long, default_value_t = 400)]
    pub candidates: usize,
    #[arg(long, default_value_t = 50)]
    pub count: usize,
    #[arg(long)]
    pub allow_jumps: bool,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum IsoCheck {
    WeakType,
    Tiled,
}

#[derive(Args, Debug)]
pub struct IsoperimArgs {
    /// Check every subset of a grid such as 3x3.
    #[arg(long)]
    pub projection_exhaustive: Option<String>,
    /// Check random subsets of a grid such as 9x9.
    #[arg(long)]
    pub projection_random: Option<String>,
    #[arg(long, value_enum)]
    pub check: Option<IsoCheck>,
    /// Random subsets, functions, or sets per tile.
    #[arg(long)]
    pub count: Option<usize>,
    /// Levels lambda per function (weak-type).
    #[arg(long, default_value_t = 10)]
    pub levels: usize,
    #[arg(long)]
    pub level: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub tile_level: usize,
    #[arg(long, default_value = "1/8")]
    pub tau: String,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
pub enum UniformCheck {
    Separation,
    Turning,
    Cigar,
}

#[derive(Args, Debug)]
pub struct UniformArgs {
    #[arg(long, value_enum)]
    pub check: UniformCheck,
    /// Polygon JSON file: [[x, y], ...] (turning).
    #[arg(long)]
    pub polygon: Option<std::path::PathBuf>,
    #[arg(long)]
    pub level: Option<usize>,
    #[arg(long)]
    pub x: Option<String>,
    #[arg(long)]
    pub y: Option<String>,
    #[arg(long, default_value_t = 64.0)]
    pub a_max: f64,
}

#[derive(Args, Debug)]
pub struct HeisArgs {
    #[command(subcommand)]
    pub action: HeisAction,
}

#[derive(Subcommand, Debug)]
pub enum HeisAction {
    /// Group law, left invariance and homogeneity on random points.
    Identities {
        #[arg(long, default_value_t = 100_000)]
        count: usize,
    },
    /// Build a Heisenberg sponge state and verify sparsity.
    Net {
        #[arg(long, default_value_t = 2)]
        levels: usize,
        #[arg(long, default_value_t = 600)]
        samples: usize,
        #[arg(long)]
        inject_fault: bool,
    },
    /// Monte Carlo Koranyi ball volumes at r and 2r.
    Volume {
        #[arg(long, default_value_t = 0.5)]
        r: f64,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
    },
}

#[derive(Args, Debug)]
pub struct ConstantsArgs {
    #[command(subcommand)]
    pub action: ConstAction,
}

#[derive(Subcommand, Debug)]
pub enum ConstAction {
    /// tau_0 = min{1, (delta/(2 Delta))^{pq/(q-p)}}.
    Tau {
        #[arg(long, default_value = "1")]
        p: String,
        #[arg(long, default_value = "2")]
        q: String,
        #[arg(long, default_value = "1/2")]
        delta: String,
        #[arg(long, default_value = "1")]
        big_delta: String,
    },
    /// (C_S, Lambda) from (D, C_B, Lambda_B).
    Isoperimetric {
        #[arg(long, default_value = "2")]
        d: String,
        #[arg(long, default_value = "1")]
        c_b: String,
        #[arg(long, default_value = "1")]
        lambda_b: String,
    },
    /// Dependency chain (delta', tau_0, tau, m, n, eps_1) with round trip.
    Filling {
        /// JSON file with the inputs; defaults are used for absent fields.
        #[arg(long)]
        inputs: Option<std::path::PathBuf>,
    },
    /// D / (1 - eps).
    Doubling {
        #[arg(long, default_value = "2")]
        d: String,
        #[arg(long, default_value = "1/2")]
        eps: String,
    },
    /// (4A)^Q C_AR.
    Ahlfors {
        #[arg(long, default_value = "1")]
        a: String,
        #[arg(long, default_value = "2")]
        big_q: String,
        #[arg(long, default_value = "1")]
        c_ar: String,
    },
}

fn load_spec(cli: &Cli) -> R<SpongeSpec> {
    let g = &cli.global;
    let spec = match (&g.spec, g.dim, &g.n) {
        (Some(path), _, _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read spec {}: {e}", path.display())))?;
            serde_json::from_str::<SpongeSpec>(&text)
                .map_err(|e| CliError::Usage(format!("invalid spec {}: {e}", path.display())))?
        }
        (None, Some(d), Some(n)) => SpongeSpec::full(d, n.clone())?,
        _ => return usage("a sponge is required: pass --spec PATH or --dim and --n"),
    };
    Ok(spec)
}

fn depth_of(cli: &Cli, spec: &SpongeSpec) -> R<usize> {
    let depth = cli.global.depth.unwrap_or(spec.depth());
    if depth > spec.depth() {
        return usage(format!("--depth {depth} exceeds the spec truncation depth {}", spec.depth()));
    }
    Ok(depth)
}

fn graph(cli: &Cli, spec: &SpongeSpec, level: usize) -> R<TileGraph> {
    Ok(TileGraph::build(spec, level, cli.global.max_vertices)?)
}

fn tile_cap(cli: &Cli, spec: &SpongeSpec, level: usize) -> R<()> {
    let count = spec.live_tile_count(level)?;
    if count > cli.global.max_tiles.into() {
        return usage(format!("{count} live tiles at level {level} exceed --max-tiles {}", cli.global.max_tiles));
    }
    Ok(())
}

pub fn run(cli: &Cli, report: &mut Report) -> R<()> {
    match &cli.verb {
        Verb::Build => build(cli, report),
        Verb::Measure(a) => measure(cli, a, report),
        Verb::Connect(a) => connect(cli, a, report),
        Verb::Isoperim(a) => isoperim(cli, a, report),
        Verb::Uniform(a) => uniform(cli, a, report),
        Verb::Heis(a) => heis(cli, &a.action, report),
        Verb::Constants(a) => constants(&a.action, report),
        Verb::Suite => suite(cli.global.seed, report),
    }
}

fn build(cli: &Cli, report: &mut Report) -> R<()> {
    let spec = load_spec(cli)?;
    let depth = depth_of(cli, &spec)?;
    tile_cap(cli, &spec, depth)?;
    for k in 0..=depth {
        let removed = if k == 0 { 0 } else { spec.removed_boxes(k)?.len() };
        report.push(
            Check::measured(format!("level {k}"), "Def. sponge: S_k = S_{k-1} minus central subcubes")
                .with("scale", to_pq(&spec.scale(k)?))
                .with("cells_per_axis", spec.cells_per_axis(k))
                .with("live_tiles", spec.live_tile_count(k)?.to_string())
                .with("removed_boxes", removed),
        );
    }
    report.push(volume_check(&spec, depth)?);
    Ok(())
}

fn measure(cli: &Cli, a: &MeasureArgs, report: &mut Report) -> R<()> {
    let spec = load_spec(cli)?;
    let depth = depth_of(cli, &spec)?;
    let seed = cli.global.seed;
    match a.check {
        MeasureCheck::Separation => {
            if depth == 0 {
                return usage("separation needs depth >= 1");
            }
            report.extend(separation_suite(&[spec.dim()], &[spec.seq().to_vec()], &[depth])?)
        }
        MeasureCheck::Volume => report.push(volume_check(&spec, depth)?),
        MeasureCheck::HalfSlice => report.push(half_slice_check(&spec, depth)?),
        MeasureCheck::Ahlfors => {
            let radii = rats(a.radii.as_deref().unwrap_or("1/4,1/10,1/40"))?;
            let pts = sample_sponge_points(&spec, depth, a.samples, seed)?;
            let scan = ahlfors_scan(&spec, &pts, &radii, depth)?;
            let pass = scan.c_min > Q::from_integer(0.into()) && scan.within_bound && scan.upper_trivial_ok;
            report.push(
                Check::verdict("Ahlfors regularity scan", "Lemma arreg: c r^d <= mu(B(x, r) cap S) <= C r^d", pass)
                    .with("scan", &scan)
                    .with("witness_min", &pts[scan.argmin.0])
                    .with("witness_max", &pts[scan.argmax.0]),
            );
        }
        MeasureCheck::Density => {
            let radii = match &a.radii {
                Some(r) => rats(r)?,
                None => (1..=depth.min(3)).map(|k| spec.scale(k)).collect::<Result<_, _>>()?,
            };
            report.extend(density_table(&spec, &radii, a.exclude, a.samples, seed)?);
        }
        MeasureCheck::Filling => {
            let r = rat(&a.r)?;
            let eps = rat(&a.eps)?;
            let delta = match &a.delta {
                Some(d) => rat(d)?,
                None => filling_delta(spec.dim(), &eps)?,
            };
            let spec = spec.with_depth(depth)?;
            let pts = sample_sponge_points(&spec, depth, a.samples, seed)?;
            let fill = filling_density_check(&spec, &r, &delta, &eps, &pts, &rat(&a.tail)?)?;
            report.push(
                Check::verdict("filling density", A_FILLING, fill.pass)
                    .with("delta", to_pq(&delta))
                    .with("eps", to_pq(&eps))
                    .with("r", to_pq(&r))
                    .with("level_k", fill.level)
                    .with("worst_ratio", to_pq(&fill.worst_ratio))
                    .with("worst_ratio_f64", fill.worst_ratio_f64)
                    .with("samples", fill.samples)
                    .with_witness(&fill.witness),
            );
        }
    }
    Ok(())
}

fn connect(cli: &Cli, a: &ConnectArgs, report: &mut Report) -> R<()> {
    let spec = load_spec(cli)?;
    let level = a.level.unwrap_or(depth_of(cli, &spec)?);
    let g = graph(cli, &spec, level)?;
    match a.check {
        ConnectCheck::Quasiconvexity => {
            if let (Some(x), Some(y)) = (&a.x, &a.y) {
                report.push(quasiconvexity_pair(&g, &coords(x)?, &coords(y)?)?);
            } else {
                report.push(quasiconvexity_full(&g, a.bound)?.0);
            }
        }
        ConnectCheck::Probe => {
            let (Some(x), Some(y)) = (&a.x, &a.y) else {
                return usage("probe needs --x and --y tile coordinates");
            };
            let (x, y) = (g.require(&coords(x)?)?, g.require(&coords(y)?)?);
            let mut e = Vec::new();
            if let Some(obs) = &a.obstacle {
                for t in obs.split(';').filter(|t| !t.trim().is_empty()) {
                    e.push(g.require(&coords(t)?)?);
                }
            }
            let c = a.c.unwrap_or(4.0);
            let delta = spongelab::rational::to_f64(&rat(&a.delta)?);
            let probe = max_connectivity_probe(&g, x, y, &e, a.p, c, delta, a.allow_jumps)?;
            let witness = probe.infeasible.clone();
            report.push(
                Check::verdict("max-connectivity probe", "Def. finemax: Len <= C d, int 1_E + Gap <= delta tau^{1/p} d", probe.pass)
                    .with("probe", &probe)
                    .with_witness(witness),
            );
        }
        ConnectCheck::Upgrade => {
            let (lambda_check, lambda) = quasiconvexity_full(&g, None)?;
            report.push(lambda_check);
            let c = a.c.unwrap_or(2.0 * lambda);
            let up = exponent_upgrade_suite(&g, c, &rat(&a.delta)?, a.candidates, a.count, cli.global.seed)?;
            report.push(up.check());
        }
    }
    Ok(())
}

fn isoperim(cli: &Cli, a: &IsoperimArgs, report: &mut Report) -> R<()> {
    let seed = cli.global.seed;
    let mut any = false;
    if let Some(d) = &a.projection_exhaustive {
        report.push(projection_suite(&dims(d)?, None, seed)?);
        any = true;
    }
    if let Some(d) = &a.projection_random {
        report.push(projection_suite(&dims(d)?, Some(a.count.unwrap_or(10_000)), seed)?);
        any = true;
    }
    if let Some(check) = a.check {
        let spec = load_spec(cli)?;
        let level = a.level.unwrap_or(depth_of(cli, &spec)?);
        let g = graph(cli, &spec, level)?;
        match check {
            IsoCheck::WeakType => report.push(weak_type_suite(&g, a.count.unwrap_or(100), a.levels, seed)?),
            IsoCheck::Tiled => {
                let scan = tiled_isoperimetric_scan(&spec, &g, a.tile_level, &rat(&a.tau)?, a.count.unwrap_or(20), seed)?;
                report.push(
                    Check::measured("tiled isoperimetric constant", "Lemma tiledisop: min(mu(E), mu(T \\ E)) <= C_T diam(T) P(E, T)")
                        .with("scan", &scan),
                );
            }
        }
        any = true;
    }
    if !any {
        return usage("isoperim needs --projection-exhaustive, --projection-random or --check");
    }
    Ok(())
}

fn uniform(cli: &Cli, a: &UniformArgs, report: &mut Report) -> R<()> {
    match a.check {
        UniformCheck::Turning => match &a.polygon {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("cannot read polygon {}: {e}", path.display())))?;
                let verts: Vec<[f64; 2]> =
                    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid polygon: {e}")))?;
                let t = bounded_turning(&verts)?;
                report.push(Check::measured("bounded turning", A_TURNING).with("c", t.c).with("samples", t.samples).with_witness(t.witness));
            }
            None => report.extend(turning_suite()?),
        },
        UniformCheck::Separation => {
            let spec = load_spec(cli)?;
            let depth = depth_of(cli, &spec)?;
            let s2 = sponge_collection_separation(&spec, depth)?;
            let bound = q(1, 9 * spec.dim() as i64);
            report.push(
                Check::verdict("relative separation of removed boxes", "Def. s-separated: d(R, R') >= s min(diam R, diam R')", s2 >= bound)
                    .with("s_sq", to_pq(&s2))
                    .with("s", spongelab::rational::to_f64(&s2).sqrt())
                    .with("bound_sq", to_pq(&bound)),
            );
        }
        UniformCheck::Cigar => {
            let spec = load_spec(cli)?;
            let level = a.level.unwrap_or(depth_of(cli, &spec)?);
            let domain = DomainGrid::from_sponge(&spec, level, Clearance::Center)?;
            let g = &domain.graph;
            let x = match &a.x {
                Some(c) => g.require(&coords(c)?)?,
                None => 0,
            };
            let y = match &a.y {
                Some(c) => g.require(&coords(c)?)?,
                None => g.len() - 1,
            };
            let threshold = uniformity_threshold(&domain, x, y, a.a_max, 1e-3);
            report.push(
                Check::verdict("uniform curve threshold", "Def. uniform domain: cigar condition", threshold.is_some())
                    .with("x", g.tile(x))
                    .with("y", g.tile(y))
                    .with("a_threshold", threshold)
                    .with("a_max", a.a_max),
            );
        }
    }
    Ok(())
}

fn heis(cli: &Cli, a: &HeisAction, report: &mut Report) -> R<()> {
    let seed = cli.global.seed;
    match a {
        HeisAction::Identities { count } => report.push(heis_identities(*count, seed)?),
        HeisAction::Net { levels, samples, inject_fault } => {
            let n = cli.global.n.clone().unwrap_or_else(|| vec![3; (*levels).max(1)]);
            report.extend(heis_net_suite(n, *levels, seed, *samples, *inject_fault)?);
        }
        HeisAction::Volume { r, samples } => report.push(heis_volume_ratio(*r, *samples, seed, 0.04)?),
    }
    Ok(())
}

fn constants(a: &ConstAction, report: &mut Report) -> R<()> {
    match a {
        ConstAction::Tau { p, q, delta, big_delta } => {
            let v = tau_threshold(&rat(p)?, &rat(q)?, &rat(delta)?, &rat(big_delta)?)?;
            report.push(Check::measured("tau_threshold", A_TAU).with("value", &v));
        }
        ConstAction::Isoperimetric { d, c_b, lambda_b } => {
            let (cs, l) = isoperimetric_constants(&rat(d)?, &rat(c_b)?, &rat(lambda_b)?)?;
            report.push(Check::measured("isoperimetric_constants", A_ISOPERIMETRIC).with("C_S", &cs).with("Lambda", to_pq(&l)));
        }
        ConstAction::Filling { inputs } => {
            let inp = match inputs {
                Some(path) => {
                    let text = std::fs::read_to_string(path)
                        .map_err(|e| CliError::Usage(format!("cannot read inputs {}: {e}", path.display())))?;
                    let mut base = serde_json::to_value(FillingInputs::default()).expect("serializable");
                    let over: serde_json::Value =
                        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid inputs: {e}")))?;
                    if let (Some(b), Some(o)) = (base.as_object_mut(), over.as_object()) {
                        for (k, v) in o {
                            b.insert(k.clone(), v.clone());
                        }
                    }
                    serde_json::from_value(base).map_err(|e| CliError::Usage(format!("invalid inputs: {e}")))?
                }
                None => FillingInputs::default(),
            };
            let bundle = filling_parameters(&inp)?;
            let trips = verify_filling(&inp, &bundle)?;
            let ok = trips.iter().all(|t| t.holds);
            report.push(
                Check::verdict("filling_parameters", ANCHOR_EPS1, ok)
                    .with("inputs", &inp)
                    .with("bundle", &bundle)
                    .with("round_trip", &trips),
            );
        }
        ConstAction::Doubling { d, eps } => {
            let v = doubling_after_filling(&rat(d)?, &rat(eps)?)?;
            report.push(Check::measured("doubling_after_filling", "Lemma doubling: D / (1 - eps)").with("value", to_pq(&v)));
        }
        ConstAction::Ahlfors { a, big_q, c_ar } => {
            let v = uniform_ahlfors_constant(&rat(a)?, &rat(big_q)?, &rat(c_ar)?)?;
            report.push(Check::measured("uniform_ahlfors_constant", "Lemma unifarreg: (4A)^Q C_AR").with("value", &v));
        }
    }
    Ok(())
}

/// Records of every suite at the acceptance parameters, in a fixed order.
pub fn suite(seed: u64, report: &mut Report) -> R<()> {
    let seqs = [vec![3, 3, 3], vec![3, 5, 7]];
    report.extend(separation_suite(&[2, 3], &seqs, &[1, 2, 3])?);
    report.push(volume_check(&SpongeSpec::full(2, vec![3, 5])?, 2)?);
    for d in [2, 3] {
        for k in 1..=3 {
            report.push(half_slice_check(&SpongeSpec::full(d, vec![3, 3, 3])?, k)?);
        }
    }
    report.push(projection_suite(&[3, 3], None, seed)?);
    report.push(projection_suite(&[2, 4], None, seed)?);
    report.push(projection_suite(&[9, 9], Some(10_000), seed)?);
    report.push(projection_suite(&[5, 5, 5], Some(1_000), seed)?);
    report.push(weak_type_suite(&level_graph(2, &[3, 3], 2, None)?, 100, 10, seed)?);
    let ring = level_graph(2, &[3], 1, None)?;
    report.push(quasiconvexity_pair(&ring, &[1, 0], &[1, 2])?);
    let fat = level_graph(2, &[3, 9], 2, None)?;
    let (qc, lambda) = quasiconvexity_full(&fat, Some(4.0))?;
    report.push(qc);
    report.push(exponent_upgrade_suite(&fat, 2.0 * lambda, &q(1, 4), 400, 50, seed)?.check());
    report.extend(filling_suite(2, &q(1, 5), &q(1, 2), 100, seed)?);
    report.push(heis_identities(100_000, seed)?);
    report.push(heis_volume_ratio(0.5, 1_000_000, seed, 0.04)?);
    report.extend(heis_net_suite(vec![3, 3], 2, seed, 600, true)?);
    report.extend(turning_suite()?);
    report.extend(constants_suite(&filling_input_grid())?);
    Ok(())
}
