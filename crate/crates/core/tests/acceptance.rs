//! Acceptance checks. Each criterion prints one PASS/FAIL line; the test fails
//! if any criterion fails. Set `MLECONE_LONG=1` to add the extended rows.

use std::collections::HashMap;
use std::io::Write as _;
use std::time::{Duration, Instant};

use mlecone::complex::{parse_complex, SimplicialComplex};
use mlecone::cone::collapse::{smaller_specs, CollapseSearch};
use mlecone::cone::{
    collapsibility_report, facet_count_2qr, facet_count_lower_bound, orbit_classify, Budget, ConeDescription,
    MarginalCone, ZeroStarPattern,
};
use mlecone::decomposed::{build_reduced_system, mle_exists_decomposed};
use mlecone::design::DesignMatrix;
use mlecone::rational::Rat;
use mlecone::relint::{certificate_holds, exists_kernel_witness, mle_exists};
use mlecone::table::{ContingencyTable, FaceMode, LevelSpec};
use mlecone::triangulate::chordal_triangulation;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Reference summary rows: levels, dim, extreme rays, facets, orbits, collapsing target.
type Row = ([usize; 3], usize, usize, usize, usize, [usize; 3]);

const DEFAULT_ROWS: [Row; 9] = [
    ([2, 2, 2], 7, 8, 16, 4, [2, 2, 2]),
    ([2, 2, 3], 10, 12, 28, 4, [2, 2, 2]),
    ([2, 2, 4], 13, 16, 48, 5, [2, 2, 2]),
    ([2, 3, 3], 14, 18, 57, 5, [2, 2, 2]),
    ([2, 3, 4], 18, 24, 110, 6, [2, 2, 2]),
    ([3, 3, 3], 19, 27, 207, 8, [3, 3, 3]),
    ([3, 3, 4], 24, 36, 717, 10, [3, 3, 3]),
    ([3, 3, 5], 29, 45, 2379, 13, [3, 3, 3]),
    ([3, 4, 4], 30, 48, 4948, 16, [3, 4, 4]),
];

const EXTENDED_ROWS: [Row; 6] = [
    ([3, 3, 6], 34, 54, 7641, 17, [3, 3, 3]),
    ([3, 3, 7], 39, 63, 23991, 20, [3, 3, 3]),
    ([3, 4, 5], 36, 60, 29387, 24, [3, 4, 4]),
    ([3, 4, 6], 42, 72, 153858, 35, [3, 4, 4]),
    ([3, 5, 5], 43, 75, 306955, 42, [3, 5, 5]),
    ([4, 4, 4], 37, 64, 113740, 39, [4, 4, 4]),
];

/// The displayed 4x4x4 facet: rows are the first index, the four blocks the
/// third index and the position inside a block the second index.
const NON_COLLAPSIBLE_444: [&str; 4] = [
    "000* | *00* | **0* | ****",
    "00** | *0** | **** | 00*0",
    "0*** | **** | 0*00 | 0**0",
    "**** | *000 | **00 | ***0",
];

/// Number of random tables for the agreement check.
const RANDOM_TABLES: usize = 520;
/// Largest table drawn for the agreement check.
const MAX_RANDOM_CELLS: usize = 144;
const AGREEMENT_TIME_LIMIT: Duration = Duration::from_secs(300);
const SEED: u64 = 0x6d6c_6563_6f6e_65;

fn long_mode() -> bool {
    std::env::var("MLECONE_LONG").is_ok_and(|v| v == "1")
}

struct Report {
    lines: Vec<(bool, String)>,
}

impl Report {
    fn record(&mut self, id: &str, ok: bool, detail: String) {
        let line = format!("[{}] criterion {id}: {detail}", if ok { "PASS" } else { "FAIL" });
        let mut out = std::io::stdout().lock();
        let _ = writeln!(out, "{line}");
        let _ = out.flush();
        self.lines.push((ok, line));
    }
}

struct Enumerated {
    row: Row,
    cone: ConeDescription,
    orbits: usize,
}

fn enumerate_rows(rows: &[Row], budget: &Budget) -> Vec<Result<Enumerated, String>> {
    rows.iter()
        .map(|&row| {
            let cone = MarginalCone::three_way(&row.0).map_err(|e| e.to_string())?;
            let cone = cone.enumerate(budget).map_err(|e| format!("{:?}: {e}", row.0))?;
            let orbits = orbit_classify(&cone).len();
            Ok(Enumerated { row, cone, orbits })
        })
        .collect()
}

fn criterion_table1(report: &mut Report, id: &str, rows: &[Result<Enumerated, String>], elapsed: Duration) {
    let mut bad = Vec::new();
    for r in rows {
        match r {
            Ok(e) => {
                let (lv, dim, rays, facets, orbits, _) = e.row;
                let got = (e.cone.dim(), e.cone.extreme_ray_count(), e.cone.facet_count(), e.orbits);
                if got != (dim, rays, facets, orbits) {
                    bad.push(format!("{lv:?} got {got:?} want {:?}", (dim, rays, facets, orbits)));
                }
                if let Err(err) = e.cone.verify() {
                    bad.push(format!("{lv:?} invalid facet list: {err}"));
                }
            }
            Err(err) => bad.push(err.clone()),
        }
    }
    let ok = bad.is_empty();
    let detail = if ok {
        format!("{} summary rows match exactly (dim, rays, facets, orbits) in {elapsed:.1?}", rows.len())
    } else {
        bad.join("; ")
    };
    report.record(id, ok, detail);
}

fn criterion_closed_form(report: &mut Report, rows: &[Result<Enumerated, String>]) {
    let mut checked = Vec::new();
    let mut ok = true;
    for e in rows.iter().flatten().filter(|e| e.row.0[0] == 2) {
        let [_, q, r] = e.row.0;
        let formula = facet_count_2qr(q as u32, r as u32);
        ok &= formula == e.cone.facet_count() as u128;
        checked.push(format!("(2,{q},{r}) {formula}/{}", e.cone.facet_count()));
    }
    ok &= checked.len() == 5;
    report.record("2", ok, format!("2 x q x r closed form vs enumeration: {}", checked.join(", ")));
}

fn criterion_lower_bound(report: &mut Report, rows: &[Result<Enumerated, String>]) {
    let mut ok = true;
    let mut strict_333 = false;
    let mut parts = Vec::new();
    for e in rows.iter().flatten() {
        let [p, q, r] = e.row.0;
        let bound = facet_count_lower_bound(p as u32, q as u32, r as u32);
        let count = e.cone.facet_count() as u128;
        ok &= bound <= count;
        if p == 2 {
            ok &= bound == count;
        }
        if e.row.0 == [3, 3, 3] {
            strict_333 = bound == 135 && bound < count;
        }
        parts.push(format!("{:?} {bound}<={count}", e.row.0));
    }
    ok &= strict_333;
    report.record("3", ok, format!("lower bound holds for every enumerated row ({})", parts.join(", ")));
}

fn criterion_collapsing(report: &mut Report, id: &str, rows: &[Result<Enumerated, String>]) {
    let mut bad = Vec::new();
    let mut n = 0;
    for e in rows.iter().flatten() {
        let orbits = orbit_classify(&e.cone);
        match collapsibility_report(&e.cone, &orbits) {
            Ok(rep) => {
                n += 1;
                if rep.minimal_collapsing != e.row.5 {
                    bad.push(format!("{:?} collapses to {:?}, want {:?}", e.row.0, rep.minimal_collapsing, e.row.5));
                }
                if e.row.0 == [4, 4, 4] && rep.non_collapsible == 0 {
                    bad.push("(4,4,4) has no non-collapsible orbit".into());
                }
            }
            Err(err) => bad.push(err.to_string()),
        }
    }
    let ok = bad.is_empty() && n == rows.len();
    let detail = if ok { format!("collapsing column reproduced for {n} rows") } else { bad.join("; ") };
    report.record(id, ok, detail);
}

fn criterion_non_collapsible_pattern(report: &mut Report) {
    let spec = LevelSpec::new(vec![4, 4, 4]).unwrap();
    let cone = MarginalCone::three_way(&[4, 4, 4]).unwrap();
    let mut stars = 0u128;
    for (i, row) in NON_COLLAPSIBLE_444.iter().enumerate() {
        let blocks: Vec<&str> = row.split('|').map(str::trim).collect();
        for (k, block) in blocks.iter().enumerate() {
            for (j, ch) in block.chars().enumerate() {
                if ch == '*' {
                    stars |= 1u128 << spec.linear_index(&[i + 1, j + 1, k + 1]).unwrap();
                }
            }
        }
    }
    let pattern = ZeroStarPattern::new(vec![4, 4, 4], stars);
    let is_facet = cone.facet_through(stars).is_some();
    let rank = cone.incidence_rank(stars);
    let mut search = CollapseSearch::new(cone.model());
    let targets = search.targets(&spec, stars).unwrap();
    let ok = is_facet && rank == 36 && cone.dim() == 37 && targets.is_empty();
    report.record(
        "4b",
        ok,
        format!(
            "4x4x4 pattern {pattern}: facet={is_facet}, rank {rank} = dim-1 = {}, collapses to {} of {} smaller tables",
            cone.dim() - 1,
            targets.len(),
            smaller_specs(&spec).len()
        ),
    );
}

fn criterion_antipodal(report: &mut Report) {
    let spec = LevelSpec::new(vec![2, 2, 2]).unwrap();
    let model = parse_complex("[12][13][23]").unwrap();
    let t = ContingencyTable::new(spec, vec![0, 1, 1, 1, 1, 1, 1, 0]).unwrap();
    let margins_positive = t.margins_vector(&model, FaceMode::FacetsOnly).unwrap().flat().iter().all(|&m| m > 0);
    let v = mle_exists(&t, &model).unwrap();
    let labels = v.to_json(&t).facial_set;
    let ok = !v.exists && labels == vec![vec![1, 1, 1], vec![2, 2, 2]] && margins_positive;
    report.record(
        "6",
        ok,
        format!("antipodal 2x2x2: exists={}, facial set {labels:?}, all two-way margins positive={margins_positive}", v.exists),
    );
}

fn criterion_reduced_size(report: &mut Report) {
    let mut ok = true;
    let mut parts = Vec::new();
    for k in [5usize, 6, 7] {
        let model = SimplicialComplex::cycle(k);
        let cover = chordal_triangulation(&model);
        for d in [2usize, 3] {
            let spec = LevelSpec::new(vec![d; k]).unwrap();
            let t = ContingencyTable::filled(spec.clone(), 1);
            let sys = build_reduced_system(&t, &model, &cover).unwrap();
            let expect = (k - 2) * d.pow(3);
            ok &= cover.width == 2 && cover.cliques.len() == k - 2 && sys.inequalities.len() == expect;
            let naive = spec.cell_count();
            ok &= sys.inequalities.len() < naive || (k, d) == (5, 2) && naive == 32;
            parts.push(format!("K={k} D={d}: {} vs {naive}", sys.inequalities.len()));
        }
    }
    report.record("7", ok, format!("clique inequalities (K-2)·D³ vs D^K cells: {}", parts.join(", ")));
}

struct RandomCase {
    model_name: &'static str,
    model: SimplicialComplex,
    table: ContingencyTable,
}

fn random_cases(n: usize) -> Vec<RandomCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let models: [(&str, &str); 5] = [
        ("[12][23]", "[12][23]"),
        ("[12][13][23]", "[12][13][23]"),
        ("4-cycle", "[12][23][34][14]"),
        ("5-cycle", "[12][23][34][45][15]"),
        ("6-cycle", "[12][23][34][45][56][16]"),
    ];
    (0..n)
        .map(|i| {
            let (name, text) = models[i % models.len()];
            let model = parse_complex(text).unwrap();
            let levels = loop {
                let lv: Vec<usize> = (0..model.k()).map(|_| rng.gen_range(2..=3)).collect();
                if lv.iter().product::<usize>() <= MAX_RANDOM_CELLS {
                    break lv;
                }
            };
            let sparsity = rng.gen_range(0.3..=0.7);
            let spec = LevelSpec::new(levels).unwrap();
            let counts =
                (0..spec.cell_count()).map(|_| if rng.gen_bool(sparsity) { 0 } else { rng.gen_range(1..=5) }).collect();
            RandomCase { model_name: name, model, table: ContingencyTable::new(spec, counts).unwrap() }
        })
        .collect()
}

fn criterion_agreement(report: &mut Report) {
    let start = Instant::now();
    let cases = random_cases(RANDOM_TABLES);
    let budget = Budget::default();
    let mut oracles: HashMap<(String, Vec<usize>), Option<ConeDescription>> = HashMap::new();
    let mut disagreements = Vec::new();
    let mut cert_failures = Vec::new();
    let (mut exists, mut oracle_checked) = (0, 0);
    let mut per_model: HashMap<&str, usize> = HashMap::new();
    for (i, case) in cases.iter().enumerate() {
        *per_model.entry(case.model_name).or_default() += 1;
        let direct = mle_exists(&case.table, &case.model).unwrap();
        let kernel = exists_kernel_witness(&case.table, &case.model).unwrap().exists;
        let decomposed = mle_exists_decomposed(&case.table, &case.model).unwrap();
        let key = (case.model_name.to_string(), case.table.spec().levels().to_vec());
        let oracle_cone = oracles.entry(key).or_insert_with(|| {
            MarginalCone::new(case.table.spec(), &case.model).ok().and_then(|c| c.enumerate(&budget).ok())
        });
        let oracle = oracle_cone.as_ref().map(|c| c.oracle_exists(case.table.counts()));
        if oracle.is_some() {
            oracle_checked += 1;
        }
        if direct.exists != kernel || direct.exists != decomposed || oracle.is_some_and(|o| o != direct.exists) {
            disagreements.push(format!(
                "case {i} ({}, {:?}): direct {} kernel {kernel} decomposed {decomposed} oracle {oracle:?}",
                case.model_name,
                case.table.spec().levels(),
                direct.exists
            ));
        }
        // Independent exact re-check of the evidence.
        let design = DesignMatrix::build(case.table.spec(), &case.model, FaceMode::FacetsOnly).unwrap();
        let margins: Vec<Rat> = design.apply_counts(case.table.counts()).into_iter().map(Rat::from).collect();
        let sound = if direct.exists {
            exists += 1;
            direct.witness.as_ref().is_some_and(|w| design.apply(w) == margins && w.iter().all(Rat::is_positive))
        } else {
            direct.certificate.as_ref().is_some_and(|c| certificate_holds(&design, &margins, c, &direct.facial_set))
        };
        if !sound {
            cert_failures.push(i);
        }
    }
    let elapsed = start.elapsed();
    let mut models: Vec<String> = per_model.iter().map(|(m, c)| format!("{m}:{c}")).collect();
    models.sort();
    let ok = disagreements.is_empty() && elapsed <= AGREEMENT_TIME_LIMIT && cases.len() >= 500;
    let detail = format!(
        "{} random tables ({}), {exists} exist, {} do not; oracle compared on {oracle_checked}; {} disagreements; {elapsed:.1?}{}",
        cases.len(),
        models.join(" "),
        cases.len() - exists,
        disagreements.len(),
        disagreements.first().map(|d| format!("; first: {d}")).unwrap_or_default()
    );
    report.record("5", ok, detail);
    report.record(
        "8",
        cert_failures.is_empty(),
        format!(
            "witnesses and certificates re-verified exactly on all {} verdicts; failures {cert_failures:?}",
            cases.len()
        ),
    );
}

#[test]
fn acceptance() {
    let mut report = Report { lines: Vec::new() };
    let long = long_mode();

    let start = Instant::now();
    let rows = enumerate_rows(&DEFAULT_ROWS, &Budget::default());
    criterion_table1(&mut report, "1", &rows, start.elapsed());
    criterion_closed_form(&mut report, &rows);
    criterion_lower_bound(&mut report, &rows);
    criterion_collapsing(&mut report, "4", &rows);
    criterion_non_collapsible_pattern(&mut report);
    criterion_agreement(&mut report);
    criterion_antipodal(&mut report);
    criterion_reduced_size(&mut report);

    if long {
        let start = Instant::now();
        let ext = enumerate_rows(&EXTENDED_ROWS, &Budget::long());
        criterion_table1(&mut report, "1-extended", &ext, start.elapsed());
        criterion_collapsing(&mut report, "4-extended", &ext);
    } else {
        let mut out = std::io::stdout().lock();
        let _ = writeln!(out, "[SKIP] criteria 1-extended, 4-extended: set MLECONE_LONG=1 for the extended rows");
    }

    let failed: Vec<&String> = report.lines.iter().filter(|(ok, _)| !ok).map(|(_, l)| l).collect();
    assert!(failed.is_empty(), "failed criteria:\n{}", failed.iter().map(|s| s.as_str()).collect::<Vec<_>>().join("\n"));
}
