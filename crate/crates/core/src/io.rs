//! Tab-separated readers and writers.
//!
//! Inputs: genotype, phenotype and covariate tables aligned by sample id,
//! GMT pathway files, SNP-to-gene maps, pair lists and serialized weight
//! matrices. Outputs: coefficient tables, refit reports, meta-analysis
//! results, evaluation curves and simulation truth. Every number written is
//! rendered by [`fmt_num`] so identical runs give identical bytes.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2};

use crate::data::{Dataset, TermId};
use crate::error::{Error, Result};
use crate::meta::MetaResult;
use crate::network::{build_adjacency, build_weights, BipartiteMap, WeightMatrix, WeightOptions};
use crate::refit::FitReport;
use crate::simulation::{EvalCurves, ReplicateOutcome, Truth};
use crate::solver::Solution;

/// Significant digits of every number written.
pub const SIG_DIGITS: usize = 10;

/// `x` with [`SIG_DIGITS`] significant digits: plain decimal notation for
/// magnitudes in `[1e-5, 1e10)`, scientific otherwise.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let exp: i32 = sci[sci.find('e').expect("exponent") + 1..].parse().expect("integer exponent");
    if (-5..10).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        sci
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), line, message: message.into() }
}

fn parse_f64(path: &Path, line: usize, field: &str) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| parse_err(path, line, format!("`{field}` is not a number")))?;
    if v.is_nan() {
        return Err(parse_err(path, line, "missing values are not accepted"));
    }
    Ok(v)
}

fn tsv_reader(path: &Path, has_headers: bool) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| parse_err(path, 0, e.to_string()))?;
    Ok(csv::ReaderBuilder::new().delimiter(b'\t').has_headers(has_headers).flexible(true).comment(Some(b'#')).from_reader(file))
}

fn line_of(rec: &csv::StringRecord) -> usize {
    rec.position().map_or(0, |p| p.line() as usize)
}

/// Rows of a plain table: `(line, fields)` with `#` comments and blank lines
/// skipped.
fn read_rows(path: &Path, has_headers: bool) -> Result<(Vec<String>, Vec<(usize, Vec<String>)>)> {
    let mut rdr = tsv_reader(path, has_headers)?;
    let header = if has_headers { rdr.headers()?.iter().map(|s| s.trim().to_string()).collect() } else { Vec::new() };
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        rows.push((line_of(&rec), rec.iter().map(|s| s.trim().to_string()).collect()));
    }
    Ok((header, rows))
}

/// Genotype table: header of SNP ids, one row of dosages per sample. A first
/// header cell `sample_id` marks a leading column of sample ids.
#[derive(Debug, Clone)]
pub struct GenotypeTable {
    pub sample_ids: Option<Vec<String>>,
    pub snp_ids: Vec<String>,
    pub x: Array2<f64>,
}

pub fn read_genotypes(path: &Path) -> Result<GenotypeTable> {
    let (header, rows) = read_rows(path, true)?;
    let with_ids = header.first().is_some_and(|h| h == "sample_id");
    let snp_ids: Vec<String> = header.into_iter().skip(usize::from(with_ids)).collect();
    if snp_ids.is_empty() {
        return Err(parse_err(path, 1, "no SNP columns"));
    }
    let p = snp_ids.len();
    let mut ids = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(rows.len() * p);
    for (line, fields) in &rows {
        if fields.len() != p + usize::from(with_ids) {
            return Err(parse_err(path, *line, format!("{} fields, expected {}", fields.len(), p + usize::from(with_ids))));
        }
        let mut it = fields.iter();
        if with_ids {
            ids.push(it.next().expect("id field").clone());
        }
        for f in it {
            values.push(parse_f64(path, *line, f)?);
        }
    }
    let x = Array2::from_shape_vec((rows.len(), p), values).map_err(|e| Error::Invalid(e.to_string()))?;
    Ok(GenotypeTable { sample_ids: with_ids.then_some(ids), snp_ids, x })
}

/// Two-column phenotype table `sample_id, value` with a header row.
pub fn read_phenotype(path: &Path) -> Result<Vec<(String, f64)>> {
    let (_, rows) = read_rows(path, true)?;
    rows.iter()
        .map(|(line, f)| {
            if f.len() != 2 {
                return Err(parse_err(path, *line, format!("{} fields, expected 2", f.len())));
            }
            Ok((f[0].clone(), parse_f64(path, *line, &f[1])?))
        })
        .collect()
}

/// Covariate table `sample_id, c1, ..., cq` with a header row.
pub fn read_covariates(path: &Path) -> Result<(Vec<String>, Array2<f64>)> {
    let (header, rows) = read_rows(path, true)?;
    let q = header.len().saturating_sub(1);
    if q == 0 {
        return Err(parse_err(path, 1, "no covariate columns"));
    }
    let mut ids = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(rows.len() * q);
    for (line, f) in &rows {
        if f.len() != q + 1 {
            return Err(parse_err(path, *line, format!("{} fields, expected {}", f.len(), q + 1)));
        }
        ids.push(f[0].clone());
        for v in &f[1..] {
            values.push(parse_f64(path, *line, v)?);
        }
    }
    let c = Array2::from_shape_vec((rows.len(), q), values).map_err(|e| Error::Invalid(e.to_string()))?;
    Ok((ids, c))
}

fn id_index(ids: &[String]) -> Result<HashMap<&str, usize>> {
    let mut map = HashMap::with_capacity(ids.len());
    for (i, id) in ids.iter().enumerate() {
        if map.insert(id.as_str(), i).is_some() {
            return Err(Error::DuplicateId(id.clone()));
        }
    }
    Ok(map)
}

/// Row order of `ids` within `reference`; both must hold the same samples.
fn align(reference: &[String], ids: &[String], what: &str) -> Result<Vec<usize>> {
    let index = id_index(ids)?;
    if ids.len() != reference.len() {
        return Err(Error::SampleMismatch(format!("{} has {} samples, genotypes have {}", what, ids.len(), reference.len())));
    }
    reference
        .iter()
        .map(|id| index.get(id.as_str()).copied().ok_or_else(|| Error::SampleMismatch(format!("sample `{id}` missing from {what}"))))
        .collect()
}

/// One cohort from its genotype, phenotype and optional covariate files.
/// Samples follow the genotype order; without a sample-id column the
/// genotype rows are taken in phenotype order.
pub fn load_dataset(geno: &Path, pheno: &Path, covar: Option<&Path>) -> Result<Dataset> {
    let g = read_genotypes(geno)?;
    let ph = read_phenotype(pheno)?;
    let ph_ids: Vec<String> = ph.iter().map(|(id, _)| id.clone()).collect();
    let sample_ids = match g.sample_ids {
        Some(ids) => ids,
        None if ph_ids.len() == g.x.nrows() => ph_ids.clone(),
        None => {
            return Err(Error::SampleMismatch(format!("{} phenotype rows for {} genotype rows", ph_ids.len(), g.x.nrows())));
        }
    };
    let order = align(&sample_ids, &ph_ids, "phenotype")?;
    let y = Array1::from_iter(order.iter().map(|&i| ph[i].1));
    let mut ds = Dataset::new(y, g.x, g.snp_ids)?.with_sample_ids(sample_ids.clone())?;
    if let Some(cpath) = covar {
        let (cids, c) = read_covariates(cpath)?;
        let order = align(&sample_ids, &cids, "covariates")?;
        ds = ds.with_covariates(c.select(ndarray::Axis(0), &order))?;
    }
    Ok(ds)
}

/// A pathway from a GMT file.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneSet {
    pub name: String,
    pub description: String,
    pub genes: Vec<String>,
}

/// GMT pathways: `name, description, gene...` per line. With `max_size`,
/// sets with more genes than that are dropped.
pub fn read_gmt(path: &Path, max_size: Option<usize>) -> Result<Vec<GeneSet>> {
    let (_, rows) = read_rows(path, false)?;
    let mut sets = Vec::with_capacity(rows.len());
    for (line, f) in rows {
        if f.len() < 2 {
            return Err(parse_err(path, line, "a gene set needs a name and a description"));
        }
        let genes: Vec<String> = f[2..].iter().filter(|g| !g.is_empty()).cloned().collect::<BTreeSet<_>>().into_iter().collect();
        if max_size.is_some_and(|m| genes.len() > m) {
            continue;
        }
        sets.push(GeneSet { name: f[0].clone(), description: f[1].clone(), genes });
    }
    Ok(sets)
}

/// Two-column file without header (`a, b` per line), e.g. a SNP-to-gene map
/// or a pair list.
pub fn read_two_columns(path: &Path) -> Result<Vec<(String, String)>> {
    let (_, rows) = read_rows(path, false)?;
    rows.into_iter()
        .map(|(line, f)| {
            if f.len() != 2 {
                return Err(parse_err(path, line, format!("{} fields, expected 2", f.len())));
            }
            Ok((f[0].clone(), f[1].clone()))
        })
        .collect()
}

/// Gene to SNP indices; SNP ids absent from the panel are ignored.
fn snps_by_gene(snp_ids: &[String], snp_gene: &[(String, String)]) -> BTreeMap<String, BTreeSet<usize>> {
    let lookup: HashMap<&str, usize> = snp_ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let mut map: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
    for (snp, gene) in snp_gene {
        if let Some(&i) = lookup.get(snp.as_str()) {
            map.entry(gene.clone()).or_default().insert(i);
        }
    }
    map
}

/// SNP × pathway incidence: SNP `i` belongs to pathway `l` when one of its
/// genes is in the set.
pub fn bipartite_from_gmt(snp_ids: &[String], sets: &[GeneSet], snp_gene: &[(String, String)]) -> Result<BipartiteMap> {
    let by_gene = snps_by_gene(snp_ids, snp_gene);
    let mut edges = Vec::new();
    for (l, set) in sets.iter().enumerate() {
        for gene in &set.genes {
            if let Some(snps) = by_gene.get(gene) {
                edges.extend(snps.iter().map(|&i| (i, l)));
            }
        }
    }
    BipartiteMap::from_edges(snp_ids.len(), sets.iter().map(|s| s.name.clone()).collect(), &edges)
}

pub fn weights_from_gmt(snp_ids: &[String], sets: &[GeneSet], snp_gene: &[(String, String)], opts: WeightOptions) -> Result<WeightMatrix> {
    Ok(build_weights(&build_adjacency(&bipartite_from_gmt(snp_ids, sets, snp_gene)?), opts))
}

/// Weights from a pair list. Without a map the ids are SNP ids; with one
/// they are gene ids and every SNP of one gene pairs with every SNP of the
/// other.
pub fn weights_from_pair_list(snp_ids: &[String], pairs: &[(String, String)], snp_gene: Option<&[(String, String)]>) -> Result<WeightMatrix> {
    let Some(map) = snp_gene else {
        return crate::network::from_pairs(snp_ids, pairs);
    };
    let by_gene = snps_by_gene(snp_ids, map);
    let mut idx = Vec::new();
    for (a, b) in pairs {
        let sa = by_gene.get(a).ok_or_else(|| Error::UnknownId(a.clone()))?;
        let sb = by_gene.get(b).ok_or_else(|| Error::UnknownId(b.clone()))?;
        for &j in sa {
            idx.extend(sb.iter().filter(|&&k| k != j).map(|&k| (j, k, 1.0)));
        }
    }
    WeightMatrix::from_parts(snp_ids.len(), vec![1.0; snp_ids.len()], idx)
}

/// Serialized weights: an optional `[diag]` section of `snp_id, w_jj` lines
/// (unlisted SNPs get 1) and a `[pairs]` section of `j_id, k_id, w_jk` lines.
pub fn read_weights(path: &Path, snp_ids: &[String]) -> Result<WeightMatrix> {
    let lookup = id_index(snp_ids)?;
    let find = |s: &str| lookup.get(s).copied().ok_or_else(|| Error::UnknownId(s.to_string()));
    let reader = BufReader::new(File::open(path).map_err(|e| parse_err(path, 0, e.to_string()))?);
    let mut diag = vec![1.0; snp_ids.len()];
    let mut pairs = Vec::new();
    let mut section = "";
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        match t {
            "[diag]" => section = "diag",
            "[pairs]" => section = "pairs",
            _ => {
                let f: Vec<&str> = t.split('\t').map(str::trim).collect();
                match (section, f.len()) {
                    ("diag", 2) => diag[find(f[0])?] = parse_f64(path, lineno, f[1])?,
                    ("pairs", 3) => pairs.push((find(f[0])?, find(f[1])?, parse_f64(path, lineno, f[2])?)),
                    ("", _) => return Err(parse_err(path, lineno, "entry before a [diag] or [pairs] header")),
                    (s, n) => return Err(parse_err(path, lineno, format!("{n} fields in the {s} section"))),
                }
            }
        }
    }
    WeightMatrix::from_parts(snp_ids.len(), diag, pairs)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

pub fn write_weights(path: &Path, w: &WeightMatrix, snp_ids: &[String]) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "[diag]")?;
    for (id, &d) in snp_ids.iter().zip(w.diag_weights()) {
        writeln!(out, "{id}\t{}", fmt_num(d))?;
    }
    writeln!(out, "[pairs]")?;
    for &(j, k, wt) in w.pairs() {
        writeln!(out, "{}\t{}\t{}", snp_ids[j], snp_ids[k], fmt_num(wt))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_genotypes(path: &Path, ds: &Dataset) -> Result<()> {
    let mut out = create(path)?;
    let ids: Vec<String> = ds.sample_ids.clone().unwrap_or_else(|| default_sample_ids(ds.n()));
    writeln!(out, "sample_id\t{}", ds.snp_ids.join("\t"))?;
    for (i, id) in ids.iter().enumerate() {
        let row: Vec<String> = ds.x.row(i).iter().map(|&v| fmt_num(v)).collect();
        writeln!(out, "{id}\t{}", row.join("\t"))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_phenotype(path: &Path, ds: &Dataset) -> Result<()> {
    let mut out = create(path)?;
    let ids: Vec<String> = ds.sample_ids.clone().unwrap_or_else(|| default_sample_ids(ds.n()));
    writeln!(out, "sample_id\tvalue")?;
    for (id, v) in ids.iter().zip(&ds.y) {
        writeln!(out, "{id}\t{}", fmt_num(*v))?;
    }
    out.flush()?;
    Ok(())
}

/// `s1..sN`.
pub fn default_sample_ids(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("s{i}")).collect()
}

/// Nonzero coefficients (standardized scale) after a metadata block of
/// `# key<TAB>value` lines.
pub fn write_solution(path: &Path, sol: &Solution, snp_ids: &[String]) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "# lambda1\t{}", fmt_num(sol.lambda1))?;
    writeln!(out, "# lambda2\t{}", fmt_num(sol.lambda2))?;
    writeln!(out, "# cycles\t{}", sol.cycles_used)?;
    writeln!(out, "# objective\t{}", fmt_num(sol.objective))?;
    writeln!(out, "# converged\t{}", sol.converged)?;
    writeln!(out, "term\tcoefficient")?;
    for (term, v) in sol.coeffs.iter() {
        writeln!(out, "{}\t{}", term.label(snp_ids), fmt_num(v))?;
    }
    out.flush()?;
    Ok(())
}

pub const REPORT_HEADER: &str = "term\tbeta\tse\tt\trank";

/// Refit report, rows in rank order.
pub fn write_fit_report(path: &Path, report: &FitReport, snp_ids: &[String]) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "{REPORT_HEADER}")?;
    let mut order: Vec<usize> = (0..report.terms.len()).collect();
    order.sort_by_key(|&i| report.rank[i]);
    for i in order {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            report.terms[i].label(snp_ids),
            fmt_num(report.beta[i]),
            fmt_num(report.se[i]),
            fmt_num(report.t[i]),
            report.rank[i]
        )?;
    }
    out.flush()?;
    Ok(())
}

/// A refit report read back as a ranked outcome.
pub fn read_fit_report(path: &Path, snp_ids: &[String], replicate: usize) -> Result<ReplicateOutcome> {
    let (header, rows) = read_rows(path, true)?;
    if header.join("\t") != REPORT_HEADER {
        return Err(parse_err(path, 1, format!("expected header `{REPORT_HEADER}`")));
    }
    let mut entries = Vec::with_capacity(rows.len());
    for (line, f) in rows {
        if f.len() != 5 {
            return Err(parse_err(path, line, format!("{} fields, expected 5", f.len())));
        }
        let term = TermId::parse(&f[0], snp_ids)?;
        let t = parse_f64(path, line, &f[3]).unwrap_or(0.0);
        let rank: usize = f[4].parse().map_err(|_| parse_err(path, line, format!("rank `{}` is not an integer", f[4])))?;
        entries.push((rank, term, t.abs()));
    }
    entries.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(ReplicateOutcome {
        replicate,
        ranked: entries.iter().map(|e| e.1).collect(),
        abs_t: entries.iter().map(|e| e.2).collect(),
    })
}

/// One row per term of the universe; `beta` and `se` are left empty for
/// procedures that combine Z scores only.
pub fn write_meta_result(path: &Path, res: &MetaResult, snp_ids: &[String]) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "term\tz\tbeta\tse\tn_splits_selected")?;
    for (i, term) in res.terms.iter().enumerate() {
        let opt = |v: &Option<Vec<f64>>| v.as_ref().map_or(String::new(), |v| fmt_num(v[i]));
        writeln!(out, "{}\t{}\t{}\t{}\t{}", term.label(snp_ids), fmt_num(res.z[i]), opt(&res.beta), opt(&res.se), res.n_splits_selected[i])?;
    }
    out.flush()?;
    Ok(())
}

/// `fdr.tsv` (threshold, one_minus_fdr, discovery_rate) and `power.tsv`
/// (category, rate, snps) in `dir`. An empty category has rate `nan`.
pub fn write_eval_curves(dir: &Path, curves: &EvalCurves) -> Result<()> {
    let mut out = create(&dir.join("fdr.tsv"))?;
    writeln!(out, "threshold\tone_minus_fdr\tdiscovery_rate")?;
    for (i, t) in curves.thresholds.iter().enumerate() {
        writeln!(out, "{t}\t{}\t{}", fmt_num(curves.one_minus_fdr[i]), fmt_num(curves.discovery_rate[i]))?;
    }
    out.flush()?;
    let mut out = create(&dir.join("power.tsv"))?;
    writeln!(out, "category\trate\tsnps")?;
    let pw = &curves.power;
    for (label, rate, count) in [
        ("with_interaction", pw.with_interaction, pw.counts[0]),
        ("without_interaction", pw.without_interaction, pw.counts[1]),
        ("non_active", pw.non_active, pw.counts[2]),
    ] {
        writeln!(out, "{label}\t{}\t{count}", fmt_num(rate.unwrap_or(f64::NAN)))?;
    }
    out.flush()?;
    Ok(())
}

/// Truth table: every SNP of the panel as `snp_id, active|inactive`, then
/// every true pair as `a:b, pair`.
pub fn write_truth(path: &Path, truth: &Truth, snp_ids: &[String]) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "term\tkind")?;
    for (j, id) in snp_ids.iter().enumerate() {
        writeln!(out, "{id}\t{}", if truth.active[j] { "active" } else { "inactive" })?;
    }
    for &(j, k) in &truth.true_pairs {
        writeln!(out, "{}\tpair", TermId::Inter(j, k).label(snp_ids))?;
    }
    out.flush()?;
    Ok(())
}

/// Truth and the SNP panel it was written for.
pub fn read_truth(path: &Path) -> Result<(Truth, Vec<String>)> {
    let (_, rows) = read_rows(path, true)?;
    let mut ids = Vec::new();
    let mut active = Vec::new();
    let mut pair_labels = Vec::new();
    for (line, f) in rows {
        if f.len() != 2 {
            return Err(parse_err(path, line, format!("{} fields, expected 2", f.len())));
        }
        match f[1].as_str() {
            "active" | "inactive" => {
                if f[1] == "active" {
                    active.push(ids.len());
                }
                ids.push(f[0].clone());
            }
            "pair" => pair_labels.push(f[0].clone()),
            other => return Err(parse_err(path, line, format!("unknown kind `{other}`"))),
        }
    }
    id_index(&ids)?;
    let pairs = pair_labels
        .iter()
        .map(|l| match TermId::parse(l, &ids)? {
            TermId::Inter(j, k) => Ok((j, k)),
            TermId::Main(_) => Err(Error::Invalid(format!("pair `{l}` names a single SNP"))),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((Truth::from_parts(ids.len(), active, pairs), ids))
}

/// One cohort entry of a cohort list.
#[derive(Debug, Clone, PartialEq)]
pub struct CohortEntry {
    pub label: String,
    pub geno: PathBuf,
    pub pheno: PathBuf,
    pub covar: Option<PathBuf>,
}

/// Cohort list: `label, genotype path, phenotype path[, covariate path]` per
/// line, no header; relative paths are resolved against the list's folder.
pub fn read_cohort_list(path: &Path) -> Result<Vec<CohortEntry>> {
    let base = path.parent().unwrap_or(Path::new("."));
    let (_, rows) = read_rows(path, false)?;
    rows.into_iter()
        .map(|(line, f)| {
            if !(3..=4).contains(&f.len()) {
                return Err(parse_err(path, line, format!("{} fields, expected 3 or 4", f.len())));
            }
            Ok(CohortEntry {
                label: f[0].clone(),
                geno: base.join(&f[1]),
                pheno: base.join(&f[2]),
                covar: f.get(3).filter(|c| !c.is_empty()).map(|c| base.join(c)),
            })
        })
        .collect()
}

pub fn write_cohort_list(path: &Path, entries: &[(String, String, String)]) -> Result<()> {
    let mut out = create(path)?;
    for (label, geno, pheno) in entries {
        writeln!(out, "{label}\t{geno}\t{pheno}")?;
    }
    out.flush()?;
    Ok(())
}

/// Flat `key = value` text; `#` starts a comment line.
pub fn read_key_values(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| parse_err(path, 0, e.to_string()))?;
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let (k, v) = t.split_once('=').ok_or_else(|| parse_err(path, i + 1, "expected key = value"))?;
        let key = k.trim().replace('-', "_");
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(parse_err(path, i + 1, format!("key `{key}` given twice")));
        }
    }
    Ok(map)
}

pub fn write_key_values(path: &Path, entries: &[(String, String)]) -> Result<()> {
    let mut out = create(path)?;
    for (k, v) in entries {
        writeln!(out, "{k} = {v}")?;
    }
    out.flush()?;
    Ok(())
}
