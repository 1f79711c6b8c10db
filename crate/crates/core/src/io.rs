//! JSON file formats.  Every file is an object with a `kind` tag; matrices
//! are `{"shape": [rows, cols], "rows": [[..], ..]}` with entries in [0, p).
//! Writing is deterministic and reading then writing reproduces the bytes.
//! The permutation group format is a small line-based text format; see
//! [`parse_group_file`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::filtration::{FreeRankFiltration, GradedSubspace, JFreeSummand};
use crate::graded::{BoundedFactor, Extent, GradedAlgebra, GradedModule, PWAlgebra, SubspaceV};
use crate::kbundle::{DuflotModule, FiniteGroup, KAction, KBundle, KComplex, KModule, PosetCovering};
use crate::matrix::Matrix;
use crate::pgroups::{parse_cycles, PGroup, PGroupError, Perm, Subgroup};
use crate::poset::{DuflotSplit, EmbeddedAlgebra, Nesting, PosetFiltration, RankedPoset, Stratum, TopStratification};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormatError {
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error("{record}: field `{field}`: {msg}")]
    Field { record: String, field: String, msg: String },
    #[error("expected a {expected} file, found `{found}`")]
    Kind { expected: &'static str, found: &'static str },
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error(transparent)]
    Group(#[from] PGroupError),
}

pub type Result<T> = std::result::Result<T, FormatError>;

impl FormatError {
    pub fn is_limit(&self) -> bool {
        matches!(self, FormatError::Group(e) if e.is_limit())
    }
}

fn field(record: &str, field: &str, msg: impl ToString) -> FormatError {
    FormatError::Field { record: record.to_string(), field: field.to_string(), msg: msg.to_string() }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct MatrixDto {
    pub shape: [usize; 2],
    pub rows: Vec<Vec<u32>>,
}

fn mat_out(m: &Matrix) -> MatrixDto {
    MatrixDto { shape: [m.rows(), m.cols()], rows: m.to_rows() }
}

fn mat_in(d: &MatrixDto, p: u32, record: &str, name: &str) -> Result<Matrix> {
    let [r, c] = d.shape;
    if d.rows.len() != r || d.rows.iter().any(|row| row.len() != c) {
        return Err(field(record, name, format!("rows do not match shape {r}x{c}")));
    }
    if let Some(x) = d.rows.iter().flatten().find(|&&x| x >= p) {
        return Err(field(record, name, format!("entry {x} is not reduced mod {p}")));
    }
    if c == 0 {
        return Ok(Matrix::zeros(p, r, 0));
    }
    Ok(Matrix::from_u32_rows(p, c, &d.rows))
}

fn mats_in(ds: &[MatrixDto], p: u32, record: &str, name: &str) -> Result<Vec<Matrix>> {
    ds.iter().enumerate().map(|(i, d)| mat_in(d, p, record, &format!("{name}[{i}]"))).collect()
}

fn mats_out(ms: &[Matrix]) -> Vec<MatrixDto> {
    ms.iter().map(mat_out).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct ModuleDto {
    pub p: u32,
    pub w: usize,
    pub lo: i32,
    pub hi: i32,
    /// "zero" or "unknown": whether the module vanishes below the window.
    pub below: String,
    pub above: String,
    pub dims: Vec<usize>,
    /// `actions[k][d - lo]`: y_{k+1} from degree d to d + sigma.
    pub actions: Vec<Vec<MatrixDto>>,
}

fn extent_out(e: Extent) -> String {
    match e {
        Extent::Zero => "zero".into(),
        Extent::Unknown => "unknown".into(),
    }
}

fn extent_in(s: &str, record: &str, name: &str) -> Result<Extent> {
    match s {
        "zero" => Ok(Extent::Zero),
        "unknown" => Ok(Extent::Unknown),
        other => Err(field(record, name, format!("{other:?} is neither \"zero\" nor \"unknown\""))),
    }
}

pub fn module_out(m: &GradedModule) -> ModuleDto {
    let s = m.sigma();
    let actions = (0..m.w()).map(|k| (m.lo()..=m.hi() - s).map(|d| mat_out(&m.act(k, d).expect("window"))).collect()).collect();
    ModuleDto {
        p: m.p(),
        w: m.w(),
        lo: m.lo(),
        hi: m.hi(),
        below: extent_out(m.below()),
        above: extent_out(m.above()),
        dims: m.dims().to_vec(),
        actions,
    }
}

pub fn module_in(d: &ModuleDto, record: &str) -> Result<GradedModule> {
    let alg = PWAlgebra::new(d.p, d.w).map_err(|e| field(record, "p", e))?;
    let actions = d
        .actions
        .iter()
        .enumerate()
        .map(|(k, fam)| mats_in(fam, d.p, record, &format!("actions[{k}]")))
        .collect::<Result<Vec<_>>>()?;
    let below = extent_in(&d.below, record, "below")?;
    let above = extent_in(&d.above, record, "above")?;
    GradedModule::new(alg, d.lo, d.hi, d.dims.clone(), actions, below, above).map_err(|e| field(record, "actions", e))
}

fn subspace_in(bases: &[MatrixDto], m: &GradedModule, record: &str, name: &str) -> Result<GradedSubspace> {
    let bases = mats_in(bases, m.p(), record, name)?;
    if bases.len() != m.dims().len() {
        return Err(field(record, name, format!("{} degrees for a window of {}", bases.len(), m.dims().len())));
    }
    for (i, b) in bases.iter().enumerate() {
        if b.rows() != m.dims()[i] {
            return Err(field(record, &format!("{name}[{i}]"), "row count differs from the module dimension"));
        }
    }
    Ok(GradedSubspace::from_spanning(m.lo(), m.hi(), bases))
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct SummandDto {
    /// w x rank inclusion of V into W.
    pub v: MatrixDto,
    pub shift: i32,
    pub factor: Vec<usize>,
    /// Per degree of the module window.
    pub lift: Vec<MatrixDto>,
}

fn summand_out(s: &JFreeSummand) -> SummandDto {
    SummandDto { v: mat_out(s.v.matrix()), shift: s.shift, factor: s.factor.dims().to_vec(), lift: mats_out(&s.lift) }
}

fn summand_in(d: &SummandDto, p: u32, record: &str) -> Result<JFreeSummand> {
    let v = SubspaceV::new(mat_in(&d.v, p, record, "v")?).map_err(|e| field(record, "v", e))?;
    let factor = BoundedFactor::new(d.factor.clone()).map_err(|e| field(record, "factor", e))?;
    Ok(JFreeSummand { v, shift: d.shift, factor, lift: mats_in(&d.lift, p, record, "lift")? })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct FrfDto {
    pub module: ModuleDto,
    /// `levels[j][d - lo]`: spanning columns of F_j in degree d.
    pub levels: Vec<Vec<MatrixDto>>,
    /// `summands[j]`: the j-free summands of F_j / F_{j+1}.
    pub summands: Vec<Vec<SummandDto>>,
    pub minimal: bool,
}

pub fn frf_out(f: &FreeRankFiltration) -> FrfDto {
    FrfDto {
        module: module_out(f.module()),
        levels: f.levels().iter().map(|l| mats_out(&l.bases)).collect(),
        summands: f.summands().iter().map(|ss| ss.iter().map(summand_out).collect()).collect(),
        minimal: f.minimal(),
    }
}

pub fn frf_in(d: &FrfDto) -> Result<FreeRankFiltration> {
    let m = module_in(&d.module, "module")?;
    let levels = d
        .levels
        .iter()
        .enumerate()
        .map(|(j, l)| subspace_in(l, &m, &format!("level {j}"), "bases"))
        .collect::<Result<Vec<_>>>()?;
    let summands = d
        .summands
        .iter()
        .enumerate()
        .map(|(j, ss)| ss.iter().enumerate().map(|(i, s)| summand_in(s, m.p(), &format!("summand {j}.{i}"))).collect())
        .collect::<Result<Vec<Vec<_>>>>()?;
    Ok(FreeRankFiltration::new(m, levels, summands, d.minimal))
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct ProductDto {
    pub a: i32,
    pub b: i32,
    pub m: MatrixDto,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct AlgebraDto {
    pub module: ModuleDto,
    pub unit: Vec<u32>,
    pub mult_hi: i32,
    /// Column i * dim(b) + j of the (a, b) table is x_i y_j, for a <= b.
    pub mult: Vec<ProductDto>,
}

fn algebra_out(a: &GradedAlgebra) -> AlgebraDto {
    AlgebraDto {
        module: module_out(a.module()),
        unit: a.unit().to_vec(),
        mult_hi: a.mult_hi(),
        mult: a.tables().iter().map(|(&(x, y), m)| ProductDto { a: x, b: y, m: mat_out(m) }).collect(),
    }
}

fn algebra_in(d: &AlgebraDto, record: &str) -> Result<GradedAlgebra> {
    let module = module_in(&d.module, record)?;
    let mut mult = BTreeMap::new();
    for t in &d.mult {
        mult.insert((t.a, t.b), mat_in(&t.m, module.p(), record, &format!("mult({}, {})", t.a, t.b))?);
    }
    GradedAlgebra::new(module, d.unit.clone(), d.mult_hi, mult).map_err(|e| field(record, "mult", e))
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct EmbeddedDto {
    pub algebra: AlgebraDto,
    pub codim: i32,
    pub push: Vec<MatrixDto>,
    pub restrict: Vec<MatrixDto>,
}

fn embedded_out(e: &EmbeddedAlgebra) -> EmbeddedDto {
    EmbeddedDto { algebra: algebra_out(&e.algebra), codim: e.codim, push: mats_out(&e.push), restrict: mats_out(&e.restrict) }
}

fn embedded_in(d: &EmbeddedDto, record: &str) -> Result<EmbeddedAlgebra> {
    let algebra = algebra_in(&d.algebra, record)?;
    let p = algebra.p();
    Ok(EmbeddedAlgebra {
        codim: d.codim,
        push: mats_in(&d.push, p, record, "push")?,
        restrict: mats_in(&d.restrict, p, record, "restrict")?,
        algebra,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct PosetDto {
    pub names: Vec<String>,
    /// (lower, upper) by name.
    pub covers: Vec<(String, String)>,
    pub corank: Vec<usize>,
}

fn poset_out(p: &RankedPoset) -> PosetDto {
    PosetDto {
        names: p.names().to_vec(),
        covers: p.covers().iter().map(|&(a, b)| (p.name(a).to_string(), p.name(b).to_string())).collect(),
        corank: p.coranks().to_vec(),
    }
}

fn poset_in(d: &PosetDto, record: &str) -> Result<RankedPoset> {
    if d.corank.len() != d.names.len() {
        return Err(field(record, "corank", "one corank per name"));
    }
    let idx = |n: &str| d.names.iter().position(|x| x == n).ok_or_else(|| field(record, "covers", format!("unknown element {n:?}")));
    let covers = d.covers.iter().map(|(a, b)| Ok((idx(a)?, idx(b)?))).collect::<Result<Vec<_>>>()?;
    Ok(RankedPoset::new(d.names.clone(), covers, d.corank.clone()))
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct StratumDto {
    pub name: String,
    pub embedding: EmbeddedDto,
    /// The splitting T = P_V ⊗ N, lifted into the ring, when present.
    pub duflot: Option<SummandDto>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct NestingDto {
    pub lower: String,
    pub upper: String,
    pub embedding: EmbeddedDto,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct StratificationDto {
    pub ring: AlgebraDto,
    /// Basis of the ideal L, per degree of the ring window.
    pub ideal: Vec<MatrixDto>,
    pub poset: PosetDto,
    pub strata: Vec<StratumDto>,
    pub nestings: Vec<NestingDto>,
}

pub fn stratification_out(ts: &TopStratification) -> StratificationDto {
    let name = |x: usize| ts.poset.name(x).to_string();
    StratificationDto {
        ring: algebra_out(&ts.ring),
        ideal: mats_out(&ts.ideal.bases),
        poset: poset_out(&ts.poset),
        strata: ts
            .strata
            .iter()
            .enumerate()
            .map(|(x, s)| StratumDto {
                name: name(x),
                embedding: embedded_out(&s.embedding),
                duflot: s.duflot.as_ref().map(|d| SummandDto {
                    v: mat_out(d.v.matrix()),
                    shift: d.shift,
                    factor: d.factor.dims().to_vec(),
                    lift: mats_out(&d.lift),
                }),
            })
            .collect(),
        nestings: ts
            .nestings
            .iter()
            .map(|n| NestingDto { lower: name(n.lower), upper: name(n.upper), embedding: embedded_out(&n.embedding) })
            .collect(),
    }
}

pub fn stratification_in(d: &StratificationDto) -> Result<TopStratification> {
    let ring = algebra_in(&d.ring, "ring")?;
    let ideal = subspace_in(&d.ideal, ring.module(), "ring", "ideal")?;
    let poset = poset_in(&d.poset, "poset")?;
    if d.strata.len() != poset.len() {
        return Err(field("strata", "strata", format!("{} strata for {} poset elements", d.strata.len(), poset.len())));
    }
    let mut strata = Vec::new();
    for (x, s) in d.strata.iter().enumerate() {
        let record = format!("stratum {}", s.name);
        if s.name != poset.name(x) {
            return Err(field(&record, "name", format!("expected {:?} in poset order", poset.name(x))));
        }
        let duflot = match &s.duflot {
            None => None,
            Some(sd) => {
                let j = summand_in(sd, ring.p(), &record)?;
                Some(DuflotSplit { v: j.v, shift: j.shift, factor: j.factor, lift: j.lift })
            }
        };
        strata.push(Stratum { embedding: embedded_in(&s.embedding, &record)?, duflot });
    }
    let mut nestings = Vec::new();
    for n in &d.nestings {
        let record = format!("nesting {} < {}", n.lower, n.upper);
        let lower = poset.index(&n.lower).ok_or_else(|| field(&record, "lower", "unknown element"))?;
        let upper = poset.index(&n.upper).ok_or_else(|| field(&record, "upper", "unknown element"))?;
        nestings.push(Nesting { lower, upper, embedding: embedded_in(&n.embedding, &record)? });
    }
    Ok(TopStratification { ring, ideal, poset, strata, nestings })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct DuflotModuleDto {
    pub module: ModuleDto,
    pub poset: PosetDto,
    /// Per poset element, per degree: spanning columns of F(x).
    pub parts: Vec<Vec<MatrixDto>>,
    /// Per poset element: the summand of its graded piece.
    pub summands: Vec<SummandDto>,
}

fn duflot_module_out(m: &DuflotModule) -> DuflotModuleDto {
    let f = &m.filtration;
    DuflotModuleDto {
        module: module_out(&f.module),
        poset: poset_out(&f.poset),
        parts: f.parts.iter().map(|s| mats_out(&s.bases)).collect(),
        summands: m.summands.iter().map(summand_out).collect(),
    }
}

fn duflot_module_in(d: &DuflotModuleDto, record: &str) -> Result<DuflotModule> {
    let module = module_in(&d.module, record)?;
    let poset = poset_in(&d.poset, record)?;
    let parts = d
        .parts
        .iter()
        .enumerate()
        .map(|(x, b)| subspace_in(b, &module, record, &format!("parts[{x}]")))
        .collect::<Result<Vec<_>>>()?;
    let summands = d
        .summands
        .iter()
        .enumerate()
        .map(|(x, s)| summand_in(s, module.p(), &format!("{record} summand {x}")))
        .collect::<Result<Vec<_>>>()?;
    Ok(DuflotModule { filtration: PosetFiltration { poset, module, parts }, summands })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct BundleDto {
    /// Multiplication table, element 0 the identity.
    pub group: Vec<Vec<usize>>,
    pub base: DuflotModuleDto,
    pub total: DuflotModuleDto,
    /// Image in the base poset of each total poset element.
    pub covering: Vec<usize>,
    /// `perm[g][x]`: g x.
    pub perm: Vec<Vec<usize>>,
    /// `action[g][d - lo]`: g on L_d.
    pub action: Vec<Vec<MatrixDto>>,
    /// Per degree: N_d -> L_d.
    pub projection: Vec<MatrixDto>,
}

pub fn bundle_out(b: &KBundle) -> BundleDto {
    BundleDto {
        group: b.action.group.table().to_vec(),
        base: duflot_module_out(&b.base),
        total: duflot_module_out(&b.total),
        covering: b.covering.map.clone(),
        perm: b.action.perm.clone(),
        action: b.action.mats.iter().map(|m| mats_out(m)).collect(),
        projection: mats_out(&b.projection),
    }
}

pub fn bundle_in(d: &BundleDto) -> Result<KBundle> {
    let group = FiniteGroup::from_table(d.group.clone()).map_err(|e| field("bundle", "group", e))?;
    let base = duflot_module_in(&d.base, "base")?;
    let total = duflot_module_in(&d.total, "total")?;
    let p = total.filtration.module.p();
    let mats = d
        .action
        .iter()
        .enumerate()
        .map(|(g, m)| mats_in(m, p, "bundle", &format!("action[{g}]")))
        .collect::<Result<Vec<_>>>()?;
    Ok(KBundle {
        covering: PosetCovering { source: total.poset().clone(), target: base.poset().clone(), map: d.covering.clone() },
        action: KAction { group, perm: d.perm.clone(), mats },
        projection: mats_in(&d.projection, p, "bundle", "projection")?,
        base,
        total,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct KComplexDto {
    pub p: u32,
    pub group: Vec<Vec<usize>>,
    pub lo: i32,
    /// `terms[i][g]`: g acting on C^{lo+i}.
    pub terms: Vec<Vec<MatrixDto>>,
    pub diffs: Vec<MatrixDto>,
}

pub fn kcomplex_out(c: &KComplex) -> KComplexDto {
    KComplexDto {
        p: c.p,
        group: c.group.table().to_vec(),
        lo: c.lo,
        terms: c.terms.iter().map(|m| mats_out(&m.rho)).collect(),
        diffs: mats_out(&c.diffs),
    }
}

pub fn kcomplex_in(d: &KComplexDto) -> Result<KComplex> {
    if !crate::matrix::is_prime(d.p) {
        return Err(field("complex", "p", format!("{} is not prime", d.p)));
    }
    let group = FiniteGroup::from_table(d.group.clone()).map_err(|e| field("complex", "group", e))?;
    let mut terms = Vec::new();
    for (i, rho) in d.terms.iter().enumerate() {
        let record = format!("term {}", d.lo + i as i32);
        let rho = mats_in(rho, d.p, &record, "action")?;
        if rho.len() != group.order() {
            return Err(field(&record, "action", "one matrix per group element"));
        }
        let dim = rho[0].rows();
        if rho.iter().any(|m| m.shape() != (dim, dim)) {
            return Err(field(&record, "action", "matrices must be square of one size"));
        }
        terms.push(KModule { p: d.p, dim, rho });
    }
    Ok(KComplex { group, p: d.p, lo: d.lo, terms, diffs: mats_in(&d.diffs, d.p, "complex", "diffs")? })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum FileDto {
    Module(ModuleDto),
    Filtration(FrfDto),
    Stratification(StratificationDto),
    Kbundle(BundleDto),
    Kcomplex(KComplexDto),
}

/// Any of the JSON instance files.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Instance {
    Module(GradedModule),
    Filtration(FreeRankFiltration),
    Stratification(TopStratification),
    Bundle(KBundle),
    Complex(KComplex),
}

impl Instance {
    pub fn kind(&self) -> &'static str {
        match self {
            Instance::Module(_) => "module",
            Instance::Filtration(_) => "filtration",
            Instance::Stratification(_) => "stratification",
            Instance::Bundle(_) => "kbundle",
            Instance::Complex(_) => "kcomplex",
        }
    }
}

/// Deserializes with the JSON path of the first bad value in the error.
fn typed<T: serde::de::DeserializeOwned>(v: serde_json::Value, record: &str) -> Result<T> {
    serde_path_to_error::deserialize(v).map_err(|e| {
        let path = e.path().to_string();
        field(record, if path == "." { "(top level)" } else { &path }, e.inner())
    })
}

pub fn read_instance(text: &str) -> Result<Instance> {
    let mut value: serde_json::Value = serde_json::from_str(text).map_err(|e| FormatError::Json(e.to_string()))?;
    let kind = match value.as_object_mut().map(|o| o.remove("kind")) {
        Some(Some(serde_json::Value::String(k))) => k,
        Some(_) => return Err(field("file", "kind", "missing or not a string")),
        None => return Err(FormatError::Json("top level is not an object".into())),
    };
    let dto = match kind.as_str() {
        "module" => FileDto::Module(typed(value, &kind)?),
        "filtration" => FileDto::Filtration(typed(value, &kind)?),
        "stratification" => FileDto::Stratification(typed(value, &kind)?),
        "kbundle" => FileDto::Kbundle(typed(value, &kind)?),
        "kcomplex" => FileDto::Kcomplex(typed(value, &kind)?),
        other => return Err(field("file", "kind", format!("unknown kind {other:?}"))),
    };
    Ok(match dto {
        FileDto::Module(m) => Instance::Module(module_in(&m, "module")?),
        FileDto::Filtration(f) => Instance::Filtration(frf_in(&f)?),
        FileDto::Stratification(s) => Instance::Stratification(stratification_in(&s)?),
        FileDto::Kbundle(b) => Instance::Bundle(bundle_in(&b)?),
        FileDto::Kcomplex(c) => Instance::Complex(kcomplex_in(&c)?),
    })
}

/// Compact JSON plus a trailing newline.
pub fn write_instance(inst: &Instance) -> String {
    let dto = match inst {
        Instance::Module(m) => FileDto::Module(module_out(m)),
        Instance::Filtration(f) => FileDto::Filtration(frf_out(f)),
        Instance::Stratification(s) => FileDto::Stratification(stratification_out(s)),
        Instance::Bundle(b) => FileDto::Kbundle(bundle_out(b)),
        Instance::Complex(c) => FileDto::Kcomplex(kcomplex_out(c)),
    };
    let mut s = serde_json::to_string(&dto).expect("plain data serializes");
    s.push('\n');
    s
}

macro_rules! expect_kind {
    ($name:ident, $variant:ident, $ty:ty, $label:literal) => {
        pub fn $name(text: &str) -> Result<$ty> {
            match read_instance(text)? {
                Instance::$variant(x) => Ok(x),
                other => Err(FormatError::Kind { expected: $label, found: other.kind() }),
            }
        }
    };
}

expect_kind!(read_module, Module, GradedModule, "module");
expect_kind!(read_filtration, Filtration, FreeRankFiltration, "filtration");
expect_kind!(read_stratification, Stratification, TopStratification, "stratification");
expect_kind!(read_bundle, Bundle, KBundle, "kbundle");
expect_kind!(read_kcomplex, Complex, KComplex, "kcomplex");

/// A permutation group with named subgroups.
#[derive(Clone, Debug)]
pub struct GroupFile {
    pub group: PGroup,
    pub subgroups: Vec<(String, Vec<Perm>)>,
}

impl GroupFile {
    pub fn subgroup(&self, name: &str) -> Option<Subgroup> {
        let (_, gens) = self.subgroups.iter().find(|(n, _)| n == name)?;
        self.group.subgroup_from_perms(gens).ok()
    }
}

/// Line format, `#` starts a comment:
///
/// ```text
/// prime 3
/// degree 9
/// gen (1,2,3)
/// gen (1,4,7)(2,5,8)(3,6,9)
/// subgroup base (1,2,3) (4,5,6) (7,8,9)
/// ```
///
/// Cycles use points 1..degree; several gens may share a line.
pub fn parse_group_file(text: &str, cap: usize) -> Result<GroupFile> {
    let (mut prime, mut degree) = (None, None);
    let mut gens: Vec<(usize, String)> = Vec::new();
    let mut subs: Vec<(usize, String, Vec<String>)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        let no = i + 1;
        let err = |msg: String| FormatError::Line { line: no, msg };
        if line.is_empty() {
            continue;
        }
        let (key, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        match key {
            "prime" => prime = Some(rest.parse::<u32>().map_err(|_| err(format!("bad prime {rest:?}")))?),
            "degree" => degree = Some(rest.parse::<usize>().map_err(|_| err(format!("bad degree {rest:?}")))?),
            "gen" => gens.extend(rest.split_whitespace().map(|s| (no, s.to_string()))),
            "subgroup" => {
                let mut it = rest.split_whitespace();
                let name = it.next().ok_or_else(|| err("subgroup needs a name".into()))?;
                subs.push((no, name.to_string(), it.map(String::from).collect()));
            }
            other => return Err(err(format!("unknown keyword {other:?}"))),
        }
    }
    let p = prime.ok_or(FormatError::Line { line: 0, msg: "missing `prime`".into() })?;
    if !crate::matrix::is_prime(p) {
        return Err(FormatError::Line { line: 0, msg: format!("{p} is not prime") });
    }
    let m = degree.ok_or(FormatError::Line { line: 0, msg: "missing `degree`".into() })?;
    let perm = |no: usize, s: &str| parse_cycles(s, m).map_err(|e| FormatError::Line { line: no, msg: e.to_string() });
    let gen_perms = gens.iter().map(|(no, s)| perm(*no, s)).collect::<Result<Vec<_>>>()?;
    let group = PGroup::new(p, m, gen_perms, cap)?;
    let mut subgroups = Vec::new();
    for (no, name, gs) in subs {
        let ps = gs.iter().map(|s| perm(no, s)).collect::<Result<Vec<_>>>()?;
        if let Some(g) = ps.iter().find(|g| group.find(g).is_none()) {
            return Err(FormatError::Line { line: no, msg: format!("{} is not in the group", crate::pgroups::format_cycles(g)) });
        }
        subgroups.push((name, ps));
    }
    Ok(GroupFile { group, subgroups })
}

/// Writes a group file; generators one per line.
pub fn write_group_file(g: &GroupFile) -> String {
    let mut s = format!("prime {}\ndegree {}\n", g.group.p(), g.group.degree());
    for x in g.group.gens() {
        s.push_str(&format!("gen {}\n", crate::pgroups::format_cycles(x)));
    }
    for (name, gs) in &g.subgroups {
        let cyc: Vec<String> = gs.iter().map(crate::pgroups::format_cycles).collect();
        s.push_str(&format!("subgroup {name} {}\n", cyc.join(" ")));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{random_bundle, random_filtration, random_stratification, random_two_row, FiltrationParams, StratParams, TwoRowParams};

    fn round_trip(inst: Instance) {
        let a = write_instance(&inst);
        let back = read_instance(&a).unwrap();
        assert_eq!(back, inst);
        assert_eq!(write_instance(&back), a);
    }

    #[test]
    fn instances_round_trip() {
        let f = random_filtration(FiltrationParams::small(3, 2), 4, 8).frf;
        round_trip(Instance::Module(f.module().clone()));
        round_trip(Instance::Filtration(f));
        let sp = StratParams { p: 2, w: 2, socle: true, mult_hi: 6 };
        round_trip(Instance::Stratification(random_stratification(sp, 1, 8).strat));
        let sp = StratParams { p: 3, w: 1, socle: false, mult_hi: 6 };
        round_trip(Instance::Bundle(random_bundle(sp, 3, 2, -2, 2)));
        let tp = TwoRowParams { p: 3, bottom: 0, top: 2, chains: 1, contractible: 1, trivial_defect: true };
        round_trip(Instance::Complex(random_two_row(tp, 5)));
    }

    #[test]
    fn errors_name_record_and_field() {
        let f = random_filtration(FiltrationParams::small(2, 1), 0, 6).frf;
        let mut dto = frf_out(&f);
        dto.summands[0][0].factor = vec![2];
        let text = serde_json::to_string(&FileDto::Filtration(dto)).unwrap();
        let e = read_instance(&text).unwrap_err();
        assert!(matches!(&e, FormatError::Field { record, field, .. } if record == "summand 0.0" && field == "factor"), "{e}");
        let e = read_module("{\"kind\": \"module\", \"p\": 2}").unwrap_err();
        assert!(matches!(&e, FormatError::Field { record, msg, .. } if record == "module" && msg.contains("missing field")), "{e}");
        let mut v: serde_json::Value = serde_json::from_str(&write_instance(&Instance::Filtration(f.clone()))).unwrap();
        v["module"]["dims"][1] = serde_json::json!("x");
        let e = read_instance(&v.to_string()).unwrap_err();
        assert!(matches!(&e, FormatError::Field { record, field, .. } if record == "filtration" && field == "module.dims[1]"), "{e}");
        assert!(matches!(read_module("{\"kind\": "), Err(FormatError::Json(_))));
        let e = read_module(&write_instance(&Instance::Filtration(f))).unwrap_err();
        assert_eq!(e, FormatError::Kind { expected: "module", found: "filtration" });
    }

    #[test]
    fn group_file_round_trip() {
        let text = "# W(2) at p = 3\nprime 3\ndegree 9\ngen (1,2,3) (1,4,7)(2,5,8)(3,6,9)\nsubgroup base (1,2,3) (4,5,6) (7,8,9)\n";
        let g = parse_group_file(text, 1000).unwrap();
        assert_eq!(g.group.order(), 81);
        assert_eq!(g.subgroup("base").unwrap().order(), 27);
        let out = write_group_file(&g);
        let again = parse_group_file(&out, 1000).unwrap();
        assert_eq!(write_group_file(&again), out);
        assert!(matches!(parse_group_file("prime 3\ndegree 3\ngen (1,2,4)\n", 10), Err(FormatError::Line { line: 3, .. })));
    }
}
