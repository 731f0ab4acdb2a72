//! JSON presentations of modules, algebras, functors and maps.
//!
//! Matrices are lists of bitstrings: character `c` of row `r` is the coefficient
//! of target basis vector `c` in the image of source basis vector `r`.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::f2::{BitVec, Matrix, Subspace};
use crate::functors::UnstableAlgebra;
use crate::gmod::{module_from_matrices, GradedModule, ModuleMap};
use crate::polyfunc::{LinearCategory, NatTrans, PolyFunctor, SubFunctor};
use crate::{Error, Result};

/// `Sq^i` on one degree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SqBlock {
    pub i: u32,
    pub from_degree: i32,
    pub rows: Vec<String>,
}

/// Products of basis classes in degrees `a` and `b`; row `i·dim(b) + j` is `x_i·y_j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductBlock {
    pub a: i32,
    pub b: i32,
    pub rows: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModuleFile {
    pub window: [i32; 2],
    pub complete: bool,
    pub dims: BTreeMap<i32, usize>,
    #[serde(default)]
    pub sq: Vec<SqBlock>,
    /// Present for unstable algebras.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub product: Option<Vec<ProductBlock>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorAction {
    pub generator: String,
    pub rows: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctorFile {
    #[serde(default)]
    pub name: String,
    pub kmax: usize,
    pub dims: Vec<usize>,
    pub action: Vec<GeneratorAction>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapFile {
    pub shift: i32,
    pub matrices: BTreeMap<i32, Vec<String>>,
}

/// Dimensions and trust of a module, for reports.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ModuleSummary {
    pub window: [i32; 2],
    pub complete: bool,
    pub trust: String,
    pub dims: BTreeMap<i32, usize>,
}

impl ModuleSummary {
    pub fn of(m: &GradedModule) -> ModuleSummary {
        ModuleSummary {
            window: [m.dmin(), m.dmax()],
            complete: m.complete(),
            trust: m.trust().to_string(),
            dims: m.dim_map(),
        }
    }
}

impl std::fmt::Display for ModuleSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", dims_line(&self.dims))?;
        write!(f, "  (window [{}, {}]", self.window[0], self.window[1])?;
        if self.complete {
            write!(f, ", complete)")
        } else {
            write!(f, ", trusted through {})", self.trust)
        }
    }
}

/// `d:n` pairs for the nonzero degrees, or `0`.
pub fn dims_line(dims: &BTreeMap<i32, usize>) -> String {
    let parts: Vec<String> = dims.iter().filter(|(_, &n)| n > 0).map(|(d, n)| format!("{d}:{n}")).collect();
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" ")
    }
}

pub fn matrix_rows(m: &Matrix) -> Vec<String> {
    m.row_vecs().iter().map(BitVec::to_bitstring).collect()
}

/// Parses `rows` as a `nrows × ncols` matrix; `at` names the location for errors.
pub fn matrix_from_rows(rows: &[String], nrows: usize, ncols: usize, at: &str) -> Result<Matrix> {
    if rows.len() != nrows {
        return Err(Error::Parse(format!("{at}: expected {nrows} rows, found {}", rows.len())));
    }
    let mut out = Vec::with_capacity(nrows);
    for (r, s) in rows.iter().enumerate() {
        let v = BitVec::from_bitstring(s).ok_or_else(|| Error::Parse(format!("{at}.rows[{r}]: not a bitstring")))?;
        if v.len() != ncols {
            return Err(Error::Parse(format!("{at}.rows[{r}]: expected {ncols} columns, found {}", v.len())));
        }
        out.push(v);
    }
    Ok(Matrix::from_rows(ncols, &out))
}

/// serde_json messages end with `at line L column C`.
fn json_error(e: serde_json::Error) -> Error {
    Error::Parse(e.to_string())
}

fn at_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Parse(s) => Error::Parse(format!("{}: {s}", path.display())),
        other => other,
    }
}

impl ModuleFile {
    pub fn from_module(m: &GradedModule) -> ModuleFile {
        let mut sq = Vec::new();
        for d in m.dmin()..=m.dmax() {
            if m.dim(d) == 0 {
                continue;
            }
            for i in 1..=(m.dmax() - d) as u32 {
                let mat = m.sq(i, d);
                if !mat.is_zero() {
                    sq.push(SqBlock { i, from_degree: d, rows: matrix_rows(&mat) });
                }
            }
        }
        let dims = m.dim_map().into_iter().filter(|&(_, n)| n > 0).collect();
        ModuleFile { window: [m.dmin(), m.dmax()], complete: m.complete(), dims, sq, product: None }
    }

    pub fn from_algebra(k: &UnstableAlgebra) -> ModuleFile {
        let m = &k.carrier;
        let mut file = ModuleFile::from_module(m);
        let mut blocks = Vec::new();
        let degs: Vec<i32> = m.degrees().into_iter().filter(|&d| m.dim(d) > 0).collect();
        for &a in &degs {
            for &b in &degs {
                if a + b > m.dmax() {
                    continue;
                }
                let rows: Vec<BitVec> =
                    (0..m.dim(a)).flat_map(|i| (0..m.dim(b)).map(move |j| (i, j))).map(|(i, j)| k.mult(a, i, b, j)).collect();
                let mat = Matrix::from_rows(m.dim(a + b), &rows);
                if !mat.is_zero() {
                    blocks.push(ProductBlock { a, b, rows: matrix_rows(&mat) });
                }
            }
        }
        file.product = Some(blocks);
        file
    }

    pub fn to_module(&self) -> Result<GradedModule> {
        let [dmin, dmax] = self.window;
        if dmin > dmax {
            return Err(Error::Parse(format!("window: [{dmin}, {dmax}] is empty")));
        }
        for (&d, &n) in &self.dims {
            if n > 0 && (d < dmin || d > dmax) {
                return Err(Error::Parse(format!("dims.{d}: degree outside the window")));
            }
        }
        let dim = |d: i32| self.dims.get(&d).copied().unwrap_or(0);
        let mut sq = BTreeMap::new();
        for (k, b) in self.sq.iter().enumerate() {
            let at = format!("sq[{k}]");
            if b.i == 0 {
                return Err(Error::Parse(format!("{at}: Sq^0 is the identity and is not listed")));
            }
            let to = b.from_degree + b.i as i32;
            if b.from_degree < dmin || to > dmax {
                return Err(Error::Parse(format!("{at}: Sq^{} from degree {} leaves the window", b.i, b.from_degree)));
            }
            let m = matrix_from_rows(&b.rows, dim(b.from_degree), dim(to), &at)?;
            if sq.insert((b.i, b.from_degree), m).is_some() {
                return Err(Error::Parse(format!("{at}: duplicate block")));
            }
        }
        Ok(module_from_matrices((dmin, dmax), self.complete, &self.dims, &sq))
    }

    pub fn to_algebra(&self) -> Result<UnstableAlgebra> {
        let m = self.to_module()?;
        let mut prods: BTreeMap<(i32, i32), Matrix> = BTreeMap::new();
        for (k, b) in self.product.as_deref().unwrap_or_default().iter().enumerate() {
            let at = format!("product[{k}]");
            if b.a + b.b > m.dmax() || b.a < m.dmin() || b.b < m.dmin() {
                return Err(Error::Parse(format!("{at}: degrees leave the window")));
            }
            let mat = matrix_from_rows(&b.rows, m.dim(b.a) * m.dim(b.b), m.dim(b.a + b.b), &at)?;
            if prods.insert((b.a, b.b), mat).is_some() {
                return Err(Error::Parse(format!("{at}: duplicate block")));
            }
        }
        Ok(UnstableAlgebra::new(&m, |a, i, b, j| match prods.get(&(a, b)) {
            Some(mat) => mat.row(i * m.dim(b) + j),
            None => BitVec::zeros(m.dim(a + b)),
        }))
    }
}

pub fn parse_module_file(text: &str) -> Result<ModuleFile> {
    serde_json::from_str(text).map_err(json_error)
}

pub fn parse_module(text: &str) -> Result<GradedModule> {
    parse_module_file(text)?.to_module()
}

pub fn parse_algebra(text: &str) -> Result<UnstableAlgebra> {
    parse_module_file(text)?.to_algebra()
}

pub fn module_json(m: &GradedModule) -> String {
    to_json(&ModuleFile::from_module(m))
}

pub fn algebra_json(k: &UnstableAlgebra) -> String {
    to_json(&ModuleFile::from_algebra(k))
}

impl FunctorFile {
    pub fn from_functor(f: &PolyFunctor) -> FunctorFile {
        let action = f
            .cat
            .gens
            .iter()
            .zip(&f.action)
            .map(|(g, m)| GeneratorAction { generator: g.label(), rows: matrix_rows(m) })
            .collect();
        FunctorFile { name: f.name.clone(), kmax: f.kmax(), dims: f.dims.clone(), action }
    }

    /// Rebuilds the functor; generators may be listed in any order but each exactly once.
    pub fn to_functor(&self) -> Result<PolyFunctor> {
        if self.dims.len() != self.kmax + 1 {
            return Err(Error::Parse(format!("dims: expected {} entries, found {}", self.kmax + 1, self.dims.len())));
        }
        let cat = LinearCategory::new(self.kmax);
        let mut given: BTreeMap<&str, (usize, &GeneratorAction)> = BTreeMap::new();
        for (k, a) in self.action.iter().enumerate() {
            if given.insert(a.generator.as_str(), (k, a)).is_some() {
                return Err(Error::Parse(format!("action[{k}]: duplicate generator {}", a.generator)));
            }
        }
        let mut action = Vec::with_capacity(cat.gens.len());
        for g in &cat.gens {
            let label = g.label();
            let (k, a) = given
                .remove(label.as_str())
                .ok_or_else(|| Error::Parse(format!("action: generator {label} missing")))?;
            action.push(matrix_from_rows(&a.rows, self.dims[g.source()], self.dims[g.target()], &format!("action[{k}]"))?);
        }
        if let Some((name, (k, _))) = given.into_iter().next() {
            return Err(Error::Parse(format!("action[{k}]: unknown generator {name}")));
        }
        let name = if self.name.is_empty() { "F".to_string() } else { self.name.clone() };
        let f = PolyFunctor { name, cat: Arc::clone(&cat), dims: self.dims.clone(), action };
        let defects = f.defects();
        if !defects.is_empty() {
            return Err(Error::Parse(format!("not a functor: {}", defects.join("; "))));
        }
        Ok(f)
    }
}

/// Accepts a functor file, or a report carrying one under `"functor"`.
pub fn parse_functor(text: &str) -> Result<PolyFunctor> {
    let mut value: serde_json::Value = serde_json::from_str(text).map_err(json_error)?;
    if let Some(inner) = value.get_mut("functor") {
        value = inner.take();
    }
    let file: FunctorFile = serde_json::from_value(value).map_err(|e| Error::Parse(e.to_string()))?;
    file.to_functor()
}

/// Functors `F₀, …, F_r` and natural transformations `F_i → F_{i+1}`;
/// `maps[i][k]` is the component at `F₂^k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceFile {
    pub functors: Vec<FunctorFile>,
    pub maps: Vec<Vec<Vec<String>>>,
}

impl SequenceFile {
    pub fn from_maps(maps: &[&NatTrans]) -> SequenceFile {
        let mut functors = vec![FunctorFile::from_functor(&maps[0].source)];
        functors.extend(maps.iter().map(|t| FunctorFile::from_functor(&t.target)));
        let maps = maps.iter().map(|t| t.mats.iter().map(matrix_rows).collect()).collect();
        SequenceFile { functors, maps }
    }

    pub fn to_maps(&self) -> Result<Vec<NatTrans>> {
        if self.functors.len() != self.maps.len() + 1 {
            return Err(Error::Parse(format!(
                "expected {} maps between {} functors, found {}",
                self.functors.len().saturating_sub(1),
                self.functors.len(),
                self.maps.len()
            )));
        }
        let fs = self.functors.iter().map(FunctorFile::to_functor).collect::<Result<Vec<_>>>()?;
        let kmax = fs[0].kmax();
        if fs.iter().any(|f| f.kmax() != kmax) {
            return Err(Error::Parse("functors: kmax differs".into()));
        }
        let mut out = Vec::new();
        for (i, comps) in self.maps.iter().enumerate() {
            let (a, b) = (&fs[i], &fs[i + 1]);
            if comps.len() != kmax + 1 {
                return Err(Error::Parse(format!("maps[{i}]: expected {} components", kmax + 1)));
            }
            let mats = comps
                .iter()
                .enumerate()
                .map(|(k, rows)| matrix_from_rows(rows, a.dims[k], b.dims[k], &format!("maps[{i}][{k}]")))
                .collect::<Result<Vec<_>>>()?;
            let t = NatTrans::new(a, b, mats);
            let defects = t.defects();
            if !defects.is_empty() {
                return Err(Error::Parse(format!("maps[{i}]: not natural: {}", defects.join("; "))));
            }
            out.push(t);
        }
        Ok(out)
    }
}

pub fn parse_sequence(text: &str) -> Result<Vec<NatTrans>> {
    let file: SequenceFile = serde_json::from_str(text).map_err(json_error)?;
    file.to_maps()
}

pub fn sequence_json(maps: &[&NatTrans]) -> String {
    to_json(&SequenceFile::from_maps(maps))
}

/// A subfunctor as a basis of `G(F₂^k)` for each `k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubFunctorFile {
    pub spaces: Vec<Vec<String>>,
}

impl SubFunctorFile {
    pub fn from_subfunctor(s: &SubFunctor) -> SubFunctorFile {
        SubFunctorFile { spaces: s.spaces.iter().map(|v| matrix_rows(v.basis())).collect() }
    }

    pub fn to_subfunctor(&self, ambient: &PolyFunctor) -> Result<SubFunctor> {
        if self.spaces.len() != ambient.dims.len() {
            return Err(Error::Parse(format!("spaces: expected {} entries", ambient.dims.len())));
        }
        let spaces = self
            .spaces
            .iter()
            .enumerate()
            .map(|(k, rows)| {
                let m = matrix_from_rows(rows, rows.len(), ambient.dims[k], &format!("spaces[{k}]"))?;
                Ok(Subspace::span(ambient.dims[k], &m))
            })
            .collect::<Result<Vec<_>>>()?;
        let s = SubFunctor { ambient: ambient.clone(), spaces };
        if !s.is_stable() {
            return Err(Error::Parse("spaces: not closed under the action".into()));
        }
        Ok(s)
    }
}

pub fn parse_subfunctor(text: &str, ambient: &PolyFunctor) -> Result<SubFunctor> {
    let file: SubFunctorFile = serde_json::from_str(text).map_err(json_error)?;
    file.to_subfunctor(ambient)
}

pub fn functor_json(f: &PolyFunctor) -> String {
    to_json(&FunctorFile::from_functor(f))
}

impl MapFile {
    pub fn from_map(f: &ModuleMap) -> MapFile {
        let matrices = f
            .source
            .degrees()
            .into_iter()
            .filter(|&d| f.source.dim(d) > 0)
            .map(|d| (d, matrix_rows(&f.mat(d))))
            .collect();
        MapFile { shift: f.shift, matrices }
    }

    pub fn to_map(&self, source: &GradedModule, target: &GradedModule) -> Result<ModuleMap> {
        let mut mats = BTreeMap::new();
        for (&d, rows) in &self.matrices {
            let at = format!("matrices.{d}");
            mats.insert(d, matrix_from_rows(rows, source.dim(d), target.dim(d + self.shift), &at)?);
        }
        Ok(ModuleMap::from_fn(source, target, self.shift, |d| {
            mats.get(&d).cloned().unwrap_or_else(|| Matrix::zero(source.dim(d), target.dim(d + self.shift)))
        }))
    }
}

/// Pretty JSON with a trailing newline. Field and map orders are fixed, so output is byte-stable.
pub fn to_json<T: Serialize + ?Sized>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serialization");
    s.push('\n');
    s
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn read_module(path: &Path) -> Result<GradedModule> {
    parse_module(&read_text(path)?).map_err(|e| at_path(path, e))
}

pub fn read_algebra(path: &Path) -> Result<UnstableAlgebra> {
    parse_algebra(&read_text(path)?).map_err(|e| at_path(path, e))
}

pub fn read_functor(path: &Path) -> Result<PolyFunctor> {
    parse_functor(&read_text(path)?).map_err(|e| at_path(path, e))
}

pub fn read_sequence(path: &Path) -> Result<Vec<NatTrans>> {
    parse_sequence(&read_text(path)?).map_err(|e| at_path(path, e))
}

pub fn read_subfunctor(path: &Path, ambient: &PolyFunctor) -> Result<SubFunctor> {
    parse_subfunctor(&read_text(path)?, ambient).map_err(|e| at_path(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gmod::free_unstable;
    use crate::library::rp2;
    use crate::polyfunc::{exterior_power, identity_functor};

    #[test]
    fn module_round_trip() {
        for m in [free_unstable(2, 12), rp2(), crate::library::n_t(2)] {
            let text = module_json(&m);
            let back = parse_module(&text).unwrap();
            assert!(back.same_as(&m));
            assert_eq!(module_json(&back), text);
        }
    }

    #[test]
    fn algebra_round_trip() {
        let k = UnstableAlgebra::projective(5);
        let text = algebra_json(&k);
        let back = parse_algebra(&text).unwrap();
        assert!(back.validate().is_empty());
        assert_eq!(algebra_json(&back), text);
    }

    #[test]
    fn functor_round_trip() {
        for f in [identity_functor(3), exterior_power(2, 3)] {
            let text = functor_json(&f);
            assert_eq!(parse_functor(&text).unwrap(), f);
        }
    }

    #[test]
    fn sequence_round_trip() {
        let q = crate::polyfunc::quadratic_functors(2);
        let text = sequence_json(&[&q.frobenius, &q.s2_to_lambda2]);
        let maps = parse_sequence(&text).unwrap();
        assert!(maps[0].same_as(&q.frobenius) && maps[1].same_as(&q.s2_to_lambda2));
        let img = q.frobenius.image();
        let sub = SubFunctorFile::from_subfunctor(&img);
        assert!(sub.to_subfunctor(&q.s2).unwrap().same_as(&img));
    }

    #[test]
    fn errors_name_the_position() {
        let e = parse_module("{\"window\": [0, 2],\n \"complete\": tru}").unwrap_err().to_string();
        assert!(e.contains("line 2 column"), "{e}");
        let bad = r#"{"window":[0,2],"complete":true,"dims":{"1":1,"2":1},"sq":[{"i":1,"from_degree":1,"rows":["11"]}]}"#;
        let e = parse_module(bad).unwrap_err().to_string();
        assert!(e.contains("sq[0].rows[0]"), "{e}");
    }

    #[test]
    fn rejects_non_functor() {
        let mut file = FunctorFile::from_functor(&identity_functor(2));
        let k = file.action.iter().rposition(|a| a.generator.starts_with('p')).unwrap();
        let ncols = file.action[k].rows.first().map_or(0, |r| r.len());
        file.action[k].rows = vec!["0".repeat(ncols); file.action[k].rows.len()];
        assert!(file.to_functor().is_err());
    }
}
