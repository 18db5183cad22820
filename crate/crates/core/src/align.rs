//! Least-squares translation matrices between embedding spaces.
//!
//! Orientation is row-vector throughout: a source vector `x` (a row) maps
//! to `x W`, and a vocabulary matrix `Z` (one word per row) maps to `Z W`.
//! Fitting minimizes `sum_i ||x_i W - z_i||^2` over pivot word pairs.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::corpus::Lang;
use crate::embeddings::{EmbeddingTable, VocabularyMatrix};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_solve, Matrix};
use crate::rng::{stream, SeededRng};

/// Bilingual lexicon read from `src_word<TAB>tgt_word` lines.
#[derive(Debug, Clone, Default)]
pub struct Dictionary {
    entries: Vec<(String, String)>,
}

impl Dictionary {
    pub fn new(entries: Vec<(String, String)>) -> Self {
        Dictionary { entries }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut entries = Vec::new();
        for (idx, line) in content.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (s, t) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(path, idx + 1, "expected src_word<TAB>tgt_word"))?;
            entries.push((s.trim().to_string(), t.trim().to_string()));
        }
        Ok(Dictionary { entries })
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Keeps entries whose words both have vectors.
    pub fn resolvable(&self, src: &EmbeddingTable, tgt: &EmbeddingTable) -> Dictionary {
        Dictionary {
            entries: self
                .entries
                .iter()
                .filter(|(s, t)| src.contains(s) && tgt.contains(t))
                .cloned()
                .collect(),
        }
    }
}

/// Which language's frequency ranks choose the pivot words.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankedSide {
    Source,
    /// Rank target-language words and translate them back, the usual setup
    /// when the target is the resource-rich pivot language.
    Target,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PivotPairSet {
    pub src_lang: Lang,
    pub tgt_lang: Lang,
    /// All `K` pairs, most frequent first.
    pub pairs: Vec<(String, String)>,
    pub train: Vec<(String, String)>,
    pub test: Vec<(String, String)>,
}

impl PivotPairSet {
    pub fn k(&self) -> usize {
        self.pairs.len()
    }
}

#[derive(Debug, Clone)]
pub struct PivotSelection {
    pub src_lang: Lang,
    pub tgt_lang: Lang,
    pub side: RankedSide,
    pub k: usize,
    pub train_count: usize,
    pub seed: u64,
}

/// Walks the rank list from the most frequent word, skipping words with no
/// dictionary entry, until `k` pairs are found; then splits them into
/// `train_count` training pairs and `k - train_count` test pairs by a
/// seeded shuffle. Each source word is used at most once.
pub fn select_pivot_pairs(
    ranks: &HashMap<String, usize>,
    dictionary: &Dictionary,
    sel: &PivotSelection,
) -> Result<PivotPairSet> {
    if sel.k == 0 || sel.train_count > sel.k {
        return Err(Error::Argument(format!(
            "need 0 < train ({}) <= K ({})",
            sel.train_count, sel.k
        )));
    }
    let mut lookup: HashMap<&str, &str> = HashMap::new();
    for (s, t) in &dictionary.entries {
        let (key, val) = match sel.side {
            RankedSide::Source => (s.as_str(), t.as_str()),
            RankedSide::Target => (t.as_str(), s.as_str()),
        };
        lookup.entry(key).or_insert(val);
    }

    let mut ranked: Vec<(&String, usize)> = ranks.iter().map(|(w, &r)| (w, r)).collect();
    ranked.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(b.0)));

    let mut pairs = Vec::with_capacity(sel.k);
    let mut used_src = HashSet::new();
    for (word, _) in ranked {
        if pairs.len() == sel.k {
            break;
        }
        let Some(&other) = lookup.get(word.as_str()) else {
            continue;
        };
        let (src, tgt) = match sel.side {
            RankedSide::Source => (word.as_str(), other),
            RankedSide::Target => (other, word.as_str()),
        };
        if used_src.insert(src.to_string()) {
            pairs.push((src.to_string(), tgt.to_string()));
        }
    }
    if pairs.len() < sel.k {
        return Err(Error::Coverage {
            needed: sel.k,
            found: pairs.len(),
        });
    }

    let mut order: Vec<usize> = (0..pairs.len()).collect();
    SeededRng::new(sel.seed, stream::PIVOT_SPLIT).shuffle(&mut order);
    let mut is_train = vec![false; pairs.len()];
    for &i in &order[..sel.train_count] {
        is_train[i] = true;
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (i, p) in pairs.iter().enumerate() {
        if is_train[i] {
            train.push(p.clone());
        } else {
            test.push(p.clone());
        }
    }
    Ok(PivotPairSet {
        src_lang: sel.src_lang.clone(),
        tgt_lang: sel.tgt_lang.clone(),
        pairs,
        train,
        test,
    })
}

/// Stacks the vectors of word pairs into `(X, Z)`, one pair per row.
pub fn resolve_pairs(pairs: &[(String, String)], src: &EmbeddingTable, tgt: &EmbeddingTable) -> Result<(Matrix, Matrix)> {
    if src.dim() != tgt.dim() {
        return Err(Error::Argument(format!(
            "source dim {} differs from target dim {}",
            src.dim(),
            tgt.dim()
        )));
    }
    let mut xs = Vec::with_capacity(pairs.len());
    let mut zs = Vec::with_capacity(pairs.len());
    for (s, t) in pairs {
        let x = src
            .get(s)
            .ok_or_else(|| Error::Argument(format!("{s:?} has no {} vector", src.lang())))?;
        let z = tgt
            .get(t)
            .ok_or_else(|| Error::Argument(format!("{t:?} has no {} vector", tgt.lang())))?;
        xs.push(x);
        zs.push(z);
    }
    Ok((Matrix::from_rows(&xs, src.dim())?, Matrix::from_rows(&zs, tgt.dim())?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Solver {
    /// `(X^T X) W = X^T Z` by Cholesky, with a ridge term when `X^T X` is
    /// numerically singular.
    NormalEquations,
    /// Plain gradient descent with step `1 / L`.
    GradientDescent { max_iters: usize, tol: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub solver: Solver,
    pub ridge: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            solver: Solver::NormalEquations,
            ridge: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranslationMatrix {
    pub src_lang: Lang,
    pub tgt_lang: Lang,
    pub w: Matrix,
    /// Objective value at `w`.
    pub fit_residual: f64,
    /// Ridge strength actually applied, if the fallback fired.
    pub ridge: Option<f64>,
    /// Fewer pairs than dimensions.
    pub underdetermined: bool,
}

impl TranslationMatrix {
    pub fn identity(src_lang: Lang, tgt_lang: Lang, dim: usize) -> Self {
        TranslationMatrix {
            src_lang,
            tgt_lang,
            w: Matrix::identity(dim),
            fit_residual: 0.0,
            ridge: None,
            underdetermined: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.w.rows()
    }

    pub fn map_vector(&self, x: &[f64]) -> Vec<f64> {
        self.w.left_mul(x)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    /// Text form: a `translation-matrix v1` line, `src`, `tgt`, `dim`,
    /// `residual` and `ridge` (`none` or a real) header lines, then `dim`
    /// rows of `dim` space-separated reals.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("translation-matrix v1\n");
        writeln!(out, "src {}", self.src_lang).unwrap();
        writeln!(out, "tgt {}", self.tgt_lang).unwrap();
        writeln!(out, "dim {}", self.dim()).unwrap();
        writeln!(out, "residual {}", self.fit_residual).unwrap();
        match self.ridge {
            Some(r) => writeln!(out, "ridge {r}").unwrap(),
            None => out.push_str("ridge none\n"),
        }
        for i in 0..self.dim() {
            let row: Vec<String> = self.w.row(i).iter().map(|v| v.to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn load(path: &Path) -> Result<Self> {
        let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&content, path)
    }

    pub fn parse(content: &str, path: &Path) -> Result<Self> {
        let lines: Vec<&str> = content.lines().collect();
        let field = |idx: usize, key: &str| -> Result<&str> {
            lines
                .get(idx)
                .and_then(|l| l.strip_prefix(key))
                .and_then(|rest| rest.strip_prefix(' '))
                .ok_or_else(|| Error::parse(path, idx + 1, format!("expected \"{key} ...\"")))
        };
        if lines.first().map(|l| l.trim()) != Some("translation-matrix v1") {
            return Err(Error::parse(path, 1, "missing \"translation-matrix v1\" header"));
        }
        let src_lang = Lang::new(field(1, "src")?);
        let tgt_lang = Lang::new(field(2, "tgt")?);
        let dim: usize = field(3, "dim")?
            .parse()
            .map_err(|_| Error::parse(path, 4, "bad dim"))?;
        let fit_residual: f64 = field(4, "residual")?
            .parse()
            .map_err(|_| Error::parse(path, 5, "bad residual"))?;
        let ridge = match field(5, "ridge")? {
            "none" => None,
            r => Some(r.parse().map_err(|_| Error::parse(path, 6, "bad ridge"))?),
        };
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            let line_no = 7 + i;
            let line = lines
                .get(6 + i)
                .ok_or_else(|| Error::parse(path, line_no, "missing matrix row"))?;
            let row: Vec<f64> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::parse(path, line_no, "bad number"))?;
            if row.len() != dim {
                return Err(Error::parse(path, line_no, format!("expected {dim} values")));
            }
            data.extend(row);
        }
        let w = Matrix::from_vec(dim, dim, data)?;
        if !w.is_finite() {
            return Err(Error::parse(path, 7, "non-finite matrix entry"));
        }
        Ok(TranslationMatrix {
            src_lang,
            tgt_lang,
            w,
            fit_residual,
            ridge,
            underdetermined: false,
        })
    }
}

/// Value of the least-squares objective `sum_i ||x_i W - z_i||^2`.
pub fn objective(x: &Matrix, z: &Matrix, w: &Matrix) -> f64 {
    let mut total = 0.0;
    for i in 0..x.rows() {
        let mapped = w.left_mul(x.row(i));
        total += mapped
            .iter()
            .zip(z.row(i))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
    }
    total
}

/// Fits `W` minimizing `sum_i ||x_i W - z_i||^2` where `x_i`, `z_i` are the
/// rows of `x` and `z`.
pub fn fit_translation_matrix(
    x: &Matrix,
    z: &Matrix,
    src_lang: Lang,
    tgt_lang: Lang,
    opts: &FitOptions,
) -> Result<TranslationMatrix> {
    if x.rows() == 0 {
        return Err(Error::Argument("no pivot pairs to fit".into()));
    }
    if x.rows() != z.rows() || x.cols() != z.cols() {
        return Err(Error::Argument(format!(
            "pair matrices differ in shape: {}x{} vs {}x{}",
            x.rows(),
            x.cols(),
            z.rows(),
            z.cols()
        )));
    }
    let dim = x.cols();
    let underdetermined = x.rows() < dim;
    if underdetermined {
        log::warn!("fitting a {dim}-dim translation matrix from only {} pairs", x.rows());
    }
    let gram = x.gram();
    let rhs = x.t_matmul(z)?;

    let (w, ridge) = match opts.solver {
        Solver::NormalEquations => {
            let scale = (gram.trace() / dim as f64).max(f64::MIN_POSITIVE);
            match cholesky(&gram, 1e-12 * scale) {
                Some(l) => (cholesky_solve(&l, &rhs), None),
                None => {
                    let mut damped = gram.clone();
                    damped.add_to_diagonal(opts.ridge);
                    let l = cholesky(&damped, 0.0).ok_or_else(|| {
                        Error::Argument(format!("normal equations singular even with ridge {}", opts.ridge))
                    })?;
                    log::warn!("X^T X is numerically singular; applied ridge {}", opts.ridge);
                    (cholesky_solve(&l, &rhs), Some(opts.ridge))
                }
            }
        }
        Solver::GradientDescent { max_iters, tol } => (gradient_descent(&gram, &rhs, max_iters, tol), None),
    };
    if !w.is_finite() {
        return Err(Error::Argument("translation matrix has non-finite entries".into()));
    }
    let fit_residual = objective(x, z, &w);
    Ok(TranslationMatrix {
        src_lang,
        tgt_lang,
        w,
        fit_residual,
        ridge,
        underdetermined,
    })
}

fn gradient_descent(gram: &Matrix, rhs: &Matrix, max_iters: usize, tol: f64) -> Matrix {
    let n = gram.rows();
    // Largest eigenvalue of the Gram matrix by power iteration.
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut lambda = 0.0;
    for _ in 0..200 {
        let gv = gram.left_mul(&v);
        let norm = gv.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        lambda = norm;
        v = gv.into_iter().map(|a| a / norm).collect();
    }
    let step = 1.0 / (2.0 * 1.05 * lambda.max(f64::MIN_POSITIVE));
    let mut w = Matrix::zeros(n, rhs.cols());
    for _ in 0..max_iters {
        let grad = gram.matmul(&w).expect("square").sub(rhs);
        if 2.0 * grad.frobenius_norm() <= tol {
            break;
        }
        w = w.sub(&scaled(&grad, 2.0 * step));
    }
    w
}

fn scaled(m: &Matrix, s: f64) -> Matrix {
    Matrix::from_vec(m.rows(), m.cols(), m.as_slice().iter().map(|v| v * s).collect()).expect("same shape")
}

/// `Z W`, keeping word order. The result lives in `W`'s target space.
pub fn apply_translation(z: &VocabularyMatrix, w: &TranslationMatrix) -> Result<VocabularyMatrix> {
    if z.dim() != w.dim() {
        return Err(Error::Argument(format!(
            "vocabulary dim {} does not match matrix side {}",
            z.dim(),
            w.dim()
        )));
    }
    if z.space != w.src_lang {
        return Err(Error::Argument(format!(
            "vocabulary lives in the {} space but the matrix maps from {}",
            z.space, w.src_lang
        )));
    }
    Ok(VocabularyMatrix {
        lang: z.lang.clone(),
        space: w.tgt_lang.clone(),
        words: z.words.clone(),
        matrix: z.matrix.matmul(&w.w)?,
    })
}

/// Euclidean and cosine distance sums over test pairs, before and after
/// mapping the source side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceReport {
    pub pairs: usize,
    pub euclidean_sum_before: f64,
    pub euclidean_sum_after: f64,
    pub cosine_sum_before: f64,
    pub cosine_sum_after: f64,
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `1 - cos(a, b)`, and 1 when either vector has zero norm.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 1.0;
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    (1.0 - dot / (na * nb)).clamp(0.0, 2.0)
}

pub fn alignment_report(x: &Matrix, z: &Matrix, w: &TranslationMatrix) -> DistanceReport {
    let mut r = DistanceReport {
        pairs: x.rows(),
        euclidean_sum_before: 0.0,
        euclidean_sum_after: 0.0,
        cosine_sum_before: 0.0,
        cosine_sum_after: 0.0,
    };
    for i in 0..x.rows() {
        let (xi, zi) = (x.row(i), z.row(i));
        let mapped = w.map_vector(xi);
        r.euclidean_sum_before += euclidean(xi, zi);
        r.euclidean_sum_after += euclidean(&mapped, zi);
        r.cosine_sum_before += cosine_distance(xi, zi);
        r.cosine_sum_after += cosine_distance(&mapped, zi);
    }
    r
}
