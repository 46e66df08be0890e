use serde::{Deserialize, Serialize};

use crate::linalg::{ComplexMatrix, C64};
use crate::toeplitz::{BasisEntry, MultiLevelToeplitzGenerator};

use super::SdpError;

/// How a block of real variables maps to a structured value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BlockKind {
    /// Hermitian multi-level Toeplitz generator in the real parametrization of
    /// [`MultiLevelToeplitzGenerator::from_real_params`].
    Toeplitz { dims: Vec<usize> },
    /// Complex matrix, `(re, im)` pairs in row-major order.
    Complex { rows: usize, cols: usize },
    /// Hermitian matrix: `n` real diagonal entries, then `(re, im)` of each
    /// strictly upper entry in row-major order.
    Hermitian { n: usize },
    /// A single real scalar.
    Scalar,
}

impl BlockKind {
    pub fn len(&self) -> usize {
        match self {
            BlockKind::Toeplitz { dims } => crate::toeplitz::real_param_count(dims),
            BlockKind::Complex { rows, cols } => 2 * rows * cols,
            BlockKind::Hermitian { n } => n * n,
            BlockKind::Scalar => 1,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A named contiguous range of the real variable vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarBlock {
    pub name: String,
    pub kind: BlockKind,
    pub offset: usize,
    pub len: usize,
}

/// Sparse Hermitian coefficient matrix of one variable inside a PSD constraint.
/// Both triangles are listed explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdTerm {
    pub var: usize,
    pub entries: Vec<BasisEntry>,
}

/// `F0 + Σ xᵢ Fᵢ ⪰ 0` on `size × size` Hermitian matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdConstraint {
    pub name: String,
    pub size: usize,
    pub constant: Vec<BasisEntry>,
    pub terms: Vec<PsdTerm>,
}

/// Column of the ball map belonging to one variable: `(row, coefficient)` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallTerm {
    pub var: usize,
    pub entries: Vec<(usize, f64)>,
}

/// `‖center + A x‖₂ ≤ radius`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallConstraint {
    pub name: String,
    pub radius: f64,
    pub center: Vec<f64>,
    pub terms: Vec<BallTerm>,
}

/// Linear objective over real variables, subject to Hermitian PSD and
/// Euclidean-ball constraints, all affine in the variables.
///
/// The serialized JSON form (see [`ConicProblem::to_json`]) is the problem
/// dump format: `blocks` names each variable range, `objective` holds the
/// dense cost vector `c` with a constant `objective_offset`, each entry of
/// `psd` lists its constant matrix and per-variable sparse coefficient
/// matrices (complex values as `[re, im]`), and each entry of `balls` lists
/// its radius, center and sparse columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConicProblem {
    pub blocks: Vec<VarBlock>,
    pub num_vars: usize,
    pub objective: Vec<f64>,
    pub objective_offset: f64,
    pub psd: Vec<PsdConstraint>,
    pub balls: Vec<BallConstraint>,
    /// Scale `α` of the initial interior point `αe`.
    pub init_scale: f64,
}

impl Default for ConicProblem {
    fn default() -> Self {
        Self::new()
    }
}

impl ConicProblem {
    pub fn new() -> Self {
        Self {
            blocks: Vec::new(),
            num_vars: 0,
            objective: Vec::new(),
            objective_offset: 0.0,
            psd: Vec::new(),
            balls: Vec::new(),
            init_scale: 1.0,
        }
    }

    /// Appends a variable block and returns its offset.
    pub fn add_block(&mut self, name: &str, kind: BlockKind) -> usize {
        let offset = self.num_vars;
        let len = kind.len();
        self.blocks.push(VarBlock {
            name: name.to_string(),
            kind,
            offset,
            len,
        });
        self.num_vars += len;
        self.objective.resize(self.num_vars, 0.0);
        offset
    }

    pub fn block(&self, name: &str) -> Option<&VarBlock> {
        self.blocks.iter().find(|b| b.name == name)
    }

    /// Checks that every index is in range and every map matches its cone.
    pub fn validate(&self) -> Result<(), SdpError> {
        let bad = |msg: String| Err(SdpError::InvalidProblem(msg));
        if self.objective.len() != self.num_vars {
            return bad(format!("objective has {} entries for {} variables", self.objective.len(), self.num_vars));
        }
        let mut expect = 0;
        for b in &self.blocks {
            if b.offset != expect || b.len != b.kind.len() {
                return bad(format!("block {} has inconsistent layout", b.name));
            }
            expect += b.len;
        }
        if expect != self.num_vars {
            return bad("blocks do not cover the variable vector".into());
        }
        for p in &self.psd {
            let in_range = |e: &BasisEntry| e.row < p.size && e.col < p.size;
            if !p.constant.iter().all(in_range) {
                return bad(format!("constant of {} has an entry out of range", p.name));
            }
            for t in &p.terms {
                if t.var >= self.num_vars || !t.entries.iter().all(in_range) {
                    return bad(format!("term of {} is out of range", p.name));
                }
            }
            if !hermitian_entries(p.size, &p.constant) || !p.terms.iter().all(|t| hermitian_entries(p.size, &t.entries)) {
                return bad(format!("coefficients of {} are not Hermitian", p.name));
            }
        }
        for b in &self.balls {
            if !(b.radius >= 0.0) {
                return bad(format!("ball {} has negative radius", b.name));
            }
            for t in &b.terms {
                if t.var >= self.num_vars || t.entries.iter().any(|&(r, _)| r >= b.center.len()) {
                    return bad(format!("term of ball {} is out of range", b.name));
                }
            }
        }
        if !(self.init_scale > 0.0) {
            return bad("init_scale must be positive".into());
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("problem serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, SdpError> {
        let p: Self = serde_json::from_str(s).map_err(|e| SdpError::InvalidProblem(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    /// Total cone degree: the sum of PSD sizes plus one per ball.
    pub fn degree(&self) -> usize {
        self.psd.iter().map(|p| p.size).sum::<usize>() + self.balls.len()
    }

    /// Evaluates the objective at `x`.
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective_offset + self.objective.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    /// `F0 + Σ xᵢ Fᵢ` of PSD constraint `k`.
    pub fn psd_value(&self, k: usize, x: &[f64]) -> ComplexMatrix {
        let p = &self.psd[k];
        let mut m = dense_from_entries(p.size, &p.constant);
        for t in &p.terms {
            let v = x[t.var];
            if v != 0.0 {
                for e in &t.entries {
                    m[(e.row, e.col)] += e.value * v;
                }
            }
        }
        m
    }

    /// `center + A x` of ball constraint `k`.
    pub fn ball_value(&self, k: usize, x: &[f64]) -> Vec<f64> {
        let b = &self.balls[k];
        let mut u = b.center.clone();
        for t in &b.terms {
            let v = x[t.var];
            for &(r, a) in &t.entries {
                u[r] += a * v;
            }
        }
        u
    }
}

fn hermitian_entries(size: usize, entries: &[BasisEntry]) -> bool {
    let m = dense_from_entries(size, entries);
    let scale = m.max_abs();
    scale == 0.0 || m.is_hermitian(1e-12)
}

pub(crate) fn dense_from_entries(size: usize, entries: &[BasisEntry]) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(size, size);
    for e in entries {
        m[(e.row, e.col)] += e.value;
    }
    m
}

/// Decodes a block of real variables.
pub fn decode_toeplitz(block: &VarBlock, x: &[f64]) -> Result<MultiLevelToeplitzGenerator, SdpError> {
    match &block.kind {
        BlockKind::Toeplitz { dims } => {
            MultiLevelToeplitzGenerator::from_real_params(dims.clone(), &x[block.offset..block.offset + block.len])
                .map_err(|e| SdpError::InvalidProblem(e.to_string()))
        }
        _ => Err(SdpError::MissingBlock(format!("{} is not a Toeplitz block", block.name))),
    }
}

pub fn decode_complex(block: &VarBlock, x: &[f64]) -> Result<ComplexMatrix, SdpError> {
    match block.kind {
        BlockKind::Complex { rows, cols } => {
            let v = &x[block.offset..block.offset + block.len];
            Ok(ComplexMatrix::from_fn(rows, cols, |i, j| {
                let k = 2 * (i * cols + j);
                C64::new(v[k], v[k + 1])
            }))
        }
        _ => Err(SdpError::MissingBlock(format!("{} is not a complex block", block.name))),
    }
}

pub fn decode_hermitian(block: &VarBlock, x: &[f64]) -> Result<ComplexMatrix, SdpError> {
    match block.kind {
        BlockKind::Hermitian { n } => {
            let v = &x[block.offset..block.offset + block.len];
            let mut m = ComplexMatrix::zeros(n, n);
            for i in 0..n {
                m[(i, i)] = C64::new(v[i], 0.0);
            }
            let mut k = n;
            for i in 0..n {
                for j in i + 1..n {
                    let z = C64::new(v[k], v[k + 1]);
                    m[(i, j)] = z;
                    m[(j, i)] = z.conj();
                    k += 2;
                }
            }
            Ok(m)
        }
        _ => Err(SdpError::MissingBlock(format!("{} is not a Hermitian block", block.name))),
    }
}

/// Real-variable index of Hermitian entry `(i, j)`, `i < j`, relative to the block offset.
pub(crate) fn hermitian_offdiag_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j);
    // entries before row i: Σ_{r<i} (n−1−r)
    let before = i * (2 * n - i - 1) / 2;
    n + 2 * (before + (j - i - 1))
}
