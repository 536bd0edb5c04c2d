//! Finite-dimensional ground truth: dense eigen/singular value solvers,
//! the matrix pseudoinverse, and checks for the finite shadows of the
//! operator identities.

use faer::{Mat, MatRef, Side};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::classify::classify_am_normal;
use crate::generate::perturbed_normal;
use crate::operators::{FiniteMatrix, NormalDiagonalModel};

/// Relative cutoff below which singular values count as zero.
pub const RANK_CUTOFF: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian (asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },
    #[error("model is not absolutely minimum attaining")]
    NotAm,
}

/// Eigenvalues ascending; `vectors` holds the matching eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub values: Vec<f64>,
    pub vectors: FiniteMatrix,
}

/// Singular values ascending with matching left/right singular vectors as columns.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub singular_values: Vec<f64>,
    pub u: FiniteMatrix,
    pub v: FiniteMatrix,
}

impl SvdResult {
    pub fn max(&self) -> f64 {
        self.singular_values.last().copied().unwrap_or(0.0)
    }

    /// Number of singular values above `RANK_CUTOFF · σ_max`.
    pub fn rank(&self) -> usize {
        let cut = RANK_CUTOFF * self.max();
        self.singular_values
            .iter()
            .filter(|&&s| s > cut && s > 0.0)
            .count()
    }
}

fn check_square(a: &FiniteMatrix) -> Result<(), OracleError> {
    if !a.is_square() {
        return Err(OracleError::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    Ok(())
}

fn to_faer(m: &DMatrix<Complex64>) -> Mat<Complex64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Columns of `m` in the given order.
fn columns(m: MatRef<'_, Complex64>, order: &[usize]) -> DMatrix<Complex64> {
    DMatrix::from_fn(m.nrows(), order.len(), |i, j| m[(i, order[j])])
}

fn ascending(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    order
}

/// Symmetrizes `a` after checking it is Hermitian up to `1e-12·‖a‖`.
fn hermitian_part(a: &FiniteMatrix) -> Result<DMatrix<Complex64>, OracleError> {
    check_square(a)?;
    let m = a.as_dmatrix();
    let asym = (m - m.adjoint()).norm();
    let scale = m.norm().max(f64::MIN_POSITIVE);
    if asym > 1e-12 * scale {
        return Err(OracleError::NotHermitian {
            asymmetry: asym / scale,
        });
    }
    Ok((m + m.adjoint()) * Complex64::new(0.5, 0.0))
}

pub fn hermitian_eigen(a: &FiniteMatrix) -> Result<EigenResult, OracleError> {
    let h = hermitian_part(a)?;
    Ok(eigen_of_hermitian(h))
}

fn eigen_of_hermitian(h: DMatrix<Complex64>) -> EigenResult {
    let n = h.nrows();
    if n == 0 {
        return EigenResult {
            values: Vec::new(),
            vectors: FiniteMatrix::zeros(0, 0),
        };
    }
    let eig = to_faer(&h)
        .self_adjoint_eigen(Side::Lower)
        .expect("Hermitian eigensolver converges");
    let values: Vec<f64> = eig.S().column_vector().iter().map(|z| z.re).collect();
    let order = ascending(&values);
    EigenResult {
        values: order.iter().map(|&i| values[i]).collect(),
        vectors: columns(eig.U(), &order).into(),
    }
}

/// Smallest eigenvalue of the Hermitian part of a nearly Hermitian matrix.
fn min_eigenvalue(m: &DMatrix<Complex64>) -> f64 {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    eigen_of_hermitian(h).values.first().copied().unwrap_or(0.0)
}

pub fn svd(a: &FiniteMatrix) -> SvdResult {
    let (rows, cols) = (a.rows(), a.cols());
    let k = rows.min(cols);
    if k == 0 {
        return SvdResult {
            singular_values: Vec::new(),
            u: FiniteMatrix::zeros(rows, 0),
            v: FiniteMatrix::zeros(cols, 0),
        };
    }
    let s = to_faer(a.as_dmatrix())
        .thin_svd()
        .expect("singular value decomposition converges");
    let values: Vec<f64> = s.S().column_vector().iter().map(|z| z.re).collect();
    let order = ascending(&values);
    SvdResult {
        singular_values: order.iter().map(|&i| values[i]).collect(),
        u: columns(s.U(), &order).into(),
        v: columns(s.V(), &order).into(),
    }
}

pub fn operator_norm_fd(a: &FiniteMatrix) -> f64 {
    svd(a).max()
}

/// `m(A) = inf ‖Ax‖` over unit vectors: `σ_min` when `A` has at least as
/// many rows as columns, else `0`.
pub fn min_modulus_fd(a: &FiniteMatrix) -> f64 {
    if a.rows() < a.cols() {
        return 0.0;
    }
    svd(a).singular_values.first().copied().unwrap_or(0.0)
}

pub fn rank_fd(a: &FiniteMatrix) -> usize {
    svd(a).rank()
}

/// Moore–Penrose inverse; singular values at or below `rank_tol` are
/// treated as zero (`None` selects `RANK_CUTOFF · σ_max`).
pub fn pseudoinverse_fd(a: &FiniteMatrix, rank_tol: Option<f64>) -> FiniteMatrix {
    let s = svd(a);
    let cut = rank_tol.unwrap_or(RANK_CUTOFF * s.max());
    let (u, v) = (s.u.as_dmatrix(), s.v.as_dmatrix());
    let mut out = DMatrix::<Complex64>::zeros(a.cols(), a.rows());
    for (k, &sigma) in s.singular_values.iter().enumerate() {
        if sigma > cut && sigma > 0.0 {
            out += v.column(k) * u.column(k).adjoint() * Complex64::new(1.0 / sigma, 0.0);
        }
    }
    out.into()
}

fn projector_onto_columns(
    basis: &DMatrix<Complex64>,
    cols: impl Iterator<Item = usize>,
) -> DMatrix<Complex64> {
    let n = basis.nrows();
    let mut p = DMatrix::<Complex64>::zeros(n, n);
    for k in cols {
        p += basis.column(k) * basis.column(k).adjoint();
    }
    p
}

/// Orthogonal projector onto `R(A)`.
pub fn range_projector(a: &FiniteMatrix) -> FiniteMatrix {
    let s = svd(a);
    let cut = RANK_CUTOFF * s.max();
    let live = (0..s.singular_values.len())
        .filter(|&k| s.singular_values[k] > cut && s.singular_values[k] > 0.0);
    projector_onto_columns(s.u.as_dmatrix(), live).into()
}

/// Orthogonal projector onto `N(A)`.
pub fn kernel_projector(a: &FiniteMatrix) -> FiniteMatrix {
    let s = svd(a);
    let cut = RANK_CUTOFF * s.max();
    let live = (0..s.singular_values.len())
        .filter(|&k| s.singular_values[k] > cut && s.singular_values[k] > 0.0);
    let row_space = projector_onto_columns(s.v.as_dmatrix(), live);
    (DMatrix::identity(a.cols(), a.cols()) - row_space).into()
}

/// Spectral norm distance between two projectors (or any matrices).
pub fn distance(a: &FiniteMatrix, b: &FiniteMatrix) -> f64 {
    operator_norm_fd(&a.sub(b))
}

/// `‖X − Y‖_F / max(‖X‖_F, ‖Y‖_F, 1)`.
pub fn relative_residual(x: &FiniteMatrix, y: &FiniteMatrix) -> f64 {
    let scale = x.frobenius_norm().max(y.frobenius_norm()).max(1.0);
    x.sub(y).frobenius_norm() / scale
}

/// Residuals of the four Penrose identities for a candidate `g = a†`.
pub fn penrose_residuals(a: &FiniteMatrix, g: &FiniteMatrix) -> [f64; 4] {
    let ag = a.mul(g);
    let ga = g.mul(a);
    [
        relative_residual(&ag.mul(a), a),
        relative_residual(&ga.mul(g), g),
        relative_residual(&ag, &ag.adjoint()),
        relative_residual(&ga, &ga.adjoint()),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyCheck {
    pub name: &'static str,
    pub residual: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MoorePenroseReport {
    pub items: Vec<PropertyCheck>,
}

impl MoorePenroseReport {
    pub fn all_hold(&self) -> bool {
        self.items.iter().all(|c| c.holds)
    }

    pub fn max_residual(&self) -> f64 {
        self.items.iter().map(|c| c.residual).fold(0.0, f64::max)
    }
}

/// Verifies the eight classical pseudoinverse properties with tolerance `tol`.
pub fn check_moore_penrose(a: &FiniteMatrix, tol: f64) -> MoorePenroseReport {
    let pinv = pseudoinverse_fd(a, None);
    let adj = a.adjoint();
    let pinv_adj = pseudoinverse_fd(&adj, None);
    let id_cols = FiniteMatrix::identity(a.cols());
    let id_rows = FiniteMatrix::identity(a.rows());

    let r1 = distance(&range_projector(&pinv), &id_cols.sub(&kernel_projector(a)));
    let ker_pinv = kernel_projector(&pinv);
    let r2 = distance(&ker_pinv, &id_rows.sub(&range_projector(a)))
        .max(distance(&ker_pinv, &kernel_projector(&adj)));
    // In finite dimension every range is closed, so T† must be bounded with
    // ‖T†‖ = 1 / (smallest nonzero singular value).
    let s = svd(a);
    let cut = RANK_CUTOFF * s.max();
    let smallest = s
        .singular_values
        .iter()
        .copied()
        .find(|&x| x > cut && x > 0.0);
    let r3 = match smallest {
        Some(sigma) => (operator_norm_fd(&pinv) * sigma - 1.0).abs(),
        None => operator_norm_fd(&pinv),
    };
    let r4 = relative_residual(&pseudoinverse_fd(&pinv, None), a);
    let r5 = relative_residual(&pinv_adj, &pinv.adjoint());
    let r6 = distance(&kernel_projector(&pinv_adj), &kernel_projector(a));

    let left = pinv.mul(&pinv_adj);
    let scale7 = left.frobenius_norm().max(1.0);
    let r7 = relative_residual(&pseudoinverse_fd(&adj.mul(a), None), &left)
        .max((-min_eigenvalue(left.as_dmatrix()) / scale7).max(0.0));
    let right = pinv_adj.mul(&pinv);
    let scale8 = right.frobenius_norm().max(1.0);
    let r8 = relative_residual(&pseudoinverse_fd(&a.mul(&adj), None), &right)
        .max((-min_eigenvalue(right.as_dmatrix()) / scale8).max(0.0));

    let names = [
        "range of pinv is kernel complement",
        "kernel of pinv is range complement and adjoint kernel",
        "pinv bounded on closed range",
        "double pinv is identity",
        "pinv commutes with adjoint",
        "kernel of adjoint pinv is kernel",
        "pinv of T*T factors and is positive",
        "pinv of TT* factors and is positive",
    ];
    let items = names
        .iter()
        .zip([r1, r2, r3, r4, r5, r6, r7, r8])
        .map(|(&name, residual)| PropertyCheck {
            name,
            residual,
            holds: residual <= tol,
        })
        .collect();
    MoorePenroseReport { items }
}

/// `min λ(A*A − AA*)`.
pub fn hyponormal_gap(a: &FiniteMatrix) -> Result<f64, OracleError> {
    check_square(a)?;
    let m = a.as_dmatrix();
    Ok(min_eigenvalue(&(m.adjoint() * m - m * m.adjoint())))
}

/// `AA* ≤ A*A` up to `tol · ‖A‖²`.
pub fn is_hyponormal_fd(a: &FiniteMatrix, tol: f64) -> Result<bool, OracleError> {
    let scale = operator_norm_fd(a).powi(2).max(f64::MIN_POSITIVE);
    Ok(hyponormal_gap(a)? >= -tol * scale)
}

pub fn is_normal_fd(a: &FiniteMatrix, tol: f64) -> bool {
    let m = a.as_dmatrix();
    let scale = m.norm().powi(2).max(1.0);
    (m.adjoint() * m - m * m.adjoint()).norm() <= tol * scale
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParanormalVerdict {
    Holds,
    /// A unit vector with `‖Ax‖² > ‖A²x‖`.
    FalsifiedBy(Vec<Complex64>),
    /// The sufficiency test failed but no vector violates the inequality
    /// beyond tolerance.
    Inconclusive,
}

impl ParanormalVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, ParanormalVerdict::Holds)
    }

    pub fn is_falsified(&self) -> bool {
        matches!(self, ParanormalVerdict::FalsifiedBy(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParanormalConfig {
    pub grid: usize,
    pub trials: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for ParanormalConfig {
    fn default() -> Self {
        Self {
            grid: 64,
            trials: 1000,
            tol: 1e-9,
            seed: 0,
        }
    }
}

fn vnorm(x: &DVector<Complex64>) -> f64 {
    x.norm()
}

/// `‖Ax‖² − ‖A²x‖` for unit `x`; positive values violate paranormality.
fn paranormal_excess(a: &DMatrix<Complex64>, x: &DVector<Complex64>) -> f64 {
    let ax = a * x;
    let aax = a * &ax;
    vnorm(&ax).powi(2) - vnorm(&aax)
}

fn random_unit(n: usize, rng: &mut impl Rng) -> DVector<Complex64> {
    let v = DVector::from_fn(n, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let norm = v.norm();
    v / Complex64::new(norm, 0.0)
}

/// Searches for a vector violating `‖Ax‖² ≤ ‖A²x‖`, then certifies the
/// inequality through positivity of `A*²A² − 2λA*A + λ²` on a log grid of
/// `λ`, refined by alternating minimization from the worst grid points.
pub fn is_paranormal_fd(
    a: &FiniteMatrix,
    config: ParanormalConfig,
) -> Result<ParanormalVerdict, OracleError> {
    check_square(a)?;
    let n = a.rows();
    let m = a.as_dmatrix();
    let norm = operator_norm_fd(a);
    if n == 0 || norm == 0.0 {
        return Ok(ParanormalVerdict::Holds);
    }
    let vec_tol = config.tol * norm * norm;
    let falsified = |x: &DVector<Complex64>| paranormal_excess(m, x) > vec_tol;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for k in 0..n {
        let mut e = DVector::<Complex64>::zeros(n);
        e[k] = Complex64::new(1.0, 0.0);
        if falsified(&e) {
            return Ok(ParanormalVerdict::FalsifiedBy(e.iter().copied().collect()));
        }
    }
    let gram = m.adjoint() * m;
    let gram_eig = eigen_of_hermitian(gram.clone());
    for k in 0..n {
        let x: DVector<Complex64> = gram_eig.vectors.as_dmatrix().column(k).into_owned();
        if falsified(&x) {
            return Ok(ParanormalVerdict::FalsifiedBy(x.iter().copied().collect()));
        }
    }
    for _ in 0..config.trials {
        let x = random_unit(n, &mut rng);
        if falsified(&x) {
            return Ok(ParanormalVerdict::FalsifiedBy(x.iter().copied().collect()));
        }
    }

    let m2 = m * m;
    let quartic = m2.adjoint() * &m2;
    let pencil = |lambda: f64| -> DMatrix<Complex64> {
        &quartic - &gram * Complex64::new(2.0 * lambda, 0.0)
            + DMatrix::<Complex64>::identity(n, n) * Complex64::new(lambda * lambda, 0.0)
    };
    let sigma_max2 = norm * norm;
    let sigma_min2 = gram_eig.values[0].max(0.0).max(sigma_max2 * 1e-8);
    let grid = config.grid.max(2);
    let ratio = (sigma_max2 / sigma_min2).ln();
    let psd_tol = config.tol * sigma_max2 * sigma_max2;
    let mut scores: Vec<(f64, f64)> = (0..grid)
        .map(|k| {
            let lambda = sigma_min2 * (ratio * k as f64 / (grid - 1) as f64).exp();
            (min_eigenvalue(&pencil(lambda)), lambda)
        })
        .collect();
    scores.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut certified = scores[0].0 >= -psd_tol;
    for &(_, start) in scores.iter().take(8) {
        let mut lambda = start;
        for _ in 0..30 {
            let eig = eigen_of_hermitian({
                let p = pencil(lambda);
                (&p + p.adjoint()) * Complex64::new(0.5, 0.0)
            });
            let x: DVector<Complex64> = eig.vectors.as_dmatrix().column(0).into_owned();
            if falsified(&x) {
                return Ok(ParanormalVerdict::FalsifiedBy(x.iter().copied().collect()));
            }
            if eig.values[0] < -psd_tol {
                certified = false;
            }
            let next = vnorm(&(m * &x)).powi(2);
            if (next - lambda).abs() <= 1e-14 * sigma_max2 {
                break;
            }
            lambda = next;
        }
    }
    Ok(if certified {
        ParanormalVerdict::Holds
    } else {
        ParanormalVerdict::Inconclusive
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEqualityReport {
    pub nonzero_match: bool,
    pub full_match: bool,
    pub max_deviation: f64,
}

/// Compares eigenvalue multisets of `A*A` and `AA*`.
pub fn check_spectral_equalities(
    a: &FiniteMatrix,
    tol: f64,
) -> Result<SpectralEqualityReport, OracleError> {
    check_square(a)?;
    let m = a.as_dmatrix();
    let left = eigen_of_hermitian(m.adjoint() * m).values;
    let right = eigen_of_hermitian(m * m.adjoint()).values;
    let scale = left
        .last()
        .copied()
        .unwrap_or(0.0)
        .max(right.last().copied().unwrap_or(0.0))
        .max(1.0);
    // the nonzero part is the top `rank` eigenvalues, with rank taken from the SVD
    let rank = rank_fd(a);
    let top = |v: &[f64]| v[v.len() - rank..].to_vec();
    let nonzero_dev = top(&left)
        .iter()
        .zip(&top(&right))
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let full_dev = left
        .iter()
        .zip(&right)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    Ok(SpectralEqualityReport {
        nonzero_match: nonzero_dev <= tol * scale,
        full_match: full_dev <= tol * scale,
        max_deviation: nonzero_dev.max(full_dev),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelLemmaReport {
    pub paranormal: ParanormalVerdict,
    /// `N(A) = N(A²)`, checked when `A` is certified paranormal.
    pub kernel_of_square: Option<bool>,
    /// Paranormality of `A†`, checked when additionally `N(A) = N(A*)`.
    pub pinv_when_kernels_agree: Option<bool>,
    /// Paranormality of `A†`, checked when additionally `R(A) = R(A²)`.
    pub pinv_when_ranges_agree: Option<bool>,
}

impl KernelLemmaReport {
    pub fn passed(&self) -> bool {
        [
            self.kernel_of_square,
            self.pinv_when_kernels_agree,
            self.pinv_when_ranges_agree,
        ]
        .iter()
        .all(|c| c.unwrap_or(true))
    }
}

pub fn check_kernel_lemmas(
    a: &FiniteMatrix,
    tol: f64,
    config: ParanormalConfig,
) -> Result<KernelLemmaReport, OracleError> {
    let paranormal = is_paranormal_fd(a, config)?;
    let mut report = KernelLemmaReport {
        paranormal: paranormal.clone(),
        kernel_of_square: None,
        pinv_when_kernels_agree: None,
        pinv_when_ranges_agree: None,
    };
    if !paranormal.holds() {
        return Ok(report);
    }
    let square = a.mul(a);
    report.kernel_of_square =
        Some(distance(&kernel_projector(a), &kernel_projector(&square)) <= tol);
    let pinv_ok = || -> Result<bool, OracleError> {
        Ok(!is_paranormal_fd(&pseudoinverse_fd(a, None), config)?.is_falsified())
    };
    if distance(&kernel_projector(a), &kernel_projector(&a.adjoint())) <= tol {
        report.pinv_when_kernels_agree = Some(pinv_ok()?);
    }
    if distance(&range_projector(a), &range_projector(&square)) <= tol {
        report.pinv_when_ranges_agree = Some(pinv_ok()?);
    }
    Ok(report)
}

/// Truncation sizes at which an AM model is checked for hyponormality.
pub const HYPONORMAL_TRUNCATIONS: [u64; 3] = [8, 32, 128];

#[derive(Debug, Clone, PartialEq)]
pub struct HyponormalSearchReport {
    /// `(n, hyponormal)` for each truncation size.
    pub truncations: Vec<(u64, bool)>,
    pub samples: usize,
    /// Samples certified paranormal with `N(A) = N(A*)`.
    pub candidates: usize,
    /// Candidates that are not hyponormal.
    pub failures: Vec<FiniteMatrix>,
}

impl HyponormalSearchReport {
    pub fn passed(&self) -> bool {
        self.truncations.iter().all(|&(_, ok)| ok) && self.failures.is_empty()
    }
}

/// Checks hyponormality of the model's truncations, then searches `trials`
/// random 4x4 perturbations of normal matrices for one that is paranormal
/// and kernel-symmetric but not hyponormal.
pub fn check_hyponormal_from_paranormal_am(
    model: &NormalDiagonalModel,
    trials: usize,
    tol: f64,
    seed: u64,
) -> Result<HyponormalSearchReport, OracleError> {
    if !classify_am_normal(model).is_am() {
        return Err(OracleError::NotAm);
    }
    let mut truncations = Vec::new();
    for n in HYPONORMAL_TRUNCATIONS {
        truncations.push((n, is_hyponormal_fd(&model.truncate(n), tol)?));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let config = ParanormalConfig {
        trials: 200,
        seed,
        ..ParanormalConfig::default()
    };
    let mut candidates = 0;
    let mut failures = Vec::new();
    for _ in 0..trials {
        let a = perturbed_normal(&mut rng, 4);
        if !is_paranormal_fd(&a, config)?.holds() {
            continue;
        }
        if distance(&kernel_projector(&a), &kernel_projector(&a.adjoint())) > 1e-8 {
            continue;
        }
        candidates += 1;
        if !is_hyponormal_fd(&a, tol)? {
            failures.push(a);
        }
    }
    Ok(HyponormalSearchReport {
        truncations,
        samples: trials,
        candidates,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn real(rows: usize, cols: usize, v: &[f64]) -> FiniteMatrix {
        let e: Vec<_> = v.iter().map(|&x| c(x)).collect();
        FiniteMatrix::from_row_major(rows, cols, &e).unwrap()
    }

    fn shift3() -> FiniteMatrix {
        real(3, 3, &[0., 0., 0., 1., 0., 0., 0., 1., 0.])
    }

    #[test]
    fn eigenvalues_sorted() {
        let r = hermitian_eigen(&real(2, 2, &[2., 1., 1., 2.])).unwrap();
        assert!((r.values[0] - 1.0).abs() < 1e-12 && (r.values[1] - 3.0).abs() < 1e-12);
        let r = hermitian_eigen(&FiniteMatrix::from_real_diagonal(&[3., 1., 2.])).unwrap();
        assert_eq!(r.values, vec![1., 2., 3.]);
        assert!(matches!(
            hermitian_eigen(&shift3()),
            Err(OracleError::NotHermitian { .. })
        ));
    }

    #[test]
    fn singular_values_of_shift() {
        let s = svd(&shift3());
        assert!((s.singular_values[0]).abs() < 1e-12);
        assert!((s.singular_values[1] - 1.0).abs() < 1e-12);
        assert_eq!(s.rank(), 2);
        assert_eq!(svd(&FiniteMatrix::zeros(2, 2)).rank(), 0);
    }

    #[test]
    fn pseudoinverse_of_diagonal() {
        let p = pseudoinverse_fd(&FiniteMatrix::from_real_diagonal(&[2., 0.]), None);
        assert!(relative_residual(&p, &FiniteMatrix::from_real_diagonal(&[0.5, 0.])) < 1e-15);
    }

    #[test]
    fn moore_penrose_on_shift_and_identity() {
        assert!(check_moore_penrose(&FiniteMatrix::identity(3), 1e-8).all_hold());
        assert!(check_moore_penrose(&shift3(), 1e-8).all_hold());
        assert!(check_moore_penrose(&real(2, 3, &[1., 2., 3., 2., 4., 6.]), 1e-8).all_hold());
    }

    #[test]
    fn hyponormality() {
        assert!(!is_hyponormal_fd(&shift3(), 1e-10).unwrap());
        assert!(!is_hyponormal_fd(&real(2, 2, &[0., 1., 0., 0.]), 1e-10).unwrap());
        assert!(is_hyponormal_fd(&FiniteMatrix::from_real_diagonal(&[1., -2.]), 1e-10).unwrap());
    }

    #[test]
    fn truncated_shift_is_not_paranormal() {
        let verdict = is_paranormal_fd(&shift3(), ParanormalConfig::default()).unwrap();
        assert_eq!(
            verdict,
            ParanormalVerdict::FalsifiedBy(vec![c(0.), c(1.), c(0.)])
        );
        let adj = is_paranormal_fd(&shift3().adjoint(), ParanormalConfig::default()).unwrap();
        assert!(adj.is_falsified());
        let diag = is_paranormal_fd(
            &FiniteMatrix::from_real_diagonal(&[1., 2., 0.]),
            ParanormalConfig::default(),
        );
        assert_eq!(diag.unwrap(), ParanormalVerdict::Holds);
    }

    #[test]
    fn gram_spectra_of_nilpotent() {
        let r = check_spectral_equalities(&real(2, 2, &[0., 1., 0., 0.]), 1e-9).unwrap();
        assert!(r.nonzero_match && r.full_match);
    }

    #[test]
    fn kernel_lemmas_on_diagonal() {
        let r = check_kernel_lemmas(
            &FiniteMatrix::from_real_diagonal(&[1., 2., 0.]),
            1e-8,
            ParanormalConfig::default(),
        )
        .unwrap();
        assert_eq!(r.kernel_of_square, Some(true));
        assert_eq!(r.pinv_when_kernels_agree, Some(true));
        assert_eq!(r.pinv_when_ranges_agree, Some(true));
        let r = check_kernel_lemmas(&shift3(), 1e-8, ParanormalConfig::default()).unwrap();
        assert!(r.passed() && r.kernel_of_square.is_none());
    }

    #[test]
    fn paranormal_am_search_finds_nothing() {
        use crate::exact::ratio;
        use crate::operators::{Direction, PositiveDiagonalModel, TailRule};
        let tail = TailRule::new(ratio(1, 1), Direction::FromBelow, ratio(1, 1), 1, 2).unwrap();
        let model = PositiveDiagonalModel::new(vec![], vec![tail.into()])
            .unwrap()
            .as_normal();
        let r = check_hyponormal_from_paranormal_am(&model, 100, 1e-9, 5).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(r.candidates > 0);
        let not_am = PositiveDiagonalModel::new(
            vec![],
            vec![
                TailRule::new(ratio(1, 1), Direction::FromAbove, ratio(1, 1), 1, 1)
                    .unwrap()
                    .into(),
            ],
        )
        .unwrap()
        .as_normal();
        assert_eq!(
            check_hyponormal_from_paranormal_am(&not_am, 1, 1e-9, 0),
            Err(OracleError::NotAm)
        );
    }
}
