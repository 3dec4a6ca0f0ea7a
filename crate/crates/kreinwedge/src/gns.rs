//! Finite-basis GNS realization with an indefinite metric.
//!
//! For basis elements a_i the physical form is H_ij = W(a_i* ⊗ a_j) and the
//! auxiliary positive form is P_ij = conj(W(a_i)) W(a_j) + P_{≥1}(a_i, a_j),
//! the polarized Sobolev product on degrees ≥ 1 with the degree-0 part
//! replaced by the vacuum overlap. Whitening P and diagonalizing H gives
//! quotient coordinates y_j with H = Y* η Y, η = diag(±1), and the Hilbert
//! product (y, y') = y* y'.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::borchers::{BorchersElement, MultiplierGenerator, Slot};
use crate::error::{Error, Result};
use crate::mollifier::mollify_with;
use crate::quadrature::HermiteRule;
use crate::states::{sobolev_p, sobolev_product, QuasiFreeState, SobolevMajorant};
use crate::testfunctions::{PoincareElement, SpacetimePoint, WavePacket, C64};

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const DEFAULT_TOL_NULL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnsBasis {
    pub elements: Vec<BorchersElement>,
    #[serde(default)]
    pub closure_note: Vec<String>,
}

impl GnsBasis {
    /// Prepends 𝟙 unless it is already first.
    pub fn new(mut elements: Vec<BorchersElement>) -> Self {
        if elements.first() != Some(&BorchersElement::unit()) {
            elements.insert(0, BorchersElement::unit());
        }
        GnsBasis { elements, closure_note: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn note(&mut self, op: &OperatorMatrix) {
        self.closure_note.push(format!("{}: domain defect {:.3e}", op.label, op.domain_defect));
    }
}

/// Three mollified right-wedge packets followed by their Θ images.
pub fn wedge_slots(eps: f64) -> Result<Vec<Slot>> {
    let defs = [
        (SpacetimePoint::new(0.0, 1.0), (0.2, 0.2), SpacetimePoint::new(0.0, 0.0)),
        (SpacetimePoint::new(0.1, 1.4), (0.25, 0.18), SpacetimePoint::new(1.0, 0.3)),
        (SpacetimePoint::new(-0.1, 1.2), (0.2, 0.3), SpacetimePoint::new(2.2, 0.0)),
    ];
    let mut slots = Vec::with_capacity(2 * defs.len());
    for (c, (wu, wv), k) in defs {
        let p = WavePacket::modulated(C64::new(1.0, 0.0), c, wu, wv, k);
        slots.push(Slot::Mollified(mollify_with(&p, eps, HermiteRule::WEDGE)?));
    }
    let reflected: Vec<Slot> = slots.iter().map(|s| s.act(&PoincareElement::theta01())).collect();
    slots.extend(reflected);
    Ok(slots)
}

/// {𝟙} ∪ slots, and with `products` also every ordered pair a ⊗ b.
pub fn slot_basis(slots: &[Slot], products: bool) -> GnsBasis {
    let mut els: Vec<BorchersElement> = slots.iter().map(|a| BorchersElement::from_slot(a.clone())).collect();
    if products {
        for a in slots {
            for b in slots {
                els.push(BorchersElement::from_slots(vec![a.clone(), b.clone()]));
            }
        }
    }
    GnsBasis::new(els)
}

fn hermitian_defect(m: &CMatrix) -> f64 {
    let scale = m.iter().map(|x| x.norm()).fold(0.0, f64::max).max(1e-300);
    (m - m.adjoint()).iter().map(|x| x.norm()).fold(0.0, f64::max) / scale
}

fn symmetrized(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Gram matrices of a basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Gram {
    pub p: CMatrix,
    pub h: CMatrix,
    /// max |H_ij − conj H_ji| relative to max |H| before symmetrization.
    pub h_hermiticity: f64,
}

/// H_ij = W(a_i* ⊗ a_j) and the auxiliary product P; both returned Hermitian.
pub fn build_gram(state: &QuasiFreeState, basis: &GnsBasis, majorant: &SobolevMajorant) -> Result<Gram> {
    let n = basis.len();
    if n == 0 || basis.elements[0] != BorchersElement::unit() {
        return Err(Error::InvalidArgument("basis must start with the unit".into()));
    }
    let h = cross_gram(state, &basis.elements, &basis.elements)?;
    let h_hermiticity = hermitian_defect(&h);
    let w: Vec<C64> = basis.elements.par_iter().map(|a| state.evaluate(a)).collect::<Result<_>>()?;
    let mut p = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = w[i].conj() * w[j] + sobolev_product(majorant, &basis.elements[i], &basis.elements[j], 1);
            p[(i, j)] = v;
            p[(j, i)] = v.conj();
        }
        p[(i, i)].im = 0.0;
    }
    Ok(Gram { p, h: symmetrized(&h), h_hermiticity })
}

/// G_ij = W(a_i* ⊗ b_j).
pub fn cross_gram(state: &QuasiFreeState, a: &[BorchersElement], b: &[BorchersElement]) -> Result<CMatrix> {
    let stars: Vec<BorchersElement> = a.iter().map(|x| x.involution()).collect();
    let cells: Vec<(usize, usize)> = (0..a.len()).flat_map(|i| (0..b.len()).map(move |j| (i, j))).collect();
    let vals = cells
        .par_iter()
        .map(|&(i, j)| state.evaluate(&stars[i].tensor(&b[j])?))
        .collect::<Result<Vec<C64>>>()?;
    Ok(CMatrix::from_fn(a.len(), b.len(), |i, j| vals[i * b.len() + j]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnsRealization {
    pub p: CMatrix,
    pub h: CMatrix,
    /// Quotient coordinates of the basis elements, one column each.
    pub coords: CMatrix,
    /// Diagonal of η.
    pub eta: Vec<f64>,
    pub vacuum: CVector,
    pub tol_null: f64,
    /// Generalized eigenvalues of (H, P), descending.
    pub spectrum: Vec<f64>,
    pub null_dim: usize,
    pub eigen_residual: f64,
}

/// Generalized eigenproblem H v = λ P v by whitening P, then the null-space
/// cut |λ| ≤ tol · max|λ|.
pub fn quotient_and_metric(p: &CMatrix, h: &CMatrix, tol: f64) -> Result<GnsRealization> {
    let n = p.nrows();
    let pe = symmetrized(p).symmetric_eigen();
    let dmax = pe.eigenvalues.iter().copied().fold(0.0, f64::max);
    let dmin = pe.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if !(dmin > 1e-15 * dmax) {
        return Err(Error::IllConditioned(format!("auxiliary product not positive definite (eigenvalues {dmin:.3e} .. {dmax:.3e})")));
    }
    let v = &pe.eigenvectors;
    let dsqrt = DVector::from_iterator(n, pe.eigenvalues.iter().map(|d| C64::new(d.sqrt(), 0.0)));
    let dinv = DVector::from_iterator(n, pe.eigenvalues.iter().map(|d| C64::new(1.0 / d.sqrt(), 0.0)));
    let w = v * CMatrix::from_diagonal(&dinv);
    let winv = CMatrix::from_diagonal(&dsqrt) * v.adjoint();
    let c = symmetrized(&(w.adjoint() * h * &w));
    let ce = c.clone().symmetric_eigen();
    let resid = (&c * &ce.eigenvectors - &ce.eigenvectors * CMatrix::from_diagonal(&ce.eigenvalues.map(|x| C64::new(x, 0.0))))
        .iter()
        .map(|x| x.norm())
        .fold(0.0, f64::max);
    let lmax = ce.eigenvalues.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if resid > 1e-10 * lmax.max(1e-300) {
        return Err(Error::IllConditioned(format!("eigen-solve residual {resid:.3e}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| ce.eigenvalues[j].total_cmp(&ce.eigenvalues[i]));
    let kept: Vec<usize> = order.iter().copied().filter(|&i| ce.eigenvalues[i].abs() > tol * lmax).collect();
    let r = kept.len();
    let mut coords = CMatrix::zeros(r, n);
    let mut eta = Vec::with_capacity(r);
    for (row, &i) in kept.iter().enumerate() {
        let lam = ce.eigenvalues[i];
        eta.push(lam.signum());
        let q = ce.eigenvectors.column(i);
        let line = q.adjoint() * &winv * C64::new(lam.abs().sqrt(), 0.0);
        coords.row_mut(row).copy_from(&line);
    }
    let vacuum = coords.column(0).into_owned();
    Ok(GnsRealization {
        p: p.clone(),
        h: h.clone(),
        coords,
        eta,
        vacuum,
        tol_null: tol,
        spectrum: order.iter().map(|&i| ce.eigenvalues[i]).collect(),
        null_dim: n - r,
        eigen_residual: resid,
    })
}

fn op_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.iter().copied().fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricDefects {
    pub eta_squared: f64,
    pub eta_vacuum: f64,
    pub eta_hermitian: f64,
    /// ‖Y* η Y − H‖ / ‖H‖.
    pub form: f64,
}

impl GnsRealization {
    pub fn dim(&self) -> usize {
        self.eta.len()
    }

    pub fn eta_matrix(&self) -> CMatrix {
        CMatrix::from_diagonal(&DVector::from_iterator(self.dim(), self.eta.iter().map(|e| C64::new(*e, 0.0))))
    }

    /// (n₊, n₋).
    pub fn signature(&self) -> (usize, usize) {
        let plus = self.eta.iter().filter(|e| **e > 0.0).count();
        (plus, self.eta.len() - plus)
    }

    pub fn defects(&self) -> MetricDefects {
        let eta = self.eta_matrix();
        let id = CMatrix::identity(self.dim(), self.dim());
        let recon = self.coords.adjoint() * &eta * &self.coords;
        MetricDefects {
            eta_squared: op_norm(&(&eta * &eta - id)),
            eta_vacuum: (&eta * &self.vacuum - &self.vacuum).norm(),
            eta_hermitian: op_norm(&(&eta - eta.adjoint())),
            form: op_norm(&(recon - &self.h)) / op_norm(&self.h).max(1e-300),
        }
    }

    /// ⟨u, v⟩ = (u, η v).
    pub fn krein(&self, u: &CVector, v: &CVector) -> C64 {
        u.iter().zip(v.iter()).zip(&self.eta).map(|((a, b), e)| a.conj() * b * *e).sum()
    }

    /// Coordinates y with ⟨a_i, y⟩ = h_i in the least-squares sense.
    pub fn solve_krein(&self, h: &CVector) -> CVector {
        let b = self.coords.adjoint() * self.eta_matrix();
        let svd = b.svd(true, true);
        let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
        svd.solve(h, 1e-13 * smax).expect("SVD computed with both factors")
    }

    fn pinv(&self, conj: bool) -> CMatrix {
        let y = if conj { self.coords.map(|x| x.conj()) } else { self.coords.clone() };
        let smax = op_norm(&y);
        y.pseudo_inverse(1e-13 * smax).expect("pseudo-inverse")
    }

    /// E₀ = Ω (Ω, ·).
    pub fn vacuum_projection(&self) -> CMatrix {
        &self.vacuum * self.vacuum.adjoint()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Field,
    Symmetry,
    Conjugation,
    Projection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub kind: OperatorKind,
    pub label: String,
    pub matrix: CMatrix,
    /// Set for J: the operator acts as y ↦ M conj(y).
    pub antilinear: bool,
    pub domain_defect: f64,
}

impl OperatorMatrix {
    pub fn apply(&self, y: &CVector) -> CVector {
        if self.antilinear {
            &self.matrix * y.map(|x| x.conj())
        } else {
            &self.matrix * y
        }
    }

    /// ‖η M* η M − 1‖.
    pub fn eta_unitarity_defect(&self, real: &GnsRealization) -> f64 {
        let eta = real.eta_matrix();
        let id = CMatrix::identity(real.dim(), real.dim());
        op_norm(&(&eta * self.matrix.adjoint() * &eta * &self.matrix - id))
    }

    /// ‖[M, η]‖.
    pub fn eta_commutator(&self, real: &GnsRealization) -> f64 {
        let eta = real.eta_matrix();
        op_norm(&(&self.matrix * &eta - &eta * &self.matrix))
    }

    /// ‖J² − 1‖ for anti-linear operators, ‖M² − 1‖ otherwise.
    pub fn square_defect(&self) -> f64 {
        let sq = if self.antilinear { &self.matrix * self.matrix.map(|x| x.conj()) } else { &self.matrix * &self.matrix };
        op_norm(&(sq - CMatrix::identity(self.matrix.nrows(), self.matrix.ncols())))
    }

    /// Product of two linear operators, with defects added.
    pub fn compose(&self, other: &OperatorMatrix) -> OperatorMatrix {
        assert!(!self.antilinear && !other.antilinear, "composition of linear operators only");
        OperatorMatrix {
            kind: self.kind,
            label: format!("{}·{}", self.label, other.label),
            matrix: &self.matrix * &other.matrix,
            antilinear: false,
            domain_defect: self.domain_defect + other.domain_defect,
        }
    }
}

/// Coordinates of one element together with its projection defect.
#[derive(Debug, Clone, PartialEq)]
pub struct Projected {
    pub coords: CVector,
    /// Norm of the part of x outside the span, in the |w|-state Fock norm,
    /// relative to the norm of x.
    pub defect: f64,
}

/// A state, a basis and its realization, plus the |w|-weighted Gram used
/// to measure domain defects.
#[derive(Debug, Clone)]
pub struct GnsModel {
    pub state: QuasiFreeState,
    pub abs_state: QuasiFreeState,
    pub basis: GnsBasis,
    pub majorant: SobolevMajorant,
    pub gram: Gram,
    pub abs_gram: CMatrix,
    pub real: GnsRealization,
}

impl GnsModel {
    pub fn new(state: QuasiFreeState, basis: GnsBasis, majorant: SobolevMajorant, tol: f64) -> Result<Self> {
        let gram = build_gram(&state, &basis, &majorant)?;
        let real = quotient_and_metric(&gram.p, &gram.h, tol)?;
        let abs_state = state.absolute();
        let abs_gram = symmetrized(&cross_gram(&abs_state, &basis.elements, &basis.elements)?);
        Ok(GnsModel { state, abs_state, basis, majorant, gram, abs_gram, real })
    }

    /// Krein projection of x onto the span.
    pub fn project(&self, x: &BorchersElement) -> Result<Projected> {
        let one = std::slice::from_ref(x);
        let h = cross_gram(&self.state, &self.basis.elements, one)?.column(0).into_owned();
        let y = self.real.solve_krein(&h);
        let c = self.real.pinv(false) * &y;
        let g = cross_gram(&self.abs_state, &self.basis.elements, one)?.column(0).into_owned();
        let xx = self.abs_state.evaluate(&x.involution().tensor(x)?)?.re;
        let cgc = (c.adjoint() * &self.abs_gram * &c)[(0, 0)].re;
        let cg = (c.adjoint() * &g)[(0, 0)].re;
        let resid2 = (xx - 2.0 * cg + cgc).max(0.0);
        let defect = if xx > 0.0 { (resid2 / xx).sqrt() } else { resid2.sqrt() };
        Ok(Projected { coords: y, defect })
    }

    /// The Hilbert norm.
    pub fn norm(&self, y: &CVector) -> f64 {
        y.norm()
    }

    fn operator(&self, kind: OperatorKind, label: String, images: &[BorchersElement], antilinear: bool) -> Result<OperatorMatrix> {
        let proj = images.par_iter().map(|x| self.project(x)).collect::<Result<Vec<Projected>>>()?;
        let r = self.real.dim();
        let mut img = CMatrix::zeros(r, images.len());
        let mut defect: f64 = 0.0;
        for (j, p) in proj.iter().enumerate() {
            img.set_column(j, &p.coords);
            defect = defect.max(p.defect);
        }
        let matrix = img * self.real.pinv(antilinear);
        Ok(OperatorMatrix { kind, label, matrix, antilinear, domain_defect: defect })
    }

    /// φ(f) by projecting f ⊗ a_j.
    pub fn field_matrix(&self, f: &BorchersElement) -> Result<OperatorMatrix> {
        let images = self.basis.elements.iter().map(|a| f.tensor(a)).collect::<Result<Vec<_>>>()?;
        self.operator(OperatorKind::Field, "field".into(), &images, false)
    }

    /// U(g) by projecting α_g(a_j); Θ-type elements give the anti-linear J.
    pub fn symmetry_matrix(&self, g: &PoincareElement) -> Result<OperatorMatrix> {
        let images: Vec<BorchersElement> = self.basis.elements.iter().map(|a| a.act(g)).collect();
        let (kind, label) = if g.is_antilinear() {
            (OperatorKind::Conjugation, "J".to_string())
        } else {
            (OperatorKind::Symmetry, format!("U(t={}, a=({}, {}))", g.rapidity, g.translation.x0, g.translation.x1))
        };
        self.operator(kind, label, &images, g.is_antilinear())
    }

    /// Domination ‖φ(f)Ω‖ ≤ p(f) for random combinations f = Σ c_i a_i.
    pub fn domination(&self, samples: usize, seed: u64) -> DominationReport {
        use rand::Rng;
        let mut g = crate::states::sampling::rng(seed);
        let n = self.basis.len();
        let mut violations = 0;
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let c = CVector::from_fn(n, |_, _| C64::new(g.gen_range(-1.0..1.0), g.gen_range(-1.0..1.0)));
            let mut f = BorchersElement::zero();
            for (ci, a) in c.iter().zip(&self.basis.elements) {
                f = f.plus(&a.scaled(*ci));
            }
            let lhs = (&self.real.coords * &c).norm();
            let rhs = sobolev_p(&self.majorant, &f);
            worst = worst.max(lhs / rhs);
            if !(lhs <= rhs) {
                violations += 1;
            }
        }
        DominationReport { samples, violations, worst_ratio: worst }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub samples: usize,
    pub violations: usize,
    pub worst_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VacuumReport {
    pub e0_vacuum: f64,
    pub e0_idempotent: f64,
    /// sup |(Ω, φ(g)Ω)| over smeared samples.
    pub orthogonality: f64,
    /// sup ‖(1 − E₀)φ(f)Ω − φ(g)Ω‖ / ‖φ(f)Ω‖.
    pub projection_identity: f64,
    pub plateau_leak: f64,
    pub domain_defect: f64,
}

/// E₀ checks and the mass-gap identities for g = g(f, h) with a forward
/// plateau ĥ switching on at half the lowest mass.
pub fn vacuum_tools(model: &GnsModel, samples: &[BorchersElement]) -> Result<VacuumReport> {
    let m = model.state.density.min_mass();
    if !(m > 0.0) {
        return Err(Error::NoMassGap);
    }
    let e0 = model.real.vacuum_projection();
    let omega = &model.real.vacuum;
    let h = MultiplierGenerator::forward_plateau(0.5 * m, m / 20.0);
    // Worst deviation of ĥ from 1 on the shells and from 0 at k = 0.
    let leak = h.leak().max(0.5 * erfc((m - 0.5 * m) / (m / 20.0)));
    let mut orth: f64 = 0.0;
    let mut ident: f64 = 0.0;
    let mut dd: f64 = 0.0;
    for f in samples {
        let g = f.spectral_smear(&h);
        let pf = model.project(f)?;
        let pg = model.project(&g)?;
        dd = dd.max(pf.defect).max(pg.defect);
        orth = orth.max((omega.adjoint() * &pg.coords)[(0, 0)].norm());
        let lhs = &pf.coords - &e0 * &pf.coords;
        let nf = pf.coords.norm().max(1e-300);
        ident = ident.max((lhs - &pg.coords).norm() / nf);
    }
    Ok(VacuumReport {
        e0_vacuum: (&e0 * omega - omega).norm(),
        e0_idempotent: op_norm(&(&e0 * &e0 - &e0)),
        orthogonality: orth,
        projection_identity: ident,
        plateau_leak: leak,
        domain_defect: dd,
    })
}

fn matrix_json(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealizationExport {
    pub p: Vec<Vec<[f64; 2]>>,
    pub h: Vec<Vec<[f64; 2]>>,
    pub spectrum: Vec<f64>,
    pub eta: Vec<f64>,
    pub signature: (usize, usize),
    pub null_dim: usize,
    pub tol_null: f64,
    pub defects: MetricDefects,
}

impl GnsRealization {
    pub fn export(&self) -> RealizationExport {
        RealizationExport {
            p: matrix_json(&self.p),
            h: matrix_json(&self.h),
            spectrum: self.spectrum.clone(),
            eta: self.eta.clone(),
            signature: self.signature(),
            null_dim: self.null_dim,
            tol_null: self.tol_null,
            defects: self.defects(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.export()).expect("serializable")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_forms_give_trivial_metric() {
        let p = CMatrix::from_fn(3, 3, |i, j| C64::new(if i == j { 2.0 } else { 0.3 }, 0.0));
        let r = quotient_and_metric(&p, &p, DEFAULT_TOL_NULL).unwrap();
        assert_eq!(r.signature(), (3, 0));
        assert_eq!(r.null_dim, 0);
        assert!(r.defects().form < 1e-12);
    }

    #[test]
    fn small_eigenvalue_is_quotiented() {
        let p = CMatrix::identity(3, 3);
        let mut h = CMatrix::identity(3, 3);
        h[(2, 2)] = C64::new(1e-14, 0.0);
        let r = quotient_and_metric(&p, &h, DEFAULT_TOL_NULL).unwrap();
        assert_eq!(r.dim(), 2);
    }
}
