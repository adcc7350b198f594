//! Symmetrization functions Q(θ) and the quantization of polynomial symbols
//! `f(q) pⁿ` into operator matrices on a periodic position grid.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::special::{binomial, gauss_legendre};

const MASS_TOL: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-12;

/// Default Gauss–Legendre node count for continuous parts of Q.
pub const DEFAULT_DENSITY_NODES: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct SymmetrizationScheme {
    pub label: String,
    pub atoms: Vec<(f64, f64)>,
    pub density_nodes: Vec<(f64, f64)>,
}

impl SymmetrizationScheme {
    pub fn new(
        label: impl Into<String>,
        atoms: Vec<(f64, f64)>,
        density_nodes: Vec<(f64, f64)>,
    ) -> Result<Self> {
        let label = label.into();
        for &(theta, w) in atoms.iter().chain(&density_nodes) {
            if !(0.0..=1.0).contains(&theta) {
                return Err(Error::ThetaOutOfRange(theta));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidScheme(format!(
                    "{label}: weight {w} at theta = {theta} is not positive"
                )));
            }
        }
        let mass: f64 = atoms.iter().chain(&density_nodes).map(|a| a.1).sum();
        if (mass - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidScheme(format!(
                "{label}: total mass {mass} differs from 1"
            )));
        }
        Ok(Self {
            label,
            atoms,
            density_nodes,
        })
    }

    pub fn point(theta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::ThetaOutOfRange(theta));
        }
        Self::new(format!("point({theta})"), vec![(theta, 1.0)], vec![])
    }

    pub fn weyl() -> Self {
        Self::new("weyl", vec![(0.5, 1.0)], vec![]).unwrap()
    }

    pub fn jordan() -> Self {
        Self::new("jordan", vec![(0.0, 0.5), (1.0, 0.5)], vec![]).unwrap()
    }

    pub fn born_jordan() -> Self {
        Self::born_jordan_with(DEFAULT_DENSITY_NODES)
    }

    pub fn born_jordan_with(nodes: usize) -> Self {
        Self::new("born_jordan", vec![], uniform_nodes(1.0, nodes)).unwrap()
    }

    /// `weyl`, `jordan`, `born_jordan` or `point(θ₀)`.
    pub fn builtin(name: &str) -> Result<Self> {
        let name = name.trim();
        match name {
            "weyl" => Ok(Self::weyl()),
            "jordan" => Ok(Self::jordan()),
            "born_jordan" | "born-jordan" => Ok(Self::born_jordan()),
            _ => {
                let inner = name
                    .strip_prefix("point(")
                    .and_then(|s| s.strip_suffix(')'))
                    .ok_or_else(|| Error::InvalidScheme(format!("unknown scheme `{name}`")))?;
                let theta: f64 = inner
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidScheme(format!("bad point location `{inner}`")))?;
                Self::point(theta)
            }
        }
    }

    /// All (θ, weight) pairs: atoms first, then density nodes.
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        self.atoms
            .iter()
            .chain(&self.density_nodes)
            .copied()
            .collect()
    }

    /// Invariance of atoms and nodes under θ ↦ 1 − θ.
    pub fn is_hermitian(&self) -> bool {
        fn symmetric(set: &[(f64, f64)]) -> bool {
            set.iter().all(|&(theta, w)| {
                set.iter().any(|&(t2, w2)| {
                    (t2 - (1.0 - theta)).abs() <= SYMMETRY_TOL && (w2 - w).abs() <= SYMMETRY_TOL
                })
            })
        }
        symmetric(&self.atoms) && symmetric(&self.density_nodes)
    }

    pub fn moments(&self, k_max: usize) -> MomentTable {
        let sigma = (0..=k_max)
            .map(|k| {
                if k == 0 {
                    return 1.0;
                }
                self.nodes()
                    .iter()
                    .map(|&(th, w)| w * th.powi(k as i32))
                    .sum()
            })
            .collect();
        MomentTable {
            sigma,
            hermitian: self.is_hermitian(),
        }
    }

    /// Moments of the reflected function, Σ w (1 − θ)^k.
    pub fn reflected_moments(&self, k_max: usize) -> Vec<f64> {
        (0..=k_max)
            .map(|k| {
                if k == 0 {
                    return 1.0;
                }
                self.nodes()
                    .iter()
                    .map(|&(th, w)| w * (1.0 - th).powi(k as i32))
                    .sum()
            })
            .collect()
    }

    /// G(s) = Σ w e^{isθ}.
    pub fn characteristic_g(&self, s: f64) -> C64 {
        self.nodes()
            .iter()
            .map(|&(th, w)| C64::from_polar(w, s * th))
            .sum()
    }
}

/// Gauss–Legendre discretization of a uniform density of total `mass` on
/// [0, 1].
pub fn uniform_nodes(mass: f64, count: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(count);
    let mut nodes: Vec<(f64, f64)> = x
        .iter()
        .zip(&w)
        .map(|(&x, &w)| ((x + 1.0) / 2.0, mass * w / 2.0))
        .collect();
    // symmetrize exactly so hermiticity is not lost to rounding
    let n = nodes.len();
    for i in 0..n / 2 {
        let (a, b) = (nodes[i], nodes[n - 1 - i]);
        let w = 0.5 * (a.1 + b.1);
        let th = 0.5 * (a.0 + 1.0 - b.0);
        nodes[i] = (th, w);
        nodes[n - 1 - i] = (1.0 - th, w);
    }
    if n % 2 == 1 {
        nodes[n / 2].0 = 0.5;
    }
    // renormalize the total so the mass invariant holds to the last bit
    let total: f64 = nodes.iter().map(|n| n.1).sum();
    for nd in &mut nodes {
        nd.1 *= mass / total;
    }
    nodes
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentTable {
    pub sigma: Vec<f64>,
    pub hermitian: bool,
}

impl MomentTable {
    /// Max over k of |σ_{2k+1} − ½[1 + Σ_{n=1}^{2k} (−1)ⁿ C(2k+1, n) σ_n]|.
    pub fn odd_moment_residual(&self) -> Result<f64> {
        if !self.hermitian {
            return Err(Error::NonHermitian(
                "odd-moment recursion holds only for symmetric Q".into(),
            ));
        }
        let mut worst: f64 = 0.0;
        let mut k = 0;
        while 2 * k + 1 < self.sigma.len() {
            let m = 2 * k + 1;
            let mut rhs = 1.0;
            for n in 1..=2 * k {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                rhs += sign * binomial(m, n) * self.sigma[n];
            }
            worst = worst.max((self.sigma[m] - 0.5 * rhs).abs());
            k += 1;
        }
        Ok(worst)
    }
}

/// Σ_t f_t(q) p^{n_t}, with each f_t a polynomial given by ascending
/// coefficients.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Symbol {
    pub terms: Vec<(Vec<f64>, u32)>,
}

impl Symbol {
    pub fn monomial(f: &[f64], n: u32) -> Self {
        Self {
            terms: vec![(f.to_vec(), n)],
        }
    }

    pub fn plus(mut self, f: &[f64], n: u32) -> Self {
        self.terms.push((f.to_vec(), n));
        self
    }

    /// (q² + p²)/2
    pub fn harmonic_energy() -> Self {
        Self::monomial(&[0.0, 0.0, 0.5], 0).plus(&[0.5], 2)
    }

    pub fn eval(&self, q: f64, p: f64) -> f64 {
        self.terms
            .iter()
            .map(|(f, n)| poly_eval(f, q) * p.powi(*n as i32))
            .sum()
    }
}

pub fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

pub fn poly_derivative(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| i as f64 * c)
        .collect()
}

#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    pub grid: GridSpec,
    pub entries: Array2<C64>,
}

impl OperatorMatrix {
    pub fn dimension(&self) -> usize {
        self.grid.count
    }

    /// ‖M − M†‖∞ / ‖M‖∞ with the max-row-sum norm.
    pub fn hermiticity_defect(&self) -> f64 {
        let m = &self.entries;
        let n = m.nrows();
        let mut diff: f64 = 0.0;
        let mut norm: f64 = 0.0;
        for i in 0..n {
            let mut d = 0.0;
            let mut s = 0.0;
            for j in 0..n {
                d += (m[[i, j]] - m[[j, i]].conj()).norm();
                s += m[[i, j]].norm();
            }
            diff = diff.max(d);
            norm = norm.max(s);
        }
        if norm == 0.0 {
            0.0
        } else {
            diff / norm
        }
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let x = ndarray::ArrayView1::from(v);
        self.entries.dot(&x).to_vec()
    }

    pub fn add(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        if !self.grid.approx_eq(&other.grid) {
            return Err(Error::GridMismatch("operator grids differ".into()));
        }
        Ok(OperatorMatrix {
            grid: self.grid,
            entries: &self.entries + &other.entries,
        })
    }
}

/// Matrix of p̂ⁿ = (−i d/dx)ⁿ on the periodic grid. The Nyquist mode is
/// removed so that p̂ is hermitian and p̂ⁿ is exactly its n-th power.
pub fn momentum_power(grid: &GridSpec, n: u32) -> Array2<C64> {
    let len = grid.count;
    let dk = 2.0 * PI / grid.width();
    let mut col: Vec<C64> = (0..len)
        .map(|a| {
            if a == len / 2 {
                return C64::new(0.0, 0.0);
            }
            let m = if a < len / 2 {
                a as f64
            } else {
                a as f64 - len as f64
            };
            C64::new((m * dk).powi(n as i32) / len as f64, 0.0)
        })
        .collect();
    // c_m = (1/N) Σ_a κ_aⁿ e^{2πi a m / N}
    FftPlanner::new().plan_fft_inverse(len).process(&mut col);
    Array2::from_shape_fn((len, len), |(i, j)| col[(i + len - j) % len])
}

/// Operator for the symbol f(q)pⁿ under the scheme, in kernel form:
/// `M[i,j] = Σ_θ w_θ f(θx_i + (1−θ)x_j) (p̂ⁿ)[i,j]`.
///
/// θ = 0 gives p̂ⁿ f(q̂); θ = 1 gives f(q̂) p̂ⁿ.
pub fn quantize_monomial(
    f: &[f64],
    n: u32,
    scheme: &SymmetrizationScheme,
    grid: &GridSpec,
) -> Result<OperatorMatrix> {
    if grid.count < 8 {
        return Err(Error::DegenerateGrid("fewer than 8 points".into()));
    }
    let pn = momentum_power(grid, n);
    let x = grid.points();
    let nodes = scheme.nodes();
    let entries = Array2::from_shape_fn(pn.dim(), |(i, j)| {
        let avg: f64 = nodes
            .iter()
            .map(|&(th, w)| w * poly_eval(f, th * x[i] + (1.0 - th) * x[j]))
            .sum();
        pn[[i, j]] * avg
    });
    Ok(OperatorMatrix {
        grid: *grid,
        entries,
    })
}

/// Same operator assembled from moments:
/// `Σ_k C(n,k) (−i)^k τ_k f^{(k)}(q̂) p̂^{n−k}` with τ_k = Σ w (1 − θ)^k.
/// Agrees with [`quantize_monomial`] on band-limited vectors; only the
/// kernel form is exactly hermitian on the periodic grid.
pub fn quantize_monomial_moments(
    f: &[f64],
    n: u32,
    scheme: &SymmetrizationScheme,
    grid: &GridSpec,
) -> Result<OperatorMatrix> {
    if grid.count < 8 {
        return Err(Error::DegenerateGrid("fewer than 8 points".into()));
    }
    let tau = scheme.reflected_moments(n as usize);
    let x = grid.points();
    let len = grid.count;
    let mut out = Array2::<C64>::zeros((len, len));
    let mut deriv = f.to_vec();
    let mut minus_i_k = C64::new(1.0, 0.0);
    for k in 0..=n as usize {
        let coef = minus_i_k * binomial(n as usize, k) * tau[k];
        if !deriv.is_empty() && coef != C64::new(0.0, 0.0) {
            let pk = momentum_power(grid, n - k as u32);
            for i in 0..len {
                let fi = poly_eval(&deriv, x[i]);
                if fi == 0.0 {
                    continue;
                }
                for j in 0..len {
                    out[[i, j]] += coef * fi * pk[[i, j]];
                }
            }
        }
        deriv = poly_derivative(&deriv);
        minus_i_k *= C64::new(0.0, -1.0);
    }
    Ok(OperatorMatrix {
        grid: *grid,
        entries: out,
    })
}

pub fn quantize_symbol(
    symbol: &Symbol,
    scheme: &SymmetrizationScheme,
    grid: &GridSpec,
) -> Result<OperatorMatrix> {
    let mut acc = OperatorMatrix {
        grid: *grid,
        entries: Array2::zeros((grid.count, grid.count)),
    };
    for (f, n) in &symbol.terms {
        acc = acc.add(&quantize_monomial(f, *n, scheme, grid)?)?;
    }
    Ok(acc)
}

/// Diagonal matrix of q̂.
pub fn position_matrix(grid: &GridSpec) -> Array2<C64> {
    let mut m = Array2::zeros((grid.count, grid.count));
    for (i, x) in grid.points().into_iter().enumerate() {
        m[[i, i]] = C64::new(x, 0.0);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn builtin_moments() {
        assert_eq!(SymmetrizationScheme::weyl().atoms, vec![(0.5, 1.0)]);
        assert_eq!(
            SymmetrizationScheme::weyl().moments(4).sigma,
            vec![1.0, 0.5, 0.25, 0.125, 0.0625]
        );
        let bj = SymmetrizationScheme::born_jordan().moments(3).sigma;
        assert!(close(&bj, &[1.0, 0.5, 1.0 / 3.0, 0.25], 1e-14));
        let j = SymmetrizationScheme::jordan();
        assert!(j.is_hermitian());
        assert_eq!(j.moments(3).sigma, vec![1.0, 0.5, 0.5, 0.5]);
        assert_eq!(
            SymmetrizationScheme::point(0.0).unwrap().atoms,
            vec![(0.0, 1.0)]
        );
        assert!(!SymmetrizationScheme::point(0.2).unwrap().is_hermitian());
        assert!(SymmetrizationScheme::born_jordan().is_hermitian());
    }

    #[test]
    fn builtin_by_name() {
        assert_eq!(SymmetrizationScheme::builtin("weyl").unwrap().label, "weyl");
        let p = SymmetrizationScheme::builtin("point(0.25)").unwrap();
        assert_eq!(p.atoms, vec![(0.25, 1.0)]);
        assert!(matches!(
            SymmetrizationScheme::builtin("point(1.5)"),
            Err(Error::ThetaOutOfRange(_))
        ));
        assert!(SymmetrizationScheme::builtin("anti-normal").is_err());
    }

    #[test]
    fn rejects_bad_mass() {
        assert!(SymmetrizationScheme::new("x", vec![(0.5, 0.9)], vec![]).is_err());
        assert!(SymmetrizationScheme::new("x", vec![(0.5, -1.0), (0.2, 2.0)], vec![]).is_err());
    }

    #[test]
    fn odd_moment_recursion() {
        for s in [
            SymmetrizationScheme::weyl(),
            SymmetrizationScheme::jordan(),
            SymmetrizationScheme::born_jordan(),
        ] {
            assert!(
                s.moments(11).odd_moment_residual().unwrap() <= 1e-12,
                "{}",
                s.label
            );
        }
        let p = SymmetrizationScheme::point(0.3).unwrap();
        assert!(matches!(
            p.moments(5).odd_moment_residual(),
            Err(Error::NonHermitian(_))
        ));
    }

    #[test]
    fn characteristic_function() {
        for s in [-3.0, 0.0, 0.7, 12.0] {
            let g = SymmetrizationScheme::weyl().characteristic_g(s);
            assert!((g - C64::from_polar(1.0, s / 2.0)).norm() < 1e-15);
            let g = SymmetrizationScheme::jordan().characteristic_g(s);
            let want = (C64::new(1.0, 0.0) + C64::from_polar(1.0, s)) / 2.0;
            assert!((g - want).norm() < 1e-15);
            let bj = SymmetrizationScheme::born_jordan().characteristic_g(s);
            assert!((bj * C64::from_polar(1.0, -s / 2.0)).im.abs() < 1e-12);
        }
    }

    fn grid() -> GridSpec {
        GridSpec::symmetric(8.0, 64).unwrap()
    }

    fn gaussian(g: &GridSpec, x0: f64, k0: f64) -> Vec<C64> {
        g.points()
            .iter()
            .map(|x| C64::from_polar((-(x - x0).powi(2) / 2.0).exp(), k0 * x))
            .collect()
    }

    #[test]
    fn momentum_matches_spectral_derivative() {
        let g = grid();
        let p = quantize_monomial(&[1.0], 1, &SymmetrizationScheme::jordan(), &g).unwrap();
        let v = gaussian(&g, 0.3, 0.0);
        let pv = p.apply(&v);
        for (x, w) in g.points().iter().zip(&pv) {
            // −i d/dx e^{−(x−x0)²/2} = i (x − x0) e^{…}
            let want = C64::new(0.0, (x - 0.3) * (-(x - 0.3f64).powi(2) / 2.0).exp());
            assert!((w - want).norm() < 1e-9);
        }
    }

    #[test]
    fn pq_ordering_at_theta_zero() {
        let g = grid();
        let m = quantize_monomial(
            &[0.0, 1.0],
            1,
            &SymmetrizationScheme::point(0.0).unwrap(),
            &g,
        )
        .unwrap();
        let v = gaussian(&g, -0.5, 0.8);
        let got = m.apply(&v);
        // −i (x ψ' + ψ) with ψ' = (−(x − x0) + i k0) ψ
        for ((x, psi), w) in g.points().iter().zip(&v).zip(&got) {
            let dpsi = C64::new(-(x + 0.5), 0.8) * psi;
            let want = C64::new(0.0, -1.0) * (dpsi * x + psi);
            assert!((w - want).norm() < 1e-8, "{w} vs {want}");
        }
    }

    #[test]
    fn weyl_symmetrizes_qp() {
        let g = grid();
        let m = quantize_monomial(&[0.0, 1.0], 1, &SymmetrizationScheme::weyl(), &g).unwrap();
        let q = position_matrix(&g);
        let p = momentum_power(&g, 1);
        let want = (q.dot(&p) + p.dot(&q)).mapv(|v| v * 0.5);
        let err = (&m.entries - &want)
            .iter()
            .fold(0.0f64, |a, v| a.max(v.norm()));
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn hermitian_schemes_give_hermitian_matrices() {
        let g = grid();
        let f = [0.3, -1.0, 0.5, 0.25];
        for s in [
            SymmetrizationScheme::weyl(),
            SymmetrizationScheme::jordan(),
            SymmetrizationScheme::born_jordan(),
        ] {
            for n in 0..=4 {
                let m = quantize_monomial(&f, n, &s, &g).unwrap();
                assert!(m.hermiticity_defect() <= 1e-10, "{} n={n}", s.label);
            }
        }
    }

    #[test]
    fn atom_decomposition() {
        let g = grid();
        let f = [1.0, 0.5, -0.2];
        for s in [SymmetrizationScheme::weyl(), SymmetrizationScheme::jordan()] {
            let m = quantize_monomial(&f, 3, &s, &g).unwrap();
            let mut sum = Array2::<C64>::zeros(m.entries.dim());
            for &(th, w) in &s.atoms {
                let a = quantize_monomial(&f, 3, &SymmetrizationScheme::point(th).unwrap(), &g)
                    .unwrap();
                sum = sum + a.entries.mapv(|v| v * w);
            }
            let scale = m.entries.iter().fold(0.0f64, |a, v| a.max(v.norm()));
            let err = (&m.entries - &sum)
                .iter()
                .fold(0.0f64, |a, v| a.max(v.norm()));
            assert!(err <= 1e-10 * scale);
        }
    }

    #[test]
    fn moment_form_agrees_on_smooth_vectors() {
        let g = GridSpec::symmetric(10.0, 128).unwrap();
        let f = [0.2, 1.0, -0.3];
        for s in [
            SymmetrizationScheme::point(0.0).unwrap(),
            SymmetrizationScheme::point(0.3).unwrap(),
            SymmetrizationScheme::weyl(),
            SymmetrizationScheme::born_jordan(),
        ] {
            for n in 1..=3 {
                let a = quantize_monomial(&f, n, &s, &g).unwrap();
                let b = quantize_monomial_moments(&f, n, &s, &g).unwrap();
                let v = gaussian(&g, 0.4, -0.6);
                let (va, vb) = (a.apply(&v), b.apply(&v));
                let err = va
                    .iter()
                    .zip(&vb)
                    .fold(0.0f64, |m, (x, y)| m.max((x - y).norm()));
                assert!(err < 1e-8, "{} n={n}: {err}", s.label);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn linear_in_symbol(
            f1 in proptest::collection::vec(-2.0f64..2.0, 1..4),
            f2 in proptest::collection::vec(-2.0f64..2.0, 1..4),
            n in 0u32..4,
        ) {
            let g = GridSpec::symmetric(6.0, 32).unwrap();
            let s = SymmetrizationScheme::born_jordan_with(4);
            let len = f1.len().max(f2.len());
            let sum: Vec<f64> = (0..len)
                .map(|i| f1.get(i).unwrap_or(&0.0) + f2.get(i).unwrap_or(&0.0))
                .collect();
            let a = quantize_monomial(&f1, n, &s, &g).unwrap();
            let b = quantize_monomial(&f2, n, &s, &g).unwrap();
            let c = quantize_monomial(&sum, n, &s, &g).unwrap();
            let scale = c.entries.iter().fold(1.0f64, |m, v| m.max(v.norm()));
            let err = (&a.entries + &b.entries - &c.entries)
                .iter()
                .fold(0.0f64, |m, v| m.max(v.norm()));
            prop_assert!(err <= 1e-12 * scale);
        }

        #[test]
        fn point_moments_are_powers(theta in 0.0f64..=1.0) {
            let m = SymmetrizationScheme::point(theta).unwrap().moments(8);
            for (k, s) in m.sigma.iter().enumerate() {
                prop_assert_eq!(*s, theta.powi(k as i32));
            }
        }
    }
}
