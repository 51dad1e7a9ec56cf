use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{inv_gamma, normal_ln_pdf, MixtureModel};
use crate::data::Dataset;
use crate::{Error, Result};

/// Where the kernel variance η² lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VarianceMode {
    /// Each atom carries its own η².
    #[default]
    InLocations,
    /// One η² shared by all atoms.
    Parametric,
}

/// Linear dependent model: y | x, θ, η² ~ N((1, x)ᵗθ, η²),
/// θ ~ N(b₀, Σ₀), η² ~ inv-gamma(ν₀/2, ν₀η₀²/2).
#[derive(Debug, Clone)]
pub struct LinDep {
    b0: DVector<f64>,
    sigma0: DMatrix<f64>,
    nu0: f64,
    eta0sq: f64,
    mode: VarianceMode,
    prec0: DMatrix<f64>,
    prec0_b0: DVector<f64>,
    chol0: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinLocation {
    pub theta: DVector<f64>,
    /// `None` in [`VarianceMode::Parametric`].
    pub eta2: Option<f64>,
}

impl LinDep {
    /// `b0` and `sigma0` include the intercept, so their dimension is p + 1.
    pub fn new(b0: Vec<f64>, sigma0: DMatrix<f64>, nu0: f64, eta0sq: f64, mode: VarianceMode) -> Result<Self> {
        let d = b0.len();
        if d == 0 || sigma0.shape() != (d, d) {
            return Err(Error::domain(format!(
                "b₀ has length {d} but Σ₀ is {}×{}",
                sigma0.nrows(),
                sigma0.ncols()
            )));
        }
        if (&sigma0 - sigma0.transpose()).amax() > 1e-12 * sigma0.amax().max(1.0) {
            return Err(Error::domain("Σ₀ must be symmetric"));
        }
        if !(nu0 > 0.0 && eta0sq > 0.0) {
            return Err(Error::domain(format!("need ν₀ > 0 and η₀² > 0, got {nu0}, {eta0sq}")));
        }
        let chol = Cholesky::new(sigma0.clone()).ok_or_else(|| Error::domain("Σ₀ must be positive definite"))?;
        let prec0 = chol.inverse();
        let b0 = DVector::from_vec(b0);
        let prec0_b0 = &prec0 * &b0;
        Ok(LinDep {
            chol0: chol.l(),
            b0,
            sigma0,
            nu0,
            eta0sq,
            mode,
            prec0,
            prec0_b0,
        })
    }

    pub fn p(&self) -> usize {
        self.b0.len() - 1
    }

    pub fn mode(&self) -> VarianceMode {
        self.mode
    }

    pub fn b0(&self) -> &DVector<f64> {
        &self.b0
    }

    pub fn sigma0(&self) -> &DMatrix<f64> {
        &self.sigma0
    }

    pub fn nu0(&self) -> f64 {
        self.nu0
    }

    pub fn eta0sq(&self) -> f64 {
        self.eta0sq
    }

    fn mean(&self, x: &[f64], theta: &DVector<f64>) -> f64 {
        theta[0] + x.iter().zip(theta.iter().skip(1)).map(|(a, b)| a * b).sum::<f64>()
    }

    fn variance(&self, loc: &LinLocation, global: f64) -> f64 {
        loc.eta2.unwrap_or(global)
    }

    /// Posterior mean and precision Cholesky factor of θ given η² and the
    /// member rows.
    pub fn theta_posterior(&self, data: &Dataset, members: &[usize], eta2: f64) -> (DVector<f64>, Cholesky<f64, Dyn>) {
        let d = self.b0.len();
        let mut prec = self.prec0.clone();
        let mut rhs = self.prec0_b0.clone();
        let mut row = DVector::zeros(d);
        for &i in members {
            row[0] = 1.0;
            for (j, v) in data.x[i].iter().enumerate() {
                row[j + 1] = *v;
            }
            prec.ger(1.0 / eta2, &row, &row, 1.0);
            rhs.axpy(data.y[i] / eta2, &row, 1.0);
        }
        let chol = Cholesky::new(prec).expect("prior precision keeps the posterior positive definite");
        (chol.solve(&rhs), chol)
    }

    fn draw_theta<R: Rng + ?Sized>(&self, data: &Dataset, members: &[usize], eta2: f64, rng: &mut R) -> DVector<f64> {
        let (mean, chol) = self.theta_posterior(data, members, eta2);
        let z = DVector::from_fn(mean.len(), |_, _| StandardNormal.sample(rng));
        let l = chol.l();
        let dev = l.tr_solve_lower_triangular(&z).expect("non-singular factor");
        mean + dev
    }

    fn residual_ss(&self, data: &Dataset, members: &[usize], theta: &DVector<f64>) -> f64 {
        members
            .iter()
            .map(|&i| (data.y[i] - self.mean(&data.x[i], theta)).powi(2))
            .sum()
    }
}

impl MixtureModel for LinDep {
    type Location = LinLocation;
    type Global = f64;

    fn name(&self) -> &'static str {
        "lindep"
    }

    fn check_data(&self, data: &Dataset) -> Result<()> {
        if data.is_empty() {
            return Err(Error::domain("data must be non-empty"));
        }
        if data.p() != self.p() {
            return Err(Error::domain(format!(
                "model has {} covariates but the data has {}",
                self.p(),
                data.p()
            )));
        }
        if data.y.iter().chain(data.x.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::domain("data must be finite"));
        }
        Ok(())
    }

    fn init_global(&self, _data: &Dataset) -> f64 {
        self.eta0sq
    }

    fn log_kernel(&self, y: f64, x: &[f64], loc: &LinLocation, global: &f64) -> f64 {
        normal_ln_pdf(y, self.mean(x, &loc.theta), self.variance(loc, *global))
    }

    fn kernel_moments(&self, x: &[f64], loc: &LinLocation, global: &f64) -> (f64, f64) {
        (self.mean(x, &loc.theta), self.variance(loc, *global))
    }

    fn sample_base<R: Rng + ?Sized>(&self, _global: &f64, rng: &mut R) -> LinLocation {
        let z = DVector::from_fn(self.b0.len(), |_, _| StandardNormal.sample(rng));
        let theta = &self.b0 + &self.chol0 * z;
        let eta2 = match self.mode {
            VarianceMode::InLocations => Some(inv_gamma(0.5 * self.nu0, 0.5 * self.nu0 * self.eta0sq, rng)),
            VarianceMode::Parametric => None,
        };
        LinLocation { theta, eta2 }
    }

    /// In-location variance: one Gibbs pass θ | η² then η² | θ.
    fn sample_allocated<R: Rng + ?Sized>(
        &self,
        data: &Dataset,
        members: &[usize],
        current: &LinLocation,
        global: &f64,
        rng: &mut R,
    ) -> LinLocation {
        match self.mode {
            VarianceMode::Parametric => LinLocation {
                theta: self.draw_theta(data, members, *global, rng),
                eta2: None,
            },
            VarianceMode::InLocations => {
                let eta2 = current.eta2.unwrap_or(self.eta0sq);
                let theta = self.draw_theta(data, members, eta2, rng);
                let ss = self.residual_ss(data, members, &theta);
                let eta2 = inv_gamma(
                    0.5 * (self.nu0 + members.len() as f64),
                    0.5 * (self.nu0 * self.eta0sq + ss),
                    rng,
                );
                LinLocation {
                    theta,
                    eta2: Some(eta2),
                }
            }
        }
    }

    fn update_global<R: Rng + ?Sized>(
        &self,
        data: &Dataset,
        allocations: &[usize],
        locations: &[LinLocation],
        global: &f64,
        rng: &mut R,
    ) -> f64 {
        if self.mode == VarianceMode::InLocations {
            return *global;
        }
        let ss: f64 = allocations
            .iter()
            .enumerate()
            .map(|(i, &c)| (data.y[i] - self.mean(&data.x[i], &locations[c].theta)).powi(2))
            .sum();
        inv_gamma(
            0.5 * (self.nu0 + data.len() as f64),
            0.5 * (self.nu0 * self.eta0sq + ss),
            rng,
        )
    }

    fn location_columns(&self) -> Vec<String> {
        let mut cols: Vec<String> = (0..self.b0.len()).map(|j| format!("theta{j}")).collect();
        if self.mode == VarianceMode::InLocations {
            cols.push("eta2".into());
        }
        cols
    }

    fn location_to_vec(&self, loc: &LinLocation) -> Vec<f64> {
        let mut v: Vec<f64> = loc.theta.iter().copied().collect();
        v.extend(loc.eta2);
        v
    }

    fn location_from_slice(&self, v: &[f64]) -> Result<LinLocation> {
        let d = self.b0.len();
        match (self.mode, v.len()) {
            (VarianceMode::Parametric, n) if n == d => Ok(LinLocation {
                theta: DVector::from_column_slice(v),
                eta2: None,
            }),
            (VarianceMode::InLocations, n) if n == d + 1 && v[d] > 0.0 => Ok(LinLocation {
                theta: DVector::from_column_slice(&v[..d]),
                eta2: Some(v[d]),
            }),
            _ => Err(Error::domain(format!("bad linear-model location {v:?}"))),
        }
    }

    fn global_to_vec(&self, global: &f64) -> Vec<f64> {
        vec![*global]
    }

    fn global_from_slice(&self, v: &[f64]) -> Result<f64> {
        match v {
            [g] if *g > 0.0 => Ok(*g),
            _ => Err(Error::domain(format!("bad linear-model global {v:?}"))),
        }
    }
}
