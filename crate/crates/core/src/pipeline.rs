//! One-stop assembly: map → branches → matrices → spectrum, plus the
//! response objects built on top.

use std::sync::Arc;

use num_complex::Complex64;

use crate::branch::{build_branch_system, BranchSystem};
use crate::conjugacy::Conjugacy;
use crate::error::Result;
use crate::map::{AnalyticMap, ObservablePoly, PerturbationField};
use crate::spectral::ChebGrid;
use crate::susceptibility::{
    build_endpoint_construction, build_y, decompose_y, kappa_checked, observable_data, psi,
    psi_at_one, EndpointConstruction, ResponseDecomposition,
};
use crate::transfer::{assemble, spectrum_and_density, SpectrumData, TransferMatrices};

#[derive(Debug, Clone)]
pub struct Pipeline {
    pub conj: Conjugacy,
    pub bs: BranchSystem,
    pub tm: TransferMatrices,
    pub sd: SpectrumData,
}

impl Pipeline {
    pub fn new(f: &AnalyticMap, conj: Conjugacy, n: usize) -> Result<Self> {
        let bs = build_branch_system(f, conj)?;
        let grid = ChebGrid::new(n)?;
        let tm = assemble(&bs, &grid)?;
        let sd = spectrum_and_density(&tm)?;
        Ok(Pipeline { conj, bs, tm, sd })
    }

    pub fn map(&self) -> &AnalyticMap {
        self.bs.map()
    }

    pub fn grid(&self) -> &Arc<ChebGrid> {
        self.tm.grid()
    }

    /// `ρ(A) = ∫ σ₀(y) A(ω(y)) dy`.
    pub fn expectation(&self, a: &ObservablePoly) -> f64 {
        let b = self.grid().sample(|y| a.eval(self.conj.omega(y)));
        self.sd.sigma0.dot(&b)
    }

    pub fn construction(&self) -> Result<EndpointConstruction> {
        build_endpoint_construction(&self.tm)
    }

    pub fn response(&self, x: &PerturbationField, a: &ObservablePoly) -> Result<Response<'_>> {
        let cons = self.construction()?;
        self.response_with(&cons, x, a)
    }

    /// Reuses an endpoint construction across several `(X, A)` pairs.
    pub fn response_with(
        &self,
        cons: &EndpointConstruction,
        x: &PerturbationField,
        a: &ObservablePoly,
    ) -> Result<Response<'_>> {
        let y = build_y(&self.sd, x, self.conj);
        let obs = observable_data(&self.tm, a, self.conj);
        let rd = decompose_y(&y, cons, &obs)?;
        Ok(Response { pipeline: self, rd })
    }
}

/// A response decomposition bound to its pipeline.
#[derive(Debug, Clone)]
pub struct Response<'a> {
    pub pipeline: &'a Pipeline,
    pub rd: ResponseDecomposition,
}

impl Response<'_> {
    pub fn kappa(&self, n: usize) -> Result<f64> {
        kappa_checked(&self.pipeline.tm, &self.rd, n)
    }

    pub fn psi(&self, lambda: Complex64) -> Result<Complex64> {
        psi(&self.rd, &self.pipeline.tm, &self.pipeline.sd, lambda)
    }

    pub fn psi_at_one(&self) -> Result<f64> {
        psi_at_one(&self.rd, &self.pipeline.tm, &self.pipeline.sd)
    }
}
