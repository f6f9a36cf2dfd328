//! End-to-end certified run: discretize, enclose, certify.

use std::time::Instant;

use thiserror::Error;

use crate::certify::{certify_l1, certify_linf, lyapunov, Certificate, CertifyError, LyapunovResult, RunInfo};
use crate::enclosure::{contraction_sweep, ContractionCertificate, EnclosedDensity, EnclosureError, SweepConfig, DEFAULT_J_MAX};
use crate::hat::{assemble_linearized, HatError, LinfMatrix};
use crate::map::ly::{ly_coefficients_bv, ly_coefficients_lip, LyCoefficientsBv, LyCoefficientsLip};
use crate::map::{MapError, PiecewiseMap};
use crate::matrix::{markovize, nnz_bound, MatrixError, NormKind, TransitionMatrix};
use crate::scalar::{add_up, mul_up, Scalar};
use crate::ulam::{assemble_ulam, AssemblyConfig, AssemblyError};

pub const DEFAULT_EPS_NUM_L1: f64 = 1e-4;
pub const DEFAULT_EPS_NUM_LINF: f64 = 1e-5;
pub const MIN_K: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub mode: NormKind,
    pub k: usize,
    /// Subdivision threshold; `1e-6 / k` when absent. Unused in `Linf` mode.
    pub nu: Option<f64>,
    /// Enclosure target; `1e-4` (`L1`) or `1e-5` (`Linf`) when absent.
    pub eps_num: Option<f64>,
    pub j_max: usize,
    pub lyapunov: bool,
    pub verbose: bool,
    pub map_id: String,
}

impl PipelineConfig {
    pub fn new(mode: NormKind, k: usize, map_id: impl Into<String>) -> Self {
        PipelineConfig {
            mode,
            k,
            nu: None,
            eps_num: None,
            j_max: DEFAULT_J_MAX,
            lyapunov: true,
            verbose: false,
            map_id: map_id.into(),
        }
    }

    pub fn eps_num(&self) -> f64 {
        self.eps_num.unwrap_or(match self.mode {
            NormKind::L1 => DEFAULT_EPS_NUM_L1,
            NormKind::Linf => DEFAULT_EPS_NUM_LINF,
        })
    }

    pub fn nu(&self) -> f64 {
        self.nu.unwrap_or(1e-6 / self.k as f64)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.k < MIN_K {
            return Err(PipelineError::Config(format!("k must be at least {MIN_K}, got {}", self.k)));
        }
        if self.k > u32::MAX as usize {
            return Err(PipelineError::Config(format!("k = {} is too large", self.k)));
        }
        let nu = self.nu();
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(PipelineError::Config(format!("nu must be positive, got {nu}")));
        }
        let e = self.eps_num();
        if !(e > 0.0) || !e.is_finite() {
            return Err(PipelineError::Config(format!("eps_num must be positive, got {e}")));
        }
        if self.j_max == 0 {
            return Err(PipelineError::Config("j_max must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Expansion(MapError),
    #[error(transparent)]
    NonContraction(EnclosureError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Hat(#[from] HatError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Certify(#[from] CertifyError),
}

impl PipelineError {
    /// 1 configuration, 2 expansion check, 3 no observed contraction.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Expansion(_) => 2,
            PipelineError::Certify(CertifyError::ExpansionTooWeak(_) | CertifyError::AlphaTooLarge(_)) => 2,
            PipelineError::NonContraction(EnclosureError::NoContraction(_)) => 3,
            _ => 1,
        }
    }
}

impl From<EnclosureError> for PipelineError {
    fn from(e: EnclosureError) -> Self {
        match e {
            EnclosureError::NoContraction(_) => PipelineError::NonContraction(e),
            other => PipelineError::Config(other.to_string()),
        }
    }
}

/// Lasota–Yorke data of the run.
#[derive(Clone, Debug, PartialEq)]
pub enum LyData<F> {
    Bv(LyCoefficientsBv<F>),
    Lip { coeffs: LyCoefficientsLip<F>, lin_err: F },
}

#[derive(Clone, Debug)]
pub struct RunResult<F> {
    pub certificate: Certificate,
    pub ly: LyData<F>,
    pub matrix: TransitionMatrix<F>,
    pub contraction: ContractionCertificate<F>,
    pub density: EnclosedDensity<F>,
    pub lyapunov: Option<LyapunovResult>,
}

enum Disc<F> {
    Ulam(TransitionMatrix<F>),
    Hat(LinfMatrix<F>),
}

impl<F> Disc<F> {
    fn matrix(&self) -> &TransitionMatrix<F> {
        match self {
            Disc::Ulam(m) => m,
            Disc::Hat(lm) => &lm.matrix,
        }
    }
}

fn expansion(e: MapError) -> PipelineError {
    match e {
        MapError::ExpansionTooWeak { .. } | MapError::NoContractingPower | MapError::DerivativeTouchesZero(_) => PipelineError::Expansion(e),
        other => PipelineError::Config(other.to_string()),
    }
}

fn stage(verbose: bool, name: &str, t0: Instant) {
    if verbose {
        eprintln!("{name}: {:.3}s", t0.elapsed().as_secs_f64());
    }
}

pub fn run_pipeline<F: Scalar>(map: &PiecewiseMap<F>, cfg: &PipelineConfig) -> Result<RunResult<F>, PipelineError> {
    cfg.validate()?;
    let eps_num = cfg.eps_num();
    let t0 = Instant::now();
    let (ly, disc, inflation, nu) = match cfg.mode {
        NormKind::L1 => {
            let ly = ly_coefficients_bv(map).map_err(expansion)?;
            stage(cfg.verbose, "lasota-yorke", t0);
            let nu = cfg.nu();
            let raw = assemble_ulam(map, cfg.k, &AssemblyConfig::new(nu))?;
            let m = markovize(&raw)?;
            nnz_bound(&m, map.sup_abs_derivative().hi)?;
            stage(cfg.verbose, "assembly", t0);
            // |P^j - Pi^j| grows by at most 2 NNZ eps per step
            let infl = mul_up(mul_up(F::lit(2.0), F::from_usize(m.nnz_max).unwrap()), m.eps);
            (LyData::Bv(ly), Disc::Ulam(m), infl, Some(nu))
        }
        NormKind::Linf => {
            if !map.is_circle() {
                return Err(PipelineError::Config("the linf mode needs a circle map (add the `circle` directive)".into()));
            }
            let ly = ly_coefficients_lip(map).map_err(expansion)?;
            stage(cfg.verbose, "lasota-yorke", t0);
            let lm = assemble_linearized(map, cfg.k)?;
            stage(cfg.verbose, "assembly", t0);
            let msq = mul_up(ly.m_sup.hi, ly.m_sup.hi);
            let infl = mul_up(mul_up(F::lit(2.0), msq), add_up(lm.matrix.eps, lm.lin_err));
            (LyData::Lip { coeffs: ly, lin_err: lm.lin_err }, Disc::Hat(lm), infl, None)
        }
    };
    let mut sweep = SweepConfig::new(F::lit(eps_num), inflation);
    sweep.j_max = cfg.j_max;
    sweep.verbose = cfg.verbose;
    let (contraction, density) = contraction_sweep(disc.matrix(), &sweep)?;
    stage(cfg.verbose, "enclosure", t0);
    let run = RunInfo { map_id: cfg.map_id.clone(), nu, eps_num };
    let mut certificate = match (&ly, &disc) {
        (LyData::Bv(c), Disc::Ulam(m)) => certify_l1(c, m, &contraction, &density, &run)?,
        (LyData::Lip { coeffs, .. }, Disc::Hat(lm)) => certify_linf(coeffs, lm, &contraction, &density, &run)?,
        _ => unreachable!("coefficients and discretization come from the same mode"),
    };
    let lyap = if cfg.lyapunov {
        let r = lyapunov(map, &density, certificate.eps_rig)?;
        certificate.lyap = Some(r.interval());
        stage(cfg.verbose, "lyapunov", t0);
        Some(r)
    } else {
        None
    };
    let matrix = match disc {
        Disc::Ulam(m) => m,
        Disc::Hat(lm) => lm.matrix,
    };
    Ok(RunResult { certificate, ly, matrix, contraction, density, lyapunov: lyap })
}
