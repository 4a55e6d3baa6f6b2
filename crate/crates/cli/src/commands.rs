//! The subcommands. Each returns its artifacts plus the list of failed
//! assertions; numerical errors bubble up unchanged.

use acimresp::branch::check_assumption_a;
use acimresp::map::validate_markov;
use acimresp::oracles::{chebyshev_closed_form_checks, direct_kappa, finite_difference_response};
use acimresp::pade::pade;
use acimresp::susceptibility::{
    kappa_decomposition, kappa_raw_all, PhiPlus, RAW_ROUTE_MAX_N, ROUTE_CHECK_MAX_N, ROUTE_TOL,
};
use acimresp::transfer::{acim_density, lemma_checks, LemmaTolerances, TRUSTED_MODULUS, TRUSTED_RESIDUAL};
use acimresp::{Error, Pipeline};
use num_complex::Complex64;
use serde::Serialize;

use crate::config::LoadedConfig;
use crate::output::{json, num, Artifact, Table};

pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub failures: Vec<String>,
}

const QUADRATURE_MAX_N: usize = 6;
const QUADRATURE_TOL: f64 = 1e-8;

fn pipeline(cfg: &LoadedConfig) -> acimresp::Result<Pipeline> {
    let f = cfg.config.map.build()?;
    Pipeline::new(&f, cfg.config.conjugacy, cfg.config.n)
}

fn interior_points(k: usize) -> impl Iterator<Item = f64> {
    (0..k).map(move |i| -1.0 + 2.0 * (i + 1) as f64 / (k + 1) as f64)
}

pub fn acim(cfg: &LoadedConfig, plot: bool) -> acimresp::Result<Outcome> {
    let p = pipeline(cfg)?;
    let mut sigma = Table::new(&["i", "y", "sigma0"], &cfg.hash);
    for (i, (y, s)) in p.grid().nodes().iter().zip(p.sd.sigma0.as_slice()).enumerate() {
        sigma.row(vec![i.to_string(), num(*y), num(*s)]);
    }
    let rho_table = |k: usize| -> acimresp::Result<String> {
        let mut t = Table::new(&["x", "rho"], &cfg.hash);
        for x in interior_points(k) {
            t.row(vec![num(x), num(acim_density(&p.sd, p.conj, x)?)]);
        }
        Ok(t.to_csv())
    };
    let mut artifacts = vec![
        Artifact::new("sigma0.csv", sigma.to_csv()),
        Artifact::new("rho.csv", rho_table(99)?),
    ];
    if plot {
        artifacts.push(Artifact::new("plot_rho.csv", rho_table(999)?));
    }
    Ok(Outcome {
        artifacts,
        failures: Vec::new(),
    })
}

#[derive(Serialize)]
struct SpectrumSummary {
    n: usize,
    gap: f64,
    mu_minus: f64,
    mu_plus: f64,
    trusted: usize,
}

pub fn spectrum(cfg: &LoadedConfig) -> acimresp::Result<Outcome> {
    let p = pipeline(cfg)?;
    let mut t = Table::new(&["k", "re", "im", "modulus", "residual", "trusted"], &cfg.hash);
    let mut trusted = 0;
    for (k, (mu, res)) in p.sd.eigenvalues.iter().zip(&p.sd.residuals).enumerate() {
        let ok = *res < TRUSTED_RESIDUAL && mu.norm() > TRUSTED_MODULUS;
        trusted += ok as usize;
        t.row(vec![
            k.to_string(),
            num(mu.re),
            num(mu.im),
            num(mu.norm()),
            num(*res),
            ok.to_string(),
        ]);
    }
    let summary = SpectrumSummary {
        n: cfg.config.n,
        gap: p.sd.gap,
        mu_minus: p.map().mu_minus(),
        mu_plus: p.map().mu_plus(),
        trusted,
    };
    Ok(Outcome {
        artifacts: vec![
            Artifact::new("spectrum.csv", t.to_csv()),
            Artifact::new("spectrum.json", json(&summary)),
        ],
        failures: Vec::new(),
    })
}

pub fn kappa(cfg: &LoadedConfig) -> acimresp::Result<Outcome> {
    let p = pipeline(cfg)?;
    let x = cfg.field();
    let a = cfg.observable()?;
    let r = p.response(&x, &a)?;
    let kmax = cfg.config.kappa_max;
    let raw = kappa_raw_all(&p.tm, &r.rd, kmax.min(RAW_ROUTE_MAX_N))?;
    let mut t = Table::new(&["n", "decomposition", "raw", "quadrature"], &cfg.hash);
    let mut failures = Vec::new();
    for n in 0..=kmax {
        let dec = kappa_decomposition(&p.tm, &r.rd, n);
        let rw = raw.get(n).copied();
        let quad = (n <= QUADRATURE_MAX_N).then(|| direct_kappa(p.map(), p.conj, &p.sd, &x, &a, n));
        if let (Some(v), true) = (rw, n <= ROUTE_CHECK_MAX_N) {
            if (v - dec).abs() > ROUTE_TOL * (1.0 + dec.abs()) {
                failures.push(format!("route disagreement at n = {n}: {dec:e} vs raw {v:e}"));
            }
        }
        if let Some(q) = quad {
            if (q - dec).abs() > QUADRATURE_TOL * (1.0 + dec.abs()) {
                failures.push(format!("quadrature disagreement at n = {n}: {dec:e} vs {q:e}"));
            }
        }
        let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
        t.row(vec![n.to_string(), num(dec), opt(rw), opt(quad)]);
    }
    Ok(Outcome {
        artifacts: vec![Artifact::new("kappa.csv", t.to_csv())],
        failures,
    })
}

#[derive(Serialize)]
struct PsiSummary {
    odd: bool,
    mu_minus: f64,
    mu_plus: f64,
    poles: Vec<f64>,
    c_minus: f64,
    c_plus: f64,
    c_tilde: f64,
    i_minus: f64,
    i_plus: f64,
    i_tilde: f64,
}

fn psi_row(r: &acimresp::Response<'_>, lam: f64) -> Vec<String> {
    match r.psi(Complex64::new(lam, 0.0)) {
        Ok(v) => vec![num(lam), num(v.re), num(v.im), "ok".into(), String::new()],
        Err(Error::PoleHit { multiplier, .. }) => {
            vec![num(lam), String::new(), String::new(), "pole".into(), num(multiplier)]
        }
        Err(Error::NoDecay { .. }) => vec![num(lam), String::new(), String::new(), "no_decay".into(), String::new()],
        Err(e) => vec![num(lam), String::new(), String::new(), format!("error: {e}"), String::new()],
    }
}

pub fn psi(cfg: &LoadedConfig, plot: bool) -> acimresp::Result<Outcome> {
    let p = pipeline(cfg)?;
    let r = p.response(&cfg.field(), &cfg.observable()?)?;
    let cols = ["lambda", "psi_re", "psi_im", "status", "pole_multiplier"];
    let mut t = Table::new(&cols, &cfg.hash);
    for &lam in &cfg.config.lambdas {
        t.row(psi_row(&r, lam));
    }
    let rd = &r.rd;
    let mut poles = vec![1.0 / rd.mu_minus];
    if rd.odd {
        poles.push(1.0 / rd.mu_plus);
    }
    let summary = PsiSummary {
        odd: rd.odd,
        mu_minus: rd.mu_minus,
        mu_plus: rd.mu_plus,
        poles,
        c_minus: rd.c_minus,
        c_plus: rd.c_plus,
        c_tilde: rd.c_tilde,
        i_minus: rd.i_minus,
        i_plus: rd.i_plus,
        i_tilde: rd.i_tilde,
    };
    let mut artifacts = vec![
        Artifact::new("psi.csv", t.to_csv()),
        Artifact::new("psi.json", json(&summary)),
    ];
    if plot {
        let mut t = Table::new(&cols, &cfg.hash);
        for k in 0..=250 {
            t.row(psi_row(&r, -1.0 + 0.01 * k as f64));
        }
        artifacts.push(Artifact::new("plot_psi.csv", t.to_csv()));
    }
    Ok(Outcome {
        artifacts,
        failures: Vec::new(),
    })
}

#[derive(Serialize)]
struct Oracle {
    h: f64,
    central: f64,
    richardson: f64,
    step_ratio: f64,
    difference: f64,
    tolerance: f64,
}

#[derive(Serialize)]
struct RespondReport {
    psi_at_one: f64,
    oracle: Option<Oracle>,
}

pub fn respond(cfg: &LoadedConfig) -> acimresp::Result<Outcome> {
    let p = pipeline(cfg)?;
    let x = cfg.field();
    let a = cfg.observable()?;
    let psi1 = p.response(&x, &a)?.psi_at_one()?;
    let mut failures = Vec::new();
    let oracle = if x.vanishes_at_endpoints() {
        let h = cfg.config.h;
        let fd = finite_difference_response(p.map(), &x, &a, h, p.conj, cfg.config.n)?;
        let tolerance = (10.0 * h * h).max(1e-6);
        let difference = (psi1 - fd.richardson_value).abs();
        if difference > tolerance {
            failures.push(format!("oracle disagreement {difference:e} > {tolerance:e}"));
        }
        if !(3.0..=5.0).contains(&fd.step_ratio) {
            failures.push(format!("step-halving ratio {} outside [3, 5]", fd.step_ratio));
        }
        Some(Oracle {
            h,
            central: fd.value,
            richardson: fd.richardson_value,
            step_ratio: fd.step_ratio,
            difference,
            tolerance,
        })
    } else {
        None
    };
    let report = RespondReport {
        psi_at_one: psi1,
        oracle,
    };
    Ok(Outcome {
        artifacts: vec![Artifact::new("respond.json", json(&report))],
        failures,
    })
}

#[derive(Serialize)]
struct PadeSummary {
    l: usize,
    m: usize,
    condition: f64,
    coefficients: Vec<f64>,
    numerator: Vec<f64>,
    denominator: Vec<f64>,
}

pub fn pade_cmd(cfg: &LoadedConfig) -> acimresp::Result<Outcome> {
    let p = pipeline(cfg)?;
    let r = p.response(&cfg.field(), &cfg.observable()?)?;
    let (l, m) = (cfg.config.pade.l, cfg.config.pade.m);
    let coefficients: Vec<f64> = (0..=l + m).map(|n| kappa_decomposition(&p.tm, &r.rd, n)).collect();
    let approx = pade(&coefficients, l, m)?;
    let mut t = Table::new(&["k", "pole_re", "pole_im", "modulus", "residue_re", "residue_im"], &cfg.hash);
    for (k, (z, res)) in approx.poles.iter().zip(&approx.residues).enumerate() {
        t.row(vec![
            k.to_string(),
            num(z.re),
            num(z.im),
            num(z.norm()),
            num(res.re),
            num(res.im),
        ]);
    }
    let summary = PadeSummary {
        l,
        m,
        condition: approx.condition,
        coefficients,
        numerator: approx.numerator.clone(),
        denominator: approx.denominator.clone(),
    };
    Ok(Outcome {
        artifacts: vec![
            Artifact::new("pade.csv", t.to_csv()),
            Artifact::new("pade.json", json(&summary)),
        ],
        failures: Vec::new(),
    })
}

#[derive(Serialize)]
struct ConstructionSummary {
    phi_minus_residual: f64,
    phi_plus_residual: Option<f64>,
    ytilde_endpoint: Option<f64>,
    identity_residual: Option<f64>,
}

#[derive(Serialize)]
struct CheckReport<'a> {
    config_hash: &'a str,
    markov: acimresp::map::ValidationReport,
    lemmas: acimresp::transfer::LemmaReport,
    construction: ConstructionSummary,
    /// Reported only; not part of the pass/fail decision.
    domain: Option<acimresp::branch::DomainReport>,
    closed_form: Option<acimresp::oracles::ClosedFormReport>,
    failures: &'a [String],
    pass: bool,
}

pub fn check(cfg: &LoadedConfig) -> acimresp::Result<Outcome> {
    let p = pipeline(cfg)?;
    let mut failures = Vec::new();
    let markov = validate_markov(p.map());
    failures.extend(markov.failures.iter().map(|f| format!("markov: {f}")));
    let lemmas = lemma_checks(&p.tm, &p.sd);
    failures.extend(lemmas.failures(&LemmaTolerances::default()));
    let construction = match p.construction() {
        Ok(c) => {
            let (phi_plus_residual, ytilde_endpoint, identity_residual) = match &c.plus {
                PhiPlus::Odd(e) => (Some(e.eigen_residual), None, None),
                PhiPlus::Even {
                    ytilde_endpoint,
                    identity_residual,
                    ..
                } => (None, Some(*ytilde_endpoint), Some(*identity_residual)),
            };
            ConstructionSummary {
                phi_minus_residual: c.minus.eigen_residual,
                phi_plus_residual,
                ytilde_endpoint,
                identity_residual,
            }
        }
        Err(e) => {
            failures.push(format!("endpoint construction: {e}"));
            ConstructionSummary {
                phi_minus_residual: f64::NAN,
                phi_plus_residual: None,
                ytilde_endpoint: None,
                identity_residual: None,
            }
        }
    };
    let domain = check_assumption_a(&p.bs, cfg.config.domain.r, cfg.config.domain.samples).ok();
    let closed_form = match (cfg.config.map.chebyshev_order(), p.conj) {
        (Some(m @ 2..=3), acimresp::conjugacy::Conjugacy::Sine) => {
            let r = chebyshev_closed_form_checks(m, cfg.config.n)?;
            failures.extend(r.failures.iter().map(|f| format!("closed form: {f}")));
            Some(r)
        }
        _ => None,
    };
    let report = CheckReport {
        config_hash: &cfg.hash,
        markov,
        lemmas,
        construction,
        domain,
        closed_form,
        pass: failures.is_empty(),
        failures: &failures,
    };
    Ok(Outcome {
        artifacts: vec![Artifact::new("check.json", json(&report))],
        failures,
    })
}
