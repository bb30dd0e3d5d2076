//! One runner per subcommand; each produces a `RunOutcome` with the report
//! body, CSV rows, and the violation flag that drives the exit code.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use pnormlab_core::blockineq::{p_sweep, proof_chain_thm2, theorem2_check, BlockSampler};
use pnormlab_core::channels::{diagonal_form, nu_p_qubit, random_cp, rotation_from_unitary};
use pnormlab_core::experiments::{
    lemma1_chain, lemma1_chain_quadratic, map_output_block_sampler, multiplicativity_gap,
    random_density, random_special_form, transpose_demo, wh_crossing, CheckMode, Verdict,
};
use pnormlab_core::extremes::decompose_into_extremes;
use pnormlab_core::matcore::{Block2x2, NormOrder};
use pnormlab_core::pnorm::{nu_p_estimate, product_lower_bound, OptimizerConfig};

use crate::mapspec::{parse_map, MapInput};
use crate::report::RunOutcome;

/// Input errors exit with code 2.
#[derive(Debug)]
pub struct InputError(pub String);

type CmdResult = Result<RunOutcome, InputError>;

pub fn parse_order(s: &str) -> Result<NormOrder, InputError> {
    s.parse::<NormOrder>()
        .map_err(|e| InputError(format!("bad norm order '{s}': {e}")))
}

pub fn parse_order_list(s: &str) -> Result<Vec<NormOrder>, InputError> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(parse_order)
        .collect()
}

fn optimizer(seed: u64, restarts: usize) -> OptimizerConfig {
    OptimizerConfig {
        restarts,
        ..OptimizerConfig::with_seed(seed)
    }
}

fn get_map(spec: &str) -> Result<MapInput, InputError> {
    parse_map(spec).map_err(InputError)
}

pub fn run_nu_p(map_spec: &str, p_str: &str, restarts: usize, seed: u64) -> CmdResult {
    let p = parse_order(p_str)?;
    let input = get_map(map_spec)?;
    // a trace-preserving positivity-preserving qubit map has a closed form
    let closed = input.to_affine().ok().and_then(|aff| {
        nu_p_qubit(&aff, p)
            .ok()
            .map(|(value, state)| (aff, value, state))
    });
    match closed {
        Some((aff, value, _state)) => {
            let (radius, argmax) = aff.image_radius();
            let results = json!({
                "map": map_spec,
                "p": p,
                "method": "closed-form",
                "value": value,
                "image_radius": radius,
                "argmax_bloch": argmax.0,
            });
            Ok(RunOutcome {
                summary: vec![
                    format!("nu_p = {value:.6}  (closed form, image radius {radius:.6})"),
                    format!(
                        "argmax Bloch vector: ({:.6}, {:.6}, {:.6})",
                        argmax.0[0], argmax.0[1], argmax.0[2]
                    ),
                ],
                results,
                violations: vec![],
                csv_header: "p,method,value,bloch_x,bloch_y,bloch_z",
                csv_rows: vec![format!(
                    "{p},closed-form,{value},{},{},{}",
                    argmax.0[0], argmax.0[1], argmax.0[2]
                )],
                violation_flag: false,
            })
        }
        None => {
            let m = input.to_quantum();
            let cfg = optimizer(seed, restarts);
            let est = nu_p_estimate(&m, p, &cfg)
                .map_err(|e| InputError(format!("estimate failed: {e}")))?;
            let amps: Vec<[f64; 2]> = est
                .argmax
                .amplitudes()
                .iter()
                .map(|z| [z.re, z.im])
                .collect();
            let results = json!({
                "map": map_spec,
                "p": p,
                "method": "estimate",
                "value": est.value,
                "restarts": restarts,
                "restarts_agreeing": est.restarts_agreeing,
                "restarts_dropped": est.restarts_dropped,
                "argmax_state": amps,
            });
            Ok(RunOutcome {
                summary: vec![format!(
                    "nu_p >= {:.9}  (multi-start estimate, {}/{} restarts agree)",
                    est.value, est.restarts_agreeing, restarts
                )],
                results,
                violations: vec![],
                csv_header: "p,method,value,restarts_agreeing",
                csv_rows: vec![format!("{p},estimate,{},{}", est.value, est.restarts_agreeing)],
                violation_flag: false,
            })
        }
    }
}

pub fn run_tensor_nu_p(
    spec1: &str,
    spec2: &str,
    p_str: &str,
    restarts: usize,
    seed: u64,
) -> CmdResult {
    let p = parse_order(p_str)?;
    let m1 = get_map(spec1)?.to_quantum();
    let m2 = get_map(spec2)?.to_quantum();
    let cfg = optimizer(seed, restarts);
    let (product, _) = product_lower_bound(&m1, &m2, p, &cfg)
        .map_err(|e| InputError(format!("estimate failed: {e}")))?;
    let tensor = m1.tensor(&m2);
    let tensor_cfg = optimizer(seed, restarts * 2);
    let est = nu_p_estimate(&tensor, p, &tensor_cfg)
        .map_err(|e| InputError(format!("estimate failed: {e}")))?;
    let ratio = est.value / product;
    let results = json!({
        "map1": spec1,
        "map2": spec2,
        "p": p,
        "tensor_estimate": est.value,
        "product_lower_bound": product,
        "ratio": ratio,
        "restarts_agreeing": est.restarts_agreeing,
    });
    Ok(RunOutcome {
        summary: vec![format!(
            "tensor nu_p >= {:.9}, product bound {:.9}, ratio {:.9}",
            est.value, product, ratio
        )],
        results,
        violations: vec![],
        csv_header: "p,tensor_estimate,product_lower_bound,ratio",
        csv_rows: vec![format!("{p},{},{product},{ratio}", est.value)],
        violation_flag: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SamplerKind {
    Gaussian,
    Psd,
    MapOutput,
}

fn sample_block(kind: SamplerKind, rng: &mut ChaCha8Rng, dim: usize) -> Block2x2 {
    match kind {
        SamplerKind::Gaussian => BlockSampler::Gaussian.sample(rng, dim),
        SamplerKind::Psd => BlockSampler::PsdGram.sample(rng, dim),
        SamplerKind::MapOutput => map_output_block_sampler(dim)(rng),
    }
}

#[allow(clippy::too_many_arguments)]
pub fn run_check_thm2(
    p_str: &str,
    trials: u64,
    dim_min: usize,
    dim_max: usize,
    sampler: SamplerKind,
    tol: f64,
    chain: bool,
    seed: u64,
) -> CmdResult {
    let p = parse_order(p_str)?;
    let assertable = match p {
        NormOrder::Infinity => true,
        NormOrder::Finite(v) => v == 2.0 || v >= 4.0,
    };
    if !assertable {
        return Err(InputError(format!(
            "check-thm2 asserts only at p = 2 or p >= 4 (got {p}); use sweep-thm2 elsewhere"
        )));
    }
    if dim_min == 0 || dim_max < dim_min {
        return Err(InputError("need 1 <= dim-min <= dim-max".into()));
    }
    let equality_mode = matches!(p, NormOrder::Finite(v) if v == 2.0);
    let mut violations = Vec::new();
    let mut csv_rows = Vec::new();
    let mut min_slack = f64::INFINITY;
    let mut max_abs_slack: f64 = 0.0;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial + 1);
        let dim = dim_min + (trial as usize % (dim_max - dim_min + 1));
        let blocks = sample_block(sampler, &mut rng, dim);
        let rep = theorem2_check(&blocks, p, tol)
            .map_err(|e| InputError(format!("check failed: {e}")))?;
        min_slack = min_slack.min(rep.slack);
        max_abs_slack = max_abs_slack.max(rep.slack.abs());
        let violated = if equality_mode {
            rep.slack.abs() > 1e-10
        } else {
            rep.slack < -tol
        };
        if violated {
            violations.push(json!({
                "trial": trial,
                "dim": dim,
                "p": p,
                "lhs": rep.lhs,
                "rhs": rep.rhs,
                "slack": rep.slack,
                "blocks": blocks,
            }));
        }
        if chain && !p.is_infinite() {
            if let NormOrder::Finite(v) = p {
                if v >= 4.0 {
                    for (i, step) in proof_chain_thm2(&blocks, p)
                        .map_err(|e| InputError(e.to_string()))?
                        .iter()
                        .enumerate()
                    {
                        csv_rows.push(format!(
                            "{trial},{dim},{p},{i},{},{},{},{}",
                            step.label, step.lhs, step.rhs, step.slack
                        ));
                    }
                }
            }
        } else {
            csv_rows.push(format!(
                "{trial},{dim},{p},,{},{},{},{}",
                "assembled", rep.lhs, rep.rhs, rep.slack
            ));
        }
    }
    let pass = violations.is_empty();
    let results = json!({
        "p": p,
        "trials": trials,
        "sampler": format!("{sampler:?}"),
        "equality_mode": equality_mode,
        "min_slack": min_slack,
        "max_abs_slack": max_abs_slack,
        "violations": violations.len(),
    });
    Ok(RunOutcome {
        summary: vec![format!(
            "{}/{} trials consistent at p = {p} ({}), min slack {:.3e}",
            trials - violations.len() as u64,
            trials,
            if equality_mode {
                "equality within 1e-10"
            } else {
                "inequality within tolerance"
            },
            min_slack
        )],
        results,
        violation_flag: !pass,
        violations,
        csv_header: "trial,dim,p,step,label,lhs,rhs,slack",
        csv_rows,
    })
}

pub fn run_sweep_thm2(
    grid_str: &str,
    trials: u64,
    dim_min: usize,
    dim_max: usize,
    sampler: SamplerKind,
    seed: u64,
) -> CmdResult {
    let grid = parse_order_list(grid_str)?;
    if grid.is_empty() {
        return Err(InputError("empty p grid".into()));
    }
    if dim_min == 0 || dim_max < dim_min {
        return Err(InputError("need 1 <= dim-min <= dim-max".into()));
    }
    let span = dim_max - dim_min + 1;
    let report = p_sweep(
        |rng| {
            let dim = dim_min + (rng.gen::<u32>() as usize % span);
            sample_block(sampler, rng, dim)
        },
        &grid,
        trials,
        seed,
    )
    .map_err(|e| InputError(e.to_string()))?;
    let mut csv_rows = Vec::new();
    let mut summary = Vec::new();
    for stat in &report.per_p {
        csv_rows.push(format!(
            "{},{},{},{},{},{}",
            stat.p,
            stat.trials,
            stat.direct_violations,
            stat.reverse_violations
                .map(|v| v.to_string())
                .unwrap_or_default(),
            stat.min_slack,
            stat.max_slack
        ));
        summary.push(format!(
            "p = {:>5}: direct violations {}, reverse {}, slack in [{:+.3e}, {:+.3e}]",
            stat.p.to_string(),
            stat.direct_violations,
            stat.reverse_violations
                .map(|v| v.to_string())
                .unwrap_or_else(|| "-".into()),
            stat.min_slack,
            stat.max_slack
        ));
    }
    Ok(RunOutcome {
        summary,
        results: serde_json::to_value(&report).expect("sweep report serializes"),
        violations: vec![], // sweeps are cartography, never assertions
        csv_header: "p,trials,direct_violations,reverse_violations,min_slack,max_slack",
        csv_rows,
        violation_flag: false,
    })
}

#[allow(clippy::too_many_arguments)]
pub fn run_multiplicativity(
    trials: u64,
    p_list_str: &str,
    dims_str: &str,
    restarts: usize,
    seed: u64,
    fixture_ratio: Option<f64>,
) -> CmdResult {
    let orders = parse_order_list(p_list_str)?;
    let dims: Vec<usize> = dims_str
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.parse::<usize>().map_err(|e| InputError(format!("bad dim: {e}"))))
        .collect::<Result<_, _>>()?;
    if orders.is_empty() || dims.is_empty() {
        return Err(InputError("need at least one p and one dimension".into()));
    }
    let mut rows = Vec::new();
    let mut csv_rows = Vec::new();
    let mut violations = Vec::new();
    for pair in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(pair + 1);
        let radius = 0.1 + 0.9 * rng.gen::<f64>();
        let phi = pnormlab_core::channels::random_pp_tp_qubit(radius, &mut rng)
            .map_err(|e| InputError(e.to_string()))?;
        let d = dims[pair as usize % dims.len()];
        let rank = 1 + (rng.gen::<u32>() % 4) as usize;
        let omega = random_cp(d, rank, &mut rng);
        let cfg = optimizer(seed ^ pair, restarts);
        for &p in &orders {
            let rep = multiplicativity_gap(&phi, &omega, p, &cfg, CheckMode::Assert)
                .map_err(|e| InputError(e.to_string()))?;
            csv_rows.push(format!(
                "{pair},{p},{},{},{},{},{},{}",
                rep.nu_phi,
                rep.nu_omega,
                rep.product,
                rep.tensor_estimate,
                rep.ratio,
                if rep.verdict == Verdict::Violation { "violation" } else { "consistent" }
            ));
            if rep.verdict == Verdict::Violation {
                violations.push(json!({
                    "pair": pair,
                    "p": p,
                    "ratio": rep.ratio,
                    "tensor_estimate": rep.tensor_estimate,
                    "product": rep.product,
                }));
            }
            rows.push(serde_json::to_value(&rep).expect("report serializes"));
        }
    }
    if let Some(ratio) = fixture_ratio {
        // injected fixture for exit-code testing
        if ratio > 1.0 + pnormlab_core::experiments::RATIO_TOL {
            violations.push(json!({
                "pair": "fixture",
                "ratio": ratio,
            }));
        }
        rows.push(json!({ "fixture_ratio": ratio }));
    }
    let pass = violations.is_empty();
    Ok(RunOutcome {
        summary: vec![format!(
            "{} comparisons, {} violations",
            rows.len(),
            violations.len()
        )],
        results: Value::Array(rows),
        violation_flag: !pass,
        violations,
        csv_header: "pair,p,nu_phi,nu_omega,product,tensor_estimate,ratio,verdict",
        csv_rows,
    })
}

pub fn run_lemma1_chain(
    trials: u64,
    p_list_str: &str,
    d: usize,
    restarts: usize,
    seed: u64,
) -> CmdResult {
    let orders = parse_order_list(p_list_str)?;
    for &p in &orders {
        let ok = match p {
            NormOrder::Infinity => true,
            NormOrder::Finite(v) => v == 2.0 || v >= 4.0,
        };
        if !ok {
            return Err(InputError(format!(
                "the chain is available at p = 2 (quadratic variant) and p >= 4; got {p}"
            )));
        }
    }
    let mut rows = Vec::new();
    let mut csv_rows = Vec::new();
    let mut violations = Vec::new();
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial + 1);
        let phi = random_special_form(&mut rng);
        let rank = 1 + (rng.gen::<u32>() % 3) as usize;
        let omega = random_cp(d, rank, &mut rng);
        let rho = random_density(&mut rng, 2 * d, trial % 3 == 0);
        let cfg = optimizer(seed ^ trial, restarts);
        for &p in &orders {
            let steps = if matches!(p, NormOrder::Finite(v) if v == 2.0) {
                lemma1_chain_quadratic(&phi, &omega, &rho, &cfg)
            } else {
                lemma1_chain(&phi, &omega, &rho, p, &cfg)
            }
            .map_err(|e| InputError(e.to_string()))?;
            for (i, step) in steps.iter().enumerate() {
                csv_rows.push(format!(
                    "{trial},{p},{i},{},{},{},{}",
                    step.label, step.lhs, step.rhs, step.slack
                ));
                if step.slack < -1e-9 {
                    violations.push(json!({
                        "trial": trial,
                        "p": p,
                        "step": step.label,
                        "slack": step.slack,
                    }));
                }
            }
            rows.push(json!({
                "trial": trial,
                "p": p,
                "steps": steps,
            }));
        }
    }
    let pass = violations.is_empty();
    Ok(RunOutcome {
        summary: vec![format!(
            "{} chains verified, {} step violations",
            rows.len(),
            violations.len()
        )],
        results: Value::Array(rows),
        violation_flag: !pass,
        violations,
        csv_header: "trial,p,step,label,lhs,rhs,slack",
        csv_rows,
    })
}

pub fn run_decompose(map_spec: &str, r: f64, tol: f64) -> CmdResult {
    let input = get_map(map_spec)?;
    let aff = input.to_affine().map_err(InputError)?;
    let decomposition = match decompose_into_extremes(&aff, r, tol) {
        Ok(d) => d,
        Err(pnormlab_core::Error::NotInRadiusClass { radius, r }) => {
            return Err(InputError(format!(
                "map has image radius {radius:.9} > r = {r}; not a member of C_r"
            )))
        }
        Err(pnormlab_core::Error::DecompositionBudget { residual, target }) => {
            // an honest failure: report it and exit with the violation code
            return Ok(RunOutcome {
                summary: vec![format!(
                    "decomposition budget exhausted: best residual {residual:.3e} > tol {target:.1e}"
                )],
                results: json!({
                    "map": map_spec,
                    "r": r,
                    "tol": tol,
                    "converged": false,
                    "best_residual": residual,
                }),
                violations: vec![json!({ "best_residual": residual })],
                csv_header: "atom,weight,kappa,delta,scale,boundary",
                csv_rows: vec![],
                violation_flag: true,
            });
        }
        Err(e) => return Err(InputError(e.to_string())),
    };
    let mut csv_rows = Vec::new();
    for (i, (atom, w)) in decomposition
        .atoms
        .iter()
        .zip(&decomposition.weights)
        .enumerate()
    {
        csv_rows.push(format!(
            "{i},{w},{},{},{},{}",
            atom.extreme.kappa,
            atom.extreme.delta,
            atom.scale,
            atom.is_boundary()
        ));
    }
    let results = json!({
        "map": map_spec,
        "r": r,
        "tol": tol,
        "converged": true,
        "residual": decomposition.residual,
        "atom_count": decomposition.atoms.len(),
        "decomposition": decomposition,
    });
    Ok(RunOutcome {
        summary: vec![format!(
            "decomposed into {} extreme atoms, residual {:.3e}",
            decomposition.atoms.len(),
            decomposition.residual
        )],
        results,
        violations: vec![],
        csv_header: "atom,weight,kappa,delta,scale,boundary",
        csv_rows,
        violation_flag: false,
    })
}

pub fn run_wh_crossing(d: usize, lo: f64, hi: f64, tol: f64) -> CmdResult {
    let crossing =
        wh_crossing(d, (lo, hi), tol).map_err(|e| InputError(e.to_string()))?;
    let results = serde_json::to_value(&crossing).expect("crossing serializes");
    Ok(RunOutcome {
        summary: vec![format!(
            "entangled witness overtakes the product bound at p_star = {:.4} (tol {tol})",
            crossing.p_star
        )],
        results,
        violations: vec![],
        csv_header: "d,p_star,tol",
        csv_rows: vec![format!("{d},{},{tol}", crossing.p_star)],
        violation_flag: false,
    })
}

pub fn run_transpose_demo(p_str: &str, restarts: usize, seed: u64) -> CmdResult {
    let p = parse_order(p_str)?;
    let cfg = optimizer(seed, restarts);
    let demo = transpose_demo(p, &cfg).map_err(|e| InputError(e.to_string()))?;
    let results = serde_json::to_value(&demo).expect("demo serializes");
    let verdict = if demo.ratio > 1.0 + 1e-6 {
        "multiplicativity violated"
    } else {
        "consistent with multiplicativity"
    };
    Ok(RunOutcome {
        summary: vec![format!(
            "ratio {:.9} (entangled witness norm {:.9}); {verdict}",
            demo.ratio, demo.exact
        )],
        results,
        violations: vec![],
        csv_header: "p,exact,tensor_estimate,product,ratio",
        csv_rows: vec![format!(
            "{p},{},{},{},{}",
            demo.exact, demo.tensor_estimate, demo.product, demo.ratio
        )],
        violation_flag: false,
    })
}

pub fn run_canonicalize(map_spec: &str) -> CmdResult {
    let input = get_map(map_spec)?;
    let aff = input.to_affine().map_err(InputError)?;
    let df = diagonal_form(&aff).map_err(|e| InputError(e.to_string()))?;
    let r_domain = rotation_from_unitary(&df.u_domain).expect("witness is 2x2");
    let r_range = rotation_from_unitary(&df.u_range).expect("witness is 2x2");
    let (radius, _) = aff.image_radius();
    let results = json!({
        "map": map_spec,
        "lambdas": df.lambdas,
        "v": df.v,
        "image_radius": radius,
        "u_domain": df.u_domain,
        "u_range": df.u_range,
        "rotation_domain": r_domain,
        "rotation_range": r_range,
    });
    Ok(RunOutcome {
        summary: vec![
            format!(
                "diagonal form: lambdas = ({:.6}, {:.6}, {:.6})",
                df.lambdas[0], df.lambdas[1], df.lambdas[2]
            ),
            format!("translation  = ({:.6}, {:.6}, {:.6})", df.v[0], df.v[1], df.v[2]),
            format!("image radius = {radius:.6}"),
        ],
        results,
        violations: vec![],
        csv_header: "lambda1,lambda2,lambda3,v1,v2,v3",
        csv_rows: vec![format!(
            "{},{},{},{},{},{}",
            df.lambdas[0], df.lambdas[1], df.lambdas[2], df.v[0], df.v[1], df.v[2]
        )],
        violation_flag: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_list_parsing() {
        let orders = parse_order_list("2,4,inf").unwrap();
        assert_eq!(orders.len(), 3);
        assert!(orders[2].is_infinite());
        assert!(parse_order_list("0.3").is_err());
    }

    #[test]
    fn nu_p_closed_form_for_depolarizing() {
        let out = run_nu_p("depolarizing:0.5", "4", 8, 0).unwrap();
        let value = out.results["value"].as_f64().unwrap();
        let h = pnormlab_core::channels::h_p(0.5, NormOrder::new(4.0).unwrap()).unwrap();
        assert!((value - h).abs() < 1e-9);
        assert_eq!(out.results["method"], "closed-form");
    }

    #[test]
    fn nu_p_estimate_for_werner_holevo() {
        let out = run_nu_p("wh:3", "4", 8, 1).unwrap();
        assert_eq!(out.results["method"], "estimate");
        let value = out.results["value"].as_f64().unwrap();
        assert!((value - 2f64.powf(-0.75)).abs() < 1e-6);
    }

    #[test]
    fn check_thm2_equality_and_assertion_modes() {
        let out = run_check_thm2("2", 50, 1, 4, SamplerKind::Gaussian, 1e-10, false, 7).unwrap();
        assert!(!out.violation_flag);
        let out = run_check_thm2("4", 50, 1, 4, SamplerKind::Psd, 1e-9, false, 7).unwrap();
        assert!(!out.violation_flag);
        assert!(run_check_thm2("3", 10, 1, 4, SamplerKind::Gaussian, 1e-9, false, 7).is_err());
    }

    #[test]
    fn fixture_ratio_raises_violation_flag() {
        let out = run_multiplicativity(0, "4", "2", 4, 0, Some(1.5)).unwrap();
        assert!(out.violation_flag);
        let out = run_multiplicativity(0, "4", "2", 4, 0, Some(1.0)).unwrap();
        assert!(!out.violation_flag);
    }

    #[test]
    fn decompose_rejects_maps_outside_the_class() {
        assert!(run_decompose("identity:2", 0.5, 1e-6).is_err());
    }

    #[test]
    fn canonicalize_transpose() {
        let out = run_canonicalize("transpose:2").unwrap();
        let lambdas = out.results["lambdas"].as_array().unwrap();
        assert!((lambdas[0].as_f64().unwrap() - 1.0).abs() < 1e-9);
        assert!((lambdas[2].as_f64().unwrap() + 1.0).abs() < 1e-9);
    }
}
