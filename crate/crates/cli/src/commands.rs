//! Implementations of the four subcommands.

use crate::config::{self, Model, PiSpec, RunConfig};
use crate::io;
use crate::summary::{build_summary, cost_histogram, SummaryInputs};
use crate::{CalibrateArgs, FurnessArgs, SampleArgs, SummarizeArgs};
use anyhow::{bail, Context, Result};
use od_core::analysis::{map_estimate, regional_cost, weighted_cost};
use od_core::sampler::{AcceptanceStats, AuxDraws, ChainConfig, ChainOutput};
use od_core::{
    calibrate_beta, furness_balance, gravity_proportions, mean_proportion_cost, CostBins,
    CostMatrix, DirichletParams, Error as OdError, MarginData, ProportionMatrix, TripMatrix,
};
use serde::Serialize;
use serde_json::json;
use std::path::Path;

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn furness(args: FurnessArgs) -> Result<()> {
    let margins = io::read_margins(&args.margins)?;
    let costs = args.costs.as_deref().map(io::read_costs).transpose()?;
    let proportions = match (&args.proportions, &costs, args.beta) {
        (Some(path), _, _) => io::read_proportions(path)?,
        (None, Some(costs), Some(beta)) => gravity_proportions(costs, beta),
        _ => bail!("need --proportions, or --costs together with --beta"),
    };
    let balanced = furness_balance(&margins, &proportions, args.tol, args.max_iter)?;
    std::fs::create_dir_all(&args.out)?;
    io::write_real_grid(&args.out.join("furness.csv"), margins.n(), balanced.cells())?;

    let mut factors = String::from("zone,row_factor,col_factor\n");
    for i in 0..margins.n() {
        factors.push_str(&format!(
            "{},{},{}\n",
            i + 1,
            balanced.row_factors()[i],
            balanced.col_factors()[i]
        ));
    }
    std::fs::write(args.out.join("factors.csv"), factors)?;

    let regional = costs
        .as_ref()
        .map(|c| weighted_cost(balanced.cells().iter().copied(), c) / margins.total() as f64);
    write_json(
        &args.out.join("run.json"),
        &json!({
            "command": "furness",
            "iterations": balanced.iterations,
            "residual": balanced.residual,
            "regional_cost": regional,
            "tol": args.tol,
            "max_iter": args.max_iter,
        }),
    )?;
    println!(
        "balanced in {} iterations, residual {:e}",
        balanced.iterations, balanced.residual
    );
    Ok(())
}

pub fn calibrate(args: CalibrateArgs) -> Result<()> {
    let costs = io::read_costs(&args.costs)?;
    let beta = calibrate_beta(&costs, args.target_cost, args.tol)?;
    let achieved = mean_proportion_cost(&gravity_proportions(&costs, beta), &costs);
    std::fs::create_dir_all(&args.out)?;
    write_json(
        &args.out.join("run.json"),
        &json!({
            "command": "calibrate",
            "beta": beta,
            "achieved_cost": achieved,
            "target_cost": args.target_cost,
            "tol": args.tol,
        }),
    )?;
    println!("beta = {beta}");
    println!("achieved mean cost = {achieved}");
    Ok(())
}

/// Model inputs resolved from paths into memory.
struct Inputs {
    margins: MarginData,
    costs: Option<CostMatrix>,
    bins: Option<CostBins>,
    proportions: Option<ProportionMatrix>,
    seed: Option<TripMatrix>,
    tld_counts: Option<Vec<u64>>,
    pi_cells: Option<DirichletParams>,
    pi_bins: Option<DirichletParams>,
}

fn load_inputs(cfg: &RunConfig) -> Result<Inputs> {
    let margins = io::read_margins(&cfg.margins)?;
    let n = margins.n();
    let costs = cfg.costs.as_deref().map(io::read_costs).transpose()?;

    let (tld_edges, tld_counts) = match &cfg.tld {
        Some(path) => {
            let (edges, counts) = io::read_tld(path)?;
            (Some(edges), Some(counts))
        }
        None => (None, None),
    };
    let bins = io::resolve_bins(cfg.bins.as_deref(), tld_edges.as_deref())?;

    let proportions = match (&cfg.proportions, &costs, cfg.beta) {
        (Some(path), _, _) => Some(io::read_proportions(path)?),
        (None, Some(c), Some(beta)) => Some(gravity_proportions(c, beta)),
        _ => None,
    };
    let seed = cfg.seed_matrix.as_deref().map(io::read_trips).transpose()?;

    let pi_of = |len: usize| -> Result<DirichletParams> {
        Ok(match &cfg.pi {
            PiSpec::Scalar(v) => DirichletParams::flat(len, *v)?,
            PiSpec::Path(path) => {
                let values = io::read_flat(path)?;
                if values.len() != len {
                    bail!(
                        "pi file {} has {} values, expected {len}",
                        path.display(),
                        values.len()
                    );
                }
                DirichletParams::new(values)?
            }
        })
    };
    let pi_cells = match cfg.model {
        Model::DirichletSeed => Some(pi_of(n * n)?),
        _ => None,
    };
    let pi_bins = match (&cfg.model, &bins) {
        (Model::BetaTld, Some(b)) => Some(pi_of(b.count())?),
        _ => None,
    };

    Ok(Inputs {
        margins,
        costs,
        bins,
        proportions,
        seed,
        tld_counts,
        pi_cells,
        pi_bins,
    })
}

fn run_one_chain(cfg: &RunConfig, inputs: &Inputs, seed: u64) -> Result<ChainOutput> {
    let chain_cfg = ChainConfig {
        burn_in: cfg
            .burnin
            .unwrap_or_else(|| 10 * inputs.margins.n() * inputs.margins.n()),
        samples: cfg.samples,
        thin: cfg.thin,
        rng_seed: seed,
        sigma2: cfg.sigma2,
    };
    let out = match cfg.model {
        Model::FixedP => {
            let p = inputs.proportions.as_ref().expect("validated by resolve()");
            od_core::run_fixed_p_chain(&inputs.margins, p, None, &chain_cfg)?
        }
        Model::DirichletSeed => od_core::run_seed_chain(
            &inputs.margins,
            inputs.seed.as_ref(),
            inputs.pi_cells.as_ref().expect("validated by resolve()"),
            &chain_cfg,
        )?,
        Model::BetaTld => od_core::run_beta_tld_chain(
            &inputs.margins,
            inputs.costs.as_ref().expect("validated by resolve()"),
            inputs.bins.as_ref().expect("validated by resolve()"),
            inputs.tld_counts.as_deref(),
            inputs.pi_bins.as_ref().expect("validated by resolve()"),
            &chain_cfg,
        )?,
    };
    Ok(out)
}

/// Writes the per-run artifacts for one chain output into `dir`.
fn write_chain_outputs(
    dir: &Path,
    cfg: &RunConfig,
    inputs: &Inputs,
    out: &ChainOutput,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let n = out.n();
    let summary = build_summary(
        out,
        cfg.gamma,
        &SummaryInputs {
            costs: inputs.costs.as_ref(),
            bins: inputs.bins.as_ref(),
            reference_p: inputs.proportions.as_ref(),
            cost_thresholds: &cfg.cost_thresholds,
        },
    )?;
    write_json(&dir.join("summary.json"), &summary)?;

    let mean_flat: Vec<f64> = summary.mean.iter().flatten().copied().collect();
    io::write_real_grid(&dir.join("mean.csv"), n, &mean_flat)?;
    let intervals_flat: Vec<(u64, u64)> = summary
        .intervals
        .iter()
        .flatten()
        .map(|&[a, b]| (a, b))
        .collect();
    io::write_intervals(&dir.join("intervals.csv"), n, &intervals_flat)?;

    if cfg.emit_draws {
        io::write_draws(&dir.join("draws.bin"), out)?;
    }

    if let Some(costs) = &inputs.costs {
        let per_draw: Vec<f64> = out
            .draws
            .iter()
            .map(|t| regional_cost(t, costs))
            .collect::<Result<_, _>>()?;
        let mut hist = String::from("lower,upper,count\n");
        for (lo, hi, count) in cost_histogram(&per_draw) {
            hist.push_str(&format!("{lo},{hi},{count}\n"));
        }
        std::fs::write(dir.join("cost_hist.csv"), hist)?;

        if let Some(tld_block) = &summary.tld {
            let mut tld_csv =
                String::from("lower,upper,mean_share,interval_lower,interval_upper\n");
            for (k, share) in tld_block.mean_shares.iter().enumerate() {
                tld_csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    tld_block.edges[k],
                    tld_block.edges[k + 1],
                    share,
                    tld_block.intervals[k][0],
                    tld_block.intervals[k][1],
                ));
            }
            std::fs::write(dir.join("tld.csv"), tld_csv)?;
        }
    }
    Ok(())
}

/// The MAP candidate block for run.json: rounded Furness at the model's
/// structural proportions (conditional on the posterior mean of the random
/// parameter for hierarchical models).
fn map_block(cfg: &RunConfig, inputs: &Inputs, out: &ChainOutput) -> Result<serde_json::Value> {
    let p = match cfg.model {
        Model::FixedP => inputs.proportions.clone(),
        Model::BetaTld => {
            let betas = out.aux.betas().expect("beta chain records betas");
            let beta_bar = betas.iter().sum::<f64>() / betas.len() as f64;
            inputs
                .costs
                .as_ref()
                .map(|c| gravity_proportions(c, beta_bar))
        }
        Model::DirichletSeed => {
            let props = out.aux.proportions().expect("seed chain records p");
            let n = out.n();
            let mut mean = vec![0.0f64; n * n];
            for p in props {
                for (m, v) in mean.iter_mut().zip(p.values()) {
                    *m += v;
                }
            }
            for m in &mut mean {
                *m /= props.len() as f64;
            }
            Some(ProportionMatrix::from_weights(n, &mean)?)
        }
    };
    let Some(p) = p else {
        return Ok(serde_json::Value::Null);
    };
    let table = map_estimate(&out.margins, &p)?;
    let share = od_core::analysis::event_probability(out, |t| *t == table);
    let cost = inputs
        .costs
        .as_ref()
        .and_then(|c| regional_cost(&table, c).ok());
    Ok(json!({
        "table": to_rows_u64(out.n(), table.cells()),
        "sampled_share": share,
        "regional_cost": cost,
    }))
}

fn to_rows_u64(n: usize, flat: &[u64]) -> Vec<Vec<u64>> {
    (0..n).map(|i| flat[i * n..(i + 1) * n].to_vec()).collect()
}

fn classify_sample_error(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<OdError>() {
        Some(OdError::Infeasible(_)) | Some(OdError::NonConvergence { .. }) => 3,
        _ => 2,
    }
}

pub fn sample(args: SampleArgs) -> std::result::Result<(), (u8, anyhow::Error)> {
    let cfg = config::resolve(&args).map_err(|e| (2, e))?;
    sample_resolved(&cfg).map_err(|e| (classify_sample_error(&e), e))
}

fn sample_resolved(cfg: &RunConfig) -> Result<()> {
    let started = std::time::Instant::now();
    let inputs = load_inputs(cfg)?;
    std::fs::create_dir_all(&cfg.out)?;

    let seeds: Vec<u64> = (0..cfg.chains as u64).map(|i| cfg.rng_seed + i).collect();
    let outputs: Vec<ChainOutput> = if cfg.chains == 1 {
        vec![run_one_chain(cfg, &inputs, cfg.rng_seed)?]
    } else {
        let inputs_ref = &inputs;
        std::thread::scope(|scope| {
            let handles: Vec<_> = seeds
                .iter()
                .map(|&seed| scope.spawn(move || run_one_chain(cfg, inputs_ref, seed)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("chain thread panicked"))
                .collect::<Result<Vec<_>>>()
        })?
    };

    if cfg.chains == 1 {
        write_chain_outputs(&cfg.out, cfg, &inputs, &outputs[0])?;
    } else {
        for (k, out) in outputs.iter().enumerate() {
            write_chain_outputs(&cfg.out.join(format!("chain-{k}")), cfg, &inputs, out)?;
        }
        let pooled = pool_chains(&outputs);
        write_chain_outputs(&cfg.out, cfg, &inputs, &pooled)?;
    }

    let acceptance: Vec<serde_json::Value> = outputs
        .iter()
        .map(|o| {
            json!({
                "cell_rate": o.acceptance.cell_rate(),
                "aux_rate": o.acceptance.aux_rate(),
            })
        })
        .collect();
    let map = map_block(cfg, &inputs, &outputs[0])?;
    write_json(
        &cfg.out.join("run.json"),
        &json!({
            "command": "sample",
            "model": cfg.model.name(),
            "chain": {
                "samples": cfg.samples,
                "burnin": cfg.burnin,
                "thin": cfg.thin,
                "rng_seed": cfg.rng_seed,
                "sigma2": cfg.sigma2,
                "chains": cfg.chains,
                "seeds": seeds,
            },
            "gamma": cfg.gamma,
            "acceptance": acceptance,
            "map_candidate": map,
            "elapsed_seconds": started.elapsed().as_secs_f64(),
        }),
    )?;
    Ok(())
}

/// Concatenates chains for the pooled summary. Per-cell ESS of a
/// concatenation would see the chain joins, so diagnostics in the pooled
/// summary come from the concatenated series anyway but per-chain files
/// carry the per-chain values.
fn pool_chains(outputs: &[ChainOutput]) -> ChainOutput {
    let mut pooled = outputs[0].clone();
    for out in &outputs[1..] {
        pooled.draws.extend(out.draws.iter().cloned());
        match (&mut pooled.aux, &out.aux) {
            (AuxDraws::Proportions(a), AuxDraws::Proportions(b)) => {
                a.extend(b.iter().cloned());
            }
            (AuxDraws::Betas(a), AuxDraws::Betas(b)) => a.extend(b.iter().copied()),
            _ => {}
        }
        pooled.acceptance = AcceptanceStats {
            cell_proposals: pooled.acceptance.cell_proposals + out.acceptance.cell_proposals,
            cell_accepts: pooled.acceptance.cell_accepts + out.acceptance.cell_accepts,
            aux_proposals: pooled.acceptance.aux_proposals + out.acceptance.aux_proposals,
            aux_accepts: pooled.acceptance.aux_accepts + out.acceptance.aux_accepts,
        };
    }
    pooled
}

pub fn summarize(args: SummarizeArgs) -> Result<()> {
    let stored = io::read_draws(&args.draws)?;
    let margins = stored.draws[0].margins();
    for (idx, draw) in stored.draws.iter().enumerate() {
        if !od_core::check_consistency(draw, &margins)? {
            bail!("draw {idx} does not match the margins of the first draw");
        }
    }
    let g = stored.draws.len();
    let out = ChainOutput {
        config: ChainConfig::new(margins.n(), g, 0),
        margins,
        draws: stored.draws,
        aux: stored.aux,
        acceptance: AcceptanceStats::default(),
    };

    let costs = args.costs.as_deref().map(io::read_costs).transpose()?;
    let bins = match &args.bins {
        Some(raw) => Some(CostBins::new(config::parse_bin_edges(raw)?)?),
        None => None,
    };
    let reference_p = match (&args.proportions, &costs, args.beta) {
        (Some(path), _, _) => Some(io::read_proportions(path)?),
        (None, Some(c), Some(beta)) => Some(gravity_proportions(c, beta)),
        _ => None,
    };

    let summary = build_summary(
        &out,
        args.gamma,
        &SummaryInputs {
            costs: costs.as_ref(),
            bins: bins.as_ref(),
            reference_p: reference_p.as_ref(),
            cost_thresholds: &args.cost_threshold,
        },
    )?;
    std::fs::create_dir_all(&args.out)?;
    write_json(&args.out.join("summary.json"), &summary)?;
    let mean_flat: Vec<f64> = summary.mean.iter().flatten().copied().collect();
    io::write_real_grid(&args.out.join("mean.csv"), summary.n, &mean_flat)?;
    let intervals_flat: Vec<(u64, u64)> = summary
        .intervals
        .iter()
        .flatten()
        .map(|&[a, b]| (a, b))
        .collect();
    io::write_intervals(&args.out.join("intervals.csv"), summary.n, &intervals_flat)?;
    Ok(())
}
