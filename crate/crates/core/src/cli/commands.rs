use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context};

use super::{open_output, Cli, Command, DataArgs, Emit};
use crate::domain::Dataset;
use crate::experiment::{self, SweepConfig};
use crate::ingest::{self, MinMaxScaler, SchemaConfig};
use crate::metrics::GroupPair;
use crate::persist::ModelDocument;
use crate::predictors::{PredictorKind, PredictorSet};
use crate::scm_sim::{self, SimSpec};

struct Prepared {
    train: Dataset,
    test: Dataset,
    scaler: MinMaxScaler,
    pairs: Vec<GroupPair>,
    config: Option<SchemaConfig>,
}

fn prepare(args: &DataArgs) -> anyhow::Result<Prepared> {
    match (&args.config, args.simulate) {
        (Some(path), _) => {
            let mut cfg = SchemaConfig::from_file(path)
                .with_context(|| format!("reading {}", path.display()))?;
            if let Some(data) = &args.data {
                cfg.path = Some(data.clone());
            }
            let data_path = cfg
                .path
                .clone()
                .context("config has no `path`; pass --data")?;
            let loaded = ingest::load_path(&cfg, &data_path)
                .with_context(|| format!("loading {}", data_path.display()))?;
            let pairs = cfg.group_pairs(loaded.dataset.schema())?;
            let (train, test, scaler) = ingest::prepare(loaded, args.train_fraction, args.seed)?;
            Ok(Prepared {
                train,
                test,
                scaler,
                pairs,
                config: Some(cfg),
            })
        }
        (None, true) => {
            let data = scm_sim::simulate(&SimSpec {
                params: args.model.params(),
                n: args.n as usize,
                seed: args.seed,
            })?;
            let (train, test) = ingest::split(&data, args.train_fraction, args.seed)?;
            let pairs = vec![GroupPair::new(
                data.schema(),
                scm_sim::SEX_COLUMN,
                "m",
                "f",
            )?];
            Ok(Prepared {
                train,
                test,
                scaler: MinMaxScaler::default(),
                pairs,
                config: None,
            })
        }
        (None, false) => bail!("pass --config <PATH> or --simulate"),
    }
}

fn finish(mut w: Box<dyn Write>, body: &str) -> anyhow::Result<()> {
    w.write_all(body.as_bytes())?;
    w.flush()?;
    Ok(())
}

pub(super) fn dispatch(cli: Cli) -> anyhow::Result<()> {
    let out_dir = cli.out_dir;
    match cli.command {
        Command::Simulate {
            n,
            seed,
            model,
            emit,
            output,
        } => {
            let data = scm_sim::simulate(&SimSpec {
                params: model.params(),
                n: n as usize,
                seed,
            })?;
            let mut w = open_output(&output.out, &out_dir)?;
            match emit {
                Emit::Csv => ingest::write_csv(&data, &mut w)?,
                Emit::Json => ingest::write_json_lines(&data, &mut w)?,
                Emit::Text => bail!("datasets are written as csv or json"),
            }
            w.flush()?;
        }
        Command::Fit { data, output } => {
            let p = prepare(&data)?;
            let set = PredictorSet::fit(&p.train)?;
            let fit = set.components.f_ml().glm.fit.clone();
            if let Some(f) = fit {
                eprintln!(
                    "fitted on {} rows: {} Newton steps, gradient inf-norm {:.2e}",
                    p.train.len(),
                    f.iterations,
                    f.gradient_inf_norm
                );
            }
            let mut doc = ModelDocument::new(set, p.scaler, p.pairs);
            if let Some(cfg) = &p.config {
                doc = doc.with_input(cfg);
            }
            finish(
                open_output(&output.out, &out_dir)?,
                &(doc.to_json()? + "\n"),
            )?;
        }
        Command::Predict {
            model,
            input,
            predictor,
            emit,
            output,
        } => {
            let doc = ModelDocument::load(&model)
                .with_context(|| format!("reading {}", model.display()))?;
            let body = predict(&doc, &input, &predictor, emit)?;
            finish(open_output(&output.out, &out_dir)?, &body)?;
        }
        Command::Evaluate {
            data,
            bins,
            true_params,
            emit,
            output,
        } => {
            let p = prepare(&data)?;
            let set = if true_params {
                PredictorSet::from_components(
                    experiment::true_components(&data.model.params())?,
                    &p.train,
                )?
            } else {
                PredictorSet::fit(&p.train)?
            };
            let eval = experiment::evaluate(&set, &p.test, &p.pairs, bins)?;
            let body = match emit {
                Emit::Text => eval.to_text(),
                Emit::Json => serde_json::to_string_pretty(&eval)? + "\n",
                Emit::Csv => eval.to_csv(),
            };
            finish(open_output(&output.out, &out_dir)?, &body)?;
        }
        Command::Sweep {
            param,
            grid,
            replicates,
            n_train,
            n_test,
            seed,
            model,
            emit,
            output,
        } => {
            let mut cfg = SweepConfig::default_for(param, seed);
            if !grid.is_empty() {
                cfg.grid = grid;
            }
            cfg.base = model.params();
            cfg.replicates = replicates as usize;
            cfg.n_train = n_train as usize;
            cfg.n_test = n_test as usize;
            let result = experiment::run_sweep(&cfg)?;
            for f in &result.failures {
                eprintln!(
                    "warning: {} = {}, replicate {} failed: {}",
                    param.name(),
                    f.value,
                    f.replicate,
                    f.error
                );
            }
            let body = match emit {
                Emit::Csv => result.to_csv(),
                Emit::Json => serde_json::to_string_pretty(&result)? + "\n",
                Emit::Text => result.to_text(),
            };
            finish(open_output(&output.out, &out_dir)?, &body)?;
        }
        Command::ReproTable1 {
            seed,
            n,
            true_params,
            emit,
            output,
        } => {
            let t = experiment::table1(seed, n as usize, true_params)?;
            let body = match emit {
                Emit::Text => t.to_text(),
                Emit::Json => serde_json::to_string_pretty(&t)? + "\n",
                Emit::Csv => t.to_csv(),
            };
            finish(open_output(&output.out, &out_dir)?, &body)?;
        }
    }
    Ok(())
}

fn predict(
    doc: &ModelDocument,
    input: &PathBuf,
    kinds: &[PredictorKind],
    emit: Emit,
) -> anyhow::Result<String> {
    let schema = Arc::clone(doc.predictors.components.schema());
    let cfg = doc
        .input
        .clone()
        .unwrap_or_else(|| SchemaConfig::canonical(&schema));
    let loaded =
        ingest::load_path(&cfg, input).with_context(|| format!("loading {}", input.display()))?;
    let data = doc.normalization.transform(&loaded.dataset)?;
    if **data.schema() != *schema {
        bail!("input columns do not match the model schema");
    }
    let kinds: Vec<PredictorKind> = if kinds.is_empty() {
        PredictorKind::ALL.to_vec()
    } else {
        kinds.to_vec()
    };
    let scores = kinds
        .iter()
        .map(|&k| doc.predictors.get(k).score_rows(&data))
        .collect::<crate::Result<Vec<_>>>()?;

    let mut out = String::new();
    use std::fmt::Write as _;
    match emit {
        Emit::Csv => {
            out.push_str("row");
            for k in &kinds {
                let _ = write!(out, ",{}", k.key());
            }
            out.push('\n');
            for i in 0..data.len() {
                let _ = write!(out, "{}", i + 1);
                for s in &scores {
                    let _ = write!(out, ",{}", s[i]);
                }
                out.push('\n');
            }
        }
        Emit::Json => {
            for i in 0..data.len() {
                let mut obj = serde_json::Map::new();
                obj.insert("row".into(), (i + 1).into());
                for (k, s) in kinds.iter().zip(&scores) {
                    obj.insert(k.key().into(), s[i].into());
                }
                out.push_str(&serde_json::Value::Object(obj).to_string());
                out.push('\n');
            }
        }
        Emit::Text => {
            let _ = write!(out, "{:>6}", "row");
            for k in &kinds {
                let _ = write!(out, " {:>8}", k.label());
            }
            out.push('\n');
            for i in 0..data.len() {
                let _ = write!(out, "{:>6}", i + 1);
                for s in &scores {
                    let _ = write!(out, " {:>8.4}", s[i]);
                }
                out.push('\n');
            }
        }
    }
    Ok(out)
}
