use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use ndarray::Array2;
use sha2::{Digest, Sha256};

use bloch_sl::analysis::{
    fraction_study, run_experiment, save_experiment, sweep_direct, sweep_inverse, unit_grid, write_fractions_csv,
    ExperimentConfig, ExperimentError, Seeds, SweepCurve, SweepError, TRAIN_FRACTION,
};
use bloch_sl::analysis::svg::render_sweep;
use bloch_sl::control::sample_control;
use bloch_sl::dataset::{exchange_dataset, generate_records, simulate_distance, split, DatasetError, FEATURE_WIDTH};
use bloch_sl::format::{export_csv, generate_dataset_file, read_dataset, write_dataset_file, FormatError};
use bloch_sl::mlp::{
    evaluate_mae, he_uniform_init, infer_batch, load_checkpoint, save_checkpoint, AdamConfig, CheckpointError,
    MlpError, Samples, TrainConfig, TrainError,
};
use bloch_sl::rng::SplitMix64;
use bloch_sl::ExecMode;

use crate::{
    BenchArgs, CliError, Command, EvaluateArgs, FractionsArgs, GenerateArgs, SweepArgs, SweepKindArg, TrainArgs,
    TrainingFlags,
};

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Usage(m) => CliError::Usage(m),
            other => CliError::Io(other.to_string()),
        }
    }
}

impl From<CheckpointError> for CliError {
    fn from(e: CheckpointError) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::NonFinite { .. } => CliError::Numerical(format!("training diverged: {e}")),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<MlpError> for CliError {
    fn from(e: MlpError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Config(m) => CliError::Usage(m),
            ExperimentError::Format(e) => e.into(),
            ExperimentError::Dataset(e) => e.into(),
            ExperimentError::Train(e) => e.into(),
            ExperimentError::Mlp(e) => e.into(),
        }
    }
}

impl From<SweepError> for CliError {
    fn from(e: SweepError) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn require_file(path: &Path, what: &str) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{what} {} does not exist", path.display())))
    }
}

fn mode(sequential: bool) -> ExecMode {
    if sequential {
        ExecMode::Sequential
    } else {
        ExecMode::available()
    }
}

fn sha256_file(path: &Path) -> Result<String, CliError> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

pub fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Generate(a) => generate(a),
        Command::Train(a) => train(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Sweep(a) => sweep(a),
        Command::Fractions(a) => fractions(a),
        Command::Bench(a) => bench(a),
    }
}

fn generate(a: GenerateArgs) -> Result<(), CliError> {
    let header = if let Some(src) = &a.from {
        require_file(src, "dataset")?;
        let (h, recs) = read_dataset(src)?;
        let (h2, out) = exchange_dataset(&h, &recs);
        if let Some(id) = a.id {
            if id != h2.dataset_id {
                return Err(CliError::Usage(format!(
                    "{} exchanges to {}, not {id}",
                    h.dataset_id, h2.dataset_id
                )));
            }
        }
        write_dataset_file(&a.out, &h2, &out)?;
        h2
    } else {
        let id = a.id.ok_or_else(|| CliError::Usage("--id or --from is required".into()))?;
        if a.per_offset == 0 {
            return Err(CliError::Usage("--per-offset must be >= 1".into()));
        }
        generate_dataset_file(&a.out, id, a.per_offset, a.seed, mode(a.sequential))?
    };
    if let Some(csv) = &a.csv {
        let (_, recs) = read_dataset(&a.out)?;
        let mut w = BufWriter::new(File::create(csv)?);
        export_csv(&recs, &mut w)?;
        w.flush()?;
    }
    println!("dataset = {}", header.dataset_id);
    println!("records = {}", header.record_count);
    println!("offsets = {}", header.offset_count);
    println!("per_offset = {}", header.per_offset);
    println!("seed = {}", header.master_seed);
    println!("sha256 = {}", sha256_file(&a.out)?);
    Ok(())
}

fn experiment_config(t: &TrainingFlags, fraction: f64) -> ExperimentConfig {
    ExperimentConfig {
        preset: t.preset,
        seeds: Seeds::uniform(t.seed),
        fraction,
        train: TrainConfig {
            batch_size: t.batch_size,
            max_epochs: t.max_epochs,
            validation_fraction: t.validation_fraction,
            patience: t.patience,
            restore_best: !t.no_restore_best,
            seed: t.seed,
            adam: AdamConfig { lr: t.learning_rate, ..AdamConfig::default() },
            mode: mode(t.sequential),
            ..TrainConfig::default()
        },
    }
}

fn train(a: TrainArgs) -> Result<(), CliError> {
    require_file(&a.data, "dataset")?;
    let cfg = experiment_config(&a.training, a.fraction);
    cfg.train.validate()?;
    let (header, records) = read_dataset(&a.data)?;
    let out = run_experiment(&header, &records, &cfg)?;
    let dir = save_experiment(&a.out_dir, &out.report, &out.history, a.training.canonical)
        .map_err(|e| CliError::Io(e.to_string()))?;
    save_checkpoint(&out.net, dir.join("model.ckpt"))?;
    print!("{}", out.report.to_text(a.training.canonical));
    println!("output = {}", dir.display());
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<(), CliError> {
    require_file(&a.data, "dataset")?;
    require_file(&a.model, "model")?;
    let net = load_checkpoint(&a.model)?;
    let (header, records) = read_dataset(&a.data)?;
    let sp = split(records.len(), TRAIN_FRACTION, a.seed)?;
    let test = Samples::from_records(&records, &sp.test);
    let vmae = evaluate_mae(&net, &test)?;
    let text = format!(
        "dataset_id = {}\nrecord_count = {}\nsplit_seed = {}\ntest_records = {}\ntest_vmae = {}\n",
        header.dataset_id,
        header.record_count,
        a.seed,
        sp.test.len(),
        vmae
    );
    let dir = match &a.out_dir {
        Some(d) => d.clone(),
        None => a.model.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    if !dir.as_os_str().is_empty() {
        fs::create_dir_all(&dir)?;
    }
    fs::write(dir.join("evaluation.txt"), &text)?;
    print!("{text}");
    Ok(())
}

fn diagnosis_text(curve: &SweepCurve) -> String {
    let mut s = format!(
        "control = {}\nkind = {}\npoints = {}\nsegments = {}\ninjective = {}\nbreakpoints = {}\n",
        curve.control,
        match curve.kind {
            bloch_sl::analysis::SweepKind::Direct => "direct",
            bloch_sl::analysis::SweepKind::Inverse => "inverse",
        },
        curve.grid.len(),
        curve.segmentation.segments.len(),
        curve.segmentation.is_injective(),
        curve
            .segmentation
            .breakpoints()
            .iter()
            .map(|b| b.to_string())
            .collect::<Vec<_>>()
            .join(",")
    );
    if let Some(d) = curve.diagnose() {
        let opt = |v: Option<f64>| v.map_or("none".to_string(), |x| x.to_string());
        s += &format!(
            "ambiguous_points = {}\nmean_error = {}\nmax_error = {}\nmean_error_ambiguous = {}\nmean_error_unique = {}\nout_of_range = {}\n",
            d.ambiguous_points,
            d.mean_error,
            d.max_error,
            opt(d.mean_error_ambiguous),
            opt(d.mean_error_unique),
            d.out_of_range
        );
    }
    s
}

fn sweep(a: SweepArgs) -> Result<(), CliError> {
    let control = match (a.control, &a.data, a.index) {
        (Some(c), _, _) => c,
        (None, Some(data), Some(i)) => {
            require_file(data, "dataset")?;
            let (_, records) = read_dataset(data)?;
            let sp = split(records.len(), TRAIN_FRACTION, a.seed)?;
            let &r = sp.test.get(i).ok_or_else(|| {
                CliError::Usage(format!("--index {i} outside test split of {} records", sp.test.len()))
            })?;
            records[r]
                .control()
                .ok_or_else(|| CliError::Usage(format!("record {r} has no 5-switch control")))?
        }
        _ => return Err(CliError::Usage("give --control, or --data with --index".into())),
    };
    if a.points < 2 {
        return Err(CliError::Usage("--points must be >= 2".into()));
    }
    let net = match &a.model {
        Some(p) => {
            require_file(p, "model")?;
            Some(load_checkpoint(p)?)
        }
        None => None,
    };
    let grid = unit_grid(a.points);
    let curve = match a.kind {
        SweepKindArg::Direct => sweep_direct(&control, &grid, net.as_ref(), ExecMode::available())?,
        SweepKindArg::Inverse => sweep_inverse(&control, &grid, net.as_ref(), ExecMode::available())?,
    };
    fs::create_dir_all(&a.out_dir)?;
    let mut w = BufWriter::new(File::create(a.out_dir.join("sweep.csv"))?);
    curve.write_csv(&mut w)?;
    w.flush()?;
    fs::write(a.out_dir.join("sweep.svg"), render_sweep(&curve))?;
    let text = diagnosis_text(&curve);
    fs::write(a.out_dir.join("sweep.txt"), &text)?;
    print!("{text}");
    Ok(())
}

fn fractions(a: FractionsArgs) -> Result<(), CliError> {
    require_file(&a.data, "dataset")?;
    if a.fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
        return Err(CliError::Usage("fractions must lie in (0, 1]".into()));
    }
    let cfg = experiment_config(&a.training, 1.0);
    cfg.train.validate()?;
    let (header, records) = read_dataset(&a.data)?;
    let rows = fraction_study(&header, &records, &a.fractions, &cfg)?;
    let dir = a.out_dir.join(header.dataset_id.name()).join(a.training.preset.name()).join(a.training.seed.to_string());
    fs::create_dir_all(&dir)?;
    let mut buf = Vec::new();
    write_fractions_csv(&rows, &mut buf)?;
    fs::write(dir.join("fractions.csv"), &buf)?;
    print!("{}", String::from_utf8_lossy(&buf));
    println!("output = {}", dir.display());
    Ok(())
}

fn bench(a: BenchArgs) -> Result<(), CliError> {
    if a.samples == 0 {
        return Err(CliError::Usage("--samples must be >= 1".into()));
    }
    let net = match &a.model {
        Some(p) => {
            require_file(p, "model")?;
            load_checkpoint(p)?
        }
        None => he_uniform_init(&a.preset.spec(a.seed))?,
    };
    let mut rng = SplitMix64::new(a.seed);
    let inputs: Vec<(f64, [i8; 100])> = (0..a.samples).map(|_| (rng.next_f64(), sample_control(&mut rng).expand())).collect();

    let t = Instant::now();
    let labels: Vec<f64> = inputs.iter().map(|(d, u)| simulate_distance(*d, u)).collect();
    let sim = t.elapsed().as_secs_f64() / a.samples as f64;

    let mut x = Array2::zeros((a.samples, FEATURE_WIDTH));
    for (mut row, (d, u)) in x.rows_mut().into_iter().zip(&inputs) {
        row[0] = *d;
        for (k, &s) in u.iter().enumerate() {
            row[k + 1] = f64::from(s);
        }
    }
    let (pred, timing) = infer_batch(&net, x.view())?;
    debug_assert_eq!(pred.len(), labels.len());

    let per_offset = (a.samples as u64 / 10).max(1);
    let t = Instant::now();
    generate_records(bloch_sl::DatasetId::Ds1, per_offset, a.seed, ExecMode::Sequential)?;
    let gen_seq = t.elapsed().as_secs_f64();
    let t = Instant::now();
    generate_records(bloch_sl::DatasetId::Ds1, per_offset, a.seed, ExecMode::available())?;
    let gen_par = t.elapsed().as_secs_f64();

    println!("samples = {}", a.samples);
    println!("threads = {}", bloch_sl::par::thread_count());
    println!("simulation_per_sample_secs = {sim:.3e}");
    println!("inference_per_sample_secs = {:.3e}", timing.per_sample_secs);
    println!("simulation_over_inference = {:.2}", sim / timing.per_sample_secs);
    println!("generation_sequential_secs = {gen_seq:.3e}");
    println!("generation_parallel_secs = {gen_par:.3e}");
    Ok(())
}
