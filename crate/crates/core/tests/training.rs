use bloch_sl::dataset::{generate_records, DatasetId};
use bloch_sl::mlp::{evaluate_mae, he_uniform_init, train, validation_mae, Preset, Samples, TrainConfig};
use bloch_sl::ExecMode;

#[test]
fn mae_matches_two_pass_recomputation() {
    let (_, recs) = generate_records(DatasetId::Ds1, 1000, 8, ExecMode::Parallel).unwrap();
    let data = Samples::all(&recs);
    let net = he_uniform_init(&Preset::Tiny.spec(2)).unwrap();
    let mae = evaluate_mae(&net, &data).unwrap();
    let mut total = 0.0;
    for r in &recs {
        let (p, _) = net.forward(&r.features()).unwrap();
        total += (p - r.label).abs();
    }
    assert!((mae - total / recs.len() as f64).abs() < 1e-12);
    let mut reversed = recs.clone();
    reversed.reverse();
    assert_eq!(evaluate_mae(&net, &Samples::all(&reversed)).unwrap(), mae);
}

#[test]
fn early_stopping_keeps_the_best_epoch() {
    let (_, recs) = generate_records(DatasetId::Ds2, 300, 4, ExecMode::Parallel).unwrap();
    let data = Samples::all(&recs);
    let cfg = TrainConfig { max_epochs: 40, patience: 3, seed: 1, ..TrainConfig::default() };
    let (net, h) = train(he_uniform_init(&Preset::Tiny.spec(1)).unwrap(), &data, &cfg).unwrap();
    let best = h.best().unwrap();
    assert!(h.epochs[best.epoch..].iter().all(|e| e.val_mae >= best.val_mae));
    assert_eq!(validation_mae(&net, &data, &cfg).unwrap(), best.val_mae);
    assert!(h.epochs.windows(2).all(|w| w[1].epoch == w[0].epoch + 1));
    assert!(h.epochs.len() <= 40);
}
