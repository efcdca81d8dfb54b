mod common;

use wcparse::corpus::CorpusSentence;
use wcparse::encoder::EncoderKind;
use wcparse::lattice::Lexicon;
use wcparse::model::{Model, ModelConfig};
use wcparse::tensor::{Graph, ParamStore, Tensor};
use wcparse::toy;
use wcparse::train::{self, evaluate_model, Adam, TrainConfig, Trainer};

use common::encoder_config;

fn small_gat(hidden: usize, seed: u64, train: &[CorpusSentence]) -> Model {
    let config = ModelConfig {
        encoder: encoder_config(EncoderKind::Gat, 1, 2, hidden),
        mlp: hidden,
        seed,
    };
    Model::for_corpus(config, train).unwrap()
}

fn config(lr: f64, batch_size: usize, max_epochs: usize) -> TrainConfig {
    TrainConfig {
        learning_rate: lr,
        batch_size,
        max_epochs,
        ..TrainConfig::default()
    }
}

#[test]
fn full_batch_steps_reduce_the_loss() {
    let data = &toy::bundled_train()[..2];
    let model = small_gat(16, 1, data);
    let mut trainer = Trainer::new(model, data, &toy::bundled_lexicon(), config(1e-3, 2, 10)).unwrap();
    let losses: Vec<f64> = (0..10).map(|_| trainer.run_epoch().unwrap()).collect();
    assert!(losses[9] < losses[0], "{losses:?}");
    assert!(losses.windows(2).filter(|w| w[1] < w[0]).count() >= 8, "{losses:?}");
}

#[test]
fn adam_minimises_a_quadratic() {
    let target = [3.0, -1.5, 0.25];
    let mut store = ParamStore::new();
    store.add("w", Tensor::vector(vec![0.0; 3])).unwrap();
    let mut adam = Adam::new(&store, 0.05, 0.9, 0.999, 1e-8);
    for _ in 0..2000 {
        store.zero_grad();
        let mut g = Graph::eval();
        let w = g.param_named(&store, "w").unwrap();
        let c = g.constant(Tensor::vector(target.to_vec()));
        let d = g.scale(c, -1.0);
        let diff = g.add(w, d).unwrap();
        let sq = g.mul(diff, diff).unwrap();
        let loss = g.sum(sq);
        g.backward(loss).unwrap().accumulate_into(&mut store);
        adam.step(&mut store).unwrap();
    }
    for (w, t) in store.by_name("w").unwrap().value.data().iter().zip(target) {
        assert!((w - t).abs() < 1e-3, "{w} vs {t}");
    }
}

#[test]
fn seeded_training_is_reproducible() {
    let data = &toy::bundled_train()[..12];
    let run = |seed| {
        let model = small_gat(8, 4, data);
        let cfg = TrainConfig { seed, ..config(0.002, 4, 1) };
        let mut trainer = Trainer::new(model, data, &toy::bundled_lexicon(), cfg).unwrap();
        let loss = trainer.run_epoch().unwrap();
        (loss, trainer.into_model().params.iter().map(|p| p.value.clone()).collect::<Vec<_>>())
    };
    let (a, b) = (run(7), run(7));
    assert_eq!(a.0.to_bits(), b.0.to_bits());
    assert_eq!(a.1, b.1);
    assert_ne!(run(8).0, a.0);
}

#[test]
fn initial_loss_is_near_the_uniform_baseline() {
    let data = toy::bundled_train();
    let lexicon = toy::bundled_lexicon();
    let model = Model::for_corpus(ModelConfig::default(), &data).unwrap();
    let t = model.tags.len() as f64;
    let (mut loss, mut baseline) = (0.0, 0.0);
    for s in &data {
        let (tags, heads) = model.gold(s).unwrap();
        let mut g = Graph::eval();
        let l = model.loss(&mut g, &model.lattice(&s.chars, &lexicon).unwrap(), &tags, &heads).unwrap();
        loss += g.value(l).item().unwrap();
        let n = s.chars.len() as f64;
        baseline += n * (t.ln() + n.ln());
    }
    let ratio = loss / baseline;
    assert!((0.5..2.0).contains(&ratio), "initial loss {loss} vs uniform {baseline}");
}

#[test]
fn training_stops_when_dev_stalls() {
    let data = toy::bundled_train();
    let model = small_gat(8, 2, &data[..8]);
    let cfg = TrainConfig { patience: 2, ..config(1e-9, 8, 20) };
    let out = train::train(model, &data[..8], &toy::bundled_dev()[..4], &toy::bundled_lexicon(), &cfg, None).unwrap();
    assert!(out.log.stopped_early);
    assert!(out.log.epochs.len() < 20);
    assert_eq!(out.log.epochs.len(), out.log.best_epoch + 2);
}

#[test]
fn training_writes_best_checkpoint() {
    let data = toy::bundled_train();
    let dev = &toy::bundled_dev()[..5];
    let lexicon = toy::bundled_lexicon();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("best.ckpt");
    let model = small_gat(16, 3, &data);
    let out = train::train(model, &data[..20], dev, &lexicon, &config(0.005, 4, 4), Some(&path)).unwrap();
    assert_eq!(out.log.epochs.len(), 4);
    let best = out.log.epochs[out.log.best_epoch - 1].dev_dep_f1;
    assert_eq!(best, out.log.best_dev_dep_f1);
    assert!(out.log.epochs.iter().all(|e| e.dev_dep_f1 <= best && e.loss.is_finite()));
    let saved = wcparse::checkpoint::load(&path).unwrap();
    assert_eq!(evaluate_model(&saved, dev, &lexicon).unwrap().dep.f1, best);
    assert_eq!(evaluate_model(&out.model, dev, &lexicon).unwrap().dep.f1, best);
}

#[test]
fn ten_sentences_can_be_memorised() {
    let data = &toy::bundled_train()[..10];
    let lexicon = toy::bundled_lexicon();
    let mut trainer = Trainer::new(small_gat(32, 5, data), data, &lexicon, config(0.005, 5, 150)).unwrap();
    let mut f1 = 0.0;
    while trainer.epoch() < 150 && f1 < 1.0 {
        trainer.run_epoch().unwrap();
        if trainer.epoch().is_multiple_of(10) {
            f1 = evaluate_model(trainer.model(), data, &lexicon).unwrap().dep.f1;
        }
    }
    assert!(f1 >= 0.95, "training dep F1 {f1}");
}

#[test]
fn empty_inputs_are_rejected() {
    let data = toy::bundled_train();
    let model = small_gat(8, 0, &data);
    assert!(Trainer::new(model.clone(), &[], &Lexicon::default(), TrainConfig::default()).is_err());
    assert!(train::train(model, &data, &[], &Lexicon::default(), &TrainConfig::default(), None).is_err());
    assert!(Model::for_corpus(ModelConfig::default(), &[]).is_err());
}
