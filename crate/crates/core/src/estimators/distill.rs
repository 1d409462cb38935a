use crate::error::{Error, Result};
use crate::model::{init, train, Mlp, MlpConfig, Objective, TrainConfig, TrainReport};
use crate::types::{AnnotationCounts, CategoricalDist, Example};

/// Pseudo soft labels are stored as counts at this resolution.
pub const PSEUDO_LABEL_SCALE: f64 = 1e6;

/// Attaches the teacher's predicted distribution to every training example
/// as high-resolution counts. Original hard labels are kept.
pub fn distill_relabel<F>(teacher: F, train: &[Example]) -> Result<Vec<Example>>
where
    F: Fn(&Example) -> Result<CategoricalDist>,
{
    train
        .iter()
        .map(|ex| {
            let dist = teacher(ex).map_err(|e| Error::Teacher {
                id: ex.id.clone(),
                reason: e.to_string(),
            })?;
            let counts = dist
                .probs()
                .iter()
                .map(|p| (p * PSEUDO_LABEL_SCALE).round() as u64)
                .collect();
            let mut out = ex.clone();
            out.counts = Some(AnnotationCounts::new(counts)?);
            Ok(out)
        })
        .collect()
}

/// Trains a freshly initialized student on pseudo soft labels, selecting the
/// snapshot by dev accuracy.
pub fn distill_train(
    student: &MlpConfig,
    train_cfg: &TrainConfig,
    relabeled: &[Example],
    dev: &[Example],
) -> Result<(Mlp, TrainReport)> {
    if let Some(ex) = relabeled.iter().find(|e| e.counts.is_none()) {
        return Err(Error::invalid(format!(
            "example `{}` carries no soft label",
            ex.id
        )));
    }
    let cfg = TrainConfig {
        objective: Objective::SoftKl,
        ..train_cfg.clone()
    };
    train(&init(student)?, relabeled, &cfg, dev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::softmax;
    use crate::model::forward_deterministic;
    use crate::rng::stream;
    use rand::Rng;

    fn data(n: usize) -> Vec<Example> {
        let mut rng = stream(31, &[]);
        (0..n)
            .map(|i| {
                let l = i % 3;
                let mut x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
                x[l] += 1.5;
                Example::new(format!("d{i}")).with_features(x).with_label(l)
            })
            .collect()
    }

    #[test]
    fn point_mass_teacher_gives_one_hot() {
        let train = data(12);
        let relabeled = distill_relabel(
            |ex| Ok(CategoricalDist::point_mass(3, ex.hard_label.unwrap())),
            &train,
        )
        .unwrap();
        for (a, b) in train.iter().zip(&relabeled) {
            assert_eq!(b.hard_label, a.hard_label);
            let d = b.gold_dist().unwrap();
            assert_eq!(d, CategoricalDist::point_mass(3, a.hard_label.unwrap()));
        }
    }

    #[test]
    fn teacher_failure_names_example() {
        let train = data(3);
        let err = distill_relabel(
            |ex| {
                if ex.id == "d1" {
                    Err(Error::Untrained)
                } else {
                    Ok(CategoricalDist::uniform(3))
                }
            },
            &train,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Teacher { ref id, .. } if id == "d1"));
    }

    #[test]
    fn relabeled_soft_labels_are_valid() {
        let train = data(30);
        let relabeled = distill_relabel(|ex| softmax(&ex.features.as_ref().unwrap()[..3]), &train).unwrap();
        for (ex, orig) in relabeled.iter().zip(&train) {
            let d = ex.gold_dist().unwrap();
            let want = softmax(&orig.features.as_ref().unwrap()[..3]).unwrap();
            for (a, b) in d.probs().iter().zip(want.probs()) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn one_hot_student_equals_hard_training() {
        let train = data(45);
        let relabeled = distill_relabel(
            |ex| Ok(CategoricalDist::point_mass(3, ex.hard_label.unwrap())),
            &train,
        )
        .unwrap();
        let cfg = MlpConfig {
            input_dim: 4,
            hidden_dims: vec![8],
            n_labels: 3,
            dropout_rate: 0.1,
            init_seed: 3,
        };
        let tc = TrainConfig {
            epochs: 6,
            shuffle_seed: 8,
            ..Default::default()
        };
        let (student, rs) = distill_train(&cfg, &tc, &relabeled, &train).unwrap();
        let (hard, rh) = train_hard(&cfg, &tc, &train);
        assert_eq!(rs.loss_trace, rh.loss_trace);
        assert_eq!(student.params, hard.params);
        for ex in &train {
            let z = forward_deterministic(&student, ex.features().unwrap()).unwrap();
            assert!(softmax(&z).is_ok());
        }
        assert!(distill_train(&cfg, &tc, &train, &[]).is_err());
    }

    fn train_hard(cfg: &MlpConfig, tc: &TrainConfig, data: &[Example]) -> (Mlp, TrainReport) {
        train(&init(cfg).unwrap(), data, tc, data).unwrap()
    }
}
