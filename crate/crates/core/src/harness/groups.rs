//! Random groups of old objects, one config per group.

use rand::seq::index::sample;

use crate::seeds::{self, Namespace};

use super::config::ExperimentConfig;
use super::HarnessError;

/// `count` copies of `base`, each with `size` prior objects drawn uniformly
/// without replacement from `pool`.
pub fn generate_groups(
    base: &ExperimentConfig,
    pool: &[u32],
    count: usize,
    size: usize,
    seed: u64,
) -> Result<Vec<ExperimentConfig>, HarnessError> {
    let pool: Vec<u32> = pool.iter().copied().filter(|id| !base.new_objects.contains(id)).collect();
    if size == 0 || size > pool.len() {
        return Err(HarnessError::Config(format!(
            "cannot draw groups of {size} from {} candidate objects",
            pool.len()
        )));
    }
    (0..count)
        .map(|g| {
            let mut rng = seeds::rng(seed, Namespace::Groups, &[g as u64]);
            let mut ids: Vec<u32> = sample(&mut rng, pool.len(), size).into_iter().map(|i| pool[i]).collect();
            ids.sort_unstable();
            let cfg = ExperimentConfig {
                prior_objects: ids,
                ..base.clone()
            };
            cfg.validate()?;
            Ok(cfg)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::parse_config;

    #[test]
    fn groups_are_distinct_and_reproducible() {
        let base = parse_config(
            r#"{"schema_version": 1, "catalog": "c.json", "prior_objects": [1, 2, 3],
                "new_objects": [11, 12, 13], "trials": 1, "seeds": [0], "budget": 5, "mode": "Transfer"}"#,
        )
        .unwrap();
        let pool: Vec<u32> = (1..=15).collect();
        let a = generate_groups(&base, &pool, 10, 3, 7).unwrap();
        assert_eq!(a, generate_groups(&base, &pool, 10, 3, 7).unwrap());
        for c in &a {
            assert_eq!(c.prior_objects.len(), 3);
            assert!(c.prior_objects.windows(2).all(|w| w[0] < w[1]));
            assert!(c.prior_objects.iter().all(|o| !c.new_objects.contains(o)));
        }
        assert!(generate_groups(&base, &pool, 1, 13, 7).is_err());
    }
}
