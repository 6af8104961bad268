use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::sym::TemplateId;

/// Picks one of the templates available at a location.
pub trait TemplateChooser {
    fn name(&self) -> &str;
    /// `candidates` is non-empty and in template-set order.
    fn choose(&mut self, candidates: &[TemplateId]) -> TemplateId;
}

pub struct FirstChooser;

impl TemplateChooser for FirstChooser {
    fn name(&self) -> &str {
        "first"
    }

    fn choose(&mut self, candidates: &[TemplateId]) -> TemplateId {
        candidates[0]
    }
}

pub struct RandomChooser {
    rng: ChaCha8Rng,
}

impl RandomChooser {
    pub fn new(seed: u64) -> RandomChooser {
        RandomChooser { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl TemplateChooser for RandomChooser {
    fn name(&self) -> &str {
        "random"
    }

    fn choose(&mut self, candidates: &[TemplateId]) -> TemplateId {
        candidates[self.rng.gen_range(0..candidates.len())]
    }
}

pub type ChooserFactory = fn(u64) -> Box<dyn TemplateChooser>;

/// Choosers by name; each factory receives the run's seed.
pub struct ChooserRegistry {
    entries: Vec<(&'static str, ChooserFactory)>,
}

impl Default for ChooserRegistry {
    fn default() -> Self {
        let mut r = ChooserRegistry { entries: Vec::new() };
        r.register("first", |_| Box::new(FirstChooser));
        r.register("random", |seed| Box::new(RandomChooser::new(seed)));
        r
    }
}

impl ChooserRegistry {
    pub fn register(&mut self, name: &'static str, factory: ChooserFactory) {
        self.entries.retain(|(n, _)| *n != name);
        self.entries.push((name, factory));
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|(n, _)| *n).collect()
    }

    pub fn create(&self, name: &str, seed: u64) -> Option<Box<dyn TemplateChooser>> {
        self.entries.iter().find(|(n, _)| *n == name).map(|(_, f)| f(seed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_names_and_lookup() {
        let r = ChooserRegistry::default();
        assert_eq!(r.names(), ["first", "random"]);
        assert!(r.create("nope", 0).is_none());
        let ids = [TemplateId(3), TemplateId(5)];
        assert_eq!(r.create("first", 9).unwrap().choose(&ids), TemplateId(3));
    }

    #[test]
    fn random_choice_depends_only_on_the_seed() {
        let ids: Vec<TemplateId> = (0..4).map(TemplateId).collect();
        let draw = |seed| {
            let mut c = RandomChooser::new(seed);
            (0..32).map(|_| c.choose(&ids)).collect::<Vec<_>>()
        };
        assert_eq!(draw(11), draw(11));
        assert!(draw(11).iter().all(|t| ids.contains(t)));
        let seen: std::collections::BTreeSet<_> = draw(11).into_iter().collect();
        assert!(seen.len() > 1);
    }
}
