use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Model, Semantics};

use super::{Bounds, ConcreteState, InputEnumerator, Message, Step, Trace};

/// A single seeded walk of at most `bounds.max_depth` steps, choosing
/// uniformly among the enabled inputs at each state.
pub fn random_walk(model: &Model, bounds: &Bounds) -> Trace {
    let sem = Semantics::new(model);
    let inputs = InputEnumerator::new(&sem, bounds.data);
    let mut rng = ChaCha8Rng::seed_from_u64(bounds.seed);
    let mut state = ConcreteState::initial(model);
    let start = state.clone();
    let mut steps = Vec::new();
    let mut complete = true;
    loop {
        let mut options = inputs.enumerate(&state);
        if options.is_empty() {
            break;
        }
        if steps.len() >= bounds.max_depth {
            complete = false;
            break;
        }
        let pick = options.swap_remove(rng.gen_range(0..options.len()));
        let t = &model.transitions[pick.transition];
        let to = ConcreteState { control: t.target, values: pick.firing.values };
        steps.push(Step {
            from: state,
            stimulus: Message { event: t.trigger, args: pick.args },
            fired: pick.transition,
            outputs: pick.firing.outputs.into_iter().map(|(event, args)| Message { event, args }).collect(),
            to: to.clone(),
        });
        state = to;
    }
    Trace { start, steps, complete }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explore::tests::ping;
    use crate::model::parse_model;

    #[test]
    fn same_seed_same_walk() {
        let m = parse_model(
            "state A initial\nstate B\nstimulus E(x: int[0..9])\n\
             trans t: A -> B on E [x > 3]\ntrans u: B -> A on E\n",
        )
        .unwrap();
        let b = Bounds { seed: 42, ..Bounds::depth(20) };
        assert_eq!(random_walk(&m, &b), random_walk(&m, &b));
        let other = random_walk(&m, &Bounds { seed: 43, ..b });
        assert_eq!(other.len(), 20);
    }

    #[test]
    fn ping_walk_runs_to_depth() {
        let m = ping();
        for seed in 0..5 {
            let t = random_walk(&m, &Bounds { seed, ..Bounds::depth(5) });
            assert_eq!(t.len(), 5);
            assert!(!t.complete);
        }
    }

    #[test]
    fn forced_walk_is_seed_independent() {
        let m = parse_model("state A initial\nstate B\nstimulus E\ntrans t: A -> B on E\ntrans u: B -> A on E\n").unwrap();
        let a = random_walk(&m, &Bounds { seed: 1, ..Bounds::depth(4) });
        let b = random_walk(&m, &Bounds { seed: 99, ..Bounds::depth(4) });
        assert_eq!(a, b);
    }
}
