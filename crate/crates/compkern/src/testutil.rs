//! Shared helpers for unit tests.

use crate::compdata::Composition;
use crate::rng::CounterRng;

/// Random point on the simplex; with `with_zeros` roughly a third of the
/// coordinates are zeroed before normalizing.
pub(crate) fn random_composition(rng: &mut CounterRng, p: usize, with_zeros: bool) -> Composition {
    loop {
        let mut v: Vec<f64> = (0..p).map(|_| rng.next_f64()).collect();
        if with_zeros {
            for e in v.iter_mut() {
                if *e < 0.3 {
                    *e = 0.0;
                }
            }
        }
        if v.iter().sum::<f64>() > 1e-3 {
            return Composition::from_counts(&v).unwrap();
        }
    }
}
