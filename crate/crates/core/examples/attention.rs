//! Encodes one ownship against a growing set of intruders and prints the
//! attention weights, showing that reordering intruders only permutes them.

use corridor_rl::attention::AttentionParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> corridor_rl::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let params = AttentionParams::<f64>::glorot(4, 3, 5, &mut rng);
    let own: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut intruders: Vec<Vec<f64>> = Vec::new();
    for n in 0..5 {
        let e = params.encode(&own, &intruders)?;
        let w: Vec<String> = e.weights.iter().map(|w| format!("{w:.3}")).collect();
        let k: Vec<String> = e.k.iter().map(|v| format!("{v:+.3}")).collect();
        println!("{n} intruders  weights [{}]  k [{}]", w.join(", "), k.join(", "));
        intruders.push((0..3).map(|_| rng.random_range(-1.0..1.0)).collect());
    }
    let forward = params.encode(&own, &intruders)?;
    intruders.reverse();
    let backward = params.encode(&own, &intruders)?;
    let diff = forward
        .k
        .iter()
        .zip(&backward.k)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("reversed order: max |dk| = {diff:.2e}");
    Ok(())
}
