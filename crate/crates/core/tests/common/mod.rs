#![allow(dead_code)]

use bloch_sl::mlp::{he_uniform_init, Mlp, MlpSpec};
use bloch_sl::rng::SplitMix64;
use ndarray::Array2;

/// Floor on the relative-error denominator so near-zero gradients are
/// compared absolutely.
pub const FD_FLOOR: f64 = 1e-4;

fn batch_loss(net: &Mlp, x: &Array2<f64>, y: &[f64]) -> f64 {
    let p = net.predict(x.view()).unwrap();
    p.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64
}

/// Worst relative error between backprop and central differences for a
/// random network drawn from `seed`.
pub fn fd_worst_relative_error(seed: u64, h: f64) -> f64 {
    let mut rng = SplitMix64::new(seed);
    let input = 2 + rng.below(6) as usize;
    let depth = 1 + rng.below(3) as usize;
    let hidden: Vec<usize> = (0..depth).map(|_| 2 + rng.below(6) as usize).collect();
    fd_check(&mut rng, seed, input, &hidden, h)
}

/// As [`fd_worst_relative_error`] for a fixed architecture.
pub fn fd_check(rng: &mut SplitMix64, seed: u64, input: usize, hidden: &[usize], h: f64) -> f64 {
    let mut net = he_uniform_init(&MlpSpec::regression(input, hidden, seed)).unwrap();
    // Non-zero biases so every parameter is exercised.
    for layer in net.layers_mut() {
        layer.bias.mapv_inplace(|_| rng.next_f64() - 0.5);
    }
    let rows = 4;
    let x = Array2::from_shape_simple_fn((rows, input), || 2.0 * rng.next_f64() - 1.0);
    let y: Vec<f64> = (0..rows).map(|_| rng.next_f64()).collect();
    let cache = net.forward_batch(x.view()).unwrap();
    let g = net.backward_batch(&cache, &y).unwrap();

    let mut worst: f64 = 0.0;
    let mut compare = |analytic: f64, numeric: f64| {
        let denom = analytic.abs().max(numeric.abs()).max(FD_FLOOR);
        worst = worst.max((analytic - numeric).abs() / denom);
    };
    for l in 0..net.layers().len() {
        let (r, c) = net.layers()[l].weights.dim();
        for i in 0..r {
            for j in 0..c {
                let w0 = net.layers()[l].weights[[i, j]];
                net.layers_mut()[l].weights[[i, j]] = w0 + h;
                let up = batch_loss(&net, &x, &y);
                net.layers_mut()[l].weights[[i, j]] = w0 - h;
                let down = batch_loss(&net, &x, &y);
                net.layers_mut()[l].weights[[i, j]] = w0;
                compare(g.weights[l][[i, j]], (up - down) / (2.0 * h));
            }
            let b0 = net.layers()[l].bias[i];
            net.layers_mut()[l].bias[i] = b0 + h;
            let up = batch_loss(&net, &x, &y);
            net.layers_mut()[l].bias[i] = b0 - h;
            let down = batch_loss(&net, &x, &y);
            net.layers_mut()[l].bias[i] = b0;
            compare(g.biases[l][i], (up - down) / (2.0 * h));
        }
    }
    worst
}

/// Piecewise strictly monotone array of length `n` whose direction flips
/// right after each returned turning index.
pub fn synthetic_piecewise(rng: &mut SplitMix64, n: usize, turns: usize) -> (Vec<f64>, Vec<usize>) {
    let mut points: Vec<usize> = Vec::new();
    while points.len() < turns {
        let t = 1 + rng.below((n - 3) as u64) as usize;
        // Each piece needs at least two steps so its direction is defined.
        if points.iter().all(|&p| p.abs_diff(t) >= 2) && t + 2 < n {
            points.push(t);
        }
    }
    points.sort_unstable();
    let mut v = vec![rng.next_f64()];
    let mut up = rng.next_f64() < 0.5;
    let mut next = 0;
    for i in 1..n {
        // The step from i - 1 to i changes direction after a turning index.
        if next < points.len() && i - 1 == points[next] {
            up = !up;
            next += 1;
        }
        let step = 1e-3 + rng.next_f64();
        v.push(v[i - 1] + if up { step } else { -step });
    }
    (v, points)
}
