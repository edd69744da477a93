//! Layer-level reverse-mode differentiation for [`NetworkFamily`].
//!
//! The forward pass propagates values together with their input tangents
//! (`z`, `dz/dx`), so the spatial gradient `grad_x u` is itself a recorded
//! quantity. The backward pass takes adjoint seeds for both `u` and `grad_x u`
//! and returns the parameter gradient, which is what the Ritz energy needs:
//! its integrand depends on `grad_x u_theta`.

use crate::ansatz::network::NetworkFamily;
use crate::geometry::{Eval, Point};

/// Adjoint seed for one point: `d objective / d u` and `d objective / d grad_x u`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Seed {
    pub value: f64,
    pub grad: Point,
}

#[derive(Debug, Clone)]
struct LayerRecord {
    width: usize,
    /// Pre-activations, `[point][unit]`.
    z: Vec<f64>,
    /// Pre-activation tangents, `[point][unit][dim]`.
    zdot: Vec<f64>,
    /// Post-activations (equal to `z` for the output layer).
    a: Vec<f64>,
    adot: Vec<f64>,
}

/// Recorded forward evaluation of one network over a batch of points.
#[derive(Debug, Clone)]
pub struct GradientTape<'a> {
    fam: &'a NetworkFamily,
    offsets: Vec<usize>,
    dim: usize,
    points: Vec<Point>,
    layers: Vec<LayerRecord>,
}

/// Result of a backward sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Adjoints {
    pub params: Vec<f64>,
    /// `d objective / d x` for each point.
    pub inputs: Vec<Point>,
}

impl<'a> GradientTape<'a> {
    pub fn record(fam: &'a NetworkFamily, points: &[Point]) -> Self {
        let arch = &fam.arch;
        let dim = arch.input_dim();
        let offsets = arch.layer_offsets();
        let n = points.len();
        let depth = arch.depth();
        let mut layers: Vec<LayerRecord> = Vec::with_capacity(depth);

        let mut input_a = vec![0.0; n * dim];
        let mut input_adot = vec![0.0; n * dim * dim];
        for (p, x) in points.iter().enumerate() {
            for k in 0..dim {
                input_a[p * dim + k] = x[k];
                input_adot[(p * dim + k) * dim + k] = 1.0;
            }
        }

        for l in 0..depth {
            let (n_in, n_out) = (arch.widths[l], arch.widths[l + 1]);
            let o = offsets[l];
            let w = &fam.params[o..o + n_in * n_out];
            let b = &fam.params[o + n_in * n_out..o + n_in * n_out + n_out];
            let (prev_a, prev_adot) = match layers.last() {
                Some(r) => (&r.a, &r.adot),
                None => (&input_a, &input_adot),
            };
            let mut z = vec![0.0; n * n_out];
            let mut zdot = vec![0.0; n * n_out * dim];
            for p in 0..n {
                let ain = &prev_a[p * n_in..(p + 1) * n_in];
                let adin = &prev_adot[p * n_in * dim..(p + 1) * n_in * dim];
                for i in 0..n_out {
                    let row = &w[i * n_in..(i + 1) * n_in];
                    let mut s = b[i];
                    let mut t = [0.0; 2];
                    for j in 0..n_in {
                        s += row[j] * ain[j];
                        for k in 0..dim {
                            t[k] += row[j] * adin[j * dim + k];
                        }
                    }
                    z[p * n_out + i] = s;
                    zdot[(p * n_out + i) * dim..(p * n_out + i + 1) * dim].copy_from_slice(&t[..dim]);
                }
            }
            let (a, adot) = if l + 1 == depth {
                (z.clone(), zdot.clone())
            } else {
                let mut a = vec![0.0; n * n_out];
                let mut adot = vec![0.0; n * n_out * dim];
                for idx in 0..n * n_out {
                    let (s, d, _) = arch.activation.eval(z[idx]);
                    a[idx] = s;
                    for k in 0..dim {
                        adot[idx * dim + k] = d * zdot[idx * dim + k];
                    }
                }
                (a, adot)
            };
            layers.push(LayerRecord {
                width: n_out,
                z,
                zdot,
                a,
                adot,
            });
        }

        GradientTape {
            fam,
            offsets,
            dim,
            points: points.to_vec(),
            layers,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Network value and spatial gradient at point `p`.
    pub fn output(&self, p: usize) -> Eval {
        let last = self.layers.last().expect("network has layers");
        let mut grad = [0.0; 2];
        grad[..self.dim].copy_from_slice(&last.zdot[p * self.dim..(p + 1) * self.dim]);
        Eval::new(last.z[p], grad)
    }

    /// Reverse sweep with one seed per recorded point.
    pub fn backward(&self, seeds: &[Seed]) -> Adjoints {
        assert_eq!(seeds.len(), self.points.len(), "one seed per point");
        let fam = self.fam;
        let arch = &fam.arch;
        let dim = self.dim;
        let n = self.points.len();
        let depth = arch.depth();
        let mut grad = vec![0.0; fam.params.len()];
        let mut inputs = vec![[0.0; 2]; n];

        // adjoints of the current layer's pre-activations and their tangents
        let mut zbar: Vec<f64> = seeds.iter().map(|s| s.value).collect();
        let mut zdbar: Vec<f64> = seeds.iter().flat_map(|s| s.grad[..dim].to_vec()).collect();

        for l in (0..depth).rev() {
            let (n_in, n_out) = (arch.widths[l], arch.widths[l + 1]);
            let o = self.offsets[l];
            let w = &fam.params[o..o + n_in * n_out];
            let input_a: Vec<f64>;
            let input_adot: Vec<f64>;
            let (prev_a, prev_adot): (&[f64], &[f64]) = if l == 0 {
                input_a = self.points.iter().flat_map(|x| x[..dim].to_vec()).collect();
                input_adot = (0..n)
                    .flat_map(|_| (0..dim * dim).map(|i| if i / dim == i % dim { 1.0 } else { 0.0 }))
                    .collect();
                (&input_a, &input_adot)
            } else {
                (&self.layers[l - 1].a, &self.layers[l - 1].adot)
            };

            {
                let (gw, gb) = grad[o..o + n_in * n_out + n_out].split_at_mut(n_in * n_out);
                for p in 0..n {
                    let ain = &prev_a[p * n_in..(p + 1) * n_in];
                    let adin = &prev_adot[p * n_in * dim..(p + 1) * n_in * dim];
                    for i in 0..n_out {
                        let zb = zbar[p * n_out + i];
                        let zdb = &zdbar[(p * n_out + i) * dim..(p * n_out + i + 1) * dim];
                        gb[i] += zb;
                        let row = &mut gw[i * n_in..(i + 1) * n_in];
                        for j in 0..n_in {
                            let mut s = zb * ain[j];
                            for k in 0..dim {
                                s += zdb[k] * adin[j * dim + k];
                            }
                            row[j] += s;
                        }
                    }
                }
            }

            // adjoints of the layer input
            let mut abar = vec![0.0; n * n_in];
            let mut adbar = vec![0.0; n * n_in * dim];
            for p in 0..n {
                for i in 0..n_out {
                    let zb = zbar[p * n_out + i];
                    let zdb = &zdbar[(p * n_out + i) * dim..(p * n_out + i + 1) * dim];
                    let row = &w[i * n_in..(i + 1) * n_in];
                    for j in 0..n_in {
                        abar[p * n_in + j] += row[j] * zb;
                        for k in 0..dim {
                            adbar[(p * n_in + j) * dim + k] += row[j] * zdb[k];
                        }
                    }
                }
            }

            if l == 0 {
                for p in 0..n {
                    for k in 0..dim {
                        inputs[p][k] = abar[p * n_in + k];
                    }
                }
                break;
            }

            // through the activation of layer l - 1
            let rec = &self.layers[l - 1];
            let mut nz = vec![0.0; n * n_in];
            let mut nzd = vec![0.0; n * n_in * dim];
            for idx in 0..n * n_in {
                let (_, d1, d2) = arch.activation.eval(rec.z[idx]);
                let mut s = abar[idx] * d1;
                for k in 0..dim {
                    let adb = adbar[idx * dim + k];
                    s += adb * d2 * rec.zdot[idx * dim + k];
                    nzd[idx * dim + k] = adb * d1;
                }
                nz[idx] = s;
            }
            debug_assert_eq!(rec.width, n_in);
            zbar = nz;
            zdbar = nzd;
        }

        Adjoints {
            params: grad,
            inputs,
        }
    }

    /// `grad_x u` at point `p` by a reverse sweep seeded with `du = 1`.
    pub fn input_gradient(&self, p: usize) -> Point {
        let mut seeds = vec![Seed::default(); self.points.len()];
        seeds[p].value = 1.0;
        self.backward(&seeds).inputs[p]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::network::Architecture;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rel(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt().max(1e-12);
        num / den
    }

    #[test]
    fn reverse_input_gradient_matches_forward_tangent() {
        let fam = NetworkFamily::init("2-5-4-1:tanh".parse().unwrap(), 9);
        let pts = [[0.2, 0.7], [0.9, 0.1]];
        let tape = GradientTape::record(&fam, &pts);
        for p in 0..2 {
            let fwd = tape.output(p).grad;
            let rev = tape.input_gradient(p);
            assert!((fwd[0] - rev[0]).abs() < 1e-14 && (fwd[1] - rev[1]).abs() < 1e-14);
        }
    }

    #[test]
    fn mixed_objective_gradient_matches_finite_differences() {
        // objective = sum_p c_p u(x_p) + g_p . grad u(x_p)
        let arch: Architecture = "2-6-5-1:tanh".parse().unwrap();
        let fam = NetworkFamily::init(arch.clone(), 4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<Point> = (0..4).map(|_| [rng.gen(), rng.gen()]).collect();
        let seeds: Vec<Seed> = (0..4)
            .map(|_| Seed {
                value: rng.gen_range(-1.0..1.0),
                grad: [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
            })
            .collect();
        let objective = |params: &[f64]| {
            let f = NetworkFamily::with_params(arch.clone(), params.to_vec()).unwrap();
            let t = GradientTape::record(&f, &pts);
            (0..pts.len())
                .map(|p| {
                    let e = t.output(p);
                    seeds[p].value * e.value + seeds[p].grad[0] * e.grad[0] + seeds[p].grad[1] * e.grad[1]
                })
                .sum::<f64>()
        };
        let ad = GradientTape::record(&fam, &pts).backward(&seeds).params;
        let step = 1e-5;
        let fd: Vec<f64> = (0..fam.params.len())
            .map(|i| {
                let mut p = fam.params.clone();
                p[i] += step;
                let up = objective(&p);
                p[i] -= 2.0 * step;
                (up - objective(&p)) / (2.0 * step)
            })
            .collect();
        assert!(rel(&ad, &fd) < 1e-7, "{}", rel(&ad, &fd));
    }
}
