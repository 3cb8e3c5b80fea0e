//! Networks with learnable spline activations on every edge.
//!
//! Each edge carries its own activation: a weighted silu base plus a spline
//! in the shared grid's basis, scaled by a mix weight. A layer sums edge
//! activations into each output, and the network chains layers. Forward and
//! backward exist in a per-sample form (used for one-step forecasts and for
//! gradient checking) and a batched form used by the training loop; the
//! batched form reduces over samples with ordinary matrix products, so it is
//! deterministic for a fixed batch.

mod spline;

pub use spline::{bspline_basis, SplineGrid};

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{ArkanError, Result};

/// One learnable edge activation.
#[derive(Clone, Debug, PartialEq)]
pub struct KanEdge {
    /// Coefficients over the grid basis, length `grid.basis_count()`.
    pub spline_coeffs: Vec<f64>,
    /// Weight of the silu residual path.
    pub base_weight: f64,
    /// Output scale applied to base and spline together.
    pub mix_weight: f64,
}

/// `mix * (base * silu(x) + sum_c coeffs[c] * basis_c(x))`.
pub fn edge_eval(edge: &KanEdge, grid: &SplineGrid, x: f64) -> f64 {
    let basis = grid.basis(x);
    let spline: f64 = edge
        .spline_coeffs
        .iter()
        .zip(&basis)
        .map(|(c, b)| c * b)
        .sum();
    edge.mix_weight * (edge.base_weight * silu(x) + spline)
}

pub(crate) fn silu(x: f64) -> f64 {
    x * sigmoid(x)
}

pub(crate) fn silu_prime(x: f64) -> f64 {
    let s = sigmoid(x);
    s * (1.0 + x * (1.0 - s))
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// A dense layer of edges; edge `(i, j)` connects input `i` to output `j`
/// and lives at `edges[i * d_out + j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct KanLayer {
    d_in: usize,
    d_out: usize,
    edges: Vec<KanEdge>,
}

impl KanLayer {
    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn edge(&self, i: usize, j: usize) -> &KanEdge {
        &self.edges[i * self.d_out + j]
    }
}

/// A stack of spline-edge layers sharing one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct KanNetwork {
    widths: Vec<usize>,
    grid: SplineGrid,
    layers: Vec<KanLayer>,
}

/// Per-layer inputs captured by [`kan_forward`] for the backward pass.
#[derive(Clone, Debug)]
pub struct KanCache {
    layer_inputs: Vec<Vec<f64>>,
}

/// Gradients in the network's flat parameter layout, plus the gradient
/// with respect to the network input.
#[derive(Clone, Debug)]
pub struct KanGradients {
    pub params: Vec<f64>,
    pub input: Vec<f64>,
}

impl KanNetwork {
    /// Seeded initialization: base weights start at 1, spline coefficients
    /// at N(0, 0.1 / sqrt(basis count)), mix weights at N(0, 1 / sqrt(d_in))
    /// of their layer. Draws happen in flat parameter order (layers, then
    /// row-major edges, coefficients before the mix weight), so a seed pins
    /// every parameter.
    pub fn init(widths: &[usize], grid: SplineGrid, seed: u64) -> Result<Self> {
        if widths.len() < 2 {
            return Err(ArkanError::InvalidConfig(
                "network needs at least input and output widths".into(),
            ));
        }
        if widths.iter().any(|w| *w == 0) {
            return Err(ArkanError::InvalidConfig(
                "every network width must be positive".into(),
            ));
        }
        let nb = grid.basis_count();
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let coeff_dist = Normal::new(0.0, 0.1 / (nb as f64).sqrt()).expect("positive std");
        let mut layers = Vec::with_capacity(widths.len() - 1);
        for pair in widths.windows(2) {
            let (d_in, d_out) = (pair[0], pair[1]);
            let mix_dist = Normal::new(0.0, 1.0 / (d_in as f64).sqrt()).expect("positive std");
            let mut edges = Vec::with_capacity(d_in * d_out);
            for _ in 0..d_in * d_out {
                let spline_coeffs = (0..nb).map(|_| coeff_dist.sample(&mut rng)).collect();
                edges.push(KanEdge {
                    spline_coeffs,
                    base_weight: 1.0,
                    mix_weight: mix_dist.sample(&mut rng),
                });
            }
            layers.push(KanLayer { d_in, d_out, edges });
        }
        Ok(KanNetwork {
            widths: widths.to_vec(),
            grid,
            layers,
        })
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn grid(&self) -> &SplineGrid {
        &self.grid
    }

    pub fn layers(&self) -> &[KanLayer] {
        &self.layers
    }

    /// Number of learnable parameters.
    pub fn param_count(&self) -> usize {
        let per_edge = self.grid.basis_count() + 2;
        self.widths
            .windows(2)
            .map(|pair| pair[0] * pair[1] * per_edge)
            .sum()
    }

    /// Copies every parameter into one vector: layers in order, edges
    /// row-major, each edge as `[spline_coeffs.., base_weight, mix_weight]`.
    pub fn flatten_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            for edge in &layer.edges {
                out.extend_from_slice(&edge.spline_coeffs);
                out.push(edge.base_weight);
                out.push(edge.mix_weight);
            }
        }
        out
    }

    /// Inverse of [`flatten_params`].
    pub fn set_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(ArkanError::ShapeMismatch {
                expected: self.param_count(),
                got: flat.len(),
            });
        }
        let nb = self.grid.basis_count();
        let mut at = 0;
        for layer in &mut self.layers {
            for edge in &mut layer.edges {
                edge.spline_coeffs.copy_from_slice(&flat[at..at + nb]);
                edge.base_weight = flat[at + nb];
                edge.mix_weight = flat[at + nb + 1];
                at += nb + 2;
            }
        }
        Ok(())
    }

    /// Batched forward pass over rows of `x`, returning `M x d_out`.
    pub(crate) fn forward_batch(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        Ok(self.forward_batch_cached(x)?.0)
    }

    pub(crate) fn forward_batch_cached(
        &self,
        x: &Array2<f64>,
    ) -> Result<(Array2<f64>, KanBatchCache)> {
        if x.ncols() != self.widths[0] {
            return Err(ArkanError::ShapeMismatch {
                expected: self.widths[0],
                got: x.ncols(),
            });
        }
        let nb = self.grid.basis_count();
        let m = x.nrows();
        let mut cache = KanBatchCache {
            basis: Vec::with_capacity(self.layers.len()),
            basis_deriv: Vec::with_capacity(self.layers.len()),
            silu_vals: Vec::with_capacity(self.layers.len()),
            silu_derivs: Vec::with_capacity(self.layers.len()),
        };
        let mut current = x.clone();
        for layer in &self.layers {
            let d_in = layer.d_in;
            let d_out = layer.d_out;
            let mut bflat = Array2::zeros((m, d_in * nb));
            let mut bpflat = Array2::zeros((m, d_in * nb));
            let mut s = Array2::zeros((m, d_in));
            let mut sp = Array2::zeros((m, d_in));
            for row in 0..m {
                for i in 0..d_in {
                    let v = current[[row, i]];
                    let (vals, ders) = self.grid.basis_and_derivative(v);
                    for c in 0..nb {
                        bflat[[row, i * nb + c]] = vals[c];
                        bpflat[[row, i * nb + c]] = ders[c];
                    }
                    s[[row, i]] = silu(v);
                    sp[[row, i]] = silu_prime(v);
                }
            }
            let mut a = Array2::zeros((d_in, d_out));
            let mut c_mat = Array2::zeros((d_in * nb, d_out));
            for i in 0..d_in {
                for j in 0..d_out {
                    let edge = layer.edge(i, j);
                    a[[i, j]] = edge.mix_weight * edge.base_weight;
                    for c in 0..nb {
                        c_mat[[i * nb + c, j]] = edge.mix_weight * edge.spline_coeffs[c];
                    }
                }
            }
            let out = s.dot(&a) + bflat.dot(&c_mat);
            cache.basis.push(bflat);
            cache.basis_deriv.push(bpflat);
            cache.silu_vals.push(s);
            cache.silu_derivs.push(sp);
            current = out;
        }
        Ok((current, cache))
    }

    /// Batched backward pass: gradients of a scalar loss whose per-output
    /// gradients are `out_grad`, in flat parameter order.
    pub(crate) fn backward_batch(&self, cache: &KanBatchCache, out_grad: &Array2<f64>) -> Vec<f64> {
        let nb = self.grid.basis_count();
        let mut flat = vec![0.0; self.param_count()];
        let layer_offsets: Vec<usize> = {
            let mut offs = Vec::with_capacity(self.layers.len());
            let mut at = 0;
            for layer in &self.layers {
                offs.push(at);
                at += layer.d_in * layer.d_out * (nb + 2);
            }
            offs
        };

        let mut g = out_grad.clone();
        for (idx, layer) in self.layers.iter().enumerate().rev() {
            let d_in = layer.d_in;
            let d_out = layer.d_out;
            let s = &cache.silu_vals[idx];
            let bflat = &cache.basis[idx];

            let p = s.t().dot(&g);
            let q = bflat.t().dot(&g);
            let base_at = layer_offsets[idx];
            for i in 0..d_in {
                for j in 0..d_out {
                    let edge = layer.edge(i, j);
                    let at = base_at + (i * d_out + j) * (nb + 2);
                    let mut mix_g = edge.base_weight * p[[i, j]];
                    for c in 0..nb {
                        let qv = q[[i * nb + c, j]];
                        flat[at + c] = edge.mix_weight * qv;
                        mix_g += edge.spline_coeffs[c] * qv;
                    }
                    flat[at + nb] = edge.mix_weight * p[[i, j]];
                    flat[at + nb + 1] = mix_g;
                }
            }

            if idx > 0 {
                let mut a = Array2::zeros((d_in, d_out));
                let mut c_mat = Array2::zeros((d_in * nb, d_out));
                for i in 0..d_in {
                    for j in 0..d_out {
                        let edge = layer.edge(i, j);
                        a[[i, j]] = edge.mix_weight * edge.base_weight;
                        for c in 0..nb {
                            c_mat[[i * nb + c, j]] = edge.mix_weight * edge.spline_coeffs[c];
                        }
                    }
                }
                let ga = g.dot(&a.t());
                let gc = g.dot(&c_mat.t());
                let sp = &cache.silu_derivs[idx];
                let bp = &cache.basis_deriv[idx];
                let m = g.nrows();
                let mut input_grad = Array2::zeros((m, d_in));
                for row in 0..m {
                    for i in 0..d_in {
                        let mut acc = sp[[row, i]] * ga[[row, i]];
                        for c in 0..nb {
                            acc += bp[[row, i * nb + c]] * gc[[row, i * nb + c]];
                        }
                        input_grad[[row, i]] = acc;
                    }
                }
                g = input_grad;
            }
        }
        flat
    }
}

/// Per-layer batched state captured by [`KanNetwork::forward_batch_cached`].
#[derive(Clone, Debug)]
pub(crate) struct KanBatchCache {
    basis: Vec<Array2<f64>>,
    basis_deriv: Vec<Array2<f64>>,
    silu_vals: Vec<Array2<f64>>,
    silu_derivs: Vec<Array2<f64>>,
}

/// Evaluates the network on one input vector, returning the output and the
/// cache [`kan_backward`] needs.
pub fn kan_forward(net: &KanNetwork, input: &[f64]) -> Result<(Vec<f64>, KanCache)> {
    if input.len() != net.widths[0] {
        return Err(ArkanError::ShapeMismatch {
            expected: net.widths[0],
            got: input.len(),
        });
    }
    let mut cache = KanCache {
        layer_inputs: Vec::with_capacity(net.layers.len()),
    };
    let mut current = input.to_vec();
    for layer in &net.layers {
        let mut out = vec![0.0; layer.d_out];
        for i in 0..layer.d_in {
            let x = current[i];
            let basis = net.grid.basis(x);
            let s = silu(x);
            for j in 0..layer.d_out {
                let edge = layer.edge(i, j);
                let spline: f64 = edge
                    .spline_coeffs
                    .iter()
                    .zip(&basis)
                    .map(|(c, b)| c * b)
                    .sum();
                out[j] += edge.mix_weight * (edge.base_weight * s + spline);
            }
        }
        cache.layer_inputs.push(current);
        current = out;
    }
    Ok((current, cache))
}

/// Backpropagates `upstream` (gradient at the network output) through the
/// cached forward pass.
pub fn kan_backward(net: &KanNetwork, cache: &KanCache, upstream: &[f64]) -> Result<KanGradients> {
    let d_last = *net.widths.last().expect("validated widths");
    if upstream.len() != d_last {
        return Err(ArkanError::ShapeMismatch {
            expected: d_last,
            got: upstream.len(),
        });
    }
    if cache.layer_inputs.len() != net.layers.len() {
        return Err(ArkanError::ShapeMismatch {
            expected: net.layers.len(),
            got: cache.layer_inputs.len(),
        });
    }
    let nb = net.grid.basis_count();
    let mut flat = vec![0.0; net.param_count()];
    let mut offsets = Vec::with_capacity(net.layers.len());
    {
        let mut at = 0;
        for layer in &net.layers {
            offsets.push(at);
            at += layer.d_in * layer.d_out * (nb + 2);
        }
    }

    let mut g = upstream.to_vec();
    for (idx, layer) in net.layers.iter().enumerate().rev() {
        let x = &cache.layer_inputs[idx];
        let mut down = vec![0.0; layer.d_in];
        for i in 0..layer.d_in {
            let (basis, deriv) = net.grid.basis_and_derivative(x[i]);
            let s = silu(x[i]);
            let sp = silu_prime(x[i]);
            for j in 0..layer.d_out {
                let edge = layer.edge(i, j);
                let at = offsets[idx] + (i * layer.d_out + j) * (nb + 2);
                let spline: f64 = edge
                    .spline_coeffs
                    .iter()
                    .zip(&basis)
                    .map(|(c, b)| c * b)
                    .sum();
                let spline_slope: f64 = edge
                    .spline_coeffs
                    .iter()
                    .zip(&deriv)
                    .map(|(c, d)| c * d)
                    .sum();
                let gj = g[j];
                for c in 0..nb {
                    flat[at + c] += edge.mix_weight * basis[c] * gj;
                }
                flat[at + nb] += edge.mix_weight * s * gj;
                flat[at + nb + 1] += (edge.base_weight * s + spline) * gj;
                down[i] += edge.mix_weight * (edge.base_weight * sp + spline_slope) * gj;
            }
        }
        g = down;
    }
    Ok(KanGradients {
        params: flat,
        input: g,
    })
}
