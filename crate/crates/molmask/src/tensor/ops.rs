//! Differentiable tensor operations.
//!
//! Backward closures capture parent handles plus whatever forward values
//! they need as plain copies, never the output tensor itself, so graphs
//! stay acyclic and drop cleanly.

use super::{strides_of, Tensor};

impl Tensor {
    fn dims2(&self) -> (usize, usize) {
        assert_eq!(self.shape().len(), 2, "expected a rank-2 tensor, got {:?}", self.shape());
        (self.shape()[0], self.shape()[1])
    }

    /// Matrix product of two rank-2 tensors.
    pub fn matmul(&self, rhs: &Tensor) -> Tensor {
        let (m, k) = self.dims2();
        let (k2, n) = rhs.dims2();
        assert_eq!(k, k2, "matmul: inner dims {k} vs {k2}");
        let a = self.read_values();
        let b = rhs.read_values();
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for p in 0..k {
                let aip = a[i * k + p];
                if aip == 0.0 {
                    continue;
                }
                let brow = &b[p * n..(p + 1) * n];
                let orow = &mut out[i * n..(i + 1) * n];
                for (o, &bv) in orow.iter_mut().zip(brow) {
                    *o += aip * bv;
                }
            }
        }
        drop(a);
        drop(b);
        let lhs = self.clone();
        let rhs = rhs.clone();
        Tensor::from_op(
            vec![m, n],
            out,
            vec![lhs.clone(), rhs.clone()],
            Box::new(move |g| {
                let need_a = lhs.requires_grad();
                let need_b = rhs.requires_grad();
                let mut da = vec![0.0; if need_a { m * k } else { 0 }];
                let mut db = vec![0.0; if need_b { k * n } else { 0 }];
                {
                    let a = lhs.read_values();
                    let b = rhs.read_values();
                    if need_a {
                        // dA = g @ B^T
                        for i in 0..m {
                            for j in 0..n {
                                let gij = g[i * n + j];
                                if gij == 0.0 {
                                    continue;
                                }
                                for p in 0..k {
                                    da[i * k + p] += gij * b[p * n + j];
                                }
                            }
                        }
                    }
                    if need_b {
                        // dB = A^T @ g
                        for i in 0..m {
                            for p in 0..k {
                                let aip = a[i * k + p];
                                if aip == 0.0 {
                                    continue;
                                }
                                let grow = &g[i * n..(i + 1) * n];
                                let drow = &mut db[p * n..(p + 1) * n];
                                for (d, &gv) in drow.iter_mut().zip(grow) {
                                    *d += aip * gv;
                                }
                            }
                        }
                    }
                }
                if need_a {
                    lhs.accumulate_grad(&da);
                }
                if need_b {
                    rhs.accumulate_grad(&db);
                }
            }),
        )
    }

    /// Rank-2 transpose.
    pub fn transpose(&self) -> Tensor {
        let (m, n) = self.dims2();
        let a = self.read_values();
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                out[j * m + i] = a[i * n + j];
            }
        }
        drop(a);
        let parent = self.clone();
        Tensor::from_op(
            vec![n, m],
            out,
            vec![parent.clone()],
            Box::new(move |g| {
                let mut da = vec![0.0; m * n];
                for j in 0..n {
                    for i in 0..m {
                        da[i * n + j] = g[j * m + i];
                    }
                }
                parent.accumulate_grad(&da);
            }),
        )
    }

    /// Elementwise sum of two same-shape tensors.
    pub fn add(&self, rhs: &Tensor) -> Tensor {
        assert_eq!(self.shape(), rhs.shape(), "add: shape mismatch");
        let out = {
            let a = self.read_values();
            let b = rhs.read_values();
            a.iter().zip(b.iter()).map(|(x, y)| x + y).collect()
        };
        let lhs = self.clone();
        let rhs = rhs.clone();
        Tensor::from_op(
            self.shape().to_vec(),
            out,
            vec![lhs.clone(), rhs.clone()],
            Box::new(move |g| {
                lhs.accumulate_grad(g);
                rhs.accumulate_grad(g);
            }),
        )
    }

    /// Elementwise difference of two same-shape tensors.
    pub fn sub(&self, rhs: &Tensor) -> Tensor {
        assert_eq!(self.shape(), rhs.shape(), "sub: shape mismatch");
        let out = {
            let a = self.read_values();
            let b = rhs.read_values();
            a.iter().zip(b.iter()).map(|(x, y)| x - y).collect()
        };
        let lhs = self.clone();
        let rhs = rhs.clone();
        Tensor::from_op(
            self.shape().to_vec(),
            out,
            vec![lhs.clone(), rhs.clone()],
            Box::new(move |g| {
                lhs.accumulate_grad(g);
                let neg: Vec<f64> = g.iter().map(|v| -v).collect();
                rhs.accumulate_grad(&neg);
            }),
        )
    }

    /// Elementwise (Hadamard) product of two same-shape tensors.
    pub fn mul(&self, rhs: &Tensor) -> Tensor {
        assert_eq!(self.shape(), rhs.shape(), "mul: shape mismatch");
        let out = {
            let a = self.read_values();
            let b = rhs.read_values();
            a.iter().zip(b.iter()).map(|(x, y)| x * y).collect()
        };
        let lhs = self.clone();
        let rhs = rhs.clone();
        Tensor::from_op(
            self.shape().to_vec(),
            out,
            vec![lhs.clone(), rhs.clone()],
            Box::new(move |g| {
                if lhs.requires_grad() {
                    let b = rhs.read_values();
                    let da: Vec<f64> = g.iter().zip(b.iter()).map(|(gv, bv)| gv * bv).collect();
                    drop(b);
                    lhs.accumulate_grad(&da);
                }
                if rhs.requires_grad() {
                    let a = lhs.read_values();
                    let db: Vec<f64> = g.iter().zip(a.iter()).map(|(gv, av)| gv * av).collect();
                    drop(a);
                    rhs.accumulate_grad(&db);
                }
            }),
        )
    }

    /// Multiplication by a constant.
    pub fn scale(&self, factor: f64) -> Tensor {
        let out = self.read_values().iter().map(|v| v * factor).collect();
        let parent = self.clone();
        Tensor::from_op(
            self.shape().to_vec(),
            out,
            vec![parent.clone()],
            Box::new(move |g| {
                let da: Vec<f64> = g.iter().map(|v| v * factor).collect();
                parent.accumulate_grad(&da);
            }),
        )
    }

    /// Adds a length-n vector to every row of an [m, n] tensor.
    pub fn add_row_broadcast(&self, row: &Tensor) -> Tensor {
        let (m, n) = self.dims2();
        assert_eq!(row.shape(), &[n], "add_row_broadcast: row length mismatch");
        let out = {
            let a = self.read_values();
            let b = row.read_values();
            let mut out = a.clone();
            for i in 0..m {
                for j in 0..n {
                    out[i * n + j] += b[j];
                }
            }
            out
        };
        let lhs = self.clone();
        let rhs = row.clone();
        Tensor::from_op(
            vec![m, n],
            out,
            vec![lhs.clone(), rhs.clone()],
            Box::new(move |g| {
                lhs.accumulate_grad(g);
                if rhs.requires_grad() {
                    let mut db = vec![0.0; n];
                    for i in 0..m {
                        for j in 0..n {
                            db[j] += g[i * n + j];
                        }
                    }
                    rhs.accumulate_grad(&db);
                }
            }),
        )
    }

    /// Multiplies every row of an [m, n] tensor by a length-n vector.
    pub fn mul_row_broadcast(&self, row: &Tensor) -> Tensor {
        let (m, n) = self.dims2();
        assert_eq!(row.shape(), &[n], "mul_row_broadcast: row length mismatch");
        let out = {
            let a = self.read_values();
            let b = row.read_values();
            let mut out = vec![0.0; m * n];
            for i in 0..m {
                for j in 0..n {
                    out[i * n + j] = a[i * n + j] * b[j];
                }
            }
            out
        };
        let lhs = self.clone();
        let rhs = row.clone();
        Tensor::from_op(
            vec![m, n],
            out,
            vec![lhs.clone(), rhs.clone()],
            Box::new(move |g| {
                if lhs.requires_grad() {
                    let b = rhs.read_values();
                    let mut da = vec![0.0; m * n];
                    for i in 0..m {
                        for j in 0..n {
                            da[i * n + j] = g[i * n + j] * b[j];
                        }
                    }
                    drop(b);
                    lhs.accumulate_grad(&da);
                }
                if rhs.requires_grad() {
                    let a = lhs.read_values();
                    let mut db = vec![0.0; n];
                    for i in 0..m {
                        for j in 0..n {
                            db[j] += g[i * n + j] * a[i * n + j];
                        }
                    }
                    drop(a);
                    rhs.accumulate_grad(&db);
                }
            }),
        )
    }

    /// Rectified linear unit.
    pub fn relu(&self) -> Tensor {
        let out = self.read_values().iter().map(|&v| v.max(0.0)).collect();
        let parent = self.clone();
        Tensor::from_op(
            self.shape().to_vec(),
            out,
            vec![parent.clone()],
            Box::new(move |g| {
                let a = parent.read_values();
                let da: Vec<f64> = g
                    .iter()
                    .zip(a.iter())
                    .map(|(gv, &av)| if av > 0.0 { *gv } else { 0.0 })
                    .collect();
                drop(a);
                parent.accumulate_grad(&da);
            }),
        )
    }

    /// Numerically stable softmax along `axis`. Outputs are strictly
    /// positive and sum to one along the reduced axis.
    pub fn softmax(&self, axis: usize) -> Tensor {
        let shape = self.shape().to_vec();
        assert!(axis < shape.len(), "softmax: axis {axis} out of range");
        let out = {
            let a = self.read_values();
            let mut out = a.clone();
            for_each_lane(&shape, axis, |base, stride, dim| {
                let mut max = f64::NEG_INFINITY;
                for s in 0..dim {
                    max = max.max(out[base + s * stride]);
                }
                let mut total = 0.0;
                for s in 0..dim {
                    let e = (out[base + s * stride] - max).exp();
                    out[base + s * stride] = e;
                    total += e;
                }
                for s in 0..dim {
                    out[base + s * stride] /= total;
                }
            });
            out
        };
        let parent = self.clone();
        let saved = out.clone();
        let bshape = shape.clone();
        Tensor::from_op(
            shape,
            out,
            vec![parent.clone()],
            Box::new(move |g| {
                let mut da = vec![0.0; saved.len()];
                for_each_lane(&bshape, axis, |base, stride, dim| {
                    let mut dot = 0.0;
                    for s in 0..dim {
                        let idx = base + s * stride;
                        dot += g[idx] * saved[idx];
                    }
                    for s in 0..dim {
                        let idx = base + s * stride;
                        da[idx] = saved[idx] * (g[idx] - dot);
                    }
                });
                parent.accumulate_grad(&da);
            }),
        )
    }

    /// Normalizes each lane along `axis` to zero mean and unit variance.
    /// Affine gain/bias are applied separately by the caller.
    pub fn layer_norm(&self, axis: usize, epsilon: f64) -> Tensor {
        let shape = self.shape().to_vec();
        assert!(axis < shape.len(), "layer_norm: axis {axis} out of range");
        let (out, inv_sigmas) = {
            let a = self.read_values();
            let mut out = vec![0.0; a.len()];
            let mut inv_sigmas = Vec::new();
            for_each_lane(&shape, axis, |base, stride, dim| {
                let mut mean = 0.0;
                for s in 0..dim {
                    mean += a[base + s * stride];
                }
                mean /= dim as f64;
                let mut var = 0.0;
                for s in 0..dim {
                    let d = a[base + s * stride] - mean;
                    var += d * d;
                }
                var /= dim as f64;
                let inv = 1.0 / (var + epsilon).sqrt();
                inv_sigmas.push(inv);
                for s in 0..dim {
                    out[base + s * stride] = (a[base + s * stride] - mean) * inv;
                }
            });
            (out, inv_sigmas)
        };
        let parent = self.clone();
        let saved = out.clone();
        let bshape = shape.clone();
        Tensor::from_op(
            shape,
            out,
            vec![parent.clone()],
            Box::new(move |g| {
                let mut da = vec![0.0; saved.len()];
                let mut lane = 0;
                for_each_lane(&bshape, axis, |base, stride, dim| {
                    let inv = inv_sigmas[lane];
                    lane += 1;
                    let d = dim as f64;
                    let mut g_mean = 0.0;
                    let mut gy_mean = 0.0;
                    for s in 0..dim {
                        let idx = base + s * stride;
                        g_mean += g[idx];
                        gy_mean += g[idx] * saved[idx];
                    }
                    g_mean /= d;
                    gy_mean /= d;
                    for s in 0..dim {
                        let idx = base + s * stride;
                        da[idx] = inv * (g[idx] - g_mean - saved[idx] * gy_mean);
                    }
                });
                parent.accumulate_grad(&da);
            }),
        )
    }

    /// Rows of an embedding table selected by token id.
    pub fn embedding_lookup(table: &Tensor, ids: &[usize]) -> Tensor {
        let (vocab, dim) = table.dims2();
        for &id in ids {
            assert!(id < vocab, "embedding_lookup: id {id} outside vocabulary {vocab}");
        }
        let out = {
            let t = table.read_values();
            let mut out = Vec::with_capacity(ids.len() * dim);
            for &id in ids {
                out.extend_from_slice(&t[id * dim..(id + 1) * dim]);
            }
            out
        };
        let parent = table.clone();
        let ids = ids.to_vec();
        Tensor::from_op(
            vec![ids.len(), dim],
            out,
            vec![parent.clone()],
            Box::new(move |g| {
                let mut dt = vec![0.0; vocab * dim];
                for (row, &id) in ids.iter().enumerate() {
                    for j in 0..dim {
                        dt[id * dim + j] += g[row * dim + j];
                    }
                }
                parent.accumulate_grad(&dt);
            }),
        )
    }

    /// Selects rows of an [m, n] tensor; rows may repeat.
    pub fn gather_rows(&self, rows: &[usize]) -> Tensor {
        let (m, n) = self.dims2();
        for &r in rows {
            assert!(r < m, "gather_rows: row {r} outside {m}");
        }
        let out = {
            let a = self.read_values();
            let mut out = Vec::with_capacity(rows.len() * n);
            for &r in rows {
                out.extend_from_slice(&a[r * n..(r + 1) * n]);
            }
            out
        };
        let parent = self.clone();
        let rows = rows.to_vec();
        Tensor::from_op(
            vec![rows.len(), n],
            out,
            vec![parent.clone()],
            Box::new(move |g| {
                let mut da = vec![0.0; m * n];
                for (out_row, &r) in rows.iter().enumerate() {
                    for j in 0..n {
                        da[r * n + j] += g[out_row * n + j];
                    }
                }
                parent.accumulate_grad(&da);
            }),
        )
    }

    /// Sums every element into a scalar.
    pub fn sum_all(&self) -> Tensor {
        let total: f64 = self.read_values().iter().sum();
        let parent = self.clone();
        let len = self.len();
        Tensor::from_op(
            vec![1],
            vec![total],
            vec![parent.clone()],
            Box::new(move |g| {
                parent.accumulate_grad(&vec![g[0]; len]);
            }),
        )
    }

    /// Sum along `axis`, dropping that axis (scalars become shape [1]).
    pub fn sum_axis(&self, axis: usize) -> Tensor {
        let shape = self.shape().to_vec();
        assert!(axis < shape.len(), "sum_axis: axis {axis} out of range");
        let mut out_shape: Vec<usize> = shape
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != axis)
            .map(|(_, &d)| d)
            .collect();
        if out_shape.is_empty() {
            out_shape.push(1);
        }
        let out = {
            let a = self.read_values();
            let mut out = vec![0.0; out_shape.iter().product()];
            let mut lane = 0;
            for_each_lane(&shape, axis, |base, stride, dim| {
                for s in 0..dim {
                    out[lane] += a[base + s * stride];
                }
                lane += 1;
            });
            out
        };
        let parent = self.clone();
        let bshape = shape.clone();
        Tensor::from_op(
            out_shape,
            out,
            vec![parent.clone()],
            Box::new(move |g| {
                let mut da = vec![0.0; bshape.iter().product()];
                let mut lane = 0;
                for_each_lane(&bshape, axis, |base, stride, dim| {
                    for s in 0..dim {
                        da[base + s * stride] = g[lane];
                    }
                    lane += 1;
                });
                parent.accumulate_grad(&da);
            }),
        )
    }

    /// Mean of every element as a scalar.
    pub fn mean_all(&self) -> Tensor {
        let len = self.len() as f64;
        self.sum_all().scale(1.0 / len)
    }

    /// Concatenates rank-2 tensors along `axis` (0 stacks rows, 1 widens).
    pub fn concat(parts: &[Tensor], axis: usize) -> Tensor {
        assert!(!parts.is_empty(), "concat: no tensors");
        assert!(axis < 2, "concat: axis must be 0 or 1");
        let dims: Vec<(usize, usize)> = parts.iter().map(|t| t.dims2()).collect();
        let (out_shape, out) = if axis == 0 {
            let n = dims[0].1;
            assert!(dims.iter().all(|&(_, w)| w == n), "concat axis 0: widths differ");
            let m: usize = dims.iter().map(|&(h, _)| h).sum();
            let mut out = Vec::with_capacity(m * n);
            for t in parts {
                out.extend_from_slice(&t.read_values());
            }
            (vec![m, n], out)
        } else {
            let m = dims[0].0;
            assert!(dims.iter().all(|&(h, _)| h == m), "concat axis 1: heights differ");
            let n: usize = dims.iter().map(|&(_, w)| w).sum();
            let mut out = vec![0.0; m * n];
            let mut col = 0;
            for (t, &(_, w)) in parts.iter().zip(&dims) {
                let v = t.read_values();
                for i in 0..m {
                    out[i * n + col..i * n + col + w].copy_from_slice(&v[i * w..(i + 1) * w]);
                }
                col += w;
            }
            (vec![m, n], out)
        };
        let parents: Vec<Tensor> = parts.to_vec();
        let back_parents = parents.clone();
        Tensor::from_op(
            out_shape.clone(),
            out,
            parents,
            Box::new(move |g| {
                if axis == 0 {
                    let mut offset = 0;
                    for (t, &(h, w)) in back_parents.iter().zip(&dims) {
                        t.accumulate_grad(&g[offset..offset + h * w]);
                        offset += h * w;
                    }
                } else {
                    let n = out_shape[1];
                    let m = out_shape[0];
                    let mut col = 0;
                    for (t, &(_, w)) in back_parents.iter().zip(&dims) {
                        if t.requires_grad() {
                            let mut dt = vec![0.0; m * w];
                            for i in 0..m {
                                dt[i * w..(i + 1) * w]
                                    .copy_from_slice(&g[i * n + col..i * n + col + w]);
                            }
                            t.accumulate_grad(&dt);
                        }
                        col += w;
                    }
                }
            }),
        )
    }

    /// Mean negative log-likelihood of `targets` under row-wise softmax of
    /// the logits. Fused log-softmax keeps the gradient exact and stable.
    pub fn cross_entropy_logits(&self, targets: &[usize]) -> Tensor {
        let (m, c) = self.dims2();
        assert_eq!(targets.len(), m, "cross_entropy: one target per row");
        for &t in targets {
            assert!(t < c, "cross_entropy: target {t} outside {c} classes");
        }
        let (loss, probs) = {
            let z = self.read_values();
            let mut probs = vec![0.0; m * c];
            let mut total = 0.0;
            for r in 0..m {
                let row = &z[r * c..(r + 1) * c];
                let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let mut denom = 0.0;
                for (j, &v) in row.iter().enumerate() {
                    let e = (v - max).exp();
                    probs[r * c + j] = e;
                    denom += e;
                }
                for j in 0..c {
                    probs[r * c + j] /= denom;
                }
                total += denom.ln() + max - row[targets[r]];
            }
            (total / m as f64, probs)
        };
        let parent = self.clone();
        let targets = targets.to_vec();
        Tensor::from_op(
            vec![1],
            vec![loss],
            vec![parent.clone()],
            Box::new(move |g| {
                let scale = g[0] / m as f64;
                let mut dz = vec![0.0; m * c];
                for r in 0..m {
                    for j in 0..c {
                        let onehot = if j == targets[r] { 1.0 } else { 0.0 };
                        dz[r * c + j] = scale * (probs[r * c + j] - onehot);
                    }
                }
                parent.accumulate_grad(&dz);
            }),
        )
    }

    /// Pairwise gather: `out[i][j] = self[i][classes[i*n+j]]` for an [n, c]
    /// input and an n*n class matrix with entries below c.
    pub fn gather_pairs(&self, classes: &[u8], n: usize) -> Tensor {
        let (rows, c) = self.dims2();
        assert_eq!(rows, n, "gather_pairs: row count must equal n");
        assert_eq!(classes.len(), n * n, "gather_pairs: class matrix must be n*n");
        let out = {
            let a = self.read_values();
            let mut out = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    let cls = classes[i * n + j] as usize;
                    debug_assert!(cls < c);
                    out[i * n + j] = a[i * c + cls];
                }
            }
            out
        };
        let parent = self.clone();
        let classes = classes.to_vec();
        Tensor::from_op(
            vec![n, n],
            out,
            vec![parent.clone()],
            Box::new(move |g| {
                let mut da = vec![0.0; n * c];
                for i in 0..n {
                    for j in 0..n {
                        let cls = classes[i * n + j] as usize;
                        da[i * c + cls] += g[i * n + j];
                    }
                }
                parent.accumulate_grad(&da);
            }),
        )
    }

    /// Pairwise pool: `out[i][cls] = sum_j self[i][j] * [classes[i*n+j] == cls]`
    /// for an [n, n] input; the transpose of [`Tensor::gather_pairs`].
    pub fn pool_pairs(&self, classes: &[u8], class_count: usize) -> Tensor {
        let (n, n2) = self.dims2();
        assert_eq!(n, n2, "pool_pairs: input must be square");
        assert_eq!(classes.len(), n * n, "pool_pairs: class matrix must be n*n");
        let out = {
            let a = self.read_values();
            let mut out = vec![0.0; n * class_count];
            for i in 0..n {
                for j in 0..n {
                    let cls = classes[i * n + j] as usize;
                    debug_assert!(cls < class_count);
                    out[i * class_count + cls] += a[i * n + j];
                }
            }
            out
        };
        let parent = self.clone();
        let classes = classes.to_vec();
        Tensor::from_op(
            vec![n, class_count],
            out,
            vec![parent.clone()],
            Box::new(move |g| {
                let mut da = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..n {
                        let cls = classes[i * n + j] as usize;
                        da[i * n + j] = g[i * class_count + cls];
                    }
                }
                parent.accumulate_grad(&da);
            }),
        )
    }

    /// Sums selected rows per group: `out[r] = sum_{i in groups[r]} self[i]`.
    /// An empty group yields a zero row.
    pub fn grouped_row_sum(&self, groups: &[Vec<usize>]) -> Tensor {
        let (m, n) = self.dims2();
        for group in groups {
            for &i in group {
                assert!(i < m, "grouped_row_sum: row {i} outside {m}");
            }
        }
        let out = {
            let a = self.read_values();
            let mut out = vec![0.0; groups.len() * n];
            for (r, group) in groups.iter().enumerate() {
                for &i in group {
                    for j in 0..n {
                        out[r * n + j] += a[i * n + j];
                    }
                }
            }
            out
        };
        let parent = self.clone();
        let groups = groups.to_vec();
        Tensor::from_op(
            vec![groups.len(), n],
            out,
            vec![parent.clone()],
            Box::new(move |g| {
                let mut da = vec![0.0; m * n];
                for (r, group) in groups.iter().enumerate() {
                    for &i in group {
                        for j in 0..n {
                            da[i * n + j] += g[r * n + j];
                        }
                    }
                }
                parent.accumulate_grad(&da);
            }),
        )
    }
}

/// Visits every lane along `axis`: calls `f(base_offset, stride, dim)` once
/// per lane, where lane elements live at `base + s * stride` for `s < dim`.
fn for_each_lane(shape: &[usize], axis: usize, mut f: impl FnMut(usize, usize, usize)) {
    let strides = strides_of(shape);
    let dim = shape[axis];
    let stride = strides[axis];
    let mut index = vec![0usize; shape.len()];
    loop {
        let base: usize = index
            .iter()
            .zip(&strides)
            .enumerate()
            .filter(|&(i, _)| i != axis)
            .map(|(_, (&ix, &st))| ix * st)
            .sum();
        f(base, stride, dim);
        // Odometer over every axis except `axis`.
        let mut k = shape.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            if k == axis {
                continue;
            }
            index[k] += 1;
            if index[k] < shape[k] {
                break;
            }
            index[k] = 0;
        }
    }
}
