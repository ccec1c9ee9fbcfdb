//! Dense f64 tensors with reverse-mode automatic differentiation.
//!
//! Each operation records its inputs and a backward closure; calling
//! [`Tensor::backward`] on a scalar walks the graph in reverse topological
//! order and accumulates exact analytic gradients into every reachable
//! tensor that requires them. Graphs are rebuilt per forward pass; only
//! parameters persist across passes.
//!
//! Values use shared storage behind locks so read-only forward passes can
//! run concurrently over the same parameters.

mod checkpoint;
pub mod gradcheck;
mod ops;
mod optim;

pub use checkpoint::{Checkpoint, CheckpointEntry, CheckpointError, CheckpointManifest};
pub(crate) use checkpoint::looks_like_checkpoint as checkpoint_magic_matches;
pub use optim::{uniform_init, zero_init, AdamConfig, AdamState, Parameter, TensorError};

use std::collections::HashSet;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

static NEXT_ID: AtomicU64 = AtomicU64::new(0);

type BackwardFn = Box<dyn Fn(&[f64]) + Send + Sync>;

struct Node {
    id: u64,
    shape: Vec<usize>,
    values: RwLock<Vec<f64>>,
    grad: Mutex<Option<Vec<f64>>>,
    requires_grad: bool,
    parents: Vec<Tensor>,
    backward: Option<BackwardFn>,
}

/// A dense multi-dimensional array of f64 with gradient bookkeeping.
#[derive(Clone)]
pub struct Tensor {
    node: Arc<Node>,
}

impl std::fmt::Debug for Tensor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Tensor")
            .field("shape", &self.node.shape)
            .field("requires_grad", &self.node.requires_grad)
            .finish()
    }
}

impl Tensor {
    fn make(
        shape: Vec<usize>,
        values: Vec<f64>,
        requires_grad: bool,
        parents: Vec<Tensor>,
        backward: Option<BackwardFn>,
    ) -> Tensor {
        assert_eq!(
            shape.iter().product::<usize>(),
            values.len(),
            "value count must equal the product of the shape"
        );
        Tensor {
            node: Arc::new(Node {
                id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
                shape,
                values: RwLock::new(values),
                grad: Mutex::new(None),
                requires_grad,
                parents,
                backward,
            }),
        }
    }

    /// A leaf tensor that does not participate in gradients.
    pub fn constant(shape: Vec<usize>, values: Vec<f64>) -> Tensor {
        Tensor::make(shape, values, false, Vec::new(), None)
    }

    /// A leaf tensor that accumulates gradients (parameters, gradcheck probes).
    pub fn variable(shape: Vec<usize>, values: Vec<f64>) -> Tensor {
        Tensor::make(shape, values, true, Vec::new(), None)
    }

    pub fn scalar(value: f64) -> Tensor {
        Tensor::constant(vec![1], vec![value])
    }

    pub(crate) fn from_op(
        shape: Vec<usize>,
        values: Vec<f64>,
        parents: Vec<Tensor>,
        backward: BackwardFn,
    ) -> Tensor {
        let requires = parents.iter().any(|p| p.requires_grad());
        let (parents, backward) = if requires {
            (parents, Some(backward))
        } else {
            (Vec::new(), None)
        };
        Tensor::make(shape, values, requires, parents, backward)
    }

    pub fn shape(&self) -> &[usize] {
        &self.node.shape
    }

    pub fn len(&self) -> usize {
        self.node.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn requires_grad(&self) -> bool {
        self.node.requires_grad
    }

    pub(crate) fn id(&self) -> u64 {
        self.node.id
    }

    /// Copy of the current values.
    pub fn values(&self) -> Vec<f64> {
        self.node.values.read().unwrap().clone()
    }

    /// The value of a scalar tensor.
    pub fn item(&self) -> f64 {
        assert_eq!(self.len(), 1, "item() requires a scalar tensor");
        self.node.values.read().unwrap()[0]
    }

    /// Replaces the stored values (same length). Used by the optimizer and
    /// by finite-difference probes; downstream tensors are not recomputed.
    pub fn set_values(&self, values: &[f64]) {
        let mut guard = self.node.values.write().unwrap();
        assert_eq!(guard.len(), values.len(), "set_values length mismatch");
        guard.copy_from_slice(values);
    }

    pub(crate) fn read_values(&self) -> std::sync::RwLockReadGuard<'_, Vec<f64>> {
        self.node.values.read().unwrap()
    }

    /// Copy of the accumulated gradient, if any.
    pub fn grad(&self) -> Option<Vec<f64>> {
        self.node.grad.lock().unwrap().clone()
    }

    /// Clears and returns the accumulated gradient.
    pub fn take_grad(&self) -> Option<Vec<f64>> {
        self.node.grad.lock().unwrap().take()
    }

    pub fn zero_grad(&self) {
        *self.node.grad.lock().unwrap() = None;
    }

    /// Adds `delta` into the gradient slot (allocating zeros first if empty).
    pub(crate) fn accumulate_grad(&self, delta: &[f64]) {
        if !self.node.requires_grad {
            return;
        }
        let mut guard = self.node.grad.lock().unwrap();
        let grad = guard.get_or_insert_with(|| vec![0.0; self.len()]);
        debug_assert_eq!(grad.len(), delta.len());
        for (g, d) in grad.iter_mut().zip(delta) {
            *g += d;
        }
    }

    /// Reverse-mode sweep from a scalar. Gradients accumulate into every
    /// reachable tensor with `requires_grad`; repeated calls without
    /// clearing keep accumulating.
    pub fn backward(&self) {
        assert_eq!(self.len(), 1, "backward() requires a scalar loss");
        if !self.node.requires_grad {
            return;
        }
        self.accumulate_grad(&[1.0]);

        // Children-first order over the requires-grad subgraph.
        let order = self.topo_order();
        for tensor in order.iter().rev() {
            let Some(backward) = tensor.node.backward.as_ref() else {
                continue;
            };
            let grad = tensor.node.grad.lock().unwrap().clone();
            if let Some(grad) = grad {
                backward(&grad);
            }
        }
        // Interior gradients are scratch space for the sweep; only leaves
        // keep accumulating across repeated backward calls.
        for tensor in &order {
            if tensor.node.backward.is_some() {
                tensor.zero_grad();
            }
        }
    }

    fn topo_order(&self) -> Vec<Tensor> {
        let mut order = Vec::new();
        let mut visited: HashSet<u64> = HashSet::new();
        let mut stack: Vec<(Tensor, bool)> = vec![(self.clone(), false)];
        while let Some((tensor, expanded)) = stack.pop() {
            if expanded {
                order.push(tensor);
                continue;
            }
            if !visited.insert(tensor.id()) {
                continue;
            }
            stack.push((tensor.clone(), true));
            for parent in &tensor.node.parents {
                if parent.requires_grad() && !visited.contains(&parent.id()) {
                    stack.push((parent.clone(), false));
                }
            }
        }
        order
    }
}

/// Row-major strides for a shape.
pub(crate) fn strides_of(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * shape[i + 1];
    }
    strides
}
