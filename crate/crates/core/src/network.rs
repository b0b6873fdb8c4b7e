//! Binary convolutional networks: description, reference evaluation, and
//! compilation to one OBDD per output.
//!
//! A network reads a single-channel `h×w` bitmap and applies three kinds of
//! layers, none of them padded:
//!
//! * `conv_step`: every filter is a threshold unit over a `c×fh×fw` window,
//!   swept with the given stride; each filter contributes one output channel.
//! * `maxpool_or`: per channel, the maximum of 0/1 values is their disjunction.
//! * `dense_step`: threshold units over the flattened input.
//!
//! Flattening is channel-major then raster: wire `(c, r, col)` of a `C×H×W`
//! map has index `(c·H + r)·W + col`.
//!
//! Model files are JSON:
//!
//! ```json
//! {
//!   "input": {"h": 4, "w": 4},
//!   "outputs": 1,
//!   "layers": [
//!     {"type": "conv_step", "filter": {"h": 2, "w": 2}, "stride": 2,
//!      "filters": [{"weights": [[[1, 1], [1, 1]]], "bias": -2}]},
//!     {"type": "maxpool_or", "window": {"h": 2, "w": 2}, "stride": 2},
//!     {"type": "dense_step", "weights": [[1]], "bias": [-1]}
//!   ]
//! }
//! ```
//!
//! Conv filter weights are indexed `[channel][row][col]`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{Instance, VarId};
use crate::neuron::{
    compile_exact, compile_pseudo, identity_binding, quantize, ExactUnit, LinearThresholdUnit, NeuronError, RoundMode,
};
use crate::obdd::{Manager, NodeRef, ObddError};

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("model file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("layer {layer}: {msg}")]
    Shape { layer: usize, msg: String },
    #[error("output count {declared} does not match the final layer's {actual} wires")]
    OutputCount { declared: usize, actual: usize },
    #[error("image has {got} pixels, network expects {expected}")]
    InputSize { expected: usize, got: usize },
    #[error("input order: {0}")]
    Order(String),
    #[error("layer {layer}: {source}")]
    Neuron { layer: usize, source: NeuronError },
    #[error(
        "node budget of {budget} exceeded in layer {layer} \
         ({completed_layers} layers done, {nodes} nodes built)"
    )]
    Budget { layer: usize, completed_layers: usize, nodes: usize, budget: usize },
    #[error(transparent)]
    Obdd(ObddError),
}

pub type Result<T> = std::result::Result<T, NetworkError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub h: usize,
    pub w: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Filter {
    pub weights: Vec<Vec<Vec<f64>>>,
    pub bias: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Layer {
    ConvStep { filter: Dims, stride: usize, filters: Vec<Filter> },
    MaxpoolOr { window: Dims, stride: usize },
    DenseStep { weights: Vec<Vec<f64>>, bias: Vec<f64> },
}

/// Channels × height × width of a feature map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    pub c: usize,
    pub h: usize,
    pub w: usize,
}

impl Shape {
    pub fn size(&self) -> usize {
        self.c * self.h * self.w
    }

    fn index(&self, c: usize, r: usize, col: usize) -> usize {
        (c * self.h + r) * self.w + col
    }
}

/// A validated network description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input: Dims,
    pub outputs: usize,
    pub layers: Vec<Layer>,
    #[serde(skip)]
    shapes: Vec<Shape>,
}

/// Positions of one layer's input map that no window reads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Uncovered {
    pub layer: usize,
    /// `(channel, row, col)` triples.
    pub positions: Vec<(usize, usize, usize)>,
}

fn windowed(input: Shape, win: Dims, stride: usize) -> (usize, usize) {
    ((input.h - win.h) / stride + 1, (input.w - win.w) / stride + 1)
}

pub fn load_spec(text: &str) -> Result<NetworkSpec> {
    let spec: NetworkSpec = serde_json::from_str(text)?;
    NetworkSpec::new(spec.input, spec.layers, spec.outputs)
}

impl NetworkSpec {
    pub fn new(input: Dims, layers: Vec<Layer>, outputs: usize) -> Result<NetworkSpec> {
        let shape_err = |layer, msg: String| NetworkError::Shape { layer, msg };
        if input.h == 0 || input.w == 0 {
            return Err(shape_err(0, "input must be at least 1×1".into()));
        }
        let mut shapes = vec![Shape { c: 1, h: input.h, w: input.w }];
        for (i, layer) in layers.iter().enumerate() {
            let s = *shapes.last().unwrap();
            let next = match layer {
                Layer::ConvStep { filter, stride, filters } => {
                    check_window(i, s, *filter, *stride, "filter")?;
                    if filters.is_empty() {
                        return Err(shape_err(i, "conv layer has no filters".into()));
                    }
                    for (k, f) in filters.iter().enumerate() {
                        let ok = f.weights.len() == s.c
                            && f.weights
                                .iter()
                                .all(|ch| ch.len() == filter.h && ch.iter().all(|row| row.len() == filter.w));
                        if !ok {
                            return Err(shape_err(
                                i,
                                format!("filter {} weights must be {}×{}×{}", k, s.c, filter.h, filter.w),
                            ));
                        }
                        let finite = f.bias.is_finite() && f.weights.iter().flatten().flatten().all(|w| w.is_finite());
                        if !finite {
                            return Err(shape_err(i, format!("filter {} has non-finite values", k)));
                        }
                    }
                    let (h, w) = windowed(s, *filter, *stride);
                    Shape { c: filters.len(), h, w }
                }
                Layer::MaxpoolOr { window, stride } => {
                    check_window(i, s, *window, *stride, "window")?;
                    let (h, w) = windowed(s, *window, *stride);
                    Shape { c: s.c, h, w }
                }
                Layer::DenseStep { weights, bias } => {
                    if weights.is_empty() {
                        return Err(shape_err(i, "dense layer has no neurons".into()));
                    }
                    if let Some((k, row)) = weights.iter().enumerate().find(|(_, row)| row.len() != s.size()) {
                        return Err(shape_err(
                            i,
                            format!("neuron {} has {} weights, layer input has {} wires", k, row.len(), s.size()),
                        ));
                    }
                    if bias.len() != weights.len() {
                        return Err(shape_err(i, format!("{} biases for {} neurons", bias.len(), weights.len())));
                    }
                    if !weights.iter().flatten().chain(bias).all(|w| w.is_finite()) {
                        return Err(shape_err(i, "non-finite weight or bias".into()));
                    }
                    Shape { c: weights.len(), h: 1, w: 1 }
                }
            };
            shapes.push(next);
        }
        let actual = shapes.last().unwrap().size();
        if actual != outputs {
            return Err(NetworkError::OutputCount { declared: outputs, actual });
        }
        Ok(NetworkSpec { input, outputs, layers, shapes })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn num_inputs(&self) -> usize {
        self.input.h * self.input.w
    }

    /// Shape of the map entering layer `i`; `shape(layers.len())` is the output.
    pub fn shape(&self, i: usize) -> Shape {
        self.shapes[i]
    }

    /// Windowed layers whose stride and size leave input positions unread.
    pub fn uncovered(&self) -> Vec<Uncovered> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            let (win, stride) = match layer {
                Layer::ConvStep { filter, stride, .. } => (*filter, *stride),
                Layer::MaxpoolOr { window, stride } => (*window, *stride),
                Layer::DenseStep { .. } => continue,
            };
            let s = self.shapes[i];
            let o = self.shapes[i + 1];
            let covered = |len: usize, outs: usize, span: usize| -> Vec<bool> {
                let mut v = vec![false; len];
                for k in 0..outs {
                    v[k * stride..k * stride + span].iter_mut().for_each(|b| *b = true);
                }
                v
            };
            let rows = covered(s.h, o.h, win.h);
            let cols = covered(s.w, o.w, win.w);
            let mut positions = Vec::new();
            for c in 0..s.c {
                for (r, &row_read) in rows.iter().enumerate() {
                    for (col, &col_read) in cols.iter().enumerate() {
                        if !row_read || !col_read {
                            positions.push((c, r, col));
                        }
                    }
                }
            }
            if !positions.is_empty() {
                out.push(Uncovered { layer: i, positions });
            }
        }
        out
    }

    /// Input pixels the first layer never reads.
    pub fn uncovered_inputs(&self) -> Vec<VarId> {
        match self.uncovered().first() {
            Some(u) if u.layer == 0 => {
                u.positions.iter().map(|&(_, r, c)| VarId((r * self.input.w + c) as u32)).collect()
            }
            _ => Vec::new(),
        }
    }

    /// The same network with every neuron replaced by its quantized integer
    /// version (weights `round(10^d·w)`, bias `-round(10^d·(-b))`).
    pub fn quantized(&self, digits: u32, mode: RoundMode) -> Result<NetworkSpec> {
        let q = |layer: usize, weights: Vec<f64>, bias: f64| -> Result<(Vec<f64>, f64)> {
            let iu = quantize(&LinearThresholdUnit::new(weights, bias), digits, mode)
                .map_err(|source| NetworkError::Neuron { layer, source })?;
            const EXACT: i64 = 1 << 53;
            if iu.magnitude() > EXACT {
                return Err(NetworkError::Neuron { layer, source: NeuronError::QuantizeOverflow });
            }
            Ok((iu.weights().iter().map(|&w| w as f64).collect(), -(iu.threshold() as f64)))
        };
        let mut layers = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            layers.push(match layer {
                Layer::ConvStep { filter, stride, filters } => {
                    let mut out = Vec::new();
                    for f in filters {
                        let flat: Vec<f64> = f.weights.iter().flatten().flatten().copied().collect();
                        let (w, b) = q(i, flat, f.bias)?;
                        let mut it = w.into_iter();
                        let weights = f
                            .weights
                            .iter()
                            .map(|ch| ch.iter().map(|row| row.iter().map(|_| it.next().unwrap()).collect()).collect())
                            .collect();
                        out.push(Filter { weights, bias: b });
                    }
                    Layer::ConvStep { filter: *filter, stride: *stride, filters: out }
                }
                Layer::MaxpoolOr { .. } => layer.clone(),
                Layer::DenseStep { weights, bias } => {
                    let mut ws = Vec::new();
                    let mut bs = Vec::new();
                    for (row, &b) in weights.iter().zip(bias) {
                        let (w, b) = q(i, row.clone(), b)?;
                        ws.push(w);
                        bs.push(b);
                    }
                    Layer::DenseStep { weights: ws, bias: bs }
                }
            });
        }
        NetworkSpec::new(self.input, layers, self.outputs)
    }
}

fn check_window(layer: usize, s: Shape, win: Dims, stride: usize, what: &str) -> Result<()> {
    if stride == 0 {
        return Err(NetworkError::Shape { layer, msg: "stride must be positive".into() });
    }
    if win.h == 0 || win.w == 0 || win.h > s.h || win.w > s.w {
        return Err(NetworkError::Shape {
            layer,
            msg: format!("{} {}×{} does not fit a {}×{} map", what, win.h, win.w, s.h, s.w),
        });
    }
    Ok(())
}

// ---- reference evaluation ----

enum EvalLayer {
    Conv { filter: Dims, stride: usize, units: Vec<ExactUnit> },
    Pool { window: Dims, stride: usize },
    Dense { units: Vec<ExactUnit> },
}

/// Bit-level evaluator with each neuron's exact parameters precomputed.
pub struct Evaluator {
    shapes: Vec<Shape>,
    layers: Vec<EvalLayer>,
}

impl NetworkSpec {
    pub fn evaluator(&self) -> Result<Evaluator> {
        let mut layers = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            let exact = |w: Vec<f64>, b: f64| {
                LinearThresholdUnit::new(w, b).exact().map_err(|source| NetworkError::Neuron { layer: i, source })
            };
            layers.push(match layer {
                Layer::ConvStep { filter, stride, filters } => EvalLayer::Conv {
                    filter: *filter,
                    stride: *stride,
                    units: filters
                        .iter()
                        .map(|f| exact(f.weights.iter().flatten().flatten().copied().collect(), f.bias))
                        .collect::<Result<_>>()?,
                },
                Layer::MaxpoolOr { window, stride } => EvalLayer::Pool { window: *window, stride: *stride },
                Layer::DenseStep { weights, bias } => EvalLayer::Dense {
                    units: weights.iter().zip(bias).map(|(w, &b)| exact(w.clone(), b)).collect::<Result<_>>()?,
                },
            });
        }
        Ok(Evaluator { shapes: self.shapes.clone(), layers })
    }
}

impl Evaluator {
    pub fn eval(&self, x: &Instance) -> Result<Vec<bool>> {
        let expected = self.shapes[0].size();
        if x.len() != expected {
            return Err(NetworkError::InputSize { expected, got: x.len() });
        }
        let mut cur = x.bits().to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let s = self.shapes[i];
            let o = self.shapes[i + 1];
            let mut next = Vec::with_capacity(o.size());
            match layer {
                EvalLayer::Conv { filter, stride, units } => {
                    let mut window = Vec::with_capacity(s.c * filter.h * filter.w);
                    for unit in units {
                        for orow in 0..o.h {
                            for ocol in 0..o.w {
                                window.clear();
                                for c in 0..s.c {
                                    for dr in 0..filter.h {
                                        for dc in 0..filter.w {
                                            let r = orow * stride + dr;
                                            let col = ocol * stride + dc;
                                            window.push(cur[s.index(c, r, col)]);
                                        }
                                    }
                                }
                                next.push(unit.fires(&window));
                            }
                        }
                    }
                }
                EvalLayer::Pool { window, stride } => {
                    for c in 0..s.c {
                        for orow in 0..o.h {
                            for ocol in 0..o.w {
                                let any = (0..window.h).any(|dr| {
                                    (0..window.w).any(|dc| cur[s.index(c, orow * stride + dr, ocol * stride + dc)])
                                });
                                next.push(any);
                            }
                        }
                    }
                }
                EvalLayer::Dense { units } => {
                    next.extend(units.iter().map(|u| u.fires(&cur)));
                }
            }
            cur = next;
        }
        Ok(cur)
    }
}

/// Evaluates the network on one image with exact threshold semantics.
pub fn forward_eval(spec: &NetworkSpec, x: &Instance) -> Result<Vec<bool>> {
    spec.evaluator()?.eval(x)
}

// ---- compilation ----

/// How each neuron is turned into a diagram.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    /// Exact compilation of the real weights (arity capped).
    Exact,
    /// Quantize to `digits` decimals, then pseudo-polynomial compilation.
    Digits { digits: u32, mode: RoundMode },
}

/// Global order of the input pixels in the output diagrams.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum InputOrder {
    #[default]
    RowMajor,
    ColumnMajor,
    /// Pixel variables listed from the top level down.
    Custom(Vec<VarId>),
}

#[derive(Debug, Clone)]
pub struct CompileOptions {
    pub precision: Precision,
    pub order: InputOrder,
    pub node_budget: Option<usize>,
    /// Compile each neuron over placeholders in reverse input order.
    pub reverse_placeholders: bool,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            precision: Precision::Exact,
            order: InputOrder::RowMajor,
            node_budget: None,
            reverse_placeholders: false,
        }
    }
}

pub struct CompiledNetwork {
    pub manager: Manager,
    pub outputs: Vec<NodeRef>,
    /// Neuron instances answered from the wire cache.
    pub cache_hits: usize,
}

enum Gate {
    Threshold { unit: usize, inputs: Vec<usize> },
    Or { inputs: Vec<usize> },
}

impl NetworkSpec {
    /// Distinct neurons of layer `i` and, per output wire, the gate that
    /// drives it.
    fn gates(&self, i: usize) -> (Vec<LinearThresholdUnit>, Vec<Gate>) {
        let s = self.shapes[i];
        let o = self.shapes[i + 1];
        let window = |win: Dims, stride: usize, chans: std::ops::Range<usize>, orow: usize, ocol: usize| {
            let mut inputs = Vec::new();
            for c in chans {
                for dr in 0..win.h {
                    for dc in 0..win.w {
                        inputs.push(s.index(c, orow * stride + dr, ocol * stride + dc));
                    }
                }
            }
            inputs
        };
        match &self.layers[i] {
            Layer::ConvStep { filter, stride, filters } => {
                let units = filters
                    .iter()
                    .map(|f| LinearThresholdUnit::new(f.weights.iter().flatten().flatten().copied().collect(), f.bias))
                    .collect();
                let mut gates = Vec::with_capacity(o.size());
                for unit in 0..filters.len() {
                    for orow in 0..o.h {
                        for ocol in 0..o.w {
                            gates.push(Gate::Threshold { unit, inputs: window(*filter, *stride, 0..s.c, orow, ocol) });
                        }
                    }
                }
                (units, gates)
            }
            Layer::MaxpoolOr { window: win, stride } => {
                let mut gates = Vec::with_capacity(o.size());
                for c in 0..s.c {
                    for orow in 0..o.h {
                        for ocol in 0..o.w {
                            gates.push(Gate::Or { inputs: window(*win, *stride, c..c + 1, orow, ocol) });
                        }
                    }
                }
                (Vec::new(), gates)
            }
            Layer::DenseStep { weights, bias } => {
                let units = weights.iter().zip(bias).map(|(w, &b)| LinearThresholdUnit::new(w.clone(), b)).collect();
                let gates =
                    (0..weights.len()).map(|unit| Gate::Threshold { unit, inputs: (0..s.size()).collect() }).collect();
                (units, gates)
            }
        }
    }

    fn input_levels(&self, order: &InputOrder) -> Result<Vec<VarId>> {
        let (h, w) = (self.input.h, self.input.w);
        Ok(match order {
            InputOrder::RowMajor => identity_binding(h * w),
            InputOrder::ColumnMajor => (0..w).flat_map(|c| (0..h).map(move |r| VarId((r * w + c) as u32))).collect(),
            InputOrder::Custom(v) => {
                if v.len() != h * w {
                    return Err(NetworkError::Order(format!("{} variables for {} pixels", v.len(), h * w)));
                }
                v.clone()
            }
        })
    }
}

/// Compiles every output of the network, layer by layer: each distinct
/// neuron is compiled once over placeholder variables, then composed with
/// the diagrams of the wires it reads.
pub fn compile_network(spec: &NetworkSpec, opts: &CompileOptions) -> Result<CompiledNetwork> {
    let levels = spec.input_levels(&opts.order)?;
    let mut base = Manager::with_order(&levels).map_err(|e| NetworkError::Order(e.to_string()))?;
    base.set_node_budget(opts.node_budget);
    let budget = opts.node_budget.unwrap_or(usize::MAX);

    let mut wires: Vec<NodeRef> = (0..spec.num_inputs())
        .map(|i| base.var(VarId(i as u32)))
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| budget_or(e, 0, 0, &base, budget))?;
    let mut cache: HashMap<(usize, usize, Vec<NodeRef>), NodeRef> = HashMap::new();
    let mut cache_hits = 0;

    for li in 0..spec.layers.len() {
        let fail = |e: ObddError, base: &Manager| budget_or(e, li, li, base, budget);
        let (units, gates) = spec.gates(li);
        let mut locals = Vec::with_capacity(units.len());
        for u in &units {
            let k = u.arity();
            let order: Vec<VarId> =
                if opts.reverse_placeholders { (0..k as u32).rev().map(VarId).collect() } else { identity_binding(k) };
            let mut local = Manager::with_order(&order).expect("permutation");
            let compiled = match opts.precision {
                // scaled decimals are exact integers; the Shannon expansion is only a fallback
                Precision::Exact => match u.exact().and_then(|e| e.to_int()) {
                    Ok(q) => compile_pseudo(&mut local, &q, &identity_binding(k)),
                    Err(_) => compile_exact(&mut local, u, &identity_binding(k)),
                },
                Precision::Digits { digits, mode } => {
                    quantize(u, digits, mode).and_then(|q| compile_pseudo(&mut local, &q, &identity_binding(k)))
                }
            };
            let root = compiled.map_err(|source| NetworkError::Neuron { layer: li, source })?;
            locals.push((local, root));
        }
        let mut next = Vec::with_capacity(gates.len());
        for gate in gates {
            let r = match gate {
                Gate::Threshold { unit, inputs } => {
                    let subs: Vec<NodeRef> = inputs.iter().map(|&i| wires[i]).collect();
                    let key = (li, unit, subs);
                    if let Some(&r) = cache.get(&key) {
                        cache_hits += 1;
                        r
                    } else {
                        let (local, root) = &locals[unit];
                        let r = base.compose(local, *root, &key.2).map_err(|e| fail(e, &base))?;
                        cache.insert(key, r);
                        r
                    }
                }
                Gate::Or { inputs } => {
                    let mut acc = NodeRef::FALSE;
                    for i in inputs {
                        acc = base.or(acc, wires[i]).map_err(|e| fail(e, &base))?;
                    }
                    acc
                }
            };
            next.push(r);
        }
        wires = next;
    }
    Ok(CompiledNetwork { manager: base, outputs: wires, cache_hits })
}

fn budget_or(e: ObddError, layer: usize, completed_layers: usize, base: &Manager, budget: usize) -> NetworkError {
    match e {
        ObddError::NodeBudgetExceeded { .. } => {
            NetworkError::Budget { layer, completed_layers, nodes: base.total_nodes(), budget }
        }
        other => NetworkError::Obdd(other),
    }
}
