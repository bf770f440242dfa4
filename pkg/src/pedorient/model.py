"""The orientation network: forward pass, losses, training, and sweeps.

The architecture has a shared context encoder feeding two outputs:

* a 3D-dimension regressor (three linear outputs, meters), and
* a multi-bin orientation head emitting a (sin, cos) pair per bin.

With ``use_feedforward`` enabled, two processor stacks widen the head's
input: one consumes the raw 2D box dimensions, the other consumes the
*predicted* 3D dimensions behind a stop-gradient, so the orientation loss
can exploit the dimension estimates without disturbing them.  The plain
variant drops both processors and the head sees the encoder output alone.

The training loss is the sum of a squared-error dimension term, the
per-bin cosine-gap orientation term (with cross-bin exclusion voting
applied each forward pass), and optional squared consistency residuals
tying predictions to the projective box relation, weighted at 0.01 each.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .binning import (
    BinConfig,
    aggregate_orientation,
    exclusion_mask_batch,
    exclusion_vote,
    per_bin_global_angles,
    orientation_loss,
)
from .geometry import Dims2D, candidates_for_span, circ_abs_diff, implied_width_span, wrap_angle
from .kitti_io import TrainingSample
from .nn_core import (
    DenseLayer,
    LayerSpec,
    NonFiniteGradientError,
    Tape,
    dense_forward,
    finite_diff_check,
    init_params,
    sgd_step,
)

DEFAULT_SWEEP_FACTORS = tuple(np.linspace(0.1, 2.0, 20))


class TrainingDivergedError(RuntimeError):
    """Training hit a non-finite loss; carries the step and term values."""

    def __init__(self, step: int, terms: dict[str, float]):
        msg = ", ".join(f"{k}={v!r}" for k, v in terms.items())
        super().__init__(f"non-finite loss at step {step}: {msg}")
        self.step = step
        self.terms = terms


@dataclass(frozen=True)
class ModelConfig:
    """Architecture and training knobs.

    ``lr_schedule`` is a sequence of (steps, learning_rate) segments run in
    order; the default runs 600 steps at 1e-3 and 1400 at 1e-4 with batch
    size 32, a desk-scale rendition of the full-size recipe (batch 32,
    22500 steps, 1e-3 dropping to 1e-4 partway).
    """

    num_bins: int = 4
    context_width: int = 16
    encoder_hidden: tuple[int, int] = (64, 64)
    proc_hidden: tuple[int, int] = (512, 2048)
    head_hidden: int = 512
    use_feedforward: bool = True
    use_consistency_loss: bool = False
    consistency_weight: float = 0.01
    exclusion_tau: float = math.radians(15.0)
    teacher_force_dims3d: bool = False
    dims2d_scale: float = 0.01
    seed: int = 0
    batch_size: int = 32
    momentum: float = 0.9
    lr_schedule: tuple[tuple[int, float], ...] = ((600, 1e-3), (1400, 1e-4))

    def __post_init__(self):
        if self.num_bins < 1:
            raise ValueError(f"num_bins must be >= 1, got {self.num_bins}")
        if self.context_width < 3:
            raise ValueError(f"context_width must be >= 3, got {self.context_width}")
        if len(self.encoder_hidden) != 2 or len(self.proc_hidden) != 2:
            raise ValueError("encoder_hidden and proc_hidden must each name "
                             "exactly two layer widths")
        widths = (*self.encoder_hidden, *self.proc_hidden, self.head_hidden,
                  self.batch_size)
        if any(v < 1 for v in widths):
            raise ValueError("widths and batch_size must be >= 1")
        if self.consistency_weight < 0:
            raise ValueError("consistency_weight must be >= 0")
        if not (math.isfinite(self.exclusion_tau) and self.exclusion_tau > 0):
            raise ValueError("exclusion_tau must be finite and > 0")
        if not self.lr_schedule:
            raise ValueError("lr_schedule must have at least one segment")
        for steps, lr in self.lr_schedule:
            if steps < 0 or not (math.isfinite(lr) and lr > 0):
                raise ValueError(f"bad schedule segment ({steps}, {lr})")
        if not (0 <= self.momentum < 1):
            raise ValueError(f"momentum must be in [0, 1), got {self.momentum}")
        if self.dims2d_scale <= 0:
            raise ValueError("dims2d_scale must be > 0")

    def bin_config(self) -> BinConfig:
        return BinConfig.default(self.num_bins)

    def total_steps(self) -> int:
        return sum(steps for steps, _ in self.lr_schedule)

    def lr_at(self, step: int) -> float:
        done = 0
        for steps, lr in self.lr_schedule:
            done += steps
            if step < done:
                return lr
        return self.lr_schedule[-1][1]


def _stack_specs(cfg: ModelConfig) -> dict[str, list[LayerSpec]]:
    e0, e1 = cfg.encoder_hidden
    p0, p1 = cfg.proc_hidden
    specs = {
        "encoder": [LayerSpec(cfg.context_width, e0, "relu"),
                    LayerSpec(e0, e1, "relu")],
        "dims3d_regressor": [LayerSpec(e1, 3, "linear")],
    }
    head_in = e1
    if cfg.use_feedforward:
        specs["proc2d"] = [LayerSpec(2, p0, "relu"), LayerSpec(p0, p1, "relu")]
        specs["proc3d"] = [LayerSpec(3, p0, "relu"), LayerSpec(p0, p1, "relu")]
        head_in = e1 + 2 * p1
    specs["head"] = [LayerSpec(head_in, cfg.head_hidden, "relu"),
                     LayerSpec(cfg.head_hidden, 2 * cfg.num_bins, "linear")]
    return specs


@dataclass(eq=False)
class OrientationNet:
    """Initialized stacks of dense layers plus the config that shaped them."""

    cfg: ModelConfig
    encoder: list[DenseLayer]
    dims3d_regressor: list[DenseLayer]
    head: list[DenseLayer]
    proc2d: list[DenseLayer] | None = None
    proc3d: list[DenseLayer] | None = None

    def stacks(self) -> list[tuple[str, list[DenseLayer]]]:
        out = [("encoder", self.encoder), ("dims3d_regressor", self.dims3d_regressor)]
        if self.proc2d is not None:
            out.append(("proc2d", self.proc2d))
        if self.proc3d is not None:
            out.append(("proc3d", self.proc3d))
        out.append(("head", self.head))
        return out


def build_model(cfg: ModelConfig) -> OrientationNet:
    """Seeded construction; identical configs yield identical parameters."""
    specs = _stack_specs(cfg)
    stacks: dict[str, list[DenseLayer]] = {}
    for si, (name, layer_specs) in enumerate(specs.items()):
        stacks[name] = [init_params(spec, [cfg.seed, si, li])
                        for li, spec in enumerate(layer_specs)]
    return OrientationNet(
        cfg=cfg,
        encoder=stacks["encoder"],
        dims3d_regressor=stacks["dims3d_regressor"],
        head=stacks["head"],
        proc2d=stacks.get("proc2d"),
        proc3d=stacks.get("proc3d"),
    )


def named_parameters(model: OrientationNet) -> list[tuple[str, np.ndarray]]:
    """Flat (name, array) view of every parameter, in a stable order."""
    out = []
    for name, stack in model.stacks():
        for i, layer in enumerate(stack):
            out.append((f"{name}.{i}.weights", layer.weights))
            out.append((f"{name}.{i}.bias", layer.bias))
    return out


# ---------------------------------------------------------------------------
# Batching and the value-only forward pass
# ---------------------------------------------------------------------------


@dataclass
class Batch:
    """Column-major view of a list of samples."""

    context: np.ndarray  # (n, context_width)
    dims2d: np.ndarray   # (n, 2) as (h, w)
    dims3d: np.ndarray   # (n, 3) as (h1, w1, l1)
    theta: np.ndarray    # (n,)

    def __len__(self) -> int:
        return self.theta.shape[0]

    def take(self, idx) -> "Batch":
        return Batch(self.context[idx], self.dims2d[idx],
                     self.dims3d[idx], self.theta[idx])


def make_batch(samples) -> Batch:
    if not samples:
        raise ValueError("cannot batch an empty sample list")
    return Batch(
        context=np.stack([s.context for s in samples]),
        dims2d=np.array([[s.dims2d.h, s.dims2d.w] for s in samples]),
        dims3d=np.array([[s.dims3d.h1, s.dims3d.w1, s.dims3d.l1] for s in samples]),
        theta=np.array([s.theta for s in samples]),
    )


def _apply_stack(stack, x: np.ndarray) -> np.ndarray:
    for layer in stack:
        x = dense_forward(layer, x)
    return x


def forward_batch(model: OrientationNet, batch: Batch,
                  h1_feed_scale: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Value-only forward over a batch.

    Returns:
        (dims3d_pred (n, 3), bin_outputs (n, 2 * num_bins)).
    """
    cfg = model.cfg
    if batch.context.shape[1] != cfg.context_width:
        raise ValueError(
            f"context width {batch.context.shape[1]} != config {cfg.context_width}"
        )
    enc = _apply_stack(model.encoder, batch.context)
    dims_pred = _apply_stack(model.dims3d_regressor, enc)
    if cfg.use_feedforward:
        p2 = _apply_stack(model.proc2d, batch.dims2d * cfg.dims2d_scale)
        feed = batch.dims3d if cfg.teacher_force_dims3d else dims_pred
        if h1_feed_scale != 1.0:
            feed = feed.copy()
            feed[:, 0] *= h1_feed_scale
        p3 = _apply_stack(model.proc3d, feed)
        head_in = np.concatenate([enc, p2, p3], axis=1)
    else:
        head_in = enc
    return dims_pred, _apply_stack(model.head, head_in)


@dataclass
class ForwardResult:
    """Everything one forward pass produced for a single sample.

    ``theta_pred`` is None when any bin pair is exactly (0, 0) (degenerate,
    listed in ``degenerate_bins``) or when the surviving bins cancel.
    """

    dims3d_pred: np.ndarray
    bin_outputs: np.ndarray
    per_bin_angles: list[float] | None
    excluded: set[int]
    theta_pred: float | None
    degenerate_bins: tuple[int, ...] = ()


def forward(model: OrientationNet, sample: TrainingSample,
            cfg: ModelConfig | None = None,
            h1_feed_scale: float = 1.0) -> ForwardResult:
    """Single-sample forward pass: predict dims, decode, vote, aggregate."""
    cfg = model.cfg if cfg is None else cfg
    batch = make_batch([sample])
    dims_pred, bin_out = forward_batch(model, batch, h1_feed_scale)
    bcfg = cfg.bin_config()
    pairs = bin_out.reshape(bcfg.num_bins, 2)
    degenerate = tuple(
        i for i in range(bcfg.num_bins)
        if pairs[i, 0] == 0.0 and pairs[i, 1] == 0.0
    )
    if degenerate:
        return ForwardResult(dims_pred[0], pairs, None, set(), None, degenerate)
    angles = per_bin_global_angles(pairs, bcfg)
    excluded = exclusion_vote(angles, cfg.exclusion_tau)
    try:
        theta = aggregate_orientation(angles, excluded)
    except ValueError:
        theta = None
    return ForwardResult(dims_pred[0], pairs, angles, excluded, theta)


def predict_orientation(model: OrientationNet, sample: TrainingSample,
                        cfg: ModelConfig | None = None) -> tuple[float, ForwardResult]:
    """Forward pass returning the aggregated yaw, or raising if undefined."""
    result = forward(model, sample, cfg)
    if result.theta_pred is None:
        raise ValueError(
            f"orientation undefined: degenerate bins {result.degenerate_bins}"
            if result.degenerate_bins else
            "orientation undefined: surviving bin directions cancel"
        )
    return result.theta_pred, result


# ---------------------------------------------------------------------------
# Loss: per-sample reference implementation and batched tape graph
# ---------------------------------------------------------------------------


def total_loss(result: ForwardResult, sample: TrainingSample,
               cfg: ModelConfig) -> tuple[float, dict[str, float]]:
    """Per-sample loss and its breakdown, from a finished forward result.

    total = sum-of-squares dimension error
          + summed per-bin orientation terms over non-excluded bins
          + consistency_weight * (squared residual of predicted dims at the
            true yaw + squared residual of true dims at the predicted yaw),
            when consistency is enabled.
    """
    truth = np.array([sample.dims3d.h1, sample.dims3d.w1, sample.dims3d.l1])
    dims_term = float(((result.dims3d_pred - truth) ** 2).sum())
    orient_term = orientation_loss(result.bin_outputs, sample.theta,
                                   cfg.bin_config(), result.excluded)
    terms = {"dims": dims_term, "orientation": orient_term, "consistency": 0.0}
    if cfg.use_consistency_loss:
        h, w = sample.dims2d.h, sample.dims2d.w
        h1p, w1p, l1p = result.dims3d_pred
        span_pred = w1p * abs(math.sin(sample.theta)) + l1p * abs(math.cos(sample.theta))
        resid_dims = h * span_pred - w * h1p
        if result.theta_pred is None:
            raise ValueError("consistency term undefined without a decoded yaw")
        span_true = (sample.dims3d.w1 * abs(math.sin(result.theta_pred))
                     + sample.dims3d.l1 * abs(math.cos(result.theta_pred)))
        resid_orient = h * span_true - w * sample.dims3d.h1
        terms["consistency"] = cfg.consistency_weight * (resid_dims ** 2 + resid_orient ** 2)
    total = terms["dims"] + terms["orientation"] + terms["consistency"]
    return total, terms


@dataclass
class LossGraph:
    """A built tape with handles into it.

    ``proc3d_feed`` holds the values that entered the dimension processor
    behind the stop-gradient (None when the path does not exist or was
    teacher forced); freezing it makes the loss differentiable-equivalent
    to what training backpropagates.
    """

    tape: Tape
    loss: int
    terms: dict[str, int]
    param_nodes: list[tuple[str, int, np.ndarray]]
    include_mask: np.ndarray
    proc3d_feed: np.ndarray | None = None

    def loss_value(self) -> float:
        return float(self.tape.value(self.loss)[0, 0])

    def term_values(self) -> dict[str, float]:
        return {k: float(self.tape.value(v)[0, 0]) for k, v in self.terms.items()}


def build_loss_graph(model: OrientationNet, batch: Batch,
                     include_mask: np.ndarray | None = None,
                     terms: tuple[str, ...] = ("dims", "orientation", "consistency"),
                     proc3d_feed: np.ndarray | None = None,
                     ) -> LossGraph:
    """Build the batched training graph and its scalar loss node.

    The consistency term is built only when requested by ``terms`` AND
    enabled in the config.  ``include_mask`` (n, num_bins) fixes the
    exclusion vote externally; by default the vote is recomputed from the
    current head outputs, once, before the loss nodes are laid down.
    Restricting ``terms`` isolates loss components for gradient analysis.
    ``proc3d_feed`` replaces the stop-gradient input of the dimension
    processor with a fixed constant, which finite-difference checking
    needs: the truncated path must not move under perturbation.
    """
    cfg = model.cfg
    bcfg = cfg.bin_config()
    t = Tape()
    param_nodes: list[tuple[str, int, np.ndarray]] = []
    stack_ids: dict[str, list[tuple[int, int, str]]] = {}
    for name, stack in model.stacks():
        ids = []
        for i, layer in enumerate(stack):
            wid = t.leaf(layer.weights, op="param")
            bid = t.leaf(layer.bias, op="param")
            param_nodes.append((f"{name}.{i}.weights", wid, layer.weights))
            param_nodes.append((f"{name}.{i}.bias", bid, layer.bias))
            ids.append((wid, bid, layer.activation))
        stack_ids[name] = ids

    def apply(name: str, x: int) -> int:
        for wid, bid, act in stack_ids[name]:
            x = t.affine(x, wid, bid)
            if act == "relu":
                x = t.relu(x)
        return x

    ctx = t.leaf(batch.context)
    enc = apply("encoder", ctx)
    dims_pred = apply("dims3d_regressor", enc)
    feed_values = None
    if cfg.use_feedforward:
        p2 = apply("proc2d", t.leaf(batch.dims2d * cfg.dims2d_scale))
        if cfg.teacher_force_dims3d:
            feed = t.leaf(batch.dims3d)
        elif proc3d_feed is not None:
            feed = t.leaf(np.asarray(proc3d_feed, dtype=float))
            feed_values = t.value(feed)
        else:
            feed = t.stop_gradient(dims_pred)
            feed_values = t.value(dims_pred)
        p3 = apply("proc3d", feed)
        head_in = t.concat([enc, p2, p3])
    else:
        head_in = enc
    head_out = apply("head", head_in)

    # Exclusion vote on the current outputs (value-level, held constant
    # through this graph).
    n = len(batch)
    offsets = np.array(bcfg.offsets)
    if include_mask is None:
        bin_vals = t.value(head_out).reshape(n, bcfg.num_bins, 2)
        angles = wrap_angle(np.arctan2(bin_vals[..., 0], bin_vals[..., 1]) + offsets)
        include_mask = exclusion_mask_batch(angles, cfg.exclusion_tau).astype(float)
    else:
        include_mask = np.asarray(include_mask, dtype=float)
        if include_mask.shape != (n, bcfg.num_bins):
            raise ValueError(f"include_mask shape {include_mask.shape} != ({n}, {bcfg.num_bins})")

    term_ids: dict[str, int] = {}

    if "dims" in terms:
        diff = t.sub(dims_pred, t.leaf(batch.dims3d))
        term_ids["dims"] = t.mean(t.rowsum(t.mul(diff, diff)))

    norm_pairs = [t.rownorm(t.cols(head_out, 2 * i, 2 * i + 2))
                  for i in range(bcfg.num_bins)]

    if "orientation" in terms:
        res = batch.theta[:, None] - offsets  # (n, B) residual targets
        target = np.stack([np.sin(res), np.cos(res)], axis=2)
        rows = None
        for i in range(bcfg.num_bins):
            dot = t.rowsum(t.cmul(norm_pairs[i], target[:, i, :]))
            term = t.cadd(t.cmul(dot, -1.0), 1.0)
            masked = t.cmul(term, include_mask[:, i:i + 1])
            rows = masked if rows is None else t.add(rows, masked)
        term_ids["orientation"] = t.mean(rows)

    if "consistency" in terms and cfg.use_consistency_loss:
        h = batch.dims2d[:, 0:1]
        w = batch.dims2d[:, 1:2]
        abs_sin = np.abs(np.sin(batch.theta))[:, None]
        abs_cos = np.abs(np.cos(batch.theta))[:, None]
        h1p = t.cols(dims_pred, 0, 1)
        w1p = t.cols(dims_pred, 1, 2)
        l1p = t.cols(dims_pred, 2, 3)
        span_pred = t.add(t.cmul(w1p, abs_sin), t.cmul(l1p, abs_cos))
        resid_d = t.sub(t.cmul(span_pred, h), t.cmul(h1p, w))
        cons = t.mean(t.mul(resid_d, resid_d))

        s_sum = c_sum = None
        for i in range(bcfg.num_bins):
            si = t.cols(norm_pairs[i], 0, 1)
            ci = t.cols(norm_pairs[i], 1, 2)
            so, co = math.sin(bcfg.offsets[i]), math.cos(bcfg.offsets[i])
            gs = t.add(t.cmul(si, co), t.cmul(ci, so))
            gc = t.sub(t.cmul(ci, co), t.cmul(si, so))
            ms = t.cmul(gs, include_mask[:, i:i + 1])
            mc = t.cmul(gc, include_mask[:, i:i + 1])
            s_sum = ms if s_sum is None else t.add(s_sum, ms)
            c_sum = mc if c_sum is None else t.add(c_sum, mc)
        direction = t.absval(t.rownorm(t.concat([s_sum, c_sum])))
        span_true = t.add(
            t.cmul(t.cols(direction, 0, 1), batch.dims3d[:, 1:2]),
            t.cmul(t.cols(direction, 1, 2), batch.dims3d[:, 2:3]),
        )
        resid_o = t.cadd(t.cmul(span_true, h), -(w * batch.dims3d[:, 0:1]))
        cons = t.add(cons, t.mean(t.mul(resid_o, resid_o)))
        term_ids["consistency"] = t.cmul(cons, cfg.consistency_weight)

    if not term_ids:
        raise ValueError(f"no loss terms to build from {terms!r}")
    loss = None
    for key in ("dims", "orientation", "consistency"):
        if key in term_ids:
            loss = term_ids[key] if loss is None else t.add(loss, term_ids[key])
    return LossGraph(t, loss, term_ids, param_nodes, include_mask, feed_values)


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


@dataclass
class TrainLogRow:
    step: int
    lr: float
    total: float
    dims: float
    orientation: float
    consistency: float


@dataclass
class TrainResult:
    model: OrientationNet
    log: list[TrainLogRow]


def train(samples, cfg: ModelConfig) -> TrainResult:
    """Train a freshly initialized model on the given samples.

    Fully deterministic for a fixed config and sample order: parameter
    initialization, batch sampling, and every update derive from
    ``cfg.seed``.

    Raises:
        TrainingDivergedError: as soon as any loss term goes non-finite.
    """
    data = make_batch(samples)
    model = build_model(cfg)
    arrays = [arr for _, arr in named_parameters(model)]
    velocities = [np.zeros_like(a) for a in arrays]
    rng = np.random.default_rng([cfg.seed, 1])
    log: list[TrainLogRow] = []
    for step in range(cfg.total_steps()):
        idx = rng.integers(0, len(data), size=cfg.batch_size)
        lg = build_loss_graph(model, data.take(idx))
        vals = lg.term_values()
        row = TrainLogRow(
            step=step,
            lr=cfg.lr_at(step),
            total=sum(vals.values()),
            dims=vals.get("dims", 0.0),
            orientation=vals.get("orientation", 0.0),
            consistency=vals.get("consistency", 0.0),
        )
        if not math.isfinite(row.total):
            raise TrainingDivergedError(step, vals)
        grads_by_node = lg.tape.backward(lg.loss)
        grads = [grads_by_node.get(nid, np.zeros_like(arr))
                 for _, nid, arr in lg.param_nodes]
        try:
            sgd_step(arrays, grads, velocities, row.lr, cfg.momentum)
        except NonFiniteGradientError as e:
            # Gradients can overflow a step before the logged loss does.
            raise TrainingDivergedError(step, vals) from e
        log.append(row)
    return TrainResult(model, log)


def evaluate_model(model: OrientationNet, samples, cfg: ModelConfig | None = None) -> dict:
    """Held-out metrics: validation loss (dims + orientation only) and MAE.

    Consistency terms are a training-time device and are not included in
    reported validation losses.  Samples whose decoded orientation is
    undefined (degenerate pairs or a cancelling aggregate) are skipped for
    the angular metrics and counted in ``n_undefined``.
    """
    cfg = model.cfg if cfg is None else cfg
    bcfg = cfg.bin_config()
    batch = make_batch(samples)
    dims_pred, bin_out = forward_batch(model, batch)
    n = len(batch)
    pairs = bin_out.reshape(n, bcfg.num_bins, 2)
    s, c = pairs[..., 0], pairs[..., 1]
    norm = np.hypot(s, c)
    degenerate = norm == 0.0
    ok = ~degenerate.any(axis=1)
    safe = np.where(norm == 0.0, 1.0, norm)
    s_hat, c_hat = s / safe, c / safe

    offsets = np.array(bcfg.offsets)
    res = batch.theta[:, None] - offsets
    ts, tc = np.sin(res), np.cos(res)
    angles = wrap_angle(np.arctan2(s, c) + offsets)
    include = exclusion_mask_batch(angles, cfg.exclusion_tau) & ~degenerate

    per_bin = np.maximum(1.0 - ts * s_hat - tc * c_hat, 0.0)
    orient_ps = (per_bin * include).sum(axis=1)
    dims_ps = ((dims_pred - batch.dims3d) ** 2).sum(axis=1)

    sin_sum = (np.sin(angles) * include).sum(axis=1)
    cos_sum = (np.cos(angles) * include).sum(axis=1)
    defined = ok & (np.hypot(sin_sum, cos_sum) >= 1e-9)
    theta_hat = wrap_angle(np.arctan2(sin_sum, cos_sum))
    err = np.abs(wrap_angle(theta_hat - batch.theta))

    n_def = int(defined.sum())
    return {
        "loss": float((dims_ps[ok] + orient_ps[ok]).mean()) if ok.any() else float("nan"),
        "dims_loss": float(dims_ps.mean()),
        "orientation_loss": float(orient_ps[ok].mean()) if ok.any() else float("nan"),
        "mae_deg": float(np.degrees(err[defined]).mean()) if n_def else float("nan"),
        "n": n,
        "n_undefined": n - n_def,
    }


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


@dataclass
class SweepPoint:
    factor: float
    theta_pred: float | None
    per_bin_angles: list[float] | None
    excluded: set[int]


def sweep_2d_width(model: OrientationNet, sample: TrainingSample,
                   factors=None) -> list[SweepPoint]:
    """Scale the sample's 2D box width by each factor and re-predict."""
    factors = DEFAULT_SWEEP_FACTORS if factors is None else factors
    points = []
    for f in factors:
        scaled = replace_sample_width(sample, f)
        r = forward(model, scaled)
        points.append(SweepPoint(float(f), r.theta_pred, r.per_bin_angles, r.excluded))
    return points


def sweep_3d_height(model: OrientationNet, sample: TrainingSample,
                    factors=None) -> list[SweepPoint]:
    """Scale the 3D height flowing into the dimension feedforward link.

    The scaling applies to the processor's input (the predicted height, or
    the teacher-forced one), not to the sample's ground truth.
    """
    factors = DEFAULT_SWEEP_FACTORS if factors is None else factors
    points = []
    for f in factors:
        r = forward(model, sample, h1_feed_scale=float(f))
        points.append(SweepPoint(float(f), r.theta_pred, r.per_bin_angles, r.excluded))
    return points


def replace_sample_width(sample: TrainingSample, factor: float) -> TrainingSample:
    return TrainingSample(
        Dims2D(sample.dims2d.h, sample.dims2d.w * factor),
        sample.dims3d, sample.theta, sample.context.copy(),
    )


def analytic_selector_curve(sample: TrainingSample, factors=None,
                            baseline_theta: float | None = None) -> list[float]:
    """Geometry-only counterpart of a sweep.

    Scaling either the 2D width or the fed 3D height by f scales the
    implied span linearly, so one curve serves both sweeps: at each factor
    the implied span is rescaled, candidates are recovered analytically,
    and the candidate circularly closest to the baseline yaw is selected.
    Factors with no candidates yield NaN.
    """
    factors = DEFAULT_SWEEP_FACTORS if factors is None else factors
    base = sample.theta if baseline_theta is None else baseline_theta
    t0 = implied_width_span(sample.dims2d, sample.dims3d.h1)
    out = []
    for f in factors:
        res = candidates_for_span(sample.dims3d, t0 * float(f))
        if not res.candidates:
            out.append(float("nan"))
            continue
        out.append(min(res.candidates, key=lambda cand: circ_abs_diff(cand, base)))
    return out


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

_CHECKPOINT_VERSION = 1


def save_model(model: OrientationNet, path) -> None:
    """Write a checkpoint: a versioned npz of config JSON plus raw arrays.

    Arrays are stored as float64 without any rounding, so load(save(m))
    reproduces the model bit-exactly.
    """
    cfg = model.cfg
    meta = {
        "format_version": _CHECKPOINT_VERSION,
        "config": {
            **{k: getattr(cfg, k) for k in (
                "num_bins", "context_width", "use_feedforward",
                "use_consistency_loss", "consistency_weight", "exclusion_tau",
                "teacher_force_dims3d", "dims2d_scale", "seed", "batch_size",
                "momentum", "head_hidden",
            )},
            "encoder_hidden": list(cfg.encoder_hidden),
            "proc_hidden": list(cfg.proc_hidden),
            "lr_schedule": [list(seg) for seg in cfg.lr_schedule],
        },
    }
    arrays = {name.replace(".", "__"): arr for name, arr in named_parameters(model)}
    np.savez(path, __meta__=np.array(json.dumps(meta, sort_keys=True)), **arrays)


def load_model(path) -> OrientationNet:
    """Load a checkpoint written by :func:`save_model`."""
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["__meta__"][()]))
        if meta.get("format_version") != _CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {meta.get('format_version')}")
        raw = dict(meta["config"])
        raw["encoder_hidden"] = tuple(raw["encoder_hidden"])
        raw["proc_hidden"] = tuple(raw["proc_hidden"])
        raw["lr_schedule"] = tuple((int(s), float(lr)) for s, lr in raw["lr_schedule"])
        cfg = ModelConfig(**raw)
        model = build_model(cfg)
        for name, arr in named_parameters(model):
            arr[...] = data[name.replace(".", "__")]
    return model


# ---------------------------------------------------------------------------
# Gradient checking over the full graph
# ---------------------------------------------------------------------------


def model_gradient_check(model: OrientationNet, batch: Batch,
                         eps: float = 1e-5,
                         max_entries_per_param: int | None = 25,
                         seed: int = 0):
    """Finite-difference check of the complete training graph.

    Two values are frozen from the unperturbed forward pass: the exclusion
    mask (so the loss stays smooth under perturbation) and the dimension
    processor's stop-gradient input (so the difference quotient measures
    the same function training backpropagates; the truncated path is not
    part of that derivative by construction).
    """
    lg = build_loss_graph(model, batch)
    mask = lg.include_mask
    feed = lg.proc3d_feed
    grads_by_node = lg.tape.backward(lg.loss)
    grads = {name: grads_by_node.get(nid, np.zeros_like(arr))
             for name, nid, arr in lg.param_nodes}
    params = [(name, arr) for name, _, arr in lg.param_nodes]

    def loss_fn() -> float:
        return build_loss_graph(model, batch, include_mask=mask,
                                proc3d_feed=feed).loss_value()

    return finite_diff_check(params, loss_fn, grads, eps=eps,
                             max_entries_per_param=max_entries_per_param,
                             seed=seed)
