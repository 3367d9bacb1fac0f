"""End-to-end training, evaluation, sweeps, and report files.

The training loop is full-batch by default (mini-batching is optional) and
rebuilds the graph every step: encode all views, average the common
representations, emit common/specific evidence, fuse within views, attend
across views, fuse into the joint distribution, and minimize the combined
objective with Adam.  The discriminator trains on plain cross-entropy with
frozen encoder inputs while the encoders receive the confusion term with
the discriminator frozen, in the same optimizer step over disjoint
parameters.

Everything written to disk is a pure function of (config, seed): no
timestamps, stable float formatting.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import platform
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__ as _pkg_version
from . import autodiff as ad
from . import losses as L
from .aggregation import attend_batch, fuse_evidence
from .autodiff import Adam, Tensor, backward, grad_check
from .data import (
    CorruptionMask,
    CorruptionSpec,
    MultiViewDataset,
    StandardStats,
    inject_noise,
    split,
    standardize,
)
from .errors import ContractError, TrainingDiverged
from .networks import Model, ModelSpec
from .opinions import EvidenceVector, conflict_degree, evidence_to_opinion

LEARNING_RATE_GRID = (1e-4, 3e-4, 1e-3, 3e-3)

ABLATION_SWITCHES = ("no_h1", "no_attention", "no_common_loss", "no_specific_loss")

HIST_BINS = 20


@dataclass(frozen=True)
class TrainConfig:
    """All hyperparameters of one run."""

    subspace_dim: int = 64
    gamma: float = 1.0
    delta: float = 1.0
    eta: float = 0.01
    learning_rate: float = 3e-3
    weight_decay: float = 1e-5
    epochs: int = 200
    anneal_epochs: int = 50
    batch_size: int | None = None
    seed: int = 0
    train_fraction: float = 0.8
    fold: str = "mean"
    evidence_activation: str = "relu"
    attention_eps: float = 1e-8
    early_stop: bool = False
    patience: int = 20
    min_delta: float = 1e-5
    bypass_h1: bool = False
    uniform_attention: bool = False
    disc_hidden: int = 64
    evidence_hidden: int = 64

    def validate(self):
        if min(self.gamma, self.delta, self.eta) < 0.0:
            raise ContractError("gamma, delta, eta must be non-negative")
        if self.learning_rate <= 0.0 or self.epochs < 1 or self.anneal_epochs < 1:
            raise ContractError("need learning_rate > 0, epochs >= 1, anneal_epochs >= 1")
        if self.batch_size is not None and self.batch_size < 1:
            raise ContractError("batch_size must be >= 1 when set")
        if not 0.0 < self.train_fraction < 1.0:
            raise ContractError("train_fraction must lie in (0, 1)")
        if self.fold not in ("mean", "sequential"):
            raise ContractError(f"fold must be mean or sequential, got {self.fold!r}")
        if self.attention_eps <= 0.0:
            raise ContractError("attention_eps must be positive")
        return self

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, payload):
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(payload) - known
        if unknown:
            raise ContractError(f"unknown config keys: {sorted(unknown)}")
        return cls(**payload).validate()

    def config_hash(self):
        canonical = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canonical.encode()).hexdigest()


def _sequential_fold_weights(n_views):
    # left-fold of pairwise evidence means: weights 1/2^(v-1), 1/2^(v-1), 1/4, ..., 1/2
    w = [1.0 / 2 ** (n_views - 1)]
    for i in range(2, n_views + 1):
        w.append(1.0 / 2 ** (n_views - i + 1))
    return w


@dataclass
class ForwardBundle:
    """Graph nodes produced by one full forward pass over a batch."""

    common_views: list          # v tensors, (n, l)
    common_mean: Tensor         # (n, l)
    specific_views: list        # v tensors, (n, l)
    evidence_common: Tensor     # (n, q)
    evidence_specific: list     # v tensors, (n, q)
    evidence_fused: list        # v tensors, (n, q)
    attention: Tensor           # (n, v, v)
    evidence_attended: list     # v tensors, (n, q)
    evidence_joint: Tensor      # (n, q)


def forward_pass(model: Model, views, cfg: TrainConfig) -> ForwardBundle:
    """Run every stage up to the joint distribution on raw feature arrays."""
    n_views = len(views)
    xs = [ad.lift(np.asarray(x, dtype=np.float64)) for x in views]
    common_views = [model.encode_common(xs[i], i) for i in range(n_views)]
    acc = common_views[0]
    for c in common_views[1:]:
        acc = acc + c
    common_mean = acc * (1.0 / n_views)
    specific_views = [model.encode_specific(xs[i], i) for i in range(n_views)]

    evidence_common = model.evidence_from_common(common_mean)
    evidence_specific = [
        model.evidence_from_specific(specific_views[i], i) for i in range(n_views)
    ]
    if cfg.bypass_h1:
        evidence_fused = list(evidence_specific)
    else:
        evidence_fused = [fuse_evidence(evidence_common, e) for e in evidence_specific]

    features = [common_mean + s for s in specific_views]
    attention, attended3 = attend_batch(
        features,
        evidence_fused,
        model.w_query,
        model.w_key,
        model.w_value,
        eps=cfg.attention_eps,
        uniform=cfg.uniform_attention,
    )
    evidence_attended = [ad.take(attended3, i, axis=1) for i in range(n_views)]

    if cfg.fold == "sequential" and n_views > 1:
        weights = _sequential_fold_weights(n_views)
        joint = evidence_attended[0] * weights[0]
        for w, e in zip(weights[1:], evidence_attended[1:]):
            joint = joint + e * w
    else:
        joint = attended3.mean(axis=1)
    return ForwardBundle(
        common_views,
        common_mean,
        specific_views,
        evidence_common,
        evidence_specific,
        evidence_fused,
        attention,
        evidence_attended,
        joint,
    )


def one_hot(labels, n_classes):
    eye = np.eye(n_classes, dtype=np.float64)
    return eye[np.asarray(labels, dtype=np.int64)]


def training_objective(model, bundle: ForwardBundle, y, cfg: TrainConfig, lambda_t, epoch=0):
    """Total trainable scalar plus the logged loss breakdown.

    The returned scalar adds the discriminator's plain cross-entropy (with
    encoder inputs detached) on top of the overall loss; the two touch
    disjoint parameters, so one backward pass drives both updates.
    """
    n_views = len(bundle.common_views)
    n = y.shape[0]

    # adversarial split: D sees detached representations, encoders a frozen D
    z_rows = np.kron(np.eye(n_views), np.ones((n, 1)))
    disc_on_frozen_input = ad.stack(
        [model.discriminate(c.detach()) for c in bundle.common_views], axis=0
    ).reshape((n_views * n, n_views))
    disc_ce = L.cross_entropy(disc_on_frozen_input, z_rows)
    frozen_disc = ad.stack(
        [model.discriminate(c, detach_params=True) for c in bundle.common_views], axis=0
    ).reshape((n_views * n, n_views))
    adv = L.adv_loss(frozen_disc, z_rows)

    y_hat = ad.stack(
        [model.predict_common(c) for c in bundle.common_views], axis=0
    ).reshape((n_views * n, y.shape[1]))
    cml = L.cml_loss(y_hat, np.tile(y, (n_views, 1)))
    com = L.com_loss(adv, cml)
    spe = L.spe_loss(bundle.specific_views, bundle.common_mean)

    alpha_fused = [e + 1.0 for e in bundle.evidence_fused]
    alpha_common = bundle.evidence_common + 1.0
    alpha_specific = [e + 1.0 for e in bundle.evidence_specific]
    h1 = L.h1_loss(alpha_fused, alpha_common, alpha_specific, y, cfg.gamma)

    con = L.con_loss(alpha_fused)
    alpha_attended = [e + 1.0 for e in bundle.evidence_attended]
    alpha_joint = bundle.evidence_joint + 1.0
    h2 = L.h2_loss(alpha_joint, alpha_attended, alpha_fused, y, lambda_t, cfg.gamma, conflict=con)

    overall = L.overall_loss(h1, h2, com, spe, cfg.delta, cfg.eta)
    breakdown = L.LossBreakdown(
        adv=adv.item(),
        cml=cml.item(),
        com=com.item(),
        spe=spe.item(),
        h1=h1.item(),
        h2=h2.item(),
        con=con.item(),
        overall=overall.item(),
        lambda_t=lambda_t,
        epoch=epoch,
    )
    return overall + disc_ce, breakdown


def _batches(n, batch_size, rng):
    if batch_size is None or batch_size >= n:
        return [np.arange(n)]
    order = rng.permutation(n)
    return [order[i : i + batch_size] for i in range(0, n, batch_size)]


def train(ds: MultiViewDataset, cfg: TrainConfig):
    """Train on an already standardized dataset; returns (model, log rows)."""
    cfg.validate()
    spec = ModelSpec(
        view_dims=ds.view_dims,
        n_classes=ds.n_classes,
        subspace_dim=cfg.subspace_dim,
        disc_hidden=cfg.disc_hidden,
        evidence_hidden=cfg.evidence_hidden,
        evidence_activation=cfg.evidence_activation,
        seed=cfg.seed,
    )
    model = Model(spec)
    optimizer = Adam(
        model.trainable_params(uniform_attention=cfg.uniform_attention),
        lr=cfg.learning_rate,
        weight_decay=cfg.weight_decay,
    )
    y = one_hot(ds.labels, ds.n_classes)
    rng = np.random.default_rng(cfg.seed)
    log_rows = []
    best = np.inf
    stale = 0
    for epoch in range(cfg.epochs):
        lambda_t = L.lambda_schedule(epoch, cfg.anneal_epochs)
        sums = None
        total_rows = 0
        for batch in _batches(ds.n_samples, cfg.batch_size, rng):
            bundle = forward_pass(model, [v[batch] for v in ds.views], cfg)
            objective, breakdown = training_objective(
                model, bundle, y[batch], cfg, lambda_t, epoch
            )
            if not breakdown.finite():
                bad = {
                    name: getattr(breakdown, name)
                    for name in L.LossBreakdown.FIELDS
                    if not np.isfinite(getattr(breakdown, name))
                }
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}: {bad}", terms=bad
                )
            backward(objective)
            optimizer.step()
            weight = batch.size
            values = np.array([getattr(breakdown, f) for f in L.LossBreakdown.FIELDS])
            sums = values * weight if sums is None else sums + values * weight
            total_rows += weight
        averaged = sums / total_rows
        row = L.LossBreakdown(*averaged, epoch=epoch)
        log_rows.append(row)
        if cfg.early_stop:
            if row.overall < best - cfg.min_delta:
                best = row.overall
                stale = 0
            else:
                stale += 1
                if stale >= cfg.patience:
                    break
    return model, log_rows


@dataclass
class TrainedModel:
    """A trained model plus everything needed to evaluate new data."""

    model: Model
    cfg: TrainConfig
    stats: StandardStats | None = None

    def prepare(self, ds: MultiViewDataset) -> MultiViewDataset:
        """Standardize raw features into the model's input space."""
        if self.stats is None:
            return ds
        return self.stats.apply(ds)

    def save(self, path):
        meta = {"config": self.cfg.to_dict(), "config_hash": self.cfg.config_hash()}
        if self.stats is not None:
            meta["stats"] = self.stats.to_jsonable()
        self.model.save(path, extra_meta=meta)

    @classmethod
    def load(cls, path):
        model, meta = Model.load(path)
        cfg = TrainConfig.from_dict(meta["config"])
        stats = StandardStats.from_jsonable(meta["stats"]) if "stats" in meta else None
        return cls(model, cfg, stats)


@dataclass
class EvalReport:
    """Per-instance uncertainty diagnostics plus aggregate metrics."""

    accuracy: float
    predictions: np.ndarray
    labels: np.ndarray
    joint_uncertainty: np.ndarray    # (n,)
    local_uncertainty: np.ndarray    # (n, v)
    attention: np.ndarray            # (n, v, v)
    conflict_matrix: np.ndarray      # (v, v), symmetric, zero diagonal
    corrupted: np.ndarray | None = None   # (n,) bool
    accuracy_clean: float | None = None
    accuracy_corrupted: float | None = None

    def uncertainty_histograms(self, bins=HIST_BINS):
        """Binned mass rows (group, kind, lo, hi, mass); masses sum to 1 per group."""
        edges = np.linspace(0.0, 1.0, bins + 1)
        groups = {"all": np.ones(self.labels.size, dtype=bool)}
        if self.corrupted is not None:
            groups["corrupted"] = self.corrupted
            groups["clean"] = ~self.corrupted
        rows = []
        for group, mask in groups.items():
            if not mask.any():
                continue
            for kind, values in (
                ("overall", self.joint_uncertainty[mask]),
                ("local", self.local_uncertainty[mask].ravel()),
            ):
                counts, _ = np.histogram(np.clip(values, 0.0, 1.0), bins=edges)
                mass = counts / counts.sum()
                for k in range(bins):
                    rows.append((group, kind, edges[k], edges[k + 1], mass[k]))
        return rows


def evaluate(trained: TrainedModel, ds: MultiViewDataset, mask: CorruptionMask | None = None):
    """Run the test path on standardized features and collect diagnostics.

    Never mutates parameters; repeated calls return identical reports.
    """
    model, cfg = trained.model, trained.cfg
    if ds.view_dims != model.spec.view_dims:
        raise ContractError(
            f"dataset views {ds.view_dims} do not match model views {model.spec.view_dims}"
        )
    q = ds.n_classes
    bundle = forward_pass(model, ds.views, cfg)
    joint_e = bundle.evidence_joint.data
    predictions = np.argmax(joint_e, axis=1)
    joint_u = q / (joint_e.sum(axis=1) + q)
    fused = [t.data for t in bundle.evidence_fused]
    local_u = np.stack([q / (e.sum(axis=1) + q) for e in fused], axis=1)
    attention = np.array(bundle.attention.data)

    n_views = ds.n_views
    conflict = np.zeros((n_views, n_views))
    ops = [
        [evidence_to_opinion(EvidenceVector(e[j])) for e in fused]
        for j in range(ds.n_samples)
    ]
    for p in range(n_views):
        for r in range(p + 1, n_views):
            mean_c = float(np.mean([conflict_degree(row[p], row[r]) for row in ops]))
            conflict[p, r] = conflict[r, p] = mean_c

    correct = predictions == ds.labels
    report = EvalReport(
        accuracy=float(correct.mean()),
        predictions=predictions,
        labels=ds.labels.copy(),
        joint_uncertainty=joint_u,
        local_uncertainty=local_u,
        attention=attention,
        conflict_matrix=conflict,
    )
    if mask is not None:
        hit = mask.instances
        report.corrupted = hit
        if hit.any():
            report.accuracy_corrupted = float(correct[hit].mean())
        if (~hit).any():
            report.accuracy_clean = float(correct[~hit].mean())
    return report


@dataclass
class ExperimentResult:
    trained: TrainedModel
    log: list
    report: EvalReport
    train_ds: MultiViewDataset
    test_ds: MultiViewDataset


def run_experiment(ds: MultiViewDataset, cfg: TrainConfig) -> ExperimentResult:
    """Split, standardize, train, and evaluate on the held-out fraction."""
    train_raw, test_raw = split(ds, cfg.train_fraction, cfg.seed)
    train_std, test_std, stats = standardize(train_raw, test_raw)
    model, log_rows = train(train_std, cfg)
    trained = TrainedModel(model, cfg, stats)
    report = evaluate(trained, test_std)
    return ExperimentResult(trained, log_rows, report, train_std, test_std)


# ---------------------------------------------------------------------------
# sweeps and ablations


@dataclass(frozen=True)
class SweepRow:
    sigma: float
    accuracy: float
    mean_uncertainty: float


def run_noise_sweep(trained: TrainedModel, test_ds: MultiViewDataset, sigmas, fraction, seed):
    """Evaluate per sigma on independently corrupted copies of the test set.

    Reusing one seed keeps the corrupted instances, views, and noise
    directions identical across sigma values, so only the scale varies.
    """
    rows = []
    for sigma in sigmas:
        if sigma == 0:
            report = evaluate(trained, test_ds)
        else:
            spec = CorruptionSpec("gaussian_noise", fraction, sigma=float(sigma), seed=seed)
            corrupted, mask = inject_noise(test_ds, spec)
            report = evaluate(trained, corrupted, mask)
        rows.append(SweepRow(float(sigma), report.accuracy, float(report.joint_uncertainty.mean())))
    return rows


def apply_switch(cfg: TrainConfig, switch):
    if switch == "no_h1":
        return dataclasses.replace(cfg, bypass_h1=True)
    if switch == "no_attention":
        return dataclasses.replace(cfg, uniform_attention=True)
    if switch == "no_common_loss":
        return dataclasses.replace(cfg, delta=0.0)
    if switch == "no_specific_loss":
        return dataclasses.replace(cfg, eta=0.0)
    raise ContractError(f"unknown ablation switch {switch!r}; choose from {ABLATION_SWITCHES}")


@dataclass(frozen=True)
class AblationRow:
    variant: str
    accuracy: float
    accuracy_delta: float


def ablate(ds: MultiViewDataset, cfg: TrainConfig, switches=()):
    """Train the full model and each switched variant under identical seeds."""
    baseline = run_experiment(ds, cfg)
    rows = [AblationRow("full", baseline.report.accuracy, 0.0)]
    for switch in switches:
        variant_cfg = apply_switch(cfg, switch)
        result = run_experiment(ds, variant_cfg)
        rows.append(
            AblationRow(switch, result.report.accuracy, result.report.accuracy - baseline.report.accuracy)
        )
    return rows


def run_lr_selection(ds: MultiViewDataset, cfg: TrainConfig, grid=LEARNING_RATE_GRID, folds=5):
    """K-fold cross-validated learning-rate selection over the default grid."""
    rng = np.random.default_rng(cfg.seed)
    order = rng.permutation(ds.n_samples)
    chunks = np.array_split(order, folds)
    rows = []
    for lr in grid:
        accs = []
        for k in range(folds):
            val_idx = np.sort(chunks[k])
            train_idx = np.sort(np.concatenate([chunks[i] for i in range(folds) if i != k]))
            tr_raw, va_raw = ds.subset(train_idx), ds.subset(val_idx)
            tr, va, stats = standardize(tr_raw, va_raw)
            model, _ = train(tr, dataclasses.replace(cfg, learning_rate=lr))
            accs.append(evaluate(TrainedModel(model, cfg, stats), va).accuracy)
        rows.append((float(lr), float(np.mean(accs))))
    return rows


# ---------------------------------------------------------------------------
# gradient checking of the loss stack


def gradcheck_losses(n_seeds=20, h=1e-5, tol=1e-4):
    """Max relative finite-difference error per loss over random small instances."""
    names = ("adv", "cml", "spe", "ace", "kl", "h1", "h2", "overall")
    worst = {name: 0.0 for name in names}
    n, q, v, width = 3, 3, 2, 4
    for seed in range(n_seeds):
        rng = np.random.default_rng(seed)
        logits = Tensor(rng.normal(size=(n * v, v)))
        z = one_hot(rng.integers(v, size=n * v), v)
        _track(worst, "adv", lambda: L.adv_loss(logits.softmax_rows(), z), [logits], h, tol)

        pred_logits = Tensor(rng.normal(size=(n * v, q)))
        y_tiled = one_hot(rng.integers(q, size=n * v), q)
        _track(worst, "cml", lambda: L.cml_loss(pred_logits.sigmoid(), y_tiled), [pred_logits], h, tol)

        specific = [Tensor(rng.normal(size=(n, width))) for _ in range(v)]
        common = Tensor(rng.normal(size=(n, width)))
        _track(worst, "spe", lambda: L.spe_loss(specific, common), specific + [common], h, tol)

        y = one_hot(rng.integers(q, size=n), q)
        e_main = Tensor(rng.uniform(0.1, 3.0, size=(n, q)))
        _track(worst, "ace", lambda: L.ace_loss(e_main + 1.0, y), [e_main], h, tol)
        _track(worst, "kl", lambda: L.kl_loss(e_main + 1.0, y), [e_main], h, tol)

        e_common = Tensor(rng.uniform(0.1, 3.0, size=(n, q)))
        e_specific = [Tensor(rng.uniform(0.1, 3.0, size=(n, q))) for _ in range(v)]
        e_fused = [fuse_evidence(e_common, e) for e in e_specific]

        def h1_fn():
            fused = [fuse_evidence(e_common, e) for e in e_specific]
            return L.h1_loss(
                [e + 1.0 for e in fused], e_common + 1.0, [e + 1.0 for e in e_specific], y, 1.0
            )

        _track(worst, "h1", h1_fn, [e_common] + e_specific, h, tol)

        e_att = [Tensor(rng.uniform(0.1, 3.0, size=(n, q))) for _ in range(v)]

        def h2_fn():
            fused = [fuse_evidence(e_common, e) for e in e_specific]
            joint = fused[0]
            for e in fused[1:]:
                joint = joint + e
            joint = joint * (1.0 / v)
            return L.h2_loss(
                joint + 1.0, [e + 1.0 for e in e_att], [e + 1.0 for e in fused], y, 0.5, 1.0
            )

        _track(worst, "h2", h2_fn, [e_common] + e_specific + e_att, h, tol)

        def overall_fn():
            adv = L.adv_loss(logits.softmax_rows(), z)
            cml = L.cml_loss(pred_logits.sigmoid(), y_tiled)
            spe = L.spe_loss(specific, common)
            fused = [fuse_evidence(e_common, e) for e in e_specific]
            h1 = L.h1_loss(
                [e + 1.0 for e in fused], e_common + 1.0, [e + 1.0 for e in e_specific], y, 1.0
            )
            joint = fused[0]
            for e in fused[1:]:
                joint = joint + e
            joint = joint * (1.0 / v)
            h2 = L.h2_loss(
                joint + 1.0, [e + 1.0 for e in e_att], [e + 1.0 for e in fused], y, 0.5, 1.0
            )
            return L.overall_loss(h1, h2, L.com_loss(adv, cml), spe, 1.0, 0.01)

        leaves = [logits, pred_logits, common, e_common] + specific + e_specific + e_att
        _track(worst, "overall", overall_fn, leaves, h, tol)
    return worst


def _track(worst, name, fn, params, h, tol):
    report = grad_check(fn, params, h=h, tol=tol)
    worst[name] = max(worst[name], report.max_rel_error)


# ---------------------------------------------------------------------------
# report files


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_training_log(log_rows, path):
    lines = ["epoch\t" + "\t".join(L.LossBreakdown.FIELDS)]
    for row in log_rows:
        lines.append(
            "\t".join([str(row.epoch)] + [_fmt(getattr(row, f)) for f in L.LossBreakdown.FIELDS])
        )
    Path(path).write_text("\n".join(lines) + "\n")


def write_metrics(report: EvalReport, path):
    pairs = [
        ("n_test", report.labels.size),
        ("accuracy", report.accuracy),
        ("accuracy_clean", report.accuracy_clean),
        ("accuracy_corrupted", report.accuracy_corrupted),
        ("mean_joint_uncertainty", float(report.joint_uncertainty.mean())),
        ("median_joint_uncertainty", float(np.median(report.joint_uncertainty))),
        ("mean_local_uncertainty", float(report.local_uncertainty.mean())),
    ]
    lines = [f"{k}\t{_fmt(v) if v is not None else 'NA'}" for k, v in pairs]
    Path(path).write_text("\n".join(lines) + "\n")


def write_uncertainty_hist(report: EvalReport, path, bins=HIST_BINS):
    lines = ["group\tkind\tbin_lo\tbin_hi\tmass"]
    for group, kind, lo, hi, mass in report.uncertainty_histograms(bins):
        lines.append(f"{group}\t{kind}\t{_fmt(float(lo))}\t{_fmt(float(hi))}\t{_fmt(float(mass))}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_conflict_matrix(report: EvalReport, path):
    lines = ["\t".join(_fmt(float(x)) for x in row) for row in report.conflict_matrix]
    Path(path).write_text("\n".join(lines) + "\n")


def write_records(report: EvalReport, path):
    """Per-sample diagnostic rows: prediction, uncertainties, attention."""
    n, v = report.local_uncertainty.shape
    header = (
        ["index", "label", "prediction", "correct", "corrupted", "joint_u"]
        + [f"local_u_{i}" for i in range(v)]
        + [f"attn_{p}_{r}" for p in range(v) for r in range(v)]
    )
    lines = ["\t".join(header)]
    corrupted = report.corrupted if report.corrupted is not None else np.zeros(n, dtype=bool)
    for j in range(n):
        cells = [
            str(j),
            str(int(report.labels[j])),
            str(int(report.predictions[j])),
            str(int(report.predictions[j] == report.labels[j])),
            str(int(corrupted[j])),
            _fmt(float(report.joint_uncertainty[j])),
        ]
        cells += [_fmt(float(x)) for x in report.local_uncertainty[j]]
        cells += [_fmt(float(x)) for x in report.attention[j].ravel()]
        lines.append("\t".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")


def write_corruption_mask(mask: CorruptionMask, path):
    lines = ["instance\tview"]
    lines += [f"{j}\t{i}" for j, i in mask.to_indices()]
    Path(path).write_text("\n".join(lines) + "\n")


def write_sweep(rows, path):
    lines = ["sigma\taccuracy\tmean_uncertainty"]
    for row in rows:
        lines.append(f"{_fmt(row.sigma)}\t{_fmt(row.accuracy)}\t{_fmt(row.mean_uncertainty)}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_ablation(rows, path):
    lines = ["variant\taccuracy\taccuracy_delta"]
    for row in rows:
        lines.append(f"{row.variant}\t{_fmt(row.accuracy)}\t{_fmt(row.accuracy_delta)}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_run_meta(cfg: TrainConfig, path, extras=None):
    payload = {
        "config": cfg.to_dict(),
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "versions": {
            "mvtrust": _pkg_version,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
    }
    payload.update(extras or {})
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_eval_report(report: EvalReport, out_dir, mask=None):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_metrics(report, out / "metrics.tsv")
    write_uncertainty_hist(report, out / "uncertainty_hist.tsv")
    write_conflict_matrix(report, out / "conflict_matrix.tsv")
    write_records(report, out / "records.tsv")
    if mask is not None:
        write_corruption_mask(mask, out / "corruption_mask.tsv")
