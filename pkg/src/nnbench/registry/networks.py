"""The shipped macro benchmark networks.

Eleven networks spanning vision, speech, detection, segmentation, captioning
and parsing scenarios, plus sparse variants of lenet5 / alexnet / vgg16.
Five descriptors are executable end-to-end (lenet5, alexnet, vgg16,
deconvnet, and the 2-layer-LSTM rnn); the rest are analytic schedules:
control-flow-heavy stages (region proposals, parser transitions, caption
decoding, per-frame batching) appear as fixed layer stages separated by
stage breaks, sized to their documented operation amounts.

Descriptor conventions:
* batch 1 except where a stage models replicated work (video frames, region
  proposals, parser steps);
* lenet5 uses the classic average-pooling / sigmoid form with the widened
  20/50/500 channel plan;
* deepface is an 11-layer VGG-A-with-LRN derivation on 120x120 face crops;
* resnet50 drops the projection convs on downsampling shortcuts (identity
  skip edges only), which only affects the skip-edge set, not layer ops;
* sparse variants carry weight density 0.75 on every conv/fc layer.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..types import (
    KIND_BN,
    KIND_CONV,
    KIND_DECONV,
    KIND_FC,
    KIND_LRN,
    KIND_LSTM,
    KIND_POOL_AVG,
    KIND_POOL_MAX,
    KIND_RELU,
    KIND_SIGMOID,
    KIND_UNPOOL_MAX,
    LayerSpec,
    NetworkDescriptor,
    SkipEdge,
)

SPARSE_MACRO_DENSITY = 0.75


def _conv(shape, co, k, s=1, p=0):
    return LayerSpec(KIND_CONV, tuple(shape), {"out_channels": co, "kernel": k, "stride": s, "pad": p})


def _deconv(shape, co, k, s=1, p=0):
    return LayerSpec(KIND_DECONV, tuple(shape), {"out_channels": co, "kernel": k, "stride": s, "pad": p})


def _pool(kind, shape, w, s):
    return LayerSpec(kind, tuple(shape), {"window": w, "stride": s})


def _unpool_max(shape, w, s):
    return LayerSpec(KIND_UNPOOL_MAX, tuple(shape), {"window": w, "stride": s})


def _fc(shape, out):
    return LayerSpec(KIND_FC, tuple(shape), {"in_features": shape[-1], "out_features": out})


def _act(kind, shape):
    return LayerSpec(kind, tuple(shape))


def _lrn(shape, local=5, alpha=1e-4, beta=0.75, k=1.0):
    return LayerSpec(KIND_LRN, tuple(shape), {"local_size": local, "alpha": alpha, "beta": beta, "k": k})


def _bn(shape, eps=1e-5):
    return LayerSpec(KIND_BN, tuple(shape), {"eps": eps})


def _lstm(batch, insz, hidden, steps):
    return LayerSpec(KIND_LSTM, (batch, insz), {"hidden": hidden, "steps": steps})


def build_lenet5() -> NetworkDescriptor:
    L = [
        _conv((1, 1, 28, 28), 20, 5),            # 0 conv1 -> 24x24
        _pool(KIND_POOL_AVG, (1, 20, 24, 24), 2, 2),   # 1 -> 12x12
        _act(KIND_SIGMOID, (1, 20, 12, 12)),     # 2
        _conv((1, 20, 12, 12), 50, 5),           # 3 conv2 -> 8x8
        _pool(KIND_POOL_AVG, (1, 50, 8, 8), 2, 2),     # 4 -> 4x4
        _act(KIND_SIGMOID, (1, 50, 4, 4)),       # 5
        _fc((1, 800), 500),                      # 6
        _act(KIND_SIGMOID, (1, 500)),            # 7
        _fc((1, 500), 10),                       # 8
    ]
    return NetworkDescriptor("lenet5", L, executable=True)


def build_rnn() -> NetworkDescriptor:
    # Speech recognizer approximated as the executable 2-layer LSTM network
    # over 32 acoustic frames, with a character softmax layer.
    L = [
        _lstm(1, 128, 512, 32),   # 0
        _lstm(1, 512, 512, 32),   # 1
        _fc((32, 1, 512), 29),    # 2 per-step character scores
    ]
    return NetworkDescriptor("rnn", L, executable=True)


def build_alexnet() -> NetworkDescriptor:
    L = [
        _conv((1, 3, 227, 227), 96, 11, 4),       # 0 -> 55x55
        _act(KIND_RELU, (1, 96, 55, 55)),         # 1
        _lrn((1, 96, 55, 55)),                    # 2
        _pool(KIND_POOL_MAX, (1, 96, 55, 55), 3, 2),   # 3 -> 27
        _conv((1, 96, 27, 27), 256, 5, 1, 2),     # 4 (single-group)
        _act(KIND_RELU, (1, 256, 27, 27)),        # 5
        _lrn((1, 256, 27, 27)),                   # 6
        _pool(KIND_POOL_MAX, (1, 256, 27, 27), 3, 2),  # 7 -> 13
        _conv((1, 256, 13, 13), 384, 3, 1, 1),    # 8
        _act(KIND_RELU, (1, 384, 13, 13)),        # 9
        _conv((1, 384, 13, 13), 384, 3, 1, 1),    # 10
        _act(KIND_RELU, (1, 384, 13, 13)),        # 11
        _conv((1, 384, 13, 13), 256, 3, 1, 1),    # 12
        _act(KIND_RELU, (1, 256, 13, 13)),        # 13
        _pool(KIND_POOL_MAX, (1, 256, 13, 13), 3, 2),  # 14 -> 6
        _fc((1, 9216), 4096),                     # 15
        _act(KIND_RELU, (1, 4096)),               # 16
        _fc((1, 4096), 4096),                     # 17
        _act(KIND_RELU, (1, 4096)),               # 18
        _fc((1, 4096), 1000),                     # 19
    ]
    return NetworkDescriptor("alexnet", L, executable=True)


_VGG_PLAN = [(64, 2), (128, 2), (256, 3), (512, 3), (512, 3)]


def _vgg16_conv_stack(n, h, pools=5):
    """VGG-16 conv body at batch n, input 3 x h x h; returns (layers, width)."""
    layers = []
    cin = 3
    cur = h
    for stage, (ch, reps) in enumerate(_VGG_PLAN):
        for _ in range(reps):
            layers.append(_conv((n, cin, cur, cur), ch, 3, 1, 1))
            layers.append(_act(KIND_RELU, (n, ch, cur, cur)))
            cin = ch
        if stage < pools:
            layers.append(_pool(KIND_POOL_MAX, (n, ch, cur, cur), 2, 2))
            cur //= 2
    return layers, cur


def build_vgg16() -> NetworkDescriptor:
    L, cur = _vgg16_conv_stack(1, 224)            # 0..30, cur = 7
    feat = 512 * cur * cur
    L += [
        _fc((1, feat), 4096),                     # 31
        _act(KIND_RELU, (1, 4096)),               # 32
        _fc((1, 4096), 4096),                     # 33
        _act(KIND_RELU, (1, 4096)),               # 34
        _fc((1, 4096), 1000),                     # 35
    ]
    return NetworkDescriptor("vgg16", L, executable=True)


_RESNET_STAGES = [(3, 64, 56), (4, 128, 28), (6, 256, 14), (3, 512, 7)]


def build_resnet50() -> NetworkDescriptor:
    L = [
        _conv((1, 3, 224, 224), 64, 7, 2, 3),     # 0 -> 112
        _bn((1, 64, 112, 112)),                   # 1
        _act(KIND_RELU, (1, 64, 112, 112)),       # 2
        _pool(KIND_POOL_MAX, (1, 64, 112, 112), 2, 2),  # 3 -> 56
    ]
    edges = []
    cin = 64
    prev_hw = 56
    for stage, (blocks, mid, hw) in enumerate(_RESNET_STAGES):
        for b in range(blocks):
            stride = 2 if (stage > 0 and b == 0) else 1
            in_hw = prev_hw if b == 0 else hw
            block_in = len(L) - 1  # layer feeding this block
            L.append(_conv((1, cin, in_hw, in_hw), mid, 1, 1, 0))
            L.append(_bn((1, mid, in_hw, in_hw)))
            L.append(_act(KIND_RELU, (1, mid, in_hw, in_hw)))
            L.append(_conv((1, mid, in_hw, in_hw), mid, 3, stride, 1))
            L.append(_bn((1, mid, hw, hw)))
            L.append(_act(KIND_RELU, (1, mid, hw, hw)))
            L.append(_conv((1, mid, hw, hw), 4 * mid, 1, 1, 0))
            L.append(_bn((1, 4 * mid, hw, hw)))
            if b > 0:
                # identity shortcut; downsampling blocks drop the projection
                edges.append(SkipEdge(block_in, len(L) - 1, f"res{stage + 2}{chr(97 + b)}"))
            L.append(_act(KIND_RELU, (1, 4 * mid, hw, hw)))
            cin = 4 * mid
        prev_hw = hw
    L.append(_pool(KIND_POOL_AVG, (1, 2048, 7, 7), 7, 7))  # global average pool
    L.append(_fc((1, 2048), 1000))
    return NetworkDescriptor("resnet50", L, edges=edges, executable=False)


def build_fasterrcnn() -> NetworkDescriptor:
    # VGG-16 backbone through conv5_3 on a 600x800 frame, RPN heads, and the
    # 300-proposal detection head as fixed stages.
    layers = []
    cin = 3
    h, w = 600, 800
    for stage, (ch, reps) in enumerate(_VGG_PLAN):
        for _ in range(reps):
            layers.append(_conv((1, cin, h, w), ch, 3, 1, 1))
            layers.append(_act(KIND_RELU, (1, ch, h, w)))
            cin = ch
        if stage < 4:  # no pool5: detection works on conv5_3 features
            layers.append(_pool(KIND_POOL_MAX, (1, ch, h, w), 2, 2))
            h, w = (h - 2) // 2 + 1, (w - 2) // 2 + 1
    breaks = set()
    layers.append(_conv((1, 512, h, w), 512, 3, 1, 1))    # rpn conv
    layers.append(_act(KIND_RELU, (1, 512, h, w)))
    layers.append(_conv((1, 512, h, w), 18, 1, 1, 0))     # rpn cls (2 x 9 anchors)
    breaks.add(len(layers))
    layers.append(_conv((1, 512, h, w), 36, 1, 1, 0))     # rpn bbox (4 x 9 anchors)
    breaks.add(len(layers))
    layers.append(_fc((300, 25088), 4096))                # roi head on 300 proposals
    layers.append(_act(KIND_RELU, (300, 4096)))
    layers.append(_fc((300, 4096), 4096))
    layers.append(_act(KIND_RELU, (300, 4096)))
    layers.append(_fc((300, 4096), 21))                   # class scores
    breaks.add(len(layers))
    layers.append(_fc((300, 4096), 84))                   # box regression
    return NetworkDescriptor("faster_rcnn", layers, executable=False, stage_breaks=breaks)


_DEEPFACE_PLAN = [
    # (out_channels, convs in stage) at 120 -> 60 -> 30 -> 15 -> 7 -> 3
    (64, 1),
    (128, 1),
    (256, 2),
    (512, 2),
    (512, 2),
]


def build_deepface() -> NetworkDescriptor:
    L = []
    cin = 3
    cur = 120
    for stage, (ch, reps) in enumerate(_DEEPFACE_PLAN):
        for _ in range(reps):
            L.append(_conv((1, cin, cur, cur), ch, 3, 1, 1))
            L.append(_act(KIND_RELU, (1, ch, cur, cur)))
            cin = ch
        if stage == 0:
            L.append(_lrn((1, ch, cur, cur)))
        L.append(_pool(KIND_POOL_MAX, (1, ch, cur, cur), 2, 2))
        cur = (cur - 2) // 2 + 1
    feat = 512 * cur * cur
    L += [
        _fc((1, feat), 4096),
        _act(KIND_RELU, (1, 4096)),
        _fc((1, 4096), 4096),
        _act(KIND_RELU, (1, 4096)),
        _fc((1, 4096), 2622),   # identity classifier head
    ]
    return NetworkDescriptor("deepface", L, executable=False)


def build_deconvnet() -> NetworkDescriptor:
    L, cur = _vgg16_conv_stack(1, 224)   # 0..30 conv body, ends (1, 512, 7, 7)
    pool_idx = [i for i, s in enumerate(L) if s.kind == KIND_POOL_MAX]  # 5 pools
    switch_sources = {}
    L.append(_deconv((1, 512, 7, 7), 512, 3, 1, 1))  # 31 bridge at the bottleneck
    shapes = [(512, 7), (512, 14), (512, 28), (256, 56), (128, 112)]
    # mirror: unpool then the stage's convs reversed; channel drops mirror the
    # conv-side rises; the last deconv emits the 21-class segmentation map
    plan = [
        (512, [512, 512, 512]),
        (512, [512, 512, 256]),
        (256, [256, 256, 128]),
        (128, [128, 64]),
        (64, [64, 21]),
    ]
    hw = 7
    for stage, (cin, outs) in enumerate(plan):
        unpool_at = len(L)
        L.append(_unpool_max((1, cin, hw, hw), 2, 2))
        switch_sources[unpool_at] = pool_idx[4 - stage]
        hw *= 2
        c = cin
        for j, co in enumerate(outs):
            L.append(_deconv((1, c, hw, hw), co, 3, 1, 1))
            last = stage == len(plan) - 1 and j == len(outs) - 1
            if not last:
                L.append(_act(KIND_RELU, (1, co, hw, hw)))
            c = co
    return NetworkDescriptor(
        "deconvnet", L, executable=True, switch_sources=switch_sources
    )


def build_fcln() -> NetworkDescriptor:
    layers = []
    cin = 3
    cur = 512
    for stage, (ch, reps) in enumerate(_VGG_PLAN):
        for _ in range(reps):
            layers.append(_conv((1, cin, cur, cur), ch, 3, 1, 1))
            layers.append(_act(KIND_RELU, (1, ch, cur, cur)))
            cin = ch
        if stage < 4:
            layers.append(_pool(KIND_POOL_MAX, (1, ch, cur, cur), 2, 2))
            cur //= 2
    breaks = set()
    layers.append(_conv((1, 512, 32, 32), 256, 3, 1, 1))  # localization trunk
    layers.append(_act(KIND_RELU, (1, 256, 32, 32)))
    layers.append(_conv((1, 256, 32, 32), 60, 1, 1, 0))   # anchor scores/offsets
    breaks.add(len(layers))
    layers.append(_fc((100, 25088), 4096))                # 100 region descriptors
    layers.append(_act(KIND_RELU, (100, 4096)))
    breaks.add(len(layers))
    layers.append(_lstm(1, 4096, 512, 12))                # caption decoder
    layers.append(_fc((12, 1, 512), 10000))               # vocabulary scores
    return NetworkDescriptor("fcln", layers, executable=False, stage_breaks=breaks)


def build_s2vt() -> NetworkDescriptor:
    layers, cur = _vgg16_conv_stack(16, 224)     # 16 video frames per clip
    feat = 512 * cur * cur
    layers.append(_fc((16, feat), 500))          # per-frame feature projection
    breaks = {len(layers)}
    layers.append(_lstm(1, 500, 1000, 28))       # 16 encode + 12 decode steps
    layers.append(_lstm(1, 1000, 1000, 28))
    layers.append(_fc((28, 1, 1000), 12000))     # word scores
    return NetworkDescriptor("s2vt", layers, executable=False, stage_breaks=breaks)


def build_syntaxnet() -> NetworkDescriptor:
    # Transition parser: 32 parse steps of the feed-forward scorer over
    # 48 feature embeddings x 64 dims.
    L = [
        _fc((32, 3072), 2048),
        _act(KIND_RELU, (32, 2048)),
        _fc((32, 2048), 2048),
        _act(KIND_RELU, (32, 2048)),
        _fc((32, 2048), 93),   # transition action scores
    ]
    return NetworkDescriptor("syntaxnet", L, executable=False)


def _sparse_variant(desc: NetworkDescriptor) -> NetworkDescriptor:
    layers = [
        s.with_(sparsity=SPARSE_MACRO_DENSITY) if s.kind in (KIND_CONV, KIND_FC) else s
        for s in desc.layers
    ]
    return NetworkDescriptor(
        name=desc.name + "_sparse",
        layers=layers,
        edges=list(desc.edges),
        variant="sparse",
        executable=desc.executable,
        stage_breaks=set(desc.stage_breaks),
        switch_sources=dict(desc.switch_sources),
    )


_BUILDERS = [
    build_lenet5,
    build_rnn,
    build_alexnet,
    build_vgg16,
    build_resnet50,
    build_fasterrcnn,
    build_deepface,
    build_deconvnet,
    build_fcln,
    build_s2vt,
    build_syntaxnet,
]

_SPARSE_BASES = ("lenet5", "alexnet", "vgg16")

_CACHE: dict[str, NetworkDescriptor] | None = None


def macro_networks() -> dict[str, NetworkDescriptor]:
    """All shipped macro descriptors (11 dense + 3 sparse), by name."""
    global _CACHE
    if _CACHE is None:
        nets = {}
        for build in _BUILDERS:
            d = build()
            nets[d.name] = d
        for base in _SPARSE_BASES:
            sv = _sparse_variant(nets[base])
            nets[sv.name] = sv
        _CACHE = nets
    return _CACHE


@dataclass(frozen=True)
class MacroBenchmark:
    bench_id: str
    network: str

    @property
    def descriptor(self) -> NetworkDescriptor:
        return macro_networks()[self.network]


def macro_benchmarks() -> list[MacroBenchmark]:
    return [MacroBenchmark(f"net/{name}", name) for name in macro_networks()]


def nth_of_kind(desc: NetworkDescriptor, kind: str, occurrence: int) -> tuple[int, LayerSpec]:
    """(index, spec) of the n-th (0-based) layer of `kind` in a descriptor."""
    seen = 0
    for i, s in enumerate(desc.layers):
        if s.kind == kind:
            if seen == occurrence:
                return i, s
            seen += 1
    raise LookupError(f"{desc.name} has no occurrence {occurrence} of {kind}")
