"""Versioned binary blobs for trained models.

Layout (little endian): ``b"RBLM"``, u16 version, u8 kind, u32 n_features,
n_features x i64 category counts, then a kind-specific body.  Trees are
written in preorder as (i32 feature, f64 threshold, f64 value) records, with
feature -1 marking a leaf.
"""

from __future__ import annotations

import io
import struct

import numpy as np

from .ensembles import BaggedTrees, BoostedTrees, CascadeEnsemble, CostMatrix, CostSensitiveTree
from .tree import DecisionTree

MAGIC = b"RBLM"
VERSION = 1
_KINDS = {"tree": 0, "bagging": 1, "boosted": 2, "cost": 3, "cascade": 4}
_NODE = struct.Struct("<idd")


class CorruptModel(ValueError):
    pass


def _put_tree(out: io.BytesIO, tree: DecisionTree) -> None:
    out.write(struct.pack("<I", tree.n_nodes))
    stack = [0]
    while stack:
        node = stack.pop()
        out.write(_NODE.pack(int(tree.feature[node]), float(tree.threshold[node]), float(tree.value[node])))
        if tree.feature[node] >= 0:
            stack.append(int(tree.right[node]))
            stack.append(int(tree.left[node]))


def _put_boosted(out: io.BytesIO, model: BoostedTrees) -> None:
    out.write(struct.pack("<I", len(model.trees)))
    for a, t in zip(model.alphas, model.trees):
        out.write(struct.pack("<d", float(a)))
        _put_tree(out, t)


def dumps(model) -> bytes:
    out = io.BytesIO()
    ncat = model.ncat if isinstance(model, DecisionTree) else _first_tree(model).ncat
    out.write(MAGIC)
    out.write(struct.pack("<HBI", VERSION, _KINDS[model.kind], ncat.size))
    out.write(np.asarray(ncat, dtype="<i8").tobytes())
    if model.kind == "tree":
        _put_tree(out, model)
    elif model.kind == "bagging":
        out.write(struct.pack("<I", len(model.trees)))
        for t in model.trees:
            _put_tree(out, t)
    elif model.kind == "boosted":
        _put_boosted(out, model)
    elif model.kind == "cost":
        out.write(struct.pack("<dd", model.costs.cost_fp, model.costs.cost_fn))
        _put_tree(out, model.tree)
    else:
        out.write(struct.pack("<I", len(model.members)))
        for theta, m in zip(model.thresholds, model.members):
            out.write(struct.pack("<d", float(theta)))
            _put_boosted(out, m)
    return out.getvalue()


def _first_tree(model) -> DecisionTree:
    if model.kind == "cost":
        return model.tree
    if model.kind == "cascade":
        return model.members[0].trees[0]
    return model.trees[0]


class _Reader:
    def __init__(self, blob: bytes):
        self.buf = memoryview(blob)
        self.pos = 0

    def take(self, fmt: str | struct.Struct):
        st = fmt if isinstance(fmt, struct.Struct) else struct.Struct(fmt)
        if self.pos + st.size > len(self.buf):
            raise CorruptModel("truncated model blob")
        vals = st.unpack_from(self.buf, self.pos)
        self.pos += st.size
        return vals

    def tree(self, ncat) -> DecisionTree:
        (n,) = self.take("<I")
        if n == 0:
            raise CorruptModel("tree with no nodes")
        feature = np.full(n, -1, np.int64)
        threshold = np.zeros(n)
        value = np.zeros(n)
        left = np.full(n, -1, np.int64)
        right = np.full(n, -1, np.int64)
        # preorder ids: the node written i-th gets id i
        pending = []  # (parent, is_left)
        for i in range(n):
            f, t, v = self.take(_NODE)
            if f >= ncat.size:
                raise CorruptModel(f"node {i} splits on feature {f} of {ncat.size}")
            feature[i], threshold[i], value[i] = f, t, v
            if pending:
                parent, is_left = pending.pop()
                (left if is_left else right)[parent] = i
            elif i:
                raise CorruptModel("tree records do not form a single tree")
            if f >= 0:
                pending.append((i, False))
                pending.append((i, True))
        if pending:
            raise CorruptModel("tree records end before every split has two children")
        return DecisionTree(feature, threshold, left, right, value, ncat)

    def boosted(self, ncat) -> BoostedTrees:
        (count,) = self.take("<I")
        trees, alphas = [], []
        for _ in range(count):
            (a,) = self.take("<d")
            alphas.append(a)
            trees.append(self.tree(ncat))
        if not trees:
            raise CorruptModel("empty boosted model")
        return BoostedTrees(trees, alphas)


def loads(blob: bytes):
    r = _Reader(blob)
    if bytes(r.buf[:4]) != MAGIC:
        raise CorruptModel("not a model blob (bad magic)")
    r.pos = 4
    version, kind, d = r.take("<HBI")
    if version != VERSION:
        raise CorruptModel(f"unsupported model version {version}")
    ncat = np.array(r.take(f"<{d}q"), dtype=np.int64)
    if kind == _KINDS["tree"]:
        model = r.tree(ncat)
    elif kind == _KINDS["bagging"]:
        (count,) = r.take("<I")
        model = BaggedTrees([r.tree(ncat) for _ in range(count)])
    elif kind == _KINDS["boosted"]:
        model = r.boosted(ncat)
    elif kind == _KINDS["cost"]:
        fp, fn = r.take("<dd")
        model = CostSensitiveTree(r.tree(ncat), CostMatrix(fp, fn))
    elif kind == _KINDS["cascade"]:
        (count,) = r.take("<I")
        thetas, members = [], []
        for _ in range(count):
            (theta,) = r.take("<d")
            thetas.append(theta)
            members.append(r.boosted(ncat))
        model = CascadeEnsemble(members, thetas)
    else:
        raise CorruptModel(f"unknown model kind {kind}")
    if r.pos != len(r.buf):
        raise CorruptModel("trailing bytes after model")
    return model
