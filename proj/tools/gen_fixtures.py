#!/usr/bin/env python3
"""Regenerates fixtures/*.rfa from published architecture tables.

Activations, batch norm, squeeze-excitation gates and dropout are left out:
they do not move receptive fields. Usage: gen_fixtures.py [outdir]
"""
import math
import sys
from pathlib import Path


class Builder:
    def __init__(self, name, comment="", res=(224, 224), channels=3):
        self.name = name
        self.lines = [f"model {name} input {res[0]}x{res[1]} c={channels}"]
        if comment:
            self.lines = [f"# {line}" for line in comment.strip().splitlines()] + self.lines
        self.prev = "@input"
        self.ch = {"@input": channels}
        self.counter = {}

    def fresh(self, prefix):
        n = self.counter.get(prefix, 0) + 1
        self.counter[prefix] = n
        return f"{prefix}{n}"

    def emit(self, vid, kind, attrs, src, c_out):
        srcs = src if isinstance(src, list) else [src if src is not None else self.prev]
        text = f"{vid}: {kind}"
        if attrs:
            text += " " + " ".join(attrs)
        if srcs != [self.prev]:
            text += " from " + ",".join(srcs)
        self.lines.append(text)
        self.prev = vid
        self.ch[vid] = c_out
        return vid

    def conv(self, vid, k, s, c_out, src=None, groups=1, bias=False, block=None, dw=False, d=1):
        src_id = src if src is not None else self.prev
        c_in = self.ch[src_id]
        attrs = [f"k={k}"] if k != 1 else []
        if s != 1:
            attrs.append(f"s={s}")
        if d != 1:
            attrs.append(f"d={d}")
        attrs.append(f"c={c_in}->{c_out}")
        if groups != 1:
            attrs.append(f"g={groups}")
        if bias:
            attrs.append("bias")
        if block:
            attrs.append(f"block={block}")
        return self.emit(vid, "dwconv" if dw else "conv", attrs, src, c_out)

    def dwconv(self, vid, k, s, src=None, block=None, mult=1):
        src_id = src if src is not None else self.prev
        c = self.ch[src_id]
        return self.conv(vid, k, s, c * mult, src=src, groups=c, block=block, dw=True)

    def pool(self, vid, k, s, src=None, block=None):
        src_id = src if src is not None else self.prev
        attrs = [f"k={k}", f"s={s}"] if s != 1 else [f"k={k}"]
        if block:
            attrs.append(f"block={block}")
        return self.emit(vid, "pool", attrs, src, self.ch[src_id])

    def simple(self, vid, kind, src=None, block=None):
        src_id = src[0] if isinstance(src, list) else (src if src is not None else self.prev)
        attrs = [f"block={block}"] if block else []
        c = self.ch[src_id]
        if kind == "concat":
            c = sum(self.ch[s] for s in src)
        return self.emit(vid, kind, attrs, src, c)

    def dense(self, vid, c_out, c_in=None, src=None, bias=True):
        src_id = src if src is not None else self.prev
        c_in = c_in or self.ch[src_id]
        attrs = [f"c={c_in}->{c_out}"] + (["bias"] if bias else [])
        return self.emit(vid, "dense", attrs, src, c_out)

    def head(self, c_out=1000, src=None):
        self.simple("gap", "gpool", src)
        self.dense("fc", c_out)
        self.simple("out", "output")

    def text(self):
        return "\n".join(self.lines) + "\n"


def make_divisible(v, divisor=8, min_value=None):
    min_value = min_value or divisor
    new_v = max(min_value, int(v + divisor / 2) // divisor * divisor)
    if new_v < 0.9 * v:
        new_v += divisor
    return new_v


VGG_CFG = {
    "vgg11": [64, "M", 128, "M", 256, 256, "M", 512, 512, "M", 512, 512, "M"],
    "vgg13": [64, 64, "M", 128, 128, "M", 256, 256, "M", 512, 512, "M", 512, 512, "M"],
    "vgg16": [64, 64, "M", 128, 128, "M", 256, 256, 256, "M", 512, 512, 512, "M", 512, 512, 512, "M"],
    "vgg19": [64, 64, "M", 128, 128, "M", 256, 256, 256, 256, "M", 512, 512, 512, 512, "M",
              512, 512, 512, 512, "M"],
    # Pooling after the fourth conv, then after every third.
    "vgg19_pool_rearranged": [64, 64, 128, 128, "M", 256, 256, 256, "M", 256, 512, 512, "M",
                              512, 512, 512, "M", 512, 512, 512, "M"],
}


def vgg(name, comment=""):
    b = Builder(name, comment)
    for item in VGG_CFG[name]:
        if item == "M":
            b.pool(b.fresh("pool"), 2, 2)
        else:
            b.conv(b.fresh("conv"), 3, 1, item, bias=True)
    b.simple("avgpool", "neutral")  # adaptive 7x7 average pool
    b.dense("fc1", 4096, c_in=512 * 7 * 7)
    b.dense("fc2", 4096)
    b.dense("fc3", 1000)
    b.simple("out", "output")
    return b


def resnet(name, layers, bottleneck):
    b = Builder(name)
    b.conv("stem", 7, 2, 64)
    b.pool("maxpool", 3, 2)
    in_c = 64
    for stage, (width, n) in enumerate(zip([64, 128, 256, 512], layers), start=1):
        for i in range(n):
            s = 2 if stage > 1 and i == 0 else 1
            blk = f"s{stage}b{i + 1}"
            x = b.prev
            out_c = width * 4 if bottleneck else width
            if bottleneck:
                b.conv(f"{blk}_conv1", 1, 1, width, block=blk)
                b.conv(f"{blk}_conv2", 3, s, width, block=blk)
                b.conv(f"{blk}_conv3", 1, 1, out_c, block=blk)
            else:
                b.conv(f"{blk}_conv1", 3, s, width, block=blk)
                b.conv(f"{blk}_conv2", 3, 1, width, block=blk)
            main = b.prev
            skip = x
            if s != 1 or in_c != out_c:
                skip = b.conv(f"{blk}_down", 1, s, out_c, src=x, block=blk)
            b.simple(f"{blk}_add", "add", src=[main, skip], block=blk)
            in_c = out_c
    b.head()
    return b


def mobilenet_v1():
    b = Builder("mobilenet_v1")
    b.conv("conv1", 3, 2, 32)
    cfg = [(64, 1), (128, 2), (128, 1), (256, 2), (256, 1), (512, 2)] + [(512, 1)] * 5 + [(1024, 2), (1024, 1)]
    for i, (c, s) in enumerate(cfg, start=2):
        b.dwconv(f"dw{i}", 3, s)
        b.conv(f"pw{i}", 1, 1, c)
    b.head()
    return b


def inverted_residual(b, blk, expand_c, out_c, k, s, residual):
    x = b.prev
    if expand_c != b.ch[x]:
        b.conv(f"{blk}_expand", 1, 1, expand_c, block=blk)
    b.dwconv(f"{blk}_dw", k, s, block=blk)
    b.conv(f"{blk}_project", 1, 1, out_c, block=blk)
    if residual:
        b.simple(f"{blk}_add", "add", src=[b.prev, x], block=blk)


def mobilenet_v2():
    b = Builder("mobilenet_v2")
    b.conv("stem", 3, 2, 32)
    settings = [(1, 16, 1, 1), (6, 24, 2, 2), (6, 32, 3, 2), (6, 64, 4, 2), (6, 96, 3, 1), (6, 160, 3, 2),
                (6, 320, 1, 1)]
    for stage, (t, c, n, s) in enumerate(settings, start=1):
        for i in range(n):
            stride = s if i == 0 else 1
            in_c = b.ch[b.prev]
            inverted_residual(b, f"s{stage}b{i + 1}", in_c * t, c, 3, stride, stride == 1 and in_c == c)
    b.conv("last", 1, 1, 1280)
    b.head()
    return b


MNV3_LARGE = [(3, 16, 16, 1), (3, 64, 24, 2), (3, 72, 24, 1), (5, 72, 40, 2), (5, 120, 40, 1), (5, 120, 40, 1),
              (3, 240, 80, 2), (3, 200, 80, 1), (3, 184, 80, 1), (3, 184, 80, 1), (3, 480, 112, 1),
              (3, 672, 112, 1), (5, 672, 160, 2), (5, 960, 160, 1), (5, 960, 160, 1)]
MNV3_SMALL = [(3, 16, 16, 2), (3, 72, 24, 2), (3, 88, 24, 1), (5, 96, 40, 2), (5, 240, 40, 1), (5, 240, 40, 1),
              (5, 120, 48, 1), (5, 144, 48, 1), (5, 288, 96, 2), (5, 576, 96, 1), (5, 576, 96, 1)]


def mobilenet_v3(name, cfg, last_c, hidden):
    b = Builder(name)
    b.conv("stem", 3, 2, 16)
    for i, (k, exp, out, s) in enumerate(cfg, start=1):
        in_c = b.ch[b.prev]
        inverted_residual(b, f"b{i}", exp, out, k, s, s == 1 and in_c == out)
    b.conv("last", 1, 1, last_c)
    b.simple("gap", "gpool")
    b.dense("fc1", hidden)
    b.dense("fc2", 1000)
    b.simple("out", "output")
    return b


def mnasnet():
    b = Builder("mnasnet")
    b.conv("stem", 3, 2, 32)
    b.dwconv("stem_dw", 3, 1)
    b.conv("stem_pw", 1, 1, 16)
    stacks = [(24, 3, 2, 3, 3), (40, 5, 2, 3, 3), (80, 5, 2, 6, 3), (96, 3, 1, 6, 2), (192, 5, 2, 6, 4),
              (320, 3, 1, 6, 1)]
    for stage, (out, k, s, exp, n) in enumerate(stacks, start=1):
        for i in range(n):
            stride = s if i == 0 else 1
            in_c = b.ch[b.prev]
            inverted_residual(b, f"s{stage}b{i + 1}", in_c * exp, out, k, stride, stride == 1 and in_c == out)
    b.conv("last", 1, 1, 1280)
    b.head()
    return b


EFFICIENTNET = {
    "b0": (1.0, 1.0), "b1": (1.0, 1.1), "b2": (1.1, 1.2), "b3": (1.2, 1.4),
    "b4": (1.4, 1.8), "b5": (1.6, 2.2), "b6": (1.8, 2.6), "b7": (2.0, 3.1),
}
EFFICIENTNET_STAGES = [(1, 3, 1, 16, 1), (6, 3, 2, 24, 2), (6, 5, 2, 40, 2), (6, 3, 2, 80, 3), (6, 5, 1, 112, 3),
                       (6, 5, 2, 192, 4), (6, 3, 1, 320, 1)]


def efficientnet(variant):
    width, depth = EFFICIENTNET[variant]
    b = Builder(f"efficientnet_{variant}")
    b.conv("stem", 3, 2, make_divisible(32 * width))
    for stage, (t, k, s, c, n) in enumerate(EFFICIENTNET_STAGES, start=1):
        out = make_divisible(c * width)
        for i in range(int(math.ceil(n * depth))):
            stride = s if i == 0 else 1
            in_c = b.ch[b.prev]
            inverted_residual(b, f"s{stage}b{i + 1}", in_c * t, out, k, stride, stride == 1 and in_c == out)
    b.conv("last", 1, 1, 4 * make_divisible(320 * width))
    b.head()
    return b


def convnext_t():
    b = Builder("convnext_t")
    dims, depths = [96, 192, 384, 768], [3, 3, 9, 3]
    b.conv("patchify", 4, 4, dims[0], bias=True)
    for stage, (dim, n) in enumerate(zip(dims, depths), start=1):
        if stage > 1:
            b.conv(f"down{stage}", 2, 2, dim, bias=True)
        for i in range(n):
            blk = f"s{stage}b{i + 1}"
            x = b.prev
            b.conv(f"{blk}_dw", 7, 1, dim, groups=dim, bias=True, block=blk, dw=True)
            b.conv(f"{blk}_pw1", 1, 1, 4 * dim, bias=True, block=blk)
            b.conv(f"{blk}_pw2", 1, 1, dim, bias=True, block=blk)
            b.simple(f"{blk}_add", "add", src=[b.prev, x], block=blk)
    b.simple("gap", "gpool")
    b.dense("fc", 1000)
    b.simple("out", "output")
    return b


def densenet121():
    b = Builder("densenet121")
    b.conv("stem", 7, 2, 64)
    b.pool("maxpool", 3, 2)
    growth, feats = 32, [b.prev]
    for stage, n in enumerate([6, 12, 24, 16], start=1):
        for i in range(n):
            blk = f"d{stage}l{i + 1}"
            src = b.simple(f"{blk}_cat", "concat", src=list(feats)) if len(feats) > 1 else feats[0]
            b.conv(f"{blk}_conv1", 1, 1, 4 * growth, src=src)
            feats.append(b.conv(f"{blk}_conv2", 3, 1, growth))
        cat = b.simple(f"d{stage}_cat", "concat", src=list(feats))
        if stage < 4:
            b.conv(f"t{stage}_conv", 1, 1, b.ch[cat] // 2)
            feats = [b.pool(f"t{stage}_pool", 2, 2)]
    b.head()
    return b


def nasnet_mobile():
    """Converts the Keras NASNetMobile layer graph."""
    import os

    os.environ.setdefault("TF_CPP_MIN_LOG_LEVEL", "3")
    import tensorflow as tf

    model = tf.keras.applications.NASNetMobile(weights=None, input_shape=(224, 224, 3))
    b = Builder("nasnet_a_mobile")
    ids = {}

    def sid(name):
        return name.replace("/", "_").replace("-", "_")

    for layer in model.layers:
        inbound = []
        for node in layer._inbound_nodes:
            for t in tf.nest.flatten(node.input_tensors if hasattr(node, "input_tensors") else []):
                inbound.append(ids[t._keras_history[0].name])
        cls = type(layer).__name__
        if cls == "InputLayer":
            ids[layer.name] = "@input"
            continue
        vid = sid(layer.name)
        src = inbound if len(inbound) > 1 else inbound[0]
        cfg = layer.get_config()
        if cls == "Conv2D":
            k, s = cfg["kernel_size"], cfg["strides"]
            b.conv(vid, k[0], s[0], cfg["filters"], src=src, bias=cfg["use_bias"])
        elif cls == "SeparableConv2D":
            k, s = cfg["kernel_size"], cfg["strides"]
            b.dwconv(vid + "_dw", k[0], s[0], src=src)
            b.conv(vid, 1, 1, cfg["filters"], bias=cfg["use_bias"])
        elif cls == "DepthwiseConv2D":
            k, s = cfg["kernel_size"], cfg["strides"]
            b.dwconv(vid, k[0], s[0], src=src)
        elif cls in ("MaxPooling2D", "AveragePooling2D"):
            b.pool(vid, cfg["pool_size"][0], cfg["strides"][0], src=src)
        elif cls == "GlobalAveragePooling2D":
            b.simple(vid, "gpool", src=src)
        elif cls == "Dense":
            b.dense(vid, cfg["units"], src=src)
        elif cls == "Add":
            b.simple(vid, "add", src=src)
        elif cls == "Concatenate":
            b.simple(vid, "concat", src=src)
        else:
            b.simple(vid, "neutral", src=src)
        ids[layer.name] = vid
    b.simple("out", "output")
    return b


def fixtures():
    yield vgg("vgg11")
    yield vgg("vgg13")
    yield vgg("vgg16")
    yield vgg("vgg19")
    yield vgg("vgg19_pool_rearranged", "VGG19 with the first max pool after conv4 and one pool after every third conv.")
    yield resnet("resnet18", [2, 2, 2, 2], False)
    yield resnet("resnet34", [3, 4, 6, 3], False)
    yield resnet("resnet50", [3, 4, 6, 3], True)
    yield mobilenet_v1()
    yield mobilenet_v2()
    yield mobilenet_v3("mobilenet_v3_small", MNV3_SMALL, 576, 1024)
    yield mobilenet_v3("mobilenet_v3_large", MNV3_LARGE, 960, 1280)
    yield mnasnet()
    for v in EFFICIENTNET:
        yield efficientnet(v)
    yield convnext_t()
    yield densenet121()
    yield nasnet_mobile()


def main():
    out = Path(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "fixtures")
    out.mkdir(parents=True, exist_ok=True)
    for b in fixtures():
        (out / f"{b.name}.rfa").write_text(b.text())
        print(f"{b.name}: {len(b.lines)} lines")


if __name__ == "__main__":
    main()
