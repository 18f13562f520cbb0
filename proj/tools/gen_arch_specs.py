#!/usr/bin/env python3
# Copyright 2026 The fixedhead Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Regenerates the shipped architecture description files.

The layer tables follow the original architecture definitions (the same
layouts torchvision implements). Run from the repository root:

    python3 tools/gen_arch_specs.py architectures/
"""

import json
import sys
from pathlib import Path


def conv(c_in, c_out, k, stride=1, groups=1, bias=False):
    return {"type": "conv", "c_in": c_in, "c_out": c_out, "kh": k, "kw": k,
            "stride": stride, "groups": groups, "bias": bias}


def bn(c):
    return {"type": "batchnorm", "c": c}


def act(fn="relu"):
    return {"type": "activation", "fn": fn}


def residual(branch, shortcut=(), merge="add", split=False):
    return {"type": "residual", "merge": merge, "split": split,
            "branch": list(branch), "shortcut": list(shortcut)}


def head(n_in, k):
    return [{"type": "gap"}, {"type": "fc", "n_in": n_in, "n_out": k, "bias": True}]


def spec(name, k, feature_dim, layers):
    return {"schema": 1, "name": name, "num_classes": k,
            "feature_dim": feature_dim, "input_channels": 3, "layers": layers}


def resnet18(k=1000):
    layers = [conv(3, 64, 7, 2), bn(64), act(),
              {"type": "pool", "kind": "max", "k": 3, "stride": 2}]
    c = 64
    for width, stride in [(64, 1), (128, 2), (256, 2), (512, 2)]:
        for i in range(2):
            s = stride if i == 0 else 1
            branch = [conv(c, width, 3, s), bn(width), act(),
                      conv(width, width, 3, 1), bn(width)]
            shortcut = []
            if s != 1 or c != width:
                shortcut = [conv(c, width, 1, s), bn(width)]
            layers += [residual(branch, shortcut), act()]
            c = width
    return spec("resnet18", k, 512, layers + head(512, k))


def resnet50(k=1000):
    layers = [conv(3, 64, 7, 2), bn(64), act(),
              {"type": "pool", "kind": "max", "k": 3, "stride": 2}]
    c = 64
    for width, blocks, stride in [(64, 3, 1), (128, 4, 2), (256, 6, 2), (512, 3, 2)]:
        out = width * 4
        for i in range(blocks):
            s = stride if i == 0 else 1
            branch = [conv(c, width, 1), bn(width), act(),
                      conv(width, width, 3, s), bn(width), act(),
                      conv(width, out, 1), bn(out)]
            shortcut = []
            if s != 1 or c != out:
                shortcut = [conv(c, out, 1, s), bn(out)]
            layers += [residual(branch, shortcut), act()]
            c = out
    return spec("resnet50", k, 2048, layers + head(2048, k))


def mobilenet_v2(k=1000):
    layers = [conv(3, 32, 3, 2), bn(32), act("relu6")]
    c = 32
    for t, out, n, s in [(1, 16, 1, 1), (6, 24, 2, 2), (6, 32, 3, 2), (6, 64, 4, 2),
                         (6, 96, 3, 1), (6, 160, 3, 2), (6, 320, 1, 1)]:
        for i in range(n):
            stride = s if i == 0 else 1
            hidden = c * t
            body = []
            if t != 1:
                body += [conv(c, hidden, 1), bn(hidden), act("relu6")]
            body += [conv(hidden, hidden, 3, stride, groups=hidden), bn(hidden), act("relu6"),
                     conv(hidden, out, 1), bn(out)]
            if stride == 1 and c == out:
                layers.append(residual(body))
            else:
                layers += body
            c = out
    layers += [conv(320, 1280, 1), bn(1280), act("relu6")]
    return spec("mobilenet_v2", k, 1280, layers + head(1280, k))


def shufflenet_v2_x0_5(k=1000):
    stage_out = [24, 48, 96, 192, 1024]
    layers = [conv(3, 24, 3, 2), bn(24), act(),
              {"type": "pool", "kind": "max", "k": 3, "stride": 2}]
    c = 24
    for repeats, out in zip([4, 8, 4], stage_out[1:4]):
        bf = out // 2
        # Downsampling unit: both paths see the full input, outputs concatenated.
        left = [conv(c, c, 3, 2, groups=c), bn(c), conv(c, bf, 1), bn(bf), act()]
        right = [conv(c, bf, 1), bn(bf), act(), conv(bf, bf, 3, 2, groups=bf), bn(bf),
                 conv(bf, bf, 1), bn(bf), act()]
        layers.append(residual(right, left, merge="concat"))
        for _ in range(repeats - 1):
            # Basic unit: channel split, half passes through untouched.
            right = [conv(bf, bf, 1), bn(bf), act(), conv(bf, bf, 3, 1, groups=bf), bn(bf),
                     conv(bf, bf, 1), bn(bf), act()]
            layers.append(residual(right, [], merge="concat", split=True))
        c = out
    layers += [conv(192, 1024, 1), bn(1024), act()]
    return spec("shufflenet_v2_x0.5", k, 1024, layers + head(1024, k))


def main():
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "architectures")
    out.mkdir(parents=True, exist_ok=True)
    for s in [resnet18(), resnet50(), mobilenet_v2(), shufflenet_v2_x0_5()]:
        path = out / (s["name"] + ".json")
        path.write_text(json.dumps(s, indent=1) + "\n")
        print(path)


if __name__ == "__main__":
    main()
