#!/usr/bin/env python3
"""Exports torchvision MobileNetV2 to ONNX with weight payloads stripped.

Tensor shapes survive, so channel counts can still be read. Usage:
export_onnx_fixture.py [out.onnx]
"""
import sys

import onnx
import torch
import torchvision


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else "fixtures/onnx/mobilenet_v2.onnx"
    model = torchvision.models.mobilenet_v2(weights=None).eval()
    tmp = out + ".full"
    torch.onnx.export(model, torch.zeros(1, 3, 224, 224), tmp, input_names=["image"], output_names=["logits"],
                      opset_version=13, dynamo=False)
    proto = onnx.load(tmp)
    for t in proto.graph.initializer:
        t.ClearField("raw_data")
        t.ClearField("float_data")
    onnx.save(proto, out)


if __name__ == "__main__":
    main()
