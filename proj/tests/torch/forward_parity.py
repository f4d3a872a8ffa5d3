"""Independent PyTorch implementation of the generator, checked against `sixway infer`.

Usage: forward_parity.py <sixway binary> <scratch dir>
"""

import json
import struct
import subprocess
import sys
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

GROUPS = [(4, 5), (0, 1), (2, 3), (6, 7)]  # Lz+/Lz-, Lx+/Lx-, Ly+/Ly-, T/E in stacked order


def read_pfm(path):
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    kind, dims, scale = parts[0], parts[1].split(), float(parts[2])
    w, h = int(dims[0]), int(dims[1])
    ch = 3 if kind == b"PF" else 1
    dtype = "<f4" if scale < 0 else ">f4"
    arr = np.frombuffer(parts[3], dtype=dtype, count=w * h * ch).reshape(h, w, ch)
    return np.ascontiguousarray(arr[::-1].transpose(2, 0, 1)).astype(np.float32)  # [c, h, w], top row first


def read_nsw(path):
    data = Path(path).read_bytes()
    assert data[:4] == b"NSW1", "bad magic"
    version, desc_len = struct.unpack_from("<II", data, 4)
    assert version == 1
    off = 12
    arch = json.loads(data[off:off + desc_len])
    off += desc_len
    records = {}
    while off < len(data):
        (name_len,) = struct.unpack_from("<H", data, off)
        off += 2
        name = data[off:off + name_len].decode()
        off += name_len
        rank = data[off]
        off += 1
        shape = struct.unpack_from("<" + "I" * rank, data, off)
        off += 4 * rank
        count = int(np.prod(shape)) if rank else 1
        records[name] = torch.from_numpy(np.frombuffer(data, "<f4", count, off).reshape(shape).astype(np.float64))
        off += 4 * count
    return arch, records


class Generator:
    def __init__(self, arch, w):
        self.a, self.w = arch, w

    def width(self, level):
        return min(self.a["base_width"] << level, self.a["max_width"])

    def conv(self, name, x, stride=1, pad=None, groups=1):
        k = self.w[name + ".weight"]
        if pad is None:
            pad = (k.shape[-1] - 1) // 2
        return F.conv2d(x, k, self.w[name + ".bias"], stride=stride, padding=pad, groups=groups)

    def norm(self, x, prefix):
        mu = x.mean(1, keepdim=True)
        var = ((x - mu) ** 2).mean(1, keepdim=True)
        y = (x - mu) / torch.sqrt(var + self.a["norm_eps"])
        return y * self.w[prefix + ".weight"].view(1, -1, 1, 1) + self.w[prefix + ".bias"].view(1, -1, 1, 1)

    @staticmethod
    def gate(x):
        a, b = x.chunk(2, dim=1)
        return a * b

    def block(self, p, inp):
        x = self.norm(inp, p + ".norm1")
        x = self.conv(p + ".conv1", x)
        x = self.conv(p + ".conv2", x, groups=x.shape[1])
        x = self.gate(x)
        x = x * self.conv(p + ".sca", x.mean((2, 3), keepdim=True))
        x = self.conv(p + ".conv3", x)
        y = inp + x * self.w[p + ".beta"].view(1, -1, 1, 1)
        x = self.norm(y, p + ".norm2")
        x = self.gate(self.conv(p + ".conv4", x))
        x = self.conv(p + ".conv5", x)
        return y + x * self.w[p + ".gamma"].view(1, -1, 1, 1)

    def forward(self, inp):
        a = self.a
        levels, blocks = a["encoder_levels"], a["blocks_per_level"]
        h, w = inp.shape[2:]
        m = 1 << levels
        ph, pw = (m - h % m) % m, (m - w % m) % m
        x = F.pad(inp, (0, pw, 0, ph), mode="reflect") if ph or pw else inp
        x = self.conv("stem", x)
        skips = []
        for i in range(levels):
            for j in range(blocks):
                x = self.block(f"enc{i}.block{j}", x)
            skips.append(x)
            x = self.conv(f"down{i}", x, stride=2, pad=0)
        for j in range(blocks):
            x = self.block(f"mid.block{j}", x)
        for i in reversed(range(levels)):
            x = self.conv(f"up{i}", F.interpolate(x, scale_factor=2, mode="nearest"))
            x = self.conv(f"fuse{i}", torch.cat([x, skips[i]], 1))
            for j in range(blocks):
                x = self.block(f"dec{i}.block{j}", x)
        out = torch.zeros(1, 8, x.shape[2], x.shape[3], dtype=x.dtype)
        for g, dst in enumerate(GROUPS):
            y = x
            for j in range(a["adapter_blocks"]):
                y = self.block(f"adapter{g}.block{j}", y)
            y = torch.sigmoid(self.conv(f"adapter{g}.proj", y))
            out[0, dst[0]], out[0, dst[1]] = y[0, 0], y[0, 1]
        return out[:, :, :h, :w]


def run(cli, *args):
    r = subprocess.run([cli, *args], capture_output=True, text=True)
    if r.returncode != 0:
        sys.exit(f"{' '.join(args)} failed: {r.stderr}")


def max_diff(cli, root, name, init_args, guide_args, corrupt=None):
    d = root / name
    run(cli, "gen", "--kind", "plume", "--dims", "24", "24", "24", "--frames", "1", "--out", str(d / "gen"))
    run(cli, "guide", "--grid", str(d / "gen" / "frame_00000.dgrid"), *guide_args, "--out", str(d / "guide"))
    run(cli, "init-weights", *init_args, "--out", str(d / "w"))
    run(cli, "infer", "--guiding", str(d / "guide" / "guiding.pfm"), "--weights", str(d / "w" / "weights.nsw"),
        "--out", str(d / "infer"))

    guide = torch.from_numpy(read_pfm(d / "guide" / "guiding.pfm")).double()
    depth_scale = json.loads((d / "guide" / "guiding.pfm.json").read_text())["depth_scale"]
    guide[2] /= depth_scale
    arch, weights = read_nsw(d / "w" / "weights.nsw")
    if corrupt:
        weights[corrupt] = weights[corrupt].clone()
        weights[corrupt].view(-1)[0] += 0.5
    ref = Generator(arch, weights).forward(guide.unsqueeze(0))[0].numpy()
    stacked = read_pfm(d / "infer" / "lightmaps.pfm")[0]
    h = stacked.shape[0] // 8
    got = stacked.reshape(8, h, stacked.shape[1])
    assert got.shape == ref.shape, (got.shape, ref.shape)
    return float(np.abs(got - ref).max())


def main():
    cli, root = sys.argv[1], Path(sys.argv[2])
    root.mkdir(parents=True, exist_ok=True)
    torch.set_num_threads(1)
    small = ["--levels", "3", "--base-width", "8", "--max-width", "32", "--blocks", "1", "--adapter-blocks", "1"]
    cases = [
        ("small_padded", ["--init", "random", "--init-seed", "11", *small], ["--width", "45", "--height", "38"], None, "<=", 1e-3),
        ("default_arch", ["--init", "random", "--init-seed", "12"], ["--res", "64"], None, "<=", 1e-3),
        ("zero_weights", ["--init", "zero"], ["--res", "48"], None, "<=", 1e-6),
        ("corrupted_reference", ["--init", "random", "--init-seed", "11", *small], ["--res", "32"], "stem.bias", ">", 1e-3),
    ]
    failed = False
    for name, init_args, guide_args, corrupt, op, tol in cases:
        diff = max_diff(cli, root, name, init_args, guide_args, corrupt)
        ok = diff <= tol if op == "<=" else diff > tol
        failed |= not ok
        print(f"{'PASS' if ok else 'FAIL'} {name}: max |diff| = {diff:.3e} (want {op} {tol:g})")
    if not failed:
        # zero weights must give exactly the logistic of zero everywhere
        zero = read_pfm(root / "zero_weights" / "infer" / "lightmaps.pfm")
        ok = float(np.abs(zero - 0.5).max()) <= 1e-6
        failed |= not ok
        print(f"{'PASS' if ok else 'FAIL'} zero_weights_half: all outputs 0.5")
    sys.exit(1 if failed else 0)


if __name__ == "__main__":
    main()
