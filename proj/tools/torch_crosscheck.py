#!/usr/bin/env python3
"""Independent PyTorch training of the basic architecture on a bundle.

Used to check that the desk-scale abundance errors are a property of MSE
training and not of this library's hand-written backward pass:

    aeunmix gen --out desk.json --seed 2024 --set bands=50 width=40 height=50
    python3 tools/torch_crosscheck.py desk.json --lr 1e-3 --epochs 100 --batch 16
"""

import argparse
import itertools
import json
from pathlib import Path

import numpy as np
import torch


def load(header_path):
    header = json.loads(Path(header_path).read_text())
    root = Path(header_path).parent
    b, m, e = header["bands"], header["pixel_count"], header["endmember_count"]
    payload = header["payload_files"]

    def read(key):
        return np.fromfile(root / payload[key]["file"], np.float32).astype(np.float64)

    x = read("pixels").reshape(b, m)                 # band-major
    w = read("endmembers").reshape(e, b).T           # column-major B x E
    a = read("abundances").reshape(m, e).T           # column-major E x M
    return x, w, a


def spectral_angle(u, v):
    return float(np.arccos(np.clip(u @ v / (np.linalg.norm(u) * np.linalg.norm(v)), -1.0, 1.0)))


def train(x, e, n1, lr, epochs, batch, seed):
    torch.manual_seed(seed)
    b, m = x.shape
    enc1, enc2 = torch.nn.Linear(b, n1 * e), torch.nn.Linear(n1 * e, e)
    dec = torch.nn.Linear(e, b, bias=False)
    for layer in (enc1, enc2, dec):
        torch.nn.init.kaiming_uniform_(layer.weight, nonlinearity="relu")
        if layer.bias is not None:
            torch.nn.init.zeros_(layer.bias)

    def encode(t):
        r = torch.relu(enc2(torch.relu(enc1(t))))
        return r / (r.sum(1, keepdim=True) + 1e-12)

    params = [*enc1.parameters(), *enc2.parameters(), *dec.parameters()]
    opt = torch.optim.Adam(params, lr=lr)
    xt = torch.tensor(x.T)
    order = torch.Generator().manual_seed(1000 + seed)
    for _ in range(epochs):
        perm = torch.randperm(m, generator=order)
        for start in range(0, m, batch):
            xb = xt[perm[start:start + batch]]
            loss = ((dec(encode(xb)) - xb) ** 2).mean()
            opt.zero_grad()
            loss.backward()
            opt.step()
    with torch.no_grad():
        return dec.weight.numpy().copy(), encode(xt).numpy().T


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("bundle")
    ap.add_argument("--lr", type=float, default=1e-3)
    ap.add_argument("--epochs", type=int, default=100)
    ap.add_argument("--batch", type=int, default=16)
    ap.add_argument("--n1", type=int, default=10)
    ap.add_argument("--runs", type=int, default=10)
    args = ap.parse_args()

    torch.set_num_threads(1)
    torch.set_default_dtype(torch.float64)
    x, w, a = load(args.bundle)
    e = w.shape[1]
    best = None
    for seed in range(args.runs):
        w_hat, a_hat = train(x, e, args.n1, args.lr, args.epochs, args.batch, seed)
        recon = float(np.sqrt(np.mean((w_hat @ a_hat - x) ** 2)))
        perm = min(itertools.permutations(range(e)),
                   key=lambda p: sum(spectral_angle(w_hat[:, p[j]], w[:, j]) for j in range(e)))
        arm = float(np.sqrt(np.mean([(a_hat[perm[j]] - a[j]) ** 2 for j in range(e)])))
        sad = float(np.mean([spectral_angle(w_hat[:, perm[j]], w[:, j]) for j in range(e)]))
        print(f"run {seed}: recon_rmse {recon:.2e} abundance_rmse {arm:.4f} endmember_sad {sad:.4f}", flush=True)
        best = arm if best is None else min(best, arm)
    print(f"best abundance_rmse {best:.4f}")


if __name__ == "__main__":
    main()
