"""Command-line front end.

Subcommands: train, eval, sample, factorize, ranks, circuit, convert.
Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
Every command is deterministic given --seed; --deterministic additionally
zeroes wall-clock columns so metrics files are byte-identical across runs.
"""

import argparse
import os
import sys

import numpy as np

from . import circuits as circ
from . import data as dt
from . import hmm as hm
from . import models as md
from . import serialize as ser
from . import training as tr
from .certify import CertRow, full_report
from .dense import DEFAULT_DENSE_CAP
from .errors import (
    DataFormatError,
    DenseCapExceeded,
    NumericalError,
    ShapeError,
    TnfactError,
    ZeroNormalizationError,
    ZeroProbabilitySample,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit2(EXIT_USAGE, message)


class SystemExit2(Exception):
    def __init__(self, code, message):
        self.code = code
        self.message = message


def _kv_spec(text):
    """Parse 'name:key=val,key=val' generator specs."""
    name, _, rest = text.partition(":")
    out = {}
    if rest:
        for part in rest.split(","):
            key, _, val = part.partition("=")
            out[key.strip()] = val.strip()
    return name.strip(), out


def _int_list(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _float_list(text):
    return [float(v) for v in text.split(",") if v.strip()]


def build_parser():
    parser = _Parser(prog="tnfact",
                     description="tensor-network factorizations of discrete "
                                 "probability distributions")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--deterministic", action="store_true")
    common.add_argument("--out-dir", default=".")
    common.add_argument("--dense-cap", type=int, default=DEFAULT_DENSE_CAP)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[common],
                       help="maximum-likelihood training")
    p.add_argument("--dataset", help="dataset CSV path")
    p.add_argument("--synth", help="synthetic generator, e.g. "
                                   "hmm:rank=4,n=8,d=2,rows=2000")
    p.add_argument("--kind", required=True, choices=tr.KINDS)
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--puri-dim", type=int, default=2)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=20)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--lr-grid", help="comma list of learning rates, or "
                                     "'wide' for powers of 10 in 1e-5..1e5")
    p.add_argument("--split-sizes", help="train,valid,test row counts")
    p.add_argument("--plot", action="store_true")

    p = sub.add_parser("eval", parents=[common], help="NLL of a model on data")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", default=None)

    p = sub.add_parser("sample", parents=[common], help="draw exact samples")
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--out", default=None, help="CSV path (default stdout)")

    p = sub.add_parser("factorize", parents=[common],
                       help="KL factorization sweep over random targets")
    p.add_argument("--dims", default="20,20",
                   help="target tensor dims, e.g. 20,20 or 2x8 as 2,2,...")
    p.add_argument("--kinds", default="mps-nonneg,born-real,born-complex,"
                                      "lps-real,lps-complex")
    p.add_argument("--ranks", default="2,3,4,5")
    p.add_argument("--puri-dim", type=int, default=2)
    p.add_argument("--instances", type=int, default=50)
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--maxiter", type=int, default=100)
    p.add_argument("--plot", action="store_true")

    p = sub.add_parser("ranks", parents=[common],
                       help="witness-matrix certificate report")

    p = sub.add_parser("circuit", parents=[common],
                       help="compile a 2-local circuit and verify it")
    p.add_argument("--circuit", help="circuit JSON path")
    p.add_argument("--random", help="random brick-wall spec, e.g. "
                                    "n=4,d=2,depth=2")
    p.add_argument("--ancilla", type=int, default=0,
                   help="ancilla dimension; 0 compiles a Born machine, "
                        ">0 an alternating system/ancilla LPS")

    p = sub.add_parser("convert", parents=[common],
                       help="apply a constructive conversion")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--to", required=True, choices=["lps-real", "mps-real"])
    return parser


# ---------------------------------------------------------------------------
# command implementations
# ---------------------------------------------------------------------------

def _load_dataset(args):
    if args.dataset:
        ds = dt.load_csv(args.dataset)
    elif getattr(args, "synth", None):
        name, kv = _kv_spec(args.synth)
        if name != "hmm":
            raise ShapeError(f"unknown synthetic generator {name!r}")
        n = int(kv.get("n", 8))
        d = int(kv.get("d", 2))
        rank = int(kv.get("rank", 4))
        rows = int(kv.get("rows", 2000))
        gen = hm.random_hmm(n, rank, d, seed=args.seed + 7919)
        samples = md.sample_batch(hm.hmm_to_mps(gen), rows,
                                  seed=args.seed + 104729)
        ds = dt.dataset_from_rows(samples, d)
    else:
        raise ShapeError("provide --dataset or --synth")
    if getattr(args, "split_sizes", None):
        ds = ds.with_contiguous_splits(_int_list(args.split_sizes))
    return ds


def cmd_train(args):
    ds = _load_dataset(args)
    train_rows = ds.split_rows("train") if "train" in ds.splits else ds.rows
    valid_rows = ds.split_rows("valid") if "valid" in ds.splits else None
    test_rows = ds.split_rows("test") if "test" in ds.splits else None

    cfg = tr.TrainConfig(learning_rate=args.lr, batch_size=args.batch_size,
                         epochs=args.epochs, seed=args.seed,
                         deterministic=args.deterministic)

    def make_initial():
        return tr.make_model(args.kind, ds.n_vars, ds.phys_dim, args.rank,
                             args.puri_dim, seed=args.seed)

    if args.lr_grid:
        lrs = (tr.learning_rate_grid() if args.lr_grid == "wide"
               else _float_list(args.lr_grid))
        best_lr, report = tr.sgd_train_grid(make_initial, train_rows, cfg,
                                            lrs=lrs, valid_data=valid_rows)
    else:
        best_lr = args.lr
        report = tr.sgd_train(make_initial(), train_rows, cfg,
                              valid_data=valid_rows)

    os.makedirs(args.out_dir, exist_ok=True)
    model_path = os.path.join(args.out_dir, "model.json")
    metrics_path = os.path.join(args.out_dir, "metrics.csv")
    selected = report.valid_model if valid_rows is not None else report.model
    ser.save(selected, model_path)
    report.write_csv(metrics_path, deterministic=args.deterministic)
    if args.plot:
        from .plots import train_curves
        train_curves(report, os.path.join(args.out_dir, "train_nll.png"))

    summary = [f"kind={args.kind}", f"rank={args.rank}", f"lr={best_lr}",
               f"best_train_nll={report.best('train'):.6f}"]
    if valid_rows is not None:
        summary.append(f"best_valid_nll={report.best('valid'):.6f}")
    if test_rows is not None and len(test_rows):
        summary.append(f"test_nll={tr.nll(selected, test_rows):.6f}")
    if report.diverged:
        summary.append("diverged=1")
    print(" ".join(summary))
    return EXIT_OK


def cmd_eval(args):
    model = ser.load(args.model)
    ds = dt.load_csv(args.dataset)
    rows = ds.split_rows(args.split) if args.split else ds.rows
    if isinstance(model, hm.Hmm):
        value = -hm.data_log_likelihood(model, rows)
    else:
        value = tr.nll(model, rows)
    print(f"nll_per_sample={value:.6f} rows={len(rows)}")
    return EXIT_OK


def cmd_sample(args):
    model = ser.load(args.model)
    if isinstance(model, hm.Hmm):
        model = hm.hmm_to_mps(model)
    rows = md.sample_batch(model, args.n, seed=args.seed)
    ds = dt.dataset_from_rows(rows, model.phys_dim) if args.n else \
        dt.Dataset((model.phys_dim,) * model.n_sites,
                   np.zeros((0, model.n_sites), dtype=np.int64))
    if args.out:
        dt.write_csv(ds, args.out)
    else:
        dt.write_csv(ds, "/dev/stdout")
    return EXIT_OK


def cmd_factorize(args):
    dims = _int_list(args.dims)
    size = int(np.prod(dims))
    if size > args.dense_cap:
        raise DenseCapExceeded(size, args.dense_cap)
    if len(set(dims)) != 1:
        raise ShapeError("target dims must be uniform")
    kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
    ranks = _int_list(args.ranks)
    inst_seeds = np.random.SeedSequence(args.seed).spawn(args.instances)

    targets = []
    for ss in inst_seeds:
        p = np.random.default_rng(ss).uniform(size=tuple(dims))
        targets.append(p / p.sum())

    rows = []
    for kind in kinds:
        for rank in ranks:
            kls = []
            for inst, p in enumerate(targets):
                cfg = tr.TrainConfig(seed=args.seed + 1000 * inst,
                                     restarts=args.restarts,
                                     lbfgs_maxiter=args.maxiter,
                                     optimizer="lbfgs")
                rep = tr.fit_dense(p, kind, rank, puri_dim=args.puri_dim,
                                   config=cfg, dense_cap=args.dense_cap)
                kls.append(rep.best("restart"))
            template = tr.make_model(kind, len(dims), dims[0], rank,
                                     args.puri_dim, seed=0)
            rows.append({"kind": kind, "rank": rank,
                         "n_real_params": tr.n_real_params(template),
                         "mean_kl": float(np.mean(kls)),
                         "std_kl": float(np.std(kls))})

    os.makedirs(args.out_dir, exist_ok=True)
    path = os.path.join(args.out_dir, "factorize.csv")
    with open(path, "w") as fh:
        fh.write("kind,rank,n_real_params,mean_kl,std_kl\n")
        for r in rows:
            fh.write(f"{r['kind']},{r['rank']},{r['n_real_params']},"
                     f"{r['mean_kl']!r},{r['std_kl']!r}\n")
    if args.plot:
        from .plots import factorize_curves
        factorize_curves(rows, os.path.join(args.out_dir, "factorize.png"))
    for r in rows:
        print(f"{r['kind']} rank={r['rank']} params={r['n_real_params']} "
              f"mean_kl={r['mean_kl']:.3e} std_kl={r['std_kl']:.3e}")
    return EXIT_OK


def cmd_ranks(args):
    rows = full_report()
    os.makedirs(args.out_dir, exist_ok=True)
    path = os.path.join(args.out_dir, "ranks_report.csv")
    with open(path, "w") as fh:
        fh.write(CertRow.csv_header() + "\n")
        for r in rows:
            fh.write(r.csv() + "\n")
    failed = 0
    for r in rows:
        print(r.line())
        failed += r.status == "FAILED"
    if failed:
        print(f"{failed} certificate(s) FAILED", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_circuit(args):
    if args.circuit:
        circuit = ser.load(args.circuit)
    elif args.random:
        _, kv = _kv_spec("random:" + args.random)
        n = int(kv.get("n", 4))
        d = int(kv.get("d", 2))
        depth = int(kv.get("depth", 2))
        if args.ancilla:
            circuit = circ.random_alternating_circuit(n, d, args.ancilla,
                                                      depth, seed=args.seed)
        else:
            circuit = circ.random_circuit(n, d, depth, seed=args.seed)
    else:
        raise ShapeError("provide --circuit or --random")

    os.makedirs(args.out_dir, exist_ok=True)
    ser.save(circuit, os.path.join(args.out_dir, "circuit.json"))
    if args.ancilla:
        model = circ.circuit_with_ancillas_to_lps(circuit)
        label = "lps"
    else:
        model = circ.circuit_to_born(circuit)
        label = "born"
    ser.save(model, os.path.join(args.out_dir, f"{label}.json"))

    report = [f"model={label}", f"bond_dims={list(model.bond_dims)}",
              f"max_bond={model.rank}"]
    size = int(np.prod(circuit.site_dims))
    if size <= args.dense_cap:
        psi = circ.simulate_dense(circuit, args.dense_cap).array
        probs = np.abs(psi) ** 2
        if args.ancilla:
            probs = probs.reshape(
                (circuit.site_dims[0], args.ancilla) * (len(circuit.site_dims) // 2)
            ).sum(axis=tuple(range(1, len(circuit.site_dims), 2)))
        dense = md.to_dense(model, args.dense_cap).array.real
        err = float(np.max(np.abs(probs - dense)))
        report.append(f"oracle_max_err={err:.3e}")
        if err > 1e-9:
            print(" ".join(report))
            raise NumericalError("compiled model disagrees with the oracle")
    print(" ".join(report))
    return EXIT_OK


def cmd_convert(args):
    model = ser.load(args.input)
    if args.to == "mps-real":
        if not isinstance(model, md.LpsModel):
            raise ShapeError("--to mps-real expects an LPS input")
        before = model
        out = md.lps_to_mps_real(model)
    else:
        if isinstance(model, md.MpsModel) and model.field == md.NONNEG:
            before, out = model, md.mps_nonneg_to_lps_real(model)
        elif isinstance(model, md.LpsModel) and model.field == md.COMPLEX:
            before, out = model, md.lps_complex_to_real(model)
        else:
            raise ShapeError("--to lps-real expects a non-negative MPS or a "
                             "complex LPS input")
    report = [f"to={args.to}", f"rank={out.rank}",
              f"bond_dims={list(out.bond_dims)}"]
    if isinstance(out, md.LpsModel):
        report.append(f"puri_dim={out.puri_dim}")
    size = before.phys_dim ** before.n_sites
    if size <= args.dense_cap:
        err = float(np.max(np.abs(
            md.to_dense(before, args.dense_cap).array
            - md.to_dense(out, args.dense_cap).array)))
        report.append(f"dense_max_err={err:.3e}")
        if err > 1e-10:
            print(" ".join(report))
            raise NumericalError("conversion changed the dense tensor")
    ser.save(out, args.output)
    print(" ".join(report))
    return EXIT_OK


_COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "sample": cmd_sample,
    "factorize": cmd_factorize,
    "ranks": cmd_ranks,
    "circuit": cmd_circuit,
    "convert": cmd_convert,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except SystemExit2 as exc:
        print(f"error: {exc.message}", file=sys.stderr)
        return exc.code
    except (DataFormatError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ShapeError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericalError, ZeroNormalizationError, ZeroProbabilitySample,
            DenseCapExceeded) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except TnfactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
