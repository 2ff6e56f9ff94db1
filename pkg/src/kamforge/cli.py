"""Batch experiment driver: every toolkit operation behind one
config-file-driven command.

Usage:  kamforge COMMAND --config cfg.json --out DIR [--seed N] [--tol X]
                 [--format {json,csv}]

Every output file embeds the SHA-256 digest of the canonical config text
and the tool version, so identical configs reproduce identical artifacts
(modulo the version line).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .covering import CoveringData, lift_to_cover, normalize_resonance
from .diophantine import DiophantineSpec, detect_resonances, dioph_check, \
    measure_estimate
from .fourier import FourierField, ModeJet, random_reversible
from .homological import solve as hom_solve
from .models import (ForcingTerm, IntegrableField, PerturbedField,
                     kam_step, response_solve)
from .nondegen import FamilyAtPoint, bht_i, bht_ii, corollary_gate
from .revlin import (MINUS, ReversingStructure, StructuredMatrix, lcu,
                     normal_frequencies)
from .serialize import (covering_to_record, matrix_to_list,
                        unfolding_from_record, unfolding_to_record)


def _digest(cfg: dict) -> str:
    text = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _stamp(cfg: dict) -> dict:
    return {"tool_version": __version__, "config_digest": _digest(cfg)}


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header: list, rows: list, stamp: dict) -> None:
    with path.open("w", newline="") as fh:
        fh.write(f"# kamforge {stamp['tool_version']} "
                 f"config {stamp['config_digest']}\n")
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow(row)


def _structure(cfg: dict) -> ReversingStructure:
    R = np.array(cfg["R"], dtype=float)
    twist = np.array(cfg["twist"], dtype=float) if "twist" in cfg else None
    return ReversingStructure(R=R, twist=twist,
                              twist_order=int(cfg.get("twist_order", 1)))


def _spec(cfg: dict) -> DiophantineSpec:
    return DiophantineSpec(gamma=float(cfg["gamma"]),
                           tau=float(cfg["tau"]), K=int(cfg["K"]))


# -- subcommands -----------------------------------------------------------

def cmd_unfold(cfg, out: Path, args) -> dict:
    st = _structure(cfg)
    M = StructuredMatrix(np.array(cfg["matrix"], float), MINUS, st)
    equi = tuple(np.array(E, float) for E in cfg.get("equivariants", []))
    unf = lcu(M, equivariants=equi)
    payload = {**_stamp(cfg), "unfolding": unfolding_to_record(unf),
               "normal_frequencies":
               [float(a) for a in normal_frequencies(M)]}
    _write_json(out / "unfolding.json", payload)
    return payload


def cmd_nondegen(cfg, out: Path, args) -> dict:
    st = _structure(cfg)
    Om = StructuredMatrix(np.array(cfg["Omega0"], float), MINUS, st)
    records = {"bht_i": bht_i(Om, st).as_record()}
    if "d_omega" in cfg:
        fam = FamilyAtPoint(
            omega0=np.array(cfg["omega0"], float), Omega0=Om,
            d_omega=np.array(cfg["d_omega"], float),
            d_Omega=[StructuredMatrix(np.array(D, float), MINUS, st)
                     for D in cfg["d_Omega"]],
            symmetry=st)
        records["bht_ii"] = bht_ii(fam).as_record()
        if "case" in cfg:
            records["corollary"] = \
                corollary_gate(fam, cfg["case"]).as_record()
    payload = {**_stamp(cfg), "verdicts": records}
    _write_json(out / "nondegen.json", payload)
    return payload


def cmd_dioph(cfg, out: Path, args) -> dict:
    omega = np.array(cfg["omega"], float)
    alpha = np.array(cfg.get("alpha", []), float)
    v = dioph_check(omega, alpha, _spec(cfg))
    payload = {**_stamp(cfg), "satisfied": bool(v), "margin": v.margin,
               "worst_k": list(v.worst_k), "worst_ell": list(v.worst_ell),
               "truncated": v.truncated}
    if "resonance_tol" in cfg:
        payload["resonances"] = [
            {"k": list(r.k), "ell": list(r.ell), "value": r.value,
             "kind": r.kind}
            for r in detect_resonances(omega, alpha,
                                       float(cfg["resonance_tol"]),
                                       int(cfg["K"]))]
    _write_json(out / "dioph.json", payload)
    return payload


def cmd_measure(cfg, out: Path, args) -> dict:
    unf = None
    if cfg.get("unfolding"):
        unf = unfolding_from_record(cfg["unfolding"], _structure(cfg))
    est = measure_estimate(cfg["box"], unf, _spec(cfg),
                           samples=int(cfg["samples"]),
                           seed=int(cfg.get("seed", args.seed)),
                           keep_rows=True)
    stamp = _stamp(cfg)
    ndim = len(cfg["box"])
    header = [f"x{i}" for i in range(ndim)] + \
        ["in_gamma", "worst_k", "worst_ell", "margin"]
    rows = [[f"{v:.17g}" if isinstance(v, float) else
             ("|".join(map(str, v)) if isinstance(v, tuple) else v)
             for v in row] for row in est.rows]
    _write_csv(out / "measure.csv", header, rows, stamp)
    payload = {**stamp, "fraction": est.fraction, "ci_low": est.ci_low,
               "ci_high": est.ci_high, "samples": est.samples,
               "hits": est.hits}
    _write_json(out / "measure.json", payload)
    return payload


def cmd_cover(cfg, out: Path, args) -> dict:
    u, k1 = normalize_resonance(cfg["k"])
    payload = {**_stamp(cfg), "k1": k1,
               "sigma": [[int(x) for x in row] for row in u.sigma]}
    if "Omega" in cfg:
        Om = np.array(cfg["Omega"], float)
        p = Om.shape[0] // 2
        cov = CoveringData(l=int(cfg["l"]), j=int(cfg.get("j", 1)),
                           k1=k1, p=p,
                           blocks=tuple(cfg.get("blocks", ())))
        omega = np.array(cfg["omega"], float)
        fld = FourierField(len(omega), 0, p, 2)
        jet = ModeJet.zeros(len(omega), 0, p)
        jet.f = omega.astype(complex)
        jet.h_zeta = Om.astype(complex)
        fld.coeffs[(0,) * len(omega)] = jet
        lifted = lift_to_cover(fld, cov)
        payload["covering"] = covering_to_record(cov, u)
        payload["lifted_matrix"] = matrix_to_list(
            np.real(lifted.get((0,) * len(omega)).h_zeta))
    _write_json(out / "cover.json", payload)
    return payload


def cmd_homsolve(cfg, out: Path, args) -> dict:
    st = _structure(cfg)
    Om = StructuredMatrix(np.array(cfg["Omega"], float), MINUS, st)
    unf = unfolding_from_record(cfg["unfolding"], st) \
        if cfg.get("unfolding") else lcu(Om)
    n, m, p = int(cfg["n"]), int(cfg["m"]), st.p
    rng = np.random.default_rng(int(cfg.get("rhs_seed", args.seed)))
    rhs = random_reversible(n, m, p, int(cfg["K"]), st, rng)
    sol = hom_solve(np.array(cfg["sigma"], float), Om, unf, rhs,
                    _spec(cfg))
    payload = {**_stamp(cfg),
               "Lambda1": [float(x) for x in sol.Lambda1],
               "Lambda2": [float(x) for x in sol.Lambda2],
               "residual": sol.residual_norm,
               "min_divisor": sol.min_divisor,
               "rhs_norm": rhs.norm()}
    _write_json(out / "homsolve.json", payload)
    return payload


def _standard_step_setup(seed: int):
    from .revlin import alternating_structure
    st = alternating_structure(1)
    J = np.array([[0.0, -1.0], [1.0, 0.0]])
    unf = lcu(StructuredMatrix(1.1 * J, MINUS, st))
    g = (np.sqrt(5.0) - 1.0) / 2.0
    X = IntegrableField(2, 1, 1, np.array([1.0, g]), unf,
                        np.zeros(unf.codimension), st)
    rng = np.random.default_rng(seed)
    pert = random_reversible(2, 1, 1, 1, st, rng)
    return X, pert, st


def cmd_kamstep(cfg, out: Path, args) -> dict:
    X, pert, st = _standard_step_setup(int(cfg.get("seed", args.seed)))
    spec = _spec(cfg)
    eps_list = [float(e) for e in cfg.get("eps_list", [1e-2, 3e-3, 1e-3])]
    results = []
    for eps in eps_list:
        Z = PerturbedField(X, eps * pert)
        _, rep = kam_step(Z, spec)
        results.append({"eps": eps, "before": rep.before,
                        "after": rep.after,
                        "Lambda1": [float(x) for x in rep.Lambda1],
                        "Lambda2": [float(x) for x in rep.Lambda2]})
    slope = float(np.polyfit(np.log([r["eps"] for r in results]),
                             np.log([r["after"] for r in results]), 1)[0])
    payload = {**_stamp(cfg), "steps": results, "slope": slope}
    _write_json(out / "kamstep.json", payload)
    _plot_decay(out / "kamstep.svg", results)
    return payload


def _plot_decay(path: Path, results) -> None:
    import matplotlib
    matplotlib.use("svg")
    import matplotlib.pyplot as plt
    fig, ax = plt.subplots(figsize=(5, 4))
    eps = [r["eps"] for r in results]
    ax.loglog(eps, [r["before"] for r in results], "o-", label="before")
    ax.loglog(eps, [r["after"] for r in results], "s-", label="after")
    ax.loglog(eps, [e ** 2 for e in eps], "k--", label="slope 2")
    ax.set_xlabel("perturbation size")
    ax.set_ylabel("defect norm")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def _terms(cfg) -> list:
    return [ForcingTerm(k=tuple(t["k"]), a=int(t.get("a", 0)),
                        b=int(t.get("b", 0)), coeff=float(t["coeff"]),
                        phase=float(t.get("phase", 0.0)))
            for t in cfg["terms"]]


def cmd_response(cfg, out: Path, args) -> dict:
    r = response_solve(_terms(cfg), float(cfg["omega"]),
                       K=int(cfg.get("K", 8)))
    ev = np.linalg.eigvals(r.floquet)
    payload = {**_stamp(cfg), "residual": r.residual,
               "converged": r.converged, "iterations": r.iterations,
               "floquet": matrix_to_list(r.floquet),
               "floquet_eigenvalues": [[float(e.real), float(e.imag)]
                                       for e in ev],
               "sup_z": float(np.max(np.abs(r.z_grid)))}
    _write_json(out / "response.json", payload)
    return payload


def cmd_sweep(cfg, out: Path, args) -> dict:
    omega = float(cfg["omega"])
    K = int(cfg.get("K", 6))
    mu_values = cfg.get("mu_values")
    if mu_values is None:
        lo, hi, npts = cfg["mu_range"]
        mu_values = list(np.linspace(float(lo), float(hi), int(npts)))
    rows = []
    eigs = []
    for mu in mu_values:
        terms = [ForcingTerm((0, 0), 1, 0, float(mu)),
                 ForcingTerm((0, 0), 3, 0, -1.0)] + _terms(cfg)
        r = response_solve(terms, omega, K=K)
        ev = sorted(np.linalg.eigvals(r.floquet), key=lambda e: e.imag)
        eigs.append(ev)
        rows.append([f"{mu:.17g}", int(r.converged),
                     f"{r.residual:.3e}",
                     f"{ev[0].real:.12g}", f"{ev[0].imag:.12g}",
                     f"{ev[1].real:.12g}", f"{ev[1].imag:.12g}",
                     f"{float(np.max(np.abs(r.z_grid))):.12g}"])
    stamp = _stamp(cfg)
    _write_csv(out / "sweep.csv",
               ["mu", "converged", "residual", "eig1_re", "eig1_im",
                "eig2_re", "eig2_im", "sup_z"], rows, stamp)
    _plot_sweep(out / "sweep.svg", mu_values, eigs)
    payload = {**stamp, "points": len(rows),
               "all_converged": all(int(r[1]) for r in rows)}
    _write_json(out / "sweep.json", payload)
    return payload


def _plot_sweep(path: Path, mu_values, eigs) -> None:
    import matplotlib
    matplotlib.use("svg")
    import matplotlib.pyplot as plt
    fig, ax = plt.subplots(figsize=(5, 4))
    re = [max(abs(e.real) for e in pair) for pair in eigs]
    im = [max(abs(e.imag) for e in pair) for pair in eigs]
    ax.plot(mu_values, re, "o-", label="|Re| (hyperbolic)")
    ax.plot(mu_values, im, "s-", label="|Im| (elliptic)")
    ax.set_xlabel("mu")
    ax.set_ylabel("Floquet eigenvalue magnitude")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


_COMMANDS = {"unfold": cmd_unfold, "nondegen": cmd_nondegen,
             "dioph": cmd_dioph, "measure": cmd_measure,
             "cover": cmd_cover, "homsolve": cmd_homsolve,
             "kamstep": cmd_kamstep, "response": cmd_response,
             "sweep": cmd_sweep}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="kamforge", description=__doc__)
    ap.add_argument("command", choices=sorted(_COMMANDS))
    ap.add_argument("--config", required=True)
    ap.add_argument("--out", default=".")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--tol", type=float, default=None)
    ap.add_argument("--format", choices=["csv", "json"], default="json")
    args = ap.parse_args(argv)
    cfg_path = Path(args.config)
    if not cfg_path.exists():
        print(json.dumps({"error": f"config not found: {cfg_path}"}),
              file=sys.stderr)
        return 2
    cfg = json.loads(cfg_path.read_text())
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        payload = _COMMANDS[args.command](cfg, out, args)
    except Exception as exc:  # machine-readable error record
        print(json.dumps({"error": type(exc).__name__,
                          "message": str(exc)}), file=sys.stderr)
        return 1
    print(json.dumps({k: payload[k] for k in ("tool_version",
                                              "config_digest")}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
