"""Smoke test for the Python extension.

Build and install first, e.g. `maturin develop -m crates/python/Cargo.toml`.
"""

import json
import sys
from pathlib import Path

import ris_isac

ROOT = Path(__file__).resolve().parent.parent


def main() -> int:
    cfg = ris_isac.SystemConfig()
    assert (cfg.m, cfg.k, cfg.n, cfg.l) == (4, 2, 16, 100)
    cfg.max_outer = 20
    cfg.validate()

    ch = ris_isac.Channels.generate(cfg, seed=3)
    assert (ch.m, ch.n, ch.k) == (4, 16, 2)
    assert len(ch.g) == 16 and len(ch.g[0]) == 4

    reports = {m: ris_isac.solve(cfg, ch, method=m) for m in ris_isac.METHODS}
    for name, rep in reports.items():
        print(f"{name:>10}: sum-rate {rep['sum_rate']:.3f} bit/s/Hz, "
              f"radar SNR {rep['radar_snr_db']:.2f} dB, {rep['termination']}")
    best = reports["proposed"]
    assert best["sum_rate"] > reports["no-ris"]["sum_rate"]
    assert best["radar_snr_db"] >= cfg.gamma_t_db - 1e-6

    # the reported solution reproduces the reported sum-rate
    sol = best["solution"]
    w = [[complex(*sol["w"][j][i]) for j in range(len(sol["w"]))] for i in range(cfg.m)]
    phi = [complex(re, im) for re, im in sol["phi"]]
    rate = ris_isac.sum_rate(cfg, ch, w, phi)
    assert abs(rate - best["sum_rate"]) < 1e-9, (rate, best["sum_rate"])

    bad = ris_isac.SystemConfig()
    bad.power = -1.0
    try:
        bad.validate()
    except ValueError as e:
        print(f"rejected invalid config: {e}")
    else:
        raise AssertionError("negative power accepted")

    csv = ris_isac.sweep(ROOT / "configs" / "sweep_power.toml", trials=2)
    lines = csv.strip().splitlines()
    assert lines[0] == "method,param,value,mean_sum_rate,std_sum_rate,trials,mean_iters,failures"
    assert len(lines) == 1 + 3 * 3

    for name, passed, detail in ris_isac.check(1):
        print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
        assert passed

    json.dumps(best)
    print("smoke test ok")
    return 0


if __name__ == "__main__":
    sys.exit(main())
