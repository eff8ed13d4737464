"""Print the virtual-path decomposition of every channel of one scenario."""

import argparse

from cotunnel.model import ModelParams, Scenario, final_channels, initial_state
from cotunnel.tmatrix import channel_paths, fourth_order_amplitude, partition_direct_exchange


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("scenario", nargs="?", default="double:du")
    ap.add_argument("--EL", type=float, default=-2.0)
    ap.add_argument("--dL", type=float, default=0.5)
    ap.add_argument("--dR", type=float, default=1.0)
    ap.add_argument("--U", type=float, default=3.0)
    args = ap.parse_args()

    p = ModelParams(E_L=args.EL, delta_L=args.dL, delta_R=args.dR, U=args.U)
    sc = Scenario.parse(args.scenario)
    ini, eps_i = initial_state(sc, p)
    print(f"{sc.label}: initial {ini.states[0].label()}  eps_i = {float(eps_i):g}")
    for ch in final_channels(sc):
        grouped = channel_paths(ini, ch, p)
        paths = [q for qs in grouped.values() for q in qs]
        pair = tuple(ch.ket.states) if len(ch.ket.states) == 2 else None
        direct, exchange = partition_direct_exchange(paths, pair)
        print(f"\nchannel {ch.label}: {len(paths)} paths ({len(direct)} direct, {len(exchange)} exchange)")
        for q in paths:
            tag = "D" if q in direct else "X"
            dens = " ".join(f"{float(d):+8.4f}" for d in q.denominators)
            print(f"  {tag} {q.label():<48} [{dens}]  {complex(q.amplitude).real:+.6e}")
        print(f"  amplitude {fourth_order_amplitude(ini, ch, p):.10g}")


if __name__ == "__main__":
    main()
