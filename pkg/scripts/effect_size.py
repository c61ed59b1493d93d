"""Mean model error against interaction strength alpha at a 3:1 signal-to-noise ratio."""

from structured_garrote import simlab

from _common import parser, write


def main():
    ap = parser(__doc__)
    ap.add_argument("--alpha", type=float, nargs="+", default=[1.0, 2.0, 3.0, 4.0])
    ap.add_argument("--rho", type=float, default=0.0)
    args = ap.parse_args()
    rows = [["alpha", "method", "mean_me", "se_me", "freq_correct"]]
    payload = []
    for alpha in args.alpha:
        cfg = simlab.SimConfig(q=4, model="effect-size", rho=args.rho, sigma=None, snr=3.0,
                               alpha=alpha, reps=args.reps, seed=args.seed)
        res = simlab.run_table(cfg, workers=args.threads)
        payload.append({k: v for k, v in res.to_dict().items() if k != "records"})
        for m in res.methods:
            rows.append([alpha, m, f"{res.mean_me[m]:.4f}", f"{res.se_me[m]:.4f}",
                         f"{res.freq_correct[m]:.4f}"])
    write(args.out, "effect_size", rows, payload)


if __name__ == "__main__":
    main()
