"""How often each heredity mode has the smallest CV score, per generating model."""

from structured_garrote import simlab

from _common import parser, write


def main():
    ap = parser(__doc__)
    ap.add_argument("--models", nargs="+", choices=simlab.MODELS[:2] + simlab.MODELS[3:],
                    default=["no-heredity", "model-I", "model-II"])
    args = ap.parse_args()
    rows = [["model", "none", "weak", "strong", "reps", "failures"]]
    payload = []
    for model in args.models:
        out = simlab.run_elect_mode(simlab.SimConfig(model=model, reps=args.reps, seed=args.seed),
                                    workers=args.threads)
        payload.append(out)
        rows.append([model] + [f"{out['elected'][m]:.4f}" for m in ("none", "weak", "strong")]
                    + [out["reps"], out["failures"]])
    write(args.out, "elect_mode", rows, payload)


if __name__ == "__main__":
    main()
