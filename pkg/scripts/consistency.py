"""Selection and estimation behaviour of the Lagrange-form fit as n grows."""

from structured_garrote import simlab

from _common import parser, write


def main():
    ap = parser(__doc__)
    ap.add_argument("--n", type=int, nargs="+", default=[50, 200, 800])
    ap.add_argument("--exponent", type=float, default=1 / 3)
    ap.add_argument("--heredity", choices=("none", "weak", "strong"), default="strong")
    args = ap.parse_args()
    out = simlab.run_consistency("model-I", args.heredity, tuple(args.n), args.exponent,
                                 reps=args.reps, seed=args.seed)
    rows = [["n", "lambda", "false_selection", "mean_scaled_error", "median_scaled_error"]]
    rows += [[r["n"], f"{r['lam']:.4f}", f"{r['false_selection']:.4f}",
              f"{r['mean_scaled_error']:.4f}", f"{r['median_scaled_error']:.4f}"] for r in out["rows"]]
    write(args.out, "consistency", rows, out)
    if out["slope"] is not None:
        lo, hi = out["slope_ci"]
        print(f"log-log slope {out['slope']:.4f}, 95% CI [{lo:.4f}, {hi:.4f}]")


if __name__ == "__main__":
    main()
