// The four figure kinds, each mapping one solver output file onto a
// deterministic SVG string.

import {
  EpsilonPath, MissingColumn, SERIES_HEADER, SWEEP_HEADER, Table, column,
} from "./schema.js";
import { Figure, extent } from "./svg.js";

export type FigureKind =
  | "traces"          // sup|Du|(t) and sup|u_t|(t)
  | "lambda_eps"      // lambda(eps) with the extrapolant asymptote
  | "psi_timeline"    // maximizer location of the auxiliary function
  | "eigmin_sweep";   // min eigenvalue of the boundary form vs anisotropy

export const FIGURE_KINDS: FigureKind[] = [
  "traces", "lambda_eps", "psi_timeline", "eigmin_sweep",
];

export const SERIES_SCHEMA = SERIES_HEADER;
export const SWEEP_SCHEMA = SWEEP_HEADER;

export function tracesFigure(series: Table, title: string): string {
  const t = column(series, "time");
  const grad = column(series, "sup_grad");
  const ut = column(series, "sup_ut");
  const fig = new Figure(title, "t", "sup norm",
    extent(t), extent([...grad, ...ut, 0]));
  fig.polyline(t, grad, "#1f77b4");
  fig.polyline(t, ut, "#d62728");
  fig.legend([["sup |Du|", "#1f77b4"], ["sup |u_t|", "#d62728"]]);
  return fig.render();
}

export function lambdaEpsFigure(path: EpsilonPath, title: string): string {
  const { eps, lambda, extrapolated_lambda: lamStar } = path;
  if (eps.length !== lambda.length || eps.length === 0) {
    throw new MissingColumn("epsilon_path eps/lambda lengths disagree");
  }
  const fig = new Figure(title, "eps", "lambda(eps)",
    extent([...eps, 0]), extent([...lambda, lamStar]));
  fig.polyline(eps, lambda, "#1f77b4");
  fig.markers(eps, lambda, "#1f77b4");
  fig.hline(lamStar, "#d62728", `extrapolant ${lamStar.toExponential(4)}`);
  return fig.render();
}

export function psiTimelineFigure(series: Table, title: string): string {
  const t = column(series, "time");
  const psiMax = column(series, "psi_max");
  const onBoundary = column(series, "psi_argmax_boundary");
  const fig = new Figure(title, "t", "max of the auxiliary function",
    extent(t), extent(psiMax));
  fig.polyline(t, psiMax, "#1f77b4");
  // maximizer location markers: filled when interior, hollow-red when the
  // maximizer sits on the boundary ring
  const ti: number[] = [];
  const yi: number[] = [];
  for (let i = 0; i < t.length; i++) {
    if (onBoundary[i] === 0) {
      ti.push(t[i]);
      yi.push(psiMax[i]);
    } else {
      fig.annotate(t[i], psiMax[i], "boundary", "#d62728");
    }
  }
  fig.markers(ti, yi, "#2ca02c", 2);
  fig.legend([["max", "#1f77b4"], ["interior maximizer", "#2ca02c"]]);
  return fig.render();
}

export function eigminSweepFigure(sweep: Table, title: string): string {
  const eps2 = column(sweep, "epsilon2");
  const eig = column(sweep, "eigmin_B");
  const order = eps2.map((_, i) => i).sort((a, b) => eps2[a] - eps2[b]);
  const xs = order.map((i) => eps2[i]);
  const ys = order.map((i) => eig[i]);
  const fig = new Figure(title, "eps2 = c2/c1", "min eigenvalue",
    extent(xs), extent([...ys, 0]));
  fig.hline(0, "#888888");
  fig.polyline(xs, ys, "#1f77b4");
  fig.markers(xs, ys, "#1f77b4");
  // annotate a sign change if the sweep produces one
  for (let i = 1; i < ys.length; i++) {
    if (ys[i - 1] >= 0 !== ys[i] >= 0) {
      const s = ys[i - 1] / (ys[i - 1] - ys[i]);
      const xc = xs[i - 1] + s * (xs[i] - xs[i - 1]);
      fig.annotate(xc, 0, `crossing at ${xc.toExponential(3)}`, "#d62728");
      break;
    }
  }
  return fig.render();
}
