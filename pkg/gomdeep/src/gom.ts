/**
 * Double-precision reference implementation of the system-evaluation
 * layer and its analytic gradients.
 *
 * The layer maps a coefficient tensor A (N, 2, N) and the lag matrix
 * X (2, N) to per-channel predictions:
 *
 *     Y[i] = sum_w sum_k A[i][w][k] * S[w][k],
 *     S[0][k] = X[0][k],  S[1][k] = -X[1][k].
 *
 * Training runs the float32 tfjs twin of this layer; everything
 * numerical that matters downstream (exports, round-trip checks,
 * gradient verification) is computed here in float64.
 */

export type Tensor3 = number[][][]; // [N][2][N]
export type Matrix = number[][];

export function evalSystemMatrix(a: Tensor3, x: Matrix): number[] {
  const n = x[0].length;
  const y = new Array<number>(n).fill(0);
  for (let i = 0; i < n; i++) {
    let acc = 0;
    for (let k = 0; k < n; k++) {
      acc += a[i][0][k] * x[0][k] - a[i][1][k] * x[1][k];
    }
    y[i] = acc;
  }
  return y;
}

/**
 * Analytic gradients of J = sum_i upstream[i] * Y[i] with respect to A
 * and X.
 */
export function evalSystemMatrixGrad(
  a: Tensor3,
  x: Matrix,
  upstream: number[],
): { gradA: Tensor3; gradX: Matrix } {
  const n = x[0].length;
  const gradA: Tensor3 = [];
  const gradX: Matrix = [new Array(n).fill(0), new Array(n).fill(0)];
  for (let i = 0; i < n; i++) {
    const g = upstream[i];
    const rows: number[][] = [new Array(n), new Array(n)];
    for (let k = 0; k < n; k++) {
      rows[0][k] = g * x[0][k];
      rows[1][k] = g * -x[1][k];
      gradX[0][k] += g * a[i][0][k];
      gradX[1][k] -= g * a[i][1][k];
    }
    gradA.push(rows);
  }
  return { gradA, gradX };
}

/** Central-difference gradient of a scalar function, float64. */
export function numericalGradient(
  fn: (flat: number[]) => number,
  point: number[],
  epsilon = 1e-6,
): number[] {
  const grads: number[] = new Array(point.length);
  for (let i = 0; i < point.length; i++) {
    const plus = [...point];
    const minus = [...point];
    plus[i] += epsilon;
    minus[i] -= epsilon;
    grads[i] = (fn(plus) - fn(minus)) / (2 * epsilon);
  }
  return grads;
}

export function flattenA(a: Tensor3): number[] {
  return a.flatMap((rows) => rows.flatMap((r) => r));
}

export function unflattenA(flat: number[], n: number): Tensor3 {
  const a: Tensor3 = [];
  let p = 0;
  for (let i = 0; i < n; i++) {
    const rows: number[][] = [];
    for (let w = 0; w < 2; w++) {
      rows.push(flat.slice(p, p + n));
      p += n;
    }
    a.push(rows);
  }
  return a;
}

/**
 * Max relative error between the analytic and central-difference
 * gradients of the evaluation layer, over both A and X inputs.
 */
export function gradientCheck(a: Tensor3, x: Matrix, upstream: number[]): number {
  const n = x[0].length;
  const scalar = (aFlat: number[], xFlat: number[]): number => {
    const aT = unflattenA(aFlat, n);
    const xT = [xFlat.slice(0, n), xFlat.slice(n)];
    const y = evalSystemMatrix(aT, xT);
    return y.reduce((acc, v, i) => acc + upstream[i] * v, 0);
  };

  const aFlat = flattenA(a);
  const xFlat = [...x[0], ...x[1]];
  const { gradA, gradX } = evalSystemMatrixGrad(a, x, upstream);
  const analytic = [...flattenA(gradA), ...gradX[0], ...gradX[1]];
  const numericA = numericalGradient((f) => scalar(f, xFlat), aFlat);
  const numericX = numericalGradient((f) => scalar(aFlat, f), xFlat);
  const numeric = [...numericA, ...numericX];

  const scale = Math.max(...analytic.map(Math.abs), ...numeric.map(Math.abs), 1e-8);
  let worst = 0;
  for (let i = 0; i < analytic.length; i++) {
    worst = Math.max(worst, Math.abs(analytic[i] - numeric[i]) / scale);
  }
  return worst;
}
