/**
 * Verification of the system-evaluation layer: analytic gradients
 * against float64 central differences, the tfjs layer against the
 * float64 reference, and tf autodiff against the analytic form.
 */

import * as tf from '@tensorflow/tfjs';
import { describe, expect, it } from 'vitest';

import {
  evalSystemMatrix,
  evalSystemMatrixGrad,
  flattenA,
  gradientCheck,
  numericalGradient,
  Tensor3,
} from '../src/gom.js';
import { GomEvalLayer } from '../src/layers.js';

function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function randomCase(n: number, seed: number) {
  const rand = mulberry32(seed);
  const a: Tensor3 = Array.from({ length: n }, () =>
    Array.from({ length: 2 }, () => Array.from({ length: n }, () => rand() * 2 - 1)),
  );
  const x = [
    Array.from({ length: n }, () => rand() * 20 - 10),
    Array.from({ length: n }, () => rand() * 20 - 10),
  ];
  const upstream = Array.from({ length: n }, () => rand() * 2 - 1);
  return { a, x, upstream };
}

describe('system evaluation layer', () => {
  it('zero tensor gives zero predictions', () => {
    const n = 5;
    const a: Tensor3 = Array.from({ length: n }, () => [
      new Array(n).fill(0),
      new Array(n).fill(0),
    ]);
    const x = [new Array(n).fill(3), new Array(n).fill(-2)];
    expect(evalSystemMatrix(a, x)).toEqual(new Array(n).fill(0));
  });

  it('second lag enters with a minus sign', () => {
    const a: Tensor3 = [[[0], [1]]];
    const x = [[0], [5]];
    expect(evalSystemMatrix(a, x)[0]).toBe(-5);
  });

  it('gradient check: full layer below 1e-4 (criterion)', () => {
    let worst = 0;
    for (const seed of [1, 2, 3, 4, 5]) {
      const { a, x, upstream } = randomCase(7, seed);
      worst = Math.max(worst, gradientCheck(a, x, upstream));
    }
    expect(worst).toBeLessThan(1e-4);
    console.log(`gradient check (system layer): max relative error ${worst.toExponential(2)}`);
  });

  it('gradient check: plain linear map below 1e-6', () => {
    // a dense layer y = W v as the trivial calibration case
    const rand = mulberry32(11);
    const w = Array.from({ length: 4 }, () => Array.from({ length: 4 }, () => rand() * 2 - 1));
    const v = Array.from({ length: 4 }, () => rand() * 2 - 1);
    const fn = (vec: number[]) =>
      w.reduce((acc, row, i) => acc + row.reduce((s, wij, j) => s + wij * vec[j], 0) * (i + 1), 0);
    const analytic = v.map((_, j) => w.reduce((s, row, i) => s + row[j] * (i + 1), 0));
    const numeric = numericalGradient(fn, v);
    const err = Math.max(...analytic.map((g, i) => Math.abs(g - numeric[i])));
    expect(err).toBeLessThan(1e-6);
  });

  it('zero inputs give zero gradients for coefficient slots', () => {
    const n = 4;
    const { a, upstream } = randomCase(n, 21);
    const x = [new Array(n).fill(0), new Array(n).fill(0)];
    const { gradA } = evalSystemMatrixGrad(a, x, upstream);
    expect(Math.max(...flattenA(gradA).map(Math.abs))).toBe(0);
  });

  it('tf layer matches the float64 reference', () => {
    const n = 6;
    for (const seed of [31, 32]) {
      const { a, x } = randomCase(n, seed);
      const layer = new GomEvalLayer({});
      const out = tf.tidy(() => {
        const aT = tf.tensor4d([a]);
        const xT = tf.tensor3d([x]);
        return (layer.apply([aT, xT]) as tf.Tensor).dataSync();
      });
      const ref = evalSystemMatrix(a, x);
      for (let i = 0; i < n; i++) {
        expect(Math.abs(out[i] - ref[i])).toBeLessThan(1e-3);
      }
    }
  });

  it('tf autodiff agrees with the analytic gradients', () => {
    const n = 5;
    const { a, x, upstream } = randomCase(n, 41);
    const layer = new GomEvalLayer({});
    const upstreamT = tf.tensor2d([upstream]);
    const grads = tf.grads((aT: tf.Tensor, xT: tf.Tensor) =>
      tf.sum(tf.mul(layer.apply([aT, xT]) as tf.Tensor, upstreamT)),
    )([tf.tensor4d([a]), tf.tensor3d([x])]);
    const { gradA, gradX } = evalSystemMatrixGrad(a, x, upstream);
    const gotA = grads[0].dataSync();
    const wantA = flattenA(gradA);
    for (let i = 0; i < wantA.length; i++) {
      expect(Math.abs(gotA[i] - wantA[i])).toBeLessThan(1e-3);
    }
    const gotX = grads[1].dataSync();
    const wantX = [...gradX[0], ...gradX[1]];
    for (let i = 0; i < wantX.length; i++) {
      expect(Math.abs(gotX[i] - wantX[i])).toBeLessThan(1e-3);
    }
  });
});
