/**
 * Versioned coefficient-exchange writer (and reader, for tests).
 *
 * Runs the trained model over a movement, captures the masked
 * coefficient tensor at every step, zeroes anything outside each
 * equation's regressor support (the mask layer already guarantees
 * this), and stores per-equation alpha/beta trajectories with
 * assumption tags in the schema the core toolkit consumes.
 */

import * as fs from 'node:fs';

import * as tf from '@tensorflow/tfjs';

import { Equation } from './equations.js';
import { evalSystemMatrix, Tensor3 } from './gom.js';
import { GomModel } from './models.js';

export const FORMAT_NAME = 'gom-coefficients';
export const FORMAT_VERSION = 1;

export interface ExportResult {
  /** per-timestep (N,2,N) coefficient tensors, float64 copies */
  tensors: Tensor3[];
  /** model predictions recomputed in float64 from the exported tensors */
  predictions: number[][];
  document: object;
}

export function captureCoefficients(gom: GomModel, frames: number[][]): Tensor3[] {
  const n = gom.topology.nChannels;
  const tensors: Tensor3[] = [];
  for (let t = 2; t < frames.length; t++) {
    const window = [[frames[t - 1], frames[t - 2]]];
    const aData = tf.tidy(() => {
      const outputs = gom.model.apply(tf.tensor3d(window), { training: false }) as tf.Tensor[];
      return outputs[1].dataSync() as Float32Array;
    });
    const tensor: Tensor3 = [];
    let p = 0;
    for (let i = 0; i < n; i++) {
      const rows: number[][] = [];
      for (let w = 0; w < 2; w++) {
        rows.push(Array.from(aData.slice(p, p + n)));
        p += n;
      }
      tensor.push(rows);
    }
    tensors.push(tensor);
  }
  return tensors;
}

export function exportCoefficients(
  gom: GomModel,
  frames: number[][],
  frameRateHz: number,
  classLabel: string,
): ExportResult {
  const tensors = captureCoefficients(gom, frames);
  const predictions = tensors.map((a, idx) => {
    const t = idx + 2;
    return evalSystemMatrix(a, [frames[t - 1], frames[t - 2]]);
  });

  const equations = gom.system.map((eq: Equation) => {
    const i = eq.targetIndex;
    return {
      target: eq.target,
      regressors: eq.regressors.map((c) => ({
        channel: c,
        assumption: eq.assumptionOf[c],
      })),
      alpha: tensors.map((a) => [a[i][0][i], a[i][1][i]]),
      beta: tensors.map((a) => eq.regressorIndices.map((k) => a[i][0][k])),
      var: null,
      theta: null,
      loglik: null,
    };
  });
  const document = {
    format: FORMAT_NAME,
    version: FORMAT_VERSION,
    channel_names: gom.topology.channelNames,
    frame_rate_hz: frameRateHz,
    class_label: classLabel,
    equations,
  };
  return { tensors, predictions, document };
}

export function writeExchangeFile(path: string, result: ExportResult): void {
  fs.writeFileSync(path, JSON.stringify(result.document) + '\n');
}

export function readExchangeFile(path: string): any {
  const doc = JSON.parse(fs.readFileSync(path, 'utf8'));
  if (doc.format !== FORMAT_NAME) throw new Error(`${path}: not a ${FORMAT_NAME} file`);
  if (doc.version !== FORMAT_VERSION) {
    throw new Error(`${path}: unsupported version ${doc.version}`);
  }
  return doc;
}
