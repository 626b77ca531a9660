/**
 * Training: sliding lag windows, k-fold cross-validation, and a custom
 * Adam loop whose objective is the mean absolute prediction error plus
 * (for the variational model) the KL regularizer.
 *
 * The KL metric is recomputed in float64 from the latent heads after
 * every step, using expm1 so the per-step value is exactly
 * non-negative as the analytic formula demands.
 */

import * as tf from '@tensorflow/tfjs';

import { GomModel } from './models.js';

export interface TrainSpec {
  epochs: number;
  batchSize: number;
  learningRate: number; // initial; variational 1e-3, attention 5e-3
  adamBeta1: number; // 0.90
  adamBeta2: number; // 0.99
  folds: number; // 5
  seed: number;
  betaVae: number; // KL weight, 1.0
  betaGom: number; // prediction weight, 1.0
  /** step-decay factor applied at 1/2 and 3/4 of the epoch budget */
  lrStepDecay: number;
}

export function defaultTrainSpec(kind: 'vae' | 'att', overrides: Partial<TrainSpec> = {}): TrainSpec {
  return {
    epochs: 40,
    batchSize: 64,
    learningRate: kind === 'vae' ? 1e-3 : 5e-3,
    adamBeta1: 0.9,
    adamBeta2: 0.99,
    folds: 5,
    seed: 0,
    betaVae: 1.0,
    betaGom: 1.0,
    lrStepDecay: 0.3,
    ...overrides,
  };
}

export interface Windows {
  x: number[][][]; // [n][2][N], row 0 = P_{t-1}, row 1 = P_{t-2}
  y: number[][]; // [n][N] = P_t
}

/** Length-2 lag windows with stride 1; predictions start at frame 3. */
export function makeWindows(sequences: number[][][]): Windows {
  const x: number[][][] = [];
  const y: number[][] = [];
  for (const frames of sequences) {
    for (let t = 2; t < frames.length; t++) {
      x.push([frames[t - 1], frames[t - 2]]);
      y.push(frames[t]);
    }
  }
  return { x, y };
}

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

export function kFoldIndices(n: number, folds: number, seed: number): number[][] {
  const order = [...Array(n).keys()];
  const rand = mulberry32(seed + 1);
  for (let i = n - 1; i > 0; i--) {
    const j = Math.floor(rand() * (i + 1));
    [order[i], order[j]] = [order[j], order[i]];
  }
  const out: number[][] = Array.from({ length: folds }, () => []);
  order.forEach((idx, pos) => out[pos % folds].push(idx));
  return out;
}

export interface EpochRecord {
  epoch: number;
  trainLoss: number;
  valPredLoss: number;
  klValues: number[]; // one per optimizer step (variational only)
}

export interface FoldHistory {
  fold: number;
  epochs: EpochRecord[];
}

export interface TrainResult {
  histories: FoldHistory[];
  finalTrainLoss: number;
}

function klFloat64(mu: Float32Array, logVar: Float32Array): number {
  // 0.5 * sum(mu^2 + expm1(logVar) - logVar) over the batch mean
  let total = 0;
  for (let i = 0; i < mu.length; i++) {
    total += 0.5 * (mu[i] * mu[i] + Math.expm1(logVar[i]) - logVar[i]);
  }
  return total / (mu.length / 2); // per-example (latent dim 2)
}

function predictionLoss(yTrue: tf.Tensor, yPred: tf.Tensor): tf.Scalar {
  // mean absolute difference over all motion descriptors
  return tf.mean(tf.abs(tf.sub(yTrue, yPred))) as tf.Scalar;
}

function klLoss(mu: tf.Tensor, logVar: tf.Tensor): tf.Scalar {
  const term = tf.sub(tf.add(tf.square(mu), tf.exp(logVar)), tf.add(logVar, 1));
  return tf.mul(0.5, tf.mean(tf.sum(term, -1))) as tf.Scalar;
}

export function evaluatePredLoss(gom: GomModel, windows: Windows, indices?: number[]): number {
  const pick = indices ?? [...Array(windows.y.length).keys()];
  if (pick.length === 0) return NaN;
  return tf.tidy(() => {
    const x = tf.tensor3d(pick.map((i) => windows.x[i]));
    const y = tf.tensor2d(pick.map((i) => windows.y[i]));
    const outputs = gom.model.apply(x, { training: false }) as tf.Tensor[];
    return predictionLoss(y, outputs[0]).arraySync() as number;
  });
}

export function trainOnce(
  gom: GomModel,
  windows: Windows,
  trainIdx: number[],
  valIdx: number[],
  spec: TrainSpec,
  fold: number,
): FoldHistory {
  let optimizer = tf.train.adam(spec.learningRate, spec.adamBeta1, spec.adamBeta2);
  const isVae = gom.config.kind === 'vae';
  const rand = mulberry32(spec.seed + 17 * (fold + 1));
  const epochs: EpochRecord[] = [];
  const decayAt = new Set(
    [Math.floor(spec.epochs / 2), Math.floor((3 * spec.epochs) / 4)].filter((e) => e > 1),
  );
  let lr = spec.learningRate;

  for (let epoch = 1; epoch <= spec.epochs; epoch++) {
    if (spec.lrStepDecay < 1 && decayAt.has(epoch)) {
      lr *= spec.lrStepDecay;
      optimizer.dispose();
      optimizer = tf.train.adam(lr, spec.adamBeta1, spec.adamBeta2);
    }
    const order = [...trainIdx];
    for (let i = order.length - 1; i > 0; i--) {
      const j = Math.floor(rand() * (i + 1));
      [order[i], order[j]] = [order[j], order[i]];
    }
    let epochLoss = 0;
    let batches = 0;
    const klValues: number[] = [];
    for (let start = 0; start < order.length; start += spec.batchSize) {
      const batch = order.slice(start, start + spec.batchSize);
      const x = tf.tensor3d(batch.map((i) => windows.x[i]));
      const y = tf.tensor2d(batch.map((i) => windows.y[i]));
      let muArr: Float32Array | null = null;
      let lvArr: Float32Array | null = null;
      const cost = optimizer.minimize(
        () => {
          const outputs = gom.model.apply(x, { training: true }) as tf.Tensor[];
          const pred = predictionLoss(y, outputs[0]);
          let loss = tf.mul(spec.betaGom, pred) as tf.Scalar;
          if (isVae) {
            const [mu, logVar] = [outputs[2], outputs[3]];
            muArr = mu.dataSync() as Float32Array;
            lvArr = logVar.dataSync() as Float32Array;
            loss = tf.add(loss, tf.mul(spec.betaVae, klLoss(mu, logVar))) as tf.Scalar;
          }
          return loss;
        },
        true,
      ) as tf.Scalar;
      epochLoss += cost.arraySync() as number;
      batches += 1;
      if (isVae && muArr && lvArr) klValues.push(klFloat64(muArr, lvArr));
      tf.dispose([x, y, cost]);
    }
    epochs.push({
      epoch,
      trainLoss: epochLoss / Math.max(batches, 1),
      valPredLoss: evaluatePredLoss(gom, windows, valIdx),
      klValues,
    });
  }
  optimizer.dispose();
  return { fold, epochs };
}

/**
 * K-fold cross-validated training on fresh models per fold, then a
 * final pass of the supplied model on all windows.
 */
export function trainWithCv(
  buildFresh: () => GomModel,
  finalModel: GomModel,
  windows: Windows,
  spec: TrainSpec,
): TrainResult {
  const folds = kFoldIndices(windows.y.length, spec.folds, spec.seed);
  const histories: FoldHistory[] = [];
  for (let f = 0; f < spec.folds; f++) {
    const val = folds[f];
    const train = folds.flatMap((chunk, i) => (i === f ? [] : chunk));
    const fresh = buildFresh();
    histories.push(trainOnce(fresh, windows, train, val, spec, f));
    fresh.model.dispose();
  }
  const all = [...Array(windows.y.length).keys()];
  const finalHist = trainOnce(finalModel, windows, all, all, spec, spec.folds);
  return {
    histories,
    finalTrainLoss: finalHist.epochs[finalHist.epochs.length - 1].trainLoss,
  };
}
