/**
 * The two coefficient-producing autoencoders.
 *
 * Both consume the lag window X = [P_{t-1}; P_{t-2}] with shape (2, N)
 * and emit the masked coefficient tensor A (N, 2, N) plus the
 * prediction Y (N,) from the system-evaluation output layer.
 *
 * Variational model: recurrent encoder (width 32, softsign, dropout
 * 0.2 / recurrent 0.2), two linear heads onto a 2-dimensional latent,
 * reparameterized sampling, recurrent decoder (width 32), dropout 0.8,
 * time-distributed linear head to 2 x N^2 reshaped to (N, 2, N).
 *
 * Attention model: recurrent encoder returning sequence and states,
 * batch-normalized state handoff into the recurrent decoder,
 * dot-product attention weights over encoder steps, context
 * concatenation, then the same time-distributed head.
 */

import * as tf from '@tensorflow/tfjs';

import { supportMask, buildSystem, Equation } from './equations.js';
import { SkeletonTopology } from './topology.js';
import { GaussianSampling, GomEvalLayer, LastTimestep, SupportMaskLayer } from './layers.js';

export type ModelKind = 'vae' | 'att';

export interface ArchitectureConfig {
  kind: ModelKind;
  nChannels: number;
  recurrentWidth: number; // 32
  latentDim: number; // 2 (variational only)
  dropout: number; // 0.2
  recurrentDropout: number; // 0.2
  headDropout: number; // 0.8 (variational only)
  seed: number;
}

export function defaultConfig(kind: ModelKind, nChannels: number, seed = 0): ArchitectureConfig {
  return {
    kind,
    nChannels,
    recurrentWidth: 32,
    latentDim: 2,
    dropout: 0.2,
    recurrentDropout: 0.2,
    headDropout: 0.8,
    seed,
  };
}

export interface GomModel {
  /** outputs: [prediction (b,N), maskedA (b,N,2,N), ...extras] */
  model: tf.LayersModel;
  config: ArchitectureConfig;
  system: Equation[];
  topology: SkeletonTopology;
}

function coefficientHead(
  seq: tf.SymbolicTensor,
  input: tf.SymbolicTensor,
  topology: SkeletonTopology,
  system: Equation[],
): { y: tf.SymbolicTensor; a: tf.SymbolicTensor } {
  const n = topology.nChannels;
  const tfc = tf.layers
    .timeDistributed({
      layer: tf.layers.dense({ units: n * n, activation: 'linear', name: 'coeff_head' }),
    })
    .apply(seq) as tf.SymbolicTensor;
  const reshaped = tf.layers
    .reshape({ targetShape: [n, 2, n] })
    .apply(tfc) as tf.SymbolicTensor;
  const a = new SupportMaskLayer({
    mask: supportMask(system, n),
    nChannels: n,
    name: 'support_mask',
  }).apply(reshaped) as tf.SymbolicTensor;
  const y = new GomEvalLayer({ name: 'system_eval' }).apply([a, input]) as tf.SymbolicTensor;
  return { y, a };
}

export function buildVae(topology: SkeletonTopology, config: ArchitectureConfig): GomModel {
  const n = topology.nChannels;
  const system = buildSystem(topology);
  const input = tf.input({ shape: [2, n], name: 'lags' });
  const encoded = tf.layers
    .lstm({
      units: config.recurrentWidth,
      returnSequences: true,
      activation: 'softsign',
      dropout: config.dropout,
      recurrentDropout: config.recurrentDropout,
      name: 'encoder',
    })
    .apply(input) as tf.SymbolicTensor;
  const summary = new LastTimestep({ name: 'enc_last' }).apply(encoded) as tf.SymbolicTensor;
  const mu = tf.layers
    .dense({ units: config.latentDim, activation: 'linear', name: 'latent_mean' })
    .apply(summary) as tf.SymbolicTensor;
  const logVar = tf.layers
    .dense({ units: config.latentDim, activation: 'linear', name: 'latent_logvar' })
    .apply(summary) as tf.SymbolicTensor;
  const z = new GaussianSampling({ seed: config.seed, name: 'latent_sample' }).apply([
    mu,
    logVar,
  ]) as tf.SymbolicTensor;
  const zSeq = tf.layers.repeatVector({ n: 2 }).apply(z) as tf.SymbolicTensor;
  const decoded = tf.layers
    .lstm({
      units: config.recurrentWidth,
      returnSequences: true,
      activation: 'softsign',
      dropout: config.dropout,
      recurrentDropout: config.recurrentDropout,
      name: 'decoder',
    })
    .apply(zSeq) as tf.SymbolicTensor;
  const dropped = tf.layers
    .dropout({ rate: config.headDropout, seed: config.seed })
    .apply(decoded) as tf.SymbolicTensor;
  const { y, a } = coefficientHead(dropped, input, topology, system);
  const model = tf.model({ inputs: input, outputs: [y, a, mu, logVar], name: 'vae_coeff_model' });
  return { model, config, system, topology };
}

export function buildAtt(topology: SkeletonTopology, config: ArchitectureConfig): GomModel {
  const n = topology.nChannels;
  const system = buildSystem(topology);
  const input = tf.input({ shape: [2, n], name: 'lags' });
  const encOut = tf.layers
    .lstm({
      units: config.recurrentWidth,
      returnSequences: true,
      returnState: true,
      activation: 'softsign',
      dropout: config.dropout,
      recurrentDropout: config.recurrentDropout,
      name: 'encoder',
    })
    .apply(input) as tf.SymbolicTensor[];
  const [encSeq, hState, cState] = encOut;
  const hNorm = tf.layers.batchNormalization({ name: 'bn_hidden' }).apply(hState) as tf.SymbolicTensor;
  const cNorm = tf.layers.batchNormalization({ name: 'bn_cell' }).apply(cState) as tf.SymbolicTensor;
  const decSeq = tf.layers
    .lstm({
      units: config.recurrentWidth,
      returnSequences: true,
      activation: 'softsign',
      dropout: config.dropout,
      recurrentDropout: config.recurrentDropout,
      name: 'decoder',
    })
    .apply(input, { initialState: [hNorm, cNorm] }) as tf.SymbolicTensor;
  const scores = tf.layers
    .dot({ axes: 2, name: 'attention_scores' })
    .apply([decSeq, encSeq]) as tf.SymbolicTensor;
  const weights = tf.layers
    .softmax({ axis: -1, name: 'attention_weights' })
    .apply(scores) as tf.SymbolicTensor;
  const context = tf.layers
    .dot({ axes: [2, 1], name: 'attention_context' })
    .apply([weights, encSeq]) as tf.SymbolicTensor;
  const attentional = tf.layers
    .concatenate({ name: 'attentional_state' })
    .apply([decSeq, context]) as tf.SymbolicTensor;
  const { y, a } = coefficientHead(attentional, input, topology, system);
  const model = tf.model({ inputs: input, outputs: [y, a, weights], name: 'att_coeff_model' });
  return { model, config, system, topology };
}

export function buildModel(topology: SkeletonTopology, config: ArchitectureConfig): GomModel {
  return config.kind === 'vae' ? buildVae(topology, config) : buildAtt(topology, config);
}
