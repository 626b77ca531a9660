/**
 * JSON weight persistence: tfjs's file:// handlers need the node
 * bindings, so weights are stored as plain JSON arrays in model-build
 * order together with the architecture config.
 */

import * as fs from 'node:fs';
import * as path from 'node:path';

import * as tf from '@tensorflow/tfjs';

import { ArchitectureConfig, buildModel, GomModel } from './models.js';
import { loadTopology, SkeletonTopology } from './topology.js';

export function saveModel(dir: string, gom: GomModel, topologyPath: string): void {
  fs.mkdirSync(dir, { recursive: true });
  const weights = gom.model.getWeights().map((w) => ({
    shape: w.shape,
    values: Array.from(w.dataSync()),
  }));
  fs.writeFileSync(
    path.join(dir, 'model.json'),
    JSON.stringify({ config: gom.config, weights }) + '\n',
  );
  fs.copyFileSync(topologyPath, path.join(dir, 'topology.json'));
}

export function loadModel(dir: string): GomModel {
  const doc = JSON.parse(fs.readFileSync(path.join(dir, 'model.json'), 'utf8'));
  const topology: SkeletonTopology = loadTopology(path.join(dir, 'topology.json'));
  const gom = buildModel(topology, doc.config as ArchitectureConfig);
  const tensors = doc.weights.map(
    (w: { shape: number[]; values: number[] }) => tf.tensor(w.values, w.shape),
  );
  gom.model.setWeights(tensors);
  tensors.forEach((t: tf.Tensor) => t.dispose());
  return gom;
}
