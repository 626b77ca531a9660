/**
 * Equation structure over a topology: per channel, the lag-1 regressors
 * drawn from the intra-joint (H2), mirror-limb (H3), serial (H4.1), and
 * non-serial (H4.2) assumption families, in channel order. This mirrors
 * the structure the core toolkit builds from the same topology JSON and
 * is validated against it through the exchange-file round trip.
 */

import { AXES, SkeletonTopology } from './topology.js';

export type AssumptionTag = 'H2' | 'H3' | 'H4.1' | 'H4.2';

export interface Equation {
  target: string;
  targetIndex: number;
  regressors: string[];
  regressorIndices: number[];
  assumptionOf: Record<string, AssumptionTag>;
}

export function buildEquation(topology: SkeletonTopology, channel: string): Equation {
  const dot = channel.lastIndexOf('.');
  const joint = channel.slice(0, dot);
  const axis = channel.slice(dot + 1);
  if (!topology.channelNames.includes(channel)) throw new Error(`unknown channel ${channel}`);

  const tagOf: Record<string, AssumptionTag> = {};
  for (const a of AXES) {
    if (a !== axis) tagOf[`${joint}.${a}`] = 'H2';
  }
  const mirror = topology.mirrorOf(joint);
  if (mirror !== null) tagOf[`${mirror}.${axis}`] = 'H3';
  const serial: string[] = [];
  const parent = topology.parent[joint];
  if (parent !== null) serial.push(parent);
  serial.push(...topology.children(joint));
  for (const j of serial) tagOf[`${j}.${axis}`] = 'H4.1';
  for (const j of topology.nonserial[joint]) {
    const c = `${j}.${axis}`;
    if (!(c in tagOf) && c !== channel) tagOf[c] = 'H4.2';
  }

  const regressors = topology.channelNames.filter((c) => c in tagOf);
  return {
    target: channel,
    targetIndex: topology.channelIndex(channel),
    regressors,
    regressorIndices: regressors.map((c) => topology.channelIndex(c)),
    assumptionOf: Object.fromEntries(regressors.map((c) => [c, tagOf[c]])),
  };
}

export function buildSystem(topology: SkeletonTopology): Equation[] {
  return topology.channelNames.map((c) => buildEquation(topology, c));
}

/** Boolean (N, 2, N) support mask flattened row-major. */
export function supportMask(system: Equation[], nChannels: number): Float32Array {
  const mask = new Float32Array(nChannels * 2 * nChannels);
  const at = (i: number, w: number, k: number) => (i * 2 + w) * nChannels + k;
  for (const eq of system) {
    const i = eq.targetIndex;
    mask[at(i, 0, i)] = 1;
    mask[at(i, 1, i)] = 1;
    for (const k of eq.regressorIndices) mask[at(i, 0, k)] = 1;
  }
  return mask;
}
