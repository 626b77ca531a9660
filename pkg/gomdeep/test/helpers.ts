/**
 * Test helpers: a small shared topology, synthetic data generation via
 * the core toolkit CLI, and invocation of the core toolkit itself.
 */

import { execFileSync } from 'node:child_process';
import * as fs from 'node:fs';
import * as os from 'node:os';
import * as path from 'node:path';

import { SkeletonTopology } from '../src/topology.js';

export const TOPOLOGY_DOC = {
  joints: ['R', 'S', 'L1', 'L2', 'R1', 'R2'],
  parent: { R: null, S: 'R', L1: 'R', L2: 'L1', R1: 'R', R2: 'R1' },
  limbs: {
    R: 'spine',
    S: 'spine',
    L1: 'left-leg',
    L2: 'left-leg',
    R1: 'right-leg',
    R2: 'right-leg',
  },
};

export function makeTopology(): SkeletonTopology {
  return new SkeletonTopology(TOPOLOGY_DOC);
}

export function tempDir(prefix: string): string {
  return fs.mkdtempSync(path.join(os.tmpdir(), prefix));
}

export function gomkit(...args: string[]): string {
  return execFileSync('gomkit', args, { encoding: 'utf8' });
}

/** Damped-oscillator class spec for the core toolkit's synth command. */
export function oscillatorSpecDoc(opts: {
  label: string;
  reps: number;
  length: number;
  sigma: number;
  seed: number;
  freq: [number, number];
  rho: [number, number];
  amp: [number, number];
}) {
  // deterministic LCG so the spec itself is reproducible
  let state = opts.seed >>> 0;
  const rand = () => {
    state = (1664525 * state + 1013904223) >>> 0;
    return state / 4294967296;
  };
  const uni = (lo: number, hi: number) => lo + (hi - lo) * rand();
  const channels: Record<string, object> = {};
  for (const joint of TOPOLOGY_DOC.joints) {
    for (const axis of ['x', 'y', 'z']) {
      const w = (2 * Math.PI * uni(...opts.freq)) / 90.0;
      const rho = uni(...opts.rho);
      const amp = uni(...opts.amp);
      const phase = uni(0, 2 * Math.PI);
      channels[`${joint}.${axis}`] = {
        alpha1: 2 * rho * Math.cos(w),
        alpha2: rho * rho,
        init: [amp * Math.sin(phase), rho * amp * Math.sin(w + phase)],
      };
    }
  }
  return {
    label: opts.label,
    reps: opts.reps,
    length: opts.length,
    noise_sigma: opts.sigma,
    channels,
  };
}

export function writeSynthDataset(
  dir: string,
  classes: object[],
  seed: number,
): { dataDir: string; topologyPath: string } {
  const specPath = path.join(dir, 'spec.json');
  fs.writeFileSync(specPath, JSON.stringify({ frame_rate_hz: 90.0, classes }));
  const topologyPath = path.join(dir, 'topology.json');
  fs.writeFileSync(topologyPath, JSON.stringify(TOPOLOGY_DOC));
  const dataDir = path.join(dir, 'data');
  gomkit('synth', '--spec', specPath, '--topology', topologyPath, '--seed', String(seed), '--out', dataDir);
  return { dataDir, topologyPath };
}
