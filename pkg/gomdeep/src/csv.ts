/**
 * Motion CSV reader for the shared format: optional `# key=value`
 * comment lines, a header row of JOINT.axis channel names, one row of
 * decimal degrees per frame.
 */

import * as fs from 'node:fs';

export interface MotionCsv {
  channelNames: string[];
  frames: number[][];
  meta: Record<string, string>;
}

export function readMotionCsv(path: string): MotionCsv {
  const text = fs.readFileSync(path, 'utf8');
  const meta: Record<string, string> = { fps: '90' };
  const frames: number[][] = [];
  let channelNames: string[] | null = null;
  for (const raw of text.split('\n')) {
    const line = raw.trim();
    if (!line) continue;
    if (line.startsWith('#')) {
      const eq = line.indexOf('=');
      if (eq > 0) meta[line.slice(1, eq).trim()] = line.slice(eq + 1).trim();
      continue;
    }
    if (channelNames === null) {
      channelNames = line.split(',').map((s) => s.trim());
      continue;
    }
    const row = line.split(',').map((cell) => {
      const v = Number(cell);
      if (!Number.isFinite(v)) throw new Error(`${path}: non-numeric cell ${cell}`);
      return v;
    });
    if (row.length !== channelNames.length) {
      throw new Error(`${path}: row width ${row.length} != ${channelNames.length}`);
    }
    frames.push(row);
  }
  if (channelNames === null) throw new Error(`${path}: empty file`);
  return { channelNames, frames, meta };
}

/** Frames permuted into the given channel order. */
export function framesInOrder(csv: MotionCsv, order: string[]): number[][] {
  const index = new Map(csv.channelNames.map((c, i) => [c, i]));
  const cols = order.map((c) => {
    const i = index.get(c);
    if (i === undefined) throw new Error(`missing channel ${c}`);
    return i;
  });
  return csv.frames.map((row) => cols.map((i) => row[i]));
}
