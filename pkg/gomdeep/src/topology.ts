/**
 * Skeleton topology loaded from the shared topology JSON schema
 * (joints / parent / limbs / optional nonserial overrides).
 *
 * Channel order is joint-major over the fixed x, y, z axes and must
 * match the core toolkit's ordering exactly; the coefficient-exchange
 * round trip is validated against it.
 */

import * as fs from 'node:fs';

export const AXES = ['x', 'y', 'z'] as const;

const MIRROR_LIMBS: Record<string, string> = {
  'left-arm': 'right-arm',
  'right-arm': 'left-arm',
  'left-leg': 'right-leg',
  'right-leg': 'left-leg',
};

export interface TopologyDoc {
  joints: string[];
  parent: Record<string, string | null>;
  limbs: Record<string, string>;
  nonserial?: Record<string, string[]>;
}

export class SkeletonTopology {
  readonly joints: string[];
  readonly parent: Record<string, string | null>;
  readonly limbOf: Record<string, string>;
  readonly nonserial: Record<string, string[]>;
  readonly channelNames: string[];
  private readonly channelIndexMap: Map<string, number>;

  constructor(doc: TopologyDoc) {
    this.joints = [...doc.joints];
    this.parent = {};
    this.limbOf = {};
    for (const j of this.joints) {
      if (!(j in doc.parent)) throw new Error(`joint ${j} missing from parent map`);
      this.parent[j] = doc.parent[j] ?? null;
      const limb = doc.limbs[j];
      if (!limb) throw new Error(`joint ${j} missing from limb map`);
      this.limbOf[j] = limb;
    }
    const roots = this.joints.filter((j) => this.parent[j] === null);
    if (roots.length !== 1) throw new Error('topology must have a single root');

    this.nonserial = {};
    for (const j of this.joints) {
      const override = doc.nonserial?.[j];
      this.nonserial[j] = override ? [...override] : this.twoHop(j);
    }

    this.channelNames = this.joints.flatMap((j) => AXES.map((a) => `${j}.${a}`));
    this.channelIndexMap = new Map(this.channelNames.map((c, i) => [c, i]));
  }

  get nChannels(): number {
    return this.channelNames.length;
  }

  channelIndex(name: string): number {
    const idx = this.channelIndexMap.get(name);
    if (idx === undefined) throw new Error(`unknown channel ${name}`);
    return idx;
  }

  children(joint: string): string[] {
    return this.joints.filter((j) => this.parent[j] === joint);
  }

  depth(joint: string): number {
    let d = 0;
    let cur = this.parent[joint];
    while (cur !== null) {
      d += 1;
      cur = this.parent[cur];
    }
    return d;
  }

  private twoHop(joint: string): string[] {
    const partners: string[] = [];
    const p = this.parent[joint];
    if (p !== null && this.parent[p] !== null) partners.push(this.parent[p] as string);
    for (const c of this.children(joint)) partners.push(...this.children(c));
    return partners;
  }

  mirrorOf(joint: string): string | null {
    const other = MIRROR_LIMBS[this.limbOf[joint]];
    if (!other) return null;
    const mine = this.joints
      .filter((j) => this.limbOf[j] === this.limbOf[joint])
      .sort((a, b) => this.depth(a) - this.depth(b));
    const theirs = this.joints
      .filter((j) => this.limbOf[j] === other)
      .sort((a, b) => this.depth(a) - this.depth(b));
    const pos = mine.indexOf(joint);
    return pos >= 0 && pos < theirs.length ? theirs[pos] : null;
  }
}

export function loadTopology(path: string): SkeletonTopology {
  return new SkeletonTopology(JSON.parse(fs.readFileSync(path, 'utf8')) as TopologyDoc);
}
