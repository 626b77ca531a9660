/**
 * Custom tfjs layers: last-timestep slice, Gaussian reparameterized
 * sampling, support masking, and the system-evaluation output layer.
 */

import * as tf from '@tensorflow/tfjs';

type Shape = (number | null)[];

export class LastTimestep extends tf.layers.Layer {
  static readonly className = 'LastTimestep';

  computeOutputShape(inputShape: Shape): Shape {
    return [inputShape[0], inputShape[2] as number];
  }

  call(inputs: tf.Tensor | tf.Tensor[]): tf.Tensor {
    const x = Array.isArray(inputs) ? inputs[0] : inputs;
    const t = x.shape[1] as number;
    return tf.tidy(() => x.slice([0, t - 1, 0], [-1, 1, -1]).squeeze([1]));
  }
}
tf.serialization.registerClass(LastTimestep);

export interface SamplingArgs {
  seed?: number;
  name?: string;
}

/**
 * Reparameterized Gaussian sampling: Z = mu + eps * exp(0.5 * logVar)
 * during training, Z = mu (eps = 0) at inference.
 */
export class GaussianSampling extends tf.layers.Layer {
  static readonly className = 'GaussianSampling';
  private seed: number;
  private draws = 0;

  constructor(args: SamplingArgs = {}) {
    super({ name: args.name });
    this.seed = args.seed ?? 1;
  }

  computeOutputShape(inputShape: Shape[]): Shape {
    return inputShape[0];
  }

  call(inputs: tf.Tensor[], kwargs: { training?: boolean }): tf.Tensor {
    const [mu, logVar] = inputs;
    if (!kwargs?.training) {
      return mu.clone();
    }
    this.draws += 1;
    return tf.tidy(() => {
      const eps = tf.randomNormal(mu.shape as number[], 0, 1, 'float32', this.seed + this.draws);
      return tf.add(mu, tf.mul(eps, tf.exp(tf.mul(logVar, 0.5))));
    });
  }

  getConfig() {
    return { ...super.getConfig(), seed: this.seed };
  }
}
tf.serialization.registerClass(GaussianSampling);

/** Multiplies the raw coefficient tensor by the fixed support mask. */
export class SupportMaskLayer extends tf.layers.Layer {
  static readonly className = 'SupportMaskLayer';
  private readonly maskData: Float32Array;
  private readonly n: number;
  private mask: tf.Tensor | null = null;

  constructor(args: { mask: Float32Array; nChannels: number; name?: string }) {
    super({ name: args.name });
    this.maskData = args.mask;
    this.n = args.nChannels;
  }

  computeOutputShape(inputShape: Shape): Shape {
    return inputShape;
  }

  call(inputs: tf.Tensor | tf.Tensor[]): tf.Tensor {
    const x = Array.isArray(inputs) ? inputs[0] : inputs;
    if (this.mask === null) {
      // survives the training step's tidy scopes
      this.mask = tf.keep(tf.tensor(this.maskData, [1, this.n, 2, this.n]));
    }
    return tf.mul(x, this.mask);
  }
}
tf.serialization.registerClass(SupportMaskLayer);

/**
 * System-evaluation layer: [A (b,N,2,N), X (b,2,N)] -> predictions
 * (b,N). The float64 twin lives in gom.ts; gradients flow through tf's
 * autodiff and are checked against the analytic form in the tests.
 */
export class GomEvalLayer extends tf.layers.Layer {
  static readonly className = 'GomEvalLayer';
  private sign: tf.Tensor | null = null;

  computeOutputShape(inputShape: Shape[]): Shape {
    const a = inputShape[0];
    return [a[0], a[1] as number];
  }

  call(inputs: tf.Tensor[]): tf.Tensor {
    const [a, x] = inputs;
    if (this.sign === null) {
      this.sign = tf.keep(tf.tensor([1, -1], [1, 1, 2, 1]));
    }
    return tf.tidy(() => {
      const signed = tf.mul(x.expandDims(1), this.sign as tf.Tensor); // (b,1,2,N)
      return tf.sum(tf.mul(a, signed), [2, 3]);
    });
  }
}
tf.serialization.registerClass(GomEvalLayer);
