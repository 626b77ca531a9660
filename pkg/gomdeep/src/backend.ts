/**
 * Backend selection: the wasm backend when available (several times
 * faster than the plain JS kernels in node), plain cpu otherwise.
 */

import * as tf from '@tensorflow/tfjs';

let initialized: Promise<string> | null = null;

export function initBackend(): Promise<string> {
  if (initialized === null) {
    initialized = (async () => {
      try {
        await import('@tensorflow/tfjs-backend-wasm');
        if (await tf.setBackend('wasm')) return 'wasm';
      } catch {
        // fall through to the default backend
      }
      await tf.ready();
      return tf.getBackend();
    })();
  }
  return initialized;
}
