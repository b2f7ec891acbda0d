import { createHash } from 'node:crypto';

import { ConfigError, EnvironmentError } from './errors.js';

export interface Encoder {
  /** Encoder identity for logs. */
  readonly name: string;
  /** Output width; fixed for the lifetime of the encoder. */
  readonly dim: number;
  /** Encode a batch of texts into one vector per text. */
  encode(texts: string[]): Promise<Float32Array[]>;
}

function tokenHash(token: string, seed: number, purpose: string): bigint {
  const digest = createHash('sha256')
    .update(`${seed}|${purpose}|${token}`)
    .digest();
  return digest.readBigUInt64LE(0);
}

/**
 * Deterministic frozen encoder used when no model files are available:
 * each whitespace token contributes +/-1 to one hashed coordinate, token
 * vectors are mean-pooled and the result L2-normalized. Identical texts
 * always produce identical vectors, on any platform.
 */
export function hashEncoder(dim: number, seed = 0): Encoder {
  if (!Number.isInteger(dim) || dim < 1) {
    throw new ConfigError(`hash encoder dim must be a positive integer, got ${dim}`);
  }
  return {
    name: `hash:${dim}:${seed}`,
    dim,
    async encode(texts: string[]): Promise<Float32Array[]> {
      return texts.map((text) => {
        const acc = new Float64Array(dim);
        const tokens = text.split(/\s+/).filter((t) => t.length > 0);
        for (const token of tokens) {
          const idx = Number(tokenHash(token, seed, 'idx') % BigInt(dim));
          const sign = (tokenHash(token, seed, 'sign') & 1n) === 1n ? 1 : -1;
          acc[idx]! += sign;
        }
        if (tokens.length > 0) {
          for (let j = 0; j < dim; j++) acc[j]! /= tokens.length; // mean pool
        }
        let norm = 0;
        for (let j = 0; j < dim; j++) norm += acc[j]! * acc[j]!;
        norm = Math.sqrt(norm);
        const out = new Float32Array(dim);
        for (let j = 0; j < dim; j++) {
          out[j] = norm > 0 ? acc[j]! / norm : 0;
        }
        return out;
      });
    },
  };
}

/**
 * Real frozen sentence encoder via transformers.js. Mean-pools last-layer
 * hidden states over non-padding tokens (the pipeline's attention-mask
 * aware 'mean' pooling). Requires the optional @huggingface/transformers
 * package and locally cached (or downloadable) model weights.
 */
export async function transformersEncoder(modelId: string): Promise<Encoder> {
  const moduleName = '@huggingface/transformers';
  let mod: any;
  try {
    mod = await import(moduleName);
  } catch {
    throw new EnvironmentError(
      `encoder "hf:${modelId}" needs the optional ${moduleName} package ` +
      `(npm install ${moduleName})`,
    );
  }
  let extractor: any;
  try {
    extractor = await mod.pipeline('feature-extraction', modelId);
  } catch (err) {
    throw new EnvironmentError(
      `cannot load encoder ${modelId}: ${err instanceof Error ? err.message : err}`,
    );
  }
  const probe = await extractor('dimension probe', { pooling: 'mean' });
  const dim = probe.dims[probe.dims.length - 1];
  return {
    name: `hf:${modelId}`,
    dim,
    async encode(texts: string[]): Promise<Float32Array[]> {
      const out = await extractor(texts, { pooling: 'mean' });
      const flat: Float32Array = Float32Array.from(out.data);
      const rows: Float32Array[] = [];
      for (let i = 0; i < texts.length; i++) {
        rows.push(flat.slice(i * dim, (i + 1) * dim));
      }
      return rows;
    },
  };
}

/**
 * Resolve an encoder spec string:
 *   hash:<dim>[:<seed>]   built-in deterministic hashing encoder
 *   hf:<model-id>         transformers.js feature-extraction model
 */
export async function resolveEncoder(spec: string): Promise<Encoder> {
  const sep = spec.indexOf(':');
  const scheme = sep < 0 ? spec : spec.slice(0, sep);
  const rest = sep < 0 ? '' : spec.slice(sep + 1);
  if (scheme === 'hash') {
    const [dimRaw, seedRaw] = rest.split(':');
    const dim = Number(dimRaw);
    const seed = seedRaw === undefined ? 0 : Number(seedRaw);
    if (!Number.isFinite(dim) || !Number.isFinite(seed)) {
      throw new ConfigError(`bad hash encoder spec ${JSON.stringify(spec)}`);
    }
    return hashEncoder(dim, seed);
  }
  if (scheme === 'hf') {
    if (rest === '') {
      throw new ConfigError('hf encoder spec needs a model id, e.g. hf:Xenova/all-MiniLM-L6-v2');
    }
    return transformersEncoder(rest);
  }
  throw new ConfigError(
    `unknown encoder scheme ${JSON.stringify(spec)}; expected hash:<dim>[:<seed>] or hf:<model-id>`,
  );
}
