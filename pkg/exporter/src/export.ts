import { readFile, writeFile } from 'node:fs/promises';

import { Encoder } from './encoders.js';
import { encodeStore } from './format.js';
import { parseTextFile } from './input.js';

export interface ExportJob {
  inputPath: string;
  outputPath: string;
  encoder: Encoder;
  batchSize: number;
}

export interface ExportResult {
  count: number;
  dim: number;
  encoder: string;
}

/**
 * Encode every "<id>\t<text>" line of the input file and write the
 * embedding store: row k holds the vector for sample id k.
 */
export async function runExport(job: ExportJob): Promise<ExportResult> {
  const content = await readFile(job.inputPath, 'utf-8');
  const rows = parseTextFile(content);
  const batchSize = Math.max(1, job.batchSize);

  const vectors: Float32Array[] = [];
  for (let start = 0; start < rows.length; start += batchSize) {
    const batch = rows.slice(start, start + batchSize).map((r) => r.text);
    const encoded = await job.encoder.encode(batch);
    vectors.push(...encoded);
  }

  await writeFile(job.outputPath, encodeStore(vectors, job.encoder.dim));
  return { count: rows.length, dim: job.encoder.dim, encoder: job.encoder.name };
}
