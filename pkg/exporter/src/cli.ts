#!/usr/bin/env node
import { realpathSync } from 'node:fs';
import { pathToFileURL } from 'node:url';

import { resolveEncoder } from './encoders.js';
import { ConfigError, EnvironmentError, InputError } from './errors.js';
import { runExport } from './export.js';

const USAGE = `elec-export: encode textualized samples into an ELEC embedding store

usage: elec-export --input texts.tsv --output embeddings.store
                   [--encoder hash:64 | hf:<model-id>] [--batch-size 16]

exit codes: 0 ok, 2 usage/config, 3 bad input data, 4 environment/io
`;

interface Args {
  input?: string;
  output?: string;
  encoder: string;
  batchSize: number;
}

function parseArgs(argv: string[]): Args {
  const args: Args = { encoder: 'hash:64', batchSize: 16 };
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i]!;
    const next = () => {
      const v = argv[++i];
      if (v === undefined) throw new ConfigError(`${flag} needs a value`);
      return v;
    };
    switch (flag) {
      case '--input': case '-i': args.input = next(); break;
      case '--output': case '-o': args.output = next(); break;
      case '--encoder': case '-e': args.encoder = next(); break;
      case '--batch-size': case '-b': args.batchSize = Number(next()); break;
      case '--help': case '-h':
        process.stdout.write(USAGE);
        process.exit(0);
        break;
      default:
        throw new ConfigError(`unknown flag ${flag}`);
    }
  }
  if (!args.input || !args.output) {
    throw new ConfigError('--input and --output are required');
  }
  if (!Number.isInteger(args.batchSize) || args.batchSize < 1) {
    throw new ConfigError(`--batch-size must be a positive integer`);
  }
  return args;
}

export async function main(argv: string[]): Promise<number> {
  try {
    const args = parseArgs(argv);
    const encoder = await resolveEncoder(args.encoder);
    const result = await runExport({
      inputPath: args.input!,
      outputPath: args.output!,
      encoder,
      batchSize: args.batchSize,
    });
    process.stdout.write(
      `wrote ${result.count} x ${result.dim} store (${result.encoder}) -> ${args.output}\n`,
    );
    return 0;
  } catch (err) {
    const message = err instanceof Error ? `${err.name}: ${err.message}` : String(err);
    process.stderr.write(message + '\n');
    if (err instanceof ConfigError) return 2;
    if (err instanceof InputError) return 3;
    if (err instanceof EnvironmentError) return 4;
    if (err && typeof err === 'object' && 'code' in err) return 4; // fs errors
    return 1;
  }
}

const entry = process.argv[1];
if (entry !== undefined &&
    import.meta.url === pathToFileURL(realpathSync(entry)).href) {
  main(process.argv.slice(2)).then((code) => process.exit(code));
}
