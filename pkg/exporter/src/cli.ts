#!/usr/bin/env node
import { DEFAULT_MAX_LEN, DEFAULT_MODEL, exportEmbeddings } from './export.js';

const USAGE = `usage: embed-export --input <corpus.jsonl|corpus.txt> --output <file.emb>
                    [--model <id>] [--max-len <n>]

Encodes every document with a sentence encoder and writes an EMB1 file plus a
<output>.manifest.json. Model ids: a sentence-transformers model for
@huggingface/transformers (default ${DEFAULT_MODEL}), or the built-in
deterministic "hash:<dim>" encoder. Default max input length: ${DEFAULT_MAX_LEN} tokens.`;

function parseArgs(argv: string[]) {
  const opts: Record<string, string> = {};
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (!arg.startsWith('--')) {
      throw new UsageError(`unexpected argument: ${arg}`);
    }
    const key = arg.slice(2);
    if (!['input', 'output', 'model', 'max-len'].includes(key)) {
      throw new UsageError(`unknown flag: ${arg}`);
    }
    const value = argv[++i];
    if (value === undefined) {
      throw new UsageError(`flag ${arg} needs a value`);
    }
    opts[key] = value;
  }
  if (!opts.input || !opts.output) {
    throw new UsageError('--input and --output are required');
  }
  return opts;
}

class UsageError extends Error {}

async function main() {
  try {
    const opts = parseArgs(process.argv.slice(2));
    const maxLen = opts['max-len'] === undefined ? DEFAULT_MAX_LEN : Number(opts['max-len']);
    const manifest = await exportEmbeddings(
      opts.input, opts.model ?? DEFAULT_MODEL, opts.output, maxLen);
    console.log(`wrote ${manifest.n}x${manifest.d} embeddings to ${manifest.output_path} ` +
      `(model ${manifest.model})`);
  } catch (err) {
    if (err instanceof UsageError) {
      console.error(`error: ${err.message}\n\n${USAGE}`);
      process.exit(2);
    }
    console.error(`error: ${(err as Error).message}`);
    process.exit(1);
  }
}

main();
