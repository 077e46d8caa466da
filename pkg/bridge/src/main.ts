#!/usr/bin/env node
/**
 * Entry point: load the configured generation backend and serve the
 * oracle protocol on stdio. A backend that fails to load aborts with a
 * fatal message before any handshake is emitted.
 */

import { Bridge, defaultConfig, checkConfig } from './bridge.js';
import { ModelLoadError, loadGenerator } from './generator.js';
import { serve } from './stdio.js';

function parseArgs(argv: string[]) {
  const config = defaultConfig();
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    const next = () => {
      i += 1;
      if (i >= argv.length) throw new Error(`missing value for ${arg}`);
      return argv[i];
    };
    switch (arg) {
      case '--model':
        config.model = next();
        break;
      case '--max-output-tokens':
        config.maxOutputTokens = Number(next());
        break;
      case '--device':
        config.device = next();
        break;
      case '--max-concurrency':
        config.maxConcurrency = Number(next());
        break;
      case '--separator':
        config.referenceSeparator = next();
        break;
      default:
        throw new Error(`unknown flag: ${arg}`);
    }
  }
  return checkConfig(config);
}

async function main(): Promise<number> {
  let config;
  try {
    config = parseArgs(process.argv.slice(2));
  } catch (err) {
    process.stderr.write(`usage error: ${(err as Error).message}\n`);
    return 1;
  }
  let generator;
  try {
    generator = loadGenerator(config.model, config.device);
  } catch (err) {
    if (err instanceof ModelLoadError) {
      process.stdout.write(JSON.stringify({ fatal: err.message }) + '\n');
      process.stderr.write(`fatal: ${err.message}\n`);
      return 2;
    }
    throw err;
  }
  await serve(new Bridge(generator, config), config.maxConcurrency);
  return 0;
}

main().then(
  (code) => process.exit(code),
  (err) => {
    process.stderr.write(`fatal: ${err}\n`);
    process.exit(2);
  },
);
