/**
 * Generation backends. The bridge only needs `generate`: raw model text
 * in, raw token text out. Real neural backends implement this interface;
 * the stub produces deterministic pseudo-generations (including garbage
 * and oversized ones) so the protocol paths can be exercised without
 * model weights.
 */

import { readFileSync, existsSync } from 'node:fs';
import { createHash } from 'node:crypto';

export interface Generator {
  generate(input: string, maxOutputTokens: number): Promise<string>;
}

export class ModelLoadError extends Error {}

function hashOf(text: string): number {
  const digest = createHash('sha256').update(text).digest();
  return digest.readUInt32BE(0);
}

export class StubGenerator implements Generator {
  async generate(input: string, _maxOutputTokens: number): Promise<string> {
    const seed = hashOf(input);
    const placeholders = collectPlaceholders(input);
    const variant = seed % 5;
    if (variant === 0 || placeholders.length === 0) {
      return '';
    }
    const k = placeholders[seed % placeholders.length];
    if (variant === 1) {
      return `<${k}> <add> generated_${seed % 1000} = ${seed % 97}`;
    }
    if (variant === 2) {
      return `<${k}> <del>`;
    }
    if (variant === 3) {
      // deliberately undecodable, the bridge must answer with an error
      return `>>> raw logits ${seed} <<<`;
    }
    // oversized but well-formed generation: the bridge truncates it
    const rows = [`<${k}> <add> chunk_0`];
    for (let i = 1; i < 300; i++) {
      rows.push(`<add> chunk_${i} (${seed % 31})`);
    }
    return rows.join('\n');
  }
}

function collectPlaceholders(input: string): number[] {
  const out: number[] = [];
  for (const row of input.split('\n')) {
    const m = /^<(\d+)>(?: |$)/.exec(row);
    if (m !== null) out.push(Number(m[1]));
  }
  return out;
}

/** Replay canned outputs from a JSON file: {"default": "...", "byQuery": {...}}. */
export class ReplayGenerator implements Generator {
  private readonly byQuery: Record<string, string>;
  private readonly fallback: string;

  constructor(path: string) {
    const raw = JSON.parse(readFileSync(path, 'utf-8'));
    this.byQuery = raw.byQuery ?? {};
    this.fallback = raw.default ?? '';
  }

  async generate(input: string, _maxOutputTokens: number): Promise<string> {
    return this.byQuery[input] ?? this.fallback;
  }
}

export function loadGenerator(model: string, _device: string): Generator {
  if (model === 'stub') {
    return new StubGenerator();
  }
  if (model.startsWith('replay:')) {
    const path = model.slice('replay:'.length);
    if (!existsSync(path)) {
      throw new ModelLoadError(`replay file not found: ${path}`);
    }
    return new ReplayGenerator(path);
  }
  throw new ModelLoadError(
    `model weights not available locally: ${JSON.stringify(model)}`,
  );
}
