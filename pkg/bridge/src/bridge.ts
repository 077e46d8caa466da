/**
 * Request handling: assemble the model input, run generation, and decode
 * the generated tokens into canonical output text. The bridge never
 * post-processes semantics; undecodable generations become protocol
 * errors so evaluation stays attributable to the model.
 */

import type { Generator } from './generator.js';
import type { OracleRequest, OracleResponse } from './protocol.js';
import { MalformedOutput, countTokens, parseOutput, truncateToTokens } from './streams.js';

export const OUTPUT_TOKEN_CAP = 512;

export interface BridgeConfig {
  model: string;
  maxOutputTokens: number;
  device: string;
  maxConcurrency: number;
  /** separator placed between reference blocks and before the query */
  referenceSeparator: string;
}

export function defaultConfig(): BridgeConfig {
  return {
    model: 'stub',
    maxOutputTokens: OUTPUT_TOKEN_CAP,
    device: 'cpu',
    maxConcurrency: 1,
    referenceSeparator: '\n\n',
  };
}

export function checkConfig(config: BridgeConfig): BridgeConfig {
  if (config.maxOutputTokens < 1 || config.maxOutputTokens > OUTPUT_TOKEN_CAP) {
    throw new Error(`maxOutputTokens must be within 1..${OUTPUT_TOKEN_CAP}`);
  }
  if (config.maxConcurrency < 1) {
    throw new Error('maxConcurrency must be at least 1');
  }
  return config;
}

export class Bridge {
  constructor(
    private readonly generator: Generator,
    private readonly config: BridgeConfig,
  ) {
    checkConfig(config);
  }

  buildModelInput(request: OracleRequest): string {
    const sep = this.config.referenceSeparator;
    const parts = [...request.references, request.query];
    return parts.join(sep);
  }

  async handle(request: OracleRequest): Promise<OracleResponse> {
    try {
      const generated = await this.generator.generate(
        this.buildModelInput(request),
        this.config.maxOutputTokens,
      );
      const output = truncateToTokens(generated, this.config.maxOutputTokens);
      parseOutput(output, request.region.n + 1, request.statuses, request.region.a);
      return { id: request.id, output };
    } catch (err) {
      if (err instanceof MalformedOutput) {
        return { id: request.id, error: `undecodable generation: ${err.message}` };
      }
      const message = err instanceof Error ? err.message : String(err);
      return { id: request.id, error: message };
    }
  }
}
