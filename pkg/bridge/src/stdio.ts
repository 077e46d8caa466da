/**
 * JSON-lines server over stdin/stdout. Responses are written in request
 * order even when generation overlaps, so clients that do not demux by
 * id still work.
 */

import { createInterface } from 'node:readline';
import type { Bridge } from './bridge.js';
import { PROTO, isRequest, type OracleResponse } from './protocol.js';

export async function serve(
  bridge: Bridge,
  maxConcurrency: number,
  input: NodeJS.ReadableStream = process.stdin,
  output: NodeJS.WritableStream = process.stdout,
): Promise<void> {
  output.write(JSON.stringify({ proto: PROTO, max_concurrency: maxConcurrency }) + '\n');

  let inFlight = 0;
  const waiters: Array<() => void> = [];
  const acquire = async () => {
    while (inFlight >= maxConcurrency) {
      await new Promise<void>((resolve) => waiters.push(resolve));
    }
    inFlight += 1;
  };
  const release = () => {
    inFlight -= 1;
    waiters.shift()?.();
  };

  // responses are chained so they flush in arrival order
  let tail: Promise<void> = Promise.resolve();
  const pending: Promise<void>[] = [];

  const rl = createInterface({ input });
  for await (const line of rl) {
    if (!line.trim()) continue;
    let response: Promise<OracleResponse>;
    try {
      const parsed = JSON.parse(line);
      if (!isRequest(parsed)) {
        response = Promise.resolve({ id: -1, error: 'malformed request object' });
      } else {
        await acquire();
        response = bridge.handle(parsed).finally(release);
      }
    } catch {
      response = Promise.resolve({ id: -1, error: 'request line is not JSON' });
    }
    tail = tail
      .then(() => response)
      .then((resp) => {
        output.write(JSON.stringify(resp) + '\n');
      });
    pending.push(tail);
  }
  await Promise.all(pending);
}
