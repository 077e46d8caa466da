/** Wire types for the coedit-oracle/1 line-delimited JSON protocol. */

export const PROTO = 'coedit-oracle/1';

export interface Handshake {
  proto: typeof PROTO;
  max_concurrency: number;
}

export interface OracleRequest {
  id: number;
  query: string;
  references: string[];
  region: { a: number; n: number };
  statuses: string[]; // "empty" | "add" | "del", one per query row
}

export type OracleResponse =
  | { id: number; output: string }
  | { id: number; error: string };

export function isRequest(value: unknown): value is OracleRequest {
  if (typeof value !== 'object' || value === null) return false;
  const v = value as Record<string, unknown>;
  return (
    typeof v.id === 'number' &&
    typeof v.query === 'string' &&
    Array.isArray(v.references) &&
    v.references.every((r) => typeof r === 'string') &&
    typeof v.region === 'object' &&
    v.region !== null &&
    typeof (v.region as Record<string, unknown>).a === 'number' &&
    typeof (v.region as Record<string, unknown>).n === 'number' &&
    Array.isArray(v.statuses) &&
    v.statuses.every((s) => typeof s === 'string')
  );
}
