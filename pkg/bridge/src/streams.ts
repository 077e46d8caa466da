/**
 * Canonical output-stream handling: token counting, grammar validation,
 * and row-boundary truncation.
 *
 * An output stream is rows joined by "\n"; a row is either a placeholder
 * row `<k>` (optionally `<k> <del>` or `<k> <add> text`), an insertion
 * row `<add> text`, or a bare `<del>` row. Placeholders must increase.
 * Text whose first word looks like a marker is escaped with "<esc> ".
 */

const WORD = /[A-Za-z_]\w*|\d+|[^\sA-Za-z_0-9]|\s+/g;
const SPECIAL = /<(?:add|del|esc|\d+)>/g;
const PLACEHOLDER = /^<(\d+)>$/;

export function countTokens(text: string): number {
  let count = 0;
  for (const row of text.split('\n')) {
    count += 1; // row separator
    let pos = 0;
    SPECIAL.lastIndex = 0;
    let m: RegExpExecArray | null;
    while ((m = SPECIAL.exec(row)) !== null) {
      count += countPlain(row.slice(pos, m.index)) + 1;
      pos = m.index + m[0].length;
    }
    count += countPlain(row.slice(pos));
  }
  return count;
}

function countPlain(text: string): number {
  const matches = text.match(WORD);
  return matches ? matches.length : 0;
}

export interface OutputGroup {
  placeholder: number;
  insertions: string[];
  del: boolean;
}

export class MalformedOutput extends Error {}

function takeToken(row: string, token: string): [boolean, string] {
  if (row === token) return [true, ''];
  if (row.startsWith(token + ' ')) return [true, row.slice(token.length + 1)];
  return [false, row];
}

function stripEscape(rest: string): string {
  return rest.startsWith('<esc> ') ? rest.slice(6) : rest;
}

/** Parse (leniently) and validate an output stream against the request. */
export function parseOutput(
  text: string,
  placeholderCount: number,
  statuses: string[],
  regionStart: number,
): OutputGroup[] {
  const groups: OutputGroup[] = [];
  let current: OutputGroup | null = null;
  for (const raw of text === '' ? [] : text.split('\n')) {
    if (raw === '') continue;
    let rest = raw;
    const head = rest.split(' ', 1)[0];
    const placeholder = PLACEHOLDER.exec(head);
    if (placeholder !== null) {
      const k = Number(placeholder[1]);
      if (current !== null && k <= current.placeholder) {
        throw new MalformedOutput(`placeholder <${k}> out of order`);
      }
      if (k < 1 || k > placeholderCount) {
        throw new MalformedOutput(`placeholder <${k}> outside 1..${placeholderCount}`);
      }
      current = { placeholder: k, insertions: [], del: false };
      groups.push(current);
      rest = rest.length > head.length ? rest.slice(head.length + 1) : '';
      if (rest === '') continue;
    } else if (current === null) {
      throw new MalformedOutput(`row before any placeholder: ${JSON.stringify(raw)}`);
    }
    const [isAdd, afterAdd] = takeToken(rest, '<add>');
    if (isAdd) {
      current!.insertions.push(stripEscape(afterAdd));
      continue;
    }
    const [isDel, afterDel] = takeToken(rest, '<del>');
    if (isDel && afterDel === '') {
      if (current!.del) {
        throw new MalformedOutput(`duplicate <del> for placeholder <${current!.placeholder}>`);
      }
      current!.del = true;
      continue;
    }
    throw new MalformedOutput(`stray tokens in output row: ${JSON.stringify(raw)}`);
  }
  for (const group of groups) {
    const line = regionStart + group.placeholder - 2; // 0-based row index
    if (group.del && statuses[line] === 'add') {
      throw new MalformedOutput(
        `placeholder <${group.placeholder}> deletes a freshly added line`,
      );
    }
  }
  return groups;
}

/** Keep whole leading rows while the stream fits in maxTokens. */
export function truncateToTokens(text: string, maxTokens: number): string {
  if (countTokens(text) <= maxTokens) return text;
  const rows = text.split('\n');
  const kept: string[] = [];
  let total = 0;
  for (const row of rows) {
    const cost = countTokens(row);
    if (total + cost > maxTokens) break;
    kept.push(row);
    total += cost;
  }
  return kept.join('\n');
}
