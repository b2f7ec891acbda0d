import { InputError } from './errors.js';

export interface TextRow {
  id: number;
  text: string;
}

/**
 * Parse textualize output: one "<id>\t<text>" line per sample, LF endings.
 * Rows are returned ordered by id; ids must form exactly 0..n-1 with no
 * gaps or duplicates.
 */
export function parseTextFile(content: string): TextRow[] {
  const rows: TextRow[] = [];
  const lines = content.split('\n');
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i] ?? '';
    if (line === '') continue; // trailing newline or blank line
    const tab = line.indexOf('\t');
    if (tab < 0) {
      throw new InputError(`line ${i + 1}: missing tab separator`);
    }
    const idRaw = line.slice(0, tab);
    const id = Number(idRaw);
    if (!Number.isInteger(id) || id < 0 || idRaw.trim() === '') {
      throw new InputError(`line ${i + 1}: bad sample id ${JSON.stringify(idRaw)}`);
    }
    rows.push({ id, text: line.slice(tab + 1) });
  }
  rows.sort((a, b) => a.id - b.id);
  for (let k = 0; k < rows.length; k++) {
    const id = rows[k]!.id;
    if (id !== k) {
      const kind = k > 0 && rows[k - 1]!.id === id ? 'duplicate' : 'gap at';
      throw new InputError(`sample ids must be 0..${rows.length - 1}: ${kind} id ${id}`);
    }
  }
  return rows;
}
