import { readFile } from 'node:fs/promises';

export interface CorpusDoc {
  id: number;
  text: string;
}

// Reads either the clustext JSONL corpus (header line then one document per
// line) or a plain text file with one document per line.
export async function readCorpus(path: string): Promise<CorpusDoc[]> {
  const raw = await readFile(path, 'utf-8');
  const lines = raw.split('\n').filter((l) => l.trim().length > 0);
  if (lines.length === 0) {
    return [];
  }
  let isJsonl = false;
  try {
    const head = JSON.parse(lines[0]);
    isJsonl = typeof head === 'object' && head !== null &&
      ('num_classes' in head || 'text' in head);
  } catch {
    isJsonl = false;
  }
  if (!isJsonl) {
    return lines.map((text, i) => ({ id: i, text }));
  }
  const docs: CorpusDoc[] = [];
  for (const line of lines) {
    const rec = JSON.parse(line);
    if (typeof rec.text === 'string') {
      docs.push({ id: typeof rec.id === 'number' ? rec.id : docs.length, text: rec.text });
    }
  }
  return docs;
}
