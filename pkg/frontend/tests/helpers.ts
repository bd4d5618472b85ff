/** Shared helpers: fixture loading and a scripted fetch stub. */

import { readFileSync } from 'node:fs';
import { resolve } from 'node:path';

import type { FetchLike } from '../src/api.js';

/** Parse a recorded API fixture from tests/fixtures. */
export function fixture<T>(name: string): T {
  const path = resolve(process.cwd(), 'tests', 'fixtures', name);
  return JSON.parse(readFileSync(path, 'utf-8')) as T;
}

export interface RecordedCall {
  url: string;
  method: string;
  body: unknown;
}

export interface ScriptedStep {
  body: unknown;
  status?: number;
}

export interface ScriptedFetch {
  fetch: FetchLike;
  calls: RecordedCall[];
}

/** A fetch that replays canned responses in order and records each call. */
export function scriptedFetch(steps: ScriptedStep[]): ScriptedFetch {
  const calls: RecordedCall[] = [];
  let cursor = 0;
  const impl: FetchLike = (url, init) => {
    if (cursor >= steps.length) {
      throw new Error(`unexpected fetch #${cursor + 1} to ${url}`);
    }
    const step = steps[cursor];
    cursor += 1;
    calls.push({
      url,
      method: init?.method ?? 'GET',
      body: typeof init?.body === 'string' ? JSON.parse(init.body) : null,
    });
    const response = new Response(JSON.stringify(step.body), {
      status: step.status ?? 200,
      headers: { 'content-type': 'application/json' },
    });
    return Promise.resolve(response);
  };
  return { fetch: impl, calls };
}
